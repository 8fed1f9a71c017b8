//! Scenario schema. A scenario is a single JSON document: one geometry, one
//! task, an optional output directory. Unknown keys anywhere are hard errors
//! so that typos cannot silently change a run, and per-task completeness is
//! checked before anything expensive is built.

use serde::Deserialize;

use latticewave_core::analysis::{ConvergenceGeometry, Reference};
use latticewave_core::graph::build::{
    attach_lead, build_chain, build_sinai_graph, build_square_lattice, build_triangular_lattice,
};
use latticewave_core::{LeadDirection, MetricGraph};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub geometry: Geometry,
    pub task: Task,
    /// Output directory; the `--out` flag overrides it.
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub kind: Kind,
    /// Vertices per side (square, sinai) or along the chain.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub spacing: Option<f64>,
    /// Uniform δ-coupling strength at interior vertices (default 0,
    /// Kirchhoff).
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Obstacle disc (required for `sinai`).
    #[serde(default)]
    pub disc: Option<Disc>,
    /// Bounding box: the triangular fill extent, or the rectangle of a
    /// convergence ladder.
    #[serde(default)]
    pub extent: Option<[f64; 2]>,
    /// Leads in attachment order, at lattice coordinates.
    #[serde(default)]
    pub leads: Vec<LeadSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Square,
    Sinai,
    Triangular,
    Chain,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Square => "square",
            Kind::Sinai => "sinai",
            Kind::Triangular => "triangular",
            Kind::Chain => "chain",
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disc {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadSpec {
    pub at: Vec<i64>,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Incoming,
    Outgoing,
}

impl From<Direction> for LeadDirection {
    fn from(d: Direction) -> LeadDirection {
        match d {
            Direction::Incoming => LeadDirection::Incoming,
            Direction::Outgoing => LeadDirection::Outgoing,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    /// Lowest `count` eigenmode clusters → eigen.json + mode_NNN.csv.
    Eigen { count: usize },
    /// One scattering solve → scatter.json + field.csv.
    Scatter { k: f64 },
    /// Transmission over a momentum ladder → sweep.csv.
    Sweep { k_min: f64, k_max: f64, samples: usize },
    /// Graph scattering vs the billiard reference at `energy_factor·k²`
    /// → comparison.json (+ control artifacts when `control_factor` is set).
    Compare {
        k: f64,
        #[serde(default = "default_nodes")]
        nodes: usize,
        #[serde(default = "default_port_radius")]
        port_radius: f64,
        #[serde(default = "default_energy_factor")]
        energy_factor: f64,
        #[serde(default)]
        control_factor: Option<f64>,
    },
    /// Nodal partitions of the lowest `count` modes → nodal_NNN.csv.
    Nodal { count: usize },
    /// Lowest-mode convergence ladder → convergence.json.
    Converge {
        spacings: Vec<f64>,
        #[serde(default)]
        reference: ReferenceSpec,
    },
    /// Random-quasimomentum dispersion defects over a spacing ladder
    /// → dispersion.csv + dispersion.json.
    Dispersion {
        spacings: Vec<f64>,
        samples: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
}

fn default_nodes() -> usize {
    201
}

fn default_port_radius() -> f64 {
    0.01
}

fn default_energy_factor() -> f64 {
    2.0
}

fn default_seed() -> u64 {
    0xd15b
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSpec {
    #[default]
    Analytic,
    Extrapolated,
}

impl From<ReferenceSpec> for Reference {
    fn from(r: ReferenceSpec) -> Reference {
        match r {
            ReferenceSpec::Analytic => Reference::Analytic,
            ReferenceSpec::Extrapolated => Reference::Extrapolated,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl Geometry {
    fn n(&self) -> Result<usize, CliError> {
        self.n
            .ok_or_else(|| config_err(format!("geometry: {} requires \"n\"", self.kind.name())))
    }

    fn spacing(&self) -> Result<f64, CliError> {
        self.spacing.ok_or_else(|| {
            config_err(format!("geometry: {} requires \"spacing\"", self.kind.name()))
        })
    }

    /// Builds the configured metric graph with its leads attached. All
    /// failures here are config errors: the geometry block did not describe
    /// a valid graph.
    pub fn build(&self) -> Result<MetricGraph, CliError> {
        let alpha = self.alpha.unwrap_or(0.0);
        let graph = match self.kind {
            Kind::Square => {
                let n = self.n()?;
                build_square_lattice(n, n, self.spacing()?, |_| alpha)
            }
            Kind::Sinai => {
                if alpha != 0.0 {
                    return Err(config_err(
                        "geometry: the sinai graph carries Kirchhoff couplings only",
                    ));
                }
                let disc = self
                    .disc
                    .ok_or_else(|| config_err("geometry: sinai requires \"disc\""))?;
                build_sinai_graph(self.n()?, self.spacing()?, disc.center, disc.radius)
            }
            Kind::Triangular => {
                let extent = self
                    .extent
                    .ok_or_else(|| config_err("geometry: triangular requires \"extent\""))?;
                build_triangular_lattice((extent[0], extent[1]), self.spacing()?, |_| alpha)
            }
            Kind::Chain => build_chain(self.n()?, self.spacing()?, |_| alpha),
        }
        .map_err(config_err)?;

        let mut graph = graph;
        for lead in &self.leads {
            graph = attach_lead(&graph, &lead.at, lead.direction.into()).map_err(config_err)?;
        }
        Ok(graph)
    }

    /// Side length of the matching billiard square.
    pub fn billiard_side(&self) -> Result<f64, CliError> {
        Ok((self.n()? - 1) as f64 * self.spacing()?)
    }

    /// Family of the convergence ladder this geometry describes; the ladder
    /// sweeps its own spacings, so `n`/`spacing` are not consulted.
    pub fn convergence_family(&self) -> Result<ConvergenceGeometry, CliError> {
        match self.kind {
            Kind::Chain => Ok(ConvergenceGeometry::Chain),
            Kind::Triangular => Ok(ConvergenceGeometry::Triangular),
            Kind::Square => Ok(match self.extent {
                None => ConvergenceGeometry::UnitSquare,
                Some([w, h]) => ConvergenceGeometry::Rectangle {
                    width: w,
                    height: h,
                },
            }),
            Kind::Sinai => Err(config_err(
                "geometry: convergence ladders need an analytic reference; sinai has none",
            )),
        }
    }
}
