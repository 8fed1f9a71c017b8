//! Task execution: builds the configured objects, runs the requested solve,
//! and writes the artifact set with fixed names and fixed ordering.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use latticewave_core::analysis::{
    compare_fields, convergence_study, nodal_domains, GraphField,
};
use latticewave_core::billiard::{
    build_billiard_grid, solve_open_field, BilliardGeometry, Disc, RadiationPort,
};
use latticewave_core::export::{
    fmt_f64, write_billiard_csv, write_comparison_json, write_convergence_json, write_eigen_json,
    write_eigenvector_csv, write_graph_json, write_nodal_csv, write_scatter_json, write_sweep_csv,
    write_vertex_field_csv,
};
use latticewave_core::dual::expand_interior;
use latticewave_core::linalg::loglog_slope;
use latticewave_core::scattering::{solve_scattering, transmission_sweep};
use latticewave_core::spectral::{adjacency_eigen_path, bloch_dispersion};
use latticewave_core::Error;

use crate::config::{Scenario, Task};
use crate::CliError;

/// Core errors raised while running a task: bad parameters are config
/// errors, everything else is a numeric/runtime failure.
fn run_err(e: Error) -> CliError {
    match e {
        Error::InvalidInput(_) | Error::InvalidGraph(_) => CliError::Config(e.to_string()),
        other => CliError::Numeric(other.to_string()),
    }
}

struct Artifacts {
    dir: PathBuf,
    verbose: bool,
}

impl Artifacts {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn note(&self, name: &str) {
        if self.verbose {
            eprintln!("wrote {}", self.path(name).display());
        }
    }

    fn write<F>(&self, name: &str, writer: F) -> Result<(), CliError>
    where
        F: FnOnce(&Path) -> latticewave_core::Result<()>,
    {
        writer(&self.path(name)).map_err(run_err)?;
        self.note(name);
        Ok(())
    }
}

pub fn run(config_path: &Path, out_flag: Option<&Path>, verbose: bool) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;

    let dir = match out_flag {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(scenario.output.as_deref().unwrap_or("out")),
    };
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Numeric(format!("cannot create {}: {e}", dir.display())))?;
    let out = Artifacts { dir, verbose };

    match &scenario.task {
        Task::Eigen { count } => eigen(&scenario, &out, *count),
        Task::Scatter { k } => scatter(&scenario, &out, *k),
        Task::Sweep {
            k_min,
            k_max,
            samples,
        } => sweep(&scenario, &out, *k_min, *k_max, *samples),
        Task::Compare {
            k,
            nodes,
            port_radius,
            energy_factor,
            control_factor,
        } => compare(
            &scenario,
            &out,
            *k,
            *nodes,
            *port_radius,
            *energy_factor,
            *control_factor,
        ),
        Task::Nodal { count } => nodal(&scenario, &out, *count),
        Task::Converge {
            spacings,
            reference,
        } => converge(&scenario, &out, spacings, *reference),
        Task::Dispersion {
            spacings,
            samples,
            seed,
        } => dispersion(&out, spacings, *samples, *seed),
    }
}

fn eigen(scenario: &Scenario, out: &Artifacts, count: usize) -> Result<(), CliError> {
    let graph = scenario.geometry.build()?;
    out.write("graph.json", |p| write_graph_json(p, &graph))?;
    let modes = adjacency_eigen_path(&graph, count).map_err(run_err)?;
    out.write("eigen.json", |p| write_eigen_json(p, &modes))?;
    for (i, mode) in modes.iter().enumerate() {
        out.write(&format!("mode_{i:03}.csv"), |p| {
            write_eigenvector_csv(p, &graph, mode)
        })?;
    }
    Ok(())
}

fn scatter(scenario: &Scenario, out: &Artifacts, k: f64) -> Result<(), CliError> {
    let graph = scenario.geometry.build()?;
    if graph.leads.is_empty() {
        return Err(CliError::Config(
            "task scatter requires leads in the geometry".into(),
        ));
    }
    out.write("graph.json", |p| write_graph_json(p, &graph))?;
    let sol = solve_scattering(&graph, k).map_err(run_err)?;
    out.write("scatter.json", |p| write_scatter_json(p, &sol))?;
    out.write("field.csv", |p| write_vertex_field_csv(p, &graph, &sol))
}

fn sweep(
    scenario: &Scenario,
    out: &Artifacts,
    k_min: f64,
    k_max: f64,
    samples: usize,
) -> Result<(), CliError> {
    if samples < 2 || !(k_min.is_finite() && k_max.is_finite() && 0.0 < k_min && k_min < k_max) {
        return Err(CliError::Config(format!(
            "task sweep needs 0 < k_min < k_max and at least 2 samples, \
             got [{k_min}, {k_max}] × {samples}"
        )));
    }
    let graph = scenario.geometry.build()?;
    if graph.leads.is_empty() {
        return Err(CliError::Config(
            "task sweep requires leads in the geometry".into(),
        ));
    }
    out.write("graph.json", |p| write_graph_json(p, &graph))?;
    let step = (k_max - k_min) / (samples - 1) as f64;
    let ks: Vec<f64> = (0..samples).map(|i| k_min + step * i as f64).collect();
    let points = transmission_sweep(&graph, &ks).map_err(run_err)?;
    out.write("sweep.csv", |p| write_sweep_csv(p, &points))
}

#[allow(clippy::too_many_arguments)]
fn compare(
    scenario: &Scenario,
    out: &Artifacts,
    k: f64,
    nodes: usize,
    port_radius: f64,
    energy_factor: f64,
    control_factor: Option<f64>,
) -> Result<(), CliError> {
    let geo = &scenario.geometry;
    let graph = geo.build()?;
    if graph.leads.is_empty() {
        return Err(CliError::Config(
            "task compare requires leads in the geometry".into(),
        ));
    }
    out.write("graph.json", |p| write_graph_json(p, &graph))?;

    let sol = solve_scattering(&graph, k).map_err(run_err)?;
    out.write("scatter.json", |p| write_scatter_json(p, &sol))?;
    out.write("field.csv", |p| write_vertex_field_csv(p, &graph, &sol))?;

    // billiard twin: same square, same obstacle, radiation circles at the
    // lead positions
    let spacing = geo.spacing.expect("build() checked the spacing");
    let ports = geo
        .leads
        .iter()
        .map(|lead| {
            if lead.at.len() != 2 {
                return Err(CliError::Config(format!(
                    "lead coordinates {:?} are not planar",
                    lead.at
                )));
            }
            Ok(RadiationPort {
                center: [lead.at[0] as f64 * spacing, lead.at[1] as f64 * spacing],
                radius: port_radius,
                direction: lead.direction.into(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let billiard = BilliardGeometry {
        side: geo.billiard_side()?,
        disc: geo.disc.map(|d| Disc {
            center: d.center,
            radius: d.radius,
        }),
        ports,
    };
    let grid = build_billiard_grid(&billiard, nodes).map_err(run_err)?;

    let energy = energy_factor * k * k;
    let field = solve_open_field(&grid, energy).map_err(run_err)?;
    out.write("billiard.csv", |p| write_billiard_csv(p, &field))?;

    let graph_field = GraphField::from_scattering(&graph, &sol);
    let report = compare_fields(&graph_field, &field).map_err(run_err)?;
    out.write("comparison.json", |p| write_comparison_json(p, &report))?;

    if let Some(factor) = control_factor {
        let control = solve_open_field(&grid, factor * k * k).map_err(run_err)?;
        out.write("control_billiard.csv", |p| write_billiard_csv(p, &control))?;
        let control_report = compare_fields(&graph_field, &control).map_err(run_err)?;
        out.write("control_comparison.json", |p| {
            write_comparison_json(p, &control_report)
        })?;
    }
    Ok(())
}

fn nodal(scenario: &Scenario, out: &Artifacts, count: usize) -> Result<(), CliError> {
    let graph = scenario.geometry.build()?;
    out.write("graph.json", |p| write_graph_json(p, &graph))?;
    let modes = adjacency_eigen_path(&graph, count).map_err(run_err)?;
    out.write("eigen.json", |p| write_eigen_json(p, &modes))?;
    for (i, mode) in modes.iter().enumerate() {
        let full = expand_interior(&graph, &mode.vertex_vector);
        let values: Vec<f64> = full.iter().map(|z| z.re).collect();
        let partition = nodal_domains(&graph, &values, 0.0);
        out.write(&format!("nodal_{i:03}.csv"), |p| {
            write_nodal_csv(p, &graph, &partition)
        })?;
    }
    Ok(())
}

fn converge(
    scenario: &Scenario,
    out: &Artifacts,
    spacings: &[f64],
    reference: crate::config::ReferenceSpec,
) -> Result<(), CliError> {
    let family = scenario.geometry.convergence_family()?;
    let report = convergence_study(family, spacings, reference.into()).map_err(run_err)?;
    out.write("convergence.json", |p| write_convergence_json(p, &report))
}

/// θ components are drawn once from a fixed window and reused across the
/// whole spacing ladder, so the energy defect of each draw is a clean
/// function of ℓ.
const THETA_RANGE: (f64, f64) = (0.1, 3.0);

fn dispersion(
    out: &Artifacts,
    spacings: &[f64],
    samples: usize,
    seed: u64,
) -> Result<(), CliError> {
    if samples == 0 || spacings.len() < 2 {
        return Err(CliError::Config(
            "task dispersion needs at least 1 sample and 2 spacings".into(),
        ));
    }
    for pair in spacings.windows(2) {
        if !(pair[1] < pair[0] && pair[1] > 0.0) {
            return Err(CliError::Config(
                "task dispersion needs strictly decreasing positive spacings".into(),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = THETA_RANGE;
    let thetas: Vec<[f64; 2]> = (0..samples)
        .map(|_| {
            let a = lo + rng.random::<f64>() * (hi - lo);
            let b = lo + rng.random::<f64>() * (hi - lo);
            [a, b]
        })
        .collect();

    let mut rows = Vec::with_capacity(spacings.len() * samples);
    let mut max_defects = Vec::with_capacity(spacings.len());
    let mut max_relation = 0.0f64;
    for &ell in spacings {
        let mut worst = 0.0f64;
        for theta in &thetas {
            let k = bloch_dispersion(theta, ell).map_err(run_err)?;
            let relation = ((theta[0] * ell).cos() + (theta[1] * ell).cos()
                - 2.0 * (k * ell).cos())
            .abs();
            let defect =
                (2.0 * k * k - theta[0] * theta[0] - theta[1] * theta[1]).abs();
            max_relation = max_relation.max(relation);
            worst = worst.max(defect);
            rows.push((ell, theta[0], theta[1], k, relation, defect));
        }
        max_defects.push(worst);
    }

    out.write("dispersion.csv", |p| {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(fs::File::create(p)?);
        writeln!(w, "spacing,theta1,theta2,k,relation_residual,energy_defect")?;
        for (ell, t1, t2, k, relation, defect) in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(*ell),
                fmt_f64(*t1),
                fmt_f64(*t2),
                fmt_f64(*k),
                fmt_f64(*relation),
                fmt_f64(*defect)
            )?;
        }
        Ok(())
    })?;

    let summary = json!({
        "samples": samples,
        "seed": seed,
        "theta_range": [THETA_RANGE.0, THETA_RANGE.1],
        "max_relation_residual": max_relation,
        "spacings": spacings,
        "max_energy_defects": max_defects,
        "fitted_order": loglog_slope(spacings, &max_defects),
    });
    out.write("dispersion.json", |p| {
        let mut w = std::io::BufWriter::new(fs::File::create(p)?);
        serde_json::to_writer_pretty(&mut w, &summary)?;
        use std::io::Write;
        writeln!(w)?;
        Ok(())
    })
}
