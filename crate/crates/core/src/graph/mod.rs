//! Metric-graph core: vertices carrying δ couplings, edges carrying lengths
//! and optional one-dimensional potentials, admissibility checks, and a JSON
//! wire format.
//!
//! Conventions used throughout the crate:
//!
//! * An edge records its endpoints as `(j, n)`. The arc-length coordinate
//!   runs from `x = 0` at the `n` end to `x = length` at the `j` end.
//! * `Boundary` vertices are Dirichlet: the wavefunction vanishes there and
//!   they contribute no unknown to reduced vertex systems.
//! * A `LeadPort` vertex behaves like an interior vertex that additionally
//!   carries one semi-infinite lead.

pub mod build;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;

/// Role of a vertex in the boundary-value problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    /// δ coupling of strength `alpha`; `alpha == 0` is the Kirchhoff case.
    Interior,
    /// Dirichlet vertex: ψ = 0.
    Boundary,
    /// Interior-type vertex with an attached semi-infinite lead.
    LeadPort,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    /// Embedding position; length equals the graph `dimension`.
    pub pos: Vec<f64>,
    pub kind: VertexKind,
    /// δ coupling strength. Ignored for `Boundary` vertices.
    pub alpha: f64,
}

/// Potential profile along an edge, parametrized by arc length in
/// `[0, length]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Potential {
    Zero,
    Const {
        value: f64,
    },
    /// Uniformly spaced samples over `[0, length]` (at least two),
    /// interpolated linearly.
    Samples {
        values: Vec<f64>,
    },
}

impl Potential {
    /// Evaluates the potential at arc-length coordinate `x ∈ [0, length]`.
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Const { value } => *value,
            Potential::Samples { values } => {
                let m = values.len();
                debug_assert!(m >= 2);
                let t = (x / length).clamp(0.0, 1.0) * (m - 1) as f64;
                let i = (t.floor() as usize).min(m - 2);
                let f = t - i as f64;
                values[i] * (1.0 - f) + values[i + 1] * f
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Endpoint at `x = length`.
    pub j: VertexId,
    /// Endpoint at `x = 0`.
    pub n: VertexId,
    pub length: f64,
    pub potential: Potential,
}

impl Edge {
    /// The endpoint opposite to `v`, or `None` if `v` is not an endpoint.
    pub fn other(&self, v: VertexId) -> Option<VertexId> {
        if v == self.j {
            Some(self.n)
        } else if v == self.n {
            Some(self.j)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeadDirection {
    /// Carries the incident wave `e^{-ikx} + r e^{ikx}` (x measured outward).
    Incoming,
    /// Carries only the outgoing wave `t e^{ikx}`.
    Outgoing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lead {
    pub vertex: VertexId,
    pub direction: LeadDirection,
}

/// A finite metric graph, optionally embedded in one or two dimensions,
/// with Dirichlet boundary vertices and optional semi-infinite leads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricGraph {
    /// Embedding dimension ν (1 or 2 in practice).
    pub dimension: usize,
    /// Common edge length for equilateral lattice builds, if any.
    pub spacing: Option<f64>,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub leads: Vec<Lead>,
}

/// Per-vertex incidence lists, built once and shared by the solvers.
pub struct Incidence {
    /// `by_vertex[v]` lists `(edge_index, other_endpoint)` pairs.
    pub by_vertex: Vec<Vec<(usize, VertexId)>>,
}

impl Incidence {
    pub fn degree(&self, v: VertexId) -> usize {
        self.by_vertex[v].len()
    }
}

/// Summary produced by [`MetricGraph::validate`].
///
/// `min_edge_length`, `max_edge_length` and `max_degree` are the constants
/// ℓ₀, L₀ and N₀ of the admissibility conditions; a graph is admissible
/// exactly when `violations` is empty.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub min_edge_length: f64,
    pub max_edge_length: f64,
    pub max_degree: usize,
    pub connected: bool,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl MetricGraph {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// True for `Interior` and `LeadPort` vertices.
    pub fn is_interior(&self, v: VertexId) -> bool {
        self.vertices[v].kind != VertexKind::Boundary
    }

    /// Ids of non-Dirichlet vertices, in id order.
    pub fn interior_vertices(&self) -> Vec<VertexId> {
        self.vertices
            .iter()
            .filter(|v| v.kind != VertexKind::Boundary)
            .map(|v| v.id)
            .collect()
    }

    pub fn incidence(&self) -> Incidence {
        let mut by_vertex = vec![Vec::new(); self.vertices.len()];
        for (idx, e) in self.edges.iter().enumerate() {
            by_vertex[e.j].push((idx, e.n));
            by_vertex[e.n].push((idx, e.j));
        }
        Incidence { by_vertex }
    }

    /// Finds a vertex by position within tolerance `tol` (Euclidean).
    /// Interior vertices win ties so that split Dirichlet copies sharing a
    /// position do not shadow the vertex a caller usually wants.
    pub fn vertex_at(&self, pos: &[f64], tol: f64) -> Option<VertexId> {
        let mut best: Option<VertexId> = None;
        for v in &self.vertices {
            if v.pos.len() != pos.len() {
                continue;
            }
            let d2: f64 = v
                .pos
                .iter()
                .zip(pos)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2.sqrt() <= tol {
                match best {
                    Some(b) if self.is_interior(b) => {}
                    _ => best = Some(v.id),
                }
                if self.is_interior(v.id) {
                    best = Some(v.id);
                }
            }
        }
        best
    }

    /// Finds a vertex by integer lattice coordinates, i.e. at position
    /// `spacing * coords`. Requires `spacing` to be set.
    pub fn vertex_at_lattice(&self, coords: &[i64]) -> Option<VertexId> {
        let ell = self.spacing?;
        let pos: Vec<f64> = coords.iter().map(|&c| c as f64 * ell).collect();
        self.vertex_at(&pos, 1e-9 * ell.max(1.0))
    }

    /// Returns the common edge length if every edge has the same length
    /// (relative tolerance 1e-12) and the graph has at least one edge.
    pub fn equilateral_spacing(&self) -> Option<f64> {
        let first = self.edges.first()?.length;
        for e in &self.edges {
            if (e.length - first).abs() > 1e-12 * first.max(1.0) {
                return None;
            }
        }
        Some(first)
    }

    /// Checks the admissibility conditions: strictly positive finite edge
    /// lengths, bounded potentials and couplings, finite degrees, and
    /// connectivity. For lattice builds (`spacing` set) the embedding is also
    /// required to be consistent: each edge length must equal the Euclidean
    /// distance between its endpoints.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();

        for (i, v) in self.vertices.iter().enumerate() {
            if v.id != i {
                violations.push(format!("vertex slot {} holds id {}", i, v.id));
            }
            if v.pos.len() != self.dimension {
                violations.push(format!(
                    "vertex {} has a {}-dimensional position in a {}-dimensional graph",
                    v.id,
                    v.pos.len(),
                    self.dimension
                ));
            }
            if v.pos.iter().any(|x| !x.is_finite()) {
                violations.push(format!("vertex {} has a non-finite position", v.id));
            }
            if !v.alpha.is_finite() {
                violations.push(format!("vertex {} has non-finite alpha", v.id));
            }
        }

        let mut min_len = f64::INFINITY;
        let mut max_len: f64 = 0.0;
        for (idx, e) in self.edges.iter().enumerate() {
            if e.j >= self.vertices.len() || e.n >= self.vertices.len() {
                violations.push(format!("edge {} references a missing vertex", idx));
                continue;
            }
            if e.j == e.n {
                violations.push(format!("edge {} is a loop at vertex {}", idx, e.j));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                violations.push(format!("edge {} has non-positive length {}", idx, e.length));
            } else {
                min_len = min_len.min(e.length);
                max_len = max_len.max(e.length);
            }
            match &e.potential {
                Potential::Zero => {}
                Potential::Const { value } => {
                    if !value.is_finite() {
                        violations.push(format!("edge {} has a non-finite potential", idx));
                    }
                }
                Potential::Samples { values } => {
                    if values.len() < 2 {
                        violations.push(format!(
                            "edge {} has a sampled potential with fewer than two samples",
                            idx
                        ));
                    }
                    if values.iter().any(|v| !v.is_finite()) {
                        violations.push(format!("edge {} has a non-finite potential sample", idx));
                    }
                }
            }
            if self.spacing.is_some()
                && e.j < self.vertices.len()
                && e.n < self.vertices.len()
                && self.vertices[e.j].pos.len() == self.vertices[e.n].pos.len()
            {
                let dist: f64 = self.vertices[e.j]
                    .pos
                    .iter()
                    .zip(&self.vertices[e.n].pos)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if (dist - e.length).abs() > 1e-9 * e.length.max(1.0) {
                    violations.push(format!(
                        "edge {} has length {} but its endpoints are {} apart",
                        idx, e.length, dist
                    ));
                }
            }
        }

        let mut lead_counts = vec![0usize; self.vertices.len()];
        for (idx, lead) in self.leads.iter().enumerate() {
            if lead.vertex >= self.vertices.len() {
                violations.push(format!("lead {} references a missing vertex", idx));
                continue;
            }
            lead_counts[lead.vertex] += 1;
            if self.vertices[lead.vertex].kind != VertexKind::LeadPort {
                violations.push(format!(
                    "lead {} attaches to vertex {} which is not a lead port",
                    idx, lead.vertex
                ));
            }
        }
        for (v, &c) in lead_counts.iter().enumerate() {
            if c > 1 {
                violations.push(format!("vertex {} carries {} leads", v, c));
            }
            if c == 0 && self.vertices.get(v).map(|x| x.kind) == Some(VertexKind::LeadPort) {
                violations.push(format!("vertex {} is marked lead-port but has no lead", v));
            }
        }

        let inc = self.incidence();
        let max_degree = (0..self.vertices.len())
            .map(|v| inc.degree(v))
            .max()
            .unwrap_or(0);

        let connected = self.is_connected(&inc);
        if !connected {
            violations.push("graph is disconnected".to_string());
        }

        ValidationReport {
            min_edge_length: min_len,
            max_edge_length: max_len,
            max_degree,
            connected,
            violations,
        }
    }

    fn is_connected(&self, inc: &Incidence) -> bool {
        let n = self.vertices.len();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(_, w) in &inc.by_vertex[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Serializes to the stable JSON wire format.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses the JSON wire format and verifies structural integrity
    /// (contiguous vertex ids, edge and lead references in range).
    pub fn from_json(text: &str) -> Result<Self> {
        let graph: MetricGraph = serde_json::from_str(text)?;
        for (i, v) in graph.vertices.iter().enumerate() {
            if v.id != i {
                return Err(Error::InvalidGraph(format!(
                    "vertex ids must be contiguous from zero; slot {} holds id {}",
                    i, v.id
                )));
            }
        }
        for (idx, e) in graph.edges.iter().enumerate() {
            if e.j >= graph.vertices.len() || e.n >= graph.vertices.len() {
                return Err(Error::InvalidGraph(format!(
                    "edge {} references vertex {} outside 0..{}",
                    idx,
                    e.j.max(e.n),
                    graph.vertices.len()
                )));
            }
        }
        for (idx, lead) in graph.leads.iter().enumerate() {
            if lead.vertex >= graph.vertices.len() {
                return Err(Error::InvalidGraph(format!(
                    "lead {} references vertex {} outside 0..{}",
                    idx,
                    lead.vertex,
                    graph.vertices.len()
                )));
            }
        }
        Ok(graph)
    }
}
