//! Nodal partitions, graph-versus-billiard field comparison, and
//! convergence ladders over shrinking lattice spacing.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::billiard::{continuum_current, BilliardGrid};
use crate::dual::expand_interior;
use crate::error::{Error, Result};
use crate::graph::build::{build_chain, build_square_lattice, build_triangular_lattice};
use crate::graph::MetricGraph;
use crate::linalg::loglog_slope;
use crate::scattering::{vertex_current_field, ScatteringSolution};
use crate::spectral::{adjacency_eigen_path, EigenResult};

/// Sign-domain decomposition of a real vertex function: maximal connected
/// induced subgraphs of constant sign.
#[derive(Clone, Debug)]
pub struct NodalPartition {
    /// Domain id per vertex; `None` on (near-)zero vertices.
    pub labels: Vec<Option<usize>>,
    pub count: usize,
    /// −1, 0, +1 per vertex.
    pub sign_map: Vec<i8>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // deterministic: smaller root wins
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Partitions the vertices of `graph` by the sign of `values` (full
/// per-vertex vector). Vertices with `|value| ≤ zero_tol` get sign 0 and
/// belong to no domain; `zero_tol ≤ 0` selects the default
/// `1e-12·‖values‖∞`. Domain ids are assigned in ascending order of each
/// domain's smallest vertex id.
pub fn nodal_domains(graph: &MetricGraph, values: &[f64], zero_tol: f64) -> NodalPartition {
    assert_eq!(values.len(), graph.n_vertices());
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = if zero_tol > 0.0 { zero_tol } else { 1e-12 * max };
    let sign_map: Vec<i8> = values
        .iter()
        .map(|&v| {
            if v.abs() <= tol {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();

    let mut uf = UnionFind::new(graph.n_vertices());
    for e in &graph.edges {
        if sign_map[e.j] != 0 && sign_map[e.j] == sign_map[e.n] {
            uf.union(e.j, e.n);
        }
    }

    let mut labels = vec![None; graph.n_vertices()];
    let mut next = 0usize;
    let mut label_of_root = vec![usize::MAX; graph.n_vertices()];
    for v in 0..graph.n_vertices() {
        if sign_map[v] == 0 {
            continue;
        }
        let root = uf.find(v);
        if label_of_root[root] == usize::MAX {
            label_of_root[root] = next;
            next += 1;
        }
        labels[v] = Some(label_of_root[root]);
    }

    NodalPartition {
        labels,
        count: next,
        sign_map,
    }
}

/// A graph-side field prepared for comparison against a billiard grid.
pub struct GraphField<'a> {
    pub graph: &'a MetricGraph,
    /// Full per-vertex values (zeros at Dirichlet vertices).
    pub values: Vec<Complex64>,
    /// Per-vertex current vectors, when the field carries any.
    pub currents: Option<Vec<[f64; 2]>>,
}

impl<'a> GraphField<'a> {
    pub fn from_eigen(graph: &'a MetricGraph, mode: &EigenResult) -> GraphField<'a> {
        GraphField {
            graph,
            values: expand_interior(graph, &mode.vertex_vector),
            currents: None,
        }
    }

    pub fn from_scattering(graph: &'a MetricGraph, sol: &ScatteringSolution) -> GraphField<'a> {
        GraphField {
            graph,
            values: sol.vertex_values.clone(),
            currents: Some(vertex_current_field(graph, &sol.edge_currents)),
        }
    }
}

/// Similarity metrics between a graph field and a billiard field sharing
/// one geometry.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    /// Pearson correlation of the densities |ψ|² at vertices vs bilinear
    /// billiard samples, both normalized to unit maximum first.
    pub correlation: f64,
    /// Mean cosine similarity of nonzero current vectors, when both sides
    /// carry currents.
    pub current_alignment: Option<f64>,
    /// Root-mean-square difference of the unit-maximum densities.
    pub rms_residual: f64,
    pub graph_max: f64,
    pub billiard_max: f64,
    pub n_points: usize,
}

/// Pearson correlation coefficient; symmetric in its arguments.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Mean cosine similarity over pairs where both vectors exceed a relative
/// floor of `1e-12` of the larger side's maximum norm; `None` when no pair
/// qualifies.
pub fn mean_cosine(a: &[[f64; 2]], b: &[[f64; 2]]) -> Option<f64> {
    let norm = |v: &[f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let max_a = a.iter().map(norm).fold(0.0f64, f64::max);
    let max_b = b.iter().map(norm).fold(0.0f64, f64::max);
    let floor_a = 1e-12 * max_a;
    let floor_b = 1e-12 * max_b;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (va, vb) in a.iter().zip(b) {
        let (na, nb) = (norm(va), norm(vb));
        if na > floor_a && nb > floor_b && na > 0.0 && nb > 0.0 {
            sum += (va[0] * vb[0] + va[1] * vb[1]) / (na * nb);
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

fn sample_vector_field(grid: &BilliardGrid, field: &[[f64; 2]], x: f64, y: f64) -> [f64; 2] {
    let n = grid.n;
    let fx = (x / grid.h).clamp(0.0, (n - 1) as f64);
    let fy = (y / grid.h).clamp(0.0, (n - 1) as f64);
    let ix = (fx.floor() as usize).min(n - 2);
    let iy = (fy.floor() as usize).min(n - 2);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let mut out = [0.0f64; 2];
    for (c, o) in out.iter_mut().enumerate() {
        *o = field[iy * n + ix][c] * (1.0 - tx) * (1.0 - ty)
            + field[iy * n + ix + 1][c] * tx * (1.0 - ty)
            + field[(iy + 1) * n + ix][c] * (1.0 - tx) * ty
            + field[(iy + 1) * n + ix + 1][c] * tx * ty;
    }
    out
}

/// Pairs the graph density |ψ|² at each vertex with the bilinear billiard
/// sample at the same position. Exposed so the symmetry of the correlation
/// can be checked directly on the series.
pub fn paired_densities(field: &GraphField, grid: &BilliardGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    if field.graph.dimension != 2 {
        return Err(Error::InvalidInput(
            "geometry mismatch: comparison needs a graph embedded in the plane".into(),
        ));
    }
    let tol = 1e-9 * grid.side;
    let mut xs = Vec::with_capacity(field.graph.n_vertices());
    let mut ys = Vec::with_capacity(field.graph.n_vertices());
    for v in &field.graph.vertices {
        let (x, y) = (v.pos[0], v.pos[1]);
        if !(-tol..=grid.side + tol).contains(&x) || !(-tol..=grid.side + tol).contains(&y) {
            return Err(Error::InvalidInput(format!(
                "geometry mismatch: vertex {} at ({x}, {y}) lies outside the billiard",
                v.id
            )));
        }
        xs.push(field.values[v.id].norm_sqr());
        ys.push(grid.sample(x, y).norm_sqr());
    }
    Ok((xs, ys))
}

/// Compares a graph field with a billiard field over the same geometry:
/// density correlation at vertex positions plus current alignment when the
/// graph side carries currents.
pub fn compare_fields(field: &GraphField, grid: &BilliardGrid) -> Result<ComparisonReport> {
    let (mut xs, mut ys) = paired_densities(field, grid)?;
    let graph_max = xs.iter().fold(0.0f64, |m, v| m.max(*v));
    let billiard_max = ys.iter().fold(0.0f64, |m, v| m.max(*v));
    if graph_max == 0.0 || billiard_max == 0.0 {
        return Err(Error::InvalidInput(
            "cannot compare identically-zero fields".into(),
        ));
    }
    for x in xs.iter_mut() {
        *x /= graph_max;
    }
    for y in ys.iter_mut() {
        *y /= billiard_max;
    }
    let correlation = pearson(&xs, &ys);
    let rms_residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();

    let current_alignment = match &field.currents {
        Some(graph_currents) => {
            let node_currents = continuum_current(grid);
            let sampled: Vec<[f64; 2]> = field
                .graph
                .vertices
                .iter()
                .map(|v| sample_vector_field(grid, &node_currents, v.pos[0], v.pos[1]))
                .collect();
            mean_cosine(graph_currents, &sampled)
        }
        None => None,
    };

    Ok(ComparisonReport {
        correlation,
        current_alignment,
        rms_residual,
        graph_max,
        billiard_max,
        n_points: xs.len(),
    })
}

/// Geometry family for a convergence ladder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConvergenceGeometry {
    /// Unit interval, ν = 1.
    Chain,
    /// Unit square, ν = 2.
    UnitSquare,
    /// `[0, width] × [0, height]`, ν = 2.
    Rectangle { width: f64, height: f64 },
    /// Triangular lattice filling the unit square, ν = 2.
    Triangular,
}

/// Reference value the ladder's energies are compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    /// The analytic lowest Dirichlet eigenvalue of the continuum domain.
    Analytic,
    /// Richardson extrapolation (assuming second order) from the two finest
    /// spacings of the ladder itself.
    Extrapolated,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub spacings: Vec<f64>,
    /// Rescaled lowest eigenvalue ν k² per spacing.
    pub energies: Vec<f64>,
    pub reference: f64,
    /// |ν k²(ℓ) − reference| per spacing.
    pub errors: Vec<f64>,
    /// Log-log slope of errors against spacings; `None` when the errors are
    /// not strictly decreasing or sit at roundoff, where a fit would be
    /// meaningless.
    pub observed_order: Option<f64>,
    /// Max per-vertex deviation of the unit-maximum lattice ground state
    /// from the unit-maximum continuum ground state, per spacing.
    pub eps_residual: Vec<f64>,
    pub note: Option<String>,
}

fn cells_along(extent: f64, spacing: f64) -> Result<usize> {
    let cells = (extent / spacing).round();
    if cells < 2.0 || (cells * spacing - extent).abs() > 1e-9 * extent {
        return Err(Error::InvalidInput(format!(
            "spacing {spacing} does not tile an extent of {extent}"
        )));
    }
    Ok(cells as usize)
}

fn build_for(geometry: ConvergenceGeometry, spacing: f64) -> Result<MetricGraph> {
    match geometry {
        ConvergenceGeometry::Chain => {
            let cells = cells_along(1.0, spacing)?;
            build_chain(cells + 1, spacing, |_| 0.0)
        }
        ConvergenceGeometry::UnitSquare => {
            let cells = cells_along(1.0, spacing)?;
            build_square_lattice(cells + 1, cells + 1, spacing, |_| 0.0)
        }
        ConvergenceGeometry::Rectangle { width, height } => {
            let nx = cells_along(width, spacing)?;
            let ny = cells_along(height, spacing)?;
            build_square_lattice(ny + 1, nx + 1, spacing, |_| 0.0)
        }
        ConvergenceGeometry::Triangular => build_triangular_lattice((1.0, 1.0), spacing, |_| 0.0),
    }
}

fn analytic_reference(geometry: ConvergenceGeometry) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    match geometry {
        ConvergenceGeometry::Chain => pi2,
        ConvergenceGeometry::UnitSquare | ConvergenceGeometry::Triangular => 2.0 * pi2,
        ConvergenceGeometry::Rectangle { width, height } => {
            pi2 * (1.0 / (width * width) + 1.0 / (height * height))
        }
    }
}

fn ground_state(geometry: ConvergenceGeometry, pos: &[f64]) -> f64 {
    let pi = std::f64::consts::PI;
    match geometry {
        ConvergenceGeometry::Chain => (pi * pos[0]).sin(),
        ConvergenceGeometry::UnitSquare | ConvergenceGeometry::Triangular => {
            (pi * pos[0]).sin() * (pi * pos[1]).sin()
        }
        ConvergenceGeometry::Rectangle { width, height } => {
            (pi * pos[0] / width).sin() * (pi * pos[1] / height).sin()
        }
    }
}

/// Runs the lowest-mode ladder over strictly decreasing `spacings` and fits
/// the observed convergence order of `ν k² → λ_ref`. Errors that fail to
/// decrease monotonically (or vanish into roundoff, as on geometries where
/// the discrete and continuum values coincide) are reported without a fit.
pub fn convergence_study(
    geometry: ConvergenceGeometry,
    spacings: &[f64],
    reference: Reference,
) -> Result<ConvergenceReport> {
    if spacings.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 spacings".into()));
    }
    for pair in spacings.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::InvalidInput(
                "spacings must be strictly decreasing".into(),
            ));
        }
    }
    if let ConvergenceGeometry::Rectangle { width, height } = geometry {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bad rectangle extents {width} × {height}"
            )));
        }
    }

    let runs: Vec<(f64, f64)> = spacings
        .par_iter()
        .map(|&ell| {
            let graph = build_for(geometry, ell)?;
            let mode = adjacency_eigen_path(&graph, 1)?.remove(0);
            // ε_j: unit-max lattice ground state vs unit-max continuum shape
            let full = expand_interior(&graph, &mode.vertex_vector);
            let vmax = full.iter().map(|z| z.re.abs()).fold(0.0f64, f64::max);
            let smax = graph
                .vertices
                .iter()
                .map(|v| ground_state(geometry, &v.pos).abs())
                .fold(0.0f64, f64::max);
            let mut eps = 0.0f64;
            for v in &graph.vertices {
                let lattice = full[v.id].re / vmax;
                let continuum = ground_state(geometry, &v.pos) / smax;
                eps = eps.max((continuum - lattice).abs());
            }
            Ok((mode.energy_continuum, eps))
        })
        .collect::<Result<_>>()?;
    let energies: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let eps_residual: Vec<f64> = runs.iter().map(|r| r.1).collect();

    let reference_value = match reference {
        Reference::Analytic => analytic_reference(geometry),
        Reference::Extrapolated => {
            let m = energies.len();
            let r = spacings[m - 2] / spacings[m - 1];
            (r * r * energies[m - 1] - energies[m - 2]) / (r * r - 1.0)
        }
    };
    let errors: Vec<f64> = energies
        .iter()
        .map(|e| (e - reference_value).abs())
        .collect();

    let roundoff = 1e-12 * reference_value.abs().max(1.0);
    let above_roundoff = errors.iter().all(|&e| e > roundoff);
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let (observed_order, note) = if !above_roundoff {
        (
            None,
            Some(
                "errors are at roundoff level; the discrete and continuum values coincide"
                    .to_string(),
            ),
        )
    } else if !monotone {
        (
            None,
            Some("errors are not monotonically decreasing; no order fitted".to_string()),
        )
    } else {
        (Some(loglog_slope(spacings, &errors)), None)
    };

    Ok(ConvergenceReport {
        spacings: spacings.to_vec(),
        energies,
        reference: reference_value,
        errors,
        observed_order,
        eps_residual,
        note,
    })
}
