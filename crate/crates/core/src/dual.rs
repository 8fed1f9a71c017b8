//! The vertex reduction: a finite linear system over interior vertex values
//! that is equivalent to the continuous problem on edges.
//!
//! Row `j` of the general system reads
//!
//! ```text
//! Σ_{n ~ j, n interior} ψ_n / W_jn  −  (Σ_{n ~ j} v′_jn(ℓ_jn)/W_jn − α_j) ψ_j = 0,
//! ```
//!
//! where the second sum runs over *all* neighbors — Dirichlet neighbors
//! contribute to the diagonal but carry no unknown. On an equilateral free
//! lattice every edge shares one basis and the system collapses to the
//! adjacency form `Σ_n ψ_n = (d_j cos kℓ + α_j k⁻¹ sin kℓ) ψ_j`; the two
//! assemblies differ exactly by the factor `−k/sin kℓ` per row.
//!
//! From any solution the edge waves are recovered as
//! `ψ_jn = (ψ_n u_jn − ψ_j v_jn)/W_jn`, which is what [`reconstruct`]
//! returns.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::edge::{elementary_basis, singular_set_distance_c, tau_k, EdgeBasis};
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, VertexId, VertexKind};

/// Assembled vertex system at a fixed momentum. Rows follow `interior`
/// (ascending vertex id); `rhs` is zero for closed problems and carries the
/// lead inhomogeneity for scattering.
#[derive(Debug)]
pub struct DualSystem {
    pub k: Complex64,
    /// Interior (non-Dirichlet) vertex ids, defining the row order.
    pub interior: Vec<VertexId>,
    /// Vertex id → row index, `None` for Dirichlet vertices.
    pub row_of: Vec<Option<usize>>,
    /// Sparse entries (row, col, value), row-major, duplicates merged.
    pub entries: Vec<(usize, usize, Complex64)>,
    pub rhs: Vec<Complex64>,
    /// Distance from `k` to the singular set at assembly time.
    pub singular_distance: f64,
}

impl DualSystem {
    pub fn n_rows(&self) -> usize {
        self.interior.len()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::ZERO; self.n_rows()];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// ‖Mx − rhs‖∞.
    pub fn residual_inf(&self, x: &[Complex64]) -> f64 {
        let y = self.matvec(x);
        y.iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest absolute row sum; the natural scale for residual thresholds.
    pub fn row_scale(&self) -> f64 {
        let mut sums = vec![0.0f64; self.n_rows()];
        for &(r, _, v) in &self.entries {
            sums[r] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Dense real form, available when the assembly is purely real
    /// (real momentum, real potentials). Used by the secular scan.
    pub fn to_dense_real(&self) -> Option<nalgebra::DMatrix<f64>> {
        let n = self.n_rows();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for &(r, c, v) in &self.entries {
            if v.im != 0.0 {
                return None;
            }
            m[(r, c)] += v.re;
        }
        Some(m)
    }
}

fn guard_momentum(graph: &MetricGraph, k: Complex64) -> Result<f64> {
    if k.im < 0.0 {
        return Err(Error::InvalidInput(format!(
            "momentum must satisfy Im k ≥ 0, got {k}"
        )));
    }
    let distance = singular_set_distance_c(graph, k);
    let guard = tau_k(graph);
    if distance <= guard {
        return Err(Error::SingularMomentum {
            k: k.re,
            distance,
            guard,
        });
    }
    Ok(distance)
}

fn interior_rows(graph: &MetricGraph) -> (Vec<VertexId>, Vec<Option<usize>>) {
    let interior = graph.interior_vertices();
    let mut row_of = vec![None; graph.n_vertices()];
    for (r, &v) in interior.iter().enumerate() {
        row_of[v] = Some(r);
    }
    (interior, row_of)
}

/// Per-edge elementary bases at `k`, computed in parallel.
pub fn edge_bases(graph: &MetricGraph, k: Complex64) -> Result<Vec<EdgeBasis>> {
    graph
        .edges
        .par_iter()
        .map(|e| elementary_basis(e, k))
        .collect()
}

/// Assembles the general vertex system at momentum `k`. Fails when `k` is
/// within the `τ_K` guard of the singular set, where the reduction divides
/// by a vanishing Wronskian.
pub fn assemble_dual(graph: &MetricGraph, k: Complex64) -> Result<DualSystem> {
    let distance = guard_momentum(graph, k)?;
    let bases = edge_bases(graph, k)?;
    let (interior, row_of) = interior_rows(graph);
    let inc = graph.incidence();

    let mut entries = Vec::new();
    for (r, &j) in interior.iter().enumerate() {
        let mut diag = Complex64::new(graph.vertices[j].alpha, 0.0);
        let mut row = Vec::new();
        for &(eidx, other) in &inc.by_vertex[j] {
            let basis = &bases[eidx];
            let w = basis.wronskian;
            // v′(ℓ)/W in the orientation that puts this vertex at x = ℓ
            let ratio = if graph.edges[eidx].j == j {
                basis.v_deriv_at_len / w
            } else {
                basis.u_deriv_at_0 / w
            };
            diag -= ratio;
            if let Some(c) = row_of[other] {
                row.push((r, c, w.inv()));
            }
        }
        row.push((r, r, diag));
        row.sort_by_key(|&(_, c, _)| c);
        entries.extend(merge_row(row));
    }

    Ok(DualSystem {
        k,
        rhs: vec![Complex64::ZERO; interior.len()],
        interior,
        row_of,
        entries,
        singular_distance: distance,
    })
}

fn merge_row(row: Vec<(usize, usize, Complex64)>) -> Vec<(usize, usize, Complex64)> {
    let mut out: Vec<(usize, usize, Complex64)> = Vec::with_capacity(row.len());
    for (r, c, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out
}

/// Assembles the specialized equilateral free-lattice system
/// `Σ_n ψ_n − (d_j cos kℓ + α_j k⁻¹ sin kℓ) ψ_j = 0`. Requires a common
/// edge length and zero potentials everywhere.
pub fn assemble_equilateral(graph: &MetricGraph, k: Complex64) -> Result<DualSystem> {
    let Some(ell) = graph.equilateral_spacing() else {
        return Err(Error::InvalidInput(
            "equilateral assembly requires a common edge length".into(),
        ));
    };
    if !graph.edges.iter().all(|e| e.potential.is_zero()) {
        return Err(Error::InvalidInput(
            "equilateral assembly requires free edges".into(),
        ));
    }
    let distance = guard_momentum(graph, k)?;
    let kl = k * ell;
    let cos_kl = kl.cos();
    // sin(kℓ)/k with its k → 0 limit
    let sin_over_k = if k == Complex64::ZERO {
        Complex64::new(ell, 0.0)
    } else {
        kl.sin() / k
    };

    let (interior, row_of) = interior_rows(graph);
    let inc = graph.incidence();
    let mut entries = Vec::new();
    for (r, &j) in interior.iter().enumerate() {
        let d = inc.degree(j) as f64;
        let alpha = graph.vertices[j].alpha;
        let mut row = Vec::new();
        for &(_, other) in &inc.by_vertex[j] {
            if let Some(c) = row_of[other] {
                row.push((r, c, Complex64::ONE));
            }
        }
        row.push((r, r, -(d * cos_kl + alpha * sin_over_k)));
        row.sort_by_key(|&(_, c, _)| c);
        entries.extend(merge_row(row));
    }

    Ok(DualSystem {
        k,
        rhs: vec![Complex64::ZERO; interior.len()],
        interior,
        row_of,
        entries,
        singular_distance: distance,
    })
}

/// One reconstructed edge function `ψ(x) = a·u(x) + b·v(x)`.
#[derive(Clone, Debug)]
pub struct EdgeWave {
    pub edge: usize,
    pub a: Complex64,
    pub b: Complex64,
    pub basis: EdgeBasis,
}

impl EdgeWave {
    pub fn eval(&self, x: f64) -> Complex64 {
        self.a * self.basis.u(x) + self.b * self.basis.v(x)
    }

    pub fn deriv(&self, x: f64) -> Complex64 {
        self.a * self.basis.u_deriv(x) + self.b * self.basis.v_deriv(x)
    }
}

/// Expands an interior-indexed real vector to a full per-vertex complex
/// vector with zeros at Dirichlet vertices.
pub fn expand_interior(graph: &MetricGraph, interior_values: &[f64]) -> Vec<Complex64> {
    let interior = graph.interior_vertices();
    assert_eq!(interior.len(), interior_values.len());
    let mut full = vec![Complex64::ZERO; graph.n_vertices()];
    for (&v, &x) in interior.iter().zip(interior_values) {
        full[v] = Complex64::new(x, 0.0);
    }
    full
}

/// Builds edge waves from per-vertex values without verifying that the
/// values solve any particular system. Scattering uses this directly since
/// its lead-port rows differ from the closed system.
pub(crate) fn edge_waves_from_values(
    graph: &MetricGraph,
    bases: Vec<EdgeBasis>,
    values: &[Complex64],
) -> Vec<EdgeWave> {
    bases
        .into_iter()
        .enumerate()
        .map(|(idx, basis)| {
            let e = &graph.edges[idx];
            let psi_j = values[e.j];
            let psi_n = values[e.n];
            let w = basis.wronskian;
            EdgeWave {
                edge: idx,
                a: psi_n / w,
                b: -psi_j / w,
                basis,
            }
        })
        .collect()
}

/// Reconstructs all edge waves from per-vertex values (`values[id]`,
/// Dirichlet entries zero). The values must solve the closed vertex system
/// at `k`; inputs whose residual exceeds `1e-6` of the natural row scale are
/// rejected.
pub fn reconstruct(
    graph: &MetricGraph,
    k: Complex64,
    values: &[Complex64],
) -> Result<Vec<EdgeWave>> {
    if values.len() != graph.n_vertices() {
        return Err(Error::InvalidInput(format!(
            "expected {} vertex values, got {}",
            graph.n_vertices(),
            values.len()
        )));
    }
    let system = assemble_dual(graph, k)?;
    let x: Vec<Complex64> = system.interior.iter().map(|&v| values[v]).collect();
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let residual = system.residual_inf(&x);
    if residual > 1e-6 * system.row_scale() * scale.max(1e-300) {
        return Err(Error::InvalidInput(format!(
            "vertex values do not solve the dual system at k = {k}: residual {residual:.3e}"
        )));
    }
    let bases = edge_bases(graph, k)?;
    Ok(edge_waves_from_values(graph, bases, values))
}

/// Largest endpoint mismatch between reconstructed edge waves and the vertex
/// values that generated them.
pub fn continuity_error(graph: &MetricGraph, waves: &[EdgeWave], values: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for wave in waves {
        let e = &graph.edges[wave.edge];
        let at_n = wave.eval(0.0);
        let at_j = wave.eval(e.length);
        worst = worst.max((at_n - values[e.n]).norm());
        worst = worst.max((at_j - values[e.j]).norm());
    }
    worst
}

/// Outward derivative sums Σ ψ′(vertex) per vertex, derivatives taken away
/// from the vertex into each incident edge.
pub fn vertex_derivative_sums(graph: &MetricGraph, waves: &[EdgeWave]) -> Vec<Complex64> {
    let mut sums = vec![Complex64::ZERO; graph.n_vertices()];
    for wave in waves {
        let e = &graph.edges[wave.edge];
        // x runs from the n end (x=0) to the j end (x=ℓ); outward from n is
        // +d/dx, outward from j is −d/dx.
        sums[e.n] += wave.deriv(0.0);
        sums[e.j] -= wave.deriv(e.length);
    }
    sums
}

/// Max δ-coupling residual |Σ ψ′ − α ψ| over interior vertices without
/// leads, normalized by ‖ψ‖∞. Lead ports carry an extra lead derivative and
/// are checked by the scattering module instead.
pub fn kirchhoff_residual(graph: &MetricGraph, waves: &[EdgeWave], values: &[Complex64]) -> f64 {
    let sums = vertex_derivative_sums(graph, waves);
    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for v in &graph.vertices {
        if v.kind != VertexKind::Interior {
            continue;
        }
        let resid = (sums[v.id] - v.alpha * values[v.id]).norm();
        worst = worst.max(resid);
    }
    worst / scale
}
