//! Closed-graph spectra.
//!
//! Equilateral free Kirchhoff lattices admit an exact route: eigenvalues μ
//! of the interior adjacency matrix map to momenta through
//! `cos kℓ = μ/d`, so one symmetric eigensolve yields the whole low band.
//! Everything else goes through a secular scan of the general vertex system,
//! locating momenta where its smallest singular value vanishes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dual::{assemble_dual, DualSystem};
use crate::edge::{singular_set_distance, tau_k};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{
    dense_symmetric_eigen, fix_sign, golden_min, lanczos_largest, sigma_min_dense, Csr, EigenPair,
    SparseLuReal,
};

/// One momentum of the closed graph with its vertex eigenvector.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub k: f64,
    /// k², the graph-side energy.
    pub energy_graph: f64,
    /// ν·k², the continuum energy this momentum approximates.
    pub energy_continuum: f64,
    /// Interior-indexed vertex vector, ‖·‖₂ = 1, sign-fixed.
    pub vertex_vector: Vec<f64>,
    /// ‖M(k)ψ‖∞ of the assembled vertex system at this momentum.
    pub residual: f64,
    /// Size of the adjacency eigenvalue cluster this momentum represents.
    pub multiplicity: usize,
}

/// Interior vertices above this count switch the adjacency eigensolve from a
/// dense decomposition to shift-inverted Lanczos.
const DENSE_LIMIT: usize = 2000;

fn interior_adjacency(graph: &MetricGraph) -> (Vec<usize>, Csr) {
    let interior = graph.interior_vertices();
    let mut row_of = vec![usize::MAX; graph.n_vertices()];
    for (r, &v) in interior.iter().enumerate() {
        row_of[v] = r;
    }
    let mut trips = Vec::new();
    for e in &graph.edges {
        let (rj, rn) = (row_of[e.j], row_of[e.n]);
        if rj != usize::MAX && rn != usize::MAX {
            trips.push((rj, rn, 1.0));
            trips.push((rn, rj, 1.0));
        }
    }
    let n = interior.len();
    (interior, Csr::from_triplets(n, &trips))
}

/// Momenta of the closed equilateral free Kirchhoff lattice via the interior
/// adjacency spectrum: the `count` smallest momenta on the principal arccos
/// branch, one result per degenerate adjacency cluster (clustered within
/// 1e-10, multiplicities reported). Eigenvalues with |μ| = d are discarded —
/// they would force `sin kℓ = 0`, i.e. a singular momentum.
pub fn adjacency_eigen_path(graph: &MetricGraph, count: usize) -> Result<Vec<EigenResult>> {
    let Some(ell) = graph.equilateral_spacing() else {
        return Err(Error::InvalidInput(
            "adjacency path requires an equilateral lattice".into(),
        ));
    };
    if !graph.edges.iter().all(|e| e.potential.is_zero()) {
        return Err(Error::InvalidInput(
            "adjacency path requires free edges".into(),
        ));
    }
    let inc = graph.incidence();
    let interior = graph.interior_vertices();
    if interior.is_empty() {
        return Err(Error::InvalidInput("graph has no interior vertex".into()));
    }
    for &v in &interior {
        if graph.vertices[v].alpha != 0.0 {
            return Err(Error::InvalidInput(
                "adjacency path requires Kirchhoff couplings (α = 0); use the secular scan".into(),
            ));
        }
    }
    let d = inc.degree(interior[0]);
    if interior.iter().any(|&v| inc.degree(v) != d) {
        return Err(Error::InvalidInput(
            "adjacency path requires uniform interior degree; use the secular scan".into(),
        ));
    }

    let (_, adj) = interior_adjacency(graph);
    let n = adj.n;
    let want = count + 8; // slack so degenerate clusters are fully resolved

    let pairs: Vec<EigenPair> = if n <= DENSE_LIMIT {
        let mut all = dense_symmetric_eigen(&adj.to_dense());
        all.reverse(); // μ descending: smallest k first
        all.truncate(want.min(n));
        all
    } else {
        let sigma = d as f64 * (1.0 + 1e-3);
        let mut trips: Vec<(usize, usize, f64)> = vec![];
        for r in 0..n {
            trips.push((r, r, sigma));
        }
        for r in 0..n {
            for i in adj.row_ptr[r]..adj.row_ptr[r + 1] {
                trips.push((r, adj.col_idx[i], -adj.vals[i]));
            }
        }
        let lu = SparseLuReal::factor(n, &trips)?;
        let raw = lanczos_largest(
            |x, y| {
                let sol = lu.solve(x);
                y.copy_from_slice(&sol);
            },
            n,
            want.min(n),
            0x6c61_7474,
        )?;
        // Rayleigh-refine μ on the adjacency matrix itself.
        raw.into_iter()
            .map(|p| {
                let mut ax = vec![0.0; n];
                adj.matvec(&p.vector, &mut ax);
                let mu = p
                    .vector
                    .iter()
                    .zip(&ax)
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
                EigenPair {
                    value: mu,
                    vector: p.vector,
                }
            })
            .collect()
    };

    // cluster adjacent μ within 1e-10 (they are sorted descending)
    let mut results = Vec::new();
    let mut i = 0;
    while i < pairs.len() && results.len() < count {
        let mut j = i + 1;
        while j < pairs.len() && (pairs[j].value - pairs[i].value).abs() <= 1e-10 {
            j += 1;
        }
        let mu = pairs[i].value;
        let x = mu / d as f64;
        if x.abs() < 1.0 - 1e-12 {
            let k = x.acos() / ell;
            let mut vector = pairs[i].vector.clone();
            fix_sign(&mut vector);
            let system = assemble_dual(graph, Complex64::new(k, 0.0))?;
            let xc: Vec<Complex64> = vector.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let residual = system.residual_inf(&xc);
            results.push(EigenResult {
                k,
                energy_graph: k * k,
                energy_continuum: graph.dimension as f64 * k * k,
                vertex_vector: vector,
                residual,
                multiplicity: j - i,
            });
        }
        i = j;
    }
    if results.len() < count {
        return Err(Error::Numerical(format!(
            "only {} of {} momenta available below the band edge",
            results.len(),
            count
        )));
    }
    Ok(results)
}

/// Momentum branches for one adjacency eigenvalue ratio `x = μ/d`:
/// `k = (2πn ± arccos x)/ℓ`, listed ascending. `branches = 1` yields just
/// the principal branch.
pub fn momentum_branches(x: f64, spacing: f64, branches: usize) -> Result<Vec<f64>> {
    if x.abs() >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "|μ/d| = {} ≥ 1 lies in the singular set",
            x.abs()
        )));
    }
    let base = x.acos();
    let mut out = vec![base / spacing];
    let mut n = 1;
    while out.len() < branches {
        out.push((2.0 * std::f64::consts::PI * n as f64 - base) / spacing);
        if out.len() < branches {
            out.push((2.0 * std::f64::consts::PI * n as f64 + base) / spacing);
        }
        n += 1;
    }
    Ok(out)
}

/// A refined zero of the secular function σ_min(M(k)).
#[derive(Clone, Debug)]
pub struct SecularRoot {
    pub k: f64,
    pub sigma_min: f64,
    /// Interior-indexed null vector at the root, ‖·‖₂ = 1.
    pub vector: Vec<f64>,
}

/// Scan of the smallest singular value of the vertex system over a momentum
/// window.
#[derive(Debug)]
pub struct SecularScan {
    /// Momenta actually evaluated (guarded points near `K` are skipped).
    pub k_grid: Vec<f64>,
    pub sigma_min: Vec<f64>,
    /// Skipped neighborhoods of the singular set, reported as the first and
    /// last grid sample each gap swallowed.
    pub guarded: Vec<(f64, f64)>,
    pub roots: Vec<SecularRoot>,
}

/// Scans σ_min(M(k)) on `samples` momenta across `[k_min, k_max]`, skipping
/// τ_K-guarded neighborhoods of the singular set, then refines every local
/// minimum below `1e-6·median(σ_min)` by golden-section search to an
/// abscissa tolerance of 1e-10. Each root also yields its null vector via
/// inverse iteration.
pub fn secular_scan(
    graph: &MetricGraph,
    k_min: f64,
    k_max: f64,
    samples: usize,
) -> Result<SecularScan> {
    if samples < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    if !(k_min.is_finite() && k_max.is_finite() && 0.0 < k_min && k_min < k_max) {
        return Err(Error::InvalidInput(format!(
            "bad momentum window [{k_min}, {k_max}]"
        )));
    }
    let guard = tau_k(graph);
    let step = (k_max - k_min) / (samples - 1) as f64;
    let sigma_at = |k: f64| -> Result<(f64, Vec<f64>)> {
        let system = assemble_dual(graph, Complex64::new(k, 0.0))?;
        let mat = system.to_dense_real().ok_or_else(|| {
            Error::Numerical("secular scan requires a real vertex system".into())
        })?;
        Ok(sigma_min_dense(&mat, 6, 0x5ec5))
    };

    let mut k_grid = Vec::new();
    let mut sigma = Vec::new();
    let mut guarded = Vec::new();
    // (first, last) skipped sample of the current guard gap
    let mut gap: Option<(f64, f64)> = None;
    for i in 0..samples {
        let k = k_min + i as f64 * step;
        if singular_set_distance(graph, k) <= guard {
            gap = Some(match gap {
                Some((g0, _)) => (g0, k),
                None => (k, k),
            });
            continue;
        }
        if let Some(interval) = gap.take() {
            guarded.push(interval);
        }
        let (s, _) = sigma_at(k)?;
        k_grid.push(k);
        sigma.push(s);
    }
    if let Some(interval) = gap {
        guarded.push(interval);
    }
    if k_grid.is_empty() {
        return Err(Error::InvalidInput(
            "the whole momentum window lies inside the singular-set guard".into(),
        ));
    }

    let mut sorted = sigma.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let threshold = 1e-6 * median;

    // refine every strict local minimum (a sign change of the slope proxy),
    // then keep the ones whose refined value actually drops below threshold
    let mut roots: Vec<SecularRoot> = Vec::new();
    for i in 1..k_grid.len().saturating_sub(1) {
        // only brackets from consecutive grid points, not across guard gaps
        let contiguous = (k_grid[i] - k_grid[i - 1]) < 1.5 * step
            && (k_grid[i + 1] - k_grid[i]) < 1.5 * step;
        if !contiguous {
            continue;
        }
        if sigma[i] <= sigma[i - 1] && sigma[i] <= sigma[i + 1] {
            let f = |k: f64| sigma_at(k).map(|(s, _)| s).unwrap_or(f64::INFINITY);
            let (k_root, s_root) = golden_min(f, k_grid[i - 1], k_grid[i + 1], 1e-10);
            if !(s_root < threshold) {
                continue;
            }
            let (_, vector) = sigma_at(k_root)?;
            // successive grid minima can refine into the same root
            match roots.last_mut() {
                Some(last) if (last.k - k_root).abs() <= 1e-8 => {
                    if s_root < last.sigma_min {
                        *last = SecularRoot {
                            k: k_root,
                            sigma_min: s_root,
                            vector,
                        };
                    }
                }
                _ => roots.push(SecularRoot {
                    k: k_root,
                    sigma_min: s_root,
                    vector,
                }),
            }
        }
    }

    Ok(SecularScan {
        k_grid,
        sigma_min: sigma,
        guarded,
        roots,
    })
}

/// Upgrades secular roots to full [`EigenResult`]s (residual measured on a
/// fresh assembly; secular roots are reported with multiplicity 1).
pub fn eigen_from_secular(graph: &MetricGraph, scan: &SecularScan) -> Result<Vec<EigenResult>> {
    scan.roots
        .iter()
        .map(|root| {
            let system = assemble_dual(graph, Complex64::new(root.k, 0.0))?;
            let xc: Vec<Complex64> = root
                .vector
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            Ok(EigenResult {
                k: root.k,
                energy_graph: root.k * root.k,
                energy_continuum: graph.dimension as f64 * root.k * root.k,
                vertex_vector: root.vector.clone(),
                residual: system.residual_inf(&xc),
                multiplicity: 1,
            })
        })
        .collect()
}

/// Lattice dispersion: the momentum k with
/// `Σ_i cos(θ_i ℓ) = ν cos(kℓ)` on the ν-dimensional equilateral lattice,
/// principal branch. For small ℓ this reproduces the free relation
/// `ν k² ≈ Σ θ_i²`.
pub fn bloch_dispersion(theta: &[f64], spacing: f64) -> Result<f64> {
    if theta.is_empty() {
        return Err(Error::InvalidInput("empty quasimomentum".into()));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let nu = theta.len() as f64;
    let mean = theta.iter().map(|t| (t * spacing).cos()).sum::<f64>() / nu;
    if mean.abs() > 1.0 {
        return Err(Error::InvalidInput(format!(
            "quasimomentum outside the band: Σ cos θℓ = {} exceeds ν = {}",
            mean * nu,
            nu
        )));
    }
    Ok(mean.acos() / spacing)
}

/// Reference eigen data for small separable grids, used by callers that
/// need an analytic cross-check: μ_pq = 2cos(pπ/(m+1)) + 2cos(qπ/(n+1)).
pub fn grid_adjacency_eigenvalues(m: usize, n: usize) -> Vec<f64> {
    let mut mus = Vec::with_capacity(m * n);
    for p in 1..=m {
        for q in 1..=n {
            mus.push(
                2.0 * (p as f64 * std::f64::consts::PI / (m as f64 + 1.0)).cos()
                    + 2.0 * (q as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos(),
            );
        }
    }
    mus.sort_by(f64::total_cmp);
    mus
}

/// Smallest singular value and null vector of an arbitrary dense real
/// system; exposed for diagnostics and tests.
pub fn dense_sigma_min(mat: &DMatrix<f64>) -> (f64, Vec<f64>) {
    sigma_min_dense(mat, 8, 0x5ec5)
}

/// Convenience wrapper: the `(dual system, σ_min)` pair at one momentum.
pub fn secular_value(graph: &MetricGraph, k: f64) -> Result<(DualSystem, f64)> {
    let system = assemble_dual(graph, Complex64::new(k, 0.0))?;
    let mat = system
        .to_dense_real()
        .ok_or_else(|| Error::Numerical("secular value requires a real vertex system".into()))?;
    let (s, _) = sigma_min_dense(&mat, 6, 0x5ec5);
    Ok((system, s))
}
