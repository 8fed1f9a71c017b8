//! Stationary scattering through graphs with semi-infinite leads.
//!
//! A lead attached at port p carries `e^{-ikx} + r e^{ikx}` (incoming) or
//! `t e^{ikx}` (outgoing), with x measured away from the junction. Matching
//! value and outward derivative at the port folds the lead into the vertex
//! system: the port row gains `-ik` on the diagonal and, on the incoming
//! lead, an inhomogeneity `-2ik`. The amplitudes then read off the port
//! values themselves, `r = ψ_p - 1` and `t = ψ_p`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dual::{
    assemble_dual, edge_bases, edge_waves_from_values, vertex_derivative_sums, DualSystem,
    EdgeWave,
};
use crate::error::{Error, Result};
use crate::graph::{LeadDirection, MetricGraph, VertexId, VertexKind};
use crate::linalg::SparseLuComplex;

/// Amplitudes and flux bookkeeping for one lead.
#[derive(Clone, Debug)]
pub struct LeadState {
    pub vertex: VertexId,
    pub direction: LeadDirection,
    /// Outgoing plane-wave amplitude: r on the incoming lead, t otherwise.
    pub amplitude: Complex64,
    /// Net probability current into the graph through this port
    /// (negative on outgoing leads).
    pub flux_in: f64,
}

#[derive(Debug)]
pub struct ScatteringSolution {
    pub k: f64,
    /// Per-vertex values; Dirichlet entries are zero.
    pub vertex_values: Vec<Complex64>,
    pub leads: Vec<LeadState>,
    /// r from the incoming lead.
    pub reflection: Complex64,
    /// t from the first outgoing lead (zero when there is none).
    pub transmission: Complex64,
    pub waves: Vec<EdgeWave>,
    /// Per-edge probability current, positive toward the `x = length`
    /// endpoint (the edge's `j` vertex).
    pub edge_currents: Vec<f64>,
    /// | |r|² + Σ|t|² − 1 |.
    pub flux_error: f64,
}

fn check_leads(graph: &MetricGraph) -> Result<()> {
    if graph.leads.is_empty() {
        return Err(Error::InvalidInput(
            "scattering requires at least one lead".into(),
        ));
    }
    let incoming = graph
        .leads
        .iter()
        .filter(|l| l.direction == LeadDirection::Incoming)
        .count();
    if incoming != 1 {
        return Err(Error::InvalidInput(format!(
            "scattering requires exactly one incoming lead, found {incoming}"
        )));
    }
    for lead in &graph.leads {
        if graph.vertices[lead.vertex].kind != VertexKind::LeadPort {
            return Err(Error::InvalidGraph(format!(
                "lead attached to vertex {} which is not a lead port",
                lead.vertex
            )));
        }
    }
    Ok(())
}

/// The vertex system at momentum `k` with lead ports folded in: diagonal
/// `-ik` at every port, right-hand side `-2ik` at the incoming port.
pub fn assemble_scattering(graph: &MetricGraph, k: f64) -> Result<DualSystem> {
    check_leads(graph)?;
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!(
            "scattering momentum must be positive, got {k}"
        )));
    }
    let mut system = assemble_dual(graph, Complex64::new(k, 0.0))?;
    let ik = Complex64::new(0.0, k);
    for lead in &graph.leads {
        let row = system.row_of[lead.vertex].ok_or_else(|| {
            Error::InvalidGraph(format!("lead port {} has no system row", lead.vertex))
        })?;
        let diag = system
            .entries
            .iter_mut()
            .find(|&&mut (r, c, _)| r == row && c == row)
            .expect("assembled rows always carry a diagonal entry");
        diag.2 -= ik;
        if lead.direction == LeadDirection::Incoming {
            system.rhs[row] = -2.0 * ik;
        }
    }
    Ok(system)
}

/// Solves the scattering problem at momentum `k` for a graph with exactly
/// one incoming lead.
pub fn solve_scattering(graph: &MetricGraph, k: f64) -> Result<ScatteringSolution> {
    let system = assemble_scattering(graph, k)?;
    let n = system.n_rows();
    let lu = SparseLuComplex::factor(n, &system.entries)?;
    let x = lu.solve(&system.rhs);
    let residual = system.residual_inf(&x);
    let scale = system.row_scale() * x.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if !residual.is_finite() || residual > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "scattering solve left residual {residual:.3e} at k = {k}"
        )));
    }

    let mut vertex_values = vec![Complex64::ZERO; graph.n_vertices()];
    for (row, &v) in system.interior.iter().enumerate() {
        vertex_values[v] = x[row];
    }

    let mut leads = Vec::with_capacity(graph.leads.len());
    let mut reflection = Complex64::ZERO;
    let mut transmission = Complex64::ZERO;
    let mut out_power = 0.0;
    for lead in &graph.leads {
        let psi = vertex_values[lead.vertex];
        let (amplitude, flux_in) = match lead.direction {
            LeadDirection::Incoming => {
                let r = psi - 1.0;
                reflection = r;
                (r, k * (1.0 - r.norm_sqr()))
            }
            LeadDirection::Outgoing => {
                if transmission == Complex64::ZERO {
                    transmission = psi;
                }
                out_power += psi.norm_sqr();
                (psi, -k * psi.norm_sqr())
            }
        };
        leads.push(LeadState {
            vertex: lead.vertex,
            direction: lead.direction,
            amplitude,
            flux_in,
        });
    }
    let flux_error = (reflection.norm_sqr() + out_power - 1.0).abs();

    let bases = edge_bases(graph, Complex64::new(k, 0.0))?;
    let waves = edge_waves_from_values(graph, bases, &vertex_values);
    let edge_currents = waves.iter().map(|w| edge_current(graph, w)).collect();

    Ok(ScatteringSolution {
        k,
        vertex_values,
        leads,
        reflection,
        transmission,
        waves,
        edge_currents,
        flux_error,
    })
}

/// Probability current `Im(ψ̄ ψ′)` carried by one edge wave, positive toward
/// increasing x (the `j` endpoint). For the real elementary bases of real
/// momenta this is the constant `W · Im(ā b)`; otherwise it is sampled at
/// the edge midpoint.
pub fn edge_current(graph: &MetricGraph, wave: &EdgeWave) -> f64 {
    let w = wave.basis.wronskian;
    if w.im == 0.0 {
        return w.re * (wave.a.conj() * wave.b).im;
    }
    let x = 0.5 * graph.edges[wave.edge].length;
    (wave.eval(x).conj() * wave.deriv(x)).im
}

/// Net current flowing into each vertex from its incident edges. Kirchhoff
/// conservation makes this vanish at interior vertices without leads; at a
/// port it balances the lead flux.
pub fn current_divergence(graph: &MetricGraph, edge_currents: &[f64]) -> Vec<f64> {
    let mut net = vec![0.0f64; graph.n_vertices()];
    for (idx, e) in graph.edges.iter().enumerate() {
        net[e.j] += edge_currents[idx];
        net[e.n] -= edge_currents[idx];
    }
    net
}

/// Per-vertex current vectors for plotting: at each vertex the sum of
/// incident edge currents times the unit vector of the edge's increasing-x
/// direction. One-dimensional graphs fill only the first component.
pub fn vertex_current_field(graph: &MetricGraph, edge_currents: &[f64]) -> Vec<[f64; 2]> {
    let mut field = vec![[0.0f64; 2]; graph.n_vertices()];
    for (idx, e) in graph.edges.iter().enumerate() {
        let pn = &graph.vertices[e.n].pos;
        let pj = &graph.vertices[e.j].pos;
        let mut dir = [0.0f64; 2];
        let mut len2 = 0.0;
        for (i, d) in dir.iter_mut().enumerate().take(pn.len().min(2)) {
            *d = pj[i] - pn[i];
            len2 += *d * *d;
        }
        let len = len2.sqrt();
        if len == 0.0 {
            continue;
        }
        for d in dir.iter_mut() {
            *d *= edge_currents[idx] / len;
        }
        for &v in &[e.n, e.j] {
            field[v][0] += dir[0];
            field[v][1] += dir[1];
        }
    }
    field
}

/// Max δ-coupling residual over all non-Dirichlet vertices, lead
/// derivatives included, normalized by ‖ψ‖∞.
pub fn kirchhoff_residual_with_leads(graph: &MetricGraph, sol: &ScatteringSolution) -> f64 {
    let mut sums = vertex_derivative_sums(graph, &sol.waves);
    let ik = Complex64::new(0.0, sol.k);
    for lead in &graph.leads {
        let psi = sol.vertex_values[lead.vertex];
        sums[lead.vertex] += match lead.direction {
            LeadDirection::Incoming => ik * (psi - 2.0),
            LeadDirection::Outgoing => ik * psi,
        };
    }
    let scale = sol
        .vertex_values
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for v in &graph.vertices {
        if v.kind == VertexKind::Boundary {
            continue;
        }
        let resid = (sums[v.id] - v.alpha * sol.vertex_values[v.id]).norm();
        worst = worst.max(resid);
    }
    worst / scale
}

/// One point of a transmission sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub k: f64,
    pub reflection: Complex64,
    pub transmission: Complex64,
    pub reflectance: f64,
    pub transmittance: f64,
    pub flux_error: f64,
}

/// Solves the scattering problem at every momentum of `ks` in parallel,
/// preserving input order. Fails on the first momentum that cannot be
/// solved (singular-set guard included), so callers should keep their grid
/// clear of `K`.
pub fn transmission_sweep(graph: &MetricGraph, ks: &[f64]) -> Result<Vec<SweepPoint>> {
    ks.par_iter()
        .map(|&k| {
            let sol = solve_scattering(graph, k)?;
            let transmittance = sol
                .leads
                .iter()
                .filter(|l| l.direction == LeadDirection::Outgoing)
                .map(|l| l.amplitude.norm_sqr())
                .sum();
            Ok(SweepPoint {
                k,
                reflection: sol.reflection,
                transmission: sol.transmission,
                reflectance: sol.reflection.norm_sqr(),
                transmittance,
                flux_error: sol.flux_error,
            })
        })
        .collect()
}
