//! Elementary solutions on a single edge.
//!
//! For an edge of length ℓ carrying the potential U, the two elementary
//! solutions of −f″ + U f = k² f are fixed by normalized Dirichlet data at
//! opposite endpoints:
//!
//! ```text
//! u(ℓ) = 0, u′(ℓ) = 1        v(0) = 0, v′(0) = 1
//! ```
//!
//! Their Wronskian `W = u v′ − u′ v` is constant along the edge and equals
//! `u(0) = −v(ℓ)`; in the free case `W = −sin(kℓ)/k`. The vertex reduction
//! divides by `W`, so momenta where `W = 0` (the Dirichlet spectrum of some
//! edge, the *singular set* `K`) must be kept at a safe distance — see
//! [`singular_set_distance`] and [`tau_k`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{Edge, MetricGraph, Potential};

/// Elementary solutions of one edge at momentum `k`, with endpoint data
/// precomputed for the vertex reduction.
#[derive(Clone, Debug)]
pub struct EdgeBasis {
    pub k: Complex64,
    pub length: f64,
    /// u(0); equals the Wronskian.
    pub u_at_0: Complex64,
    /// u′(0); plays the role of v′(ℓ) for the reversed orientation.
    pub u_deriv_at_0: Complex64,
    /// v(ℓ); equals −W.
    pub v_at_len: Complex64,
    pub v_deriv_at_len: Complex64,
    pub wronskian: Complex64,
    /// Max relative deviation of u v′ − u′ v from W along the edge
    /// (exactly 0 for closed-form profiles).
    pub wronskian_drift: f64,
    profile: Profile,
}

#[derive(Clone, Debug)]
enum Profile {
    /// u = sin(κ(x−ℓ))/κ, v = sin(κx)/κ with κ² = k² − c.
    Trig { kappa: Complex64 },
    /// κ = 0 limit: u = x − ℓ, v = x.
    Linear,
    /// Tabulated integrator output on a uniform grid of `n_steps + 1` nodes;
    /// entries hold (value, derivative).
    Sampled {
        step: f64,
        u: Vec<[Complex64; 2]>,
        v: Vec<[Complex64; 2]>,
    },
}

impl EdgeBasis {
    pub fn u(&self, x: f64) -> Complex64 {
        match &self.profile {
            Profile::Trig { kappa } => (*kappa * (x - self.length)).sin() / *kappa,
            Profile::Linear => Complex64::new(x - self.length, 0.0),
            Profile::Sampled { step, u, .. } => interp(u, *step, x, 0),
        }
    }

    pub fn u_deriv(&self, x: f64) -> Complex64 {
        match &self.profile {
            Profile::Trig { kappa } => (*kappa * (x - self.length)).cos(),
            Profile::Linear => Complex64::new(1.0, 0.0),
            Profile::Sampled { step, u, .. } => interp(u, *step, x, 1),
        }
    }

    pub fn v(&self, x: f64) -> Complex64 {
        match &self.profile {
            Profile::Trig { kappa } => (*kappa * x).sin() / *kappa,
            Profile::Linear => Complex64::new(x, 0.0),
            Profile::Sampled { step, v, .. } => interp(v, *step, x, 0),
        }
    }

    pub fn v_deriv(&self, x: f64) -> Complex64 {
        match &self.profile {
            Profile::Trig { kappa } => (*kappa * x).cos(),
            Profile::Linear => Complex64::new(1.0, 0.0),
            Profile::Sampled { step, v, .. } => interp(v, *step, x, 1),
        }
    }
}

fn interp(table: &[[Complex64; 2]], step: f64, x: f64, which: usize) -> Complex64 {
    let last = table.len() - 1;
    let t = (x / step).clamp(0.0, last as f64);
    let i = (t.floor() as usize).min(last - 1);
    let f = t - i as f64;
    table[i][which] * (1.0 - f) + table[i + 1][which] * f
}

/// Computes the elementary basis of `edge` at momentum `k` (`Im k ≥ 0`).
///
/// Free and constant potentials use closed forms; sampled potentials are
/// integrated from both endpoints with a fixed-step fourth-order scheme of
/// step ≤ ℓ/256, and the Wronskian drift along the edge is recorded.
/// `k = 0` is admitted only for the free case, via its linear limit.
pub fn elementary_basis(edge: &Edge, k: Complex64) -> Result<EdgeBasis> {
    if k.im < 0.0 {
        return Err(Error::InvalidInput(format!(
            "momentum must satisfy Im k ≥ 0, got {k}"
        )));
    }
    let ell = edge.length;
    if !(ell.is_finite() && ell > 0.0) {
        return Err(Error::InvalidGraph(format!(
            "edge length must be positive, got {ell}"
        )));
    }
    let k2 = k * k;
    match &edge.potential {
        Potential::Zero => Ok(closed_form(k, ell, k)),
        Potential::Const { value } => {
            if k == Complex64::ZERO {
                return Err(Error::InvalidInput(
                    "k = 0 is only defined for free edges".into(),
                ));
            }
            let kappa = (k2 - value).sqrt();
            Ok(closed_form(k, ell, kappa))
        }
        Potential::Samples { values } => {
            if k == Complex64::ZERO {
                return Err(Error::InvalidInput(
                    "k = 0 is only defined for free edges".into(),
                ));
            }
            if values.len() < 2 {
                return Err(Error::InvalidGraph(
                    "sampled potential needs at least two samples".into(),
                ));
            }
            Ok(integrated(edge, k))
        }
    }
}

fn closed_form(k: Complex64, ell: f64, kappa: Complex64) -> EdgeBasis {
    if kappa == Complex64::ZERO {
        return EdgeBasis {
            k,
            length: ell,
            u_at_0: Complex64::new(-ell, 0.0),
            u_deriv_at_0: Complex64::ONE,
            v_at_len: Complex64::new(ell, 0.0),
            v_deriv_at_len: Complex64::ONE,
            wronskian: Complex64::new(-ell, 0.0),
            wronskian_drift: 0.0,
            profile: Profile::Linear,
        };
    }
    let kl = kappa * ell;
    let w = -kl.sin() / kappa;
    EdgeBasis {
        k,
        length: ell,
        u_at_0: w,
        u_deriv_at_0: kl.cos(),
        v_at_len: -w,
        v_deriv_at_len: kl.cos(),
        wronskian: w,
        wronskian_drift: 0.0,
        profile: Profile::Trig { kappa },
    }
}

/// Fourth-order fixed-step integration of f″ = (U − k²) f from both ends.
fn integrated(edge: &Edge, k: Complex64) -> EdgeBasis {
    let ell = edge.length;
    let n_samples = match &edge.potential {
        Potential::Samples { values } => values.len(),
        _ => 2,
    };
    let n_steps = 256usize.max(4 * (n_samples - 1));
    let h = ell / n_steps as f64;
    let k2 = k * k;
    let rhs = |x: f64, f: Complex64| (edge.potential.eval(x, ell) - k2) * f;

    let march = |x0: f64, step: f64| -> Vec<[Complex64; 2]> {
        let mut out = Vec::with_capacity(n_steps + 1);
        let mut f = Complex64::ZERO;
        let mut g = Complex64::ONE;
        out.push([f, g]);
        let mut x = x0;
        for _ in 0..n_steps {
            let (f1, g1) = (g, rhs(x, f));
            let (f2, g2) = (g + 0.5 * step * g1, rhs(x + 0.5 * step, f + 0.5 * step * f1));
            let (f3, g3) = (g + 0.5 * step * g2, rhs(x + 0.5 * step, f + 0.5 * step * f2));
            let (f4, g4) = (g + step * g3, rhs(x + step, f + step * f3));
            f += step / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
            g += step / 6.0 * (g1 + 2.0 * g2 + 2.0 * g3 + g4);
            x += step;
            out.push([f, g]);
        }
        out
    };

    let v = march(0.0, h);
    let mut u = march(ell, -h);
    u.reverse();

    let w = u[0][0]; // u(0)·v′(0) − u′(0)·v(0) with v(0)=0, v′(0)=1
    let scale = w.norm().max(f64::MIN_POSITIVE);
    let drift = u
        .iter()
        .zip(&v)
        .map(|(uu, vv)| (uu[0] * vv[1] - uu[1] * vv[0] - w).norm() / scale)
        .fold(0.0f64, f64::max);

    EdgeBasis {
        k,
        length: ell,
        u_at_0: u[0][0],
        u_deriv_at_0: u[0][1],
        v_at_len: v[n_steps][0],
        v_deriv_at_len: v[n_steps][1],
        wronskian: w,
        wronskian_drift: drift,
        profile: Profile::Sampled { step: h, u, v },
    }
}

/// Distance from `k` to the singular set `K`: the union over edges of the
/// momenta whose Dirichlet problem on that edge is resonant (`W = 0`).
/// Free edges contribute `πn/ℓ`; constant potentials `√((πn/ℓ)² + c)`;
/// sampled potentials are located by shooting for sign changes of `v(ℓ)` up
/// to a cap slightly above `k`.
pub fn singular_set_distance(graph: &MetricGraph, k: f64) -> f64 {
    singular_set_distance_c(graph, Complex64::new(k, 0.0))
}

pub(crate) fn singular_set_distance_c(graph: &MetricGraph, k: Complex64) -> f64 {
    let mut best = f64::INFINITY;
    for edge in &graph.edges {
        let d = edge_singular_distance(edge, k);
        best = best.min(d);
    }
    best
}

fn edge_singular_distance(edge: &Edge, k: Complex64) -> f64 {
    let ell = edge.length;
    let dist_to = |m: f64| (k - m).norm();
    match &edge.potential {
        Potential::Zero => {
            let n_near = (k.re * ell / std::f64::consts::PI).round() as i64;
            (n_near - 1..=n_near + 1)
                .filter(|&n| n >= 1)
                .map(|n| dist_to(n as f64 * std::f64::consts::PI / ell))
                .fold(f64::INFINITY, f64::min)
        }
        Potential::Const { value } => {
            let n_near = ((k.re * k.re - value).max(0.0).sqrt() * ell / std::f64::consts::PI)
                .round() as i64;
            (n_near - 1..=n_near + 2)
                .filter(|&n| n >= 1)
                .filter_map(|n| {
                    let r = (n as f64 * std::f64::consts::PI / ell).powi(2) + value;
                    (r > 0.0).then(|| dist_to(r.sqrt()))
                })
                .fold(f64::INFINITY, f64::min)
        }
        Potential::Samples { .. } => sampled_singular_distance(edge, k),
    }
}

/// Shooting search: Dirichlet momenta are the zeros of κ ↦ v(ℓ; κ).
fn sampled_singular_distance(edge: &Edge, k: Complex64) -> f64 {
    let ell = edge.length;
    let cap = k.norm() + 1.5 * std::f64::consts::PI / ell;
    let v_end = |kappa: f64| -> f64 {
        let basis = integrated(edge, Complex64::new(kappa, 0.0));
        basis.v_at_len.re
    };
    let steps = (cap * ell / std::f64::consts::PI * 16.0).ceil() as usize + 8;
    let dk = cap / steps as f64;
    let mut best = f64::INFINITY;
    let mut prev = v_end(dk * 1e-3);
    let mut prev_x = dk * 1e-3;
    for i in 1..=steps {
        let x = i as f64 * dk;
        let val = v_end(x);
        if prev.signum() != val.signum() && prev != 0.0 {
            // bisect the bracketed Dirichlet momentum
            let (mut a, mut b, mut fa) = (prev_x, x, prev);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = v_end(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fa.signum() != fm.signum() {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            let root = 0.5 * (a + b);
            best = best.min((k - root).norm());
        }
        prev = val;
        prev_x = x;
    }
    best
}

/// Guard radius around the singular set: `1e-6·(π/ℓ₀)` with ℓ₀ the shortest
/// edge. Vertex reductions refuse momenta closer to `K` than this.
pub fn tau_k(graph: &MetricGraph) -> f64 {
    let ell0 = graph
        .edges
        .iter()
        .map(|e| e.length)
        .fold(f64::INFINITY, f64::min);
    if ell0.is_finite() {
        1e-6 * std::f64::consts::PI / ell0
    } else {
        0.0
    }
}
