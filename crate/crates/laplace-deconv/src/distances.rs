//! Distances between measures and between mixture densities.
//!
//! Wasserstein distances between discrete measures use the one-dimensional
//! quantile-coupling identity `W_k^k = int_0^1 |F^{-1}(u) - H^{-1}(u)|^k du`,
//! evaluated exactly by merging the two CDF breakpoint sets. Hellinger, L_q,
//! and Kullback-Leibler discrepancies between mixture densities are computed
//! by adaptive Gauss-Kronrod quadrature over the kernel's truncation window,
//! with mixture atoms as split points.
//!
//! Two structural upper bounds complement the metrics: a coupling bound that
//! controls `W_k` by a paired-atom displacement plus a total-variation term,
//! and a smoothing bound that controls `W_k^k` through the Hellinger
//! distance of the induced mixtures. Both return enough of their internals
//! for tests to check the schedules, not just the values.

use crate::kernels::{Kernel, MixtureDensity};
use crate::measures::DiscreteMeasure;
use crate::quad::{adaptive_vec, QuadOutcome, DEFAULT_MAX_EVALS};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance requested from the adaptive integrator.
pub const QUAD_TARGET: f64 = 1e-10;

/// Estimated quadrature error above this is a reported failure.
pub const QUAD_FAIL: f64 = 1e-8;

/// One computed distance, ready for serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceReport {
    /// Which discrepancy was computed ("w1", "hellinger", "l2", "kl", ...).
    pub metric: String,
    /// The computed value (for "kl", the larger of K and K2).
    pub value: f64,
    /// How it was computed: quantile | quadrature | coupling-bound | smoothing-bound.
    pub method: String,
    /// Numerical tolerance attached to the method (0 for exact formulas).
    pub tolerance: f64,
}

fn cost_pow(d: f64, k: f64) -> f64 {
    let d = d.abs();
    if k == 1.0 {
        d
    } else if k == 2.0 {
        d * d
    } else {
        d.powf(k)
    }
}

/// `W_k(G, G')` via exact quantile-coupling integration.
///
/// Both quantile functions are piecewise constant; merging their CDF
/// breakpoints yields closed-form segment sums, so the only error is
/// floating-point roundoff.
pub fn wasserstein_1d(g: &DiscreteMeasure, gp: &DiscreteMeasure, k: f64) -> Result<f64> {
    if !(k >= 1.0) {
        return Err(Error::invalid(format!("wasserstein order {k} below 1")));
    }
    let (xa, wa) = (g.atoms(), g.weights());
    let (xb, wb) = (gp.atoms(), gp.weights());
    let (m, n) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ca, mut cb) = (wa[0], wb[0]);
    let mut u = 0.0;
    let mut acc = 0.0;
    loop {
        let next = ca.min(cb);
        let seg = next - u;
        if seg > 0.0 {
            acc += seg * cost_pow(xa[i] - xb[j], k);
        }
        u = next;
        let a_can = i + 1 < m;
        let b_can = j + 1 < n;
        if ca <= cb && a_can {
            i += 1;
            ca += wa[i];
        } else if cb <= ca && b_can {
            j += 1;
            cb += wb[j];
        } else if a_can {
            i += 1;
            ca += wa[i];
        } else if b_can {
            j += 1;
            cb += wb[j];
        } else {
            break;
        }
    }
    Ok(acc.max(0.0).powf(1.0 / k))
}

fn quad_metric<const N: usize>(
    p: &MixtureDensity,
    q: &MixtureDensity,
    f: impl FnMut(f64) -> [f64; N],
) -> QuadOutcome<N> {
    let (lo, hi) = p.joint_window(q);
    let breaks = p.joint_breakpoints(q);
    adaptive_vec(f, lo, hi, &breaks, QUAD_TARGET, DEFAULT_MAX_EVALS)
}

fn require_converged<const N: usize>(out: &QuadOutcome<N>) -> Result<()> {
    if out.error_estimate > QUAD_FAIL {
        return Err(Error::QuadratureNoConvergence {
            value: out.value[0],
            error_estimate: out.error_estimate,
            tolerance: QUAD_FAIL,
        });
    }
    Ok(())
}

/// Squared Hellinger distance `int (sqrt p - sqrt q)^2`.
pub fn hellinger_squared(p: &MixtureDensity, q: &MixtureDensity) -> Result<f64> {
    let out = quad_metric(p, q, |x| {
        let d = p.density(x).max(0.0).sqrt() - q.density(x).max(0.0).sqrt();
        [d * d]
    });
    require_converged(&out)?;
    Ok(out.value[0].clamp(0.0, 2.0))
}

/// Hellinger distance, in `[0, sqrt 2]`.
pub fn hellinger(p: &MixtureDensity, q: &MixtureDensity) -> Result<f64> {
    Ok(hellinger_squared(p, q)?.sqrt())
}

/// Closed-form squared Hellinger distance between a standard Laplace density
/// and its translate by `theta`: piecewise integration of
/// `sqrt(f(x) f(x - theta))` gives the affinity `e^{-theta/2} (1 + theta/2)`,
/// hence `h^2 = 2 - 2 e^{-theta/2} (1 + theta/2)`.
pub fn hellinger_sq_laplace_shift(theta: f64) -> f64 {
    let t = theta.abs();
    2.0 - 2.0 * (-t / 2.0).exp() * (1.0 + t / 2.0)
}

/// `L_q` distance between mixture densities; `order` may be `f64::INFINITY`
/// for the sup norm (grid search plus local refinement).
pub fn lq_distance(p: &MixtureDensity, q: &MixtureDensity, order: f64) -> Result<f64> {
    if !(order >= 1.0) {
        return Err(Error::invalid(format!("L_q order {order} below 1")));
    }
    if order.is_infinite() {
        return Ok(sup_distance(p, q));
    }
    let out = quad_metric(p, q, |x| {
        let d = (p.density(x) - q.density(x)).abs();
        [if order == 1.0 {
            d
        } else if order == 2.0 {
            d * d
        } else {
            d.powf(order)
        }]
    });
    require_converged(&out)?;
    Ok(out.value[0].max(0.0).powf(1.0 / order))
}

/// Sup-norm distance between mixture densities: dense candidate grid over
/// the region where either density is non-negligible, then ternary
/// refinement inside the best grid cell.
fn sup_distance(p: &MixtureDensity, q: &MixtureDensity) -> f64 {
    let a = p.mixing.halfwidth().max(q.mixing.halfwidth());
    let pad = match (p.kernel, q.kernel) {
        (Kernel::Laplace, Kernel::Laplace) => 8.0,
        _ => {
            let s = |k: &Kernel| match *k {
                Kernel::Gaussian { sigma } => 6.0 * sigma,
                Kernel::Laplace => 8.0,
            };
            s(&p.kernel).max(s(&q.kernel))
        }
    };
    let (lo, hi) = (-a - pad, a + pad);
    let d = |x: f64| (p.density(x) - q.density(x)).abs();

    let mut candidates: Vec<f64> = (0..=4096)
        .map(|i| lo + (hi - lo) * i as f64 / 4096.0)
        .collect();
    candidates.extend(p.joint_breakpoints(q));
    let (mut best_x, mut best) = (lo, 0.0f64);
    for &x in &candidates {
        let v = d(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let h = (hi - lo) / 4096.0;
    let (mut l, mut r) = (best_x - h, best_x + h);
    for _ in 0..120 {
        let m1 = l + (r - l) / 3.0;
        let m2 = r - (r - l) / 3.0;
        if d(m1) < d(m2) {
            l = m1;
        } else {
            r = m2;
        }
    }
    best.max(d(0.5 * (l + r)))
}

/// Kullback-Leibler divergence `K(p0, p)` and its second moment
/// `K2(p0, p) = int p0 log^2(p0/p)`, computed in one quadrature pass.
///
/// Requires both mixing measures to share the support halfwidth: that is
/// what bounds the log-ratio (by `2a` for the Laplace kernel) and keeps the
/// integrand tame.
pub fn kl_divergences(p0: &MixtureDensity, p: &MixtureDensity) -> Result<(f64, f64)> {
    let a0 = p0.mixing.halfwidth();
    let a1 = p.mixing.halfwidth();
    if (a0 - a1).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "support halfwidths differ ({a0} vs {a1}); log-ratio bound unavailable"
        )));
    }
    let out = quad_metric(p0, p, |x| {
        let d0 = p0.density(x);
        let d1 = p.density(x);
        let lr = d0.ln() - d1.ln();
        [d0 * lr, d0 * lr * lr]
    });
    require_converged(&out)?;
    Ok((out.value[0].max(0.0), out.value[1].max(0.0)))
}

/// Identity pairing over the padded atom index range of two measures,
/// matching sorted atoms in order (the monotone coupling).
pub fn monotone_pairing(g: &DiscreteMeasure, gp: &DiscreteMeasure) -> Vec<(usize, usize)> {
    let n = g.atom_count().max(gp.atom_count());
    (0..n).map(|i| (i, i)).collect()
}

/// Upper bound on `W_k(G, G')` from an explicit atom pairing:
/// `max_i |theta_i - theta'_i| + diam * (sum_i |p_i - p'_i|)^{1/k}`.
///
/// The pairing must be a bijection on `0..max(m, n)`; indices at or beyond a
/// measure's atom count denote zero-weight padding atoms placed at the
/// partner's location (so they contribute weight discrepancy but no
/// displacement).
pub fn coupling_bound(
    g: &DiscreteMeasure,
    gp: &DiscreteMeasure,
    pairing: &[(usize, usize)],
    k: f64,
    diam: f64,
) -> Result<f64> {
    if !(k >= 1.0) {
        return Err(Error::invalid(format!("coupling order {k} below 1")));
    }
    if !(diam > 0.0) {
        return Err(Error::invalid("nonpositive diameter"));
    }
    let m = g.atom_count();
    let n = gp.atom_count();
    let padded = m.max(n);
    if pairing.len() != padded {
        return Err(Error::invalid(format!(
            "pairing has {} entries, need {padded}",
            pairing.len()
        )));
    }
    let mut seen_left = vec![false; padded];
    let mut seen_right = vec![false; padded];
    let mut max_disp = 0.0f64;
    let mut weight_gap = 0.0f64;
    for &(i, j) in pairing {
        if i >= padded || j >= padded || seen_left[i] || seen_right[j] {
            return Err(Error::invalid("pairing is not a bijection"));
        }
        seen_left[i] = true;
        seen_right[j] = true;
        let wi = if i < m { g.weights()[i] } else { 0.0 };
        let wj = if j < n { gp.weights()[j] } else { 0.0 };
        weight_gap += (wi - wj).abs();
        if i < m && j < n {
            max_disp = max_disp.max((g.atoms()[i] - gp.atoms()[j]).abs());
        }
    }
    Ok(max_disp + diam * weight_gap.powf(1.0 / k))
}

/// Output of [`smoothing_bound`]: the three-term bound on `W_k^k` and the
/// smoothing schedule that produced it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmoothingBound {
    /// `M^{k+1/2} eps delta^{-beta} + e^{-M} + delta^k` (unscaled).
    pub bound: f64,
    /// Log-window parameter `M`.
    pub big_m: f64,
    /// Smoothing bandwidth `delta`.
    pub delta: f64,
    /// Measured Hellinger distance `eps` between the inputs.
    pub hellinger: f64,
}

/// Upper-bound skeleton for `W_k(G, G')^k` in terms of the Hellinger
/// distance `eps` of the induced Laplace mixtures.
///
/// With `C_k = 2 e^{k+1/2}` (which keeps `eps -> eps log^{k+1/2}(C_k/eps)`
/// monotone on `(0, 2]`), the schedule is `M = k/(k+beta) log(C_k/eps)` and
/// `delta = (M^{k+1/2} eps)^{1/(k+beta)}`. The multiplicative constant in
/// front of the bound is left to the caller's calibration.
pub fn smoothing_bound(
    p: &MixtureDensity,
    q: &MixtureDensity,
    k: f64,
    beta: f64,
) -> Result<SmoothingBound> {
    if !(k >= 1.0) {
        return Err(Error::invalid(format!("order {k} below 1")));
    }
    for kern in [&p.kernel, &q.kernel] {
        match kern {
            Kernel::Laplace => {}
            other => {
                return Err(Error::invalid(format!(
                    "smoothing bound needs a kernel whose characteristic function decays \
                     polynomially; {} does not qualify",
                    other.name()
                )))
            }
        }
    }
    if (beta - 2.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "decay order {beta} does not match the Laplace kernel (2)"
        )));
    }
    let eps = hellinger(p, q)?;
    smoothing_bound_for_eps(eps, k, beta)
}

/// The schedule and three-term bound of [`smoothing_bound`] as a pure
/// function of a known Hellinger distance `eps`, for callers that want to
/// sweep the bound without constructing mixture pairs at each level.
pub fn smoothing_bound_for_eps(eps: f64, k: f64, beta: f64) -> Result<SmoothingBound> {
    if !(k >= 1.0) {
        return Err(Error::invalid(format!("order {k} below 1")));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("decay order {beta} must be positive")));
    }
    if !(0.0..=2.0f64.sqrt()).contains(&eps) {
        return Err(Error::invalid(format!(
            "hellinger distance {eps} outside [0, sqrt(2)]"
        )));
    }
    if eps == 0.0 {
        return Ok(SmoothingBound {
            bound: 0.0,
            big_m: 0.0,
            delta: 0.0,
            hellinger: 0.0,
        });
    }
    let c_k = 2.0 * (k + 0.5).exp();
    let big_m = k / (k + beta) * (c_k / eps).ln();
    let delta = (big_m.powf(k + 0.5) * eps).powf(1.0 / (k + beta));
    let bound = big_m.powf(k + 0.5) * eps * delta.powf(-beta) + (-big_m).exp() + delta.powf(k);
    Ok(SmoothingBound {
        bound,
        big_m,
        delta,
        hellinger: eps,
    })
}

/// The mixture-level discrepancy `W^{k+2} (log 1/W)^{-(k+1/2)}` with
/// `W = W_k(G, G')`, valid (monotone in `W`) only while `W < 1/e`.
pub fn contraction_discrepancy(p: &MixtureDensity, q: &MixtureDensity, k: f64) -> Result<f64> {
    let w = wasserstein_1d(&p.mixing, &q.mixing, k)?;
    if w == 0.0 {
        return Ok(0.0);
    }
    if w >= std::f64::consts::E.recip() {
        return Err(Error::invalid(format!(
            "W_k = {w:.6} is at or above 1/e; outside the monotone regime"
        )));
    }
    Ok(w.powf(k + 2.0) * (1.0 / w).ln().powf(-(k + 0.5)))
}

/// Assembles a serializable report for a named metric.
pub fn report(metric: &str, value: f64, method: &str, tolerance: f64) -> DistanceReport {
    DistanceReport {
        metric: metric.to_string(),
        value,
        method: method.to_string(),
        tolerance,
    }
}
