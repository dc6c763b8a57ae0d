//! Adaptive Gauss-Kronrod quadrature.
//!
//! One-dimensional integration built on the 15-point Kronrod extension of
//! 7-point Gauss (G7-K15). The integrand may return a small fixed-size
//! vector so related integrals (for example KL and its second moment) share
//! one set of density evaluations. Segments are refined worst-first until
//! the summed error estimate meets the target or the evaluation budget is
//! exhausted. Callers pass kink locations (mixture atoms) as breakpoints so
//! the initial segmentation respects non-smooth points.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Kronrod abscissae on [0, 1] side of the symmetric rule (QUADPACK values).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

/// Kronrod weights aligned with [`XGK`].
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss-7 weights, aligned with the odd-indexed entries of [`XGK`].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Default cap on integrand evaluations for one integral.
pub const DEFAULT_MAX_EVALS: usize = 2_000_000;

/// Outcome of an adaptive integration (never an error by itself; callers
/// decide whether the achieved estimate is acceptable).
#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome<const N: usize> {
    /// Component-wise integral values.
    pub value: [f64; N],
    /// Summed per-segment error estimates (worst component per segment).
    pub error_estimate: f64,
    /// Number of integrand evaluations used.
    pub evals: usize,
    /// Whether the target tolerance was met within budget.
    pub converged: bool,
}

struct Segment<const N: usize> {
    lo: f64,
    hi: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn gk15<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, lo: f64, hi: f64) -> Segment<N> {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for n in 0..N {
        kron[n] = WGK[7] * fc[n];
        gauss[n] = WG[3] * fc[n];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for n in 0..N {
            let pair = f1[n] + f2[n];
            kron[n] += WGK[j] * pair;
            if j % 2 == 1 {
                gauss[n] += WG[(j - 1) / 2] * pair;
            }
        }
    }
    let mut err: f64 = 0.0;
    let mut value = [0.0; N];
    for n in 0..N {
        value[n] = kron[n] * h;
        err = err.max(((kron[n] - gauss[n]) * h).abs());
    }
    Segment {
        lo,
        hi,
        value,
        error: err,
    }
}

/// Integrates a vector-valued function over `[lo, hi]`, splitting initially
/// at each interior breakpoint, then refining worst-first until the summed
/// error estimate is at most `target` or `max_evals` is spent.
pub fn adaptive_vec<const N: usize, F: FnMut(f64) -> [f64; N]>(
    mut f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    target: f64,
    max_evals: usize,
) -> QuadOutcome<N> {
    assert!(lo < hi, "empty integration window");
    let mut edges = vec![lo];
    edges.extend(breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
    edges.push(hi);
    edges.sort_by(|x, y| x.partial_cmp(y).expect("finite edges"));
    edges.dedup();

    let mut evals = 0usize;
    let mut heap: BinaryHeap<Segment<N>> = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(gk15(&mut f, w[0], w[1]));
        evals += 15;
    }

    let total_err = |h: &BinaryHeap<Segment<N>>| h.iter().map(|s| s.error).sum::<f64>();
    let width_floor = (hi - lo) * 1e-15;

    let mut stuck = 0usize;
    while total_err(&heap) > target && evals + 30 <= max_evals {
        let worst = heap.pop().expect("non-empty heap");
        if worst.hi - worst.lo <= width_floor {
            // Cannot split further in double precision; re-insert and stop
            // unless other segments still dominate the error.
            stuck += 1;
            heap.push(worst);
            if stuck > heap.len() {
                break;
            }
            continue;
        }
        stuck = 0;
        let mid = 0.5 * (worst.lo + worst.hi);
        heap.push(gk15(&mut f, worst.lo, mid));
        heap.push(gk15(&mut f, mid, worst.hi));
        evals += 30;
    }

    let mut value = [0.0; N];
    for seg in heap.iter() {
        for n in 0..N {
            value[n] += seg.value[n];
        }
    }
    let error_estimate = total_err(&heap);
    QuadOutcome {
        value,
        error_estimate,
        evals,
        converged: error_estimate <= target,
    }
}

/// Scalar convenience wrapper around [`adaptive_vec`].
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    target: f64,
    max_evals: usize,
) -> QuadOutcome<1> {
    adaptive_vec(move |x| [f(x)], lo, hi, breakpoints, target, max_evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let out = adaptive(|x| x * x, 0.0, 1.0, &[], 1e-12, 10_000);
        assert!((out.value[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!(out.converged);
    }

    #[test]
    fn exponential_matches_closed_form() {
        let out = adaptive(|x| x.exp(), 0.0, 1.0, &[], 1e-13, 10_000);
        assert!((out.value[0] - (std::f64::consts::E - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn kink_handled_by_refinement() {
        let out = adaptive(|x: f64| x.abs(), -1.0, 1.0, &[], 1e-12, 100_000);
        assert!((out.value[0] - 1.0).abs() < 1e-11, "value {}", out.value[0]);
    }

    #[test]
    fn breakpoint_makes_kink_exact() {
        let out = adaptive(|x: f64| x.abs(), -1.0, 1.0, &[0.0], 1e-14, 1_000);
        assert!((out.value[0] - 1.0).abs() < 1e-15);
        assert_eq!(out.evals, 30);
    }

    #[test]
    fn laplace_density_normalizes() {
        let out = adaptive(
            |x: f64| 0.5 * (-x.abs()).exp(),
            -41.0,
            41.0,
            &[0.0],
            1e-12,
            200_000,
        );
        assert!((out.value[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_spike_needs_adaptivity() {
        // Gaussian with sigma = 1e-3 on [-1, 1]: integral is essentially 1.
        let s = 1e-3;
        let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
        let out = adaptive(
            |x: f64| norm * (-0.5 * (x / s) * (x / s)).exp(),
            -1.0,
            1.0,
            &[],
            1e-10,
            500_000,
        );
        assert!((out.value[0] - 1.0).abs() < 1e-9, "value {}", out.value[0]);
    }

    #[test]
    fn vector_components_integrate_together() {
        let out = adaptive_vec(|x: f64| [1.0, x, x * x], 0.0, 2.0, &[], 1e-12, 10_000);
        assert!((out.value[0] - 2.0).abs() < 1e-13);
        assert!((out.value[1] - 2.0).abs() < 1e-13);
        assert!((out.value[2] - 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_reports_nonconvergence() {
        let out = adaptive(|x: f64| (1e6 * x).sin().abs(), 0.0, 1.0, &[], 1e-14, 600);
        assert!(!out.converged);
        assert!(out.evals <= 600);
    }
}
