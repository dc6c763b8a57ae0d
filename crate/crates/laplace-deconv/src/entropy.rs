//! Explicit covering nets with certified radii.
//!
//! Three families:
//!
//! * [`simplex_net`]: an l1-net over the probability simplex, the lattice of
//!   weight vectors with denominator `T = ceil(2N/eps)`. Largest-remainder
//!   rounding sends any simplex point to a lattice point within l1-distance
//!   `N/T <= eps/2`, so the declared radius `eps` holds with slack.
//! * [`wasserstein_net`]: measures on `[-a, a]` under `W_k`. A support grid
//!   of radius `eps` crossed with a simplex net of l1-radius `(eps/2a)^k`;
//!   the coupling bound `W_k <= max displacement + 2a |dw|_1^{1/k}` certifies
//!   total radius `2 eps`.
//! * [`mixture_net`]: mixture densities with at most `N(eps)` atoms under
//!   Hellinger or L_q. Support and weight radii are split so that the
//!   perturbation bounds (derivative norm for L_q; the shift bound
//!   `h^2 <= 2 t^2` plus the envelope-ratio bound for Hellinger) certify
//!   radius `eps`.
//!
//! Net sizes explode quickly, so elements are streamed, never stored;
//! [`verify_cover`] locates a covering element by structure-aware rounding
//! instead of enumeration. Small nets can be materialized explicitly, which
//! is also how the negative-control path (thinned nets that must fail) is
//! exercised. `*_ln_size` planners report log-cardinalities without
//! constructing anything, so growth fits can extend past the enumeration
//! guard.

use crate::distances::{hellinger, lq_distance, wasserstein_1d};
use crate::kernels::{Kernel, MixtureDensity};
use crate::measures::DiscreteMeasure;
use crate::stats::{choose_u128, ln_choose, ols_fit};
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;

/// Enumeration guard: nets whose log-cardinality exceeds this (~7e10
/// elements) are refused.
pub const LN_SIZE_GUARD: f64 = 25.0;

/// Which metric a net covers its class in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetMetric {
    /// l1 distance between weight vectors on the simplex.
    L1Simplex,
    /// Wasserstein of the given order between measures.
    Wasserstein { k: f64 },
    /// L_q distance between induced mixture densities.
    Lq { q: f64 },
    /// Hellinger distance between induced mixture densities.
    Hellinger,
}

impl NetMetric {
    pub fn tag(&self) -> String {
        match self {
            NetMetric::L1Simplex => "l1-simplex".to_string(),
            NetMetric::Wasserstein { k } => format!("wasserstein({k})"),
            NetMetric::Lq { q } => format!("lq({q})"),
            NetMetric::Hellinger => "hellinger".to_string(),
        }
    }
}

/// Grid steps and budgets behind a net construction.
#[derive(Debug, Clone, Copy)]
pub struct ConstructionParams {
    /// Spacing of the support grid (measure nets only).
    pub support_grid_step: Option<f64>,
    /// l1 radius of the weight lattice.
    pub weight_net_radius: f64,
    /// Number of support slots (simplex dimension).
    pub n_support: usize,
}

enum NetKind {
    Simplex {
        dim: usize,
        steps: u64,
    },
    Wasserstein {
        a: f64,
        k: f64,
        support: Vec<f64>,
        weight_steps: u64,
    },
    Mixture {
        a: f64,
        kernel: Kernel,
        support: Vec<f64>,
        n_slots: usize,
        weight_steps: u64,
    },
    ExplicitWeights(Vec<Vec<f64>>),
    ExplicitMeasures {
        a: f64,
        kernel: Option<Kernel>,
        items: Vec<DiscreteMeasure>,
    },
}

/// A covering net: declared metric and radius, construction parameters, and
/// a (lazy) element set.
pub struct NetDescriptor {
    pub metric: NetMetric,
    pub radius: f64,
    pub params: ConstructionParams,
    kind: NetKind,
}

/// A coverage probe: a weight vector for simplex nets, a measure otherwise.
#[derive(Debug, Clone)]
pub enum Probe {
    Weights(Vec<f64>),
    Measure(DiscreteMeasure),
}

/// Outcome of [`verify_cover`].
#[derive(Debug, Clone)]
pub struct CoverReport {
    pub radius: f64,
    pub max_distance: f64,
    pub pass: bool,
    /// Distance from each probe to its covering element.
    pub distances: Vec<f64>,
    /// Ten equal-width bins over `[0, max(radius, max_distance)]`:
    /// (bin upper edge, count).
    pub histogram: Vec<(f64, usize)>,
    /// Indices of probes that ended up farther than the declared radius.
    pub witnesses: Vec<usize>,
}

// ---------------------------------------------------------------------------
// Lattice iteration

/// All vectors of `n` nonnegative integers summing to `total`, lexicographic
/// from `[total, 0, ..., 0]`.
pub struct Compositions {
    n: usize,
    total: u64,
    state: Option<Vec<u64>>,
}

impl Compositions {
    pub fn new(n: usize, total: u64) -> Self {
        assert!(n >= 1);
        let mut first = vec![0u64; n];
        first[0] = total;
        Compositions {
            n,
            total,
            state: Some(first),
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let state = self.state.as_mut()?;
        let out = state.clone();
        if self.n == 1 || state[self.n - 1] == self.total {
            self.state = None;
            return Some(out);
        }
        // Decrement the rightmost positive entry before the last slot and
        // dump everything to its right into the next slot.
        let j = (0..self.n - 1).rev().find(|&j| state[j] > 0).expect("non-final state");
        state[j] -= 1;
        let moved: u64 = state[j + 1..].iter().sum::<u64>() + 1;
        for v in state[j + 1..].iter_mut() {
            *v = 0;
        }
        state[j + 1] = moved;
        Some(out)
    }
}

/// Nondecreasing index tuples `0 <= i_1 <= ... <= i_n < m` (multisets).
struct Multisets {
    m: usize,
    state: Option<Vec<usize>>,
}

impl Multisets {
    fn new(m: usize, n: usize) -> Self {
        assert!(m >= 1 && n >= 1);
        Multisets {
            m,
            state: Some(vec![0; n]),
        }
    }
}

impl Iterator for Multisets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let state = self.state.as_mut()?;
        let out = state.clone();
        let n = state.len();
        let mut j = n;
        while j > 0 && state[j - 1] == self.m - 1 {
            j -= 1;
        }
        if j == 0 {
            self.state = None;
        } else {
            let v = state[j - 1] + 1;
            for s in state[j - 1..].iter_mut() {
                *s = v;
            }
        }
        Some(out)
    }
}

// ---------------------------------------------------------------------------
// Rounding (the covering certificates)

/// Largest-remainder rounding of a simplex point onto the lattice with
/// denominator `steps`; the result sums to `steps` and each coordinate is
/// off by at most `1/steps`, so the l1 error is at most `dim/steps`.
fn round_to_lattice(w: &[f64], steps: u64) -> Vec<u64> {
    let t = steps as f64;
    let mut floors: Vec<u64> = w.iter().map(|&x| (x * t).floor().max(0.0) as u64).collect();
    let assigned: u64 = floors.iter().sum();
    let deficit = steps.saturating_sub(assigned);
    let mut rema: Vec<(usize, f64)> = w
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, x * t - (x * t).floor()))
        .collect();
    rema.sort_by(|p, q| q.1.partial_cmp(&p.1).unwrap_or(std::cmp::Ordering::Equal));
    for &(i, _) in rema.iter().take(deficit as usize) {
        floors[i] += 1;
    }
    // Guard against upstream drift pushing the total past `steps`.
    let mut total: u64 = floors.iter().sum();
    let mut idx = 0;
    while total > steps {
        if floors[idx] > 0 {
            floors[idx] -= 1;
            total -= 1;
        }
        idx = (idx + 1) % floors.len();
    }
    floors
}

fn lattice_to_weights(counts: &[u64], steps: u64) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / steps as f64).collect()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Nearest grid index with ties toward the smaller grid point.
fn nearest_grid_index(grid: &[f64], z: f64) -> usize {
    let m = grid.len();
    if m == 1 {
        return 0;
    }
    let step = grid[1] - grid[0];
    let raw = ((z - grid[0]) / step - 0.5).ceil();
    (raw.max(0.0) as usize).min(m - 1)
}

/// Centered uniform grid of `m` points covering `[-a, a]` with radius `a/m`.
fn centered_grid(a: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| -a + (2 * i + 1) as f64 * a / m as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Constructors and planners

struct SimplexPlan {
    steps: u64,
    ln_size: f64,
}

fn simplex_plan(n: usize, eps: f64) -> SimplexPlan {
    let steps = (2.0 * n as f64 / eps).ceil() as u64;
    SimplexPlan {
        steps,
        ln_size: ln_choose(steps + n as u64 - 1, n as u64 - 1),
    }
}

/// An l1-net over the `n`-dimensional probability simplex with radius `eps`.
///
/// Refused when `n ln(5/eps)` exceeds [`LN_SIZE_GUARD`] (the size bound
/// `(5/eps)^n` would pass ~7e10 elements).
pub fn simplex_net(n: usize, eps: f64) -> Result<NetDescriptor> {
    if n < 1 {
        return Err(Error::invalid("simplex dimension must be at least 1"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("simplex net radius {eps} outside (0, 1]")));
    }
    let bound_ln = n as f64 * (5.0 / eps).ln();
    if bound_ln > LN_SIZE_GUARD {
        return Err(Error::NetTooLarge {
            log_size: bound_ln,
            guard: LN_SIZE_GUARD,
        });
    }
    let plan = simplex_plan(n, eps);
    Ok(NetDescriptor {
        metric: NetMetric::L1Simplex,
        radius: eps,
        params: ConstructionParams {
            support_grid_step: None,
            weight_net_radius: eps,
            n_support: n,
        },
        kind: NetKind::Simplex {
            dim: n,
            steps: plan.steps,
        },
    })
}

/// Log-cardinality of [`simplex_net`] without constructing it.
pub fn simplex_net_ln_size(n: usize, eps: f64) -> f64 {
    simplex_plan(n, eps).ln_size
}

struct WassersteinPlan {
    n_support: usize,
    rho: f64,
    weight_steps: u64,
    ln_size: f64,
}

fn wasserstein_plan(a: f64, k: f64, eps: f64) -> WassersteinPlan {
    let n_support = (a / eps).ceil().max(1.0) as usize;
    let rho = (eps / (2.0 * a)).powf(k).min(1.0);
    let weight_steps = (2.0 * n_support as f64 / rho).ceil() as u64;
    WassersteinPlan {
        n_support,
        rho,
        weight_steps,
        ln_size: ln_choose(weight_steps + n_support as u64 - 1, n_support as u64 - 1),
    }
}

/// A `W_k` net of declared radius `2 eps` over all discrete measures on
/// `[-a, a]`: support grid of radius `eps`, weight lattice of l1-radius
/// `(eps/2a)^k`.
pub fn wasserstein_net(a: f64, k: f64, eps: f64) -> Result<NetDescriptor> {
    if !(a > 0.0) {
        return Err(Error::invalid("support halfwidth must be positive"));
    }
    if !(k >= 1.0) {
        return Err(Error::invalid(format!("order {k} below 1")));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    let plan = wasserstein_plan(a, k, eps);
    if plan.ln_size > LN_SIZE_GUARD {
        return Err(Error::NetTooLarge {
            log_size: plan.ln_size,
            guard: LN_SIZE_GUARD,
        });
    }
    let support = centered_grid(a, plan.n_support);
    Ok(NetDescriptor {
        metric: NetMetric::Wasserstein { k },
        radius: 2.0 * eps,
        params: ConstructionParams {
            support_grid_step: Some(2.0 * a / plan.n_support as f64),
            weight_net_radius: plan.rho,
            n_support: plan.n_support,
        },
        kind: NetKind::Wasserstein {
            a,
            k,
            support,
            weight_steps: plan.weight_steps,
        },
    })
}

/// Log-cardinality of [`wasserstein_net`] without the enumeration guard.
pub fn wasserstein_net_ln_size(a: f64, k: f64, eps: f64) -> f64 {
    wasserstein_plan(a, k, eps).ln_size
}

struct MixturePlan {
    n_slots: usize,
    grid_m: usize,
    r_weight: f64,
    weight_steps: u64,
    ln_size: f64,
}

fn mixture_plan(a: f64, kernel: &Kernel, metric: &NetMetric, eps: f64) -> Result<MixturePlan> {
    let (n_slots, r_theta, r_weight) = match *metric {
        NetMetric::Hellinger => {
            if !matches!(kernel, Kernel::Laplace) {
                return Err(Error::invalid(
                    "Hellinger mixture nets are certified for the Laplace kernel only",
                ));
            }
            // Shift bound h <= sqrt(2) r_theta; weight bound
            // h <= (e^a / sqrt 2) |dw|_1 via the tail envelopes.
            let n = (eps.powf(-2.0 / 3.0)).ceil() as usize;
            let r_theta = eps / (2.0 * 2.0f64.sqrt());
            let r_weight = eps * 2.0f64.sqrt() / (2.0 * a.exp());
            (n, r_theta, r_weight)
        }
        NetMetric::Lq { q } => {
            if !(q >= 1.0) || !q.is_finite() {
                return Err(Error::invalid(format!("L_q net order {q} invalid")));
            }
            let n = match kernel.smoothness() {
                crate::kernels::Smoothness::OrdinarySmooth { beta } => {
                    let exponent = 1.0 / (beta - 1.0 + 1.0 / q);
                    (2.0 * eps.powf(-exponent)).ceil() as usize
                }
                crate::kernels::Smoothness::Supersmooth { beta } => {
                    let power = (1.0 / beta).max(1.0);
                    (2.0 * (1.0 / eps).ln().powf(power)).ceil().max(1.0) as usize
                }
            };
            let r_theta = eps / (2.0 * kernel.derivative_lq_norm(q));
            let r_weight = eps / (2.0 * kernel.lq_norm(q));
            (n, r_theta, r_weight)
        }
        _ => {
            return Err(Error::invalid(
                "mixture nets cover Hellinger or L_q metrics only",
            ))
        }
    };
    let grid_m = (a / r_theta).ceil().max(1.0) as usize;
    let weight_steps = (2.0 * n_slots as f64 / r_weight).ceil() as u64;
    let ln_atoms = ln_choose(grid_m as u64 + n_slots as u64 - 1, n_slots as u64);
    let ln_weights = ln_choose(weight_steps + n_slots as u64 - 1, n_slots as u64 - 1);
    Ok(MixturePlan {
        n_slots,
        grid_m,
        r_weight,
        weight_steps,
        ln_size: ln_atoms + ln_weights,
    })
}

/// A net of declared radius `eps` over mixtures `kernel * G` where `G` has
/// at most the metric's budget `N(eps)` atoms on `[-a, a]`.
pub fn mixture_net(a: f64, kernel: Kernel, metric: NetMetric, eps: f64) -> Result<NetDescriptor> {
    if !(a > 0.0) {
        return Err(Error::invalid("support halfwidth must be positive"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("radius {eps} outside (0, 1)")));
    }
    let plan = mixture_plan(a, &kernel, &metric, eps)?;
    if plan.ln_size > LN_SIZE_GUARD {
        return Err(Error::NetTooLarge {
            log_size: plan.ln_size,
            guard: LN_SIZE_GUARD,
        });
    }
    let support = centered_grid(a, plan.grid_m);
    Ok(NetDescriptor {
        metric,
        radius: eps,
        params: ConstructionParams {
            support_grid_step: Some(2.0 * a / plan.grid_m as f64),
            weight_net_radius: plan.r_weight,
            n_support: plan.n_slots,
        },
        kind: NetKind::Mixture {
            a,
            kernel,
            support,
            n_slots: plan.n_slots,
            weight_steps: plan.weight_steps,
        },
    })
}

/// Log-cardinality of [`mixture_net`] without the enumeration guard.
pub fn mixture_net_ln_size(a: f64, kernel: &Kernel, metric: &NetMetric, eps: f64) -> Result<f64> {
    Ok(mixture_plan(a, kernel, metric, eps)?.ln_size)
}

/// Atom budget `N(eps)` a mixture net uses for the given kernel and metric.
pub fn mixture_net_budget(a: f64, kernel: &Kernel, metric: &NetMetric, eps: f64) -> Result<usize> {
    Ok(mixture_plan(a, kernel, metric, eps)?.n_slots)
}

// ---------------------------------------------------------------------------
// Descriptor methods

impl NetDescriptor {
    /// Natural log of the element count.
    pub fn ln_size(&self) -> f64 {
        match &self.kind {
            NetKind::Simplex { dim, steps } => {
                ln_choose(steps + *dim as u64 - 1, *dim as u64 - 1)
            }
            NetKind::Wasserstein {
                support,
                weight_steps,
                ..
            } => ln_choose(
                weight_steps + support.len() as u64 - 1,
                support.len() as u64 - 1,
            ),
            NetKind::Mixture {
                support,
                n_slots,
                weight_steps,
                ..
            } => {
                ln_choose(support.len() as u64 + *n_slots as u64 - 1, *n_slots as u64)
                    + ln_choose(weight_steps + *n_slots as u64 - 1, *n_slots as u64 - 1)
            }
            NetKind::ExplicitWeights(items) => (items.len() as f64).ln(),
            NetKind::ExplicitMeasures { items, .. } => (items.len() as f64).ln(),
        }
    }

    /// Exact element count when it fits a u128.
    pub fn size(&self) -> Option<u128> {
        match &self.kind {
            NetKind::Simplex { dim, steps } => {
                choose_u128(steps + *dim as u64 - 1, *dim as u64 - 1)
            }
            NetKind::Wasserstein {
                support,
                weight_steps,
                ..
            } => choose_u128(
                weight_steps + support.len() as u64 - 1,
                support.len() as u64 - 1,
            ),
            NetKind::Mixture {
                support,
                n_slots,
                weight_steps,
                ..
            } => {
                let atoms =
                    choose_u128(support.len() as u64 + *n_slots as u64 - 1, *n_slots as u64)?;
                let weights = choose_u128(weight_steps + *n_slots as u64 - 1, *n_slots as u64 - 1)?;
                atoms.checked_mul(weights)
            }
            NetKind::ExplicitWeights(items) => Some(items.len() as u128),
            NetKind::ExplicitMeasures { items, .. } => Some(items.len() as u128),
        }
    }

    /// Streams simplex-net elements as weight vectors.
    pub fn weight_elements(&self) -> Option<Box<dyn Iterator<Item = Vec<f64>> + '_>> {
        match &self.kind {
            NetKind::Simplex { dim, steps } => {
                let steps = *steps;
                Some(Box::new(
                    Compositions::new(*dim, steps).map(move |c| lattice_to_weights(&c, steps)),
                ))
            }
            NetKind::ExplicitWeights(items) => Some(Box::new(items.iter().cloned())),
            _ => None,
        }
    }

    /// Streams measure-net elements.
    pub fn measure_elements(&self) -> Option<Box<dyn Iterator<Item = DiscreteMeasure> + '_>> {
        match &self.kind {
            NetKind::Wasserstein {
                a,
                support,
                weight_steps,
                ..
            } => {
                let (a, steps) = (*a, *weight_steps);
                Some(Box::new(Compositions::new(support.len(), steps).map(
                    move |c| {
                        let w = lattice_to_weights(&c, steps);
                        DiscreteMeasure::new(support.clone(), w, a).expect("lattice weights valid")
                    },
                )))
            }
            NetKind::Mixture {
                a,
                support,
                n_slots,
                weight_steps,
                ..
            } => {
                let (a, steps, n) = (*a, *weight_steps, *n_slots);
                let iter = Multisets::new(support.len(), n).flat_map(move |assignment| {
                    let atoms: Vec<f64> = assignment.iter().map(|&i| support[i]).collect();
                    Compositions::new(n, steps).map(move |c| {
                        let w = lattice_to_weights(&c, steps);
                        DiscreteMeasure::new(atoms.clone(), w, a).expect("lattice weights valid")
                    })
                });
                Some(Box::new(iter))
            }
            NetKind::ExplicitMeasures { items, .. } => Some(Box::new(items.iter().cloned())),
            _ => None,
        }
    }

    /// Collects the net into an explicit element list (exhaustive-search
    /// verification, thinning). Refuses nets larger than `cap`.
    pub fn materialize(&self, cap: usize) -> Result<NetDescriptor> {
        let size = self.size().unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::NetTooLarge {
                log_size: self.ln_size(),
                guard: (cap as f64).ln(),
            });
        }
        let kind = if let Some(iter) = self.weight_elements() {
            NetKind::ExplicitWeights(iter.collect())
        } else if let Some(iter) = self.measure_elements() {
            let (a, kernel) = match &self.kind {
                NetKind::Wasserstein { a, .. } => (*a, None),
                NetKind::Mixture { a, kernel, .. } => (*a, Some(*kernel)),
                NetKind::ExplicitMeasures { a, kernel, .. } => (*a, *kernel),
                _ => unreachable!(),
            };
            NetKind::ExplicitMeasures {
                a,
                kernel,
                items: iter.collect(),
            }
        } else {
            unreachable!("every kind streams one element type")
        };
        Ok(NetDescriptor {
            metric: self.metric,
            radius: self.radius,
            params: self.params,
            kind,
        })
    }

    /// Keeps every `keep_every`-th element of a materialized net (negative
    /// controls: a sufficiently thinned net must fail verification).
    pub fn thin(&self, keep_every: usize) -> Result<NetDescriptor> {
        if keep_every < 2 {
            return Err(Error::invalid("thinning factor must be at least 2"));
        }
        let kind = match &self.kind {
            NetKind::ExplicitWeights(items) => NetKind::ExplicitWeights(
                items.iter().step_by(keep_every).cloned().collect(),
            ),
            NetKind::ExplicitMeasures { a, kernel, items } => NetKind::ExplicitMeasures {
                a: *a,
                kernel: *kernel,
                items: items.iter().step_by(keep_every).cloned().collect(),
            },
            _ => return Err(Error::invalid("thin requires a materialized net")),
        };
        Ok(NetDescriptor {
            metric: self.metric,
            radius: self.radius,
            params: self.params,
            kind,
        })
    }

    /// The net element designated to cover `probe` (by rounding for lattice
    /// nets, by exhaustive search for explicit nets), with its distance.
    pub fn covering_element(&self, probe: &Probe) -> Result<(Probe, f64)> {
        match (&self.kind, probe) {
            (NetKind::Simplex { dim, steps }, Probe::Weights(w)) => {
                if w.len() != *dim {
                    return Err(Error::invalid(format!(
                        "probe dimension {} does not match net dimension {dim}",
                        w.len()
                    )));
                }
                let rounded = lattice_to_weights(&round_to_lattice(w, *steps), *steps);
                let d = l1(w, &rounded);
                Ok((Probe::Weights(rounded), d))
            }
            (
                NetKind::Wasserstein {
                    a,
                    k,
                    support,
                    weight_steps,
                },
                Probe::Measure(g),
            ) => {
                let mut v = vec![0.0; support.len()];
                for (&z, &w) in g.atoms().iter().zip(g.weights()) {
                    v[nearest_grid_index(support, z)] += w;
                }
                let rounded = lattice_to_weights(&round_to_lattice(&v, *weight_steps), *weight_steps);
                let element = DiscreteMeasure::new(support.clone(), rounded, *a)?;
                let d = wasserstein_1d(g, &element, *k)?;
                Ok((Probe::Measure(element), d))
            }
            (
                NetKind::Mixture {
                    a,
                    kernel,
                    support,
                    n_slots,
                    weight_steps,
                    ..
                },
                Probe::Measure(g),
            ) => {
                if g.atom_count() > *n_slots {
                    return Err(Error::invalid(format!(
                        "probe has {} atoms, class allows {n_slots}",
                        g.atom_count()
                    )));
                }
                // Atoms to nearest grid point slot-by-slot; unused slots sit
                // at the first grid point with zero weight.
                let mut atoms = Vec::with_capacity(*n_slots);
                let mut weights = Vec::with_capacity(*n_slots);
                for (&z, &w) in g.atoms().iter().zip(g.weights()) {
                    atoms.push(support[nearest_grid_index(support, z)]);
                    weights.push(w);
                }
                while atoms.len() < *n_slots {
                    atoms.push(support[0]);
                    weights.push(0.0);
                }
                let rounded =
                    lattice_to_weights(&round_to_lattice(&weights, *weight_steps), *weight_steps);
                let element = DiscreteMeasure::new(atoms, rounded, *a)?;
                let pm = MixtureDensity::new(*kernel, g.clone());
                let pe = MixtureDensity::new(*kernel, element.clone());
                let d = match self.metric {
                    NetMetric::Hellinger => hellinger(&pm, &pe)?,
                    NetMetric::Lq { q } => lq_distance(&pm, &pe, q)?,
                    _ => unreachable!("mixture nets carry Hellinger or Lq metrics"),
                };
                Ok((Probe::Measure(element), d))
            }
            (NetKind::ExplicitWeights(items), Probe::Weights(w)) => {
                let mut best: Option<(usize, f64)> = None;
                for (i, e) in items.iter().enumerate() {
                    if e.len() != w.len() {
                        return Err(Error::invalid("probe dimension mismatch"));
                    }
                    let d = l1(w, e);
                    if best.map_or(true, |(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
                let (i, d) = best.ok_or_else(|| Error::invalid("empty net"))?;
                Ok((Probe::Weights(items[i].clone()), d))
            }
            (NetKind::ExplicitMeasures { kernel, items, .. }, Probe::Measure(g)) => {
                let mut best: Option<(usize, f64)> = None;
                for (i, e) in items.iter().enumerate() {
                    let d = match self.metric {
                        NetMetric::Wasserstein { k } => wasserstein_1d(g, e, k)?,
                        NetMetric::Hellinger => {
                            let kern = kernel.ok_or_else(|| Error::invalid("net lacks kernel"))?;
                            hellinger(
                                &MixtureDensity::new(kern, g.clone()),
                                &MixtureDensity::new(kern, e.clone()),
                            )?
                        }
                        NetMetric::Lq { q } => {
                            let kern = kernel.ok_or_else(|| Error::invalid("net lacks kernel"))?;
                            lq_distance(
                                &MixtureDensity::new(kern, g.clone()),
                                &MixtureDensity::new(kern, e.clone()),
                                q,
                            )?
                        }
                        NetMetric::L1Simplex => {
                            return Err(Error::invalid("simplex metric over measures"))
                        }
                    };
                    if best.map_or(true, |(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
                let (i, d) = best.ok_or_else(|| Error::invalid("empty net"))?;
                Ok((Probe::Measure(items[i].clone()), d))
            }
            _ => Err(Error::invalid("probe type does not match net class")),
        }
    }
}

// ---------------------------------------------------------------------------
// Verification and probes

/// Checks the declared covering radius on the given probes. Passes iff every
/// probe sits within the radius of its covering element.
pub fn verify_cover(net: &NetDescriptor, probes: &[Probe]) -> Result<CoverReport> {
    let distances: Vec<f64> = probes
        .par_iter()
        .map(|p| net.covering_element(p).map(|(_, d)| d))
        .collect::<Result<Vec<f64>>>()?;
    let max_distance = distances.iter().cloned().fold(0.0f64, f64::max);
    let witnesses: Vec<usize> = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > net.radius)
        .map(|(i, _)| i)
        .collect();
    let hi = net.radius.max(max_distance) * 1.0000001;
    let mut histogram: Vec<(f64, usize)> = (1..=10)
        .map(|b| (hi * b as f64 / 10.0, 0usize))
        .collect();
    for &d in &distances {
        let bin = ((d / hi * 10.0).floor() as usize).min(9);
        histogram[bin].1 += 1;
    }
    Ok(CoverReport {
        radius: net.radius,
        max_distance,
        pass: witnesses.is_empty(),
        distances,
        histogram,
        witnesses,
    })
}

/// One random measure: `n_atoms` locations i.i.d. uniform on `[-a, a]`,
/// weights Dirichlet(1, ..., 1).
pub fn sample_probe_measure(
    rng: &mut impl Rng,
    n_atoms: usize,
    a: f64,
) -> Result<DiscreteMeasure> {
    if n_atoms == 0 {
        return Err(Error::invalid("probe needs at least one atom"));
    }
    let atoms: Vec<f64> = (0..n_atoms).map(|_| a * (2.0 * rng.gen::<f64>() - 1.0)).collect();
    let mut weights: Vec<f64> = (0..n_atoms)
        .map(|_| -(1.0 - rng.gen::<f64>()).max(f64::MIN_POSITIVE).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        weights = vec![1.0 / n_atoms as f64; n_atoms];
    } else {
        for w in &mut weights {
            *w /= total;
        }
    }
    DiscreteMeasure::new(atoms, weights, a)
}

/// Dirichlet(1, ..., 1) draw on the `n`-simplex.
pub fn sample_simplex_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.gen::<f64>()).max(f64::MIN_POSITIVE).ln())
        .collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / n as f64; n];
    }
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Draws `count` probes from the net's declared class.
pub fn sample_probes(net: &NetDescriptor, count: usize, rng: &mut impl Rng) -> Vec<Probe> {
    (0..count)
        .map(|_| match &net.kind {
            NetKind::Simplex { dim, .. } => Probe::Weights(sample_simplex_point(rng, *dim)),
            NetKind::ExplicitWeights(items) => {
                let dim = items.first().map_or(1, |e| e.len());
                Probe::Weights(sample_simplex_point(rng, dim))
            }
            NetKind::Wasserstein { a, .. } => {
                let n = rng.gen_range(1..=12);
                Probe::Measure(sample_probe_measure(rng, n, *a).expect("valid probe"))
            }
            NetKind::Mixture { a, n_slots, .. } => {
                let n = rng.gen_range(1..=*n_slots);
                Probe::Measure(sample_probe_measure(rng, n, *a).expect("valid probe"))
            }
            NetKind::ExplicitMeasures { a, .. } => {
                let n = rng.gen_range(1..=4);
                Probe::Measure(sample_probe_measure(rng, n, *a).expect("valid probe"))
            }
        })
        .collect()
}

/// Fits the exponent `s` in `ln_size ~ c (1/eps)^s log(1/eps)` over a
/// ladder: ordinary least squares of `ln(ln_size / ln(1/eps))` on
/// `ln(1/eps)`, discounting the known log factor.
pub fn growth_exponent(eps: &[f64], ln_sizes: &[f64]) -> Result<f64> {
    if eps.len() != ln_sizes.len() || eps.len() < 3 {
        return Err(Error::invalid("need at least 3 ladder points"));
    }
    let mut xs = Vec::with_capacity(eps.len());
    let mut ys = Vec::with_capacity(eps.len());
    for (&e, &l) in eps.iter().zip(ln_sizes) {
        if !(e > 0.0 && e < 1.0) || !(l > 0.0) {
            return Err(Error::invalid("ladder values outside fit domain"));
        }
        let log_factor = (1.0 / e).ln();
        xs.push(log_factor);
        ys.push((l / log_factor).ln());
    }
    Ok(ols_fit(&xs, &ys)?.slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn compositions_count_and_sum() {
        let all: Vec<_> = Compositions::new(3, 4).collect();
        assert_eq!(all.len(), 15); // C(6, 2)
        assert!(all.iter().all(|c| c.iter().sum::<u64>() == 4));
        let single: Vec<_> = Compositions::new(1, 7).collect();
        assert_eq!(single, vec![vec![7]]);
    }

    #[test]
    fn multisets_count() {
        let all: Vec<_> = Multisets::new(4, 3).collect();
        assert_eq!(all.len(), 20); // C(6, 3)
        assert!(all.iter().all(|m| m.windows(2).all(|w| w[0] <= w[1])));
    }

    #[test]
    fn simplex_net_dimension_one_is_a_point() {
        let net = simplex_net(1, 0.5).unwrap();
        let items: Vec<_> = net.weight_elements().unwrap().collect();
        assert_eq!(items, vec![vec![1.0]]);
    }

    #[test]
    fn simplex_net_covers_random_probes() {
        let net = simplex_net(2, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let probes = sample_probes(&net, 10_000, &mut rng);
        let report = verify_cover(&net, &probes).unwrap();
        assert!(report.pass, "max distance {}", report.max_distance);
    }

    #[test]
    fn simplex_net_size_bound() {
        for (n, eps) in [(3usize, 0.5f64), (3, 0.25)] {
            let net = simplex_net(n, eps).unwrap();
            let size = net.size().unwrap() as f64;
            assert!(
                size <= (5.0 / eps).powi(n as i32),
                "size {size} exceeds bound at n={n}, eps={eps}"
            );
        }
    }

    #[test]
    fn simplex_net_guard_rejects_huge() {
        match simplex_net(20, 0.05) {
            Err(Error::NetTooLarge { log_size, .. }) => assert!(log_size > 25.0),
            Err(other) => panic!("expected size rejection, got {other:?}"),
            Ok(_) => panic!("expected size rejection, got a net"),
        }
    }

    #[test]
    fn exhaustive_search_agrees_with_rounding_on_small_net() {
        let net = simplex_net(2, 0.5).unwrap();
        let explicit = net.materialize(100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let p = Probe::Weights(sample_simplex_point(&mut rng, 2));
            let (_, d_round) = net.covering_element(&p).unwrap();
            let (_, d_exact) = explicit.covering_element(&p).unwrap();
            assert!(d_exact <= d_round + 1e-12);
            assert!(d_round <= net.radius);
        }
    }

    #[test]
    fn thinned_net_fails_with_witnesses() {
        let net = simplex_net(2, 0.5).unwrap();
        let explicit = net.materialize(100).unwrap();
        // Keeping every 8th element leaves only the simplex corners; probes
        // near the middle are farther than the declared radius.
        let thinned = explicit.thin(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let probes = sample_probes(&thinned, 500, &mut rng);
        let report = verify_cover(&thinned, &probes).unwrap();
        assert!(!report.pass);
        assert!(!report.witnesses.is_empty());
        assert!(report.max_distance > thinned.radius);
    }

    #[test]
    fn probe_in_net_has_distance_zero() {
        let net = simplex_net(3, 0.5).unwrap();
        let explicit = net.materialize(10_000).unwrap();
        let element = explicit.weight_elements().unwrap().nth(5).unwrap();
        let (_, d) = explicit.covering_element(&Probe::Weights(element)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn wasserstein_net_trivial_when_radius_huge() {
        let net = wasserstein_net(1.0, 1.0, 2.0).unwrap();
        assert_eq!(net.size(), Some(1));
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let probes = sample_probes(&net, 50, &mut rng);
        let report = verify_cover(&net, &probes).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn wasserstein_net_covers_at_declared_radius() {
        let net = wasserstein_net(1.0, 1.0, 0.4).unwrap();
        assert_eq!(net.size(), Some(496));
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let probes = sample_probes(&net, 200, &mut rng);
        let report = verify_cover(&net, &probes).unwrap();
        assert!(report.pass, "max {} radius {}", report.max_distance, report.radius);
    }

    #[test]
    fn wasserstein_rounding_certificate_matches_coupling_bound() {
        use crate::distances::{coupling_bound, monotone_pairing};
        let net = wasserstein_net(1.0, 2.0, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..25 {
            let g = sample_probe_measure(&mut rng, 6, 1.0).unwrap();
            let (element, d) = net.covering_element(&Probe::Measure(g.clone())).unwrap();
            let Probe::Measure(e) = element else { panic!() };
            // Pad the smaller side and order atoms to compare like with like.
            let pairing = monotone_pairing(&g, &e);
            let cb = coupling_bound(&g, &e, &pairing, 2.0, 2.0).unwrap();
            assert!(d <= cb + 1e-10, "exact W below coupling bound");
            assert!(d <= net.radius + 1e-12);
        }
    }

    #[test]
    fn mixture_net_hellinger_covers() {
        let net = mixture_net(1.0, Kernel::Laplace, NetMetric::Hellinger, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let probes = sample_probes(&net, 60, &mut rng);
        let report = verify_cover(&net, &probes).unwrap();
        assert!(report.pass, "max {} radius {}", report.max_distance, report.radius);

        // Single-atom probe (coarse case).
        let single = DiscreteMeasure::point_mass(0.37, 1.0).unwrap();
        let (_, d) = net.covering_element(&Probe::Measure(single)).unwrap();
        assert!(d <= 0.3);
    }

    #[test]
    fn mixture_net_lq_covers() {
        let net = mixture_net(1.0, Kernel::Laplace, NetMetric::Lq { q: 2.0 }, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let probes = sample_probes(&net, 40, &mut rng);
        let report = verify_cover(&net, &probes).unwrap();
        assert!(report.pass, "max {} radius {}", report.max_distance, report.radius);
    }

    #[test]
    fn mixture_net_rejects_gaussian_hellinger() {
        let k = Kernel::Gaussian { sigma: 1.0 };
        assert!(mixture_net(1.0, k, NetMetric::Hellinger, 0.3).is_err());
    }

    #[test]
    fn probe_class_mismatch_rejected() {
        let net = simplex_net(2, 0.5).unwrap();
        let g = DiscreteMeasure::point_mass(0.0, 1.0).unwrap();
        assert!(net.covering_element(&Probe::Measure(g)).is_err());
        let wnet = wasserstein_net(1.0, 1.0, 0.4).unwrap();
        assert!(wnet
            .covering_element(&Probe::Weights(vec![0.5, 0.5]))
            .is_err());
    }

    // Growth of the Wasserstein net size follows (1/eps) log(1/eps): the
    // discounted exponent lands near 1 on a doubling ladder.
    #[test]
    fn wasserstein_growth_exponent_near_linear() {
        let ladder = [0.2, 0.1, 0.05, 0.025, 0.0125];
        let ln_sizes: Vec<f64> = ladder
            .iter()
            .map(|&e| wasserstein_net_ln_size(1.0, 1.0, e))
            .collect();
        let s = growth_exponent(&ladder, &ln_sizes).unwrap();
        assert!((0.8..=1.2).contains(&s), "exponent {s}");
    }

    // Hellinger mixture-net size follows eps^{-2/3} log(1/eps); the window
    // [0.5, 0.85] brackets the target 2/3.
    #[test]
    fn mixture_growth_exponent_near_two_thirds() {
        let ladder = [0.075, 0.0375, 0.01875, 0.009375];
        let ln_sizes: Vec<f64> = ladder
            .iter()
            .map(|&e| {
                mixture_net_ln_size(1.0, &Kernel::Laplace, &NetMetric::Hellinger, e).unwrap()
            })
            .collect();
        let s = growth_exponent(&ladder, &ln_sizes).unwrap();
        assert!((0.5..=0.85).contains(&s), "exponent {s}");
    }

    #[test]
    fn histogram_counts_all_probes() {
        let net = simplex_net(3, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let probes = sample_probes(&net, 137, &mut rng);
        let report = verify_cover(&net, &probes).unwrap();
        let total: usize = report.histogram.iter().map(|(_, c)| c).sum();
        assert_eq!(total, 137);
        assert_eq!(report.distances.len(), 137);
    }
}
