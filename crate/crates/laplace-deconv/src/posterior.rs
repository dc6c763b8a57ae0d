//! Dirichlet-process mixture machinery: prior simulation, posterior MCMC
//! over the mixing measure, and Monte-Carlo prior-mass estimation.
//!
//! The model: a random measure `G` on `[-a, a]` is drawn from a Dirichlet
//! process with total mass `total_mass` and a base density on `[-a, a]`;
//! latent locations `Z_i ~ G`; observations `X_i = Z_i + e_i` with noise
//! density given by the kernel. [`posterior_chain`] targets the posterior
//! over `G` given the observations with a marginal (Chinese-restaurant)
//! Gibbs sampler. Since the kernel likelihood is not conjugate to any base
//! density here, allocation updates use auxiliary components and location
//! updates use slice sampling; a full `G` is reconstructed per retained
//! draw from the exact Dirichlet-process posterior given the allocations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::distances::kl_divergences;
use crate::kernels::{Kernel, MixtureDensity};
use crate::measures::DiscreteMeasure;
use crate::stats::wilson_interval;
use crate::{Error, Result};

/// Auxiliary components per allocation update. Three keeps the chain mixing
/// well without measurable cost; the value is part of the sampler's
/// determinism contract, so it is fixed rather than configurable.
pub const AUX_COMPONENTS: usize = 3;

/// Smallest admissible stick-breaking truncation.
pub const MIN_TRUNCATION: usize = 50;

/// Base measure density on `[-a, a]`, up to the total-mass factor.
///
/// Both variants are bounded away from zero and infinity on the support,
/// which is what keeps every mixture log-ratio (and hence every KL term
/// computed against a draw) finite. [`BaseDensity::ratio_bound`] reports the
/// max/min ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum BaseDensity {
    /// Constant `1/(2a)` on `[-a, a]`.
    Uniform,
    /// Density proportional to `2 + cos(pi z / a)`: smooth, strictly
    /// positive, with max/min ratio 3. A convenient non-flat test base.
    TiltedCosine,
}

impl BaseDensity {
    /// Normalized density at `z` for support halfwidth `a` (zero outside).
    pub fn density(&self, z: f64, a: f64) -> f64 {
        if z.abs() > a {
            return 0.0;
        }
        match self {
            BaseDensity::Uniform => 0.5 / a,
            BaseDensity::TiltedCosine => {
                (2.0 + (std::f64::consts::PI * z / a).cos()) / (4.0 * a)
            }
        }
    }

    /// `ln` of [`BaseDensity::density`]; negative infinity outside the
    /// support, which is how the slice sampler sees the hard constraint.
    pub fn log_density(&self, z: f64, a: f64) -> f64 {
        let d = self.density(z, a);
        if d > 0.0 {
            d.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Max/min density ratio over the support.
    pub fn ratio_bound(&self) -> f64 {
        match self {
            BaseDensity::Uniform => 1.0,
            BaseDensity::TiltedCosine => 3.0,
        }
    }

    /// One draw from the normalized base.
    pub fn sample(&self, rng: &mut impl Rng, a: f64) -> f64 {
        match self {
            BaseDensity::Uniform => rng.gen_range(-a..a),
            BaseDensity::TiltedCosine => loop {
                // Rejection from the uniform envelope; acceptance >= 1/3.
                let z = rng.gen_range(-a..a);
                let u: f64 = rng.gen();
                if 3.0 * u <= 2.0 + (std::f64::consts::PI * z / a).cos() {
                    return z;
                }
            },
        }
    }
}

/// Dirichlet-process prior configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Total mass of the base measure (the process concentration).
    pub total_mass: f64,
    /// Support halfwidth `a`; atoms live in `[-a, a]`.
    pub halfwidth: f64,
    /// Shape of the normalized base measure.
    pub base: BaseDensity,
    /// Stick-breaking truncation used whenever a full measure is realized.
    /// The final stick absorbs the remainder, so weights still sum to one;
    /// at level 200 with unit mass the absorbed remainder has expectation
    /// below 1e-8.
    pub truncation_level: usize,
}

impl DpConfig {
    pub fn new(
        total_mass: f64,
        halfwidth: f64,
        base: BaseDensity,
        truncation_level: usize,
    ) -> Result<Self> {
        if !(total_mass > 0.0) || !total_mass.is_finite() {
            return Err(Error::invalid(format!("total mass {total_mass} not positive finite")));
        }
        if !(halfwidth > 0.0) || !halfwidth.is_finite() {
            return Err(Error::invalid(format!("halfwidth {halfwidth} not positive finite")));
        }
        if truncation_level < MIN_TRUNCATION {
            return Err(Error::invalid(format!(
                "truncation level {truncation_level} below minimum {MIN_TRUNCATION}"
            )));
        }
        Ok(DpConfig {
            total_mass,
            halfwidth,
            base,
            truncation_level,
        })
    }

    /// Unit-mass uniform base at truncation 200.
    pub fn uniform(total_mass: f64, halfwidth: f64) -> Result<Self> {
        DpConfig::new(total_mass, halfwidth, BaseDensity::Uniform, 200)
    }
}

/// Snapshot of the Gibbs sampler's latent state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    /// Cluster index per observation; indices into `cluster_locations`.
    pub allocations: Vec<usize>,
    /// Location of each nonempty cluster, inside `[-a, a]`.
    pub cluster_locations: Vec<f64>,
    /// Sweep count at which the snapshot was taken.
    pub iteration: usize,
    /// Complete-data log likelihood `sum_i log f(x_i - loc[alloc[i]])`.
    pub log_likelihood: f64,
}

/// A posterior run: retained mixing-measure draws plus the log-likelihood
/// trace at the retention times and the final latent state.
#[derive(Debug, Clone)]
pub struct PosteriorRun {
    pub draws: Vec<DiscreteMeasure>,
    pub log_likelihood_trace: Vec<f64>,
    pub final_state: ChainState,
}

/// Complete-data log likelihood of a latent state under the kernel:
/// `sum_i log f(x_i - cluster_locations[allocations[i]])`.
pub fn complete_log_likelihood(data: &[f64], state: &ChainState, kernel: &Kernel) -> f64 {
    data.iter()
        .zip(&state.allocations)
        .map(|(&x, &c)| kernel.log_density(x - state.cluster_locations[c]))
        .sum()
}

/// One draw of `G` from the Dirichlet-process prior, represented by
/// truncated stick-breaking: `truncation_level` atoms i.i.d. from the base,
/// weights from Beta(1, total_mass) sticks with the final stick absorbing
/// the remainder so the weights sum to one exactly.
pub fn sample_prior_dp(cfg: &DpConfig, seed: u64) -> Result<DiscreteMeasure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_prior_with(cfg, &mut rng)
}

/// As [`sample_prior_dp`] but advancing a caller-owned generator.
pub fn sample_prior_with(cfg: &DpConfig, rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure> {
    let level = cfg.truncation_level;
    let atoms: Vec<f64> = (0..level)
        .map(|_| cfg.base.sample(rng, cfg.halfwidth))
        .collect();
    let weights = stick_weights(rng, cfg.total_mass, level);
    DiscreteMeasure::new(atoms, weights, cfg.halfwidth)
}

/// Stick-breaking weights: `v_j ~ Beta(1, mass)`, `w_j = v_j prod_{l<j}
/// (1 - v_l)`, with the last stick set to one so the remainder is absorbed
/// and the weights sum to one exactly.
fn stick_weights(rng: &mut ChaCha8Rng, mass: f64, level: usize) -> Vec<f64> {
    let mut weights = Vec::with_capacity(level);
    let mut remaining = 1.0f64;
    for j in 0..level {
        let v = if j + 1 == level {
            1.0
        } else {
            // Beta(1, mass) by inverse CDF.
            let u: f64 = rng.gen();
            1.0 - (1.0 - u).powf(1.0 / mass)
        };
        weights.push(remaining * v);
        remaining *= 1.0 - v;
    }
    weights
}

/// MCMC over the posterior of the mixing measure given `data`.
///
/// Each sweep resamples every observation's cluster allocation by marginal
/// Gibbs with [`AUX_COMPONENTS`] auxiliary components (the kernel likelihood
/// is not conjugate to the base, so candidate locations for a new cluster
/// are drawn from the base and weighted by `total_mass / AUX_COMPONENTS`),
/// then moves every cluster location by doubling/shrinkage slice sampling
/// against its conditional density on `[-a, a]`. After burn-in, every
/// `thin`-th sweep realizes a full `G` from the exact Dirichlet-process
/// posterior given the allocations: Dirichlet(cluster sizes, total mass)
/// weights over cluster locations plus a base remainder expanded by
/// truncated stick-breaking.
///
/// Deterministic given `seed`. With empty `data` the sweeps are no-ops and
/// the retained draws are exact prior draws, which is the correct
/// degenerate posterior.
pub fn posterior_chain(
    data: &[f64],
    cfg: &DpConfig,
    kernel: &Kernel,
    iters: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> Result<Vec<DiscreteMeasure>> {
    posterior_run(data, cfg, kernel, iters, burn_in, thin, seed).map(|r| r.draws)
}

/// As [`posterior_chain`], also returning the retained log-likelihood trace
/// and the final latent state.
pub fn posterior_run(
    data: &[f64],
    cfg: &DpConfig,
    kernel: &Kernel,
    iters: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> Result<PosteriorRun> {
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite observation"));
    }
    if iters <= burn_in {
        return Err(Error::invalid(format!(
            "iters {iters} must exceed burn-in {burn_in}"
        )));
    }
    if thin == 0 {
        return Err(Error::invalid("thinning stride must be positive"));
    }

    let mut chain = Chain::new(data, cfg, kernel, seed);
    let mut draws = Vec::new();
    let mut trace = Vec::new();
    for it in 1..=iters {
        chain.sweep()?;
        if it > burn_in && (it - burn_in) % thin == 0 {
            draws.push(chain.reconstruct()?);
            trace.push(chain.log_likelihood());
        }
    }
    let final_state = chain.state(iters);
    Ok(PosteriorRun {
        draws,
        log_likelihood_trace: trace,
        final_state,
    })
}

/// Sampler internals. Cluster slots may be empty mid-sweep (a stack of free
/// slots is reused before growing); [`Chain::compact`] renumbers after each
/// sweep so the exported state only ever shows nonempty clusters.
struct Chain<'a> {
    data: &'a [f64],
    cfg: &'a DpConfig,
    kernel: &'a Kernel,
    alloc: Vec<usize>,
    locs: Vec<f64>,
    counts: Vec<usize>,
    free: Vec<usize>,
    rng: ChaCha8Rng,
}

impl<'a> Chain<'a> {
    fn new(data: &'a [f64], cfg: &'a DpConfig, kernel: &'a Kernel, seed: u64) -> Self {
        // Everything starts in a single cluster at the support center; the
        // first sweeps disperse it rapidly.
        let (locs, counts) = if data.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            (vec![0.0], vec![data.len()])
        };
        Chain {
            data,
            cfg,
            kernel,
            alloc: vec![0; data.len()],
            locs,
            counts,
            free: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn sweep(&mut self) -> Result<()> {
        let a = self.cfg.halfwidth;
        let mass_per_aux = self.cfg.total_mass / AUX_COMPONENTS as f64;
        let mut aux = [0.0f64; AUX_COMPONENTS];
        let mut weights: Vec<f64> = Vec::new();

        for i in 0..self.data.len() {
            let x = self.data[i];
            let old = self.alloc[i];
            self.counts[old] -= 1;

            // Auxiliary locations: a freshly-emptied cluster donates its
            // location as the first auxiliary, the rest are base draws.
            let mut first_aux = 0;
            if self.counts[old] == 0 {
                aux[0] = self.locs[old];
                first_aux = 1;
                self.free.push(old);
            }
            for slot in aux.iter_mut().skip(first_aux) {
                *slot = self.cfg.base.sample(&mut self.rng, a);
            }

            // Allocation weights: occupied clusters by size times
            // likelihood, auxiliaries by mass/AUX times likelihood.
            weights.clear();
            for (c, (&cnt, &loc)) in self.counts.iter().zip(&self.locs).enumerate() {
                let w = if cnt == 0 {
                    0.0
                } else {
                    cnt as f64 * self.kernel.density(x - loc)
                };
                debug_assert!(c < self.counts.len());
                weights.push(w);
            }
            for &loc in &aux {
                weights.push(mass_per_aux * self.kernel.density(x - loc));
            }
            let total: f64 = weights.iter().sum();
            if !total.is_finite() || total <= 0.0 {
                return Err(Error::Sampler(format!(
                    "degenerate allocation weights (total {total:.3e}) at observation {i}; \
                     x = {x:.6}, clusters = {}",
                    self.locs.len()
                )));
            }

            let mut u = self.rng.gen::<f64>() * total;
            let mut pick = weights.len() - 1;
            for (j, &w) in weights.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    pick = j;
                    break;
                }
            }

            if pick < self.counts.len() {
                self.counts[pick] += 1;
                self.alloc[i] = pick;
            } else {
                let loc = aux[pick - self.counts.len()];
                let slot = match self.free.pop() {
                    Some(s) => {
                        self.locs[s] = loc;
                        s
                    }
                    None => {
                        self.locs.push(loc);
                        self.counts.push(0);
                        self.locs.len() - 1
                    }
                };
                self.counts[slot] += 1;
                self.alloc[i] = slot;
            }
        }

        self.compact();
        self.update_locations();
        Ok(())
    }

    /// Drop empty cluster slots and renumber allocations.
    fn compact(&mut self) {
        if self.free.is_empty() {
            return;
        }
        let mut remap = vec![usize::MAX; self.counts.len()];
        let mut locs = Vec::with_capacity(self.locs.len());
        let mut counts = Vec::with_capacity(self.counts.len());
        for (c, (&cnt, &loc)) in self.counts.iter().zip(&self.locs).enumerate() {
            if cnt > 0 {
                remap[c] = locs.len();
                locs.push(loc);
                counts.push(cnt);
            }
        }
        for c in &mut self.alloc {
            *c = remap[*c];
        }
        self.locs = locs;
        self.counts = counts;
        self.free.clear();
    }

    /// Slice-sample each cluster location against its conditional density:
    /// base density times the likelihood of the cluster's observations.
    fn update_locations(&mut self) {
        let a = self.cfg.halfwidth;
        // Gather member lists once per sweep.
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.locs.len()];
        for (i, &c) in self.alloc.iter().enumerate() {
            members[c].push(i);
        }
        for (c, obs) in members.iter().enumerate() {
            let data = self.data;
            let kernel = self.kernel;
            let base = self.cfg.base;
            let target = |phi: f64| -> f64 {
                let prior = base.log_density(phi, a);
                if prior == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                prior
                    + obs
                        .iter()
                        .map(|&i| kernel.log_density(data[i] - phi))
                        .sum::<f64>()
            };
            self.locs[c] = slice_sample(&mut self.rng, self.locs[c], 0.5 * a, 12, target);
        }
    }

    fn log_likelihood(&self) -> f64 {
        self.data
            .iter()
            .zip(&self.alloc)
            .map(|(&x, &c)| self.kernel.log_density(x - self.locs[c]))
            .sum()
    }

    fn state(&self, iteration: usize) -> ChainState {
        ChainState {
            allocations: self.alloc.clone(),
            cluster_locations: self.locs.clone(),
            iteration,
            log_likelihood: self.log_likelihood(),
        }
    }

    /// One draw of `G` from the Dirichlet-process posterior given the
    /// current allocations: weights over (cluster_1, ..., cluster_K,
    /// remainder) are Dirichlet(sizes, total mass) via normalized Gamma
    /// draws, and the remainder mass is expanded into base atoms by
    /// truncated stick-breaking.
    fn reconstruct(&mut self) -> Result<DiscreteMeasure> {
        let cfg = self.cfg;
        let mut atoms = Vec::with_capacity(self.locs.len() + cfg.truncation_level);
        let mut weights = Vec::with_capacity(self.locs.len() + cfg.truncation_level);

        let mut total = 0.0f64;
        for (&cnt, &loc) in self.counts.iter().zip(&self.locs) {
            let g = gamma_draw(&mut self.rng, cnt as f64);
            atoms.push(loc);
            weights.push(g);
            total += g;
        }
        let remainder = gamma_draw(&mut self.rng, cfg.total_mass);
        total += remainder;
        for w in &mut weights {
            *w /= total;
        }
        let rem_frac = remainder / total;

        let sticks = stick_weights(&mut self.rng, cfg.total_mass, cfg.truncation_level);
        for s in sticks {
            atoms.push(cfg.base.sample(&mut self.rng, cfg.halfwidth));
            weights.push(rem_frac * s);
        }
        DiscreteMeasure::new(atoms, weights, cfg.halfwidth)
    }
}

fn gamma_draw(rng: &mut ChaCha8Rng, shape: f64) -> f64 {
    // Gamma(shape, 1); shape >= 1 for cluster sizes, arbitrary positive for
    // the total-mass remainder.
    Gamma::new(shape, 1.0)
        .expect("positive gamma shape")
        .sample(rng)
}

/// Univariate slice sampler with interval doubling and shrinkage.
///
/// `g` is the log target (negative infinity marks the outside of the
/// support, so hard constraints need no special casing: doubling stops
/// there and shrinkage rejects there). `w` is the initial bracket width and
/// `max_doublings` caps the expansion. The shrinkage loop applies the
/// doubling-consistency acceptance check, so the move is a correct
/// reversible update even when the bracket was grown.
fn slice_sample<F: Fn(f64) -> f64>(
    rng: &mut ChaCha8Rng,
    x0: f64,
    w: f64,
    max_doublings: usize,
    g: F,
) -> f64 {
    let g0 = g(x0);
    let level = g0 - {
        let e: f64 = Exp1.sample(rng);
        e
    };

    // Doubling: randomly position the initial bracket, then double toward a
    // random side until both ends are off the slice or the cap is hit.
    let u: f64 = rng.gen();
    let mut lo = x0 - w * u;
    let mut hi = lo + w;
    let mut remaining = max_doublings;
    while remaining > 0 && (level < g(lo) || level < g(hi)) {
        let width = hi - lo;
        if rng.gen::<bool>() {
            lo -= width;
        } else {
            hi += width;
        }
        remaining -= 1;
    }

    // Shrinkage with the doubling acceptance test.
    let (mut l, mut r) = (lo, hi);
    loop {
        let x1 = l + (r - l) * rng.gen::<f64>();
        if level < g(x1) && accept_doubled(x0, x1, level, lo, hi, w, &g) {
            return x1;
        }
        if x1 < x0 {
            l = x1;
        } else {
            r = x1;
        }
        if r - l < 1e-13 {
            // Numerically exhausted bracket; keep the current point.
            return x0;
        }
    }
}

/// Doubling-consistency check: retrace the halving path from the full
/// bracket down to width `~w` and reject `x1` if any intermediate bracket
/// that separates `x0` from `x1` has both ends off the slice (in which case
/// the reverse move could not have produced the same bracket).
fn accept_doubled<F: Fn(f64) -> f64>(
    x0: f64,
    x1: f64,
    level: f64,
    mut lo: f64,
    mut hi: f64,
    w: f64,
    g: &F,
) -> bool {
    let mut differ = false;
    while hi - lo > 1.1 * w {
        let mid = 0.5 * (lo + hi);
        if (x0 < mid && x1 >= mid) || (x0 >= mid && x1 < mid) {
            differ = true;
        }
        if x1 < mid {
            hi = mid;
        } else {
            lo = mid;
        }
        if differ && level >= g(lo) && level >= g(hi) {
            return false;
        }
    }
    true
}

/// Monte-Carlo profile of the prior mass of Kullback-Leibler balls around a
/// reference mixture: for each `eps` in the ladder, the fraction of prior
/// draws `G` with `max(K, K2)(p_ref, p_G) <= eps^2`, where `K` is the KL
/// divergence and `K2` its second moment. One `(K, K2)` evaluation per draw
/// is shared across the whole ladder, so the estimates are monotone in
/// `eps` by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorMassProfile {
    pub eps: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Wilson 95% intervals; at zero hits the lower end is exactly zero and
    /// the upper end is still informative.
    pub intervals: Vec<(f64, f64)>,
    pub draws: usize,
}

/// Estimates the prior mass profile over an `eps` ladder.
pub fn prior_mass_profile(
    cfg: &DpConfig,
    reference: &DiscreteMeasure,
    kernel: &Kernel,
    eps: &[f64],
    draws: usize,
    seed: u64,
) -> Result<PriorMassProfile> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("eps ladder must be nonempty and positive"));
    }
    if draws == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    if (reference.halfwidth() - cfg.halfwidth).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "reference halfwidth {} differs from prior halfwidth {}",
            reference.halfwidth(),
            cfg.halfwidth
        )));
    }
    let p_ref = MixtureDensity::new(kernel.clone(), reference.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0usize; eps.len()];
    for _ in 0..draws {
        let g = sample_prior_with(cfg, &mut rng)?;
        let p = MixtureDensity::new(kernel.clone(), g);
        let (k, k2) = kl_divergences(&p_ref, &p)?;
        let stat = k.max(k2);
        for (j, &e) in eps.iter().enumerate() {
            if stat <= e * e {
                hits[j] += 1;
            }
        }
    }
    let estimates: Vec<f64> = hits.iter().map(|&h| h as f64 / draws as f64).collect();
    let mut intervals = Vec::with_capacity(hits.len());
    for &h in &hits {
        intervals.push(wilson_interval(h as u64, draws as u64)?);
    }
    Ok(PriorMassProfile {
        eps: eps.to_vec(),
        estimates,
        intervals,
        draws,
    })
}

/// Single-`eps` convenience wrapper around [`prior_mass_profile`]: the
/// Monte-Carlo estimate and its Wilson 95% interval. At zero hits the
/// estimate is zero and only the interval's upper end carries information.
pub fn prior_mass_estimate(
    cfg: &DpConfig,
    reference: &DiscreteMeasure,
    kernel: &Kernel,
    eps: f64,
    draws: usize,
    seed: u64,
) -> Result<(f64, (f64, f64))> {
    let profile = prior_mass_profile(cfg, reference, kernel, &[eps], draws, seed)?;
    Ok((profile.estimates[0], profile.intervals[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_test_5pct;

    fn cfg() -> DpConfig {
        DpConfig::uniform(1.0, 1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(DpConfig::new(0.0, 1.0, BaseDensity::Uniform, 200).is_err());
        assert!(DpConfig::new(1.0, -1.0, BaseDensity::Uniform, 200).is_err());
        assert!(DpConfig::new(1.0, 1.0, BaseDensity::Uniform, 49).is_err());
        assert!(DpConfig::new(1.0, 1.0, BaseDensity::Uniform, 50).is_ok());
    }

    #[test]
    fn base_densities_normalized() {
        // Direct Riemann check on both variants.
        let a = 1.3;
        for base in [BaseDensity::Uniform, BaseDensity::TiltedCosine] {
            let n = 20_000;
            let h = 2.0 * a / n as f64;
            let mass: f64 = (0..n)
                .map(|i| base.density(-a + (i as f64 + 0.5) * h, a) * h)
                .sum();
            assert!((mass - 1.0).abs() < 1e-6, "{base:?} mass {mass}");
            assert_eq!(base.density(a + 0.1, a), 0.0);
        }
        assert_eq!(BaseDensity::TiltedCosine.ratio_bound(), 3.0);
    }

    #[test]
    fn prior_draw_is_valid_and_supported() {
        let g = sample_prior_dp(&cfg(), 7).unwrap();
        let total: f64 = (0..g.atom_count()).map(|i| g.weights()[i]).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(g.atoms().iter().all(|z| z.abs() <= 1.0));
    }

    #[test]
    fn prior_mean_of_half_interval_matches_base() {
        // DP mean measure equals the normalized base, so G([0, a]) should
        // average 1/2 under the uniform base.
        let c = cfg();
        let mut sum = 0.0;
        let draws = 10_000;
        for s in 0..draws {
            sum += sample_prior_dp(&c, 20_000 + s).unwrap().interval_mass(0.0, 1.0);
        }
        let mean = sum / draws as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn prior_max_weight_reflects_first_stick() {
        // With unit mass the first stick is Beta(1,1) with mean 1/2, and the
        // largest weight dominates it.
        let c = cfg();
        let mut sum = 0.0;
        let draws = 10_000;
        for s in 0..draws {
            let g = sample_prior_dp(&c, 40_000 + s).unwrap();
            sum += g.weights().iter().cloned().fold(0.0f64, f64::max);
        }
        let mean = sum / draws as f64;
        assert!(mean > 0.4, "mean max weight {mean}");
    }

    #[test]
    fn rejects_bad_chain_arguments() {
        let c = cfg();
        let err = posterior_chain(&[0.1, f64::NAN], &c, &Kernel::Laplace, 10, 2, 1, 1);
        assert!(err.is_err());
        assert!(posterior_chain(&[0.1], &c, &Kernel::Laplace, 5, 5, 1, 1).is_err());
        assert!(posterior_chain(&[0.1], &c, &Kernel::Laplace, 6, 5, 0, 1).is_err());
    }

    #[test]
    fn chain_is_deterministic_given_seed() {
        let c = cfg();
        let data = [0.3, -0.2, 1.1, 0.05];
        let a = posterior_chain(&data, &c, &Kernel::Laplace, 40, 10, 3, 99).unwrap();
        let b = posterior_chain(&data, &c, &Kernel::Laplace, 40, 10, 3, 99).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.atoms(), y.atoms());
            assert_eq!(x.weights(), y.weights());
        }
    }

    #[test]
    fn draws_satisfy_measure_invariants() {
        let c = cfg();
        let data = [0.4, -0.6, 0.9, -1.2, 0.0, 2.3];
        let draws = posterior_chain(&data, &c, &Kernel::Laplace, 60, 20, 2, 5).unwrap();
        assert_eq!(draws.len(), 20);
        for g in &draws {
            let total: f64 = g.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(g.atoms().iter().all(|z| z.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn final_state_log_likelihood_matches_direct_evaluation() {
        let c = cfg();
        let data = [0.2, -0.4, 0.7, 1.5, -0.9];
        let run = posterior_run(&data, &c, &Kernel::Laplace, 30, 10, 2, 11).unwrap();
        let direct = complete_log_likelihood(&data, &run.final_state, &Kernel::Laplace);
        assert!((run.final_state.log_likelihood - direct).abs() < 1e-10);
        // Every allocated cluster is nonempty and inside the support.
        let k = run.final_state.cluster_locations.len();
        for c in 0..k {
            assert!(run.final_state.allocations.iter().any(|&z| z == c));
        }
        assert!(run
            .final_state
            .cluster_locations
            .iter()
            .all(|z| z.abs() <= 1.0));
    }

    #[test]
    fn zero_data_chain_matches_prior() {
        // With no observations every sweep is a no-op and each retained draw
        // is an independent prior realization; compare G([0, a]) samples.
        let c = cfg();
        let n = 400;
        let chain = posterior_chain(&[], &c, &Kernel::Laplace, n + 5, 5, 1, 31).unwrap();
        let chain_masses: Vec<f64> = chain.iter().map(|g| g.interval_mass(0.0, 1.0)).collect();
        let prior_masses: Vec<f64> = (0..n as u64)
            .map(|s| sample_prior_dp(&c, 60_000 + s).unwrap().interval_mass(0.0, 1.0))
            .collect();
        let (_, _, pass) = ks_test_5pct(&chain_masses, &prior_masses).unwrap();
        assert!(pass);
    }

    #[test]
    fn single_observation_stays_near_prior() {
        // One observation barely moves the posterior: E G([0, a]) within
        // 0.1 of the prior mean 0.5.
        let c = cfg();
        let draws = posterior_chain(&[0.0], &c, &Kernel::Laplace, 900, 100, 2, 17).unwrap();
        let mean: f64 = draws.iter().map(|g| g.interval_mass(0.0, 1.0)).sum::<f64>()
            / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.1, "posterior mean {mean}");
    }

    #[test]
    fn exchangeable_in_data_order() {
        // Permuting the data leaves the log-likelihood trace distribution
        // unchanged; two-sample KS at 5% on thinned traces, three seed
        // pairs, majority must pass.
        let c = cfg();
        let g0 = DiscreteMeasure::new(vec![-0.5, 0.5], vec![0.5, 0.5], 1.0).unwrap();
        let p0 = MixtureDensity::new(Kernel::Laplace, g0);
        let data = p0.sample(30, 4242);
        let mut permuted = data.clone();
        permuted.reverse();
        permuted.swap(3, 17);
        permuted.swap(8, 22);

        let mut passes = 0;
        for (sa, sb) in [(101, 505), (202, 606), (303, 707)] {
            let ta = posterior_run(&data, &c, &Kernel::Laplace, 700, 200, 5, sa)
                .unwrap()
                .log_likelihood_trace;
            let tb = posterior_run(&permuted, &c, &Kernel::Laplace, 700, 200, 5, sb)
                .unwrap()
                .log_likelihood_trace;
            if ks_test_5pct(&ta, &tb).unwrap().2 {
                passes += 1;
            }
        }
        assert!(passes >= 2, "only {passes}/3 KS comparisons passed");
    }

    #[test]
    fn prior_mass_profile_is_monotone_and_saturates() {
        let c = DpConfig::new(1.0, 1.0, BaseDensity::Uniform, 50).unwrap();
        let g0 = DiscreteMeasure::new(vec![-0.5, 0.5], vec![0.5, 0.5], 1.0).unwrap();
        let ladder = [0.3, 0.5, 0.8, 10.0];
        let prof =
            prior_mass_profile(&c, &g0, &Kernel::Laplace, &ladder, 200, 8080).unwrap();
        for w in prof.estimates.windows(2) {
            assert!(w[0] <= w[1] + 1e-12, "profile not monotone: {:?}", prof.estimates);
        }
        // eps = 10 covers everything: KL and its second moment are bounded
        // by the uniform log-ratio bound 2a = 2 and its square.
        assert_eq!(prof.estimates[3], 1.0);
        let (est, (lo, hi)) = prior_mass_estimate(&c, &g0, &Kernel::Laplace, 10.0, 50, 1).unwrap();
        assert_eq!(est, 1.0);
        assert!(lo <= 1.0 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kl_statistics_of_draws_are_finite() {
        // The bounded support forces the log ratio below 2a, so K and K2
        // are finite for every draw.
        let c = DpConfig::new(1.0, 1.0, BaseDensity::Uniform, 50).unwrap();
        let g0 = DiscreteMeasure::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let p0 = MixtureDensity::new(Kernel::Laplace, g0);
        for s in 0..5 {
            let g = sample_prior_dp(&c, 500 + s).unwrap();
            let p = MixtureDensity::new(Kernel::Laplace, g);
            let (k, k2) = kl_divergences(&p0, &p).unwrap();
            assert!(k.is_finite() && k2.is_finite());
            assert!(k <= 4.0 && k2 <= 4.0, "k {k} k2 {k2} exceed crude bound");
        }
    }

    #[test]
    fn slice_sampler_respects_hard_support() {
        // Target: uniform base on [-1, 1] with a likelihood pulling toward
        // 0.9; all samples must stay inside the support.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = |phi: f64| {
            if phi.abs() > 1.0 {
                f64::NEG_INFINITY
            } else {
                -(phi - 0.9_f64).powi(2) * 8.0
            }
        };
        let mut x = 0.0;
        let mut mean = 0.0;
        for _ in 0..2000 {
            x = slice_sample(&mut rng, x, 0.5, 12, g);
            assert!(x.abs() <= 1.0);
            mean += x;
        }
        mean /= 2000.0;
        // The mode sits at 0.9 but the hard wall at 1 truncates the right
        // tail, so the mean lands close to but below 0.9.
        assert!(mean > 0.6 && mean < 1.0, "mean {mean}");
    }
}
