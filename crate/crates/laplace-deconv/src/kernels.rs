//! Noise kernels and the mixture densities they induce.
//!
//! A [`Kernel`] is a symmetric noise density: Laplace `f(x) = e^{-|x|}/2`
//! (characteristic function `1/(1+t^2)`, polynomial decay, so "ordinary
//! smooth" of order 2) or Gaussian with scale sigma (characteristic function
//! `e^{-sigma^2 t^2/2}`, "supersmooth" of order 2). A [`MixtureDensity`]
//! pairs a kernel with a mixing [`DiscreteMeasure`] `G` and evaluates the
//! convolution `p_G(x) = sum_i w_i f(x - z_i)`.
//!
//! For Laplace mixtures with mixing supported on `[-a, a]` the envelope
//! `f(|x|+a) <= p_G(x)`, and `p_G(x) <= f(|x|-a)` for `|x| >= a`, pins the
//! tails; quadrature windows derived from it are exposed here.

use crate::measures::DiscreteMeasure;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Decay class of a kernel's characteristic function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Smoothness {
    /// Characteristic function decays like `|t|^-beta`.
    OrdinarySmooth { beta: f64 },
    /// Characteristic function decays like `e^{-|t|^beta / gamma}`.
    Supersmooth { beta: f64 },
}

/// Supported noise densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum Kernel {
    /// `f(x) = e^{-|x|}/2`.
    Laplace,
    /// Centered normal density with standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

impl Kernel {
    /// Gaussian kernel, rejecting non-positive scale.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("gaussian sigma must be positive, got {sigma}")));
        }
        Ok(Kernel::Gaussian { sigma })
    }

    /// Density value at `x`.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Kernel::Laplace => 0.5 * (-x.abs()).exp(),
            Kernel::Gaussian { sigma } => {
                let z = x / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    /// Natural log of the density at `x`.
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Kernel::Laplace => -x.abs() - std::f64::consts::LN_2,
            Kernel::Gaussian { sigma } => {
                let z = x / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
        }
    }

    /// Characteristic function at frequency `t` (real-valued for these
    /// symmetric kernels, exposed as complex for uniformity).
    pub fn cf(&self, t: f64) -> Complex64 {
        match *self {
            Kernel::Laplace => Complex64::new(1.0 / (1.0 + t * t), 0.0),
            Kernel::Gaussian { sigma } => {
                let s = sigma * t;
                Complex64::new((-0.5 * s * s).exp(), 0.0)
            }
        }
    }

    /// Decay class of the characteristic function.
    pub fn smoothness(&self) -> Smoothness {
        match *self {
            Kernel::Laplace => Smoothness::OrdinarySmooth { beta: 2.0 },
            Kernel::Gaussian { .. } => Smoothness::Supersmooth { beta: 2.0 },
        }
    }

    /// Distance beyond the mixing support where tails fall below 1e-17,
    /// used to truncate integration windows.
    pub fn tail_pad(&self) -> f64 {
        match *self {
            Kernel::Laplace => 40.0,
            Kernel::Gaussian { sigma } => 10.0 * sigma,
        }
    }

    /// One noise draw.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Kernel::Laplace => {
                let u: f64 = rng.gen();
                // Inverse CDF of the standard Laplace.
                if u < 0.5 {
                    (2.0 * u).max(f64::MIN_POSITIVE).ln()
                } else {
                    -(2.0 * (1.0 - u)).max(f64::MIN_POSITIVE).ln()
                }
            }
            Kernel::Gaussian { sigma } => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                sigma * z
            }
        }
    }

    /// Short tag used in reports ("laplace", "gaussian").
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Laplace => "laplace",
            Kernel::Gaussian { .. } => "gaussian",
        }
    }

    /// `L_q` norm of the density, finite `q >= 1`. Laplace:
    /// `(2^{1-q}/q)^{1/q}`. Gaussian: `(2 pi sigma^2)^{(1-q)/(2q)} q^{-1/(2q)}`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        assert!(q.is_finite() && q >= 1.0, "lq_norm needs finite q >= 1");
        match *self {
            Kernel::Laplace => (2.0f64.powf(1.0 - q) / q).powf(1.0 / q),
            Kernel::Gaussian { sigma } => {
                let two_pi_s2 = 2.0 * std::f64::consts::PI * sigma * sigma;
                two_pi_s2.powf((1.0 - q) / (2.0 * q)) * q.powf(-1.0 / (2.0 * q))
            }
        }
    }

    /// `L_q` norm of the density's derivative, finite `q >= 1`. The Laplace
    /// derivative has the same modulus as the density, so the norm matches
    /// [`Kernel::lq_norm`]; the Gaussian case is integrated numerically.
    pub fn derivative_lq_norm(&self, q: f64) -> f64 {
        assert!(q.is_finite() && q >= 1.0, "derivative_lq_norm needs finite q >= 1");
        match *self {
            Kernel::Laplace => self.lq_norm(q),
            Kernel::Gaussian { sigma } => {
                let half = 12.0 * sigma;
                let integrand = |x: f64| {
                    let phi = self.density(x);
                    (x.abs() / (sigma * sigma) * phi).powf(q)
                };
                let out = crate::quad::adaptive(integrand, -half, half, &[0.0], 1e-12, 200_000);
                out.value[0].powf(1.0 / q)
            }
        }
    }
}

/// Convolution of a kernel with a discrete mixing measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureDensity {
    pub kernel: Kernel,
    pub mixing: DiscreteMeasure,
}

impl MixtureDensity {
    pub fn new(kernel: Kernel, mixing: DiscreteMeasure) -> Self {
        MixtureDensity { kernel, mixing }
    }

    /// `p_G(x) = sum_i w_i f(x - z_i)`; finite and strictly positive.
    pub fn density(&self, x: f64) -> f64 {
        self.mixing
            .atoms()
            .iter()
            .zip(self.mixing.weights())
            .map(|(&z, &w)| w * self.kernel.density(x - z))
            .sum()
    }

    /// `ln p_G(x)`.
    pub fn log_density(&self, x: f64) -> f64 {
        self.density(x).ln()
    }

    /// Characteristic function of the mixture: kernel CF times the mixing
    /// measure's Fourier transform.
    pub fn cf(&self, t: f64) -> Complex64 {
        let g_hat: Complex64 = self
            .mixing
            .atoms()
            .iter()
            .zip(self.mixing.weights())
            .map(|(&z, &w)| Complex64::from_polar(w, t * z))
            .sum();
        self.kernel.cf(t) * g_hat
    }

    /// Window `[-a - pad, a + pad]` outside which the density is below
    /// the double-precision noise floor for this kernel.
    pub fn quadrature_window(&self) -> (f64, f64) {
        let a = self.mixing.halfwidth();
        let pad = self.kernel.tail_pad();
        (-a - pad, a + pad)
    }

    /// Union of the quadrature windows of two mixtures.
    pub fn joint_window(&self, other: &MixtureDensity) -> (f64, f64) {
        let (lo1, hi1) = self.quadrature_window();
        let (lo2, hi2) = other.quadrature_window();
        (lo1.min(lo2), hi1.max(hi2))
    }

    /// Atom locations of both mixtures inside `(lo, hi)`, sorted: the kink
    /// points an adaptive integrator should split at.
    pub fn joint_breakpoints(&self, other: &MixtureDensity) -> Vec<f64> {
        let (lo, hi) = self.joint_window(other);
        let mut pts: Vec<f64> = self
            .mixing
            .atoms()
            .iter()
            .chain(other.mixing.atoms())
            .copied()
            .filter(|&z| z > lo && z < hi)
            .collect();
        pts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        pts.dedup();
        pts
    }

    /// `n` i.i.d. draws `X = Z + e` with `Z ~ G` and `e ~ kernel`,
    /// deterministic given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    /// Sampling against a caller-owned generator.
    pub fn sample_with(&self, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let weights = self.mixing.weights();
        let atoms = self.mixing.atoms();
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let mut cum = 0.0;
                let mut z = *atoms.last().expect("non-empty");
                for (&zi, &wi) in atoms.iter().zip(weights) {
                    cum += wi;
                    if u < cum {
                        z = zi;
                        break;
                    }
                }
                z + self.kernel.sample(rng)
            })
            .collect()
    }
}

/// Laplace mixture tail envelopes for mixing measures on `[-a, a]`:
/// `envelope_lower(x, a) <= p_G(x)` everywhere, and
/// `p_G(x) <= envelope_upper(x, a)` for `|x| >= a`.
pub fn envelope_lower(x: f64, a: f64) -> f64 {
    Kernel::Laplace.density(x.abs() + a)
}

/// Upper Laplace envelope; only valid for `|x| >= a`.
pub fn envelope_upper(x: f64, a: f64) -> f64 {
    Kernel::Laplace.density(x.abs() - a)
}
