//! Prior construction and evaluation.
//!
//! Each scaled diffusivity gets a Gamma prior whose mode sits at the
//! configured true value with 99% cumulative probability at 100 on the
//! scaled axis; the transference number gets Beta(4, 5.5); the log noise
//! variance gets an improper uniform prior (zero log-density contribution).

use crate::theta::ThetaVector;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Continuous, ContinuousCDF, Gamma};

/// Gamma prior in shape/scale form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl GammaPrior {
    fn dist(&self) -> Result<Gamma> {
        Gamma::new(self.shape, 1.0 / self.scale)
            .map_err(|e| Error::Numerical(format!("gamma({}, {}): {e}", self.shape, self.scale)))
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match self.dist() {
            Ok(d) => d.ln_pdf(x),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.dist().map(|d| d.cdf(x)).unwrap_or(f64::NAN)
    }

    pub fn mode(&self) -> f64 {
        (self.shape - 1.0).max(0.0) * self.scale
    }
}

/// Solve for (shape k, scale s) with mode (k-1)s at `scaled_true_value`
/// and CDF(`p99_value`) = 0.99. Bisection on the shape; the CDF at the
/// anchor increases monotonically with k along the mode constraint.
pub fn fit_gamma_prior(scaled_true_value: f64, p99_value: f64) -> Result<(f64, f64)> {
    if !(scaled_true_value > 0.0 && scaled_true_value < p99_value) {
        return Err(Error::Invalid(format!(
            "mode {scaled_true_value} must lie in (0, {p99_value})"
        )));
    }
    let residual = |k: f64| -> Result<f64> {
        let s = scaled_true_value / (k - 1.0);
        let d = Gamma::new(k, 1.0 / s)
            .map_err(|e| Error::Numerical(format!("gamma fit at k={k}: {e}")))?;
        Ok(d.cdf(p99_value) - 0.99)
    };

    let mut lo = 1.0 + 1e-9;
    let mut hi = 2.0;
    while residual(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numerical(
                "gamma prior fit: no shape bracket found".into(),
            ));
        }
    }
    if residual(lo)? > 0.0 {
        return Err(Error::Numerical(
            "gamma prior fit: residual positive at the lower bracket".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    let k = 0.5 * (lo + hi);
    Ok((k, scaled_true_value / (k - 1.0)))
}

/// Joint prior over the sampling-space parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub d_n: GammaPrior,
    pub d_p: GammaPrior,
    pub d_e: GammaPrior,
    pub t_plus_alpha: f64,
    pub t_plus_beta: f64,
    /// Finite window the initial ln(sigma^2) is drawn from; the prior on
    /// it stays improper uniform.
    pub ln_sigma2_init: (f64, f64),
}

impl PriorSpec {
    /// Fit the diffusivity priors to the configured scaled truths with the
    /// standard anchors (p99 at 100, Beta(4, 5.5) for the transference
    /// number).
    pub fn for_scaled_truth(d_n: f64, d_p: f64, d_e: f64) -> Result<Self> {
        let fit = |mode: f64| -> Result<GammaPrior> {
            let (shape, scale) = fit_gamma_prior(mode, 100.0)?;
            Ok(GammaPrior { shape, scale })
        };
        Ok(Self {
            d_n: fit(d_n)?,
            d_p: fit(d_p)?,
            d_e: fit(d_e)?,
            t_plus_alpha: 4.0,
            t_plus_beta: 5.5,
            ln_sigma2_init: ((1e-12f64).ln(), (1e-6f64).ln()),
        })
    }

    fn beta(&self) -> Result<Beta> {
        Beta::new(self.t_plus_alpha, self.t_plus_beta)
            .map_err(|e| Error::Numerical(format!("beta prior: {e}")))
    }

    /// Log prior density up to an additive constant; -inf off support.
    pub fn log_prior(&self, theta: &ThetaVector) -> f64 {
        if !theta.is_valid() {
            return f64::NEG_INFINITY;
        }
        let beta = match self.beta() {
            Ok(b) => b,
            Err(_) => return f64::NEG_INFINITY,
        };
        let lp = self.d_n.ln_pdf(theta.d_n)
            + self.d_p.ln_pdf(theta.d_p)
            + self.d_e.ln_pdf(theta.d_e)
            + beta.ln_pdf(theta.t_plus);
        // ln sigma^2: improper uniform, zero contribution
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp
        }
    }

    /// Draw an initial parameter vector: diffusivities from their Gamma
    /// priors conditioned on the scaled working range (0, `scaled_cap`],
    /// the transference number from its Beta, and ln(sigma^2) uniformly
    /// from the configured window.
    pub fn sample_initial<R: Rng>(&self, rng: &mut R, scaled_cap: f64) -> ThetaVector {
        let mut gamma_capped = |prior: &GammaPrior| -> f64 {
            let dist = rand_distr::Gamma::new(prior.shape, prior.scale)
                .expect("valid gamma parameters");
            for _ in 0..10_000 {
                let v: f64 = rand_distr::Distribution::sample(&dist, rng);
                if v > 0.0 && v <= scaled_cap {
                    return v;
                }
            }
            prior.mode().max(scaled_cap / 2.0)
        };
        let d_n = gamma_capped(&self.d_n);
        let d_p = gamma_capped(&self.d_p);
        let d_e = gamma_capped(&self.d_e);
        let beta_dist = rand_distr::Beta::new(self.t_plus_alpha, self.t_plus_beta)
            .expect("valid beta parameters");
        let t_plus = rand_distr::Distribution::sample(&beta_dist, rng);
        let (lo, hi) = self.ln_sigma2_init;
        let ln_sigma2 = rng.random_range(lo..hi);
        ThetaVector {
            d_n,
            d_p,
            d_e,
            t_plus,
            ln_sigma2,
        }
    }
}
