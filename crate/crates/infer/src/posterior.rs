//! Gaussian log-likelihood and log-posterior over a dataset.

use crate::prior::PriorSpec;
use crate::theta::ThetaVector;
use crate::Result;
use spme_core::dataset::Dataset;
use spme_core::model::{simulate, ModelBuilder, ModelState, NodeCounts};
use spme_core::params::ParameterSet;

/// Log-posterior evaluator bound to one dataset.
///
/// Every evaluation rebuilds the discrete model for the proposed transport
/// parameters (they enter the state matrices); the collocation grids are
/// cached inside the builder, so a rebuild is three small matrix
/// exponentials plus the simulation sweep.
pub struct LogPosterior<'a> {
    dataset: &'a Dataset,
    priors: &'a PriorSpec,
    builder: ModelBuilder<f64>,
    x0: ModelState<f64>,
}

impl<'a> LogPosterior<'a> {
    pub fn new(
        dataset: &'a Dataset,
        priors: &'a PriorSpec,
        params: &ParameterSet<f64>,
        counts: NodeCounts,
    ) -> Result<Self> {
        let builder = ModelBuilder::new(params.clone(), counts, dataset.signal.dt())?;
        let x0 = ModelState::uniform(params, counts, dataset.stoich_n, dataset.stoich_p);
        Ok(Self {
            dataset,
            priors,
            builder,
            x0,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    /// Simulated voltage at the proposal; None when the proposal is
    /// infeasible (invalid parameters or the simulation left the physical
    /// domain).
    pub fn predict(&self, theta: &ThetaVector) -> Option<Vec<f64>> {
        if !theta.is_valid() {
            return None;
        }
        let (transport, _) = theta.to_physical_unchecked();
        let model = self.builder.assemble(transport).ok()?;
        simulate(&model, &self.dataset.current, &self.x0).ok()
    }

    /// Gaussian log-likelihood
    /// `-(n/2) ln(2 pi sigma^2) - sum (y - f)^2 / (2 sigma^2)`;
    /// -inf encodes infeasibility.
    pub fn log_likelihood(&self, theta: &ThetaVector) -> f64 {
        let Some(prediction) = self.predict(theta) else {
            return f64::NEG_INFINITY;
        };
        let sigma2 = theta.sigma2();
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return f64::NEG_INFINITY;
        }
        let n = prediction.len() as f64;
        let sse: f64 = self
            .dataset
            .v_noisy
            .iter()
            .zip(&prediction)
            .map(|(y, f)| (y - f) * (y - f))
            .sum();
        let ll = -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() - sse / (2.0 * sigma2);
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }

    /// Unnormalized log-posterior `log p(theta) + log p(y | theta)`.
    pub fn log_posterior(&self, theta: &ThetaVector) -> f64 {
        let lp = self.priors.log_prior(theta);
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        lp + self.log_likelihood(theta)
    }

    pub fn priors(&self) -> &PriorSpec {
        self.priors
    }
}
