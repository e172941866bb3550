//! Parameter inference for the SPMe simulator: scaled sampling space,
//! priors, Gaussian log-posterior, the robust adaptive Metropolis-Hastings
//! sampler, posterior summaries, and the frequentist MLE / Fisher
//! information / Cramer-Rao baseline.

pub mod chain;
mod error;
pub mod fim;
pub mod mle;
pub mod posterior;
pub mod prior;
pub mod ramh;
pub mod theta;

pub use chain::{summarize, Chain, Histogram, Histogram2d, PosteriorSummary};
pub use error::{Error, Result};
pub use posterior::LogPosterior;
pub use prior::PriorSpec;
pub use ramh::{run_chain, ChainRunConfig};
pub use theta::ThetaVector;
