//! Experiment configuration: one TOML file reproduces a full study.
//!
//! Every field has an embedded default matching the reference study, so an
//! empty file (or no file at all) runs the desk-scale experiment end to
//! end.

use serde::{Deserialize, Serialize};
use spme_core::model::{NodeCounts, TransportParams};
use spme_core::params::ParameterSet;
use spme_core::signal::SignalSpec;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub truth: TruthSection,
    pub local: LocalSection,
    pub wide: WideSection,
    pub mcmc: McmcSection,
    pub mle: MleSection,
    pub output: OutputSection,
    pub seeds: SeedSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSection::default(),
            truth: TruthSection::default(),
            local: LocalSection::default(),
            wide: WideSection::default(),
            mcmc: McmcSection::default(),
            mle: MleSection::default(),
            output: OutputSection::default(),
            seeds: SeedSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Optional parameter file; embedded defaults otherwise.
    pub params_file: Option<PathBuf>,
    pub particle_nodes: usize,
    pub electrolyte_nodes: [usize; 3],
}

impl Default for ModelSection {
    fn default() -> Self {
        let counts = NodeCounts::default();
        Self {
            params_file: None,
            particle_nodes: counts.particle,
            electrolyte_nodes: [
                counts.electrolyte.0,
                counts.electrolyte.1,
                counts.electrolyte.2,
            ],
        }
    }
}

/// True transport parameters the synthetic data is generated with
/// (physical units).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthSection {
    pub d_s_n: f64,
    pub d_s_p: f64,
    pub d_e: f64,
    pub t_plus: f64,
}

impl Default for TruthSection {
    fn default() -> Self {
        Self {
            d_s_n: 3.9e-14,
            d_s_p: 1e-13,
            d_e: 5.34e-10,
            t_plus: 0.4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalSection {
    pub enabled: bool,
    /// 1-based point selection; empty means all eleven.
    pub points: Vec<usize>,
    /// Target voltage-response amplitude the drive is calibrated to (mV).
    pub target_response_mv: f64,
    /// Two-sigma noise as a percentage of the response amplitude.
    pub noise_percent: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
}

impl Default for LocalSection {
    fn default() -> Self {
        Self {
            enabled: true,
            points: Vec::new(),
            target_response_mv: 8.0,
            noise_percent: 1.0,
            sample_rate_hz: 4000.0,
            duration_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WideSection {
    pub enabled: bool,
    pub bias: f64,
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Injected noise variance (V^2), matching the local-case level.
    pub sigma2: f64,
    /// Initial stoichiometries at the start of the excursion.
    pub stoich_n: f64,
    pub stoich_p: f64,
}

impl Default for WideSection {
    fn default() -> Self {
        Self {
            enabled: true,
            bias: 24.0,
            amplitude: 1.0,
            frequency_hz: 1e-3,
            sample_rate_hz: 1.0,
            duration_s: 1000.0,
            sigma2: 1.6e-9,
            stoich_n: 0.80,
            stoich_p: 0.51,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub sigma0: f64,
    pub target_acceptance: f64,
    pub adaptation_exponent: f64,
    pub init_candidates: usize,
    pub init_scaled_cap: f64,
    pub init_refine_iters: usize,
    pub profile_sigma2_init: bool,
    pub ln_sigma2_init: [f64; 2],
}

impl Default for McmcSection {
    fn default() -> Self {
        let c = spme_infer::ChainRunConfig::default();
        Self {
            iterations: c.iterations,
            burn_in: c.burn_in,
            sigma0: c.sigma0,
            target_acceptance: c.target_acceptance,
            adaptation_exponent: c.adaptation_exponent,
            init_candidates: c.init_candidates,
            init_scaled_cap: c.init_scaled_cap,
            init_refine_iters: c.init_refine_iters,
            profile_sigma2_init: c.profile_sigma2_init,
            ln_sigma2_init: [(1e-12f64).ln(), (1e-6f64).ln()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MleSection {
    /// Random initialization spread around the truth.
    pub init_fraction: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub jacobian_rel_step: f64,
}

impl Default for MleSection {
    fn default() -> Self {
        Self {
            init_fraction: 0.10,
            tolerance: 1e-6,
            max_iterations: 4_000,
            jacobian_rel_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub master: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        Self { master: 20_240_101 }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
    }

    pub fn node_counts(&self) -> NodeCounts {
        NodeCounts {
            particle: self.model.particle_nodes,
            electrolyte: (
                self.model.electrolyte_nodes[0],
                self.model.electrolyte_nodes[1],
                self.model.electrolyte_nodes[2],
            ),
        }
    }

    pub fn parameter_set(&self) -> Result<ParameterSet<f64>, String> {
        match &self.model.params_file {
            None => Ok(ParameterSet::default()),
            Some(path) => ParameterSet::load(path).map_err(|e| e.to_string()),
        }
    }

    pub fn transport_truth(&self) -> TransportParams<f64> {
        TransportParams {
            d_s_n: self.truth.d_s_n,
            d_s_p: self.truth.d_s_p,
            d_e: self.truth.d_e,
            t_plus: self.truth.t_plus,
        }
    }

    /// Local-excitation signal template before amplitude calibration.
    pub fn local_signal_template(&self) -> SignalSpec {
        let mut spec = SignalSpec::multiharmonic_default(1.0);
        spec.sample_rate_hz = self.local.sample_rate_hz;
        spec.duration_s = self.local.duration_s;
        spec
    }

    pub fn wide_signal(&self) -> SignalSpec {
        let mut spec = SignalSpec::wide_excursion_default();
        spec.bias = self.wide.bias;
        spec.harmonics[0].amplitude = self.wide.amplitude;
        spec.harmonics[0].frequency_hz = self.wide.frequency_hz;
        spec.sample_rate_hz = self.wide.sample_rate_hz;
        spec.duration_s = self.wide.duration_s;
        spec
    }

    pub fn chain_config(&self, seed: u64) -> spme_infer::ChainRunConfig {
        spme_infer::ChainRunConfig {
            iterations: self.mcmc.iterations,
            burn_in: self.mcmc.burn_in,
            seed,
            sigma0: self.mcmc.sigma0,
            target_acceptance: self.mcmc.target_acceptance,
            adaptation_exponent: self.mcmc.adaptation_exponent,
            init_candidates: self.mcmc.init_candidates,
            init_scaled_cap: self.mcmc.init_scaled_cap,
            init_retries: 8,
            profile_sigma2_init: self.mcmc.profile_sigma2_init,
            init_refine_iters: self.mcmc.init_refine_iters,
        }
    }

    /// 1-based local point indices selected by the config and an optional
    /// command-line restriction.
    pub fn selected_points(&self, only: Option<usize>) -> Vec<usize> {
        let base: Vec<usize> = if self.local.points.is_empty() {
            (1..=11).collect()
        } else {
            self.local.points.clone()
        };
        match only {
            None => base,
            Some(p) => base.into_iter().filter(|&x| x == p).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_study_defaults() {
        let cfg: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.local.sample_rate_hz, 4000.0);
        assert_eq!(cfg.local.target_response_mv, 8.0);
        assert_eq!(cfg.wide.bias, 24.0);
        assert_eq!(cfg.wide.sigma2, 1.6e-9);
        assert_eq!(cfg.mcmc.iterations, 20_000);
        assert_eq!(cfg.mcmc.burn_in, 5_000);
        assert_eq!(cfg.mcmc.sigma0, 0.001);
        assert_eq!(cfg.node_counts(), NodeCounts::default());
        assert_eq!(cfg.selected_points(None), (1..=11).collect::<Vec<_>>());
    }

    #[test]
    fn partial_overrides_keep_other_defaults() {
        let cfg: ExperimentConfig = toml::from_str(
            "[mcmc]\niterations = 1000\nburn_in = 100\n\n[local]\npoints = [1, 6, 11]\n",
        )
        .unwrap();
        assert_eq!(cfg.mcmc.iterations, 1000);
        assert_eq!(cfg.mcmc.sigma0, 0.001);
        assert_eq!(cfg.selected_points(None), vec![1, 6, 11]);
        assert_eq!(cfg.selected_points(Some(6)), vec![6]);
        assert_eq!(cfg.selected_points(Some(2)), Vec::<usize>::new());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("[mcmc]\ntypo_key = 1\n").is_err());
    }
}
