//! Current excitation signals and the study's state-of-charge grid.

use crate::{Error, Result, Scalar};
use serde::{Deserialize, Serialize};

/// Kind tag for a current signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    /// Zero-bias sum of sinusoids.
    Multiharmonic,
    /// Single sinusoid riding a DC bias.
    BiasedSinusoid,
    /// Constant current.
    Constant,
}

/// One sinusoidal component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub frequency_hz: f64,
    /// Current amplitude (A/m^2).
    pub amplitude: f64,
}

/// Sampled current signal description. All phases are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub harmonics: Vec<Harmonic>,
    /// DC bias (A/m^2).
    pub bias: f64,
}

impl SignalSpec {
    /// The study's local excitation: four harmonics a decade apart from
    /// 100 mHz to 100 Hz, equal amplitudes, zero bias, sampled at 4000 Hz
    /// for one period of the slowest harmonic.
    pub fn multiharmonic_default(amplitude_per_harmonic: f64) -> Self {
        Self {
            kind: SignalKind::Multiharmonic,
            sample_rate_hz: 4000.0,
            duration_s: 10.0,
            harmonics: [0.1, 1.0, 10.0, 100.0]
                .into_iter()
                .map(|frequency_hz| Harmonic {
                    frequency_hz,
                    amplitude: amplitude_per_harmonic,
                })
                .collect(),
            bias: 0.0,
        }
    }

    /// The study's wide-excursion excitation: a C/24 sinusoid at 1 mHz on
    /// a 1C bias, one period at 1 Hz sampling.
    pub fn wide_excursion_default() -> Self {
        Self {
            kind: SignalKind::BiasedSinusoid,
            sample_rate_hz: 1.0,
            duration_s: 1000.0,
            harmonics: vec![Harmonic {
                frequency_hz: 1e-3,
                amplitude: 1.0,
            }],
            bias: 24.0,
        }
    }

    /// Constant current of the given magnitude.
    pub fn constant(bias: f64, sample_rate_hz: f64, duration_s: f64) -> Self {
        Self {
            kind: SignalKind::Constant,
            sample_rate_hz,
            duration_s,
            harmonics: Vec::new(),
            bias,
        }
    }

    /// Copy with every harmonic amplitude multiplied by `scale`.
    pub fn scaled_amplitudes(&self, scale: f64) -> Self {
        let mut out = self.clone();
        for h in &mut out.harmonics {
            h.amplitude *= scale;
        }
        out
    }

    /// The same signal without its harmonics (bias only).
    pub fn bias_only(&self) -> Self {
        let mut out = self.clone();
        out.kind = SignalKind::Constant;
        out.harmonics.clear();
        out
    }

    pub fn num_samples(&self) -> usize {
        (self.sample_rate_hz * self.duration_s).round() as usize
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn max_frequency(&self) -> f64 {
        self.harmonics
            .iter()
            .map(|h| h.frequency_hz)
            .fold(0.0, f64::max)
    }

    pub fn min_frequency(&self) -> Option<f64> {
        self.harmonics
            .iter()
            .map(|h| h.frequency_hz)
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) || !(self.duration_s > 0.0) {
            return Err(Error::Signal(
                "sample rate and duration must be positive".into(),
            ));
        }
        if matches!(self.kind, SignalKind::Constant) {
            return Ok(());
        }
        if self.harmonics.is_empty() {
            return Err(Error::Signal("sinusoidal signal needs harmonics".into()));
        }
        if self.harmonics.iter().any(|h| h.frequency_hz <= 0.0) {
            return Err(Error::Signal("harmonic frequencies must be positive".into()));
        }
        if self.sample_rate_hz <= 2.0 * self.max_frequency() {
            return Err(Error::Signal(format!(
                "sample rate {} Hz violates the Nyquist bound for {} Hz",
                self.sample_rate_hz,
                self.max_frequency()
            )));
        }
        let min_f = self.min_frequency().unwrap();
        if self.duration_s * min_f < 1.0 - 1e-12 {
            return Err(Error::Signal(format!(
                "duration {} s is shorter than one period of the {} Hz fundamental",
                self.duration_s, min_f
            )));
        }
        Ok(())
    }

    /// Sample the signal on its grid `t_k = k / fs`.
    pub fn generate<T: Scalar>(&self) -> Result<Vec<T>> {
        self.validate()?;
        let n = self.num_samples();
        let dt = self.dt();
        let two_pi = std::f64::consts::TAU;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let t = k as f64 * dt;
            let mut v = self.bias;
            for h in &self.harmonics {
                v += h.amplitude * (two_pi * h.frequency_hz * t).sin();
            }
            out.push(T::lit(v));
        }
        Ok(out)
    }
}

/// Zero-bias multiharmonic current series.
pub fn multiharmonic_current<T: Scalar>(spec: &SignalSpec) -> Result<Vec<T>> {
    if !matches!(spec.kind, SignalKind::Multiharmonic) {
        return Err(Error::Signal("spec kind is not multiharmonic".into()));
    }
    if spec.bias != 0.0 {
        return Err(Error::Signal("multiharmonic signal must have zero bias".into()));
    }
    spec.generate()
}

/// Biased single-sinusoid current series.
pub fn biased_sinusoid_current<T: Scalar>(spec: &SignalSpec) -> Result<Vec<T>> {
    if !matches!(spec.kind, SignalKind::BiasedSinusoid) {
        return Err(Error::Signal("spec kind is not biased-sinusoid".into()));
    }
    if spec.harmonics.len() != 1 {
        return Err(Error::Signal(
            "biased sinusoid takes exactly one harmonic".into(),
        ));
    }
    spec.generate()
}

/// The eleven initial surface-stoichiometry pairs (negative, positive) of
/// the local excitation study, ordered from high to low cell state of
/// charge.
pub fn soc_points() -> [(f64, f64); 11] {
    [
        (0.80, 0.51),
        (0.73, 0.55),
        (0.67, 0.59),
        (0.61, 0.62),
        (0.55, 0.66),
        (0.49, 0.69),
        (0.43, 0.73),
        (0.37, 0.76),
        (0.31, 0.80),
        (0.25, 0.83),
        (0.19, 0.87),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn paper_default_multiharmonic() {
        let spec = SignalSpec::multiharmonic_default(1.0);
        assert_eq!(spec.sample_rate_hz, 4000.0);
        let freqs: Vec<f64> = spec.harmonics.iter().map(|h| h.frequency_hz).collect();
        assert_eq!(freqs, vec![0.1, 1.0, 10.0, 100.0]);
        assert_eq!(spec.num_samples(), 40_000);
        spec.validate().unwrap();
    }

    #[test]
    fn multiharmonic_has_zero_mean_over_fundamental_period() {
        let spec = SignalSpec::multiharmonic_default(0.25);
        let series: Vec<f64> = multiharmonic_current(&spec).unwrap();
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        assert!(mean.abs() < 1e-12 * 0.25, "mean = {mean}");
    }

    #[test]
    fn single_harmonic_is_a_plain_sine() {
        let spec = SignalSpec {
            kind: SignalKind::Multiharmonic,
            sample_rate_hz: 100.0,
            duration_s: 2.0,
            harmonics: vec![Harmonic {
                frequency_hz: 2.0,
                amplitude: 3.5,
            }],
            bias: 0.0,
        };
        let series: Vec<f64> = multiharmonic_current(&spec).unwrap();
        for (k, &v) in series.iter().enumerate() {
            let t = k as f64 / 100.0;
            assert_abs_diff_eq!(v, 3.5 * (std::f64::consts::TAU * 2.0 * t).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn nyquist_violation_is_rejected() {
        let mut spec = SignalSpec::multiharmonic_default(1.0);
        spec.sample_rate_hz = 150.0; // max harmonic is 100 Hz
        assert!(multiharmonic_current::<f64>(&spec).is_err());
        let mut spec = SignalSpec::multiharmonic_default(1.0);
        spec.duration_s = 5.0; // shorter than the 10 s fundamental
        assert!(spec.validate().is_err());
    }

    #[test]
    fn biased_sinusoid_defaults() {
        let spec = SignalSpec::wide_excursion_default();
        let series: Vec<f64> = biased_sinusoid_current(&spec).unwrap();
        assert_eq!(series.len(), 1000);
        assert_eq!(series[0], 24.0); // sine vanishes at t = 0
        let mean = series.iter().sum::<f64>() / 1000.0;
        assert_relative_eq!(mean, 24.0, max_relative = 1e-9);
    }

    #[test]
    fn degenerate_sinusoid_is_constant() {
        let mut spec = SignalSpec::wide_excursion_default();
        spec.harmonics[0].amplitude = 0.0;
        let series: Vec<f64> = biased_sinusoid_current(&spec).unwrap();
        assert!(series.iter().all(|&v| v == 24.0));
    }

    #[test]
    fn soc_points_match_study_table() {
        let pts = soc_points();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[0], (0.80, 0.51));
        assert_eq!(pts[10], (0.19, 0.87));
        // negative stoichiometries fall roughly equispaced from 0.80 to 0.19
        for pair in pts.windows(2) {
            let step = pair[1].0 - pair[0].0;
            assert!((-0.075..=-0.055).contains(&step), "step = {step}");
        }
    }
}
