//! Fixed physical and geometric cell parameters.
//!
//! Defaults are the LCO/graphite parameter set listed in the Moura SPMe
//! repository; all quantities are stored in SI units.

use crate::{Error, Result, Scalar};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Electrode selector for per-electrode quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Electrode {
    Negative,
    Positive,
}

/// Electrolyte region selector (through-cell order: n, separator, p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Negative,
    Separator,
    Positive,
}

/// Full cell parameter set.
///
/// Region-tagged keys (`_n`, `_s`, `_p`) hold per-region values; the rest
/// are shared cell constants. Serializes to a flat `key = value` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSet<T> {
    /// Electrolyte volume fraction (porosity), per region (-).
    pub eps_n: T,
    pub eps_s: T,
    pub eps_p: T,
    /// Maximum lithium concentration in the solid (mol/m^3).
    pub c_max_n: T,
    pub c_max_p: T,
    /// Solid conductivity (S/m).
    pub sigma_n: T,
    pub sigma_p: T,
    /// Solid diffusivity (m^2/s).
    pub d_s_n: T,
    pub d_s_p: T,
    /// Particle radius (m).
    pub r_n: T,
    pub r_p: T,
    /// Electrode surface area density (1/m).
    pub a_n: T,
    pub a_p: T,
    /// Reaction rate constant ((A/m^2)(m^3/mol)^1.5).
    pub m_n: T,
    pub m_p: T,
    /// Region thickness (m).
    pub l_n: T,
    pub l_s: T,
    pub l_p: T,
    /// Reference open-circuit potential (V).
    pub u_ref_n: T,
    pub u_ref_p: T,
    /// Typical lithium-ion concentration in the electrolyte (mol/m^3).
    pub c_e_typ: T,
    /// Typical electrolyte diffusivity (m^2/s).
    pub d_e_typ: T,
    /// Typical electrolyte conductivity (S/m).
    pub kappa_e_typ: T,
    /// Faraday constant (C/mol).
    pub faraday: T,
    /// Universal gas constant (J/(mol K)).
    pub gas_constant: T,
    /// Temperature (K).
    pub temperature: T,
    /// Bruggeman coefficient (-).
    pub bruggeman: T,
    /// Transference number (-).
    pub t_plus: T,
    /// Typical (1C) current density (A/m^2).
    pub i_typ: T,
}

impl<T: Scalar> Default for ParameterSet<T> {
    fn default() -> Self {
        let c = T::lit;
        Self {
            eps_n: c(0.3),
            eps_s: c(1.0),
            eps_p: c(0.3),
            c_max_n: c(2.4983e4),
            c_max_p: c(5.1218e4),
            sigma_n: c(100.0),
            sigma_p: c(10.0),
            d_s_n: c(3.9e-14),
            d_s_p: c(1e-13),
            r_n: c(1e-5),
            r_p: c(1e-5),
            a_n: c(1.8e5),
            a_p: c(1.5e5),
            m_n: c(2e-5),
            m_p: c(6e-7),
            l_n: c(1e-4),
            l_s: c(2.5e-5),
            l_p: c(1e-4),
            u_ref_n: c(0.18),
            u_ref_p: c(3.94),
            c_e_typ: c(1e3),
            d_e_typ: c(5.34e-10),
            kappa_e_typ: c(1.1),
            faraday: c(96485.0),
            gas_constant: c(8.314472),
            temperature: c(298.15),
            bruggeman: c(1.5),
            t_plus: c(0.4),
            i_typ: c(24.0),
        }
    }
}

/// Per-electrode slice of the parameter set.
#[derive(Debug, Clone, Copy)]
pub struct ElectrodeParams<T> {
    pub c_max: T,
    pub sigma: T,
    pub d_s: T,
    pub radius: T,
    pub area_density: T,
    pub reaction_rate: T,
    pub thickness: T,
    pub u_ref: T,
}

impl<T: Scalar> ParameterSet<T> {
    pub fn electrode(&self, which: Electrode) -> ElectrodeParams<T> {
        match which {
            Electrode::Negative => ElectrodeParams {
                c_max: self.c_max_n,
                sigma: self.sigma_n,
                d_s: self.d_s_n,
                radius: self.r_n,
                area_density: self.a_n,
                reaction_rate: self.m_n,
                thickness: self.l_n,
                u_ref: self.u_ref_n,
            },
            Electrode::Positive => ElectrodeParams {
                c_max: self.c_max_p,
                sigma: self.sigma_p,
                d_s: self.d_s_p,
                radius: self.r_p,
                area_density: self.a_p,
                reaction_rate: self.m_p,
                thickness: self.l_p,
                u_ref: self.u_ref_p,
            },
        }
    }

    pub fn porosity(&self, region: Region) -> T {
        match region {
            Region::Negative => self.eps_n,
            Region::Separator => self.eps_s,
            Region::Positive => self.eps_p,
        }
    }

    pub fn region_thickness(&self, region: Region) -> T {
        match region {
            Region::Negative => self.l_n,
            Region::Separator => self.l_s,
            Region::Positive => self.l_p,
        }
    }

    /// Thermal voltage scale 2RT/F (V).
    pub fn two_rt_over_f(&self) -> T {
        T::lit(2.0) * self.gas_constant * self.temperature / self.faraday
    }

    /// Check the structural invariants (positivity, porosity and
    /// transference-number ranges).
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let one = T::one();
        let positive: [(&str, T); 19] = [
            ("c_max_n", self.c_max_n),
            ("c_max_p", self.c_max_p),
            ("sigma_n", self.sigma_n),
            ("sigma_p", self.sigma_p),
            ("d_s_n", self.d_s_n),
            ("d_s_p", self.d_s_p),
            ("r_n", self.r_n),
            ("r_p", self.r_p),
            ("a_n", self.a_n),
            ("a_p", self.a_p),
            ("m_n", self.m_n),
            ("m_p", self.m_p),
            ("l_n", self.l_n),
            ("l_s", self.l_s),
            ("l_p", self.l_p),
            ("c_e_typ", self.c_e_typ),
            ("d_e_typ", self.d_e_typ),
            ("kappa_e_typ", self.kappa_e_typ),
            ("i_typ", self.i_typ),
        ];
        for (name, v) in positive {
            if !(v > zero) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive"
                )));
            }
        }
        for (name, eps) in [("eps_n", self.eps_n), ("eps_s", self.eps_s), ("eps_p", self.eps_p)] {
            if !(eps > zero && eps <= one) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1]"
                )));
            }
        }
        if !(self.t_plus > zero && self.t_plus < one) {
            return Err(Error::InvalidParameter(
                "t_plus must lie in (0, 1)".into(),
            ));
        }
        if !(self.faraday > zero && self.gas_constant > zero && self.temperature > zero) {
            return Err(Error::InvalidParameter(
                "physical constants must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl ParameterSet<f64> {
    /// Write the parameter set as a flat `key = value` file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Load and validate a parameter set written by [`ParameterSet::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let set: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        set.validate()?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_table() {
        let p = ParameterSet::<f64>::default();
        assert_eq!(p.eps_n, 0.3);
        assert_eq!(p.eps_s, 1.0);
        assert_eq!(p.eps_p, 0.3);
        assert_eq!(p.c_max_n, 2.4983e4);
        assert_eq!(p.c_max_p, 5.1218e4);
        assert_eq!(p.sigma_n, 100.0);
        assert_eq!(p.sigma_p, 10.0);
        assert_eq!(p.d_s_n, 3.9e-14);
        assert_eq!(p.d_s_p, 1e-13);
        assert_eq!(p.r_n, 1e-5);
        assert_eq!(p.r_p, 1e-5);
        assert_eq!(p.a_n, 1.8e5);
        assert_eq!(p.a_p, 1.5e5);
        assert_eq!(p.m_n, 2e-5);
        assert_eq!(p.m_p, 6e-7);
        assert_eq!(p.l_n, 1e-4);
        assert_eq!(p.l_s, 2.5e-5);
        assert_eq!(p.l_p, 1e-4);
        assert_eq!(p.u_ref_n, 0.18);
        assert_eq!(p.u_ref_p, 3.94);
        assert_eq!(p.c_e_typ, 1e3);
        assert_eq!(p.d_e_typ, 5.34e-10);
        assert_eq!(p.kappa_e_typ, 1.1);
        assert_eq!(p.faraday, 96485.0);
        assert_eq!(p.gas_constant, 8.314472);
        assert_eq!(p.temperature, 298.15);
        assert_eq!(p.bruggeman, 1.5);
        assert_eq!(p.t_plus, 0.4);
        assert_eq!(p.i_typ, 24.0);
        p.validate().unwrap();
    }

    #[test]
    fn save_load_round_trips_bit_exactly() {
        let dir = std::env::temp_dir().join("spme-params-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("params.toml");
        let mut p = ParameterSet::<f64>::default();
        // exercise non-default, non-round values too
        p.d_s_n = 3.123456789012345e-14;
        p.t_plus = 0.123456789012345;
        p.save(&path).unwrap();
        let q = ParameterSet::<f64>::load(&path).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn validation_rejects_bad_ranges() {
        let mut p = ParameterSet::<f64>::default();
        p.t_plus = 1.0;
        assert!(p.validate().is_err());
        let mut p = ParameterSet::<f64>::default();
        p.eps_n = 0.0;
        assert!(p.validate().is_err());
        let mut p = ParameterSet::<f64>::default();
        p.d_s_p = -1e-13;
        assert!(p.validate().is_err());
    }
}
