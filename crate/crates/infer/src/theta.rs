//! The five estimated quantities in their dimensionless sampling space.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use spme_core::model::TransportParams;

/// Scale factor bringing the negative-electrode diffusivity into [0, 10].
pub const D_N_SCALE: f64 = 1e14;
/// Scale factor for the positive-electrode diffusivity.
pub const D_P_SCALE: f64 = 1e13;
/// Scale factor for the electrolyte diffusivity.
pub const D_E_SCALE: f64 = 1e10;

/// Sampling-space parameter vector: scaled diffusivities, transference
/// number, and the natural log of the noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    /// D_s,n * 1e14.
    pub d_n: f64,
    /// D_s,p * 1e13.
    pub d_p: f64,
    /// D_e * 1e10.
    pub d_e: f64,
    pub t_plus: f64,
    /// ln(sigma^2), sigma^2 in V^2.
    pub ln_sigma2: f64,
}

pub const PARAM_NAMES: [&str; 5] = ["d_n", "d_p", "d_e", "t_plus", "ln_sigma2"];

impl ThetaVector {
    pub fn from_physical(transport: TransportParams<f64>, sigma2: f64) -> Self {
        Self {
            d_n: transport.d_s_n * D_N_SCALE,
            d_p: transport.d_s_p * D_P_SCALE,
            d_e: transport.d_e * D_E_SCALE,
            t_plus: transport.t_plus,
            ln_sigma2: sigma2.ln(),
        }
    }

    /// Back to physical units, validating the physical-space constraints.
    pub fn to_physical(&self) -> Result<(TransportParams<f64>, f64)> {
        if !self.is_valid() {
            return Err(Error::Invalid(format!(
                "theta outside the physical support: {self:?}"
            )));
        }
        Ok(self.to_physical_unchecked())
    }

    pub fn to_physical_unchecked(&self) -> (TransportParams<f64>, f64) {
        (
            TransportParams {
                d_s_n: self.d_n / D_N_SCALE,
                d_s_p: self.d_p / D_P_SCALE,
                d_e: self.d_e / D_E_SCALE,
                t_plus: self.t_plus,
            },
            self.ln_sigma2.exp(),
        )
    }

    /// Physical-space validity: positive diffusivities, transference
    /// number in (0, 1), finite log noise variance.
    pub fn is_valid(&self) -> bool {
        self.d_n > 0.0
            && self.d_p > 0.0
            && self.d_e > 0.0
            && self.t_plus > 0.0
            && self.t_plus < 1.0
            && self.ln_sigma2.is_finite()
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.d_n, self.d_p, self.d_e, self.t_plus, self.ln_sigma2]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            d_n: v[0],
            d_p: v[1],
            d_e: v[2],
            t_plus: v[3],
            ln_sigma2: v[4],
        }
    }

    pub fn sigma2(&self) -> f64 {
        self.ln_sigma2.exp()
    }
}
