//! Discrete-time simulator for the lithium-ion single particle model with
//! electrolyte dynamics (SPMe), plus current-excitation protocols and
//! synthetic dataset generation.
//!
//! The spatial dimensions (one averaged particle per electrode, a
//! three-region electrolyte) are discretized by Chebyshev spectral
//! collocation and converted to exact zero-order-hold discrete time, so a
//! full simulation is a sequence of small dense mat-vec products plus an
//! algebraic voltage readout.
//!
//! All numerical kernels are generic over the scalar type via [`Scalar`];
//! concrete `f64` aliases live at the crate root.

pub mod chebyshev;
pub mod dataset;
pub mod electrochem;
mod error;
pub mod model;
pub mod ocp;
pub mod params;
pub mod seed;
pub mod signal;
pub mod system;
pub mod zoh;

pub use error::{Error, Result};

use num_traits::FromPrimitive;

/// Floating-point scalar the model is generic over.
///
/// `nalgebra::RealField` supplies the elementary functions and linear
/// algebra, `FromPrimitive` the conversions from literals. Implemented by
/// `f32` and `f64`.
pub trait Scalar: nalgebra::RealField + FromPrimitive + Copy {
    /// Convert an `f64` literal, panicking only for non-representable
    /// values (never for ordinary constants).
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable in scalar type")
    }
}

impl<T: nalgebra::RealField + FromPrimitive + Copy> Scalar for T {}

/// Double-precision aliases used by the inference and CLI layers.
pub type ParameterSetF64 = params::ParameterSet<f64>;
pub type TransportParamsF64 = model::TransportParams<f64>;
pub type DiscreteModelF64 = model::DiscreteModel<f64>;
pub type ModelBuilderF64 = model::ModelBuilder<f64>;
pub type ModelStateF64 = model::ModelState<f64>;
