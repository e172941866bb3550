//! Open-circuit potential correlations.
//!
//! The model treats the OCP functions as known inputs. The fits below are
//! the published graphite (MCMB) and lithium-cobalt-oxide correlations of
//! the DUALFOIL parameter family, in the form used by LIONSIMBA
//! (Torchio et al., J. Electrochem. Soc. 163 (2016) A1192), which is
//! consistent with the LCO cell the default [`crate::params::ParameterSet`]
//! describes. Both functions map surface stoichiometry in [0, 1] to a
//! half-cell potential in volts and can be swapped by calling code that
//! needs a different chemistry.

use crate::params::Electrode;
use crate::{Error, Result, Scalar};

/// Stoichiometry at which the graphite fit crosses the 0.18 V reference.
pub const REF_STOICH_NEGATIVE: f64 = 0.15;
/// Stoichiometry at which the LCO fit crosses the 3.94 V reference.
pub const REF_STOICH_POSITIVE: f64 = 0.76;

/// Half-cell open-circuit potential at the given surface stoichiometry.
///
/// Errors when the stoichiometry lies outside [0, 1]. The graphite
/// correlation diverges as the stoichiometry approaches zero; simulations
/// keep surface concentrations strictly inside the physical range.
pub fn ocp<T: Scalar>(electrode: Electrode, stoichiometry: T) -> Result<T> {
    if !(stoichiometry >= T::zero() && stoichiometry <= T::one()) {
        return Err(Error::Domain(format!(
            "stoichiometry must lie in [0, 1], got {stoichiometry:?}"
        )));
    }
    Ok(match electrode {
        Electrode::Negative => ocp_negative(stoichiometry),
        Electrode::Positive => ocp_positive(stoichiometry),
    })
}

/// Graphite (MCMB) fit:
/// U(x) = 0.7222 + 0.1387 x + 0.029 x^0.5 - 0.0172/x + 0.0019/x^1.5
///        + 0.2808 exp(0.90 - 15 x) - 0.7984 exp(0.4465 x - 0.4108)
fn ocp_negative<T: Scalar>(x: T) -> T {
    let c = T::lit;
    c(0.7222)
        + c(0.1387) * x
        + c(0.029) * x.sqrt()
        - c(0.0172) / x
        + c(0.0019) / (x * x.sqrt())
        + c(0.2808) * (c(0.90) - c(15.0) * x).exp()
        - c(0.7984) * (c(0.4465) * x - c(0.4108)).exp()
}

/// Lithium cobalt oxide fit: ratio of even polynomials in the
/// stoichiometry. The rational form has a spurious pole near x = 0.28,
/// well below the cathode's working window (roughly [0.4, 1]); callers
/// stay inside that window during valid simulations.
///
/// U(x) = (-4.656 + 88.669 x^2 - 401.119 x^4 + 342.909 x^6 - 462.471 x^8
///         + 433.434 x^10)
///      / (-1 + 18.933 x^2 - 79.532 x^4 + 37.311 x^6 - 73.083 x^8
///         + 95.96 x^10)
fn ocp_positive<T: Scalar>(x: T) -> T {
    let c = T::lit;
    let x2 = x * x;
    let x4 = x2 * x2;
    let x6 = x4 * x2;
    let x8 = x4 * x4;
    let x10 = x8 * x2;
    let num = c(-4.656) + c(88.669) * x2 - c(401.119) * x4 + c(342.909) * x6
        - c(462.471) * x8
        + c(433.434) * x10;
    let den = c(-1.0) + c(18.933) * x2 - c(79.532) * x4 + c(37.311) * x6 - c(73.083) * x8
        + c(95.96) * x10;
    num / den
}
