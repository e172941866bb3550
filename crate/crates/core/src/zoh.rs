//! Exact zero-order-hold conversion of `x' = A x + B u` to discrete time.

use crate::{Error, Result, Scalar};
use nalgebra::{DMatrix, DVector};

/// Discretize `(A, B)` under a zero-order hold of length `dt`:
/// `Ad = exp(A dt)`, `Bd = integral_0^dt exp(A s) ds B`.
///
/// Both matrices come out of a single exponential of the augmented matrix
/// `[[A, B], [0, 0]] dt`, which stays well defined when `A` is singular
/// (the conserved diffusion mode makes it so here).
pub fn c2d_zoh<T: Scalar>(a: &DMatrix<T>, b: &DVector<T>, dt: T) -> Result<(DMatrix<T>, DVector<T>)> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("c2d_zoh input matrices".into()));
    }
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::InvalidParameter(
            "A must be square and B must match its dimension".into(),
        ));
    }
    let mut aug = DMatrix::<T>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)] * dt;
        }
        aug[(i, n)] = b[i] * dt;
    }
    let exp = aug.exp();
    let ad = exp.view((0, 0), (n, n)).into_owned();
    let bd = DVector::from_iterator(n, (0..n).map(|i| exp[(i, n)]));
    if ad.iter().any(|v| !v.is_finite()) || bd.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("c2d_zoh result".into()));
    }
    Ok((ad, bd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_dynamics_limit() {
        let a = DMatrix::<f64>::zeros(2, 2);
        let b = DVector::from_vec(vec![3.0, -1.5]);
        let (ad, bd) = c2d_zoh(&a, &b, 0.25).unwrap();
        assert_eq!(ad, DMatrix::identity(2, 2));
        assert_relative_eq!(bd[0], 0.75, max_relative = 1e-14);
        assert_relative_eq!(bd[1], -0.375, max_relative = 1e-14);
    }

    #[test]
    fn scalar_reference_values() {
        // a = -1, b = 1, dt = 1: Ad = exp(-1), Bd = 1 - exp(-1)
        let a = DMatrix::from_element(1, 1, -1.0);
        let b = DVector::from_element(1, 1.0);
        let (ad, bd) = c2d_zoh(&a, &b, 1.0).unwrap();
        assert_relative_eq!(ad[(0, 0)], 0.36787944117144233, max_relative = 1e-14);
        assert_relative_eq!(bd[0], 0.6321205588285577, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = DMatrix::from_element(1, 1, f64::NAN);
        let b = DVector::from_element(1, 1.0);
        assert!(c2d_zoh(&a, &b, 1.0).is_err());
        let a = DMatrix::from_element(1, 1, -1.0);
        assert!(c2d_zoh(&a, &b, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn semigroup_property(
            dt in 0.01f64..2.0,
            a00 in -3.0f64..0.0,
            a01 in -1.0f64..1.0,
            a11 in -3.0f64..0.0,
        ) {
            let a = DMatrix::from_row_slice(2, 2, &[a00, a01, 0.0, a11]);
            let b = DVector::zeros(2);
            let (ad1, _) = c2d_zoh(&a, &b, dt).unwrap();
            let (ad2, _) = c2d_zoh(&a, &b, 2.0 * dt).unwrap();
            let sq = &ad1 * &ad1;
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((sq[(i, j)] - ad2[(i, j)]).abs() < 1e-10);
                }
            }
        }
    }
}
