//! Maximum-likelihood point estimation by derivative-free simplex search.
//!
//! The search runs in an unbounded reparameterization (log diffusivities,
//! logit transference number, log noise variance) so every simplex vertex
//! maps to a valid parameter vector; convergence is judged on the simplex
//! diameter in the scaled sampling space.

use crate::posterior::LogPosterior;
use crate::theta::ThetaVector;
use crate::{Error, Result};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};

/// Map to the unbounded search space.
pub fn to_unbounded(theta: &ThetaVector) -> DVector<f64> {
    DVector::from_vec(vec![
        theta.d_n.ln(),
        theta.d_p.ln(),
        theta.d_e.ln(),
        (theta.t_plus / (1.0 - theta.t_plus)).ln(),
        theta.ln_sigma2,
    ])
}

/// Inverse of [`to_unbounded`]; always lands on the physical support.
pub fn from_unbounded(u: &DVector<f64>) -> ThetaVector {
    // clamp keeps the image strictly inside (0, 1) when the logistic
    // saturates in floating point
    let logistic = |x: f64| (1.0 / (1.0 + (-x).exp())).clamp(1e-12, 1.0 - 1e-12);
    ThetaVector {
        d_n: u[0].exp(),
        d_p: u[1].exp(),
        d_e: u[2].exp(),
        t_plus: logistic(u[3]),
        ln_sigma2: u[4],
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    /// Simplex diameter in scaled space below which the search stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial simplex step in the unbounded coordinates.
    pub initial_step: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 4_000,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub theta: ThetaVector,
    /// Negative log-likelihood at the optimum.
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Maximize the Gaussian log-likelihood of `posterior`'s dataset.
pub fn mle(
    posterior: &LogPosterior<'_>,
    theta_init: &ThetaVector,
    options: &MleOptions,
) -> Result<MleResult> {
    if !theta_init.is_valid() {
        return Err(Error::Invalid("MLE initial point is not valid".into()));
    }
    let objective = |u: &DVector<f64>| -posterior.log_likelihood(&from_unbounded(u));
    let diameter = |points: &[DVector<f64>]| -> f64 {
        let mapped: Vec<[f64; 5]> = points.iter().map(|u| from_unbounded(u).as_array()).collect();
        let mut max = 0.0f64;
        for i in 0..mapped.len() {
            for j in (i + 1)..mapped.len() {
                let d: f64 = mapped[i]
                    .iter()
                    .zip(&mapped[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                max = max.max(d);
            }
        }
        max
    };
    let nm = nelder_mead(
        objective,
        &to_unbounded(theta_init),
        options.initial_step,
        options.tolerance,
        options.max_iterations,
        diameter,
    )?;
    Ok(MleResult {
        theta: from_unbounded(&nm.x),
        objective: nm.fx,
        iterations: nm.iterations,
        evaluations: nm.evaluations,
    })
}

/// Seeded initial guess with every coordinate drawn uniformly within
/// `fraction` of the configured truth (diffusivities and noise variance
/// relatively, the transference number likewise).
pub fn random_init_within(truth: &ThetaVector, fraction: f64, seed: u64) -> ThetaVector {
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut jitter = |v: f64| v * (1.0 + rng.random_range(-fraction..fraction));
    ThetaVector {
        d_n: jitter(truth.d_n),
        d_p: jitter(truth.d_p),
        d_e: jitter(truth.d_e),
        t_plus: jitter(truth.t_plus).clamp(1e-3, 1.0 - 1e-3),
        ln_sigma2: jitter(truth.sigma2()).max(f64::MIN_POSITIVE).ln(),
    }
}

#[derive(Debug)]
pub struct NelderMeadResult {
    pub x: DVector<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5). `diameter` measures the simplex in whatever metric the
/// caller wants convergence judged in.
pub fn nelder_mead<F, D>(
    f: F,
    x0: &DVector<f64>,
    initial_step: f64,
    tolerance: f64,
    max_iterations: usize,
    diameter: D,
) -> Result<NelderMeadResult>
where
    F: Fn(&DVector<f64>) -> f64,
    D: Fn(&[DVector<f64>]) -> f64,
{
    let dim = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &DVector<f64>| -> f64 {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<DVector<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.clone());
    for d in 0..dim {
        let mut v = x0.clone();
        v[d] += initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(&mut eval).collect();

    for iteration in 0..max_iterations {
        // order best -> worst
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let simplex_sorted: Vec<DVector<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let values_sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = simplex_sorted;
        values = values_sorted;

        if diameter(&simplex) < tolerance {
            return Ok(NelderMeadResult {
                x: simplex[0].clone(),
                fx: values[0],
                iterations: iteration,
                evaluations,
            });
        }

        let centroid: DVector<f64> = {
            let mut c = DVector::zeros(dim);
            for v in &simplex[..dim] {
                c += v;
            }
            c / dim as f64
        };
        let worst = simplex[dim].clone();
        let reflected = &centroid + (&centroid - &worst);
        let f_reflected = eval(&reflected);

        if f_reflected < values[0] {
            let expanded = &centroid + (&centroid - &worst) * 2.0;
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                simplex[dim] = expanded;
                values[dim] = f_expanded;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_reflected;
            }
        } else if f_reflected < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_reflected;
        } else {
            let contracted = if f_reflected < values[dim] {
                &centroid + (&reflected - &centroid) * 0.5
            } else {
                &centroid + (&worst - &centroid) * 0.5
            };
            let f_contracted = eval(&contracted);
            if f_contracted < values[dim].min(f_reflected) {
                simplex[dim] = contracted;
                values[dim] = f_contracted;
            } else {
                // shrink toward the best vertex
                let best = simplex[0].clone();
                for i in 1..=dim {
                    simplex[i] = &best + (&simplex[i] - &best) * 0.5;
                    values[i] = eval(&simplex[i]);
                }
            }
        }
    }

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Err(Error::NoConvergence {
        iterations: max_iterations,
        best_objective: values[best],
        best_point: simplex[best].iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn euclidean(points: &[DVector<f64>]) -> f64 {
        let mut max = 0.0f64;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                max = max.max((&points[i] - &points[j]).norm());
            }
        }
        max
    }

    #[test]
    fn quadratic_toy_recovers_minimum() {
        let target = DVector::from_vec(vec![1.5, -2.0, 0.25]);
        let f = |x: &DVector<f64>| (x - &target).norm_squared();
        let result = nelder_mead(
            f,
            &DVector::zeros(3),
            0.5,
            1e-9,
            5_000,
            euclidean,
        )
        .unwrap();
        for d in 0..3 {
            assert_relative_eq!(result.x[d], target[d], epsilon = 1e-5);
        }
    }

    #[test]
    fn iteration_cap_carries_best_point() {
        let f = |x: &DVector<f64>| x.norm_squared();
        let err = nelder_mead(
            f,
            &DVector::from_vec(vec![10.0, 10.0]),
            0.1,
            1e-14,
            3,
            euclidean,
        )
        .unwrap_err();
        match err {
            Error::NoConvergence {
                iterations,
                best_objective,
                best_point,
            } => {
                assert_eq!(iterations, 3);
                assert!(best_objective <= 200.0);
                assert_eq!(best_point.len(), 2);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn reparameterization_round_trips() {
        let theta = ThetaVector::from_array([3.9, 1.0, 5.34, 0.4, -20.25]);
        let back = from_unbounded(&to_unbounded(&theta));
        for (a, b) in theta.as_array().iter().zip(back.as_array()) {
            assert_relative_eq!(a, &b, max_relative = 1e-12);
        }
        // any unbounded point maps to the support
        let u = DVector::from_vec(vec![5.0, -30.0, 0.0, 80.0, 3.0]);
        assert!(from_unbounded(&u).is_valid());
    }

    #[test]
    fn random_init_stays_within_fraction() {
        let truth = ThetaVector::from_array([3.9, 1.0, 5.34, 0.4, (1.6e-9f64).ln()]);
        for seed in 0..50 {
            let init = random_init_within(&truth, 0.10, seed);
            assert!((init.d_n / truth.d_n - 1.0).abs() <= 0.10);
            assert!((init.d_p / truth.d_p - 1.0).abs() <= 0.10);
            assert!((init.d_e / truth.d_e - 1.0).abs() <= 0.10);
            assert!((init.t_plus / truth.t_plus - 1.0).abs() <= 0.10);
            assert!((init.sigma2() / truth.sigma2() - 1.0).abs() <= 0.10 + 1e-12);
        }
    }
}
