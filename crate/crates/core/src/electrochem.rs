//! Algebraic voltage relations: exchange-current densities, reaction and
//! concentration overpotentials, Ohmic losses, and the terminal-voltage
//! composition. Positive current is discharge.

use crate::ocp::ocp;
use crate::params::{Electrode, ParameterSet};
use crate::{Error, Result, Scalar};

/// Electrode-averaged quantities the voltage readout needs at one instant.
#[derive(Debug, Clone, Copy)]
pub struct ElectrodeReadout<T> {
    /// Surface concentration in the negative particle (mol/m^3).
    pub c_ss_n: T,
    /// Surface concentration in the positive particle (mol/m^3).
    pub c_ss_p: T,
    /// Electrode-averaged electrolyte concentration, negative region.
    pub c_e_avg_n: T,
    /// Electrode-averaged electrolyte concentration, positive region.
    pub c_e_avg_p: T,
}

/// Terminal voltage split into its five components; `total` is their sum.
#[derive(Debug, Clone, Copy)]
pub struct VoltageBreakdown<T> {
    pub u_eq: T,
    pub eta_r: T,
    pub eta_c: T,
    pub delta_phi_elec: T,
    pub delta_phi_solid: T,
    pub total: T,
}

/// Electrode-averaged exchange-current density,
/// j0 = m c_ss^1/2 (c_max - c_ss)^1/2 c_e^1/2.
pub fn exchange_current_density<T: Scalar>(
    reaction_rate: T,
    c_ss: T,
    c_max: T,
    c_e_avg: T,
) -> Result<T> {
    if c_ss < T::zero() || c_e_avg < T::zero() {
        return Err(Error::Domain(
            "concentrations must be non-negative".into(),
        ));
    }
    if c_ss > c_max {
        return Err(Error::Domain(
            "surface concentration exceeds the maximum".into(),
        ));
    }
    Ok(reaction_rate * c_ss.sqrt() * (c_max - c_ss).sqrt() * c_e_avg.sqrt())
}

/// Electrode-averaged reaction overpotential for one electrode,
/// eta = -(2RT/F) asinh(I / (a j0 L)).
pub fn reaction_overpotential<T: Scalar>(
    current: T,
    area_density: T,
    thickness: T,
    j0: T,
    two_rt_over_f: T,
) -> Result<T> {
    if current == T::zero() {
        return Ok(T::zero());
    }
    if j0 <= T::zero() {
        return Err(Error::Singularity(
            "exchange-current density vanished with nonzero current".into(),
        ));
    }
    Ok(-two_rt_over_f * (current / (area_density * j0 * thickness)).asinh())
}

/// Electrolyte concentration overpotential,
/// eta_c = (2RT / (F c_e,typ)) (1 - t+) (c_e_avg_p - c_e_avg_n).
pub fn concentration_overpotential<T: Scalar>(
    c_e_avg_p: T,
    c_e_avg_n: T,
    t_plus: T,
    params: &ParameterSet<T>,
) -> T {
    params.two_rt_over_f() / params.c_e_typ * (T::one() - t_plus) * (c_e_avg_p - c_e_avg_n)
}

/// Electrolyte and solid-phase Ohmic losses, both linear in the current.
pub fn ohmic_losses<T: Scalar>(current: T, params: &ParameterSet<T>) -> (T, T) {
    let three = T::lit(3.0);
    let b = params.bruggeman;
    let elec = -current / params.kappa_e_typ
        * (params.l_n / (three * params.eps_n.powf(b))
            + params.l_s / params.eps_s.powf(b)
            + params.l_p / (three * params.eps_p.powf(b)));
    let solid = -current / three * (params.l_p / params.sigma_p + params.l_n / params.sigma_n);
    (elec, solid)
}

/// Compose the terminal voltage from an instantaneous readout.
///
/// The equilibrium term evaluates the OCP functions at the
/// electrode-averaged surface stoichiometries.
pub fn terminal_voltage<T: Scalar>(
    readout: &ElectrodeReadout<T>,
    current: T,
    t_plus: T,
    params: &ParameterSet<T>,
) -> Result<VoltageBreakdown<T>> {
    let u_eq = ocp(Electrode::Positive, readout.c_ss_p / params.c_max_p)?
        - ocp(Electrode::Negative, readout.c_ss_n / params.c_max_n)?;

    let k = params.two_rt_over_f();
    let j0_n = exchange_current_density(params.m_n, readout.c_ss_n, params.c_max_n, readout.c_e_avg_n)?;
    let j0_p = exchange_current_density(params.m_p, readout.c_ss_p, params.c_max_p, readout.c_e_avg_p)?;
    let eta_r_n = reaction_overpotential(current, params.a_n, params.l_n, j0_n, k)?;
    let eta_r_p = reaction_overpotential(current, params.a_p, params.l_p, j0_p, k)?;
    let eta_r = eta_r_p - eta_r_n;

    let eta_c = concentration_overpotential(readout.c_e_avg_p, readout.c_e_avg_n, t_plus, params);
    let (delta_phi_elec, delta_phi_solid) = ohmic_losses(current, params);

    let total = u_eq + eta_r + eta_c + delta_phi_elec + delta_phi_solid;
    Ok(VoltageBreakdown {
        u_eq,
        eta_r,
        eta_c,
        delta_phi_elec,
        delta_phi_solid,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn params() -> ParameterSet<f64> {
        ParameterSet::default()
    }

    #[test]
    fn exchange_current_reference_value() {
        // m_n = 2e-5, c_ss = c_max/2, c_e = 1000 -> 7.900318278398664 A/m^2
        let p = params();
        let j0 = exchange_current_density(p.m_n, p.c_max_n / 2.0, p.c_max_n, 1000.0).unwrap();
        assert_relative_eq!(j0, 7.900318278398664, max_relative = 1e-12);
    }

    #[test]
    fn exchange_current_vanishing_factors() {
        let p = params();
        assert_eq!(
            exchange_current_density(p.m_n, 0.0, p.c_max_n, 1000.0).unwrap(),
            0.0
        );
        assert_eq!(
            exchange_current_density(p.m_n, p.c_max_n, p.c_max_n, 1000.0).unwrap(),
            0.0
        );
        assert!(exchange_current_density(p.m_n, -1.0, p.c_max_n, 1000.0).is_err());
        assert!(exchange_current_density(p.m_n, 1.0, p.c_max_n, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn exchange_current_symmetric_in_surface_concentration(f in 0.0f64..1.0) {
            let p = params();
            let c = f * p.c_max_n;
            let a = exchange_current_density(p.m_n, c, p.c_max_n, 1000.0).unwrap();
            let b = exchange_current_density(p.m_n, p.c_max_n - c, p.c_max_n, 1000.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn reaction_overpotential_is_odd(i in -100.0f64..100.0) {
            let p = params();
            let k = p.two_rt_over_f();
            let plus = reaction_overpotential(i, p.a_n, p.l_n, 7.9, k).unwrap();
            let minus = reaction_overpotential(-i, p.a_n, p.l_n, 7.9, k).unwrap();
            prop_assert!((plus + minus).abs() < 1e-15);
        }

        #[test]
        fn ohmic_losses_linear_in_current(i in -100.0f64..100.0) {
            let p = params();
            let (e1, s1) = ohmic_losses(1.0, &p);
            let (ei, si) = ohmic_losses(i, &p);
            prop_assert!((ei - i * e1).abs() < 1e-12);
            prop_assert!((si - i * s1).abs() < 1e-12);
        }
    }

    #[test]
    fn reaction_overpotential_reference_value() {
        // I = 24, a = 1.8e5, L = 1e-4, j0 = 7.90 -> -8.631985165537115e-3 V
        let p = params();
        let eta = reaction_overpotential(24.0, 1.8e5, 1e-4, 7.90, p.two_rt_over_f()).unwrap();
        assert_relative_eq!(eta, -0.008631985165537115, max_relative = 1e-12);
        assert_eq!(
            reaction_overpotential(0.0, 1.8e5, 1e-4, 7.90, p.two_rt_over_f()).unwrap(),
            0.0
        );
        assert!(reaction_overpotential(24.0, 1.8e5, 1e-4, 0.0, p.two_rt_over_f()).is_err());
    }

    #[test]
    fn concentration_overpotential_reference_value() {
        let p = params();
        // c_e_p - c_e_n = -20 mol/m^3, t+ = 0.4 -> -6.166247172430949e-4 V
        let eta = concentration_overpotential(990.0, 1010.0, 0.4, &p);
        assert_relative_eq!(eta, -0.0006166247172430949, max_relative = 1e-12);
        assert_eq!(concentration_overpotential(1000.0, 1000.0, 0.4, &p), 0.0);
        assert_eq!(concentration_overpotential(990.0, 1010.0, 1.0, &p), 0.0);
    }

    #[test]
    fn ohmic_losses_reference_values() {
        let p = params();
        let (elec, solid) = ohmic_losses(24.0, &p);
        assert_relative_eq!(elec, -0.009397536282911777, max_relative = 1e-12);
        assert_relative_eq!(solid, -8.8e-5, max_relative = 1e-12);
        let (e0, s0) = ohmic_losses(0.0, &p);
        assert_eq!((e0, s0), (0.0, 0.0));
    }

    #[test]
    fn terminal_voltage_at_rest_is_full_cell_ocv() {
        let p = params();
        let readout = ElectrodeReadout {
            c_ss_n: 0.49 * p.c_max_n,
            c_ss_p: 0.69 * p.c_max_p,
            c_e_avg_n: p.c_e_typ,
            c_e_avg_p: p.c_e_typ,
        };
        let v = terminal_voltage(&readout, 0.0, p.t_plus, &p).unwrap();
        let ocv = ocp(Electrode::Positive, 0.69).unwrap() - ocp(Electrode::Negative, 0.49).unwrap();
        assert_abs_diff_eq!(v.total, ocv, epsilon = 1e-14);
        assert_eq!(v.eta_r, 0.0);
        assert_eq!(v.eta_c, 0.0);
        assert_eq!(v.delta_phi_elec, 0.0);
        assert_eq!(v.delta_phi_solid, 0.0);
    }

    #[test]
    fn terminal_voltage_matches_component_sum_oracle() {
        // Recompute every component independently and compare to the
        // breakdown returned in one call.
        let p = params();
        let readout = ElectrodeReadout {
            c_ss_n: 0.49 * p.c_max_n,
            c_ss_p: 0.69 * p.c_max_p,
            c_e_avg_n: 1010.0,
            c_e_avg_p: 990.0,
        };
        let i = 24.0;
        let v = terminal_voltage(&readout, i, p.t_plus, &p).unwrap();

        let k = p.two_rt_over_f();
        let u_eq = ocp(Electrode::Positive, 0.69).unwrap() - ocp(Electrode::Negative, 0.49).unwrap();
        let j0n = p.m_n * (0.49 * p.c_max_n).sqrt() * (0.51 * p.c_max_n).sqrt() * 1010.0f64.sqrt();
        let j0p = p.m_p * (0.69 * p.c_max_p).sqrt() * (0.31 * p.c_max_p).sqrt() * 990.0f64.sqrt();
        let eta_r = -k * (i / (p.a_p * j0p * p.l_p)).asinh() + k * (i / (p.a_n * j0n * p.l_n)).asinh();
        let eta_c = k / p.c_e_typ * 0.6 * (990.0 - 1010.0);
        let (elec, solid) = ohmic_losses(i, &p);
        let total = u_eq + eta_r + eta_c + elec + solid;

        assert_relative_eq!(v.u_eq, u_eq, max_relative = 1e-12);
        assert_relative_eq!(v.eta_r, eta_r, max_relative = 1e-12);
        assert_relative_eq!(v.eta_c, eta_c, max_relative = 1e-12);
        assert_relative_eq!(v.total, total, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn breakdown_total_is_component_sum(
            fn_ in 0.05f64..0.95,
            fp in 0.05f64..0.95,
            cen in 800.0f64..1200.0,
            cep in 800.0f64..1200.0,
            i in -50.0f64..50.0,
        ) {
            let p = params();
            let readout = ElectrodeReadout {
                c_ss_n: fn_ * p.c_max_n,
                c_ss_p: fp * p.c_max_p,
                c_e_avg_n: cen,
                c_e_avg_p: cep,
            };
            let v = terminal_voltage(&readout, i, p.t_plus, &p).unwrap();
            let sum = v.u_eq + v.eta_r + v.eta_c + v.delta_phi_elec + v.delta_phi_solid;
            prop_assert!((v.total - sum).abs() < 1e-12);
        }
    }
}
