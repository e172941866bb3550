//! Assembled discrete-time cell model and the simulation loop.

use crate::chebyshev::{chebyshev_grid, radial_even_grid, ChebyshevGrid, RadialEvenGrid};
use crate::electrochem::{terminal_voltage, ElectrodeReadout, VoltageBreakdown};
use crate::params::{Electrode, ParameterSet};
use crate::system::{
    electrolyte_system_on_grids, particle_system_on_grid, ElectrolyteSystem, ParticleSystem,
    StateLabel,
};
use crate::zoh::c2d_zoh;
use crate::{Error, Result, Scalar};
use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[inline]
fn row_dot<T: Scalar>(row: &RowDVector<T>, v: &DVector<T>) -> T {
    let mut acc = T::zero();
    for (a, b) in row.iter().zip(v.iter()) {
        acc += *a * *b;
    }
    acc
}

/// The transport quantities the inference layer estimates, in physical
/// (SI) units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportParams<T> {
    /// Negative-electrode solid diffusivity (m^2/s).
    pub d_s_n: T,
    /// Positive-electrode solid diffusivity (m^2/s).
    pub d_s_p: T,
    /// Electrolyte diffusivity (m^2/s).
    pub d_e: T,
    /// Transference number (-).
    pub t_plus: T,
}

impl<T: Scalar> TransportParams<T> {
    pub fn from_params(params: &ParameterSet<T>) -> Self {
        Self {
            d_s_n: params.d_s_n,
            d_s_p: params.d_s_p,
            d_e: params.d_e_typ,
            t_plus: params.t_plus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_s_n > T::zero() && self.d_s_p > T::zero() && self.d_e > T::zero()) {
            return Err(Error::InvalidParameter(
                "diffusivities must be strictly positive".into(),
            ));
        }
        if !(self.t_plus > T::zero() && self.t_plus < T::one()) {
            return Err(Error::InvalidParameter("t_plus must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Collocation resolution: states per particle and per electrolyte region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCounts {
    /// States per particle (center node plus interior nodes).
    pub particle: usize,
    /// Region orders (negative, separator, positive); the retained
    /// electrolyte states are the strict-interior nodes.
    pub electrolyte: (usize, usize, usize),
}

impl Default for NodeCounts {
    /// Baseline resolution: three states per particle and eight in the
    /// electrolyte.
    fn default() -> Self {
        Self {
            particle: 3,
            electrolyte: (4, 3, 4),
        }
    }
}

impl NodeCounts {
    pub fn doubled(&self) -> Self {
        let (n, s, p) = self.electrolyte;
        Self {
            particle: self.particle * 2,
            electrolyte: (n * 2, s * 2, p * 2),
        }
    }

    pub fn electrolyte_states(&self) -> usize {
        let (n, s, p) = self.electrolyte;
        n + s + p - 3
    }

    pub fn total_states(&self) -> usize {
        2 * self.particle + self.electrolyte_states()
    }
}

/// Concentration state of the three subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState<T> {
    pub c_s_n: DVector<T>,
    pub c_s_p: DVector<T>,
    pub c_e: DVector<T>,
}

impl<T: Scalar> ModelState<T> {
    /// Uniform concentrations from initial surface stoichiometries; the
    /// electrolyte starts at its typical concentration.
    pub fn uniform(
        params: &ParameterSet<T>,
        counts: NodeCounts,
        stoich_n: T,
        stoich_p: T,
    ) -> Self {
        Self {
            c_s_n: DVector::from_element(counts.particle, stoich_n * params.c_max_n),
            c_s_p: DVector::from_element(counts.particle, stoich_p * params.c_max_p),
            c_e: DVector::from_element(counts.electrolyte_states(), params.c_e_typ),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c_s_n.iter().all(|v| v.is_finite())
            && self.c_s_p.iter().all(|v| v.is_finite())
            && self.c_e.iter().all(|v| v.is_finite())
    }
}

/// One discretized subsystem with its hold-equivalent matrices.
#[derive(Debug, Clone, PartialEq)]
struct DiscreteSubsystem<T> {
    ad: DMatrix<T>,
    bd: DVector<T>,
}

impl<T: Scalar> DiscreteSubsystem<T> {
    fn step(&self, x: &DVector<T>, current: T) -> DVector<T> {
        let mut out = self.bd.clone() * current;
        out.gemv(T::one(), &self.ad, x, T::one());
        out
    }

    /// `out = Ad x + Bd I` without allocating.
    fn step_into(&self, x: &DVector<T>, current: T, out: &mut DVector<T>) {
        out.copy_from(&self.bd);
        *out *= current;
        out.gemv(T::one(), &self.ad, x, T::one());
    }
}

/// Assembled discrete-time cell model for one transport-parameter vector
/// and timestep. Immutable after assembly; simulations only read it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel<T> {
    particle_n: DiscreteSubsystem<T>,
    particle_p: DiscreteSubsystem<T>,
    electrolyte: DiscreteSubsystem<T>,
    surface_row_n: RowDVector<T>,
    surface_ft_n: T,
    surface_row_p: RowDVector<T>,
    surface_ft_p: T,
    avg_row_particle_n: RowDVector<T>,
    avg_ft_particle_n: T,
    avg_row_particle_p: RowDVector<T>,
    avg_ft_particle_p: T,
    avg_row_e_n: RowDVector<T>,
    avg_row_e_p: RowDVector<T>,
    mass_row_e: RowDVector<T>,
    labels: Vec<StateLabel<T>>,
    pub dt: T,
    pub transport: TransportParams<T>,
    pub params: ParameterSet<T>,
    pub counts: NodeCounts,
}

impl<T: Scalar> DiscreteModel<T> {
    pub fn labels(&self) -> &[StateLabel<T>] {
        &self.labels
    }

    pub fn state_dim(&self) -> usize {
        self.labels.len()
    }

    /// Discrete transition matrices of each particle subsystem.
    pub fn particle_transition(&self, electrode: Electrode) -> &DMatrix<T> {
        match electrode {
            Electrode::Negative => &self.particle_n.ad,
            Electrode::Positive => &self.particle_p.ad,
        }
    }

    pub fn electrolyte_transition(&self) -> (&DMatrix<T>, &DVector<T>) {
        (&self.electrolyte.ad, &self.electrolyte.bd)
    }

    /// Total electrolyte ion content of a state (mol/m^2 of cell area).
    pub fn electrolyte_ion_content(&self, state: &ModelState<T>) -> T {
        row_dot(&self.mass_row_e, &state.c_e)
    }

    /// Electrolyte mass functional as a row over electrolyte states.
    pub fn electrolyte_mass_row(&self) -> &RowDVector<T> {
        &self.mass_row_e
    }

    /// Volume-averaged particle concentration, including the surface-node
    /// feedthrough of the applied current.
    pub fn particle_mean_concentration(
        &self,
        electrode: Electrode,
        state: &ModelState<T>,
        current: T,
    ) -> T {
        match electrode {
            Electrode::Negative => {
                row_dot(&self.avg_row_particle_n, &state.c_s_n) + self.avg_ft_particle_n * current
            }
            Electrode::Positive => {
                row_dot(&self.avg_row_particle_p, &state.c_s_p) + self.avg_ft_particle_p * current
            }
        }
    }

    /// Instantaneous readout entering the voltage algebra.
    pub fn readout(&self, state: &ModelState<T>, current: T) -> ElectrodeReadout<T> {
        ElectrodeReadout {
            c_ss_n: row_dot(&self.surface_row_n, &state.c_s_n) + self.surface_ft_n * current,
            c_ss_p: row_dot(&self.surface_row_p, &state.c_s_p) + self.surface_ft_p * current,
            c_e_avg_n: row_dot(&self.avg_row_e_n, &state.c_e),
            c_e_avg_p: row_dot(&self.avg_row_e_p, &state.c_e),
        }
    }

    /// Advance the state by one hold interval under the given current.
    pub fn step(&self, state: &ModelState<T>, current: T) -> ModelState<T> {
        ModelState {
            c_s_n: self.particle_n.step(&state.c_s_n, current),
            c_s_p: self.particle_p.step(&state.c_s_p, current),
            c_e: self.electrolyte.step(&state.c_e, current),
        }
    }
}

/// Builder that caches the collocation grids (resolution- but not
/// parameter-dependent) so repeated assemblies for new transport values
/// only redo the cheap algebra and the matrix exponentials.
#[derive(Debug, Clone)]
pub struct ModelBuilder<T> {
    params: ParameterSet<T>,
    counts: NodeCounts,
    dt: T,
    particle_grid_n: RadialEvenGrid<T>,
    particle_grid_p: RadialEvenGrid<T>,
    electrolyte_grids: [ChebyshevGrid<T>; 3],
}

impl<T: Scalar> ModelBuilder<T> {
    pub fn new(params: ParameterSet<T>, counts: NodeCounts, dt: T) -> Result<Self> {
        params.validate()?;
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if counts.particle < 2 {
            return Err(Error::InvalidParameter(
                "particle node count must be >= 2".into(),
            ));
        }
        let particle_grid_n = radial_even_grid(counts.particle, params.r_n)?;
        let particle_grid_p = radial_even_grid(counts.particle, params.r_p)?;
        let (n_n, n_s, n_p) = counts.electrolyte;
        let electrolyte_grids = [
            chebyshev_grid(n_n, (T::zero(), params.l_n))?,
            chebyshev_grid(n_s, (params.l_n, params.l_n + params.l_s))?,
            chebyshev_grid(
                n_p,
                (params.l_n + params.l_s, params.l_n + params.l_s + params.l_p),
            )?,
        ];
        Ok(Self {
            params,
            counts,
            dt,
            particle_grid_n,
            particle_grid_p,
            electrolyte_grids,
        })
    }

    pub fn params(&self) -> &ParameterSet<T> {
        &self.params
    }

    pub fn counts(&self) -> NodeCounts {
        self.counts
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Build the continuous-time subsystems for one transport vector.
    pub fn assemble_continuous(
        &self,
        transport: TransportParams<T>,
    ) -> Result<(ParticleSystem<T>, ParticleSystem<T>, ElectrolyteSystem<T>)> {
        transport.validate()?;
        let p = &self.params;
        let part_n = particle_system_on_grid(
            &self.particle_grid_n,
            transport.d_s_n,
            p.a_n,
            p.l_n,
            Electrode::Negative,
            p.faraday,
        )?;
        let part_p = particle_system_on_grid(
            &self.particle_grid_p,
            transport.d_s_p,
            p.a_p,
            p.l_p,
            Electrode::Positive,
            p.faraday,
        )?;
        let elyte =
            electrolyte_system_on_grids(&self.electrolyte_grids, p, transport.d_e, transport.t_plus)?;
        Ok((part_n, part_p, elyte))
    }

    /// Assemble the hold-equivalent discrete model.
    pub fn assemble(&self, transport: TransportParams<T>) -> Result<DiscreteModel<T>> {
        let (part_n, part_p, elyte) = self.assemble_continuous(transport)?;
        let (ad_n, bd_n) = c2d_zoh(&part_n.system.a, &part_n.system.b, self.dt)?;
        let (ad_p, bd_p) = c2d_zoh(&part_p.system.a, &part_p.system.b, self.dt)?;
        let (ad_e, bd_e) = c2d_zoh(&elyte.system.a, &elyte.system.b, self.dt)?;

        let mut labels = part_n.system.labels.clone();
        labels.extend(part_p.system.labels.iter().cloned());
        labels.extend(elyte.system.labels.iter().cloned());

        Ok(DiscreteModel {
            particle_n: DiscreteSubsystem { ad: ad_n, bd: bd_n },
            particle_p: DiscreteSubsystem { ad: ad_p, bd: bd_p },
            electrolyte: DiscreteSubsystem { ad: ad_e, bd: bd_e },
            surface_row_n: part_n.surface_row,
            surface_ft_n: part_n.surface_feedthrough,
            surface_row_p: part_p.surface_row,
            surface_ft_p: part_p.surface_feedthrough,
            avg_row_particle_n: part_n.avg_row,
            avg_ft_particle_n: part_n.avg_feedthrough,
            avg_row_particle_p: part_p.avg_row,
            avg_ft_particle_p: part_p.avg_feedthrough,
            avg_row_e_n: elyte.avg_row_n,
            avg_row_e_p: elyte.avg_row_p,
            mass_row_e: elyte.mass_row,
            labels,
            dt: self.dt,
            transport,
            params: self.params.clone(),
            counts: self.counts,
        })
    }
}

/// One-shot assembly without builder reuse.
pub fn assemble_model<T: Scalar>(
    transport: TransportParams<T>,
    params: &ParameterSet<T>,
    dt: T,
    counts: NodeCounts,
) -> Result<DiscreteModel<T>> {
    ModelBuilder::new(params.clone(), counts, dt)?.assemble(transport)
}

/// Voltage series from stepping the model over a sampled current.
///
/// Sample `k` pairs the state at `t_k` with the current applied over
/// `[t_k, t_k + dt)`; sample 0 uses the initial state. Surface
/// concentrations and electrolyte positivity are checked every step and a
/// violation reports the offending step index.
pub fn simulate<T: Scalar>(
    model: &DiscreteModel<T>,
    current: &[T],
    x0: &ModelState<T>,
) -> Result<Vec<T>> {
    let (voltage, _) = simulate_impl(model, current, x0, false)?;
    Ok(voltage)
}

/// As [`simulate`], additionally returning the state at every sample.
pub fn simulate_with_trajectory<T: Scalar>(
    model: &DiscreteModel<T>,
    current: &[T],
    x0: &ModelState<T>,
) -> Result<(Vec<T>, Vec<ModelState<T>>)> {
    let (voltage, traj) = simulate_impl(model, current, x0, true)?;
    Ok((voltage, traj.expect("trajectory requested")))
}

/// Full voltage breakdown at every sample; used by diagnostics.
pub fn simulate_breakdown<T: Scalar>(
    model: &DiscreteModel<T>,
    current: &[T],
    x0: &ModelState<T>,
) -> Result<Vec<VoltageBreakdown<T>>> {
    let mut state = x0.clone();
    let mut out = Vec::with_capacity(current.len());
    for (k, &i_k) in current.iter().enumerate() {
        let readout = checked_readout(model, &state, i_k, k)?;
        let v = terminal_voltage(&readout, i_k, model.transport.t_plus, &model.params)
            .map_err(|e| step_error(e, k))?;
        out.push(v);
        state = model.step(&state, i_k);
    }
    Ok(out)
}

fn simulate_impl<T: Scalar>(
    model: &DiscreteModel<T>,
    current: &[T],
    x0: &ModelState<T>,
    keep_trajectory: bool,
) -> Result<(Vec<T>, Option<Vec<ModelState<T>>>)> {
    if x0.c_s_n.len() != model.particle_n.ad.nrows()
        || x0.c_s_p.len() != model.particle_p.ad.nrows()
        || x0.c_e.len() != model.electrolyte.ad.nrows()
    {
        return Err(Error::InvalidParameter(
            "initial state dimensions do not match the model".into(),
        ));
    }
    if !x0.is_finite() {
        return Err(Error::NonFinite("initial state".into()));
    }
    let mut state = x0.clone();
    let mut next = x0.clone();
    let mut voltage = Vec::with_capacity(current.len());
    let mut trajectory = keep_trajectory.then(|| Vec::with_capacity(current.len()));

    for (k, &i_k) in current.iter().enumerate() {
        let readout = checked_readout(model, &state, i_k, k)?;
        let v = terminal_voltage(&readout, i_k, model.transport.t_plus, &model.params)
            .map_err(|e| step_error(e, k))?;
        if !v.total.is_finite() {
            return Err(Error::OutOfDomain {
                step: k,
                reason: "non-finite terminal voltage".into(),
            });
        }
        voltage.push(v.total);
        if let Some(traj) = trajectory.as_mut() {
            traj.push(state.clone());
        }
        model.particle_n.step_into(&state.c_s_n, i_k, &mut next.c_s_n);
        model.particle_p.step_into(&state.c_s_p, i_k, &mut next.c_s_p);
        model.electrolyte.step_into(&state.c_e, i_k, &mut next.c_e);
        std::mem::swap(&mut state, &mut next);
    }
    Ok((voltage, trajectory))
}

fn checked_readout<T: Scalar>(
    model: &DiscreteModel<T>,
    state: &ModelState<T>,
    current: T,
    step: usize,
) -> Result<ElectrodeReadout<T>> {
    let r = model.readout(state, current);
    let zero = T::zero();
    if !(r.c_ss_n > zero && r.c_ss_n < model.params.c_max_n) {
        return Err(Error::OutOfDomain {
            step,
            reason: format!("negative-electrode surface concentration {:?}", r.c_ss_n),
        });
    }
    if !(r.c_ss_p > zero && r.c_ss_p < model.params.c_max_p) {
        return Err(Error::OutOfDomain {
            step,
            reason: format!("positive-electrode surface concentration {:?}", r.c_ss_p),
        });
    }
    if !(r.c_e_avg_n > zero && r.c_e_avg_p > zero) {
        return Err(Error::OutOfDomain {
            step,
            reason: "electrolyte concentration became non-positive".into(),
        });
    }
    Ok(r)
}

fn step_error(e: Error, step: usize) -> Error {
    match e {
        Error::OutOfDomain { .. } => e,
        other => Error::OutOfDomain {
            step,
            reason: other.to_string(),
        },
    }
}

/// Debug dump: one row per sample with time, every node value and the
/// terminal voltage.
pub fn write_trajectory_csv<T: Scalar + std::fmt::Display>(
    path: &Path,
    model: &DiscreteModel<T>,
    dt: T,
    trajectory: &[ModelState<T>],
    voltage: &[T],
) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(file, "t")?;
    for label in model.labels() {
        match label {
            StateLabel::Particle { electrode, radius } => {
                let tag = match electrode {
                    Electrode::Negative => "cs_n",
                    Electrode::Positive => "cs_p",
                };
                write!(file, ",{tag}_r{radius}")?;
            }
            StateLabel::Electrolyte { position, .. } => write!(file, ",ce_x{position}")?,
        }
    }
    writeln!(file, ",v")?;
    for (k, (state, v)) in trajectory.iter().zip(voltage).enumerate() {
        write!(file, "{}", T::lit(k as f64) * dt)?;
        for value in state
            .c_s_n
            .iter()
            .chain(state.c_s_p.iter())
            .chain(state.c_e.iter())
        {
            write!(file, ",{value}")?;
        }
        writeln!(file, ",{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::ocp;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn builder(dt: f64) -> ModelBuilder<f64> {
        ModelBuilder::new(ParameterSet::default(), NodeCounts::default(), dt).unwrap()
    }

    fn default_transport() -> TransportParams<f64> {
        TransportParams::from_params(&ParameterSet::default())
    }

    #[test]
    fn state_dimension_bookkeeping() {
        let model = builder(1.0).assemble(default_transport()).unwrap();
        assert_eq!(model.state_dim(), 14);
        let labels = model.labels();
        let particles_n = labels
            .iter()
            .filter(|l| matches!(l, StateLabel::Particle { electrode: Electrode::Negative, .. }))
            .count();
        let particles_p = labels
            .iter()
            .filter(|l| matches!(l, StateLabel::Particle { electrode: Electrode::Positive, .. }))
            .count();
        let elyte = labels
            .iter()
            .filter(|l| matches!(l, StateLabel::Electrolyte { .. }))
            .count();
        assert_eq!((particles_n, particles_p, elyte), (3, 3, 8));
    }

    #[test]
    fn assembly_is_bit_reproducible() {
        let b = builder(0.25);
        let m1 = b.assemble(default_transport()).unwrap();
        let m2 = b.assemble(default_transport()).unwrap();
        assert_eq!(m1, m2);
        // and through a fresh builder
        let m3 = builder(0.25).assemble(default_transport()).unwrap();
        assert_eq!(m1, m3);
    }

    #[test]
    fn invalid_transport_is_rejected() {
        let b = builder(1.0);
        let mut t = default_transport();
        t.d_s_n = 0.0;
        assert!(b.assemble(t).is_err());
        let mut t = default_transport();
        t.t_plus = 1.0;
        assert!(b.assemble(t).is_err());
    }

    #[test]
    fn readout_rows_reproduce_uniform_state() {
        let params = ParameterSet::<f64>::default();
        let model = builder(1.0).assemble(default_transport()).unwrap();
        let state = ModelState::uniform(&params, NodeCounts::default(), 0.5, 0.6);
        let r = model.readout(&state, 0.0);
        assert_relative_eq!(r.c_ss_n, 0.5 * params.c_max_n, max_relative = 1e-12);
        assert_relative_eq!(r.c_ss_p, 0.6 * params.c_max_p, max_relative = 1e-12);
        assert_relative_eq!(r.c_e_avg_n, params.c_e_typ, max_relative = 1e-12);
        assert_relative_eq!(r.c_e_avg_p, params.c_e_typ, max_relative = 1e-12);
        assert_relative_eq!(
            model.particle_mean_concentration(Electrode::Negative, &state, 0.0),
            0.5 * params.c_max_n,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_current_holds_rest_voltage() {
        let params = ParameterSet::<f64>::default();
        let model = builder(1.0).assemble(default_transport()).unwrap();
        let x0 = ModelState::uniform(&params, NodeCounts::default(), 0.49, 0.69);
        let current = vec![0.0; 50];
        let v = simulate(&model, &current, &x0).unwrap();
        let ocv = ocp(Electrode::Positive, 0.69).unwrap() - ocp(Electrode::Negative, 0.49).unwrap();
        for (k, &vk) in v.iter().enumerate() {
            assert_abs_diff_eq!(vk, ocv, epsilon = 1e-10);
            let _ = k;
        }
    }

    #[test]
    fn discharge_conserves_particle_and_electrolyte_content() {
        let params = ParameterSet::<f64>::default();
        let model = builder(1.0).assemble(default_transport()).unwrap();
        let x0 = ModelState::uniform(&params, NodeCounts::default(), 0.8, 0.51);
        let current = vec![24.0; 200];
        let (_, traj) = simulate_with_trajectory(&model, &current, &x0).unwrap();

        let mass0 = model.electrolyte_ion_content(&traj[0]);
        let mass_end = model.electrolyte_ion_content(traj.last().unwrap());
        assert_relative_eq!(mass_end, mass0, max_relative = 1e-9);

        // particle balance: mean concentration change tracks the integral
        // of the applied current exactly
        let mean0 = model.particle_mean_concentration(Electrode::Negative, &traj[0], 24.0);
        let mean_end =
            model.particle_mean_concentration(Electrode::Negative, traj.last().unwrap(), 24.0);
        let expected = 199.0 * model.dt * 24.0 * (-3.0)
            / (params.faraday * params.a_n * params.l_n * params.r_n);
        assert_relative_eq!(mean_end - mean0, expected, max_relative = 1e-9);
    }

    #[test]
    fn particle_transitions_are_nonexpansive() {
        for dt in [1e-3, 0.25, 1.0, 10.0] {
            let model = builder(dt).assemble(default_transport()).unwrap();
            for electrode in [Electrode::Negative, Electrode::Positive] {
                let ad = model.particle_transition(electrode);
                let rho = ad
                    .complex_eigenvalues()
                    .iter()
                    .map(|ev| ev.norm())
                    .fold(0.0f64, f64::max);
                assert!(rho <= 1.0 + 1e-9, "dt={dt}: spectral radius {rho}");
            }
        }
    }

    #[test]
    fn electrolyte_mass_row_fixed_by_discrete_transition() {
        let model = builder(1.0).assemble(default_transport()).unwrap();
        let (ad, bd) = model.electrolyte_transition();
        let m = model.electrolyte_mass_row();
        let ma = m * ad;
        for j in 0..ma.len() {
            assert_relative_eq!(ma[j], m[j], max_relative = 1e-9, epsilon = 1e-9 * m.amax());
        }
        let mb = m.dot(&bd.transpose());
        assert!(mb.abs() <= 1e-9 * m.amax(), "mass row times Bd: {mb}");
    }

    #[test]
    fn overdischarge_reports_step_index() {
        let params = ParameterSet::<f64>::default();
        let model = builder(10.0).assemble(default_transport()).unwrap();
        // start near empty and keep discharging: the negative surface
        // concentration must hit zero after a handful of steps
        let x0 = ModelState::uniform(&params, NodeCounts::default(), 0.05, 0.92);
        let current = vec![24.0; 2000];
        match simulate(&model, &current, &x0) {
            Err(Error::OutOfDomain { step, .. }) => {
                assert!(step > 0 && step < 2000, "step = {step}")
            }
            other => panic!("expected an out-of-domain error, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_dump_writes_header_and_rows() {
        let params = ParameterSet::<f64>::default();
        let model = builder(1.0).assemble(default_transport()).unwrap();
        let x0 = ModelState::uniform(&params, NodeCounts::default(), 0.5, 0.6);
        let current = vec![1.0; 5];
        let (v, traj) = simulate_with_trajectory(&model, &current, &x0).unwrap();
        let dir = std::env::temp_dir().join("spme-traj-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("traj.csv");
        write_trajectory_csv(&path, &model, 1.0, &traj, &v).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("t,"));
        assert!(lines[0].ends_with(",v"));
        assert_eq!(lines[0].split(',').count(), 16); // t + 14 states + v
    }
}
