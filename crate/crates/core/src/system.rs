//! Continuous-time state-space builders for the two particle subsystems and
//! the three-region electrolyte.
//!
//! Boundary and interface conditions are eliminated algebraically so the
//! exposed systems are pure ODEs `x' = A x + B I` driven by the applied
//! current density. One collocation row per subsystem is replaced by the
//! exact lithium-balance relation, which makes the conserved quantity an
//! exact invariant of `A` and `B` instead of holding only to truncation
//! accuracy.

use crate::chebyshev::{chebyshev_grid, radial_even_grid, ChebyshevGrid, RadialEvenGrid};
use crate::params::{Electrode, ParameterSet, Region};
use crate::{Error, Result, Scalar};
use nalgebra::{DMatrix, DVector, RowDVector};

/// Physical identity of one state entry.
#[derive(Debug, Clone, PartialEq)]
pub enum StateLabel<T> {
    /// Concentration at a radial node of an electrode particle (m).
    Particle { electrode: Electrode, radius: T },
    /// Electrolyte concentration at a through-cell position (m).
    Electrolyte { region: Region, position: T },
}

/// Pure-ODE system `x' = A x + B I` with labelled states.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSystem<T> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub labels: Vec<StateLabel<T>>,
}

impl<T: Scalar> ContinuousSystem<T> {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Particle diffusion subsystem with its readout operators.
///
/// The surface node is eliminated through the flux boundary condition, so
/// the surface concentration readout carries a direct feedthrough term:
/// `c_ss = surface_row * x + surface_feedthrough * I`. The volume-average
/// readout has the same affine form.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem<T> {
    pub system: ContinuousSystem<T>,
    pub electrode: Electrode,
    pub surface_row: RowDVector<T>,
    pub surface_feedthrough: T,
    pub avg_row: RowDVector<T>,
    pub avg_feedthrough: T,
    /// Exact volume-average concentration rate per unit current,
    /// -3 sign / (F a L R).
    pub balance_rate_per_current: T,
}

/// Spherical diffusion in one electrode-averaged particle on `[0, R]`.
///
/// `n` is the number of retained states (center node plus interior nodes);
/// the collocation grid is the even-parity radial grid of the same order.
/// The center node evolves by the L'Hopital limit `3 D c''`, interior nodes
/// by `D (c'' + 2 c'/r)`, and the surface node is eliminated through the
/// flux condition of the averaged particle equation.
pub fn build_particle_system<T: Scalar>(
    d_s: T,
    radius: T,
    area_density: T,
    thickness: T,
    electrode: Electrode,
    n: usize,
    faraday: T,
) -> Result<ParticleSystem<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "particle systems need at least 2 states".into(),
        ));
    }
    for (name, v) in [
        ("d_s", d_s),
        ("radius", radius),
        ("area_density", area_density),
        ("thickness", thickness),
        ("faraday", faraday),
    ] {
        if !(v > T::zero()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive")));
        }
    }
    let grid = radial_even_grid(n, radius)?;
    particle_system_on_grid(&grid, d_s, area_density, thickness, electrode, faraday)
}

/// Same as [`build_particle_system`] but reusing a prebuilt radial grid.
pub fn particle_system_on_grid<T: Scalar>(
    grid: &RadialEvenGrid<T>,
    d_s: T,
    area_density: T,
    thickness: T,
    electrode: Electrode,
    faraday: T,
) -> Result<ParticleSystem<T>> {
    let n = grid.order; // states after eliminating the surface node
    let m = n + 1;
    let radius = grid.radius;
    let sign = match electrode {
        Electrode::Negative => T::one(),
        Electrode::Positive => -T::one(),
    };

    // collocation rows on all positive nodes
    let mut rows = DMatrix::<T>::zeros(m, m);
    rows.row_mut(0)
        .copy_from(&(grid.d2.row(0) * (T::lit(3.0) * d_s)));
    for i in 1..m {
        let r = grid.nodes[i];
        let row = (grid.d2.row(i) + grid.d1.row(i) * (T::lit(2.0) / r)) * d_s;
        rows.row_mut(i).copy_from(&row);
    }

    // flux condition: c'(R) = -sign I / (F a L D)
    let d_surface = grid.d1.row(m - 1).clone_owned();
    let pivot = d_surface[m - 1];
    if pivot == T::zero() {
        return Err(Error::Singularity("surface derivative pivot is zero".into()));
    }
    let input_slope = -sign / (faraday * area_density * thickness * d_s);
    let mut surface_row = RowDVector::<T>::zeros(n);
    for j in 0..n {
        surface_row[j] = -d_surface[j] / pivot;
    }
    let surface_feedthrough = input_slope / pivot;

    // fold the surface column into the retained states
    let mut a = DMatrix::<T>::zeros(n, n);
    let mut b = DVector::<T>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = rows[(i, j)] + rows[(i, m - 1)] * surface_row[j];
        }
        b[i] = rows[(i, m - 1)] * surface_feedthrough;
    }

    // volume-average readout (3/R^3) int r^2 c dr
    let scale = T::lit(3.0) / (radius * radius * radius);
    let mut avg_full = RowDVector::<T>::zeros(m);
    for j in 0..m {
        avg_full[j] = scale * grid.weights[j] * grid.nodes[j] * grid.nodes[j];
    }
    let mut avg_row = RowDVector::<T>::zeros(n);
    for j in 0..n {
        avg_row[j] = avg_full[j] + avg_full[m - 1] * surface_row[j];
    }
    let avg_feedthrough = avg_full[m - 1] * surface_feedthrough;

    let balance_rate_per_current =
        -T::lit(3.0) * sign / (faraday * area_density * thickness * radius);

    // lithium balance made exact: the state adjacent to the surface trades
    // its collocation row for the balance relation
    apply_conservation_patch(&mut a, &mut b, &avg_row, balance_rate_per_current, n - 1)?;

    let labels = (0..n)
        .map(|i| StateLabel::Particle {
            electrode,
            radius: grid.nodes[i],
        })
        .collect();

    Ok(ParticleSystem {
        system: ContinuousSystem { a, b, labels },
        electrode,
        surface_row,
        surface_feedthrough,
        avg_row,
        avg_feedthrough,
        balance_rate_per_current,
    })
}

/// Electrolyte diffusion subsystem with its readout operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrolyteSystem<T> {
    pub system: ContinuousSystem<T>,
    /// Electrode-averaged concentration over the negative region.
    pub avg_row_n: RowDVector<T>,
    /// Electrode-averaged concentration over the positive region.
    pub avg_row_p: RowDVector<T>,
    /// Total ion content `int eps c_e dx` over the cell; an exact invariant.
    pub mass_row: RowDVector<T>,
}

/// Three-region electrolyte diffusion with per-region effective
/// diffusivity `eps^(b-1) D_e`, value and flux continuity at the two
/// internal interfaces, zero-flux outer boundaries, and source terms
/// `+-(1 - t+) I / (F L_k eps_k)` in the electrode regions.
///
/// `orders` give the collocation order per region; the retained states are
/// the strict-interior nodes of each region.
pub fn build_electrolyte_system<T: Scalar>(
    params: &ParameterSet<T>,
    d_e: T,
    t_plus: T,
    orders: (usize, usize, usize),
) -> Result<ElectrolyteSystem<T>> {
    let (n_n, n_s, n_p) = orders;
    if n_n < 2 || n_s < 2 || n_p < 2 {
        return Err(Error::InvalidParameter(
            "each electrolyte region needs order >= 2".into(),
        ));
    }
    let l_n = params.l_n;
    let l_s = params.l_s;
    let l_p = params.l_p;
    let grids = [
        chebyshev_grid(n_n, (T::zero(), l_n))?,
        chebyshev_grid(n_s, (l_n, l_n + l_s))?,
        chebyshev_grid(n_p, (l_n + l_s, l_n + l_s + l_p))?,
    ];
    electrolyte_system_on_grids(&grids, params, d_e, t_plus)
}

/// Same as [`build_electrolyte_system`] but reusing prebuilt region grids.
pub fn electrolyte_system_on_grids<T: Scalar>(
    grids: &[ChebyshevGrid<T>; 3],
    params: &ParameterSet<T>,
    d_e: T,
    t_plus: T,
) -> Result<ElectrolyteSystem<T>> {
    if !(d_e > T::zero()) {
        return Err(Error::InvalidParameter("d_e must be positive".into()));
    }
    let regions = [Region::Negative, Region::Separator, Region::Positive];
    let n_nodes: Vec<usize> = grids.iter().map(|g| g.order + 1).collect();
    let total: usize = n_nodes.iter().sum();
    let offsets = [0, n_nodes[0], n_nodes[0] + n_nodes[1]];

    let eps: Vec<T> = regions.iter().map(|&r| params.porosity(r)).collect();
    let b = params.bruggeman;
    // eps^b D / eps as printed in the transport equation
    let d_eff: Vec<T> = eps.iter().map(|&e| e.powf(b - T::one()) * d_e).collect();
    let d_flux: Vec<T> = eps.iter().map(|&e| e.powf(b) * d_e).collect();

    // PDE rows and source on the full node set
    let mut rows = DMatrix::<T>::zeros(total, total);
    let mut src = DVector::<T>::zeros(total);
    for k in 0..3 {
        let off = offsets[k];
        let g = &grids[k];
        for i in 0..n_nodes[k] {
            for j in 0..n_nodes[k] {
                rows[(off + i, off + j)] = d_eff[k] * g.d2[(i, j)];
            }
        }
        let source = match regions[k] {
            Region::Negative => (T::one() - t_plus) / (params.faraday * params.l_n * eps[0]),
            Region::Separator => T::zero(),
            Region::Positive => -(T::one() - t_plus) / (params.faraday * params.l_p * eps[2]),
        };
        for i in 0..n_nodes[k] {
            src[off + i] = source;
        }
    }

    // six constraints: two outer zero-flux rows, two interface value
    // continuities, two interface flux continuities
    let mut constraints = DMatrix::<T>::zeros(6, total);
    for j in 0..n_nodes[0] {
        constraints[(0, offsets[0] + j)] = grids[0].d1[(0, j)];
    }
    for j in 0..n_nodes[2] {
        constraints[(1, offsets[2] + j)] = grids[2].d1[(n_nodes[2] - 1, j)];
    }
    constraints[(2, offsets[1] - 1)] = T::one();
    constraints[(2, offsets[1])] = -T::one();
    constraints[(3, offsets[2] - 1)] = T::one();
    constraints[(3, offsets[2])] = -T::one();
    for j in 0..n_nodes[0] {
        constraints[(4, offsets[0] + j)] = d_flux[0] * grids[0].d1[(n_nodes[0] - 1, j)];
    }
    for j in 0..n_nodes[1] {
        constraints[(4, offsets[1] + j)] -= d_flux[1] * grids[1].d1[(0, j)];
        constraints[(5, offsets[1] + j)] = d_flux[1] * grids[1].d1[(n_nodes[1] - 1, j)];
    }
    for j in 0..n_nodes[2] {
        constraints[(5, offsets[2] + j)] -= d_flux[2] * grids[2].d1[(0, j)];
    }

    // eliminated nodes: region endpoints (outer boundaries and both sides
    // of each interface)
    let eliminated = [
        offsets[0],
        offsets[1] - 1,
        offsets[1],
        offsets[2] - 1,
        offsets[2],
        total - 1,
    ];
    let interior: Vec<usize> = (0..total).filter(|i| !eliminated.contains(i)).collect();
    let n_states = interior.len();

    let mut cb = DMatrix::<T>::zeros(6, 6);
    let mut ci = DMatrix::<T>::zeros(6, n_states);
    for r in 0..6 {
        for (c, &idx) in eliminated.iter().enumerate() {
            cb[(r, c)] = constraints[(r, idx)];
        }
        for (c, &idx) in interior.iter().enumerate() {
            ci[(r, c)] = constraints[(r, idx)];
        }
    }
    let lu = cb.lu();
    let slaving = lu
        .solve(&ci)
        .ok_or_else(|| Error::Singularity("electrolyte constraint system is singular".into()))?
        .map(|v| -v); // c_eliminated = slaving * c_interior

    // reduce the PDE rows at interior nodes
    let mut a = DMatrix::<T>::zeros(n_states, n_states);
    let mut bvec = DVector::<T>::zeros(n_states);
    for (i, &row_idx) in interior.iter().enumerate() {
        for (j, &col_idx) in interior.iter().enumerate() {
            a[(i, j)] = rows[(row_idx, col_idx)];
        }
        for (e, &col_idx) in eliminated.iter().enumerate() {
            let coupling = rows[(row_idx, col_idx)];
            for j in 0..n_states {
                a[(i, j)] += coupling * slaving[(e, j)];
            }
        }
        bvec[i] = src[row_idx];
    }

    // reduce a full-node quadrature row onto the interior states
    let reduce_row = |full: &RowDVector<T>| {
        let mut out = RowDVector::<T>::zeros(n_states);
        for (j, &idx) in interior.iter().enumerate() {
            out[j] = full[idx];
        }
        for (e, &idx) in eliminated.iter().enumerate() {
            let coupling = full[idx];
            for j in 0..n_states {
                out[j] += coupling * slaving[(e, j)];
            }
        }
        out
    };

    let mut mass_full = RowDVector::<T>::zeros(total);
    for k in 0..3 {
        for i in 0..n_nodes[k] {
            mass_full[offsets[k] + i] = eps[k] * grids[k].weights[i];
        }
    }
    let mass_row = reduce_row(&mass_full);

    let mut avg_n_full = RowDVector::<T>::zeros(total);
    for i in 0..n_nodes[0] {
        avg_n_full[offsets[0] + i] = grids[0].weights[i] / params.l_n;
    }
    let avg_row_n = reduce_row(&avg_n_full);

    let mut avg_p_full = RowDVector::<T>::zeros(total);
    for i in 0..n_nodes[2] {
        avg_p_full[offsets[2] + i] = grids[2].weights[i] / params.l_p;
    }
    let avg_row_p = reduce_row(&avg_p_full);

    // total ion content is exactly conserved: net source cancels between
    // the electrode regions, so the balance target is zero
    let patch_index = n_states / 2;
    apply_conservation_patch(&mut a, &mut bvec, &mass_row, T::zero(), patch_index)?;

    let labels: Vec<StateLabel<T>> = interior
        .iter()
        .map(|&idx| {
            let k = (0..3).rfind(|&k| idx >= offsets[k]).unwrap();
            StateLabel::Electrolyte {
                region: regions[k],
                position: grids[k].nodes[idx - offsets[k]],
            }
        })
        .collect();

    Ok(ElectrolyteSystem {
        system: ContinuousSystem { a, b: bvec, labels },
        avg_row_n,
        avg_row_p,
        mass_row,
    })
}

/// Replace one row of `(A, B)` so that `q A = 0` and `q B = target` hold
/// exactly, where `q` is the conserved-quantity row. The remaining rows
/// keep their collocation form.
fn apply_conservation_patch<T: Scalar>(
    a: &mut DMatrix<T>,
    b: &mut DVector<T>,
    q: &RowDVector<T>,
    target: T,
    row: usize,
) -> Result<()> {
    let n = a.nrows();
    let pivot = q[row];
    if pivot == T::zero() {
        return Err(Error::Singularity(
            "conservation row has zero weight at the patch index".into(),
        ));
    }
    for j in 0..n {
        let mut acc = T::zero();
        for i in 0..n {
            if i != row {
                acc += q[i] * a[(i, j)];
            }
        }
        a[(row, j)] = -acc / pivot;
    }
    let mut acc = T::zero();
    for i in 0..n {
        if i != row {
            acc += q[i] * b[i];
        }
    }
    b[row] = (target - acc) / pivot;
    Ok(())
}
