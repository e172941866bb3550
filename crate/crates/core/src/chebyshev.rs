//! Chebyshev-Gauss-Lobatto collocation grids: nodes, differentiation
//! matrices and Clenshaw-Curtis quadrature weights, plus the even-parity
//! radial variant used for spherically symmetric domains.

use crate::{Error, Result, Scalar};
use nalgebra::{DMatrix, DVector};

/// Collocation grid of order `n` (`n + 1` nodes) on a physical interval.
///
/// Nodes are stored ascending. The first- and second-derivative matrices
/// act on nodal values; the quadrature weights integrate polynomials up to
/// degree `n` exactly over the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevGrid<T> {
    pub order: usize,
    pub domain: (T, T),
    pub nodes: DVector<T>,
    pub d1: DMatrix<T>,
    pub d2: DMatrix<T>,
    pub weights: DVector<T>,
}

/// Build the order-`n` Chebyshev-Gauss-Lobatto grid on `[a, b]`.
pub fn chebyshev_grid<T: Scalar>(n: usize, domain: (T, T)) -> Result<ChebyshevGrid<T>> {
    let (a, b) = domain;
    if n == 0 {
        return Err(Error::InvalidParameter("grid order must be >= 1".into()));
    }
    if !(b > a) {
        return Err(Error::InvalidParameter(
            "grid domain must be non-degenerate".into(),
        ));
    }
    let m = n + 1;
    let nf = T::lit(n as f64);
    let pi = T::pi();

    // reference nodes xi_j = cos(j pi / n), descending on [-1, 1]
    let xi: Vec<T> = (0..m)
        .map(|j| (T::lit(j as f64) * pi / nf).cos())
        .collect();

    // standard differentiation matrix with the negative-sum-trick diagonal
    let sign = |j: usize| if j % 2 == 0 { T::one() } else { -T::one() };
    let coef = |j: usize| {
        let c = if j == 0 || j == n { T::lit(2.0) } else { T::one() };
        c * sign(j)
    };
    let mut d = DMatrix::<T>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                d[(i, j)] = coef(i) / coef(j) / (xi[i] - xi[j]);
            }
        }
    }
    for i in 0..m {
        let mut row_sum = T::zero();
        for j in 0..m {
            if i != j {
                row_sum += d[(i, j)];
            }
        }
        d[(i, i)] = -row_sum;
    }

    // Clenshaw-Curtis weights on [-1, 1]
    let mut w = vec![T::zero(); m];
    let boundary = if n % 2 == 0 {
        T::one() / T::lit((n * n - 1) as f64)
    } else {
        T::one() / T::lit((n * n) as f64)
    };
    w[0] = boundary;
    w[n] = boundary;
    for (i, wi) in w.iter_mut().enumerate().take(n).skip(1) {
        let theta = T::lit(i as f64) * pi / nf;
        let mut v = T::one();
        let k_max = if n % 2 == 0 { n / 2 - 1 } else { (n - 1) / 2 };
        for k in 1..=k_max {
            let kf = T::lit(k as f64);
            v -= T::lit(2.0) * (T::lit(2.0) * kf * theta).cos()
                / T::lit((4 * k * k - 1) as f64);
        }
        if n % 2 == 0 {
            v -= (nf * theta).cos() / T::lit((n * n - 1) as f64);
        }
        *wi = T::lit(2.0) * v / nf;
    }

    // affine map: x = a + (b - a)(1 - xi)/2 is ascending in j
    let half_len = (b - a) / T::lit(2.0);
    let nodes = DVector::from_iterator(m, xi.iter().map(|&x| a + half_len * (T::one() - x)));
    let scale = -T::one() / half_len; // d xi / d x
    let d1 = d.map(|v| v * scale);
    let d2 = &d1 * &d1;
    let weights = DVector::from_iterator(m, w.into_iter().map(|v| v * half_len));

    Ok(ChebyshevGrid {
        order: n,
        domain,
        nodes,
        d1,
        d2,
        weights,
    })
}

/// Even-parity radial grid on `[0, radius]`.
///
/// Built by folding an order-`2n` grid on `[-radius, radius]` onto its
/// non-negative half: the differentiation matrices are those of the even
/// interpolant, so the symmetry condition at the origin is structural and
/// the polar diffusion operator stays well behaved there. `nodes[0] = 0`,
/// `nodes[n] = radius`; `weights` integrate even polynomials over
/// `[0, radius]` exactly up to degree `2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialEvenGrid<T> {
    pub order: usize,
    pub radius: T,
    pub nodes: DVector<T>,
    pub d1: DMatrix<T>,
    pub d2: DMatrix<T>,
    pub weights: DVector<T>,
}

pub fn radial_even_grid<T: Scalar>(n: usize, radius: T) -> Result<RadialEvenGrid<T>> {
    if !(radius > T::zero()) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let full = chebyshev_grid(2 * n, (-radius, radius))?;
    let m = n + 1;
    // ascending full nodes: index n is the origin, 2n the surface
    let pos = |i: usize| n + i;
    let mirror = |j: usize| n - j;

    let fold = |src: &DMatrix<T>| {
        let mut out = DMatrix::<T>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let mut v = src[(pos(i), pos(j))];
                if j != 0 {
                    v += src[(pos(i), mirror(j))];
                }
                out[(i, j)] = v;
            }
        }
        out
    };
    let d1 = fold(&full.d1);
    let d2 = fold(&full.d2);
    let mut nodes = DVector::from_iterator(m, (0..m).map(|i| full.nodes[pos(i)]));
    nodes[0] = T::zero(); // cos(pi/2) rounding leaves ~1e-17 R here
    let mut weights = DVector::from_iterator(m, (0..m).map(|i| full.weights[pos(i)]));
    weights[0] /= T::lit(2.0);

    Ok(RadialEvenGrid {
        order: n,
        radius,
        nodes,
        d1,
        d2,
        weights,
    })
}
