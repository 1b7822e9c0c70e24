//! Fixed-size dense complex matrices and the two iterative decompositions the
//! entanglement measures need: a cyclic Jacobi eigen-solver for Hermitian
//! matrices and a one-sided (Hestenes) Jacobi SVD.
//!
//! Both solvers rotate until every off-diagonal element is negligible at
//! machine precision, so eigenvalues and singular values that are exactly zero
//! in theory come out at the 1e-16 level rather than at the square root of it.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Hard cap on Jacobi rotations per decomposition.
pub const MAX_ROTATIONS: usize = 10_000;

/// Off-diagonal elements below this fraction of the matrix norm are treated
/// as converged.
const REL_TOL: f64 = 1e-18;

/// Off-diagonal level, relative to the norm, accepted as converged once
/// Jacobi sweeps stop making progress.
const ROUNDING_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat<const N: usize>(pub [[C64; N]; N]);

pub type CMat2 = CMat<2>;
pub type CMat4 = CMat<4>;
pub type CMat16 = CMat<16>;

impl<const N: usize> CMat<N> {
    pub fn zeros() -> Self {
        CMat([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64; N], v: &[C64; N]) -> Self {
        Self::from_fn(|i, j| u[i] * v[j].conj())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(|i, j| self.0[i][j].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                worst = worst.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    /// `<u| M |u>` for a (not necessarily normalized) vector `u`.
    pub fn expectation(&self, u: &[C64; N]) -> C64 {
        let mut acc = ZERO;
        for i in 0..N {
            let mut row = ZERO;
            for j in 0..N {
                row += self.0[i][j] * u[j];
            }
            acc += u[i].conj() * row;
        }
        acc
    }

    /// `U M U^dagger`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }
}

impl<const N: usize> Mul for CMat<N> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

impl<const N: usize> Add for CMat<N> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<const N: usize> Sub for CMat<N> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

/// Kronecker product of two single-qubit operators.
pub fn kron2(a: &CMat2, b: &CMat2) -> CMat4 {
    CMat::from_fn(|i, j| a.0[i / 2][j / 2] * b.0[i % 2][j % 2])
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen<const N: usize> {
    /// Eigenvalues in decreasing order.
    pub values: [f64; N],
    /// Column `k` of this matrix is the eigenvector for `values[k]`.
    pub vectors: CMat<N>,
    pub rotations: usize,
}

/// Unitary 2x2 rotation that zeroes the `(p, q)` element of the Hermitian
/// 2x2 block `[[app, apq], [conj(apq), aqq]]`, returned as
/// `(v_pp, v_pq, v_qp, v_qq)`.
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (C64, C64, C64, C64) {
    let r = apq.norm();
    let phase = apq / r;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    (
        C64::new(c, 0.0),
        C64::new(s, 0.0),
        -phase.conj() * s,
        phase.conj() * c,
    )
}

/// Cyclic Jacobi eigen-solver for Hermitian matrices.
///
/// Pairs are visited in a fixed `(p, q)` order, so the result is
/// deterministic for a given input.
pub fn hermitian_eigen<const N: usize>(m: &CMat<N>) -> Result<HermitianEigen<N>> {
    let mut a = *m;
    let mut v = CMat::<N>::identity();
    let norm = m.frobenius_norm();
    let threshold = REL_TOL * norm.max(f64::MIN_POSITIVE);
    let mut rotations = 0;
    let mut prev_off = f64::INFINITY;

    for i in 0..N {
        a.0[i][i] = C64::new(a.0[i][i].re, 0.0);
    }

    'sweeps: loop {
        let mut rotated = false;
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a.0[p][q];
                if apq.norm() <= threshold {
                    a.0[p][q] = ZERO;
                    a.0[q][p] = ZERO;
                    continue;
                }
                if rotations >= MAX_ROTATIONS {
                    let residual = off_diagonal_norm(&a);
                    if residual <= ROUNDING_TOL * norm {
                        break 'sweeps;
                    }
                    return Err(Error::NoConvergence {
                        iterations: rotations,
                        residual,
                    });
                }
                let (vpp, vpq, vqp, vqq) = jacobi_rotation(a.0[p][p].re, a.0[q][q].re, apq);

                // A <- A V on columns p, q
                for k in 0..N {
                    let akp = a.0[k][p];
                    let akq = a.0[k][q];
                    a.0[k][p] = akp * vpp + akq * vqp;
                    a.0[k][q] = akp * vpq + akq * vqq;
                }
                // A <- V^dagger A on rows p, q
                for k in 0..N {
                    let apk = a.0[p][k];
                    let aqk = a.0[q][k];
                    a.0[p][k] = vpp.conj() * apk + vqp.conj() * aqk;
                    a.0[q][k] = vpq.conj() * apk + vqq.conj() * aqk;
                }
                a.0[p][q] = ZERO;
                a.0[q][p] = ZERO;
                a.0[p][p] = C64::new(a.0[p][p].re, 0.0);
                a.0[q][q] = C64::new(a.0[q][q].re, 0.0);

                for k in 0..N {
                    let vkp = v.0[k][p];
                    let vkq = v.0[k][q];
                    v.0[k][p] = vkp * vpp + vkq * vqp;
                    v.0[k][q] = vkp * vpq + vkq * vqq;
                }
                rotations += 1;
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
        // Rounding can keep re-seeding tiny off-diagonal entries; stop once a
        // sweep no longer makes progress at that level.
        let off = off_diagonal_norm(&a);
        if off <= ROUNDING_TOL * norm && off >= prev_off {
            break;
        }
        prev_off = off;
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a.0[j][j].re.total_cmp(&a.0[i][i].re));
    let values = std::array::from_fn(|k| a.0[order[k]][order[k]].re);
    let vectors = CMat::from_fn(|row, k| v.0[row][order[k]]);
    Ok(HermitianEigen {
        values,
        vectors,
        rotations,
    })
}

fn off_diagonal_norm<const N: usize>(a: &CMat<N>) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i != j {
                acc += a.0[i][j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Singular values (decreasing) by one-sided Jacobi orthogonalization of the
/// columns.
pub fn singular_values<const N: usize>(m: &CMat<N>) -> Result<[f64; N]> {
    let mut a = *m;
    let norm = m.frobenius_norm();
    let floor = REL_TOL * norm.max(f64::MIN_POSITIVE);
    let mut rotations = 0;
    let mut prev_worst = f64::INFINITY;

    'sweeps: loop {
        let mut rotated = false;
        let mut worst: f64 = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for k in 0..N {
                    alpha += a.0[k][p].norm_sqr();
                    beta += a.0[k][q].norm_sqr();
                    gamma += a.0[k][p].conj() * a.0[k][q];
                }
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g <= floor * floor {
                    continue;
                }
                worst = worst.max(g);
                if rotations >= MAX_ROTATIONS {
                    if g <= ROUNDING_TOL * norm * norm {
                        break 'sweeps;
                    }
                    return Err(Error::NoConvergence {
                        iterations: rotations,
                        residual: g,
                    });
                }
                let (vpp, vpq, vqp, vqq) = jacobi_rotation(alpha, beta, gamma);
                for k in 0..N {
                    let akp = a.0[k][p];
                    let akq = a.0[k][q];
                    a.0[k][p] = akp * vpp + akq * vqp;
                    a.0[k][q] = akp * vpq + akq * vqq;
                }
                rotations += 1;
                rotated = true;
            }
        }
        if !rotated || (worst <= ROUNDING_TOL * norm * norm && worst >= prev_worst) {
            break;
        }
        prev_worst = worst;
    }

    let mut values: [f64; N] =
        std::array::from_fn(|j| (0..N).map(|k| a.0[k][j].norm_sqr()).sum::<f64>().sqrt());
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}
