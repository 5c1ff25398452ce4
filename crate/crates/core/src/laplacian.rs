//! Normalized and random-walk Laplacians and their Moore–Penrose
//! pseudoinverses.
//!
//! For a strongly connected chain, `L = I − P` and `𝐋 = Π(I − P)` both have
//! nullity one. The pseudoinverse of a nullity-one matrix is determined by the
//! inverse of its leading `(n−1)×(n−1)` block together with its left and right
//! annihilating vectors, so [`rw_laplacian_pinv`] gets `𝐌 = 𝐋⁺`, the
//! stationary distribution, and the fundamental matrix for the last node from
//! a single LU factorization. The last internal index always plays the role
//! of the distinguished node.

use crate::dense::{dot, Matrix};
use crate::error::{Error, Result};
use crate::graph::TransitionMatrix;
use crate::lu::Lu;
use crate::scalar::Scalar;

/// Smallest stationary probability accepted after normalization.
pub const MIN_STATIONARY_PROBABILITY: f64 = 1e-14;

/// Positive left fixed vector of `P` with unit 1-norm.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution<T> {
    pi: Vec<T>,
}

impl<T: Scalar> StationaryDistribution<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.pi
    }

    pub fn get(&self, i: usize) -> T {
        self.pi[i]
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// `‖πᵀP − πᵀ‖∞`.
    pub fn residual(&self, p: &TransitionMatrix<T>) -> T {
        let pp = p.probabilities().vec_mul(&self.pi);
        pp.iter()
            .zip(&self.pi)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max_of)
    }
}

/// Leading block inverse plus annihilator data of a nullity-one matrix.
///
/// The matrix is `[[A, −A v], [−uᵀA, uᵀA v]]` with `A` the leading block; its
/// left null vector is `(uᵀ, 1)` and its right null vector `(v; 1)`.
#[derive(Clone, Debug)]
pub struct NullityOneFactors<T> {
    pub block_inverse: Matrix<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> NullityOneFactors<T> {
    pub fn new(block_inverse: Matrix<T>, u: Vec<T>, v: Vec<T>) -> Result<Self> {
        let m = block_inverse.rows();
        if !block_inverse.is_square() || u.len() != m || v.len() != m {
            return Err(Error::Shape(format!(
                "block inverse {}x{} with annihilator lengths {} and {}",
                block_inverse.rows(),
                block_inverse.cols(),
                u.len(),
                v.len()
            )));
        }
        Ok(NullityOneFactors { block_inverse, u, v })
    }
}

/// `L = I − P`.
pub fn normalized_laplacian<T: Scalar>(p: &TransitionMatrix<T>) -> Matrix<T> {
    Matrix::identity(p.n()).sub(p.probabilities())
}

/// Stationary distribution from the inverse of the leading block of `I − P`.
///
/// Fixing `π_n = 1`, the left null condition `πᵀL = 0` restricted to the
/// first `n−1` columns gives `π_αᵀ = −l_{n,α}ᵀ L_{α,α}⁻¹`; the vector is then
/// rescaled to unit 1-norm.
pub fn stationary_distribution<T: Scalar>(
    p: &TransitionMatrix<T>,
    block_inverse: &Matrix<T>,
) -> Result<StationaryDistribution<T>> {
    let n = p.n();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let a = n - 1;
    if block_inverse.rows() != a || block_inverse.cols() != a {
        return Err(Error::Shape(format!(
            "block inverse is {}x{}, expected {a}x{a}",
            block_inverse.rows(),
            block_inverse.cols()
        )));
    }
    // l_{n,α} = −P_{n,α}, so −l_{n,α}ᵀ L⁻¹ = P_{n,α}ᵀ L⁻¹.
    let last_row = &p.probabilities().row(a)[..a];
    let mut pi = block_inverse.vec_mul(last_row);
    pi.push(T::one());
    let total = pi.iter().fold(T::zero(), |s, &x| s + x);
    for x in &mut pi {
        *x = *x / total;
    }
    let floor = T::from_f64(MIN_STATIONARY_PROBABILITY);
    // Negated so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if let Some(i) = pi.iter().position(|&x| !(x >= floor)) {
        return Err(Error::NonPositiveStationary {
            node: i,
            value: pi[i].to_f64(),
        });
    }
    Ok(StationaryDistribution { pi })
}

/// `𝐋 = Π L`.
pub fn rw_laplacian<T: Scalar>(l: &Matrix<T>, pi: &StationaryDistribution<T>) -> Matrix<T> {
    assert_eq!(l.rows(), pi.len());
    Matrix::from_fn(l.rows(), l.cols(), |i, j| pi.get(i) * l[(i, j)])
}

/// Moore–Penrose pseudoinverse of the nullity-one matrix described by `f`.
///
/// With `R_w = I − w wᵀ/(1 + wᵀw)`, the leading block is `R_v A⁻¹ R_u`, the
/// last column is `−M_{α,α} u`, the last row `−vᵀ M_{α,α}` and the corner
/// `vᵀ M_{α,α} u`.
pub fn pinv_nullity1<T: Scalar>(f: &NullityOneFactors<T>) -> Matrix<T> {
    let m = f.block_inverse.rows();
    let binv = &f.block_inverse;

    // Y = A⁻¹ R_u = A⁻¹ − (A⁻¹u) uᵀ / (1 + uᵀu)
    let su = T::one() + dot(&f.u, &f.u);
    let bu = binv.mul_vec(&f.u);
    let y = Matrix::from_fn(m, m, |i, j| binv[(i, j)] - bu[i] * f.u[j] / su);
    // M_αα = R_v Y = Y − v (vᵀY) / (1 + vᵀv)
    let sv = T::one() + dot(&f.v, &f.v);
    let vy = y.vec_mul(&f.v);
    let maa = Matrix::from_fn(m, m, |i, j| y[(i, j)] - f.v[i] * vy[j] / sv);

    let col = maa.mul_vec(&f.u);
    let row = maa.vec_mul(&f.v);
    let corner = dot(&f.v, &col);

    let mut out = Matrix::zeros(m + 1, m + 1);
    for i in 0..m {
        out.row_mut(i)[..m].copy_from_slice(maa.row(i));
        out[(i, m)] = -col[i];
        out[(m, i)] = -row[i];
    }
    out[(m, m)] = corner;
    out
}

/// Pseudoinverse `𝐌` of the random-walk Laplacian and the data it was built from.
#[derive(Clone, Debug)]
pub struct LaplacianPinv<T> {
    m: Matrix<T>,
    pi: StationaryDistribution<T>,
    /// `𝐋_{α,α}⁻¹`, the inverse of the leading block of the random-walk Laplacian.
    block_inverse: Matrix<T>,
    transition: TransitionMatrix<T>,
    /// `𝐌 π`, cached for constant-time hitting times.
    m_pi: Vec<T>,
    trace: T,
}

/// Builds `𝐌 = 𝐋⁺` with exactly one LU factorization.
///
/// 1. `L = I − P`; factor and invert `L_{α,α}`.
/// 2. `π` from the inverse (see [`stationary_distribution`]).
/// 3. `[𝐋_{α,α}⁻¹]_ij = [L_{α,α}⁻¹]_ij / π_j`.
/// 4. With `b = 𝐋_{α,α}⁻¹1/n`, `cᵀ = 1ᵀ𝐋_{α,α}⁻¹/n` and `s = cᵀ1/n`:
///    `M_ij = [𝐋_{α,α}⁻¹]_ij − b_i − c_j + s`, `m_in = s − b_i`,
///    `m_nj = s − c_j`, `m_nn = s`.
pub fn rw_laplacian_pinv<T: Scalar>(p: &TransitionMatrix<T>) -> Result<LaplacianPinv<T>> {
    let n = p.n();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some((from, to)) = p.unreachable_pair() {
        return Err(Error::NotStronglyConnected { from, to });
    }
    let a = n - 1;
    let alpha: Vec<usize> = (0..a).collect();

    let l = normalized_laplacian(p);
    let fundamental = Lu::factor(&l.select(&alpha, &alpha))?.inverse();
    let pi = stationary_distribution(p, &fundamental)?;

    let block_inverse = Matrix::from_fn(a, a, |i, j| fundamental[(i, j)] / pi.get(j));

    let nf = T::from_usize(n);
    let b: Vec<T> = block_inverse.row_sums().into_iter().map(|x| x / nf).collect();
    let c: Vec<T> = block_inverse.col_sums().into_iter().map(|x| x / nf).collect();
    let s = c.iter().fold(T::zero(), |acc, &x| acc + x) / nf;

    let mut m = Matrix::zeros(n, n);
    for i in 0..a {
        let row = m.row_mut(i);
        for j in 0..a {
            row[j] = block_inverse[(i, j)] - b[i] - c[j] + s;
        }
        row[a] = s - b[i];
    }
    for j in 0..a {
        m[(a, j)] = s - c[j];
    }
    m[(a, a)] = s;

    let m_pi = m.mul_vec(pi.as_slice());
    let trace = (0..n).fold(T::zero(), |acc, i| acc + m[(i, i)]);
    Ok(LaplacianPinv {
        m,
        pi,
        block_inverse,
        transition: p.clone(),
        m_pi,
        trace,
    })
}

impl<T: Scalar> LaplacianPinv<T> {
    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[(i, j)]
    }

    pub fn stationary(&self) -> &StationaryDistribution<T> {
        &self.pi
    }

    /// `𝐋_{α,α}⁻¹`.
    pub fn block_inverse(&self) -> &Matrix<T> {
        &self.block_inverse
    }

    pub fn transition(&self) -> &TransitionMatrix<T> {
        &self.transition
    }

    /// `(𝐌π)_i = Σ_j m_ij π_j`.
    #[inline]
    pub fn weighted_row_sum(&self, i: usize) -> T {
        self.m_pi[i]
    }

    pub fn trace(&self) -> T {
        self.trace
    }

    /// `(I − P_{α,α})⁻¹`, the fundamental matrix with the last node absorbing.
    pub fn fundamental_block(&self) -> Matrix<T> {
        let a = self.block_inverse.rows();
        Matrix::from_fn(a, a, |i, j| self.block_inverse[(i, j)] * self.pi.get(j))
    }

    pub fn normalized_laplacian(&self) -> Matrix<T> {
        normalized_laplacian(&self.transition)
    }

    /// `𝐋 = Π(I − P)`.
    pub fn rw_laplacian(&self) -> Matrix<T> {
        rw_laplacian(&self.normalized_laplacian(), &self.pi)
    }

    /// `L⁺` for the normalized Laplacian, reusing the retained block inverse.
    pub fn normalized_pinv(&self) -> Matrix<T> {
        let a = self.n() - 1;
        let pn = self.pi.get(a);
        let u = (0..a).map(|i| self.pi.get(i) / pn).collect();
        let v = vec![T::one(); a];
        pinv_nullity1(&NullityOneFactors {
            block_inverse: self.fundamental_block(),
            u,
            v,
        })
    }
}
