//! LU factorization with partial pivoting.
//!
//! Every factorization bumps a per-thread counter so callers can assert how
//! many cubic-cost factorizations a computation performed.

use std::cell::{Cell, RefCell};

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

thread_local! {
    static FACTORIZATIONS: Cell<usize> = const { Cell::new(0) };
    static FACTORED_SIZES: RefCell<Vec<usize>> = const { RefCell::new(Vec::new()) };
}

/// Number of LU factorizations performed on the current thread so far.
pub fn factorization_count() -> usize {
    FACTORIZATIONS.with(Cell::get)
}

/// Dimensions of every matrix factored on the current thread, in order.
pub fn factorization_sizes() -> Vec<usize> {
    FACTORED_SIZES.with(|s| s.borrow().clone())
}

/// Relative pivot floor: a pivot below `PIVOT_TOLERANCE * ‖A‖∞` means singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Lu<T> {
    /// Unit-lower `L` below the diagonal, `U` on and above it.
    factors: Matrix<T>,
    /// `perm[i]` is the row of the original matrix stored at row `i`.
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factors a square matrix, rejecting pivots under the relative floor.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape(format!(
                "cannot factor a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        FACTORIZATIONS.with(|c| c.set(c.get() + 1));
        FACTORED_SIZES.with(|s| s.borrow_mut().push(a.rows()));

        let n = a.rows();
        let floor = T::from_f64(PIVOT_TOLERANCE) * a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best.is_zero() || best < floor {
                return Err(Error::Singular {
                    step: k,
                    pivot: best.to_f64(),
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            let (head, tail) = split_rows(&mut lu, k);
            for i in 0..tail.len() / n {
                let row = &mut tail[i * n..(i + 1) * n];
                let l = row[k] / pivot;
                row[k] = l;
                if l.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    row[j] = row[j] - l * head[j];
                }
            }
        }

        Ok(Lu { factors: lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.factors.row(i);
            let s = (0..i).fold(x[i], |s, j| s - row[j] * x[j]);
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.factors.row(i);
            let s = (i + 1..n).fold(x[i], |s, j| s - row[j] * x[j]);
            x[i] = s / row[i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, then x = Pᵀ z.
        let mut y = b.to_vec();
        for i in 0..n {
            let s = (0..i).fold(y[i], |s, j| s - self.factors[(j, i)] * y[j]);
            y[i] = s / self.factors[(i, i)];
        }
        for i in (0..n).rev() {
            let s = (i + 1..n).fold(y[i], |s, j| s - self.factors[(j, i)] * y[j]);
            y[i] = s;
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Explicit inverse, built column by column from the factors.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
            e[j] = T::zero();
        }
        inv
    }
}

fn split_rows<T: Scalar>(m: &mut Matrix<T>, k: usize) -> (&[T], &mut [T]) {
    let n = m.cols();
    let (before, after) = m.as_mut_slice().split_at_mut((k + 1) * n);
    (&before[k * n..], after)
}

/// Factors and inverts in one call.
pub fn invert<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(Lu::factor(a)?.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn inverse_of_pivoting_matrix() {
        let a = Matrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]])
            .unwrap();
        let inv = invert(&a).unwrap();
        assert!(a.matmul(&inv).max_abs_diff(&Matrix::identity(3)) < 1e-14);
    }

    #[test]
    fn transpose_solve_matches_explicit_transpose() {
        let a = Matrix::from_rows(&[vec![2.0, -1.0, 0.5], vec![0.3, 4.0, 1.0], vec![1.0, 0.0, 3.0]])
            .unwrap();
        let lu = Lu::factor(&a).unwrap();
        let b = [1.0_f64, -2.0, 0.25];
        let x = lu.solve_transpose(&b);
        let back = a.transpose().mul_vec(&x);
        for (u, v) in back.iter().zip(b) {
            assert!((u - v).abs() < 1e-14_f64);
        }
    }

    #[test]
    fn exact_rational_inverse() {
        let r = |n, d| Ratio::<i64>::new(n, d);
        let a = Matrix::from_rows(&[vec![r(1, 1), r(-1, 2)], vec![r(0, 1), r(1, 1)]]).unwrap();
        let inv = invert(&a).unwrap();
        assert_eq!(inv.to_rows(), vec![vec![r(1, 1), r(1, 2)], vec![r(0, 1), r(1, 1)]]);
    }

    #[test]
    fn singular_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(Lu::factor(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn counter_tracks_factorizations() {
        let before = factorization_count();
        let _ = invert(&Matrix::<f64>::identity(2));
        let _ = invert(&Matrix::<f64>::identity(3));
        assert_eq!(factorization_count() - before, 2);
    }

    #[test]
    fn empty_matrix_factors() {
        let lu = Lu::factor(&Matrix::<f64>::zeros(0, 0)).unwrap();
        assert_eq!(lu.inverse().rows(), 0);
    }
}
