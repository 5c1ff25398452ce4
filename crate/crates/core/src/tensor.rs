//! The random-walk fundamental tensor `𝐍(i,j,k)`: expected visits to `j`
//! on walks from `i` before the first arrival at `k`.
//!
//! Entries come from `𝐌` and `π` in constant time:
//! `𝐍(i,j,k) = (m_ij − m_kj − m_ik + m_kk) π_j`. A visit is a departure, so
//! `𝐍(k,j,k) = 𝐍(i,k,k) = 0`.
//!
//! Avoidance queries work on a [`Partition`] of the nodes into an allowed
//! region `β`, an avoided set `γ`, and a target. Nodes in neither `β` nor
//! `{target}` are treated as avoided whether or not they are listed in `γ`.

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::laplacian::LaplacianPinv;
use crate::lu::Lu;
use crate::scalar::Scalar;

/// Absorption probabilities below this mark a source as unable to reach the
/// target without touching the avoided set.
pub const REACHABILITY_THRESHOLD: f64 = 1e-12;

/// Read-only view of `𝐍` backed by a pseudoinverse.
#[derive(Clone, Copy, Debug)]
pub struct FundamentalTensor<'a, T> {
    pinv: &'a LaplacianPinv<T>,
}

/// How `(I − P_{β,β})⁻¹` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockInverseRoute {
    /// Schur complement of tensor slices when the exterior is at most `n/2`,
    /// direct inversion otherwise.
    Auto,
    /// `N_ββ − N_βγ N_γγ⁻¹ N_γβ` from the target slice.
    Schur,
    /// Fresh factorization of `I − P_{β,β}`.
    Direct,
}

impl<'a, T: Scalar> FundamentalTensor<'a, T> {
    pub fn new(pinv: &'a LaplacianPinv<T>) -> Self {
        FundamentalTensor { pinv }
    }

    pub fn n(&self) -> usize {
        self.pinv.n()
    }

    pub fn pinv(&self) -> &'a LaplacianPinv<T> {
        self.pinv
    }

    /// `𝐍(i,j,k)` in constant time.
    #[inline]
    pub fn entry(&self, i: usize, j: usize, k: usize) -> T {
        if i == k || j == k {
            return T::zero();
        }
        let m = self.pinv;
        (m.get(i, j) - m.get(k, j) - m.get(i, k) + m.get(k, k)) * m.stationary().get(j)
    }

    /// `𝐍(:,:,k)`.
    pub fn slice(&self, k: usize) -> Matrix<T> {
        let n = self.n();
        Matrix::from_fn(n, n, |i, j| self.entry(i, j, k))
    }

    /// Every slice, indexed by target.
    pub fn materialize(&self) -> Vec<Matrix<T>> {
        (0..self.n()).map(|k| self.slice(k)).collect()
    }

    /// Bytes needed by [`materialize`](Self::materialize).
    pub fn materialized_bytes(&self) -> usize {
        let n = self.n();
        n.saturating_mul(n).saturating_mul(n).saturating_mul(std::mem::size_of::<T>())
    }

    /// `(I − P_{β,β})⁻¹ = 𝐍(β,β,{γ,target})`.
    pub fn schur_block_inverse(&self, p: &Partition) -> Result<Matrix<T>> {
        Ok(self.block_solve(p, BlockInverseRoute::Auto)?.0)
    }

    pub fn schur_block_inverse_with(&self, p: &Partition, route: BlockInverseRoute) -> Result<Matrix<T>> {
        Ok(self.block_solve(p, route)?.0)
    }

    /// Block inverse and, per source in `β`, the probability that the first
    /// node reached outside `β` is the target.
    pub(crate) fn block_solve(&self, p: &Partition, route: BlockInverseRoute) -> Result<(Matrix<T>, Vec<T>)> {
        if p.n() != self.n() {
            return Err(Error::InvalidPartition(format!(
                "partition is over {} nodes, graph has {}",
                p.n(),
                self.n()
            )));
        }
        let exterior = p.exterior();
        let direct = match route {
            BlockInverseRoute::Auto => 2 * exterior.len() > self.n(),
            BlockInverseRoute::Schur => false,
            BlockInverseRoute::Direct => true,
        };
        if direct {
            self.block_solve_direct(p)
        } else {
            self.block_solve_schur(p, &exterior)
        }
    }

    fn block_solve_schur(&self, p: &Partition, exterior: &[usize]) -> Result<(Matrix<T>, Vec<T>)> {
        let k = p.target;
        let beta = &p.beta;
        let nb = |rows: &[usize], cols: &[usize]| {
            Matrix::from_fn(rows.len(), cols.len(), |a, b| self.entry(rows[a], cols[b], k))
        };
        let n_bb = nb(beta, beta);
        if exterior.is_empty() {
            return Ok((n_bb, vec![T::one(); beta.len()]));
        }
        let n_bs = nb(beta, exterior);
        let n_ss = nb(exterior, exterior);
        let n_sb = nb(exterior, beta);
        let lu = Lu::factor(&n_ss).map_err(|_| Error::AvoidanceDisconnects)?;

        // X = N_βs N_ss⁻¹, row by row via the transposed system.
        // X[i, ℓ] is the probability that ℓ is the first node reached outside β.
        let mut first_exit = Matrix::zeros(beta.len(), exterior.len());
        for a in 0..beta.len() {
            let row = lu.solve_transpose(n_bs.row(a));
            first_exit.row_mut(a).copy_from_slice(&row);
        }
        let correction = first_exit.matmul(&n_sb);
        let block = n_bb.sub(&correction);
        let absorbed = first_exit
            .row_sums()
            .into_iter()
            .map(|escape| (T::one() - escape).max_of(T::zero()))
            .collect();
        Ok((block, absorbed))
    }

    fn block_solve_direct(&self, p: &Partition) -> Result<(Matrix<T>, Vec<T>)> {
        let probs = self.pinv.transition().probabilities();
        let beta = &p.beta;
        let a = Matrix::identity(beta.len()).sub(&probs.select(beta, beta));
        let lu = Lu::factor(&a).map_err(|_| Error::AvoidanceDisconnects)?;
        let to_target: Vec<T> = beta.iter().map(|&i| probs[(i, p.target)]).collect();
        let absorbed = lu.solve(&to_target);
        Ok((lu.inverse(), absorbed))
    }

    /// Expected visits conditioned on avoiding the exterior of `β`.
    ///
    /// `counts[i][j] = Pr(i→j→target avoiding γ) · 𝐍(j,j,{γ,target})`; the
    /// diagonal is the block-inverse diagonal itself.
    pub fn visits_avoiding(&self, p: &Partition) -> Result<AvoidanceCounts<T>> {
        self.visits_avoiding_with(p, BlockInverseRoute::Auto)
    }

    pub fn visits_avoiding_with(&self, p: &Partition, route: BlockInverseRoute) -> Result<AvoidanceCounts<T>> {
        let (block_inverse, absorbed) = self.block_solve(p, route)?;
        let floor = T::from_f64(REACHABILITY_THRESHOLD);
        let reachable: Vec<bool> = absorbed.iter().map(|&x| x >= floor).collect();
        let nb = p.beta.len();
        let mut counts = Matrix::zeros(nb, nb);
        for a in 0..nb {
            if !reachable[a] {
                continue;
            }
            for b in 0..nb {
                counts[(a, b)] = if a == b {
                    block_inverse[(a, a)]
                } else {
                    conditional_passage(&block_inverse, &absorbed, a, b) * block_inverse[(b, b)]
                };
            }
        }
        Ok(AvoidanceCounts {
            partition: p.clone(),
            counts,
            block_inverse,
            absorbed,
            reachable,
        })
    }
}

/// `([B⁻¹]_ab / [B⁻¹]_bb) · (absorbed_b / absorbed_a)` for positions in `β`.
pub(crate) fn conditional_passage<T: Scalar>(block_inverse: &Matrix<T>, absorbed: &[T], a: usize, b: usize) -> T {
    if a == b {
        return T::one();
    }
    (block_inverse[(a, b)] / block_inverse[(b, b)]) * (absorbed[b] / absorbed[a])
}

/// Disjoint node sets for avoidance-conditioned queries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    beta: Vec<usize>,
    gamma: Vec<usize>,
    target: usize,
}

impl Partition {
    /// Validates disjointness and bounds; `beta` must be nonempty.
    pub fn new(n: usize, beta: Vec<usize>, gamma: Vec<usize>, target: usize) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidPartition("allowed set is empty".into()));
        }
        let mut owner = vec![0u8; n];
        for (set, tag) in [(&beta, 1u8), (&gamma, 2u8), (&vec![target], 3u8)] {
            for &i in set.iter() {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, n });
                }
                if owner[i] != 0 {
                    return Err(Error::InvalidPartition(format!("node {i} appears in two sets")));
                }
                owner[i] = tag;
            }
        }
        Ok(Partition { n, beta, gamma, target })
    }

    /// `β` = every node other than the target and the avoided ones.
    pub fn avoiding(n: usize, target: usize, gamma: &[usize]) -> Result<Self> {
        let beta = (0..n).filter(|i| *i != target && !gamma.contains(i)).collect();
        Self::new(n, beta, gamma.to_vec(), target)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> &[usize] {
        &self.beta
    }

    pub fn gamma(&self) -> &[usize] {
        &self.gamma
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Position of node `i` within `β`.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.beta.iter().position(|&b| b == i)
    }

    /// Nodes outside `β ∪ {target}`.
    pub fn exterior(&self) -> Vec<usize> {
        let mut inside = vec![false; self.n];
        for &b in &self.beta {
            inside[b] = true;
        }
        inside[self.target] = true;
        (0..self.n).filter(|&i| !inside[i]).collect()
    }
}

/// Visit counts restricted to walks that avoid `γ`.
#[derive(Clone, Debug)]
pub struct AvoidanceCounts<T> {
    pub partition: Partition,
    /// `𝐍(i,j,target,γ)` for `i, j ∈ β`, in `β` order. Rows of unreachable
    /// sources are zero.
    pub counts: Matrix<T>,
    /// `(I − P_{β,β})⁻¹`.
    pub block_inverse: Matrix<T>,
    /// Probability that the first node reached outside `β` is the target.
    pub absorbed: Vec<T>,
    pub reachable: Vec<bool>,
}

impl<T: Scalar> AvoidanceCounts<T> {
    fn positions(&self, i: usize, j: usize) -> Result<(usize, usize)> {
        let a = self.source_position(i)?;
        let b = self
            .partition
            .position(j)
            .ok_or_else(|| Error::InvalidPartition(format!("node {j} is not in the allowed set")))?;
        Ok((a, b))
    }

    fn source_position(&self, i: usize) -> Result<usize> {
        let a = self
            .partition
            .position(i)
            .ok_or_else(|| Error::InvalidPartition(format!("source {i} is not in the allowed set")))?;
        if !self.reachable[a] {
            return Err(Error::Unreachable {
                from: i,
                target: self.partition.target,
            });
        }
        Ok(a)
    }

    pub fn is_reachable(&self, i: usize) -> Option<bool> {
        self.partition.position(i).map(|a| self.reachable[a])
    }

    /// `𝐍(i,j,target,γ)` by node index.
    pub fn get(&self, i: usize, j: usize) -> Result<T> {
        let (a, b) = self.positions(i, j)?;
        Ok(self.counts[(a, b)])
    }

    /// `Pr(i→j→target avoiding γ)` by node index.
    pub fn passage_probability(&self, i: usize, j: usize) -> Result<T> {
        let (a, b) = self.positions(i, j)?;
        Ok(conditional_passage(&self.block_inverse, &self.absorbed, a, b))
    }

    /// Expected steps to the target conditioned on avoiding `γ`.
    pub fn hitting_time(&self, i: usize) -> Result<T> {
        let a = self.source_position(i)?;
        Ok(self.counts.row(a).iter().fold(T::zero(), |s, &x| s + x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TransitionMatrix;
    use crate::laplacian::rw_laplacian_pinv;
    use crate::oracle::{brute_force_block_inverse, brute_force_slice, random_strongly_connected};

    fn four_node() -> LaplacianPinv<f64> {
        let p = TransitionMatrix::from_probabilities(
            Matrix::from_rows(&[
                vec![0.0, 0.5, 0.5, 0.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
            ])
            .unwrap(),
        )
        .unwrap();
        rw_laplacian_pinv(&p).unwrap()
    }

    #[test]
    fn entries_match_reference_slices() {
        let pinv = four_node();
        let t = FundamentalTensor::new(&pinv);
        // 1-based (1,2,4), (2,2,4), (3,3,2)
        assert!((t.entry(0, 1, 3) - 1.0).abs() < 1e-12);
        assert!((t.entry(1, 1, 3) - 2.0).abs() < 1e-12);
        assert!((t.entry(2, 2, 1) - 2.0).abs() < 1e-12);
        let s1 = t.slice(0);
        let expected = [[0., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., 1., 1.], [0., 0., 0., 1.]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((s1[(i, j)] - expected[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn target_rows_and_columns_are_exactly_zero() {
        let p = random_strongly_connected::<f64>(9, 0.3, 3);
        let pinv = rw_laplacian_pinv(&p).unwrap();
        let t = FundamentalTensor::new(&pinv);
        for k in 0..9 {
            for i in 0..9 {
                assert_eq!(t.entry(i, k, k), 0.0);
                assert_eq!(t.entry(k, i, k), 0.0);
            }
        }
    }

    #[test]
    fn two_cycle_forced_departure() {
        let p = TransitionMatrix::from_probabilities(
            Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let pinv = rw_laplacian_pinv(&p).unwrap();
        let t = FundamentalTensor::new(&pinv);
        assert!((t.entry(0, 0, 1) - 1.0_f64).abs() < 1e-12);
    }

    #[test]
    fn schur_block_inverse_examples() {
        let pinv = four_node();
        let t = FundamentalTensor::new(&pinv);
        let p = Partition::new(4, vec![0, 2], vec![1], 3).unwrap();
        for route in [BlockInverseRoute::Schur, BlockInverseRoute::Direct, BlockInverseRoute::Auto] {
            let b = t.schur_block_inverse_with(&p, route).unwrap();
            let expected = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
            assert!(b.max_abs_diff(&expected) < 1e-12, "{route:?}: {b:?}");
        }
        // empty avoid set: the target slice restricted to β
        let p = Partition::new(4, vec![0, 1, 2], vec![], 3).unwrap();
        let b = t.schur_block_inverse(&p).unwrap();
        assert!(b.max_abs_diff(&t.slice(3).select(&[0, 1, 2], &[0, 1, 2])) < 1e-15);
    }

    #[test]
    fn schur_matches_fresh_inversion_on_random_graphs() {
        for seed in 0..30u64 {
            let n = 4 + (seed as usize % 17);
            let p = random_strongly_connected::<f64>(n, 0.3, 1000 + seed);
            let pinv = rw_laplacian_pinv(&p).unwrap();
            let t = FundamentalTensor::new(&pinv);
            let target = seed as usize % n;
            let gamma: Vec<usize> = (0..n).filter(|&i| i != target && (i * 7 + seed as usize).is_multiple_of(5)).collect();
            let part = Partition::avoiding(n, target, &gamma).unwrap();
            let oracle = brute_force_block_inverse(&p, part.beta()).unwrap();
            let got = t.schur_block_inverse_with(&part, BlockInverseRoute::Schur).unwrap();
            assert!(got.max_abs_diff(&oracle) <= 1e-9 * oracle.max_abs().max(1.0), "seed {seed}");
        }
    }

    #[test]
    fn block_identities_hold() {
        for seed in 0..10u64 {
            let n = 6 + seed as usize;
            let p = random_strongly_connected::<f64>(n, 0.3, 2000 + seed);
            let pinv = rw_laplacian_pinv(&p).unwrap();
            let t = FundamentalTensor::new(&pinv);
            let k = n - 1;
            let beta: Vec<usize> = (0..k).filter(|i| i % 3 != 0).collect();
            let gamma: Vec<usize> = (0..k).filter(|i| i % 3 == 0).collect();
            let l = Matrix::identity(n).sub(p.probabilities());
            let s = t.slice(k);
            let lhs_a = l
                .select(&beta, &beta)
                .matmul(&s.select(&beta, &gamma))
                .sub(&l.select(&beta, &gamma).matmul(&s.select(&gamma, &gamma)).scale(-1.0));
            assert!(lhs_a.max_abs() <= 1e-9);
            let lhs_b = l
                .select(&beta, &beta)
                .matmul(&s.select(&beta, &beta))
                .sub(&l.select(&beta, &gamma).matmul(&s.select(&gamma, &beta)).scale(-1.0));
            assert!(lhs_b.max_abs_diff(&Matrix::identity(beta.len())) <= 1e-9);
        }
    }

    #[test]
    fn visits_avoiding_examples() {
        let pinv = four_node();
        let t = FundamentalTensor::new(&pinv);
        let p = Partition::new(4, vec![0, 2], vec![1], 3).unwrap();
        let v = t.visits_avoiding(&p).unwrap();
        let expected = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(v.counts.max_abs_diff(&expected) < 1e-12);
        assert_eq!(v.reachable, vec![true, true]);
        assert!((v.hitting_time(0).unwrap() - 2.0).abs() < 1e-12);

        // every walk from node 1 to node 4 passes node 3
        let p = Partition::avoiding(4, 3, &[2]).unwrap();
        let v = t.visits_avoiding(&p).unwrap();
        assert_eq!(v.is_reachable(0), Some(false));
        assert!(matches!(v.get(0, 1), Err(Error::Unreachable { from: 0, target: 3 })));
        // sources inside the avoided set are rejected
        assert!(matches!(v.get(2, 0), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn avoidance_diagonal_equals_block_inverse_diagonal() {
        for seed in 0..10u64 {
            let n = 5 + seed as usize;
            let p = random_strongly_connected::<f64>(n, 0.35, 3000 + seed);
            let pinv = rw_laplacian_pinv(&p).unwrap();
            let t = FundamentalTensor::new(&pinv);
            let part = Partition::avoiding(n, 0, &[1, 2]).unwrap();
            let v = t.visits_avoiding(&part).unwrap();
            let b = t.schur_block_inverse(&part).unwrap();
            for a in 0..part.beta().len() {
                if v.reachable[a] {
                    assert_eq!(v.counts[(a, a)], b[(a, a)]);
                }
            }
        }
    }

    #[test]
    fn schur_and_direct_routes_agree_on_absorption() {
        let p = random_strongly_connected::<f64>(14, 0.25, 77);
        let pinv = rw_laplacian_pinv(&p).unwrap();
        let t = FundamentalTensor::new(&pinv);
        let part = Partition::avoiding(14, 5, &[0, 3, 9]).unwrap();
        let (_, a) = t.block_solve(&part, BlockInverseRoute::Schur).unwrap();
        let (_, b) = t.block_solve(&part, BlockInverseRoute::Direct).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn slices_match_brute_force() {
        for seed in 0..10u64 {
            let n = 3 + 3 * seed as usize;
            let p = random_strongly_connected::<f64>(n, 0.2, 4000 + seed);
            let pinv = rw_laplacian_pinv(&p).unwrap();
            let t = FundamentalTensor::new(&pinv);
            for k in 0..n {
                let oracle = brute_force_slice(&p, k).unwrap();
                let rel = t.slice(k).max_abs_diff(&oracle) / oracle.max_abs().max(1.0);
                assert!(rel <= 1e-8, "seed {seed} k {k}: {rel}");
            }
        }
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(4, vec![], vec![1], 3).is_err());
        assert!(Partition::new(4, vec![0, 1], vec![1], 3).is_err());
        assert!(Partition::new(4, vec![0], vec![5], 3).is_err());
        assert!(Partition::new(4, vec![0, 3], vec![], 3).is_err());
        let p = Partition::new(5, vec![0, 1], vec![2], 4).unwrap();
        assert_eq!(p.exterior(), vec![2, 3]);
    }

    #[test]
    fn memory_estimate() {
        let pinv = four_node();
        assert_eq!(FundamentalTensor::new(&pinv).materialized_bytes(), 64 * 8);
    }
}
