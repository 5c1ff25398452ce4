//! Personalized hitting time (PHT) trust scores.
//!
//! The base graph is augmented with an evaporation node: every original node
//! leaks a fixed fraction of its walk mass to it, and it returns uniformly to
//! all original nodes. `PHT(i,j)` is the probability that a walk from `i`
//! passes `j` before evaporating.

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::graph::{transition_matrix, Digraph, TransitionMatrix};
use crate::laplacian::{rw_laplacian_pinv, LaplacianPinv};
use crate::measures::passage_probability;
use crate::scalar::Scalar;
use crate::tensor::{FundamentalTensor, Partition};

pub const EVAPORATION_LABEL: &str = "evaporation";

/// A base graph, its evaporation-augmented chain, and that chain's pseudoinverse.
#[derive(Clone, Debug)]
pub struct TrustNetwork<T> {
    base: Digraph<T>,
    evaporation_rate: T,
    augmented: TransitionMatrix<T>,
    pinv: LaplacianPinv<T>,
}

/// Adds the evaporation node (last index) with leak probability `rate`.
pub fn augment_evaporation<T: Scalar>(g: &Digraph<T>, rate: T) -> Result<TrustNetwork<T>> {
    if !(rate > T::zero() && rate < T::one()) {
        return Err(Error::InvalidRate(rate.to_f64()));
    }
    if g.index_of(EVAPORATION_LABEL).is_ok() {
        return Err(Error::Domain(format!(
            "base graph already has a node labeled {EVAPORATION_LABEL:?}"
        )));
    }
    let n = g.n();
    let base = transition_matrix(g)?;
    let keep = T::one() - rate;
    let back = T::one() / T::from_usize(n);
    let p = Matrix::from_fn(n + 1, n + 1, |i, j| match (i == n, j == n) {
        (false, false) => keep * base.get(i, j),
        (false, true) => rate,
        (true, false) => back,
        (true, true) => T::zero(),
    });
    let augmented = TransitionMatrix::from_probabilities(p)?;
    let pinv = rw_laplacian_pinv(&augmented)?;
    Ok(TrustNetwork {
        base: g.clone(),
        evaporation_rate: rate,
        augmented,
        pinv,
    })
}

impl<T: Scalar> TrustNetwork<T> {
    pub fn base(&self) -> &Digraph<T> {
        &self.base
    }

    pub fn evaporation_rate(&self) -> T {
        self.evaporation_rate
    }

    pub fn augmented(&self) -> &TransitionMatrix<T> {
        &self.augmented
    }

    pub fn pinv(&self) -> &LaplacianPinv<T> {
        &self.pinv
    }

    pub fn evaporation_node(&self) -> usize {
        self.base.n()
    }

    pub fn tensor(&self) -> FundamentalTensor<'_, T> {
        FundamentalTensor::new(&self.pinv)
    }

    fn check_member(&self, i: usize, role: &str) -> Result<()> {
        let n = self.base.n();
        if i > n {
            return Err(Error::IndexOutOfRange { index: i, n: n + 1 });
        }
        if i == n {
            return Err(Error::Domain(format!("{role} cannot be the evaporation node")));
        }
        Ok(())
    }

    /// `PHT(i,j) = Pr(i→j→evaporation)`.
    pub fn pht(&self, viewpoint: usize, subject: usize) -> Result<T> {
        self.check_member(viewpoint, "viewpoint")?;
        self.check_member(subject, "subject")?;
        passage_probability(&self.tensor(), viewpoint, subject, self.evaporation_node())
    }

    /// Trust through walks that never touch `avoid`: the probability of
    /// passing `subject` before reaching either an avoided node or the
    /// evaporation node. Avoided subjects score zero.
    pub fn pht_avoiding(&self, viewpoint: usize, subject: usize, avoid: &[usize]) -> Result<T> {
        self.check_member(viewpoint, "viewpoint")?;
        self.check_member(subject, "subject")?;
        for &g in avoid {
            self.check_member(g, "avoided node")?;
        }
        if avoid.contains(&viewpoint) {
            return Err(Error::Domain(format!("viewpoint {viewpoint} is in the avoid set")));
        }
        if avoid.contains(&subject) {
            return Ok(T::zero());
        }
        if avoid.is_empty() {
            return self.pht(viewpoint, subject);
        }
        let scores = self.scores_avoiding(viewpoint, avoid)?;
        Ok(scores[subject])
    }

    fn scores_avoiding(&self, viewpoint: usize, avoid: &[usize]) -> Result<Vec<T>> {
        let n = self.base.n();
        let part = Partition::avoiding(n + 1, self.evaporation_node(), avoid)?;
        let counts = self.tensor().visits_avoiding(&part)?;
        let a = part.position(viewpoint).expect("viewpoint is in the allowed set");
        if !counts.reachable[a] {
            return Err(Error::Unreachable {
                from: viewpoint,
                target: self.evaporation_node(),
            });
        }
        let b = &counts.block_inverse;
        let mut scores = vec![T::zero(); n];
        for (pos, &j) in part.beta().iter().enumerate() {
            scores[j] = if pos == a { T::one() } else { b[(a, pos)] / b[(pos, pos)] };
        }
        Ok(scores)
    }

    /// Scores of every subject other than the viewpoint, highest first.
    /// Ties keep index order.
    pub fn ranking(&self, viewpoint: usize, avoid: &[usize]) -> Result<Vec<(usize, T)>> {
        self.check_member(viewpoint, "viewpoint")?;
        let mut scores: Vec<(usize, T)> = if avoid.is_empty() {
            (0..self.base.n())
                .map(|j| self.pht(viewpoint, j).map(|s| (j, s)))
                .collect::<Result<_>>()?
        } else {
            // validates the avoid set and the viewpoint
            self.pht_avoiding(viewpoint, viewpoint, avoid)?;
            self.scores_avoiding(viewpoint, avoid)?.into_iter().enumerate().collect()
        };
        scores.retain(|&(j, _)| j != viewpoint);
        scores.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        Ok(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trust_base() -> Digraph<f64> {
        Digraph::from_edges([
            ("1", "2", 0.4),
            ("2", "1", 0.2),
            ("2", "3", 0.5),
            ("2", "4", 0.3),
            ("1", "4", 0.6),
            ("3", "5", 1.0),
            ("4", "1", 0.5),
            ("4", "5", 0.5),
            ("5", "1", 0.2),
            ("5", "3", 0.8),
        ])
        .unwrap()
    }

    #[test]
    fn augmented_matrix_matches_reference_values() {
        let net = augment_evaporation(&trust_base(), 0.15).unwrap();
        let expected = [
            [0.0, 0.340, 0.0, 0.510, 0.0, 0.150],
            [0.170, 0.0, 0.425, 0.255, 0.0, 0.150],
            [0.0, 0.0, 0.0, 0.0, 0.850, 0.150],
            [0.425, 0.0, 0.0, 0.0, 0.425, 0.150],
            [0.170, 0.0, 0.680, 0.0, 0.0, 0.150],
            [0.2, 0.2, 0.2, 0.2, 0.2, 0.0],
        ];
        let p = net.augmented().probabilities();
        for i in 0..6 {
            for j in 0..6 {
                assert!((p[(i, j)] - expected[i][j]).abs() <= 1e-3);
            }
        }
        for s in p.row_sums() {
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_cycle_with_half_rate() {
        let g = Digraph::from_edges([("a", "b", 1.0), ("b", "a", 1.0)]).unwrap();
        let net = augment_evaporation(&g, 0.5).unwrap();
        assert_eq!(
            net.augmented().probabilities().to_rows(),
            vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]]
        );
    }

    #[test]
    fn rate_must_be_open_unit_interval() {
        for rate in [0.0, 1.0, -0.2, 1.5] {
            assert!(matches!(
                augment_evaporation(&trust_base(), rate),
                Err(Error::InvalidRate(_))
            ));
        }
    }

    #[test]
    fn pht_from_node_four() {
        let net = augment_evaporation(&trust_base(), 0.15).unwrap();
        let expected = [0.5962, 0.2913, 0.5332, 1.0, 0.6573];
        for (j, e) in expected.iter().enumerate() {
            assert!((net.pht(3, j).unwrap() - e).abs() <= 5e-4);
        }
        let ranking = net.ranking(3, &[]).unwrap();
        assert_eq!(ranking[0].0, 4);
    }

    #[test]
    fn pht_avoiding_node_two() {
        let net = augment_evaporation(&trust_base(), 0.15).unwrap();
        let expected = [0.5962, 0.0, 0.3872, 1.0, 0.5426];
        for (j, e) in expected.iter().enumerate() {
            assert!((net.pht_avoiding(3, j, &[1]).unwrap() - e).abs() <= 5e-4);
        }
        assert_eq!(net.ranking(3, &[1]).unwrap()[0].0, 0);
        for j in 0..5 {
            assert_eq!(net.pht_avoiding(3, j, &[]).unwrap(), net.pht(3, j).unwrap());
        }
    }

    #[test]
    fn evaporation_node_queries_rejected() {
        let net = augment_evaporation(&trust_base(), 0.15).unwrap();
        assert!(net.pht(5, 0).is_err());
        assert!(net.pht(0, 5).is_err());
        assert!(net.pht_avoiding(1, 0, &[1]).is_err());
    }
}
