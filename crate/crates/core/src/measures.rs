//! Hitting and commute times, centralities, and ordered-passage
//! probabilities read off the fundamental tensor. Nothing here factors a
//! matrix except the avoidance queries, which delegate to the tensor.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{BlockInverseRoute, FundamentalTensor, Partition};

/// Slack allowed on probability bounds and nonnegativity checks.
pub const ROUNDOFF_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MeasureKind {
    Hitting,
    Commute,
    CommuteCentrality,
    Closeness,
    Betweenness,
    Passage,
    ConditionalHitting,
}

impl MeasureKind {
    pub fn is_probability(self) -> bool {
        matches!(self, MeasureKind::Passage)
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Hitting => "hitting",
            MeasureKind::Commute => "commute",
            MeasureKind::CommuteCentrality => "commute-centrality",
            MeasureKind::Closeness => "closeness",
            MeasureKind::Betweenness => "betweenness",
            MeasureKind::Passage => "passage",
            MeasureKind::ConditionalHitting => "conditional-hitting",
        }
    }
}

/// Values of one measure keyed by node tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureReport<T> {
    pub kind: MeasureKind,
    pub values: BTreeMap<Vec<usize>, T>,
}

impl<T: Scalar> MeasureReport<T> {
    pub fn new(kind: MeasureKind) -> Self {
        MeasureReport {
            kind,
            values: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, key: Vec<usize>, value: T) {
        self.values.insert(key, value);
    }

    /// Checks probabilities lie in `[0, 1]` and step counts are nonnegative,
    /// both up to [`ROUNDOFF_SLACK`].
    pub fn validate(&self) -> Result<()> {
        let slack = T::from_f64(ROUNDOFF_SLACK);
        for (key, &v) in &self.values {
            let low_ok = v >= -slack;
            let high_ok = !self.kind.is_probability() || v <= T::one() + slack;
            if !(low_ok && high_ok) {
                return Err(Error::Domain(format!(
                    "{} value {v} at {key:?} out of range",
                    self.kind.name()
                )));
            }
        }
        Ok(())
    }
}

/// `H(i,k) = m_kk − m_ik + (𝐌π)_i − (𝐌π)_k`, constant time.
pub fn hitting_time<T: Scalar>(t: &FundamentalTensor<'_, T>, i: usize, k: usize) -> T {
    if i == k {
        return T::zero();
    }
    let m = t.pinv();
    m.get(k, k) - m.get(i, k) + m.weighted_row_sum(i) - m.weighted_row_sum(k)
}

/// `H(i,k) = Σ_j 𝐍(i,j,k)`, linear time.
pub fn hitting_time_by_visits<T: Scalar>(t: &FundamentalTensor<'_, T>, i: usize, k: usize) -> T {
    (0..t.n()).fold(T::zero(), |s, j| s + t.entry(i, j, k))
}

/// `C(i,k) = H(i,k) + H(k,i) = m_kk + m_ii − m_ik − m_ki`.
pub fn commute_time<T: Scalar>(t: &FundamentalTensor<'_, T>, i: usize, k: usize) -> T {
    if i == k {
        return T::zero();
    }
    let m = t.pinv();
    m.get(k, k) + m.get(i, i) - m.get(i, k) - m.get(k, i)
}

/// `C(i,k)` as a sum over both tensor slices.
pub fn commute_time_by_visits<T: Scalar>(t: &FundamentalTensor<'_, T>, i: usize, k: usize) -> T {
    hitting_time_by_visits(t, i, k) + hitting_time_by_visits(t, k, i)
}

/// `C(k) = Σ_i C(i,k) / n`.
pub fn commute_centrality<T: Scalar>(t: &FundamentalTensor<'_, T>, k: usize) -> T {
    let n = t.n();
    let total = (0..n).fold(T::zero(), |s, i| s + commute_time(t, i, k));
    total / T::from_usize(n)
}

/// Two closed forms for [`commute_centrality`], for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentralityClosedForms<T> {
    /// `m_kk + Trace(𝐌)/n`, the termwise expansion of the defining sum using
    /// zero row and column sums of `𝐌`.
    pub expanded: T,
    /// `(m_kk + Trace(𝐌))/n`.
    pub grouped: T,
}

pub fn commute_centrality_closed_forms<T: Scalar>(t: &FundamentalTensor<'_, T>, k: usize) -> CentralityClosedForms<T> {
    let m = t.pinv();
    let n = T::from_usize(t.n());
    CentralityClosedForms {
        expanded: m.get(k, k) + m.trace() / n,
        grouped: (m.get(k, k) + m.trace()) / n,
    }
}

/// `closeness(k) = Σ_i H(i,k)`.
pub fn closeness<T: Scalar>(t: &FundamentalTensor<'_, T>, k: usize) -> T {
    (0..t.n()).fold(T::zero(), |s, i| s + hitting_time(t, i, k))
}

/// `Pr(i→j→k) = 𝐍(i,j,k) / 𝐍(j,j,k)`.
pub fn passage_probability<T: Scalar>(t: &FundamentalTensor<'_, T>, i: usize, j: usize, k: usize) -> Result<T> {
    if j == k {
        return Err(Error::Domain(format!(
            "passage probability needs distinct via and target nodes, got {j} twice"
        )));
    }
    if i == k {
        return Ok(T::zero());
    }
    if i == j {
        return Ok(T::one());
    }
    Ok(t.entry(i, j, k) / t.entry(j, j, k))
}

/// `Σ Pr(i→j→k)` over `i ≠ j`, `k ≠ j`.
///
/// Terms with `i = k` are zero under the visit convention; `exclude_diagonal`
/// skips them outright.
pub fn betweenness<T: Scalar>(t: &FundamentalTensor<'_, T>, j: usize, exclude_diagonal: bool) -> T {
    let n = t.n();
    let mut total = T::zero();
    for k in (0..n).filter(|&k| k != j) {
        let njj = t.entry(j, j, k);
        for i in (0..n).filter(|&i| i != j) {
            if exclude_diagonal && i == k {
                continue;
            }
            total = total + t.entry(i, j, k) / njj;
        }
    }
    total
}

/// `Pr(i→j→target | the walk avoids γ)`.
pub fn passage_probability_avoiding<T: Scalar>(
    t: &FundamentalTensor<'_, T>,
    i: usize,
    j: usize,
    p: &Partition,
) -> Result<T> {
    if p.gamma().is_empty() && p.exterior().is_empty() {
        return passage_probability(t, i, j, p.target());
    }
    t.visits_avoiding(p)?.passage_probability(i, j)
}

/// `H(i,target,γ) = Σ_{j∈β} 𝐍(i,j,target,γ)`.
pub fn conditional_hitting_time<T: Scalar>(t: &FundamentalTensor<'_, T>, i: usize, p: &Partition) -> Result<T> {
    t.visits_avoiding_with(p, BlockInverseRoute::Auto)?.hitting_time(i)
}
