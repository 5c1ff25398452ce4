//! Independent reference computations: per-target inversion and seeded
//! Monte Carlo simulation of the walk.
//!
//! Nothing here touches the pseudoinverse pipeline, so these routines can be
//! used to check it.
//!
//! Simulation uses ChaCha8 (`rand_chacha::ChaCha8Rng`). Walks are split into
//! fixed batches of [`BATCH_SIZE`]; batch `b` draws from the generator seeded
//! with `seed_from_u64(seed)` on stream `b`. Batch results are merged in batch
//! order, so statistics depend only on the seed, never on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::graph::TransitionMatrix;
use crate::lu::invert;
use crate::scalar::Scalar;

/// Walks abandoned after this many steps are excluded from the estimates.
pub const STEP_CAP: u64 = 1_000_000;

pub const BATCH_SIZE: usize = 1024;

/// Fundamental matrix with node `k` absorbing, by fresh inversion of
/// `I − P_{α,α}`, padded with a zero row and column at `k`.
pub fn brute_force_slice<T: Scalar>(p: &TransitionMatrix<T>, k: usize) -> Result<Matrix<T>> {
    let n = p.n();
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, n });
    }
    let alpha: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    let block = Matrix::identity(n - 1).sub(&p.probabilities().select(&alpha, &alpha));
    let inv = invert(&block)?;
    let mut out = Matrix::zeros(n, n);
    for (a, &i) in alpha.iter().enumerate() {
        for (b, &j) in alpha.iter().enumerate() {
            out[(i, j)] = inv[(a, b)];
        }
    }
    Ok(out)
}

/// `(I − P_{β,β})⁻¹` by fresh inversion.
pub fn brute_force_block_inverse<T: Scalar>(p: &TransitionMatrix<T>, beta: &[usize]) -> Result<Matrix<T>> {
    let block = Matrix::identity(beta.len()).sub(&p.probabilities().select(beta, beta));
    invert(&block)
}

/// Empirical statistics of walks from one start node to one target.
///
/// A visit is a departure, so the start counts once and the target never
/// does. When an avoid set is given, walks that touch it are rejected and the
/// conditional estimators (`visit_*`, `hit_time_*`, `passage_*`) average over
/// accepted walks only.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkStats {
    pub seed: u64,
    pub start: usize,
    pub target: usize,
    /// Walks contributing to the conditional estimates.
    pub walks: usize,
    pub attempted: usize,
    pub rejected: usize,
    pub capped: usize,
    pub visit_mean: Vec<f64>,
    pub visit_stderr: Vec<f64>,
    pub hit_time_mean: f64,
    pub hit_time_stderr: f64,
    /// Fraction of accepted walks that visit each node before the target.
    pub passage_freq: Vec<f64>,
    pub passage_stderr: Vec<f64>,
    /// Fraction of all uncapped walks that visit each node before touching
    /// the avoid set or the target.
    pub first_exit_passage_freq: Vec<f64>,
    pub first_exit_passage_stderr: Vec<f64>,
}

impl WalkStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.walks as f64 / self.attempted as f64
    }

    /// Estimated expected visits summed over all nodes; equals the hit time.
    pub fn total_visits(&self) -> f64 {
        self.visit_mean.iter().sum()
    }
}

#[derive(Clone, Default)]
struct Accumulator {
    accepted: usize,
    rejected: usize,
    capped: usize,
    uncapped: usize,
    visits: Vec<f64>,
    visits_sq: Vec<f64>,
    steps: f64,
    steps_sq: f64,
    passed: Vec<f64>,
    passed_before_exit: Vec<f64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator {
            visits: vec![0.0; n],
            visits_sq: vec![0.0; n],
            passed: vec![0.0; n],
            passed_before_exit: vec![0.0; n],
            ..Default::default()
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.capped += other.capped;
        self.uncapped += other.uncapped;
        self.steps += other.steps;
        self.steps_sq += other.steps_sq;
        for (a, b) in [
            (&mut self.visits, &other.visits),
            (&mut self.visits_sq, &other.visits_sq),
            (&mut self.passed, &other.passed),
            (&mut self.passed_before_exit, &other.passed_before_exit),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// Cumulative row sums with the last positive bucket recorded for clamping.
struct Sampler {
    cumulative: Vec<Vec<f64>>,
    last_positive: Vec<usize>,
}

impl Sampler {
    fn new<T: Scalar>(p: &TransitionMatrix<T>) -> Self {
        let n = p.n();
        let mut cumulative = Vec::with_capacity(n);
        let mut last_positive = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            let row: Vec<f64> = p
                .probabilities()
                .row(i)
                .iter()
                .map(|x| {
                    acc += x.to_f64();
                    acc
                })
                .collect();
            cumulative.push(row);
            last_positive.push(
                p.probabilities()
                    .row(i)
                    .iter()
                    .rposition(|x| x.is_positive())
                    .unwrap_or(n - 1),
            );
        }
        Sampler {
            cumulative,
            last_positive,
        }
    }

    #[inline]
    fn step(&self, from: usize, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        let row = &self.cumulative[from];
        let j = row.partition_point(|&c| c <= u);
        j.min(self.last_positive[from])
    }
}

/// Simulates `walks` walks from `start` until absorption at `target`.
pub fn simulate_walks<T: Scalar>(
    p: &TransitionMatrix<T>,
    start: usize,
    target: usize,
    avoid: &[usize],
    walks: usize,
    seed: u64,
) -> Result<WalkStats> {
    let n = p.n();
    for &i in [start, target].iter().chain(avoid) {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
    }
    if walks == 0 {
        return Err(Error::Domain("at least one walk is required".into()));
    }
    if avoid.contains(&target) {
        return Err(Error::Domain("target is in the avoid set".into()));
    }
    let mut avoided = vec![false; n];
    for &g in avoid {
        avoided[g] = true;
    }
    let sampler = Sampler::new(p);
    let batches = walks.div_ceil(BATCH_SIZE);

    let partials: Vec<Accumulator> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH_SIZE.min(walks - b * BATCH_SIZE);
            run_batch(&sampler, start, target, &avoided, count, &mut rng)
        })
        .collect();

    let mut total = Accumulator::new(n);
    for part in &partials {
        total.merge(part);
    }

    let attempted = walks;
    if total.accepted == 0 {
        return Err(Error::Estimation {
            attempted,
            acceptance_rate: 0.0,
        });
    }
    let m = total.accepted as f64;
    let mean_se = |sum: f64, sum_sq: f64, count: f64| {
        let mean = sum / count;
        let var = if count > 1.0 {
            ((sum_sq - count * mean * mean) / (count - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / count).sqrt())
    };
    let (visit_mean, visit_stderr): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|j| mean_se(total.visits[j], total.visits_sq[j], m))
        .unzip();
    let (hit_time_mean, hit_time_stderr) = mean_se(total.steps, total.steps_sq, m);
    // Indicators satisfy x² = x.
    let (passage_freq, passage_stderr): (Vec<f64>, Vec<f64>) =
        (0..n).map(|j| mean_se(total.passed[j], total.passed[j], m)).unzip();
    let mu = total.uncapped.max(1) as f64;
    let (first_exit_passage_freq, first_exit_passage_stderr): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|j| mean_se(total.passed_before_exit[j], total.passed_before_exit[j], mu))
        .unzip();

    Ok(WalkStats {
        seed,
        start,
        target,
        walks: total.accepted,
        attempted,
        rejected: total.rejected,
        capped: total.capped,
        visit_mean,
        visit_stderr,
        hit_time_mean,
        hit_time_stderr,
        passage_freq,
        passage_stderr,
        first_exit_passage_freq,
        first_exit_passage_stderr,
    })
}

fn run_batch(
    sampler: &Sampler,
    start: usize,
    target: usize,
    avoided: &[bool],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Accumulator {
    let n = avoided.len();
    let mut acc = Accumulator::new(n);
    let mut visits = vec![0u64; n];
    let mut touched: Vec<usize> = Vec::new();

    for _ in 0..count {
        let mut node = start;
        let mut steps = 0u64;
        let mut rejected = avoided[start];
        let mut capped = false;
        // The walk stops at the first avoided node, so every touched node
        // was visited before leaving the allowed region.
        while node != target && !rejected {
            if visits[node] == 0 {
                touched.push(node);
            }
            visits[node] += 1;
            if steps == STEP_CAP {
                capped = true;
                break;
            }
            steps += 1;
            node = sampler.step(node, rng);
            rejected = avoided[node];
        }

        if capped {
            acc.capped += 1;
        } else {
            acc.uncapped += 1;
            for &j in &touched {
                acc.passed_before_exit[j] += 1.0;
            }
            if rejected {
                acc.rejected += 1;
            } else {
                acc.accepted += 1;
                let s = steps as f64;
                acc.steps += s;
                acc.steps_sq += s * s;
                for &j in &touched {
                    let v = visits[j] as f64;
                    acc.visits[j] += v;
                    acc.visits_sq[j] += v * v;
                    acc.passed[j] += 1.0;
                }
            }
        }
        for &j in &touched {
            visits[j] = 0;
        }
        touched.clear();
    }
    acc
}

/// Random strongly connected chain on `n` nodes.
///
/// A random Hamiltonian cycle guarantees strong connectivity; every other
/// ordered pair (self-loops included) gets an edge with probability
/// `density`. Weights are uniform in `[0.5, 2)`.
pub fn random_strongly_connected<T: Scalar>(n: usize, density: f64, seed: u64) -> TransitionMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut adj = Matrix::<f64>::zeros(n, n);
    for w in 0..n {
        let (a, b) = (order[w], order[(w + 1) % n]);
        adj[(a, b)] = rng.gen_range(0.5..2.0);
    }
    for i in 0..n {
        for j in 0..n {
            if adj[(i, j)] == 0.0 && rng.gen_bool(density) {
                adj[(i, j)] = rng.gen_range(0.5..2.0);
            }
        }
    }
    let sums = adj.row_sums();
    let p = Matrix::from_fn(n, n, |i, j| T::from_f64(adj[(i, j)] / sums[i]));
    TransitionMatrix::from_probabilities(p).expect("generated rows are stochastic")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_node() -> TransitionMatrix<f64> {
        TransitionMatrix::from_probabilities(
            Matrix::from_rows(&[
                vec![0.0, 0.5, 0.5, 0.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn slice(rows: [[f64; 4]; 4]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn brute_force_reproduces_reference_slices() {
        let p = four_node();
        let expected = [
            slice([[0., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., 1., 1.], [0., 0., 0., 1.]]),
            slice([[2., 0., 1., 1.], [0., 0., 0., 0.], [2., 0., 2., 2.], [2., 0., 1., 2.]]),
            slice([[2., 1., 0., 0.], [2., 2., 0., 0.], [0., 0., 0., 0.], [2., 1., 0., 1.]]),
            slice([[2., 1., 1., 0.], [2., 2., 1., 0.], [0., 0., 1., 0.], [0., 0., 0., 0.]]),
        ];
        for (k, e) in expected.iter().enumerate() {
            let s = brute_force_slice(&p, k).unwrap();
            assert!(s.max_abs_diff(e) <= 1e-12, "slice {k}: {s:?}");
        }
    }

    #[test]
    fn brute_force_single_node() {
        let p = TransitionMatrix::from_probabilities(Matrix::from_rows(&[vec![1.0]]).unwrap()).unwrap();
        assert_eq!(brute_force_slice(&p, 0).unwrap().to_rows(), vec![vec![0.0]]);
    }

    #[test]
    fn forced_path_has_exact_hit_time() {
        let stats = simulate_walks(&four_node(), 2, 0, &[], 10_000, 1).unwrap();
        assert_eq!(stats.hit_time_mean, 2.0);
        assert_eq!(stats.hit_time_stderr, 0.0);
        assert_eq!(stats.walks, 10_000);
    }

    #[test]
    fn hit_time_within_three_sigma() {
        let stats = simulate_walks(&four_node(), 0, 3, &[], 100_000, 2).unwrap();
        assert!((stats.hit_time_mean - 4.0).abs() <= 3.0 * stats.hit_time_stderr);
        assert!((stats.total_visits() - stats.hit_time_mean).abs() < 1e-9);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let a = simulate_walks(&four_node(), 0, 3, &[1], 5000, 99).unwrap();
        let b = simulate_walks(&four_node(), 0, 3, &[1], 5000, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_walks(&four_node(), 0, 3, &[], 5000, 100).unwrap();
        let d = simulate_walks(&four_node(), 0, 3, &[], 5000, 101).unwrap();
        assert_ne!(c.visit_mean, d.visit_mean);
    }

    #[test]
    fn rejection_with_no_survivors_is_an_error() {
        // every walk from 0 to 3 passes node 2
        let err = simulate_walks(&four_node(), 0, 3, &[2], 1000, 5).unwrap_err();
        assert!(matches!(err, Error::Estimation { attempted: 1000, .. }));
    }

    #[test]
    fn random_chains_are_strongly_connected() {
        for seed in 0..20 {
            let p = random_strongly_connected::<f64>(12, 0.1, seed);
            assert!(p.is_strongly_connected());
        }
    }
}
