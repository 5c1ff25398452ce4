//! Graph ingestion, validation and the random-walk transition matrix.

use std::collections::{HashMap, VecDeque};
use std::io::Read;

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Labeled, weighted digraph with a dense adjacency matrix.
///
/// Labels map to contiguous indices in order of first appearance. Every node
/// has positive out-degree.
#[derive(Clone, Debug)]
pub struct Digraph<T> {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    adj: Matrix<T>,
}

impl<T: Scalar> Digraph<T> {
    pub fn new(labels: Vec<String>, adj: Matrix<T>) -> Result<Self> {
        if !adj.is_square() || adj.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} labels for a {}x{} adjacency matrix",
                labels.len(),
                adj.rows(),
                adj.cols()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Domain(format!("duplicate node label {l:?}")));
            }
        }
        for i in 0..adj.rows() {
            if let Some(j) = adj.row(i).iter().position(|w| w.is_negative()) {
                return Err(Error::Domain(format!(
                    "negative weight on edge {} -> {}",
                    labels[i], labels[j]
                )));
            }
            if adj.row(i).iter().all(|w| w.is_zero()) {
                return Err(Error::ZeroOutDegree {
                    node: i,
                    label: labels[i].clone(),
                });
            }
        }
        Ok(Digraph { labels, index, adj })
    }

    /// Graph on nodes labeled `1..=n`.
    pub fn from_adjacency(adj: Matrix<T>) -> Result<Self> {
        let labels = (1..=adj.rows()).map(|i| i.to_string()).collect();
        Self::new(labels, adj)
    }

    /// Builds a graph from `(src, dst, weight)` triples.
    pub fn from_edges<S: AsRef<str>>(edges: impl IntoIterator<Item = (S, S, T)>) -> Result<Self> {
        let mut builder = EdgeListBuilder::default();
        for (line, (s, d, w)) in edges.into_iter().enumerate() {
            builder.push(line + 1, s.as_ref(), d.as_ref(), w)?;
        }
        builder.finish()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    pub fn adjacency(&self) -> &Matrix<T> {
        &self.adj
    }

    /// `d = A·1`.
    pub fn out_degrees(&self) -> Vec<T> {
        self.adj.row_sums()
    }
}

struct EdgeListBuilder<T> {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    edges: HashMap<(usize, usize), T>,
}

impl<T> Default for EdgeListBuilder<T> {
    fn default() -> Self {
        EdgeListBuilder {
            labels: Vec::new(),
            index: HashMap::new(),
            edges: HashMap::new(),
        }
    }
}

impl<T: Scalar> EdgeListBuilder<T> {
    fn node(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        i
    }

    fn push(&mut self, line: usize, src: &str, dst: &str, w: T) -> Result<()> {
        if w.is_negative() {
            return Err(Error::Parse {
                line,
                message: format!("negative weight {w}"),
            });
        }
        let s = self.node(src);
        let d = self.node(dst);
        match self.edges.get(&(s, d)) {
            Some(&old) if old != w => Err(Error::ConflictingEdge {
                line,
                src: src.to_string(),
                dst: dst.to_string(),
            }),
            Some(_) => Ok(()),
            None => {
                self.edges.insert((s, d), w);
                Ok(())
            }
        }
    }

    fn finish(self) -> Result<Digraph<T>> {
        if self.labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = self.labels.len();
        let mut adj = Matrix::zeros(n, n);
        for ((s, d), w) in self.edges {
            adj[(s, d)] = w;
        }
        Digraph::new(self.labels, adj)
    }
}

/// On-disk graph encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    /// `src dst [weight]` per line; `#` starts a comment.
    EdgeList,
    /// First line `n`, then `n` rows of `n` weights. Nodes are labeled `1..=n`.
    DenseMatrix,
}

/// Parses a graph from a byte stream.
pub fn load_graph<T: Scalar, R: Read>(mut source: R, format: GraphFormat) -> Result<Digraph<T>> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(&text),
        GraphFormat::DenseMatrix => parse_dense(&text),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}

fn parse_weight<T: Scalar>(line: usize, field: &str) -> Result<T> {
    let w: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid weight {field:?}"),
    })?;
    if !w.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite weight {field:?}"),
        });
    }
    Ok(T::from_f64(w))
}

fn parse_edge_list<T: Scalar>(text: &str) -> Result<Digraph<T>> {
    let mut builder = EdgeListBuilder::default();
    for (line, fields) in content_lines(text) {
        let w = match fields.as_slice() {
            [_, _] => T::one(),
            [_, _, w] => parse_weight(line, w)?,
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `src dst [weight]`, found {} fields", fields.len()),
                })
            }
        };
        builder.push(line, fields[0], fields[1], w)?;
    }
    builder.finish()
}

fn parse_dense<T: Scalar>(text: &str) -> Result<Digraph<T>> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or(Error::EmptyInput)?;
    let n: usize = match header.as_slice() {
        [n] => n.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid node count {n:?}"),
        })?,
        _ => {
            return Err(Error::Parse {
                line,
                message: "first line must hold the node count".into(),
            })
        }
    };
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rows = Vec::with_capacity(n);
    for (line, fields) in lines {
        if rows.len() == n {
            return Err(Error::Parse {
                line,
                message: format!("more than {n} rows"),
            });
        }
        if fields.len() != n {
            return Err(Error::Parse {
                line,
                message: format!("expected {n} entries, found {}", fields.len()),
            });
        }
        let row = fields
            .iter()
            .map(|f| {
                let w: T = parse_weight(line, f)?;
                if w.is_negative() {
                    return Err(Error::Parse {
                        line,
                        message: format!("negative weight {f}"),
                    });
                }
                Ok(w)
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("expected {n} rows, found {}", rows.len()),
        });
    }
    Digraph::from_adjacency(Matrix::from_rows(&rows)?)
}

/// Absolute row-sum slack for explicit probability matrices in double precision.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Row-stochastic `P = D⁻¹A` with a strong-connectivity certificate.
#[derive(Clone, Debug)]
pub struct TransitionMatrix<T> {
    p: Matrix<T>,
    strongly_connected: bool,
}

impl<T: Scalar> TransitionMatrix<T> {
    /// Wraps an explicit probability matrix after validating its rows.
    pub fn from_probabilities(p: Matrix<T>) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::Shape(format!(
                "transition matrix is {}x{}",
                p.rows(),
                p.cols()
            )));
        }
        let n = p.rows();
        // Rounding in a row sum grows with the row length.
        let tol = T::from_f64(ROW_SUM_TOLERANCE).max_of(T::epsilon() * T::from_usize(4 * n.max(1)));
        for i in 0..n {
            let row = p.row(i);
            if let Some(x) = row.iter().find(|&&x| x.is_negative() || x > T::one()) {
                return Err(Error::NotStochastic {
                    row: i,
                    message: format!("entry {x} outside [0, 1]"),
                });
            }
            let s = row.iter().fold(T::zero(), |s, &x| s + x);
            if (s - T::one()).abs() > tol {
                return Err(Error::NotStochastic {
                    row: i,
                    message: format!("sums to {s}"),
                });
            }
        }
        let strongly_connected = first_unreachable_pair(n, |i, j| !p[(i, j)].is_zero()).is_none();
        Ok(TransitionMatrix {
            p,
            strongly_connected,
        })
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }

    pub fn probabilities(&self) -> &Matrix<T> {
        &self.p
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.p[(i, j)]
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected
    }

    /// An ordered pair `(from, to)` with no directed path, if any.
    pub fn unreachable_pair(&self) -> Option<(usize, usize)> {
        first_unreachable_pair(self.n(), |i, j| !self.p[(i, j)].is_zero())
    }
}

/// `P[i][j] = a_ij / d_i`.
pub fn transition_matrix<T: Scalar>(g: &Digraph<T>) -> Result<TransitionMatrix<T>> {
    let adj = g.adjacency();
    let d = g.out_degrees();
    if let Some(i) = d.iter().position(|x| !x.is_positive()) {
        return Err(Error::ZeroOutDegree {
            node: i,
            label: g.label(i).to_string(),
        });
    }
    let p = Matrix::from_fn(g.n(), g.n(), |i, j| adj[(i, j)] / d[i]);
    Ok(TransitionMatrix {
        p,
        strongly_connected: check_strong_connectivity(g),
    })
}

/// True iff every ordered pair of nodes is joined by a directed path.
pub fn check_strong_connectivity<T: Scalar>(g: &Digraph<T>) -> bool {
    let adj = g.adjacency();
    first_unreachable_pair(g.n(), |i, j| !adj[(i, j)].is_zero()).is_none()
}

/// Forward and reverse breadth-first search from node 0.
pub(crate) fn first_unreachable_pair(
    n: usize,
    edge: impl Fn(usize, usize) -> bool,
) -> Option<(usize, usize)> {
    if n == 0 {
        return None;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            #[allow(clippy::needless_range_loop)]
            for v in 0..n {
                let e = if forward { edge(u, v) } else { edge(v, u) };
                if e && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    if let Some(v) = reach(true).iter().position(|&s| !s) {
        return Some((0, v));
    }
    if let Some(v) = reach(false).iter().position(|&s| !s) {
        return Some((v, 0));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FOUR_NODE: &str = "1 2\n2 1\n1 3\n3 4\n4 1\n";

    fn load(text: &str) -> Result<Digraph<f64>> {
        load_graph(text.as_bytes(), GraphFormat::EdgeList)
    }

    #[test]
    fn four_node_edge_list() {
        let g = load(FOUR_NODE).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.labels(), ["1", "2", "3", "4"]);
        assert_eq!(
            g.adjacency().to_rows(),
            vec![
                vec![0.0, 1.0, 1.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
            ]
        );
        let p = transition_matrix(&g).unwrap();
        assert_eq!(
            p.probabilities().to_rows(),
            vec![
                vec![0.0, 0.5, 0.5, 0.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
            ]
        );
        assert!(p.is_strongly_connected());
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert_eq!(load("").unwrap_err(), Error::EmptyInput);
        assert_eq!(load("# only a comment\n\n").unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn single_self_loop() {
        let g = load("a a 1").unwrap();
        assert_eq!(g.adjacency().to_rows(), vec![vec![1.0]]);
        let p = transition_matrix(&g).unwrap();
        assert_eq!(p.probabilities().to_rows(), vec![vec![1.0]]);
        assert!(p.is_strongly_connected());
    }

    #[test]
    fn two_cycle() {
        let g = load("1 2\n2 1").unwrap();
        let p = transition_matrix(&g).unwrap();
        assert_eq!(p.probabilities().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn conflicting_duplicate_edge() {
        let err = load("a b 1\nb a\na b 2\n").unwrap_err();
        assert!(matches!(err, Error::ConflictingEdge { line: 3, .. }), "{err:?}");
        // identical duplicates are harmless
        assert!(load("a b 1\nb a\na b 1\n").is_ok());
    }

    #[test]
    fn zero_out_degree_names_the_node() {
        let err = load("x y\ny z\n").unwrap_err();
        assert_eq!(
            err,
            Error::ZeroOutDegree {
                node: 2,
                label: "z".into()
            }
        );
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load("a b\n# comment\nb a c d\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = load("a b\nb a zz\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn dense_matrix_format() {
        let text = "4\n0 1 1 0\n1 0 0 0\n0 0 0 1\n1 0 0 0\n";
        let g: Digraph<f64> = load_graph(text.as_bytes(), GraphFormat::DenseMatrix).unwrap();
        assert_eq!(g.labels(), ["1", "2", "3", "4"]);
        assert_eq!(g.adjacency()[(0, 2)], 1.0);
        let err = load_graph::<f64, _>("2\n0 1\n".as_bytes(), GraphFormat::DenseMatrix).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = load_graph::<f64, _>("2\n0 1\n1\n".as_bytes(), GraphFormat::DenseMatrix).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn connectivity_negative_cases() {
        let isolated = load("a a\nb b\n").unwrap();
        assert!(!check_strong_connectivity(&isolated));
        let path = Digraph::from_edges([("1", "2", 1.0), ("2", "3", 1.0), ("3", "3", 1.0)]).unwrap();
        assert!(!check_strong_connectivity(&path));
        assert!(check_strong_connectivity(&load(FOUR_NODE).unwrap()));
    }

    fn reachability_oracle(adj: &[Vec<bool>]) -> bool {
        let n = adj.len();
        // R = (I + A)^n by repeated boolean squaring-free multiplication.
        let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || adj[i][j]).collect()).collect();
        for _ in 0..n {
            let next: Vec<Vec<bool>> = (0..n)
                .map(|i| (0..n).map(|j| (0..n).any(|k| r[i][k] && (k == j || adj[k][j]))).collect())
                .collect();
            r = next;
        }
        r.iter().all(|row| row.iter().all(|&x| x))
    }

    proptest! {
        #[test]
        fn connectivity_matches_matrix_power_oracle(
            n in 1usize..=20,
            bits in proptest::collection::vec(proptest::bool::weighted(0.15), 400),
        ) {
            let adj: Vec<Vec<bool>> = (0..n)
                .map(|i| (0..n).map(|j| bits[i * 20 + j] || j == (i + 1) % n && bits[399 - i]).collect())
                .collect();
            let expected = reachability_oracle(&adj);
            let got = first_unreachable_pair(n, |i, j| adj[i][j]).is_none();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn rows_sum_to_one(weights in proptest::collection::vec(0.0f64..10.0, 36)) {
            let n = 6;
            let adj = Matrix::from_fn(n, n, |i, j| weights[i * n + j] + if j == (i + 1) % n { 0.5 } else { 0.0 });
            let g = Digraph::from_adjacency(adj).unwrap();
            let p = transition_matrix(&g).unwrap();
            for s in p.probabilities().row_sums() {
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }
}
