//! Random walks on strongly connected digraphs through the pseudoinverse of
//! the random-walk Laplacian.
//!
//! One LU factorization of an `(n−1)×(n−1)` block yields the stationary
//! distribution and `𝐌 = 𝐋⁺` ([`laplacian::rw_laplacian_pinv`]). From `𝐌`
//! every entry of the fundamental tensor `𝐍(i,j,k)` is available in constant
//! time ([`tensor::FundamentalTensor`]), and with it hitting and commute
//! times, closeness, betweenness, ordered-passage probabilities, visit counts
//! conditioned on avoiding a node set, and personalized-hitting-time trust.
//!
//! All algorithms are generic over [`Scalar`], implemented for `f32`, `f64`
//! and exact rationals. The aliases below fix the common choices.
//!
//! ```
//! use walktensor::{load_graph, rw_laplacian_pinv, transition_matrix, FundamentalTensor, GraphFormat};
//! use walktensor::measures::hitting_time;
//!
//! let g = load_graph::<f64, _>("1 2\n2 1\n1 3\n3 4\n4 1\n".as_bytes(), GraphFormat::EdgeList)?;
//! let pinv = rw_laplacian_pinv(&transition_matrix(&g)?)?;
//! let t = FundamentalTensor::new(&pinv);
//! assert!((hitting_time(&t, 2, 0) - 2.0).abs() < 1e-12);
//! # Ok::<(), walktensor::Error>(())
//! ```

pub mod dense;
pub mod error;
pub mod graph;
pub mod laplacian;
pub mod lu;
pub mod measures;
pub mod oracle;
pub mod scalar;
pub mod tensor;
pub mod trust;

pub use dense::Matrix;
pub use error::{Error, Result};
pub use graph::{check_strong_connectivity, load_graph, transition_matrix, Digraph, GraphFormat, TransitionMatrix};
pub use laplacian::{
    normalized_laplacian, pinv_nullity1, rw_laplacian, rw_laplacian_pinv, stationary_distribution, LaplacianPinv,
    NullityOneFactors, StationaryDistribution,
};
pub use scalar::Scalar;
pub use tensor::{AvoidanceCounts, BlockInverseRoute, FundamentalTensor, Partition};
pub use trust::{augment_evaporation, TrustNetwork};

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i128>;

pub type Matrix64 = Matrix<f64>;
pub type Digraph64 = Digraph<f64>;
pub type TransitionMatrix64 = TransitionMatrix<f64>;
pub type LaplacianPinv64 = LaplacianPinv<f64>;
pub type TrustNetwork64 = TrustNetwork<f64>;

pub type LaplacianPinv32 = LaplacianPinv<f32>;

pub type MatrixExact = Matrix<Rational>;
pub type DigraphExact = Digraph<Rational>;
pub type TransitionMatrixExact = TransitionMatrix<Rational>;
pub type LaplacianPinvExact = LaplacianPinv<Rational>;
