//! Pairwise comparison toolkit.
//!
//! * [`pcm`]: reciprocal matrices, consistency and triad inconsistency.
//! * [`convexity`]: the `[1/a0, a0]` band that guarantees a unique
//!   least-squares solution, and certification of matrices against it.
//! * [`solvers`]: least squares, weighted least squares, logarithmic least
//!   squares and eigenvector weights.
//! * [`oracle`]: brute-force checks for the solvers.
//! * [`scales`]: judgment scales, Monte-Carlo experiments and the
//!   multiple-minima search.

pub mod convexity;
pub mod error;
pub mod oracle;
pub mod pcm;
pub mod scales;
pub mod solvers;

pub use convexity::{certify, ConvexityConstants, ConvexityReport, Verdict};
pub use error::{Error, Result};
pub use pcm::{InconsistencyReport, Normalization, PCMatrix, TriadReport, WeightVector};
pub use solvers::{Method, SolveOptions, SolveResult};
