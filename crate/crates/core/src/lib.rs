//! Tuning-free robust regression with the Wilcoxon rank loss.
//!
//! The estimator minimizes `h(X beta - b) + p_lambda(beta)`, where `h` is the mean absolute
//! pairwise difference of the residuals and `p_lambda` is the l1, SCAD or MCP penalty.
//! The main solver is [`ppmm::solve`]: a preconditioned proximal point method for the
//! l1 problem followed, for SCAD and MCP, by proximal majorization-minimization. Each
//! subproblem is solved through its dual by a proximal point loop whose steps use a
//! semismooth Newton method. ADMM baselines live in [`admm`].
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the common `f64` instantiation.
//!
//! ```
//! use ranksolve::{data, ppmm, RegressionProblemF64, RegularizerSpec};
//!
//! let spec = data::SyntheticSpec {
//!     n: 50,
//!     p: 20,
//!     pattern: data::Pattern::Sparse3,
//!     noise: data::Noise::Cauchy,
//!     seed: 7,
//! };
//! let d = data::gen_synthetic::<f64>(&spec).unwrap();
//! let base = RegressionProblemF64::new(d.x, d.b, RegularizerSpec::l1(1.0).unwrap()).unwrap();
//! let lambda = 0.3 * base.lambda_ref();
//! let problem = base.with_spec(RegularizerSpec::scad(lambda, 3.7).unwrap());
//! let sol = ppmm::solve(&problem, &ppmm::PpmmConfig::default()).unwrap();
//! assert!(sol.is_converged());
//! ```

pub mod admm;
pub mod bench;
pub mod data;
pub mod error;
pub mod inner;
pub mod linalg;
pub mod metrics;
pub mod ppmm;
pub mod problem;
pub mod regularizers;
pub mod scalar;
pub mod solution;
pub mod solver;
pub mod tune;
pub mod wilcoxon;

pub use error::{Error, Result};
pub use problem::RegressionProblem;
pub use regularizers::{PenaltyKind, RegularizerSpec};
pub use scalar::Scalar;
pub use solution::{Solution, SolutionRecord, SolveStatus};
pub use solver::{AlgoKind, SolverConfig};

pub type RegressionProblemF64 = RegressionProblem<f64>;
pub type RegressionProblemF32 = RegressionProblem<f32>;
pub type RegularizerSpecF64 = RegularizerSpec<f64>;
pub type SolutionF64 = Solution<f64>;
pub type SolutionF32 = Solution<f32>;
pub type PpmmConfigF64 = ppmm::PpmmConfig<f64>;
pub type AdmmConfigF64 = admm::AdmmConfig<f64>;
pub type SolverConfigF64 = SolverConfig<f64>;
