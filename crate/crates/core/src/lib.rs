//! Numerical toolkit for large deviations of random walks.
//!
//! The crate is organised around a handful of objects:
//!
//! * [`cgf::CgfModel`]: an increment distribution with its cumulant
//!   generating function `K`, effective domain, rate function `I` and
//!   recession function `I_∞`.
//! * [`conjugate`]: numerical Legendre–Fenchel transforms of convex
//!   oracles on an interval or on the whole space.
//! * [`kernel_rate`]: the rate function `I_f` of kernel-weighted sums
//!   `(1/n) Σ f(k/n) X_k`, computed by a conjugate route, an explicit
//!   integral route and (in [`variational`]) a brute-force path program.
//! * [`paths::CadlagPath`]: piecewise-linear paths with jumps, their
//!   variation, the action functional `I_D` and the pairing `∫ f dh`.
//! * [`metrics`]: Hausdorff distances between completed graphs and the
//!   weak-* type metric `ρ_*`.
//! * [`montecarlo`]: importance-sampling estimators of tail probabilities
//!   and exact small-size oracles.

pub mod cgf;
pub mod conjugate;
pub mod error;
pub mod extreal;
pub mod kernel;
pub mod kernel_rate;
pub mod metrics;
pub mod montecarlo;
pub mod paths;
pub mod quad;
pub mod variational;

pub use cgf::{CgfModel, DomainInterval};
pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use kernel::Kernel;
pub use paths::CadlagPath;
