//! Copula-based measures of asymmetry between the lower-left and upper-right
//! tail probabilities of bivariate distributions.
//!
//! The central quantity is
//!
//! ```text
//! alpha(u) = log( Cbar(1-u, 1-u) / C(u, u) ),   0 < u <= 0.5
//! ```
//!
//! where `C` is the copula and `Cbar` its survival copula. The crate provides
//!
//! * [`copula`]: parametric families with exact diagonals, tail coefficients
//!   and closed-form limits of `alpha(u)` as `u -> 0`,
//! * [`measures`]: population curves, the numeric `alpha(0)` estimator, the
//!   difference measure `beta(u)`, and the comparison measures `sigma3` and
//!   `rho_K`,
//! * [`sampling`]: seeded variate generation,
//! * [`estimation`]: the two sample analogues with asymptotic, Bonferroni and
//!   bootstrap intervals plus a multi-point chi-squared test,
//! * [`simulation`]: a reproducible Monte-Carlo harness,
//! * [`analysis`]: the end-to-end pipeline used by the `tailasym` CLI.
//!
//! Heavy loops (bootstrap resamples, Monte-Carlo replications, lattice
//! searches) run on rayon when the `parallel` feature is enabled and fall back
//! to sequential iteration otherwise. Results do not depend on the choice.

pub mod analysis;
pub mod copula;
pub mod error;
pub mod estimation;
pub mod ext;
pub mod io;
pub mod margins;
pub mod measures;
pub mod par;
pub mod sampling;
pub mod simulation;
pub mod special;

pub use copula::{CopulaModel, Family, TailSummary};
pub use error::{Error, Result};
pub use ext::ExtReal;
pub use par::Parallelism;
pub use sampling::{PairedSample, Scale, SeedSpec};
