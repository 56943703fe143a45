//! Sharp upper bounds for `E (X_{k:n})^alpha`, the `alpha`-th moment of the
//! `k`-th smallest of `n` nonnegative random variables with known means.
//!
//! ```
//! use orderstat_bounds::{bound_moment, MomentQuery, Regime};
//!
//! let report = bound_moment(&MomentQuery::iid(5, 2, 2.0, 1.0)?)?;
//! assert_eq!(report.regime, Regime::Mid);
//! assert!((report.bound - 125.0 / 108.0).abs() < 1e-12);
//! # Ok::<(), orderstat_bounds::BoundsError>(())
//! ```
//!
//! The modules:
//!
//! - [`beta_kernel`]: the distribution function and density of a uniform
//!   order statistic, the incomplete beta function, elementary symmetric
//!   polynomials.
//! - [`sharp_bounds`]: the constants, their roots and the dispatcher
//!   [`bound_moment`].
//! - [`extremal`]: laws that attain (or witness the failure of) each bound.
//! - [`oracle`]: exact and Monte Carlo moments used to check all of the above.
//! - [`report`]: serialization with 17-digit decimal strings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beta_kernel;
pub mod error;
pub mod extremal;
pub mod oracle;
pub mod report;
pub mod sharp_bounds;

pub use beta_kernel::{elementary_symmetric, order_cdf, order_pdf, regularized_incomplete_beta, OrderStatParams};
pub use error::{BoundsError, Result};
pub use extremal::{
    heavy_tail_witness, log_square_witness, minimum_extremal_indep, quantile_extremal_low, theorem1_approach_family,
    two_point_extremal, ExtremalDistribution,
};
pub use oracle::{
    exact_moment_iid_discrete, exact_moment_indep_discrete, lemma3_lhs_rhs, mc_estimate_moment,
    moment_from_quantile, sharpness_search_two_point, DiscreteDistribution, MomentEstimate, QuantileFunction,
    StepFunction,
};
pub use report::{ReportEnvelope, Verification};
pub use sharp_bounds::{
    bound_moment, constant_a_low, constant_a_mid, solve_rho, solve_rho_gcm, Attainability, BoundReport, GcmRoot,
    MomentQuery, Regime, SampleModel,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kernel.md")]
    mod kernel {}
    #[doc = include_str!("../../../book/src/mid_regime.md")]
    mod mid_regime {}
    #[doc = include_str!("../../../book/src/sub_unit.md")]
    mod sub_unit {}
    #[doc = include_str!("../../../book/src/independent.md")]
    mod independent {}
    #[doc = include_str!("../../../book/src/unbounded.md")]
    mod unbounded {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
