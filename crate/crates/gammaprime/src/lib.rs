//! Effect-size estimation for 2x2 case/exposure tables on the gamma-prime
//! scale.
//!
//! The crate covers the full pipeline from raw contingency tables to
//! normalized effect sizes and uncertainty statements:
//!
//! * [`contab`] — 2x2 tables, the Haldane-Anscombe correction, and the
//!   plug-in sample estimates every statistic consumes.
//! * [`effects`] — log odds ratios, the gamma and gamma-prime transforms,
//!   Yule's coefficients, delta-method variances, and the Laplace Limit
//!   Constant bound on the standardized log odds ratio.
//! * [`hypotest`] — the classical Z test and the gamma-prime-based T test
//!   for `H0: log(OR) = 0`.
//! * [`posterior`] — approximate Bayesian inference for raw effect sizes
//!   through binned priors and noncentral densities.
//! * [`mcstudy`] — a reproducible Monte Carlo harness for size, power, and
//!   selection (winner's curse) studies.
//! * [`numerics`] — the self-contained special functions, root finding, and
//!   seedable random streams backing everything above.
//!
//! The `gammaprime` binary exposes the same functionality on the command
//! line; see the crate README for usage.
//!
//! ```
//! use gammaprime::contab::ContingencyTable;
//! use gammaprime::effects::EffectSummary;
//! use gammaprime::hypotest::{t_test, z_test};
//! use gammaprime::posterior::{self, BinnedPrior, Scale, Sided};
//!
//! // A 2x2 case/exposure table, Haldane-corrected.
//! let table = ContingencyTable::from_counts(20.0, 5.0, 10.0, 15.0)?
//!     .haldane_correct()?;
//!
//! let summary = EffectSummary::from_table(&table)?;
//! assert!(summary.gamma_prime > 0.0 && summary.gamma_prime < 1.0);
//!
//! // The gamma-prime-based T statistic is at least as large as Z.
//! let (z, t) = (z_test(&table)?, t_test(&table)?);
//! assert!(t.statistic.abs() >= z.statistic.abs());
//!
//! // Posterior over the log odds ratio under a spike-and-slab prior.
//! let prior = BinnedPrior::make_default(0.5, 0.42, 4.8, 100)?;
//! let result = posterior::posterior_from_observation(
//!     &prior,
//!     summary.se_log_or,
//!     z.statistic,
//!     Sided::One,
//!     Scale::GammaPrime,
//!     0.95,
//! )?;
//! assert!(result.mean.abs() <= 1.0);
//! assert!(result.sym_low <= result.mean && result.mean <= result.sym_high);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

// Negated comparisons like `!(x > 0.0)` are deliberate throughout: they
// reject NaN along with out-of-domain values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod contab;
pub mod effects;
pub mod hypotest;
pub mod mcstudy;
pub mod numerics;
pub mod posterior;

pub use contab::{ContingencyTable, SampleEstimates};
pub use effects::{EffectSummary, ExposureModel, LlcConstants};
pub use hypotest::{TestKind, TestResult};
pub use posterior::{BinnedPrior, PosteriorResult, Scale, Sided};
