//! The classical Z test and the gamma-prime-based T test for
//! `H0: log(OR) = 0`.
//!
//! Both statistics are asymptotically standard normal under the null; their
//! ratio Z/T = (4 - psi tanh(psi/4)) / 4 depends on the estimated log odds
//! ratio alone, so |T| >= |Z| everywhere inside the monotone range.

use crate::contab::ContingencyTable;
use crate::effects::{self, llc_constants};
use crate::numerics::normal_cdf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypotestError {
    #[error("degenerate table: {0}")]
    Degenerate(String),
    #[error("|log(OR)| = {psi} is at or beyond {max}; the T statistic is undefined there")]
    OutOfRange { psi: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Z,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub statistic_squared: f64,
    pub p_two_sided: f64,
    pub p_one_sided: f64,
    pub kind: TestKind,
}

fn build_result(statistic: f64, kind: TestKind) -> TestResult {
    TestResult {
        statistic,
        statistic_squared: statistic * statistic,
        p_two_sided: 2.0 * (1.0 - normal_cdf(statistic.abs())),
        p_one_sided: 1.0 - normal_cdf(statistic),
        kind,
    }
}

fn checked_log_or(t: &ContingencyTable) -> Result<f64, HypotestError> {
    effects::log_or(t).map_err(|e| HypotestError::Degenerate(e.to_string()))
}

/// Z = log(OR-hat) / sqrt(sum of 1/n_ij).
pub fn z_test(t: &ContingencyTable) -> Result<TestResult, HypotestError> {
    let psi = checked_log_or(t)?;
    let se = t
        .woolf_se()
        .map_err(|e| HypotestError::Degenerate(e.to_string()))?;
    Ok(build_result(psi / se, TestKind::Z))
}

/// T = sqrt(N) * 4 log(OR-hat) / (sigma-hat * (4 - log(OR-hat) tanh(log(OR-hat)/4))).
///
/// Errors when |log(OR-hat)| reaches the monotone bound, where the
/// denominator hits zero and the statistic changes meaning.
pub fn t_test(t: &ContingencyTable) -> Result<TestResult, HypotestError> {
    let psi = checked_log_or(t)?;
    let max = llc_constants().max_log_or;
    if psi.abs() >= max {
        return Err(HypotestError::OutOfRange {
            psi: psi.abs(),
            max,
        });
    }
    let e = t
        .estimates()
        .map_err(|err| HypotestError::Degenerate(err.to_string()))?;
    let denom = e.sigma_hat * (4.0 - psi * (psi / 4.0).tanh());
    Ok(build_result(e.n_total.sqrt() * 4.0 * psi / denom, TestKind::T))
}

/// The ratio Z/T as a function of the log odds ratio:
/// (4 - psi tanh(psi/4)) / 4. Lies in (0, 1], equal to 1 only at psi = 0.
pub fn zt_ratio(psi: f64) -> Result<f64, HypotestError> {
    let max = llc_constants().max_log_or;
    if psi.abs() >= max {
        return Err(HypotestError::OutOfRange {
            psi: psi.abs(),
            max,
        });
    }
    Ok((4.0 - psi * (psi / 4.0).tanh()) / 4.0)
}
