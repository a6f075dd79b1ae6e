//! Effect-size measures and transforms for 2x2 tables.
//!
//! The standardized log odds ratio delta = log(OR)/sigma is bounded: at any
//! fixed OR its maximum over population configurations is
//! gamma = log(OR) / (4 cosh(log(OR)/4)), and gamma itself is bounded by the
//! Laplace Limit Constant (0.6627...), attained where psi tanh(psi/4) = 4.
//! Dividing by that constant gives gamma prime, a [-1, 1] effect-size scale
//! for odds ratios. This module computes the constants, the transforms and
//! their delta-method standard errors, Yule's Y and Q with their variances,
//! and the population sigma together with its minimizing configuration.

use crate::contab::{ContingencyTable, SampleEstimates};
use crate::numerics::{self, RootBracket};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectsError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("zero cell; apply the Haldane correction first")]
    ZeroCell,
    #[error(
        "|log(OR)| = {psi} is at or beyond the monotone range ({max}); the gamma-prime \
         derivative vanishes and the variance formula degenerates"
    )]
    DerivativeVanishes { psi: f64, max: f64 },
}

/// Constants tied to the Laplace Limit Constant bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlcConstants {
    /// Root of psi * tanh(psi) = 1.
    pub psi_star: f64,
    /// Largest log(OR) where gamma is still increasing: 4 * psi_star.
    pub max_log_or: f64,
    /// The Laplace Limit Constant, gamma evaluated at `max_log_or`.
    pub llc: f64,
    /// exp(max_log_or), roughly 121.35.
    pub max_or: f64,
}

static LLC: OnceLock<LlcConstants> = OnceLock::new();

/// Compute (once) and cache the LLC constants to full double precision.
pub fn llc_constants() -> &'static LlcConstants {
    LLC.get_or_init(|| {
        let bracket = RootBracket::new(1.0, 2.0, 1e-14).expect("static bracket is valid");
        let psi_star = numerics::solve_root_newton(
            |x| x * x.tanh() - 1.0,
            |x| {
                let sech = 1.0 / x.cosh();
                x.tanh() + x * sech * sech
            },
            &bracket,
        )
        .expect("psi * tanh(psi) = 1 has a root in [1, 2]");
        let max_log_or = 4.0 * psi_star;
        LlcConstants {
            psi_star,
            max_log_or,
            llc: gamma_of_psi(max_log_or),
            max_or: max_log_or.exp(),
        }
    })
}

/// Log odds ratio of a table: log(n11 * n22 / (n12 * n21)).
pub fn log_or(t: &ContingencyTable) -> Result<f64, EffectsError> {
    if !t.all_cells_positive() {
        return Err(EffectsError::ZeroCell);
    }
    Ok((t.n11() * t.n22() / (t.n12() * t.n21())).ln())
}

/// The maximum standardized log odds ratio at psi = log(OR):
/// psi / (4 cosh(psi / 4)).
pub fn gamma_of_psi(psi: f64) -> f64 {
    psi / (4.0 * (psi / 4.0).cosh())
}

/// Gamma normalized by the Laplace Limit Constant; lies in [-1, 1] for
/// |psi| <= max_log_or and is non-monotone beyond (use
/// [`in_monotone_range`] to detect that case).
pub fn gamma_prime_of_psi(psi: f64) -> f64 {
    gamma_of_psi(psi) / llc_constants().llc
}

/// Whether the gamma-prime transform is monotone at this log odds ratio.
pub fn in_monotone_range(psi: f64) -> bool {
    psi.abs() <= llc_constants().max_log_or
}

/// d(gamma prime)/d(psi): sech(psi/4) (4 - psi tanh(psi/4)) / (16 LLC).
/// Positive inside the monotone range, zero at its ends.
pub fn gamma_prime_slope(psi: f64) -> f64 {
    let sech = 1.0 / (psi / 4.0).cosh();
    sech * (4.0 - psi * (psi / 4.0).tanh()) / (16.0 * llc_constants().llc)
}

/// Delta-method standard error of the gamma-prime estimate.
pub fn se_gamma_prime(psi: f64, sigma_hat: f64, n_total: f64) -> Result<f64, EffectsError> {
    if sigma_hat <= 0.0 || n_total <= 0.0 {
        return Err(EffectsError::Domain(
            "sigma_hat and n_total must be positive".into(),
        ));
    }
    if psi.abs() >= llc_constants().max_log_or {
        return Err(EffectsError::DerivativeVanishes {
            psi: psi.abs(),
            max: llc_constants().max_log_or,
        });
    }
    Ok(sigma_hat * gamma_prime_slope(psi).abs() / n_total.sqrt())
}

/// Yule's coefficient of colligation: (sqrt(OR) - 1) / (sqrt(OR) + 1).
pub fn yule_y(or: f64) -> Result<f64, EffectsError> {
    if !(or > 0.0) {
        return Err(EffectsError::Domain(format!("OR must be positive, got {or}")));
    }
    let s = or.sqrt();
    Ok((s - 1.0) / (s + 1.0))
}

/// Yule's Q: (OR - 1) / (OR + 1).
pub fn yule_q(or: f64) -> Result<f64, EffectsError> {
    if !(or > 0.0) {
        return Err(EffectsError::Domain(format!("OR must be positive, got {or}")));
    }
    Ok((or - 1.0) / (or + 1.0))
}

/// First-order variance of the Yule Y estimate.
pub fn var_yule_y(e: &SampleEstimates) -> f64 {
    let (p, q, w, n) = (e.p_hat, e.q_hat, e.w_hat, e.n_total);
    let root = (p * (1.0 - q) / ((1.0 - p) * q)).sqrt();
    let denom4 = (root + 1.0).powi(4);
    (p / (w * (1.0 - p) * q * q * denom4)
        + (1.0 - q) / ((1.0 - w) * (1.0 - p) * (1.0 - p) * q * denom4))
        / n
}

/// First-order variance of the Yule Q estimate.
pub fn var_yule_q(e: &SampleEstimates) -> f64 {
    let (p, q, w, n) = (e.p_hat, e.q_hat, e.w_hat, e.n_total);
    let s4 = (p + q - 2.0 * p * q).powi(4);
    (4.0 * (1.0 - p) * p * (q - 1.0) * (q - 1.0) * q * q / ((1.0 - w) * s4)
        - 4.0 * (p - 1.0) * (p - 1.0) * p * p * (q - 1.0) * q / (w * s4))
        / n
}

/// Exposure probability among controls implied by the exposure probability
/// among cases and the odds ratio: q = p / ((1 - p) OR + p).
pub fn q_from_p_or(p: f64, or: f64) -> Result<f64, EffectsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(EffectsError::Domain(format!("p must lie in (0, 1), got {p}")));
    }
    if !(or > 0.0) {
        return Err(EffectsError::Domain(format!("OR must be positive, got {or}")));
    }
    Ok(p / ((1.0 - p) * or + p))
}

/// A population configuration for a binary exposure and binary outcome,
/// carried in both the case-control parameterization (w, p, q) and the
/// exposure parameterization (v, Pr(D|E), Pr(D|notE)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureModel {
    /// Fraction of cases, Pr(D).
    pub w: f64,
    /// Exposure probability among cases, Pr(E|D).
    pub p: f64,
    /// Exposure probability among controls, Pr(E|notD).
    pub q: f64,
    /// Exposure probability, Pr(E).
    pub v: f64,
    pub pr_d_given_e: f64,
    pub pr_d_given_not_e: f64,
    pub odds_ratio: f64,
    pub risk_ratio: f64,
}

fn check_prob(name: &str, x: f64) -> Result<(), EffectsError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(EffectsError::Domain(format!(
            "{name} must lie strictly in (0, 1), got {x}"
        )));
    }
    Ok(())
}

impl ExposureModel {
    /// Build from the case-control parameterization.
    pub fn from_case_control(w: f64, p: f64, q: f64) -> Result<Self, EffectsError> {
        check_prob("w", w)?;
        check_prob("p", p)?;
        check_prob("q", q)?;
        let v = w * p + (1.0 - w) * q;
        let pr_d_given_e = w * p / v;
        let pr_d_given_not_e = w * (1.0 - p) / (1.0 - v);
        let odds_ratio = (p / (1.0 - p)) / (q / (1.0 - q));
        Ok(Self {
            w,
            p,
            q,
            v,
            pr_d_given_e,
            pr_d_given_not_e,
            odds_ratio,
            risk_ratio: pr_d_given_e / pr_d_given_not_e,
        })
    }

    /// Build from the exposure parameterization.
    pub fn from_exposure_risks(
        v: f64,
        pr_d_given_e: f64,
        pr_d_given_not_e: f64,
    ) -> Result<Self, EffectsError> {
        check_prob("v", v)?;
        check_prob("Pr(D|E)", pr_d_given_e)?;
        check_prob("Pr(D|notE)", pr_d_given_not_e)?;
        let w = v * pr_d_given_e + (1.0 - v) * pr_d_given_not_e;
        check_prob("w", w)?;
        let p = v * pr_d_given_e / w;
        let q = v * (1.0 - pr_d_given_e) / (1.0 - w);
        let odds_ratio = (pr_d_given_e / (1.0 - pr_d_given_e))
            / (pr_d_given_not_e / (1.0 - pr_d_given_not_e));
        Ok(Self {
            w,
            p,
            q,
            v,
            pr_d_given_e,
            pr_d_given_not_e,
            odds_ratio,
            risk_ratio: pr_d_given_e / pr_d_given_not_e,
        })
    }

    /// sigma^2 in the case-control parameterization.
    pub fn sigma_sq_case_control(&self) -> f64 {
        (1.0 / self.w) / (self.p * (1.0 - self.p))
            + (1.0 / (1.0 - self.w)) / (self.q * (1.0 - self.q))
    }

    /// sigma^2 in the exposure parameterization. Algebraically identical to
    /// the case-control form on a consistent model.
    pub fn sigma_sq_exposure(&self) -> f64 {
        (1.0 / self.v) / (self.pr_d_given_e * (1.0 - self.pr_d_given_e))
            + (1.0 / (1.0 - self.v)) / (self.pr_d_given_not_e * (1.0 - self.pr_d_given_not_e))
    }
}

/// Population sigma (per-observation SD of the log odds ratio estimator).
pub fn sigma_population(m: &ExposureModel) -> f64 {
    m.sigma_sq_case_control().sqrt()
}

/// The sigma-minimizing configuration at a fixed odds ratio:
/// Pr(D|E) = 1 - 1/(1 + sqrt(OR)), Pr(D|notE) = 1 - Pr(D|E), v = w = 1/2.
/// There sigma = 2 sqrt(2 + (1 + OR)/sqrt(OR)), so log(OR)/sigma equals
/// [`gamma_of_psi`] at log(OR).
pub fn sigma_minimizers(or: f64) -> Result<ExposureModel, EffectsError> {
    if !(or > 0.0) {
        return Err(EffectsError::Domain(format!("OR must be positive, got {or}")));
    }
    let pr_d_given_e = 1.0 - 1.0 / (1.0 + or.sqrt());
    ExposureModel::from_exposure_risks(0.5, pr_d_given_e, 1.0 - pr_d_given_e)
}

/// Closed form for the minimal sigma at a fixed odds ratio.
pub fn sigma_min(or: f64) -> Result<f64, EffectsError> {
    if !(or > 0.0) {
        return Err(EffectsError::Domain(format!("OR must be positive, got {or}")));
    }
    Ok(2.0 * (2.0 + (1.0 + or) / or.sqrt()).sqrt())
}

/// All effect measures for one dataset or one published report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectSummary {
    pub log_or: f64,
    pub se_log_or: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub se_gamma_prime: f64,
    pub yule_y: f64,
    pub yule_q: f64,
    /// Absent when built from published summaries.
    pub n_total: Option<f64>,
}

impl EffectSummary {
    /// Summarize a corrected (or strictly positive) table.
    pub fn from_table(t: &ContingencyTable) -> Result<Self, EffectsError> {
        let psi = log_or(t)?;
        let e = t
            .estimates()
            .map_err(|err| EffectsError::Domain(err.to_string()))?;
        let se_log_or = e.sigma_hat / e.n_total.sqrt();
        Ok(Self {
            log_or: psi,
            se_log_or,
            gamma: gamma_of_psi(psi),
            gamma_prime: gamma_prime_of_psi(psi),
            se_gamma_prime: se_gamma_prime(psi, e.sigma_hat, e.n_total)?,
            yule_y: yule_y(psi.exp())?,
            yule_q: yule_q(psi.exp())?,
            n_total: Some(e.n_total),
        })
    }

    /// Summarize a published odds ratio with a standard error on the log
    /// scale.
    pub fn from_published(or_point: f64, se_log_or: f64) -> Result<Self, EffectsError> {
        if !(or_point > 0.0) {
            return Err(EffectsError::Domain(format!(
                "OR must be positive, got {or_point}"
            )));
        }
        if !(se_log_or > 0.0) {
            return Err(EffectsError::Domain(format!(
                "SE must be positive, got {se_log_or}"
            )));
        }
        let psi = or_point.ln();
        let se_gp = if psi.abs() < llc_constants().max_log_or {
            se_log_or * gamma_prime_slope(psi)
        } else {
            f64::NAN
        };
        Ok(Self {
            log_or: psi,
            se_log_or,
            gamma: gamma_of_psi(psi),
            gamma_prime: gamma_prime_of_psi(psi),
            se_gamma_prime: se_gp,
            yule_y: yule_y(or_point)?,
            yule_q: yule_q(or_point)?,
            n_total: None,
        })
    }
}
