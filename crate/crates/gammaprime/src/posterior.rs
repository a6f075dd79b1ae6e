//! Approximate Bayesian inference for raw effect sizes.
//!
//! A prior over the log odds ratio is specified as a binned histogram with
//! an optional point mass at zero. "Dressing" converts bin midpoints to
//! noncentralities through the plug-in standard error (xi = mu / SE);
//! posterior weights follow from the noncentral test-statistic density at
//! the observed value; "undressing" maps the weighted support back to the
//! log-OR or gamma-prime scale. Posterior summaries are the weighted mean,
//! a discrete highest-posterior-density interval, and the smallest interval
//! symmetric about the posterior mean holding the requested mass (the form
//! published interval estimates for this procedure take in practice).

use crate::effects::{gamma_prime_of_psi, llc_constants};
use crate::numerics::{normal_cdf, normal_log_pdf, normal_quantile};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosteriorError {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("all posterior densities underflowed; widen the prior or rescale the statistic")]
    Underflow,
    #[error("confidence interval ordering violated: need 0 < lo <= point <= hi, got ({lo}, {point}, {hi})")]
    CiOrdering { lo: f64, point: f64, hi: f64 },
    #[error(
        "bin midpoint {mu} lies beyond the monotone gamma-prime range ({max}); \
         report on the log-OR scale instead"
    )]
    OutOfRange { mu: f64, max: f64 },
}

/// One support point of a binned prior. A point mass has `lo == hi == mid`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorBin {
    pub mid: f64,
    pub lo: f64,
    pub hi: f64,
    pub prob: f64,
}

impl PriorBin {
    pub fn is_point_mass(&self) -> bool {
        self.lo == self.hi
    }
}

/// A discrete prior over raw effect sizes (log-OR scale by default), with
/// at most one point mass sitting exactly at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedPrior {
    bins: Vec<PriorBin>,
}

/// Scale on which posterior support is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    LogOr,
    GammaPrime,
}

/// Sidedness of the observed statistic's likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sided {
    /// Plain normal location density f(t | xi) = phi(t - xi).
    One,
    /// Folded normal for |t|: phi(t - xi) + phi(t + xi); equivalent to the
    /// noncentral chi-square density for t^2 after the change of variables.
    Two,
}

impl BinnedPrior {
    /// The standard prior: probability `pi0` exactly at zero, the remainder
    /// spread over `bins` equal-width bins on [-truncation, truncation] with
    /// probabilities proportional to the Normal(0, tau) mass of each bin.
    pub fn make_default(
        pi0: f64,
        tau: f64,
        truncation: f64,
        bins: usize,
    ) -> Result<Self, PosteriorError> {
        if !(0.0..=1.0).contains(&pi0) {
            return Err(PosteriorError::Domain(format!(
                "pi0 must lie in [0, 1], got {pi0}"
            )));
        }
        if !(tau > 0.0) || !(truncation > 0.0) {
            return Err(PosteriorError::Domain(
                "tau and truncation must be positive".into(),
            ));
        }
        if bins < 2 {
            return Err(PosteriorError::Domain(format!(
                "need at least 2 bins, got {bins}"
            )));
        }
        let width = 2.0 * truncation / bins as f64;
        let mut raw = Vec::with_capacity(bins + 1);
        let mut total_mass = 0.0;
        for k in 0..bins {
            let lo = -truncation + k as f64 * width;
            let hi = lo + width;
            let mid = 0.5 * (lo + hi);
            if pi0 > 0.0 && mid.abs() < 1e-12 * truncation {
                return Err(PosteriorError::InvalidPrior(
                    "a bin midpoint coincides with the point null; use an even bin count".into(),
                ));
            }
            let mass = normal_cdf(hi / tau) - normal_cdf(lo / tau);
            total_mass += mass;
            raw.push(PriorBin {
                mid,
                lo,
                hi,
                prob: mass,
            });
        }
        if total_mass <= 0.0 {
            return Err(PosteriorError::InvalidPrior(
                "prior mass underflowed to zero".into(),
            ));
        }
        for b in &mut raw {
            b.prob *= (1.0 - pi0) / total_mass;
        }
        if pi0 > 0.0 {
            let at = raw.partition_point(|b| b.mid < 0.0);
            raw.insert(
                at,
                PriorBin {
                    mid: 0.0,
                    lo: 0.0,
                    hi: 0.0,
                    prob: pi0,
                },
            );
        }
        Self::from_bins(raw)
    }

    /// Build from explicit midpoints and probabilities (the prior-file
    /// format). A midpoint exactly at zero is read as the point null; edges
    /// of the remaining bins are inferred from the midpoint spacing.
    pub fn from_midpoints(midpoints: &[f64], probs: &[f64]) -> Result<Self, PosteriorError> {
        if midpoints.len() != probs.len() || midpoints.is_empty() {
            return Err(PosteriorError::InvalidPrior(
                "need matching, nonempty midpoint and probability lists".into(),
            ));
        }
        let mut order: Vec<usize> = (0..midpoints.len()).collect();
        order.sort_by(|&a, &b| midpoints[a].total_cmp(&midpoints[b]));
        let mids: Vec<f64> = order.iter().map(|&i| midpoints[i]).collect();
        let ps: Vec<f64> = order.iter().map(|&i| probs[i]).collect();

        let total: f64 = ps.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(PosteriorError::InvalidPrior(format!(
                "probabilities sum to {total}, expected 1 within 1e-6"
            )));
        }

        // Edges come from half the gaps between consecutive support points
        // (the null atom counts for spacing but stays zero-width itself).
        let n = mids.len();
        let mut bins = Vec::with_capacity(n);
        for (i, (&mid, &p)) in mids.iter().zip(&ps).enumerate() {
            if mid == 0.0 {
                bins.push(PriorBin {
                    mid,
                    lo: 0.0,
                    hi: 0.0,
                    prob: p / total,
                });
                continue;
            }
            if n == 1 {
                return Err(PosteriorError::InvalidPrior(
                    "cannot infer a bin width for a single non-null support point".into(),
                ));
            }
            let prev_gap = if i > 0 {
                mid - mids[i - 1]
            } else {
                mids[i + 1] - mid
            };
            let next_gap = if i + 1 < n {
                mids[i + 1] - mid
            } else {
                mid - mids[i - 1]
            };
            bins.push(PriorBin {
                mid,
                lo: mid - 0.5 * prev_gap,
                hi: mid + 0.5 * next_gap,
                prob: p / total,
            });
        }
        Self::from_bins(bins)
    }

    fn from_bins(bins: Vec<PriorBin>) -> Result<Self, PosteriorError> {
        if bins.is_empty() {
            return Err(PosteriorError::InvalidPrior("empty prior".into()));
        }
        let mut atom_count = 0;
        for w in bins.windows(2) {
            if w[0].mid >= w[1].mid {
                return Err(PosteriorError::InvalidPrior(
                    "midpoints must be strictly increasing".into(),
                ));
            }
        }
        for b in &bins {
            if b.prob < 0.0 || !b.prob.is_finite() {
                return Err(PosteriorError::InvalidPrior(
                    "probabilities must be finite and nonnegative".into(),
                ));
            }
            if b.is_point_mass() {
                if b.mid != 0.0 {
                    return Err(PosteriorError::InvalidPrior(
                        "only a point mass at exactly zero is supported".into(),
                    ));
                }
                atom_count += 1;
            }
        }
        if atom_count > 1 {
            return Err(PosteriorError::InvalidPrior(
                "at most one point mass at zero".into(),
            ));
        }
        let total: f64 = bins.iter().map(|b| b.prob).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(PosteriorError::InvalidPrior(format!(
                "probabilities sum to {total}, expected 1 within 1e-9"
            )));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[PriorBin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Prior mass at the exact null, if a point mass is present.
    pub fn null_mass(&self) -> f64 {
        self.bins
            .iter()
            .find(|b| b.is_point_mass())
            .map_or(0.0, |b| b.prob)
    }

    /// Cumulative probabilities, for categorical sampling.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.bins
            .iter()
            .map(|b| {
                acc += b.prob;
                acc
            })
            .collect()
    }
}

/// Noncentralities xi_i = mu_i / SE for every support point of the prior.
pub fn dress(prior: &BinnedPrior, se: f64) -> Result<Vec<f64>, PosteriorError> {
    if !(se > 0.0) {
        return Err(PosteriorError::Domain(format!(
            "standard error must be positive, got {se}"
        )));
    }
    Ok(prior.bins().iter().map(|b| b.mid / se).collect())
}

/// Posterior mixture weights given the observed statistic. Likelihoods are
/// accumulated in log space with max subtraction, so underflow only occurs
/// when every bin is impossibly far from the observation.
pub fn posterior_weights(
    prior: &BinnedPrior,
    xi: &[f64],
    observed: f64,
    sided: Sided,
) -> Result<Vec<f64>, PosteriorError> {
    if xi.len() != prior.len() {
        return Err(PosteriorError::Domain(
            "noncentrality list does not match the prior support".into(),
        ));
    }
    if !observed.is_finite() {
        return Err(PosteriorError::Domain(format!(
            "observed statistic must be finite, got {observed}"
        )));
    }
    let log_weights: Vec<f64> = prior
        .bins()
        .iter()
        .zip(xi)
        .map(|(b, &x)| {
            if b.prob <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let log_like = match sided {
                Sided::One => normal_log_pdf(observed - x),
                Sided::Two => {
                    let a = normal_log_pdf(observed.abs() - x);
                    let b2 = normal_log_pdf(observed.abs() + x);
                    let m = a.max(b2);
                    m + ((a - m).exp() + (b2 - m).exp()).ln()
                }
            };
            b.prob.ln() + log_like
        })
        .collect();
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(PosteriorError::Underflow);
    }
    let unnorm: Vec<f64> = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    if !(total > 0.0) {
        return Err(PosteriorError::Underflow);
    }
    Ok(unnorm.into_iter().map(|u| u / total).collect())
}

/// Posterior over a chosen effect scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorResult {
    /// Support values on the requested scale.
    pub support: Vec<f64>,
    /// Posterior probabilities, aligned with `support`.
    pub weights: Vec<f64>,
    /// Bin edges on the requested scale (point masses have lo == hi).
    pub edges: Vec<(f64, f64)>,
    /// Posterior mean on the requested scale.
    pub mean: f64,
    pub hpd_low: f64,
    pub hpd_high: f64,
    /// Smallest interval symmetric (on the log-OR scale) about the
    /// posterior mean holding `credibility` mass, with endpoints mapped to
    /// the requested scale.
    pub sym_low: f64,
    pub sym_high: f64,
    pub credibility: f64,
    pub observed_statistic: f64,
    pub se_used: f64,
}

/// Map posterior weights back to a raw effect scale. Gamma-prime support is
/// the monotone transform of the bin midpoints.
pub fn undress(
    prior: &BinnedPrior,
    weights: &[f64],
    se_used: f64,
    scale: Scale,
    observed: f64,
    credibility: f64,
) -> Result<PosteriorResult, PosteriorError> {
    if weights.len() != prior.len() {
        return Err(PosteriorError::Domain(
            "weight list does not match the prior support".into(),
        ));
    }
    if !(credibility > 0.0 && credibility < 1.0) {
        return Err(PosteriorError::Domain(format!(
            "credibility must lie in (0, 1), got {credibility}"
        )));
    }
    let max = llc_constants().max_log_or;
    let transform = |x: f64| -> f64 {
        match scale {
            Scale::LogOr => x,
            Scale::GammaPrime => gamma_prime_of_psi(x),
        }
    };
    if scale == Scale::GammaPrime {
        for b in prior.bins() {
            if b.mid.abs() > max {
                return Err(PosteriorError::OutOfRange { mu: b.mid, max });
            }
        }
    }
    let support: Vec<f64> = prior.bins().iter().map(|b| transform(b.mid)).collect();
    let edges: Vec<(f64, f64)> = prior
        .bins()
        .iter()
        .map(|b| (transform(b.lo), transform(b.hi)))
        .collect();
    let mean = support
        .iter()
        .zip(weights)
        .map(|(s, w)| s * w)
        .sum::<f64>();
    // The symmetric credible interval lives on the log-OR scale; its
    // endpoints ride through the same transform as the support.
    let psi_mean: f64 = prior
        .bins()
        .iter()
        .zip(weights)
        .map(|(b, w)| b.mid * w)
        .sum();
    let psi_support: Vec<f64> = prior.bins().iter().map(|b| b.mid).collect();
    let psi_edges: Vec<(f64, f64)> = prior.bins().iter().map(|b| (b.lo, b.hi)).collect();
    let h = symmetric_half_width(&psi_support, &psi_edges, weights, psi_mean, credibility);
    let mut result = PosteriorResult {
        support,
        weights: weights.to_vec(),
        edges,
        mean,
        hpd_low: 0.0,
        hpd_high: 0.0,
        sym_low: transform(psi_mean - h),
        sym_high: transform(psi_mean + h),
        credibility,
        observed_statistic: observed,
        se_used,
    };
    let (lo, hi) = hpd_interval(&result, credibility);
    result.hpd_low = lo;
    result.hpd_high = hi;
    Ok(result)
}

/// Discrete highest-posterior-density interval: include support points in
/// decreasing order of probability mass per unit bin width until the
/// requested mass is reached, then report the hull of the included bin
/// edges. Point masses are ranked at the median bin width so they compete
/// on mass; ties break toward the posterior mode.
pub fn hpd_interval(result: &PosteriorResult, credibility: f64) -> (f64, f64) {
    let n = result.support.len();
    let mut widths: Vec<f64> = result
        .edges
        .iter()
        .map(|&(lo, hi)| (hi - lo).abs())
        .filter(|&w| w > 0.0)
        .collect();
    widths.sort_by(f64::total_cmp);
    let reference_width = if widths.is_empty() {
        1.0
    } else {
        widths[widths.len() / 2]
    };
    let mode = result
        .support
        .iter()
        .zip(&result.weights)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(s, _)| *s)
        .unwrap_or(0.0);
    let mut order: Vec<usize> = (0..n).collect();
    let density = |i: usize| {
        let (lo, hi) = result.edges[i];
        let w = (hi - lo).abs();
        result.weights[i] / if w > 0.0 { w } else { reference_width }
    };
    order.sort_by(|&a, &b| {
        density(b)
            .total_cmp(&density(a))
            .then_with(|| {
                (result.support[a] - mode)
                    .abs()
                    .total_cmp(&(result.support[b] - mode).abs())
            })
            .then(a.cmp(&b))
    });
    let mut cum = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in &order {
        let (elo, ehi) = result.edges[i];
        lo = lo.min(elo.min(ehi));
        hi = hi.max(elo.max(ehi));
        cum += result.weights[i];
        if cum >= credibility {
            break;
        }
    }
    (lo, hi)
}

/// Posterior mass inside [a, b], reading each bin as uniform between its
/// edges (point masses count fully when inside).
fn mass_within(support: &[f64], edges: &[(f64, f64)], weights: &[f64], a: f64, b: f64) -> f64 {
    let mut mass = 0.0;
    for i in 0..support.len() {
        let (lo, hi) = edges[i];
        if lo == hi {
            if support[i] >= a && support[i] <= b {
                mass += weights[i];
            }
        } else {
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let overlap = (b.min(hi) - a.max(lo)).max(0.0);
            mass += weights[i] * overlap / (hi - lo);
        }
    }
    mass
}

fn symmetric_half_width(
    support: &[f64],
    edges: &[(f64, f64)],
    weights: &[f64],
    center: f64,
    credibility: f64,
) -> f64 {
    let mut d_max = 0.0f64;
    for &(lo, hi) in edges {
        d_max = d_max.max((lo - center).abs()).max((hi - center).abs());
    }
    if d_max == 0.0 || mass_within(support, edges, weights, center, center) >= credibility {
        return 0.0;
    }
    // mass is nondecreasing in the half width; bisect for the smallest h
    // reaching the requested level.
    let (mut lo_h, mut hi_h) = (0.0, d_max);
    for _ in 0..100 {
        let mid = 0.5 * (lo_h + hi_h);
        if mass_within(support, edges, weights, center - mid, center + mid) >= credibility {
            hi_h = mid;
        } else {
            lo_h = mid;
        }
    }
    hi_h
}

/// Smallest interval symmetric about the posterior mean containing at least
/// the requested mass, on the result's own scale. Bins count fractionally
/// by overlap; the interval degenerates to a point when a single support
/// value carries everything.
pub fn symmetric_interval(result: &PosteriorResult, credibility: f64) -> (f64, f64) {
    let h = symmetric_half_width(
        &result.support,
        &result.edges,
        &result.weights,
        result.mean,
        credibility,
    );
    (result.mean - h, result.mean + h)
}

/// Standard error of the log odds ratio implied by a confidence interval
/// reported on the OR scale: (log hi - log lo) / (2 z).
pub fn summary_to_se(
    or_point: f64,
    ci_low: f64,
    ci_high: f64,
    level: f64,
) -> Result<f64, PosteriorError> {
    if !(ci_low > 0.0 && ci_low <= or_point && or_point <= ci_high) {
        return Err(PosteriorError::CiOrdering {
            lo: ci_low,
            point: or_point,
            hi: ci_high,
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(PosteriorError::Domain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let z = normal_quantile((1.0 + level) / 2.0)
        .map_err(|e| PosteriorError::Domain(e.to_string()))?;
    Ok((ci_high.ln() - ci_low.ln()) / (2.0 * z))
}

/// Whether the reported point sits at the midpoint of the log-scale CI (the
/// assumption behind [`summary_to_se`]), within `tol` standard errors.
pub fn is_log_symmetric(or_point: f64, ci_low: f64, ci_high: f64, tol: f64) -> bool {
    let mid = 0.5 * (ci_low.ln() + ci_high.ln());
    let half = 0.5 * (ci_high.ln() - ci_low.ln());
    if half <= 0.0 {
        return or_point.ln() == mid;
    }
    (or_point.ln() - mid).abs() <= tol * half
}

/// Full pipeline: dress the prior with the standard error, score the
/// observed statistic, and undress onto the requested scale.
pub fn posterior_from_observation(
    prior: &BinnedPrior,
    se: f64,
    observed: f64,
    sided: Sided,
    scale: Scale,
    credibility: f64,
) -> Result<PosteriorResult, PosteriorError> {
    let xi = dress(prior, se)?;
    let weights = posterior_weights(prior, &xi, observed, sided)?;
    undress(prior, &weights, se, scale, observed, credibility)
}
