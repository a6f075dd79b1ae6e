//! Monte Carlo harness for the size, power, and selection studies.
//!
//! The data-generating protocol, per replicate: the number of controls is
//! the nearest integer of Unif(0.75 n_D, 1.25 n_D); exposure probability
//! among cases is Unif(0.05, 0.95); exposure among controls follows from
//! the odds ratio; cell counts are binomial; and every cell receives the
//! Haldane-Anscombe +1/2. Each replicate owns the random stream keyed by
//! (seed, replicate index), and reductions run in replicate order, so
//! reports are bit-identical at any thread count.

use crate::contab::ContingencyTable;
use crate::effects::{gamma_prime_of_psi, llc_constants, log_or};
use crate::hypotest::{t_test, z_test};
use crate::numerics::{normal_quantile, rng_stream, RandomStream};
use crate::posterior::{dress, posterior_weights, undress, BinnedPrior, Scale, Sided};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("posterior failure during selection study: {0}")]
    Posterior(String),
}

/// How the true effect is generated across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectSpec {
    /// The same log odds ratio in every replicate.
    FixedLogOr(f64),
    /// log(OR) ~ Normal(0, tau), fresh each replicate.
    NormalLogOr { tau: f64 },
    /// Spike-and-slab mixture: zero with probability pi0, otherwise a draw
    /// from the discretized truncated Normal(0, tau) on [-t, t].
    Mixture {
        pi0: f64,
        tau: f64,
        truncation: f64,
        bins: usize,
    },
}

impl EffectSpec {
    /// Short label for report rows; contains no commas so CSV stays clean.
    pub fn label(&self) -> String {
        match self {
            EffectSpec::FixedLogOr(psi) => format!("log_or={}", crate::cli::fmt_g(*psi, 6)),
            EffectSpec::NormalLogOr { tau } => {
                format!("log_or~normal(tau={})", crate::cli::fmt_g(*tau, 6))
            }
            EffectSpec::Mixture {
                pi0,
                tau,
                truncation,
                bins,
            } => format!(
                "mixture(pi0={} tau={} trunc={} bins={bins})",
                crate::cli::fmt_g(*pi0, 6),
                crate::cli::fmt_g(*tau, 6),
                crate::cli::fmt_g(*truncation, 6)
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub n_cases: u64,
    pub replicates: u64,
    pub seed: u64,
    pub effect: EffectSpec,
    /// Two-sided test size.
    pub alpha: f64,
    /// Number of tests per replicate (selection study only).
    pub n_tests: u64,
    /// Reporting scale for the selection study.
    pub scale: Scale,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.replicates < 1 {
            return Err(McError::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.n_cases < 1 {
            return Err(McError::InvalidConfig("n_cases must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(McError::InvalidConfig(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        match self.effect {
            EffectSpec::NormalLogOr { tau } if !(tau > 0.0) => {
                Err(McError::InvalidConfig("tau must be positive".into()))
            }
            EffectSpec::Mixture {
                pi0,
                tau,
                truncation,
                bins,
            } if !(0.0..=1.0).contains(&pi0)
                || !(tau > 0.0)
                || !(truncation > 0.0)
                || bins < 2 =>
            {
                Err(McError::InvalidConfig(
                    "mixture needs pi0 in [0,1], positive tau and truncation, bins >= 2".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// One row of a size/power study.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub effect: String,
    pub n_cases: u64,
    pub replicates: u64,
    pub rejections_z: u64,
    pub rejections_t: u64,
    /// Replicates where |log OR| reached the monotone bound and T was
    /// undefined; excluded from the T denominator.
    pub t_excluded: u64,
    pub rejection_rate_z: f64,
    pub rejection_rate_t: f64,
    pub mc_se_z: f64,
    pub mc_se_t: f64,
    pub exclusion_rate: f64,
}

/// One row of the selection (winner's curse) study.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub n_tests: u64,
    pub n_cases: u64,
    pub replicates: u64,
    pub true_mean: f64,
    pub posterior_mean: f64,
    pub frequentist_mean: f64,
    pub mc_se_true: f64,
    pub mc_se_posterior: f64,
    pub mc_se_frequentist: f64,
    pub hpd_coverage: f64,
    pub coverage_se: f64,
}

/// Study output: one row per setting plus Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq)]
pub enum StudyReport {
    Rates(Vec<RateRow>),
    Selection(Vec<SelectionRow>),
}

fn rate_se(r: f64, n: f64) -> f64 {
    (r * (1.0 - r) / n).sqrt()
}

impl StudyReport {
    pub fn merge(&mut self, other: StudyReport) -> Result<(), McError> {
        match (self, other) {
            (StudyReport::Rates(a), StudyReport::Rates(b)) => {
                a.extend(b);
                Ok(())
            }
            (StudyReport::Selection(a), StudyReport::Selection(b)) => {
                a.extend(b);
                Ok(())
            }
            _ => Err(McError::InvalidConfig(
                "cannot merge reports of different kinds".into(),
            )),
        }
    }

    pub fn to_csv(&self) -> String {
        let g = |x: f64| crate::cli::fmt_g(x, 10);
        match self {
            StudyReport::Rates(rows) => {
                let mut out = String::from(
                    "effect,n_cases,replicates,rejection_rate_z,rejection_rate_t,\
                     mc_se_z,mc_se_t,t_excluded,exclusion_rate\n",
                );
                for r in rows {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{}\n",
                        r.effect,
                        r.n_cases,
                        r.replicates,
                        g(r.rejection_rate_z),
                        g(r.rejection_rate_t),
                        g(r.mc_se_z),
                        g(r.mc_se_t),
                        r.t_excluded,
                        g(r.exclusion_rate)
                    ));
                }
                out
            }
            StudyReport::Selection(rows) => {
                let mut out = String::from(
                    "n_tests,n_cases,replicates,true_mean,posterior_mean,frequentist_mean,\
                     mc_se_true,mc_se_posterior,mc_se_frequentist,hpd_coverage,coverage_se\n",
                );
                for r in rows {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{}\n",
                        r.n_tests,
                        r.n_cases,
                        r.replicates,
                        g(r.true_mean),
                        g(r.posterior_mean),
                        g(r.frequentist_mean),
                        g(r.mc_se_true),
                        g(r.mc_se_posterior),
                        g(r.mc_se_frequentist),
                        g(r.hpd_coverage),
                        g(r.coverage_se)
                    ));
                }
                out
            }
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            StudyReport::Rates(rows) => {
                let mut out = String::new();
                out.push_str(&format!(
                    "{:<40} {:>8} {:>10} {:>8} {:>8} {:>9} {:>9} {:>9}\n",
                    "effect", "n_cases", "reps", "rate_z", "rate_t", "mc_se_z", "mc_se_t",
                    "excluded"
                ));
                for r in rows {
                    out.push_str(&format!(
                        "{:<40} {:>8} {:>10} {:>8.4} {:>8.4} {:>9.5} {:>9.5} {:>9}\n",
                        r.effect,
                        r.n_cases,
                        r.replicates,
                        r.rejection_rate_z,
                        r.rejection_rate_t,
                        r.mc_se_z,
                        r.mc_se_t,
                        r.t_excluded
                    ));
                }
                out
            }
            StudyReport::Selection(rows) => {
                let mut out = String::new();
                out.push_str(&format!(
                    "{:>9} {:>8} {:>6} {:>10} {:>10} {:>10} {:>9}\n",
                    "n_tests", "n_cases", "reps", "true_mean", "post_mean", "freq_mean",
                    "coverage"
                ));
                for r in rows {
                    out.push_str(&format!(
                        "{:>9} {:>8} {:>6} {:>10.4} {:>10.4} {:>10.4} {:>8.1}%\n",
                        r.n_tests,
                        r.n_cases,
                        r.replicates,
                        r.true_mean,
                        r.posterior_mean,
                        r.frequentist_mean,
                        100.0 * r.hpd_coverage
                    ));
                }
                out
            }
        }
    }
}

/// Simulate one corrected 2x2 table at the given true log odds ratio.
pub fn sample_table(log_or_true: f64, n_cases: u64, stream: &mut RandomStream) -> ContingencyTable {
    let or = log_or_true.exp();
    let nf = n_cases as f64;
    let n_controls = (stream.uniform_range(0.75 * nf, 1.25 * nf))
        .round_ties_even()
        .max(1.0) as u64;
    let p = stream.uniform_range(0.05, 0.95);
    let q = p / ((1.0 - p) * or + p);
    let n11 = stream.binomial(n_cases, p);
    let n21 = stream.binomial(n_controls, q);
    ContingencyTable::from_counts(
        n11 as f64,
        (n_cases - n11) as f64,
        n21 as f64,
        (n_controls - n21) as f64,
    )
    .expect("binomial sampling keeps both rows nonempty")
    .haldane_correct()
    .expect("fresh table is uncorrected")
}

struct TestOutcome {
    z_reject: bool,
    t_reject: bool,
    t_defined: bool,
}

fn one_test_replicate(
    psi_true: f64,
    n_cases: u64,
    threshold: f64,
    stream: &mut RandomStream,
) -> TestOutcome {
    let table = sample_table(psi_true, n_cases, stream);
    let z = z_test(&table).expect("corrected table has positive cells");
    let psi_hat = log_or(&table).expect("corrected table has positive cells");
    if psi_hat.abs() >= llc_constants().max_log_or {
        return TestOutcome {
            z_reject: z.statistic.abs() >= threshold,
            t_reject: false,
            t_defined: false,
        };
    }
    let t = t_test(&table).expect("inside the monotone range");
    TestOutcome {
        z_reject: z.statistic.abs() >= threshold,
        t_reject: t.statistic.abs() >= threshold,
        t_defined: true,
    }
}

fn run_rate_study(config: &SimulationConfig) -> Result<StudyReport, McError> {
    config.validate()?;
    let threshold = if config.alpha >= 1.0 {
        0.0
    } else {
        normal_quantile(1.0 - config.alpha / 2.0)
            .map_err(|e| McError::InvalidConfig(e.to_string()))?
    };
    let reps = config.replicates;
    let outcomes: Vec<TestOutcome> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut stream = rng_stream(config.seed, rep);
            let psi_true = match config.effect {
                EffectSpec::FixedLogOr(psi) => psi,
                EffectSpec::NormalLogOr { tau } => stream.normal(0.0, tau),
                EffectSpec::Mixture { .. } => unreachable!("rate studies use fixed/normal effects"),
            };
            one_test_replicate(psi_true, config.n_cases, threshold, &mut stream)
        })
        .collect();

    let mut rej_z = 0u64;
    let mut rej_t = 0u64;
    let mut excluded = 0u64;
    for o in &outcomes {
        rej_z += o.z_reject as u64;
        rej_t += o.t_reject as u64;
        excluded += (!o.t_defined) as u64;
    }
    let t_denom = (reps - excluded).max(1);
    let rate_z = rej_z as f64 / reps as f64;
    let rate_t = rej_t as f64 / t_denom as f64;
    Ok(StudyReport::Rates(vec![RateRow {
        effect: config.effect.label(),
        n_cases: config.n_cases,
        replicates: reps,
        rejections_z: rej_z,
        rejections_t: rej_t,
        t_excluded: excluded,
        rejection_rate_z: rate_z,
        rejection_rate_t: rate_t,
        mc_se_z: rate_se(rate_z, reps as f64),
        mc_se_t: rate_se(rate_t, t_denom as f64),
        exclusion_rate: excluded as f64 / reps as f64,
    }]))
}

/// Type-I error study: rejection rates of Z and T under log(OR) = 0.
pub fn run_type1(config: &SimulationConfig) -> Result<StudyReport, McError> {
    match config.effect {
        EffectSpec::FixedLogOr(0.0) => run_rate_study(config),
        _ => Err(McError::InvalidConfig(
            "type-I study requires the effect fixed at log(OR) = 0".into(),
        )),
    }
}

/// Power study: rejection rates at a fixed nonzero log(OR) or with
/// log(OR) ~ Normal(0, tau) per replicate.
pub fn run_power(config: &SimulationConfig) -> Result<StudyReport, McError> {
    match config.effect {
        EffectSpec::FixedLogOr(_) | EffectSpec::NormalLogOr { .. } => run_rate_study(config),
        EffectSpec::Mixture { .. } => Err(McError::InvalidConfig(
            "power study takes a fixed or normal effect; the mixture drives the selection study"
                .into(),
        )),
    }
}

struct SelectionOutcome {
    true_effect: f64,
    posterior_mean: f64,
    frequentist: f64,
    covered: bool,
}

fn sample_effect_from_prior(prior: &BinnedPrior, cumulative: &[f64], stream: &mut RandomStream) -> f64 {
    let u = stream.uniform();
    let idx = cumulative.partition_point(|&c| c < u);
    prior.bins()[idx.min(prior.len() - 1)].mid
}

fn selection_replicate(
    config: &SimulationConfig,
    prior: &BinnedPrior,
    cumulative: &[f64],
    rep: u64,
) -> Result<SelectionOutcome, McError> {
    let mut stream = rng_stream(config.seed, rep);
    let mut best: Option<(f64, f64, ContingencyTable)> = None; // (z, psi_true, table)
    for _ in 0..config.n_tests {
        let psi_true = sample_effect_from_prior(prior, cumulative, &mut stream);
        let table = sample_table(psi_true, config.n_cases, &mut stream);
        let z = z_test(&table)
            .expect("corrected table has positive cells")
            .statistic;
        if best.as_ref().is_none_or(|(z_best, ..)| z > *z_best) {
            best = Some((z, psi_true, table));
        }
    }
    let (_, psi_true, table) = best.expect("at least one test per replicate");
    let psi_hat = log_or(&table).expect("corrected table has positive cells");
    let se = table
        .woolf_se()
        .expect("corrected table has positive cells");
    let observed = psi_hat / se;

    let xi = dress(prior, se).map_err(|e| McError::Posterior(e.to_string()))?;
    let weights = posterior_weights(prior, &xi, observed, Sided::One)
        .map_err(|e| McError::Posterior(e.to_string()))?;
    let on_report_scale = undress(prior, &weights, se, config.scale, observed, 0.95)
        .map_err(|e| McError::Posterior(e.to_string()))?;
    let on_log_or = undress(prior, &weights, se, Scale::LogOr, observed, 0.95)
        .map_err(|e| McError::Posterior(e.to_string()))?;

    let (true_effect, frequentist) = match config.scale {
        Scale::GammaPrime => (gamma_prime_of_psi(psi_true), gamma_prime_of_psi(psi_hat)),
        Scale::LogOr => (psi_true, psi_hat),
    };
    Ok(SelectionOutcome {
        true_effect,
        posterior_mean: on_report_scale.mean,
        frequentist,
        covered: on_log_or.hpd_low <= psi_true && psi_true <= on_log_or.hpd_high,
    })
}

/// Selection study: per replicate, run `n_tests` tests on effects drawn
/// from the mixture prior, pick the top-ranking result by Z statistic, and
/// compare the true effect of the selected test against its frequentist
/// estimate and the posterior mean computed with the known prior.
pub fn run_selection(config: &SimulationConfig) -> Result<StudyReport, McError> {
    config.validate()?;
    let (pi0, tau, truncation, bins) = match config.effect {
        EffectSpec::Mixture {
            pi0,
            tau,
            truncation,
            bins,
        } => (pi0, tau, truncation, bins),
        _ => {
            return Err(McError::InvalidConfig(
                "selection study requires the mixture effect spec".into(),
            ))
        }
    };
    if config.n_tests < 1 {
        return Err(McError::InvalidConfig("n_tests must be >= 1".into()));
    }
    let prior = BinnedPrior::make_default(pi0, tau, truncation, bins)
        .map_err(|e| McError::InvalidConfig(e.to_string()))?;
    let cumulative = prior.cumulative();

    let outcomes: Vec<Result<SelectionOutcome, McError>> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| selection_replicate(config, &prior, &cumulative, rep))
        .collect();

    let mut trues = Vec::with_capacity(outcomes.len());
    let mut posts = Vec::with_capacity(outcomes.len());
    let mut freqs = Vec::with_capacity(outcomes.len());
    let mut covered = 0u64;
    for o in outcomes {
        let o = o?;
        trues.push(o.true_effect);
        posts.push(o.posterior_mean);
        freqs.push(o.frequentist);
        covered += o.covered as u64;
    }
    let n = trues.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let se_of_mean = |v: &[f64], m: f64| {
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n * (n - 1.0).max(1.0))).sqrt()
    };
    let (mt, mp, mf) = (mean(&trues), mean(&posts), mean(&freqs));
    let coverage = covered as f64 / n;
    Ok(StudyReport::Selection(vec![SelectionRow {
        n_tests: config.n_tests,
        n_cases: config.n_cases,
        replicates: config.replicates,
        true_mean: mt,
        posterior_mean: mp,
        frequentist_mean: mf,
        mc_se_true: se_of_mean(&trues, mt),
        mc_se_posterior: se_of_mean(&posts, mp),
        mc_se_frequentist: se_of_mean(&freqs, mf),
        hpd_coverage: coverage,
        coverage_se: rate_se(coverage, n),
    }]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> SimulationConfig {
        SimulationConfig {
            n_cases: 100,
            replicates: 2000,
            seed: 1,
            effect: EffectSpec::FixedLogOr(0.0),
            alpha: 0.05,
            n_tests: 1,
            scale: Scale::GammaPrime,
        }
    }

    #[test]
    fn sample_table_is_deterministic() {
        let a = sample_table(2.0f64.ln(), 50, &mut rng_stream(9, 4));
        let b = sample_table(2.0f64.ln(), 50, &mut rng_stream(9, 4));
        assert_eq!(a, b);
        assert!(a.corrected());
        assert_eq!(a.n_cases(), 51.0);
        let controls = a.n_controls() - 1.0;
        assert!((37.0..=63.0).contains(&controls));
    }

    #[test]
    fn sample_table_recovers_the_effect_at_large_n() {
        let psi = 2.0f64.ln();
        let reps = 10_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for rep in 0..reps {
            let mut s = rng_stream(3, rep);
            let t = sample_table(psi, 5000, &mut s);
            let est = log_or(&t).unwrap();
            sum += est;
            sum_sq += est * est;
        }
        let mean = sum / reps as f64;
        let var = sum_sq / reps as f64 - mean * mean;
        let mc_se = (var / reps as f64).sqrt();
        assert!(
            (mean - psi).abs() < 3.0 * mc_se + 1e-3,
            "mean {mean} vs {psi} (mc_se {mc_se})"
        );
    }

    #[test]
    fn null_tables_are_balanced_on_average() {
        let reps = 20_000;
        let mut diff = 0.0;
        for rep in 0..reps {
            let mut s = rng_stream(17, rep);
            let t = sample_table(0.0, 200, &mut s);
            let e = t.estimates().unwrap();
            diff += e.p_hat - e.q_hat;
        }
        assert!((diff / reps as f64).abs() < 0.002);
    }

    #[test]
    fn alpha_one_rejects_everything() {
        let mut config = base_config();
        config.replicates = 500;
        config.alpha = 1.0;
        let report = run_type1(&config).unwrap();
        let StudyReport::Rates(rows) = report else {
            panic!("expected rates")
        };
        assert_eq!(rows[0].rejection_rate_z, 1.0);
        assert_eq!(rows[0].rejection_rate_t, 1.0);
    }

    #[test]
    fn type1_requires_null_effect() {
        let mut config = base_config();
        config.effect = EffectSpec::FixedLogOr(0.5);
        assert!(run_type1(&config).is_err());
        config.effect = EffectSpec::FixedLogOr(0.0);
        config.replicates = 0;
        assert!(run_type1(&config).is_err());
    }

    #[test]
    fn power_at_null_matches_type1() {
        let config = base_config();
        let t1 = run_type1(&config).unwrap();
        let pw = run_power(&config).unwrap();
        assert_eq!(t1, pw);
    }

    #[test]
    fn t_rejects_at_least_as_often_as_z() {
        let mut config = base_config();
        config.effect = EffectSpec::FixedLogOr(2.0f64.ln());
        config.replicates = 4000;
        let StudyReport::Rates(rows) = run_power(&config).unwrap() else {
            panic!()
        };
        // Sample-wise |T| >= |Z| implies the rate ordering whenever nothing
        // was excluded.
        assert_eq!(rows[0].t_excluded, 0);
        assert!(rows[0].rejection_rate_t >= rows[0].rejection_rate_z);
    }

    #[test]
    fn reports_are_identical_across_thread_counts() {
        let mut config = base_config();
        config.effect = EffectSpec::NormalLogOr { tau: 0.42 };
        config.replicates = 3000;
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_power(&config).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_power(&config).unwrap());
        assert_eq!(single, multi);
        assert_eq!(single.to_csv(), multi.to_csv());
    }

    #[test]
    fn selection_without_selection_is_unbiased() {
        let mut config = base_config();
        config.n_cases = 500;
        config.replicates = 400;
        config.n_tests = 1;
        config.effect = EffectSpec::Mixture {
            pi0: 0.8,
            tau: 0.42,
            truncation: 4.8,
            bins: 100,
        };
        let StudyReport::Selection(rows) = run_selection(&config).unwrap() else {
            panic!()
        };
        let r = &rows[0];
        // With a single test per replicate there is no selection, so the
        // frequentist mean tracks the true mean within Monte Carlo error.
        let gap = (r.frequentist_mean - r.true_mean).abs();
        assert!(
            gap < 4.0 * (r.mc_se_frequentist + r.mc_se_true) + 0.02,
            "gap = {gap}"
        );
    }

    #[test]
    fn pure_null_selection_shows_the_winners_curse() {
        let mut config = base_config();
        config.n_cases = 500;
        config.replicates = 60;
        config.n_tests = 200;
        config.effect = EffectSpec::Mixture {
            pi0: 1.0,
            tau: 0.42,
            truncation: 4.8,
            bins: 100,
        };
        let StudyReport::Selection(rows) = run_selection(&config).unwrap() else {
            panic!()
        };
        let r = &rows[0];
        assert_eq!(r.true_mean, 0.0);
        assert!(r.frequentist_mean > 0.05, "freq = {}", r.frequentist_mean);
        assert!(
            r.posterior_mean.abs() < r.frequentist_mean / 2.0,
            "posterior {} vs frequentist {}",
            r.posterior_mean,
            r.frequentist_mean
        );
    }

    #[test]
    fn selection_is_deterministic() {
        let mut config = base_config();
        config.n_cases = 300;
        config.replicates = 20;
        config.n_tests = 50;
        config.effect = EffectSpec::Mixture {
            pi0: 0.8,
            tau: 0.42,
            truncation: 4.8,
            bins: 100,
        };
        let a = run_selection(&config).unwrap();
        let b = run_selection(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn type1_sizes_approach_nominal_with_sample_size() {
        // Both tests are conservative at tiny samples; the Z size climbs
        // toward alpha as cases grow. 2e4 replicates separate the grid ends
        // far beyond Monte Carlo noise.
        let mut small = base_config();
        small.n_cases = 25;
        small.replicates = 20_000;
        let mut large = small;
        large.n_cases = 1000;
        let StudyReport::Rates(s) = run_type1(&small).unwrap() else {
            panic!()
        };
        let StudyReport::Rates(l) = run_type1(&large).unwrap() else {
            panic!()
        };
        assert!(s[0].rejection_rate_z < 0.04);
        assert!(l[0].rejection_rate_z > s[0].rejection_rate_z);
        assert!((l[0].rejection_rate_z - 0.05).abs() < 0.006);
        assert!((l[0].rejection_rate_t - 0.05).abs() < 0.006);
    }

    #[test]
    fn selection_reports_on_the_requested_scale() {
        let mut config = base_config();
        config.n_cases = 300;
        config.replicates = 15;
        config.n_tests = 60;
        config.effect = EffectSpec::Mixture {
            pi0: 0.8,
            tau: 0.42,
            truncation: 4.8,
            bins: 100,
        };
        let StudyReport::Selection(gp) = run_selection(&config).unwrap() else {
            panic!()
        };
        config.scale = Scale::LogOr;
        let StudyReport::Selection(lo) = run_selection(&config).unwrap() else {
            panic!()
        };
        // Same replicates and selections; the log-OR means sit above the
        // gamma-prime means because |gamma'(psi)| < |psi| on this range.
        assert_eq!(gp[0].hpd_coverage, lo[0].hpd_coverage);
        assert!(lo[0].true_mean > gp[0].true_mean);
        assert!(lo[0].frequentist_mean > gp[0].frequentist_mean);
    }

    #[test]
    fn csv_round_trips_through_parsing() {
        let mut config = base_config();
        config.replicates = 200;
        let report = run_type1(&config).unwrap();
        let csv = report.to_csv();
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 9);
        let rate: f64 = fields[3].parse().unwrap();
        let StudyReport::Rates(rows) = &report else {
            panic!()
        };
        assert_eq!(rate, rows[0].rejection_rate_z);
    }
}
