//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion report lines.

// Negated comparisons are deliberate: they fail on NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use common::{run_binary, simpson, stdout_of};
use gammaprime::contab::ContingencyTable;
use gammaprime::effects::{
    self, gamma_of_psi, llc_constants, sigma_min, sigma_minimizers,
    yule_q, yule_y, ExposureModel,
};
use gammaprime::hypotest::{t_test, z_test, zt_ratio};
use gammaprime::mcstudy::{
    run_power, run_selection, run_type1, EffectSpec, SimulationConfig, StudyReport,
};
use gammaprime::numerics::{normal_pdf, normal_quantile, rng_stream};
use gammaprime::posterior::{dress, posterior_weights, BinnedPrior, Scale, Sided};
use std::time::Instant;

fn report(criterion: u32, name: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("[criterion {criterion}] PASS - {name}");
    } else {
        println!(
            "[criterion {criterion}] FAIL - {name}: {}",
            failures.join("; ")
        );
        panic!("criterion {criterion} failed: {}", failures.join("; "));
    }
}

fn check(failures: &mut Vec<String>, label: &str, value: f64, target: f64, tol: f64) {
    if !((value - target).abs() <= tol) {
        failures.push(format!("{label} = {value:.5} not within {tol} of {target}"));
    }
}

#[test]
fn criterion_1_llc_constants() {
    let start = Instant::now();
    let c = llc_constants();
    let mut failures = Vec::new();
    check(&mut failures, "psi_star", c.psi_star, 1.19967864, 1e-8);
    check(&mut failures, "max_log_or", c.max_log_or, 4.79871, 1e-4);
    check(&mut failures, "llc", c.llc, 0.66274, 1e-4);
    let m = sigma_minimizers(c.max_or).unwrap();
    check(
        &mut failures,
        "Pr(D|E) at the bound",
        m.pr_d_given_e,
        0.9167782798,
        1e-9,
    );
    if start.elapsed().as_secs_f64() >= 1.0 {
        failures.push(format!("runtime {:?} exceeds 1 s", start.elapsed()));
    }
    report(1, "LLC constants", &failures);
}

#[test]
fn criterion_2_formula_equivalences() {
    let start = Instant::now();
    let mut failures = Vec::new();

    // Two gamma expressions agree over a dense grid.
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let psi = -20.0 + 40.0 * (i as f64 + 0.5) / 10_000.0;
        let or = psi.exp();
        let eq9 = psi / (2.0 * (2.0 + (1.0 + or) / or.sqrt()).sqrt());
        worst = worst.max((eq9 - gamma_of_psi(psi)).abs());
    }
    if worst >= 1e-12 {
        failures.push(format!("gamma forms differ by {worst:.2e}"));
    }

    // sigma_hat^2 / N == sum of reciprocal cells on random tables.
    let mut stream = rng_stream(2024, 0);
    let mut worst_rel = 0.0f64;
    for _ in 0..10_000 {
        let cells: Vec<f64> = (0..4).map(|_| stream.uniform_range(0.5, 5000.0)).collect();
        let t = ContingencyTable::from_counts(cells[0], cells[1], cells[2], cells[3]).unwrap();
        let e = t.estimates().unwrap();
        let lhs = e.sigma_hat * e.sigma_hat / e.n_total;
        let rhs = cells.iter().map(|c| 1.0 / c).sum::<f64>();
        worst_rel = worst_rel.max(((lhs - rhs) / rhs).abs());
    }
    if worst_rel >= 1e-12 {
        failures.push(format!("variance identity off by {worst_rel:.2e} relative"));
    }

    // T = Z / zt_ratio on random corrected tables.
    let mut worst_t = 0.0f64;
    let mut checked = 0;
    while checked < 10_000 {
        let p1 = stream.uniform_range(0.05, 0.95);
        let p2 = stream.uniform_range(0.05, 0.95);
        let n1 = stream.binomial(200, p1) as f64;
        let n2 = stream.binomial(150, p2) as f64;
        let t = ContingencyTable::from_counts(n1, 200.0 - n1, n2, 150.0 - n2)
            .unwrap()
            .haldane_correct()
            .unwrap();
        let psi = effects::log_or(&t).unwrap();
        if psi.abs() >= llc_constants().max_log_or {
            continue;
        }
        let z = z_test(&t).unwrap().statistic;
        let tt = t_test(&t).unwrap().statistic;
        worst_t = worst_t.max((tt - z / zt_ratio(psi).unwrap()).abs());
        checked += 1;
    }
    if worst_t >= 1e-10 {
        failures.push(format!("T vs Z/ratio differ by {worst_t:.2e}"));
    }

    // Fisher-style identities for Yule's coefficients.
    let mut worst_y = 0.0f64;
    for i in 0..10_000 {
        let or = (-5.0 + 10.0 * (i as f64 + 0.5) / 10_000.0f64).exp();
        let y = yule_y(or).unwrap();
        let q = yule_q(or).unwrap();
        worst_y = worst_y
            .max((4.0 * y.atanh() - or.ln()).abs())
            .max((2.0 * q.atanh() - or.ln()).abs());
    }
    if worst_y >= 1e-12 {
        failures.push(format!("arctanh identities off by {worst_y:.2e}"));
    }

    // The closed-form minimizer beats a 200x200 grid search.
    for or in [1.0 / 50.0, 0.5, 1.0, 2.0, 10.0, 50.0, 121.0] {
        let smin = sigma_min(or).unwrap();
        let mut grid_best = f64::INFINITY;
        for i in 0..200 {
            for j in 0..200 {
                let v = (i as f64 + 0.5) / 200.0;
                let pde = (j as f64 + 0.5) / 200.0;
                let pdne = pde / (pde + or * (1.0 - pde));
                if let Ok(m) = ExposureModel::from_exposure_risks(v, pde, pdne) {
                    grid_best = grid_best.min(m.sigma_sq_case_control().sqrt());
                }
            }
        }
        if !(smin <= grid_best + 1e-6) {
            failures.push(format!(
                "minimizer {smin:.8} beaten by grid {grid_best:.8} at OR = {or}"
            ));
        }
    }

    if start.elapsed().as_secs_f64() >= 10.0 {
        failures.push(format!("runtime {:?} exceeds 10 s", start.elapsed()));
    }
    report(2, "formula equivalences", &failures);
}

fn rate_config(n_cases: u64, effect: EffectSpec) -> SimulationConfig {
    SimulationConfig {
        n_cases,
        replicates: 100_000,
        seed: 1,
        effect,
        alpha: 0.05,
        n_tests: 1,
        scale: Scale::GammaPrime,
    }
}

#[test]
fn criterion_3_table1_type_i_error() {
    // Known deviation: the T-size reference value at n_D = 25 sits below
    // what the self-consistent T statistic produces under any examined
    // generating protocol; the gap decays as 1/N and vanishes by n_D =
    // 1000. The exact T = Z / zt_ratio identity (criterion 2) pins the
    // statistic, so the cell is asserted as stated and allowed to fail.
    let mut failures = Vec::new();
    for (n, z_target, t_target) in [
        (25u64, 0.0290, 0.0508),
        (100, 0.0432, 0.0494),
        (1000, 0.0485, 0.0490),
    ] {
        let start = Instant::now();
        let StudyReport::Rates(rows) =
            run_type1(&rate_config(n, EffectSpec::FixedLogOr(0.0))).unwrap()
        else {
            panic!("rates report expected")
        };
        let r = &rows[0];
        println!(
            "  table 1, n_D={n}: size_z = {:.4} (target {z_target}), size_t = {:.4} (target {t_target})",
            r.rejection_rate_z, r.rejection_rate_t
        );
        check(
            &mut failures,
            &format!("Z size at n_D={n}"),
            r.rejection_rate_z,
            z_target,
            0.004,
        );
        check(
            &mut failures,
            &format!("T size at n_D={n}"),
            r.rejection_rate_t,
            t_target,
            0.004,
        );
        if start.elapsed().as_secs_f64() > 120.0 {
            failures.push(format!("setting n_D={n} took {:?}", start.elapsed()));
        }
    }
    report(3, "type-I error rates (table 1)", &failures);
}

#[test]
fn criterion_4_table2_power() {
    // Same known deviation as criterion 3: the two T-power cells at small
    // samples run a few thousandths above their reference values (the Z
    // cells all pass); asserted as stated.
    let mut failures = Vec::new();
    let tau = 2.0f64.ln() / normal_quantile(0.95).unwrap();
    let cells: [(&str, u64, EffectSpec, f64, f64, f64); 3] = [
        ("OR=2, n_D=100", 100, EffectSpec::FixedLogOr(2.0f64.ln()), 0.499, 0.521, 0.010),
        ("OR=3, n_D=50", 50, EffectSpec::FixedLogOr(3.0f64.ln()), 0.559, 0.602, 0.010),
        ("tau=0.42, n_D=25", 25, EffectSpec::NormalLogOr { tau }, 0.065, 0.098, 0.006),
    ];
    for (label, n, effect, z_target, t_target, tol) in cells {
        let StudyReport::Rates(rows) = run_power(&rate_config(n, effect)).unwrap() else {
            panic!("rates report expected")
        };
        let r = &rows[0];
        println!(
            "  table 2, {label}: power_z = {:.4} (target {z_target}), power_t = {:.4} (target {t_target})",
            r.rejection_rate_z, r.rejection_rate_t
        );
        check(
            &mut failures,
            &format!("Z power at {label}"),
            r.rejection_rate_z,
            z_target,
            tol,
        );
        check(
            &mut failures,
            &format!("T power at {label}"),
            r.rejection_rate_t,
            t_target,
            tol,
        );
        // T at least as powerful as Z, within two Monte Carlo SEs.
        if r.rejection_rate_t < r.rejection_rate_z - 2.0 * (r.mc_se_z + r.mc_se_t) {
            failures.push(format!("T power below Z power at {label}"));
        }
    }
    report(4, "power (table 2)", &failures);
}

#[test]
fn criterion_5_table3_selection() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let tau = 2.0f64.ln() / normal_quantile(0.95).unwrap();
    // Table 3 reports n as the average total sample size; the protocol draws
    // controls around the case count, so n = 500 total means 250 cases.
    let config = SimulationConfig {
        n_cases: 250,
        replicates: 500,
        seed: 1,
        effect: EffectSpec::Mixture {
            pi0: 0.8,
            tau,
            truncation: 4.8,
            bins: 100,
        },
        alpha: 0.05,
        n_tests: 10_000,
        scale: Scale::GammaPrime,
    };
    let StudyReport::Selection(rows) = run_selection(&config).unwrap() else {
        panic!("selection report expected")
    };
    let r = &rows[0];
    println!(
        "  table 3: true = {:.4}, posterior = {:.4}, frequentist = {:.4}, coverage = {:.3}",
        r.true_mean, r.posterior_mean, r.frequentist_mean, r.hpd_coverage
    );
    if (r.posterior_mean - r.true_mean).abs() > 0.03 {
        failures.push(format!(
            "posterior mean {:.4} not within 0.03 of the realized true mean {:.4}",
            r.posterior_mean, r.true_mean
        ));
    }
    if r.frequentist_mean - r.true_mean < 0.05 {
        failures.push(format!(
            "winner's curse too small: frequentist {:.4} vs true {:.4}",
            r.frequentist_mean, r.true_mean
        ));
    }
    check(&mut failures, "HPD coverage", r.hpd_coverage, 0.94, 0.03);
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() > 15.0 * 60.0 {
        failures.push(format!("runtime {elapsed:?} exceeds 15 min"));
    }
    report(5, "selection study (table 3)", &failures);
}

#[test]
fn criterion_6_table4_reanalysis() {
    // Published grid: gamma-prime point, then (mean, lo, hi) per null prior
    // mass 0.25 / 0.5 / 0.75. The protein interval at pi0 = 0.5 is printed
    // as (-0.00, 0.01) in the source table, inconsistent with its own mean
    // of 0.05 sitting outside; it is read as (-0.00, 0.10) here.
    struct Row {
        label: &'static str,
        point: f64,
        cells: [(f64, f64, f64); 3],
    }
    let grid = [
        Row {
            label: "whole_grain",
            point: -0.13,
            cells: [
                (-0.13, -0.20, -0.05),
                (-0.13, -0.20, -0.05),
                (-0.12, -0.21, -0.03),
            ],
        },
        Row {
            label: "protein",
            point: 0.06,
            cells: [(0.053, 0.01, 0.10), (0.05, -0.00, 0.10), (0.04, -0.00, 0.08)],
        },
        Row {
            label: "alcohol",
            point: 0.19,
            cells: [(0.15, -0.00, 0.29), (0.13, -0.00, 0.27), (0.10, -0.05, 0.26)],
        },
        Row {
            label: "fruits_berries",
            point: -0.14,
            cells: [
                (-0.12, -0.23, 0.00),
                (-0.10, -0.21, 0.00),
                (-0.08, -0.20, 0.04),
            ],
        },
        Row {
            label: "dietary_magnesium",
            point: -0.26,
            cells: [
                (-0.17, -0.34, 0.01),
                (-0.15, -0.32, 0.03),
                (-0.11, -0.30, 0.09),
            ],
        },
        Row {
            label: "dietary_calcium",
            point: -0.06,
            cells: [
                (-0.043, -0.10, 0.01),
                (-0.03, -0.09, 0.03),
                (-0.01, -0.08, 0.05),
            ],
        },
    ];

    let dataset = concat!(env!("CARGO_MANIFEST_DIR"), "/data/dietary_t2d.csv");
    let out = run_binary(
        &[
            "posterior",
            "--input",
            dataset,
            "--pi0",
            "0.25,0.5,0.75",
            "--format",
            "csv",
        ],
        &[],
    );
    assert!(out.status.success(), "posterior command failed");
    let stdout = stdout_of(&out);
    let mut rows: Vec<Vec<String>> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 18, "expected 6 records x 3 priors");

    let mut failures = Vec::new();
    for row in &grid {
        for (k, &(mean, lo, hi)) in row.cells.iter().enumerate() {
            let pi0 = [0.25, 0.5, 0.75][k];
            let line = rows
                .iter_mut()
                .find(|r| r[0] == row.label && (r[1].parse::<f64>().unwrap() - pi0).abs() < 1e-9)
                .unwrap_or_else(|| panic!("missing row {} pi0={pi0}", row.label));
            let point: f64 = line[2].parse().unwrap();
            let post_mean: f64 = line[6].parse().unwrap();
            let post_lo: f64 = line[7].parse().unwrap();
            let post_hi: f64 = line[8].parse().unwrap();
            check(
                &mut failures,
                &format!("{} gamma-prime point", row.label),
                point,
                row.point,
                0.005,
            );
            check(
                &mut failures,
                &format!("{} posterior mean (pi0={pi0})", row.label),
                post_mean,
                mean,
                0.02,
            );
            check(
                &mut failures,
                &format!("{} interval low (pi0={pi0})", row.label),
                post_lo,
                lo,
                0.02,
            );
            check(
                &mut failures,
                &format!("{} interval high (pi0={pi0})", row.label),
                post_hi,
                hi,
                0.02,
            );
        }
    }
    report(6, "dietary reanalysis (table 4)", &failures);
}

#[test]
fn criterion_7_posterior_micro_oracle() {
    let mut failures = Vec::new();

    // Two-bin worked example against a brute-force mixture evaluation.
    let prior = BinnedPrior::from_midpoints(&[0.0, 0.5], &[0.5, 0.5]).unwrap();
    let xi = dress(&prior, 0.25).unwrap();
    let w = posterior_weights(&prior, &xi, 2.0, Sided::One).unwrap();
    let brute1 = 0.5 * normal_pdf(2.0 - 2.0) / (0.5 * normal_pdf(2.0) + 0.5 * normal_pdf(0.0));
    let brute0 = 1.0 - brute1;
    if (w[1] - brute1).abs() >= 1e-10 || (w[0] - brute0).abs() >= 1e-10 {
        failures.push(format!(
            "two-bin weights ({:.12}, {:.12}) vs brute force ({brute0:.12}, {brute1:.12})",
            w[0], w[1]
        ));
    }
    check(&mut failures, "weight on the effect bin", w[1], 0.8808, 5e-5);
    check(&mut failures, "weight on the null bin", w[0], 0.1192, 5e-5);

    // Folded-normal two-sided density vs the noncentral chi-square density
    // evaluated through its Poisson mixture series (central chi-square
    // densities with half-integer gamma terms built by recurrence).
    let ncx2_density = |x: f64, lambda: f64| -> f64 {
        let mut sum = 0.0;
        // ln Gamma(k + 1/2), built up from Gamma(1/2) = sqrt(pi)
        let mut ln_gamma_half = 0.5 * std::f64::consts::PI.ln();
        let mut ln_pois = -lambda / 2.0; // ln of e^{-l/2} (l/2)^k / k!
        for k in 0..200 {
            let df = 1.0 + 2.0 * k as f64;
            let ln_chi = (df / 2.0 - 1.0) * x.ln() - x / 2.0
                - (df / 2.0) * std::f64::consts::LN_2
                - ln_gamma_half;
            sum += (ln_pois + ln_chi).exp();
            ln_gamma_half += (0.5 + k as f64).ln();
            ln_pois += (lambda / 2.0).ln() - ((k + 1) as f64).ln();
        }
        sum
    };
    let mut worst = 0.0f64;
    for t in [0.25, 0.5, 1.0, 1.7, 2.5, 3.5, 5.0] {
        for xi_val in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let folded = normal_pdf(t - xi_val) + normal_pdf(t + xi_val);
            let chi = 2.0 * t * ncx2_density(t * t, xi_val * xi_val);
            worst = worst.max((folded - chi).abs());
        }
    }
    if worst >= 1e-6 {
        failures.push(format!("folded vs noncentral chi-square off by {worst:.2e}"));
    }

    // Tail-probability cross-check by quadrature of the series density,
    // substituting x = t^2 to tame the inverse-square-root endpoint.
    let upper = 2.5f64;
    let xi_val = 1.5f64;
    let by_quadrature = simpson(
        |t| 2.0 * t * ncx2_density(t * t, xi_val * xi_val),
        1e-9,
        upper,
        4000,
    );
    let by_normal = gammaprime::numerics::normal_cdf(upper - xi_val)
        - gammaprime::numerics::normal_cdf(-upper - xi_val);
    if (by_quadrature - by_normal).abs() >= 1e-6 {
        failures.push(format!(
            "noncentral chi-square mass {by_quadrature:.8} vs normal {by_normal:.8}"
        ));
    }

    report(7, "posterior micro-oracle", &failures);
}

#[test]
fn criterion_8_determinism_across_threads() {
    let mut failures = Vec::new();
    for sub in [
        vec![
            "simulate", "type1", "--n-cases", "40", "--reps", "4000", "--seed", "7", "--format",
            "csv",
        ],
        vec![
            "simulate", "power", "--or", "2", "--n-cases", "60", "--reps", "4000", "--seed", "11",
            "--format", "csv",
        ],
        vec![
            "simulate", "selection", "--n-tests", "200", "--n-cases", "120", "--reps", "30",
            "--seed", "3", "--format", "csv",
        ],
    ] {
        let single = run_binary(&sub, &[("GAMMAPRIME_THREADS", "1")]);
        let multi = run_binary(&sub, &[("GAMMAPRIME_THREADS", "4")]);
        let repeat = run_binary(&sub, &[("GAMMAPRIME_THREADS", "4")]);
        if !single.status.success() || !multi.status.success() {
            failures.push(format!("{} exited nonzero", sub[1]));
            continue;
        }
        if single.stdout != multi.stdout {
            failures.push(format!("{} differs between 1 and 4 threads", sub[1]));
        }
        if multi.stdout != repeat.stdout {
            failures.push(format!("{} differs between repeated runs", sub[1]));
        }
    }
    report(8, "bit-identical simulation output", &failures);
}
