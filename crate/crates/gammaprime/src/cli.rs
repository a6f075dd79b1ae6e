//! Command-line interface.
//!
//! Subcommands: `constants`, `analyze`, `posterior`, `simulate
//! {type1,power,selection}`, and `dataset` (prints the bundled dietary
//! example). Exit codes: 0 success, 1 partial row failures, 2 usage or
//! config errors.

use crate::contab::ContingencyTable;
use crate::effects::{self, llc_constants, EffectSummary};
use crate::hypotest::{t_test, z_test};
use crate::mcstudy::{self, EffectSpec, SimulationConfig, StudyReport};
use crate::numerics::normal_quantile;
use crate::posterior::{self, is_log_symmetric, summary_to_se, BinnedPrior, Scale, Sided};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::PathBuf;

/// The dietary risk-factor example dataset.
pub const DIETARY_DATASET: &str = include_str!("../data/dietary_t2d.csv");

const EXIT_OK: i32 = 0;
const EXIT_ROW_FAILURES: i32 = 1;
const EXIT_USAGE: i32 = 2;

/// Format with up to `sig` significant digits, trimming trailing zeros
/// (the behavior of printf's %g). Stable under reparse: parsing the output
/// and formatting again reproduces the same string.
pub fn fmt_g(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let e = format!("{:.*e}", sig - 1, x);
    let (mantissa, exponent) = e.split_once('e').expect("exponential format");
    let exp: i32 = exponent.parse().expect("numeric exponent");
    if exp >= -4 && exp < sig as i32 {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        let trimmed = if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.')
        } else {
            &fixed
        };
        trimmed.to_string()
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{exp}")
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn json_num(x: f64) -> String {
    if x.is_finite() {
        fmt_g(x, 10)
    } else {
        "null".to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum ScaleArg {
    Logor,
    #[default]
    Gammaprime,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Logor => Scale::LogOr,
            ScaleArg::Gammaprime => Scale::GammaPrime,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "gammaprime",
    version,
    about = "Odds-ratio effect sizes on the gamma-prime scale: tests, posteriors, simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the Laplace-Limit-Constant bound constants.
    Constants {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Analyze 2x2 tables from CSV (header n11,n12,n21,n22; '-' for stdin).
    Analyze {
        #[arg(long)]
        input: String,
        /// Skip the Haldane-Anscombe correction (on by default).
        #[arg(long)]
        no_correct: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Posterior inference for published summaries or a single table.
    Posterior(PosteriorArgs),
    /// Monte Carlo studies of the Z and T tests.
    Simulate {
        #[command(subcommand)]
        study: Study,
    },
    /// Print the bundled dietary risk-factor dataset (CSV with provenance).
    Dataset,
}

#[derive(Args, Debug)]
struct PosteriorArgs {
    /// Summary CSV (header label,or,ci_low,ci_high,ci_level; '-' for stdin).
    #[arg(long, conflicts_with = "table")]
    input: Option<String>,
    /// A single raw table "n11,n12,n21,n22" (Haldane-corrected before use).
    #[arg(long)]
    table: Option<String>,
    /// Prior null masses to evaluate, comma separated.
    #[arg(long, value_delimiter = ',')]
    pi0: Option<Vec<f64>>,
    /// Prior scale of the non-null effect distribution (log-OR sd).
    #[arg(long)]
    tau: Option<f64>,
    /// Truncation of the non-null prior on the log-OR axis.
    #[arg(long, default_value_t = 4.8)]
    trunc: f64,
    /// Number of prior bins.
    #[arg(long, default_value_t = 100)]
    bins: usize,
    /// Prior file (header midpoint,probability); overrides pi0/tau/trunc/bins.
    #[arg(long)]
    prior_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScaleArg::Gammaprime)]
    scale: ScaleArg,
    /// Credibility level of the reported posterior interval.
    #[arg(long, default_value_t = 0.95)]
    cred: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug, Default, Clone)]
struct StudyArgs {
    /// Numbers of cases, comma separated (one report row each).
    #[arg(long, value_delimiter = ',')]
    n_cases: Option<Vec<u64>>,
    /// Monte Carlo replicates.
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Two-sided test size.
    #[arg(long)]
    alpha: Option<f64>,
    /// Key = value config file; flags override file entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Paper-scale defaults (1e6 replicates; 1e4 selection runs).
    #[arg(long)]
    full_scale: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write <out>.csv and <out>.txt next to the stdout report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Study {
    /// Type-I error of Z and T at log(OR) = 0.
    Type1 {
        #[command(flatten)]
        common: StudyArgs,
    },
    /// Power at a fixed OR or with log(OR) ~ Normal(0, tau).
    Power {
        #[arg(long)]
        or: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[command(flatten)]
        common: StudyArgs,
    },
    /// Posterior behavior for the top result out of L tests.
    Selection {
        #[arg(long)]
        n_tests: Option<u64>,
        #[arg(long)]
        pi0: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        trunc: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
        #[command(flatten)]
        common: StudyArgs,
    },
}

/// Default non-null prior scale: log(2) / the upper 5% normal quantile, i.e.
/// a 5% prior chance of an odds ratio beyond 2 (or below 1/2).
pub fn default_tau() -> f64 {
    2.0f64.ln() / normal_quantile(0.95).expect("0.95 is a valid probability")
}

/// CLI entry point; returns the process exit code.
pub fn run() -> i32 {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; keep its exit convention for
            // --help/--version and use 2 for usage errors.
            let code = if e.exit_code() == 0 { 0 } else { EXIT_USAGE };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Constants { format } => cmd_constants(format),
        Command::Analyze {
            input,
            no_correct,
            format,
        } => cmd_analyze(&input, no_correct, format),
        Command::Posterior(args) => cmd_posterior(&args),
        Command::Simulate { study } => cmd_simulate(study),
        Command::Dataset => {
            print!("{DIETARY_DATASET}");
            EXIT_OK
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("GAMMAPRIME_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid GAMMAPRIME_THREADS={v}"),
        }
    }
}

fn cmd_constants(format: Format) -> i32 {
    let c = llc_constants();
    match format {
        Format::Text => {
            println!("psi_star    {:.10}", c.psi_star);
            println!("max_log_or  {:.10}", c.max_log_or);
            println!("llc         {:.10}", c.llc);
            println!("max_or      {:.10}", c.max_or);
        }
        Format::Csv => {
            println!("name,value");
            println!("psi_star,{}", fmt_g(c.psi_star, 12));
            println!("max_log_or,{}", fmt_g(c.max_log_or, 12));
            println!("llc,{}", fmt_g(c.llc, 12));
            println!("max_or,{}", fmt_g(c.max_or, 12));
        }
        Format::Json => {
            println!(
                "{{\"psi_star\":{},\"max_log_or\":{},\"llc\":{},\"max_or\":{}}}",
                json_num(c.psi_star),
                json_num(c.max_log_or),
                json_num(c.llc),
                json_num(c.max_or)
            );
        }
    }
    EXIT_OK
}

fn read_input(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("cannot read stdin: {e}"))?;
        Ok(buf)
    } else {
        fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))
    }
}

/// Lines of a CSV body with 1-based line numbers, skipping blanks and
/// '#' comments.
fn csv_rows(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_f64(field: &str, what: &str, line_no: usize) -> Result<f64, String> {
    field
        .parse::<f64>()
        .map_err(|_| format!("line {line_no}: cannot parse {what} from '{field}'"))
}

fn parse_tables(text: &str) -> (Vec<(usize, ContingencyTable)>, Vec<String>) {
    let mut rows = csv_rows(text);
    if let Some((_, first)) = rows.first() {
        let f = split_fields(first);
        if f == ["n11", "n12", "n21", "n22"] {
            rows.remove(0);
        }
    }
    let mut tables = Vec::new();
    let mut errors = Vec::new();
    for (line_no, line) in rows {
        let fields = split_fields(line);
        if fields.len() != 4 {
            errors.push(format!(
                "line {line_no}: expected 4 fields n11,n12,n21,n22, got {}",
                fields.len()
            ));
            continue;
        }
        let parsed: Result<Vec<f64>, String> = fields
            .iter()
            .map(|f| parse_f64(f, "cell count", line_no))
            .collect();
        match parsed.and_then(|c| {
            ContingencyTable::from_counts(c[0], c[1], c[2], c[3])
                .map_err(|e| format!("line {line_no}: {e}"))
        }) {
            Ok(t) => tables.push((line_no, t)),
            Err(e) => errors.push(e),
        }
    }
    (tables, errors)
}

/// A published summary: label, OR point estimate, CI on the OR scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub label: String,
    pub or_point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_level: f64,
}

fn parse_summaries(text: &str) -> (Vec<(usize, SummaryRecord)>, Vec<String>) {
    let mut rows = csv_rows(text);
    if let Some((_, first)) = rows.first() {
        let f = split_fields(first);
        if f == ["label", "or", "ci_low", "ci_high", "ci_level"] {
            rows.remove(0);
        }
    }
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (line_no, line) in rows {
        let fields = split_fields(line);
        if fields.len() != 5 {
            errors.push(format!(
                "line {line_no}: expected 5 fields label,or,ci_low,ci_high,ci_level, got {}",
                fields.len()
            ));
            continue;
        }
        let nums: Result<Vec<f64>, String> = fields[1..]
            .iter()
            .map(|f| parse_f64(f, "summary value", line_no))
            .collect();
        match nums {
            Ok(v) => records.push((
                line_no,
                SummaryRecord {
                    label: fields[0].to_string(),
                    or_point: v[0],
                    ci_low: v[1],
                    ci_high: v[2],
                    ci_level: v[3],
                },
            )),
            Err(e) => errors.push(e),
        }
    }
    (records, errors)
}

struct AnalyzeRow {
    line: usize,
    log_or: f64,
    se_log_or: f64,
    gamma_prime: f64,
    se_gamma_prime: Option<f64>,
    z: f64,
    p_z: f64,
    t: Option<f64>,
    p_t: Option<f64>,
}

fn cmd_analyze(input: &str, no_correct: bool, format: Format) -> i32 {
    let text = match read_input(input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let (tables, mut errors) = parse_tables(&text);
    let mut rows = Vec::new();
    for (line_no, raw) in tables {
        let table = if no_correct {
            raw
        } else {
            match raw.haldane_correct() {
                Ok(t) => t,
                Err(e) => {
                    errors.push(format!("line {line_no}: {e}"));
                    continue;
                }
            }
        };
        let z = match z_test(&table) {
            Ok(z) => z,
            Err(e) => {
                errors.push(format!("line {line_no}: {e}"));
                continue;
            }
        };
        let psi = effects::log_or(&table).expect("z test succeeded");
        let se = table.woolf_se().expect("z test succeeded");
        let t = t_test(&table).ok();
        if t.is_none() {
            eprintln!(
                "warning: line {line_no}: |log OR| is beyond the monotone range; \
                 T and se(gamma') are undefined"
            );
        }
        let se_gp = table
            .estimates()
            .ok()
            .and_then(|e| effects::se_gamma_prime(psi, e.sigma_hat, e.n_total).ok());
        rows.push(AnalyzeRow {
            line: line_no,
            log_or: psi,
            se_log_or: se,
            gamma_prime: effects::gamma_prime_of_psi(psi),
            se_gamma_prime: se_gp,
            z: z.statistic,
            p_z: z.p_two_sided,
            t: t.map(|t| t.statistic),
            p_t: t.map(|t| t.p_two_sided),
        });
    }

    let opt = |v: Option<f64>| v.map_or(String::new(), |x| fmt_g(x, 10));
    match format {
        Format::Csv => {
            println!("line,log_or,se_log_or,gamma_prime,se_gamma_prime,z,p_z,t,p_t");
            for r in &rows {
                println!(
                    "{},{},{},{},{},{},{},{},{}",
                    r.line,
                    fmt_g(r.log_or, 10),
                    fmt_g(r.se_log_or, 10),
                    fmt_g(r.gamma_prime, 10),
                    opt(r.se_gamma_prime),
                    fmt_g(r.z, 10),
                    fmt_g(r.p_z, 10),
                    opt(r.t),
                    opt(r.p_t)
                );
            }
        }
        Format::Json => {
            let body: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{{\"line\":{},\"log_or\":{},\"se_log_or\":{},\"gamma_prime\":{},\
                         \"se_gamma_prime\":{},\"z\":{},\"p_z\":{},\"t\":{},\"p_t\":{}}}",
                        r.line,
                        json_num(r.log_or),
                        json_num(r.se_log_or),
                        json_num(r.gamma_prime),
                        r.se_gamma_prime.map_or("null".into(), json_num),
                        json_num(r.z),
                        json_num(r.p_z),
                        r.t.map_or("null".into(), json_num),
                        r.p_t.map_or("null".into(), json_num)
                    )
                })
                .collect();
            println!("{{\"rows\":[{}]}}", body.join(","));
        }
        Format::Text => {
            println!(
                "{:>5} {:>11} {:>11} {:>12} {:>13} {:>9} {:>11} {:>9} {:>11}",
                "line", "log_or", "se_log_or", "gamma_prime", "se_gamma_pr", "z", "p_z", "t",
                "p_t"
            );
            for r in &rows {
                println!(
                    "{:>5} {:>11.5} {:>11.5} {:>12.5} {:>13} {:>9.4} {:>11} {:>9} {:>11}",
                    r.line,
                    r.log_or,
                    r.se_log_or,
                    r.gamma_prime,
                    r.se_gamma_prime
                        .map_or("-".into(), |x| format!("{x:.5}")),
                    r.z,
                    fmt_g(r.p_z, 4),
                    r.t.map_or("-".into(), |x| format!("{x:.4}")),
                    r.p_t.map_or("-".into(), |x| fmt_g(x, 4))
                );
            }
        }
    }
    for e in &errors {
        eprintln!("error: {e}");
    }
    if errors.is_empty() {
        EXIT_OK
    } else {
        EXIT_ROW_FAILURES
    }
}

struct PosteriorCell {
    label: String,
    pi0: f64,
    point: f64,
    se_point: f64,
    freq_lo: f64,
    freq_hi: f64,
    post_mean: f64,
    post_lo: f64,
    post_hi: f64,
}

fn cmd_posterior(args: &PosteriorArgs) -> i32 {
    if !(args.cred > 0.0 && args.cred < 1.0) {
        eprintln!("error: --cred must lie in (0, 1)");
        return EXIT_USAGE;
    }
    let tau = args.tau.unwrap_or_else(default_tau);
    let pi0s = args.pi0.clone().unwrap_or_else(|| vec![0.5]);
    let scale: Scale = args.scale.into();

    let file_prior = match &args.prior_file {
        Some(path) => match load_prior_file(path) {
            Ok(p) => {
                if args.pi0.is_some() {
                    eprintln!("warning: --pi0 is ignored when --prior-file is given");
                }
                Some(p)
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        },
        None => None,
    };

    // Collect (label, psi_hat, se) inputs.
    let mut inputs: Vec<(String, f64, f64)> = Vec::new();
    let mut errors: Vec<String> = Vec::new();
    if let Some(spec) = &args.table {
        match parse_single_table(spec) {
            Ok(table) => {
                let corrected = match table.haldane_correct() {
                    Ok(c) => c,
                    Err(_) => table,
                };
                let psi = effects::log_or(&corrected).expect("corrected cells are positive");
                let se = corrected.woolf_se().expect("corrected cells are positive");
                inputs.push(("table".to_string(), psi, se));
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        }
    } else if let Some(path) = &args.input {
        let text = match read_input(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        let (records, parse_errors) = parse_summaries(&text);
        errors.extend(parse_errors);
        for (line_no, rec) in records {
            match summary_to_se(rec.or_point, rec.ci_low, rec.ci_high, rec.ci_level) {
                Ok(se) if se > 0.0 => {
                    if !is_log_symmetric(rec.or_point, rec.ci_low, rec.ci_high, 0.2) {
                        eprintln!(
                            "warning: line {line_no} ({}): point estimate is far from the \
                             log-scale CI midpoint",
                            rec.label
                        );
                    }
                    inputs.push((rec.label, rec.or_point.ln(), se));
                }
                Ok(_) => errors.push(format!(
                    "line {line_no} ({}): degenerate CI gives a zero standard error",
                    rec.label
                )),
                Err(e) => errors.push(format!("line {line_no} ({}): {e}", rec.label)),
            }
        }
    } else {
        eprintln!("error: provide --input or --table");
        return EXIT_USAGE;
    }

    let z_cred = normal_quantile((1.0 + args.cred) / 2.0).expect("cred validated");
    let mut cells = Vec::new();
    for (label, psi, se) in &inputs {
        let summary = match EffectSummary::from_published(psi.exp(), *se) {
            Ok(s) => s,
            Err(e) => {
                errors.push(format!("{label}: {e}"));
                continue;
            }
        };
        let (point, se_point) = match scale {
            Scale::GammaPrime => (summary.gamma_prime, summary.se_gamma_prime),
            Scale::LogOr => (summary.log_or, summary.se_log_or),
        };
        let observed = psi / se;
        for &pi0 in &pi0s {
            let prior = match &file_prior {
                Some(p) => p.clone(),
                None => match BinnedPrior::make_default(pi0, tau, args.trunc, args.bins) {
                    Ok(p) => p,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_USAGE;
                    }
                },
            };
            match posterior::posterior_from_observation(
                &prior, *se, observed, Sided::One, scale, args.cred,
            ) {
                Ok(res) => {
                    let (lo, hi) = (res.sym_low, res.sym_high);
                    cells.push(PosteriorCell {
                        label: label.clone(),
                        pi0: if file_prior.is_some() {
                            prior.null_mass()
                        } else {
                            pi0
                        },
                        point,
                        se_point,
                        freq_lo: point - z_cred * se_point,
                        freq_hi: point + z_cred * se_point,
                        post_mean: res.mean,
                        post_lo: lo,
                        post_hi: hi,
                    });
                }
                Err(e) => errors.push(format!("{label} (pi0={pi0}): {e}")),
            }
            if file_prior.is_some() {
                break; // a file prior fixes the null mass; no pi0 sweep
            }
        }
    }

    match args.format {
        Format::Csv => {
            println!("label,pi0,point,se_point,freq_lo,freq_hi,post_mean,post_lo,post_hi");
            for c in &cells {
                println!(
                    "{},{},{},{},{},{},{},{},{}",
                    c.label,
                    fmt_g(c.pi0, 10),
                    fmt_g(c.point, 10),
                    fmt_g(c.se_point, 10),
                    fmt_g(c.freq_lo, 10),
                    fmt_g(c.freq_hi, 10),
                    fmt_g(c.post_mean, 10),
                    fmt_g(c.post_lo, 10),
                    fmt_g(c.post_hi, 10)
                );
            }
        }
        Format::Json => {
            let body: Vec<String> = cells
                .iter()
                .map(|c| {
                    format!(
                        "{{\"label\":\"{}\",\"pi0\":{},\"point\":{},\"se_point\":{},\
                         \"freq_lo\":{},\"freq_hi\":{},\"post_mean\":{},\"post_lo\":{},\
                         \"post_hi\":{}}}",
                        json_escape(&c.label),
                        json_num(c.pi0),
                        json_num(c.point),
                        json_num(c.se_point),
                        json_num(c.freq_lo),
                        json_num(c.freq_hi),
                        json_num(c.post_mean),
                        json_num(c.post_lo),
                        json_num(c.post_hi)
                    )
                })
                .collect();
            println!("{{\"rows\":[{}]}}", body.join(","));
        }
        Format::Text => {
            println!(
                "{:<20} {:>5} {:>9} {:>9} {:>20} {:>9} {:>20}",
                "label", "pi0", "point", "se", "freq interval", "post", "posterior interval"
            );
            for c in &cells {
                println!(
                    "{:<20} {:>5} {:>9.4} {:>9.4} ({:>8.4}, {:>8.4}) {:>9.4} ({:>8.4}, {:>8.4})",
                    c.label,
                    fmt_g(c.pi0, 4),
                    c.point,
                    c.se_point,
                    c.freq_lo,
                    c.freq_hi,
                    c.post_mean,
                    c.post_lo,
                    c.post_hi
                );
            }
        }
    }
    for e in &errors {
        eprintln!("error: {e}");
    }
    if errors.is_empty() {
        EXIT_OK
    } else {
        EXIT_ROW_FAILURES
    }
}

fn parse_single_table(spec: &str) -> Result<ContingencyTable, String> {
    let fields = split_fields(spec);
    if fields.len() != 4 {
        return Err(format!(
            "expected --table n11,n12,n21,n22, got {} fields",
            fields.len()
        ));
    }
    let cells: Result<Vec<f64>, String> = fields
        .iter()
        .map(|f| parse_f64(f, "cell count", 1))
        .collect();
    let c = cells?;
    ContingencyTable::from_counts(c[0], c[1], c[2], c[3]).map_err(|e| e.to_string())
}

fn load_prior_file(path: &PathBuf) -> Result<BinnedPrior, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut rows = csv_rows(&text);
    if let Some((_, first)) = rows.first() {
        if split_fields(first) == ["midpoint", "probability"] {
            rows.remove(0);
        }
    }
    let mut mids = Vec::new();
    let mut probs = Vec::new();
    for (line_no, line) in rows {
        let fields = split_fields(line);
        if fields.len() != 2 {
            return Err(format!(
                "line {line_no}: expected midpoint,probability, got {} fields",
                fields.len()
            ));
        }
        mids.push(parse_f64(fields[0], "midpoint", line_no)?);
        probs.push(parse_f64(fields[1], "probability", line_no)?);
    }
    BinnedPrior::from_midpoints(&mids, &probs).map_err(|e| e.to_string())
}

struct FileConfig(BTreeMap<String, String>);

impl FileConfig {
    fn load(path: Option<&PathBuf>) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(format!("config line {}: expected key = value", i + 1));
                };
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key {key}: cannot parse '{v}'")),
        }
    }

    fn n_cases_list(&self) -> Result<Option<Vec<u64>>, String> {
        match self.0.get("n_cases") {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u64>()
                        .map_err(|_| format!("config key n_cases: cannot parse '{s}'"))
                })
                .collect::<Result<Vec<u64>, String>>()
                .map(Some),
        }
    }
}

fn cmd_simulate(study: Study) -> i32 {
    match run_study(study) {
        Ok((report, format, out)) => {
            match format {
                Format::Csv => print!("{}", report.to_csv()),
                Format::Json => println!("{}", report_to_json(&report)),
                Format::Text => print!("{}", report.to_text()),
            }
            if let Some(prefix) = out {
                let csv_path = prefix.with_extension("csv");
                let txt_path = prefix.with_extension("txt");
                if let Err(e) = fs::write(&csv_path, report.to_csv()) {
                    eprintln!("error: cannot write {}: {e}", csv_path.display());
                    return EXIT_USAGE;
                }
                if let Err(e) = fs::write(&txt_path, report.to_text()) {
                    eprintln!("error: cannot write {}: {e}", txt_path.display());
                    return EXIT_USAGE;
                }
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn report_to_json(report: &StudyReport) -> String {
    // Reuse the CSV column contract: header row drives the field names.
    let csv = report.to_csv();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let rows: Vec<String> = lines
        .map(|line| {
            let fields: Vec<String> = line
                .split(',')
                .zip(&header)
                .map(|(value, name)| {
                    if value.parse::<f64>().is_ok() {
                        format!("\"{}\":{}", json_escape(name), value)
                    } else {
                        format!("\"{}\":\"{}\"", json_escape(name), json_escape(value))
                    }
                })
                .collect();
            format!("{{{}}}", fields.join(","))
        })
        .collect();
    format!("{{\"rows\":[{}]}}", rows.join(","))
}

type StudyOutput = (StudyReport, Format, Option<PathBuf>);

fn run_study(study: Study) -> Result<StudyOutput, String> {
    match study {
        Study::Type1 { common } => {
            let file = FileConfig::load(common.config.as_ref())?;
            let base = resolve_base(&common, &file, false)?;
            let n_cases = resolve_n_cases(&common, &file)?;
            let mut report: Option<StudyReport> = None;
            for n in n_cases {
                let config = SimulationConfig {
                    n_cases: n,
                    effect: EffectSpec::FixedLogOr(0.0),
                    ..base
                };
                let r = mcstudy::run_type1(&config).map_err(|e| e.to_string())?;
                match &mut report {
                    None => report = Some(r),
                    Some(existing) => existing.merge(r).map_err(|e| e.to_string())?,
                }
            }
            Ok((
                report.expect("at least one n_cases"),
                common.format.unwrap_or(Format::Text),
                common.out,
            ))
        }
        Study::Power { or, tau, common } => {
            let file = FileConfig::load(common.config.as_ref())?;
            let or = match or {
                Some(v) => Some(v),
                None => file.get::<f64>("or")?,
            };
            let tau = match tau {
                Some(v) => Some(v),
                None => file.get::<f64>("tau")?,
            };
            let effect = match (or, tau) {
                (Some(or), None) => {
                    if !(or > 0.0) {
                        return Err("--or must be positive".into());
                    }
                    EffectSpec::FixedLogOr(or.ln())
                }
                (None, Some(tau)) => EffectSpec::NormalLogOr { tau },
                (None, None) => return Err("power study needs --or or --tau".into()),
                (Some(_), Some(_)) => {
                    return Err("give exactly one of --or and --tau".into())
                }
            };
            let base = resolve_base(&common, &file, false)?;
            let n_cases = resolve_n_cases(&common, &file)?;
            let mut report: Option<StudyReport> = None;
            for n in n_cases {
                let config = SimulationConfig {
                    n_cases: n,
                    effect,
                    ..base
                };
                let r = mcstudy::run_power(&config).map_err(|e| e.to_string())?;
                match &mut report {
                    None => report = Some(r),
                    Some(existing) => existing.merge(r).map_err(|e| e.to_string())?,
                }
            }
            Ok((
                report.expect("at least one n_cases"),
                common.format.unwrap_or(Format::Text),
                common.out,
            ))
        }
        Study::Selection {
            n_tests,
            pi0,
            tau,
            trunc,
            bins,
            scale,
            common,
        } => {
            let file = FileConfig::load(common.config.as_ref())?;
            let base = resolve_base(&common, &file, true)?;
            let n_cases = resolve_n_cases(&common, &file)?;
            let n_tests = match n_tests {
                Some(v) => v,
                None => file.get::<u64>("n_tests")?.unwrap_or(10_000),
            };
            let effect = EffectSpec::Mixture {
                pi0: match pi0 {
                    Some(v) => v,
                    None => file.get::<f64>("pi0")?.unwrap_or(0.8),
                },
                tau: match tau {
                    Some(v) => v,
                    None => file.get::<f64>("tau")?.unwrap_or_else(default_tau),
                },
                truncation: match trunc {
                    Some(v) => v,
                    None => file.get::<f64>("trunc")?.unwrap_or(4.8),
                },
                bins: match bins {
                    Some(v) => v,
                    None => file.get::<usize>("bins")?.unwrap_or(100),
                },
            };
            let scale: Scale = scale.unwrap_or(ScaleArg::Gammaprime).into();
            let mut report: Option<StudyReport> = None;
            for n in n_cases {
                let config = SimulationConfig {
                    n_cases: n,
                    effect,
                    n_tests,
                    scale,
                    ..base
                };
                let r = mcstudy::run_selection(&config).map_err(|e| e.to_string())?;
                match &mut report {
                    None => report = Some(r),
                    Some(existing) => existing.merge(r).map_err(|e| e.to_string())?,
                }
            }
            Ok((
                report.expect("at least one n_cases"),
                common.format.unwrap_or(Format::Text),
                common.out,
            ))
        }
    }
}

fn resolve_base(
    common: &StudyArgs,
    file: &FileConfig,
    selection: bool,
) -> Result<SimulationConfig, String> {
    let default_reps = if common.full_scale {
        if selection {
            10_000
        } else {
            1_000_000
        }
    } else if selection {
        500
    } else {
        100_000
    };
    let reps = match common.reps {
        Some(v) => v,
        None => file.get::<u64>("reps")?.unwrap_or(default_reps),
    };
    if reps == 0 {
        return Err("--reps must be >= 1".into());
    }
    let alpha = match common.alpha {
        Some(v) => v,
        None => file.get::<f64>("alpha")?.unwrap_or(0.05),
    };
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(format!("--alpha must lie in (0, 1], got {alpha}"));
    }
    let seed = match common.seed {
        Some(v) => v,
        None => file.get::<u64>("seed")?.unwrap_or(1),
    };
    Ok(SimulationConfig {
        n_cases: 100,
        replicates: reps,
        seed,
        effect: EffectSpec::FixedLogOr(0.0),
        alpha,
        n_tests: 1,
        scale: Scale::GammaPrime,
    })
}

fn resolve_n_cases(common: &StudyArgs, file: &FileConfig) -> Result<Vec<u64>, String> {
    let list = match &common.n_cases {
        Some(v) => Some(v.clone()),
        None => file.n_cases_list()?,
    };
    let list = list.unwrap_or_else(|| vec![100]);
    if list.is_empty() || list.contains(&0) {
        return Err("--n-cases entries must be >= 1".into());
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_g_round_trips() {
        for &x in &[
            0.0,
            1.0,
            -2.5,
            0.049400000000000004,
            1.1996786402577338,
            123456789012.345,
            6.02e-23,
            -3.1e18,
        ] {
            let s = fmt_g(x, 10);
            let y: f64 = s.parse().unwrap();
            assert_eq!(fmt_g(y, 10), s, "x = {x}, s = {s}");
        }
        assert_eq!(fmt_g(0.0, 10), "0");
        assert_eq!(fmt_g(1.0, 10), "1");
        assert_eq!(fmt_g(0.5, 10), "0.5");
        assert_eq!(fmt_g(1.5e-7, 10), "1.5e-7");
    }

    #[test]
    fn table_parsing_reports_line_numbers() {
        let text = "n11,n12,n21,n22\n20,5,10,15\na,b,c,d\n# comment\n1,2,3\n";
        let (tables, errors) = parse_tables(text);
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].0, 2);
        assert_eq!(errors.len(), 2);
        assert!(errors[0].contains("line 3"));
        assert!(errors[1].contains("line 5"));
    }

    #[test]
    fn summary_parsing() {
        let (rows, errors) = parse_summaries(DIETARY_DATASET);
        assert_eq!(rows.len(), 6);
        assert!(errors.is_empty());
        assert_eq!(rows[0].1.label, "whole_grain");
        assert_eq!(rows[0].1.or_point, 0.70);
        assert_eq!(rows[5].1.ci_high, 1.00);
    }

    #[test]
    fn config_file_parsing() {
        let dir = std::env::temp_dir().join("gammaprime-config-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("study.conf");
        fs::write(&path, "reps = 123\nseed = 7 # comment\nn_cases = 25, 50\n").unwrap();
        let file = FileConfig::load(Some(&path)).unwrap();
        assert_eq!(file.get::<u64>("reps").unwrap(), Some(123));
        assert_eq!(file.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(file.n_cases_list().unwrap(), Some(vec![25, 50]));
        fs::write(&path, "reps 123\n").unwrap();
        assert!(FileConfig::load(Some(&path)).is_err());
    }

    #[test]
    fn default_tau_matches_the_five_percent_rule() {
        // 5% prior chance of OR >= 2: tau = log 2 / z_{0.95}
        let tau = default_tau();
        assert!((tau - 0.42).abs() < 0.002);
        let z = normal_quantile(0.95).unwrap();
        assert!((tau * z - 2.0f64.ln()).abs() < 1e-12);
    }
}
