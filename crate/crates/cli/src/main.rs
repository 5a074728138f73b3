//! `watchcode`: closed-form calculator, Monte Carlo experiment runner and
//! self-test gate for the coded-watchdog laboratory.
//!
//! Exit codes: 0 ok, 1 usage/config error, 2 no code available,
//! 3 output I/O error, 4 self-test failure.

mod config;
mod manifest;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use watchcode_core::harness::{self, FaultInjection};
use watchcode_core::{analytic, AnalyticError, ExperimentConfig, ExperimentId};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_NO_CODE: i32 = 2;
const EXIT_IO: i32 = 3;
const EXIT_SELFTEST: i32 = 4;

/// Environment variable overriding the default output directory.
const OUT_DIR_ENV: &str = "WATCHCODE_OUT_DIR";

#[derive(Parser)]
#[command(name = "watchcode", version, about = "Coded-watchdog misbehavior-detection laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate closed-form quantities
    Analytic {
        #[command(subcommand)]
        which: AnalyticCmd,
    },
    /// Run an experiment and emit CSV, summary JSON and a manifest
    Experiment {
        /// single-flow | two-flows | hamming | linear-limitation
        name: String,
        /// Configuration file (flat key = value with [sections])
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: $WATCHCODE_OUT_DIR or ./out)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed override
        #[arg(long)]
        seed: Option<u64>,
        /// Trials per grid point (two-flows: delivered-packet target)
        #[arg(long)]
        trials: Option<u64>,
        /// Worker thread cap
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the exhaustive small-instance oracle suite
    Selftest {
        /// Fault-injection hook for testing the gate itself
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

#[derive(Subcommand)]
enum AnalyticCmd {
    /// Per-packet watchdog throughput l_sym / (2 l_sym + m_check)
    Throughput {
        #[arg(long)]
        l_sym: usize,
        #[arg(long, default_value_t = 0)]
        m_check: usize,
    },
    /// Miss-probability bounds for any linear per-packet check
    MissBounds {
        #[arg(long)]
        fq: u32,
        #[arg(long)]
        l_sym: usize,
        #[arg(long)]
        m_check: usize,
    },
    /// Checking symbols needed for a target miss probability
    CheckSymbols {
        #[arg(long)]
        theta: f64,
        /// Report the general-alphabet count for this field order too
        #[arg(long)]
        fq: Option<u32>,
    },
    /// Block miss probability (1 - p_obs)^(n - k + 1)
    PMiss {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        p_obs: f64,
    },
    /// Message length selection floor(n + 1 - beta ln(n) / p_obs)
    SelectK {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p_obs: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Coding rate of the selected encoder
    CodingRate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p_obs: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Two-flow slotted-ALOHA link throughput alpha (1 - alpha)
    AlohaThroughput {
        #[arg(long)]
        alpha: f64,
    },
    /// Watchdog pair-observation probability (1 - alpha)^5
    ObsProb {
        #[arg(long)]
        alpha: f64,
    },
    /// Effective throughput of the adaptive two-flow encoder
    EffectiveThroughput {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
    },
    /// Hamming miss probability in both exponent accountings
    HammingModes {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        p_obs: f64,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    match cli.cmd {
        Cmd::Analytic { which } => cmd_analytic(which),
        Cmd::Experiment { name, config, out, seed, trials, jobs } => {
            cmd_experiment(&name, config, out, seed, trials, jobs)
        }
        Cmd::Selftest { inject_fault } => cmd_selftest(inject_fault),
    }
}

fn usage(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn no_code(err: AnalyticError) -> i32 {
    eprintln!("{err}");
    EXIT_NO_CODE
}

fn cmd_analytic(which: AnalyticCmd) -> i32 {
    match which {
        AnalyticCmd::Throughput { l_sym, m_check } => {
            if l_sym < 1 {
                return usage("l_sym must be at least 1");
            }
            println!("throughput = {}", analytic::throughput_linear_watchdog(l_sym, m_check));
        }
        AnalyticCmd::MissBounds { fq, l_sym, m_check } => {
            if fq < 2 {
                return usage("fq must be at least 2");
            }
            if m_check > l_sym {
                return usage("m_check must not exceed l_sym");
            }
            let (lo, hi) = analytic::linear_miss_bounds(fq, l_sym, m_check);
            println!("p_miss_lower = {lo}");
            println!("p_miss_upper = {hi}");
        }
        AnalyticCmd::CheckSymbols { theta, fq } => {
            if !(0.0 < theta && theta < 1.0) {
                return usage("theta must lie in (0, 1)");
            }
            println!("m_check_binary = {}", analytic::min_check_symbols(theta));
            if let Some(fq) = fq {
                if fq < 2 {
                    return usage("fq must be at least 2");
                }
                println!("m_check_fq = {}", analytic::min_check_symbols_fq(theta, fq));
            }
        }
        AnalyticCmd::PMiss { n, k, p_obs } => {
            if k < 1 || k > n {
                return usage("require 1 <= k <= n");
            }
            if !(0.0..=1.0).contains(&p_obs) {
                return usage("p_obs must lie in [0, 1]");
            }
            println!("p_miss = {}", analytic::p_miss_mds(n, k, p_obs));
        }
        AnalyticCmd::SelectK { n, p_obs, beta } => {
            if let Some(code) = validate_selection(n, p_obs, beta) {
                return code;
            }
            match analytic::select_k(n, p_obs, beta) {
                Ok(k) => println!("k = {k}"),
                Err(e) => return no_code(e),
            }
        }
        AnalyticCmd::CodingRate { n, p_obs, beta } => {
            if let Some(code) = validate_selection(n, p_obs, beta) {
                return code;
            }
            match analytic::coding_rate(n, p_obs, beta) {
                Ok(rate) => {
                    println!("rate_formula = {}", rate.formula);
                    println!("k = {}", rate.k);
                    println!("rate_integer = {}", rate.integer);
                }
                Err(e) => return no_code(e),
            }
        }
        AnalyticCmd::AlohaThroughput { alpha } => {
            if !(0.0..=1.0).contains(&alpha) {
                return usage("alpha must lie in [0, 1]");
            }
            println!("throughput = {}", analytic::aloha_throughput(alpha));
        }
        AnalyticCmd::ObsProb { alpha } => {
            if !(0.0..=1.0).contains(&alpha) {
                return usage("alpha must lie in [0, 1]");
            }
            println!("p_obs = {}", analytic::aloha_obs_prob(alpha));
        }
        AnalyticCmd::EffectiveThroughput { alpha, n, beta } => {
            if !(0.0 < alpha && alpha < 1.0) {
                return usage("alpha must lie in (0, 1)");
            }
            if n < 2 || beta <= 0.0 {
                return usage("require n >= 2 and beta > 0");
            }
            match analytic::effective_throughput(alpha, n, beta) {
                Ok(te) => println!("effective_throughput = {te}"),
                Err(e) => return no_code(e),
            }
        }
        AnalyticCmd::HammingModes { m, p_obs } => {
            if !(2..=10).contains(&m) {
                return usage("m must lie in 2..=10");
            }
            if !(0.0..=1.0).contains(&p_obs) {
                return usage("p_obs must lie in [0, 1]");
            }
            let modes = analytic::p_miss_hamming_modes(m, p_obs);
            let (n, k) = analytic::hamming_params(m);
            println!("n = {n}");
            println!("k = {k}");
            println!("paper_mode = {}", modes.paper_mode);
            println!("dmin_mode = {}", modes.dmin_mode);
        }
    }
    EXIT_OK
}

fn validate_selection(n: usize, p_obs: f64, beta: f64) -> Option<i32> {
    if n < 2 {
        return Some(usage("n must be at least 2"));
    }
    if !(0.0 < p_obs && p_obs <= 1.0) {
        return Some(usage("p_obs must lie in (0, 1]"));
    }
    if beta <= 0.0 {
        return Some(usage("beta must be positive"));
    }
    None
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
    })
}

fn cmd_experiment(
    name: &str,
    config_path: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<u64>,
    jobs: Option<usize>,
) -> i32 {
    let id: ExperimentId = match name.parse() {
        Ok(id) => id,
        Err(e) => return usage(&e),
    };
    if let Some(n) = jobs {
        if n < 1 {
            return usage("jobs must be at least 1");
        }
        // Build the global pool up front; per-cell seeding keeps results
        // identical for any worker count.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return usage(&format!("cannot configure {n} worker threads: {e}"));
        }
    }

    let mut cfg = ExperimentConfig::default_for(id);
    if let Some(path) = &config_path {
        if let Err(e) = config::apply_file(&mut cfg, path) {
            return usage(&e);
        }
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
        if id == ExperimentId::TwoFlows {
            cfg.delivered_target = t;
        }
    }
    if let Err(e) = cfg.validate() {
        return usage(&e.to_string());
    }

    let dir = out_dir(out);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("cannot create output directory {}: {e}", dir.display());
        return EXIT_IO;
    }

    let started_at = chrono::Utc::now().to_rfc3339();
    let wall = Instant::now();
    let summary = match run_experiment(&cfg, &dir) {
        Ok(summary) => summary,
        Err(RunError::Harness(e)) => return usage(&e.to_string()),
        Err(RunError::Io(e)) => {
            eprintln!("cannot write outputs: {e}");
            return EXIT_IO;
        }
    };
    let finished_at = chrono::Utc::now().to_rfc3339();

    let csv_name = format!("{}.csv", id.name());
    let summary_name = format!("{}.summary.json", id.name());
    let outputs = match manifest::RunManifest::digest_outputs(&dir, &[&csv_name, &summary_name]) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("cannot digest outputs: {e}");
            return EXIT_IO;
        }
    };
    let manifest = manifest::RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: id.name().to_string(),
        base_seed: cfg.base_seed,
        started_at,
        finished_at,
        resolved_config: config::resolved_entries(&cfg).into_iter().collect::<BTreeMap<_, _>>(),
        outputs,
    };
    if let Err(e) = manifest.write(&dir.join("manifest.json")) {
        eprintln!("cannot write manifest: {e}");
        return EXIT_IO;
    }

    println!(
        "{}: {} rows, {} checks passed, {} failed, {:.1}s, outputs in {}",
        id.name(),
        summary.rows,
        summary.checks_passed,
        summary.checks_failed,
        wall.elapsed().as_secs_f64(),
        dir.display()
    );
    EXIT_OK
}

enum RunError {
    Harness(harness::HarnessError),
    Io(std::io::Error),
}

impl From<harness::HarnessError> for RunError {
    fn from(e: harness::HarnessError) -> Self {
        RunError::Harness(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<output::Summary, RunError> {
    let csv_path = dir.join(format!("{}.csv", cfg.id.name()));
    let summary_path = dir.join(format!("{}.summary.json", cfg.id.name()));
    let summary = match cfg.id {
        ExperimentId::SingleFlow => {
            let rows = harness::experiment_single_flow(cfg)?;
            output::write_single_flow_csv(&csv_path, &rows)?;
            output::single_flow_summary(cfg, &rows)
        }
        ExperimentId::TwoFlows => {
            let rows = harness::experiment_two_flows(cfg)?;
            output::write_two_flows_csv(&csv_path, &rows)?;
            output::two_flows_summary(cfg, &rows)
        }
        ExperimentId::Hamming => {
            let rows = harness::experiment_hamming(cfg)?;
            output::write_hamming_csv(&csv_path, &rows)?;
            output::hamming_summary(cfg, &rows)
        }
        ExperimentId::LinearLimitation => {
            let rows = harness::experiment_linear_limitation(cfg)?;
            output::write_linear_limitation_csv(&csv_path, &rows)?;
            output::linear_limitation_summary(cfg, &rows)
        }
    };
    summary.write(&summary_path)?;
    Ok(summary)
}

fn cmd_selftest(inject_fault: Option<String>) -> i32 {
    let fault = match inject_fault.as_deref() {
        None => FaultInjection::None,
        Some("gh-mismatch") => FaultInjection::CorruptGenerator,
        Some(other) => return usage(&format!("unknown fault '{other}' (expected gh-mismatch)")),
    };
    let wall = Instant::now();
    let checks = harness::selftest(fault);
    let mut all_pass = true;
    for c in &checks {
        let tag = if c.pass { " ok " } else { "FAIL" };
        all_pass &= c.pass;
        if c.detail.is_empty() {
            println!("[{tag}] {}", c.name);
        } else {
            println!("[{tag}] {} ({})", c.name, c.detail);
        }
    }
    println!(
        "selftest: {}/{} checks passed in {:.2}s",
        checks.iter().filter(|c| c.pass).count(),
        checks.len(),
        wall.elapsed().as_secs_f64()
    );
    if all_pass {
        EXIT_OK
    } else {
        EXIT_SELFTEST
    }
}
