//! Monte Carlo experiment runner: confidence-interval estimators, the
//! reproducible seeding scheme, the four experiment families emitted by
//! the command-line tool, and the exhaustive self-test suite.
//!
//! Reproducibility contract: every random consumer is a ChaCha8 stream
//! seeded through [`derive_seed`], a fixed splitmix64 hash of (base seed,
//! point index, trial index). Grid points and trials are therefore
//! independent of execution order and can run on any number of worker
//! threads without changing a single output bit.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::analytic;
use crate::codec::{Code, CodecError, Detection};
use crate::field::{Field, FieldError};
use crate::linalg::{random_vector, Matrix};
use crate::protocol::{
    self, AttackerStrategy, BlockVerdict, CheckOutcome, LinearChecker, ObservationModel,
    ProtocolError,
};
use crate::simnet;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The project-wide seed derivation: hash(base seed, point index, trial
/// index) through chained splitmix64 rounds. Feeds `ChaCha8Rng`.
pub fn derive_seed(base: u64, point: u64, trial: u64) -> u64 {
    mix64(mix64(mix64(base) ^ point) ^ trial)
}

/// ChaCha8 stream for one (point, trial) cell.
pub fn trial_rng(base: u64, point: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, point, trial))
}

const Z95: f64 = 1.959963984540054;

/// A Bernoulli proportion estimate with standard error and 95% interval.
/// The interval is the normal approximation clamped to [0,1], switching
/// to the Wilson score interval when fewer than 10 successes were seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub successes: u64,
    pub seed: u64,
}

impl EstimateWithCI {
    pub fn from_bernoulli(successes: u64, trials: u64, seed: u64) -> EstimateWithCI {
        assert!(trials >= 1);
        assert!(successes <= trials);
        let n = trials as f64;
        let p_hat = successes as f64 / n;
        let std_error = (p_hat * (1.0 - p_hat) / n).sqrt();
        let (ci_low, ci_high) = if successes < 10 {
            let z2 = Z95 * Z95;
            let denom = 1.0 + z2 / n;
            let center = (p_hat + z2 / (2.0 * n)) / denom;
            let half = Z95 * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
            // At p_hat = 0 the lower endpoint is exactly 0 on paper; keep
            // rounding from pushing it past the point estimate.
            ((center - half).max(0.0).min(p_hat), (center + half).min(1.0).max(p_hat))
        } else {
            ((p_hat - Z95 * std_error).max(0.0), (p_hat + Z95 * std_error).min(1.0))
        };
        EstimateWithCI { estimate: p_hat, std_error, ci_low, ci_high, trials, successes, seed }
    }

    /// Agreement test against a known value: |estimate - p| within three
    /// standard errors computed under p itself.
    pub fn agrees_within_3se(&self, p: f64) -> bool {
        let se = (p * (1.0 - p) / self.trials as f64).sqrt();
        (self.estimate - p).abs() <= 3.0 * se
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Fraction of blocks on which the attacker evades both the watchdog and
/// the decoder. Trials are independent ChaCha8 streams derived from
/// `seed`, summed in any order.
pub fn estimate_p_miss(
    code: &Arc<Code>,
    strategy: &AttackerStrategy,
    observation: &ObservationModel,
    lanes: usize,
    trials: u64,
    seed: u64,
) -> Result<EstimateWithCI, ProtocolError> {
    let missed = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u64, ProtocolError> {
            let mut rng = trial_rng(seed, 0, t);
            let outcome = protocol::run_block(code, Some(strategy), observation, lanes, &mut rng)?;
            Ok((outcome.verdict == BlockVerdict::Missed) as u64)
        })
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    Ok(EstimateWithCI::from_bernoulli(missed, trials, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    SingleFlow,
    TwoFlows,
    Hamming,
    LinearLimitation,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::SingleFlow => "single-flow",
            ExperimentId::TwoFlows => "two-flows",
            ExperimentId::Hamming => "hamming",
            ExperimentId::LinearLimitation => "linear-limitation",
        }
    }

    pub fn all() -> [ExperimentId; 4] {
        [
            ExperimentId::SingleFlow,
            ExperimentId::TwoFlows,
            ExperimentId::Hamming,
            ExperimentId::LinearLimitation,
        ]
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single-flow" => Ok(ExperimentId::SingleFlow),
            "two-flows" => Ok(ExperimentId::TwoFlows),
            "hamming" => Ok(ExperimentId::Hamming),
            "linear-limitation" => Ok(ExperimentId::LinearLimitation),
            other => Err(format!(
                "unknown experiment '{other}' (expected single-flow, two-flows, hamming or linear-limitation)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeFamily {
    ReedSolomon,
    Hamming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackerMode {
    MinWeightForgery,
    RawCorruption(usize),
}

impl AttackerMode {
    fn to_strategy(self) -> AttackerStrategy {
        match self {
            AttackerMode::MinWeightForgery => AttackerStrategy::MinWeightForgery,
            AttackerMode::RawCorruption(c) => AttackerStrategy::RawCorruption { positions: c },
        }
    }
}

/// Full parameterization of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub n_list: Vec<usize>,
    pub beta_list: Vec<f64>,
    pub p_obs_list: Vec<f64>,
    pub alpha_list: Vec<f64>,
    pub m_list: Vec<u32>,
    pub l_sym: usize,
    pub m_check_list: Vec<usize>,
    pub matrices_per_m: usize,
    pub lanes: usize,
    pub trials: u64,
    pub delivered_target: u64,
    pub base_seed: u64,
    pub code_family: CodeFamily,
    pub attacker: AttackerMode,
    /// Fixed message length; when unset, the selection rule picks k.
    pub fixed_k: Option<usize>,
}

pub fn default_alpha_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).collect()
}

pub fn default_p_obs_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 * 0.1).collect()
}

impl ExperimentConfig {
    pub fn default_for(id: ExperimentId) -> ExperimentConfig {
        ExperimentConfig {
            id,
            n_list: vec![15, 63, 255],
            beta_list: vec![1.0, 2.0],
            p_obs_list: default_p_obs_grid(),
            alpha_list: default_alpha_grid(),
            m_list: vec![2, 3, 4, 5],
            l_sym: 8,
            m_check_list: (1..=8).collect(),
            matrices_per_m: 5,
            lanes: 1,
            trials: 20_000,
            delivered_target: 100_000,
            base_seed: 8,
            code_family: match id {
                ExperimentId::Hamming => CodeFamily::Hamming,
                _ => CodeFamily::ReedSolomon,
            },
            attacker: AttackerMode::MinWeightForgery,
            fixed_k: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.trials < 1 {
            return fail("trials must be at least 1".into());
        }
        if self.lanes < 1 {
            return fail("lanes must be at least 1".into());
        }
        match self.id {
            ExperimentId::SingleFlow => {
                if self.n_list.is_empty() || self.beta_list.is_empty() || self.p_obs_list.is_empty()
                {
                    return fail("single-flow needs non-empty n, beta and p_obs grids".into());
                }
                if self.p_obs_list.iter().any(|p| !(0.0 < *p && *p <= 1.0)) {
                    return fail("p_obs grid must lie in (0, 1]".into());
                }
            }
            ExperimentId::TwoFlows | ExperimentId::Hamming => {
                if self.alpha_list.is_empty() {
                    return fail("alpha grid must be non-empty".into());
                }
                if self.alpha_list.iter().any(|a| !(0.0 < *a && *a <= 0.5)) {
                    return fail("alpha grid must lie in (0, 0.5]".into());
                }
                if self.id == ExperimentId::TwoFlows
                    && (self.n_list.is_empty() || self.beta_list.is_empty())
                {
                    return fail("two-flows needs non-empty n and beta grids".into());
                }
                if self.id == ExperimentId::Hamming
                    && (self.m_list.is_empty()
                        || self.m_list.iter().any(|m| !(2..=10).contains(m)))
                {
                    return fail("hamming orders must be a non-empty subset of 2..=10".into());
                }
                if self.id == ExperimentId::TwoFlows && self.delivered_target < 1 {
                    return fail("delivered_target must be at least 1".into());
                }
            }
            ExperimentId::LinearLimitation => {
                if self.l_sym < 1 || self.l_sym > 12 {
                    return fail("exhaustive checker scan needs 1 <= l_sym <= 12".into());
                }
                if self.m_check_list.is_empty()
                    || self.m_check_list.iter().any(|m| *m < 1 || *m > self.l_sym)
                {
                    return fail("m_check grid must be a non-empty subset of 1..=l_sym".into());
                }
                if self.matrices_per_m < 1 {
                    return fail("matrices_per_m must be at least 1".into());
                }
            }
        }
        if self.beta_list.iter().any(|b| *b <= 0.0) {
            return fail("beta grid must be positive".into());
        }
        Ok(())
    }
}

/// Smallest binary field that can host an n-point evaluation code.
pub fn rs_field_for(n: usize) -> Result<Arc<Field>, HarnessError> {
    let mut width = 1u32;
    while (1usize << width) < n {
        width += 1;
        if width > 16 {
            return Err(HarnessError::Config(format!(
                "no supported field can host a block length of {n}"
            )));
        }
    }
    Ok(Field::binary(width)?)
}

// ---------------------------------------------------------------------------
// single-flow experiment

#[derive(Debug, Clone)]
pub struct SingleFlowRow {
    pub n: usize,
    pub beta: f64,
    pub p_obs: f64,
    pub k: Option<usize>,
    pub analytic_p_miss: Option<f64>,
    /// The n^(-beta) guarantee the selection rule targets.
    pub bound_poly: f64,
    pub sim: Option<EstimateWithCI>,
    pub within_3se: Option<bool>,
    pub meets_bound: Option<bool>,
}

impl SingleFlowRow {
    pub fn available(&self) -> bool {
        self.k.is_some()
    }
}

/// Miss probability curves over (n, beta, p_obs) with the selected (or
/// fixed) message length, analytic value against Monte Carlo estimate.
pub fn experiment_single_flow(cfg: &ExperimentConfig) -> Result<Vec<SingleFlowRow>, HarnessError> {
    cfg.validate()?;
    let mut grid: Vec<(usize, f64, f64)> = Vec::new();
    for &n in &cfg.n_list {
        for &beta in &cfg.beta_list {
            for &p_obs in &cfg.p_obs_list {
                grid.push((n, beta, p_obs));
            }
        }
    }
    grid.par_iter()
        .enumerate()
        .map(|(idx, &(n, beta, p_obs))| {
            let row_seed = derive_seed(cfg.base_seed, idx as u64, 0);
            let bound_poly = (n as f64).powf(-beta);
            let selected = match cfg.fixed_k {
                Some(k) if k >= 1 && k < n => Some(k),
                Some(_) => None,
                None => analytic::select_k(n, p_obs, beta).ok(),
            };
            let Some(k) = selected else {
                return Ok(SingleFlowRow {
                    n,
                    beta,
                    p_obs,
                    k: None,
                    analytic_p_miss: None,
                    bound_poly,
                    sim: None,
                    within_3se: None,
                    meets_bound: None,
                });
            };
            let code = Arc::new(make_code(cfg.code_family, n, k)?);
            let analytic_p = analytic::p_miss_mds(n, k, p_obs);
            let est = estimate_p_miss(
                &code,
                &cfg.attacker.to_strategy(),
                &ObservationModel::Bernoulli(p_obs),
                cfg.lanes,
                cfg.trials,
                row_seed,
            )?;
            Ok(SingleFlowRow {
                n,
                beta,
                p_obs,
                k: Some(k),
                analytic_p_miss: Some(analytic_p),
                bound_poly,
                within_3se: Some(est.agrees_within_3se(analytic_p)),
                meets_bound: Some(analytic_p <= bound_poly + 1e-15),
                sim: Some(est),
            })
        })
        .collect()
}

fn make_code(family: CodeFamily, n: usize, k: usize) -> Result<Code, HarnessError> {
    match family {
        CodeFamily::ReedSolomon => Ok(Code::reed_solomon(rs_field_for(n)?, n, k)?),
        CodeFamily::Hamming => {
            let m = (n + 1).trailing_zeros();
            if (1usize << m) - 1 != n || n - k != m as usize {
                return Err(HarnessError::Config(format!(
                    "({n}, {k}) is not a hamming parameter pair"
                )));
            }
            Ok(Code::hamming(m))
        }
    }
}

// ---------------------------------------------------------------------------
// two-flows experiment

#[derive(Debug, Clone)]
pub struct TwoFlowsRow {
    pub alpha: f64,
    pub n: usize,
    pub beta: f64,
    /// (1 - alpha)^5.
    pub p_obs: f64,
    pub k: Option<usize>,
    pub analytic_p_miss: Option<f64>,
    pub analytic_effective: Option<f64>,
    pub slots: u64,
    pub delivered: u64,
    pub q_hat: f64,
    pub q_within_3se: bool,
    pub blocks: Option<u64>,
    pub sim_p_miss: Option<EstimateWithCI>,
    pub p_within_3se: Option<bool>,
    pub sim_effective: Option<f64>,
}

impl TwoFlowsRow {
    pub fn available(&self) -> bool {
        self.k.is_some()
    }
}

fn slots_for_target(target: u64, alpha: f64) -> u64 {
    let rate = alpha * (1.0 - alpha);
    (target as f64 / rate * 1.08).ceil() as u64 + 1000
}

/// Two-flow curves over (alpha, n, beta): channel simulation for the
/// pair-observation probability, block games driven by the simulated
/// observation records for the miss probability, and throughput
/// accounting. Rows where the selection rule fails carry only the
/// channel measurements.
pub fn experiment_two_flows(cfg: &ExperimentConfig) -> Result<Vec<TwoFlowsRow>, HarnessError> {
    cfg.validate()?;
    let mut grid: Vec<(f64, usize, f64)> = Vec::new();
    for &n in &cfg.n_list {
        for &beta in &cfg.beta_list {
            for &alpha in &cfg.alpha_list {
                grid.push((alpha, n, beta));
            }
        }
    }
    grid.par_iter()
        .enumerate()
        .map(|(idx, &(alpha, n, beta))| {
            let row_seed = derive_seed(cfg.base_seed, idx as u64, 0);
            let p_obs = analytic::aloha_obs_prob(alpha);
            let slots = slots_for_target(cfg.delivered_target, alpha);
            let stats = simnet::run_sim(alpha, slots, row_seed);
            let q_est =
                EstimateWithCI::from_bernoulli(stats.comparable_flow1, stats.delivered_flow1, row_seed);
            let q_within = q_est.agrees_within_3se(p_obs);

            let Some(k) = analytic::select_k(n, p_obs, beta).ok() else {
                return Ok(TwoFlowsRow {
                    alpha,
                    n,
                    beta,
                    p_obs,
                    k: None,
                    analytic_p_miss: None,
                    analytic_effective: None,
                    slots,
                    delivered: stats.delivered_flow1,
                    q_hat: q_est.estimate,
                    q_within_3se: q_within,
                    blocks: None,
                    sim_p_miss: None,
                    p_within_3se: None,
                    sim_effective: None,
                });
            };

            let code = Arc::new(Code::reed_solomon(rs_field_for(n)?, n, k)?);
            let strategy = cfg.attacker.to_strategy();
            let blocks: Vec<BTreeSet<usize>> = stats
                .records
                .chunks_exact(n)
                .map(|chunk| {
                    chunk
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| r.comparable())
                        .map(|(j, _)| j)
                        .collect()
                })
                .collect();
            let missed = blocks
                .par_iter()
                .enumerate()
                .map(|(b, observed)| -> Result<u64, ProtocolError> {
                    let mut rng = trial_rng(cfg.base_seed, idx as u64, 1 + b as u64);
                    let outcome = protocol::run_block(
                        &code,
                        Some(&strategy),
                        &ObservationModel::Fixed(observed.clone()),
                        cfg.lanes,
                        &mut rng,
                    )?;
                    Ok((outcome.verdict == BlockVerdict::Missed) as u64)
                })
                .try_reduce(|| 0u64, |a, b| Ok(a + b))
                .map_err(HarnessError::Protocol)?;
            let est = EstimateWithCI::from_bernoulli(missed, blocks.len() as u64, row_seed);
            let analytic_p = analytic::p_miss_mds(n, k, p_obs);
            let analytic_te = analytic::effective_throughput(alpha, n, beta).ok();
            let rate = k as f64 / n as f64;
            Ok(TwoFlowsRow {
                alpha,
                n,
                beta,
                p_obs,
                k: Some(k),
                analytic_p_miss: Some(analytic_p),
                analytic_effective: analytic_te,
                slots,
                delivered: stats.delivered_flow1,
                q_hat: q_est.estimate,
                q_within_3se: q_within,
                blocks: Some(blocks.len() as u64),
                p_within_3se: Some(est.agrees_within_3se(analytic_p)),
                sim_p_miss: Some(est),
                sim_effective: Some(stats.delivered_flow1 as f64 * rate / slots as f64),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// hamming experiment

#[derive(Debug, Clone)]
pub struct HammingRow {
    pub m: u32,
    pub n: usize,
    pub k: usize,
    pub rate: f64,
    pub alpha: f64,
    /// (1 - alpha)^5.
    pub p_obs: f64,
    /// Miss probability under the MDS parity-budget exponent m + 1.
    pub paper_mode: f64,
    /// Miss probability under the true minimum distance exponent 3.
    pub dmin_mode: f64,
    pub sim: EstimateWithCI,
    pub matches_dmin: bool,
    pub matches_paper: bool,
    pub effective: f64,
}

/// Fixed (non-adaptive) Hamming encoders over the alpha grid. The
/// simulated attacker uses the true minimum distance, so the estimate
/// tracks `dmin_mode`; `paper_mode` is emitted alongside to document how
/// far the MDS accounting overstates detection for m >= 3.
pub fn experiment_hamming(cfg: &ExperimentConfig) -> Result<Vec<HammingRow>, HarnessError> {
    cfg.validate()?;
    let mut grid: Vec<(u32, f64)> = Vec::new();
    for &m in &cfg.m_list {
        for &alpha in &cfg.alpha_list {
            grid.push((m, alpha));
        }
    }
    grid.par_iter()
        .enumerate()
        .map(|(idx, &(m, alpha))| {
            let row_seed = derive_seed(cfg.base_seed, idx as u64, 0);
            let (n, k) = analytic::hamming_params(m);
            let p_obs = analytic::aloha_obs_prob(alpha);
            let modes = analytic::p_miss_hamming_modes(m, p_obs);
            let code = Arc::new(Code::hamming(m));
            let est = estimate_p_miss(
                &code,
                &cfg.attacker.to_strategy(),
                &ObservationModel::Bernoulli(p_obs),
                cfg.lanes,
                cfg.trials,
                row_seed,
            )?;
            let rate = k as f64 / n as f64;
            Ok(HammingRow {
                m,
                n,
                k,
                rate,
                alpha,
                p_obs,
                paper_mode: modes.paper_mode,
                dmin_mode: modes.dmin_mode,
                matches_dmin: est.agrees_within_3se(modes.dmin_mode),
                matches_paper: est.agrees_within_3se(modes.paper_mode),
                sim: est,
                effective: analytic::aloha_throughput(alpha) * rate,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// linear-limitation experiment

#[derive(Debug, Clone)]
pub struct LinearLimitationRow {
    pub l_sym: usize,
    pub m_check: usize,
    pub matrix_index: usize,
    pub rank: usize,
    pub nullity: usize,
    pub misses: u64,
    pub total_errors: u64,
    pub miss_rate: f64,
    pub lower_bound: f64,
    /// Misses equal the kernel count 2^nullity - 1 exactly.
    pub exact_kernel_match: bool,
    pub within_bounds: bool,
    pub nonlinear_misses: u64,
    pub throughput_linear: f64,
    pub throughput_nonlinear: f64,
}

/// Exhaustive audit of random linear checkers over GF(2): for every
/// nonzero error the round trip either accepts (a miss) or rejects, and
/// the miss count must equal the kernel size minus one. The one-symbol
/// equality check runs over the same errors and must never miss. The
/// bandwidth columns compare m_check checking symbols against the single
/// symbol the equality check needs.
pub fn experiment_linear_limitation(
    cfg: &ExperimentConfig,
) -> Result<Vec<LinearLimitationRow>, HarnessError> {
    cfg.validate()?;
    let field = Field::gf2();
    let l = cfg.l_sym;
    let total = (1u64 << l) - 1;
    let mut grid: Vec<(usize, usize)> = Vec::new();
    for &m_check in &cfg.m_check_list {
        for i in 0..cfg.matrices_per_m {
            grid.push((m_check, i));
        }
    }
    grid.par_iter()
        .enumerate()
        .map(|(idx, &(m_check, matrix_index))| {
            let mut rng = trial_rng(cfg.base_seed, idx as u64, 0);
            let checker = LinearChecker::random(field.clone(), m_check, l, &mut rng);
            let p = random_vector(&field, l, &mut rng);
            let rank = checker.check_matrix().rank();
            let nullity = l - rank;
            let mut misses = 0u64;
            let mut nonlinear_misses = 0u64;
            for bits in 1..=total {
                let fwd: Vec<_> = (0..l)
                    .map(|i| field.add(p[i], field.fe((bits >> i & 1) as u32)))
                    .collect();
                if protocol::linear_check_roundtrip(&checker, &p, &fwd)? == CheckOutcome::Accept {
                    misses += 1;
                }
                if protocol::nonlinear_check(&p, &fwd)? == CheckOutcome::Accept {
                    nonlinear_misses += 1;
                }
            }
            let miss_rate = misses as f64 / total as f64;
            let (lower, upper) = analytic::linear_miss_bounds(2, l, m_check);
            Ok(LinearLimitationRow {
                l_sym: l,
                m_check,
                matrix_index,
                rank,
                nullity,
                misses,
                total_errors: total,
                miss_rate,
                lower_bound: lower,
                exact_kernel_match: misses == (1u64 << nullity) - 1,
                within_bounds: miss_rate >= lower - 1e-12 && miss_rate <= upper + 1e-12,
                nonlinear_misses,
                throughput_linear: analytic::throughput_linear_watchdog(l, m_check),
                throughput_nonlinear: analytic::throughput_linear_watchdog(l, 1),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// self-test suite

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultInjection {
    None,
    /// Corrupt one generator entry before the consistency checks; the
    /// suite must then fail.
    CorruptGenerator,
}

#[derive(Debug, Clone)]
pub struct SelfCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> SelfCheck {
    SelfCheck { name: name.to_string(), pass, detail }
}

/// Exhaustive small-instance oracle suite: field axioms, parity
/// consistency of every shipped code family, minimum distances by
/// enumeration, kernel verification, and syndrome screening.
pub fn selftest(fault: FaultInjection) -> Vec<SelfCheck> {
    let mut out = Vec::new();

    // Field axioms, exhaustive for every supported order up to 16.
    {
        let fields: Vec<Arc<Field>> = vec![
            Field::binary(1).unwrap(),
            Field::binary(2).unwrap(),
            Field::binary(3).unwrap(),
            Field::binary(4).unwrap(),
            Field::prime(3).unwrap(),
            Field::prime(5).unwrap(),
            Field::prime(7).unwrap(),
            Field::prime(11).unwrap(),
            Field::prime(13).unwrap(),
        ];
        let mut ok = true;
        let mut triples = 0u64;
        for f in &fields {
            for a in f.elements() {
                for b in f.elements() {
                    for c in f.elements() {
                        triples += 1;
                        ok &= f.add(f.add(a, b), c) == f.add(a, f.add(b, c));
                        ok &= f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c));
                        ok &= f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c));
                    }
                }
                if !a.is_zero() {
                    ok &= f.mul(a, f.inv(a).unwrap()) == f.one();
                }
            }
        }
        out.push(check(
            "field axioms exhaustive (fq <= 16)",
            ok,
            format!("{} fields, {} triples", fields.len(), triples),
        ));
    }

    // Larger fields: all inverses plus sampled associativity.
    {
        let mut ok = true;
        for f in [Field::binary(8).unwrap(), Field::prime(251).unwrap(), Field::binary(16).unwrap()]
        {
            for a in f.nonzero_elements() {
                ok &= f.mul(a, f.inv(a).unwrap()) == f.one();
            }
        }
        out.push(check("field inverses (GF(256), GF(251), GF(65536))", ok, String::new()));
    }

    // Generator/parity-check consistency across all shipped code shapes.
    {
        let parity = {
            let f = Field::gf2();
            Matrix::from_rows(f.clone(), &[vec![f.fe(1), f.fe(1), f.fe(1)]])
        };
        let mut codes: Vec<Code> = vec![
            Code::from_parity_check(parity).unwrap(),
            Code::reed_solomon(Field::prime(7).unwrap(), 6, 3).unwrap(),
            Code::reed_solomon(Field::binary(4).unwrap(), 15, 11).unwrap(),
            Code::reed_solomon(Field::binary(6).unwrap(), 63, 47).unwrap(),
            Code::reed_solomon(Field::binary(8).unwrap(), 255, 223).unwrap(),
        ];
        for m in 2..=6 {
            codes.push(Code::hamming(m));
        }
        if fault == FaultInjection::CorruptGenerator {
            codes[2].inject_generator_fault();
        }
        let mut ok = true;
        let mut bad = String::new();
        for code in &codes {
            let zero = code.generator().matmul(&code.parity_check().transpose()).is_zero();
            if !zero {
                ok = false;
                bad = format!("G H^T != 0 for {:?}", code);
            }
        }
        out.push(check(
            "generator/parity consistency (G H^T = 0)",
            ok,
            if ok { format!("{} codes", codes.len()) } else { bad },
        ));
    }

    // Reed-Solomon minimum distance by exhaustive enumeration.
    {
        let rs63 = Code::reed_solomon(Field::prime(7).unwrap(), 6, 3).unwrap();
        let rs52 = Code::reed_solomon(Field::prime(5).unwrap(), 5, 2).unwrap();
        let d63 = rs63.min_distance_exhaustive().unwrap();
        let d52 = rs52.min_distance_exhaustive().unwrap();
        let ok = d63 == 4 && d63 == rs63.d_min() && d52 == 4 && d52 == rs52.d_min();
        out.push(check(
            "reed-solomon minimum distance enumeration",
            ok,
            format!("(6,3)/GF(7): {d63}, (5,2)/GF(5): {d52}"),
        ));
    }

    // Hamming minimum distance by exhaustive enumeration.
    {
        let mut ok = true;
        for m in 2..=4 {
            let code = Code::hamming(m);
            ok &= code.min_distance_exhaustive().unwrap() == 3;
        }
        out.push(check("hamming minimum distance enumeration", ok, "m = 2, 3, 4".into()));
    }

    // Null spaces: basis verification plus exhaustive kernel counting.
    {
        let f = Field::gf2();
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let mut ok = true;
        for _ in 0..25 {
            use rand::Rng;
            let rows = rng.random_range(1..5);
            let cols = rng.random_range(1..8);
            let m = Matrix::random(f.clone(), rows, cols, &mut rng);
            let basis = m.null_space();
            ok &= m.rank() + basis.len() == cols;
            for v in &basis {
                ok &= m.mul_vec(v).iter().all(|e| e.is_zero());
            }
            let mut kernel = 0u64;
            for bits in 0..(1u64 << cols) {
                let v: Vec<_> = (0..cols).map(|i| f.fe((bits >> i & 1) as u32)).collect();
                if m.mul_vec(&v).iter().all(|e| e.is_zero()) {
                    kernel += 1;
                }
            }
            ok &= kernel == 1u64 << basis.len();
        }
        out.push(check("null-space exhaustive verification", ok, "25 random GF(2) matrices".into()));
    }

    // Syndrome screening catches every sub-distance corruption.
    {
        let f = Field::prime(7).unwrap();
        let code = Arc::new(Code::reed_solomon(f.clone(), 6, 3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
        let block = crate::codec::Block::random(code.clone(), 0, 1, &mut rng);
        let mut ok = true;
        let mut cases = 0u64;
        for support_bits in 1u32..64 {
            if support_bits.count_ones() > 3 {
                continue;
            }
            let support: Vec<usize> = (0..6).filter(|j| support_bits >> j & 1 == 1).collect();
            let mut deltas = vec![1u32; support.len()];
            loop {
                let mut tampered = block.codeword.clone();
                for (i, &pos) in support.iter().enumerate() {
                    tampered[pos].symbols[0] = f.add(tampered[pos].symbols[0], f.fe(deltas[i]));
                }
                ok &= code.detect(&tampered).unwrap() == Detection::Tampered;
                cases += 1;
                let mut i = 0;
                loop {
                    if i == deltas.len() {
                        break;
                    }
                    deltas[i] += 1;
                    if deltas[i] < 7 {
                        break;
                    }
                    deltas[i] = 1;
                    i += 1;
                }
                if deltas.iter().all(|&d| d == 1) {
                    break;
                }
            }
        }
        out.push(check(
            "syndrome screening of sub-distance corruptions",
            ok,
            format!("{cases} exhaustive cases on (6,3)/GF(7)"),
        ));
    }

    // Forgeries stay clean and touch exactly d_min packets.
    {
        let rs = Arc::new(Code::reed_solomon(Field::prime(7).unwrap(), 6, 3).unwrap());
        let ham = Arc::new(Code::hamming(3));
        let mut rng = ChaCha8Rng::seed_from_u64(0xFACE);
        let mut ok = true;
        for code in [&rs, &ham] {
            for trial in 0..1000u64 {
                let block = crate::codec::Block::random((*code).clone(), trial, 1, &mut rng);
                let plan = code.min_weight_forgery(1, &mut rng);
                let tampered = plan.apply(code.field(), &block.codeword);
                ok &= plan.support.len() == code.d_min();
                ok &= code.detect(&tampered).unwrap() == Detection::Clean;
            }
        }
        out.push(check("minimum-weight forgeries evade the decoder", ok, "2000 forgeries".into()));
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_is_stable_and_sensitive() {
        let a = derive_seed(42, 0, 0);
        assert_eq!(a, derive_seed(42, 0, 0));
        assert_ne!(a, derive_seed(42, 0, 1));
        assert_ne!(a, derive_seed(42, 1, 0));
        assert_ne!(a, derive_seed(43, 0, 0));
    }

    #[test]
    fn estimate_zero_when_watchdog_is_perfect() {
        let code = Arc::new(Code::reed_solomon(Field::binary(4).unwrap(), 15, 11).unwrap());
        let est = estimate_p_miss(
            &code,
            &AttackerStrategy::MinWeightForgery,
            &ObservationModel::Bernoulli(1.0),
            1,
            2000,
            7,
        )
        .unwrap();
        assert_eq!(est.successes, 0);
        assert_eq!(est.estimate, 0.0);
    }

    #[test]
    fn estimate_matches_mds_formula_rs_15_11() {
        let code = Arc::new(Code::reed_solomon(Field::binary(4).unwrap(), 15, 11).unwrap());
        let est = estimate_p_miss(
            &code,
            &AttackerStrategy::MinWeightForgery,
            &ObservationModel::Bernoulli(0.3),
            1,
            50_000,
            11,
        )
        .unwrap();
        assert!(est.agrees_within_3se(0.16807), "estimate {}", est.estimate);
    }

    #[test]
    fn estimate_is_deterministic_and_seed_sensitive() {
        let code = Arc::new(Code::hamming(3));
        let run = |seed| {
            estimate_p_miss(
                &code,
                &AttackerStrategy::MinWeightForgery,
                &ObservationModel::Bernoulli(0.5),
                1,
                5000,
                seed,
            )
            .unwrap()
        };
        assert_eq!(run(3).successes, run(3).successes);
        assert_ne!(run(3).successes, run(4).successes);
    }

    #[test]
    fn ci_contains_point_estimate() {
        for (s, n) in [(0u64, 100u64), (3, 100), (9, 10_000), (50, 100), (100, 100)] {
            let e = EstimateWithCI::from_bernoulli(s, n, 0);
            assert!(e.ci_low <= e.estimate && e.estimate <= e.ci_high, "s={s} n={n}");
            assert!(e.ci_low >= 0.0 && e.ci_high <= 1.0);
        }
    }

    #[test]
    fn ci_coverage_calibration() {
        // 1000 repetitions of a Bernoulli(0.3) stream with 1000 draws
        // each: the 95% interval must cover the truth at least 93% of
        // the time.
        use rand::Rng;
        let p = 0.3;
        let mut covered = 0;
        for rep in 0..1000u64 {
            let mut rng = trial_rng(1234, rep, 0);
            let successes = (0..1000).filter(|_| rng.random_bool(p)).count() as u64;
            let est = EstimateWithCI::from_bernoulli(successes, 1000, rep);
            if est.contains(p) {
                covered += 1;
            }
        }
        assert!(covered >= 930, "covered {covered} of 1000");
    }

    #[test]
    fn wilson_kicks_in_for_rare_events() {
        let e = EstimateWithCI::from_bernoulli(0, 10_000, 0);
        assert_eq!(e.estimate, 0.0);
        assert_eq!(e.std_error, 0.0);
        assert!(e.ci_high > 0.0, "rare-event interval must not collapse");
        let e = EstimateWithCI::from_bernoulli(2, 10_000, 0);
        assert!(e.ci_low < e.estimate && e.ci_high > e.estimate);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::SingleFlow);
        assert!(cfg.validate().is_ok());
        cfg.p_obs_list.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default_for(ExperimentId::TwoFlows);
        cfg.alpha_list = vec![0.7];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default_for(ExperimentId::LinearLimitation);
        cfg.l_sym = 40;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rs_field_choice() {
        assert_eq!(rs_field_for(15).unwrap().order(), 16);
        assert_eq!(rs_field_for(16).unwrap().order(), 16);
        assert_eq!(rs_field_for(63).unwrap().order(), 64);
        assert_eq!(rs_field_for(255).unwrap().order(), 256);
        assert!(rs_field_for(70_000).is_err());
    }

    #[test]
    fn single_flow_small_grid() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::SingleFlow);
        cfg.n_list = vec![15];
        cfg.beta_list = vec![1.0];
        cfg.p_obs_list = vec![0.3, 0.6];
        cfg.trials = 4000;
        let rows = experiment_single_flow(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.available());
            assert_eq!(row.within_3se, Some(true));
            assert_eq!(row.meets_bound, Some(true));
        }
    }

    #[test]
    fn single_flow_marks_unavailable_rows() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::SingleFlow);
        cfg.n_list = vec![15];
        cfg.beta_list = vec![2.0];
        cfg.p_obs_list = vec![0.1];
        cfg.trials = 10;
        let rows = experiment_single_flow(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(!rows[0].available());
        assert!(rows[0].sim.is_none());
    }

    #[test]
    fn hamming_rows_track_dmin_mode() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::Hamming);
        cfg.m_list = vec![3];
        cfg.alpha_list = vec![0.1, 0.2];
        cfg.trials = 20_000;
        let rows = experiment_hamming(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.matches_dmin, "m={} alpha={}", row.m, row.alpha);
            assert!(row.paper_mode <= row.dmin_mode);
        }
    }

    #[test]
    fn linear_limitation_exact_kernel_counts() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::LinearLimitation);
        cfg.l_sym = 6;
        cfg.m_check_list = vec![1, 3, 6];
        cfg.matrices_per_m = 3;
        let rows = experiment_linear_limitation(&cfg).unwrap();
        assert_eq!(rows.len(), 9);
        for row in &rows {
            assert!(row.exact_kernel_match);
            assert!(row.within_bounds);
            assert_eq!(row.nonlinear_misses, 0);
            assert!(row.throughput_nonlinear >= row.throughput_linear);
        }
    }

    #[test]
    fn two_flows_tiny_run() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::TwoFlows);
        cfg.n_list = vec![15];
        cfg.beta_list = vec![1.0];
        cfg.alpha_list = vec![0.2];
        cfg.delivered_target = 20_000;
        let rows = experiment_two_flows(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert!(row.available());
        assert!(row.q_within_3se, "q_hat {} vs {}", row.q_hat, row.p_obs);
        assert!(row.blocks.unwrap() > 1000);
        assert_eq!(row.p_within_3se, Some(true));
        assert!(row.sim_effective.unwrap() > 0.0);
    }

    #[test]
    fn selftest_all_green() {
        let checks = selftest(FaultInjection::None);
        for c in &checks {
            assert!(c.pass, "{} failed: {}", c.name, c.detail);
        }
        assert!(checks.len() >= 7);
    }

    #[test]
    fn selftest_fault_injection_trips_parity_check() {
        let checks = selftest(FaultInjection::CorruptGenerator);
        let parity = checks
            .iter()
            .find(|c| c.name.contains("generator/parity"))
            .expect("parity check present");
        assert!(!parity.pass);
    }
}
