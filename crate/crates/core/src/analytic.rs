//! Closed-form predictions for the watchdog schemes: bandwidth of the
//! per-packet checker, miss-probability bounds for linear checks, the
//! block-code miss probability, encoder selection, coding rate, and the
//! two-flow slotted-ALOHA throughput and observation probability.
//!
//! Symbol conventions: `fq` is always a field order, `p_obs` the
//! per-packet probability that the watchdog can compare both copies of a
//! packet, and `alpha` a channel access probability. The per-packet
//! checker works on packets of `l_sym` symbols and sends `m_check`
//! checking symbols.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyticError {
    #[error("no code available: selection yields a message length below 1")]
    NoCodeAvailable,
}

/// Parameters of the block-coded watchdog scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub p_obs: f64,
    pub alpha: f64,
}

impl SchemeParams {
    pub fn new(n: usize, k: usize, beta: f64, p_obs: f64, alpha: f64) -> Result<Self, String> {
        if k < 1 || k > n {
            return Err(format!("require 1 <= k <= n, got k={k}, n={n}"));
        }
        if beta <= 0.0 {
            return Err(format!("beta must be positive, got {beta}"));
        }
        if !(0.0..=1.0).contains(&p_obs) || !(0.0..=1.0).contains(&alpha) {
            return Err(format!("p_obs and alpha must lie in [0,1], got {p_obs}, {alpha}"));
        }
        Ok(SchemeParams { n, k, beta, p_obs, alpha })
    }
}

/// Parameters of the per-packet checking game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckerParams {
    pub l_sym: usize,
    pub m_check: usize,
    pub fq: u32,
    pub theta: f64,
}

impl CheckerParams {
    pub fn new(l_sym: usize, m_check: usize, fq: u32, theta: f64) -> Result<Self, String> {
        if l_sym < 1 {
            return Err("l_sym must be at least 1".into());
        }
        if !(0.0 < theta && theta < 1.0) {
            return Err(format!("theta must lie in (0,1), got {theta}"));
        }
        Ok(CheckerParams { l_sym, m_check, fq, theta })
    }
}

/// Throughput of the per-packet watchdog under an optimal schedule:
/// every packet costs l_sym symbol-times twice (source and relay) plus
/// m_check symbol-times of checking traffic, so l / (2l + m).
pub fn throughput_linear_watchdog(l_sym: usize, m_check: usize) -> f64 {
    assert!(l_sym >= 1);
    l_sym as f64 / (2 * l_sym + m_check) as f64
}

/// Bounds on the miss probability of any linear per-packet check with
/// m_check checking symbols against a uniformly random nonzero error:
/// lower = (fq^(l-m) - 1) / (fq^l - 1), upper = 1. The lower bound is the
/// kernel-fraction when the check matrix has full rank m_check.
pub fn linear_miss_bounds(fq: u32, l_sym: usize, m_check: usize) -> (f64, f64) {
    assert!(m_check <= l_sym, "m_check must not exceed l_sym");
    let lf = fq as f64;
    let ln_total = l_sym as f64 * lf.ln();
    let lower = if ln_total > 700.0 {
        // fq^l overflows f64; the -1 terms are negligible there.
        (-(m_check as f64) * lf.ln()).exp()
    } else {
        (lf.powi((l_sym - m_check) as i32) - 1.0) / (lf.powi(l_sym as i32) - 1.0)
    };
    (lower, 1.0)
}

/// Minimum number of binary checking symbols for a target miss
/// probability theta: ceil(-log2 theta).
pub fn min_check_symbols(theta: f64) -> usize {
    assert!(0.0 < theta && theta < 1.0);
    ceil_with_guard(-theta.log2())
}

/// Variant of `min_check_symbols` for symbols of a general field order:
/// ceil(-log_fq theta). The binary form is the conventional statement;
/// over larger alphabets each checking symbol carries log2(fq) bits, so
/// this is the consistent per-symbol requirement.
pub fn min_check_symbols_fq(theta: f64, fq: u32) -> usize {
    assert!(0.0 < theta && theta < 1.0);
    assert!(fq >= 2);
    ceil_with_guard(-theta.ln() / (fq as f64).ln())
}

fn ceil_with_guard(v: f64) -> usize {
    // Round values within 1e-9 of an integer before taking the ceiling so
    // that exact powers are not pushed up by float noise.
    let nearest = v.round();
    let snapped = if (v - nearest).abs() < 1e-9 { nearest } else { v.ceil() };
    snapped.max(0.0) as usize
}

/// Miss probability of the minimal block attacker against an (n, k) MDS
/// code when each packet is comparable with probability p_obs: the
/// attacker must touch n-k+1 packets and every one must go unobserved,
/// so (1 - p_obs)^(n-k+1).
pub fn p_miss_mds(n: usize, k: usize, p_obs: f64) -> f64 {
    assert!(1 <= k && k <= n);
    assert!((0.0..=1.0).contains(&p_obs));
    (1.0 - p_obs).powi((n - k + 1) as i32)
}

/// Message length selection k = floor(n + 1 - beta ln(n) / p_obs),
/// clamped to the valid range [1, n-1]. The floor only grows the parity
/// budget n-k+1, so the miss probability stays below n^(-beta).
pub fn select_k(n: usize, p_obs: f64, beta: f64) -> Result<usize, AnalyticError> {
    assert!(n >= 2);
    assert!(0.0 < p_obs && p_obs <= 1.0);
    assert!(beta > 0.0);
    let k_real = n as f64 + 1.0 - beta * (n as f64).ln() / p_obs;
    let k = k_real.floor();
    if k < 1.0 {
        return Err(AnalyticError::NoCodeAvailable);
    }
    Ok((k as usize).min(n - 1))
}

/// Coding rate of the selected encoder. `formula` is the real-valued
/// rate 1 + 1/n - (beta/p_obs)(ln n / n); `k` and `integer` come from the
/// floored selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingRate {
    pub formula: f64,
    pub k: usize,
    pub integer: f64,
}

pub fn coding_rate(n: usize, p_obs: f64, beta: f64) -> Result<CodingRate, AnalyticError> {
    let k = select_k(n, p_obs, beta)?;
    let nf = n as f64;
    let formula = 1.0 + 1.0 / nf - (beta / p_obs) * nf.ln() / nf;
    Ok(CodingRate { formula, k, integer: k as f64 / nf })
}

/// Per-slot success rate of a sender-receiver pair in the two-flow
/// slotted-ALOHA topology: the sender transmits and its relay stays
/// silent, alpha (1 - alpha).
pub fn aloha_throughput(alpha: f64) -> f64 {
    assert!((0.0..=1.0).contains(&alpha));
    alpha * (1.0 - alpha)
}

/// Probability that the watchdog can compare both copies of a delivered
/// packet: the source copy needs the two cross-flow senders silent
/// ((1-alpha)^2, the relay being silent is implied by delivery) and the
/// relay copy needs the three other senders silent ((1-alpha)^3), giving
/// (1 - alpha)^5.
pub fn aloha_obs_prob(alpha: f64) -> f64 {
    assert!((0.0..=1.0).contains(&alpha));
    (1.0 - alpha).powi(5)
}

/// Effective throughput of the adaptive encoder in the two-flow setting:
/// link throughput times real-valued coding rate,
/// alpha (1-alpha)(1 + 1/n) - alpha beta ln(n) / ((1-alpha)^4 n).
/// Fails exactly where `select_k` does at p_obs = (1-alpha)^5.
pub fn effective_throughput(alpha: f64, n: usize, beta: f64) -> Result<f64, AnalyticError> {
    assert!(0.0 < alpha && alpha < 1.0);
    assert!(n >= 2);
    assert!(beta > 0.0);
    let p_obs = aloha_obs_prob(alpha);
    select_k(n, p_obs, beta)?;
    let nf = n as f64;
    let te = alpha * (1.0 - alpha) * (1.0 + 1.0 / nf)
        - alpha * beta * nf.ln() / ((1.0 - alpha).powi(4) * nf);
    Ok(te)
}

/// Miss probability of a (2^m - 1, 2^m - m - 1) Hamming block under the
/// minimal attacker, in both accountings. `mds_exponent` applies the MDS
/// parity-budget exponent n-k+1 = m+1; `dmin_exponent` applies the true
/// minimum distance 3, which is what an encoder-aware attacker achieves
/// because Hamming codes of m >= 3 are not MDS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HammingMissModes {
    pub paper_mode: f64,
    pub dmin_mode: f64,
}

pub fn p_miss_hamming_modes(m: u32, p_obs: f64) -> HammingMissModes {
    assert!(m >= 2);
    assert!((0.0..=1.0).contains(&p_obs));
    HammingMissModes {
        paper_mode: (1.0 - p_obs).powi(m as i32 + 1),
        dmin_mode: (1.0 - p_obs).powi(3),
    }
}

/// Parameters of the Hamming family member of order m.
pub fn hamming_params(m: u32) -> (usize, usize) {
    let n = (1usize << m) - 1;
    (n, n - m as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn throughput_limits() {
        assert_eq!(throughput_linear_watchdog(1, 0), 0.5);
        assert_eq!(throughput_linear_watchdog(100, 0), 0.5);
        assert!(close(throughput_linear_watchdog(100, 50), 0.4, 1e-15));
    }

    #[test]
    fn miss_bounds_values() {
        let (lo, hi) = linear_miss_bounds(2, 2, 1);
        assert!(close(lo, 1.0 / 3.0, 1e-15));
        assert_eq!(hi, 1.0);
        let (lo, _) = linear_miss_bounds(2, 8, 8);
        assert_eq!(lo, 0.0);
        let (lo, _) = linear_miss_bounds(2, 8, 0);
        assert_eq!(lo, 1.0);
    }

    #[test]
    fn check_symbol_counts() {
        assert_eq!(min_check_symbols(0.5), 1);
        assert_eq!(min_check_symbols(2f64.powi(-10)), 10);
        assert_eq!(min_check_symbols(0.1), 4);
        assert_eq!(min_check_symbols_fq(0.1, 256), 1);
        assert_eq!(min_check_symbols_fq(2f64.powi(-10), 2), 10);
    }

    #[test]
    fn p_miss_mds_values() {
        assert_eq!(p_miss_mds(10, 10, 1.0), 0.0);
        assert!(close(p_miss_mds(10, 10, 0.3), 0.7, 1e-15));
        assert!(close(p_miss_mds(15, 11, 0.3), 0.16807, 1e-12));
    }

    #[test]
    fn p_miss_mds_monotone() {
        let mut last = 1.0;
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let v = p_miss_mds(15, 11, p);
            assert!(v <= last + 1e-15);
            last = v;
        }
        assert!(p_miss_mds(15, 9, 0.3) < p_miss_mds(15, 11, 0.3));
    }

    #[test]
    fn select_k_reference_points() {
        assert_eq!(select_k(100, 0.5, 2.0).unwrap(), 82);
        assert_eq!(select_k(10, 0.01, 2.0).unwrap_err(), AnalyticError::NoCodeAvailable);
    }

    #[test]
    fn selection_meets_polynomial_bound() {
        for n in [15usize, 63, 255] {
            for beta in [1.0, 2.0] {
                for i in 1..=9 {
                    let p_obs = i as f64 / 10.0;
                    if let Ok(k) = select_k(n, p_obs, beta) {
                        let miss = p_miss_mds(n, k, p_obs);
                        let exp_bound = (-p_obs * (n - k + 1) as f64).exp();
                        let poly_bound = (n as f64).powf(-beta);
                        assert!(miss <= exp_bound + 1e-15);
                        assert!(exp_bound <= poly_bound + 1e-15, "n={n} beta={beta} p={p_obs}");
                    }
                }
            }
        }
        let miss = p_miss_mds(100, 82, 0.5);
        assert!(close(miss, 0.5f64.powi(19), 1e-20));
        assert!(miss <= 100f64.powi(-2));
    }

    #[test]
    fn coding_rate_reference() {
        let r = coding_rate(100, 0.5, 2.0).unwrap();
        assert!(close(r.formula, 0.8257931925604763, 1e-12));
        assert_eq!(r.k, 82);
        assert!(close(r.integer, 0.82, 1e-15));
        // ln(n)/n vanishes: the formula rate approaches 1.
        let big = coding_rate(1_000_000, 0.5, 1.0).unwrap();
        assert!(big.formula > 0.99);
    }

    #[test]
    fn aloha_formulas() {
        assert_eq!(aloha_throughput(0.0), 0.0);
        assert_eq!(aloha_throughput(1.0), 0.0);
        assert!(close(aloha_throughput(0.5), 0.25, 1e-15));
        assert_eq!(aloha_obs_prob(0.0), 1.0);
        assert!(close(aloha_obs_prob(0.2), 0.32768, 1e-15));
        assert!(close(aloha_obs_prob(0.5), 0.03125, 1e-15));
    }

    #[test]
    fn effective_throughput_reference() {
        let te = effective_throughput(0.2, 255, 1.0).unwrap();
        assert!(close(te, 0.15001688199839458, 1e-12));
        // The rate penalty is strictly positive for beta > 0.
        let t = aloha_throughput(0.2) * (1.0 + 1.0 / 255.0);
        assert!(te < t);
        // Vanishes at small alpha.
        let tiny = effective_throughput(1e-4, 255, 1.0);
        assert!(tiny.is_err() || tiny.unwrap() < 1e-3);
    }

    #[test]
    fn effective_throughput_fails_with_selection() {
        // At alpha = 0.5 and beta = 2 a length-15 block cannot absorb the
        // required parity: k would drop below 1.
        let p_obs = aloha_obs_prob(0.5);
        assert!(select_k(15, p_obs, 2.0).is_err());
        assert!(effective_throughput(0.5, 15, 2.0).is_err());
    }

    #[test]
    fn hamming_modes() {
        let z = p_miss_hamming_modes(3, 1.0);
        assert_eq!((z.paper_mode, z.dmin_mode), (0.0, 0.0));
        let m3 = p_miss_hamming_modes(3, 0.5);
        assert!(close(m3.paper_mode, 0.0625, 1e-15));
        assert!(close(m3.dmin_mode, 0.125, 1e-15));
        for m in 2..=10 {
            let v = p_miss_hamming_modes(m, 0.3);
            assert!(v.paper_mode <= v.dmin_mode + 1e-15);
        }
        // m = 2 is the repetition code, the one MDS member: exponents agree.
        let m2 = p_miss_hamming_modes(2, 0.3);
        assert!(close(m2.paper_mode, m2.dmin_mode, 1e-15));
    }

    #[test]
    fn hamming_params_table() {
        assert_eq!(hamming_params(2), (3, 1));
        assert_eq!(hamming_params(3), (7, 4));
        assert_eq!(hamming_params(4), (15, 11));
    }

    #[test]
    fn param_bags_validate() {
        assert!(SchemeParams::new(10, 4, 1.0, 0.5, 0.2).is_ok());
        assert!(SchemeParams::new(10, 0, 1.0, 0.5, 0.2).is_err());
        assert!(SchemeParams::new(10, 4, 0.0, 0.5, 0.2).is_err());
        assert!(CheckerParams::new(8, 2, 2, 0.01).is_ok());
        assert!(CheckerParams::new(8, 2, 2, 1.5).is_err());
    }
}
