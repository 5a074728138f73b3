//! Watchdog, attacker and decoder state machines.
//!
//! Two checking games live here. The per-packet game compares a source
//! packet with its forwarded copy, either through a linear map of both
//! packets ([`LinearChecker`]) or through the one-symbol equality
//! indicator ([`nonlinear_check`]). The per-block game
//! ([`run_block`]) runs the full pipeline: encode a block, let an
//! attacker substitute packets, let the watchdog compare the positions it
//! overheard, and let the destination screen syndromes.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::codec::{Block, Code, CodecError, Detection, Packet, TamperPlan};
use crate::field::{Fe, Field};
use crate::linalg::{random_nonzero_vector, Matrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("attacker strategy is incompatible with the block's code: {0}")]
    StrategyCodeMismatch(String),
    #[error("the checker has a trivial kernel; no undetectable error exists")]
    NoUndetectableError,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckOutcome {
    Accept,
    Reject,
}

/// A linear per-packet checker F(a, b) = M1 a + M2 b with m_check rows
/// over packets of l_sym symbols. Any check that is additive in both
/// arguments and scales linearly in each takes this form, and a forwarded
/// copy p + e passes the round trip exactly when M1 e = 0.
#[derive(Debug, Clone)]
pub struct LinearChecker {
    m1: Matrix,
    m2: Matrix,
}

impl LinearChecker {
    pub fn new(m1: Matrix, m2: Matrix) -> Result<LinearChecker, ProtocolError> {
        if m1.rows() != m2.rows() || m1.cols() != m2.cols() {
            return Err(ProtocolError::DimensionMismatch { expected: m1.cols(), got: m2.cols() });
        }
        assert_eq!(m1.field(), m2.field(), "checker matrices must share a field");
        Ok(LinearChecker { m1, m2 })
    }

    /// Checker with uniformly random matrices.
    pub fn random<R: Rng + ?Sized>(
        field: Arc<Field>,
        m_check: usize,
        l_sym: usize,
        rng: &mut R,
    ) -> LinearChecker {
        let m1 = Matrix::random(field.clone(), m_check, l_sym, rng);
        let m2 = Matrix::random(field, m_check, l_sym, rng);
        LinearChecker { m1, m2 }
    }

    /// The matrix governing misses: the round trip accepts p -> p + e
    /// exactly when e lies in the kernel of this matrix.
    pub fn check_matrix(&self) -> &Matrix {
        &self.m1
    }

    pub fn l_sym(&self) -> usize {
        self.m1.cols()
    }

    pub fn m_check(&self) -> usize {
        self.m1.rows()
    }

    pub fn field(&self) -> &Arc<Field> {
        self.m1.field()
    }

    /// F(a, b) = M1 a + M2 b.
    pub fn evaluate(&self, a: &[Fe], b: &[Fe]) -> Result<Vec<Fe>, ProtocolError> {
        if a.len() != self.l_sym() || b.len() != self.l_sym() {
            return Err(ProtocolError::DimensionMismatch {
                expected: self.l_sym(),
                got: if a.len() != self.l_sym() { a.len() } else { b.len() },
            });
        }
        let f = self.m1.field();
        let left = self.m1.mul_vec(a);
        let right = self.m2.mul_vec(b);
        Ok(left.iter().zip(&right).map(|(&x, &y)| f.add(x, y)).collect())
    }
}

/// The round trip of the linear game: the watchdog reports w = F(p, p'),
/// the destination recomputes F(p', p') from the copy it received and
/// rejects on mismatch. Equivalent to rejecting iff M1 (p' - p) != 0.
pub fn linear_check_roundtrip(
    checker: &LinearChecker,
    p: &[Fe],
    p_fwd: &[Fe],
) -> Result<CheckOutcome, ProtocolError> {
    let reported = checker.evaluate(p, p_fwd)?;
    let recomputed = checker.evaluate(p_fwd, p_fwd)?;
    Ok(if reported == recomputed { CheckOutcome::Accept } else { CheckOutcome::Reject })
}

/// The one-symbol equality indicator: rejects iff the packets differ.
/// Never misses any tampering.
pub fn nonlinear_check(p: &[Fe], p_fwd: &[Fe]) -> Result<CheckOutcome, ProtocolError> {
    if p.len() != p_fwd.len() {
        return Err(ProtocolError::DimensionMismatch { expected: p.len(), got: p_fwd.len() });
    }
    Ok(if p == p_fwd { CheckOutcome::Accept } else { CheckOutcome::Reject })
}

/// Attacker strategies. The attacker knows the encoder (it can compute
/// codewords) but never knows which positions the watchdog overhears.
#[derive(Debug, Clone)]
pub enum AttackerStrategy {
    /// Per-packet linear-game attacker: adds a random nonzero kernel
    /// vector of the checker to every packet, evading the linear check.
    NullSpace(LinearChecker),
    /// Per-packet blind attacker: adds a uniform nonzero error to every
    /// packet.
    RandomError,
    /// Block attacker: adds a minimum-weight codeword, evading the
    /// decoder while touching as few packets as possible.
    MinWeightForgery,
    /// Naive block attacker: re-randomizes `positions` packets without
    /// regard to the code.
    RawCorruption { positions: usize },
}

impl AttackerStrategy {
    pub fn knows_encoder(&self) -> bool {
        matches!(self, AttackerStrategy::MinWeightForgery | AttackerStrategy::NullSpace(_))
    }

    pub fn knows_watchdog_observations(&self) -> bool {
        false
    }
}

/// How the watchdog's comparable positions are produced for a block.
#[derive(Debug, Clone)]
pub enum ObservationModel {
    /// Each position is comparable independently with this probability.
    Bernoulli(f64),
    /// Explicit comparable set, e.g. taken from a channel simulation.
    Fixed(BTreeSet<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockVerdict {
    NoAttack,
    CaughtByWatchdog,
    CaughtByDecoder,
    Missed,
}

/// Outcome of one block: the verdict plus how many positions the
/// watchdog compared and how many packets the attacker touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockOutcome {
    pub verdict: BlockVerdict,
    pub packets_compared: usize,
    pub packets_corrupted: usize,
}

/// Apply an attacker strategy to a block, returning the substituted
/// codeword packets and the plan describing the substitution.
pub fn attack_block<R: Rng + ?Sized>(
    strategy: &AttackerStrategy,
    block: &Block,
    rng: &mut R,
) -> Result<(Vec<Packet>, TamperPlan), ProtocolError> {
    let code = &block.code;
    let field = code.field();
    let n = code.n();
    let lanes = block.lanes();
    match strategy {
        AttackerStrategy::MinWeightForgery => {
            let mut plan = code.min_weight_forgery(lanes, rng);
            plan.block_id = block.id;
            let tampered = plan.apply(field, &block.codeword);
            Ok((tampered, plan))
        }
        AttackerStrategy::RawCorruption { positions } => {
            let c = *positions;
            if c < 1 || c > n {
                return Err(ProtocolError::StrategyCodeMismatch(format!(
                    "raw corruption of {c} positions in a block of {n}"
                )));
            }
            let mut support = rand::seq::index::sample(rng, n, c).into_vec();
            support.sort_unstable();
            let mut delta = vec![vec![Fe::ZERO; n]; lanes];
            for &pos in &support {
                for lane_delta in delta.iter_mut() {
                    lane_delta[pos] = field.random_nonzero(rng);
                }
            }
            let plan = TamperPlan { support, delta, block_id: block.id };
            let tampered = plan.apply(field, &block.codeword);
            Ok((tampered, plan))
        }
        AttackerStrategy::NullSpace(checker) => {
            if checker.field() != field {
                return Err(ProtocolError::StrategyCodeMismatch(
                    "checker field differs from the block's field".into(),
                ));
            }
            if checker.l_sym() != lanes {
                return Err(ProtocolError::StrategyCodeMismatch(format!(
                    "checker expects packets of {} symbols, block carries {}",
                    checker.l_sym(),
                    lanes
                )));
            }
            let basis = checker.check_matrix().null_space();
            if basis.is_empty() {
                return Err(ProtocolError::NoUndetectableError);
            }
            let mut delta = vec![vec![Fe::ZERO; n]; lanes];
            for pos in 0..n {
                let e = random_nonzero_kernel_vector(field, &basis, rng);
                for (lane, lane_delta) in delta.iter_mut().enumerate() {
                    lane_delta[pos] = e[lane];
                }
            }
            let plan = TamperPlan { support: (0..n).collect(), delta, block_id: block.id };
            let tampered = plan.apply(field, &block.codeword);
            Ok((tampered, plan))
        }
        AttackerStrategy::RandomError => {
            let mut delta = vec![vec![Fe::ZERO; n]; lanes];
            for pos in 0..n {
                let e = random_nonzero_vector(field, lanes, rng);
                for (lane, lane_delta) in delta.iter_mut().enumerate() {
                    lane_delta[pos] = e[lane];
                }
            }
            let plan = TamperPlan { support: (0..n).collect(), delta, block_id: block.id };
            let tampered = plan.apply(field, &block.codeword);
            Ok((tampered, plan))
        }
    }
}

/// Uniform nonzero element of the span of `basis`, by rejection over
/// random coefficient vectors.
fn random_nonzero_kernel_vector<R: Rng + ?Sized>(
    field: &Field,
    basis: &[Vec<Fe>],
    rng: &mut R,
) -> Vec<Fe> {
    let dim = basis[0].len();
    loop {
        let mut v = vec![Fe::ZERO; dim];
        for b in basis {
            let coeff = field.random_element(rng);
            if coeff.is_zero() {
                continue;
            }
            for (slot, &x) in v.iter_mut().zip(b) {
                *slot = field.add(*slot, field.mul(coeff, x));
            }
        }
        if v.iter().any(|e| !e.is_zero()) {
            return v;
        }
    }
}

/// The watchdog's per-block judgment: alarm iff some overheard position
/// differs between the source copy and the forwarded copy.
pub fn watchdog_block_judge(
    original: &[Packet],
    tampered: &[Packet],
    observed: &BTreeSet<usize>,
) -> bool {
    assert_eq!(original.len(), tampered.len());
    observed.iter().any(|&j| {
        assert!(j < original.len(), "observed position out of range");
        original[j].symbols != tampered[j].symbols
    })
}

/// Full pipeline over one random block: encode, attack (optionally),
/// observe, judge, screen. The watchdog wins ties with the decoder since
/// it acts first in time.
pub fn run_block<R: Rng + ?Sized>(
    code: &Arc<Code>,
    strategy: Option<&AttackerStrategy>,
    observation: &ObservationModel,
    lanes: usize,
    rng: &mut R,
) -> Result<BlockOutcome, ProtocolError> {
    let block = Block::random(code.clone(), 0, lanes, rng);
    let (tampered, corrupted) = match strategy {
        None => (block.codeword.clone(), 0),
        Some(s) => {
            let (tampered, plan) = attack_block(s, &block, rng)?;
            (tampered, plan.support.len())
        }
    };

    let observed: BTreeSet<usize> = match observation {
        ObservationModel::Bernoulli(p_obs) => {
            assert!((0.0..=1.0).contains(p_obs));
            (0..code.n()).filter(|_| rng.random_bool(*p_obs)).collect()
        }
        ObservationModel::Fixed(set) => set.clone(),
    };

    let alarm = watchdog_block_judge(&block.codeword, &tampered, &observed);
    let detection = code.detect(&tampered)?;

    let verdict = if corrupted == 0 {
        debug_assert!(!alarm);
        debug_assert_eq!(detection, Detection::Clean);
        BlockVerdict::NoAttack
    } else if alarm {
        BlockVerdict::CaughtByWatchdog
    } else if detection == Detection::Tampered {
        BlockVerdict::CaughtByDecoder
    } else {
        BlockVerdict::Missed
    };

    Ok(BlockOutcome {
        verdict,
        packets_compared: observed.len(),
        packets_corrupted: corrupted,
    })
}
