//! Misbehavior-detection laboratory for coded watchdog schemes.
//!
//! A relay that tampers with packets can be caught two ways: a watchdog
//! node that overhears both the incoming and the forwarded copy of a
//! packet and compares them, and an error-detection block code whose
//! syndrome the destination screens. This crate implements both detectors
//! and everything needed to measure them:
//!
//! - [`field`]: finite fields GF(p) and GF(2^w) with table arithmetic;
//! - [`linalg`]: matrices, rank, null spaces and restricted solving;
//! - [`codec`]: systematic Reed-Solomon / Hamming / parity-check codes
//!   applied lane-wise across packets, syndrome detection, and the
//!   minimum-weight codeword forgery an encoder-aware attacker uses;
//! - [`analytic`]: closed forms for throughput, miss probabilities,
//!   encoder selection and the two-flow slotted-ALOHA quantities;
//! - [`protocol`]: the per-packet linear/nonlinear checking games and the
//!   per-block encode/attack/observe/judge pipeline;
//! - [`simnet`]: a slot-level simulator of the two-flow interference
//!   topology and the single-flow TDMA schedule;
//! - [`harness`]: seeded Monte Carlo experiments with confidence
//!   intervals, plus the exhaustive self-test suite.

pub mod analytic;
pub mod codec;
pub mod field;
pub mod harness;
pub mod linalg;
pub mod protocol;
pub mod simnet;

pub use analytic::{AnalyticError, CheckerParams, SchemeParams};
pub use codec::{Block, Code, CodecError, CodeKind, Detection, Packet, TamperPlan};
pub use field::{Fe, Field, FieldError, FieldKind};
pub use harness::{
    derive_seed, AttackerMode, CodeFamily, EstimateWithCI, ExperimentConfig, ExperimentId,
    FaultInjection, HarnessError, SelfCheck,
};
pub use linalg::{LinalgError, Matrix};
pub use protocol::{
    AttackerStrategy, BlockOutcome, BlockVerdict, CheckOutcome, LinearChecker, ObservationModel,
    ProtocolError,
};
pub use simnet::{NodeAlphas, ObservationRecord, SimStats, SingleFlowSchedule, Topology, TwoFlowSim};
