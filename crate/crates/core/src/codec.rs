//! Systematic (n, k) error-detection block codes applied lane-wise across
//! packets.
//!
//! A block groups k message packets of equal symbol length L. Encoding
//! treats each symbol position ("lane") independently: the length-n vector
//! of lane-l symbols across the coded packets is a codeword, so corrupting
//! one packet corrupts at most one code position per lane. Three
//! constructions are provided: Reed-Solomon (maximum distance separable,
//! d_min = n-k+1), binary Hamming (2^m-1, 2^m-m-1, d_min = 3), and an
//! arbitrary parity-check matrix.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::field::{Fe, Field};
use crate::linalg::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("block length {n} exceeds field order {order}; no such code is available")]
    LengthExceedsField { n: usize, order: u32 },
    #[error("invalid code dimensions n={n}, k={k}")]
    InvalidDimensions { n: usize, k: usize },
    #[error("expected {expected} packets of equal length, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("codeword space fq^k = {order}^{k} too large for exhaustive enumeration")]
    TooLargeForExhaustive { order: u32, k: usize },
    #[error("stream is missing packets (expected {expected}, usable {got})")]
    MissingPackets { expected: usize, got: usize },
    #[error("kernel of the parity-check matrix has no systematic generator in the leading positions")]
    NonSystematic,
}

/// One packet: a fixed-length vector of field symbols plus a sequence
/// index used to reassemble scrambled streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub seq: u64,
    pub symbols: Vec<Fe>,
}

impl Packet {
    pub fn new(seq: u64, symbols: Vec<Fe>) -> Packet {
        Packet { seq, symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeKind {
    ReedSolomon,
    Hamming { m: u32 },
    FromParityCheck,
}

/// Verdict of syndrome screening at the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    Clean,
    Tampered,
}

/// A systematic (n, k) block code: generator G = [I | P] (k x n),
/// parity-check H ((n-k) x n or as supplied) with G H^T = 0, and the
/// minimum distance.
#[derive(Clone)]
pub struct Code {
    n: usize,
    k: usize,
    field: Arc<Field>,
    kind: CodeKind,
    generator: Matrix,
    parity_check: Matrix,
    d_min: usize,
    /// Supports of all minimum-weight codewords, when they are enumerable
    /// (Hamming and FromParityCheck). Reed-Solomon draws supports directly
    /// since every (n-k+1)-subset carries a codeword.
    min_weight_supports: Option<Vec<Vec<usize>>>,
}

impl std::fmt::Debug for Code {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Code")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("kind", &self.kind)
            .field("order", &self.field.order())
            .field("d_min", &self.d_min)
            .finish()
    }
}

impl Code {
    /// Systematic Reed-Solomon code via evaluation at the points
    /// 0, 1, ..., n-1 (field encoding order). Requires n <= fq so the
    /// points are distinct; d_min = n - k + 1.
    pub fn reed_solomon(field: Arc<Field>, n: usize, k: usize) -> Result<Code, CodecError> {
        if k < 1 || k >= n {
            return Err(CodecError::InvalidDimensions { n, k });
        }
        if n as u64 > field.order() as u64 {
            return Err(CodecError::LengthExceedsField { n, order: field.order() });
        }
        let vand = Matrix::from_fn(field.clone(), k, n, |i, j| {
            field.pow(field.fe(j as u32), i as u64)
        });
        let leading: Vec<usize> = (0..k).collect();
        let a = vand.select_cols(&leading);
        let a_inv = a.inverse().expect("Vandermonde block on distinct points is invertible");
        let generator = a_inv.matmul(&vand);
        let code = Code::from_systematic_generator(field, generator, CodeKind::ReedSolomon, n - k + 1, None)?;
        Ok(code)
    }

    /// Binary Hamming code (2^m - 1, 2^m - m - 1) for 2 <= m <= 10.
    /// The parity-check columns are all nonzero m-bit values: non-powers
    /// of two in ascending order, then the unit columns, so H = [B | I].
    pub fn hamming(m: u32) -> Code {
        assert!((2..=10).contains(&m), "hamming order m must be in 2..=10");
        let field = Field::gf2();
        let n = (1usize << m) - 1;
        let k = n - m as usize;
        let mut columns: Vec<u32> = (1..=n as u32).filter(|v| !v.is_power_of_two()).collect();
        columns.extend((0..m).map(|i| 1u32 << i));
        debug_assert_eq!(columns.len(), n);
        let parity_check = Matrix::from_fn(field.clone(), m as usize, n, |r, c| {
            field.fe(columns[c] >> r & 1)
        });
        // G = [I_k | B^T] where B is the non-unit column block of H.
        let generator = Matrix::from_fn(field.clone(), k, n, |i, j| {
            if j < k {
                field.fe((i == j) as u32)
            } else {
                parity_check.get(j - k, i)
            }
        });
        // Weight-3 supports: for each column pair the third column is
        // determined by the XOR, so the scan is quadratic, not cubic.
        let mut index_of: BTreeMap<u32, usize> = BTreeMap::new();
        for (i, &v) in columns.iter().enumerate() {
            index_of.insert(v, i);
        }
        let mut supports = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let third = columns[i] ^ columns[j];
                if let Some(&l) = index_of.get(&third) {
                    if l > j {
                        supports.push(vec![i, j, l]);
                    }
                }
            }
        }
        let code = Code {
            n,
            k,
            field,
            kind: CodeKind::Hamming { m },
            generator,
            parity_check,
            d_min: 3,
            min_weight_supports: Some(supports),
        };
        assert!(code.generator.matmul(&code.parity_check.transpose()).is_zero());
        code
    }

    /// Code defined by an arbitrary parity-check matrix. The kernel must
    /// admit a systematic generator in the leading k positions. The
    /// minimum distance is found by exhaustive enumeration, so fq^k must
    /// stay within the exhaustive budget (2^20 codewords).
    pub fn from_parity_check(parity_check: Matrix) -> Result<Code, CodecError> {
        let n = parity_check.cols();
        let field = parity_check.field().clone();
        let basis = parity_check.null_space();
        let k = basis.len();
        if k < 1 || k >= n {
            return Err(CodecError::InvalidDimensions { n, k });
        }
        let (gen, pivots) = Matrix::from_rows(field.clone(), &basis).rref();
        if pivots != (0..k).collect::<Vec<_>>() {
            return Err(CodecError::NonSystematic);
        }
        let mut code = Code {
            n,
            k,
            field,
            kind: CodeKind::FromParityCheck,
            generator: gen,
            parity_check,
            d_min: 0,
            min_weight_supports: None,
        };
        let (d_min, supports) = code.enumerate_min_weight()?;
        code.d_min = d_min;
        code.min_weight_supports = Some(supports);
        assert!(code.generator.matmul(&code.parity_check.transpose()).is_zero());
        Ok(code)
    }

    fn from_systematic_generator(
        field: Arc<Field>,
        generator: Matrix,
        kind: CodeKind,
        d_min: usize,
        min_weight_supports: Option<Vec<Vec<usize>>>,
    ) -> Result<Code, CodecError> {
        let k = generator.rows();
        let n = generator.cols();
        for i in 0..k {
            for j in 0..k {
                let expect = if i == j { Fe::ONE } else { Fe::ZERO };
                assert_eq!(generator.get(i, j), expect, "generator is not systematic");
            }
        }
        // H = [-P^T | I_{n-k}] from G = [I_k | P].
        let parity_check = Matrix::from_fn(field.clone(), n - k, n, |r, c| {
            if c < k {
                field.neg(generator.get(c, k + r))
            } else if c - k == r {
                Fe::ONE
            } else {
                Fe::ZERO
            }
        });
        let code = Code { n, k, field, kind, generator, parity_check, d_min, min_weight_supports };
        assert!(code.generator.matmul(&code.parity_check.transpose()).is_zero());
        Ok(code)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn d_min(&self) -> usize {
        self.d_min
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn parity_check(&self) -> &Matrix {
        &self.parity_check
    }

    /// Test hook: flip one generator entry so that G H^T != 0.
    #[doc(hidden)]
    pub fn inject_generator_fault(&mut self) {
        let v = self.generator.get(0, self.n - 1);
        let bumped = self.field.add(v, Fe::ONE);
        self.generator.set(0, self.n - 1, bumped);
    }

    /// Lane-wise systematic encoding of k equal-length packets into n
    /// coded packets; the first k output packets carry the message
    /// symbols unchanged. Output sequence indices are the block positions
    /// 0..n (callers embed them into a global numbering).
    pub fn encode(&self, message: &[Packet]) -> Result<Vec<Packet>, CodecError> {
        let lanes = self.check_uniform(message, self.k)?;
        let f = &self.field;
        let mut out: Vec<Packet> = Vec::with_capacity(self.n);
        for (j, msg) in message.iter().enumerate().take(self.k) {
            out.push(Packet::new(j as u64, msg.symbols.clone()));
        }
        for j in self.k..self.n {
            let mut symbols = vec![Fe::ZERO; lanes];
            for (i, msg) in message.iter().enumerate() {
                let g = self.generator.get(i, j);
                if g.is_zero() {
                    continue;
                }
                for (l, slot) in symbols.iter_mut().enumerate() {
                    *slot = f.add(*slot, f.mul(g, msg.symbols[l]));
                }
            }
            out.push(Packet::new(j as u64, symbols));
        }
        Ok(out)
    }

    /// Syndrome screening: `Tampered` iff some lane of the received block
    /// fails H r = 0. Detects every non-codeword lane, in particular any
    /// corruption touching at most d_min - 1 packets.
    pub fn detect(&self, received: &[Packet]) -> Result<Detection, CodecError> {
        let lanes = self.check_uniform(received, self.n)?;
        let f = &self.field;
        for l in 0..lanes {
            for r in 0..self.parity_check.rows() {
                let mut acc = Fe::ZERO;
                for j in 0..self.n {
                    let h = self.parity_check.get(r, j);
                    if h.is_zero() {
                        continue;
                    }
                    acc = f.add(acc, f.mul(h, received[j].symbols[l]));
                }
                if !acc.is_zero() {
                    return Ok(Detection::Tampered);
                }
            }
        }
        Ok(Detection::Clean)
    }

    fn check_uniform(&self, packets: &[Packet], expected: usize) -> Result<usize, CodecError> {
        if packets.len() != expected {
            return Err(CodecError::LengthMismatch { expected, got: packets.len() });
        }
        let lanes = packets[0].len();
        if lanes == 0 || packets.iter().any(|p| p.len() != lanes) {
            return Err(CodecError::LengthMismatch { expected: lanes.max(1), got: 0 });
        }
        Ok(lanes)
    }

    /// The decoder-evading attack: add a minimum-weight codeword. The
    /// support (size d_min) is drawn uniformly -- over all d_min-subsets
    /// for Reed-Solomon, over the enumerated minimum-weight supports
    /// otherwise -- and every lane gets an independent nonzero scalar
    /// multiple of the same base codeword, so the tampered block still
    /// passes `detect` while differing at every support position.
    pub fn min_weight_forgery<R: Rng + ?Sized>(&self, lanes: usize, rng: &mut R) -> TamperPlan {
        assert!(lanes >= 1);
        let support: Vec<usize> = match &self.min_weight_supports {
            Some(list) => list[rng.random_range(0..list.len())].clone(),
            None => {
                let mut idx = rand::seq::index::sample(rng, self.n, self.d_min).into_vec();
                idx.sort_unstable();
                idx
            }
        };
        let base = self.min_weight_codeword_on(&support);
        assert!(
            support.iter().all(|&p| !base[p].is_zero()),
            "minimum-weight codeword must be nonzero on its whole support"
        );
        let f = &self.field;
        let delta: Vec<Vec<Fe>> = (0..lanes)
            .map(|_| {
                let scale = f.random_nonzero(rng);
                base.iter().map(|&v| f.mul(scale, v)).collect()
            })
            .collect();
        TamperPlan { support, delta, block_id: 0 }
    }

    /// A nonzero codeword supported exactly on `support` (|support| =
    /// d_min; the restricted kernel of H is then one-dimensional, so the
    /// result is unique up to scale). The evaluation construction gives
    /// Reed-Solomon codes a closed form: the degree-(k-1) polynomial with
    /// roots at every non-support evaluation point vanishes exactly off
    /// the support. Other kinds solve the restricted kernel directly;
    /// tests cross-check both routes on small codes.
    pub fn min_weight_codeword_on(&self, support: &[usize]) -> Vec<Fe> {
        assert_eq!(support.len(), self.d_min);
        if self.kind == CodeKind::ReedSolomon {
            let f = &self.field;
            let in_support = {
                let mut v = vec![false; self.n];
                for &p in support {
                    v[p] = true;
                }
                v
            };
            let roots: Vec<Fe> =
                (0..self.n).filter(|j| !in_support[*j]).map(|j| f.fe(j as u32)).collect();
            let mut base = vec![Fe::ZERO; self.n];
            for &j in support {
                let x = f.fe(j as u32);
                let mut acc = Fe::ONE;
                for &r in &roots {
                    acc = f.mul(acc, f.sub(x, r));
                }
                base[j] = acc;
            }
            debug_assert!(self.parity_check.mul_vec(&base).iter().all(|e| e.is_zero()));
            base
        } else {
            self.parity_check
                .solve_homogeneous_restricted(support)
                .expect("a minimum-weight support always carries a codeword")
        }
    }

    /// Exact minimum nonzero codeword weight by exhaustive enumeration of
    /// all fq^k - 1 messages. Independent of the stored `d_min`, which it
    /// cross-checks in tests.
    pub fn min_distance_exhaustive(&self) -> Result<usize, CodecError> {
        let (d, _) = self.enumerate_min_weight()?;
        Ok(d)
    }

    fn enumerate_min_weight(&self) -> Result<(usize, Vec<Vec<usize>>), CodecError> {
        let order = self.field.order();
        let count = (order as u64).checked_pow(self.k as u32);
        if count.is_none() || count.unwrap() > 1 << 20 {
            return Err(CodecError::TooLargeForExhaustive { order, k: self.k });
        }
        let f = &self.field;
        let mut msg = vec![Fe::ZERO; self.k];
        let mut best = usize::MAX;
        let mut supports: Vec<Vec<usize>> = Vec::new();
        let mut seen: std::collections::BTreeSet<Vec<usize>> = std::collections::BTreeSet::new();
        'outer: loop {
            // odometer increment
            let mut pos = 0;
            loop {
                if pos == self.k {
                    break 'outer;
                }
                let next = (msg[pos].value() as u32 + 1) % order;
                msg[pos] = f.fe(next);
                if next != 0 {
                    break;
                }
                pos += 1;
            }
            let mut weight = 0usize;
            let mut support = Vec::new();
            for j in 0..self.n {
                let mut acc = Fe::ZERO;
                for i in 0..self.k {
                    if msg[i].is_zero() {
                        continue;
                    }
                    acc = f.add(acc, f.mul(msg[i], self.generator.get(i, j)));
                }
                if !acc.is_zero() {
                    weight += 1;
                    support.push(j);
                }
            }
            if weight < best {
                best = weight;
                supports.clear();
                seen.clear();
            }
            if weight == best && seen.insert(support.clone()) {
                supports.push(support);
            }
        }
        Ok((best, supports))
    }
}

/// An attacker's packet substitution: the attacked positions and a
/// per-lane additive delta (zero outside the support). For the
/// codeword-substitution attack every lane of the delta is itself a
/// codeword; the raw-corruption attack stores arbitrary deltas.
#[derive(Debug, Clone)]
pub struct TamperPlan {
    pub support: Vec<usize>,
    /// delta[lane][position]
    pub delta: Vec<Vec<Fe>>,
    pub block_id: u64,
}

impl TamperPlan {
    pub fn lanes(&self) -> usize {
        self.delta.len()
    }

    /// The tampered codeword: original plus delta, lane-wise.
    pub fn apply(&self, field: &Field, codeword: &[Packet]) -> Vec<Packet> {
        let lanes = self.delta.len();
        assert!(codeword.iter().all(|p| p.len() == lanes));
        codeword
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let symbols = (0..lanes).map(|l| field.add(p.symbols[l], self.delta[l][j])).collect();
                Packet::new(p.seq, symbols)
            })
            .collect()
    }
}

/// A message of k packets together with its n-packet codeword. Codeword
/// packets carry globally unique sequence indices id*n + position.
#[derive(Debug, Clone)]
pub struct Block {
    pub code: Arc<Code>,
    pub id: u64,
    pub message: Vec<Packet>,
    pub codeword: Vec<Packet>,
}

impl Block {
    pub fn new(code: Arc<Code>, id: u64, message: Vec<Packet>) -> Result<Block, CodecError> {
        let mut codeword = code.encode(&message)?;
        for (j, p) in codeword.iter_mut().enumerate() {
            p.seq = id * code.n() as u64 + j as u64;
        }
        Ok(Block { code, id, message, codeword })
    }

    /// Block over a uniformly random message.
    pub fn random<R: Rng + ?Sized>(
        code: Arc<Code>,
        id: u64,
        lanes: usize,
        rng: &mut R,
    ) -> Block {
        let field = code.field().clone();
        let message: Vec<Packet> = (0..code.k())
            .map(|i| Packet::new(i as u64, crate::linalg::random_vector(&field, lanes, rng)))
            .collect();
        Block::new(code, id, message).expect("random message always encodes")
    }

    pub fn lanes(&self) -> usize {
        self.message[0].len()
    }
}

/// Uniformly random interleaving of all codeword packets across blocks.
pub fn scramble<R: Rng + ?Sized>(blocks: &[Block], rng: &mut R) -> Vec<Packet> {
    assert!(!blocks.is_empty());
    let mut stream: Vec<Packet> = blocks.iter().flat_map(|b| b.codeword.iter().cloned()).collect();
    // Fisher-Yates
    for i in (1..stream.len()).rev() {
        let j = rng.random_range(0..=i);
        stream.swap(i, j);
    }
    stream
}

/// Regroup a scrambled stream into per-block codeword packet lists,
/// ordered by block id then position. Fails if any expected sequence
/// index is absent.
pub fn unscramble(
    stream: &[Packet],
    n: usize,
    block_ids: &[u64],
) -> Result<Vec<Vec<Packet>>, CodecError> {
    let expected = block_ids.len() * n;
    let mut by_seq: BTreeMap<u64, &Packet> = BTreeMap::new();
    for p in stream {
        by_seq.insert(p.seq, p);
    }
    let mut out = Vec::with_capacity(block_ids.len());
    let mut found = 0usize;
    for &id in block_ids {
        let mut block = Vec::with_capacity(n);
        for j in 0..n {
            match by_seq.get(&(id * n as u64 + j as u64)) {
                Some(&p) => {
                    block.push(p.clone());
                    found += 1;
                }
                None => {
                    return Err(CodecError::MissingPackets {
                        expected,
                        got: by_seq.len().min(expected),
                    })
                }
            }
        }
        out.push(block);
    }
    debug_assert_eq!(found, expected);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parity_code_3_2() -> Code {
        // (3,2) single-parity-check code over GF(2): the smallest MDS
        // code, built from H = [1 1 1] because Reed-Solomon needs n <= fq.
        let f = Field::gf2();
        let h = Matrix::from_rows(f.clone(), &[vec![f.fe(1), f.fe(1), f.fe(1)]]);
        Code::from_parity_check(h).unwrap()
    }

    #[test]
    fn parity_code_has_distance_two() {
        let code = parity_code_3_2();
        assert_eq!((code.n(), code.k()), (3, 2));
        assert_eq!(code.d_min(), 2);
        assert_eq!(code.min_distance_exhaustive().unwrap(), 2);
    }

    #[test]
    fn parity_code_encodes_xor() {
        let f = Field::gf2();
        let code = parity_code_3_2();
        let msg = vec![
            Packet::new(0, vec![f.fe(1), f.fe(0)]),
            Packet::new(1, vec![f.fe(0), f.fe(1)]),
        ];
        let cw = code.encode(&msg).unwrap();
        assert_eq!(cw[0].symbols, msg[0].symbols);
        assert_eq!(cw[1].symbols, msg[1].symbols);
        assert_eq!(cw[2].symbols, vec![f.fe(1), f.fe(1)]);
    }

    #[test]
    fn rs_rejects_length_beyond_field() {
        let err = Code::reed_solomon(Field::gf2(), 3, 2).unwrap_err();
        assert_eq!(err, CodecError::LengthExceedsField { n: 3, order: 2 });
    }

    #[test]
    fn rs_6_3_gf7_distance_four_exhaustive() {
        let code = Code::reed_solomon(Field::prime(7).unwrap(), 6, 3).unwrap();
        assert_eq!(code.d_min(), 4);
        // Exhaustive oracle over all 343 codewords.
        assert_eq!(code.min_distance_exhaustive().unwrap(), 4);
    }

    #[test]
    fn rs_255_223_constructs_with_valid_parity() {
        let code = Code::reed_solomon(Field::binary(8).unwrap(), 255, 223).unwrap();
        assert!(code.generator().matmul(&code.parity_check().transpose()).is_zero());
        assert_eq!(code.d_min(), 33);
    }

    #[test]
    fn rs_encode_matches_generator_multiplication_oracle() {
        let f = Field::prime(7).unwrap();
        let code = Code::reed_solomon(f.clone(), 6, 3).unwrap();
        let msg = vec![
            Packet::new(0, vec![f.fe(2), f.fe(5)]),
            Packet::new(1, vec![f.fe(0), f.fe(3)]),
            Packet::new(2, vec![f.fe(6), f.fe(1)]),
        ];
        let cw = code.encode(&msg).unwrap();
        for lane in 0..2 {
            let m: Vec<Fe> = msg.iter().map(|p| p.symbols[lane]).collect();
            // Independent oracle: explicit sum over G rows per position.
            for j in 0..6 {
                let mut acc = Fe::ZERO;
                for i in 0..3 {
                    acc = f.add(acc, f.mul(m[i], code.generator().get(i, j)));
                }
                assert_eq!(cw[j].symbols[lane], acc);
            }
        }
        assert_eq!(code.detect(&cw).unwrap(), Detection::Clean);
    }

    #[test]
    fn hamming_smallest_is_repetition() {
        let code = Code::hamming(2);
        assert_eq!((code.n(), code.k()), (3, 1));
        assert_eq!(code.d_min(), 3);
        assert_eq!(code.min_distance_exhaustive().unwrap(), 3);
        assert_eq!(code.min_weight_supports.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn hamming_7_4_distance_by_enumeration() {
        let code = Code::hamming(3);
        assert_eq!((code.n(), code.k()), (7, 4));
        assert_eq!(code.min_distance_exhaustive().unwrap(), 3);
        // (7,4) has exactly seven weight-3 codewords.
        assert_eq!(code.min_weight_supports.as_ref().unwrap().len(), 7);
    }

    #[test]
    fn hamming_15_11_shape() {
        let code = Code::hamming(4);
        assert_eq!((code.n(), code.k()), (15, 11));
        assert!(code.generator().matmul(&code.parity_check().transpose()).is_zero());
    }

    #[test]
    fn detect_flags_all_small_corruptions_rs_6_3() {
        let f = Field::prime(7).unwrap();
        let code = Arc::new(Code::reed_solomon(f.clone(), 6, 3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let block = Block::random(code.clone(), 0, 1, &mut rng);
        // Every corruption touching <= d_min - 1 = 3 positions must be
        // caught: exhaustive over supports and nonzero per-position deltas.
        let supports: Vec<Vec<usize>> = {
            let mut v = Vec::new();
            for a in 0..6 {
                v.push(vec![a]);
                for b in a + 1..6 {
                    v.push(vec![a, b]);
                    for c in b + 1..6 {
                        v.push(vec![a, b, c]);
                    }
                }
            }
            v
        };
        let mut cases = 0u64;
        for support in &supports {
            let mut deltas = vec![1u32; support.len()];
            loop {
                let mut tampered = block.codeword.clone();
                for (idx, &pos) in support.iter().enumerate() {
                    tampered[pos].symbols[0] = f.add(tampered[pos].symbols[0], f.fe(deltas[idx]));
                }
                assert_eq!(code.detect(&tampered).unwrap(), Detection::Tampered);
                cases += 1;
                // odometer over nonzero deltas
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
        assert!(cases > 4000, "exhausted {cases} corruption cases");
    }

    #[test]
    fn forgery_passes_detection_and_touches_d_min_packets() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rs = Arc::new(Code::reed_solomon(Field::prime(7).unwrap(), 6, 3).unwrap());
        let ham = Arc::new(Code::hamming(3));
        for code in [rs, ham] {
            for trial in 0..200 {
                let block = Block::random(code.clone(), trial, 2, &mut rng);
                let plan = code.min_weight_forgery(2, &mut rng);
                assert_eq!(plan.support.len(), code.d_min());
                let tampered = plan.apply(code.field(), &block.codeword);
                assert_eq!(code.detect(&tampered).unwrap(), Detection::Clean);
                for &pos in &plan.support {
                    assert_ne!(tampered[pos].symbols, block.codeword[pos].symbols);
                }
                let untouched = (0..code.n()).filter(|j| !plan.support.contains(j));
                for j in untouched {
                    assert_eq!(tampered[j].symbols, block.codeword[j].symbols);
                }
            }
        }
    }

    #[test]
    fn rs_closed_form_matches_restricted_kernel_solve() {
        // Both routes land in the same one-dimensional restricted kernel,
        // so the closed-form codeword must be a nonzero scalar multiple of
        // the solver's basis vector on every support.
        let f = Field::prime(7).unwrap();
        let code = Code::reed_solomon(f.clone(), 6, 3).unwrap();
        let supports = {
            let mut v = Vec::new();
            for a in 0..6 {
                for b in a + 1..6 {
                    for c in b + 1..6 {
                        for d in c + 1..6 {
                            v.push(vec![a, b, c, d]);
                        }
                    }
                }
            }
            v
        };
        assert_eq!(supports.len(), 15);
        for support in supports {
            let fast = code.min_weight_codeword_on(&support);
            let solved = code.parity_check().solve_homogeneous_restricted(&support).unwrap();
            assert!(code.parity_check().mul_vec(&fast).iter().all(|e| e.is_zero()));
            let p0 = support[0];
            let scale = f.mul(fast[p0], f.inv(solved[p0]).unwrap());
            assert!(!scale.is_zero());
            for j in 0..6 {
                assert_eq!(fast[j], f.mul(scale, solved[j]), "support {support:?} pos {j}");
            }
        }
    }

    #[test]
    fn codeword_plus_codeword_stays_clean() {
        let f = Field::prime(7).unwrap();
        let code = Arc::new(Code::reed_solomon(f.clone(), 6, 3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let block = Block::random(code.clone(), 0, 1, &mut rng);
        let plan = code.min_weight_forgery(1, &mut rng);
        let tampered = plan.apply(&f, &block.codeword);
        assert_eq!(code.detect(&tampered).unwrap(), Detection::Clean);
    }

    #[test]
    fn min_distance_budget_guard() {
        let code = Code::reed_solomon(Field::binary(8).unwrap(), 255, 223).unwrap();
        assert!(matches!(
            code.min_distance_exhaustive().unwrap_err(),
            CodecError::TooLargeForExhaustive { .. }
        ));
    }

    #[test]
    fn encode_rejects_wrong_packet_count() {
        let code = parity_code_3_2();
        let f = Field::gf2();
        let one = vec![Packet::new(0, vec![f.fe(1)])];
        assert!(matches!(code.encode(&one), Err(CodecError::LengthMismatch { .. })));
    }

    #[test]
    fn scramble_round_trip_identity() {
        let f = Field::prime(7).unwrap();
        let code = Arc::new(Code::reed_solomon(f, 6, 3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let blocks: Vec<Block> =
            (0..4).map(|id| Block::random(code.clone(), id, 3, &mut rng)).collect();
        let stream = scramble(&blocks, &mut rng);
        assert_eq!(stream.len(), 24);
        let ids: Vec<u64> = (0..4).collect();
        let restored = unscramble(&stream, 6, &ids).unwrap();
        for (b, r) in blocks.iter().zip(&restored) {
            assert_eq!(&b.codeword, r);
        }
    }

    #[test]
    fn scramble_single_block_is_permutation() {
        let code = Arc::new(Code::hamming(3));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let block = Block::random(code.clone(), 0, 1, &mut rng);
        let stream = scramble(std::slice::from_ref(&block), &mut rng);
        let mut seqs: Vec<u64> = stream.iter().map(|p| p.seq).collect();
        seqs.sort_unstable();
        assert_eq!(seqs, (0..7).collect::<Vec<u64>>());
    }

    #[test]
    fn unscramble_incomplete_stream_fails() {
        let code = Arc::new(Code::hamming(3));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let block = Block::random(code.clone(), 0, 1, &mut rng);
        let mut stream = scramble(std::slice::from_ref(&block), &mut rng);
        stream.pop();
        assert!(matches!(
            unscramble(&stream, 7, &[0]),
            Err(CodecError::MissingPackets { .. })
        ));
    }

    #[test]
    fn two_block_stream_contains_every_packet_once() {
        let code = Arc::new(Code::hamming(3));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let blocks: Vec<Block> =
            (0..2).map(|id| Block::random(code.clone(), id, 1, &mut rng)).collect();
        let stream = scramble(&blocks, &mut rng);
        assert_eq!(stream.len(), 14);
        let mut seqs: Vec<u64> = stream.iter().map(|p| p.seq).collect();
        seqs.sort_unstable();
        assert_eq!(seqs, (0..14).collect::<Vec<u64>>());
    }
}
