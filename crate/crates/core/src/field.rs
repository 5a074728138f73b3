//! Finite fields GF(p) and GF(2^w) with table-backed arithmetic.
//!
//! Supported orders are primes up to 2^16 and binary extensions 2^w with
//! w <= 16. Multiplication, inversion and exponentiation go through
//! exp/log tables built over a generator of the multiplicative group, so
//! every operation after construction is a couple of table lookups.
//! Construction validates the order (primality, or irreducibility of the
//! reduction polynomial by exhaustive trial division) and spot-checks the
//! field axioms before returning.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

/// Largest supported field order (2^16).
pub const MAX_ORDER: u32 = 1 << 16;

/// Default reduction polynomials per extension degree w (index 1..=16).
/// Each entry is the bit representation of a degree-w irreducible
/// polynomial over GF(2); e.g. 0x11D = x^8 + x^4 + x^3 + x^2 + 1.
pub const DEFAULT_POLYS: [u32; 17] = [
    0, // unused
    0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a supported prime (<= 2^16) or 2^w (w <= 16)")]
    NotPrimePower(u64),
    #[error("polynomial {poly:#x} is not irreducible of degree {degree}")]
    ReduciblePolynomial { poly: u32, degree: u32 },
    #[error("cannot invert zero")]
    ZeroInverse,
    #[error("value {value} out of range for field of order {order}")]
    ElementOutOfRange { value: u32, order: u32 },
}

/// A field element: an integer in `[0, fq)` in the canonical encoding of
/// its field (residue for prime fields, polynomial bits for binary ones).
///
/// Elements do not carry a field reference; containers that combine
/// elements from several sources (matrices, codes) check field equality
/// at their own boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Fe(u16);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldKind {
    Prime { p: u32 },
    Binary { width: u32, poly: u32 },
}

/// An immutable finite field. Share between threads via `Arc`.
pub struct Field {
    order: u32,
    kind: FieldKind,
    generator: u16,
    /// exp[i] = g^i for i in 0..2*(order-1); doubled so that
    /// exp[log a + log b] never needs a modulo.
    exp: Vec<u16>,
    /// log[v] for v in 1..order; log[0] is a sentinel and never read.
    log: Vec<u16>,
    /// inv[v] for v in 1..order.
    inv: Vec<u16>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("order", &self.order)
            .field("kind", &self.kind)
            .field("generator", &self.generator)
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Field {}

impl Field {
    /// GF(p) for a prime p <= 2^16.
    pub fn prime(p: u32) -> Result<Arc<Field>, FieldError> {
        if p < 2 || p > MAX_ORDER || !is_prime_u32(p) {
            return Err(FieldError::NotPrimePower(p as u64));
        }
        Ok(Arc::new(Field::build(p, FieldKind::Prime { p })))
    }

    /// GF(2^w) with the default reduction polynomial for the width.
    pub fn binary(width: u32) -> Result<Arc<Field>, FieldError> {
        if width == 0 || width > 16 {
            return Err(FieldError::NotPrimePower(1u64 << width.min(63)));
        }
        Self::binary_with_poly(width, DEFAULT_POLYS[width as usize])
    }

    /// GF(2^w) with an explicit reduction polynomial (bit representation,
    /// degree must equal `width`). Irreducibility is verified by trial
    /// division against every polynomial of degree 1..=w/2.
    pub fn binary_with_poly(width: u32, poly: u32) -> Result<Arc<Field>, FieldError> {
        if width == 0 || width > 16 {
            return Err(FieldError::NotPrimePower(1u64 << width.min(63)));
        }
        if poly_degree(poly) != width || !poly_irreducible(poly) {
            return Err(FieldError::ReduciblePolynomial { poly, degree: width });
        }
        let order = 1u32 << width;
        Ok(Arc::new(Field::build(order, FieldKind::Binary { width, poly })))
    }

    /// The binary field GF(2); add is XOR, mul is AND.
    pub fn gf2() -> Arc<Field> {
        Field::binary(1).expect("GF(2) always constructs")
    }

    fn build(order: u32, kind: FieldKind) -> Field {
        let raw_mul = |a: u32, b: u32| -> u32 {
            match kind {
                FieldKind::Prime { p } => ((a as u64 * b as u64) % p as u64) as u32,
                FieldKind::Binary { width, poly } => clmul_mod(a, b, poly, width),
            }
        };

        let generator = find_generator(order, &raw_mul);
        let group = (order - 1) as usize;
        let mut exp = vec![0u16; 2 * group.max(1)];
        let mut log = vec![0u16; order as usize];
        let mut acc: u32 = 1;
        for (i, slot) in exp.iter_mut().take(group).enumerate() {
            *slot = acc as u16;
            log[acc as usize] = i as u16;
            acc = raw_mul(acc, generator as u32);
        }
        assert_eq!(acc, 1, "generator must have order fq-1");
        for i in 0..group {
            exp[group + i] = exp[i];
        }
        let mut inv = vec![0u16; order as usize];
        for v in 1..order {
            let l = log[v as usize] as usize;
            inv[v as usize] = exp[(group - l) % group];
        }

        let field = Field { order, kind, generator: generator as u16, exp, log, inv };
        field.spot_check();
        field
    }

    /// Construction-time sanity pass: a * a^-1 = 1 for every nonzero a,
    /// plus associativity/distributivity on a fixed pseudorandom sample.
    fn spot_check(&self) {
        for v in 1..self.order {
            let a = Fe(v as u16);
            assert_eq!(self.mul(a, Fe(self.inv[v as usize])), Fe::ONE);
        }
        let mut state = 0x2545_F491_4F6C_DD1Du64 ^ self.order as u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..64 {
            let a = Fe((next() % self.order as u64) as u16);
            let b = Fe((next() % self.order as u64) as u16);
            let c = Fe((next() % self.order as u64) as u16);
            assert_eq!(self.add(self.add(a, b), c), self.add(a, self.add(b, c)));
            assert_eq!(self.mul(self.mul(a, b), c), self.mul(a, self.mul(b, c)));
            assert_eq!(
                self.mul(a, self.add(b, c)),
                self.add(self.mul(a, b), self.mul(a, c))
            );
        }
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn characteristic(&self) -> u32 {
        match self.kind {
            FieldKind::Prime { p } => p,
            FieldKind::Binary { .. } => 2,
        }
    }

    /// A fixed generator of the multiplicative group.
    pub fn generator(&self) -> Fe {
        Fe(self.generator)
    }

    pub fn element(&self, value: u32) -> Result<Fe, FieldError> {
        if value < self.order {
            Ok(Fe(value as u16))
        } else {
            Err(FieldError::ElementOutOfRange { value, order: self.order })
        }
    }

    /// Panicking element constructor for in-range literals.
    #[inline]
    pub fn fe(&self, value: u32) -> Fe {
        assert!(value < self.order, "{value} out of range for GF({})", self.order);
        Fe(value as u16)
    }

    #[inline]
    pub fn zero(&self) -> Fe {
        Fe::ZERO
    }

    #[inline]
    pub fn one(&self) -> Fe {
        Fe::ONE
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        match self.kind {
            FieldKind::Prime { p } => {
                let s = a.0 as u32 + b.0 as u32;
                Fe(if s >= p { (s - p) as u16 } else { s as u16 })
            }
            FieldKind::Binary { .. } => Fe(a.0 ^ b.0),
        }
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        match self.kind {
            FieldKind::Prime { p } => {
                let s = a.0 as u32 + p - b.0 as u32;
                Fe(if s >= p { (s - p) as u16 } else { s as u16 })
            }
            FieldKind::Binary { .. } => Fe(a.0 ^ b.0),
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        self.sub(Fe::ZERO, a)
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        let idx = self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize;
        Fe(self.exp[idx])
    }

    pub fn inv(&self, a: Fe) -> Result<Fe, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(Fe(self.inv[a.0 as usize]))
    }

    /// a^e with the convention 0^0 = 1.
    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if e == 0 {
            return Fe::ONE;
        }
        if a.0 == 0 {
            return Fe::ZERO;
        }
        let group = (self.order - 1) as u64;
        let idx = (self.log[a.0 as usize] as u64 * (e % group)) % group;
        Fe(self.exp[idx as usize])
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> + '_ {
        (0..self.order).map(|v| Fe(v as u16))
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = Fe> + '_ {
        (1..self.order).map(|v| Fe(v as u16))
    }

    /// Uniform element.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.random_range(0..self.order) as u16)
    }

    /// Uniform nonzero element.
    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.random_range(1..self.order) as u16)
    }
}

fn is_prime_u32(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn poly_degree(p: u32) -> u32 {
    32 - p.leading_zeros() - 1
}

/// Remainder of polynomial division over GF(2).
fn poly_mod(mut a: u64, b: u64) -> u64 {
    let db = 63 - b.leading_zeros() as u64;
    while a != 0 {
        let da = 63 - a.leading_zeros() as u64;
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Exhaustive trial division by every polynomial of degree 1..=deg/2.
fn poly_irreducible(p: u32) -> bool {
    let deg = poly_degree(p);
    if deg == 0 {
        return false;
    }
    for d in 1..=deg / 2 {
        for cand in (1u64 << d)..(1u64 << (d + 1)) {
            if poly_mod(p as u64, cand) == 0 {
                return false;
            }
        }
    }
    true
}

/// Carryless multiply of two field elements modulo the reduction polynomial.
fn clmul_mod(mut a: u32, mut b: u32, poly: u32, width: u32) -> u32 {
    let mut acc = 0u32;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> width != 0 {
            a ^= poly;
        }
    }
    acc
}

/// Smallest element of multiplicative order fq-1, found by checking
/// g^((fq-1)/f) != 1 for every prime factor f of fq-1.
fn find_generator(order: u32, raw_mul: &impl Fn(u32, u32) -> u32) -> u32 {
    let group = order - 1;
    let factors = prime_factors(group);
    let pow = |mut base: u32, mut e: u32| -> u32 {
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = raw_mul(acc, base);
            }
            base = raw_mul(base, base);
            e >>= 1;
        }
        acc
    };
    for g in 1..order {
        if factors.iter().all(|&f| pow(g, group / f) != 1) {
            return g;
        }
    }
    unreachable!("the multiplicative group of a field is cyclic");
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2u32;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}
