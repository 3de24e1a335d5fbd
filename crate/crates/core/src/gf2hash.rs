//! GF(2^w) arithmetic and the k-wise independent family H(n, m, k).
//!
//! A member of H(n, m, k) is a coefficient tuple `(a₁, …, a_k)` over
//! GF(2^w) with `w = max(n, m)`. It maps `y ∈ {0,1}^n` to the low `m` bits of
//! `a₁ + a₂·x + … + a_k·x^(k−1)` evaluated at `x = embed(y)`, where `embed`
//! zero-extends `y` (variable 1 is bit 0).

use std::fmt;
use std::ops::BitXor;

use rand::Rng;
use thiserror::Error;

use crate::formula::Assignment;
use crate::gf2_moduli::MODULUS_TERMS;

/// Largest supported field degree.
pub const MAX_WIDTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HashError {
    #[error("field degree {0} outside 1..=256")]
    BadWidth(usize),
    #[error("modulus of degree {0} is not irreducible")]
    ReducibleModulus(usize),
    #[error("invalid hash parameters: n={n}, m={m}, k={k}")]
    BadParams { n: usize, m: usize, k: usize },
    #[error("expected {expected} coefficients, got {got}")]
    CoeffCount { expected: usize, got: usize },
    #[error("coefficient does not fit in {0} bits")]
    CoeffTooWide(usize),
    #[error("input width {got} does not match hash input width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("malformed encoding: {0}")]
    Encoding(String),
    #[error("hash tuple is empty")]
    EmptyTuple,
    #[error("hash tuple members disagree on (n, m, k)")]
    MixedTuple,
}

/// A field element (or any bit vector of at most 256 bits), little-endian.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElem(pub [u64; 4]);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem([0; 4]);
    pub const ONE: FieldElem = FieldElem([1, 0, 0, 0]);

    pub fn from_u64(v: u64) -> Self {
        FieldElem([v, 0, 0, 0])
    }

    /// Zero-extends the low bits of `words`; fails above 256 bits.
    pub fn from_words(words: &[u64]) -> Option<Self> {
        if words.iter().skip(4).any(|&w| w != 0) {
            return None;
        }
        let mut e = FieldElem::ZERO;
        for (d, s) in e.0.iter_mut().zip(words) {
            *d = *s;
        }
        Some(e)
    }

    pub fn from_assignment(a: &Assignment) -> Option<Self> {
        if a.width() > MAX_WIDTH {
            return None;
        }
        Self::from_words(a.words())
    }

    pub fn low_u64(self) -> u64 {
        self.0[0]
    }

    pub fn bit(self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn flip_bit(&mut self, i: usize) {
        self.0[i / 64] ^= 1 << (i % 64);
    }

    pub fn is_zero(self) -> bool {
        self.0 == [0; 4]
    }

    /// Keeps the low `bits` bits.
    pub fn truncate(self, bits: usize) -> Self {
        let mut out = self;
        for (i, w) in out.0.iter_mut().enumerate() {
            let lo = i * 64;
            if bits <= lo {
                *w = 0;
            } else if bits < lo + 64 {
                *w &= (1u64 << (bits - lo)) - 1;
            }
        }
        out
    }

    pub fn bit_len(self) -> usize {
        for i in (0..4).rev() {
            if self.0[i] != 0 {
                return i * 64 + 64 - self.0[i].leading_zeros() as usize;
            }
        }
        0
    }

    /// Big-endian hex with exactly `ceil(bits / 4)` digits.
    pub fn to_hex(self, bits: usize) -> String {
        let digits = bits.div_ceil(4).max(1);
        (0..digits)
            .rev()
            .map(|d| {
                let nib = (self.0[d / 16] >> ((d % 16) * 4)) & 0xf;
                char::from_digit(nib as u32, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.is_empty() || s.len() > 64 {
            return None;
        }
        let mut e = FieldElem::ZERO;
        for (d, c) in s.chars().rev().enumerate() {
            let nib = c.to_digit(16)? as u64;
            e.0[d / 16] |= nib << ((d % 16) * 4);
        }
        Some(e)
    }

    fn shl(self, s: usize) -> Self {
        let mut out = [0u64; 4];
        let (ws, bs) = (s / 64, s % 64);
        for i in (ws..4).rev() {
            let src = i - ws;
            out[i] = self.0[src] << bs;
            if bs > 0 && src > 0 {
                out[i] |= self.0[src - 1] >> (64 - bs);
            }
        }
        FieldElem(out)
    }
}

impl BitXor for FieldElem {
    type Output = FieldElem;

    fn bitxor(self, rhs: FieldElem) -> FieldElem {
        FieldElem([
            self.0[0] ^ rhs.0[0],
            self.0[1] ^ rhs.0[1],
            self.0[2] ^ rhs.0[2],
            self.0[3] ^ rhs.0[3],
        ])
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex(self.bit_len().max(1)))
    }
}

/// The field GF(2^w) together with its irreducible modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FieldSpec {
    w: usize,
    /// Modulus with the leading `x^w` term removed.
    reduction: FieldElem,
}

impl FieldSpec {
    /// Field of degree `w` using the built-in modulus.
    pub fn new(w: usize) -> Result<Self, HashError> {
        if !(1..=MAX_WIDTH).contains(&w) {
            return Err(HashError::BadWidth(w));
        }
        let mut reduction = FieldElem::ONE;
        for &t in MODULUS_TERMS[w - 1] {
            reduction.set_bit(t as usize);
        }
        Ok(FieldSpec { w, reduction })
    }

    /// Field with an explicit modulus (`w + 1` coefficient bits, top bit set).
    pub fn with_modulus(modulus: &[u64]) -> Result<Self, HashError> {
        let degree = poly::degree(modulus).ok_or(HashError::BadWidth(0))?;
        if !(1..=MAX_WIDTH).contains(&degree) {
            return Err(HashError::BadWidth(degree));
        }
        if !verify_irreducible(modulus) {
            return Err(HashError::ReducibleModulus(degree));
        }
        let mut low = modulus.to_vec();
        low[degree / 64] &= !(1u64 << (degree % 64));
        let reduction = FieldElem::from_words(&low).ok_or(HashError::BadWidth(degree))?;
        Ok(FieldSpec {
            w: degree,
            reduction,
        })
    }

    pub fn width(&self) -> usize {
        self.w
    }

    /// The full modulus polynomial as little-endian words (`w + 1` bits).
    pub fn modulus_bits(&self) -> Vec<u64> {
        let mut words = vec![0u64; (self.w + 1).div_ceil(64)];
        for (d, s) in words.iter_mut().zip(self.reduction.0) {
            *d = s;
        }
        words[self.w / 64] |= 1 << (self.w % 64);
        words
    }

    pub fn modulus_hex(&self) -> String {
        let bits = self.modulus_bits();
        let digits = (self.w + 1).div_ceil(4);
        (0..digits)
            .rev()
            .map(|d| {
                let nib = (bits[d / 16] >> ((d % 16) * 4)) & 0xf;
                char::from_digit(nib as u32, 16).unwrap()
            })
            .collect()
    }

    /// Parses a modulus written by [`FieldSpec::modulus_hex`].
    pub fn from_modulus_hex(s: &str) -> Result<Self, HashError> {
        let mut words = vec![0u64; s.len().div_ceil(16).max(1)];
        for (d, c) in s.chars().rev().enumerate() {
            let nib = c
                .to_digit(16)
                .ok_or_else(|| HashError::Encoding(format!("bad hex digit '{c}'")))?;
            words[d / 16] |= (nib as u64) << ((d % 16) * 4);
        }
        Self::with_modulus(&words)
    }

    pub fn contains(&self, a: FieldElem) -> bool {
        a.bit_len() <= self.w
    }

    /// Carry-less product reduced modulo the field polynomial.
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if self.w <= 64 {
            FieldElem::from_u64(self.mul64(a.0[0], b.0[0]))
        } else {
            self.mul_wide(a, b)
        }
    }

    fn mul64(&self, a: u64, b: u64) -> u64 {
        let mut prod: u128 = 0;
        let mut bb = b;
        while bb != 0 {
            let i = bb.trailing_zeros();
            prod ^= (a as u128) << i;
            bb &= bb - 1;
        }
        let w = self.w as u32;
        let red = self.reduction.0[0] as u128;
        while prod >> w != 0 {
            let top = 127 - prod.leading_zeros();
            prod ^= 1u128 << top;
            prod ^= red << (top - w);
        }
        prod as u64
    }

    fn mul_wide(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let mut prod = [0u64; 8];
        for i in 0..self.w {
            if b.bit(i) {
                let (ws, bs) = (i / 64, i % 64);
                for (j, &aw) in a.0.iter().enumerate() {
                    prod[j + ws] ^= aw << bs;
                    if bs > 0 {
                        prod[j + ws + 1] ^= aw >> (64 - bs);
                    }
                }
            }
        }
        for t in (self.w..2 * self.w).rev() {
            if (prod[t / 64] >> (t % 64)) & 1 == 1 {
                prod[t / 64] ^= 1 << (t % 64);
                let r = self.reduction.shl(0);
                let s = t - self.w;
                let (ws, bs) = (s / 64, s % 64);
                for (j, &rw) in r.0.iter().enumerate() {
                    prod[j + ws] ^= rw << bs;
                    if bs > 0 {
                        prod[j + ws + 1] ^= rw >> (64 - bs);
                    }
                }
            }
        }
        FieldElem([prod[0], prod[1], prod[2], prod[3]])
    }

    pub fn square(&self, a: FieldElem) -> FieldElem {
        self.mul(a, a)
    }

    /// `x^t mod p` for `t < 2w`, used to compile reduction into circuits.
    pub fn x_pow(&self, t: usize) -> FieldElem {
        let mut acc = FieldElem::ONE;
        let x = if self.w == 1 {
            // x ≡ 1 mod (x + 1)
            FieldElem::ONE
        } else {
            FieldElem::from_u64(2)
        };
        for _ in 0..t {
            acc = self.mul(acc, x);
        }
        acc
    }

    /// Multiplicative inverse as `a^(2^w − 2)`; zero maps to zero.
    pub fn inv(&self, a: FieldElem) -> FieldElem {
        let mut result = FieldElem::ONE;
        let mut sq = a;
        for _ in 1..self.w {
            sq = self.square(sq);
            result = self.mul(result, sq);
        }
        if self.w == 1 {
            a
        } else {
            result
        }
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElem {
        FieldElem([rng.gen(), rng.gen(), rng.gen(), rng.gen()]).truncate(self.w)
    }
}

/// Field product in `spec`; `a` and `b` must lie in the field.
pub fn gf2_mul(spec: &FieldSpec, a: FieldElem, b: FieldElem) -> FieldElem {
    spec.mul(a, b)
}

/// Polynomial helpers over GF(2) on little-endian word vectors.
pub(crate) mod poly {
    pub fn degree(p: &[u64]) -> Option<usize> {
        p.iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    fn bit(p: &[u64], i: usize) -> bool {
        p.get(i / 64).is_some_and(|w| (w >> (i % 64)) & 1 == 1)
    }

    fn xor_shifted(acc: &mut Vec<u64>, p: &[u64], s: usize) {
        let (ws, bs) = (s / 64, s % 64);
        let need = p.len() + ws + 1;
        if acc.len() < need {
            acc.resize(need, 0);
        }
        for (j, &w) in p.iter().enumerate() {
            acc[j + ws] ^= w << bs;
            if bs > 0 {
                acc[j + ws + 1] ^= w >> (64 - bs);
            }
        }
    }

    pub fn rem(a: &[u64], m: &[u64]) -> Vec<u64> {
        let dm = degree(m).expect("nonzero modulus");
        let mut r = a.to_vec();
        while let Some(dr) = degree(&r) {
            if dr < dm {
                break;
            }
            xor_shifted(&mut r, m, dr - dm);
        }
        trim(r)
    }

    pub fn mulmod(a: &[u64], b: &[u64], m: &[u64]) -> Vec<u64> {
        let mut acc = vec![0u64];
        if let Some(db) = degree(b) {
            for i in 0..=db {
                if bit(b, i) {
                    xor_shifted(&mut acc, a, i);
                }
            }
        }
        rem(&acc, m)
    }

    pub fn gcd(a: &[u64], b: &[u64]) -> Vec<u64> {
        let (mut x, mut y) = (trim(a.to_vec()), trim(b.to_vec()));
        while degree(&y).is_some() {
            let r = rem(&x, &y);
            x = y;
            y = r;
        }
        x
    }

    pub fn trim(mut p: Vec<u64>) -> Vec<u64> {
        while p.len() > 1 && *p.last().unwrap() == 0 {
            p.pop();
        }
        if p.is_empty() {
            p.push(0);
        }
        p
    }

    pub fn is_one(p: &[u64]) -> bool {
        degree(p) == Some(0)
    }
}

/// Irreducibility over GF(2) by Ben-Or's test: `p` of degree `d` is
/// irreducible iff `gcd(x^(2^i) − x, p) = 1` for every `1 ≤ i ≤ d/2`.
pub fn verify_irreducible(p: &[u64]) -> bool {
    let Some(d) = poly::degree(p) else {
        return false;
    };
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let x = vec![2u64];
    let mut t = x.clone();
    for _ in 1..=d / 2 {
        t = poly::mulmod(&t, &t, p);
        let mut diff = t.clone();
        diff[0] ^= 2;
        let g = poly::gcd(p, &poly::trim(diff));
        if !poly::is_one(&g) {
            return false;
        }
    }
    true
}

/// One member of H(n, m, k).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HashFunction {
    n: usize,
    m: usize,
    k: usize,
    spec: FieldSpec,
    coeffs: Vec<FieldElem>,
}

fn check_params(n: usize, m: usize, k: usize) -> Result<usize, HashError> {
    let w = n.max(m);
    if n == 0 || m == 0 || k < 2 || w > MAX_WIDTH {
        return Err(HashError::BadParams { n, m, k });
    }
    Ok(w)
}

impl HashFunction {
    /// Builds a member over the built-in field of degree `max(n, m)`.
    pub fn new(n: usize, m: usize, k: usize, coeffs: Vec<FieldElem>) -> Result<Self, HashError> {
        let w = check_params(n, m, k)?;
        Self::with_spec(n, m, k, FieldSpec::new(w)?, coeffs)
    }

    pub fn with_spec(
        n: usize,
        m: usize,
        k: usize,
        spec: FieldSpec,
        coeffs: Vec<FieldElem>,
    ) -> Result<Self, HashError> {
        let w = check_params(n, m, k)?;
        if spec.width() != w {
            return Err(HashError::BadWidth(spec.width()));
        }
        if coeffs.len() != k {
            return Err(HashError::CoeffCount {
                expected: k,
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !spec.contains(*c)) {
            return Err(HashError::CoeffTooWide(w));
        }
        Ok(HashFunction {
            n,
            m,
            k,
            spec,
            coeffs,
        })
    }

    /// The identity-like member `a₂ = 1`, other coefficients zero.
    pub fn identity(n: usize, m: usize) -> Result<Self, HashError> {
        let mut coeffs = vec![FieldElem::ZERO; 2];
        coeffs[1] = FieldElem::ONE;
        Self::new(n, m, 2, coeffs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn w(&self) -> usize {
        self.spec.width()
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [FieldElem] {
        &mut self.coeffs
    }

    /// Hash of an embedded input (no width check).
    pub fn eval_elem(&self, x: FieldElem) -> FieldElem {
        let mut acc = *self.coeffs.last().expect("k >= 2");
        for a in self.coeffs.iter().rev().skip(1) {
            acc = self.spec.mul(acc, x) ^ *a;
        }
        acc.truncate(self.m)
    }

    pub fn eval(&self, y: &Assignment) -> Result<FieldElem, HashError> {
        if y.width() != self.n {
            return Err(HashError::WidthMismatch {
                expected: self.n,
                got: y.width(),
            });
        }
        let x = FieldElem::from_assignment(y).ok_or(HashError::BadWidth(y.width()))?;
        Ok(self.eval_elem(x))
    }

    /// Coefficients packed into `k·w` bits (coefficient `i` at bits
    /// `i·w..(i+1)·w`, LSB first), padded to whole bytes.
    pub fn encode(&self) -> Vec<u8> {
        let w = self.w();
        let total = self.k * w;
        let mut out = vec![0u8; total.div_ceil(8)];
        for (i, c) in self.coeffs.iter().enumerate() {
            for b in 0..w {
                if c.bit(b) {
                    let pos = i * w + b;
                    out[pos / 8] |= 1 << (pos % 8);
                }
            }
        }
        out
    }

    pub fn decode(n: usize, m: usize, k: usize, spec: FieldSpec, bytes: &[u8]) -> Result<Self, HashError> {
        let w = check_params(n, m, k)?;
        let total = k * w;
        if bytes.len() != total.div_ceil(8) {
            return Err(HashError::Encoding(format!(
                "expected {} bytes, got {}",
                total.div_ceil(8),
                bytes.len()
            )));
        }
        for pos in total..bytes.len() * 8 {
            if (bytes[pos / 8] >> (pos % 8)) & 1 == 1 {
                return Err(HashError::Encoding("nonzero padding".into()));
            }
        }
        let mut coeffs = vec![FieldElem::ZERO; k];
        for (i, c) in coeffs.iter_mut().enumerate() {
            for b in 0..w {
                let pos = i * w + b;
                if (bytes[pos / 8] >> (pos % 8)) & 1 == 1 {
                    c.set_bit(b);
                }
            }
        }
        Self::with_spec(n, m, k, spec, coeffs)
    }

    pub fn coeffs_hex(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_hex(self.w())).collect()
    }

    /// Prepares the member for bulk evaluation.
    pub fn compile(&self) -> CompiledHash {
        CompiledHash::new(self)
    }
}

/// A hash prepared for evaluating many inputs.
///
/// For `k = 2` the map `y ↦ a₁ + a₂·y` is GF(2)-affine, so it is tabulated
/// per input byte and evaluated with table lookups; larger `k` falls back to
/// Horner evaluation.
#[derive(Clone, Debug)]
pub struct CompiledHash {
    kind: Compiled,
}

#[derive(Clone, Debug)]
enum Compiled {
    Affine64 { constant: u64, tables: Vec<[u64; 256]> },
    AffineWide { constant: FieldElem, tables: Vec<Vec<FieldElem>> },
    Poly(HashFunction),
}

impl CompiledHash {
    fn new(h: &HashFunction) -> Self {
        if h.k != 2 {
            return CompiledHash {
                kind: Compiled::Poly(h.clone()),
            };
        }
        let bytes = h.n.div_ceil(8);
        let basis: Vec<FieldElem> = (0..h.n)
            .map(|j| {
                let mut xj = FieldElem::ZERO;
                xj.set_bit(j);
                h.spec.mul(h.coeffs[1], xj).truncate(h.m)
            })
            .collect();
        let constant = h.coeffs[0].truncate(h.m);
        let mut tables = vec![vec![FieldElem::ZERO; 256]; bytes];
        for (b, table) in tables.iter_mut().enumerate() {
            for v in 1..256usize {
                let low = v.trailing_zeros() as usize;
                let j = 8 * b + low;
                let prev = table[v & (v - 1)];
                table[v] = if j < h.n { prev ^ basis[j] } else { prev };
            }
        }
        let kind = if h.m <= 64 {
            Compiled::Affine64 {
                constant: constant.low_u64(),
                tables: tables
                    .iter()
                    .map(|t| {
                        let mut out = [0u64; 256];
                        for (o, e) in out.iter_mut().zip(t) {
                            *o = e.low_u64();
                        }
                        out
                    })
                    .collect(),
            }
        } else {
            Compiled::AffineWide { constant, tables }
        };
        CompiledHash { kind }
    }

    #[inline]
    pub fn eval(&self, x: &FieldElem) -> FieldElem {
        match &self.kind {
            Compiled::Affine64 { .. } => FieldElem::from_u64(self.eval_u64(x)),
            Compiled::AffineWide { constant, tables } => {
                let mut acc = *constant;
                for (b, t) in tables.iter().enumerate() {
                    let byte = (x.0[b / 8] >> (8 * (b % 8))) & 0xff;
                    acc = acc ^ t[byte as usize];
                }
                acc
            }
            Compiled::Poly(h) => h.eval_elem(*x),
        }
    }

    /// Cell index as a `u64`; only meaningful when `m ≤ 64`.
    #[inline]
    pub fn eval_u64(&self, x: &FieldElem) -> u64 {
        match &self.kind {
            Compiled::Affine64 { constant, tables } => {
                let mut acc = *constant;
                for (b, t) in tables.iter().enumerate() {
                    let byte = (x.0[b / 8] >> (8 * (b % 8))) & 0xff;
                    acc ^= t[byte as usize];
                }
                acc
            }
            other => {
                let c = CompiledHash { kind: other.clone() };
                c.eval(x).low_u64()
            }
        }
    }
}

/// Members `h₁ … h_count` sharing the same (n, m, k).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HashTuple {
    members: Vec<HashFunction>,
}

impl HashTuple {
    pub fn new(members: Vec<HashFunction>) -> Result<Self, HashError> {
        let first = members.first().ok_or(HashError::EmptyTuple)?;
        let key = (first.n, first.m, first.k, first.spec);
        if members.iter().any(|h| (h.n, h.m, h.k, h.spec) != key) {
            return Err(HashError::MixedTuple);
        }
        Ok(HashTuple { members })
    }

    pub fn members(&self) -> &[HashFunction] {
        &self.members
    }

    pub fn into_members(self) -> Vec<HashFunction> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n(&self) -> usize {
        self.members[0].n
    }

    pub fn m(&self) -> usize {
        self.members[0].m
    }

    pub fn k(&self) -> usize {
        self.members[0].k
    }
}

pub fn sample_hash<R: Rng + ?Sized>(n: usize, m: usize, k: usize, rng: &mut R) -> Result<HashFunction, HashError> {
    let w = check_params(n, m, k)?;
    let spec = FieldSpec::new(w)?;
    let coeffs = (0..k).map(|_| spec.random(rng)).collect();
    HashFunction::with_spec(n, m, k, spec, coeffs)
}

pub fn sample_tuple<R: Rng + ?Sized>(
    count: usize,
    n: usize,
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<HashTuple, HashError> {
    let members = (0..count)
        .map(|_| sample_hash(n, m, k, rng))
        .collect::<Result<Vec<_>, _>>()?;
    HashTuple::new(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(v: u64) -> FieldElem {
        FieldElem::from_u64(v)
    }

    /// Independent product: shift-and-add with reduction after every shift.
    fn peasant_mul(spec: &FieldSpec, a: FieldElem, b: FieldElem) -> FieldElem {
        let w = spec.width();
        let mut acc = FieldElem::ZERO;
        let mut cur = a;
        for i in 0..w {
            if b.bit(i) {
                acc = acc ^ cur;
            }
            let carry = cur.bit(w - 1);
            cur = cur.shl(1).truncate(w);
            if carry {
                cur = cur ^ spec.reduction;
            }
        }
        acc
    }

    /// Brute-force irreducibility by trial division with every polynomial of
    /// degree 1..=d/2.
    fn trial_division_irreducible(p: u64) -> bool {
        let d = 63 - p.leading_zeros() as usize;
        if d == 0 {
            return false;
        }
        for q in 2u64..(1 << (d / 2 + 1)) {
            if poly::degree(&poly::rem(&[p], &[q])).is_none() && q != p {
                return false;
            }
        }
        true
    }

    #[test]
    fn gf8_examples() {
        let spec = FieldSpec::new(3).unwrap();
        assert_eq!(spec.modulus_hex(), "b");
        assert_eq!(spec.mul(e(0b010), e(0b010)), e(0b100));
        for a in 0..8 {
            assert_eq!(spec.mul(e(a), e(1)), e(a));
        }
        assert_eq!(gf2_mul(&spec, e(0b110), e(0b011)), e(0b001));
    }

    #[test]
    fn small_irreducibility_examples() {
        assert!(verify_irreducible(&[0b111]));
        assert!(!verify_irreducible(&[0b101]));
        assert!(verify_irreducible(&[0b1011]));
        assert!(!verify_irreducible(&[0]));
        assert!(!verify_irreducible(&[1]));
    }

    #[test]
    fn irreducibility_agrees_with_trial_division() {
        for p in 2u64..(1 << 11) {
            assert_eq!(verify_irreducible(&[p]), trial_division_irreducible(p), "p = {p:#b}");
        }
    }

    #[test]
    fn every_builtin_modulus_is_irreducible() {
        for w in 1..=MAX_WIDTH {
            let spec = FieldSpec::new(w).unwrap();
            let bits = spec.modulus_bits();
            assert_eq!(poly::degree(&bits), Some(w));
            assert!(verify_irreducible(&bits), "w = {w}");
            assert_eq!(FieldSpec::from_modulus_hex(&spec.modulus_hex()).unwrap(), spec);
        }
    }

    #[test]
    fn reducible_custom_modulus_is_rejected() {
        assert_eq!(FieldSpec::with_modulus(&[0b101]), Err(HashError::ReducibleModulus(2)));
        assert!(FieldSpec::new(0).is_err());
        assert!(FieldSpec::new(257).is_err());
    }

    #[test]
    fn mul_matches_peasant_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for w in (1..=MAX_WIDTH).step_by(7).chain([64, 65, 128, 255, 256]) {
            let spec = FieldSpec::new(w).unwrap();
            for _ in 0..50 {
                let (a, b) = (spec.random(&mut rng), spec.random(&mut rng));
                assert_eq!(spec.mul(a, b), peasant_mul(&spec, a, b), "w = {w}");
            }
        }
    }

    #[test]
    fn field_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for w in [3, 8, 16, 64, 200] {
            let spec = FieldSpec::new(w).unwrap();
            let rounds = if w > 64 { 500 } else { 10_000 };
            for _ in 0..rounds {
                let (a, b, c) = (spec.random(&mut rng), spec.random(&mut rng), spec.random(&mut rng));
                assert_eq!(spec.mul(spec.mul(a, b), c), spec.mul(a, spec.mul(b, c)));
                assert_eq!(spec.mul(a, b), spec.mul(b, a));
                assert_eq!(spec.mul(a, b ^ c), spec.mul(a, b) ^ spec.mul(a, c));
                assert_eq!(spec.mul(a, FieldElem::ONE), a);
                if !a.is_zero() {
                    assert_eq!(spec.mul(a, spec.inv(a)), FieldElem::ONE, "w = {w}");
                }
            }
        }
    }

    #[test]
    fn x_pow_reduces() {
        let spec = FieldSpec::new(3).unwrap();
        assert_eq!(spec.x_pow(2), e(0b100));
        assert_eq!(spec.x_pow(3), e(0b011));
        assert_eq!(spec.x_pow(4), e(0b110));
    }

    #[test]
    fn zero_hash_maps_everything_to_cell_zero() {
        let h = HashFunction::new(4, 2, 3, vec![FieldElem::ZERO; 3]).unwrap();
        for v in 0..16 {
            assert_eq!(h.eval(&Assignment::from_u64(4, v)).unwrap(), FieldElem::ZERO);
        }
    }

    #[test]
    fn identity_hash_embeds_input() {
        let h = HashFunction::identity(5, 5).unwrap();
        for v in 0..32 {
            assert_eq!(h.eval(&Assignment::from_u64(5, v)).unwrap(), e(v));
        }
        let truncated = HashFunction::identity(5, 2).unwrap();
        assert_eq!(truncated.eval(&Assignment::from_u64(5, 0b10111)).unwrap(), e(0b11));
    }

    #[test]
    fn eval_rejects_width_mismatch() {
        let h = HashFunction::identity(4, 2).unwrap();
        assert_eq!(
            h.eval(&Assignment::from_u64(5, 0)),
            Err(HashError::WidthMismatch { expected: 4, got: 5 })
        );
    }

    #[test]
    fn compiled_hash_matches_horner() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, m, k) in [(4, 2, 2), (10, 7, 2), (40, 20, 2), (70, 70, 2), (100, 3, 2), (6, 3, 4), (9, 9, 9)] {
            let h = sample_hash(n, m, k, &mut rng).unwrap();
            let c = h.compile();
            for _ in 0..200 {
                let x = FieldSpec::new(n).unwrap().random(&mut rng);
                assert_eq!(c.eval(&x), h.eval_elem(x));
                if m <= 64 {
                    assert_eq!(c.eval_u64(&x), h.eval_elem(x).low_u64());
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_structural() {
        let a = sample_tuple(3, 10, 4, 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_tuple(3, 10, 4, 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        for h in a.members() {
            assert_eq!(h.coeffs().len(), 2);
            assert!(h.coeffs().iter().all(|c| c.bit_len() <= 10));
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_hashes() {
        // Two independent draws at w = 16, k = 2 collide with probability 2^-32.
        for s in 0..100u64 {
            let a = sample_hash(16, 8, 2, &mut ChaCha8Rng::seed_from_u64(2 * s)).unwrap();
            let b = sample_hash(16, 8, 2, &mut ChaCha8Rng::seed_from_u64(2 * s + 1)).unwrap();
            assert_ne!(a, b);
        }
    }

    #[test]
    fn encoding_length_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (n, m, k) in [(3, 1, 2), (5, 5, 3), (13, 2, 2), (130, 9, 2)] {
            let h = sample_hash(n, m, k, &mut rng).unwrap();
            let bytes = h.encode();
            assert_eq!(bytes.len(), (k * n.max(m)).div_ceil(8));
            assert_eq!(HashFunction::decode(n, m, k, *h.spec(), &bytes).unwrap(), h);
        }
        let spec = FieldSpec::new(3).unwrap();
        assert!(HashFunction::decode(3, 1, 2, spec, &[0xff]).is_err());
    }

    #[test]
    fn hex_round_trip() {
        let x = FieldElem([0x1234, 0, 0xabcd, 0]);
        assert_eq!(FieldElem::from_hex(&x.to_hex(256)).unwrap(), x);
        assert_eq!(e(5).to_hex(3), "5");
        assert_eq!(e(5).to_hex(9), "005");
    }

    #[test]
    fn tuple_rejects_mixed_parameters() {
        let a = HashFunction::identity(4, 2).unwrap();
        let b = HashFunction::identity(4, 3).unwrap();
        assert_eq!(HashTuple::new(vec![a, b]), Err(HashError::MixedTuple));
        assert_eq!(HashTuple::new(vec![]), Err(HashError::EmptyTuple));
    }

    #[test]
    fn pairwise_joint_probability_matches_target() {
        // Pr[h(y1)=α1 ∧ h(y2)=α2] = 2^-2m for k = 2, n = m = 4.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (y1, y2) = (e(0b0011), e(0b1010));
        let (a1, a2) = (e(0b0101), e(0b1110));
        let draws = 10_000;
        let hits = (0..draws)
            .filter(|_| {
                let h = sample_hash(4, 4, 2, &mut rng).unwrap();
                h.eval_elem(y1) == a1 && h.eval_elem(y2) == a2
            })
            .count();
        let p = 1.0 / 256.0;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let freq = hits as f64 / draws as f64;
        assert!((freq - p).abs() <= 4.0 * se, "freq {freq} vs {p} ± {}", 4.0 * se);
    }
}
