//! Arithmetic in GF(p^e), the trace map to GF(p), and additive characters.
//!
//! Elements are stored as a single integer code whose base-`p` digits are the
//! coefficients of the polynomial-basis representation: digit `i` is the
//! coefficient of `t^i`, where `t` is a root of the field modulus. Codes
//! `0..p` are exactly the prime subfield, so `Felt` ordering by code is also a
//! lexicographic order on coefficient vectors (highest power first).
//!
//! The modulus is the least monic irreducible polynomial of degree `e`, where
//! candidates are ranked by the integer code of their lower coefficients. That
//! makes every run bit-reproducible.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HppError, Result};

/// Largest field order we accept.
pub const MAX_FIELD_ORDER: u64 = 1 << 20;

const MAX_DEGREE: usize = 20;

/// An element of a finite field, encoded as its base-`p` coefficient digits.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Felt(u32);

impl Felt {
    pub const ZERO: Felt = Felt(0);

    /// Wraps a code without range checking; callers guarantee `code < d`.
    pub(crate) const fn from_code_unchecked(code: u32) -> Felt {
        Felt(code)
    }

    pub fn code(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Felt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The textual field descriptor `p^e` (a bare `p` means `e = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub p: u64,
    pub e: u32,
}

impl FromStr for FieldDescriptor {
    type Err = HppError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HppError::Parse(format!("field descriptor `{s}` is not of the form p^e"));
        let (p, e) = match s.trim().split_once('^') {
            Some((p, e)) => (p.trim(), e.trim()),
            None => (s.trim(), "1"),
        };
        let p = p.parse::<u64>().map_err(|_| bad())?;
        let e = e.parse::<u32>().map_err(|_| bad())?;
        Ok(FieldDescriptor { p, e })
    }
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p, self.e)
    }
}

/// A finite field GF(p^e). Immutable once built; cheap to clone.
#[derive(Clone)]
pub struct FieldCtx {
    p: u32,
    e: u32,
    d: u32,
    /// Monic modulus, lowest coefficient first, `e + 1` entries.
    modulus: Arc<[u32]>,
    /// `Tr(t^i)` for `i < e`; the trace is GF(p)-linear so this determines it.
    trace_basis: Arc<[u32]>,
    /// `exp(2πi k / p)` for `k < p`.
    roots: Arc<[Complex64]>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("p", &self.p)
            .field("e", &self.e)
            .field("modulus", &self.modulus_string())
            .finish()
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e && self.modulus == other.modulus
    }
}

impl Eq for FieldCtx {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut k = 3;
    while k * k <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 2;
    }
    true
}

impl FieldCtx {
    /// Builds GF(p^e) with the deterministic modulus.
    pub fn new(p: u64, e: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(HppError::NotPrime(p));
        }
        if e == 0 {
            return Err(HppError::ZeroDegree);
        }
        let too_large = HppError::FieldTooLarge {
            p,
            e,
            max: MAX_FIELD_ORDER,
        };
        let d = p
            .checked_pow(e)
            .filter(|&d| d <= MAX_FIELD_ORDER)
            .ok_or(too_large)?;
        let modulus = if e == 1 {
            vec![0, 1]
        } else {
            least_irreducible(p, e as usize).ok_or_else(|| {
                HppError::Invariant(format!("no irreducible polynomial of degree {e} over GF({p})"))
            })?
        };
        let roots: Vec<Complex64> = (0..p)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / p as f64))
            .collect();
        let mut ctx = FieldCtx {
            p: p as u32,
            e,
            d: d as u32,
            modulus: modulus.into(),
            trace_basis: vec![0; e as usize].into(),
            roots: roots.into(),
        };
        let mut basis = Vec::with_capacity(e as usize);
        let mut power = ctx.one();
        let t = if e == 1 { ctx.one() } else { Felt(ctx.p) };
        for _ in 0..e {
            let tr = ctx.trace_by_frobenius(power);
            if tr.0 >= ctx.p {
                return Err(HppError::Invariant(
                    "trace of a basis element left the prime subfield".into(),
                ));
            }
            basis.push(tr.0);
            power = ctx.mul(power, t);
        }
        ctx.trace_basis = basis.into();
        Ok(ctx)
    }

    pub fn prime(p: u64) -> Result<Self> {
        Self::new(p, 1)
    }

    /// Builds the field of the given order, which must be a prime power.
    pub fn with_order(d: u64) -> Result<Self> {
        let (p, e) = prime_power(d).ok_or(HppError::NotPrimePower(d))?;
        Self::new(p, e)
    }

    pub fn from_descriptor(desc: FieldDescriptor) -> Result<Self> {
        Self::new(desc.p, desc.e)
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor {
            p: self.p as u64,
            e: self.e,
        }
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.e
    }

    /// Number of elements `d = p^e`.
    pub fn order(&self) -> u32 {
        self.d
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// The modulus as text, e.g. `t^2+t+1`. Prime fields report `t`.
    pub fn modulus_string(&self) -> String {
        let mut parts = Vec::new();
        for (i, &c) in self.modulus.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => "t".to_string(),
                _ => format!("t^{i}"),
            };
            parts.push(match (c, i) {
                (_, 0) => c.to_string(),
                (1, _) => mono,
                _ => format!("{c}*{mono}"),
            });
        }
        parts.join("+")
    }

    pub fn contains(&self, a: Felt) -> bool {
        a.0 < self.d
    }

    /// Validates a raw code as an element of this field.
    pub fn elem(&self, code: u32) -> Result<Felt> {
        if code < self.d {
            Ok(Felt(code))
        } else {
            Err(HppError::NotInField {
                code,
                order: self.d,
            })
        }
    }

    pub fn check(&self, a: Felt) -> Result<Felt> {
        self.elem(a.0)
    }

    pub fn zero(&self) -> Felt {
        Felt(0)
    }

    pub fn one(&self) -> Felt {
        Felt(1)
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, k: i64) -> Felt {
        Felt(k.rem_euclid(self.p as i64) as u32)
    }

    pub fn elements(&self) -> impl Iterator<Item = Felt> + Clone + use<> {
        (0..self.d).map(Felt)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = Felt> + Clone + use<> {
        (1..self.d).map(Felt)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Felt {
        Felt(rng.random_range(0..self.d))
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Felt {
        Felt(rng.random_range(1..self.d))
    }

    fn digits(&self, a: Felt) -> [u64; MAX_DEGREE] {
        let mut out = [0u64; MAX_DEGREE];
        let mut v = a.0;
        for slot in out.iter_mut().take(self.e as usize) {
            *slot = (v % self.p) as u64;
            v /= self.p;
        }
        out
    }

    fn encode(&self, digits: &[u64]) -> Felt {
        let mut code = 0u32;
        for &c in digits[..self.e as usize].iter().rev() {
            code = code * self.p + c as u32;
        }
        Felt(code)
    }

    /// Coefficients of `a` in the polynomial basis, lowest power first.
    pub fn coefficients(&self, a: Felt) -> Vec<u32> {
        self.digits(a)[..self.e as usize]
            .iter()
            .map(|&c| c as u32)
            .collect()
    }

    pub fn add(&self, a: Felt, b: Felt) -> Felt {
        if self.e == 1 {
            let s = a.0 + b.0;
            return Felt(if s >= self.p { s - self.p } else { s });
        }
        let (x, y) = (self.digits(a), self.digits(b));
        let mut out = [0u64; MAX_DEGREE];
        let p = self.p as u64;
        for i in 0..self.e as usize {
            out[i] = (x[i] + y[i]) % p;
        }
        self.encode(&out)
    }

    pub fn neg(&self, a: Felt) -> Felt {
        if self.e == 1 {
            return Felt(if a.0 == 0 { 0 } else { self.p - a.0 });
        }
        let x = self.digits(a);
        let mut out = [0u64; MAX_DEGREE];
        let p = self.p as u64;
        for i in 0..self.e as usize {
            out[i] = (p - x[i]) % p;
        }
        self.encode(&out)
    }

    pub fn sub(&self, a: Felt, b: Felt) -> Felt {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Felt, b: Felt) -> Felt {
        let p = self.p as u64;
        if self.e == 1 {
            return Felt((a.0 as u64 * b.0 as u64 % p) as u32);
        }
        let e = self.e as usize;
        let (x, y) = (self.digits(a), self.digits(b));
        let mut prod = [0u64; 2 * MAX_DEGREE];
        for i in 0..e {
            if x[i] == 0 {
                continue;
            }
            for j in 0..e {
                prod[i + j] = (prod[i + j] + x[i] * y[j]) % p;
            }
        }
        // t^e = -(m_0 + m_1 t + ... + m_{e-1} t^{e-1})
        for k in (e..2 * e - 1).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            prod[k] = 0;
            for (i, &m) in self.modulus[..e].iter().enumerate() {
                prod[k - e + i] = (prod[k - e + i] + (p - c) * m as u64) % p;
            }
        }
        self.encode(&prod)
    }

    pub fn square(&self, a: Felt) -> Felt {
        self.mul(a, a)
    }

    pub fn pow(&self, a: Felt, mut exp: u64) -> Felt {
        let mut base = a;
        let mut acc = self.one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via `a^(d-2)`; `None` for zero.
    pub fn inv(&self, a: Felt) -> Option<Felt> {
        if a.is_zero() {
            None
        } else {
            Some(self.pow(a, self.d as u64 - 2))
        }
    }

    pub fn div(&self, a: Felt, b: Felt) -> Option<Felt> {
        self.inv(b).map(|b_inv| self.mul(a, b_inv))
    }

    /// The Frobenius automorphism `a ↦ a^p`.
    pub fn frobenius(&self, a: Felt) -> Felt {
        self.pow(a, self.p as u64)
    }

    fn trace_by_frobenius(&self, a: Felt) -> Felt {
        let mut acc = self.zero();
        let mut x = a;
        for _ in 0..self.e {
            acc = self.add(acc, x);
            x = self.frobenius(x);
        }
        acc
    }

    /// Absolute trace `a + a^p + ... + a^(p^(e-1))`, an element of GF(p).
    pub fn trace(&self, a: Felt) -> Felt {
        if self.e == 1 {
            return a;
        }
        let p = self.p as u64;
        let x = self.digits(a);
        let mut acc = 0u64;
        for (i, &tr) in self.trace_basis.iter().enumerate() {
            acc = (acc + x[i] * tr as u64) % p;
        }
        Felt(acc as u32)
    }

    /// The additive character `χ(a) = exp(2πi Tr(a) / p)`.
    pub fn chi(&self, a: Felt) -> Complex64 {
        self.roots[self.trace(a).0 as usize]
    }

    /// `exp(2πi k / p)` for an exponent already reduced to GF(p).
    pub fn root_of_unity(&self, k: Felt) -> Complex64 {
        self.roots[k.0 as usize]
    }

    /// The pairing `⟨v, w⟩ = Σ v_i w_i`.
    pub fn dot(&self, v: &[Felt], w: &[Felt]) -> Result<Felt> {
        if v.len() != w.len() {
            return Err(HppError::LengthMismatch {
                expected: v.len(),
                got: w.len(),
            });
        }
        Ok(v.iter()
            .zip(w)
            .fold(self.zero(), |acc, (&a, &b)| self.add(acc, self.mul(a, b))))
    }
}

/// Splits `d` as `p^e` when it is a prime power.
pub fn prime_power(d: u64) -> Option<(u64, u32)> {
    if d < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= d && !d.is_multiple_of(p) {
        p += 1;
    }
    if !d.is_multiple_of(p) {
        p = d;
    }
    let mut rest = d;
    let mut e = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        e += 1;
    }
    (rest == 1).then_some((p, e))
}

// Polynomials over GF(p), lowest coefficient first. Only used to find moduli.

fn poly_rem(f: &[u64], g: &[u64], p: u64) -> Vec<u64> {
    // g is monic
    let mut r = f.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - dg;
        if c != 0 {
            for (i, &gc) in g.iter().enumerate() {
                r[shift + i] = (r[shift + i] + (p - c) * gc) % p;
            }
        }
        r.pop();
    }
    r
}

fn monic_from_code(code: u64, degree: usize, p: u64) -> Vec<u64> {
    let mut coeffs = Vec::with_capacity(degree + 1);
    let mut v = code;
    for _ in 0..degree {
        coeffs.push(v % p);
        v /= p;
    }
    coeffs.push(1);
    coeffs
}

fn is_irreducible(f: &[u64], p: u64) -> bool {
    let deg = f.len() - 1;
    for k in 1..=deg / 2 {
        let count = p.pow(k as u32);
        for code in 0..count {
            let g = monic_from_code(code, k, p);
            if poly_rem(f, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn least_irreducible(p: u64, e: usize) -> Option<Vec<u32>> {
    let count = p.pow(e as u32);
    (0..count)
        .map(|code| monic_from_code(code, e, p))
        .find(|f| is_irreducible(f, p))
        .map(|f| f.into_iter().map(|c| c as u32).collect())
}
