//! Polynomials over a finite field.
//!
//! [`UniPoly`] is a dense coefficient vector. [`MultiPoly`] maps exponent
//! vectors (kept in graded-lex order) to nonzero coefficients. Neither type
//! stores its field; operations take the [`FieldCtx`] explicitly.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{HppError, Result};
use crate::gf::{Felt, FieldCtx};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct UniPoly {
    coeffs: Vec<Felt>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Felt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    /// `q_1 X + q_2 X^2 + ... + q_n X^n` from `(q_1, ..., q_n)`.
    pub fn from_nonconstant(q: &[Felt]) -> Self {
        let mut coeffs = Vec::with_capacity(q.len() + 1);
        coeffs.push(Felt::ZERO);
        coeffs.extend_from_slice(q);
        Self::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> Felt {
        self.coeffs.get(i).copied().unwrap_or(Felt::ZERO)
    }

    pub fn coeffs(&self) -> &[Felt] {
        &self.coeffs
    }

    pub fn constant_term(&self) -> Felt {
        self.coeff(0)
    }

    /// `(q_1, ..., q_n)`, zero-padded to length `n`.
    pub fn nonconstant_coeffs(&self, n: usize) -> Vec<Felt> {
        (1..=n).map(|i| self.coeff(i)).collect()
    }

    pub fn without_constant(&self) -> Self {
        let mut c = self.coeffs.clone();
        if let Some(c0) = c.first_mut() {
            *c0 = Felt::ZERO;
        }
        Self::new(c)
    }

    /// Horner evaluation.
    pub fn eval(&self, f: &FieldCtx, r: Felt) -> Felt {
        self.coeffs
            .iter()
            .rev()
            .fold(f.zero(), |acc, &c| f.add(f.mul(acc, r), c))
    }

    pub fn add(&self, f: &FieldCtx, other: &UniPoly) -> UniPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        UniPoly::new(
            (0..len)
                .map(|i| f.add(self.coeff(i), other.coeff(i)))
                .collect(),
        )
    }

    pub fn sub(&self, f: &FieldCtx, other: &UniPoly) -> UniPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        UniPoly::new(
            (0..len)
                .map(|i| f.sub(self.coeff(i), other.coeff(i)))
                .collect(),
        )
    }

    pub fn scale(&self, f: &FieldCtx, k: Felt) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|&c| f.mul(c, k)).collect())
    }

    fn mul_linear(&self, f: &FieldCtx, root: Felt) -> UniPoly {
        // (X - root) * self
        let mut out = vec![Felt::ZERO; self.coeffs.len() + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i + 1] = f.add(out[i + 1], c);
            out[i] = f.sub(out[i], f.mul(c, root));
        }
        UniPoly::new(out)
    }

    pub fn to_multi(&self) -> MultiPoly {
        let mut q = MultiPoly::new(1);
        for (i, &c) in self.coeffs.iter().enumerate() {
            q.add_term_raw(Monomial(vec![i as u32]), c);
        }
        q
    }

    /// Parses `c0+c1*X^1+c2*X^2` (also accepts `X`, `X^k`, `c*X`).
    pub fn parse(f: &FieldCtx, s: &str) -> Result<Self> {
        let m = MultiPoly::parse(f, s, 1)?;
        Ok(m.to_uni().expect("arity 1"))
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(out, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(out, "+")?;
            }
            first = false;
            if i == 0 {
                write!(out, "{c}")?;
            } else {
                write!(out, "{c}*X^{i}")?;
            }
        }
        Ok(())
    }
}

/// Unique polynomial of degree at most `degree_bound` through `points`.
///
/// Uses the first `degree_bound + 1` points; any further points must lie on
/// the same polynomial.
pub fn lagrange_interpolate(
    f: &FieldCtx,
    points: &[(Felt, Felt)],
    degree_bound: usize,
) -> Result<UniPoly> {
    let needed = degree_bound + 1;
    if points.len() < needed {
        return Err(HppError::TooFewPoints {
            needed,
            got: points.len(),
        });
    }
    if f.order() as usize <= degree_bound {
        return Err(HppError::FieldTooSmall {
            d: f.order(),
            n: degree_bound,
        });
    }
    for (i, (ti, _)) in points.iter().enumerate() {
        if points[..i].iter().any(|(tj, _)| tj == ti) {
            return Err(HppError::DuplicateAbscissa(ti.code()));
        }
    }
    let (basis_pts, extra) = points.split_at(needed);
    let mut acc = UniPoly::zero();
    for (i, &(ti, yi)) in basis_pts.iter().enumerate() {
        let mut num = UniPoly::new(vec![f.one()]);
        let mut denom = f.one();
        for (j, &(tj, _)) in basis_pts.iter().enumerate() {
            if i == j {
                continue;
            }
            num = num.mul_linear(f, tj);
            denom = f.mul(denom, f.sub(ti, tj));
        }
        let w = f.div(yi, denom).expect("abscissae are distinct");
        acc = acc.add(f, &num.scale(f, w));
    }
    if extra.iter().any(|&(t, y)| acc.eval(f, t) != y) {
        return Err(HppError::InconsistentPoints(degree_bound));
    }
    Ok(acc)
}

/// An exponent vector. Ordered by total degree, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn zero(arity: usize) -> Self {
        Monomial(vec![0; arity])
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponent vectors of the given arity with `1 ≤ |α| ≤ max_degree`, in
/// graded-lex order.
pub fn monomials_up_to(arity: usize, max_degree: u32) -> Vec<Monomial> {
    fn rec(arity: usize, budget: u32, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if prefix.len() == arity {
            out.push(Monomial(prefix.clone()));
            return;
        }
        for a in 0..=budget {
            prefix.push(a);
            rec(arity, budget - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(arity, max_degree, &mut Vec::new(), &mut out);
    out.retain(|m| !m.is_constant());
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiPoly {
    arity: usize,
    terms: BTreeMap<Monomial, Felt>,
}

impl MultiPoly {
    pub fn new(arity: usize) -> Self {
        MultiPoly {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, Felt)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> Felt {
        self.terms.get(m).copied().unwrap_or(Felt::ZERO)
    }

    pub fn constant_term(&self) -> Felt {
        self.coeff(&Monomial::zero(self.arity))
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::total_degree).max()
    }

    fn add_term_raw(&mut self, m: Monomial, c: Felt) {
        if !c.is_zero() {
            self.terms.insert(m, c);
        }
    }

    /// Adds `c · X^m` to the polynomial.
    pub fn add_term(&mut self, f: &FieldCtx, m: Monomial, c: Felt) -> Result<()> {
        if m.arity() != self.arity {
            return Err(HppError::LengthMismatch {
                expected: self.arity,
                got: m.arity(),
            });
        }
        let sum = f.add(self.coeff(&m), c);
        if sum.is_zero() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, sum);
        }
        Ok(())
    }

    /// Checks `|α| ≤ n` and per-variable exponents `< d` for every term.
    pub fn validate(&self, f: &FieldCtx, n: u32) -> Result<()> {
        for m in self.terms.keys() {
            if m.total_degree() > n {
                return Err(HppError::Precondition(format!(
                    "monomial {:?} exceeds total degree {n}",
                    m.0
                )));
            }
            if m.0.iter().any(|&a| a >= f.order()) {
                return Err(HppError::Precondition(format!(
                    "monomial {:?} has an exponent not reduced below d = {}",
                    m.0,
                    f.order()
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, f: &FieldCtx, point: &[Felt]) -> Result<Felt> {
        if point.len() != self.arity {
            return Err(HppError::LengthMismatch {
                expected: self.arity,
                got: point.len(),
            });
        }
        let mut acc = f.zero();
        for (m, &c) in &self.terms {
            let mut term = c;
            for (&x, &a) in point.iter().zip(&m.0) {
                if a > 0 {
                    term = f.mul(term, f.pow(x, a as u64));
                }
            }
            acc = f.add(acc, term);
        }
        Ok(acc)
    }

    /// Substitutes `X_m = t` in the last variable.
    pub fn slice_last(&self, f: &FieldCtx, t: Felt) -> Result<MultiPoly> {
        if self.arity < 2 {
            return Err(HppError::ArityTooSmall {
                needed: 2,
                got: self.arity,
            });
        }
        let mut out = MultiPoly::new(self.arity - 1);
        for (m, &c) in &self.terms {
            let (head, last) = m.0.split_at(self.arity - 1);
            let coeff = f.mul(c, f.pow(t, last[0] as u64));
            out.add_term(f, Monomial(head.to_vec()), coeff)?;
        }
        Ok(out)
    }

    /// Fixes some variables; `assignment[j] = None` keeps `X_j` free. The
    /// result has one variable per free slot, in the original order.
    pub fn restrict(&self, f: &FieldCtx, assignment: &[Option<Felt>]) -> Result<MultiPoly> {
        if assignment.len() != self.arity {
            return Err(HppError::LengthMismatch {
                expected: self.arity,
                got: assignment.len(),
            });
        }
        let free = assignment.iter().filter(|a| a.is_none()).count();
        let mut out = MultiPoly::new(free);
        for (m, &c) in &self.terms {
            let mut coeff = c;
            let mut exps = Vec::with_capacity(free);
            for (&a, slot) in m.0.iter().zip(assignment) {
                match slot {
                    Some(v) => coeff = f.mul(coeff, f.pow(*v, a as u64)),
                    None => exps.push(a),
                }
            }
            out.add_term(f, Monomial(exps), coeff)?;
        }
        Ok(out)
    }

    /// Groups terms as `Σ_α Q_α(X_m) X_1^α_1 ⋯ X_{m-1}^α_{m-1}`.
    pub fn coefficient_polys(&self) -> Result<BTreeMap<Monomial, UniPoly>> {
        if self.arity < 2 {
            return Err(HppError::ArityTooSmall {
                needed: 2,
                got: self.arity,
            });
        }
        let mut grouped: BTreeMap<Monomial, Vec<Felt>> = BTreeMap::new();
        for (m, &c) in &self.terms {
            let (head, last) = m.0.split_at(self.arity - 1);
            let slot = grouped.entry(Monomial(head.to_vec())).or_default();
            let k = last[0] as usize;
            if slot.len() <= k {
                slot.resize(k + 1, Felt::ZERO);
            }
            slot[k] = c;
        }
        Ok(grouped
            .into_iter()
            .map(|(m, c)| (m, UniPoly::new(c)))
            .collect())
    }

    /// Inverse of [`MultiPoly::coefficient_polys`].
    pub fn from_coefficient_polys(arity: usize, parts: &BTreeMap<Monomial, UniPoly>) -> Self {
        let mut out = MultiPoly::new(arity);
        for (alpha, q) in parts {
            for (k, &c) in q.coeffs().iter().enumerate() {
                let mut exps = alpha.0.clone();
                exps.push(k as u32);
                out.add_term_raw(Monomial(exps), c);
            }
        }
        out
    }

    pub fn to_uni(&self) -> Option<UniPoly> {
        if self.arity != 1 {
            return None;
        }
        let deg = self.terms.keys().map(|m| m.0[0] as usize).max();
        let mut coeffs = vec![Felt::ZERO; deg.map_or(0, |d| d + 1)];
        for (m, &c) in &self.terms {
            coeffs[m.0[0] as usize] = c;
        }
        Some(UniPoly::new(coeffs))
    }

    pub fn without_constant(&self) -> MultiPoly {
        let mut out = self.clone();
        out.terms.remove(&Monomial::zero(self.arity));
        out
    }

    pub fn sub(&self, f: &FieldCtx, other: &MultiPoly) -> Result<MultiPoly> {
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(f, m.clone(), f.neg(c))?;
        }
        Ok(out)
    }

    /// Parses the text form `c*X1^a1*X2^a2+...` (a bare `X` means `X1` when
    /// `arity = 1`).
    pub fn parse(f: &FieldCtx, s: &str, arity: usize) -> Result<Self> {
        let bad = |why: &str| HppError::Parse(format!("polynomial `{s}`: {why}"));
        let mut out = MultiPoly::new(arity);
        let s = s.trim();
        if s == "0" {
            return Ok(out);
        }
        for term in s.split('+') {
            let mut coeff = f.one();
            let mut exps = vec![0u32; arity];
            for factor in term.trim().split('*') {
                let factor = factor.trim();
                if let Some(var) = factor.strip_prefix('X') {
                    let (idx, exp) = match var.split_once('^') {
                        Some((i, e)) => (i, e.parse::<u32>().map_err(|_| bad("bad exponent"))?),
                        None => (var, 1),
                    };
                    let idx = if idx.is_empty() && arity == 1 {
                        1
                    } else {
                        idx.parse::<usize>().map_err(|_| bad("bad variable index"))?
                    };
                    if idx == 0 || idx > arity {
                        return Err(bad("variable index out of range"));
                    }
                    exps[idx - 1] += exp;
                } else {
                    let code = factor.parse::<u32>().map_err(|_| bad("bad coefficient"))?;
                    coeff = f.mul(coeff, f.elem(code)?);
                }
            }
            out.add_term(f, Monomial(exps), coeff)?;
        }
        Ok(out)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(out, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(out, "+")?;
            }
            write!(out, "{c}")?;
            for (j, &a) in m.0.iter().enumerate() {
                if a > 0 {
                    write!(out, "*X{}^{a}", j + 1)?;
                }
            }
        }
        Ok(())
    }
}
