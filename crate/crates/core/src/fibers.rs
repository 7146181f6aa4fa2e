//! Fibers of the power-sum map `b ↦ Φ_n(b)·x`.
//!
//! For fixed `x ∈ F^n` the map sends `b ∈ F^n` to `w` with
//! `w_i = Σ_j b_j^i x_j`. The fiber sizes `η_w^x` and the fibers themselves
//! drive both the success probability of the measurement and the
//! implementability of the approximate fiber-collapsing isometry.
//!
//! Tuples in `F^n` are indexed with the first coordinate most significant, so
//! index order is the lexicographic order on tuples.

use std::io::Write;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HppError, Result};
use crate::gf::{Felt, FieldCtx};
use crate::quadratic::quadratic_roots;

/// Largest `d^n` a single fiber enumeration may visit.
pub const MAX_ENUMERATION: u64 = 100_000_000;

/// Bijection between `F^n` and `0..d^n` respecting lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleSpace {
    d: u32,
    n: usize,
    size: u64,
}

impl TupleSpace {
    pub fn new(d: u32, n: usize, budget: u64) -> Result<Self> {
        let size = (d as u64)
            .checked_pow(n as u32)
            .filter(|&s| s <= budget)
            .ok_or(HppError::GuardExceeded {
                guard: "enumeration",
                limit: budget,
                requested: (d as u64).saturating_pow(n as u32),
            })?;
        Ok(TupleSpace { d, n, size })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.d
    }

    pub fn encode(&self, v: &[Felt]) -> u64 {
        v.iter()
            .fold(0u64, |acc, &c| acc * self.d as u64 + c.code() as u64)
    }

    pub fn decode(&self, mut idx: u64) -> Vec<Felt> {
        let mut out = vec![Felt::ZERO; self.n];
        for slot in out.iter_mut().rev() {
            *slot = felt_unchecked((idx % self.d as u64) as u32);
            idx /= self.d as u64;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<Felt>> + '_ {
        (0..self.size).map(|i| self.decode(i))
    }
}

fn felt_unchecked(code: u32) -> Felt {
    Felt::from_code_unchecked(code)
}

/// `v^i` for `i = 1..=n` and every `v ∈ F`.
#[derive(Debug, Clone)]
pub struct PowerTable {
    n: usize,
    d: usize,
    pows: Vec<Felt>,
}

impl PowerTable {
    pub fn new(f: &FieldCtx, n: usize) -> Self {
        let d = f.order() as usize;
        let mut pows = vec![Felt::ZERO; n * d];
        for v in f.elements() {
            let mut acc = v;
            for i in 0..n {
                pows[i * d + v.code() as usize] = acc;
                acc = f.mul(acc, v);
            }
        }
        PowerTable { n, d, pows }
    }

    /// `v^(i+1)`.
    #[inline]
    pub fn pow(&self, i: usize, v: Felt) -> Felt {
        self.pows[i * self.d + v.code() as usize]
    }

    /// Entry `(i, j)` of `Φ_n(b)` is `b_j^(i+1)` (zero-based `i`).
    pub fn phi_entry(&self, b: &[Felt], i: usize, j: usize) -> Felt {
        self.pow(i, b[j])
    }

    fn apply_into(&self, f: &FieldCtx, x: &[Felt], b: &[Felt], w: &mut [Felt]) {
        for (i, wi) in w.iter_mut().enumerate().take(self.n) {
            let mut acc = f.zero();
            for (&bj, &xj) in b.iter().zip(x) {
                acc = f.add(acc, f.mul(self.pow(i, bj), xj));
            }
            *wi = acc;
        }
    }
}

/// `w = Φ_n(b)·x`, i.e. `w_i = Σ_j b_j^i x_j`.
pub fn apply_map(f: &FieldCtx, x: &[Felt], b: &[Felt]) -> Result<Vec<Felt>> {
    if x.len() != b.len() {
        return Err(HppError::LengthMismatch {
            expected: x.len(),
            got: b.len(),
        });
    }
    let n = x.len();
    let mut w = vec![Felt::ZERO; n];
    let mut pow = b.to_vec();
    for wi in w.iter_mut() {
        *wi = f.dot(&pow, x)?;
        for (pj, &bj) in pow.iter_mut().zip(b) {
            *pj = f.mul(*pj, bj);
        }
    }
    Ok(w)
}

/// Fiber sizes `η_w^x` for one `x`, optionally with the fibers themselves.
#[derive(Debug, Clone)]
pub struct EtaTable {
    x: Vec<Felt>,
    space: TupleSpace,
    counts: Vec<u32>,
    /// CSR layout: fiber of `w` is `members[offsets[w]..offsets[w + 1]]`.
    offsets: Option<Vec<u32>>,
    members: Option<Vec<u32>>,
}

impl EtaTable {
    pub fn x(&self) -> &[Felt] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn space(&self) -> TupleSpace {
        self.space
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn eta_at(&self, w_idx: u64) -> u32 {
        self.counts[w_idx as usize]
    }

    pub fn eta(&self, w: &[Felt]) -> u32 {
        self.eta_at(self.space.encode(w))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn has_solutions(&self) -> bool {
        self.members.is_some()
    }

    /// Indices of the `b` in `S_w^x`, ascending (lexicographic).
    pub fn solution_indices(&self, w_idx: u64) -> Option<&[u32]> {
        let offsets = self.offsets.as_ref()?;
        let members = self.members.as_ref()?;
        let (lo, hi) = (offsets[w_idx as usize], offsets[w_idx as usize + 1]);
        Some(&members[lo as usize..hi as usize])
    }

    pub fn solutions(&self, w: &[Felt]) -> Option<Vec<Vec<Felt>>> {
        self.solution_indices(self.space.encode(w))
            .map(|idx| idx.iter().map(|&b| self.space.decode(b as u64)).collect())
    }

    /// `(w_idx, η)` for every `w` with `η ≥ 1`, ascending.
    pub fn support(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as u64, c))
    }

    /// CSV rows `x,w,eta` for every nonzero count; tuples are `;`-joined.
    pub fn write_csv<W: Write + ?Sized>(&self, out: &mut W, header: bool) -> Result<()> {
        let x = join_tuple(&self.x);
        if header {
            writeln!(out, "x,w,eta")?;
        }
        for (w_idx, eta) in self.support() {
            writeln!(out, "{x},{},{eta}", join_tuple(&self.space.decode(w_idx)))?;
        }
        Ok(())
    }
}

pub fn join_tuple(v: &[Felt]) -> String {
    v.iter()
        .map(|c| c.code().to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Enumerates all `b ∈ F^n` once and tallies `w = Φ_n(b)·x`.
pub fn eta_table(f: &FieldCtx, x: &[Felt], store_solutions: bool) -> Result<EtaTable> {
    eta_table_with(f, &PowerTable::new(f, x.len()), x, store_solutions)
}

pub fn eta_table_with(
    f: &FieldCtx,
    powers: &PowerTable,
    x: &[Felt],
    store_solutions: bool,
) -> Result<EtaTable> {
    let n = x.len();
    if n == 0 || powers.n != n {
        return Err(HppError::LengthMismatch {
            expected: powers.n,
            got: n,
        });
    }
    for &xi in x {
        f.check(xi)?;
    }
    let space = TupleSpace::new(f.order(), n, MAX_ENUMERATION)?;
    let size = space.size as usize;
    let mut counts = vec![0u32; size];
    let mut images = if store_solutions {
        Vec::with_capacity(size)
    } else {
        Vec::new()
    };
    let mut b = vec![Felt::ZERO; n];
    let mut w = vec![Felt::ZERO; n];
    for b_idx in 0..space.size {
        if b_idx > 0 {
            increment(f, &mut b);
        }
        powers.apply_into(f, x, &b, &mut w);
        let w_idx = space.encode(&w);
        counts[w_idx as usize] += 1;
        if store_solutions {
            images.push(w_idx as u32);
        }
    }
    let (offsets, members) = if store_solutions {
        let mut offsets = vec![0u32; size + 1];
        for (i, &c) in counts.iter().enumerate() {
            offsets[i + 1] = offsets[i] + c;
        }
        let mut cursor = offsets.clone();
        let mut members = vec![0u32; size];
        // b ascends, so each fiber comes out sorted.
        for (b_idx, &w_idx) in images.iter().enumerate() {
            let slot = &mut cursor[w_idx as usize];
            members[*slot as usize] = b_idx as u32;
            *slot += 1;
        }
        (Some(offsets), Some(members))
    } else {
        (None, None)
    };
    Ok(EtaTable {
        x: x.to_vec(),
        space,
        counts,
        offsets,
        members,
    })
}

fn increment(f: &FieldCtx, v: &mut [Felt]) {
    let d = f.order();
    for slot in v.iter_mut().rev() {
        let next = slot.code() + 1;
        if next < d {
            *slot = f.elem(next).expect("below d");
            return;
        }
        *slot = Felt::ZERO;
    }
}

/// `g(x) = x_1 x_2 (x_1 + x_2)^2`, the leading-coefficient product of the
/// n = 2 elimination polynomials.
pub fn g_n2(f: &FieldCtx, x: &[Felt]) -> Felt {
    let s = f.add(x[0], x[1]);
    f.mul(f.mul(x[0], x[1]), f.square(s))
}

/// Which labeling of `(w_1, w_2)` to use for the n = 2 elimination
/// polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    /// Eliminating the other coordinate from `w_1 = Σ b_j x_j`,
    /// `w_2 = Σ b_j^2 x_j`.
    Derived,
    /// The printed form, which agrees with `Derived` after swapping `w_1`
    /// and `w_2`.
    Printed,
}

/// Coefficients `(a, b, c)` of `a T^2 + b T + c` whose roots contain `b_i`
/// for every solution `b` of the `n = 2` system (`which ∈ {0, 1}`).
pub fn elimination_poly(
    f: &FieldCtx,
    x: &[Felt],
    w: &[Felt],
    which: usize,
    labeling: Labeling,
) -> (Felt, Felt, Felt) {
    let (own, other) = if which == 0 { (x[0], x[1]) } else { (x[1], x[0]) };
    let (w_lin, w_sq) = match labeling {
        Labeling::Derived => (w[0], w[1]),
        Labeling::Printed => (w[1], w[0]),
    };
    let lead = f.neg(f.add(f.mul(x[0], x[1]), f.square(own)));
    let mid = f.mul(f.from_int(2), f.mul(w_lin, own));
    let constant = f.sub(f.mul(w_sq, other), f.square(w_lin));
    (lead, mid, constant)
}

/// Solves `Φ_2(b)·x = w` through the elimination polynomials: roots of the
/// two quadratics give candidate coordinates, and only combinations that map
/// to `w` are returned, sorted lexicographically.
pub fn solve_n2_triangular(f: &FieldCtx, x: &[Felt], w: &[Felt]) -> Result<Vec<Vec<Felt>>> {
    if x.len() != 2 || w.len() != 2 {
        return Err(HppError::LengthMismatch {
            expected: 2,
            got: if x.len() != 2 { x.len() } else { w.len() },
        });
    }
    if g_n2(f, x).is_zero() {
        return Err(HppError::Precondition(format!(
            "x = ({}, {}) is outside the analysis-2 good set",
            x[0], x[1]
        )));
    }
    let candidates: Vec<Vec<Felt>> = (0..2)
        .map(|i| {
            let (a, b, c) = elimination_poly(f, x, w, i, Labeling::Derived);
            quadratic_roots(f, a, b, c)
        })
        .collect();
    let mut out = Vec::new();
    for &b1 in &candidates[0] {
        for &b2 in &candidates[1] {
            let b = vec![b1, b2];
            if apply_map(f, x, &b)? == w {
                out.push(b);
            }
        }
    }
    out.sort();
    if out.len() > ANALYSIS2_N2_CAP as usize {
        return Err(HppError::Invariant(format!(
            "triangular solver returned {} > {ANALYSIS2_N2_CAP} solutions",
            out.len()
        )));
    }
    Ok(out)
}

/// Cap `D = d_1 d_2 = 4` from the two quadratic elimination polynomials.
pub const ANALYSIS2_N2_CAP: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    First,
    Second,
}

impl std::fmt::Display for Analysis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Analysis::First => "first",
            Analysis::Second => "second",
        })
    }
}

/// Bézout bound `n!` on a zero-dimensional fiber of the system of degrees
/// `1, 2, ..., n`; the cap used by the first analysis.
pub fn first_analysis_cap(n: usize) -> u32 {
    (1..=n as u32).product()
}

/// The good-set rules of one analysis, with cap `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoodSets {
    analysis: Analysis,
    cap: u32,
    n: usize,
}

impl GoodSets {
    /// `X_good = (F^×)^n`, `W_good^x = {w : 1 ≤ η ≤ n!}`. Needs `p > n`.
    pub fn first(f: &FieldCtx, n: usize) -> Result<Self> {
        if (f.characteristic() as usize) <= n {
            return Err(HppError::AnalysisInapplicable(format!(
                "first analysis needs characteristic p = {} > n = {n}",
                f.characteristic()
            )));
        }
        Ok(GoodSets {
            analysis: Analysis::First,
            cap: first_analysis_cap(n),
            n,
        })
    }

    /// `X_good = {g(x) ≠ 0}`, `W_good^x = {w : η ≥ 1}`, `D = 4`. Only `n = 2`.
    pub fn second_n2(f: &FieldCtx) -> Result<Self> {
        if f.order() < 3 {
            return Err(HppError::AnalysisInapplicable(
                "g(x) = x1 x2 (x1 + x2)^2 vanishes on all of F^2 when |F| < 3".into(),
            ));
        }
        Ok(GoodSets {
            analysis: Analysis::Second,
            cap: ANALYSIS2_N2_CAP,
            n: 2,
        })
    }

    pub fn new(f: &FieldCtx, n: usize, analysis: Analysis) -> Result<Self> {
        match analysis {
            Analysis::First => Self::first(f, n),
            Analysis::Second if n == 2 => Self::second_n2(f),
            Analysis::Second => Err(HppError::AnalysisInapplicable(format!(
                "second analysis is implemented for n = 2 only, got n = {n}"
            ))),
        }
    }

    /// First analysis when `p > n`, else the second one at `n = 2`.
    pub fn auto(f: &FieldCtx, n: usize) -> Result<Self> {
        Self::first(f, n).or_else(|e| if n == 2 { Self::second_n2(f) } else { Err(e) })
    }

    pub fn analysis(&self) -> Analysis {
        self.analysis
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_good(&self, f: &FieldCtx, x: &[Felt]) -> bool {
        match self.analysis {
            Analysis::First => x.iter().all(|v| !v.is_zero()),
            Analysis::Second => !g_n2(f, x).is_zero(),
        }
    }

    /// Membership of `w` in `W_good^x`, for `x` already known to be good.
    /// Under the second analysis a fiber larger than `D` is an invariant
    /// violation.
    pub fn w_good_eta(&self, eta: u32) -> Result<bool> {
        match self.analysis {
            Analysis::First => Ok(eta >= 1 && eta <= self.cap),
            Analysis::Second => {
                if eta > self.cap {
                    return Err(HppError::Invariant(format!(
                        "fiber of size {eta} exceeds D = {} for a good x",
                        self.cap
                    )));
                }
                Ok(eta >= 1)
            }
        }
    }

    pub fn classify(&self, f: &FieldCtx, x: &[Felt], w: &[Felt], table: &EtaTable) -> Result<bool> {
        if x.len() != self.n || w.len() != self.n {
            return Err(HppError::LengthMismatch {
                expected: self.n,
                got: if x.len() != self.n { x.len() } else { w.len() },
            });
        }
        if table.x() != x {
            return Err(HppError::Precondition("η table was built for another x".into()));
        }
        if !self.x_good(f, x) {
            return Ok(false);
        }
        self.w_good_eta(table.eta(w))
    }

    /// Per-`x` good-set statistics from an η table.
    pub fn summarize_x(&self, f: &FieldCtx, table: &EtaTable) -> Result<XGood> {
        if !self.x_good(f, table.x()) {
            return Ok(XGood::default());
        }
        let mut out = XGood {
            good: true,
            ..XGood::default()
        };
        for (_, eta) in table.support() {
            if self.w_good_eta(eta)? {
                out.w_count += 1;
                out.b_count += eta as u64;
                out.sqrt_sum += (eta as f64).sqrt();
            }
        }
        Ok(out)
    }
}

/// Good-set data for a single `x`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XGood {
    pub good: bool,
    /// `|W_good^x|`
    pub w_count: u64,
    /// `|B_good^x| = Σ_{w ∈ W_good^x} η_w^x`
    pub b_count: u64,
    /// `Σ_{w ∈ W_good^x} √η_w^x`
    pub sqrt_sum: f64,
}

/// Exported good-set summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSummary {
    pub analysis: Analysis,
    #[serde(rename = "D")]
    pub cap: u32,
    pub x_good_count: u64,
    pub w_good_min: u64,
    pub w_good_mean: f64,
}

impl GoodSummary {
    pub fn from_parts(good: &GoodSets, per_x: &[XGood]) -> Self {
        let goods: Vec<&XGood> = per_x.iter().filter(|g| g.good).collect();
        let w_good_min = goods.iter().map(|g| g.w_count).min().unwrap_or(0);
        let w_good_mean = if goods.is_empty() {
            0.0
        } else {
            goods.iter().map(|g| g.w_count as f64).sum::<f64>() / goods.len() as f64
        };
        GoodSummary {
            analysis: good.analysis,
            cap: good.cap,
            x_good_count: goods.len() as u64,
            w_good_min,
            w_good_mean,
        }
    }
}

/// First-analysis membership test.
pub fn classify_first(
    f: &FieldCtx,
    n: usize,
    x: &[Felt],
    w: &[Felt],
    table: &EtaTable,
) -> Result<bool> {
    GoodSets::first(f, n)?.classify(f, x, w, table)
}

/// Second-analysis membership test at `n = 2`.
pub fn classify_second_n2(f: &FieldCtx, x: &[Felt], w: &[Felt], table: &EtaTable) -> Result<bool> {
    GoodSets::second_n2(f)?.classify(f, x, w, table)
}

/// Exact averages of `η` and `η^2` over all `(x, w) ∈ F^n × F^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EtaMoments {
    pub first: Ratio<u128>,
    pub second: Ratio<u128>,
}

pub fn eta_moments(f: &FieldCtx, n: usize) -> Result<EtaMoments> {
    let xs = TupleSpace::new(f.order(), 2 * n, MAX_ENUMERATION)?;
    let xs_half = TupleSpace::new(f.order(), n, MAX_ENUMERATION)?;
    let powers = PowerTable::new(f, n);
    let sums: Vec<(u128, u128)> = (0..xs_half.size())
        .into_par_iter()
        .map(|xi| {
            let x = xs_half.decode(xi);
            let t = eta_table_with(f, &powers, &x, false)?;
            let s1: u128 = t.counts.iter().map(|&c| c as u128).sum();
            let s2: u128 = t.counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
            Ok((s1, s2))
        })
        .collect::<Result<_>>()?;
    let (s1, s2) = sums
        .iter()
        .fold((0u128, 0u128), |(a, b), &(x, y)| (a + x, b + y));
    let denom = xs.size() as u128;
    Ok(EtaMoments {
        first: Ratio::new(s1, denom),
        second: Ratio::new(s2, denom),
    })
}

/// First moment of `η` when `k` copies are used (`b, x ∈ F^k`, `w ∈ F^n`).
pub fn first_moment_k(f: &FieldCtx, n: usize, k: usize) -> Result<Ratio<u128>> {
    let d = f.order() as u128;
    let xs = TupleSpace::new(f.order(), k, MAX_ENUMERATION)?;
    TupleSpace::new(f.order(), 2 * k, MAX_ENUMERATION)?;
    let ws = TupleSpace::new(f.order(), n, MAX_ENUMERATION)?;
    let powers = PowerTable::new(f, n);
    let mut total = 0u128;
    let mut w = vec![Felt::ZERO; n];
    for x in xs.iter() {
        for b in xs.iter() {
            powers.apply_into(f, &x, &b, &mut w);
            total += 1;
        }
    }
    Ok(Ratio::new(total, d.pow(k as u32) * ws.size() as u128))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fe(f: &FieldCtx, v: &[u32]) -> Vec<Felt> {
        v.iter().map(|&c| f.elem(c).unwrap()).collect()
    }

    #[test]
    fn apply_map_examples() {
        let f3 = FieldCtx::prime(3).unwrap();
        assert_eq!(
            apply_map(&f3, &fe(&f3, &[1, 1]), &fe(&f3, &[1, 2])).unwrap(),
            fe(&f3, &[0, 2])
        );
        let f7 = FieldCtx::prime(7).unwrap();
        assert_eq!(
            apply_map(&f7, &fe(&f7, &[3, 5, 6]), &fe(&f7, &[0, 0, 0])).unwrap(),
            fe(&f7, &[0, 0, 0])
        );
        assert_eq!(
            apply_map(&f7, &fe(&f7, &[3]), &fe(&f7, &[4])).unwrap(),
            fe(&f7, &[5])
        );
        assert!(apply_map(&f7, &fe(&f7, &[3]), &fe(&f7, &[4, 1])).is_err());
    }

    #[test]
    fn power_table_matches_apply_map() {
        let f = FieldCtx::new(3, 2).unwrap();
        let pt = PowerTable::new(&f, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x: Vec<Felt> = (0..3).map(|_| f.random(&mut rng)).collect();
            let b: Vec<Felt> = (0..3).map(|_| f.random(&mut rng)).collect();
            let mut w = vec![Felt::ZERO; 3];
            pt.apply_into(&f, &x, &b, &mut w);
            assert_eq!(w, apply_map(&f, &x, &b).unwrap());
            assert_eq!(pt.phi_entry(&b, 1, 2), f.square(b[2]));
        }
    }

    #[test]
    fn tuple_space_is_lexicographic() {
        let s = TupleSpace::new(3, 2, 100).unwrap();
        let all: Vec<Vec<u32>> = s
            .iter()
            .map(|v| v.iter().map(|c| c.code()).collect())
            .collect();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert!(TupleSpace::new(10, 9, 1000).is_err());
    }

    #[test]
    fn eta_table_d3_example() {
        let f = FieldCtx::prime(3).unwrap();
        let t = eta_table(&f, &fe(&f, &[1, 1]), true).unwrap();
        let expected = [
            ([0, 0], 1),
            ([1, 1], 2),
            ([2, 1], 2),
            ([2, 2], 1),
            ([0, 2], 2),
            ([1, 2], 1),
        ];
        let mut seen = 0;
        for (w, eta) in expected {
            assert_eq!(t.eta(&fe(&f, &w)), eta, "w={w:?}");
            seen += eta;
        }
        assert_eq!(seen, 9);
        assert_eq!(t.total(), 9);
        assert_eq!(t.support().count(), 6);
        for (w_idx, _) in t.support() {
            let w = t.space().decode(w_idx);
            let sols = t.solutions(&w).unwrap();
            let mut sorted = sols.clone();
            sorted.sort();
            assert_eq!(sols, sorted);
            for b in sols {
                assert_eq!(apply_map(&f, t.x(), &b).unwrap(), w);
            }
        }
    }

    #[test]
    fn eta_table_degenerate_x() {
        let f = FieldCtx::prime(5).unwrap();
        let t = eta_table(&f, &fe(&f, &[0, 0]), false).unwrap();
        assert_eq!(t.eta(&fe(&f, &[0, 0])), 25);
        assert_eq!(t.support().count(), 1);
        let t = eta_table(&f, &fe(&f, &[3]), false).unwrap();
        assert!(t.counts().iter().all(|&c| c == 1));
    }

    #[test]
    fn eta_table_guard() {
        let f = FieldCtx::prime(101).unwrap();
        let err = eta_table(&f, &[f.one(); 5], false).unwrap_err();
        assert!(matches!(err, HppError::GuardExceeded { guard: "enumeration", .. }));
    }

    #[test]
    fn csv_export() {
        let f = FieldCtx::prime(3).unwrap();
        let t = eta_table(&f, &fe(&f, &[0, 0]), false).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, true).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,w,eta\n0;0,0;0,9\n");
    }

    #[test]
    fn printed_labeling_needs_swapped_w() {
        // Every solution b is a root of the derived polynomials. The printed
        // ones fail for the natural labeling but hold after swapping w1, w2.
        let f = FieldCtx::prime(7).unwrap();
        let eval = |(a, b, c): (Felt, Felt, Felt), t: Felt| {
            f.add(f.add(f.mul(a, f.square(t)), f.mul(b, t)), c)
        };
        let mut printed_failures = 0;
        for x in TupleSpace::new(7, 2, 100).unwrap().iter() {
            for b in TupleSpace::new(7, 2, 100).unwrap().iter() {
                let w = apply_map(&f, &x, &b).unwrap();
                let swapped = vec![w[1], w[0]];
                for (i, &bi) in b.iter().enumerate() {
                    assert!(eval(elimination_poly(&f, &x, &w, i, Labeling::Derived), bi).is_zero());
                    assert!(
                        eval(elimination_poly(&f, &x, &swapped, i, Labeling::Printed), bi).is_zero()
                    );
                    if !eval(elimination_poly(&f, &x, &w, i, Labeling::Printed), bi).is_zero() {
                        printed_failures += 1;
                    }
                }
            }
        }
        assert!(printed_failures > 0);
    }

    #[test]
    fn triangular_examples() {
        let f = FieldCtx::prime(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = loop {
                let x = vec![f.random(&mut rng), f.random(&mut rng)];
                if !g_n2(&f, &x).is_zero() {
                    break x;
                }
            };
            let b = vec![f.random(&mut rng), f.random(&mut rng)];
            let w = apply_map(&f, &x, &b).unwrap();
            assert!(solve_n2_triangular(&f, &x, &w).unwrap().contains(&b));
        }
        let x = fe(&f, &[1, 2]);
        let t = eta_table(&f, &x, false).unwrap();
        let (empty_w, _) = t.counts().iter().enumerate().find(|(_, &c)| c == 0).unwrap();
        let w = t.space().decode(empty_w as u64);
        assert!(solve_n2_triangular(&f, &x, &w).unwrap().is_empty());
        assert!(matches!(
            solve_n2_triangular(&f, &fe(&f, &[1, 6]), &w),
            Err(HppError::Precondition(_))
        ));
    }

    #[test]
    fn triangular_matches_brute_force_small_fields() {
        for d in [3u64, 4, 5, 7, 8, 9] {
            let f = FieldCtx::with_order(d).unwrap();
            let space = TupleSpace::new(f.order(), 2, 100).unwrap();
            for x in space.iter() {
                if g_n2(&f, &x).is_zero() {
                    continue;
                }
                let t = eta_table(&f, &x, true).unwrap();
                for w in space.iter() {
                    assert_eq!(
                        solve_n2_triangular(&f, &x, &w).unwrap(),
                        t.solutions(&w).unwrap(),
                        "d={d} x={x:?} w={w:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn classify_first_examples() {
        let f = FieldCtx::prime(7).unwrap();
        let x = fe(&f, &[0, 3]);
        let t = eta_table(&f, &x, false).unwrap();
        assert!(!classify_first(&f, 2, &x, &fe(&f, &[0, 0]), &t).unwrap());
        let good_x = TupleSpace::new(7, 2, 100)
            .unwrap()
            .iter()
            .filter(|x| GoodSets::first(&f, 2).unwrap().x_good(&f, x))
            .count();
        assert_eq!(good_x, 36);
        let x = fe(&f, &[1, 2]);
        let t = eta_table(&f, &x, false).unwrap();
        let (w0, _) = t.counts().iter().enumerate().find(|(_, &c)| c == 0).unwrap();
        let w0 = t.space().decode(w0 as u64);
        assert!(!classify_first(&f, 2, &x, &w0, &t).unwrap());
        let f2 = FieldCtx::new(2, 2).unwrap();
        assert!(matches!(
            GoodSets::first(&f2, 2),
            Err(HppError::AnalysisInapplicable(_))
        ));
        let f3 = FieldCtx::prime(3).unwrap();
        assert!(GoodSets::first(&f3, 3).is_err());
        assert!(GoodSets::first(&f3, 2).is_ok());
    }

    #[test]
    fn classify_second_examples() {
        for (d, expect) in [(4u64, 6usize), (7, 30), (8, 42), (5, 12)] {
            let f = FieldCtx::with_order(d).unwrap();
            let good = GoodSets::second_n2(&f).unwrap();
            let count = TupleSpace::new(f.order(), 2, 100)
                .unwrap()
                .iter()
                .filter(|x| good.x_good(&f, x))
                .count();
            assert_eq!(count, expect);
            assert_eq!(count as u64, (d - 1) * (d - 2));
        }
        let f = FieldCtx::prime(7).unwrap();
        let x = fe(&f, &[1, 0]);
        let t = eta_table(&f, &x, false).unwrap();
        assert!(!classify_second_n2(&f, &x, &fe(&f, &[1, 1]), &t).unwrap());
        assert!(GoodSets::second_n2(&FieldCtx::prime(2).unwrap()).is_err());
    }

    #[test]
    fn auto_picks_applicable_analysis() {
        let f7 = FieldCtx::prime(7).unwrap();
        assert_eq!(GoodSets::auto(&f7, 2).unwrap().analysis(), Analysis::First);
        let f4 = FieldCtx::new(2, 2).unwrap();
        assert_eq!(GoodSets::auto(&f4, 2).unwrap().analysis(), Analysis::Second);
        let f3 = FieldCtx::prime(3).unwrap();
        assert!(GoodSets::auto(&f3, 3).is_err());
    }

    #[test]
    fn partition_identity_and_cap_soundness() {
        for d in [3u64, 4, 5, 7, 8] {
            let f = FieldCtx::with_order(d).unwrap();
            let n2 = d * d;
            let analyses: Vec<GoodSets> = [Analysis::First, Analysis::Second]
                .iter()
                .filter_map(|&a| GoodSets::new(&f, 2, a).ok())
                .collect();
            for x in TupleSpace::new(f.order(), 2, 100).unwrap().iter() {
                let t = eta_table(&f, &x, false).unwrap();
                assert_eq!(t.total(), n2);
                for good in &analyses {
                    // summarize_x errors if a good fiber exceeds D
                    let s = good.summarize_x(&f, &t).unwrap();
                    if s.good {
                        for (_, eta) in t.support() {
                            if good.w_good_eta(eta).unwrap() {
                                assert!(eta <= good.cap());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_dimensional_fibers_respect_bezout_cap() {
        // Fibers over w ∈ φ(U) \ f(F^n \ U), with U the tuples of distinct
        // coordinates, are zero-dimensional. At the smallest admissible
        // characteristic their largest size is recorded and must not exceed n!.
        for (p, n, expected_max) in [(3u64, 2usize, 2u32), (5, 3, 6)] {
            let f = FieldCtx::prime(p).unwrap();
            let space = TupleSpace::new(f.order(), n, 1000).unwrap();
            let mut max_eta = 0;
            for x in space.iter().filter(|x| x.iter().all(|v| !v.is_zero())) {
                let t = eta_table(&f, &x, true).unwrap();
                let mut diag_image = vec![false; space.size() as usize];
                for b in space.iter() {
                    let distinct = (0..n).all(|i| (0..i).all(|j| b[i] != b[j]));
                    if !distinct {
                        diag_image[space.encode(&apply_map(&f, &x, &b).unwrap()) as usize] = true;
                    }
                }
                for (w_idx, eta) in t.support() {
                    if !diag_image[w_idx as usize] {
                        max_eta = max_eta.max(eta);
                    }
                }
            }
            assert_eq!(max_eta, expected_max, "p={p} n={n}");
            assert!(max_eta <= first_analysis_cap(n));
        }
    }

    #[test]
    fn moments_small() {
        let f = FieldCtx::prime(3).unwrap();
        let m = eta_moments(&f, 2).unwrap();
        assert_eq!(m.first, Ratio::from_integer(1));
        assert!(m.second > m.first);
        // n = 1: η = 1 except x = 0 where one fiber holds all d points.
        for d in [3u128, 5, 7] {
            let f = FieldCtx::prime(d as u64).unwrap();
            let m = eta_moments(&f, 1).unwrap();
            assert_eq!(m.first, Ratio::from_integer(1));
            assert_eq!(m.second, Ratio::new((d - 1) * d + d * d, d * d));
        }
    }

    #[test]
    fn second_moment_matches_collision_formula() {
        // E[η²] = E[η] + d^{-2n} Σ_{b≠c} #{x : (Φ(b) − Φ(c)) x = 0}
        for (d, n) in [(3u64, 2usize), (4, 2), (5, 2), (3, 3)] {
            let f = FieldCtx::with_order(d).unwrap();
            let space = TupleSpace::new(f.order(), n, 1000).unwrap();
            let tuples: Vec<Vec<Felt>> = space.iter().collect();
            let mut coll = 0u128;
            for x in &tuples {
                let images: Vec<Vec<Felt>> =
                    tuples.iter().map(|b| apply_map(&f, x, b).unwrap()).collect();
                for i in 0..images.len() {
                    for j in 0..images.len() {
                        if i != j && images[i] == images[j] {
                            coll += 1;
                        }
                    }
                }
            }
            let m = eta_moments(&f, n).unwrap();
            let dn = (d as u128).pow(n as u32);
            assert_eq!(m.second, m.first + Ratio::new(coll, dn * dn), "d={d} n={n}");
        }
    }

    #[test]
    fn first_moment_for_fewer_copies() {
        let f = FieldCtx::prime(5).unwrap();
        assert_eq!(first_moment_k(&f, 2, 1).unwrap(), Ratio::new(1, 5));
        assert_eq!(first_moment_k(&f, 2, 2).unwrap(), Ratio::from_integer(1));
    }

    #[test]
    fn random_large_field_triangular_consistency() {
        // Solutions found must map to w and include the generating b.
        let f = FieldCtx::prime(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = vec![f.random_nonzero(&mut rng), f.random_nonzero(&mut rng)];
            if g_n2(&f, &x).is_zero() {
                continue;
            }
            let w = vec![f.random(&mut rng), f.random(&mut rng)];
            for b in solve_n2_triangular(&f, &x, &w).unwrap() {
                assert_eq!(apply_map(&f, &x, &b).unwrap(), w);
            }
            let _ = rng.random::<u8>();
        }
    }
}
