//! Success probabilities and outcome statistics of the measurement.
//!
//! With `n` copies and Fourier register value `x ∈ F^n`, the measurement
//! returns a guess `q' ∈ F^n` for the coefficient vector `q` of the hidden
//! univariate polynomial. Given `x`, the amplitude of `q'` is
//!
//! ```text
//! (d^n |B|)^{-1/2} Σ_{w ∈ W} √η_w^x · χ(⟨q − q', w⟩)
//! ```
//!
//! where the ideal measurement takes `W = F^n`, `|B| = d^n`, and the
//! approximate one takes `W = W_good^x`, `|B| = |B_good^x|` and first has to
//! land in the good branch, which happens with probability `|B_good^x| / d^n`
//! when `x ∈ X_good` and never otherwise.
//!
//! The statistics depend on `Q` only through `Q(r) − Q(0)`. The permutation
//! never enters.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::HppOracle;
use crate::error::{HppError, Result};
use crate::fibers::{
    eta_table_with, Analysis, EtaTable, GoodSets, GoodSummary, PowerTable,
    TupleSpace, XGood, MAX_ENUMERATION,
};
use crate::gf::{Felt, FieldCtx};
use crate::polyring::lagrange_interpolate;
use crate::stats::{derive_seed, kahan, KahanSum};

/// Largest `d^{2n}` any all-`x` computation may touch.
pub const MAX_SUCCESS_WORK: u64 = 4_000_000_000;

/// Per-`x` sums needed by every success formula.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XStats {
    /// `Σ_w √η_w^x` over all of `F^n`.
    pub sqrt_all: f64,
    pub good: XGood,
}

impl XStats {
    pub fn from_table(f: &FieldCtx, table: &EtaTable, good: Option<&GoodSets>) -> Result<Self> {
        let sqrt_all = kahan(table.support().map(|(_, eta)| (eta as f64).sqrt()));
        let good = match good {
            Some(g) => g.summarize_x(f, table)?,
            None => XGood::default(),
        };
        Ok(XStats { sqrt_all, good })
    }
}

/// `XStats` for every `x ∈ F^n`, in index order, computed in parallel.
pub fn collect_x_stats(f: &FieldCtx, n: usize, good: Option<&GoodSets>) -> Result<Vec<XStats>> {
    let space = TupleSpace::new(f.order(), n, MAX_ENUMERATION)?;
    TupleSpace::new(f.order(), 2 * n, MAX_SUCCESS_WORK)?;
    let powers = PowerTable::new(f, n);
    (0..space.size())
        .into_par_iter()
        .map(|xi| {
            let table = eta_table_with(f, &powers, &space.decode(xi), false)?;
            XStats::from_table(f, &table, good)
        })
        .collect()
}

fn check_cover(f: &FieldCtx, tables: &[EtaTable]) -> Result<usize> {
    let n = tables
        .first()
        .map(|t| t.n())
        .ok_or_else(|| HppError::Precondition("no η tables given".into()))?;
    let space = TupleSpace::new(f.order(), n, MAX_ENUMERATION)?;
    let mut seen = vec![false; space.size() as usize];
    for t in tables {
        if t.n() != n || t.space().order() != f.order() {
            return Err(HppError::Precondition("η tables of mixed shape".into()));
        }
        if std::mem::replace(&mut seen[space.encode(t.x()) as usize], true) {
            return Err(HppError::Precondition("duplicate x among η tables".into()));
        }
    }
    if tables.len() as u64 != space.size() {
        return Err(HppError::Precondition(format!(
            "η tables cover {} of {} values of x",
            tables.len(),
            space.size()
        )));
    }
    Ok(n)
}

fn d_pow(f: &FieldCtx, k: usize) -> f64 {
    (f.order() as f64).powi(k as i32)
}

/// `d^{-3n} Σ_x (Σ_w √η_w^x)^2` from per-`x` stats.
pub fn ideal_from_stats(f: &FieldCtx, n: usize, stats: &[XStats]) -> f64 {
    kahan(stats.iter().map(|s| s.sqrt_all * s.sqrt_all)) / d_pow(f, 3 * n)
}

/// `d^{-3n} Σ_{x ∈ X_good} (Σ_{w ∈ W_good^x} √η_w^x)^2` from per-`x` stats.
pub fn approx_from_stats(f: &FieldCtx, n: usize, stats: &[XStats]) -> f64 {
    kahan(
        stats
            .iter()
            .filter(|s| s.good.good)
            .map(|s| s.good.sqrt_sum * s.good.sqrt_sum),
    ) / d_pow(f, 3 * n)
}

/// `|X_good| · (min_x |W_good^x|)^2 / d^{3n}`.
pub fn lemma2_from_stats(f: &FieldCtx, n: usize, stats: &[XStats]) -> f64 {
    let goods: Vec<&XStats> = stats.iter().filter(|s| s.good.good).collect();
    let min_w = goods.iter().map(|s| s.good.w_count).min().unwrap_or(0) as f64;
    goods.len() as f64 * min_w * min_w / d_pow(f, 3 * n)
}

/// Ideal success probability from the full set of η tables.
pub fn ideal_success(f: &FieldCtx, tables: &[EtaTable]) -> Result<f64> {
    let n = check_cover(f, tables)?;
    let stats: Vec<XStats> = tables
        .iter()
        .map(|t| XStats::from_table(f, t, None))
        .collect::<Result<_>>()?;
    Ok(ideal_from_stats(f, n, &stats))
}

/// Approximate-isometry success probability from the full set of η tables.
pub fn approx_success(f: &FieldCtx, tables: &[EtaTable], good: &GoodSets) -> Result<f64> {
    let n = check_cover(f, tables)?;
    let stats: Vec<XStats> = tables
        .iter()
        .map(|t| XStats::from_table(f, t, Some(good)))
        .collect::<Result<_>>()?;
    Ok(approx_from_stats(f, n, &stats))
}

/// Lower bound `|X_good| · (min_x |W_good^x|)^2 / d^{3n}`.
pub fn lemma2_bound(f: &FieldCtx, tables: &[EtaTable], good: &GoodSets) -> Result<f64> {
    let n = check_cover(f, tables)?;
    let stats: Vec<XStats> = tables
        .iter()
        .map(|t| XStats::from_table(f, t, Some(good)))
        .collect::<Result<_>>()?;
    Ok(lemma2_from_stats(f, n, &stats))
}

/// Closed-form lower bound for the first analysis:
/// `d^{-3n} (d−1)^n · max(0, d(d−1)…(d−n+1)/n! − C(n,2) d^{n−1})^2`.
///
/// The points with distinct coordinates have zero-dimensional fibers of size
/// at most `n!`, and the images of the `C(n,2)` diagonals `b_i = b_j` cover at
/// most `C(n,2) d^{n−1}` values of `w`.
pub fn corollary_bound(f: &FieldCtx, n: usize) -> Result<f64> {
    let good = GoodSets::first(f, n)?;
    let d = f.order() as f64;
    let falling: f64 = (0..n).map(|i| d - i as f64).product();
    let diagonals = (n * n.saturating_sub(1) / 2) as f64;
    let per_x = (falling / good.cap() as f64 - diagonals * d.powi(n as i32 - 1)).max(0.0);
    Ok((d - 1.0).powi(n as i32) * per_x * per_x / d.powi(3 * n as i32))
}

/// Everything reported by `hpp success`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub field: String,
    pub n: usize,
    pub ideal: f64,
    pub approx: f64,
    pub lemma2_bound: f64,
    pub corollary_bound: Option<f64>,
    #[serde(flatten)]
    pub good: GoodSummary,
}

pub fn success_report(f: &FieldCtx, n: usize, analysis: Option<Analysis>) -> Result<SuccessReport> {
    let good = match analysis {
        Some(a) => GoodSets::new(f, n, a)?,
        None => GoodSets::auto(f, n)?,
    };
    let stats = collect_x_stats(f, n, Some(&good))?;
    let per_x: Vec<XGood> = stats.iter().map(|s| s.good).collect();
    let corollary = match good.analysis() {
        Analysis::First => Some(corollary_bound(f, n)?),
        Analysis::Second => None,
    };
    Ok(SuccessReport {
        field: f.descriptor().to_string(),
        n,
        ideal: ideal_from_stats(f, n, &stats),
        approx: approx_from_stats(f, n, &stats),
        lemma2_bound: lemma2_from_stats(f, n, &stats),
        corollary_bound: corollary,
        good: GoodSummary::from_parts(&good, &per_x),
    })
}

/// Distribution of the shift `δ = q − q'` for one `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDist {
    pub x: Vec<Felt>,
    /// Probability of reaching the branch the distribution is conditioned
    /// on: 1 for the ideal measurement, `|B_good^x| / d^n` (or 0) otherwise.
    pub branch_mass: f64,
    /// `P(δ)` indexed by tuple index of `δ`; empty when `branch_mass = 0`.
    pub shift_probs: Vec<f64>,
}

impl OutcomeDist {
    /// `P(q' | branch)` for the true coefficient vector `q`.
    pub fn prob_of(&self, f: &FieldCtx, q: &[Felt], q_prime: &[Felt]) -> f64 {
        if self.shift_probs.is_empty() {
            return 0.0;
        }
        let space = TupleSpace::new(f.order(), q.len(), u64::MAX).expect("unbounded");
        let delta: Vec<Felt> = q.iter().zip(q_prime).map(|(&a, &b)| f.sub(a, b)).collect();
        self.shift_probs[space.encode(&delta) as usize]
    }

    /// Unconditional probability of answering `q` exactly at this `x`.
    pub fn success_mass(&self) -> f64 {
        self.shift_probs.first().map_or(0.0, |p| p * self.branch_mass)
    }
}

/// Outcome distribution at `x` for the ideal measurement (`good = None`) or
/// for the approximate one.
pub fn outcome_distribution(
    f: &FieldCtx,
    table: &EtaTable,
    good: Option<&GoodSets>,
) -> Result<OutcomeDist> {
    let n = table.n();
    let space = table.space();
    let dn = space.size() as f64;
    let fibers: Vec<(Vec<Felt>, f64)> = match good {
        None => table
            .support()
            .map(|(w, eta)| (space.decode(w), eta as f64))
            .collect(),
        Some(g) => {
            if !g.x_good(f, table.x()) {
                return Ok(OutcomeDist {
                    x: table.x().to_vec(),
                    branch_mass: 0.0,
                    shift_probs: Vec::new(),
                });
            }
            let mut out = Vec::new();
            for (w, eta) in table.support() {
                if g.w_good_eta(eta)? {
                    out.push((space.decode(w), eta as f64));
                }
            }
            out
        }
    };
    let b_count: f64 = fibers.iter().map(|(_, eta)| eta).sum();
    if b_count == 0.0 {
        return Ok(OutcomeDist {
            x: table.x().to_vec(),
            branch_mass: 0.0,
            shift_probs: Vec::new(),
        });
    }
    let norm = 1.0 / (dn * b_count);
    let roots: Vec<(Vec<Felt>, f64)> = fibers.into_iter().map(|(w, eta)| (w, eta.sqrt())).collect();
    let shift_probs = (0..space.size())
        .into_par_iter()
        .map(|di| {
            let delta = space.decode(di);
            let (mut re, mut im) = (KahanSum::default(), KahanSum::default());
            for (w, root) in &roots {
                let phase = f.chi(dot_unchecked(f, &delta, w, n));
                re.add(root * phase.re);
                im.add(root * phase.im);
            }
            (re.total().powi(2) + im.total().powi(2)) * norm
        })
        .collect();
    Ok(OutcomeDist {
        x: table.x().to_vec(),
        branch_mass: b_count / dn,
        shift_probs,
    })
}

fn dot_unchecked(f: &FieldCtx, a: &[Felt], b: &[Felt], n: usize) -> Felt {
    (0..n).fold(f.zero(), |acc, i| f.add(acc, f.mul(a[i], b[i])))
}

/// Non-constant coefficients `q_1..q_n` of a univariate oracle's polynomial,
/// read from the table as `Q(r) − Q(0)`: the `s` with `B(r, s) = B(0, 0)`.
pub fn coefficients_from_oracle(oracle: &dyn HppOracle, n: usize) -> Result<Vec<Felt>> {
    if oracle.arity() != 1 {
        return Err(HppError::ArityTooSmall {
            needed: 1,
            got: oracle.arity(),
        });
    }
    let f = oracle.field().clone();
    if (f.order() as usize) <= n {
        return Err(HppError::FieldTooSmall { d: f.order(), n });
    }
    let anchor = oracle.peek(&[f.zero()], f.zero())?;
    let mut points = vec![(f.zero(), f.zero())];
    for code in 1..=n as u32 {
        let r = f.elem(code)?;
        let mut shift = None;
        for s in f.elements() {
            if oracle.peek(&[r], s)? == anchor {
                shift = Some(s);
                break;
            }
        }
        let shift = shift
            .ok_or_else(|| HppError::Invariant("oracle row is not a permutation".into()))?;
        points.push((r, shift));
    }
    let poly = lagrange_interpolate(&f, &points, n)?;
    Ok((1..=n).map(|i| poly.coeff(i)).collect())
}

/// One simulated run: the Fourier register value and the guess, or `None`
/// when the run landed in the flagged bad branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub x: Vec<Felt>,
    pub guess: Option<Vec<Felt>>,
}

/// Samples measurement outcomes for a fixed hidden coefficient vector.
pub struct Sampler {
    field: FieldCtx,
    q: Vec<Felt>,
    good: Option<GoodSets>,
    space: TupleSpace,
    powers: PowerTable,
    cache: Vec<OnceLock<(f64, Vec<f64>)>>,
}

impl Sampler {
    /// `good = None` samples the ideal measurement.
    pub fn new(f: &FieldCtx, q: Vec<Felt>, good: Option<GoodSets>) -> Result<Self> {
        let n = q.len();
        if let Some(g) = &good {
            if g.n() != n {
                return Err(HppError::LengthMismatch {
                    expected: g.n(),
                    got: n,
                });
            }
        }
        for &c in &q {
            f.check(c)?;
        }
        let space = TupleSpace::new(f.order(), n, MAX_ENUMERATION)?;
        TupleSpace::new(f.order(), 2 * n, MAX_ENUMERATION)?;
        Ok(Sampler {
            field: f.clone(),
            powers: PowerTable::new(f, n),
            cache: (0..space.size()).map(|_| OnceLock::new()).collect(),
            q,
            good,
            space,
        })
    }

    pub fn q(&self) -> &[Felt] {
        &self.q
    }

    /// `(branch mass, CDF over δ)` for `x`, computed once.
    fn dist(&self, xi: u64) -> Result<&(f64, Vec<f64>)> {
        if let Some(v) = self.cache[xi as usize].get() {
            return Ok(v);
        }
        let table = eta_table_with(&self.field, &self.powers, &self.space.decode(xi), false)?;
        let dist = outcome_distribution(&self.field, &table, self.good.as_ref())?;
        let mut acc = 0.0;
        let cdf = dist
            .shift_probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(self.cache[xi as usize].get_or_init(|| (dist.branch_mass, cdf)))
    }

    pub fn run_once<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RunOutcome> {
        let xi = rng.random_range(0..self.space.size());
        let x = self.space.decode(xi);
        let (mass, cdf) = self.dist(xi)?;
        let branch: f64 = rng.random();
        if cdf.is_empty() || branch >= *mass {
            return Ok(RunOutcome { x, guess: None });
        }
        let u: f64 = rng.random::<f64>() * cdf.last().copied().unwrap_or(1.0);
        let di = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let delta = self.space.decode(di as u64);
        let guess = self
            .q
            .iter()
            .zip(&delta)
            .map(|(&a, &b)| self.field.sub(a, b))
            .collect();
        Ok(RunOutcome { x, guess: Some(guess) })
    }

    /// `runs` independent runs; run `i` uses a seed derived from `(seed, i)`,
    /// so the result does not depend on the thread count.
    pub fn run_many(&self, runs: u64, seed: u64) -> Result<Vec<RunOutcome>> {
        (0..runs)
            .into_par_iter()
            .map(|i| self.run_once(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, i))))
            .collect()
    }
}

/// The most frequent candidate. Ties between equally frequent candidates go
/// to the first one (in lexicographic order) that passes `verify`, or to the
/// lexicographically smallest when none does.
pub fn majority_vote<V>(candidates: &[Vec<Felt>], mut verify: V) -> Result<Option<Vec<Felt>>>
where
    V: FnMut(&[Felt]) -> Result<bool>,
{
    let mut counts: HashMap<&Vec<Felt>, usize> = HashMap::new();
    for c in candidates {
        *counts.entry(c).or_default() += 1;
    }
    let Some(&top) = counts.values().max() else {
        return Ok(None);
    };
    let mut tied: Vec<&Vec<Felt>> = counts
        .into_iter()
        .filter(|&(_, c)| c == top)
        .map(|(v, _)| v)
        .collect();
    tied.sort();
    if tied.len() == 1 {
        return Ok(Some(tied[0].clone()));
    }
    for cand in &tied {
        if verify(cand)? {
            return Ok(Some((*cand).clone()));
        }
    }
    Ok(Some(tied[0].clone()))
}
