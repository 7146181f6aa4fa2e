//! Classical collision-finding solver for linear hidden polynomials.
//!
//! For `Q(r) = a r`, two queries collide, `B(r, s) = B(r', s')`, exactly
//! when `s − a r = s' − a r'`, which pins `a = (s − s') / (r − r')`. Querying
//! fresh random pairs finds a collision after about `√d` queries.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::blackbox::{default_verify_trials, verify_candidate, HiddenInstance, HppOracle};
use crate::error::{HppError, Result};
use crate::gf::{Felt, FieldCtx};
use crate::polyring::UniPoly;
use crate::stats::{derive_seed, linear_fit, median};

/// Fewest trials per field size a scaling experiment accepts.
pub const MIN_TRIALS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineStats {
    /// Queries up to and including the first collision.
    pub collision_queries: u64,
    /// Queries spent verifying the slope.
    pub verify_queries: u64,
}

impl BaselineStats {
    pub fn total(&self) -> u64 {
        self.collision_queries + self.verify_queries
    }
}

/// Finds the slope of a linear oracle from the first collision among fresh
/// uniformly random `(r, s)` pairs, then verifies it.
pub fn solve_linear_classical<R: Rng>(
    oracle: &mut dyn HppOracle,
    rng: &mut R,
) -> Result<(Felt, BaselineStats)> {
    if oracle.arity() != 1 {
        return Err(HppError::Precondition(format!(
            "classical baseline handles univariate oracles, got arity {}",
            oracle.arity()
        )));
    }
    let f = oracle.field().clone();
    let d = f.order() as u64;
    let mut asked: HashSet<(Felt, Felt)> = HashSet::new();
    let mut seen: HashMap<Felt, (Felt, Felt)> = HashMap::new();
    let start = oracle.query_count();
    while (asked.len() as u64) < d * d {
        let (r, s) = (f.random(rng), f.random(rng));
        if !asked.insert((r, s)) {
            continue;
        }
        let v = oracle.query(&[r], s)?;
        let Some(&(r0, s0)) = seen.get(&v) else {
            seen.insert(v, (r, s));
            continue;
        };
        let slope = f
            .div(f.sub(s, s0), f.sub(r, r0))
            .ok_or_else(|| HppError::Invariant("collision on a single row".into()))?;
        let collision_queries = oracle.query_count() - start;
        let cand = UniPoly::from_nonconstant(&[slope]).to_multi();
        if !verify_candidate(oracle, &cand, default_verify_trials(1).min(d as usize), rng)? {
            return Err(HppError::Invariant(
                "collision slope failed verification; oracle is not linear".into(),
            ));
        }
        let verify_queries = oracle.query_count() - start - collision_queries;
        return Ok((
            slope,
            BaselineStats {
                collision_queries,
                verify_queries,
            },
        ));
    }
    Err(HppError::QueriesExhausted(d * d))
}

/// Slopes `a` under which no two of the `(r, s)` pairs share `s − a r`.
/// Each pair with distinct `r` rules out at most one slope.
pub fn consistent_slopes(f: &FieldCtx, pairs: &[(Felt, Felt)]) -> u64 {
    f.elements()
        .filter(|&a| {
            let mut offsets = HashSet::new();
            pairs
                .iter()
                .all(|&(r, s)| offsets.insert(f.sub(s, f.mul(a, r))))
        })
        .count() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub d: u64,
    pub trials: usize,
    pub median_queries: f64,
    pub mean_queries: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub seed: u64,
    pub points: Vec<ScalingPoint>,
    /// Slope of `log(median collision queries)` against `log d`.
    pub exponent: f64,
    pub stderr: f64,
    /// 95% interval from the t distribution; absent with only two sizes.
    pub ci95: Option<(f64, f64)>,
}

/// Runs `trials` fresh instances per field order and fits the growth
/// exponent of the median collision query count.
pub fn scaling_experiment(ds: &[u64], trials: usize, seed: u64) -> Result<ScalingReport> {
    if trials < MIN_TRIALS {
        return Err(HppError::TooFewTrials(trials));
    }
    if ds.len() < 2 {
        return Err(HppError::Precondition(
            "need at least two field sizes to fit an exponent".into(),
        ));
    }
    let mut points = Vec::with_capacity(ds.len());
    for (k, &d) in ds.iter().enumerate() {
        let f = FieldCtx::with_order(d)?;
        let counts: Vec<u64> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let s = derive_seed(seed, (k * trials + i) as u64);
                let mut inst = HiddenInstance::sample(&f, 1, 1, s)?;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(s, 1));
                let (slope, stats) = solve_linear_classical(&mut inst, &mut rng)?;
                let truth = inst.polynomial().to_uni().map_or(f.zero(), |p| p.coeff(1));
                if slope != truth {
                    return Err(HppError::Invariant("baseline recovered a wrong slope".into()));
                }
                Ok(stats.collision_queries)
            })
            .collect::<Result<_>>()?;
        points.push(ScalingPoint {
            d,
            trials,
            median_queries: median(&counts),
            mean_queries: counts.iter().sum::<u64>() as f64 / trials as f64,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.d as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.median_queries.ln()).collect();
    let (_, exponent, stderr) = linear_fit(&xs, &ys);
    let ci95 = (points.len() > 2).then(|| {
        let t = StudentsT::new(0.0, 1.0, (points.len() - 2) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        (exponent - t * stderr, exponent + t * stderr)
    });
    Ok(ScalingReport {
        seed,
        points,
        exponent,
        stderr,
        ci95,
    })
}
