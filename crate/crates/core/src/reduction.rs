//! Reduction of the `m`-variate problem to univariate ones.
//!
//! Write `Q = Σ_α Q_α(X_m) X'^α` with `X' = (X_1, …, X_{m−1})`. Pinning
//! `X' = 0` leaves the univariate `Q_0(X_m)`. Pinning `X_m = t_j` for the
//! `n` points `t_j` (field elements with codes `1..=n`) leaves `(m−1)`-variate
//! problems whose non-constant coefficients are `Q_α(t_j)`; each `Q_α` has
//! degree at most `n − |α| < n` and is interpolated back. Unrolling gives
//! `κ_m = 1 + n κ_{m−1}` univariate sub-problems, `κ_1 = 1`.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blackbox::{verify_candidate, HppOracle, SliceView};
use crate::error::{HppError, Result};
use crate::fibers::{Analysis, GoodSets};
use crate::gf::{Felt, FieldCtx};
use crate::pgm::{coefficients_from_oracle, Sampler};
use crate::polyring::{lagrange_interpolate, Monomial, MultiPoly, UniPoly};

/// `κ_m = n^{m−1} + … + n + 1`.
pub fn kappa(m: usize, n: usize) -> u64 {
    (1..m).fold(1u64, |k, _| 1 + n as u64 * k)
}

/// Points used for the `X_m` slices.
pub fn slice_points(f: &FieldCtx, n: u32) -> Result<Vec<Felt>> {
    if f.order() <= n {
        return Err(HppError::FieldTooSmall {
            d: f.order(),
            n: n as usize,
        });
    }
    (1..=n).map(|c| f.elem(c)).collect()
}

/// One node of the reduction tree. `assignment` is relative to the parent
/// problem's variables; `null` marks a free variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanNode {
    pub vars: usize,
    pub assignment: Vec<Option<u32>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub children: Vec<PlanNode>,
}

impl PlanNode {
    /// Number of univariate sub-problems below this node.
    pub fn leaves(&self) -> u64 {
        if self.vars == 1 {
            1
        } else {
            self.children.iter().map(PlanNode::leaves).sum()
        }
    }
}

pub fn reduction_plan(f: &FieldCtx, m: usize, n: u32) -> Result<PlanNode> {
    if m == 0 {
        return Err(HppError::Precondition("need m ≥ 1".into()));
    }
    let points = slice_points(f, n)?;
    Ok(plan_node(&points, vec![None; m]))
}

fn plan_node(points: &[Felt], assignment: Vec<Option<u32>>) -> PlanNode {
    let vars = assignment.iter().filter(|a| a.is_none()).count();
    let mut node = PlanNode {
        vars,
        assignment,
        children: Vec::new(),
    };
    if vars > 1 {
        let mut axis = vec![Some(0); vars - 1];
        axis.push(None);
        node.children.push(plan_node(points, axis));
        for t in points {
            let mut slice = vec![None; vars - 1];
            slice.push(Some(t.code()));
            node.children.push(plan_node(points, slice));
        }
    }
    node
}

/// Something that proposes the non-constant coefficients `q_1..q_n` of a
/// univariate oracle. `None` means the attempt produced no candidate.
pub trait UnivariateSolver {
    fn propose(
        &mut self,
        oracle: &mut dyn HppOracle,
        n: u32,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Option<Vec<Felt>>>;
}

/// The simulated quantum routine: one run of the `n`-copy measurement,
/// charged as `n` superposition queries.
pub struct QuantumSolver {
    analysis: Option<Analysis>,
    samplers: HashMap<Vec<Felt>, Sampler>,
}

impl QuantumSolver {
    /// `analysis = None` samples the ideal measurement.
    pub fn new(analysis: Option<Analysis>) -> Self {
        QuantumSolver {
            analysis,
            samplers: HashMap::new(),
        }
    }
}

impl UnivariateSolver for QuantumSolver {
    fn propose(
        &mut self,
        oracle: &mut dyn HppOracle,
        n: u32,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Option<Vec<Felt>>> {
        let f = oracle.field().clone();
        let q = coefficients_from_oracle(oracle, n as usize)?;
        let sampler = match self.samplers.entry(q.clone()) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let good = self
                    .analysis
                    .map(|a| GoodSets::new(&f, n as usize, a))
                    .transpose()?;
                e.insert(Sampler::new(&f, q, good)?)
            }
        };
        oracle.charge(n as u64);
        Ok(sampler.run_once(rng)?.guess)
    }
}

/// Knobs for [`solve_multivariate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionConfig {
    /// Attempts per univariate sub-problem before giving up.
    pub max_attempts: u32,
    /// Points per candidate verification.
    pub verify_trials: usize,
}

impl ReductionConfig {
    pub fn new(n: u32) -> Self {
        ReductionConfig {
            max_attempts: 200,
            verify_trials: crate::blackbox::default_verify_trials(n),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStats {
    /// Univariate sub-problems solved.
    pub subproblems: u64,
    /// Solver attempts over all sub-problems.
    pub attempts: u64,
    /// Queries booked on the oracle, verification included.
    pub queries: u64,
}

/// Recovers the non-constant part of the oracle's hidden polynomial.
pub fn solve_multivariate<R: Rng>(
    oracle: &mut dyn HppOracle,
    n: u32,
    solver: &mut dyn UnivariateSolver,
    config: ReductionConfig,
    rng: &mut R,
) -> Result<(MultiPoly, ReductionStats)> {
    if config.max_attempts == 0 {
        return Err(HppError::Precondition("max_attempts must be positive".into()));
    }
    let start = oracle.query_count();
    let points = slice_points(&oracle.field().clone(), n)?;
    let mut stats = ReductionStats::default();
    let q = solve_rec(oracle, n, &points, solver, config, rng, &mut stats)?;
    stats.queries = oracle.query_count() - start;
    Ok((q, stats))
}

fn solve_rec<R: Rng>(
    oracle: &mut dyn HppOracle,
    n: u32,
    points: &[Felt],
    solver: &mut dyn UnivariateSolver,
    config: ReductionConfig,
    rng: &mut R,
    stats: &mut ReductionStats,
) -> Result<MultiPoly> {
    let m = oracle.arity();
    if m == 1 {
        let q = solve_univariate(oracle, n, solver, config, rng, stats)?;
        return Ok(UniPoly::from_nonconstant(&q).to_multi());
    }
    let f = oracle.field().clone();

    let mut axis = vec![Some(f.zero()); m - 1];
    axis.push(None);
    let q0 = {
        let mut view = SliceView::new(oracle, axis)?;
        solve_univariate(&mut view, n, solver, config, rng, stats)?
    };

    let mut slices = Vec::with_capacity(points.len());
    for &t in points {
        let mut pin = vec![None; m - 1];
        pin.push(Some(t));
        let mut view = SliceView::new(oracle, pin)?;
        slices.push(solve_rec(&mut view, n, points, solver, config, rng, stats)?);
    }

    let mut parts: BTreeMap<Monomial, UniPoly> = BTreeMap::new();
    parts.insert(Monomial::zero(m - 1), UniPoly::from_nonconstant(&q0));
    let mut alphas: Vec<Monomial> = slices
        .iter()
        .flat_map(|p| p.terms().map(|(a, _)| a.clone()))
        .collect();
    alphas.sort();
    alphas.dedup();
    for alpha in alphas {
        let samples: Vec<(Felt, Felt)> = points
            .iter()
            .zip(&slices)
            .map(|(&t, p)| (t, p.coeff(&alpha)))
            .collect();
        let bound = (n - alpha.total_degree()) as usize;
        parts.insert(alpha, lagrange_interpolate(&f, &samples, bound)?);
    }
    Ok(MultiPoly::from_coefficient_polys(m, &parts))
}

/// Repeats the solver on a univariate oracle until a candidate verifies.
pub fn solve_univariate<R: Rng>(
    oracle: &mut dyn HppOracle,
    n: u32,
    solver: &mut dyn UnivariateSolver,
    config: ReductionConfig,
    rng: &mut R,
    stats: &mut ReductionStats,
) -> Result<Vec<Felt>> {
    if oracle.arity() != 1 {
        return Err(HppError::Precondition(format!(
            "univariate solver got an oracle of arity {}",
            oracle.arity()
        )));
    }
    stats.subproblems += 1;
    for attempt in 1..=config.max_attempts {
        stats.attempts += 1;
        let Some(q) = solver.propose(oracle, n, rng)? else {
            continue;
        };
        if q.len() != n as usize {
            return Err(HppError::LengthMismatch {
                expected: n as usize,
                got: q.len(),
            });
        }
        let cand = UniPoly::from_nonconstant(&q).to_multi();
        if verify_candidate(oracle, &cand, config.verify_trials, rng)? {
            return Ok(q);
        }
        if attempt == config.max_attempts {
            break;
        }
    }
    Err(HppError::SolverFailed {
        attempts: config.max_attempts as usize,
    })
}
