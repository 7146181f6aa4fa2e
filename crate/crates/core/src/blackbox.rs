//! The hidden-polynomial oracle `B(r, s) = π(s − Q(r))`.
//!
//! [`HiddenInstance`] owns the secret pair `(Q, π)` and counts every query.
//! [`SliceView`] fixes some of the variables of a parent oracle and is itself
//! an oracle, which is how the multivariate reduction hands univariate
//! sub-problems to a solver.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HppError, Result};
use crate::gf::{Felt, FieldCtx};
use crate::polyring::{monomials_up_to, Monomial, MultiPoly};

/// Anything that answers hidden-polynomial queries.
pub trait HppOracle {
    fn field(&self) -> &FieldCtx;

    fn arity(&self) -> usize;

    /// Evaluates `B(r, s)`; counts as one query.
    fn query(&mut self, r: &[Felt], s: Felt) -> Result<Felt>;

    /// Evaluates `B(r, s)` without booking a query. Simulated quantum
    /// routines read the oracle table through this and book their
    /// superposition queries with [`HppOracle::charge`].
    fn peek(&self, r: &[Felt], s: Felt) -> Result<Felt>;

    fn query_count(&self) -> u64;

    /// Books `k` superposition queries made by a simulated quantum routine.
    fn charge(&mut self, k: u64);

    /// The hidden polynomial. Only simulators and audits may call this.
    fn reveal(&self) -> MultiPoly;
}

#[derive(Debug, Clone)]
pub struct HiddenInstance {
    field: FieldCtx,
    q: MultiPoly,
    degree_bound: u32,
    pi: Vec<Felt>,
    query_count: u64,
    seed: Option<u64>,
}

/// Serializable description of an instance. The secret parts are present
/// only when explicitly revealed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub field: String,
    pub seed: Option<u64>,
    pub m: usize,
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<u32>>,
}

impl HiddenInstance {
    /// Uniform `Q` of total degree `≤ n` with zero constant term and a
    /// uniform permutation, both drawn from `seed`.
    pub fn sample(field: &FieldCtx, m: usize, n: u32, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(HppError::Precondition("need m ≥ 1 and n ≥ 1".into()));
        }
        if field.order() as u64 <= n as u64 {
            return Err(HppError::FieldTooSmall {
                d: field.order(),
                n: n as usize,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pi: Vec<Felt> = field.elements().collect();
        pi.shuffle(&mut rng);
        let mut q = MultiPoly::new(m);
        for mono in monomials_up_to(m, n) {
            q.add_term(field, mono, field.random(&mut rng))?;
        }
        Ok(HiddenInstance {
            field: field.clone(),
            q,
            degree_bound: n,
            pi,
            query_count: 0,
            seed: Some(seed),
        })
    }

    /// An instance with a chosen polynomial and permutation, for
    /// hand-checkable oracles (for example `π = identity`).
    pub fn with_fixed_permutation(
        field: &FieldCtx,
        q: MultiPoly,
        degree_bound: u32,
        pi: Vec<Felt>,
    ) -> Result<Self> {
        if pi.len() != field.order() as usize {
            return Err(HppError::LengthMismatch {
                expected: field.order() as usize,
                got: pi.len(),
            });
        }
        let mut seen = vec![false; pi.len()];
        for &v in &pi {
            field.check(v)?;
            if std::mem::replace(&mut seen[v.code() as usize], true) {
                return Err(HppError::Precondition("π is not a bijection".into()));
            }
        }
        if !q.constant_term().is_zero() {
            return Err(HppError::Precondition(
                "hidden polynomial must have zero constant term".into(),
            ));
        }
        q.validate(field, degree_bound)?;
        Ok(HiddenInstance {
            field: field.clone(),
            q,
            degree_bound,
            pi,
            query_count: 0,
            seed: None,
        })
    }

    pub fn identity_permutation(field: &FieldCtx) -> Vec<Felt> {
        field.elements().collect()
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn polynomial(&self) -> &MultiPoly {
        &self.q
    }

    pub fn permutation(&self) -> &[Felt] {
        &self.pi
    }

    pub fn record(&self, reveal: bool) -> InstanceRecord {
        InstanceRecord {
            field: self.field.descriptor().to_string(),
            seed: self.seed,
            m: self.q.arity(),
            n: self.degree_bound,
            q: reveal.then(|| self.q.to_string()),
            pi: reveal.then(|| self.pi.iter().map(|v| v.code()).collect()),
        }
    }
}

impl HppOracle for HiddenInstance {
    fn field(&self) -> &FieldCtx {
        &self.field
    }

    fn arity(&self) -> usize {
        self.q.arity()
    }

    fn query(&mut self, r: &[Felt], s: Felt) -> Result<Felt> {
        let out = self.peek(r, s)?;
        self.query_count += 1;
        Ok(out)
    }

    fn peek(&self, r: &[Felt], s: Felt) -> Result<Felt> {
        let qr = self.q.eval(&self.field, r)?;
        self.field.check(s)?;
        Ok(self.pi[self.field.sub(s, qr).code() as usize])
    }

    fn query_count(&self) -> u64 {
        self.query_count
    }

    fn charge(&mut self, k: u64) {
        self.query_count += k;
    }

    fn reveal(&self) -> MultiPoly {
        self.q.clone()
    }
}

/// A parent oracle with some variables pinned. Queries and charges are
/// forwarded, so accounting stays on the parent.
///
/// The hidden polynomial of a slice may have a nonzero constant term. That
/// constant only shifts `s` and is absorbed by the random offset the quantum
/// routine works with, so solvers recover the non-constant part.
pub struct SliceView<'a> {
    parent: &'a mut dyn HppOracle,
    assignment: Vec<Option<Felt>>,
    free: usize,
}

impl<'a> SliceView<'a> {
    pub fn new(parent: &'a mut dyn HppOracle, assignment: Vec<Option<Felt>>) -> Result<Self> {
        if assignment.len() != parent.arity() {
            return Err(HppError::LengthMismatch {
                expected: parent.arity(),
                got: assignment.len(),
            });
        }
        for v in assignment.iter().flatten() {
            parent.field().check(*v)?;
        }
        let free = assignment.iter().filter(|a| a.is_none()).count();
        if free == 0 {
            return Err(HppError::Precondition("slice leaves no free variable".into()));
        }
        Ok(SliceView {
            parent,
            assignment,
            free,
        })
    }

    pub fn assignment(&self) -> &[Option<Felt>] {
        &self.assignment
    }

    fn lift(&self, r: &[Felt]) -> Result<Vec<Felt>> {
        if r.len() != self.free {
            return Err(HppError::LengthMismatch {
                expected: self.free,
                got: r.len(),
            });
        }
        let mut free_vals = r.iter();
        Ok(self
            .assignment
            .iter()
            .map(|slot| slot.unwrap_or_else(|| *free_vals.next().unwrap()))
            .collect())
    }
}

/// View of an oracle with exactly one free variable.
pub fn univariate_oracle_view<'a>(
    parent: &'a mut dyn HppOracle,
    fixed: Vec<Option<Felt>>,
) -> Result<SliceView<'a>> {
    let free = fixed.iter().filter(|a| a.is_none()).count();
    if free != 1 {
        return Err(HppError::Precondition(format!(
            "univariate view needs exactly one free variable, got {free}"
        )));
    }
    SliceView::new(parent, fixed)
}

impl HppOracle for SliceView<'_> {
    fn field(&self) -> &FieldCtx {
        self.parent.field()
    }

    fn arity(&self) -> usize {
        self.free
    }

    fn query(&mut self, r: &[Felt], s: Felt) -> Result<Felt> {
        let full = self.lift(r)?;
        self.parent.query(&full, s)
    }

    fn peek(&self, r: &[Felt], s: Felt) -> Result<Felt> {
        self.parent.peek(&self.lift(r)?, s)
    }

    fn query_count(&self) -> u64 {
        self.parent.query_count()
    }

    fn charge(&mut self, k: u64) {
        self.parent.charge(k);
    }

    fn reveal(&self) -> MultiPoly {
        self.parent
            .reveal()
            .restrict(self.parent.field(), &self.assignment)
            .expect("assignment arity checked at construction")
    }
}

/// Default number of verification points for degree bound `n`.
pub fn default_verify_trials(n: u32) -> usize {
    n as usize + 3
}

/// Checks a candidate by querying `B(r_i, cand(r_i))` at `trials` distinct
/// random points: every answer equals `π(c)` for one constant `c` exactly when
/// `cand − Q` is constant on the sampled points.
pub fn verify_candidate<R: Rng + ?Sized>(
    oracle: &mut dyn HppOracle,
    cand: &MultiPoly,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    if trials < 2 {
        return Err(HppError::TooFewTrials(trials));
    }
    let m = oracle.arity();
    if cand.arity() != m {
        return Err(HppError::LengthMismatch {
            expected: m,
            got: cand.arity(),
        });
    }
    if !cand.constant_term().is_zero() {
        return Err(HppError::Precondition(
            "candidate must have zero constant term".into(),
        ));
    }
    let f = oracle.field().clone();
    let d = f.order() as u64;
    let space = d.checked_pow(m as u32).unwrap_or(u64::MAX);
    if (trials as u64) > space {
        return Err(HppError::Precondition(format!(
            "cannot pick {trials} distinct points from a space of {space}"
        )));
    }
    let mut seen = HashSet::with_capacity(trials);
    let mut first = None;
    let mut agree = true;
    while seen.len() < trials {
        let r: Vec<Felt> = (0..m).map(|_| f.random(rng)).collect();
        if !seen.insert(r.clone()) {
            continue;
        }
        let v = oracle.query(&r, cand.eval(&f, &r)?)?;
        match first {
            None => first = Some(v),
            Some(v0) if v0 != v => agree = false,
            _ => {}
        }
    }
    Ok(agree)
}

/// Convenience: monomial `X^k` in one variable.
pub fn uni_monomial(k: u32) -> Monomial {
    Monomial(vec![k])
}
