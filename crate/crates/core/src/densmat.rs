//! Dense density-matrix simulation of the measurement for tiny fields.
//!
//! A single copy lives on `|b⟩ ⊗ |s⟩` with basis index `b·d + s`. After the
//! Fourier transform on the second register the state is block diagonal in
//! the Fourier value `x`; `n` copies restricted to a measured `x ∈ F^n` give
//! a pure state on `F^n` that the fiber-collapsing isometry `V_x` maps into
//!
//! ```text
//! (w register: d^n) ⊗ (j register: 0..D) ⊗ (η register: 0..=D)  ⊕  bad sector (d^n)
//! ```
//!
//! where `η = 0` is the cleared state of the η register.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::blackbox::HppOracle;
use crate::error::{HppError, Result};
use crate::fibers::{eta_table, GoodSets, TupleSpace};
use crate::gf::{Felt, FieldCtx};

pub type CMatrix = DMatrix<Complex64>;

/// Largest `d` for single-copy matrices.
pub const MAX_SINGLE_COPY_ORDER: u32 = 31;
/// Largest `d` for the two-copy pipeline.
pub const MAX_PIPELINE_ORDER: u32 = 7;

fn guard_single(f: &FieldCtx) -> Result<usize> {
    if f.order() > MAX_SINGLE_COPY_ORDER {
        return Err(HppError::GuardExceeded {
            guard: "densmat-single-copy",
            limit: MAX_SINGLE_COPY_ORDER as u64,
            requested: f.order() as u64,
        });
    }
    Ok(f.order() as usize)
}

fn guard_pipeline(f: &FieldCtx, n: usize) -> Result<()> {
    let limit = if n <= 1 {
        MAX_SINGLE_COPY_ORDER
    } else {
        MAX_PIPELINE_ORDER
    };
    if n > 2 || f.order() > limit {
        return Err(HppError::GuardExceeded {
            guard: "densmat-pipeline",
            limit: limit as u64,
            requested: f.order() as u64,
        });
    }
    Ok(())
}

fn eval_uni(f: &FieldCtx, q: &[Felt], r: Felt) -> Felt {
    q.iter()
        .rev()
        .fold(f.zero(), |acc, &c| f.mul(f.add(acc, c), r))
}

/// `ρ_Q = d^{-2} Σ_{b,c} |b⟩⟨c| ⊗ S_{Q(b) − Q(c)}` with `S_a |t⟩ = |t + a⟩`;
/// `q` holds the coefficients of `r, r^2, ...`.
pub fn rho_q_formula(f: &FieldCtx, q: &[Felt]) -> Result<CMatrix> {
    let d = guard_single(f)?;
    let vals: Vec<Felt> = f.elements().map(|r| eval_uni(f, q, r)).collect();
    let mut rho = CMatrix::zeros(d * d, d * d);
    let weight = Complex64::new(1.0 / (d * d) as f64, 0.0);
    for b in 0..d {
        for c in 0..d {
            let a = f.sub(vals[b], vals[c]);
            for t in f.elements() {
                let row = b * d + f.add(t, a).code() as usize;
                rho[(row, c * d + t.code() as usize)] = weight;
            }
        }
    }
    Ok(rho)
}

/// The same state read off a univariate oracle: the mixture over the
/// measured third register `z` of `d^{-1/2} Σ_r |r, s_r(z)⟩`, where
/// `B(r, s_r(z)) = z`. Uses uncharged table access.
pub fn rho_q_from_oracle(oracle: &dyn HppOracle) -> Result<CMatrix> {
    if oracle.arity() != 1 {
        return Err(HppError::ArityTooSmall {
            needed: 1,
            got: oracle.arity(),
        });
    }
    let f = oracle.field().clone();
    let d = guard_single(&f)?;
    // preimage[z][r] = s with B(r, s) = z
    let mut preimage = vec![vec![usize::MAX; d]; d];
    for r in f.elements() {
        for s in f.elements() {
            let z = oracle.peek(&[r], s)?;
            preimage[z.code() as usize][r.code() as usize] = s.code() as usize;
        }
    }
    let mut rho = CMatrix::zeros(d * d, d * d);
    let weight = Complex64::new(1.0 / (d * d) as f64, 0.0);
    for row in &preimage {
        if row.contains(&usize::MAX) {
            return Err(HppError::Invariant("oracle row is not a permutation".into()));
        }
        for b in 0..d {
            for c in 0..d {
                rho[(b * d + row[b], c * d + row[c])] += weight;
            }
        }
    }
    Ok(rho)
}

/// `DFT_F = d^{-1/2} Σ_{x,y} χ(xy) |x⟩⟨y|`.
pub fn dft_matrix(f: &FieldCtx) -> CMatrix {
    let d = f.order() as usize;
    let scale = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |x, y| {
        f.chi(f.mul(
            f.elem(x as u32).expect("below d"),
            f.elem(y as u32).expect("below d"),
        )) * scale
    })
}

/// `(I ⊗ DFT_F) ρ (I ⊗ DFT_F)†` on a single copy.
pub fn conjugate_fourier(f: &FieldCtx, rho: &CMatrix) -> Result<CMatrix> {
    let d = guard_single(f)?;
    if rho.shape() != (d * d, d * d) {
        return Err(HppError::LengthMismatch {
            expected: d * d,
            got: rho.nrows(),
        });
    }
    let u = CMatrix::identity(d, d).kronecker(&dft_matrix(f));
    Ok(&u * rho * u.adjoint())
}

/// Squared Frobenius norm of the entries coupling different Fourier values.
pub fn off_block_mass(f: &FieldCtx, rho_tilde: &CMatrix) -> f64 {
    let d = f.order() as usize;
    let mut mass = 0.0;
    for i in 0..rho_tilde.nrows() {
        for j in 0..rho_tilde.ncols() {
            if i % d != j % d {
                mass += rho_tilde[(i, j)].norm_sqr();
            }
        }
    }
    mass
}

/// Largest deviation of the diagonal blocks from `χ([Q(b) − Q(c)] x) / d^2`.
pub fn block_form_deviation(f: &FieldCtx, q: &[Felt], rho_tilde: &CMatrix) -> f64 {
    let d = f.order() as usize;
    let vals: Vec<Felt> = f.elements().map(|r| eval_uni(f, q, r)).collect();
    let mut worst: f64 = 0.0;
    for x in f.elements() {
        let xi = x.code() as usize;
        for b in 0..d {
            for c in 0..d {
                let expect = f.chi(f.mul(f.sub(vals[b], vals[c]), x)) / (d * d) as f64;
                worst = worst.max((rho_tilde[(b * d + xi, c * d + xi)] - expect).norm());
            }
        }
    }
    worst
}

/// Post-measurement state on `F^n` for Fourier values `x`:
/// `ρ^x(b, c) = d^n Π_j ρ̃[(b_j, x_j), (c_j, x_j)]`.
pub fn n_copy_block(f: &FieldCtx, rho_tilde: &CMatrix, x: &[Felt]) -> Result<CMatrix> {
    let d = guard_single(f)?;
    guard_pipeline(f, x.len())?;
    let space = TupleSpace::new(f.order(), x.len(), u64::MAX)?;
    let size = space.size() as usize;
    let tuples: Vec<Vec<Felt>> = space.iter().collect();
    let scale = (d as f64).powi(x.len() as i32);
    Ok(CMatrix::from_fn(size, size, |bi, ci| {
        let mut z = Complex64::new(scale, 0.0);
        for (j, &xj) in x.iter().enumerate() {
            let row = tuples[bi][j].code() as usize * d + xj.code() as usize;
            let col = tuples[ci][j].code() as usize * d + xj.code() as usize;
            z *= rho_tilde[(row, col)];
        }
        z
    }))
}

/// Index layout of the isometry's output space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub dn: usize,
    pub cap: usize,
}

impl Layout {
    pub fn good_dim(&self) -> usize {
        self.dn * self.cap * (self.cap + 1)
    }

    pub fn dim(&self) -> usize {
        self.good_dim() + self.dn
    }

    pub fn good(&self, w: usize, j: usize, eta: usize) -> usize {
        (w * self.cap + j) * (self.cap + 1) + eta
    }

    pub fn bad(&self, b: usize) -> usize {
        self.good_dim() + b
    }
}

/// `V_x = uncompute · controlled-Fourier · relabel`, kept factor by factor.
#[derive(Debug, Clone)]
pub struct Isometry {
    pub layout: Layout,
    /// `|b⟩ ↦ |w, rank of b in S_w, η_w⟩` on good fibers, `|b⟩_bad` otherwise.
    pub relabel: CMatrix,
    /// `F_ℓ` on `j ∈ 0..ℓ` controlled on `η = ℓ`.
    pub fourier: CMatrix,
    /// Swaps `η = η_w` with `η = 0`, controlled on `w`.
    pub uncompute: CMatrix,
}

impl Isometry {
    pub fn matrix(&self) -> CMatrix {
        &self.uncompute * &self.fourier * &self.relabel
    }
}

pub fn build_vx(f: &FieldCtx, x: &[Felt], good: &GoodSets) -> Result<Isometry> {
    guard_pipeline(f, x.len())?;
    if good.n() != x.len() {
        return Err(HppError::LengthMismatch {
            expected: good.n(),
            got: x.len(),
        });
    }
    let table = eta_table(f, x, true)?;
    let layout = Layout {
        dn: table.space().size() as usize,
        cap: good.cap() as usize,
    };
    let dim = layout.dim();
    let x_good = good.x_good(f, x);
    let mut good_eta = vec![0usize; layout.dn];
    for (w, eta) in table.support() {
        if x_good && good.w_good_eta(eta)? {
            good_eta[w as usize] = eta as usize;
        }
    }

    let mut relabel = CMatrix::zeros(dim, layout.dn);
    for (w, &eta) in good_eta.iter().enumerate() {
        if eta > 0 {
            let members = table.solution_indices(w as u64).expect("solutions stored");
            for (rank, &b) in members.iter().enumerate() {
                relabel[(layout.good(w, rank, eta), b as usize)] = Complex64::new(1.0, 0.0);
            }
        }
    }
    for b in 0..layout.dn {
        if relabel.column(b).iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            relabel[(layout.bad(b), b)] = Complex64::new(1.0, 0.0);
        }
    }

    let mut fourier = CMatrix::identity(dim, dim);
    for w in 0..layout.dn {
        for ell in 1..=layout.cap {
            let scale = 1.0 / (ell as f64).sqrt();
            for k in 0..ell {
                for j in 0..ell {
                    let angle = 2.0 * std::f64::consts::PI * (k * j) as f64 / ell as f64;
                    fourier[(layout.good(w, k, ell), layout.good(w, j, ell))] =
                        Complex64::from_polar(scale, angle);
                }
            }
        }
    }

    let mut uncompute = CMatrix::identity(dim, dim);
    for (w, &eta) in good_eta.iter().enumerate() {
        if eta > 0 {
            for j in 0..layout.cap {
                let (a, b) = (layout.good(w, j, eta), layout.good(w, j, 0));
                uncompute[(a, a)] = Complex64::new(0.0, 0.0);
                uncompute[(b, b)] = Complex64::new(0.0, 0.0);
                uncompute[(a, b)] = Complex64::new(1.0, 0.0);
                uncompute[(b, a)] = Complex64::new(1.0, 0.0);
            }
        }
    }

    Ok(Isometry {
        layout,
        relabel,
        fourier,
        uncompute,
    })
}

/// `max |V†V − I|`.
pub fn isometry_defect(v: &CMatrix) -> f64 {
    let g = v.adjoint() * v;
    let id = CMatrix::identity(g.nrows(), g.ncols());
    (g - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `P(q')` for every `q' ∈ F^n` (tuple index order): apply `V_x` to
/// `ρ^x` and measure the `w` register in the Fourier basis with `j = 0`,
/// `η = 0`. The result is not conditioned on the good branch.
pub fn pipeline_distribution(
    f: &FieldCtx,
    rho_tilde: &CMatrix,
    x: &[Felt],
    good: &GoodSets,
) -> Result<Vec<f64>> {
    let block = n_copy_block(f, rho_tilde, x)?;
    let iso = build_vx(f, x, good)?;
    let v = iso.matrix();
    let out = &v * block * v.adjoint();
    let layout = iso.layout;
    let space = TupleSpace::new(f.order(), x.len(), u64::MAX)?;
    let tuples: Vec<Vec<Felt>> = space.iter().collect();
    let scale = 1.0 / (layout.dn as f64).sqrt();
    let mut probs = Vec::with_capacity(layout.dn);
    for qp in &tuples {
        // |φ_{q'}⟩ = d^{-n/2} Σ_w χ(⟨q', w⟩) |w, 0, 0⟩
        let phi: Vec<(usize, Complex64)> = tuples
            .iter()
            .enumerate()
            .map(|(wi, w)| {
                let ip = f.dot(qp, w).expect("same length");
                (layout.good(wi, 0, 0), f.chi(ip) * scale)
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(i, a) in &phi {
            for &(j, b) in &phi {
                acc += a.conj() * out[(i, j)] * b;
            }
        }
        probs.push(acc.re);
    }
    Ok(probs)
}

/// `P(q')` of a single outcome; see [`pipeline_distribution`].
pub fn pipeline_probability(
    f: &FieldCtx,
    rho_tilde: &CMatrix,
    x: &[Felt],
    good: &GoodSets,
    q_prime: &[Felt],
) -> Result<f64> {
    let space = TupleSpace::new(f.order(), x.len(), u64::MAX)?;
    if q_prime.len() != x.len() {
        return Err(HppError::LengthMismatch {
            expected: x.len(),
            got: q_prime.len(),
        });
    }
    Ok(pipeline_distribution(f, rho_tilde, x, good)?[space.encode(q_prime) as usize])
}

/// Writes a matrix as text, one row per line, entries `re,im` separated by
/// spaces.
pub fn write_matrix<W: Write + ?Sized>(m: &CMatrix, out: &mut W) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.12e},{:.12e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}
