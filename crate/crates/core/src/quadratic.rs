//! Roots of quadratics over GF(p^e).
//!
//! Odd characteristic goes through the discriminant and a Tonelli–Shanks
//! square root in the multiplicative group of order `d - 1`. Characteristic 2
//! reduces `aT^2 + bT + c` to the Artin–Schreier form `U^2 + U = δ`.

use crate::gf::{Felt, FieldCtx};

/// Square root in a field of odd order, or `None` for non-residues.
pub fn sqrt(f: &FieldCtx, a: Felt) -> Option<Felt> {
    assert!(f.characteristic() != 2, "use sqrt_char2 in characteristic 2");
    if a.is_zero() {
        return Some(a);
    }
    let q = f.order() as u64;
    if f.pow(a, (q - 1) / 2) != f.one() {
        return None;
    }
    let mut odd = q - 1;
    let mut s = 0u32;
    while odd.is_multiple_of(2) {
        odd /= 2;
        s += 1;
    }
    if s == 1 {
        return Some(f.pow(a, (q + 1) / 4));
    }
    // Deterministic non-residue: first element failing Euler's criterion.
    let z = f
        .nonzero_elements()
        .find(|&z| f.pow(z, (q - 1) / 2) != f.one())
        .expect("odd-order field has a non-residue");
    let mut m = s;
    let mut c = f.pow(z, odd);
    let mut t = f.pow(a, odd);
    let mut r = f.pow(a, odd.div_ceil(2));
    while t != f.one() {
        let mut i = 0;
        let mut t2 = t;
        while t2 != f.one() {
            t2 = f.square(t2);
            i += 1;
        }
        let mut b = c;
        for _ in 0..(m - i - 1) {
            b = f.square(b);
        }
        m = i;
        c = f.square(b);
        t = f.mul(t, c);
        r = f.mul(r, b);
    }
    Some(r)
}

/// Square root in characteristic 2, where squaring is a bijection.
pub fn sqrt_char2(f: &FieldCtx, a: Felt) -> Felt {
    debug_assert_eq!(f.characteristic(), 2);
    f.pow(a, f.order() as u64 / 2)
}

/// One solution of `U^2 + U = δ` in GF(2^e), or `None` when `Tr(δ) = 1`.
/// The other solution is `U + 1`.
pub fn solve_artin_schreier(f: &FieldCtx, delta: Felt) -> Option<Felt> {
    debug_assert_eq!(f.characteristic(), 2);
    if !f.trace(delta).is_zero() {
        return None;
    }
    let e = f.degree() as usize;
    if e % 2 == 1 {
        // half-trace
        let mut acc = f.zero();
        let mut x = delta;
        for i in 0..e {
            if i % 2 == 0 {
                acc = f.add(acc, x);
            }
            x = f.square(x);
        }
        return Some(acc);
    }
    // U = Σ_{i=0}^{e-2} (Σ_{j=i+1}^{e-1} θ^{2^j}) δ^{2^i} for any θ with Tr(θ) = 1.
    let theta = f
        .elements()
        .find(|&t| f.trace(t) == f.one())
        .expect("trace is surjective");
    let mut theta_pows = Vec::with_capacity(e);
    let mut delta_pows = Vec::with_capacity(e);
    let (mut tp, mut dp) = (theta, delta);
    for _ in 0..e {
        theta_pows.push(tp);
        delta_pows.push(dp);
        tp = f.square(tp);
        dp = f.square(dp);
    }
    let mut acc = f.zero();
    for i in 0..e - 1 {
        let inner = theta_pows[i + 1..]
            .iter()
            .fold(f.zero(), |s, &t| f.add(s, t));
        acc = f.add(acc, f.mul(inner, delta_pows[i]));
    }
    Some(acc)
}

/// All roots of `aT^2 + bT + c` with `a ≠ 0`, sorted and without repeats.
pub fn quadratic_roots(f: &FieldCtx, a: Felt, b: Felt, c: Felt) -> Vec<Felt> {
    assert!(!a.is_zero(), "leading coefficient must be nonzero");
    let mut roots = if f.characteristic() == 2 {
        roots_char2(f, a, b, c)
    } else {
        let two_a = f.add(a, a);
        let disc = f.sub(f.square(b), f.mul(f.from_int(4), f.mul(a, c)));
        match sqrt(f, disc) {
            None => Vec::new(),
            Some(s) => {
                let inv = f.inv(two_a).expect("2a is nonzero in odd characteristic");
                let nb = f.neg(b);
                vec![f.mul(f.add(nb, s), inv), f.mul(f.sub(nb, s), inv)]
            }
        }
    };
    roots.sort();
    roots.dedup();
    roots
}

fn roots_char2(f: &FieldCtx, a: Felt, b: Felt, c: Felt) -> Vec<Felt> {
    let a_inv = f.inv(a).expect("nonzero leading coefficient");
    if b.is_zero() {
        return vec![sqrt_char2(f, f.mul(c, a_inv))];
    }
    // T = (b/a) U turns the equation into (b^2/a)(U^2 + U) + c = 0.
    let scale = f.mul(b, a_inv);
    let b_inv = f.inv(b).unwrap();
    let delta = f.mul(f.mul(a, c), f.square(b_inv));
    match solve_artin_schreier(f, delta) {
        None => Vec::new(),
        Some(u) => vec![f.mul(scale, u), f.mul(scale, f.add(u, f.one()))],
    }
}
