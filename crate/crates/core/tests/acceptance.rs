//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

use std::process::ExitCode;
use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hpp_core::baseline::scaling_experiment;
use hpp_core::blackbox::HiddenInstance;
use hpp_core::densmat::{
    build_vx, conjugate_fourier, isometry_defect, off_block_mass, pipeline_distribution,
    rho_q_formula, rho_q_from_oracle,
};
use hpp_core::fibers::{
    apply_map, eta_moments, eta_table, g_n2, solve_n2_triangular, Analysis, GoodSets, TupleSpace,
};
use hpp_core::pgm::{coefficients_from_oracle, outcome_distribution, success_report, Sampler};
use hpp_core::reduction::{kappa, solve_multivariate, QuantumSolver, ReductionConfig};
use hpp_core::{Felt, FieldCtx};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn field(d: u64) -> FieldCtx {
    FieldCtx::with_order(d).expect("valid field order")
}

fn first_moment() -> Outcome {
    for (d, n) in [(3u64, 2usize), (5, 2), (7, 2), (3, 3)] {
        let m = eta_moments(&field(d), n).map_err(|e| e.to_string())?;
        ensure(m.first == Ratio::from_integer(1), || {
            format!("E[η] = {} at d={d} n={n}", m.first)
        })?;
    }
    Ok("E[η] = 1 exactly at (3,2) (5,2) (7,2) (3,3)".into())
}

fn partition_identity() -> Outcome {
    let mut checked = 0;
    for d in [2u64, 3, 4, 5, 7] {
        let f = field(d);
        let space = TupleSpace::new(f.order(), 2, 1 << 20).unwrap();
        for x in space.iter() {
            let t = eta_table(&f, &x, true).map_err(|e| e.to_string())?;
            let mut hit = vec![0u32; space.size() as usize];
            for w in 0..space.size() {
                for &b in t.solution_indices(w).unwrap() {
                    hit[b as usize] += 1;
                }
            }
            ensure(t.total() == space.size() && hit.iter().all(|&h| h == 1), || {
                format!("fibers do not partition F^2 at d={d} x={x:?}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("fibers partition F^2 for all {checked} x with d ≤ 7"))
}

fn triangular_vs_brute_force() -> Outcome {
    let mut exhaustive = 0u64;
    for d in [5u64, 7, 4] {
        let f = field(d);
        let space = TupleSpace::new(f.order(), 2, 1 << 20).unwrap();
        for x in space.iter().filter(|x| !g_n2(&f, x).is_zero()) {
            let t = eta_table(&f, &x, true).map_err(|e| e.to_string())?;
            for w in space.iter() {
                let tri = solve_n2_triangular(&f, &x, &w).map_err(|e| e.to_string())?;
                ensure(Some(tri) == t.solutions(&w), || {
                    format!("mismatch at d={d} x={x:?} w={w:?}")
                })?;
                exhaustive += 1;
            }
        }
    }
    let f = field(101);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut random = 0;
    while random < 1000 {
        let x = vec![f.random(&mut rng), f.random(&mut rng)];
        if g_n2(&f, &x).is_zero() {
            continue;
        }
        // Half the targets are images, so nonempty fibers are exercised.
        let w = if random % 2 == 0 {
            vec![f.random(&mut rng), f.random(&mut rng)]
        } else {
            apply_map(&f, &x, &[f.random(&mut rng), f.random(&mut rng)]).unwrap()
        };
        let t = eta_table(&f, &x, true).map_err(|e| e.to_string())?;
        let tri = solve_n2_triangular(&f, &x, &w).map_err(|e| e.to_string())?;
        ensure(Some(tri) == t.solutions(&w), || {
            format!("mismatch at d=101 x={x:?} w={w:?}")
        })?;
        random += 1;
    }
    Ok(format!(
        "{exhaustive} exhaustive (x, w) pairs at d ∈ {{5,7,4}} and {random} random pairs at d=101 agree"
    ))
}

fn n1_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in [3u64, 5, 7, 11] {
        let r = success_report(&field(d), 1, Some(Analysis::First)).map_err(|e| e.to_string())?;
        let d = d as f64;
        worst = worst.max((r.ideal - (1.0 - 1.0 / d + 1.0 / (d * d))).abs());
    }
    ensure(worst < 1e-12, || format!("max |Δ| = {worst:e}"))?;
    Ok(format!("n=1 ideal matches 1 − 1/d + 1/d² (max |Δ| = {worst:.1e})"))
}

fn sandwich() -> Outcome {
    const TOL: f64 = 1e-9;
    for d in [7u64, 11, 19, 31] {
        let r = success_report(&field(d), 2, Some(Analysis::First)).map_err(|e| e.to_string())?;
        let c = r.corollary_bound.unwrap_or(0.0);
        ensure(
            c <= r.lemma2_bound + TOL
                && r.lemma2_bound <= r.approx + TOL
                && r.approx <= r.ideal + TOL
                && r.ideal <= 1.0 + TOL,
            || format!("ordering broken at d={d}: {r:?}"),
        )?;
    }
    Ok("corollary ≤ lemma2 ≤ approx ≤ ideal ≤ 1 at n=2, d ∈ {7,11,19,31}".into())
}

fn constant_success() -> Outcome {
    // Regression fixtures for (d, ideal, approx) at n = 2, first analysis.
    const FIXTURES: [(u64, f64, f64); 4] = [
        (11, 4.880_133_574_182_385e-1, 4.687_379_418_165_271e-1),
        (19, 4.936_587_124_524_842_7e-1, 4.872_544_586_179_615_7e-1),
        (31, 4.964_329_249_291_803_4e-1, 4.940_667_012_205_925_4e-1),
        (61, 4.983_563_519_030_819e-1, 4.977_609_493_455_592e-1),
    ];
    let mut lowest = f64::INFINITY;
    for (d, ideal, approx) in FIXTURES {
        let r = success_report(&field(d), 2, Some(Analysis::First)).map_err(|e| e.to_string())?;
        ensure(r.approx >= 0.05, || format!("approx {} < 0.05 at d={d}", r.approx))?;
        ensure(
            (r.ideal - ideal).abs() < 1e-12 && (r.approx - approx).abs() < 1e-12,
            || format!("fixture drift at d={d}: {r:?}"),
        )?;
        lowest = lowest.min(r.approx);
    }
    Ok(format!(
        "approx ≥ 0.05 at d ∈ {{11,19,31,61}} (lowest {lowest:.4}); fixtures reproduced"
    ))
}

fn density_matrix() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_off: f64 = 0.0;
    for d in [2u64, 3, 4, 5] {
        let f = field(d);
        for _ in 0..5 {
            let q = vec![f.random(&mut rng), f.random(&mut rng)];
            let rt = conjugate_fourier(&f, &rho_q_formula(&f, &q).unwrap()).unwrap();
            worst_off = worst_off.max(off_block_mass(&f, &rt));
        }
        let inst = HiddenInstance::sample(&f, 1, 1, d).unwrap();
        let q = coefficients_from_oracle(&inst, 1).unwrap();
        let diff = (rho_q_from_oracle(&inst).unwrap() - rho_q_formula(&f, &q).unwrap()).norm();
        ensure(diff < 1e-12, || format!("oracle-built state differs at d={d}"))?;
    }
    ensure(worst_off < 1e-10, || format!("off-block mass {worst_off:e}"))?;

    let f = field(3);
    let good = GoodSets::first(&f, 2).unwrap();
    let mut worst_v: f64 = 0.0;
    for x in TupleSpace::new(3, 2, 100).unwrap().iter() {
        let v = build_vx(&f, &x, &good).map_err(|e| e.to_string())?.matrix();
        worst_v = worst_v.max(isometry_defect(&v));
    }
    ensure(worst_v < 1e-10, || format!("V_x defect {worst_v:e}"))?;

    let mut worst_p: f64 = 0.0;
    for (d, analysis, step) in [(5u64, Analysis::First, 1usize), (4, Analysis::Second, 1), (7, Analysis::First, 6)] {
        let f = field(d);
        let good = GoodSets::new(&f, 2, analysis).unwrap();
        let q = vec![f.random(&mut rng), f.random(&mut rng)];
        let rt = conjugate_fourier(&f, &rho_q_formula(&f, &q).unwrap()).unwrap();
        let space = TupleSpace::new(f.order(), 2, 100).unwrap();
        for x in space.iter().step_by(step) {
            let probs = pipeline_distribution(&f, &rt, &x, &good).map_err(|e| e.to_string())?;
            let dist = outcome_distribution(&f, &eta_table(&f, &x, false).unwrap(), Some(&good))
                .unwrap();
            for (qi, qp) in space.iter().enumerate() {
                let expect = dist.branch_mass * dist.prob_of(&f, &q, &qp);
                worst_p = worst_p.max((probs[qi] - expect).abs());
            }
        }
    }
    ensure(worst_p < 1e-9, || format!("pipeline deviation {worst_p:e}"))?;
    Ok(format!(
        "off-block {worst_off:.1e}, V_x defect {worst_v:.1e}, pipeline vs analytic {worst_p:.1e}"
    ))
}

fn monte_carlo() -> Outcome {
    const RUNS: u64 = 10_000;
    let f = field(7);
    let good = GoodSets::first(&f, 2).unwrap();
    let p = success_report(&f, 2, Some(Analysis::First)).unwrap().approx;
    let sigma = (p * (1.0 - p) / RUNS as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let q_poly = HiddenInstance::sample(&f, 1, 2, 8).unwrap().polynomial().clone();
    let mut random_pi: Vec<Felt> = f.elements().collect();
    for i in (1..random_pi.len()).rev() {
        random_pi.swap(i, rng.random_range(0..=i));
    }
    let mut notes = Vec::new();
    for (label, pi) in [
        ("identity", HiddenInstance::identity_permutation(&f)),
        ("random", random_pi),
    ] {
        let inst = HiddenInstance::with_fixed_permutation(&f, q_poly.clone(), 2, pi).unwrap();
        let q = coefficients_from_oracle(&inst, 2).unwrap();
        let sampler = Sampler::new(&f, q.clone(), Some(good.clone())).unwrap();
        let runs = sampler.run_many(RUNS, 80).map_err(|e| e.to_string())?;
        let hits = runs.iter().filter(|r| r.guess.as_deref() == Some(&q[..])).count();
        let rate = hits as f64 / RUNS as f64;
        let z = (rate - p) / sigma;
        ensure(z.abs() <= 4.0, || format!("π={label}: rate {rate} vs {p}, z = {z:.2}"))?;
        notes.push(format!("π={label} z={z:+.2}"));
    }
    Ok(format!(
        "{RUNS} runs at d=7 n=2 within 4σ of {p:.4} ({})",
        notes.join(", ")
    ))
}

fn reduction() -> Outcome {
    let mut notes = Vec::new();
    for (m, n, d) in [(2usize, 2u32, 7u64), (3, 2, 11), (2, 3, 13)] {
        let f = field(d);
        let mut attempts = 0;
        for seed in 0..100 {
            let mut inst = HiddenInstance::sample(&f, m, n, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xACCE);
            let mut solver = QuantumSolver::new(Some(Analysis::First));
            let (q, stats) =
                solve_multivariate(&mut inst, n, &mut solver, ReductionConfig::new(n), &mut rng)
                    .map_err(|e| format!("(m,n,d)=({m},{n},{d}) seed {seed}: {e}"))?;
            ensure(stats.subproblems == kappa(m, n as usize), || {
                format!("{} sub-problems, expected κ = {}", stats.subproblems, kappa(m, n as usize))
            })?;
            ensure(&q == inst.polynomial(), || {
                format!("wrong recovery at (m,n,d)=({m},{n},{d}) seed {seed}")
            })?;
            attempts += stats.attempts;
        }
        notes.push(format!(
            "({m},{n},{d}): κ={} mean attempts {:.2}",
            kappa(m, n as usize),
            attempts as f64 / 100.0
        ));
    }
    Ok(format!("100/100 exact recoveries each; {}", notes.join("; ")))
}

fn baseline_scaling() -> Outcome {
    let r = scaling_experiment(&[101, 401, 1009, 4001], 200, 10).map_err(|e| e.to_string())?;
    ensure((0.4..=0.6).contains(&r.exponent), || {
        format!("exponent {:.3} outside [0.4, 0.6]", r.exponent)
    })?;
    Ok(format!(
        "fitted exponent {:.3} ± {:.3} over d ∈ {{101,401,1009,4001}}",
        r.exponent, r.stderr
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 exact first moment", first_moment),
        ("2 partition identity", partition_identity),
        ("3 triangular solver vs brute force", triangular_vs_brute_force),
        ("4 n=1 closed form", n1_closed_form),
        ("5 success sandwich", sandwich),
        ("6 constant success", constant_success),
        ("7 density-matrix oracle", density_matrix),
        ("8 Monte Carlo agreement", monte_carlo),
        ("9 reduction recovery", reduction),
        ("10 classical baseline scaling", baseline_scaling),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failed += 1;
                ("FAIL", detail)
            }
        };
        println!(
            "{tag} criterion {name}: {detail} [{:.1}s]",
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
