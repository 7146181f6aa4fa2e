//! `hpp`: command-line front end for the hidden polynomial simulator.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use hpp_core::blackbox::{HiddenInstance, HppOracle};
use hpp_core::fibers::{eta_table, Analysis, GoodSets, GoodSummary, TupleSpace, MAX_ENUMERATION};
use hpp_core::reduction::{
    kappa, reduction_plan, solve_multivariate, QuantumSolver, ReductionConfig,
};
use hpp_core::{baseline, densmat, pgm, ErrorKind, Felt, FieldCtx, FieldDescriptor, HppError};

#[derive(Parser, Debug)]
#[command(name = "hpp", version, about = "Exact simulator for the hidden polynomial problem")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnalysisArg {
    First,
    Second,
}

impl From<AnalysisArg> for Analysis {
    fn from(a: AnalysisArg) -> Self {
        match a {
            AnalysisArg::First => Analysis::First,
            AnalysisArg::Second => Analysis::Second,
        }
    }
}

#[derive(Args, Debug)]
struct FieldArg {
    /// Field as `p^e`, or its order `d` when that is a prime power.
    #[arg(long)]
    field: String,
}

impl FieldArg {
    fn ctx(&self) -> Result<FieldCtx, HppError> {
        if self.field.contains('^') {
            FieldCtx::from_descriptor(self.field.parse::<FieldDescriptor>()?)
        } else {
            let d = self
                .field
                .trim()
                .parse::<u64>()
                .map_err(|_| HppError::Parse(format!("bad field `{}`", self.field)))?;
            FieldCtx::with_order(d)
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the field's order and modulus.
    Field(FieldArg),
    /// Fiber sizes of `b ↦ Φ_n(b)·x`.
    Eta {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long)]
        n: usize,
        /// Comma-separated element codes; all `x ∈ F^n` when omitted.
        #[arg(long)]
        x: Option<String>,
        /// Print the good-set summary instead of the table.
        #[arg(long)]
        summary: bool,
        #[arg(long, value_enum)]
        analysis: Option<AnalysisArg>,
    },
    /// Ideal and approximate success probabilities with their lower bounds.
    Success {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        analysis: Option<AnalysisArg>,
        /// Dump `(x, q', probability)` for every outcome instead.
        #[arg(long)]
        dump_dist: bool,
        /// Hidden coefficients for `--dump-dist`; zeros by default.
        #[arg(long)]
        q: Option<String>,
        /// Dump the ideal measurement's distribution.
        #[arg(long)]
        ideal: bool,
    },
    /// Sample an instance and recover it with the reduction.
    E2e {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u32,
        #[arg(long, env = "HPP_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        analysis: Option<AnalysisArg>,
        /// Sample the ideal measurement.
        #[arg(long, conflicts_with = "analysis")]
        ideal: bool,
        #[arg(long, default_value_t = 200)]
        max_attempts: u32,
        /// Include the hidden polynomial and permutation in the output.
        #[arg(long)]
        reveal: bool,
        /// Also run the classical collision solver (linear univariate only).
        #[arg(long)]
        baseline: bool,
        /// Include the reduction tree.
        #[arg(long)]
        explain_plan: bool,
    },
    /// Query scaling of the classical collision solver.
    Baseline {
        /// Comma-separated field orders.
        #[arg(long, value_delimiter = ',', default_value = "101,401,1009,4001")]
        ds: Vec<u64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, env = "HPP_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// The reduction tree and its sub-problem count.
    Plan {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u32,
    },
    /// Density-matrix checks for a single hidden univariate polynomial.
    Densmat {
        #[command(flatten)]
        field: FieldArg,
        /// Comma-separated coefficients of `r, r^2, ...`.
        #[arg(long)]
        q: String,
        /// Fourier values for the pipeline check.
        #[arg(long)]
        x: Option<String>,
        #[arg(long, value_enum)]
        analysis: Option<AnalysisArg>,
        /// Write the Fourier-conjugated single-copy matrix as text.
        #[arg(long)]
        dump_matrix: bool,
    },
}

fn parse_felts(f: &FieldCtx, s: &str) -> Result<Vec<Felt>, HppError> {
    s.split(',')
        .map(|t| {
            let code = t
                .trim()
                .parse::<u32>()
                .map_err(|_| HppError::Parse(format!("bad element `{t}`")))?;
            f.elem(code)
        })
        .collect()
}

fn codes(v: &[Felt]) -> Vec<u32> {
    v.iter().map(|c| c.code()).collect()
}

fn good_sets(f: &FieldCtx, n: usize, a: Option<AnalysisArg>) -> Result<GoodSets, HppError> {
    match a {
        Some(a) => GoodSets::new(f, n, a.into()),
        None => GoodSets::auto(f, n),
    }
}

fn write_json<W: Write + ?Sized, T: Serialize>(out: &mut W, value: &T) -> Result<(), HppError> {
    serde_json::to_writer_pretty(&mut *out, value)
        .map_err(|e| HppError::Io(io::Error::other(e)))?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), HppError> {
    let format = cli.format;
    match cli.command {
        Command::Field(field) => {
            let f = field.ctx()?;
            let v = json!({
                "field": f.descriptor().to_string(),
                "order": f.order(),
                "modulus": f.modulus_string(),
            });
            match format.unwrap_or(Format::Json) {
                Format::Json => write_json(out, &v)?,
                Format::Csv => {
                    writeln!(out, "field,order,modulus")?;
                    writeln!(out, "{},{},{}", f.descriptor(), f.order(), f.modulus_string())?;
                }
            }
        }
        Command::Eta {
            field,
            n,
            x,
            summary,
            analysis,
        } => {
            let f = field.ctx()?;
            if summary {
                let good = good_sets(&f, n, analysis)?;
                let stats = pgm::collect_x_stats(&f, n, Some(&good))?;
                let per_x: Vec<_> = stats.iter().map(|s| s.good).collect();
                write_json(out, &GoodSummary::from_parts(&good, &per_x))?;
                return Ok(());
            }
            let xs: Vec<Vec<Felt>> = match x {
                Some(x) => {
                    let x = parse_felts(&f, &x)?;
                    if x.len() != n {
                        return Err(HppError::LengthMismatch {
                            expected: n,
                            got: x.len(),
                        });
                    }
                    vec![x]
                }
                None => TupleSpace::new(f.order(), n, MAX_ENUMERATION)?.iter().collect(),
            };
            match format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    for (i, x) in xs.iter().enumerate() {
                        eta_table(&f, x, false)?.write_csv(out, i == 0)?;
                    }
                }
                Format::Json => {
                    let mut all = Vec::with_capacity(xs.len());
                    for x in &xs {
                        let t = eta_table(&f, x, false)?;
                        let rows: Vec<_> = t
                            .support()
                            .map(|(w, eta)| json!({"w": codes(&t.space().decode(w)), "eta": eta}))
                            .collect();
                        all.push(json!({"x": codes(x), "rows": rows}));
                    }
                    write_json(out, &all)?;
                }
            }
        }
        Command::Success {
            field,
            n,
            analysis,
            dump_dist,
            q,
            ideal,
        } => {
            let f = field.ctx()?;
            if dump_dist {
                let q = match q {
                    Some(q) => parse_felts(&f, &q)?,
                    None => vec![f.zero(); n],
                };
                if q.len() != n {
                    return Err(HppError::LengthMismatch {
                        expected: n,
                        got: q.len(),
                    });
                }
                let good = if ideal {
                    None
                } else {
                    Some(good_sets(&f, n, analysis)?)
                };
                let space = TupleSpace::new(f.order(), n, MAX_ENUMERATION)?;
                TupleSpace::new(f.order(), 2 * n, 1 << 24)?;
                writeln!(out, "x,q_prime,probability")?;
                for x in space.iter() {
                    let dist = pgm::outcome_distribution(&f, &eta_table(&f, &x, false)?, good.as_ref())?;
                    let xs = hpp_core::fibers::join_tuple(&x);
                    for qp in space.iter() {
                        let p = dist.branch_mass * dist.prob_of(&f, &q, &qp);
                        writeln!(out, "{xs},{},{p:.17e}", hpp_core::fibers::join_tuple(&qp))?;
                    }
                }
                return Ok(());
            }
            let report = pgm::success_report(&f, n, analysis.map(Into::into))?;
            match format.unwrap_or(Format::Json) {
                Format::Json => write_json(out, &report)?,
                Format::Csv => {
                    writeln!(
                        out,
                        "field,n,analysis,D,ideal,approx,lemma2_bound,corollary_bound,x_good_count,w_good_min,w_good_mean"
                    )?;
                    writeln!(
                        out,
                        "{},{},{},{},{:.17e},{:.17e},{:.17e},{},{},{},{:.17e}",
                        report.field,
                        report.n,
                        report.good.analysis,
                        report.good.cap,
                        report.ideal,
                        report.approx,
                        report.lemma2_bound,
                        report
                            .corollary_bound
                            .map_or(String::new(), |c| format!("{c:.17e}")),
                        report.good.x_good_count,
                        report.good.w_good_min,
                        report.good.w_good_mean,
                    )?;
                }
            }
        }
        Command::E2e {
            field,
            m,
            n,
            seed,
            analysis,
            ideal,
            max_attempts,
            reveal,
            baseline: with_baseline,
            explain_plan,
        } => {
            let f = field.ctx()?;
            if with_baseline && (m != 1 || n != 1) {
                return Err(HppError::Precondition(
                    "--baseline needs m = 1 and n = 1".into(),
                ));
            }
            let mut inst = HiddenInstance::sample(&f, m, n, seed)?;
            let analysis = if ideal {
                None
            } else {
                Some(good_sets(&f, n as usize, analysis)?.analysis())
            };
            let mut solver = QuantumSolver::new(analysis);
            let config = ReductionConfig {
                max_attempts,
                ..ReductionConfig::new(n)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5EED));
            let (q, stats) = solve_multivariate(&mut inst, n, &mut solver, config, &mut rng)?;
            let correct = &q == inst.polynomial();
            if !correct {
                return Err(HppError::Invariant(
                    "verified candidate differs from the hidden polynomial".into(),
                ));
            }
            let mut v = json!({
                "instance": inst.record(reveal),
                "measurement": analysis.map_or("ideal".to_string(), |a| a.to_string()),
                "recovered": q.to_string(),
                "correct": correct,
                "kappa": kappa(m, n as usize),
                "stats": stats,
            });
            if explain_plan {
                v["plan"] = serde_json::to_value(reduction_plan(&f, m, n)?)
                    .map_err(|e| HppError::Io(io::Error::other(e)))?;
            }
            if with_baseline {
                let mut fresh = HiddenInstance::sample(&f, 1, 1, seed)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xBA5E));
                let (slope, bstats) = baseline::solve_linear_classical(&mut fresh, &mut rng)?;
                v["baseline"] = json!({
                    "slope": slope.code(),
                    "collision_queries": bstats.collision_queries,
                    "verify_queries": bstats.verify_queries,
                    "queries": fresh.query_count(),
                });
            }
            write_json(out, &v)?;
        }
        Command::Baseline { ds, trials, seed } => {
            let report = baseline::scaling_experiment(&ds, trials, seed)?;
            match format.unwrap_or(Format::Json) {
                Format::Json => write_json(out, &report)?,
                Format::Csv => {
                    writeln!(out, "d,trials,median_queries,mean_queries")?;
                    for p in &report.points {
                        writeln!(out, "{},{},{},{}", p.d, p.trials, p.median_queries, p.mean_queries)?;
                    }
                }
            }
        }
        Command::Plan { field, m, n } => {
            let f = field.ctx()?;
            let plan = reduction_plan(&f, m, n)?;
            write_json(out, &json!({"kappa": kappa(m, n as usize), "plan": plan}))?;
        }
        Command::Densmat {
            field,
            q,
            x,
            analysis,
            dump_matrix,
        } => {
            let f = field.ctx()?;
            let q = parse_felts(&f, &q)?;
            let rho_tilde = densmat::conjugate_fourier(&f, &densmat::rho_q_formula(&f, &q)?)?;
            if dump_matrix {
                densmat::write_matrix(&rho_tilde, out)?;
                return Ok(());
            }
            let mut v = json!({
                "field": f.descriptor().to_string(),
                "off_block_mass": densmat::off_block_mass(&f, &rho_tilde),
                "block_form_deviation": densmat::block_form_deviation(&f, &q, &rho_tilde),
            });
            if let Some(x) = x {
                let x = parse_felts(&f, &x)?;
                if x.len() != q.len() {
                    return Err(HppError::LengthMismatch {
                        expected: q.len(),
                        got: x.len(),
                    });
                }
                let good = good_sets(&f, x.len(), analysis)?;
                let probs = densmat::pipeline_distribution(&f, &rho_tilde, &x, &good)?;
                let dist = pgm::outcome_distribution(&f, &eta_table(&f, &x, false)?, Some(&good))?;
                let space = TupleSpace::new(f.order(), x.len(), MAX_ENUMERATION)?;
                let worst = space
                    .iter()
                    .zip(&probs)
                    .map(|(qp, p)| (p - dist.branch_mass * dist.prob_of(&f, &q, &qp)).abs())
                    .fold(0.0, f64::max);
                v["pipeline_success"] = json!(probs[space.encode(&q) as usize]);
                v["pipeline_max_deviation"] = json!(worst);
            }
            write_json(out, &v)?;
        }
    }
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 2,
        ErrorKind::Guard => 3,
        ErrorKind::Invariant => 4,
        ErrorKind::Runtime => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: cannot set up {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let sink: Result<Box<dyn Write>, HppError> = match &cli.out {
        Some(path) => File::create(path)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(HppError::from),
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    };
    let result = sink.and_then(|mut out| {
        run(cli, &mut out)?;
        out.flush()?;
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
