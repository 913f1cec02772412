//! Command-line front end: verification, construction, decomposition, Bang
//! solving, anti-concentration checks, and the uncovered-vertex pipeline.
//!
//! Exit codes: 0 = success / verdict true, 1 = verdict false, 2 = usage or
//! parse error. Reports go to stdout, diagnostics to stderr. The working
//! precision of the certified interval arithmetic defaults to 128 fractional
//! bits and can be overridden with the `HYPERCOVER_PRECISION` environment
//! variable.

use std::io::Read;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hypercover::anticoncentration::{check_hit_probability_bound, BiasVector};
use hypercover::bang::{solve_bang, BangInstance};
use hypercover::bounds::{essential_cover_bound, format_sig_digits, skew_cover_bound};
use hypercover::constructions::{padded_nonessential, skew_cover, trivial_cover};
use hypercover::cube::Vertex;
use hypercover::decompose::{accounting_bound, check_decomposition, decompose, Decomposition};
use hypercover::find_vertex::{run_pipeline, PipelineOutcome};
use hypercover::matrix::Matrix;
use hypercover::scalar::{format_scalar, parse_scalar, Scalar};
use hypercover::verify::{observe_row_support, verify_cover, VerificationReport};
use hypercover::{Cover, Precision};

const EXIT_OK: i32 = 0;
const EXIT_FALSE: i32 = 1;
const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(name = "hypercover", version, about = "Hyperplane covers of the hypercube, in exact arithmetic")]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for exhaustive scans (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check the essential-cover axioms, skewness, and row support.
    Verify {
        /// Cover file, or `-` for stdin.
        file: String,
    },
    /// Emit one of the built-in covers.
    Construct {
        #[arg(value_enum)]
        kind: ConstructKind,
        #[arg(long)]
        n: usize,
    },
    /// Greedily remove redundant planes; prints the minimal sub-cover.
    Essentialize { file: String },
    /// Exact hit probability of a signed sum against its bound.
    Anticonc {
        /// Comma-separated rational coefficients, e.g. `1,10,1/2`.
        #[arg(long)]
        v: String,
        /// Comma-separated biases in [1/3, 2/3], one per coefficient.
        #[arg(long)]
        p: String,
        /// Target value.
        #[arg(long)]
        alpha: String,
    },
    /// Solve a Bang instance file: signs and residuals.
    Bang { file: String },
    /// Decompose a coefficient matrix and audit the result.
    Decompose { file: String },
    /// Run the uncovered-vertex pipeline on a cover.
    Findvertex {
        file: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = hypercover::find_vertex::DEFAULT_MAX_TRIES)]
        tries: u32,
    },
    /// Print the essential-cover and skew-cover lower-bound values.
    Bound {
        #[arg(long)]
        n: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructKind {
    Skew,
    Trivial,
    Padded,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("hypercover: cannot configure {threads} threads: {e}");
            std::process::exit(EXIT_USAGE);
        }
    }
    let precision = match std::env::var("HYPERCOVER_PRECISION") {
        Ok(s) => match s.parse::<u32>() {
            Ok(bits) if bits >= 16 => Precision(bits),
            _ => {
                eprintln!("hypercover: HYPERCOVER_PRECISION must be an integer ≥ 16");
                std::process::exit(EXIT_USAGE);
            }
        },
        Err(_) => Precision::DEFAULT,
    };

    let code = match run(cli, precision) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hypercover: {e}");
            EXIT_USAGE
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli, prec: Precision) -> Result<i32, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Verify { file } => cmd_verify(&file, cli.format),
        Command::Construct { kind, n } => cmd_construct(kind, n),
        Command::Essentialize { file } => cmd_essentialize(&file),
        Command::Anticonc { v, p, alpha } => cmd_anticonc(&v, &p, &alpha, cli.format),
        Command::Bang { file } => cmd_bang(&file, cli.format),
        Command::Decompose { file } => cmd_decompose(&file, cli.format, prec),
        Command::Findvertex { file, seed, tries } => {
            cmd_findvertex(&file, seed, tries, cli.format, prec)
        }
        Command::Bound { n } => cmd_bound(n, cli.format, prec),
    }
}

fn read_input(path: &str) -> Result<String, Box<dyn std::error::Error>> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn vertex_json(v: &Vertex) -> Value {
    Value::Array(
        v.signs()
            .into_iter()
            .map(|s| Value::Number(s.into()))
            .collect(),
    )
}

fn scalar_json(s: &Scalar) -> Value {
    Value::String(format_scalar(s))
}

// ---------------------------------------------------------------------------
// verify

fn report_json(report: &VerificationReport, row_support: Option<&hypercover::verify::RowSupportObservation>) -> Value {
    json!({
        "n": report.dim,
        "k": report.planes,
        "e1": report.e1_ok,
        "e1_missed": report.e1_missed.as_ref().map(vertex_json),
        "e2": report.e2_ok,
        "e2_uncovered_vars": report.e2_uncovered_vars,
        "e3": report.e3_ok,
        "e3_witnesses": report.e3_witnesses.iter()
            .map(|w| w.as_ref().map(vertex_json))
            .collect::<Vec<_>>(),
        "skew": report.is_skew,
        "essential": report.is_essential(),
        "row_support": row_support.map(|o| json!({
            "ok": o.ok,
            "max_support": o.max_support,
            "bound": o.bound,
        })),
    })
}

fn cmd_verify(file: &str, format: Format) -> Result<i32, Box<dyn std::error::Error>> {
    let cover = Cover::parse(&read_input(file)?)?;
    let report = verify_cover(&cover)?;
    let row_support = if report.is_essential() {
        Some(observe_row_support(&cover, &report)?)
    } else {
        None
    };
    match format {
        Format::Text => {
            println!("{report}");
            if let Some(obs) = &row_support {
                println!("row_support_max: {}", obs.max_support);
                println!("row_support_bound: {}", obs.bound);
                println!("row_support_ok: {}", obs.ok);
            }
        }
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report_json(&report, row_support.as_ref()))?
        ),
    }
    Ok(if report.is_essential() { EXIT_OK } else { EXIT_FALSE })
}

// ---------------------------------------------------------------------------
// construct / essentialize

fn cmd_construct(kind: ConstructKind, n: usize) -> Result<i32, Box<dyn std::error::Error>> {
    let cover = match kind {
        ConstructKind::Skew => skew_cover(n)?,
        ConstructKind::Trivial => trivial_cover(n)?,
        ConstructKind::Padded => padded_nonessential(n)?,
    };
    print!("{}", cover.to_text());
    Ok(EXIT_OK)
}

fn cmd_essentialize(file: &str) -> Result<i32, Box<dyn std::error::Error>> {
    let cover = Cover::parse(&read_input(file)?)?;
    match hypercover::verify::essentialize(&cover) {
        Ok(minimal) => {
            print!("{}", minimal.to_text());
            Ok(EXIT_OK)
        }
        Err(e @ hypercover::Error::NotCovering { .. }) => {
            eprintln!("hypercover: {e}");
            Ok(EXIT_FALSE)
        }
        Err(e) => Err(e.into()),
    }
}

// ---------------------------------------------------------------------------
// anticonc

fn parse_scalar_list(s: &str) -> Result<Vec<Scalar>, Box<dyn std::error::Error>> {
    s.split(',')
        .map(|tok| parse_scalar(tok.trim()).map_err(|e| format!("bad value `{tok}`: {e}").into()))
        .collect()
}

fn cmd_anticonc(
    v: &str,
    p: &str,
    alpha: &str,
    format: Format,
) -> Result<i32, Box<dyn std::error::Error>> {
    let v = parse_scalar_list(v)?;
    let p = BiasVector::new(parse_scalar_list(p)?)?;
    let alpha = parse_scalar(alpha).map_err(|e| format!("bad alpha: {e}"))?;
    let check = check_hit_probability_bound(&v, &p, &alpha)?;
    match format {
        Format::Text => {
            println!("probability: {}", format_scalar(&check.probability));
            println!("magnitudes: {}", check.magnitudes);
            println!("bound: {}", format_scalar(&check.bound));
            println!("ok: {}", check.ok);
        }
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "probability": scalar_json(&check.probability),
                "magnitudes": check.magnitudes,
                "bound": scalar_json(&check.bound),
                "ok": check.ok,
            }))?
        ),
    }
    Ok(if check.ok { EXIT_OK } else { EXIT_FALSE })
}

// ---------------------------------------------------------------------------
// bang

fn cmd_bang(file: &str, format: Format) -> Result<i32, Box<dyn std::error::Error>> {
    let inst = BangInstance::parse(&read_input(file)?)?;
    let cert = solve_bang(&inst)?;
    match format {
        Format::Text => {
            let eps: Vec<String> = cert.epsilon.iter().map(|e| e.to_string()).collect();
            println!("epsilon: {}", eps.join(" "));
            let res: Vec<String> = cert.residuals.iter().map(format_scalar).collect();
            println!("residuals: {}", res.join(" "));
            println!("steps: {}", cert.steps);
        }
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "epsilon": cert.epsilon,
                "residuals": cert.residuals.iter().map(scalar_json).collect::<Vec<_>>(),
                "steps": cert.steps,
            }))?
        ),
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// decompose

fn decomposition_json(d: &Decomposition) -> Value {
    json!({
        "k1": d.k1,
        "k2": d.k2,
        "k3": d.k3,
        "n1": d.n1,
        "n2": d.n2,
        "row_norm_sq": d.row_norm_sq.iter()
            .map(|(i, q)| (i.to_string(), scalar_json(q)))
            .collect::<serde_json::Map<_, _>>(),
        "audit": {
            "inactive_threshold": d.audit.inactive_threshold,
            "iterations": d.audit.iterations,
            "guard_flags": d.audit.guard_flags,
            "activations": d.audit.activations.iter().map(|a| json!({
                "row": a.row,
                "iteration": a.iteration,
                "full_support": a.full_support,
            })).collect::<Vec<_>>(),
            "evictions": d.audit.evictions.iter().map(|e| json!({
                "iteration": e.iteration,
                "column": e.column,
                "contributors": e.contributors,
                "certified_at_bits": e.certified_at_bits,
                "within_guard_band": e.within_guard_band,
            })).collect::<Vec<_>>(),
        },
    })
}

fn print_decomposition_text(d: &Decomposition) {
    let list = |v: &[usize]| {
        if v.is_empty() {
            "-".to_string()
        } else {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
    };
    println!(
        "blocks: K1×N1 = {}×{} (zero), K2×N1 = {}×{} (rescalable), K3×N1 = {}×{} (many magnitudes), N2 = {}",
        d.k1.len(), d.n1.len(), d.k2.len(), d.n1.len(), d.k3.len(), d.n1.len(), d.n2.len()
    );
    println!("k1: {}", list(&d.k1));
    println!("k2: {}", list(&d.k2));
    println!("k3: {}", list(&d.k3));
    println!("n1: {}", list(&d.n1));
    println!("n2: {}", list(&d.n2));
    for (i, q) in &d.row_norm_sq {
        println!("row_norm_sq[{i}]: {}", format_scalar(q));
    }
    println!("inactive_threshold: {}", d.audit.inactive_threshold);
    println!("iterations: {}", d.audit.iterations);
    println!("guard_flags: {}", d.audit.guard_flags);
    for e in &d.audit.evictions {
        let contributors: Vec<String> = e
            .contributors
            .iter()
            .map(|(i, m, c)| format!("row {i} (magnitude {m}, count {c})"))
            .collect();
        println!(
            "eviction[{}]: column {} via {} (certified at {} bits{})",
            e.iteration,
            e.column,
            if contributors.is_empty() {
                "-".to_string()
            } else {
                contributors.join(" + ")
            },
            e.certified_at_bits,
            if e.within_guard_band { ", guard band" } else { "" }
        );
    }
}

fn cmd_decompose(
    file: &str,
    format: Format,
    prec: Precision,
) -> Result<i32, Box<dyn std::error::Error>> {
    let matrix = Matrix::parse(&read_input(file)?)?;
    let d = decompose(&matrix, prec)?;
    let report = check_decomposition(&matrix, &d, prec)?;
    let accounting = accounting_bound(&matrix, &d, prec)?;
    match format {
        Format::Text => {
            print_decomposition_text(&d);
            println!("condition_zero_block: {}", report.zero_block_ok);
            println!("condition_column_norms: {}", report.column_norm_ok);
            println!("condition_magnitudes: {}", report.magnitude_ok);
            println!("n1_nonempty: {}", report.n1_nonempty);
            println!("all_conditions: {}", report.all_ok());
            println!(
                "evictions: {} (bound ≈ {}, {})",
                accounting.evictions,
                format_sig_digits(&accounting.bound, 6),
                if accounting.bound_holds { "holds" } else { "violated" }
            );
            println!("support_hypothesis: {}", accounting.support_hypothesis);
        }
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "decomposition": decomposition_json(&d),
                "conditions": {
                    "zero_block": report.zero_block_ok,
                    "column_norms": report.column_norm_ok,
                    "magnitudes": report.magnitude_ok,
                    "n1_nonempty": report.n1_nonempty,
                    "all": report.all_ok(),
                },
                "accounting": {
                    "evictions": accounting.evictions,
                    "bound": format_sig_digits(&accounting.bound, 6),
                    "bound_holds": accounting.bound_holds,
                    "support_hypothesis": accounting.support_hypothesis,
                },
            }))?
        ),
    }
    Ok(if report.all_ok() { EXIT_OK } else { EXIT_FALSE })
}

// ---------------------------------------------------------------------------
// findvertex

fn cmd_findvertex(
    file: &str,
    seed: u64,
    tries: u32,
    format: Format,
    prec: Precision,
) -> Result<i32, Box<dyn std::error::Error>> {
    let cover = Cover::parse(&read_input(file)?)?;
    let report = run_pipeline(&cover, seed, tries, prec)?;

    let (code, outcome_json) = match &report.outcome {
        PipelineOutcome::NoPlan { stage, reason } => {
            if format == Format::Text {
                print_decomposition_text(&report.decomposition);
                println!("outcome: no-plan");
                println!("stage: {stage}");
                println!("reason: {reason}");
            }
            (
                EXIT_FALSE,
                json!({ "outcome": "no-plan", "stage": stage, "reason": reason }),
            )
        }
        PipelineOutcome::Planned {
            fixed,
            plan,
            accounting,
            sample,
        } => {
            if format == Format::Text {
                print_decomposition_text(&report.decomposition);
                println!("outcome: planned");
                println!("witness_plane: {}", fixed.source_plane);
                println!("witness: {}", fixed.witness);
                let wt: Vec<String> = plan
                    .n2
                    .iter()
                    .zip(&plan.w_tilde)
                    .map(|(j, s)| format!("x{j}={s:+}"))
                    .collect();
                println!("w_tilde: {}", if wt.is_empty() { "-".into() } else { wt.join(" ") });
                for pa in &accounting.per_plane {
                    println!(
                        "plane[{}]: block {:?}, exact {}, magnitudes {}, generic bound {}{}",
                        pa.plane,
                        pa.block,
                        format_scalar(&pa.exact),
                        pa.magnitudes,
                        format_scalar(&pa.generic_bound),
                        match &pa.strong_bound {
                            Some(b) => format!(", strong bound {}", format_scalar(b)),
                            None => String::new(),
                        }
                    );
                }
                println!("union_total: {}", format_scalar(&accounting.union_total));
                println!("union_within_half: {}", accounting.union_within_half);
                println!(
                    "miss_lower_bound: {}",
                    format_scalar(&accounting.miss_lower_bound)
                );
                match &sample.vertex {
                    Some(v) => {
                        println!("vertex: {v}");
                        println!("tries_used: {}", sample.tries_used);
                    }
                    None => println!("vertex: none in {} tries", sample.tries_used),
                }
            }
            let code = if sample.vertex.is_some() { EXIT_OK } else { EXIT_FALSE };
            (
                code,
                json!({
                    "outcome": "planned",
                    "witness_plane": fixed.source_plane,
                    "witness": vertex_json(&fixed.witness),
                    "w_tilde": plan.w_tilde,
                    "n1": plan.n1,
                    "n2": plan.n2,
                    "y": plan.y.iter().map(scalar_json).collect::<Vec<_>>(),
                    "p": plan.p.entries().iter().map(scalar_json).collect::<Vec<_>>(),
                    "per_plane": accounting.per_plane.iter().map(|pa| json!({
                        "plane": pa.plane,
                        "block": format!("{:?}", pa.block),
                        "target": scalar_json(&pa.target),
                        "exact": scalar_json(&pa.exact),
                        "magnitudes": pa.magnitudes,
                        "generic_bound": scalar_json(&pa.generic_bound),
                        "generic_ok": pa.generic_ok,
                        "strong_bound": pa.strong_bound.as_ref().map(scalar_json),
                        "strong_ok": pa.strong_ok,
                    })).collect::<Vec<_>>(),
                    "union_total": scalar_json(&accounting.union_total),
                    "union_within_half": accounting.union_within_half,
                    "miss_lower_bound": scalar_json(&accounting.miss_lower_bound),
                    "vertex": sample.vertex.as_ref().map(vertex_json),
                    "tries_used": sample.tries_used,
                }),
            )
        }
    };
    if format == Format::Json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "decomposition": decomposition_json(&report.decomposition),
                "conditions_all": report.check.all_ok(),
                "pipeline": outcome_json,
            }))?
        );
    }
    Ok(code)
}

// ---------------------------------------------------------------------------
// bound

fn cmd_bound(n: u64, format: Format, prec: Precision) -> Result<i32, Box<dyn std::error::Error>> {
    let essential = essential_cover_bound(n, prec)?;
    let skew = skew_cover_bound(n);
    match format {
        Format::Text => {
            println!("essential_cover_bound: {}", format_sig_digits(&essential, 4));
            println!("skew_cover_bound: {}", format_scalar(&skew));
        }
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "n": n,
                "essential_cover_bound": format_sig_digits(&essential, 4),
                "skew_cover_bound": scalar_json(&skew),
            }))?
        ),
    }
    Ok(EXIT_OK)
}
