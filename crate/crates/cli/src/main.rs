//! `quasilhd`: generate and evaluate lattice-based space-filling designs.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 search exhaustion,
//! 3 self-check failure.

mod csvio;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::builder::TypedValueParser;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use quasilhd::dpmpd::{construct, rate_study, ConstructConfig, RateStudyConfig, RotationPolicy, DEFAULT_W, RATE_STUDY_W};
use quasilhd::metrics::{metrics_report, score_serde, DEFAULT_FILL_SAMPLES};
use quasilhd::oracles::{selfcheck, SelfcheckRanges};
use quasilhd::rotations::validate_spec;
use quasilhd::{BaseLattice, DesignMeta, Error, MagicRotationSpec};

#[derive(Parser)]
#[command(name = "quasilhd", version, about = "Lattice-based space-filling designs with well-separated projections")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lattice {
    /// Densest packing.
    Dp,
    /// Thinnest covering.
    Tc,
    /// Integer lattice.
    Int,
    /// Checkerboard lattice between 2Z^p and Z^p.
    Interleaved,
}

impl From<Lattice> for BaseLattice {
    fn from(l: Lattice) -> Self {
        match l {
            Lattice::Dp => BaseLattice::DensestPacking,
            Lattice::Tc => BaseLattice::ThinnestCovering,
            Lattice::Int => BaseLattice::Integer,
            Lattice::Interleaved => BaseLattice::Interleaved,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    /// Magic rotations (random Givens for p = 5, 7).
    Magic,
    /// Random Givens rotations.
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Search for the best of `w` rotated lattice designs and write it as CSV.
    Generate {
        /// Dimension, 2 to 8.
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=8))]
        p: u8,
        /// Number of design points (at least 2).
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        /// Number of candidate designs.
        #[arg(long, default_value_t = DEFAULT_W as u64, value_parser = clap::value_parser!(u64).range(1..))]
        w: u64,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Base lattice.
        #[arg(long, value_enum, default_value = "dp")]
        lattice: Lattice,
        /// `magic`, `random`, or the path of a JSON rotation spec.
        #[arg(long, default_value = "magic")]
        rotation: String,
        /// Design CSV path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metadata JSON path.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Print separation, fill and score metrics of a design CSV as JSON.
    Evaluate {
        /// Design CSV path.
        #[arg(long = "in")]
        input: PathBuf,
        /// Query points for the fill-distance estimate.
        #[arg(long, default_value_t = DEFAULT_FILL_SAMPLES, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
        fill_samples: usize,
        /// Metadata JSON written by `generate`, echoed as provenance.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Measure how projected separation and fill scale with n.
    RateStudy {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=8))]
        p: u8,
        #[arg(long, value_enum, default_value = "dp")]
        lattice: Lattice,
        #[arg(long, value_enum, default_value = "magic")]
        rotation_policy: Policy,
        /// Comma-separated, strictly increasing sizes (at least three).
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Candidate designs per search.
        #[arg(long, default_value_t = RATE_STUDY_W, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
        w: usize,
        #[arg(long, default_value_t = DEFAULT_FILL_SAMPLES, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
        fill_samples: usize,
        /// Long-format CSV path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Slope summary JSON path (default: stdout when --out is given, otherwise not written).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the exact-arithmetic and brute-force oracle suites.
    Selfcheck {
        /// Ranges such as `a=4,u=5,q=50`.
        #[arg(long)]
        ranges: Option<String>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Check every side condition of a rotation spec and print the report.
    ValidateRotation {
        /// JSON rotation spec.
        #[arg(long)]
        spec_file: PathBuf,
        #[arg(long, value_enum, default_value = "dp")]
        base: Lattice,
    },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<Error>() {
            Some(Error::SearchExhausted | Error::DeltaExhausted { .. }) => 2,
            _ => 1,
        };
        Failure { code, error }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Generate { p, n, w, seed, lattice, rotation, out, meta } => {
            cmd_generate(p as usize, n as usize, w as usize, seed, lattice.into(), &rotation, out, meta)
        }
        Command::Evaluate { input, fill_samples, meta } => cmd_evaluate(&input, fill_samples, meta.as_deref()),
        Command::RateStudy { p, lattice, rotation_policy, n_list, reps, seed, w, fill_samples, out, summary } => {
            let mut cfg = RateStudyConfig::new(
                p as usize,
                match rotation_policy {
                    Policy::Magic => RotationPolicy::Magic,
                    Policy::Random => RotationPolicy::Random,
                },
                n_list,
                reps,
                seed,
            );
            cfg.base = lattice.into();
            cfg.w = w;
            cfg.fill_samples = fill_samples;
            cmd_rate_study(&cfg, out, summary)
        }
        Command::Selfcheck { ranges, inject_fault } => cmd_selfcheck(ranges.as_deref(), inject_fault),
        Command::ValidateRotation { spec_file, base } => cmd_validate_rotation(&spec_file, base.into()),
    }
}

fn read_spec(path: &Path) -> anyhow::Result<MagicRotationSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed rotation spec in {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

#[derive(Serialize)]
struct GenerateMeta {
    #[serde(flatten)]
    design: DesignMeta,
    lattice: String,
    policy: String,
    w: usize,
    master_seed: u64,
    #[serde(with = "score_serde")]
    score: f64,
    failed_trials: usize,
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    p: usize,
    n: usize,
    w: usize,
    seed: u64,
    base: BaseLattice,
    rotation: &str,
    out: Option<PathBuf>,
    meta: Option<PathBuf>,
) -> CmdResult {
    let policy = match rotation {
        "magic" => RotationPolicy::Magic,
        "random" => RotationPolicy::Random,
        path => {
            let spec = read_spec(Path::new(path))?;
            if spec.dimension() != p {
                return Err(anyhow!("rotation spec {path} is for p = {}, but --p is {p}", spec.dimension()).into());
            }
            let report = validate_spec(&spec, base);
            if !report.is_valid() {
                return Err(anyhow!("rotation spec {path} fails on {base}: {}", report.failures().join("; ")).into());
            }
            RotationPolicy::Fixed(spec)
        }
    };
    let policy_name = match &policy {
        RotationPolicy::Magic => "magic".to_string(),
        RotationPolicy::Random => "random".to_string(),
        RotationPolicy::Fixed(_) => format!("spec:{rotation}"),
    };
    let mut cfg = ConstructConfig::new(p, n, w, seed);
    cfg.base = base;
    cfg.policy = policy;
    let report = construct(&cfg)?;
    write_or_print(out.as_deref(), &csvio::write_design(&report.best.points))?;
    if let Some(path) = meta {
        let record = GenerateMeta {
            design: report.best.meta(),
            lattice: base.short_name().to_string(),
            policy: policy_name,
            w,
            master_seed: seed,
            score: report.best_score,
            failed_trials: report.trials.iter().filter(|t| t.error.is_some()).count(),
        };
        write_or_print(Some(&path), &to_json(&record)?)?;
    }
    Ok(())
}

fn cmd_evaluate(input: &Path, fill_samples: usize, meta: Option<&Path>) -> CmdResult {
    let text = fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let points = csvio::read_design(&text).with_context(|| format!("invalid design file {}", input.display()))?;
    if points.n() < 2 {
        return Err(anyhow!("design must contain at least two points").into());
    }
    let metrics = metrics_report(&points, fill_samples)?;
    let mut value = serde_json::to_value(&metrics).map_err(anyhow::Error::from)?;
    let provenance = match meta {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let m: Value = serde_json::from_str(&text).with_context(|| format!("malformed metadata {}", path.display()))?;
            json!({
                "p": m.get("p").cloned().unwrap_or(Value::Null),
                "n": m.get("n").cloned().unwrap_or(Value::Null),
                "seed": m.get("master_seed").or_else(|| m.get("seed")).cloned().unwrap_or(Value::Null),
                "family": m.get("family").cloned().unwrap_or(Value::Null),
                "spec": m.get("spec").cloned().unwrap_or(Value::Null),
            })
        }
        None => json!({ "p": metrics.p, "n": metrics.n, "seed": null, "family": null, "spec": null }),
    };
    value["provenance"] = provenance;
    print!("{}", to_json(&value)?);
    Ok(())
}

fn cmd_rate_study(cfg: &RateStudyConfig, out: Option<PathBuf>, summary: Option<PathBuf>) -> CmdResult {
    if cfg.n_list.len() < 3 {
        return Err(anyhow!("--n-list needs at least three sizes, got {}", cfg.n_list.len()).into());
    }
    let study = rate_study(cfg)?;
    let summary_json = to_json(&json!({
        "family": study.family,
        "policy": study.policy,
        "p": study.p,
        "n_list": study.n_list,
        "reps": study.reps,
        "w": study.w,
        "master_seed": study.master_seed,
        "slopes": study.slopes,
    }))?;
    write_or_print(out.as_deref(), &study.to_long_csv())?;
    match (summary, &out) {
        (Some(path), _) => write_or_print(Some(&path), &summary_json)?,
        (None, Some(_)) => print!("{summary_json}"),
        (None, None) => {}
    }
    Ok(())
}

fn cmd_selfcheck(ranges: Option<&str>, inject_fault: bool) -> CmdResult {
    let ranges: SelfcheckRanges = match ranges {
        Some(r) => r.parse()?,
        None => SelfcheckRanges::default(),
    };
    let results = selfcheck(&ranges, inject_fault);
    print!("{}", to_json(&results)?);
    if results.iter().all(|r| r.pass) {
        Ok(())
    } else {
        let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
        Err(Failure {
            code: 3,
            error: anyhow!("self-check failed: {}", failed.join(", ")),
        })
    }
}

fn cmd_validate_rotation(spec_file: &Path, base: BaseLattice) -> CmdResult {
    let spec = read_spec(spec_file)?;
    let report = validate_spec(&spec, base);
    print!(
        "{}",
        to_json(&json!({
            "variant": spec.variant_name(),
            "p": spec.dimension(),
            "base": base.short_name(),
            "valid": report.is_valid(),
            "conditions": report.conditions,
        }))?
    );
    Ok(())
}
