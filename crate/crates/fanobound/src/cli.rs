//! Command-line front end.
//!
//! Exit statuses: 0 success (vacuous bounds included), 1 a bound or the
//! fuzz run failed its exact check, 2 usage, file or parse errors, 3 content
//! that parses but fails validation (row sums, loss range, transcript cap).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fanobound_core::bounds::{
    cvar_lower_bound, cvar_lower_bound_kl_pinsker, default_candidates, hinge_lower_bound,
    one_sided_transform_bound, quantile_fano_bound, tail_to_expectation,
    two_sided_transform_bound, BoundSettings, Candidate,
};
use fanobound_core::{compile_bandit, BoundReport, DivergenceSpec, FiniteIsdm, TransformSpec};

use crate::fuzz::{fuzz_soundness, mc_consistency, FuzzConfig};
use crate::io::{self, ConfigFile, LoadError};
use crate::render::{render, Extras, OutputFormat};

pub const SEED_ENV: &str = "FANOBOUND_SEED";

#[derive(Debug, Parser)]
#[command(name = "fanobound", version, about = "Certified lower bounds on loss functionals of finite interactive decision problems")]
pub struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Mean-axis tolerance for ball inversion and bisection [default: 1e-10].
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Subdivisions per gap between loss atoms in the CVaR grid [default: 16].
    #[arg(long = "t-refine", global = true)]
    pub t_refine: Option<usize>,
    /// JSON settings file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for randomized runs.
    #[arg(long, global = true, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a bound on an instance file.
    Bound {
        #[arg(value_enum)]
        kind: BoundKind,
        instance: PathBuf,
        #[command(flatten)]
        params: BoundParams,
    },
    /// Compile a bandit spec and compute a bound on the transcript instance.
    Bandit {
        spec: PathBuf,
        #[arg(value_enum)]
        kind: BoundKind,
        #[command(flatten)]
        params: BoundParams,
    },
    /// Fuzz every bound against the exact oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    TwoSided,
    OneSided,
    Quantile,
    Hinge,
    Cvar,
    CvarPinsker,
}

#[derive(Debug, Clone, Args)]
pub struct BoundParams {
    /// CVaR level in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Loss level for the quantile bound.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Hinge threshold.
    #[arg(long = "t", allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Transform as `kind:key=value,...`, e.g. `hinge:t=1,lmax=4` (lmax
    /// defaults to the instance's).
    #[arg(long)]
    pub transform: Option<String>,
    /// Divergence: kl, tv, chi2 or hellinger.
    #[arg(long = "div", default_value = "kl")]
    pub div: String,
    /// Reference law: mixture, model:<i>, candidates or file:<path>.
    /// Repeatable for quantile and one-sided.
    #[arg(long = "ref")]
    pub refs: Vec<String>,
    /// With `quantile`, report the implied lower bound on E[L] instead.
    #[arg(long)]
    pub expectation: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Number of random instances [default: 500].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Monte Carlo samples per consistency pair [default: 100000].
    #[arg(long = "mc-samples")]
    pub mc_samples: Option<usize>,
    /// Instance/transform pairs for the Monte Carlo consistency check.
    #[arg(long = "mc-pairs", default_value_t = 20)]
    pub mc_pairs: usize,
    #[arg(long = "oracle-shift", hide = true, default_value_t = 0.0)]
    pub oracle_shift: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{0}")]
    Invalid(#[from] fanobound_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Load(e) => e.exit_code(),
            Self::Invalid(_) => 3,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Resolved numeric settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub format: OutputFormat,
    pub settings: BoundSettings,
    pub seed: u64,
    pub mc_samples: usize,
    pub iterations: usize,
    pub candidate_refs: Option<Vec<String>>,
}

fn resolve(cli: &Cli) -> Result<Resolved, CliError> {
    let file = match &cli.config {
        Some(p) => io::read_json::<ConfigFile>(p)?,
        None => ConfigFile::default(),
    };
    let format = match (cli.format, &file.output_format) {
        (Some(f), _) => f,
        (None, Some(s)) => s.parse().map_err(|e| usage(format!("config output_format: {e}")))?,
        (None, None) => OutputFormat::Json,
    };
    let tolerance = cli.tol.or(file.tolerance).unwrap_or(fanobound_core::DEFAULT_TOLERANCE);
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(usage(format!("tolerance must be positive, got {tolerance}")));
    }
    let t_refine = cli.t_refine.or(file.t_refine).unwrap_or(16);
    let mc_samples = file.mc_samples.unwrap_or(100_000);
    if t_refine == 0 || mc_samples == 0 {
        return Err(usage("t_refine and mc_samples must be positive"));
    }
    Ok(Resolved {
        format,
        settings: BoundSettings {
            tolerance,
            t_refine,
            ..BoundSettings::default()
        },
        seed: cli.seed.or(file.seed).unwrap_or(crate::DEFAULT_SEED),
        mc_samples,
        iterations: file.iterations.unwrap_or(500),
        candidate_refs: file.candidate_refs,
    })
}

fn resolve_refs(inst: &FiniteIsdm, refs: &[String]) -> Result<Vec<Candidate>, CliError> {
    let mut out = Vec::new();
    for r in refs {
        if r == "mixture" {
            out.push(Candidate::mixture(inst));
        } else if r == "candidates" {
            out.extend(default_candidates(inst));
        } else if let Some(i) = r.strip_prefix("model:") {
            let m: usize = i.parse().map_err(|_| usage(format!("--ref {r}: bad model index")))?;
            if m >= inst.n_models() {
                return Err(usage(format!("--ref {r}: instance has {} models", inst.n_models())));
            }
            out.push(Candidate::model(inst, m)?);
        } else if let Some(p) = r.strip_prefix("file:") {
            let (label, law) = io::load_reference(Path::new(p))?;
            if law.len() != inst.n_outcomes() {
                return Err(CliError::Invalid(fanobound_core::Error::LengthMismatch {
                    what: "reference law vs outcomes",
                    expected: inst.n_outcomes(),
                    got: law.len(),
                }));
            }
            out.push(Candidate::explicit(&label, law));
        } else {
            return Err(usage(format!(
                "--ref {r}: expected mixture, model:<i>, candidates or file:<path>"
            )));
        }
    }
    Ok(out)
}

fn parse_transform(text: &str, l_max: f64) -> Result<TransformSpec, CliError> {
    let text = if text.trim_start().starts_with("hinge") && !text.contains("lmax") && !text.contains("l_max") {
        format!("{text},lmax={l_max}")
    } else {
        text.to_string()
    };
    text.parse().map_err(|e: fanobound_core::Error| usage(format!("--transform: {e}")))
}

fn need<T: Copy>(value: Option<T>, flag: &str, kind: BoundKind) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("{kind:?} bound needs --{flag}")))
}

/// Runs one bound computation.
pub fn compute_bound(
    inst: &FiniteIsdm,
    kind: BoundKind,
    params: &BoundParams,
    resolved: &Resolved,
) -> Result<BoundReport, CliError> {
    let spec: DivergenceSpec = params
        .div
        .parse()
        .map_err(|e: fanobound_core::Error| usage(format!("--div: {e}")))?;
    let s = &resolved.settings;
    let multi = matches!(kind, BoundKind::Quantile | BoundKind::OneSided);
    let refs: Vec<String> = if !params.refs.is_empty() {
        params.refs.clone()
    } else if let Some(r) = &resolved.candidate_refs {
        r.clone()
    } else if multi {
        vec!["candidates".into()]
    } else {
        vec!["mixture".into()]
    };
    let candidates = resolve_refs(inst, &refs)?;
    let single = || -> Result<&Candidate, CliError> {
        match candidates.as_slice() {
            [one] => Ok(one),
            _ => Err(usage(format!("{kind:?} bound takes exactly one reference"))),
        }
    };
    let transform = || -> Result<TransformSpec, CliError> {
        let text = params
            .transform
            .as_deref()
            .ok_or_else(|| usage(format!("{kind:?} bound needs --transform")))?;
        parse_transform(text, inst.l_max())
    };
    let alpha = || -> Result<f64, CliError> {
        let a = need(params.alpha, "alpha", kind)?;
        if a > 0.0 && a < 1.0 {
            Ok(a)
        } else {
            Err(usage(format!("--alpha must lie in (0, 1), got {a}")))
        }
    };
    let report = match kind {
        BoundKind::TwoSided => two_sided_transform_bound(inst, &transform()?, &spec, single()?, s)?,
        BoundKind::OneSided => one_sided_transform_bound(inst, &transform()?, &spec, &candidates, s)?,
        BoundKind::Quantile => {
            let delta = need(params.delta, "delta", kind)?;
            if !(delta.is_finite() && delta > 0.0) {
                return Err(usage(format!("--delta must be positive, got {delta}")));
            }
            let q = quantile_fano_bound(inst, delta, &spec, &candidates, s)?;
            if params.expectation {
                tail_to_expectation(&q, delta)?
            } else {
                q
            }
        }
        BoundKind::Hinge => {
            let t = need(params.t, "t", kind)?;
            if !t.is_finite() {
                return Err(usage("--t must be finite"));
            }
            hinge_lower_bound(inst, t, &spec, single()?, s)?
        }
        BoundKind::Cvar => cvar_lower_bound(inst, alpha()?, &spec, single()?, s)?,
        BoundKind::CvarPinsker => cvar_lower_bound_kl_pinsker(inst, alpha()?, s)?,
    };
    Ok(report)
}

fn bound_status(report: &BoundReport) -> i32 {
    if matches!(report.verified, fanobound_core::Verdict::ExactFailsBy(_)) {
        1
    } else {
        0
    }
}

fn run_verify(args: &VerifyArgs, resolved: &Resolved, out: &mut dyn Write) -> Result<i32, CliError> {
    let config = FuzzConfig {
        iterations: args.iterations.unwrap_or(resolved.iterations),
        master_seed: resolved.seed,
        settings: resolved.settings,
        oracle_shift: args.oracle_shift,
        ..FuzzConfig::default()
    };
    let summary = fuzz_soundness(&config);
    let samples = args.mc_samples.unwrap_or(resolved.mc_samples);
    if samples == 0 {
        return Err(usage("--mc-samples must be positive"));
    }
    let pairs = if config.iterations == 0 { 0 } else { args.mc_pairs };
    let mc = mc_consistency(&config, pairs, samples, resolved.seed)?;
    let within = mc.iter().filter(|c| c.z <= 4.0).count();
    let text = match resolved.format {
        OutputFormat::Json => {
            let mut v = serde_json::to_value(&summary).expect("summary serializes");
            if !mc.is_empty() {
                v["mc_consistency"] = serde_json::json!({
                    "samples": samples,
                    "pairs": mc.len(),
                    "within_4_std_errors": within,
                    "checks": mc,
                });
            }
            serde_json::to_string_pretty(&v).expect("json value") + "\n"
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["check", "checks", "passes"]).expect("in-memory write");
            for (k, t) in &summary.per_check {
                w.write_record([k.clone(), t.checks.to_string(), t.passes.to_string()])
                    .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        OutputFormat::Table => {
            let mut s = format!(
                "instances {}  checks {}  violations {}\n",
                summary.iterations, summary.checks, summary.violations
            );
            for (k, t) in &summary.per_check {
                s += &format!("{k:<24} {:>8} / {:<8}\n", t.passes, t.checks);
            }
            if !mc.is_empty() {
                s += &format!("monte carlo within 4 s.e.: {within} / {}\n", mc.len());
            }
            for f in &summary.failures {
                s += &format!("FAIL {} [{}] seed {}: {}\n", f.check, f.divergence, f.seed, f.detail);
            }
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| usage(e.to_string()))?;
    Ok(if summary.passed() { 0 } else { 1 })
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let resolved = resolve(cli)?;
    let (report, extras) = match &cli.command {
        Command::Verify(args) => return run_verify(args, &resolved, out),
        Command::Bound { kind, instance, params } => {
            let inst = io::load_instance(instance)?;
            (compute_bound(&inst, *kind, params, &resolved)?, Extras::new())
        }
        Command::Bandit { spec, kind, params } => {
            let inst = compile_bandit(&io::load_bandit(spec)?)?;
            let mut extras = Extras::new();
            extras.insert("transcripts".into(), inst.n_outcomes() as f64);
            extras.insert("models".into(), inst.n_models() as f64);
            extras.insert("l_max".into(), inst.l_max());
            extras.insert("mutual_information".into(), inst.mutual_information());
            (compute_bound(&inst, *kind, params, &resolved)?, extras)
        }
    };
    out.write_all(render(&report, &extras, resolved.format).as_bytes())
        .map_err(|e| usage(e.to_string()))?;
    Ok(bound_status(&report))
}

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
