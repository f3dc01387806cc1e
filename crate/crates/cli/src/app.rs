//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification mismatch or guarantee violation,
//! 2 usage error, 3 I/O or file-format error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use patch_completion::corruption::{guarantee_budget, RNG_NAME};
use patch_completion::shape::centered_anchor;
use patch_completion::{
    corrupt, final_mask, generate_shape_mask, guarantee_trial, oracle_complete_multi, BinaryMask, CorruptionKind,
    CorruptionModel, GammaSchedule, ShapeCompleter, ShapeKind, SizeSet,
};
use serde::Serialize;
use thiserror::Error;

use crate::bench::{run_bench, BenchConfig};
use crate::pbm::{self, PbmError, PbmFormat};

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const REPORT_SCHEMA_VERSION: u32 = 1;
const CONVENTION: &str = "bit 1 = adversarial patch pixel (PBM black)";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pbm(#[from] PbmError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Pbm(_) | CliError::Io { .. } => EXIT_IO,
        }
    }
}

impl From<patch_completion::Error> for CliError {
    fn from(e: patch_completion::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "patchfill",
    version,
    about = "Square shape completion for binary patch masks",
    long_about = "Square shape completion for binary patch masks.\n\n\
                  Masks are PBM files (P1 or P4). Bit 1 (PBM black) marks an adversarial patch pixel."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complete a mask with the threshold schedule (or a fixed threshold).
    Complete(CompleteArgs),
    /// Brute-force completion, optionally diffed against another mask.
    Oracle(OracleArgs),
    /// Generate a shape mask.
    Gen(GenArgs),
    /// Corrupt a mask with a seeded model.
    Corrupt(CorruptArgs),
    /// Run seeded coverage trials.
    Trial(TrialArgs),
    /// Time the completion and the oracle across canvas and patch sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Completed mask output.
    #[arg(long)]
    pub output: PathBuf,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "25,50,75,100")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = GammaSchedule::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = GammaSchedule::DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = GammaSchedule::DEFAULT_T_MAX)]
    pub t_max: usize,
    /// Use one threshold instead of the schedule.
    #[arg(long)]
    pub fixed_gamma: Option<f64>,
    /// Also write the input OR the completion.
    #[arg(long)]
    pub union_ps: bool,
    /// Path for the union mask (default: `<output stem>.union.pbm`).
    #[arg(long, requires = "union_ps")]
    pub union_output: Option<PathBuf>,
    #[arg(long, default_value = "p4")]
    pub format: PbmFormat,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "25,50,75,100")]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Mask to compare against; any differing pixel exits with 1.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long, default_value = "p4")]
    pub format: PbmFormat,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub kind: ShapeKind,
    /// Target area is n x n pixels.
    #[arg(long)]
    pub n: usize,
    /// Top-left of the shape's bounding box, `row,col`.
    #[arg(long, value_parser = parse_pair, conflicts_with = "center")]
    pub anchor: Option<(usize, usize)>,
    /// Center the shape on the canvas.
    #[arg(long)]
    pub center: bool,
    /// Canvas size, `height,width`.
    #[arg(long, value_parser = parse_pair)]
    pub canvas: (usize, usize),
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "p4")]
    pub format: PbmFormat,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: CorruptionKind,
    #[arg(long)]
    pub budget: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "p4")]
    pub format: PbmFormat,
}

#[derive(Debug, Args)]
pub struct TrialArgs {
    #[arg(long)]
    pub size: usize,
    #[arg(long, value_parser = parse_pair)]
    pub canvas: (usize, usize),
    #[arg(long)]
    pub gamma: f64,
    /// Corruption models (default: all).
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<CorruptionKind>,
    /// Corruption budget (default: the largest budget within the guarantee).
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Trial `i` uses seed `seed + i`.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Square canvas side lengths.
    #[arg(long, value_delimiter = ',', default_value = "512,1024")]
    pub canvases: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "25,50,100")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 15)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 3)]
    pub oracle_repetitions: usize,
    /// Largest canvas the oracle is timed on (0 disables it).
    #[arg(long, default_value_t = 512)]
    pub oracle_max_canvas: usize,
    #[arg(long, default_value_t = 0.3)]
    pub gamma: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once([',', 'x'])
        .ok_or_else(|| format!("expected two integers like '100,200', got '{s}'"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Complete(a) => cmd_complete(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Gen(a) => cmd_gen(&a),
        Command::Corrupt(a) => cmd_corrupt(&a),
        Command::Trial(a) => cmd_trial(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    match path {
        Some(p) => pbm::write_atomic(p, text.as_bytes()).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn size_set(sizes: &[usize]) -> Result<SizeSet, CliError> {
    Ok(SizeSet::new(sizes.iter().copied())?)
}

#[derive(Debug, Serialize)]
pub struct InputDescriptor {
    pub path: String,
    pub height: usize,
    pub width: usize,
    pub popcount: u64,
}

impl InputDescriptor {
    fn new(path: &Path, mask: &BinaryMask) -> Self {
        Self {
            path: path.display().to_string(),
            height: mask.height(),
            width: mask.width(),
            popcount: mask.popcount(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CompleteConfig {
    pub sizes: Vec<usize>,
    /// `"schedule"` or `"fixed"`.
    pub mode: &'static str,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub t_max: Option<usize>,
    pub fixed_gamma: Option<f64>,
    pub union_ps: bool,
    pub format: String,
}

#[derive(Debug, Serialize)]
pub struct CompleteResult {
    pub attack_found: bool,
    pub gamma_used: Option<f64>,
    pub iterations_run: usize,
    pub per_size_accepted: BTreeMap<usize, u64>,
    pub skipped_sizes: Vec<usize>,
    pub output_popcount: u64,
    pub union_popcount: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct CompleteOutputs {
    pub completed: String,
    pub union: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CompleteReportFile {
    pub schema_version: u32,
    pub convention: &'static str,
    pub input: InputDescriptor,
    pub config: CompleteConfig,
    pub result: CompleteResult,
    pub outputs: CompleteOutputs,
    pub wall_time_ms: f64,
}

fn default_union_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    output.with_file_name(format!("{stem}.union.pbm"))
}

pub fn cmd_complete(a: &CompleteArgs) -> Result<i32, CliError> {
    let sizes = size_set(&a.sizes)?;
    let schedule = match a.fixed_gamma {
        Some(g) => {
            if !(g.is_finite() && (0.0..1.0).contains(&g)) {
                return Err(CliError::Usage(format!("--fixed-gamma must be in [0, 1), got {g}")));
            }
            None
        }
        None => Some(GammaSchedule::new(a.alpha, a.beta, a.t_max)?),
    };
    let observed = pbm::read_file(&a.input)?;

    let start = Instant::now();
    let completer = ShapeCompleter::new(&observed);
    let (completed, result) = match (schedule, a.fixed_gamma) {
        (Some(schedule), _) => {
            let (mask, r) = completer.gamma_search(&sizes, &schedule)?;
            let result = CompleteResult {
                attack_found: r.attack_found,
                gamma_used: r.gamma_used,
                iterations_run: r.iterations_run,
                per_size_accepted: r.per_size_accepted,
                skipped_sizes: r.skipped_sizes,
                output_popcount: r.output_popcount,
                union_popcount: None,
            };
            (mask, result)
        }
        (None, Some(g)) => {
            let out = completer.complete_multi(&sizes, g)?;
            let popcount = out.mask.popcount();
            let result = CompleteResult {
                attack_found: popcount > 0,
                gamma_used: (popcount > 0).then_some(g),
                iterations_run: 1,
                per_size_accepted: out.per_size_accepted,
                skipped_sizes: out.skipped_sizes,
                output_popcount: popcount,
                union_popcount: None,
            };
            (out.mask, result)
        }
        (None, None) => unreachable!("either a schedule or a fixed gamma"),
    };
    let union = a.union_ps.then(|| final_mask(&observed, &completed)).transpose()?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    pbm::write_file(&a.output, &completed, a.format)?;
    let union_path = match &union {
        Some(mask) => {
            let path = a.union_output.clone().unwrap_or_else(|| default_union_path(&a.output));
            pbm::write_file(&path, mask, a.format)?;
            Some(path)
        }
        None => None,
    };

    let report = CompleteReportFile {
        schema_version: REPORT_SCHEMA_VERSION,
        convention: CONVENTION,
        input: InputDescriptor::new(&a.input, &observed),
        config: CompleteConfig {
            sizes: sizes.sizes().to_vec(),
            mode: if a.fixed_gamma.is_some() { "fixed" } else { "schedule" },
            alpha: schedule.map(|s| s.alpha()),
            beta: schedule.map(|s| s.beta()),
            t_max: schedule.map(|s| s.t_max()),
            fixed_gamma: a.fixed_gamma,
            union_ps: a.union_ps,
            format: a.format.to_string(),
        },
        result: CompleteResult {
            union_popcount: union.as_ref().map(BinaryMask::popcount),
            ..result
        },
        outputs: CompleteOutputs {
            completed: a.output.display().to_string(),
            union: union_path.map(|p| p.display().to_string()),
        },
        wall_time_ms: elapsed,
    };
    write_json(a.report.as_deref(), &report)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct OracleSummary {
    pub input: InputDescriptor,
    pub sizes: Vec<usize>,
    pub gamma: f64,
    pub output_popcount: u64,
    pub compared_with: Option<String>,
    pub mismatched_pixels: Option<u64>,
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<i32, CliError> {
    let sizes = size_set(&a.sizes)?;
    let observed = pbm::read_file(&a.input)?;
    let out = oracle_complete_multi(&observed, &sizes, a.gamma)?;
    if let Some(path) = &a.output {
        pbm::write_file(path, &out, a.format)?;
    }
    let mismatched = match &a.compare {
        Some(path) => {
            let other = pbm::read_file(path)?;
            Some(out.hamming(&other)?)
        }
        None => None,
    };
    write_json(
        None,
        &OracleSummary {
            input: InputDescriptor::new(&a.input, &observed),
            sizes: sizes.sizes().to_vec(),
            gamma: a.gamma,
            output_popcount: out.popcount(),
            compared_with: a.compare.as_ref().map(|p| p.display().to_string()),
            mismatched_pixels: mismatched,
        },
    )?;
    match mismatched {
        Some(n) if n > 0 => {
            eprintln!("mismatch: {n} pixels differ");
            Ok(EXIT_MISMATCH)
        }
        _ => Ok(EXIT_OK),
    }
}

#[derive(Debug, Serialize)]
pub struct GenSummary {
    pub kind: String,
    pub n: usize,
    pub anchor: (usize, usize),
    pub canvas: (usize, usize),
    pub popcount: u64,
    pub output: String,
}

pub fn cmd_gen(a: &GenArgs) -> Result<i32, CliError> {
    let anchor = if a.center {
        centered_anchor(a.kind, a.n, a.canvas)?
    } else {
        a.anchor.unwrap_or((0, 0))
    };
    let mask = generate_shape_mask(a.kind, a.n, anchor, a.canvas)?;
    pbm::write_file(&a.output, &mask, a.format)?;
    write_json(
        None,
        &GenSummary {
            kind: a.kind.to_string(),
            n: a.n,
            anchor,
            canvas: a.canvas,
            popcount: mask.popcount(),
            output: a.output.display().to_string(),
        },
    )?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct CorruptSummary {
    pub input: InputDescriptor,
    pub model: String,
    pub budget: u64,
    pub seed: u64,
    pub rng: &'static str,
    pub distance: u64,
    pub clamped: bool,
    pub output: String,
}

pub fn cmd_corrupt(a: &CorruptArgs) -> Result<i32, CliError> {
    let gt = pbm::read_file(&a.input)?;
    let out = corrupt(&gt, CorruptionModel::new(a.model, a.budget, a.seed))?;
    pbm::write_file(&a.output, &out.mask, a.format)?;
    write_json(
        a.report.as_deref(),
        &CorruptSummary {
            input: InputDescriptor::new(&a.input, &gt),
            model: a.model.to_string(),
            budget: a.budget,
            seed: a.seed,
            rng: RNG_NAME,
            distance: out.distance,
            clamped: out.clamped,
            output: a.output.display().to_string(),
        },
    )?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct TrialModelSummary {
    pub model: String,
    pub trials: u64,
    pub within_budget: u64,
    pub covered: u64,
    /// Within-budget trials whose patch was not covered.
    pub violations: u64,
    pub cover_rate: f64,
    pub violation_seeds: Vec<u64>,
}

#[derive(Debug, Serialize)]
pub struct TrialReport {
    pub schema_version: u32,
    pub size: usize,
    pub canvas: (usize, usize),
    pub gamma: f64,
    pub budget: u64,
    pub guarantee_budget: u64,
    pub seed: u64,
    pub rng: &'static str,
    pub models: Vec<TrialModelSummary>,
    pub total_violations: u64,
}

/// Runs `trials` seeded trials per model. Trial `i` uses seed `seed + i`.
pub fn run_trials(
    size: usize,
    canvas: (usize, usize),
    gamma: f64,
    models: &[CorruptionKind],
    budget: Option<u64>,
    trials: u64,
    seed: u64,
) -> Result<TrialReport, CliError> {
    let max_budget = guarantee_budget(size, gamma)?;
    let budget = budget.unwrap_or(max_budget);
    let mut summaries = Vec::new();
    for &kind in models {
        let mut s = TrialModelSummary {
            model: kind.to_string(),
            trials,
            within_budget: 0,
            covered: 0,
            violations: 0,
            cover_rate: 0.0,
            violation_seeds: Vec::new(),
        };
        for i in 0..trials {
            let trial_seed = seed.wrapping_add(i);
            let rec = guarantee_trial(size, canvas, gamma, CorruptionModel::new(kind, budget, trial_seed))?;
            s.within_budget += rec.within_budget as u64;
            s.covered += rec.covered as u64;
            if !rec.passed() {
                s.violations += 1;
                s.violation_seeds.push(trial_seed);
            }
        }
        s.cover_rate = if trials > 0 {
            s.covered as f64 / trials as f64
        } else {
            1.0
        };
        summaries.push(s);
    }
    Ok(TrialReport {
        schema_version: REPORT_SCHEMA_VERSION,
        size,
        canvas,
        gamma,
        budget,
        guarantee_budget: max_budget,
        seed,
        rng: RNG_NAME,
        total_violations: summaries.iter().map(|s| s.violations).sum(),
        models: summaries,
    })
}

pub fn cmd_trial(a: &TrialArgs) -> Result<i32, CliError> {
    let models = if a.models.is_empty() {
        CorruptionKind::ALL.to_vec()
    } else {
        a.models.clone()
    };
    let report = run_trials(a.size, a.canvas, a.gamma, &models, a.budget, a.trials, a.seed)?;
    write_json(a.report.as_deref(), &report)?;
    Ok(if report.total_violations > 0 {
        EXIT_MISMATCH
    } else {
        EXIT_OK
    })
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32, CliError> {
    if a.canvases.is_empty() || a.sizes.is_empty() {
        return Err(CliError::Usage("--canvases and --sizes must be nonempty".into()));
    }
    if a.repetitions == 0 {
        return Err(CliError::Usage("--repetitions must be >= 1".into()));
    }
    if a.canvases.contains(&0) || a.sizes.contains(&0) {
        return Err(CliError::Usage("canvas and patch sizes must be >= 1".into()));
    }
    if !(a.gamma.is_finite() && (0.0..1.0).contains(&a.gamma)) {
        return Err(CliError::Usage(format!("--gamma must be in [0, 1), got {}", a.gamma)));
    }
    let report = run_bench(&BenchConfig {
        canvases: a.canvases.clone(),
        sizes: a.sizes.clone(),
        repetitions: a.repetitions,
        oracle_repetitions: a.oracle_repetitions,
        oracle_max_canvas: a.oracle_max_canvas,
        gamma: a.gamma,
        seed: a.seed,
    });
    write_json(a.report.as_deref(), &report)?;
    Ok(EXIT_OK)
}
