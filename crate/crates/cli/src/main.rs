use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spinmoment::feasibility::{witness_search, ClassifyOptions, Classifier, WitnessSearch};
use spinmoment::scan::{render_svg, scan, scan_with_threads, ScanSpec, SetKind, SetSelection};
use spinmoment::selfcheck::{run_validation, ValidateOptions};
use spinmoment_cli::momentfile::{MomentFile, MomentFileError};
use spinmoment_cli::report::{exit_code, CheckReport, WitnessReport};
use spinmoment_cli::{parse_reals, parse_spin, scanio, threads_from_env};

/// Exit code for command-line usage errors.
const EXIT_USAGE: u8 = 64;
/// Malformed or invalid input data.
const EXIT_DATA: u8 = 65;
/// Input file missing or unreadable.
const EXIT_NO_INPUT: u8 = 66;
/// Solver or other internal failure.
const EXIT_SOFTWARE: u8 = 70;
/// Output could not be written.
const EXIT_IO: u8 = 74;

#[derive(Parser, Debug)]
#[command(name = "spinmoment", version, about = "Decide whether spin moments come from a quantum state")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Seed for every random sample drawn.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a moment file. Exit 0 quantum, 1 non-quantum, 2 boundary.
    Check {
        #[arg(long)]
        input: PathBuf,
        /// Boundary band on the phase-1 value t*.
        #[arg(long, default_value_t = spinmoment::feasibility::BOUNDARY_BAND)]
        tol: f64,
        /// Solve for a certificate state even when the PPT test accepts.
        #[arg(long)]
        certificate: bool,
    },
    /// Find a separating hyperplane. Exit 0 when found, 1 when none exists.
    Witness {
        #[arg(long)]
        input: PathBuf,
    },
    /// Scan the (v1, v2) plane for membership in R, S_j and T_j.
    Scan {
        /// Spin: 5, 5/2 or 2.5.
        #[arg(long)]
        j: String,
        /// Renormalized first moments u1,u2,u3.
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        /// Points per axis (endpoints included).
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Sets to evaluate: any of R, S, T.
        #[arg(long, default_value = "R,S,T")]
        sets: String,
        /// Range of v1 and v2 as min,max.
        #[arg(long, allow_hyphen_values = true, default_value = "-0.2,1.0")]
        range: String,
        /// CSV output path; '-' or omitted writes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional SVG rendering.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Add a per-point elapsed_us column.
        #[arg(long)]
        timing: bool,
        /// Worker cap; overrides SPINMOMENT_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the self-validation suite.
    Validate {
        /// Largest 2j for the algebra identities.
        #[arg(long, default_value_t = 30)]
        j_max: u32,
        /// Random states per spin in the sandwich check.
        #[arg(long, default_value_t = 40)]
        samples: usize,
        /// Override a tolerance, e.g. `algebra=1e-20` (fault injection).
        #[arg(long = "set-tol", value_name = "NAME=VALUE", allow_hyphen_values = true)]
        set_tol: Vec<String>,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: anyhow::Error) -> Self {
        Self { code, error }
    }
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::new(EXIT_DATA, e.into())
}

fn software(e: impl Into<anyhow::Error>) -> Failure {
    Failure::new(EXIT_SOFTWARE, e.into())
}

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::new(EXIT_IO, e.into())
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::new(EXIT_USAGE, e.into())
}

fn read_input(path: &Path) -> Result<MomentFile, Failure> {
    MomentFile::read(path).map_err(|e| match e {
        MomentFileError::Io(_) => Failure::new(EXIT_NO_INPUT, anyhow!("{}: {e}", path.display())),
        other => data(anyhow!("{}: {other}", path.display())),
    })
}

fn emit(text: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(io_err)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn cmd_check(format: Format, input: &Path, tol: f64, certificate: bool) -> Result<u8, Failure> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(usage(anyhow!("--tol must be a non-negative number")));
    }
    let file = read_input(input)?;
    let m = file.moments().map_err(data)?;
    let options = ClassifyOptions {
        band: tol,
        want_certificate: certificate,
        ..ClassifyOptions::default()
    };
    let classifier = Classifier::with_options(m.j(), options).map_err(data)?;
    let verdict = classifier.classify(&m).map_err(software)?;
    let report = CheckReport::new(&verdict, m.j(), file.label.clone());
    match format {
        Format::Text => emit(&report.to_text())?,
        Format::Json => emit(&to_json(&report))?,
    }
    Ok(exit_code(verdict.status))
}

#[derive(Serialize)]
struct WitnessOutput {
    found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_value: Option<f64>,
}

fn cmd_witness(format: Format, input: &Path) -> Result<u8, Failure> {
    let file = read_input(input)?;
    let m = file.moments().map_err(data)?;
    let search = witness_search(&m).map_err(software)?;
    let out = match search {
        WitnessSearch::Found(w) => WitnessOutput {
            found: true,
            witness: Some(WitnessReport::new(&w)),
            best_value: None,
        },
        WitnessSearch::NotFound { value } => WitnessOutput {
            found: false,
            witness: None,
            best_value: Some(value),
        },
    };
    match format {
        Format::Json => emit(&to_json(&out))?,
        Format::Text => match (&out.witness, out.best_value) {
            (Some(w), _) => emit(&w.to_text())?,
            (None, v) => emit(&format!(
                "no witness exists: the moments are consistent with a state (best hyperplane value {:.3e})\n",
                v.unwrap_or(0.0)
            ))?,
        },
    }
    Ok(if out.found { 0 } else { 1 })
}

#[derive(Serialize)]
struct ScanSummary {
    j: String,
    u: [f64; 3],
    grid: usize,
    points: usize,
    count_r: Option<usize>,
    count_s: Option<usize>,
    count_t: Option<usize>,
    area_r: Option<f64>,
    area_s: Option<f64>,
    area_t: Option<f64>,
    nesting_violations: usize,
    sdp_solves: usize,
    point_errors: usize,
    elapsed_ms: u128,
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    format: Format,
    j: &str,
    u: &str,
    grid: usize,
    sets: &str,
    range: &str,
    out: Option<&PathBuf>,
    svg: Option<&PathBuf>,
    timing: bool,
    threads: Option<usize>,
) -> Result<u8, Failure> {
    let j = parse_spin(j).map_err(usage)?;
    let u = parse_reals(u, 3).map_err(usage)?;
    let range = parse_reals(range, 2).map_err(usage)?;
    let mut spec = ScanSpec::new(j, [u[0], u[1], u[2]], grid);
    spec.v_min = range[0];
    spec.v_max = range[1];
    spec.sets = SetSelection::parse(sets).map_err(usage)?;
    spec.validate().map_err(usage)?;
    if spec.u_norm() > 1.0 {
        eprintln!("warning: |u| = {:.6} > 1, all regions will be empty", spec.u_norm());
    }
    let threads = match threads {
        Some(0) => return Err(usage(anyhow!("--threads must be positive"))),
        Some(n) => Some(n),
        None => threads_from_env().map_err(usage)?,
    };
    let result = match threads {
        Some(n) => scan_with_threads(&spec, n),
        None => scan(&spec),
    }
    .map_err(software)?;

    let to_stdout = out.is_none_or(|p| p.as_os_str() == "-");
    if to_stdout {
        scanio::write_csv(&result, io::stdout().lock(), timing).map_err(io_err)?;
    } else {
        let path = out.expect("checked above");
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display())).map_err(io_err)?;
        scanio::write_csv(&result, BufWriter::new(f), timing).map_err(io_err)?;
    }
    if let Some(path) = svg {
        std::fs::write(path, render_svg(&result))
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(io_err)?;
    }

    let sel = spec.sets;
    let summary = ScanSummary {
        j: j.to_string(),
        u: spec.u,
        grid,
        points: result.points.len(),
        count_r: sel.inner.then(|| result.count(SetKind::Inner)),
        count_s: sel.exact.then(|| result.count(SetKind::Exact)),
        count_t: sel.outer.then(|| result.count(SetKind::Outer)),
        area_r: sel.inner.then(|| result.area(SetKind::Inner)),
        area_s: sel.exact.then(|| result.area(SetKind::Exact)),
        area_t: sel.outer.then(|| result.area(SetKind::Outer)),
        nesting_violations: result.nesting_violations(),
        sdp_solves: result.sdp_solves(),
        point_errors: result.errors(),
        elapsed_ms: result.elapsed.as_millis(),
    };
    let text = match format {
        Format::Json => to_json(&summary),
        Format::Text => {
            let mut s = format!("scan j = {}, u = {:?}, {grid}x{grid} points\n", summary.j, summary.u);
            for (name, c, a) in [
                ("R", summary.count_r, summary.area_r),
                ("S_j", summary.count_s, summary.area_s),
                ("T_j", summary.count_t, summary.area_t),
            ] {
                if let (Some(c), Some(a)) = (c, a) {
                    s.push_str(&format!("  {name:<4} {c:>8} points, area {a:.6}\n"));
                }
            }
            s.push_str(&format!(
                "  nesting violations {}, SDP solves {}, point errors {}, {} ms\n",
                summary.nesting_violations, summary.sdp_solves, summary.point_errors, summary.elapsed_ms
            ));
            s
        }
    };
    // the summary goes to stderr when stdout carries the CSV
    if to_stdout {
        eprint!("{text}");
    } else {
        emit(&text)?;
    }
    if let Some(p) = result.points.iter().find(|p| p.error.is_some()) {
        eprintln!(
            "warning: {} points failed; first at ({}, {}): {}",
            summary.point_errors,
            p.v1,
            p.v2,
            p.error.as_deref().unwrap_or("")
        );
    }
    Ok(0)
}

#[derive(Serialize)]
struct CheckLine {
    invariant: &'static str,
    passed: bool,
    detail: String,
    elapsed_ms: u128,
}

fn cmd_validate(format: Format, seed: u64, j_max: u32, samples: usize, set_tol: &[String]) -> Result<u8, Failure> {
    if j_max == 0 {
        return Err(usage(anyhow!("--j-max must be at least 1")));
    }
    let mut opts = ValidateOptions {
        max_two_j: j_max,
        seed,
        sandwich_samples: samples,
        ..ValidateOptions::default()
    };
    for item in set_tol {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| usage(anyhow!("--set-tol expects NAME=VALUE, found '{item}'")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| usage(anyhow!("--set-tol {name}: invalid number '{value}'")))?;
        let t = &mut opts.tolerances;
        let slot = match name.trim() {
            "algebra" => &mut t.algebra,
            "oracle" => &mut t.oracle,
            "gap" => &mut t.gap,
            "psd" => &mut t.psd,
            "round-trip" => &mut t.round_trip,
            "witness" => &mut t.witness,
            other => {
                return Err(usage(anyhow!(
                    "unknown tolerance '{other}' (algebra, oracle, gap, psd, round-trip, witness)"
                )))
            }
        };
        *slot = value;
    }
    let report = run_validation(&opts);
    let lines: Vec<CheckLine> = report
        .checks
        .iter()
        .map(|c| CheckLine {
            invariant: c.name,
            passed: c.passed,
            detail: c.detail.clone(),
            elapsed_ms: c.elapsed.as_millis(),
        })
        .collect();
    match format {
        Format::Json => emit(&to_json(&lines))?,
        Format::Text => {
            let mut s = String::new();
            for l in &lines {
                let mark = if l.passed { "ok  " } else { "FAIL" };
                s.push_str(&format!("{mark} {:<40} {} ({} ms)\n", l.invariant, l.detail, l.elapsed_ms));
            }
            let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
            if failed.is_empty() {
                s.push_str("all checks passed\n");
            } else {
                s.push_str(&format!("failed invariants: {}\n", failed.join(", ")));
            }
            emit(&s)?;
        }
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Check { input, tol, certificate } => cmd_check(cli.format, input, *tol, *certificate),
        Command::Witness { input } => cmd_witness(cli.format, input),
        Command::Scan {
            j,
            u,
            grid,
            sets,
            range,
            out,
            svg,
            timing,
            threads,
        } => cmd_scan(cli.format, j, u, *grid, sets, range, out.as_ref(), svg.as_ref(), *timing, *threads),
        Command::Validate { j_max, samples, set_tol } => cmd_validate(cli.format, cli.seed, *j_max, *samples, set_tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
