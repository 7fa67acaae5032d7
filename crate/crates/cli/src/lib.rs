//! Command-line front end for the `abtunnel` library.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 numeric failure,
//! 4 physical constraint violated (e.g. hard-axis condition).

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use abtunnel::analysis::serialize::{serialize, Format};
use abtunnel::analysis::{annotate_sweep, compare_quench, sweep_field, MinimaOptions, QuenchOptions};
use abtunnel::dilute_gas::bloch_band;
use abtunnel::semiclassics::{
    classical_minimum, instanton_action, parity_degeneracy_table, predicted_degeneracies,
    small_oscillation_frequency, SemiclassicalModel,
};
use abtunnel::spin_model::{band_structure, spectrum};
use abtunnel::verify::{self, Suite};
use abtunnel::{validate_params, Error, ErrorClass, Purpose, Spin, SpinSystemParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ARGUMENT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CONSTRAINT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "abtunnel", version, about = "Aharonov-Bohm interference in N-fold spin tunneling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full exact spectrum and the lowest-N band as JSON.
    Spectrum(SpectrumArgs),
    /// Exact band energies over a field grid (CSV or JSON).
    Sweep(SweepArgs),
    /// Locate exact ground-doublet crossings for N = 2 and compare with h_n.
    Quench(QuenchArgs),
    /// Semiclassical omega, S_cl, Phi and the levels E_Nk.
    Semiclassical(SemiclassicalArgs),
    /// Run the built-in consistency suites.
    Verify(VerifyArgs),
    /// Samples of the Bloch band omega/2 - 2 D e^{-S_cl} cos(theta).
    Band(BandArgs),
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Symmetry order N about the hard axis.
    #[arg(long)]
    pub symmetry: u32,
    /// Spin S, e.g. 10, 9/2 or 4.5.
    #[arg(long)]
    pub spin: String,
    /// Anisotropy ratio lambda = 2C/A.
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Omit the version field from the output.
    #[arg(long)]
    pub no_meta: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Reduced field h = g mu_B H_z / (A S).
    #[arg(long, default_value_t = 0.0)]
    pub field: f64,
    /// Degeneracy tolerance (default 1e-9 max(1, |E|)).
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 0.0)]
    pub field_min: f64,
    #[arg(long)]
    pub field_max: f64,
    #[arg(long, default_value_t = abtunnel::analysis::DEFAULT_STEPS)]
    pub steps: usize,
    /// Add semiclassical levels computed with this prefactor D.
    #[arg(long)]
    pub prefactor: Option<f64>,
    /// Refinement tolerance |dh| for located minima.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct QuenchArgs {
    #[arg(long, default_value_t = 2)]
    pub symmetry: u32,
    #[arg(long)]
    pub spin: String,
    #[arg(long)]
    pub lambda: f64,
    /// Upper end of the sweep (default 2 sqrt(1 - lambda^2)).
    #[arg(long)]
    pub field_max: Option<f64>,
    #[arg(long, default_value_t = abtunnel::analysis::DEFAULT_STEPS)]
    pub steps: usize,
    /// Refinement tolerance |dh| for located minima.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SemiclassicalArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 0.0)]
    pub field: f64,
    /// Instanton prefactor D in units of A.
    #[arg(long, default_value_t = 1.0)]
    pub prefactor: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Combinatorics,
    Semiclassics,
    Spectrum,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BandArgs {
    #[arg(long, required_unless_present = "omega")]
    pub symmetry: Option<u32>,
    #[arg(long, conflicts_with = "omega", requires_all = ["symmetry", "lambda"])]
    pub spin: Option<String>,
    #[arg(long, conflicts_with = "omega")]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 0.0, conflicts_with = "omega")]
    pub field: f64,
    /// Small-oscillation frequency, instead of deriving it from spin parameters.
    #[arg(long, requires = "action")]
    pub omega: Option<f64>,
    /// Instanton action S_cl, used together with --omega.
    #[arg(long, requires = "omega")]
    pub action: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub prefactor: f64,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Failure of a subcommand: an exit code and a one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Argument => EXIT_ARGUMENT,
            ErrorClass::Numeric => EXIT_NUMERIC,
            ErrorClass::Constraint => EXIT_CONSTRAINT,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_NUMERIC, message: format!("i/o error: {e}") }
    }
}

fn argument(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_ARGUMENT, message: message.into() }
}

pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ARGUMENT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "abtunnel: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Spectrum(a) => cmd_spectrum(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Quench(a) => cmd_quench(a, stdout),
        Command::Semiclassical(a) => cmd_semiclassical(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Band(a) => cmd_band(a, stdout),
    }
}

fn system(symmetry: u32, spin: &str, lambda: f64, field: f64) -> Result<SpinSystemParams, Failure> {
    let spin: Spin = spin.parse()?;
    Ok(SpinSystemParams::new(symmetry, spin, lambda, field))
}

/// Runs `body` against the chosen destination, buffering file output.
fn emit(out: &OutputArgs, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<(), Failure>) -> Result<(), Failure> {
    match &out.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()?;
        }
        None => body(stdout)?,
    }
    Ok(())
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Failure { code: EXIT_NUMERIC, message: e.to_string() })?;
    writeln!(w)?;
    Ok(())
}

fn version(out: &OutputArgs) -> Option<&'static str> {
    (!out.no_meta).then_some(env!("CARGO_PKG_VERSION"))
}

#[derive(Serialize)]
struct ParamsOut {
    symmetry: u32,
    spin: String,
    two_s: u32,
    lambda: f64,
    field: f64,
}

impl From<&SpinSystemParams> for ParamsOut {
    fn from(p: &SpinSystemParams) -> Self {
        ParamsOut { symmetry: p.symmetry, spin: p.spin.to_string(), two_s: p.spin.twice(), lambda: p.lambda, field: p.field }
    }
}

#[derive(Serialize)]
struct SpectrumOut<'a> {
    params: ParamsOut,
    eigenvalues: &'a [f64],
    band: &'a [f64],
    degenerate_pairs: &'a [(usize, usize)],
    tolerance: f64,
    hard_axis_warning: bool,
    /// Spin-parity prediction, reported at zero field only.
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    version: Option<&'a str>,
}

fn cmd_spectrum(a: SpectrumArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let p = system(a.system.symmetry, &a.system.spin, a.system.lambda, a.field)?;
    let validated = validate_params(p, Purpose::Exact)?;
    let s = spectrum(&p)?;
    let b = band_structure(&s, p.symmetry as usize, a.tolerance);
    let out = SpectrumOut {
        params: ParamsOut::from(&p),
        eigenvalues: &s.eigenvalues,
        band: &b.band,
        degenerate_pairs: &b.pairs,
        tolerance: b.tolerance,
        hard_axis_warning: validated.hard_axis_warning,
        predicted_pairs: (p.field == 0.0).then(|| parity_degeneracy_table(p.symmetry, p.spin.twice())),
        version: version(&a.output),
    };
    emit(&a.output, stdout, |w| write_json(w, &out))?;
    Ok(EXIT_OK)
}

fn cmd_sweep(a: SweepArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let p = system(a.system.symmetry, &a.system.spin, a.system.lambda, a.field_min)?;
    let mut result = sweep_field(&p, a.field_min, a.field_max, a.steps, a.prefactor)?;
    let mut opts = MinimaOptions::default();
    if let Some(t) = a.tolerance {
        opts.field_tolerance = t;
    }
    result.params.tolerance = a.tolerance;
    annotate_sweep(&p, &mut result, opts)?;
    if a.output.no_meta {
        result.strip_meta();
    }
    let format = Format::from(a.format);
    emit(&a.output, stdout, |w| Ok(serialize(&result, format, w)?))?;
    Ok(EXIT_OK)
}

fn cmd_quench(a: QuenchArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    if a.symmetry != 2 {
        return Err(argument("quench requires --symmetry 2"));
    }
    let p = system(2, &a.spin, a.lambda, 0.0)?;
    let mut opts = QuenchOptions { field_max: a.field_max, steps: a.steps, ..Default::default() };
    if let Some(t) = a.tolerance {
        opts.minima.field_tolerance = t;
    }
    let mut report = compare_quench(&p, opts)?;
    report.sweep.params.tolerance = a.tolerance;
    if a.output.no_meta {
        report.sweep.strip_meta();
    }
    let format = Format::from(a.format);
    emit(&a.output, stdout, |w| Ok(serialize(&report.sweep, format, w)?))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct LevelOut {
    k: i64,
    energy: f64,
}

#[derive(Serialize)]
struct SemiclassicalOut<'a> {
    params: ParamsOut,
    theta0: f64,
    e_min: f64,
    omega: f64,
    action: f64,
    phi: f64,
    prefactor: f64,
    levels: Vec<LevelOut>,
    degenerate_pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    version: Option<&'a str>,
}

fn cmd_semiclassical(a: SemiclassicalArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let p = system(a.system.symmetry, &a.system.spin, a.system.lambda, a.field)?;
    let (theta0, e_min) = classical_minimum(&p)?;
    let model = SemiclassicalModel::from_params(&p, a.prefactor)?;
    let out = SemiclassicalOut {
        params: ParamsOut::from(&p),
        theta0,
        e_min,
        omega: model.omega,
        action: model.action,
        phi: model.phi,
        prefactor: model.prefactor,
        levels: model.level_energies().into_iter().map(|(k, energy)| LevelOut { k, energy }).collect(),
        degenerate_pairs: predicted_degeneracies(p.symmetry, model.phi),
        version: version(&a.output),
    };
    emit(&a.output, stdout, |w| write_json(w, &out))?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let suite = match a.suite {
        SuiteArg::Combinatorics => Suite::Combinatorics,
        SuiteArg::Semiclassics => Suite::Semiclassics,
        SuiteArg::Spectrum => Suite::Spectrum,
        SuiteArg::All => Suite::All,
    };
    let results = verify::run(suite);
    let failed = results.iter().filter(|r| !r.passed).count();
    emit(&a.output, stdout, |w| {
        for r in &results {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            writeln!(w, "{tag}  {}  (worst {:.3e}, limit {:.1e})", r.name, r.worst, r.threshold)?;
        }
        writeln!(w, "{} passed, {} failed", results.len() - failed, failed)?;
        Ok(())
    })?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERIC })
}

fn cmd_band(a: BandArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    if a.steps < 2 {
        return Err(argument("--steps must be at least 2"));
    }
    let (omega, action) = match (a.omega, a.action) {
        (Some(w), Some(s)) => (w, s),
        _ => {
            let (Some(n), Some(spin), Some(lambda)) = (a.symmetry, a.spin.as_deref(), a.lambda) else {
                return Err(argument("band needs --symmetry, --spin and --lambda, or --omega and --action"));
            };
            let p = system(n, spin, lambda, a.field)?;
            let p = validate_params(p, Purpose::Semiclassical)?.params;
            (small_oscillation_frequency(&p)?, instanton_action(&p)?)
        }
    };
    // reuse the model validation for omega, S_cl and D
    SemiclassicalModel::new(omega, action, a.prefactor, 0.0, 1)?;
    let samples: Vec<(f64, f64)> = (0..a.steps)
        .map(|i| {
            let theta = -PI + 2.0 * PI * i as f64 / (a.steps - 1) as f64;
            (theta, bloch_band(theta, omega, a.prefactor, action))
        })
        .collect();
    emit(&a.output, stdout, |w| match a.format {
        FormatArg::Csv => {
            writeln!(w, "theta,energy")?;
            for (t, e) in &samples {
                writeln!(w, "{},{}", abtunnel::analysis::serialize::format_number(*t), abtunnel::analysis::serialize::format_number(*e))?;
            }
            Ok(())
        }
        FormatArg::Json => {
            #[derive(Serialize)]
            struct BandOut<'a> {
                omega: f64,
                action: f64,
                prefactor: f64,
                samples: Vec<[f64; 2]>,
                #[serde(skip_serializing_if = "Option::is_none")]
                version: Option<&'a str>,
            }
            let out = BandOut {
                omega,
                action,
                prefactor: a.prefactor,
                samples: samples.iter().map(|&(t, e)| [t, e]).collect(),
                version: version(&a.output),
            };
            write_json(w, &out)
        }
    })?;
    Ok(EXIT_OK)
}
