//! `qsl`: batch front end for the zero, atom and reconstruction pipelines.
//!
//! Every artifact is written inside an envelope carrying the schema tag, the
//! tool version and the fully resolved command configuration. Readers accept
//! either an envelope (the `result` field is used) or a bare artifact.

// `!(x > 0.0)` guards are written that way on purpose: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qsl::apcheck::{almost_periods, density, translation_bound};
use qsl::cfourier::{growth, TestFunction};
use qsl::reconstruct::{from_atoms, verify_roundtrip, ReconstructionResult};
use qsl::spectral::{atoms, check_conditions, verify_der, verify_duality, AtomMeasure};
use qsl::strip_zeros::{enumerate, find_zeros, Rect, ZeroSet};
use qsl::wiener::ExpSum;
use qsl::{presets, Error, SCHEMA};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "qsl", version, about = "Zero sets, atoms and reconstruction for exponential sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate all zeros inside a rectangle.
    Zeros(ZerosArgs),
    /// Compute the discrete measure of atoms (gamma, b_gamma).
    Atoms(AtomsArgs),
    /// Pair a bump test function with the zero set and with the atoms.
    Pair(PairArgs),
    /// Check the logarithmic-derivative identity at sample points.
    VerifyDer(VerifyDerArgs),
    /// Rebuild the series from an atom measure.
    Reconstruct(ReconstructArgs),
    /// Compare a series with its reconstruction.
    Roundtrip(RoundtripArgs),
    /// Scan shifts for almost periods of a zero set.
    Apcheck(ApcheckArgs),
    /// Growth and summability diagnostics for zeros and atoms.
    Growth(GrowthArgs),
    /// Print one of the closed-form preset series.
    Series(SeriesArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Serialize)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Serialize)]
#[group(required = true, multiple = false)]
struct SeriesSource {
    /// Series file in the wiener JSON schema.
    #[arg(long, alias = "q")]
    input: Option<PathBuf>,
    /// Closed-form series: sin, cos, cos3 or threefreq.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
    preset: Option<String>,
}

#[derive(Args, Serialize)]
struct ZerosArgs {
    #[command(flatten)]
    series: SeriesSource,
    /// Search rectangle x_min,x_max,y_min,y_max.
    #[arg(long, allow_hyphen_values = true)]
    rect: Rect,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Serialize)]
struct AtomsArgs {
    #[command(flatten)]
    series: SeriesSource,
    #[arg(long, default_value_t = 1e-10)]
    tail_tol: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Serialize)]
struct PairArgs {
    #[arg(long)]
    zeros: PathBuf,
    #[arg(long)]
    atoms: PathBuf,
    /// Centre of the standard bump.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    center: f64,
    #[arg(long, default_value_t = 1.0)]
    half_width: f64,
    /// Tolerance on the truncation tail of the zero sum.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Serialize)]
struct VerifyDerArgs {
    #[arg(long)]
    zeros: PathBuf,
    #[arg(long)]
    atoms: PathBuf,
    /// Sample point re,im; repeatable. Defaults to 20 points on Im = 1.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    zeta: Vec<Complex64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Serialize)]
struct ReconstructArgs {
    #[arg(long)]
    atoms: PathBuf,
    /// Height of the working line; chosen automatically when absent.
    #[arg(long)]
    y0: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tail_tol: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Serialize)]
struct RoundtripArgs {
    #[command(flatten)]
    series: SeriesSource,
    #[arg(long)]
    rec: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    rect: Rect,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Serialize)]
struct ApcheckArgs {
    #[arg(long)]
    zeros: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    tau_min: f64,
    #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
    tau_max: f64,
    /// Shift grid spacing; epsilon/4 when absent.
    #[arg(long)]
    tau_step: Option<f64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Serialize)]
struct GrowthArgs {
    #[arg(long)]
    zeros: PathBuf,
    #[arg(long)]
    atoms: PathBuf,
    /// Largest radius of the diagnostic grid.
    #[arg(long, default_value_t = 50.0)]
    r_max: f64,
    #[arg(long, default_value_t = 32)]
    points: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Serialize)]
struct SeriesArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
    preset: String,
    #[command(flatten)]
    out: Output,
}

/// A failure with its exit status: 2 for violated preconditions, 3 for
/// numerical breakdowns.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_precondition() { 2 } else { 3 }, message: e.to_string() }
    }
}

fn precondition(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or("expected re,im")?;
    let re = re.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let im = im.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Complex64::new(re, im))
}

fn read_artifact<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| precondition(format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| precondition(format!("{} is not valid JSON: {e}", path.display())))?;
    if let Some(schema) = value.get("schema").and_then(Value::as_str) {
        if schema != SCHEMA {
            return Err(precondition(format!("{}: schema {schema:?}, expected {SCHEMA:?}", path.display())));
        }
    }
    if let Some(inner) = value.get_mut("result") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| precondition(format!("{} is not a valid {what}: {e}", path.display())))
}

fn load_series(src: &SeriesSource) -> Result<ExpSum, Failure> {
    match (&src.input, &src.preset) {
        (_, Some(name)) => presets::by_name(name).ok_or_else(|| precondition(format!("unknown preset {name}"))),
        (Some(path), None) => read_artifact(path, "series"),
        (None, None) => Err(precondition("one of --input or --preset is required")),
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(precondition(format!("--{name} must be positive and finite, got {v}")))
    }
}

/// Writes `result` wrapped in the envelope, or `csv` when CSV was requested.
fn emit<C: Serialize, R: Serialize>(
    command: &str,
    config: &C,
    out: &Output,
    result: &R,
    csv: Option<String>,
) -> Result<(), Failure> {
    let text = match out.format {
        Format::Json => {
            let envelope = json!({
                "schema": SCHEMA,
                "tool": { "name": "qsl", "version": env!("CARGO_PKG_VERSION") },
                "command": command,
                "config": config,
                "result": result,
            });
            let mut s = serde_json::to_string_pretty(&envelope).map_err(|e| Failure { code: 3, message: e.to_string() })?;
            s.push('\n');
            s
        }
        Format::Csv => csv.ok_or_else(|| precondition(format!("{command} has no CSV form; use --format json")))?,
    };
    match &out.output {
        Some(path) => fs::write(path, text).map_err(|e| precondition(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn zeros_csv(z: &ZeroSet) -> String {
    let mut s = String::from("re,im,multiplicity\n");
    for p in &z.points {
        s.push_str(&format!("{},{},{}\n", p.location.re, p.location.im, p.multiplicity));
    }
    s
}

fn run_zeros(a: &ZerosArgs) -> Result<(), Failure> {
    check_positive("tol", a.tol)?;
    let q = load_series(&a.series)?;
    let z = find_zeros(&q, &a.rect, a.tol)?;
    // a numbering needs enough points for the slope fit; small windows stay un-numbered
    let z = match enumerate(&z) {
        Ok(numbered) => numbered,
        Err(Error::TooFewPoints { .. }) => z,
        Err(e) => return Err(e.into()),
    };
    let csv = zeros_csv(&z);
    emit("zeros", a, &a.out, &z, Some(csv))
}

fn run_atoms(a: &AtomsArgs) -> Result<(), Failure> {
    check_positive("tail-tol", a.tail_tol)?;
    let q = load_series(&a.series)?;
    let m = atoms(&q, a.tail_tol)?;
    emit("atoms", a, &a.out, &m, Some(m.to_csv()))
}

fn run_pair(a: &PairArgs) -> Result<(), Failure> {
    check_positive("tol", a.tol)?;
    let zeros: ZeroSet = read_artifact(&a.zeros, "zero set")?;
    let m: AtomMeasure = read_artifact(&a.atoms, "atom measure")?;
    let phi = TestFunction::standard_bump(a.center, a.half_width)?;
    let report = verify_duality(&zeros, &m, &phi, a.tol)?;
    emit("pair", a, &a.out, &json!({ "test_function": phi, "duality": report }), None)
}

fn run_verify_der(a: &VerifyDerArgs) -> Result<(), Failure> {
    check_positive("tol", a.tol)?;
    let zeros: ZeroSet = read_artifact(&a.zeros, "zero set")?;
    let m: AtomMeasure = read_artifact(&a.atoms, "atom measure")?;
    let samples: Vec<Complex64> = if a.zeta.is_empty() {
        (0..20).map(|j| Complex64::new(-2.0 + 4.0 * j as f64 / 19.0, 1.0)).collect()
    } else {
        a.zeta.clone()
    };
    let report = verify_der(&zeros, &m, &samples, a.tol)?;
    emit("verify-der", a, &a.out, &report, None)
}

fn run_reconstruct(a: &ReconstructArgs) -> Result<(), Failure> {
    check_positive("tail-tol", a.tail_tol)?;
    if let Some(y0) = a.y0 {
        check_positive("y0", y0)?;
    }
    let m: AtomMeasure = read_artifact(&a.atoms, "atom measure")?;
    let rec = from_atoms(&m, a.y0, a.tail_tol)?;
    emit("reconstruct", a, &a.out, &rec, None)
}

fn run_roundtrip(a: &RoundtripArgs) -> Result<(), Failure> {
    let q = load_series(&a.series)?;
    let rec: ReconstructionResult = read_artifact(&a.rec, "reconstruction")?;
    let report = verify_roundtrip(&q, &rec, &a.rect)?;
    emit("roundtrip", a, &a.out, &report, None)
}

fn run_apcheck(a: &ApcheckArgs) -> Result<(), Failure> {
    check_positive("epsilon", a.epsilon)?;
    let step = a.tau_step.unwrap_or(a.epsilon / 4.0);
    check_positive("tau-step", step)?;
    if !(a.tau_max >= a.tau_min) {
        return Err(precondition("--tau-max must not be below --tau-min"));
    }
    let zeros: ZeroSet = read_artifact(&a.zeros, "zero set")?;
    let n = ((a.tau_max - a.tau_min) / step).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| a.tau_min + k as f64 * step).collect();
    let report = almost_periods(&zeros, a.epsilon, &grid)?;
    let dens = if zeros.numbering().is_ok() {
        let extent = zeros.window.x_max.abs().min(zeros.window.x_min.abs());
        let r_grid: Vec<f64> = (1..=8).map(|k| 0.99 * extent * k as f64 / 8.0).collect();
        density(&zeros, &r_grid).ok()
    } else {
        None
    };
    let csv = report.to_csv();
    let result = json!({
        "almost_periods": report,
        "translation_bound": translation_bound(&zeros),
        "density": dens,
    });
    emit("apcheck", a, &a.out, &result, Some(csv))
}

fn run_growth(a: &GrowthArgs) -> Result<(), Failure> {
    check_positive("r-max", a.r_max)?;
    if a.points < 2 {
        return Err(precondition("--points must be at least 2"));
    }
    let zeros: ZeroSet = read_artifact(&a.zeros, "zero set")?;
    let m: AtomMeasure = read_artifact(&a.atoms, "atom measure")?;
    let r_grid: Vec<f64> = (1..=a.points).map(|k| a.r_max * k as f64 / a.points as f64).collect();
    let g = growth(&zeros, &m, &r_grid);
    let conditions = check_conditions(&m, &r_grid);
    let mut csv = String::from("r,m_mu,atom_variation\n");
    for ((r, mu), v) in g.r_grid.iter().zip(&g.m_mu).zip(&g.atom_variation) {
        csv.push_str(&format!("{r},{mu},{v}\n"));
    }
    emit("growth", a, &a.out, &json!({ "growth": g, "conditions": conditions }), Some(csv))
}

fn run_series(a: &SeriesArgs) -> Result<(), Failure> {
    let q = presets::by_name(&a.preset).ok_or_else(|| precondition(format!("unknown preset {}", a.preset)))?;
    let mut csv = String::from("freq,re,im\n");
    for t in q.terms() {
        csv.push_str(&format!("{},{},{}\n", t.freq, t.coef.re, t.coef.im));
    }
    emit("series", a, &a.out, &q, Some(csv))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("QSL_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| precondition(format!("QSL_THREADS={v:?} is not a thread count")))?;
    if n == 0 {
        return Err(precondition("QSL_THREADS must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure { code: 3, message: e.to_string() })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Zeros(a) => run_zeros(a),
        Command::Atoms(a) => run_atoms(a),
        Command::Pair(a) => run_pair(a),
        Command::VerifyDer(a) => run_verify_der(a),
        Command::Reconstruct(a) => run_reconstruct(a),
        Command::Roundtrip(a) => run_roundtrip(a),
        Command::Apcheck(a) => run_apcheck(a),
        Command::Growth(a) => run_growth(a),
        Command::Series(a) => run_series(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qsl: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_points_parse() {
        assert_eq!(parse_complex("-1.5, 2").unwrap(), Complex64::new(-1.5, 2.0));
        assert!(parse_complex("3").is_err());
        assert!(parse_complex("a,b").is_err());
    }

    #[test]
    fn artifacts_load_bare_or_enveloped() {
        let dir = std::env::temp_dir().join(format!("qsl-cli-unit-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let q = presets::cosine();
        let bare = dir.join("bare.json");
        let wrapped = dir.join("wrapped.json");
        fs::write(&bare, serde_json::to_string(&q).unwrap()).unwrap();
        fs::write(&wrapped, json!({ "schema": SCHEMA, "result": q }).to_string()).unwrap();
        let a: ExpSum = read_artifact(&bare, "series").ok().unwrap();
        let b: ExpSum = read_artifact(&wrapped, "series").ok().unwrap();
        assert_eq!(a, q);
        assert_eq!(b, q);

        let wrong = dir.join("wrong.json");
        fs::write(&wrong, json!({ "schema": "qsl/0", "terms": [] }).to_string()).unwrap();
        let e = read_artifact::<ExpSum>(&wrong, "series").err().unwrap();
        assert_eq!(e.code, 2);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn errors_map_to_exit_codes() {
        assert_eq!(Failure::from(Error::ZeroAtOrigin).code, 2);
        assert_eq!(Failure::from(Error::NonIntegerWinding { value: 0.5, residual: 0.5 }).code, 3);
        assert_eq!(Failure::from(Error::QuadratureNotConverged { re: 0.0, im: 0.0, change: 1.0 }).code, 3);
    }
}
