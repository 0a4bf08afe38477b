//! `istring`: command-line front end.
//!
//! Exit status: 0 success, 1 parse/validation/io errors, 2 numerical
//! non-convergence, 3 roundtrip tolerance breach.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use istring::io::{self, to_json};
use istring::{
    classify, default_grid, hamiltonian_convergence_check, hamiltonian_to_string,
    m_convergence_check, roundtrip_discrepancy, spectral_measure_discrete,
    stieltjes_inversion_spec, string_convergence_check, string_to_hamiltonian, weyl_m, Complex64,
    Error, StringSequence, StringSpec64,
};
use rayon::prelude::*;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "istring",
    version,
    about = "Spectral toolkit for generalized indefinite strings",
    allow_negative_numbers = true
)]
struct Cli {
    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the Weyl function of a string on a grid.
    Forward(Forward),
    /// Hamiltonian JSON to string spec JSON.
    Inverse(Inverse),
    /// String to Hamiltonian and back, reporting the discrepancy.
    Roundtrip(Roundtrip),
    /// Spectral measure of a string.
    Spectrum(Spectrum),
    /// Herglotz and Stieltjes flags of a string.
    Classify(Classify),
    /// Convergence report for a directory of strings.
    Converge(Converge),
}

#[derive(Args)]
struct Forward {
    #[arg(long)]
    spec: PathBuf,
    /// CSV of `re_z,im_z` rows; defaults to the classification grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the Hamiltonian of the string here.
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct Inverse {
    #[arg(long)]
    hamiltonian: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Roundtrip {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Spectrum {
    #[arg(long)]
    spec: PathBuf,
    /// Spectral window; required unless the string is finite and atomic.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    window: Option<Vec<f64>>,
    /// Heights above the real axis for Stieltjes inversion.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [1e-2, 1e-3, 1e-4])]
    eps: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Classify {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Converge {
    /// Directory of spec JSON files, taken in file-name order.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    limit: Option<PathBuf>,
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Numerical(String),
    Breach(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn positive(tol: f64) -> Outcome {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Input(format!("tol must be positive, got {tol}")))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => Ok(io::write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn grid_or_default(path: Option<&Path>) -> Result<Vec<Complex64>, Failure> {
    match path {
        Some(p) => Ok(io::read_grid(p)?),
        None => Ok(default_grid()),
    }
}

fn forward(a: &Forward) -> Outcome {
    positive(a.tol)?;
    let spec: StringSpec64 = io::read_spec(&a.spec)?;
    let grid = grid_or_default(a.grid.as_deref())?;
    let samples = grid
        .par_iter()
        .map(|&z| weyl_m(&spec, z, a.tol))
        .collect::<istring::Result<Vec<_>>>()?;
    if let Some(h) = &a.hamiltonian {
        io::write_text(h, &io::hamiltonian_to_json(&string_to_hamiltonian(&spec)))?;
    }
    emit(a.out.as_deref(), &io::m_samples_csv(&samples))
}

fn inverse(a: &Inverse) -> Outcome {
    let h = io::read_hamiltonian::<f64>(&a.hamiltonian)?;
    let spec = hamiltonian_to_string(&h)?;
    emit(a.out.as_deref(), &io::spec_to_json(&spec))
}

fn roundtrip(a: &Roundtrip) -> Outcome {
    positive(a.tol)?;
    let spec: StringSpec64 = io::read_spec(&a.spec)?;
    let r = roundtrip_discrepancy(&spec, 401)?;
    let pass = r.max() <= a.tol;
    let report = json!({
        "length": r.length,
        "w": r.w,
        "upsilon": r.upsilon,
        "max_discrepancy": r.max(),
        "tol": a.tol,
        "pass": pass,
    });
    emit(a.out.as_deref(), &to_json(&report))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Breach(format!(
            "max discrepancy {:e} exceeds tol {:e}",
            r.max(),
            a.tol
        )))
    }
}

fn spectrum(a: &Spectrum) -> Outcome {
    let spec: StringSpec64 = io::read_spec(&a.spec)?;
    let mu = match &a.window {
        Some(w) => stieltjes_inversion_spec(&spec, (w[0], w[1]), &a.eps)?,
        None => spectral_measure_discrete(&spec)?,
    };
    emit(a.out.as_deref(), &io::spectral_measure_to_json(&mu))
}

fn run_classify(a: &Classify) -> Outcome {
    positive(a.tol)?;
    let spec: StringSpec64 = io::read_spec(&a.spec)?;
    let grid = grid_or_default(a.grid.as_deref())?;
    let c = classify(&spec, &grid, a.tol)?;
    emit(a.out.as_deref(), &io::classification_to_json(&c))
}

fn converge(a: &Converge) -> Outcome {
    positive(a.tol)?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&a.dir)
        .map_err(|e| Failure::Input(format!("{}: {e}", a.dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Input(format!(
            "{}: no .json specs",
            a.dir.display()
        )));
    }
    let specs = paths
        .iter()
        .map(|p| io::read_spec::<f64>(p))
        .collect::<istring::Result<Vec<_>>>()?;
    let limit = a.limit.as_deref().map(io::read_spec::<f64>).transpose()?;
    let grid = match &a.grid {
        Some(p) => io::read_grid(p)?,
        None => vec![
            Complex64::new(0.0, 1.0),
            Complex64::new(-2.0, 0.5),
            Complex64::new(2.0, 0.5),
            Complex64::new(1.0, 2.0),
            Complex64::new(-1.0, 2.0),
        ],
    };
    // sample points inside the shortest member
    let span = specs
        .iter()
        .chain(limit.as_ref())
        .map(|s| s.length().value())
        .fold(f64::INFINITY, f64::min);
    let span = if span.is_finite() { span } else { 10.0 };
    let xs: Vec<f64> = (1..=9).map(|k| span * k as f64 / 10.0).collect();
    let hs: Vec<_> = specs.iter().map(string_to_hamiltonian).collect();
    let hl = limit.as_ref().map(string_to_hamiltonian);
    let seq = StringSequence { specs, limit };
    let sr = string_convergence_check(&seq, &xs, usize::MAX);
    let mr = m_convergence_check(&seq, &grid, usize::MAX, a.tol)?;
    let ss: Vec<f64> = (1..=9).map(|k| k as f64 / 2.0).collect();
    let hr = hamiltonian_convergence_check(&hs, hl.as_ref(), &ss);
    let report = json!({
        "members": paths.iter().map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned())).collect::<Vec<_>>(),
        "string": io::string_report_json(&sr),
        "m": io::m_report_json(&mr),
        "hamiltonian": io::hamiltonian_report_json(&hr),
        "verdicts_agree": sr.verdict == mr.verdict,
    });
    emit(a.out.as_deref(), &to_json(&report))
}

fn main() -> ExitCode {
    // usage errors share exit status 1 with other input errors
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match &cli.command {
        Command::Forward(a) => forward(a),
        Command::Inverse(a) => inverse(a),
        Command::Roundtrip(a) => roundtrip(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Classify(a) => run_classify(a),
        Command::Converge(a) => converge(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Breach(m)) => {
            eprintln!("tolerance breach: {m}");
            ExitCode::from(3)
        }
    }
}
