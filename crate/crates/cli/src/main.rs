use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tenspec::io::{self, Sig17};
use tenspec::odeco::{random_odeco, random_symmetric_odeco, to_dense};
use tenspec::random::{gaussian_tensor, random_symmetric};
use tenspec::spectral::{all_mode_spectra, hosvd, schatten_norm};
use tenspec::subdiff::{
    check_membership, estimate_tensor_conjugate, subgrad_schatten, subgradient_inequality_test,
};
use tenspec::verify::run_verification;
use tenspec::vonneumann::{check_equality_via_structure, vn_report};
use tenspec::{DenseTensor, Error, OdecoRep, SchattenParams, Shape};

/// Spectral tools for dense tensors. Every command prints one JSON document.
#[derive(Parser)]
#[command(name = "tenspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random tensor or odeco representation
    Gen(GenArgs),
    /// Higher-order SVD of a tensor
    Hosvd(InArgs),
    /// Mode spectra of a tensor
    Spectrum(SpectrumArgs),
    /// Schatten-(p,q) norm
    Norm(NormArgs),
    /// Canonical subgradient at an odeco tensor
    Subgrad(NormArgs),
    /// Certify that G is a subgradient at X
    CheckSubgrad(CheckArgs),
    /// Von Neumann gaps and equality structure
    VnCheck(VnArgs),
    /// Compare the analytic conjugate with a numerical search
    ConjugateCheck(ConjugateArgs),
    /// Run the built-in property suites
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gaussian,
    Symmetric,
    Odeco,
    SymmetricOdeco,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Comma-separated dimensions, e.g. 3,3,3
    #[arg(long, value_delimiter = ',', required = true)]
    shape: Vec<usize>,
    /// Rank for the odeco kinds
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the document to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InArgs {
    /// Tensor file (an odeco file is densified)
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Only this (1-based) mode
    #[arg(long)]
    mode: Option<usize>,
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    /// Scale λ, or `auto` (1/D when p = q = 1, otherwise 1)
    #[arg(long, default_value = "auto")]
    lambda: String,
}

impl ParamArgs {
    fn resolve(&self, order: usize) -> Result<SchattenParams, Error> {
        if self.lambda == "auto" {
            return SchattenParams::with_auto_lambda(self.p, self.q, order);
        }
        let lambda: f64 = self.lambda.parse().map_err(|_| {
            Error::InvalidParameter(format!(
                "lambda must be a number or auto, got {}",
                self.lambda
            ))
        })?;
        SchattenParams::new(self.p, self.q, lambda)
    }
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Point X (tensor or odeco file)
    #[arg(long)]
    x: PathBuf,
    /// Candidate subgradient G
    #[arg(long)]
    g: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Also run the sampling oracle with this many trials
    #[arg(long, default_value_t = 0)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VnArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Shared frames (array of matrices or an object with "factors");
    /// defaults to the HOSVD factors of X
    #[arg(long)]
    frames: Option<PathBuf>,
}

#[derive(Args)]
struct ConjugateArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Smaller instance counts and budgets
    #[arg(long)]
    quick: bool,
}

#[derive(Serialize)]
struct ParamsOut {
    p: Sig17,
    q: Sig17,
    lambda: Sig17,
}

impl From<&SchattenParams> for ParamsOut {
    fn from(p: &SchattenParams) -> Self {
        Self {
            p: Sig17(p.p()),
            q: Sig17(p.q()),
            lambda: Sig17(p.lambda()),
        }
    }
}

/// Reads a tensor file, densifying odeco files (recognized by `"alphas"`).
fn read_point(path: &Path) -> Result<DenseTensor, Error> {
    Ok(match read_any(path)? {
        Point::Dense(t) => t,
        Point::Odeco(rep) => to_dense(&rep),
    })
}

enum Point {
    Dense(DenseTensor),
    Odeco(OdecoRep),
}

fn read_any(path: &Path) -> Result<Point, Error> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if text.contains("\"alphas\"") {
        Ok(Point::Odeco(io::odeco_from_json(&text)?))
    } else {
        Ok(Point::Dense(io::tensor_from_json(&text)?))
    }
}

fn emit(doc: String, out: Option<&Path>) -> Result<String, Error> {
    if let Some(path) = out {
        io::write_file(path, &doc)?;
    }
    Ok(doc)
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

fn gen(a: &GenArgs) -> Result<String, Error> {
    let shape = Shape::new(a.shape.clone())?;
    let cubic = || {
        if shape.is_cubic() {
            Ok((shape.dims()[0], shape.order()))
        } else {
            Err(Error::NotCubic(shape.dims().to_vec()))
        }
    };
    let doc = match a.kind {
        Kind::Gaussian => io::tensor_to_json(&gaussian_tensor(&shape, a.seed)),
        Kind::Symmetric => {
            let (n, order) = cubic()?;
            io::tensor_to_json(&random_symmetric(n, order, a.seed)?)
        }
        Kind::Odeco => io::odeco_to_json(&random_odeco(&shape, a.rank, a.seed)?),
        Kind::SymmetricOdeco => {
            let (n, order) = cubic()?;
            io::odeco_to_json(&random_symmetric_odeco(n, order, a.rank, a.seed)?)
        }
    };
    emit(doc, a.out.as_deref())
}

fn run(command: &Command) -> Result<(String, bool), Error> {
    let ok = |doc| Ok((doc, true));
    match command {
        Command::Gen(a) => ok(gen(a)?),
        Command::Hosvd(a) => ok(emit(
            io::hosvd_to_json(&hosvd(&read_point(&a.input)?)?),
            a.out.as_deref(),
        )?),
        Command::Spectrum(a) => {
            let x = read_point(&a.input)?;
            match a.mode {
                Some(mode) => {
                    #[derive(Serialize)]
                    struct Out {
                        mode: usize,
                        spectrum: Vec<Sig17>,
                    }
                    let s = tenspec::spectral::mode_spectrum(&x, mode)?;
                    ok(json(&Out {
                        mode,
                        spectrum: s.into_iter().map(Sig17).collect(),
                    }))
                }
                None => ok(io::spectra_to_json(&all_mode_spectra(&x)?)),
            }
        }
        Command::Norm(a) => {
            let x = read_point(&a.input)?;
            let params = a.params.resolve(x.order())?;
            #[derive(Serialize)]
            struct Out {
                value: Sig17,
                params: ParamsOut,
            }
            let doc = json(&Out {
                value: Sig17(schatten_norm(&x, &params)?),
                params: (&params).into(),
            });
            ok(emit(doc, a.out.as_deref())?)
        }
        Command::Subgrad(a) => {
            let rep = match read_any(&a.input)? {
                Point::Odeco(rep) => rep,
                Point::Dense(_) => {
                    return Err(Error::Format {
                        field: "alphas".into(),
                        message: "subgrad needs an odeco representation".into(),
                    })
                }
            };
            let params = a.params.resolve(rep.shape().order())?;
            ok(emit(
                io::tensor_to_json(&subgrad_schatten(&rep, &params)?),
                a.out.as_deref(),
            )?)
        }
        Command::CheckSubgrad(a) => {
            let x = read_point(&a.x)?;
            let g = read_point(&a.g)?;
            let params = a.params.resolve(x.order())?;
            let cert = check_membership(&x, &g, &params, a.tol)?;
            let mut doc = io::certificate_to_json(&cert);
            if a.trials > 0 {
                let slack = subgradient_inequality_test(&x, &g, &params, a.trials, a.seed)?;
                doc = format!(
                    "{{\"certificate\":{doc},\"min_slack\":{},\"trials\":{}}}",
                    json(&Sig17(slack)),
                    a.trials
                );
            }
            ok(doc)
        }
        Command::VnCheck(a) => {
            let x = read_point(&a.x)?;
            let y = read_point(&a.y)?;
            let report = vn_report(&x, &y, a.tol)?;
            let frames = match &a.frames {
                Some(path) => io::read_frames(path)?,
                None => hosvd(&x)?.factors,
            };
            let structure = check_equality_via_structure(&x, &y, &frames, a.tol)?;
            ok(format!(
                "{{\"report\":{},\"structure\":{}}}",
                io::vn_report_to_json(&report),
                io::structural_equality_to_json(&structure)
            ))
        }
        Command::ConjugateCheck(a) => {
            let x = read_point(&a.input)?;
            let params = a.params.resolve(x.order())?;
            ok(io::conjugate_estimate_to_json(&estimate_tensor_conjugate(
                &x, &params, a.budget, a.seed,
            )?))
        }
        Command::Verify(a) => {
            let report = run_verification(a.seed, a.quick);
            Ok((report.to_json(), report.all_passed()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((doc, success)) => {
            println!("{doc}");
            if success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            println!("{}", serde_json::json!({ "error": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
