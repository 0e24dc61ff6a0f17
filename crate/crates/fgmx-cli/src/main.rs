//! Command-line front end: validation, measures, dependence certification,
//! sampling, family utilities, fitting and parameter tables.
//!
//! Exit codes are a stable scripting contract: 0 success or affirmative
//! verdict, 1 negative verdict (invalid spec, unreachable target, fit out
//! of range), 2 usage or parse errors. All reports are JSON on stdout;
//! datasets and tables are CSV.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use fgmx::copula::{CopulaSpec, ValidationOptions, ValidityReport};
use fgmx::dependence::{dependence_report, DependenceOptions, DependenceReport};
use fgmx::families::{
    fit_rho_inversion, gpd_from_rho_lambda, make_named, FamilyParams, FitFamily, FAMILY_TAGS,
};
use fgmx::measures::{measure_set, MeasureSet};
use fgmx::sample::{sample, with_margins, write_csv};
use fgmx::specfile::SpecFile;
use fgmx::{expr, Error, QuadratureConfig};

#[derive(Parser)]
#[command(name = "fgmx", version, about = "Copulas uv + theta(max(u,v))*phi(u)*phi(v)")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the admissibility conditions of a spec file; exit 0 iff valid.
    Validate {
        spec: PathBuf,
        /// Lattice resolution per axis.
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Margin kept away from 0 and 1.
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Comparison tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Association measures (rho, tail coefficients, beta, diagonal mass).
    Measures { spec: PathBuf },
    /// Dependence-property certification (PQD/LTD/RTI/LCSD/RCSI).
    Depcheck { spec: PathBuf },
    /// Draw samples, CSV to stdout or --out.
    Sample {
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Quantile expression in t applied to the first coordinate.
        #[arg(long, allow_hyphen_values = true)]
        margin_x: Option<String>,
        /// Quantile expression in t applied to the second coordinate.
        #[arg(long, allow_hyphen_values = true)]
        margin_y: Option<String>,
    },
    /// Family catalogue utilities.
    Family {
        #[command(subcommand)]
        action: FamilyCmd,
    },
    /// Fit a one-parameter family to paired data by rank correlation.
    Fit {
        data: PathBuf,
        #[arg(long)]
        family: String,
        /// Kernel expression for --family constant-theta.
        #[arg(long)]
        phi: Option<String>,
    },
    /// Tabulate measures over a parameter range, CSV.
    Table {
        #[arg(long)]
        family: String,
        /// Range as start:end:steps, inclusive.
        #[arg(long)]
        param_range: String,
        #[arg(long, default_value = "rho,lambda,beta,mass")]
        columns: String,
        /// Fixed sigma for --family gpd.
        #[arg(long)]
        sigma: Option<f64>,
        /// Kernel expression for --family constant-theta.
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FamilyCmd {
    /// List the family tags.
    List,
    /// Parameter domains and closed forms of one family.
    Show { tag: String },
    /// Invert a (rho, lambda) target into gpd parameters.
    FromRhoLambda { rho: f64, lambda: f64 },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        // negative verdicts
        Error::OutOfRange { .. } | Error::Unvalidated { .. } => 1,
        // everything else is a usage, parse or numeric failure
        _ => 2,
    }
}

fn quad_cfg() -> Result<QuadratureConfig, Error> {
    match std::env::var("FGMX_QUAD_TOL") {
        Ok(text) => {
            let tol: f64 = text
                .parse()
                .map_err(|_| Error::Parameter(format!("FGMX_QUAD_TOL = `{text}` is not a number")))?;
            if !(tol > 0.0) {
                return Err(Error::Parameter(format!(
                    "FGMX_QUAD_TOL must be positive, got {tol}"
                )));
            }
            Ok(QuadratureConfig::with_tol(tol))
        }
        Err(_) => Ok(QuadratureConfig::default()),
    }
}

fn load_spec(path: &Path) -> Result<CopulaSpec, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::SpecFile(format!("cannot read {}: {e}", path.display())))?;
    SpecFile::from_json(&text)?.build()
}

/// For validation the raw generator pair is judged, so out-of-range family
/// parameters reach the grid check and get a condition witness instead of
/// bouncing at the parameter gate.
fn load_spec_raw(path: &Path) -> Result<CopulaSpec, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::SpecFile(format!("cannot read {}: {e}", path.display())))?;
    SpecFile::from_json(&text)?.build_raw()
}

/// Build and validate; custom pairs get the default grid.
fn load_validated(path: &Path) -> Result<CopulaSpec, Error> {
    let mut spec = load_spec(path)?;
    if spec.report().is_none() {
        spec.validate(&ValidationOptions::default())?;
    }
    spec.ensure_valid()?;
    Ok(spec)
}

#[derive(Serialize)]
struct LabeledValidity<'a> {
    label: &'a str,
    #[serde(flatten)]
    report: &'a ValidityReport,
}

#[derive(Serialize)]
struct LabeledMeasures<'a> {
    label: &'a str,
    #[serde(flatten)]
    measures: &'a MeasureSet,
}

#[derive(Serialize)]
struct LabeledDependence<'a> {
    label: &'a str,
    #[serde(flatten)]
    report: &'a DependenceReport,
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable report"));
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Validate {
            spec,
            grid,
            eps,
            tol,
        } => {
            let mut spec = load_spec_raw(&spec)?;
            let opts = ValidationOptions {
                n_grid: grid,
                eps,
                tol,
                ..Default::default()
            };
            let report = spec.validate(&opts)?;
            print_json(&LabeledValidity {
                label: spec.label(),
                report: &report,
            });
            Ok(if report.verdict {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }

        Cmd::Measures { spec } => {
            let spec = load_validated(&spec)?;
            let set = measure_set(&spec, &quad_cfg()?)?;
            print_json(&LabeledMeasures {
                label: spec.label(),
                measures: &set,
            });
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Depcheck { spec } => {
            let spec = load_validated(&spec)?;
            let report = dependence_report(&spec, &DependenceOptions::default())?;
            print_json(&LabeledDependence {
                label: spec.label(),
                report: &report,
            });
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Sample {
            spec,
            n,
            seed,
            out,
            margin_x,
            margin_y,
        } => {
            let spec = load_validated(&spec)?;
            let batch = sample(&spec, n, seed)?;
            let margins = match (margin_x, margin_y) {
                (None, None) => None,
                (mx, my) => {
                    let qx = parse_quantile(mx.as_deref().unwrap_or("t"))?;
                    let qy = parse_quantile(my.as_deref().unwrap_or("t"))?;
                    Some(with_margins(
                        &batch,
                        |u| qx.eval(u).unwrap_or(f64::NAN),
                        |v| qy.eval(v).unwrap_or(f64::NAN),
                    )?)
                }
            };
            match out {
                Some(path) => {
                    let mut file = fs::File::create(&path).map_err(|e| {
                        Error::SpecFile(format!("cannot write {}: {e}", path.display()))
                    })?;
                    write_csv(&mut file, &batch, margins.as_deref())
                        .map_err(|e| Error::SpecFile(format!("write failed: {e}")))?;
                }
                None => {
                    let stdout = std::io::stdout();
                    write_csv(&mut stdout.lock(), &batch, margins.as_deref())
                        .map_err(|e| Error::SpecFile(format!("write failed: {e}")))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Family { action } => run_family(action),

        Cmd::Fit { data, family, phi } => {
            let pairs = read_pairs(&data)?;
            let fit_family = fit_family_for(&family, phi.as_deref())?;
            let result = fit_rho_inversion(&pairs, &fit_family)?;
            print_json(&result);
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Table {
            family,
            param_range,
            columns,
            sigma,
            phi,
            out,
        } => run_table(&family, &param_range, &columns, sigma, phi.as_deref(), out),
    }
}

fn parse_quantile(src: &str) -> Result<expr::Expr, Error> {
    expr::parse(src)
}

fn run_family(action: FamilyCmd) -> Result<ExitCode, Error> {
    match action {
        FamilyCmd::List => {
            #[derive(Serialize)]
            struct Families {
                families: Vec<&'static str>,
            }
            print_json(&Families {
                families: FAMILY_TAGS.to_vec(),
            });
            Ok(ExitCode::SUCCESS)
        }
        FamilyCmd::Show { tag } => {
            let info = family_info(&tag)?;
            print_json(&info);
            Ok(ExitCode::SUCCESS)
        }
        FamilyCmd::FromRhoLambda { rho, lambda } => match gpd_from_rho_lambda(rho, lambda) {
            Ok((alpha, sigma)) => {
                #[derive(Serialize)]
                struct Out {
                    family: &'static str,
                    alpha: f64,
                    sigma: f64,
                }
                print_json(&Out {
                    family: "gpd",
                    alpha,
                    sigma,
                });
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprintln!("error: {e}");
                Ok(ExitCode::from(1))
            }
        },
    }
}

#[derive(Serialize)]
struct FamilyInfo {
    family: &'static str,
    parameters: Vec<(&'static str, &'static str)>,
    generator: &'static str,
    rho: &'static str,
    lambda: &'static str,
}

fn family_info(tag: &str) -> Result<FamilyInfo, Error> {
    let info = match tag {
        "fgm" => FamilyInfo {
            family: "fgm",
            parameters: vec![("theta", "[-1, 1]")],
            generator: "theta constant, phi(t) = t*(1-t)",
            rho: "theta/3",
            lambda: "0",
        },
        "constant-theta" => FamilyInfo {
            family: "constant-theta",
            parameters: vec![("theta", "admissible range depends on phi"), ("phi", "expression in t")],
            generator: "theta constant, phi supplied",
            rho: "12*theta*Phi(1)^2 with Phi the antiderivative of phi",
            lambda: "0 when phi(1) = 0",
        },
        "ca" => FamilyInfo {
            family: "ca",
            parameters: vec![("alpha", "[0, 1]")],
            generator: "theta(t) = t^-alpha - 1, phi(t) = t",
            rho: "3*alpha/(4-alpha)",
            lambda: "alpha",
        },
        "b11" => FamilyInfo {
            family: "b11",
            parameters: vec![("sigma", "(0, 1]")],
            generator: "theta(t) = sigma*(1/t - 1), phi(t) = t",
            rho: "sigma",
            lambda: "sigma",
        },
        "gpd" => FamilyInfo {
            family: "gpd",
            parameters: vec![("alpha", "(0, 1]"), ("sigma", "alpha*sigma in (0, 1]")],
            generator: "theta(t) = sigma*(t^-alpha - 1), phi(t) = t",
            rho: "3*alpha*sigma/(4-alpha)",
            lambda: "alpha*sigma",
        },
        "uniform-k" => FamilyInfo {
            family: "uniform-k",
            parameters: vec![("alpha", "(0, 1]")],
            generator: "theta(t) = alpha*(1-t), phi(t) = t",
            rho: "3*alpha/5",
            lambda: "alpha",
        },
        "exponential-k" => FamilyInfo {
            family: "exponential-k",
            parameters: vec![("rate", "[1, inf)")],
            generator: "theta(t) = -ln(t)/rate, phi(t) = t",
            rho: "3/(4*rate)",
            lambda: "1/rate",
        },
        "durante-f" => FamilyInfo {
            family: "durante-f",
            parameters: vec![("f", "expression in t with f(1) = 1")],
            generator: "theta(t) = f(t)/t - 1, phi(t) = t",
            rho: "by quadrature",
            lambda: "by quadrature",
        },
        other => {
            return Err(Error::SpecFile(format!(
                "unknown family `{other}` (known: {})",
                FAMILY_TAGS.join(", ")
            )))
        }
    };
    Ok(info)
}

fn fit_family_for(tag: &str, phi: Option<&str>) -> Result<FitFamily, Error> {
    Ok(match tag {
        "ca" => FitFamily::Ca,
        "b11" => FitFamily::B11,
        "uniform-k" => FitFamily::UniformK,
        "fgm" => FitFamily::Fgm,
        "constant-theta" => {
            let src = phi.ok_or_else(|| {
                Error::Parameter("--family constant-theta needs --phi <expr>".into())
            })?;
            FitFamily::ConstantTheta {
                phi: expr::parse(src)?,
            }
        }
        other => {
            return Err(Error::Parameter(format!(
                "cannot fit family `{other}`: need a single parameter monotone in rho"
            )))
        }
    })
}

fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let a = cells.next().map(str::trim).unwrap_or("");
        let b = cells.next().map(str::trim).unwrap_or("");
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => pairs.push((x, y)),
            _ if idx == 0 => continue, // header row
            _ => {
                return Err(Error::Data(format!(
                    "line {} of {} is not a numeric pair: `{line}`",
                    idx + 1,
                    path.display()
                )))
            }
        }
    }
    Ok(pairs)
}

fn run_table(
    family: &str,
    param_range: &str,
    columns: &str,
    sigma: Option<f64>,
    phi: Option<&str>,
    out: Option<PathBuf>,
) -> Result<ExitCode, Error> {
    let (start, end, steps) = parse_range(param_range)?;
    let cols: Vec<&str> = columns.split(',').map(str::trim).collect();
    for c in &cols {
        if !["rho", "lambda", "beta", "mass"].contains(c) {
            return Err(Error::Parameter(format!(
                "unknown column `{c}` (known: rho, lambda, beta, mass)"
            )));
        }
    }
    let cfg = quad_cfg()?;

    let mut table = String::new();
    table.push_str("param");
    for c in &cols {
        table.push(',');
        table.push_str(c);
    }
    table.push('\n');

    for i in 0..steps {
        let p = if steps == 1 {
            start
        } else {
            start + (end - start) * i as f64 / (steps - 1) as f64
        };
        let params = table_params(family, p, sigma, phi)?;
        let spec = make_named(&params)?;
        spec.ensure_valid()?;
        let set = measure_set(&spec, &cfg)?;
        table.push_str(&format!("{p}"));
        for c in &cols {
            let value = match *c {
                "rho" => set.rho.value,
                "lambda" => set.lambda_upper.value,
                "beta" => set.beta.value,
                _ => set.diagonal_mass.value,
            };
            table.push_str(&format!(",{value}"));
        }
        table.push('\n');
    }

    match out {
        Some(path) => fs::write(&path, table)
            .map_err(|e| Error::SpecFile(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout();
            let _ = stdout.write_all(table.as_bytes());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn table_params(
    family: &str,
    p: f64,
    sigma: Option<f64>,
    phi: Option<&str>,
) -> Result<FamilyParams, Error> {
    Ok(match family {
        "fgm" => FamilyParams::Fgm { theta: p },
        "ca" => FamilyParams::CuadrasAuge { alpha: p },
        "b11" => FamilyParams::B11 { sigma: p },
        "uniform-k" => FamilyParams::UniformK { alpha: p },
        "exponential-k" => FamilyParams::ExponentialK { rate: p },
        "gpd" => FamilyParams::Gpd {
            alpha: p,
            sigma: sigma
                .ok_or_else(|| Error::Parameter("--family gpd needs --sigma".into()))?,
        },
        "constant-theta" => {
            let src = phi.ok_or_else(|| {
                Error::Parameter("--family constant-theta needs --phi <expr>".into())
            })?;
            FamilyParams::ConstantTheta {
                theta: p,
                phi: expr::parse(src)?,
            }
        }
        other => {
            return Err(Error::Parameter(format!(
                "cannot tabulate family `{other}` over a scalar range"
            )))
        }
    })
}

fn parse_range(text: &str) -> Result<(f64, f64, usize), Error> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Parameter(format!("range `{text}` must be start:end:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let end: f64 = parts[1].parse().map_err(|_| bad())?;
    let steps: usize = parts[2].parse().map_err(|_| bad())?;
    if steps == 0 {
        return Err(Error::Parameter(format!("range `{text}` is empty")));
    }
    Ok((start, end, steps))
}
