use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use graphnorm_core::experiments::{self, BundledModel, Config};
use graphnorm_core::parse::{parse_count, parse_list, parse_real, parse_symbol};
use graphnorm_core::{DiagonalSequence, Error, ExperimentReport, ExtensionParameter, MomentumLine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    RiemannLimit,
    PsiInfinity,
    KatoGap,
    Closability,
    Density,
    Duality,
    Vonneumann,
    Recover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Momentum,
    Diag,
}

/// Reproduces the closed extension and restriction experiments on the bundled operator models.
#[derive(Debug, Parser)]
#[command(name = "graphnorm", version)]
struct Cli {
    command: Command,

    #[arg(long, value_enum, default_value = "momentum")]
    model: ModelKind,
    /// Symbol of the diagonal model as a polynomial in n.
    #[arg(long, default_value = "n")]
    symbol: String,
    /// Generators separated by `;`, each a sum of literals such as `kernel:0`, `e:2`, `tail:1,2`.
    #[arg(long)]
    phi: Option<String>,
    /// Functionals separated by `;`: `point:λ`, `interval-integral:a,b,c`, `rep:<vector>`.
    #[arg(long)]
    functionals: Option<String>,
    /// Right-hand sides for the resolvent round trip, separated by `;`.
    #[arg(long)]
    psi: Option<String>,
    #[arg(long = "n-list")]
    n_list: Option<String>,
    #[arg(long = "m-list")]
    m_list: Option<String>,
    #[arg(long = "K-list")]
    k_list: Option<String>,
    /// Comma list of angles in (−π, π]; `pi`, `pi/2`, `-pi/2` are accepted.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, default_value_t = 32)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Tolerance (or bound) checked by the command; each command has its own default.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn counts(s: Option<&str>, default: &[u64]) -> Result<Vec<u64>, Failure> {
    match s {
        Some(s) => Ok(parse_list(s, parse_count)?),
        None => Ok(default.to_vec()),
    }
}

fn sizes(s: Option<&str>, default: &[u64]) -> Result<Vec<usize>, Failure> {
    Ok(counts(s, default)?.into_iter().map(|n| n as usize).collect())
}

fn doubling(from: u32, to: u32) -> Vec<u64> {
    (from..=to).map(|k| 1u64 << k).collect()
}

fn configs<M: BundledModel>(
    model: &M,
    cli: &Cli,
    bundled: fn(&M) -> Vec<Config<M::Vector>>,
) -> Result<Vec<Config<M::Vector>>, Failure> {
    if let Some(fs) = &cli.functionals {
        let reps = model.parse_functionals(fs)?.into_iter().map(|l| l.representative).collect();
        return Ok(vec![Config::new(fs.clone(), reps)]);
    }
    match &cli.phi {
        Some(p) => Ok(vec![Config::new(p.clone(), model.parse_vectors(p)?)]),
        None => Ok(bundled(model)),
    }
}

fn run_model<M: BundledModel>(model: &M, cli: &Cli) -> Result<ExperimentReport, Failure> {
    let rep = match cli.command {
        Command::Density => experiments::density(
            model,
            &configs(model, cli, M::density_configs)?,
            cli.samples,
            cli.seed,
            cli.eps.unwrap_or(1e-9),
        )?,
        Command::Duality => experiments::duality(
            model,
            &configs(model, cli, M::duality_configs)?,
            cli.samples,
            cli.seed,
            cli.eps.unwrap_or(1e-8),
        )?,
        Command::Recover => experiments::recover(model, &configs(model, cli, M::recover_configs)?, cli.eps.unwrap_or(1e-8))?,
        Command::Vonneumann => {
            let phi = match &cli.phi {
                Some(p) => model.parse_vector(p)?,
                None => model.vonneumann_phi(),
            };
            let psis = match &cli.psi {
                Some(p) => model.parse_vectors(p)?,
                None => model.vonneumann_psis(),
            };
            let thetas = match &cli.theta {
                Some(t) => parse_list(t, |x| ExtensionParameter::new(parse_real(x)?))?,
                None => [0.0, std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2, 2.0, std::f64::consts::PI]
                    .iter()
                    .map(|&t| ExtensionParameter::new(t))
                    .collect::<Result<_, _>>()?,
            };
            experiments::vonneumann(model, &phi, &thetas, &psis, cli.eps.unwrap_or(1e-8))?
        }
        _ => unreachable!("momentum-only commands are dispatched separately"),
    };
    Ok(rep.param("model", model.name()))
}

fn run(cli: &Cli) -> Result<ExperimentReport, Failure> {
    match cli.command {
        Command::RiemannLimit => {
            let ns = counts(cli.n_list.as_deref(), &[10, 100, 1000, 10_000])?;
            Ok(experiments::riemann_limit(&ns, cli.eps.unwrap_or(1e-3))?)
        }
        Command::PsiInfinity => Ok(experiments::psi_infinity_report()?),
        Command::KatoGap => {
            let ns = sizes(cli.n_list.as_deref(), &doubling(1, 10))?;
            Ok(experiments::kato_gap(&ns, cli.eps.unwrap_or(0.05))?)
        }
        Command::Closability => {
            let ms = sizes(cli.m_list.as_deref(), &doubling(0, 10))?;
            let ks = sizes(cli.k_list.as_deref(), &doubling(0, 5))?;
            Ok(experiments::closability(&ms, &ks, cli.eps.unwrap_or(0.05))?)
        }
        _ => match cli.model {
            ModelKind::Momentum => run_model(&MomentumLine, cli),
            ModelKind::Diag => {
                let d = DiagonalSequence::new(parse_symbol(&cli.symbol)?);
                Ok(run_model(&d, cli)?.param("symbol", &cli.symbol))
            }
        },
    }
}

fn write_outputs(cli: &Cli, rep: &ExperimentReport) -> Result<(), String> {
    let json = rep.to_json();
    match &cli.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))?,
        None => println!("{json}"),
    }
    if let Some(path) = &cli.csv {
        let (header, records) = rep.csv_table();
        let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
        w.write_record(&header).map_err(|e| e.to_string())?;
        for r in records {
            w.write_record(&r).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rep = match run(&cli) {
        Ok(rep) => rep,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    if let Err(msg) = write_outputs(&cli, &rep) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let status = if rep.pass() { "pass" } else { "FAIL" };
    eprintln!(
        "{}: {status} (max residual {:.3e}, achieved {:.6e})",
        rep.command, rep.summary.max_residual, rep.summary.achieved
    );
    if rep.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
