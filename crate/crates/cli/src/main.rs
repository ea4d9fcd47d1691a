//! `ldpkit` command-line front end.

mod selftest;
mod table;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ldpkit::conjugate::{DEFAULT_TOL_1D, DEFAULT_TOL_ND};
use ldpkit::{kernel_rate, metrics, montecarlo, CadlagPath, CgfModel, Error, Kernel};

use table::{Cell, Table};

#[derive(Parser, Debug)]
#[command(name = "ldpkit", version, about = "Large-deviation rate functions, path costs and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Base seed for Monte Carlo commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Tolerance override for conjugates and root finding.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ModelKernel {
    /// Model spec, e.g. `gaussian:mu=0,sigma=1`, `cexp`, `rademacher`.
    #[arg(long)]
    model: String,
    /// Kernel spec, e.g. `affine:0,1`, `const:1`, `pwl:0:1,1:2`.
    #[arg(long)]
    kernel: String,
}

impl ModelKernel {
    fn parse(&self) -> ldpkit::Result<(CgfModel, Kernel)> {
        Ok((CgfModel::from_str(&self.model)?, Kernel::from_str(&self.kernel)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MetricName {
    Rho2,
    Rho2p,
    Rhostar,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// I_f(x) by the conjugate and explicit routes.
    Rate {
        #[command(flatten)]
        mk: ModelKernel,
        /// Evaluation point; repeat for several, `;` separates coordinates.
        #[arg(long = "x", required = true, allow_hyphen_values = true)]
        xs: Vec<String>,
    },
    /// E_f(λ) and its gradient.
    Ef {
        #[command(flatten)]
        mk: ModelKernel,
        #[arg(long = "lambda", required = true, allow_hyphen_values = true)]
        lambdas: Vec<String>,
    },
    /// The minimizing path of I_D under the constraint ∫ f dh = x.
    Minimizer {
        #[command(flatten)]
        mk: ModelKernel,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// I_D of a path file, optionally on the k-th refinement partition.
    Idcost {
        #[arg(long)]
        model: String,
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        partition: Option<u32>,
    },
    /// Distance between two path files.
    Metric {
        #[arg(value_enum)]
        name: MetricName,
        g: PathBuf,
        h: PathBuf,
    },
    /// One tilted tail estimate.
    Mc {
        #[command(flatten)]
        mk: ModelKernel,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Tail estimates over a grid of levels and sizes.
    Sweep {
        #[command(flatten)]
        mk: ModelKernel,
        /// Comma-separated levels.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        levels: Vec<f64>,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Quick invariant suites with pass/fail counts.
    Selftest,
}

enum Output {
    Table(Table),
    Raw(String),
    /// Self-test table and whether any check failed.
    Checked(Table, bool),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } => 4,
        Error::OutsideDomain { .. }
        | Error::Ambiguous(_)
        | Error::InfiniteSlope(_)
        | Error::NotStrict
        | Error::NoClosedRate(_) => 3,
        _ => 2,
    }
}

/// Worker count: explicit flag, else available parallelism capped by
/// `LDPKIT_THREADS`.
fn workers(flag: Option<usize>) -> Result<usize, Error> {
    let cap = match std::env::var("LDPKIT_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::InvalidParameter(format!("LDPKIT_THREADS={v}")))?,
        ),
        Err(_) => None,
    };
    let n = flag.unwrap_or_else(montecarlo::default_workers);
    Ok(cap.map_or(n, |c| n.min(c)).max(1))
}

fn parse_point(s: &str) -> ldpkit::Result<Vec<f64>> {
    s.split(';')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{t}`")))
        })
        .collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn read_path(p: &PathBuf) -> ldpkit::Result<CadlagPath> {
    let text = fs::read_to_string(p).map_err(|e| Error::InvalidParameter(format!("{}: {e}", p.display())))?;
    if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
    } else {
        CadlagPath::from_str(&text)
    }
}

fn tol_for(cli: &Cli, dim: usize) -> f64 {
    cli.tol.unwrap_or(if dim == 1 { DEFAULT_TOL_1D } else { DEFAULT_TOL_ND })
}

fn run(cli: &Cli) -> ldpkit::Result<Output> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("--tol must be positive, got {t}")));
        }
    }
    match &cli.command {
        Command::Rate { mk, xs } => {
            let (model, kernel) = mk.parse()?;
            let points = xs.iter().map(|s| parse_point(s)).collect::<ldpkit::Result<Vec<_>>>()?;
            let tol = tol_for(cli, model.dim());
            let mut t = Table::new(&["x", "i_f_conjugate", "i_f_explicit", "branch", "lambda_star"]);
            for x in points {
                let c = kernel_rate::i_f_conjugate(&model, &kernel, &x, tol)?;
                let e = kernel_rate::i_f_explicit(&model, &kernel, &x, tol)?;
                let lam = e.lambda_star.as_deref().or(c.lambda_star.as_deref());
                t.push(vec![
                    join(&x).into(),
                    c.value.into(),
                    e.value.into(),
                    e.branch.to_string().into(),
                    lam.map_or(Cell::Empty, |l| join(l).into()),
                ]);
            }
            Ok(Output::Table(t))
        }
        Command::Ef { mk, lambdas } => {
            let (model, kernel) = mk.parse()?;
            let mut t = Table::new(&["lambda", "e_f", "e_f_grad"]);
            for s in lambdas {
                let l = parse_point(s)?;
                let v = kernel_rate::e_f(&model, &kernel, &l)?;
                let g = kernel_rate::e_f_grad(&model, &kernel, &l).ok();
                t.push(vec![
                    join(&l).into(),
                    v.into(),
                    g.map_or(Cell::Empty, |g| join(&g).into()),
                ]);
            }
            Ok(Output::Table(t))
        }
        Command::Minimizer { mk, x } => {
            let (model, kernel) = mk.parse()?;
            let x = parse_point(x)?;
            let path = kernel_rate::minimizer(&model, &kernel, &x, tol_for(cli, model.dim()))?;
            Ok(Output::Raw(match cli.format {
                Format::Csv => path.to_text(),
                Format::Json => serde_json::to_string_pretty(&path).expect("path serializes") + "\n",
            }))
        }
        Command::Idcost { model, path, partition } => {
            let model = CgfModel::from_str(model)?;
            let h = read_path(path)?;
            let mut t = Table::new(&["var", "i_d", "i_d_partition"]);
            let part = match partition {
                Some(k) => Cell::from(h.i_d_partition(&model, &h.refinement_partition(*k))?),
                None => Cell::Empty,
            };
            t.push(vec![h.var().into(), h.i_d(&model)?.into(), part]);
            Ok(Output::Table(t))
        }
        Command::Metric { name, g, h } => {
            let (g, h) = (read_path(g)?, read_path(h)?);
            let (label, v) = match name {
                MetricName::Rho2 => ("rho2", metrics::rho_2(&g, &h)?),
                MetricName::Rho2p => ("rho2p", metrics::rho_2_prime(&g, &h)?),
                MetricName::Rhostar => ("rhostar", metrics::rho_star(&g, &h)?),
            };
            let mut t = Table::new(&["metric", "value"]);
            t.push(vec![label.into(), v.into()]);
            Ok(Output::Table(t))
        }
        Command::Mc {
            mk,
            n,
            a,
            samples,
            workers: w,
        } => curve(cli, mk, &[*a], &[*n], *samples, *w),
        Command::Sweep {
            mk,
            levels,
            ns,
            samples,
            workers: w,
        } => {
            if levels.is_empty() || ns.is_empty() {
                return Err(Error::InvalidParameter("--levels and --ns must be non-empty".into()));
            }
            curve(cli, mk, levels, ns, *samples, *w)
        }
        Command::Selftest => {
            let (t, failed) = selftest::run();
            Ok(Output::Checked(t, failed))
        }
    }
}

fn curve(cli: &Cli, mk: &ModelKernel, levels: &[f64], ns: &[usize], samples: usize, w: Option<usize>) -> ldpkit::Result<Output> {
    let (model, kernel) = mk.parse()?;
    let rows = montecarlo::empirical_rate_curve(&model, &kernel, levels, ns, samples, cli.seed, workers(w)?)?;
    let mut t = Table::new(&["n", "a", "rate_estimate", "std_error", "i_f", "exact_rate"]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.a.into(),
            r.rate_estimate.into(),
            r.std_error.into(),
            r.i_f.into(),
            r.exact_rate.into(),
        ]);
    }
    Ok(Output::Table(t))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let failed = matches!(out, Output::Checked(_, true));
    let text = match out {
        Output::Raw(s) => s,
        Output::Table(t) | Output::Checked(t, _) => match cli.format {
            Format::Csv => t.to_csv(),
            Format::Json => t.to_json(),
        },
    };
    match &cli.output {
        Some(p) => {
            if let Err(e) = fs::write(p, text) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if failed {
        ExitCode::from(4)
    } else {
        ExitCode::SUCCESS
    }
}
