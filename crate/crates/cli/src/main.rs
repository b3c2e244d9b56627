//! `nodal`: command-line frontend for nodal-core.
//!
//! Exit codes: 0 success, 1 I/O or parse error, 2 hypothesis violation (or a
//! surface with more than 1% degenerate points), 3 property failure.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nodal_core::linalg::{DEFAULT_ENTRY_TOL, DEFAULT_GAP_TOL, DEFAULT_ZERO_TOL};
use nodal_core::magnetic::DEFAULT_FD_STEP;
use nodal_core::Tolerances;

#[derive(Parser, Debug)]
#[command(name = "nodal", version, about = "Nodal counts and cycle intersection forms of graph eigenvectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Nodal count, surplus and intersection form for each requested eigenpair.
    Nodal(MatrixArgs),
    /// As `nodal`, plus the bordered-matrix and gauge-splitting routes.
    Verify(MatrixArgs),
    /// Hessian of the magnetic perturbation: analytic, finite-difference, Morse index.
    Magnetic(MatrixArgs),
    /// CSV of the perturbed spectrum over a grid of fluxes.
    Surface(SurfaceArgs),
    /// Fixed points of a Kuramoto network and their stability.
    Kuramoto(KuramotoArgs),
    /// Randomized property suites.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Zero-detection tolerance, relative to max(1, ‖M‖).
    #[arg(long = "tol", default_value_t = DEFAULT_ZERO_TOL, value_parser = positive)]
    zero_tol: f64,
    /// Eigenvalue simplicity tolerance, relative to ‖H‖.
    #[arg(long, default_value_t = DEFAULT_GAP_TOL, value_parser = positive)]
    gap_tol: f64,
    /// Threshold below which an eigenvector entry counts as zero.
    #[arg(long, default_value_t = DEFAULT_ENTRY_TOL, value_parser = positive)]
    entry_tol: f64,
    /// Worker threads for grid and multistart work (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        Tolerances { zero_tol: self.zero_tol, gap_tol: self.gap_tol, entry_tol: self.entry_tol }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct MatrixArgs {
    /// Matrix file: {"graph": {"n", "edges"}, "matrix": [[..]], "frame"?: [[..]]}.
    #[arg(long)]
    input: PathBuf,
    /// 1-based eigen index, or `all`.
    #[arg(long, default_value = "all")]
    k: KSpec,
    /// Finite-difference step in flux (magnetic only).
    #[arg(long, default_value_t = DEFAULT_FD_STEP, value_parser = positive)]
    fd_step: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    /// Matrix file, same format as for `nodal`.
    #[arg(long)]
    input: PathBuf,
    /// 1-based eigen index.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Grid resolution `NxM` (`N` alone when the Betti number is 1).
    #[arg(long, default_value = "41x41")]
    grid: GridSpec,
    /// Flux range `a:b`; `pi` is accepted, e.g. `-pi:pi`.
    #[arg(long, default_value = "-pi:pi", allow_hyphen_values = true)]
    range: RangeSpec,
    /// 1-based flux axes to sweep when the Betti number exceeds 2, e.g. `1,3`.
    #[arg(long, value_delimiter = ',')]
    axes: Option<Vec<usize>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct KuramotoArgs {
    /// System file: {"graph", "a"?, "omega", "gamma", "frame"?}.
    #[arg(long)]
    input: PathBuf,
    /// Number of random Newton starts.
    #[arg(long, default_value_t = 10_000)]
    starts: usize,
    /// Seed for the starts; NODAL_SEED overrides it when set.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Seed; NODAL_SEED overrides it when set.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random instances per suite.
    #[arg(long, default_value_t = 200)]
    instances: usize,
    /// Suites to run (default: all).
    #[arg(long, value_delimiter = ',')]
    suite: Option<Vec<String>>,
    /// Flip the sign of Φ on this edge before checking (fault injection).
    #[arg(long, hide = true)]
    inject_fault: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KSpec {
    All,
    One(usize),
}

impl std::str::FromStr for KSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(KSpec::All);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected a positive index or `all`, got {s:?}")),
            Ok(k) => Ok(KSpec::One(k)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GridSpec {
    nx: usize,
    ny: usize,
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v >= 2)
                .ok_or_else(|| format!("grid resolution must be an integer ≥ 2, got {t:?}"))
        };
        match s.split_once(['x', 'X']) {
            Some((a, b)) => Ok(GridSpec { nx: parse(a)?, ny: parse(b)? }),
            None => {
                let n = parse(s)?;
                Ok(GridSpec { nx: n, ny: n })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RangeSpec(f64, f64);

fn parse_angle(t: &str) -> Result<f64, String> {
    let t = t.trim();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t),
    };
    let value = match body.to_ascii_lowercase().as_str() {
        "pi" => std::f64::consts::PI,
        other => {
            if let Some(m) = other.strip_suffix("pi") {
                m.trim_end_matches('*')
                    .parse::<f64>()
                    .map_err(|_| format!("bad angle {t:?}"))?
                    * std::f64::consts::PI
            } else {
                other.parse::<f64>().map_err(|_| format!("bad angle {t:?}"))?
            }
        }
    };
    Ok(sign * value)
}

impl std::str::FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected `a:b`, got {s:?}"))?;
        let (a, b) = (parse_angle(a)?, parse_angle(b)?);
        if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
            return Err(format!("empty range {a}:{b}"));
        }
        Ok(RangeSpec(a, b))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

/// NODAL_SEED, when set, wins over `--seed`.
fn effective_seed(flag: u64) -> Result<u64, commands::Failure> {
    match std::env::var("NODAL_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| commands::Failure::io(format!("NODAL_SEED: not an unsigned integer: {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn configure_pool(jobs: Option<usize>) -> Result<(), commands::Failure> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(commands::Failure::io("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| commands::Failure::io(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, commands::Failure> {
    match cli.command {
        Command::Nodal(a) => {
            configure_pool(a.common.jobs)?;
            commands::nodal(&a.input, a.k, &a.common, false)
        }
        Command::Verify(a) => {
            configure_pool(a.common.jobs)?;
            commands::nodal(&a.input, a.k, &a.common, true)
        }
        Command::Magnetic(a) => {
            configure_pool(a.common.jobs)?;
            commands::magnetic(&a.input, a.k, a.fd_step, &a.common)
        }
        Command::Surface(a) => {
            configure_pool(a.common.jobs)?;
            commands::surface(&a)
        }
        Command::Kuramoto(a) => {
            configure_pool(a.common.jobs)?;
            let seed = effective_seed(a.seed)?;
            commands::kuramoto(&a.input, a.starts, seed, &a.common)
        }
        Command::Selftest(a) => {
            configure_pool(a.common.jobs)?;
            let seed = effective_seed(a.seed)?;
            commands::selftest(&a, seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("nodal: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_spec() {
        assert_eq!("all".parse::<KSpec>().unwrap(), KSpec::All);
        assert_eq!("3".parse::<KSpec>().unwrap(), KSpec::One(3));
        assert!("0".parse::<KSpec>().is_err());
        assert!("x".parse::<KSpec>().is_err());
    }

    #[test]
    fn grid_spec() {
        assert_eq!("41x21".parse::<GridSpec>().unwrap(), GridSpec { nx: 41, ny: 21 });
        assert_eq!("5".parse::<GridSpec>().unwrap(), GridSpec { nx: 5, ny: 5 });
        assert!("1x4".parse::<GridSpec>().is_err());
    }

    #[test]
    fn range_spec() {
        let r: RangeSpec = "-pi:pi".parse().unwrap();
        assert_eq!(r, RangeSpec(-std::f64::consts::PI, std::f64::consts::PI));
        let r: RangeSpec = "-0.5:2pi".parse().unwrap();
        assert_eq!(r, RangeSpec(-0.5, 2.0 * std::f64::consts::PI));
        assert!("1:1".parse::<RangeSpec>().is_err());
        assert!("1".parse::<RangeSpec>().is_err());
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
