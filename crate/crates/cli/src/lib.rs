//! The `hslab` command line: radial profiles, verification suites and the
//! planar minimization.

pub mod config;
pub mod report;

mod commands;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::Outcome;
use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUITE_FAILED: i32 = 1;
pub const EXIT_SOLVER_FAILED: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "hslab", version, about = "Hardy–Sobolev extremals: profiles, identity checks and planar minimization")]
pub struct Cli {
    /// Config file with `key = value` lines and `[command]` sections
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report format on stdout
    #[arg(long, value_enum, global = true, default_value = "json")]
    pub format: Format,
    /// Worker threads for the numerical kernels
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Directory for output files (HSLAB_OUT is used when absent)
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
#[group(skip)]
pub struct ParamArgs {
    /// Dimension N
    #[arg(long)]
    pub dim: usize,
    /// Weight exponent s
    #[arg(long, group = "exponent")]
    pub s: Option<f64>,
    /// Nonlinearity exponent p
    #[arg(long, group = "exponent")]
    pub p: Option<f64>,
    /// Explicit family: 2overN or 4overN
    #[arg(long, group = "exponent")]
    pub family: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the radial problem on the ball and write the profile table
    SolveRadial {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Profile file (relative paths go under the output directory)
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Run a verification suite
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Minimize the planar quotient on a gallery polygon
    Minimize {
        /// disk, square or kidney
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long, default_value_t = 0.02)]
        h: f64,
        /// Comma-separated decreasing mesh sizes for a nested refinement study
        #[arg(long, value_delimiter = ',')]
        refine: Option<Vec<f64>>,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 4)]
        quad_order: usize,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Suite {
    /// Pohozaev identities and the curvature slope
    Pohozaev {
        #[command(flatten)]
        params: ParamArgs,
        /// Quadrature tolerance
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Pass threshold for the residuals
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Discriminant signs over a range of dimensions
    Discriminant {
        #[arg(long)]
        family: String,
        /// Inclusive range a..b
        #[arg(long, default_value = "3..40")]
        scan: String,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Mode-by-mode spectrum of the linearized operator
    Spectrum {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
        #[arg(long, default_value_t = 800)]
        ngrid: usize,
        #[arg(long, default_value_t = 1e-4)]
        threshold: f64,
    },
    /// Harmonic radius, radius bounds and conformal invariance on the planar gallery
    Planar {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        threshold: f64,
    },
}

fn subcommand_section(args: &[OsString]) -> Option<String> {
    args.iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| ["solve-radial", "verify", "minimize"].contains(a))
        .map(|s| s.to_string())
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

// flags given on the command line, by long name
fn user_flags(args: &[OsString]) -> BTreeSet<String> {
    let mut keys: BTreeSet<String> = args
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    if args.iter().any(|a| a.to_str() == Some("-o")) {
        keys.insert("output".into());
    }
    keys
}

const EXPONENT_FLAGS: [&str; 3] = ["s", "p", "family"];

/// Inserts config-file values ahead of the user's own flags. A key set on
/// the command line drops the file's value; s, p and family count as one key.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let cfg = RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let Some(section) = subcommand_section(&args) else {
        return Ok(args);
    };
    let pos = args.iter().position(|a| a.to_str() == Some(section.as_str())).unwrap();
    // verify takes its suite name first
    let insert_at = if section == "verify" { pos + 2 } else { pos + 1 };
    let insert_at = insert_at.min(args.len());

    // later sections override earlier ones
    let mut names = vec![String::new(), section.clone()];
    if section == "verify" {
        if let Some(suite) = args.get(pos + 1).and_then(|s| s.to_str()) {
            names.push(format!("verify.{suite}"));
        }
    }
    let mut merged = RunConfig::default();
    let flat = merged.sections.entry(String::new()).or_default();
    for name in &names {
        for (k, v) in cfg.sections.get(name).into_iter().flatten() {
            if EXPONENT_FLAGS.contains(&k.as_str()) {
                flat.retain(|key, _| !EXPONENT_FLAGS.contains(&key.as_str()));
            }
            flat.insert(k.clone(), v.clone());
        }
    }
    let given = user_flags(&args);
    if EXPONENT_FLAGS.iter().any(|f| given.contains(*f)) {
        flat.retain(|key, _| !EXPONENT_FLAGS.contains(&key.as_str()));
    }
    flat.retain(|key, _| !given.contains(key) && key != "config");

    let mut out = args[..insert_at].to_vec();
    out.extend(merged.as_args("").into_iter().map(OsString::from));
    out.extend_from_slice(&args[insert_at..]);
    Ok(out)
}

/// Runs the CLI and returns the exit code; stdout/stderr go to the writers.
pub fn run<W: std::io::Write, E: std::io::Write>(args: Vec<OsString>, out: &mut W, err: &mut E) -> i32 {
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    if cli.jobs == 0 {
        let _ = writeln!(err, "error: --jobs must be at least 1");
        return EXIT_USAGE;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_SOLVER_FAILED;
        }
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("HSLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let outcome = pool.install(|| commands::dispatch(&cli.command, &out_dir));
    let _ = write!(out, "{}", outcome.report.as_ref().map(|r| r.render(cli.format == Format::Csv)).unwrap_or_default());
    for line in &outcome.messages {
        let _ = writeln!(err, "{line}");
    }
    outcome.code
}
