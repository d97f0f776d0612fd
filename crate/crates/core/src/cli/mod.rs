//! The `packspectra` command line.
//!
//! Every subcommand takes flags and an optional flat `key=value` file given
//! with `--config`. File entries become flags placed before the real ones, so
//! flags win and unknown keys are rejected like unknown flags. Each run
//! writes `report.json` (config echo, results, provenance) plus CSV tables
//! and SVG figures into `--out`.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a checked inequality
//! fails.

mod commands;
pub mod svg;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "PACKSPECTRA_THREADS";

#[derive(Parser, Debug)]
#[command(name = "packspectra", version, about = "Packing spectra, extremal packings and geometric inequality checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Root seed of every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "packspectra-out")]
    pub out: PathBuf,
    /// Comma-separated output formats among json, csv and svg.
    #[arg(long, default_value = "json,csv")]
    pub format: String,
    /// Flat key=value file of settings; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// A flat 2-torus: `torus` (rectangular or by basis) or `hex`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct TorusArgs {
    /// torus or hex.
    #[arg(long, default_value = "torus")]
    pub space: String,
    /// Side lengths of a rectangular torus, comma separated.
    #[arg(long, default_value = "1,1")]
    pub sides: String,
    /// Basis vectors as `a,b;c,d`; takes precedence over --sides.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    /// Area of a hexagonal torus.
    #[arg(long, default_value_t = 1.0)]
    pub area: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SpaceArgs {
    /// circle, interval, torus, hex, box or sphere.
    #[arg(long, default_value = "circle")]
    pub space: String,
    /// Length of a circle or interval.
    #[arg(long, default_value_t = 1.0)]
    pub len: f64,
    /// Side lengths of a rectangular torus or a box, comma separated.
    #[arg(long, default_value = "1,1")]
    pub sides: String,
    /// Torus basis vectors as `a,b;c,d`; takes precedence over --sides.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    /// Area of a hexagonal torus.
    #[arg(long, default_value_t = 1.0)]
    pub area: f64,
    /// Dimension of a round sphere.
    #[arg(long, default_value_t = 2)]
    pub sphere_dim: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub mcmc_steps: usize,
    #[arg(long, default_value_t = 600)]
    pub landmarks: usize,
    /// Rips scale in landmark covering radii.
    #[arg(long, default_value_t = 3.0)]
    pub eps_factor: f64,
    #[arg(long, default_value_t = 2)]
    pub max_dim: usize,
    /// Minimum separation of samples; derived from a pilot run when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hard_core: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub hard_core_frac: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CurveArgs {
    /// Polyline file; with a single file both components come from it.
    #[arg(long)]
    pub w: PathBuf,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wprime: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Persistence barcode of the packing energy on configuration space.
    Spectra {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        #[serde(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Unordered configurations.
        #[arg(long)]
        quotient: bool,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Vanishing region of a class under several pair energies.
    Surface {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        #[serde(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Point pairs, e.g. `0-1,0-2`.
        #[arg(long, default_value = "0-1")]
        pairs: String,
        /// `all:DIM` or `essential:DIM:INDEX`.
        #[arg(long, default_value = "essential:1:0")]
        class: String,
        #[arg(long, default_value_t = 1.8)]
        lo: f64,
        #[arg(long, default_value_t = 2.2)]
        hi: f64,
        #[arg(long, default_value_t = 41)]
        steps: usize,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Largest radius of N equal balls.
    Rmax {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[command(flatten)]
        #[serde(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Normalised packing densities over several N and their limit.
    Packconst {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        /// Increasing ball counts.
        #[arg(long, default_value = "2,3,4,6,8,12,16")]
        ns: String,
        #[command(flatten)]
        #[serde(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Zero-set lengths of functions bisecting N packed disks on a torus.
    Zerosets {
        #[command(flatten)]
        #[serde(flatten)]
        space: TorusArgs,
        #[arg(long, default_value = "4,9,16,25,36")]
        ns: String,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[command(flatten)]
        #[serde(flatten)]
        budget: BudgetArgs,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 32)]
        starts: usize,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// One bisection of N packed disks by N + 1 trigonometric functions.
    Bisect {
        #[command(flatten)]
        #[serde(flatten)]
        space: TorusArgs,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[command(flatten)]
        #[serde(flatten)]
        budget: BudgetArgs,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 32)]
        starts: usize,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Lowest Laplace eigenvalues on a periodic grid.
    Laplace {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 256)]
        m: usize,
        #[arg(long, default_value_t = 16)]
        k: usize,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// `e_N(X) >= min e_1(U_i)` for circle partitions.
    Localize {
        #[arg(long, default_value_t = 1.0)]
        len: f64,
        #[arg(long, default_value_t = 512)]
        m: usize,
        /// Explicit arc lengths summing to --len.
        #[arg(long)]
        lengths: Option<String>,
        /// Number of random partitions when no lengths are given.
        #[arg(long, default_value_t = 100)]
        partitions: usize,
        /// Largest piece count of a random partition.
        #[arg(long, default_value_t = 8)]
        max_pieces: usize,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Power-law fit of the eigenvalue counting function.
    Weyl {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 256)]
        m: usize,
        #[arg(long, default_value_t = 100.0)]
        e_lo: f64,
        #[arg(long, default_value_t = 3000.0)]
        e_hi: f64,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Linking number by three methods.
    Linking {
        #[command(flatten)]
        #[serde(flatten)]
        curves: CurveArgs,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// `length(W) >= 2 pi dist(W, W')` for linked curves.
    Gehring {
        #[command(flatten)]
        #[serde(flatten)]
        curves: CurveArgs,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Radial projection of a plane curve into a square grid's 1-skeleton.
    Ff {
        #[arg(long)]
        curve: PathBuf,
        /// Cell size; defaults to --cell-factor times the curve length.
        #[arg(long)]
        cell: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        cell_factor: f64,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Monte Carlo tube volumes and normalised Minkowski lengths.
    Tubes {
        /// Curve file (3 columns); defaults to the preset.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// `equator` (on the sphere) or `circle` (unit circle in space).
        #[arg(long, default_value = "equator")]
        preset: String,
        /// `sphere` or `euclidean`; presets choose their own.
        #[arg(long)]
        ambient: Option<String>,
        #[arg(long, default_value = "0.3,0.15,0.075")]
        deltas: String,
        #[arg(long, default_value_t = 400_000)]
        samples: usize,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Min-max length over perturbed latitude sweepouts of the 2-sphere.
    Waist {
        #[arg(long, default_value_t = 4)]
        search_level: usize,
        #[arg(long, default_value_t = 5)]
        mesh_level: usize,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 0.2)]
        radius: f64,
        #[arg(long, default_value_t = 120)]
        iterations: u64,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Systole and `systole^2 / area` of a flat 2-torus.
    Systole {
        #[command(flatten)]
        #[serde(flatten)]
        space: TorusArgs,
        /// Integral Gram matrix `a,b,c` for the exact ratio.
        #[arg(long)]
        gram: Option<String>,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Spectra { common, .. }
            | Command::Surface { common, .. }
            | Command::Rmax { common, .. }
            | Command::Packconst { common, .. }
            | Command::Zerosets { common, .. }
            | Command::Bisect { common, .. }
            | Command::Laplace { common, .. }
            | Command::Localize { common, .. }
            | Command::Weyl { common, .. }
            | Command::Linking { common, .. }
            | Command::Gehring { common, .. }
            | Command::Ff { common, .. }
            | Command::Tubes { common, .. }
            | Command::Waist { common, .. }
            | Command::Systole { common, .. } => common,
        }
    }
}

/// A CSV table: header and rows of already formatted cells.
#[derive(Debug, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }
}

/// Float cell with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// What a subcommand hands back for emission.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: serde_json::Value,
    pub tables: Vec<Table>,
    pub figures: Vec<(String, String)>,
    pub summary: String,
    /// Set when a checked inequality fails.
    pub failure: Option<String>,
}

#[derive(Serialize)]
struct Provenance {
    version: &'static str,
    seed: u64,
    wall_time_seconds: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    config: BTreeMap<String, String>,
    results: &'a serde_json::Value,
    assertion_failure: &'a Option<String>,
    provenance: Provenance,
}

const SUBCOMMANDS: [&str; 15] = [
    "spectra", "surface", "rmax", "packconst", "zerosets", "bisect", "laplace", "localize", "weyl", "linking", "gehring", "ff", "tubes", "waist",
    "systole",
];

/// Reads a `key=value` file; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return invalid(format!("config line {}: expected key=value", i + 1));
        };
        let k = k.trim();
        if k.is_empty() || k.starts_with('-') {
            return invalid(format!("config line {}: bad key", i + 1));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splices the `--config` file into the argument list as flags right after
/// the subcommand name.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::InvalidInput(format!("config {path}: {e}")))?;
    let Some(pos) = args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else { return Ok(args) };
    let mut extra = Vec::new();
    for (k, v) in parse_config(&text)? {
        let flag = format!("--{}", k.replace('_', "-"));
        match v.as_str() {
            "true" => extra.push(flag),
            "false" => {}
            _ => {
                extra.push(flag);
                extra.push(v);
            }
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn parse(args: Vec<String>) -> std::result::Result<Cli, clap::Error> {
    let mut cmd = Cli::command().args_override_self(true);
    for name in SUBCOMMANDS {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    let matches = cmd.try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

/// Flattens the resolved arguments into `key=value` strings that re-create
/// the run through `--config`.
fn config_echo(command: &Command) -> (String, BTreeMap<String, String>) {
    fn flatten(v: &serde_json::Value, out: &mut BTreeMap<String, String>) {
        if let serde_json::Value::Object(m) = v {
            for (k, v) in m {
                match v {
                    serde_json::Value::Object(_) => flatten(v, out),
                    serde_json::Value::Null => {}
                    serde_json::Value::String(s) => {
                        out.insert(k.clone(), s.clone());
                    }
                    other => {
                        out.insert(k.clone(), other.to_string());
                    }
                }
            }
        }
    }
    let value = serde_json::to_value(command).unwrap_or_default();
    let mut map = BTreeMap::new();
    let mut name = String::new();
    if let serde_json::Value::Object(m) = &value {
        if let Some((k, v)) = m.iter().next() {
            name = k.clone();
            flatten(v, &mut map);
        }
    }
    (name, map)
}

fn write_outputs(dir: &Path, formats: &[&str], report: &str, outcome: &Outcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if formats.contains(&"json") {
        std::fs::write(dir.join("report.json"), report)?;
    }
    if formats.contains(&"csv") {
        for t in &outcome.tables {
            let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", t.name))).map_err(|e| Error::InvalidInput(e.to_string()))?;
            w.write_record(&t.header).map_err(|e| Error::InvalidInput(e.to_string()))?;
            for r in &t.rows {
                w.write_record(r).map_err(|e| Error::InvalidInput(e.to_string()))?;
            }
            w.flush()?;
        }
    }
    if formats.contains(&"svg") {
        for (name, body) in &outcome.figures {
            std::fs::write(dir.join(format!("{name}.svg")), body)?;
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer")))?;
    if n == 0 {
        return invalid(format!("{THREADS_ENV} must be a positive integer"));
    }
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs the command line given as `args` (program name first) and returns
/// the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_INVALID;
    }
    let cli = match expand_config(args).map(parse) {
        Ok(Ok(cli)) => cli,
        Ok(Err(e)) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion
                | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_INVALID,
            };
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let common = cli.command.common().clone();
    let formats: Vec<&str> = common.format.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if let Some(bad) = formats.iter().find(|f| !["json", "csv", "svg"].contains(f)) {
        eprintln!("error: unknown output format {bad}");
        return EXIT_INVALID;
    }
    let start = std::time::Instant::now();
    let outcome = match commands::execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let (name, config) = config_echo(&cli.command);
    let report = Report {
        command: &name,
        config,
        results: &outcome.results,
        assertion_failure: &outcome.failure,
        provenance: Provenance { version: env!("CARGO_PKG_VERSION"), seed: common.seed, wall_time_seconds: start.elapsed().as_secs_f64() },
    };
    let text = match serde_json::to_string_pretty(&report) {
        Ok(t) => t + "\n",
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    if let Err(e) = write_outputs(&common.out, &formats, &text, &outcome) {
        eprintln!("error: cannot write {}: {e}", common.out.display());
        return EXIT_INVALID;
    }
    println!("{}", outcome.summary);
    match &outcome.failure {
        Some(msg) => {
            eprintln!("assertion failed: {msg}");
            EXIT_ASSERTION
        }
        None => EXIT_OK,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let c = parse_config("# c\nn = 3\n\nquotient=true\n").unwrap();
        assert_eq!(c, vec![("n".into(), "3".into()), ("quotient".into(), "true".into())]);
        assert!(parse_config("novalue\n").is_err());
        assert!(parse_config("=3\n").is_err());
    }

    #[test]
    fn barcode_tables_have_one_row_per_interval() {
        let dir = tempfile::tempdir().unwrap();
        let mut full = Table::new("full", &["dim", "birth", "death"]);
        for k in 0..3 {
            full.rows.push(vec!["0".into(), num(-(k as f64)), num(f64::INFINITY)]);
        }
        let outcome = Outcome { tables: vec![full, Table::new("empty", &["dim", "birth", "death"])], ..Default::default() };
        write_outputs(dir.path(), &["csv"], "{}", &outcome).unwrap();
        let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(read("full.csv").lines().count(), 4);
        assert_eq!(read("empty.csv"), "dim,birth,death\n");
        assert!(!dir.path().join("report.json").exists());
    }

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(-2.5), "-2.5000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "n = 7\nquotient = true\nsamples = 100\n").unwrap();
        let args = ["packspectra", "spectra", "--config", cfg.to_str().unwrap(), "--n", "3"].map(String::from).to_vec();
        let cli = parse(expand_config(args).unwrap()).unwrap();
        match cli.command {
            Command::Spectra { n, quotient, sampling, .. } => {
                assert_eq!(n, 3);
                assert!(quotient);
                assert_eq!(sampling.samples, 100);
            }
            other => panic!("{other:?}"),
        }
        std::fs::write(&cfg, "bogus = 1\n").unwrap();
        let args = ["packspectra", "spectra", "--config", cfg.to_str().unwrap()].map(String::from).to_vec();
        assert!(parse(expand_config(args).unwrap()).is_err());
    }
}
