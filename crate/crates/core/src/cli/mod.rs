//! Command-line driver: configuration, subcommands and run manifests.
//!
//! Each subcommand writes one CSV or JSON file plus `<output>.manifest.json`
//! holding the configuration, crate version, wall time and a SHA-256 of the
//! output.

mod commands;
pub mod output;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::error::RspError;
use crate::rsp_protocol::{FluctuationSpec, OutcomeRule};

pub use output::{format_g12, Cell, Table};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "RSP_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    /// Optimal squeezing time and fidelity with the spin-EPR state.
    OptimalTime,
    /// Fidelity and pair variances over squeezing time.
    Squeeze,
    /// All outcomes at one target direction.
    Protocol,
    /// Outcome probabilities over the polar angle.
    ProbDist,
    /// Bob's spin averages and errors over target directions.
    SpinSweep,
    /// Spin Wigner function of Bob's conditional state.
    WignerMap,
    /// Average (and post-selected) error over target directions.
    ErrorSweep,
    /// Spin averages under atom-number fluctuations.
    Fluctuation,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        use Subcommand::*;
        match self {
            OptimalTime => "optimal-time",
            Squeeze => "squeeze",
            Protocol => "protocol",
            ProbDist => "prob-dist",
            SpinSweep => "spin-sweep",
            WignerMap => "wigner-map",
            ErrorSweep => "error-sweep",
            Fluctuation => "fluctuation",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, false).ok()
    }

    /// Fields accepted beyond `output` and `format`.
    fn fields(self) -> &'static [&'static str] {
        use Subcommand::*;
        match self {
            OptimalTime => &["n"],
            Squeeze => &["n", "tau", "grid"],
            Protocol => &["n", "tau", "theta", "phi", "resource"],
            ProbDist => &["n", "tau", "grid", "resource"],
            SpinSweep => &["n", "tau", "k", "phi", "grid", "resource"],
            WignerMap => &["n", "tau", "theta", "phi", "k", "grid", "resource"],
            ErrorSweep => &["n", "tau", "theta", "phi", "k-cut", "grid", "resource"],
            Fluctuation => &["mean", "sigma0", "truncation", "rule", "tau", "phi", "grid"],
        }
    }

    fn required(self) -> &'static [&'static str] {
        use Subcommand::*;
        match self {
            Protocol => &["n", "theta", "phi"],
            WignerMap => &["n", "theta", "phi", "k"],
            Fluctuation => &["mean", "sigma0"],
            _ => &["n"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    /// Frame-rotated two-axis two-spin squeezed state.
    Squeezed,
    /// Ideal spin-EPR state.
    Epr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Grid resolution: `"A"` for a line of `A` points, `"AxB"` for `A` polar
/// by `B` azimuthal nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridSpec {
    Line(usize),
    Sphere(usize, usize),
}

impl Serialize for GridSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Line(a) => write!(f, "{a}"),
            GridSpec::Sphere(a, b) => write!(f, "{a}x{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub n_atoms: Option<usize>,
    pub tau: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub k: Option<usize>,
    pub k_cut: Option<usize>,
    pub grid: Option<GridSpec>,
    pub resource: Resource,
    pub fluctuation: Option<FluctuationSpec>,
    pub output_path: PathBuf,
    pub format: Format,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: &'static str,
    /// Squeezing time actually used, when the pipeline has one.
    pub tau_used: Option<f64>,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug)]
pub enum CliError {
    /// Help or version text requested; not a failure.
    Info(String),
    Usage(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn from_library(context: Subcommand, err: RspError) -> Self {
        let msg = format!("{}: {err}", context.name());
        match err {
            RspError::Parameter { .. }
            | RspError::FockIndex { .. }
            | RspError::AtomNumber { .. }
            | RspError::PostSelectionCut { .. } => CliError::Usage(msg),
            _ => CliError::Numerical(msg),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Info(s) => write!(f, "{s}"),
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Io(s) => write!(f, "I/O error: {s}"),
            CliError::Numerical(s) => write!(f, "numerical error: {s}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Remote state preparation between two spin ensembles.
///
/// Angles are radians, or multiples of pi with a `pi:` prefix (`pi:0.5`).
/// A config file holds one `key = value` per line using the flag names
/// without dashes (`k-cut` or `k_cut`), plus optionally `subcommand = ...`;
/// flags override file values.
#[derive(Parser, Debug)]
#[command(name = "spin-rsp", version)]
struct Flags {
    /// Subcommand to run.
    #[arg(value_enum)]
    subcommand: Option<Subcommand>,
    /// Atoms per ensemble.
    #[arg(long)]
    n: Option<String>,
    /// Squeezing time J t / hbar [default: optimal time for N; for squeeze, the
    /// largest time, default twice the optimal time].
    #[arg(long)]
    tau: Option<String>,
    /// Target polar angle.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Target azimuth [default for line cuts: pi:-0.25].
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Alice's outcome (wigner-map; restricts spin-sweep to one outcome).
    #[arg(long)]
    k: Option<String>,
    /// Post-selection cutoff, 2 k_cut < N.
    #[arg(long = "k-cut")]
    k_cut: Option<String>,
    /// Resolution "A" or "AxB" [defaults: 61 points in theta for line cuts,
    /// 61x61 for sweeps, 121x241 for wigner-map].
    #[arg(long)]
    grid: Option<String>,
    /// Entangled resource: squeezed or epr [default: squeezed].
    #[arg(long)]
    resource: Option<String>,
    /// Gaussian width of the atom-number distribution.
    #[arg(long)]
    sigma0: Option<String>,
    /// Mean atom number.
    #[arg(long)]
    mean: Option<String>,
    /// Support half-width in units of sigma0 [default: 4].
    #[arg(long)]
    truncation: Option<String>,
    /// Alice's outcome per shot: high (k = N_A), low (k = 0) or an integer
    /// [default: high].
    #[arg(long)]
    rule: Option<String>,
    /// Output file; the manifest goes to <output>.manifest.json.
    #[arg(long)]
    output: Option<String>,
    /// csv or json [default: csv].
    #[arg(long)]
    format: Option<String>,
    /// Config file with key = value lines.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn entries(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("n", &self.n),
            ("tau", &self.tau),
            ("theta", &self.theta),
            ("phi", &self.phi),
            ("k", &self.k),
            ("k-cut", &self.k_cut),
            ("grid", &self.grid),
            ("resource", &self.resource),
            ("sigma0", &self.sigma0),
            ("mean", &self.mean),
            ("truncation", &self.truncation),
            ("rule", &self.rule),
            ("output", &self.output),
            ("format", &self.format),
        ]
    }
}

const FILE_KEYS: &[&str] = &[
    "subcommand", "n", "tau", "theta", "phi", "k", "k-cut", "grid", "resource", "sigma0", "mean",
    "truncation", "rule", "output", "format",
];

fn parse_flags<I, T>(argv: I) -> Result<Flags, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("spin-rsp")).chain(argv.into_iter().map(Into::into));
    Flags::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Info(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    })
}

fn parse_file(contents: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in contents.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(CliError::usage(format!("config line {}: unknown field `{key}`", lineno + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Angle in radians, or `pi:x` for `x * pi`.
pub fn parse_angle(name: &str, s: &str) -> Result<f64, CliError> {
    let value = match s.strip_prefix("pi:") {
        Some(rest) => rest.trim().parse::<f64>().map(|x| x * PI),
        None => s.parse::<f64>(),
    }
    .map_err(|_| CliError::usage(format!("`{name}`: expected an angle, got `{s}`")))?;
    if !value.is_finite() {
        return Err(CliError::usage(format!("`{name}`: angle must be finite")));
    }
    Ok(value)
}

fn parse_real(name: &str, s: &str) -> Result<f64, CliError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::usage(format!("`{name}`: expected a number, got `{s}`"))),
    }
}

fn parse_count(name: &str, s: &str) -> Result<usize, CliError> {
    s.parse::<usize>()
        .map_err(|_| CliError::usage(format!("`{name}`: expected a non-negative integer, got `{s}`")))
}

fn parse_grid(s: &str) -> Result<GridSpec, CliError> {
    let bad = || CliError::usage(format!("`grid`: expected \"A\" or \"AxB\", got `{s}`"));
    let grid = match s.split_once(['x', 'X']) {
        Some((a, b)) => GridSpec::Sphere(
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => GridSpec::Line(s.trim().parse().map_err(|_| bad())?),
    };
    match grid {
        GridSpec::Line(a) if a >= 2 => Ok(grid),
        GridSpec::Sphere(a, b) if a >= 2 && b >= 1 => Ok(grid),
        _ => Err(CliError::usage(format!("`grid`: {s} is too small"))),
    }
}

/// Builds a validated configuration from command-line arguments (without the
/// program name) and optional config-file contents.
pub fn parse_config(argv: &[String], file: Option<&str>) -> Result<ExperimentConfig, CliError> {
    let flags = parse_flags(argv)?;
    let mut raw = match file {
        Some(contents) => parse_file(contents)?,
        None => BTreeMap::new(),
    };
    let file_subcommand = raw.remove("subcommand");
    for (key, value) in flags.entries() {
        if let Some(v) = value {
            raw.insert(key.to_string(), v.clone());
        }
    }
    let subcommand = match (flags.subcommand, file_subcommand) {
        (Some(s), _) => s,
        (None, Some(s)) => Subcommand::parse(&s)
            .ok_or_else(|| CliError::usage(format!("unknown subcommand `{s}`")))?,
        (None, None) => return Err(CliError::usage("missing subcommand")),
    };

    let allowed = subcommand.fields();
    for key in raw.keys() {
        if key != "output" && key != "format" && !allowed.contains(&key.as_str()) {
            return Err(CliError::usage(format!(
                "`{key}` is not accepted by {}",
                subcommand.name()
            )));
        }
    }
    for key in subcommand.required() {
        if !raw.contains_key(*key) {
            return Err(CliError::usage(format!(
                "{} requires `{key}`",
                subcommand.name()
            )));
        }
    }
    let get = |key: &str| raw.get(key).map(String::as_str);

    let n_atoms = get("n").map(|s| parse_count("n", s)).transpose()?;
    let tau = get("tau").map(|s| parse_real("tau", s)).transpose()?;
    let theta = get("theta").map(|s| parse_angle("theta", s)).transpose()?;
    let phi = get("phi").map(|s| parse_angle("phi", s)).transpose()?;
    let k = get("k").map(|s| parse_count("k", s)).transpose()?;
    let k_cut = get("k-cut").map(|s| parse_count("k-cut", s)).transpose()?;
    let grid = get("grid").map(parse_grid).transpose()?;
    let resource = match get("resource") {
        None | Some("squeezed") => Resource::Squeezed,
        Some("epr") => Resource::Epr,
        Some(other) => {
            return Err(CliError::usage(format!(
                "`resource`: expected squeezed or epr, got `{other}`"
            )))
        }
    };
    let format = match get("format") {
        None | Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(other) => {
            return Err(CliError::usage(format!(
                "`format`: expected csv or json, got `{other}`"
            )))
        }
    };
    let output_path = PathBuf::from(
        get("output").ok_or_else(|| CliError::usage(format!("{} requires `output`", subcommand.name())))?,
    );

    let fluctuation = if subcommand == Subcommand::Fluctuation {
        let mean = parse_real("mean", get("mean").expect("required"))?;
        let sigma0 = parse_real("sigma0", get("sigma0").expect("required"))?;
        let rule = match get("rule") {
            None | Some("high") => OutcomeRule::ExtremalHigh,
            Some("low") => OutcomeRule::ExtremalLow,
            Some(s) => OutcomeRule::Fixed(parse_count("rule", s).map_err(|_| {
                CliError::usage(format!("`rule`: expected high, low or an integer, got `{s}`"))
            })?),
        };
        let mut spec = FluctuationSpec::new(mean, sigma0, rule)
            .map_err(|e| CliError::from_library(subcommand, e))?;
        if let Some(t) = get("truncation") {
            spec.truncation = parse_real("truncation", t)?;
            if spec.truncation <= 0.0 {
                return Err(CliError::usage("`truncation`: must be positive"));
            }
        }
        Some(spec)
    } else {
        None
    };

    let config = ExperimentConfig {
        subcommand,
        n_atoms,
        tau,
        theta,
        phi,
        k,
        k_cut,
        grid,
        resource,
        fluctuation,
        output_path,
        format,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(c: &ExperimentConfig) -> Result<(), CliError> {
    let name = c.subcommand.name();
    if let Some(n) = c.n_atoms {
        let min = if c.resource == Resource::Squeezed || c.subcommand == Subcommand::OptimalTime
            || c.subcommand == Subcommand::Squeeze
        {
            2
        } else {
            1
        };
        if n < min {
            return Err(CliError::usage(format!("{name}: `n` must be at least {min}")));
        }
    }
    let n = c.n_atoms.unwrap_or(0);
    if let Some(tau) = c.tau {
        if tau < 0.0 {
            return Err(CliError::usage(format!("{name}: `tau` must be non-negative")));
        }
        if c.resource == Resource::Epr {
            return Err(CliError::usage(format!("{name}: `tau` does not apply to the epr resource")));
        }
    }
    if let Some(k) = c.k {
        if k > n {
            return Err(CliError::usage(format!("{name}: `k` = {k} exceeds N = {n}")));
        }
    }
    if let Some(k_cut) = c.k_cut {
        if 2 * k_cut >= n {
            return Err(CliError::usage(format!(
                "{name}: `k-cut` = {k_cut} must satisfy 2 k_cut < N = {n}"
            )));
        }
    }
    if (c.theta.is_some()) != (c.phi.is_some()) && c.subcommand == Subcommand::ErrorSweep {
        return Err(CliError::usage(format!("{name}: give both `theta` and `phi` or neither")));
    }
    if let Some(grid) = c.grid {
        use Subcommand::*;
        let ok = match c.subcommand {
            Squeeze | ProbDist | Fluctuation => matches!(grid, GridSpec::Line(_)),
            WignerMap | ErrorSweep => matches!(grid, GridSpec::Sphere(..)),
            SpinSweep => !(matches!(grid, GridSpec::Sphere(..)) && c.phi.is_some()),
            _ => true,
        };
        if !ok {
            return Err(CliError::usage(format!("{name}: `grid` = {grid} does not fit this subcommand")));
        }
    }
    if c.subcommand == Subcommand::ErrorSweep && c.theta.is_some() && c.grid.is_some() {
        return Err(CliError::usage(format!("{name}: `grid` conflicts with a single (theta, phi)")));
    }
    Ok(())
}

/// Runs the configured pipeline, writes the output and its manifest.
pub fn execute(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let result = commands::run(config).map_err(|e| CliError::from_library(config.subcommand, e))?;
    let bytes = match config.format {
        Format::Csv => result.table.to_csv().into_bytes(),
        Format::Json => {
            let value = result.json.unwrap_or_else(|| result.table.to_json());
            let mut s = serde_json::to_string_pretty(&value).expect("JSON values serialize");
            s.push('\n');
            s.into_bytes()
        }
    };
    let path = &config.output_path;
    output::write_atomic(path, &bytes)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let manifest = RunManifest {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION"),
        tau_used: result.tau_used,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: vec![OutputRecord {
            path: path.clone(),
            sha256: output::sha256_hex(&bytes),
        }],
    };
    let manifest_path = manifest_path(path);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    output::write_atomic(&manifest_path, json.as_bytes()).map_err(|e| {
        let _ = std::fs::remove_file(path);
        CliError::Io(format!("{}: {e}", manifest_path.display()))
    })?;
    Ok(manifest)
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Worker count from [`WORKERS_ENV`], if set.
fn workers() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::usage(format!("{WORKERS_ENV}: expected a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Full command-line entry point: reads `--config`, parses, executes.
pub fn run(argv: &[String]) -> Result<RunManifest, CliError> {
    let flags = parse_flags(argv)?;
    let contents = match &flags.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let config = parse_config(argv, contents.as_deref())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(format!("worker pool: {e}")))?;
    pool.install(|| execute(&config))
}
