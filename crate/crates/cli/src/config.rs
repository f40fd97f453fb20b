//! Run configuration: command-line flags layered over a flat `key = value`
//! file, resolved and range-checked in one place.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use pulsed_rotor::io::Format;
use pulsed_rotor::propagator::{DEFAULT_J_MAX_CAP, DEFAULT_LEAK_TOL, DEFAULT_ODE_STEPS, MIN_ODE_STEPS};
use pulsed_rotor::sweep::{uniform_axis, BasisPolicy, DEFAULT_DROP_THRESHOLD};
use pulsed_rotor::validation::ValidationOptions;

use crate::CliError;

/// Keys accepted in a config file, in echo order.
pub const KEYS: [&str; 22] = [
    "P",
    "p_min",
    "p_max",
    "p_step",
    "sigma",
    "sigma_min",
    "sigma_max",
    "sigma_step",
    "j0",
    "j_max",
    "leak_tol",
    "j_max_cap",
    "method",
    "ode_steps",
    "n_max",
    "workers",
    "drop_threshold",
    "formats",
    "out",
    "seed",
    "skip_surface",
    "plots",
];

/// Options shared by every subcommand. Each flag mirrors a config-file key
/// (`--sigma-min` is `sigma_min`, `--P` is `P`).
#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Flat key=value file; flags given on the command line take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Pulse strength P = mu eps s / hbar.
    #[arg(long = "P", visible_alias = "p")]
    pub p: Option<f64>,
    /// Start of a P range (with --p-max and --p-step).
    #[arg(long)]
    pub p_min: Option<f64>,
    /// End of the P range, inclusive.
    #[arg(long)]
    pub p_max: Option<f64>,
    /// P grid spacing.
    #[arg(long)]
    pub p_step: Option<f64>,
    /// Reduced pulse duration sigma = B s / hbar.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Start of a sigma range (with --sigma-max and --sigma-step).
    #[arg(long)]
    pub sigma_min: Option<f64>,
    /// End of the sigma range, inclusive.
    #[arg(long)]
    pub sigma_max: Option<f64>,
    /// sigma grid spacing.
    #[arg(long)]
    pub sigma_step: Option<f64>,
    /// Initial rotational level J0.
    #[arg(long)]
    pub j0: Option<usize>,
    /// Fixed basis truncation; conflicts with --leak-tol and --j-max-cap.
    #[arg(long)]
    pub j_max: Option<usize>,
    /// Adaptive basis: population allowed in the top two levels.
    #[arg(long)]
    pub leak_tol: Option<f64>,
    /// Largest basis the adaptive search may try.
    #[arg(long)]
    pub j_max_cap: Option<usize>,
    /// spectral or ode (propagate only).
    #[arg(long)]
    pub method: Option<String>,
    /// RK4 steps over the pulse (at least 1000).
    #[arg(long)]
    pub ode_steps: Option<usize>,
    /// Number of zero-locus indices to list (analytic only).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Relative depth a local energy minimum needs to count as a drop.
    #[arg(long)]
    pub drop_threshold: Option<f64>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long)]
    pub formats: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomly drawn validation points.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip the (P, sigma) surface check in validate.
    #[arg(long)]
    pub skip_surface: bool,
    /// Comma-separated plot kinds for svg output (default: all that apply).
    #[arg(long)]
    pub plots: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Propagate,
    Sweep,
    Analytic,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Propagate => "propagate",
            Command::Sweep => "sweep",
            Command::Analytic => "analytic",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Ode,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub p_values: Vec<f64>,
    pub sigma_values: Vec<f64>,
    pub j0: usize,
    pub basis: BasisPolicy,
    pub method: Method,
    pub ode_steps: usize,
    pub n_max: usize,
    pub workers: Option<usize>,
    pub drop_threshold: f64,
    pub formats: Vec<Format>,
    pub plots: Option<Vec<String>>,
    pub out: PathBuf,
    pub seed: u64,
    pub skip_surface: bool,
    /// Every key after merging, as written to `config.txt`.
    pub resolved: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn validation_options(&self) -> ValidationOptions {
        ValidationOptions { workers: self.workers, seed: self.seed, include_surface: !self.skip_surface }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// skipped; unknown or repeated keys are errors.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        let key = canonical_key(k.trim())
            .ok_or_else(|| usage(format!("{}:{}: unknown key '{}'", path.display(), i + 1, k.trim())))?;
        if map.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(usage(format!("{}:{}: key '{key}' given twice", path.display(), i + 1)));
        }
    }
    Ok(map)
}

fn canonical_key(k: &str) -> Option<&'static str> {
    if k == "p" {
        return Some("P");
    }
    KEYS.iter().copied().find(|&key| key == k)
}

/// Shortest of the plain and exponent forms; both parse back exactly.
fn fmt_f64(v: f64) -> String {
    let plain = v.to_string();
    let sci = format!("{v:e}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}

fn flag_values(args: &RunArgs) -> Vec<(&'static str, Option<String>)> {
    let s = |x: Option<f64>| x.map(fmt_f64);
    let u = |x: Option<usize>| x.map(|v| v.to_string());
    vec![
        ("P", s(args.p)),
        ("p_min", s(args.p_min)),
        ("p_max", s(args.p_max)),
        ("p_step", s(args.p_step)),
        ("sigma", s(args.sigma)),
        ("sigma_min", s(args.sigma_min)),
        ("sigma_max", s(args.sigma_max)),
        ("sigma_step", s(args.sigma_step)),
        ("j0", u(args.j0)),
        ("j_max", u(args.j_max)),
        ("leak_tol", s(args.leak_tol)),
        ("j_max_cap", u(args.j_max_cap)),
        ("method", args.method.clone()),
        ("ode_steps", u(args.ode_steps)),
        ("n_max", u(args.n_max)),
        ("workers", u(args.workers)),
        ("drop_threshold", s(args.drop_threshold)),
        ("formats", args.formats.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("skip_surface", args.skip_surface.then(|| "true".to_string())),
        ("plots", args.plots.clone()),
    ]
}

struct Lookup<'a>(&'a BTreeMap<String, String>);

impl Lookup<'_> {
    fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.0
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| usage(format!("invalid value '{v}' for key '{key}'"))))
            .transpose()
    }

    fn f64_checked(&self, key: &str, ok: impl Fn(f64) -> bool, req: &str) -> Result<Option<f64>, CliError> {
        match self.parse::<f64>(key)? {
            Some(v) if !v.is_finite() || !ok(v) => Err(usage(format!("key '{key}' must be {req}, got {v}"))),
            other => Ok(other),
        }
    }

    fn axis(&self, single: &str, prefix: &str, positive: bool) -> Result<Option<Vec<f64>>, CliError> {
        let keys = [format!("{prefix}_min"), format!("{prefix}_max"), format!("{prefix}_step")];
        let range_given: Vec<&String> = keys.iter().filter(|k| self.has(k)).collect();
        let (lo_ok, req): (fn(f64) -> bool, &str) =
            if positive { (|v| v > 0.0, "> 0") } else { (|v| v >= 0.0, ">= 0") };
        if self.has(single) {
            if let Some(k) = range_given.first() {
                return Err(usage(format!("keys '{single}' and '{k}' are contradictory")));
            }
            return Ok(self.f64_checked(single, lo_ok, req)?.map(|v| vec![v]));
        }
        if range_given.is_empty() {
            return Ok(None);
        }
        if let Some(missing) = keys.iter().find(|k| !self.has(k)) {
            return Err(usage(format!("key '{missing}' is required with '{}'", range_given[0])));
        }
        let min = self.f64_checked(&keys[0], lo_ok, req)?.unwrap_or_default();
        let max = self.f64_checked(&keys[1], lo_ok, req)?.unwrap_or_default();
        let step = self.f64_checked(&keys[2], |v| v > 0.0, "> 0")?.unwrap_or_default();
        if max < min {
            return Err(usage(format!("key '{}' ({max}) is below '{}' ({min})", keys[1], keys[0])));
        }
        uniform_axis(min, max, step).map(Some).map_err(|e| usage(format!("key '{}': {e}", keys[2])))
    }
}

/// Merges the config file (if any) with the flags and checks every value.
pub fn resolve(command: Command, args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut merged = match &args.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    for (key, value) in flag_values(args) {
        if let Some(v) = value {
            merged.insert(key.to_string(), v);
        }
    }
    let look = Lookup(&merged);

    let p_axis = look.axis("P", "p", false)?;
    let sigma_axis = look.axis("sigma", "sigma", true)?;
    let j0 = look.parse::<usize>("j0")?.unwrap_or(0);

    let fixed = look.parse::<usize>("j_max")?;
    let basis = match fixed {
        Some(j_max) => {
            for k in ["leak_tol", "j_max_cap"] {
                if look.has(k) {
                    return Err(usage(format!("keys 'j_max' and '{k}' are contradictory")));
                }
            }
            if j_max < 1 || j_max < j0 {
                return Err(usage(format!("key 'j_max' must be >= max(1, j0) = {}, got {j_max}", j0.max(1))));
            }
            BasisPolicy::Fixed { j_max }
        }
        None => {
            let leak_tol = look.f64_checked("leak_tol", |v| v > 0.0 && v < 1.0, "in (0, 1)")?.unwrap_or(DEFAULT_LEAK_TOL);
            let cap = look.parse::<usize>("j_max_cap")?.unwrap_or(DEFAULT_J_MAX_CAP);
            if cap < j0 + 4 {
                return Err(usage(format!("key 'j_max_cap' must be >= j0 + 4 = {}, got {cap}", j0 + 4)));
            }
            BasisPolicy::Auto { leak_tol, cap }
        }
    };

    let method = match look.0.get("method").map(|s| s.to_ascii_lowercase()) {
        None => Method::Spectral,
        Some(m) if m == "spectral" => Method::Spectral,
        Some(m) if m == "ode" || m == "rk4" => Method::Ode,
        Some(m) => return Err(usage(format!("key 'method' must be spectral or ode, got '{m}'"))),
    };
    let ode_steps = look.parse::<usize>("ode_steps")?.unwrap_or(DEFAULT_ODE_STEPS);
    if ode_steps < MIN_ODE_STEPS {
        return Err(usage(format!("key 'ode_steps' must be >= {MIN_ODE_STEPS}, got {ode_steps}")));
    }
    let n_max = look.parse::<usize>("n_max")?.unwrap_or(5);
    if n_max == 0 {
        return Err(usage("key 'n_max' must be >= 1"));
    }
    let workers = look.parse::<usize>("workers")?;
    if workers == Some(0) {
        return Err(usage("key 'workers' must be >= 1"));
    }
    let drop_threshold =
        look.f64_checked("drop_threshold", |v| v > 0.0 && v < 1.0, "in (0, 1)")?.unwrap_or(DEFAULT_DROP_THRESHOLD);
    let formats = match look.0.get("formats") {
        None => vec![Format::Csv, Format::Json, Format::Svg],
        Some(list) => {
            let mut fs = list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<Format>().map_err(|_| usage(format!("key 'formats': unknown format '{}'", s.trim()))))
                .collect::<Result<Vec<_>, _>>()?;
            fs.sort();
            fs.dedup();
            if fs.is_empty() {
                return Err(usage("key 'formats' is empty"));
            }
            fs
        }
    };
    let plots = look.0.get("plots").map(|s| s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect());
    let out = look.0.get("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("rotor-out"));
    let seed = look.parse::<u64>("seed")?.unwrap_or(ValidationOptions::default().seed);
    let skip_surface = look.parse::<bool>("skip_surface")?.unwrap_or(false);

    let need = |axis: Option<Vec<f64>>, key: &str| axis.ok_or_else(|| usage(format!("key '{key}' is required for {}", command.name())));
    let (p_values, sigma_values) = match command {
        Command::Propagate => {
            let p = need(p_axis, "P")?;
            let s = need(sigma_axis, "sigma")?;
            if p.len() != 1 || s.len() != 1 {
                return Err(usage("propagate takes a single 'P' and a single 'sigma'"));
            }
            (p, s)
        }
        Command::Sweep => (need(p_axis, "P")?, need(sigma_axis, "sigma_min")?),
        Command::Analytic => {
            if j0 > 1 {
                return Err(usage(format!("key 'j0' must be 0 or 1 for analytic, got {j0}")));
            }
            (need(p_axis, "P")?, sigma_axis.unwrap_or_default())
        }
        Command::Validate => (Vec::new(), Vec::new()),
    };

    let mut resolved = merged.clone();
    resolved.remove("skip_surface");
    resolved.insert("j0".into(), j0.to_string());
    match basis {
        BasisPolicy::Fixed { j_max } => {
            resolved.insert("j_max".into(), j_max.to_string());
        }
        BasisPolicy::Auto { leak_tol, cap } => {
            resolved.insert("leak_tol".into(), fmt_f64(leak_tol));
            resolved.insert("j_max_cap".into(), cap.to_string());
        }
    }
    resolved.insert("method".into(), if method == Method::Spectral { "spectral" } else { "ode" }.into());
    resolved.insert("ode_steps".into(), ode_steps.to_string());
    resolved.insert("n_max".into(), n_max.to_string());
    resolved.insert("drop_threshold".into(), fmt_f64(drop_threshold));
    let fmt_names: Vec<&str> = formats
        .iter()
        .map(|f| match f {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        })
        .collect();
    resolved.insert("formats".into(), fmt_names.join(","));
    resolved.insert("out".into(), out.display().to_string());
    resolved.insert("seed".into(), seed.to_string());
    if skip_surface {
        resolved.insert("skip_surface".into(), "true".into());
    }

    Ok(RunConfig {
        command,
        p_values,
        sigma_values,
        j0,
        basis,
        method,
        ode_steps,
        n_max,
        workers,
        drop_threshold,
        formats,
        plots,
        out,
        seed,
        skip_surface,
        resolved,
    })
}

/// Creates the output directory and writes the resolved configuration to
/// `config.txt` in the same `key = value` format the loader reads.
pub fn echo_config(config: &RunConfig) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&config.out)
        .map_err(|e| usage(format!("output directory {} is not writable: {e}", config.out.display())))?;
    let mut text = format!("# rotor {}\n", config.command.name());
    for key in KEYS {
        if let Some(v) = config.resolved.get(key) {
            text.push_str(&format!("{key} = {v}\n"));
        }
    }
    let path = config.out.join("config.txt");
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
