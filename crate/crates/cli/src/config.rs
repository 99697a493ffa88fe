//! Run configuration: flags, `key = value` files and validation.
//!
//! Every option is read as text first so that validation can report all bad
//! fields in one pass instead of stopping at the first parse failure.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fluxdicke::criticality::{self, Side};
use fluxdicke::meanfield::MinimizeOptions;
use fluxdicke::{ModelError, ModelParams};

#[derive(Parser, Debug)]
#[command(name = "fluxdicke", version, about = "Spectra, phase diagrams and critical exponents of a flux-threaded Dicke ring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// All 2N excitation energies against g at one flux (CSV)
    Spectrum(Opts),
    /// Phase label, gap and ground configuration on a θ × g grid (CSV)
    PhaseDiagram(Opts),
    /// Mean-field ground state on a θ × g grid (CSV)
    Meanfield(Opts),
    /// Gap exponent on one side of the transition (JSON)
    Exponent(Opts),
    /// Per-site photon number and entanglement against g (CSV)
    Observables(Opts),
    /// Continuous boundary over θ, plus first-order lines at each g (CSV)
    Boundary(Opts),
}

impl Command {
    pub fn split(self) -> (CommandKind, Opts) {
        match self {
            Command::Spectrum(o) => (CommandKind::Spectrum, o),
            Command::PhaseDiagram(o) => (CommandKind::PhaseDiagram, o),
            Command::Meanfield(o) => (CommandKind::Meanfield, o),
            Command::Exponent(o) => (CommandKind::Exponent, o),
            Command::Observables(o) => (CommandKind::Observables, o),
            Command::Boundary(o) => (CommandKind::Boundary, o),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Spectrum,
    PhaseDiagram,
    Meanfield,
    Exponent,
    Observables,
    Boundary,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandKind::Spectrum => "spectrum",
            CommandKind::PhaseDiagram => "phase-diagram",
            CommandKind::Meanfield => "meanfield",
            CommandKind::Exponent => "exponent",
            CommandKind::Observables => "observables",
            CommandKind::Boundary => "boundary",
        })
    }
}

/// Options shared by every subcommand. Values given here override the file.
#[derive(Args, Debug, Clone, Default)]
pub struct Opts {
    /// File of `key = value` lines; `#` starts a comment
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Number of sites
    #[arg(long)]
    pub n: Option<String>,
    /// Hopping in cavity units, J/ω
    #[arg(long)]
    pub jbar: Option<String>,
    /// Cavity frequency
    #[arg(long)]
    pub omega: Option<String>,
    /// Atomic frequency in units of ω
    #[arg(long)]
    pub omega_atom: Option<String>,
    /// Flux: a value or `min:max:steps`
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Coupling: a value or `min:max:steps`
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    /// Output file
    #[arg(long)]
    pub out: Option<String>,
    /// Random restarts on top of the sign-pattern starts
    #[arg(long)]
    pub restarts: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub threads: Option<String>,
    /// `below` or `above` the transition (exponent)
    #[arg(long)]
    pub side: Option<String>,
    /// Relative window `lo:hi` of |g − g_c|/g_c (exponent)
    #[arg(long)]
    pub window: Option<String>,
    /// Points in the exponent window
    #[arg(long)]
    pub points: Option<String>,
    /// Also write an SVG plot (spectrum, phase-diagram)
    #[arg(long)]
    pub plot: Option<String>,
}

const KEYS: [&str; 14] =
    ["n", "jbar", "omega", "omega_atom", "theta", "g", "out", "restarts", "seed", "threads", "side", "window", "points", "plot"];

impl Opts {
    fn entries(&self) -> [(&'static str, &Option<String>); 14] {
        [
            ("n", &self.n),
            ("jbar", &self.jbar),
            ("omega", &self.omega),
            ("omega_atom", &self.omega_atom),
            ("theta", &self.theta),
            ("g", &self.g),
            ("out", &self.out),
            ("restarts", &self.restarts),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("side", &self.side),
            ("window", &self.window),
            ("points", &self.points),
            ("plot", &self.plot),
        ]
    }
}

/// Inclusive grid `lo..=hi` with `steps` points; a single value has one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Range {
    pub fn single(v: f64) -> Self {
        Range { lo: v, hi: v, steps: 1 }
    }

    pub fn is_single(&self) -> bool {
        self.steps == 1
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        // pin the last point so it is exactly `hi`
        (0..self.steps).map(|i| if i + 1 == self.steps { self.hi } else { self.lo + h * i as f64 }).collect()
    }
}

/// Parses `v` or `min:max:steps`.
pub fn parse_range(s: &str) -> Result<Range, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    match parts.as_slice() {
        [v] => num(v).map(Range::single),
        [lo, hi, steps] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let steps: usize = steps.parse().map_err(|_| format!("`{steps}` is not a step count"))?;
            if steps < 2 {
                return Err(format!("need at least 2 steps, got {steps}"));
            }
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(format!("empty range {lo}:{hi}"));
            }
            Ok(Range { lo, hi, steps })
        }
        _ => Err(format!("expected a value or min:max:steps, got `{s}`")),
    }
}

/// Reads `key = value` lines. Keys may use `-` or `_`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, Vec<String>> {
    let mut map = BTreeMap::new();
    let mut errs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errs.push(format!("config line {}: expected `key = value`", i + 1));
            continue;
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            errs.push(format!("config line {}: unknown key `{}`", i + 1, k.trim()));
        } else if map.insert(key, v.trim().to_string()).is_some() {
            errs.push(format!("config line {}: duplicate key `{}`", i + 1, k.trim()));
        }
    }
    if errs.is_empty() {
        Ok(map)
    } else {
        Err(errs)
    }
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| vec![format!("config: cannot read {}: {e}", path.display())])?;
    parse_config_text(&text)
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Lattice parameters; `theta` and `g` are overwritten per grid point.
    pub model: ModelParams,
    pub theta: Option<Range>,
    pub g: Option<Range>,
    pub out: PathBuf,
    pub restarts: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub side: Side,
    pub window: (f64, f64),
    pub points: usize,
    pub plot: Option<PathBuf>,
}

impl RunConfig {
    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions { restarts: self.restarts, seed: self.seed, ..Default::default() }
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.theta.map(|r| r.values()).unwrap_or_default()
    }

    pub fn gs(&self) -> Vec<f64> {
        self.g.map(|r| r.values()).unwrap_or_default()
    }

    /// Merges flags over the config file and validates the result.
    pub fn resolve(command: CommandKind, opts: &Opts) -> Result<RunConfig, Vec<String>> {
        let mut values = match &opts.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        for (k, v) in opts.entries() {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Self::from_values(command, &values)
    }

    pub fn from_values(command: CommandKind, values: &BTreeMap<String, String>) -> Result<RunConfig, Vec<String>> {
        let mut v = Validator { values, errs: Vec::new() };
        let defaults = ModelParams::default();
        let n = v.parse("n", defaults.n_sites);
        let jbar = v.parse("jbar", defaults.j_hop / defaults.omega);
        let omega = v.parse("omega", defaults.omega);
        let omega_atom = v.parse("omega_atom", defaults.omega_atom);
        let theta = v.range("theta");
        let g = v.range("g");
        let restarts = v.parse("restarts", 8usize);
        let seed = v.parse("seed", 0u64);
        let threads: Option<usize> = v.optional("threads");
        let points = v.parse("points", criticality::DEFAULT_POINTS);
        let out = v.values.get("out").map(PathBuf::from);
        let plot = v.values.get("plot").map(PathBuf::from);

        let model = ModelParams { n_sites: n, omega, omega_atom, j_hop: jbar * omega, theta: PI / 2.0, g: 0.0 };
        if let Err(list) = model.validate() {
            for e in list {
                v.errs.push(model_error(&e));
            }
        }

        let needs_grid = !matches!(command, CommandKind::Exponent);
        match theta {
            None => v.errs.push("theta: required".into()),
            Some(r) => {
                if !(r.lo > 0.0 && r.hi < PI) {
                    v.errs.push(format!("theta: range must lie inside (0, pi), got {}:{}", r.lo, r.hi));
                }
                let single_only = matches!(command, CommandKind::Spectrum | CommandKind::Exponent | CommandKind::Observables);
                if single_only && !r.is_single() {
                    v.errs.push(format!("theta: {command} takes a single value"));
                }
            }
        }
        match g {
            None if needs_grid && command != CommandKind::Boundary => v.errs.push("g: required".into()),
            Some(r) if r.lo < 0.0 => v.errs.push(format!("g: must be >= 0, got {}", r.lo)),
            _ => {}
        }
        if out.is_none() {
            v.errs.push("out: required".into());
        }
        if threads == Some(0) {
            v.errs.push("threads: must be >= 1".into());
        }
        if plot.is_some() && !matches!(command, CommandKind::Spectrum | CommandKind::PhaseDiagram) {
            v.errs.push(format!("plot: not available for {command}"));
        }

        let mut side = Side::Above;
        let mut window = criticality::DEFAULT_WINDOW;
        if command == CommandKind::Exponent {
            match v.values.get("side").map(String::as_str) {
                Some("below") => side = Side::Below,
                Some("above") => side = Side::Above,
                Some(s) => v.errs.push(format!("side: expected `below` or `above`, got `{s}`")),
                None => v.errs.push("side: required".into()),
            }
            if let Some(w) = v.values.get("window") {
                match parse_window(w) {
                    Ok(w) => window = w,
                    Err(e) => v.errs.push(format!("window: {e}")),
                }
            }
            if points < criticality::MIN_POINTS {
                v.errs.push(format!("points: need at least {}, got {points}", criticality::MIN_POINTS));
            }
        }

        if !v.errs.is_empty() {
            return Err(v.errs);
        }
        Ok(RunConfig {
            command,
            model,
            theta,
            g,
            out: out.expect("checked above"),
            restarts,
            seed,
            threads,
            side,
            window,
            points,
            plot,
        })
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("`{a}` is not a number"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("`{b}` is not a number"))?;
    if !(lo > 0.0 && hi > lo && hi < 1.0) {
        return Err(format!("need 0 < lo < hi < 1, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// Reports model errors under the flag names a user typed.
fn model_error(e: &ModelError) -> String {
    match e {
        ModelError::Invalid { field, reason } => {
            let name = match *field {
                "n_sites" => "n",
                "j_hop" => "jbar",
                f => f,
            };
            format!("{name}: {reason}")
        }
        other => other.to_string(),
    }
}

struct Validator<'a> {
    values: &'a BTreeMap<String, String>,
    errs: Vec<String>,
}

impl Validator<'_> {
    fn optional<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        let raw = self.values.get(key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errs.push(format!("{key}: cannot parse `{raw}`"));
                None
            }
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> T {
        self.optional(key).unwrap_or(default)
    }

    fn range(&mut self, key: &str) -> Option<Range> {
        let raw = self.values.get(key)?;
        match parse_range(raw) {
            Ok(r) => Some(r),
            Err(e) => {
                self.errs.push(format!("{key}: {e}"));
                None
            }
        }
    }
}
