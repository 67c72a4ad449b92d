//! Run descriptions: defaults, config-file merging, and validation.
//!
//! A run is described by a flat key-value config file (JSON object) and/or
//! command-line flags; flags win key by key. Everything is validated here
//! so the execution layer can assume a coherent [`RunSpec`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use noma_meta_core::model::{db_to_linear, Scheme};

/// A configuration problem, pinned to the key that caused it.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config error at `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { key: key.into(), reason: reason.into() }
    }
}

/// The available subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Moments,
    Meta,
    Delay,
    Throughput,
    Simulate,
    Validate,
}

impl CommandKind {
    pub fn label(self) -> &'static str {
        match self {
            CommandKind::Moments => "moments",
            CommandKind::Meta => "meta",
            CommandKind::Delay => "delay",
            CommandKind::Throughput => "throughput",
            CommandKind::Simulate => "simulate",
            CommandKind::Validate => "validate",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "moments" => CommandKind::Moments,
            "meta" => CommandKind::Meta,
            "delay" => CommandKind::Delay,
            "throughput" => CommandKind::Throughput,
            "simulate" => CommandKind::Simulate,
            "validate" => CommandKind::Validate,
            _ => return None,
        })
    }
}

/// Quantity a sweep ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVar {
    Theta,
    Tau,
    X,
    Rho,
}

impl SweepVar {
    pub fn label(self) -> &'static str {
        match self {
            SweepVar::Theta => "theta",
            SweepVar::Tau => "tau",
            SweepVar::X => "x",
            SweepVar::Rho => "rho",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "theta" => SweepVar::Theta,
            "tau" => SweepVar::Tau,
            "x" => SweepVar::X,
            "rho" => SweepVar::Rho,
            _ => return None,
        })
    }

    /// Legal sweep range; the boolean says whether the endpoints belong to
    /// the domain.
    fn domain(self) -> (f64, f64, bool) {
        match self {
            SweepVar::Theta | SweepVar::Tau => (0.0, 1.0, false),
            SweepVar::X | SweepVar::Rho => (0.0, 1.0, true),
        }
    }
}

/// Evenly spaced sweep: `steps` points from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub variable: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    /// Parse the flag syntax `VAR:START:STOP:STEPS`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let err = |reason: String| ConfigError::new("sweep", reason);
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 4 {
            return Err(err(format!(
                "expected VAR:START:STOP:STEPS, got `{text}`"
            )));
        }
        let variable = SweepVar::parse(parts[0])
            .ok_or_else(|| err(format!("unknown sweep variable `{}`", parts[0])))?;
        let number = |part: &str, what: &str| {
            part.parse::<f64>()
                .map_err(|_| err(format!("{what} `{part}` is not a number")))
        };
        let start = number(parts[1], "start")?;
        let stop = number(parts[2], "stop")?;
        let steps = parts[3]
            .parse::<usize>()
            .map_err(|_| err(format!("steps `{}` is not a count", parts[3])))?;
        if steps == 0 {
            return Err(err("steps must be at least 1".into()));
        }
        if !(start <= stop) {
            return Err(err(format!("start {start} exceeds stop {stop}")));
        }
        let (lo, hi, closed) = variable.domain();
        let inside = if closed {
            start >= lo && stop <= hi
        } else {
            start > lo && stop < hi
        };
        if !inside {
            return Err(err(format!(
                "{} range [{start}, {stop}] leaves the legal domain",
                variable.label()
            )));
        }
        Ok(Self { variable, start, stop, steps })
    }

    /// Flag syntax for this sweep; parses back to an identical value.
    pub fn encode(&self) -> String {
        format!(
            "{}:{}:{}:{}",
            self.variable.label(),
            self.start,
            self.stop,
            self.steps
        )
    }

    /// The swept grid, endpoints included.
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        (0..self.steps)
            .map(|i| self.start + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// Fully validated description of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub command: CommandKind,
    pub lambda_b: f64,
    pub alpha: f64,
    pub tau: f64,
    /// Power fraction for the center message; optional only when the run
    /// sweeps it.
    pub theta: Option<f64>,
    /// Decoding thresholds as given; `thresholds_in_db` says how to read
    /// them.
    pub beta_c: f64,
    pub beta_e: f64,
    pub thresholds_in_db: bool,
    /// Orthogonal-access time share; derived from rate matching when
    /// absent.
    pub rho: Option<f64>,
    pub scheme: Scheme,
    pub sweep: Option<Sweep>,
    pub n_realizations: usize,
    pub seed: u64,
    pub window_radius: Option<f64>,
    pub out: Option<PathBuf>,
    pub compare_printed: bool,
}

impl RunSpec {
    /// Thresholds on the linear scale, converting from decibels if needed.
    pub fn beta_linear(&self) -> (f64, f64) {
        if self.thresholds_in_db {
            (db_to_linear(self.beta_c), db_to_linear(self.beta_e))
        } else {
            (self.beta_c, self.beta_e)
        }
    }
}

/// Raw inputs exactly as they arrived from flags; `None` defers to the
/// config file and then to the defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawInputs {
    pub theta: Option<f64>,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub lambda_b: Option<f64>,
    pub beta_c_db: Option<f64>,
    pub beta_e_db: Option<f64>,
    pub beta_c: Option<f64>,
    pub beta_e: Option<f64>,
    pub rho: Option<f64>,
    pub scheme: Option<String>,
    pub sweep: Option<String>,
    pub n_realizations: Option<usize>,
    pub seed: Option<u64>,
    pub window_radius: Option<f64>,
    pub out: Option<PathBuf>,
    pub compare_printed: bool,
}

const KNOWN_KEYS: &[&str] = &[
    "command",
    "theta",
    "tau",
    "alpha",
    "lambda_b",
    "beta_c_db",
    "beta_e_db",
    "beta_c",
    "beta_e",
    "rho",
    "scheme",
    "sweep",
    "n_realizations",
    "seed",
    "window_radius",
    "out",
    "compare_printed",
];

fn float_key(
    map: &BTreeMap<String, serde_json::Value>,
    key: &str,
) -> Result<Option<f64>, ConfigError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| ConfigError::new(key, format!("expected a number, got {v}"))),
    }
}

fn string_key(
    map: &BTreeMap<String, serde_json::Value>,
    key: &str,
) -> Result<Option<String>, ConfigError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_str()
            .map(|s| Some(s.to_string()))
            .ok_or_else(|| ConfigError::new(key, format!("expected a string, got {v}"))),
    }
}

fn count_key(
    map: &BTreeMap<String, serde_json::Value>,
    key: &str,
) -> Result<Option<u64>, ConfigError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| {
                ConfigError::new(key, format!("expected a nonnegative integer, got {v}"))
            }),
    }
}

/// Read a config file's text into the same shape as the flag inputs, plus
/// the command it names, if any.
fn parse_file_text(
    text: &str,
) -> Result<(Option<CommandKind>, RawInputs), ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ConfigError::new("config", format!("not valid JSON: {e}")))?;
    let map: BTreeMap<String, serde_json::Value> = match value {
        serde_json::Value::Object(m) => m.into_iter().collect(),
        other => {
            return Err(ConfigError::new(
                "config",
                format!("expected a flat object of keys, got {other}"),
            ))
        }
    };
    for key in map.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(key, "unknown key"));
        }
    }
    let command = match string_key(&map, "command")? {
        None => None,
        Some(name) => Some(
            CommandKind::parse(&name)
                .ok_or_else(|| ConfigError::new("command", format!("unknown command `{name}`")))?,
        ),
    };
    let compare_printed = match map.get("compare_printed") {
        None => false,
        Some(v) => v.as_bool().ok_or_else(|| {
            ConfigError::new("compare_printed", format!("expected a boolean, got {v}"))
        })?,
    };
    let inputs = RawInputs {
        theta: float_key(&map, "theta")?,
        tau: float_key(&map, "tau")?,
        alpha: float_key(&map, "alpha")?,
        lambda_b: float_key(&map, "lambda_b")?,
        beta_c_db: float_key(&map, "beta_c_db")?,
        beta_e_db: float_key(&map, "beta_e_db")?,
        beta_c: float_key(&map, "beta_c")?,
        beta_e: float_key(&map, "beta_e")?,
        rho: float_key(&map, "rho")?,
        scheme: string_key(&map, "scheme")?,
        sweep: string_key(&map, "sweep")?,
        n_realizations: count_key(&map, "n_realizations")?.map(|n| n as usize),
        seed: count_key(&map, "seed")?,
        window_radius: float_key(&map, "window_radius")?,
        out: string_key(&map, "out")?.map(PathBuf::from),
        compare_printed,
    };
    Ok((command, inputs))
}

fn check_range(
    key: &str,
    value: f64,
    lo: f64,
    hi: f64,
    closed: bool,
) -> Result<f64, ConfigError> {
    let inside = if closed {
        value >= lo && value <= hi
    } else {
        value > lo && value < hi
    };
    if !inside || !value.is_finite() {
        let bracket = if closed { ["[", "]"] } else { ["(", ")"] };
        return Err(ConfigError::new(
            key,
            format!("{value} lies outside {}{lo}, {hi}{}", bracket[0], bracket[1]),
        ));
    }
    Ok(value)
}

fn check_positive(key: &str, value: f64) -> Result<f64, ConfigError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(ConfigError::new(key, format!("{value} is not positive and finite")));
    }
    Ok(value)
}

/// Sweep variables each command accepts.
fn allowed_sweeps(command: CommandKind) -> &'static [SweepVar] {
    match command {
        CommandKind::Moments | CommandKind::Delay => &[SweepVar::Theta, SweepVar::Tau],
        CommandKind::Throughput => &[SweepVar::Theta, SweepVar::Tau, SweepVar::Rho],
        CommandKind::Meta | CommandKind::Simulate => &[SweepVar::X],
        CommandKind::Validate => &[],
    }
}

/// Merge flag inputs over file inputs over defaults and validate the
/// result into a [`RunSpec`].
pub fn resolve(
    command: CommandKind,
    file: &RawInputs,
    flags: &RawInputs,
) -> Result<RunSpec, ConfigError> {
    let lambda_b =
        check_positive("lambda_b", flags.lambda_b.or(file.lambda_b).unwrap_or(1.0))?;
    let alpha = flags.alpha.or(file.alpha).unwrap_or(4.0);
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(ConfigError::new(
            "alpha",
            format!("{alpha} must exceed 2 for the interference field to be finite"),
        ));
    }
    let tau = check_range("tau", flags.tau.or(file.tau).unwrap_or(0.7), 0.0, 1.0, false)?;
    let theta = match flags.theta.or(file.theta) {
        Some(t) => Some(check_range("theta", t, 0.0, 1.0, false)?),
        None => None,
    };

    // Thresholds come either in decibels or on the linear scale, never
    // mixed: a linear value silently combined with a decibel default would
    // compare apples to oranges.
    let db_c = flags.beta_c_db.or(file.beta_c_db);
    let db_e = flags.beta_e_db.or(file.beta_e_db);
    let lin_c = flags.beta_c.or(file.beta_c);
    let lin_e = flags.beta_e.or(file.beta_e);
    let (beta_c, beta_e, thresholds_in_db) = match (db_c.is_some() || db_e.is_some(), lin_c.is_some() || lin_e.is_some()) {
        (true, true) => {
            let key = if lin_c.is_some() { "beta_c" } else { "beta_e" };
            return Err(ConfigError::new(
                key,
                "thresholds are already given in decibels; use one scale",
            ));
        }
        (_, false) => {
            let c = db_c.unwrap_or(3.0);
            let e = db_e.unwrap_or(-3.0);
            if !c.is_finite() || !e.is_finite() {
                return Err(ConfigError::new(
                    if c.is_finite() { "beta_e_db" } else { "beta_c_db" },
                    "decibel threshold must be finite",
                ));
            }
            (c, e, true)
        }
        (false, true) => {
            let c = lin_c.ok_or_else(|| {
                ConfigError::new("beta_c", "required when beta_e is given on the linear scale")
            })?;
            let e = lin_e.ok_or_else(|| {
                ConfigError::new("beta_e", "required when beta_c is given on the linear scale")
            })?;
            check_positive("beta_c", c)?;
            check_positive("beta_e", e)?;
            (c, e, false)
        }
    };

    let rho = match flags.rho.or(file.rho) {
        Some(r) => Some(check_range("rho", r, 0.0, 1.0, true)?),
        None => None,
    };
    let scheme = match flags.scheme.clone().or_else(|| file.scheme.clone()) {
        None => Scheme::Noma,
        Some(name) => match name.to_ascii_lowercase().as_str() {
            "noma" => Scheme::Noma,
            "oma" => Scheme::Oma,
            other => {
                return Err(ConfigError::new(
                    "scheme",
                    format!("unknown scheme `{other}`, expected noma or oma"),
                ))
            }
        },
    };
    let sweep = match flags.sweep.clone().or_else(|| file.sweep.clone()) {
        None => None,
        Some(text) => {
            let sweep = Sweep::parse(&text)?;
            if !allowed_sweeps(command).contains(&sweep.variable) {
                return Err(ConfigError::new(
                    "sweep",
                    format!(
                        "`{}` cannot sweep {}",
                        command.label(),
                        sweep.variable.label()
                    ),
                ));
            }
            Some(sweep)
        }
    };

    // Every command evaluates the power split somewhere, so theta is
    // required unless the run sweeps it.
    let sweeps_theta = sweep.is_some_and(|s| s.variable == SweepVar::Theta);
    if theta.is_none() && !sweeps_theta {
        return Err(ConfigError::new(
            "theta",
            format!("required for `{}`", command.label()),
        ));
    }

    let n_realizations = flags.n_realizations.or(file.n_realizations).unwrap_or(10_000);
    if n_realizations == 0 {
        return Err(ConfigError::new("n_realizations", "must be at least 1"));
    }
    let seed = flags.seed.or(file.seed).unwrap_or(42);
    let window_radius = match flags.window_radius.or(file.window_radius) {
        Some(r) => Some(check_positive("window_radius", r)?),
        None => None,
    };
    let out = flags.out.clone().or_else(|| file.out.clone());
    let compare_printed = flags.compare_printed || file.compare_printed;

    Ok(RunSpec {
        command,
        lambda_b,
        alpha,
        tau,
        theta,
        beta_c,
        beta_e,
        thresholds_in_db,
        rho,
        scheme,
        sweep,
        n_realizations,
        seed,
        window_radius,
        out,
        compare_printed,
    })
}

/// Parse a run from config text alone; `command_override` takes precedence
/// over a `command` key in the text.
pub fn parse_config_text(
    text: &str,
    command_override: Option<CommandKind>,
    flags: &RawInputs,
) -> Result<RunSpec, ConfigError> {
    let (file_command, file_inputs) = parse_file_text(text)?;
    let command = command_override
        .or(file_command)
        .ok_or_else(|| ConfigError::new("command", "no command given"))?;
    resolve(command, &file_inputs, flags)
}

/// Parse a run from an optional config file plus flag inputs.
pub fn parse_config(
    command: CommandKind,
    file: Option<&Path>,
    flags: &RawInputs,
) -> Result<RunSpec, ConfigError> {
    match file {
        None => resolve(command, &RawInputs::default(), flags),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::new("config", format!("cannot read {}: {e}", path.display()))
            })?;
            parse_config_text(&text, Some(command), flags)
        }
    }
}

/// Serialize a spec as config text; [`parse_config_text`] reads it back to
/// an equal spec.
pub fn emit_config(spec: &RunSpec) -> String {
    let mut map = serde_json::Map::new();
    let mut put = |key: &str, value: serde_json::Value| {
        map.insert(key.to_string(), value);
    };
    let num = |v: f64| serde_json::Number::from_f64(v).expect("finite by validation").into();
    put("command", spec.command.label().into());
    put("lambda_b", num(spec.lambda_b));
    put("alpha", num(spec.alpha));
    put("tau", num(spec.tau));
    if let Some(theta) = spec.theta {
        put("theta", num(theta));
    }
    if spec.thresholds_in_db {
        put("beta_c_db", num(spec.beta_c));
        put("beta_e_db", num(spec.beta_e));
    } else {
        put("beta_c", num(spec.beta_c));
        put("beta_e", num(spec.beta_e));
    }
    if let Some(rho) = spec.rho {
        put("rho", num(rho));
    }
    put("scheme", spec.scheme.label().into());
    if let Some(sweep) = spec.sweep {
        put("sweep", sweep.encode().into());
    }
    put("n_realizations", (spec.n_realizations as u64).into());
    put("seed", spec.seed.into());
    if let Some(radius) = spec.window_radius {
        put("window_radius", num(radius));
    }
    if let Some(out) = &spec.out {
        put("out", out.to_string_lossy().into_owned().into());
    }
    if spec.compare_printed {
        put("compare_printed", true.into());
    }
    serde_json::to_string_pretty(&serde_json::Value::Object(map))
        .expect("plain object always serializes")
}
