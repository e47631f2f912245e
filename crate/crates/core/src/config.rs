//! Plain-text experiment configuration.
//!
//! One `key = value` pair per line; `#` starts a comment and `[name]` headers
//! only group keys visually. Several pairs may share a line separated by
//! commas: a comma-separated piece without `=` continues the previous value,
//! so `K = 100,1000, t = 0.25,1` sets two lists.
//!
//! ```text
//! experiment = laplace_duality
//! alpha = 1
//! dimension = 1
//! t = 0.5, 1
//! nu = atoms[-1, 1]
//! phi = gaussian(0, 1, 1)      # center..., width, amplitude
//! replicas = 100000
//! ```

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::measure::Rectangle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { key: String, line: usize },

    #[error("invalid configuration: {0}")]
    Validation(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    LaplaceDuality,
    MartingaleMean,
    QuadraticVariation,
    DualityMartingale,
    GeneratingFunction,
    BlowupScan,
    PoissonInvariance,
    MomentBound,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::LaplaceDuality,
        Experiment::MartingaleMean,
        Experiment::QuadraticVariation,
        Experiment::DualityMartingale,
        Experiment::GeneratingFunction,
        Experiment::BlowupScan,
        Experiment::PoissonInvariance,
        Experiment::MomentBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::LaplaceDuality => "laplace_duality",
            Experiment::MartingaleMean => "martingale_mean",
            Experiment::QuadraticVariation => "quadratic_variation",
            Experiment::DualityMartingale => "duality_martingale",
            Experiment::GeneratingFunction => "generating_function",
            Experiment::BlowupScan => "blowup_scan",
            Experiment::PoissonInvariance => "poisson_invariance",
            Experiment::MomentBound => "moment_bound",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Initial condition.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// Flattened coordinates, `dimension` per atom.
    Atoms(Vec<f64>),
    /// Atoms `sqrt(ln k) e_1`, `k = 1..=K`.
    SqrtLog(usize),
    /// One Poisson sample of the given intensity on `box` grown by `pad`.
    Poisson(f64),
}

/// Test function.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSpec {
    Gaussian { center: Vec<f64>, width: f64, amplitude: f64 },
    Compact { center: Vec<f64>, radius: f64, amplitude: f64 },
    Kappa,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub alpha: f64,
    pub dimension: usize,
    pub times: Vec<f64>,
    pub nu: Option<InitialSpec>,
    pub phi: Option<PhiSpec>,
    pub bx: Option<Rectangle>,
    pub pad: f64,
    pub rect: Option<Rectangle>,
    pub sub_boxes: Vec<Rectangle>,
    pub k_values: Vec<usize>,
    pub s_values: Vec<f64>,
    pub lambda: Option<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub quad_nodes: usize,
    pub grid_steps: usize,
    pub output_path: String,
    pub reference_offset: f64,
    pub z_max: f64,
}

pub const DEFAULT_REPLICAS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_QUAD_NODES: usize = 64;
pub const DEFAULT_GRID_STEPS: usize = 200;
pub const DEFAULT_K_VALUES: [usize; 4] = [100, 1_000, 10_000, 100_000];
pub const DEFAULT_BLOWUP_TIMES: [f64; 2] = [0.25, 1.0];
pub const DEFAULT_S_VALUES: [f64; 4] = [0.1, 0.5, 0.9, 1.0];

const KEYS: [&str; 20] = [
    "experiment",
    "alpha",
    "dimension",
    "t",
    "nu",
    "phi",
    "box",
    "pad",
    "rect",
    "sub_box",
    "K",
    "s",
    "lambda",
    "replicas",
    "seed",
    "quad_nodes",
    "grid_steps",
    "output_path",
    "reference_offset",
    "z_max",
];

/// Keys that may appear more than once; their values accumulate.
const REPEATABLE: [&str; 1] = ["sub_box"];

/// Splits on commas that are not nested in brackets or parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// Raw `(value, line)` entries per key.
type RawEntries = BTreeMap<String, Vec<(String, usize)>>;

fn tokenize(text: &str) -> Result<RawEntries, ConfigError> {
    let mut raw: RawEntries = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') && content.ends_with(']') && !content.contains('=') {
            continue;
        }
        let mut current: Option<String> = None;
        for piece in split_top_level(content) {
            if let Some((k, v)) = piece.split_once('=') {
                let key = k.trim().to_string();
                if key.is_empty() {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        message: "empty key".into(),
                    });
                }
                if !KEYS.contains(&key.as_str()) {
                    return Err(ConfigError::UnknownKey { key, line: line_no });
                }
                let entries = raw.entry(key.clone()).or_default();
                if !entries.is_empty() && !REPEATABLE.contains(&key.as_str()) {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        message: format!("duplicate key '{key}'"),
                    });
                }
                entries.push((v.trim().to_string(), line_no));
                current = Some(key);
            } else {
                let Some(key) = &current else {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        message: format!("expected 'key = value', got '{}'", piece.trim()),
                    });
                };
                let last = raw.get_mut(key).and_then(|v| v.last_mut()).expect("key was just inserted");
                last.0.push(',');
                last.0.push_str(piece.trim());
            }
        }
    }
    Ok(raw)
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn real(s: &str, key: &str, line: usize) -> Result<f64, ConfigError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("'{key}' expects a real number, got '{}'", s.trim())))
}

fn integer<T: std::str::FromStr>(s: &str, key: &str, line: usize) -> Result<T, ConfigError> {
    s.trim()
        .parse::<T>()
        .map_err(|_| parse_err(line, format!("'{key}' expects a non-negative integer, got '{}'", s.trim())))
}

fn reals(s: &str, key: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|v| real(v, key, line)).collect()
}

/// Contents of `name(...)` or `name[...]`.
fn call<'a>(s: &'a str, name: &str, open: char, close: char) -> Option<&'a str> {
    let s = s.trim();
    let rest = s.strip_prefix(name)?.trim_start();
    rest.strip_prefix(open)?.strip_suffix(close)
}

fn parse_nu(s: &str, line: usize) -> Result<InitialSpec, ConfigError> {
    if let Some(inner) = call(s, "atoms", '[', ']') {
        return Ok(InitialSpec::Atoms(reals(inner, "nu", line)?));
    }
    if let Some(inner) = call(s, "sqrt_log", '(', ')') {
        return Ok(InitialSpec::SqrtLog(integer(inner, "nu", line)?));
    }
    if let Some(inner) = call(s, "poisson", '(', ')') {
        return Ok(InitialSpec::Poisson(real(inner, "nu", line)?));
    }
    Err(parse_err(
        line,
        format!("'nu' expects atoms[...], sqrt_log(K) or poisson(lambda), got '{s}'"),
    ))
}

fn parse_phi(s: &str, line: usize) -> Result<PhiSpec, ConfigError> {
    let s = s.trim();
    match s {
        "kappa" => return Ok(PhiSpec::Kappa),
        "zero" => return Ok(PhiSpec::Constant(0.0)),
        _ => {}
    }
    if let Some(inner) = call(s, "constant", '(', ')') {
        return Ok(PhiSpec::Constant(real(inner, "phi", line)?));
    }
    for (name, gaussian) in [("gaussian", true), ("compact", false)] {
        if let Some(inner) = call(s, name, '(', ')') {
            let mut v = reals(inner, "phi", line)?;
            if v.len() < 3 {
                return Err(parse_err(
                    line,
                    format!("'{name}' expects center coordinates, then {}, then amplitude", if gaussian { "width" } else { "radius" }),
                ));
            }
            let amplitude = v.pop().expect("length checked");
            let scale = v.pop().expect("length checked");
            return Ok(if gaussian {
                PhiSpec::Gaussian {
                    center: v,
                    width: scale,
                    amplitude,
                }
            } else {
                PhiSpec::Compact {
                    center: v,
                    radius: scale,
                    amplitude,
                }
            });
        }
    }
    Err(parse_err(
        line,
        format!("'phi' expects gaussian(...), compact(...), kappa, constant(c) or zero, got '{s}'"),
    ))
}

/// `[a, b]` (a cube) or `[a1, b1] x [a2, b2] x ...`.
fn parse_rect(s: &str, key: &str, line: usize) -> Result<RectSpec, ConfigError> {
    let mut sides = Vec::new();
    for part in s.split('x') {
        let inner = part
            .trim()
            .strip_prefix('[')
            .and_then(|p| p.strip_suffix(']'))
            .ok_or_else(|| parse_err(line, format!("'{key}' expects [a, b] or [a1, b1] x [a2, b2], got '{s}'")))?;
        let v = reals(inner, key, line)?;
        if v.len() != 2 {
            return Err(parse_err(line, format!("'{key}' sides need exactly two end points")));
        }
        sides.push((v[0], v[1]));
    }
    Ok(RectSpec { sides, line })
}

#[derive(Debug, Clone)]
struct RectSpec {
    sides: Vec<(f64, f64)>,
    line: usize,
}

impl RectSpec {
    fn build(&self, d: usize, key: &str) -> Result<Rectangle, ConfigError> {
        let sides = if self.sides.len() == 1 {
            vec![self.sides[0]; d]
        } else if self.sides.len() == d {
            self.sides.clone()
        } else {
            return Err(invalid(format!(
                "'{key}' (line {}) has {} sides but dimension is {d}",
                self.line,
                self.sides.len()
            )));
        };
        Rectangle::new(sides.iter().map(|s| s.0).collect(), sides.iter().map(|s| s.1).collect())
            .map_err(|e| invalid(format!("'{key}' (line {}): {e}", self.line)))
    }
}

fn single<'a>(raw: &'a RawEntries, key: &str) -> Option<(&'a str, usize)> {
    raw.get(key).and_then(|v| v.first()).map(|(s, l)| (s.as_str(), *l))
}

/// Parses and validates a configuration, filling documented defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw = tokenize(text)?;
    let (name, line) = single(&raw, "experiment").ok_or_else(|| invalid("missing key 'experiment'"))?;
    let experiment = Experiment::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        parse_err(line, format!("unknown experiment '{name}' (expected one of {})", known.join(", ")))
    })?;
    let blowup = experiment == Experiment::BlowupScan;

    let alpha = match single(&raw, "alpha") {
        Some((v, l)) => real(v, "alpha", l)?,
        None if blowup => 1.0,
        None => return Err(invalid("missing key 'alpha'")),
    };
    let (dim_text, dim_line) = single(&raw, "dimension").ok_or_else(|| invalid("missing key 'dimension'"))?;
    let dimension: usize = integer(dim_text, "dimension", dim_line)?;
    let times = match single(&raw, "t") {
        Some((v, l)) => reals(v, "t", l)?,
        None if blowup => DEFAULT_BLOWUP_TIMES.to_vec(),
        None => return Err(invalid("missing key 't'")),
    };
    let nu = single(&raw, "nu").map(|(v, l)| parse_nu(v, l)).transpose()?;
    let phi = single(&raw, "phi").map(|(v, l)| parse_phi(v, l)).transpose()?;
    let bx = single(&raw, "box").map(|(v, l)| parse_rect(v, "box", l)).transpose()?;
    let rect = single(&raw, "rect").map(|(v, l)| parse_rect(v, "rect", l)).transpose()?;
    let sub_boxes: Vec<RectSpec> = raw
        .get("sub_box")
        .map(|v| v.iter().map(|(s, l)| parse_rect(s, "sub_box", *l)).collect::<Result<_, _>>())
        .transpose()?
        .unwrap_or_default();
    let k_values = match single(&raw, "K") {
        Some((v, l)) => v.split(',').map(|k| integer(k, "K", l)).collect::<Result<Vec<usize>, _>>()?,
        None => DEFAULT_K_VALUES.to_vec(),
    };
    let s_values = match single(&raw, "s") {
        Some((v, l)) => reals(v, "s", l)?,
        None => DEFAULT_S_VALUES.to_vec(),
    };
    let opt_real = |key: &str| single(&raw, key).map(|(v, l)| real(v, key, l)).transpose();
    let opt_int = |key: &str| single(&raw, key).map(|(v, l)| integer::<usize>(v, key, l)).transpose();
    let lambda = opt_real("lambda")?;
    let pad = opt_real("pad")?;
    let replicas = opt_int("replicas")?.unwrap_or(DEFAULT_REPLICAS);
    let quad_nodes = opt_int("quad_nodes")?.unwrap_or(DEFAULT_QUAD_NODES);
    let grid_steps = opt_int("grid_steps")?.unwrap_or(DEFAULT_GRID_STEPS);
    let seed = single(&raw, "seed")
        .map(|(v, l)| integer::<u64>(v, "seed", l))
        .transpose()?
        .unwrap_or(DEFAULT_SEED);
    let reference_offset = opt_real("reference_offset")?.unwrap_or(0.0);
    let z_max = opt_real("z_max")?.unwrap_or(crate::verify::Z_MAX);
    let output_path = single(&raw, "output_path")
        .map(|(v, _)| v.to_string())
        .unwrap_or_else(|| format!("{}.csv", experiment.name()));

    // Validation.
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must satisfy alpha > 0, got {alpha}")));
    }
    if blowup && alpha != 1.0 {
        return Err(invalid("blowup_scan runs at alpha = 1"));
    }
    if !(1..=crate::heat::MAX_QUAD_DIM).contains(&dimension) {
        return Err(invalid(format!(
            "dimension must satisfy 1 <= dimension <= {}, got {dimension}",
            crate::heat::MAX_QUAD_DIM
        )));
    }
    if times.is_empty() {
        return Err(invalid("'t' must list at least one time"));
    }
    let positive_time = matches!(
        experiment,
        Experiment::MartingaleMean | Experiment::QuadraticVariation | Experiment::DualityMartingale | Experiment::BlowupScan
    );
    for &t in &times {
        if !(t >= 0.0 && t.is_finite()) || (positive_time && t == 0.0) {
            return Err(invalid(format!(
                "times must satisfy t {} 0 for {experiment}, got {t}",
                if positive_time { ">" } else { ">=" }
            )));
        }
    }
    if replicas < 2 {
        return Err(invalid(format!("replicas must satisfy replicas >= 2, got {replicas}")));
    }
    if quad_nodes < 8 {
        return Err(invalid(format!("quad_nodes must satisfy quad_nodes >= 8, got {quad_nodes}")));
    }
    if grid_steps == 0 {
        return Err(invalid("grid_steps must satisfy grid_steps >= 1"));
    }
    if !(z_max > 0.0) {
        return Err(invalid("z_max must satisfy z_max > 0"));
    }
    if !reference_offset.is_finite() {
        return Err(invalid("reference_offset must be finite"));
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let pad = pad.unwrap_or(6.0 * (alpha * t_max).sqrt());
    if !(pad >= 0.0 && pad.is_finite()) {
        return Err(invalid(format!("pad must satisfy pad >= 0, got {pad}")));
    }
    let bx = bx.map(|r| r.build(dimension, "box")).transpose()?;
    let rect = rect.map(|r| r.build(dimension, "rect")).transpose()?;
    let mut sub_boxes: Vec<Rectangle> = sub_boxes
        .iter()
        .map(|r| r.build(dimension, "sub_box"))
        .collect::<Result<_, _>>()?;

    if let Some(phi) = &phi {
        match phi {
            PhiSpec::Gaussian { center, width, .. } => {
                check_center(center, dimension)?;
                if !(*width > 0.0) {
                    return Err(invalid(format!("gaussian width must satisfy width > 0, got {width}")));
                }
            }
            PhiSpec::Compact { center, radius, .. } => {
                check_center(center, dimension)?;
                if !(*radius > 0.0) {
                    return Err(invalid(format!("compact radius must satisfy radius > 0, got {radius}")));
                }
            }
            PhiSpec::Kappa | PhiSpec::Constant(_) => {}
        }
    }
    match &nu {
        Some(InitialSpec::Atoms(v)) if v.len() % dimension != 0 => {
            return Err(invalid(format!(
                "nu has {} coordinates, not a multiple of dimension {dimension}",
                v.len()
            )))
        }
        Some(InitialSpec::SqrtLog(0)) => return Err(invalid("sqrt_log(K) needs K >= 1")),
        Some(InitialSpec::Poisson(l)) => {
            if !(*l > 0.0) {
                return Err(invalid(format!("poisson intensity must satisfy lambda > 0, got {l}")));
            }
            if bx.is_none() {
                return Err(invalid("nu = poisson(...) needs 'box'"));
            }
        }
        _ => {}
    }

    let needs = |key: &str, present: bool| {
        if present {
            Ok(())
        } else {
            Err(invalid(format!("missing key '{key}' required by {experiment}")))
        }
    };
    match experiment {
        Experiment::LaplaceDuality
        | Experiment::MartingaleMean
        | Experiment::QuadraticVariation
        | Experiment::DualityMartingale => {
            needs("nu", nu.is_some())?;
            needs("phi", phi.is_some())?;
        }
        Experiment::GeneratingFunction => {
            needs("nu", nu.is_some())?;
            needs("rect", rect.is_some())?;
            if let Some(bad) = s_values.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
                return Err(invalid(format!("s values must satisfy 0 < s <= 1, got {bad}")));
            }
        }
        Experiment::BlowupScan => {
            if k_values.is_empty() || k_values[0] == 0 || k_values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("K values must be positive and strictly increasing"));
            }
        }
        Experiment::PoissonInvariance => {
            needs("lambda", lambda.is_some())?;
            let Some(b) = &bx else {
                return Err(invalid(format!("missing key 'box' required by {experiment}")));
            };
            if !(lambda.unwrap_or(0.0) > 0.0) {
                return Err(invalid("lambda must satisfy lambda > 0"));
            }
            if pad < 6.0 * (alpha * t_max).sqrt() * (1.0 - 1e-12) {
                return Err(invalid(format!(
                    "pad must satisfy pad >= 6 sqrt(alpha t) = {}",
                    6.0 * (alpha * t_max).sqrt()
                )));
            }
            if sub_boxes.is_empty() {
                sub_boxes.push(b.clone());
            }
            if let Some(s) = sub_boxes.iter().find(|s| !b.encloses(s)) {
                return Err(invalid(format!("sub_box {s:?} must lie inside box")));
            }
        }
        Experiment::MomentBound => needs("nu", nu.is_some())?,
    }

    Ok(ExperimentConfig {
        experiment,
        alpha,
        dimension,
        times,
        nu,
        phi,
        bx,
        pad,
        rect,
        sub_boxes,
        k_values,
        s_values,
        lambda,
        replicas,
        seed,
        quad_nodes,
        grid_steps,
        output_path,
        reference_offset,
        z_max,
    })
}

fn check_center(center: &[f64], d: usize) -> Result<(), ConfigError> {
    if center.len() == d {
        Ok(())
    } else {
        Err(invalid(format!(
            "phi center has {} coordinates but dimension is {d}",
            center.len()
        )))
    }
}

/// Replaces the seed with the value of the override variable, if set.
pub fn apply_seed_override(cfg: &mut ExperimentConfig, value: Option<&str>) -> Result<(), ConfigError> {
    if let Some(v) = value {
        cfg.seed = v
            .trim()
            .parse()
            .map_err(|_| invalid(format!("seed override must be a non-negative integer, got '{v}'")))?;
    }
    Ok(())
}
