//! The INI-style configuration file.
//!
//! ```ini
//! [problem]
//! alpha = 1
//! c = "2+cos(2*pi*y)"
//! g = "sin(2*pi*y)"
//! phi = "0"
//! far_field = 0
//! ```
//!
//! Sections and keys outside the documented set are rejected. Missing
//! optional keys take their defaults; a malformed value is always an error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use levyhomog_core::cell::{DiscountSchedule, ErgodicOptions};
use levyhomog_core::coeffs::CoefficientSet;
use levyhomog_core::effective::CellMethod;
use levyhomog_core::expr::{self, Expr, Variable};
use levyhomog_core::harness::SweepConfig;
use levyhomog_core::Error as CoreError;

use crate::error::{AppError, ConfigError};

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "problem",
        &[
            "alpha",
            "c",
            "g",
            "a",
            "phi",
            "far_field",
            "epsilon",
            "x_lo",
            "x_hi",
        ],
    ),
    ("discretization", &["n_torus", "h_rule", "R", "zeta_rule"]),
    (
        "cell",
        &[
            "schedule",
            "extrapolation_order",
            "method",
            "hamiltonian",
            "i_value",
            "i_samples",
            "gap_bound",
        ],
    ),
    ("sweep", &["epsilons", "refinement", "margin"]),
    ("output", &["dir", "formats"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Discounted,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(Method::Direct),
            "discounted" => Ok(Method::Discounted),
            other => Err(format!("expected direct or discounted, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hamiltonian {
    /// `d - c I[v] - g - c I = 0`.
    Linear,
    /// `d + a |Dv| - I[v] - g = 0`.
    Eikonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub alpha: f64,
    pub c: String,
    pub g: String,
    pub a: Option<String>,
    pub phi: String,
    pub far_field: f64,
    /// Scale used by `solve`.
    pub epsilon: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub n_torus: usize,
    /// `K` in `h = eps/K`.
    pub h_divisor: usize,
    pub truncation: f64,
    /// `K` in `zeta = h/K`.
    pub zeta_div: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub schedule: DiscountSchedule,
    pub method: Method,
    pub hamiltonian: Hamiltonian,
    pub i_value: f64,
    pub i_samples: Vec<f64>,
    pub gap_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub epsilons: Vec<f64>,
    pub refinement: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub problem: Problem,
    pub coeffs: CoefficientSet,
    pub discretization: Discretization,
    pub cell: Cell,
    pub sweep: Sweep,
    pub output: Output,
}

fn err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        reason: reason.into(),
    }
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn unquote(value: &str) -> Result<String, String> {
    let v = value.trim();
    match (v.strip_prefix('"'), v.ends_with('"') && v.len() >= 2) {
        (Some(inner), true) => {
            let inner = &inner[..inner.len() - 1];
            if inner.contains('"') {
                Err("stray quote inside value".into())
            } else {
                Ok(inner.to_string())
            }
        }
        (Some(_), false) => Err("unterminated quote".into()),
        (None, _) if v.contains('"') => Err("stray quote inside value".into()),
        (None, _) => Ok(v.to_string()),
    }
}

/// Splits the text into sections, checking names and duplicates.
fn read_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut out: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| {
                    err(
                        line,
                        format!("line {}: malformed section header", lineno + 1),
                    )
                })?
                .trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(err(name, "unknown section"));
            }
            if out.contains_key(name) {
                return Err(err(name, "duplicate section"));
            }
            out.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line, format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let section = current
            .as_ref()
            .ok_or_else(|| err(key, "key outside of any section"))?;
        let allowed = SECTIONS
            .iter()
            .find(|(s, _)| s == section)
            .expect("section checked")
            .1;
        if !allowed.contains(&key) {
            return Err(err(key, format!("unknown key in [{section}]")));
        }
        let value = unquote(value).map_err(|r| err(key, r))?;
        let entries = out.get_mut(section).expect("section inserted");
        if entries.insert(key.to_string(), value).is_some() {
            return Err(err(key, "duplicate key"));
        }
    }
    Ok(out)
}

struct View<'a> {
    entries: Option<&'a BTreeMap<String, String>>,
}

impl<'a> View<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.entries.and_then(|e| e.get(key)).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&'a str, ConfigError> {
        self.get(key)
            .ok_or_else(|| err(key, "missing required key"))
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_number(v).map_err(|r| err(key, r)),
        }
    }

    fn integer(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| err(key, format!("expected a non-negative integer, got `{v}`"))),
        }
    }
}

/// A finite decimal number or a reciprocal `1/k`.
fn parse_number(v: &str) -> Result<f64, String> {
    let v = v.trim();
    let value = if let Some((num, den)) = v.split_once('/') {
        let num: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("not a number: `{v}`"))?;
        let den: f64 = den
            .trim()
            .parse()
            .map_err(|_| format!("not a number: `{v}`"))?;
        if den == 0.0 {
            return Err("division by zero".into());
        }
        num / den
    } else {
        v.parse().map_err(|_| format!("not a number: `{v}`"))?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("not finite: `{v}`"))
    }
}

fn number_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let items: Vec<&str> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(err(key, "empty list"));
    }
    items
        .iter()
        .map(|s| parse_number(s).map_err(|r| err(key, r)))
        .collect()
}

/// `eps/K` for an integer `K`.
fn parse_h_rule(v: &str) -> Result<usize, ConfigError> {
    let k = v
        .replace(' ', "")
        .strip_prefix("eps/")
        .and_then(|k| k.parse::<usize>().ok())
        .ok_or_else(|| {
            err(
                "h_rule",
                format!("expected eps/K with integer K, got `{v}`"),
            )
        })?;
    if k < 8 {
        return Err(err("h_rule", "K must be >= 8"));
    }
    Ok(k)
}

/// `h` or `h/K` for a real `K >= 1`.
fn parse_zeta_rule(v: &str) -> Result<f64, ConfigError> {
    let v = v.replace(' ', "");
    if v == "h" {
        return Ok(1.0);
    }
    let k = v
        .strip_prefix("h/")
        .and_then(|k| parse_number(k).ok())
        .ok_or_else(|| err("zeta_rule", format!("expected h or h/K, got `{v}`")))?;
    if !(k >= 1.0) {
        return Err(err("zeta_rule", "K must be >= 1"));
    }
    Ok(k)
}

/// A comma list of λ values, or `geometric(start, end, ratio)`.
fn parse_schedule(v: Option<&str>, order: usize) -> Result<DiscountSchedule, ConfigError> {
    let result = match v {
        None => DiscountSchedule::geometric(1e-1, 1e-4, 0.5, order),
        Some(v) => {
            let t = v.replace(' ', "");
            if let Some(args) = t
                .strip_prefix("geometric(")
                .and_then(|r| r.strip_suffix(')'))
            {
                let p = number_list("schedule", args)?;
                if p.len() != 3 {
                    return Err(err(
                        "schedule",
                        "geometric(start, end, ratio) takes three values",
                    ));
                }
                DiscountSchedule::geometric(p[0], p[1], p[2], order)
            } else {
                DiscountSchedule::new(number_list("schedule", &t)?, order)
            }
        }
    };
    result.map_err(|e| err("schedule", core_reason(&e)))
}

fn core_reason(e: &CoreError) -> String {
    match e {
        CoreError::InvalidParameter(s) => s.clone(),
        CoreError::Coefficient { reason, .. } => reason.clone(),
        other => other.to_string(),
    }
}

fn parse_expr(key: &str, text: &str) -> Result<Expr, ConfigError> {
    expr::parse(text).map_err(|e| err(key, e.to_string()))
}

fn parse_formats(v: &str) -> Result<Vec<Format>, ConfigError> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let f = match item {
            "csv" => Format::Csv,
            "json" => Format::Json,
            "svg" => Format::Svg,
            other => return Err(err("formats", format!("unknown format `{other}`"))),
        };
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(err("formats", "no output format given"));
    }
    out.sort();
    Ok(out)
}

fn is_reciprocal(e: f64) -> bool {
    let k = (1.0 / e).round();
    e > 0.0 && e <= 1.0 && ((1.0 / e) - k).abs() <= 1e-9 * k
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sections = read_sections(text)?;
        let view = |name: &str| View {
            entries: sections.get(name),
        };

        let p = view("problem");
        if p.entries.is_none() {
            return Err(err("problem", "missing required section"));
        }
        let alpha = parse_number(p.required("alpha")?).map_err(|r| err("alpha", r))?;
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(err("alpha", "out of (0,2)"));
        }
        let problem = Problem {
            alpha,
            c: p.required("c")?.to_string(),
            g: p.required("g")?.to_string(),
            a: p.get("a").map(str::to_string),
            phi: p.required("phi")?.to_string(),
            far_field: parse_number(p.required("far_field")?).map_err(|r| err("far_field", r))?,
            epsilon: p.number("epsilon", 1.0 / 16.0)?,
            x_lo: p.number("x_lo", 0.0)?,
            x_hi: p.number("x_hi", 1.0)?,
        };
        if !is_reciprocal(problem.epsilon) {
            return Err(err(
                "epsilon",
                "must be the reciprocal of a positive integer",
            ));
        }
        if !(problem.x_hi > problem.x_lo) {
            return Err(err("x_hi", "must exceed x_lo"));
        }
        let coeffs = build_coefficients(&problem)?;

        let d = view("discretization");
        let discretization = Discretization {
            n_torus: d.integer("n_torus", 512)?,
            h_divisor: parse_h_rule(d.get("h_rule").unwrap_or("eps/16"))?,
            truncation: d.number("R", 1.0)?,
            zeta_div: parse_zeta_rule(d.get("zeta_rule").unwrap_or("h"))?,
        };
        if discretization.n_torus < 8 {
            return Err(err("n_torus", "must be >= 8"));
        }
        if !(discretization.truncation >= 1.0) {
            return Err(err("R", "must be >= 1"));
        }

        let c = view("cell");
        let order = c.integer("extrapolation_order", 1)?;
        let hamiltonian = match c.get("hamiltonian").unwrap_or("linear") {
            "linear" => Hamiltonian::Linear,
            "eikonal" => Hamiltonian::Eikonal,
            other => {
                return Err(err(
                    "hamiltonian",
                    format!("expected linear or eikonal, got `{other}`"),
                ))
            }
        };
        if hamiltonian == Hamiltonian::Eikonal && problem.a.is_none() {
            return Err(err("a", "required by the eikonal hamiltonian"));
        }
        let cell = Cell {
            schedule: parse_schedule(c.get("schedule"), order)?,
            method: c
                .get("method")
                .unwrap_or("discounted")
                .parse()
                .map_err(|r: String| err("method", r))?,
            hamiltonian,
            i_value: c.number("i_value", 0.0)?,
            i_samples: match c.get("i_samples") {
                None => vec![-2.0, -1.0, 0.0, 1.0, 2.0],
                Some(v) => number_list("i_samples", v)?,
            },
            gap_bound: c.number("gap_bound", 5e-2)?,
        };
        if !(cell.gap_bound > 0.0) {
            return Err(err("gap_bound", "must be positive"));
        }

        let s = view("sweep");
        let sweep = Sweep {
            epsilons: match s.get("epsilons") {
                None => vec![1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
                Some(v) => number_list("epsilons", v)?,
            },
            refinement: s.integer("refinement", discretization.h_divisor)?,
            margin: s.number("margin", 0.1)?,
        };
        if sweep.epsilons.iter().any(|e| !is_reciprocal(*e)) {
            return Err(err(
                "epsilons",
                "every entry must be the reciprocal of a positive integer",
            ));
        }
        if sweep.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(err("epsilons", "must be strictly decreasing"));
        }
        if sweep.refinement < 8 {
            return Err(err("refinement", "must be >= 8"));
        }
        if !(sweep.margin >= 0.0 && sweep.margin < 0.5) {
            return Err(err("margin", "must lie in [0, 0.5)"));
        }

        let o = view("output");
        let output = Output {
            dir: PathBuf::from(o.get("dir").unwrap_or("out")),
            formats: parse_formats(o.get("formats").unwrap_or("csv,json,svg"))?,
        };

        Ok(Config {
            problem,
            coeffs,
            discretization,
            cell,
            sweep,
            output,
        })
    }

    pub fn ergodic_options(&self) -> ErgodicOptions {
        ErgodicOptions {
            gap_bound: self.cell.gap_bound,
            ..ErgodicOptions::default()
        }
    }

    pub fn cell_method(&self, method: Method) -> CellMethod {
        match method {
            Method::Direct => CellMethod::Direct,
            Method::Discounted => CellMethod::Discounted {
                schedule: self.cell.schedule.clone(),
                opts: self.ergodic_options(),
            },
        }
    }

    pub fn sweep_config(&self, method: Method) -> SweepConfig {
        SweepConfig {
            epsilons: self.sweep.epsilons.clone(),
            refinement: self.sweep.refinement,
            margin: self.sweep.margin,
            x_lo: self.problem.x_lo,
            x_hi: self.problem.x_hi,
            truncation: self.discretization.truncation,
            zeta_div: self.discretization.zeta_div,
            n_torus: self.discretization.n_torus,
            i_samples: self.cell.i_samples.clone(),
            cell_method: self.cell_method(method),
        }
    }
}

fn build_coefficients(p: &Problem) -> Result<CoefficientSet, ConfigError> {
    let c = parse_expr("c", &p.c)?;
    let g = parse_expr("g", &p.g)?;
    let a = p.a.as_deref().map(|a| parse_expr("a", a)).transpose()?;
    let phi = parse_expr("phi", &p.phi)?;
    if phi.variable() == Some(Variable::Y) {
        return Err(err("phi", "must be a function of x"));
    }
    CoefficientSet::new(p.alpha, c, g, a, phi, p.far_field).map_err(|e| match e {
        CoreError::Coefficient { name, reason } => err(name, reason),
        other => err("problem", other.to_string()),
    })
}

pub fn load_config(path: &Path) -> Result<Config, AppError> {
    let text = std::fs::read_to_string(path).map_err(|source| AppError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Config::parse(&text)?)
}
