//! Model descriptions: TOML files and the inline `family:key=value,...` syntax.

use serde::{Deserialize, Serialize};

use super::FieldModel;
use crate::error::{Error, Result};
use crate::zoo;

pub const SCHEMA_VERSION: u32 = 1;

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn bridge_margin() -> f64 {
    0.05
}

/// A recipe from the built-in model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Stationary field with `r(τ) = exp(-a|τ|^α)` on `[0, length]`.
    Stationary {
        alpha: f64,
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        length: f64,
    },
    /// Ornstein-Uhlenbeck type: the stationary family at α = 1.
    Ou {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        length: f64,
    },
    /// `σ(t) = 1/(1 + a|t - t0|^β)`, `r(τ) = exp(-|τ|^α)` on `[0, 1]`.
    Power {
        alpha: f64,
        beta: f64,
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "half")]
        t0: f64,
        #[serde(default)]
        boundary: bool,
    },
    /// Two sharp variance peaks on `[0, 1]`.
    TwoPoint {
        #[serde(default = "two")]
        alpha: f64,
        #[serde(default = "one")]
        beta: f64,
        #[serde(default = "two_point_a")]
        a: f64,
        #[serde(default = "two_point_sep")]
        separation: f64,
        #[serde(default = "two_point_corr")]
        corr_scale: f64,
    },
    /// Brownian motion on `[0, 1]`.
    Brownian {},
    /// Norm of a d-dimensional Brownian motion on `[0, 1]`.
    Bessel { d: usize },
    /// Norm of a d-dimensional Brownian bridge, truncated to `[margin, 1 - margin]`.
    BesselBridge {
        d: usize,
        #[serde(default = "bridge_margin")]
        margin: f64,
    },
    /// Norm of a d-dimensional fractional Brownian motion on `[0, 1]`.
    FractionalBessel { d: usize, hurst: f64 },
    /// Weighted norm of independent stationary coordinates, optionally with a common variance peak.
    ChiSquare {
        weights: Vec<f64>,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        length: f64,
        #[serde(default)]
        peak_a: Option<f64>,
        #[serde(default)]
        peak_beta: Option<f64>,
        #[serde(default)]
        peak_t0: Option<f64>,
    },
}

fn two_point_a() -> f64 {
    zoo::TWO_POINT_DEFAULTS.a
}
fn two_point_sep() -> f64 {
    zoo::TWO_POINT_DEFAULTS.separation
}
fn two_point_corr() -> f64 {
    zoo::TWO_POINT_DEFAULTS.corr_scale
}

impl ModelConfig {
    pub fn family(&self) -> &'static str {
        match self {
            ModelConfig::Stationary { .. } => "stationary",
            ModelConfig::Ou { .. } => "ou",
            ModelConfig::Power { .. } => "power",
            ModelConfig::TwoPoint { .. } => "two_point",
            ModelConfig::Brownian {} => "brownian",
            ModelConfig::Bessel { .. } => "bessel",
            ModelConfig::BesselBridge { .. } => "bessel_bridge",
            ModelConfig::FractionalBessel { .. } => "fractional_bessel",
            ModelConfig::ChiSquare { .. } => "chi_square",
        }
    }

    /// Canonical inline form, `family:key=value,...`; parses back to the same config.
    pub fn to_inline(&self) -> String {
        let table = toml::Table::try_from(self).expect("config serializes to a table");
        let mut parts = Vec::new();
        for (k, v) in &table {
            if k == "family" {
                continue;
            }
            let val = match v {
                toml::Value::Array(items) => items.iter().map(inline_scalar).collect::<Vec<_>>().join(";"),
                other => inline_scalar(other),
            };
            parts.push(format!("{k}={val}"));
        }
        if parts.is_empty() {
            self.family().to_string()
        } else {
            format!("{}:{}", self.family(), parts.join(","))
        }
    }

    pub fn to_toml(&self) -> String {
        let file = ModelFile { schema_version: SCHEMA_VERSION, model: self.clone() };
        toml::to_string(&file).expect("config serializes")
    }
}

fn inline_scalar(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(f) => format!("{f:?}"),
        other => other.to_string(),
    }
}

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub model: ModelConfig,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        match table.get("schema_version") {
            None => return Err(schema("schema_version", "missing")),
            Some(toml::Value::Integer(v)) if *v == SCHEMA_VERSION as i64 => {}
            Some(other) => return Err(schema("schema_version", format!("unsupported version {other}, expected {SCHEMA_VERSION}"))),
        }
        table.try_into().map_err(|e: toml::de::Error| schema_from(&e))
    }
}

fn schema(field: &str, message: impl Into<String>) -> Error {
    Error::Schema { field: field.into(), message: message.into() }
}

fn schema_from(e: &toml::de::Error) -> Error {
    let msg = e.message().to_string();
    // serde names the offending field in backticks
    let field = msg.split('`').nth(1).unwrap_or("model").to_string();
    schema(&field, msg)
}

/// Parse `family` or `family:key=value,key=value`; list values use `;` as separator.
pub fn parse_inline(spec: &str) -> Result<ModelConfig> {
    let (family, rest) = match spec.split_once(':') {
        Some((f, r)) => (f.trim(), r.trim()),
        None => (spec.trim(), ""),
    };
    if family.is_empty() {
        return Err(schema("family", "missing model family"));
    }
    let mut table = toml::Table::new();
    table.insert("family".into(), toml::Value::String(family.to_string()));
    for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| schema(pair, "expected key=value"))?;
        let (k, v) = (k.trim(), v.trim());
        let value = if v.contains(';') {
            toml::Value::Array(v.split(';').map(|x| scalar(x.trim())).collect())
        } else {
            scalar(v)
        };
        if table.insert(k.to_string(), value).is_some() {
            return Err(schema(k, "given twice"));
        }
    }
    let known = known_families();
    if !known.contains(&family) {
        return Err(schema("family", format!("unknown family `{family}`; known: {}", known.join(", "))));
    }
    coerce_lists(&mut table);
    toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| schema_from(&e))
}

fn scalar(v: &str) -> toml::Value {
    if let Ok(i) = v.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = v.parse::<f64>() {
        return toml::Value::Float(f);
    }
    match v {
        "true" => toml::Value::Boolean(true),
        "false" => toml::Value::Boolean(false),
        _ => toml::Value::String(v.to_string()),
    }
}

/// Integers are accepted where floats are expected, and a single weight is a one-element list.
fn coerce_lists(table: &mut toml::Table) {
    const INTEGER_FIELDS: [&str; 1] = ["d"];
    for (k, v) in table.iter_mut() {
        let x = std::mem::replace(v, toml::Value::Boolean(false));
        *v = if k == "weights" {
            let items = match x {
                toml::Value::Array(a) => a,
                other => vec![other],
            };
            toml::Value::Array(items.into_iter().map(to_float).collect())
        } else if INTEGER_FIELDS.contains(&k.as_str()) {
            x
        } else {
            to_float(x)
        };
    }
}

fn to_float(v: toml::Value) -> toml::Value {
    match v {
        toml::Value::Integer(i) => toml::Value::Float(i as f64),
        other => other,
    }
}

pub fn known_families() -> Vec<&'static str> {
    vec![
        "stationary",
        "ou",
        "power",
        "two_point",
        "brownian",
        "bessel",
        "bessel_bridge",
        "fractional_bessel",
        "chi_square",
    ]
}

/// Build and validate the model described by `config`.
pub fn build_model(config: &ModelConfig) -> Result<FieldModel> {
    let mut m = match config {
        ModelConfig::Stationary { alpha, a, length } => zoo::make_stationary(*alpha, *a, *length)?,
        ModelConfig::Ou { a, length } => zoo::make_stationary(1.0, *a, *length)?,
        ModelConfig::Power { alpha, beta, a, t0, boundary } => zoo::make_power_family(*alpha, *beta, *a, *t0, *boundary)?,
        ModelConfig::TwoPoint { alpha, beta, a, separation, corr_scale } => {
            zoo::make_two_point(zoo::TwoPointParams { alpha: *alpha, beta: *beta, a: *a, separation: *separation, corr_scale: *corr_scale })?
        }
        ModelConfig::Brownian {} => zoo::make_brownian()?,
        ModelConfig::Bessel { d } => zoo::make_bessel(*d)?,
        ModelConfig::BesselBridge { d, margin } => zoo::make_bessel_bridge_with_margin(*d, *margin)?,
        ModelConfig::FractionalBessel { d, hurst } => zoo::make_fractional_bessel(*d, *hurst)?,
        ModelConfig::ChiSquare { weights, alpha, length, peak_a, peak_beta, peak_t0 } => {
            let peak = match (peak_a, peak_beta) {
                (Some(a), Some(b)) => Some(zoo::Peak { a: *a, beta: *b, t0: peak_t0.unwrap_or(0.5 * length) }),
                (None, None) if peak_t0.is_none() => None,
                _ => return Err(schema("peak_a", "peak_a and peak_beta must be given together")),
            };
            zoo::make_chi_square_stationary(weights, *alpha, *length, peak)?
        }
    };
    m.config = Some(config.clone());
    Ok(m)
}
