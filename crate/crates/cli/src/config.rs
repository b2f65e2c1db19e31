//! Run configuration: a TOML document with dotted sections
//! (`domain.kind = "disk"`, `[hum] epsilon = 1e-6`, ...).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use dynbc_core::geometry::Endpoints;
use dynbc_core::{Arc, DomainSpec, Scheme};
use serde::Serialize;
use thiserror::Error;
use toml::Value;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("unknown key `{key}`; valid keys: {}", valid.join(", "))]
    UnknownKey { key: String, valid: Vec<&'static str> },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. } => Some(key),
            ConfigError::Missing(f) => Some(f),
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Every accepted key with its default, in echo order. `-` marks keys
/// without a default.
pub const KEYS: &[(&str, &str)] = &[
    ("domain.kind", "interval"),
    ("domain.length", "1"),
    ("domain.n", "32"),
    ("domain.gamma", "right"),
    ("domain.gamma0", "right"),
    ("domain.radius", "1"),
    ("domain.n_r", "-"),
    ("domain.n_theta", "-"),
    ("domain.gamma_center", "0"),
    ("domain.gamma_half_width", "pi/8"),
    ("domain.gamma0_center", "0"),
    ("domain.gamma0_half_width", "pi/4"),
    ("physics.d", "1"),
    ("physics.delta", "1"),
    ("time.T", "-"),
    ("time.n_t", "128"),
    ("time.scheme", "implicit-euler"),
    ("eta.tol", "1e-12"),
    ("data.initial", "random"),
    ("data.sources", "none"),
    ("data.dump_fields", "false"),
    ("carleman.lambda", "2"),
    ("carleman.c_s1", "1"),
    ("carleman.s_multipliers", "[1, 2, 4]"),
    ("carleman.samples", "20"),
    ("hum.epsilon", "1e-8"),
    ("hum.tol", "1e-10"),
    ("hum.max_iter", "500"),
    ("observability.tol", "1e-6"),
    ("observability.max_iter", "50"),
    ("observability.inner_tol", "1e-10"),
    ("observability.inner_max_iter", "100"),
    ("observability.t_values", "[0.1, 0.25, 0.5, 1]"),
    ("regularity.samples", "10"),
    ("regularity.t_values", "[0.5, 1, 2]"),
    ("cost.samples", "10"),
    ("cost.s", "1"),
    ("cost.scale", "1"),
    ("output.dir", "out"),
    ("output.formats", "[\"csv\", \"json\", \"svg\"]"),
    ("seed", "0"),
];

const INTERVAL_ONLY: &[&str] = &["domain.length", "domain.n", "domain.gamma", "domain.gamma0"];
const DISK_ONLY: &[&str] = &[
    "domain.radius",
    "domain.n_r",
    "domain.n_theta",
    "domain.gamma_center",
    "domain.gamma_half_width",
    "domain.gamma0_center",
    "domain.gamma0_half_width",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialData {
    Zero,
    Random,
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceData {
    None,
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub d: f64,
    pub delta: f64,
    pub t_final: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub eta_tol: f64,
    pub initial: InitialData,
    pub sources: SourceData,
    pub dump_fields: bool,
    pub lambda: f64,
    pub c_s1: f64,
    pub s_multipliers: Vec<f64>,
    pub carleman_samples: usize,
    pub epsilon: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub power_tol: f64,
    pub power_max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub observability_t: Vec<f64>,
    pub regularity_samples: usize,
    pub regularity_t: Vec<f64>,
    pub cost_samples: usize,
    pub cost_s: f64,
    pub cost_scale: f64,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub seed: u64,
}

impl RunConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Resolved parameters as `key -> value`, excluding the output
    /// directory so that runs into different directories hash alike.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        match &self.domain {
            DomainSpec::Interval {
                length,
                cells,
                gamma,
                gamma0,
            } => {
                put("domain.kind", "interval".into());
                put("domain.length", fmt_f(*length));
                put("domain.n", cells.to_string());
                put("domain.gamma", endpoints_name(gamma).into());
                put("domain.gamma0", endpoints_name(gamma0).into());
            }
            DomainSpec::Disk {
                radius,
                rings,
                sectors,
                gamma,
                gamma0,
            } => {
                put("domain.kind", "disk".into());
                put("domain.radius", fmt_f(*radius));
                put("domain.n_r", rings.to_string());
                put("domain.n_theta", sectors.to_string());
                put("domain.gamma_center", fmt_f(gamma.center));
                put("domain.gamma_half_width", fmt_f(gamma.half_width));
                put("domain.gamma0_center", fmt_f(gamma0.center));
                put("domain.gamma0_half_width", fmt_f(gamma0.half_width));
            }
        }
        put("physics.d", fmt_f(self.d));
        put("physics.delta", fmt_f(self.delta));
        put("time.T", fmt_f(self.t_final));
        put("time.n_t", self.steps.to_string());
        put("time.scheme", self.scheme.name().into());
        put("eta.tol", fmt_f(self.eta_tol));
        put("data.initial", enum_name(&self.initial));
        put("data.sources", enum_name(&self.sources));
        put("data.dump_fields", self.dump_fields.to_string());
        put("carleman.lambda", fmt_f(self.lambda));
        put("carleman.c_s1", fmt_f(self.c_s1));
        put("carleman.s_multipliers", fmt_list(&self.s_multipliers));
        put("carleman.samples", self.carleman_samples.to_string());
        put("hum.epsilon", fmt_f(self.epsilon));
        put("hum.tol", fmt_f(self.cg_tol));
        put("hum.max_iter", self.cg_max_iter.to_string());
        put("observability.tol", fmt_f(self.power_tol));
        put("observability.max_iter", self.power_max_iter.to_string());
        put("observability.inner_tol", fmt_f(self.inner_tol));
        put("observability.inner_max_iter", self.inner_max_iter.to_string());
        put("observability.t_values", fmt_list(&self.observability_t));
        put("regularity.samples", self.regularity_samples.to_string());
        put("regularity.t_values", fmt_list(&self.regularity_t));
        put("cost.samples", self.cost_samples.to_string());
        put("cost.s", fmt_f(self.cost_s));
        put("cost.scale", fmt_f(self.cost_scale));
        let formats: Vec<String> = self.formats.iter().map(enum_name).collect();
        put("output.formats", format!("[{}]", formats.join(", ")));
        put("seed", self.seed.to_string());
        m
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| fmt_f(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn enum_name<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn endpoints_name(e: &Endpoints) -> &'static str {
    match (e.left, e.right) {
        (true, true) => "both",
        (true, false) => "left",
        (false, true) => "right",
        (false, false) => "none",
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    let mut flat = BTreeMap::new();
    flatten("", &Value::Table(table), &mut flat);
    let valid: Vec<&'static str> = KEYS.iter().map(|(k, _)| *k).collect();
    for key in flat.keys() {
        if !valid.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                valid,
            });
        }
    }
    Reader { flat }.build()
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

struct Reader {
    flat: BTreeMap<String, Value>,
}

impl Reader {
    fn has(&self, key: &str) -> bool {
        self.flat.contains_key(key)
    }

    fn f64_opt(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        match self.flat.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(invalid(key, format!("expected a number, got {other}"))),
        }
    }

    fn f64_or(&self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn uint_opt(&self, key: &'static str) -> Result<Option<u64>, ConfigError> {
        match self.flat.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(other) => Err(invalid(key, format!("expected a nonnegative integer, got {other}"))),
        }
    }

    fn usize_or(&self, key: &'static str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.uint_opt(key)?.map(|v| v as usize).unwrap_or(default))
    }

    fn str_or<'a>(&'a self, key: &'static str, default: &'a str) -> Result<&'a str, ConfigError> {
        match self.flat.get(key) {
            None => Ok(default),
            Some(Value::String(s)) => Ok(s),
            Some(other) => Err(invalid(key, format!("expected a string, got {other}"))),
        }
    }

    fn bool_or(&self, key: &'static str, default: bool) -> Result<bool, ConfigError> {
        match self.flat.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(other) => Err(invalid(key, format!("expected true or false, got {other}"))),
        }
    }

    fn list_or(&self, key: &'static str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.flat.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    other => Err(invalid(key, format!("expected numbers, got {other}"))),
                })
                .collect(),
            Some(other) => Err(invalid(key, format!("expected a list of numbers, got {other}"))),
        }
    }

    fn build(&self) -> Result<RunConfig, ConfigError> {
        let domain = self.domain()?;

        let d = self.f64_or("physics.d", 1.0)?;
        positive("physics.d", d)?;
        let delta = self.f64_or("physics.delta", 1.0)?;
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(invalid("physics.delta", format!("must be nonnegative, got {delta}")));
        }

        let t_final = self.f64_opt("time.T")?.ok_or(ConfigError::Missing("time.T"))?;
        positive("time.T", t_final)?;
        let steps = self.usize_or("time.n_t", 128)?;
        if steps < 4 {
            return Err(invalid("time.n_t", format!("need at least 4 steps, got {steps}")));
        }
        let scheme = match self.str_or("time.scheme", "implicit-euler")? {
            "implicit-euler" => Scheme::ImplicitEuler,
            "crank-nicolson" => Scheme::CrankNicolson,
            other => {
                return Err(invalid(
                    "time.scheme",
                    format!("expected implicit-euler or crank-nicolson, got {other}"),
                ))
            }
        };

        let eta_tol = self.f64_or("eta.tol", 1e-12)?;
        positive("eta.tol", eta_tol)?;

        let initial = match self.str_or("data.initial", "random")? {
            "zero" => InitialData::Zero,
            "random" => InitialData::Random,
            "cosine" => InitialData::Cosine,
            other => {
                return Err(invalid(
                    "data.initial",
                    format!("expected zero, random or cosine, got {other}"),
                ))
            }
        };
        let sources = match self.str_or("data.sources", "none")? {
            "none" => SourceData::None,
            "random" => SourceData::Random,
            other => return Err(invalid("data.sources", format!("expected none or random, got {other}"))),
        };
        let dump_fields = self.bool_or("data.dump_fields", false)?;

        let lambda = self.f64_or("carleman.lambda", 2.0)?;
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(invalid("carleman.lambda", format!("must be at least 1, got {lambda}")));
        }
        let c_s1 = self.f64_or("carleman.c_s1", 1.0)?;
        positive("carleman.c_s1", c_s1)?;
        let s_multipliers = self.list_or("carleman.s_multipliers", &[1.0, 2.0, 4.0])?;
        if s_multipliers.is_empty() || s_multipliers.iter().any(|m| !(*m >= 1.0 && m.is_finite())) {
            return Err(invalid("carleman.s_multipliers", "need a nonempty list of values >= 1"));
        }
        let carleman_samples = self.usize_or("carleman.samples", 20)?;
        at_least_one("carleman.samples", carleman_samples)?;

        let epsilon = self.f64_or("hum.epsilon", 1e-8)?;
        positive("hum.epsilon", epsilon)?;
        let cg_tol = self.f64_or("hum.tol", 1e-10)?;
        unit_interval("hum.tol", cg_tol)?;
        let cg_max_iter = self.usize_or("hum.max_iter", 500)?;
        at_least_one("hum.max_iter", cg_max_iter)?;

        let power_tol = self.f64_or("observability.tol", 1e-6)?;
        unit_interval("observability.tol", power_tol)?;
        let power_max_iter = self.usize_or("observability.max_iter", 50)?;
        at_least_one("observability.max_iter", power_max_iter)?;
        let inner_tol = self.f64_or("observability.inner_tol", 1e-10)?;
        unit_interval("observability.inner_tol", inner_tol)?;
        let inner_max_iter = self.usize_or("observability.inner_max_iter", 100)?;
        at_least_one("observability.inner_max_iter", inner_max_iter)?;
        let observability_t = self.list_or("observability.t_values", &[0.1, 0.25, 0.5, 1.0])?;
        positive_list("observability.t_values", &observability_t)?;

        let regularity_samples = self.usize_or("regularity.samples", 10)?;
        at_least_one("regularity.samples", regularity_samples)?;
        let regularity_t = self.list_or("regularity.t_values", &[0.5, 1.0, 2.0])?;
        positive_list("regularity.t_values", &regularity_t)?;

        let cost_samples = self.usize_or("cost.samples", 10)?;
        at_least_one("cost.samples", cost_samples)?;
        let cost_s = self.f64_or("cost.s", 1.0)?;
        positive("cost.s", cost_s)?;
        let cost_scale = self.f64_or("cost.scale", 1.0)?;
        if !(cost_scale != 0.0 && cost_scale.is_finite()) {
            return Err(invalid(
                "cost.scale",
                format!("must be finite and nonzero, got {cost_scale}"),
            ));
        }

        let out_dir = PathBuf::from(self.str_or("output.dir", "out")?);
        let formats = match self.flat.get("output.formats") {
            None => vec![Format::Csv, Format::Json, Format::Svg],
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v.as_str() {
                    Some("csv") => Ok(Format::Csv),
                    Some("json") => Ok(Format::Json),
                    Some("svg") => Ok(Format::Svg),
                    _ => Err(invalid("output.formats", format!("expected csv, json or svg, got {v}"))),
                })
                .collect::<Result<Vec<_>, _>>()?,
            Some(other) => return Err(invalid("output.formats", format!("expected a list, got {other}"))),
        };
        let seed = self.uint_opt("seed")?.unwrap_or(0);

        Ok(RunConfig {
            domain,
            d,
            delta,
            t_final,
            steps,
            scheme,
            eta_tol,
            initial,
            sources,
            dump_fields,
            lambda,
            c_s1,
            s_multipliers,
            carleman_samples,
            epsilon,
            cg_tol,
            cg_max_iter,
            power_tol,
            power_max_iter,
            inner_tol,
            inner_max_iter,
            observability_t,
            regularity_samples,
            regularity_t,
            cost_samples,
            cost_s,
            cost_scale,
            out_dir,
            formats,
            seed,
        })
    }

    fn domain(&self) -> Result<DomainSpec, ConfigError> {
        let kind = self.str_or("domain.kind", "interval")?;
        let foreign = match kind {
            "interval" => DISK_ONLY,
            "disk" => INTERVAL_ONLY,
            other => {
                return Err(invalid(
                    "domain.kind",
                    format!("expected interval or disk, got {other}"),
                ))
            }
        };
        if let Some(k) = foreign.iter().find(|k| self.has(k)) {
            return Err(invalid(k, format!("does not apply to kind = {kind}")));
        }
        let spec = if kind == "interval" {
            let length = self.f64_or("domain.length", 1.0)?;
            positive("domain.length", length)?;
            DomainSpec::Interval {
                length,
                cells: self.usize_or("domain.n", 32)?,
                gamma: self.endpoints("domain.gamma")?,
                gamma0: self.endpoints("domain.gamma0")?,
            }
        } else {
            let radius = self.f64_or("domain.radius", 1.0)?;
            positive("domain.radius", radius)?;
            let rings = self.uint_opt("domain.n_r")?.ok_or(ConfigError::Missing("domain.n_r"))? as usize;
            let sectors = self
                .uint_opt("domain.n_theta")?
                .ok_or(ConfigError::Missing("domain.n_theta"))? as usize;
            DomainSpec::Disk {
                radius,
                rings,
                sectors,
                gamma: Arc {
                    center: self.f64_or("domain.gamma_center", 0.0)?,
                    half_width: self.f64_or("domain.gamma_half_width", PI / 8.0)?,
                },
                gamma0: Arc {
                    center: self.f64_or("domain.gamma0_center", 0.0)?,
                    half_width: self.f64_or("domain.gamma0_half_width", PI / 4.0)?,
                },
            }
        };
        spec.validate().map_err(|e| invalid("domain", e.to_string()))?;
        Ok(spec)
    }

    fn endpoints(&self, key: &'static str) -> Result<Endpoints, ConfigError> {
        match self.str_or(key, "right")? {
            "left" => Ok(Endpoints::LEFT),
            "right" => Ok(Endpoints::RIGHT),
            "both" => Ok(Endpoints::BOTH),
            other => Err(invalid(key, format!("expected left, right or both, got {other}"))),
        }
    }
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {x}")))
    }
}

fn unit_interval(field: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must lie in (0, 1), got {x}")))
    }
}

fn at_least_one(field: &str, n: usize) -> Result<(), ConfigError> {
    if n >= 1 {
        Ok(())
    } else {
        Err(invalid(field, "must be at least 1"))
    }
}

fn positive_list(field: &str, xs: &[f64]) -> Result<(), ConfigError> {
    if xs.is_empty() {
        return Err(invalid(field, "list is empty"));
    }
    for x in xs {
        positive(field, *x)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config_str("domain.kind = \"interval\"\ntime.T = 1\n").unwrap();
        assert!(matches!(cfg.domain, DomainSpec::Interval { cells: 32, .. }));
        assert_eq!(cfg.d, 1.0);
        assert_eq!(cfg.steps, 128);
        assert_eq!(cfg.epsilon, 1e-8);
        assert_eq!(cfg.lambda, 2.0);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = parse_config_str("[hum]\nepsilon = 1e-4\n[time]\nT = 0.5\n").unwrap();
        let b = parse_config_str("hum.epsilon = 1e-4\ntime.T = 0.5\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disk_without_sectors_names_the_field() {
        let err = parse_config_str("domain.kind = \"disk\"\ndomain.n_r = 8\ntime.T = 1\n").unwrap_err();
        assert_eq!(err.field(), Some("domain.n_theta"));
    }

    #[test]
    fn negative_horizon_names_t() {
        let err = parse_config_str("time.T = -1\n").unwrap_err();
        assert_eq!(err.field(), Some("time.T"));
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = parse_config_str("time.T = 1\nhum.epsilom = 1e-3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("hum.epsilom") && msg.contains("hum.epsilon") && msg.contains("domain.kind"));
    }

    #[test]
    fn echo_ignores_output_dir() {
        let a = parse_config_str("time.T = 1\noutput.dir = \"a\"\n").unwrap();
        let b = parse_config_str("time.T = 1\noutput.dir = \"b\"\n").unwrap();
        assert_eq!(a.echo(), b.echo());
    }
}
