//! Run configuration: a human-readable config file plus flag overrides,
//! with flags winning.

use std::collections::BTreeMap;
use std::path::PathBuf;

use inclusion_lab::lyap::Mode;
use inclusion_lab::sim::ScenarioParams;

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    pub tfinal: Option<f64>,
    pub grid: Option<Vec<(f64, f64, usize)>>,
    pub delta: Option<f64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub mode: Option<String>,
    pub seed: u64,
    pub params: ScenarioParams,
}

impl RunConfig {
    /// Builds the configuration from a flag list, reading `--config` first
    /// so that explicit flags override file values.
    pub fn from_flags(flags: &[String]) -> Result<RunConfig, UsageError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut config_path: Option<String> = None;

        let mut it = flags.iter();
        while let Some(flag) = it.next() {
            let Some(name) = flag.strip_prefix("--") else {
                return Err(UsageError(format!("unexpected argument {flag:?}")));
            };
            let value = it
                .next()
                .ok_or_else(|| UsageError(format!("flag --{name} needs a value")))?
                .clone();
            if name == "config" {
                config_path = Some(value);
            } else {
                pairs.push((name.to_string(), value));
            }
        }

        let mut cfg = RunConfig {
            seed: 0,
            ..RunConfig::default()
        };
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| UsageError(format!("cannot read config {path:?}: {e}")))?;
            for (key, value) in parse_config_text(&text)? {
                cfg.apply(&key, &value)?;
            }
        }
        for (key, value) in pairs {
            cfg.apply(&key, &value)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), UsageError> {
        let bad = |what: &str| UsageError(format!("invalid {what} value {value:?}"));
        match key {
            "scenario" => self.scenario = Some(value.to_string()),
            "out" => self.out = Some(PathBuf::from(value)),
            "dt" => self.dt = Some(parse_positive(value).ok_or_else(|| bad("dt"))?),
            "tfinal" => self.tfinal = Some(parse_positive(value).ok_or_else(|| bad("tfinal"))?),
            "delta" => self.delta = Some(parse_positive(value).ok_or_else(|| bad("delta"))?),
            "tol" => {
                let v: f64 = value.parse().map_err(|_| bad("tol"))?;
                if !(v >= 0.0) {
                    return Err(bad("tol"));
                }
                self.tol = Some(v);
            }
            "samples" => {
                let n: usize = value.parse().map_err(|_| bad("samples"))?;
                if n == 0 {
                    return Err(bad("samples"));
                }
                self.samples = Some(n);
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "mode" => self.mode = Some(value.to_string()),
            "grid" => self.grid = Some(parse_grid(value)?),
            other => {
                // Remaining numeric keys are scenario parameters.
                let v: f64 = value.parse().map_err(|_| {
                    UsageError(format!(
                        "unknown option {other:?} (value {value:?} is not numeric)"
                    ))
                })?;
                self.params.set(other, v);
            }
        }
        Ok(())
    }

    pub fn certify_mode(&self) -> Result<Mode, UsageError> {
        match self.mode.as_deref() {
            None | Some("upper") => Ok(Mode::Upper),
            Some("lower") => Ok(Mode::Lower),
            Some("reduced") => Ok(Mode::Reduced),
            Some(other) => Err(UsageError(format!(
                "unknown mode {other:?}; expected upper, lower, or reduced"
            ))),
        }
    }
}

fn parse_positive(value: &str) -> Option<f64> {
    let v: f64 = value.parse().ok()?;
    (v > 0.0 && v.is_finite()).then_some(v)
}

/// Grid specification: one `min:max:count` per axis, comma-separated, with
/// at least two points per axis.
pub fn parse_grid(spec: &str) -> Result<Vec<(f64, f64, usize)>, UsageError> {
    let mut axes = Vec::new();
    for axis in spec.split(',') {
        let parts: Vec<&str> = axis.split(':').collect();
        if parts.len() != 3 {
            return Err(UsageError(format!(
                "bad grid axis {axis:?}; expected min:max:count"
            )));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| UsageError(format!("bad grid minimum {:?}", parts[0])))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| UsageError(format!("bad grid maximum {:?}", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| UsageError(format!("bad grid count {:?}", parts[2])))?;
        if count < 2 {
            return Err(UsageError(format!(
                "grid count must be at least 2, got {count}"
            )));
        }
        if !(hi > lo) {
            return Err(UsageError(format!("grid axis {axis:?} needs max > min")));
        }
        axes.push((lo, hi, count));
    }
    if axes.is_empty() {
        return Err(UsageError("empty grid specification".into()));
    }
    Ok(axes)
}

/// `key = value` lines with `#` comments.
fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(UsageError(format!(
                "config line {} is not key = value: {raw:?}",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Worker thread count from the environment; 0 means auto.
pub fn threads_from_env() -> usize {
    std::env::var("INCLUSION_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}
