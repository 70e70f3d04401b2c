//! Run configuration: one JSON document, with command-line flags
//! overriding individual fields.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use kindsim::experiments::InitSpec;
use kindsim::functionals::CertificationSpec;
use kindsim::{GraphSpec, Params};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_graph")]
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_minus: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default = "default_event_budget")]
    pub event_budget: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Event stride of the trajectory dump.
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default = "default_init")]
    pub init: InitSpec,
    /// Population sizes for `sweep`.
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub certification: CertificationSpec,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_graph() -> GraphSpec {
    GraphSpec::Complete { n: 10 }
}
fn default_epsilon() -> f64 {
    0.3
}
fn default_replicates() -> u64 {
    1000
}
fn default_event_budget() -> u64 {
    10_000_000
}
fn default_delta() -> f64 {
    1e-6
}
fn default_stride() -> u64 {
    1
}
fn default_init() -> InitSpec {
    InitSpec::Uniform
}
fn default_ns() -> Vec<usize> {
    vec![10, 20, 40]
}
fn default_out() -> PathBuf {
    PathBuf::from("kindsim-out")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    /// Reads `base` (a JSON object, usually a config file) and applies the
    /// overrides field by field before deserializing.
    pub fn from_parts(base: Option<&str>, overrides: Map<String, Value>) -> Result<RunConfig, ConfigError> {
        let mut doc = match base {
            Some(text) => serde_json::from_str::<Value>(text)
                .map_err(|e| ConfigError(format!("config is not valid JSON: {e}")))?,
            None => Value::Object(Map::new()),
        };
        let obj = doc
            .as_object_mut()
            .ok_or_else(|| ConfigError("config must be a JSON object".into()))?;
        obj.extend(overrides);
        let cfg: RunConfig =
            serde_json::from_value(doc).map_err(|e| ConfigError(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.graph.validate().map_err(|e| ConfigError(e.to_string()))?;
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(ConfigError(format!("field `epsilon` must lie in (0, 1/2), got {}", self.epsilon)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(ConfigError(format!("field `delta` must lie in [0, 1), got {}", self.delta)));
        }
        if self.stride == 0 {
            return Err(ConfigError("field `stride` must be positive".into()));
        }
        for (name, v) in [("mu_plus", self.mu_plus), ("mu_minus", self.mu_minus)] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ConfigError(format!("field `{name}` must lie in [0, 1], got {v}")));
                }
            }
        }
        Ok(())
    }

    /// Model parameters; both fields are required by every command that
    /// runs the dynamics.
    pub fn params(&self) -> Result<Params, ConfigError> {
        let mu_plus = self.mu_plus.ok_or_else(|| ConfigError("missing field `mu_plus`".into()))?;
        let mu_minus = self.mu_minus.ok_or_else(|| ConfigError("missing field `mu_minus`".into()))?;
        Params::new(mu_plus, mu_minus).map_err(|e| ConfigError(e.to_string()))
    }
}

/// Compact graph syntax for `--graph`: `complete:N`, `cycle:N`, `grid:WxH`,
/// `er:N:P` (or `erdos_renyi:N:P`), `file:PATH`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphArg(pub GraphSpec);

impl FromStr for GraphArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| format!("expected KIND:ARGS, got {s:?}"))?;
        let num = |t: &str| t.parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
        let spec = match kind {
            "complete" => GraphSpec::Complete { n: num(rest)? },
            "cycle" => GraphSpec::Cycle { n: num(rest)? },
            "grid" => {
                let (w, h) = rest.split_once('x').ok_or_else(|| format!("grid expects WxH, got {rest:?}"))?;
                GraphSpec::Grid { w: num(w)?, h: num(h)? }
            }
            "er" | "erdos_renyi" => {
                let (n, p) = rest.split_once(':').ok_or_else(|| format!("er expects N:P, got {rest:?}"))?;
                GraphSpec::ErdosRenyi { n: num(n)?, p: p.parse().map_err(|e| format!("{p:?}: {e}"))? }
            }
            "file" => GraphSpec::FromFile { path: PathBuf::from(rest) },
            other => return Err(format!("unknown graph kind {other:?}")),
        };
        Ok(GraphArg(spec))
    }
}

/// `--init uniform` or `--init constant:V`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitArg(pub InitSpec);

impl FromStr for InitArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "uniform" => Ok(InitArg(InitSpec::Uniform)),
            Some(("constant", v)) => Ok(InitArg(InitSpec::Constant {
                value: v.parse().map_err(|e| format!("{v:?}: {e}"))?,
            })),
            _ => Err(format!("expected `uniform` or `constant:V`, got {s:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_fill_an_empty_document() {
        let cfg = RunConfig::from_parts(Some("{}"), Map::new()).unwrap();
        assert_eq!(cfg.graph, GraphSpec::Complete { n: 10 });
        assert_eq!(cfg.epsilon, 0.3);
        assert_eq!(cfg.event_budget, 10_000_000);
        assert!(cfg.params().is_err());
    }

    #[test]
    fn overrides_win() {
        let base = r#"{"mu_plus": 0.5, "mu_minus": 0.2, "seed": 3}"#;
        let mut o = Map::new();
        o.insert("seed".into(), json!(9));
        let cfg = RunConfig::from_parts(Some(base), o).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.params().unwrap(), Params::new(0.5, 0.2).unwrap());
    }

    #[test]
    fn missing_mu_is_named() {
        let cfg = RunConfig::from_parts(Some(r#"{"mu_plus": 0.5}"#), Map::new()).unwrap();
        assert!(cfg.params().unwrap_err().0.contains("mu_minus"));
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        assert!(RunConfig::from_parts(Some(r#"{"mu_plsu": 0.5}"#), Map::new()).is_err());
        assert!(RunConfig::from_parts(Some(r#"{"epsilon": 0.5}"#), Map::new()).is_err());
        assert!(RunConfig::from_parts(Some(r#"{"mu_plus": 1.5}"#), Map::new()).is_err());
        assert!(RunConfig::from_parts(Some("[1]"), Map::new()).is_err());
        assert!(RunConfig::from_parts(Some(r#"{"graph": {"kind": "cycle", "n": 2}}"#), Map::new()).is_err());
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{
            "graph": {"kind": "erdos_renyi", "n": 20, "p": 0.2},
            "mu_plus": 0.5, "mu_minus": 0.2, "epsilon": 0.25, "replicates": 10,
            "event_budget": 500, "seed": 77, "delta": 0.001, "stride": 5,
            "init": {"kind": "constant", "value": -0.5}, "ns": [8, 16],
            "certification": {"trajectories": 3}, "out": "somewhere"
        }"#;
        let cfg = RunConfig::from_parts(Some(text), Map::new()).unwrap();
        let again = RunConfig::from_parts(Some(&serde_json::to_string(&cfg).unwrap()), Map::new()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.certification.trajectories, 3);
        assert_eq!(cfg.certification.grid_points, 50);
    }

    #[test]
    fn graph_arguments() {
        assert_eq!("complete:4".parse::<GraphArg>().unwrap().0, GraphSpec::Complete { n: 4 });
        assert_eq!("grid:3x5".parse::<GraphArg>().unwrap().0, GraphSpec::Grid { w: 3, h: 5 });
        assert_eq!("er:20:0.2".parse::<GraphArg>().unwrap().0, GraphSpec::ErdosRenyi { n: 20, p: 0.2 });
        assert!("star:4".parse::<GraphArg>().is_err());
        assert!("grid:3".parse::<GraphArg>().is_err());
        assert_eq!("constant:1".parse::<InitArg>().unwrap().0, InitSpec::Constant { value: 1.0 });
        assert!("gauss".parse::<InitArg>().is_err());
    }
}
