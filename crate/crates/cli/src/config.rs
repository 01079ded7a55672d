//! Run configuration read from TOML and overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub state: StateSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub sampler: SamplerSection,
    pub instrument: InstrumentSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub path: Option<String>,
    pub example: Option<String>,
    /// Scalar overrides of the example parameters.
    pub params: BTreeMap<String, f64>,
    pub tol: Option<f64>,
}

/// Gaussian hybrid state in `(Q, P, X)` ordering.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSection {
    pub mean: Option<Vec<f64>>,
    pub cov: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub count: Option<usize>,
    /// Half-width of the probe range in `ξ` per axis.
    pub half_width: Option<Vec<f64>>,
    /// Explicit probe points; replaces the axis sweeps.
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub times: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub seed: Option<u64>,
    pub npaths: Option<usize>,
    pub nsteps: Option<usize>,
    pub t_final: Option<f64>,
    pub initial_mean: Option<Vec<f64>>,
    pub initial_cov: Option<Vec<Vec<f64>>>,
    pub paths_csv: Option<String>,
    pub paths_bin: Option<String>,
    pub ecf_points: Option<usize>,
    pub ecf_half_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstrumentSection {
    pub times: Option<Vec<f64>>,
    pub ks: Option<Vec<Vec<f64>>>,
    pub zeta: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub boxes: Vec<BoxSpec>,
    pub zetas: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: Option<String>,
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Resolved configuration as `#`-prefixed header lines.
    pub fn header(&self, command: &str) -> Vec<String> {
        let mut out = vec![format!("hybridqf {command}")];
        let body = toml::to_string(self).unwrap_or_default();
        out.extend(body.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let c = RunConfig::parse(
            r#"
[model]
example = "hybrid"
params = { g = 0.5 }
[time]
times = [0.5, 1.0]
[instrument]
boxes = [{ lower = [-1.0, -1.0], upper = [1.0, 1.0] }]
"#,
        )
        .unwrap();
        assert_eq!(c.model.example.as_deref(), Some("hybrid"));
        assert_eq!(c.model.params["g"], 0.5);
        assert_eq!(c.time.times, Some(vec![0.5, 1.0]));
        assert_eq!(c.instrument.boxes.len(), 1);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::parse("[grid]\ncounts = 4\n").unwrap_err().to_string();
        assert!(e.contains("counts"), "{e}");
    }

    #[test]
    fn header_round_trips() {
        let mut c = RunConfig::default();
        c.grid.count = Some(64);
        c.sampler.seed = Some(7);
        let h = c.header("sample");
        let body: String = h[1..].iter().map(|l| format!("{l}\n")).collect();
        assert_eq!(RunConfig::parse(&body).unwrap(), c);
    }
}
