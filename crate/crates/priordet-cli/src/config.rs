//! Config file schema and flag resolution. One JSON document carries the
//! scenario (same wire form as the library's density serialization), the
//! master seed, and one optional section per subcommand; command-line flags
//! override config keys field by field.

use serde::{Deserialize, Serialize};

use priordet::density::{DensityPair, Scenario};
use priordet::estimators::EstimateMode;

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<RiskSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<MarginSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lowerbound: Option<LowerboundSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipschitzSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<ConcentrationSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskSection {
    pub q_used: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub mode: Option<EstimateMode>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceSection {
    pub kinds: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginSection {
    pub t_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerboundSection {
    pub kappa: Option<f64>,
    pub c: Option<f64>,
    pub n: Option<usize>,
    pub floor_ns: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub mode: Option<EstimateMode>,
    pub n_grid: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub alpha: Option<f64>,
    pub overlay_c_prime: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzSection {
    pub thetas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSection {
    pub mode: Option<EstimateMode>,
    pub n: Option<usize>,
    pub eps_grid: Option<Vec<f64>>,
    pub trials: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&std::path::Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "config file not found: {}",
                path.display()
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config schema error in {}: {e}", path.display())))
    }
}

/// Scenario override flags shared by the scenario-driven subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct ScenarioArgs {
    /// Density family: gaussian | discrete | appendix_a
    #[arg(long)]
    pub family: Option<String>,
    /// Gaussian mean under hypothesis 0
    #[arg(long)]
    pub mean0: Option<f64>,
    /// Gaussian mean under hypothesis 1
    #[arg(long)]
    pub mean1: Option<f64>,
    /// Shared Gaussian standard deviation
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Discrete alphabet points (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub alphabet: Option<Vec<f64>>,
    /// Hypothesis-0 weights (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub weights0: Option<Vec<f64>>,
    /// Hypothesis-1 weights (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub weights1: Option<Vec<f64>>,
    /// Piecewise-family exponent kappa (> 1)
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Piecewise-family slope constant c
    #[arg(long)]
    pub c: Option<f64>,
    /// Piecewise-family breakpoint t
    #[arg(long)]
    pub t: Option<f64>,
    /// True prior probability of hypothesis 1
    #[arg(long)]
    pub q: Option<f64>,
    /// Trim bound theta (prior constrained to [theta, 1 - theta])
    #[arg(long)]
    pub theta: Option<f64>,
}

impl ScenarioArgs {
    /// Resolve the scenario: start from the config file's `scenario` object
    /// (if any), then apply flag overrides.
    pub fn resolve(&self, file: &FileConfig) -> Result<Scenario, CliError> {
        let mut doc = match &file.scenario {
            Some(value) => value.clone(),
            None => serde_json::json!({}),
        };
        let obj = doc
            .as_object_mut()
            .ok_or_else(|| CliError::Usage("config scenario must be a JSON object".into()))?;
        if let Some(family) = &self.family {
            obj.insert("family".into(), serde_json::json!(family));
            obj.remove("params");
        }
        if !obj.contains_key("params") {
            obj.insert("params".into(), serde_json::json!({}));
        }
        let params = obj
            .get_mut("params")
            .and_then(|p| p.as_object_mut())
            .ok_or_else(|| CliError::Usage("scenario params must be a JSON object".into()))?;
        macro_rules! set_param {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    params.insert(stringify!($field).into(), serde_json::json!(v));
                }
            };
        }
        set_param!(mean0);
        set_param!(mean1);
        set_param!(sigma);
        set_param!(alphabet);
        set_param!(weights0);
        set_param!(weights1);
        set_param!(kappa);
        set_param!(c);
        set_param!(t);
        if let Some(q) = self.q {
            obj.insert("q".into(), serde_json::json!(q));
        }
        if let Some(theta) = self.theta {
            obj.insert("theta".into(), serde_json::json!(theta));
        }
        // Gaussian defaults keep `risk --family gaussian --q ...` short.
        if obj.get("family").and_then(|f| f.as_str()) == Some("gaussian") {
            let params = obj.get_mut("params").unwrap().as_object_mut().unwrap();
            params.entry("mean0").or_insert(serde_json::json!(0.0));
            params.entry("mean1").or_insert(serde_json::json!(2.0));
            params.entry("sigma").or_insert(serde_json::json!(1.0));
        }
        if !obj.contains_key("theta") {
            obj.insert("theta".into(), serde_json::json!(0.1));
        }
        let scenario: Scenario = serde_json::from_value(doc)
            .map_err(|e| CliError::Usage(format!("scenario schema error: {e}")))?;
        Ok(scenario)
    }
}

/// Rebuild the canonical serialized form of a resolved scenario (used for
/// hashing and echoing).
pub fn scenario_value(scenario: &Scenario) -> serde_json::Value {
    serde_json::to_value(scenario).expect("scenario serializes")
}

/// Convenience: a density pair from the scenario value, for commands that
/// only need the pair.
pub fn pair_of(scenario: &Scenario) -> &DensityPair {
    scenario.pair()
}
