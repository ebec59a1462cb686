//! Sweep configuration: one JSON document, explicit hardware keys, defaults only for numerical knobs.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hybrid_repeater::optimizer::OptimizerOptions;
use hybrid_repeater::scheduling::Protocol;
use hybrid_repeater::swaps::Topology;
use hybrid_repeater::validation::SuiteOptions;
use hybrid_repeater::{EmissionSettings, HardwareParams};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Hardware keys that may be omitted; everything else must be spelled out.
pub const OPTIONAL_HARDWARE_KEYS: [&str; 4] = ["visibility", "flux_matching", "dc_acceptance", "fiber_speed_km_s"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub hardware: HardwareParams,
    #[serde(default = "all_protocols")]
    pub protocols: Vec<Protocol>,
    #[serde(default = "all_topologies")]
    pub topologies: Vec<Topology>,
    pub distances_km: Vec<f64>,
    pub f_target: f64,
    /// Evaluate these emission probabilities instead of optimizing.
    #[serde(default)]
    pub fixed_emission: Option<EmissionSettings>,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
    #[serde(default)]
    pub validation: SuiteOptions,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn all_protocols() -> Vec<Protocol> {
    Protocol::ALL.to_vec()
}

fn all_topologies() -> Vec<Topology> {
    vec![Topology::Repeater, Topology::Direct]
}

fn default_seed() -> u64 {
    7
}

fn keys_of<T: Serialize>(v: &T) -> BTreeSet<String> {
    match serde_json::to_value(v) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => BTreeSet::new(),
    }
}

fn unknown_in(obj: &Map<String, Value>, known: &BTreeSet<String>, prefix: &str, out: &mut Vec<String>) {
    out.extend(obj.keys().filter(|k| !known.contains(*k)).map(|k| format!("{prefix}{k}")));
}

/// Collects every unknown and missing key before serde sees the document.
fn check_keys(doc: &Value) -> Result<()> {
    let Value::Object(top) = doc else { bail!("config must be a JSON object") };
    let hw_keys = keys_of(&HardwareParams::from_intrinsic(0.8, 0.5));
    let top_keys: BTreeSet<String> = [
        "hardware",
        "protocols",
        "topologies",
        "distances_km",
        "f_target",
        "fixed_emission",
        "optimizer",
        "validation",
        "seed",
        "threads",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut unknown = Vec::new();
    let mut missing = Vec::new();
    unknown_in(top, &top_keys, "", &mut unknown);
    for k in ["hardware", "distances_km", "f_target"] {
        if !top.contains_key(k) {
            missing.push(k.to_string());
        }
    }
    if let Some(Value::Object(hw)) = top.get("hardware") {
        unknown_in(hw, &hw_keys, "hardware.", &mut unknown);
        missing.extend(
            hw_keys
                .iter()
                .filter(|k| !hw.contains_key(*k) && !OPTIONAL_HARDWARE_KEYS.contains(&k.as_str()))
                .map(|k| format!("hardware.{k}")),
        );
    }
    let nested: [(&str, BTreeSet<String>); 3] = [
        ("optimizer", keys_of(&OptimizerOptions::default())),
        ("validation", keys_of(&SuiteOptions::default())),
        ("fixed_emission", keys_of(&EmissionSettings::new(0.0, 0.0, 0.0))),
    ];
    for (name, known) in nested {
        if let Some(Value::Object(m)) = top.get(name) {
            unknown_in(m, &known, &format!("{name}."), &mut unknown);
        }
    }
    if !unknown.is_empty() || !missing.is_empty() {
        let mut msg = String::from("invalid config");
        if !unknown.is_empty() {
            msg += &format!("; unknown keys: {}", unknown.join(", "));
        }
        if !missing.is_empty() {
            msg += &format!("; missing keys: {}", missing.join(", "));
        }
        bail!(msg);
    }
    Ok(())
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        check_keys(&doc)?;
        let cfg: Config = serde_json::from_value(doc).context("config does not match the schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("loading {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.hardware.validate()?;
        if !(self.f_target > 0.0 && self.f_target <= 1.0) {
            bail!("f_target {} not in (0, 1]", self.f_target);
        }
        if let Some(d) = self.distances_km.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            bail!("distance {d} km is not a non-negative number");
        }
        if let Some(s) = &self.fixed_emission {
            s.validate()?;
        }
        let o = &self.optimizer;
        if !(o.lower > 0.0 && o.lower < o.upper && o.upper < 1.0) {
            bail!("optimizer bounds [{}, {}] must satisfy 0 < lower < upper < 1", o.lower, o.upper);
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        Ok(())
    }
}
