//! Run configuration: a JSON document whose keys can all be overridden from
//! the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use pccd_core::codec::{DbscanParams, ElementSlots};
use pccd_core::diffusion::{NoiseSchedule, DEFAULT_OFFSET, DEFAULT_STEPS};
use pccd_core::eval::{CutoffRule, EvalOptions, DEFAULT_NOVELTY_TOL};
use pccd_core::nn::{DenoiserConfig, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub offset: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { steps: DEFAULT_STEPS, offset: DEFAULT_OFFSET }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecConfig {
    pub dbscan: DbscanParams,
    /// Comma-separated element symbols fixing the slot order. When absent
    /// each structure's own species are used, in ascending atomic number.
    pub slots: Option<String>,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig { dbscan: DbscanParams::default(), slots: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub species_aware: bool,
    pub wrap: bool,
    /// Bond cutoff in Å for graph edit distance.
    pub bond_cutoff: f64,
    /// Per species pair overrides, keyed "A-B".
    pub pair_cutoffs: BTreeMap<String, f64>,
    pub distances: bool,
    pub novelty_tol: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            species_aware: true,
            wrap: true,
            bond_cutoff: 3.0,
            pair_cutoffs: BTreeMap::new(),
            distances: true,
            novelty_tol: DEFAULT_NOVELTY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Clamp the implied clean estimate to the data range at every reverse
    /// step when sampling from a trained model.
    pub clamp_x0: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { clamp_x0: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub schedule: ScheduleConfig,
    pub denoiser: DenoiserConfig,
    pub train: TrainConfig,
    pub codec: CodecConfig,
    pub evaluation: EvaluationConfig,
    pub sampling: SamplingConfig,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset_dir: None,
            output_dir: PathBuf::from("pccd-out"),
            schedule: ScheduleConfig::default(),
            denoiser: DenoiserConfig::default(),
            train: TrainConfig::default(),
            codec: CodecConfig::default(),
            evaluation: EvaluationConfig::default(),
            sampling: SamplingConfig::default(),
            seed: None,
        }
    }
}

/// Named architecture presets accepted by `--preset`.
pub fn preset(name: &str) -> Result<DenoiserConfig> {
    match name {
        "default" | "four-stage" => Ok(DenoiserConfig::default()),
        "five-stage" => Ok(DenoiserConfig::five_stage()),
        "toy" => Ok(DenoiserConfig::toy()),
        "tiny" => Ok(DenoiserConfig::tiny()),
        _ => Err(CliError::Usage(format!("unknown preset {name:?} (default, five-stage, toy, tiny)"))),
    }
}

/// Parses a `key=value` override. The value is read as JSON when it parses,
/// as a plain string otherwise.
pub fn parse_assignment(s: &str) -> std::result::Result<(String, Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty key in {s:?}"));
    }
    let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), v))
}

fn set_path(root: &mut Value, dotted: &str, v: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = dotted.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("cannot set {dotted}: {} is not a table", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(CliError::Usage(format!("unknown config key {dotted:?}")));
            }
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        cur = obj.get_mut(*part).ok_or_else(|| CliError::Usage(format!("unknown config key {dotted:?}")))?;
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
    }
    Ok(())
}

impl RunConfig {
    /// Defaults, then the config file, then `overrides` in order.
    pub fn load(file: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self> {
        let mut v = serde_json::to_value(RunConfig::default())?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let user: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
            merge(&mut v, user, "")?;
        }
        for (k, val) in overrides {
            set_path(&mut v, k, val.clone())?;
        }
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule()?;
        self.denoiser.validate()?;
        self.train.validate()?;
        if self.denoiser.steps != self.schedule.steps {
            return Err(CliError::Usage(format!(
                "denoiser.steps = {} but schedule.steps = {}",
                self.denoiser.steps, self.schedule.steps
            )));
        }
        self.codec.dbscan.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.fixed_slots()?;
        let e = &self.evaluation;
        if !(e.bond_cutoff > 0.0) || e.pair_cutoffs.values().any(|c| !(*c > 0.0)) || !(e.novelty_tol >= 0.0) {
            return Err(CliError::Usage("cutoffs must be positive and novelty_tol non-negative".into()));
        }
        self.cutoff_rule()?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::cosine(self.schedule.steps, self.schedule.offset).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn fixed_slots(&self) -> Result<Option<ElementSlots>> {
        self.codec
            .slots
            .as_deref()
            .map(ElementSlots::parse)
            .transpose()
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn cutoff_rule(&self) -> Result<CutoffRule> {
        let mut rule = CutoffRule::uniform(self.evaluation.bond_cutoff);
        for (k, &c) in &self.evaluation.pair_cutoffs {
            let (a, b) = k
                .split_once('-')
                .ok_or_else(|| CliError::Usage(format!("pair cutoff key {k:?} is not of the form A-B")))?;
            rule = rule.with_pair(a.trim(), b.trim(), c);
        }
        Ok(rule)
    }

    pub fn eval_options(&self) -> Result<EvalOptions> {
        Ok(EvalOptions {
            species_aware: self.evaluation.species_aware,
            wrap: self.evaluation.wrap,
            cutoff: self.cutoff_rule()?,
            distances: self.evaluation.distances,
        })
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| CliError::Usage("this command is randomized and needs an explicit --seed".into()))
    }
}

/// Recursive merge that rejects keys the defaults do not have. Tables merge
/// key by key; free-form tables (empty by default) and everything else are
/// replaced.
fn merge(base: &mut Value, over: Value, path: &str) -> Result<()> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if !b.is_empty() => {
            for (k, v) in o {
                let key = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                let slot = b.get_mut(&k).ok_or_else(|| CliError::Usage(format!("unknown config key {key:?}")))?;
                merge(slot, v, &key)?;
            }
        }
        (b, o) => *b = o,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::load(None, &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.schedule.steps, 1000);
        assert_eq!(c.train.adam_beta2, 0.99);
    }

    #[test]
    fn overrides_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"train": {"learning_rate": 0.5}, "seed": 3}"#).unwrap();
        let c = RunConfig::load(Some(&path), &[parse_assignment("seed=9").unwrap()]).unwrap();
        assert_eq!(c.train.learning_rate, 0.5);
        assert_eq!(c.train.batch_size, 128);
        assert_eq!(c.seed, Some(9));
        let c = RunConfig::load(Some(&path), &[parse_assignment("train.learning_rate=0.01").unwrap()]).unwrap();
        assert_eq!(c.train.learning_rate, 0.01);
    }

    #[test]
    fn bad_keys_and_values() {
        assert!(RunConfig::load(None, &[parse_assignment("nope=1").unwrap()]).is_err());
        assert!(RunConfig::load(None, &[parse_assignment("schedule.steps=0").unwrap()]).is_err());
        assert!(RunConfig::load(None, &[parse_assignment("codec.slots=Mg,Mn,O,Fe").unwrap()]).is_err());
        assert!(parse_assignment("novalue").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"train": {"lr": 0.5}}"#).unwrap();
        assert!(RunConfig::load(Some(&path), &[]).is_err());
    }

    #[test]
    fn string_fallback_and_optional_tables() {
        let (k, v) = parse_assignment("codec.slots=O,Mg").unwrap();
        assert_eq!(k, "codec.slots");
        assert_eq!(v, Value::String("O,Mg".into()));
        let c = RunConfig::load(None, &[(k, v)]).unwrap();
        assert_eq!(c.fixed_slots().unwrap().unwrap().symbols(), ["O", "Mg"]);
    }

    #[test]
    fn pair_cutoffs() {
        let c = RunConfig::load(None, &[parse_assignment(r#"evaluation.pair_cutoffs={"Mg-O": 2.5}"#).unwrap()]).unwrap();
        let rule = c.cutoff_rule().unwrap();
        assert_eq!(rule.cutoff("O", "Mg"), 2.5);
        assert_eq!(rule.cutoff("Mg", "Mg"), 3.0);
    }
}
