//! Layered key/value settings.
//!
//! Settings are flat dotted keys such as `growth.max_branching` or
//! `run.episodes`. Values come from three layers, later ones winning:
//! built-in defaults, a TOML settings file, and command-line overrides.

use std::collections::BTreeMap;

use std::sync::Arc;

use crate::agents::{OracleConfig, PolicyKind};
use crate::env::ActionMode;
use crate::error::{Error, Result};
use crate::params::GrowthParams;
use crate::runner::RunConfig;
use crate::shapes::{load_pgm, DigitSet};
use crate::task::{Difficulty, LayoutConfig, ShapeSpec, TaskKind};

/// Digit used by the shape task when no list is given.
pub const DEFAULT_DIGIT: u8 = 3;

/// Every key the engine understands.
pub const KNOWN_KEYS: &[&str] = &[
    "growth.light_density",
    "growth.initial_light_width_frac",
    "growth.first_branch_height_frac",
    "growth.max_branching",
    "growth.branch_length_frac",
    "growth.thickness_frac",
    "growth.radius_of_influence_px",
    "growth.kill_distance_px",
    "growth.light_displacement_px",
    "layout.edge_margin_frac",
    "layout.min_stem_separation_frac",
    "oracle.min_beam_width_px",
    "oracle.fair_period",
    "oracle.fair_lag_px",
    "task.plants",
    "task.shape_pgm",
    "run.task",
    "run.difficulty",
    "run.policy",
    "run.seed",
    "run.episodes",
    "run.action_mode",
    "run.digits",
    "run.digit_dir",
    "run.curriculum",
    "run.out_dir",
    "run.export_gif",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a TOML document; nested tables become dotted keys.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        let mut s = Self::new();
        flatten("", &toml::Value::Table(table), &mut s)?;
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::InvalidConfig(format!("unknown setting {key:?}")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) =
            pair.split_once('=').ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got {pair:?}")))?;
        self.set(k.trim(), v.trim())
    }

    /// Layers `other` on top of `self`.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::InvalidConfig(format!("{key} = {v:?}: {e}"))))
            .transpose()
    }

    /// Growth parameters for a `resolution`-pixel environment.
    pub fn growth_params(&self, resolution: u32) -> Result<GrowthParams> {
        let mut p = GrowthParams::for_resolution(resolution);
        macro_rules! apply {
            ($($field:ident),*) => {$(
                if let Some(v) = self.parse(concat!("growth.", stringify!($field)))? {
                    p.$field = v;
                }
            )*};
        }
        apply!(
            light_density,
            initial_light_width_frac,
            first_branch_height_frac,
            max_branching,
            branch_length_frac,
            thickness_frac,
            radius_of_influence_px,
            kill_distance_px,
            light_displacement_px
        );
        p.validate()?;
        Ok(p)
    }

    pub fn layout(&self) -> Result<LayoutConfig> {
        let mut l = LayoutConfig::default();
        if let Some(v) = self.parse("layout.edge_margin_frac")? {
            l.edge_margin_frac = v;
        }
        if let Some(v) = self.parse("layout.min_stem_separation_frac")? {
            l.min_stem_separation_frac = v;
        }
        Ok(l)
    }

    pub fn oracle(&self) -> Result<OracleConfig> {
        let mut o = OracleConfig::default();
        if let Some(v) = self.parse("oracle.min_beam_width_px")? {
            o.min_beam_width_px = v;
        }
        if let Some(v) = self.parse("oracle.fair_period")? {
            o.fair_period = v;
        }
        if let Some(v) = self.parse("oracle.fair_lag_px")? {
            o.fair_lag_px = v;
        }
        Ok(o)
    }
}

impl Settings {
    /// Digits from `run.digits`, a comma separated list.
    pub fn digit_list(&self) -> Result<Vec<u8>> {
        let Some(text) = self.get("run.digits") else { return Ok(Vec::new()) };
        text.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| match t.parse::<u8>() {
                Ok(d) if d <= 9 => Ok(d),
                _ => Err(Error::InvalidConfig(format!("run.digits: {t:?} is not a digit"))),
            })
            .collect()
    }

    pub fn task(&self) -> Result<TaskKind> {
        let name = self.get("run.task").unwrap_or("control");
        Ok(match name {
            "control" | "goal" => TaskKind::GrowPlantToGoal,
            "find" => TaskKind::FindPlant,
            "fairness" | "fair" => TaskKind::GrowMultiplePlants { plants: self.parse("task.plants")?.unwrap_or(2) },
            "shape" => {
                let shape = match self.get("task.shape_pgm") {
                    Some(path) => ShapeSpec::Mask(load_pgm(path)?),
                    None => ShapeSpec::Digit(self.digit_list()?.first().copied().unwrap_or(DEFAULT_DIGIT)),
                };
                TaskKind::GrowPlantToShape { shape }
            }
            other => return Err(Error::InvalidConfig(format!("unknown task {other:?}"))),
        })
    }

    /// Builds a batch configuration; unset keys keep their defaults.
    pub fn run_config(&self) -> Result<RunConfig> {
        let task = self.task()?;
        let difficulty: Difficulty = self.parse("run.difficulty")?.unwrap_or(Difficulty::Easy);
        let policy: PolicyKind = self.parse("run.policy")?.unwrap_or(PolicyKind::Random);
        let mut config = RunConfig::new(task.clone(), difficulty, policy);
        config.action_mode = self.parse::<ActionMode>("run.action_mode")?.unwrap_or(ActionMode::Discrete);
        config.seed = self.parse("run.seed")?.unwrap_or(0);
        config.episodes = self.parse("run.episodes")?.unwrap_or(1);
        config.params = Some(self.growth_params(task.resolution())?);
        config.layout = self.layout()?;
        config.oracle = self.oracle()?;
        config.digits = self.digit_list()?;
        config.curriculum = self.parse("run.curriculum")?.unwrap_or(false);
        if let Some(dir) = self.get("run.digit_dir") {
            config.digit_set = Arc::new(DigitSet::load_dir(dir)?);
            config.digit_source = dir.to_string();
        }
        if config.episodes == 0 {
            return Err(Error::InvalidConfig("run.episodes must be at least 1".into()));
        }
        Ok(config)
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Settings) -> Result<()> {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out)?;
            }
            Ok(())
        }
        toml::Value::String(s) => out.set(prefix, s.clone()),
        toml::Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.set(prefix, parts.join(","))
        }
        other => out.set(prefix, other.to_string()),
    }
}
