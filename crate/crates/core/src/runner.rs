//! Batch execution, episode records and replay.
//!
//! Records are written as JSON lines, one episode per line, in seed order.
//! With timing disabled (the default) reruns of the same configuration
//! produce byte-identical files.

use std::io::{BufRead, Write};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{OracleConfig, Policy, PolicyKind};
use crate::env::{Action, ActionMode, EnvConfig, Environment, Observation, EPISODE_LENGTH};
use crate::error::{Error, Result};
use crate::light::LightSource;
use crate::params::GrowthParams;
use crate::rng::{self, Stream};
use crate::shapes::DigitSet;
use crate::task::{curriculum_schedule, Difficulty, LayoutConfig, ShapeSpec, TaskKind};
use rand::Rng;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Settings for a batch of episodes.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: TaskKind,
    pub difficulty: Difficulty,
    pub policy: PolicyKind,
    pub action_mode: ActionMode,
    /// First seed; episode `k` uses `seed + k`.
    pub seed: u64,
    pub episodes: usize,
    pub params: Option<GrowthParams>,
    pub layout: LayoutConfig,
    pub oracle: OracleConfig,
    /// Shape task: digits drawn uniformly per episode (overrides the task's own digit).
    pub digits: Vec<u8>,
    /// Shape task: draw digits from the curriculum schedule by episode index.
    pub curriculum: bool,
    pub digit_set: Arc<DigitSet>,
    /// Label stored in the record headers for the digit set.
    pub digit_source: String,
    pub record_timing: bool,
    pub parallel: bool,
}

impl RunConfig {
    pub fn new(task: TaskKind, difficulty: Difficulty, policy: PolicyKind) -> Self {
        Self {
            task,
            difficulty,
            policy,
            action_mode: ActionMode::Discrete,
            seed: 0,
            episodes: 1,
            params: None,
            layout: LayoutConfig::default(),
            oracle: OracleConfig::default(),
            digits: Vec::new(),
            curriculum: false,
            digit_set: DigitSet::bundled(),
            digit_source: "bundled".into(),
            record_timing: false,
            parallel: true,
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            params: self.params.clone(),
            layout: self.layout.clone(),
            action_mode: self.action_mode,
            digits: self.digit_set.clone(),
        }
    }

    /// Task of episode `index`, resolving digit lists and the curriculum.
    pub fn episode_task(&self, index: usize) -> TaskKind {
        let TaskKind::GrowPlantToShape { .. } = self.task else { return self.task.clone() };
        let pool = if self.curriculum { curriculum_schedule(index) } else { self.digits.clone() };
        if pool.is_empty() {
            return self.task.clone();
        }
        let mut rng = rng::stream(self.seed + index as u64, Stream::Curriculum);
        let digit = pool[rng.random_range(0..pool.len())];
        TaskKind::GrowPlantToShape { shape: ShapeSpec::Digit(digit) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub schema_version: u32,
    pub engine_version: String,
    pub task: TaskKind,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub policy: PolicyKind,
    pub action_mode: ActionMode,
    pub params: GrowthParams,
    pub params_fingerprint: String,
    pub layout: LayoutConfig,
    pub digit_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub step: usize,
    pub action: Action,
    pub reward: f64,
    pub branch_counts: Vec<usize>,
    pub alive_photons: usize,
    pub light: LightSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFooter {
    pub episodic_return: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub header: EpisodeHeader,
    pub steps: Vec<StepEntry>,
    pub footer: EpisodeFooter,
}

impl EpisodeRecord {
    pub fn final_branch_counts(&self) -> &[usize] {
        self.steps.last().map_or(&[], |s| &s.branch_counts)
    }

    pub fn final_reward(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.reward)
    }
}

/// Runs one episode to completion, passing every observation (reset frame
/// included) to `on_frame`.
pub fn run_episode_with(
    config: &RunConfig,
    index: usize,
    mut on_frame: impl FnMut(&Observation),
) -> Result<EpisodeRecord> {
    let seed = config.seed + index as u64;
    let task = config.episode_task(index);
    let started = Instant::now();
    let (mut env, obs) = Environment::new(task.clone(), config.difficulty, config.env_config(), seed)?;
    on_frame(&obs);
    let mut policy = Policy::new(config.policy, env.action_space(), seed, config.oracle.clone());
    let header = EpisodeHeader {
        schema_version: RECORD_SCHEMA_VERSION,
        engine_version: crate::ENGINE_VERSION.into(),
        task,
        difficulty: config.difficulty,
        seed,
        policy: config.policy,
        action_mode: config.action_mode,
        params: env.state().params.clone(),
        params_fingerprint: env.state().params.fingerprint(),
        layout: config.layout.clone(),
        digit_source: config.digit_source.clone(),
        shape_index: env.state().shape_index,
    };
    let mut steps = Vec::with_capacity(EPISODE_LENGTH);
    let mut episodic_return = 0.0;
    while !env.state().done {
        let action = policy.act(env.state());
        let out = env.step(&action)?;
        on_frame(&out.observation);
        episodic_return += out.reward;
        steps.push(StepEntry {
            step: env.state().step,
            action,
            reward: out.reward,
            branch_counts: out.info.branch_counts,
            alive_photons: out.info.alive_photons,
            light: out.info.light,
        });
    }
    let wall_clock_ms = config.record_timing.then(|| started.elapsed().as_secs_f64() * 1e3);
    Ok(EpisodeRecord { header, steps, footer: EpisodeFooter { episodic_return, wall_clock_ms } })
}

pub fn run_episode(config: &RunConfig, index: usize) -> Result<EpisodeRecord> {
    run_episode_with(config, index, |_| {})
}

/// Mean of the three contiguous seed groups and their spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub episodes: usize,
    pub mean_return: f64,
    pub std_return: f64,
    pub group_means: Vec<f64>,
    pub group_std: f64,
    pub mean_final_reward: f64,
    /// Fraction of steps that chose each action (discrete index or, for
    /// continuous actions, the sign of the velocity: `left`/`stay`/`right`).
    pub action_frequencies: Vec<(String, f64)>,
    /// Median over episodes of each plant's final segment count.
    pub median_branches_per_plant: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub records: Vec<EpisodeRecord>,
    pub summary: Summary,
}

/// Number of seed groups the summary spread is computed over.
pub const SEED_GROUPS: usize = 3;

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Population standard deviation.
fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    if xs.is_empty() {
        return 0.0;
    }
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn action_label(a: &Action) -> String {
    match *a {
        Action::Discrete(k) => k.to_string(),
        Action::Continuous { velocity, .. } if velocity < 0.0 => "left".into(),
        Action::Continuous { velocity, .. } if velocity > 0.0 => "right".into(),
        Action::Continuous { .. } => "stay".into(),
    }
}

/// Statistics over a set of records.
pub fn summarize(records: &[EpisodeRecord]) -> Summary {
    let returns: Vec<f64> = records.iter().map(|r| r.footer.episodic_return).collect();
    let group_means: Vec<f64> = if records.len() >= SEED_GROUPS {
        let size = returns.len() / SEED_GROUPS;
        (0..SEED_GROUPS)
            .map(|g| {
                let end = if g + 1 == SEED_GROUPS { returns.len() } else { (g + 1) * size };
                mean(&returns[g * size..end])
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
    let mut total = 0usize;
    for s in records.iter().flat_map(|r| &r.steps) {
        *counts.entry(action_label(&s.action)).or_default() += 1;
        total += 1;
    }
    let mut action_frequencies: Vec<(String, f64)> =
        counts.into_iter().map(|(k, c)| (k, c as f64 / total.max(1) as f64)).collect();
    action_frequencies.sort_by(|a, b| match (a.0.parse::<usize>(), b.0.parse::<usize>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.0.cmp(&b.0),
    });
    let plants = records.iter().map(|r| r.final_branch_counts().len()).max().unwrap_or(0);
    let median_branches_per_plant = (0..plants)
        .map(|p| {
            let mut v: Vec<f64> =
                records.iter().filter_map(|r| r.final_branch_counts().get(p).map(|&c| c as f64)).collect();
            median(&mut v)
        })
        .collect();
    let finals: Vec<f64> = records.iter().map(EpisodeRecord::final_reward).collect();
    Summary {
        episodes: records.len(),
        mean_return: mean(&returns),
        std_return: std_dev(&returns),
        group_std: std_dev(&group_means),
        group_means,
        mean_final_reward: mean(&finals),
        action_frequencies,
        median_branches_per_plant,
    }
}

/// Runs every episode of the batch; records come back in seed order.
pub fn run_batch(config: &RunConfig) -> Result<BatchResult> {
    if config.episodes == 0 {
        return Err(Error::InvalidConfig("episodes must be at least 1".into()));
    }
    let records: Vec<EpisodeRecord> = if config.parallel {
        (0..config.episodes).into_par_iter().map(|k| run_episode(config, k)).collect::<Result<_>>()?
    } else {
        (0..config.episodes).map(|k| run_episode(config, k)).collect::<Result<_>>()?
    };
    let summary = summarize(&records);
    Ok(BatchResult { records, summary })
}

pub fn write_records<W: Write>(mut out: W, records: &[EpisodeRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<EpisodeRecord>> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EpisodeRecord = serde_json::from_str(&line)?;
        if record.header.schema_version != RECORD_SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported record schema {}", record.header.schema_version)));
        }
        records.push(record);
    }
    Ok(records)
}

/// Re-executes a record's actions in a fresh environment and checks every
/// reward bit for bit.
pub fn replay_record(record: &EpisodeRecord, digits: Arc<DigitSet>) -> Result<()> {
    let h = &record.header;
    let config =
        EnvConfig { params: Some(h.params.clone()), layout: h.layout.clone(), action_mode: h.action_mode, digits };
    let (mut env, _) = Environment::new(h.task.clone(), h.difficulty, config, h.seed)?;
    if env.state().shape_index != h.shape_index {
        return Err(Error::ReplayMismatch(format!(
            "seed {}: shape image {:?} != recorded {:?}",
            h.seed,
            env.state().shape_index,
            h.shape_index
        )));
    }
    let mut total = 0.0;
    for entry in &record.steps {
        let out = env.step(&entry.action)?;
        total += out.reward;
        if out.reward.to_bits() != entry.reward.to_bits() || out.info.branch_counts != entry.branch_counts {
            return Err(Error::ReplayMismatch(format!(
                "seed {} step {}: reward {} != recorded {}",
                h.seed, entry.step, out.reward, entry.reward
            )));
        }
    }
    if total.to_bits() != record.footer.episodic_return.to_bits() {
        return Err(Error::ReplayMismatch(format!(
            "seed {}: return {} != recorded {}",
            h.seed, total, record.footer.episodic_return
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub task: String,
    pub steps: usize,
    pub seconds: f64,
    pub steps_per_sec: f64,
    pub params_fingerprint: String,
}

/// Steps a random policy through back-to-back episodes for at least
/// `min_steps` steps on one thread.
pub fn measure_throughput(
    kind: &TaskKind,
    difficulty: Difficulty,
    config: &EnvConfig,
    min_steps: usize,
) -> Result<ThroughputReport> {
    let (mut env, _) = Environment::new(kind.clone(), difficulty, config.clone(), 0)?;
    let mut policy = Policy::new(PolicyKind::Random, env.action_space(), 0, OracleConfig::default());
    let mut steps = 0usize;
    let mut seed = 0u64;
    let started = Instant::now();
    while steps < min_steps {
        if env.state().done {
            seed += 1;
            env.reset(seed)?;
        }
        let action = policy.act(env.state());
        env.step(&action)?;
        steps += 1;
    }
    let seconds = started.elapsed().as_secs_f64();
    Ok(ThroughputReport {
        task: kind.name().into(),
        steps,
        seconds,
        steps_per_sec: steps as f64 / seconds.max(1e-12),
        params_fingerprint: env.state().params.fingerprint(),
    })
}
