use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use phototrope::config::Settings;
use phototrope::export::{write_gif, write_png};
use phototrope::runner::{self, RunConfig};
use phototrope::shapes::DigitSet;
use phototrope::{Environment, Policy, Result};

#[derive(Parser)]
#[command(name = "phototrope", version, about = "Grow plants toward light: run, replay, render and benchmark episodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of episodes and write records.jsonl and summary.json.
    Run {
        #[command(flatten)]
        env: EnvArgs,
        /// Output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Also write one animated GIF per episode.
        #[arg(long)]
        export_gif: bool,
        /// Pixel scale of exported GIFs.
        #[arg(long, default_value_t = 4)]
        gif_scale: u32,
        /// Run episodes on one thread.
        #[arg(long)]
        serial: bool,
        /// Record per-episode wall-clock times (records stop being byte-stable).
        #[arg(long)]
        timing: bool,
    },
    /// Re-execute recorded episodes and verify every reward.
    Replay {
        /// A records.jsonl file written by `run`.
        records: PathBuf,
        /// Digit dataset directory used when the records were made.
        #[arg(long)]
        digit_dir: Option<PathBuf>,
    },
    /// Save one frame as PNG after an optional number of policy steps.
    Render {
        #[command(flatten)]
        env: EnvArgs,
        /// Steps to take before rendering.
        #[arg(long, default_value_t = 0)]
        steps: usize,
        #[arg(long, default_value = "frame.png")]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        scale: u32,
    },
    /// Measure single-threaded environment throughput.
    Bench {
        #[command(flatten)]
        env: EnvArgs,
        /// Minimum number of steps to time.
        #[arg(long, default_value_t = 20_000)]
        steps: usize,
    },
}

#[derive(Args)]
struct EnvArgs {
    /// control, find, fairness or shape.
    #[arg(long)]
    task: Option<String>,
    /// easy, hard or random.
    #[arg(long)]
    difficulty: Option<String>,
    /// random or oracle.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// discrete or continuous.
    #[arg(long)]
    action_mode: Option<String>,
    /// Number of plants in the fairness task.
    #[arg(long)]
    plants: Option<usize>,
    /// Comma separated digits for the shape task, e.g. 3,6.
    #[arg(long)]
    digits: Option<String>,
    /// Draw shape digits from the ranked curriculum.
    #[arg(long)]
    curriculum: bool,
    /// Directory with an IDX image and label file pair.
    #[arg(long)]
    digit_dir: Option<PathBuf>,
    /// A 28x28 PGM bitmap used as the shape target.
    #[arg(long)]
    shape_pgm: Option<PathBuf>,
    /// TOML settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any setting, e.g. --set growth.max_branching=4.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl EnvArgs {
    /// Defaults, then the settings file, then command-line values.
    fn settings(&self) -> Result<Settings> {
        let mut settings = Settings::new();
        if let Some(path) = &self.config {
            settings.merge(&Settings::from_toml_str(&fs::read_to_string(path).map_err(at(path))?)?);
        }
        let mut cli = Settings::new();
        let path_str = |p: &PathBuf| p.to_string_lossy().into_owned();
        let flags = [
            ("run.task", self.task.clone()),
            ("run.difficulty", self.difficulty.clone()),
            ("run.policy", self.policy.clone()),
            ("run.seed", self.seed.map(|v| v.to_string())),
            ("run.episodes", self.episodes.map(|v| v.to_string())),
            ("run.action_mode", self.action_mode.clone()),
            ("task.plants", self.plants.map(|v| v.to_string())),
            ("run.digits", self.digits.clone()),
            ("run.curriculum", self.curriculum.then(|| "true".to_string())),
            ("run.digit_dir", self.digit_dir.as_ref().map(path_str)),
            ("task.shape_pgm", self.shape_pgm.as_ref().map(path_str)),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cli.set(key, v)?;
            }
        }
        for pair in &self.overrides {
            cli.set_pair(pair)?;
        }
        settings.merge(&cli);
        Ok(settings)
    }
}

/// Attaches the path to an I/O error while keeping its kind.
fn at(path: &Path) -> impl FnOnce(std::io::Error) -> std::io::Error + '_ {
    move |e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

fn write_summary(path: &Path, value: &runner::Summary) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(at(path))?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn run(
    env: &EnvArgs,
    out_dir: Option<PathBuf>,
    export_gif: bool,
    gif_scale: u32,
    serial: bool,
    timing: bool,
) -> Result<()> {
    let settings = env.settings()?;
    let mut config = settings.run_config()?;
    config.parallel = !serial;
    config.record_timing = timing;
    let out_dir = out_dir.or_else(|| settings.get("run.out_dir").map(PathBuf::from)).unwrap_or_else(|| "out".into());
    let export_gif = export_gif || settings.parse::<bool>("run.export_gif")?.unwrap_or(false);
    fs::create_dir_all(&out_dir).map_err(at(&out_dir))?;

    let records = if export_gif {
        let mut records = Vec::with_capacity(config.episodes);
        for k in 0..config.episodes {
            let mut frames = Vec::new();
            let record = runner::run_episode_with(&config, k, |obs| frames.push(obs.clone()))?;
            write_gif(&frames, out_dir.join(format!("episode_{}.gif", record.header.seed)), gif_scale)?;
            records.push(record);
        }
        records
    } else {
        runner::run_batch(&config)?.records
    };
    let summary = runner::summarize(&records);
    let records_path = out_dir.join("records.jsonl");
    runner::write_records(BufWriter::new(File::create(&records_path).map_err(at(&records_path))?), &records)?;
    write_summary(&out_dir.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn replay(records: &Path, digit_dir: Option<&Path>) -> Result<()> {
    let digits = match digit_dir {
        Some(dir) => Arc::new(DigitSet::load_dir(dir)?),
        None => DigitSet::bundled(),
    };
    let records = runner::read_records(BufReader::new(File::open(records).map_err(at(records))?))?;
    for record in &records {
        runner::replay_record(record, digits.clone())?;
    }
    println!("replayed {} episodes, all rewards identical", records.len());
    Ok(())
}

fn render(env: &EnvArgs, steps: usize, out: &Path, scale: u32) -> Result<()> {
    let config: RunConfig = env.settings()?.run_config()?;
    let (mut environment, mut obs) =
        Environment::new(config.episode_task(0), config.difficulty, config.env_config(), config.seed)?;
    let mut policy = Policy::new(config.policy, environment.action_space(), config.seed, config.oracle.clone());
    for _ in 0..steps {
        if environment.state().done {
            break;
        }
        let action = policy.act(environment.state());
        obs = environment.step(&action)?.observation;
    }
    write_png(&obs, out, scale)?;
    println!("{}", out.display());
    Ok(())
}

fn bench(env: &EnvArgs, steps: usize) -> Result<()> {
    let config = env.settings()?.run_config()?;
    let report = runner::measure_throughput(&config.task, config.difficulty, &config.env_config(), steps)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { env, out_dir, export_gif, gif_scale, serial, timing } => {
            run(env, out_dir.clone(), *export_gif, *gif_scale, *serial, *timing)
        }
        Command::Replay { records, digit_dir } => replay(records, digit_dir.as_deref()),
        Command::Render { env, steps, out, scale } => render(env, *steps, out, *scale),
        Command::Bench { env, steps } => bench(env, *steps),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
