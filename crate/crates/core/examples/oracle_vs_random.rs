//! Mean episodic return of the random and oracle policies per configuration.
//!
//! Usage: `cargo run --release --example oracle_vs_random -- [episodes]`

use phototrope::runner::{run_batch, RunConfig};
use phototrope::{Difficulty, PolicyKind, ShapeSpec, TaskKind};

fn main() -> phototrope::Result<()> {
    let episodes: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let fairness = TaskKind::GrowMultiplePlants { plants: 2 };
    let shape = |d| TaskKind::GrowPlantToShape { shape: ShapeSpec::Digit(d) };
    let configs = [
        ("control easy", TaskKind::GrowPlantToGoal, Difficulty::Easy),
        ("control hard", TaskKind::GrowPlantToGoal, Difficulty::Hard),
        ("find easy", TaskKind::FindPlant, Difficulty::Easy),
        ("find hard", TaskKind::FindPlant, Difficulty::Hard),
        ("fairness easy", fairness.clone(), Difficulty::Easy),
        ("fairness hard", fairness, Difficulty::Hard),
        ("shape digit 3", shape(3), Difficulty::Random),
        ("shape digit 0", shape(0), Difficulty::Random),
    ];
    println!("{:14} {:>8} {:>8} {:>8}  oracle median branches", "", "random", "oracle", "gain");
    for (name, task, difficulty) in configs {
        let run = |policy| {
            let mut config = RunConfig::new(task.clone(), difficulty, policy);
            config.episodes = episodes;
            run_batch(&config).map(|b| b.summary)
        };
        let random = run(PolicyKind::Random)?;
        let oracle = run(PolicyKind::Oracle)?;
        let gain = (oracle.mean_return - random.mean_return) / random.mean_return;
        println!(
            "{name:14} {:8.3} {:8.3} {:+7.1}%  {:?}",
            random.mean_return,
            oracle.mean_return,
            100.0 * gain,
            oracle.median_branches_per_plant
        );
    }
    Ok(())
}
