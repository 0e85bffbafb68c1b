//! Prints one episode step by step and draws the final plant as ASCII.
//!
//! Usage: `cargo run --example trace -- [seed] [random|oracle] [control|find|fairness|shape] [easy|hard|random]`

use phototrope::config::Settings;
use phototrope::light::illuminated;
use phototrope::{Environment, Policy, Target};

fn main() -> phototrope::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut settings = Settings::new();
    for (key, value) in ["run.seed", "run.policy", "run.task", "run.difficulty"].iter().zip(&args) {
        settings.set(key, value.as_str())?;
    }
    let config = settings.run_config()?;
    let (mut env, _) = Environment::new(config.task.clone(), config.difficulty, config.env_config(), config.seed)?;
    let mut policy = Policy::new(config.policy, env.action_space(), config.seed, config.oracle.clone());
    let mut total = 0.0;
    while !env.state().done {
        let action = policy.act(env.state());
        let lit = illuminated(&env.state().photons, &env.state().light, &env.state().plants).len();
        let out = env.step(&action)?;
        total += out.reward;
        println!(
            "{:2} {:?} reward={:.3} lit={lit} alive={} branches={:?}",
            env.state().step,
            action,
            out.reward,
            out.info.alive_photons,
            out.info.branch_counts
        );
    }
    println!("return {total:.3}");

    // '#' plant on target, 'o' plant elsewhere, '.' target only
    let s = env.state();
    for j in (0..s.height).rev() {
        let row: String = (0..s.width)
            .map(|i| {
                let plant = s.plants.iter().any(|p| p.occupancy().get(i, j));
                let target = match &s.target {
                    Target::Shape(m) => m.get(i, j),
                    Target::Goal(g) => (g.x.round() as usize, g.y.round() as usize) == (i, j),
                };
                match (plant, target) {
                    (true, true) => '#',
                    (true, false) => 'o',
                    (false, true) => '.',
                    _ => ' ',
                }
            })
            .collect();
        println!("|{row}|");
    }
    Ok(())
}
