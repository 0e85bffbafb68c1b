//! Fixtures shared by the benchmarks.

use phototrope::{Difficulty, EnvConfig, Environment, EpisodeState, TaskKind};

/// State of `kind` after `steps` steps of its oracle policy.
pub fn grown_state(kind: TaskKind, difficulty: Difficulty, seed: u64, steps: usize) -> EpisodeState {
    let (mut env, _) = Environment::new(kind, difficulty, EnvConfig::default(), seed).expect("default layout is valid");
    let mut policy = phototrope::Policy::new(
        phototrope::PolicyKind::Oracle,
        env.action_space(),
        seed,
        phototrope::OracleConfig::default(),
    );
    for _ in 0..steps {
        let action = policy.act(env.state());
        env.step(&action).expect("in-range action");
    }
    env.state().clone()
}
