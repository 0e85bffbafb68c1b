//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every check prints exactly one PASS or FAIL line.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use phototrope::agents::random_action;
use phototrope::env::{beam, spot};
use phototrope::light::illuminated;
use phototrope::raster::PixelMask;
use phototrope::rng::{stream, Stream};
use phototrope::runner::{measure_throughput, run_batch, RunConfig};
use phototrope::sca::{assign_attractors, growth_direction, PhotonField};
use phototrope::task::{curriculum_schedule, distance, reward_fair, reward_goal, reward_shape, DIGIT_RANKING};
use phototrope::{Action, Difficulty, EnvConfig, Environment, EpisodeState, Point, PolicyKind, ShapeSpec, TaskKind};
use rand::Rng;
use sha2::{Digest, Sha256};

type Check = std::result::Result<String, String>;
type NamedCheck = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn all_tasks() -> Vec<TaskKind> {
    vec![
        TaskKind::GrowPlantToGoal,
        TaskKind::FindPlant,
        TaskKind::GrowMultiplePlants { plants: 2 },
        TaskKind::GrowPlantToShape { shape: ShapeSpec::Digit(3) },
    ]
}

const DIFFICULTIES: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Hard, Difficulty::Random];

/// Growth direction from angles, summed in a different order.
fn direction_by_angles(tip: Point, attractors: &[Point]) -> Option<(f64, f64)> {
    let (mut sx, mut sy) = (0.0f64, 0.0f64);
    for a in attractors.iter().rev() {
        let (dx, dy) = (a.x - tip.x, a.y - tip.y);
        if dx == 0.0 && dy == 0.0 {
            continue;
        }
        let theta = dy.atan2(dx);
        sx += theta.cos();
        sy += theta.sin();
    }
    let n = sx.hypot(sy);
    (n >= 1e-9).then(|| (sx / n, sy / n))
}

/// Nearest tip within the radius by scanning every tip; the first tip wins ties.
fn assignment_by_scan(photons: &PhotonField, tips: &[Point], radius: f64) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, p) in photons.photons.iter().enumerate() {
        if !p.alive {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for (t, tip) in tips.iter().enumerate() {
            let d = (p.position.x - tip.x).powi(2) + (p.position.y - tip.y).powi(2);
            if d <= radius * radius && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, t));
            }
        }
        if let Some((_, t)) = best {
            out.entry(t).or_default().push(k);
        }
    }
    out
}

fn growth_math() -> Check {
    let started = Instant::now();
    let mut rng = stream(2024, Stream::Policy);
    let mut worst = 0.0f64;
    let mut degenerate = 0;
    for case in 0..1000 {
        let tip = Point::new(rng.random_range(0.0..84.0), rng.random_range(0.0..84.0));
        let n = rng.random_range(1..=30);
        let mut attractors: Vec<Point> =
            (0..n).map(|_| Point::new(rng.random_range(0.0..84.0), rng.random_range(0.0..84.0))).collect();
        if case % 50 == 0 {
            // mirrored pairs cancel exactly
            attractors =
                attractors.iter().flat_map(|a| [*a, Point::new(2.0 * tip.x - a.x, 2.0 * tip.y - a.y)]).collect();
        }
        match (growth_direction(tip, &attractors), direction_by_angles(tip, &attractors)) {
            (Ok(v), Some((x, y))) => worst = worst.max((v.x - x).abs()).max((v.y - y).abs()),
            (Err(_), None) => degenerate += 1,
            (got, want) => return Err(format!("direction case {case}: {got:?} vs {want:?}")),
        }
    }
    ensure(worst <= 1e-9, || format!("max direction deviation {worst:e}"))?;

    for case in 0..1000 {
        let count = rng.random_range(0..300);
        let mut field = PhotonField::from_points(
            (0..count).map(|_| Point::new(rng.random_range(0.0..84.0), rng.random_range(0.0..84.0))),
        );
        for p in field.photons.iter_mut() {
            p.alive = rng.random_bool(0.8);
        }
        let mut tips: Vec<Point> = (0..rng.random_range(1..40))
            .map(|_| Point::new(rng.random_range(0.0..84.0), rng.random_range(0.0..84.0)))
            .collect();
        if case % 10 == 0 {
            // duplicated tips exercise the tie rule
            tips.extend(tips.clone());
        }
        let radius = rng.random_range(1.0..40.0);
        let got = assign_attractors(&field, &tips, radius);
        let want = assignment_by_scan(&field, &tips, radius);
        ensure(got == want, || format!("assignment case {case} differs"))?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("2000 instances, max deviation {worst:e}, {degenerate} degenerate, {elapsed:.2?}"))
}

fn reward_formulas() -> Check {
    let g = Point::new(13.0, 14.0);
    ensure(distance(Point::new(10.0, 10.0), g) == 5.0, || "distance 3-4-5".into())?;
    ensure(distance(g, g) == 0.0, || "distance to self".into())?;
    ensure(reward_goal(&[Point::new(10.0, 10.0)], g) == 0.2, || "goal reward at d=5".into())?;
    let o = Point::new(0.0, 0.0);
    ensure(reward_goal(&[Point::new(5.0, 0.0), Point::new(0.0, 2.0)], o) == 0.5, || "max rule".into())?;
    ensure(reward_goal(&[g], g) == 1.0, || "contact clamp".into())?;
    // per-plant rewards 0.5, 0.2 and 0.9 (0.9 from distance 10/9)
    let plants = vec![vec![Point::new(2.0, 0.0)], vec![Point::new(5.0, 0.0)], vec![Point::new(10.0 / 9.0, 0.0)]];
    ensure(reward_fair(&plants, o) == 0.2, || "min rule".into())?;
    let same = vec![vec![Point::new(4.0, 0.0)]; 3];
    ensure(reward_fair(&same, o) == reward_goal(&same[0], o), || "identical plants".into())?;

    let mut a = PixelMask::new(28, 28);
    for i in 0..10 {
        a.set(i, 0, true);
    }
    ensure(reward_shape(&a, &a) == 1.0, || "identical masks".into())?;
    let mut b = PixelMask::new(28, 28);
    b.set(20, 20, true);
    ensure(reward_shape(&a, &b) == 0.0, || "disjoint masks".into())?;
    let mut g40 = PixelMask::new(28, 28);
    for i in 0..10 {
        g40.set(i, 0, true);
    }
    for i in 0..30 {
        g40.set(i % 28, 1 + i / 28, true);
    }
    ensure(a.intersection_count(&g40) == 10 && a.union_count(&g40) == 40, || "fixture counts".into())?;
    ensure(reward_shape(&a, &g40) == 0.25, || "quarter overlap".into())?;
    ensure(reward_shape(&PixelMask::new(28, 28), &PixelMask::new(28, 28)) == 0.0, || "empty union".into())?;
    Ok("distance, goal, fairness and shape examples exact".into())
}

/// Digest of the observation stream and reward bits of one random rollout.
fn rollout_digest(kind: &TaskKind, difficulty: Difficulty, seed: u64) -> phototrope::Result<Vec<u8>> {
    let (mut env, obs) = Environment::new(kind.clone(), difficulty, EnvConfig::default(), seed)?;
    let mut hash = Sha256::new();
    hash.update(&obs.pixels);
    let space = env.action_space();
    let mut rng = stream(seed, Stream::Policy);
    while !env.state().done {
        let out = env.step(&random_action(&mut rng, &space))?;
        hash.update(&out.observation.pixels);
        hash.update(out.reward.to_bits().to_le_bytes());
    }
    Ok(hash.finalize().to_vec())
}

fn determinism() -> Check {
    let started = Instant::now();
    let mut pairs = 0;
    for kind in all_tasks() {
        for seed in 0..100u64 {
            let difficulty = DIFFICULTIES[seed as usize % 3];
            let a = rollout_digest(&kind, difficulty, seed).map_err(|e| e.to_string())?;
            let b = rollout_digest(&kind, difficulty, seed).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{} seed {seed} diverged", kind.name()))?;
            pairs += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("{pairs} rollouts replayed bit-identically in {elapsed:.2?}"))
}

fn stay_action(state: &EpisodeState, continuous: bool) -> Action {
    if continuous {
        Action::Continuous { velocity: 0.0, width: 0.0 }
    } else if state.task.uses_spotlight() {
        Action::Discrete(spot::STAY)
    } else {
        Action::Discrete(beam::STAY)
    }
}

fn structural_invariants() -> Check {
    let mut steps = 0;
    let mut episode = 0u64;
    let mut grown = 0;
    while steps < 10_000 {
        let kind = all_tasks()[episode as usize % 4].clone();
        let difficulty = DIFFICULTIES[(episode as usize / 4) % 3];
        let continuous = !kind.uses_spotlight() && episode % 2 == 1;
        let config = EnvConfig {
            action_mode: if continuous { phototrope::ActionMode::Continuous } else { phototrope::ActionMode::Discrete },
            ..EnvConfig::default()
        };
        let (mut env, obs) =
            Environment::new(kind.clone(), difficulty, config, 1000 + episode).map_err(|e| e.to_string())?;
        let (w, h) = (env.state().width, env.state().height);
        ensure(obs.pixels.len() == w * h * 3, || "reset frame size".into())?;
        let space = env.action_space();
        let mut rng = stream(episode, Stream::Policy);
        let mut length = 0;
        while !env.state().done {
            let before = env.state().clone();
            let action = random_action(&mut rng, &space);
            let out = env.step(&action).map_err(|e| e.to_string())?;
            let after = env.state();
            length += 1;
            steps += 1;

            ensure(out.reward.is_finite(), || format!("non-finite reward {}", out.reward))?;
            let in_bounds = if kind.uses_spotlight() {
                (0.0..=1.0).contains(&out.reward)
            } else {
                out.reward > 0.0 && out.reward <= 1.0
            };
            ensure(in_bounds, || format!("{} reward {} out of bounds", kind.name(), out.reward))?;
            ensure(out.observation.pixels.len() == w * h * 3, || "frame size".into())?;
            ensure(out.info.alive_photons <= before.photons.alive_count(), || "alive photons increased".into())?;
            for (p, plant) in after.plants.iter().enumerate() {
                let added = plant.branch_count() - before.plants[p].branch_count();
                ensure(added == out.info.new_branches[p], || "new branch count mismatch".into())?;
                ensure(added <= before.params.max_branching, || format!("plant {p} grew {added} segments"))?;
                grown += added;
            }

            // Growth must not change when every shaded photon is removed.
            let mut lit_only = before.clone();
            lit_only.light = after.light;
            let lit = illuminated(&lit_only.photons, &lit_only.light, &lit_only.plants);
            for (k, photon) in lit_only.photons.photons.iter_mut().enumerate() {
                if !lit.contains(&k) {
                    photon.alive = false;
                }
            }
            lit_only.step(&stay_action(&lit_only, continuous), &space).map_err(|e| e.to_string())?;
            let same = lit_only.plants.iter().zip(&after.plants).all(|(a, b)| a.segments() == b.segments());
            ensure(same, || format!("{} episode {episode}: shaded photons changed growth", kind.name()))?;
        }
        ensure(length == 50, || format!("episode length {length}"))?;
        episode += 1;
    }
    Ok(format!("{steps} steps over {episode} episodes, {grown} segments grown"))
}

fn mean_return(kind: &TaskKind, difficulty: Difficulty, policy: PolicyKind) -> phototrope::Result<(f64, Vec<f64>)> {
    let mut config = RunConfig::new(kind.clone(), difficulty, policy);
    config.episodes = 100;
    let batch = run_batch(&config)?;
    Ok((batch.summary.mean_return, batch.summary.median_branches_per_plant))
}

fn oracle_gap() -> Check {
    let configs = [
        (TaskKind::GrowPlantToGoal, Difficulty::Easy),
        (TaskKind::GrowPlantToGoal, Difficulty::Hard),
        (TaskKind::FindPlant, Difficulty::Easy),
        (TaskKind::FindPlant, Difficulty::Hard),
        (TaskKind::GrowMultiplePlants { plants: 2 }, Difficulty::Easy),
        (TaskKind::GrowMultiplePlants { plants: 2 }, Difficulty::Hard),
        (TaskKind::GrowPlantToShape { shape: ShapeSpec::Digit(3) }, Difficulty::Random),
        (TaskKind::GrowPlantToShape { shape: ShapeSpec::Digit(0) }, Difficulty::Random),
    ];
    let mut parts = Vec::new();
    let mut worst = f64::INFINITY;
    for (kind, difficulty) in configs {
        let (random, _) = mean_return(&kind, difficulty, PolicyKind::Random).map_err(|e| e.to_string())?;
        let (oracle, _) = mean_return(&kind, difficulty, PolicyKind::Oracle).map_err(|e| e.to_string())?;
        let margin = (oracle - random) / random;
        worst = worst.min(margin);
        let label = match &kind {
            TaskKind::GrowPlantToShape { shape: ShapeSpec::Digit(d) } => format!("shape-{d}"),
            k => format!("{}-{difficulty:?}", k.name()).to_lowercase(),
        };
        parts.push(format!("{label} {oracle:.2}/{random:.2}"));
        ensure(margin >= 0.25, || {
            format!("{label}: oracle {oracle:.3} vs random {random:.3} ({:+.1}%)", 100.0 * margin)
        })?;
    }
    Ok(format!("smallest margin {:+.1}%; {}", 100.0 * worst, parts.join(", ")))
}

fn fairness_balance() -> Check {
    let kind = TaskKind::GrowMultiplePlants { plants: 2 };
    let (_, medians) = mean_return(&kind, Difficulty::Easy, PolicyKind::Oracle).map_err(|e| e.to_string())?;
    let hi = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / hi;
    ensure(spread <= 0.30, || format!("median branches {medians:?} differ by {:.1}%", 100.0 * spread))?;
    Ok(format!("median branches {medians:?}, spread {:.1}%", 100.0 * spread))
}

fn shape_difficulty() -> Check {
    let shape = |d| TaskKind::GrowPlantToShape { shape: ShapeSpec::Digit(d) };
    let (three, _) = mean_return(&shape(3), Difficulty::Random, PolicyKind::Oracle).map_err(|e| e.to_string())?;
    let (zero, _) = mean_return(&shape(0), Difficulty::Random, PolicyKind::Oracle).map_err(|e| e.to_string())?;
    let (three, zero) = (three / 50.0, zero / 50.0);
    ensure(three > zero, || format!("digit 3 {three:.4} <= digit 0 {zero:.4}"))?;
    Ok(format!("mean Jaccard digit 3 {three:.4} > digit 0 {zero:.4}"))
}

fn curriculum() -> Check {
    ensure(curriculum_schedule(0) == vec![3, 6], || "first block".into())?;
    ensure(curriculum_schedule(2000) == vec![3, 6, 2], || "second block".into())?;
    for block in 0..12usize {
        let want: Vec<u8> = DIGIT_RANKING[..(2 + block).min(10)].to_vec();
        for episode in [block * 2000, block * 2000 + 1, block * 2000 + 1999] {
            ensure(curriculum_schedule(episode) == want, || format!("episode {episode}"))?;
        }
    }
    let mut all = curriculum_schedule(16_000);
    all.sort_unstable();
    ensure(all == (0..10).collect::<Vec<u8>>(), || "all digits from episode 16000".into())?;
    ensure(curriculum_schedule(20_000).len() == 10, || "episode 20000".into())?;
    Ok("blocks of 2000 episodes add digits in ranked order".into())
}

fn throughput() -> Check {
    let mut parts = Vec::new();
    let mut slowest = f64::INFINITY;
    for kind in all_tasks() {
        let report =
            measure_throughput(&kind, Difficulty::Random, &EnvConfig::default(), 3000).map_err(|e| e.to_string())?;
        let per_min = report.steps_per_sec * 60.0;
        slowest = slowest.min(per_min);
        parts.push(format!("{} {:.0}/min", report.task, per_min));
    }
    ensure(slowest >= 10_000.0, || format!("slowest task {slowest:.0} steps/min"))?;
    Ok(parts.join(", "))
}

fn main() -> ExitCode {
    let checks: [NamedCheck; 9] = [
        ("growth math matches brute force", growth_math),
        ("reward formulas", reward_formulas),
        ("deterministic replay", determinism),
        ("structural invariants under fuzzing", structural_invariants),
        ("oracle beats random by 25%", oracle_gap),
        ("fairness oracle balances branches", fairness_balance),
        ("digit 3 easier than digit 0", shape_difficulty),
        ("curriculum schedule", curriculum),
        ("throughput of 10k steps per minute", throughput),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let started = Instant::now();
        let result = check();
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1}s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.1}s): {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
