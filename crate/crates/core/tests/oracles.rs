//! Brute-force oracles for the avoidance search, checked on randomized
//! corridor scenes.

use coplan_core::geom::Vec2;
use coplan_core::planner::{geometric_avoidance, AvoidanceConfig, Maneuver};
use coplan_core::scenario::{AgentId, HazardAlert, Trajectory, VehicleState};
use coplan_core::structuring::ContextPackage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: Vec2, b: Vec2) -> f64 {
    ((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)).sqrt()
}

/// Per-step clearance of `plan` against every obstacle position table.
fn step_clearance(plan: &[Vec2], obstacles: &[Vec<Vec2>]) -> Vec<f64> {
    plan.iter()
        .enumerate()
        .map(|(t, &p)| obstacles.iter().map(|o| dist(p, o[t])).fold(f64::INFINITY, f64::min))
        .collect()
}

fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, PartialEq)]
enum Choice {
    Keep,
    Offset(f64),
    Stop(usize),
}

/// Exhaustive search over the candidate set of a path heading along +x,
/// whose right-hand normal is +y.
fn oracle(path: &[Vec2], obstacles: &[Vec<Vec2>], cfg: &AvoidanceConfig) -> (Choice, Vec<Vec2>) {
    let nominal = step_clearance(path, obstacles);
    if min(&nominal) >= cfg.safety_clearance {
        return (Choice::Keep, path.to_vec());
    }
    let shift = |o: f64| -> Vec<Vec2> {
        path.iter()
            .enumerate()
            .map(|(j, &g)| if j == 0 { g } else { Vec2::new(g.x, g.y + o) })
            .collect()
    };
    let mut offsets = Vec::new();
    let mut k = 1;
    while k as f64 * cfg.lateral_step <= cfg.max_lateral_offset + 1e-9 {
        offsets.push(k as f64 * cfg.lateral_step);
        offsets.push(-(k as f64) * cfg.lateral_step);
        k += 1;
    }
    // every feasible candidate, then the smallest |o|; ties to the larger
    // summed clearance, then to the positive side
    let mut feasible: Vec<(f64, f64, Vec<Vec2>)> = offsets
        .into_iter()
        .map(|o| {
            let c = shift(o);
            let s = step_clearance(&c, obstacles);
            (o, s.iter().sum::<f64>(), c, min(&s))
        })
        .filter(|(_, _, _, m)| *m >= cfg.safety_clearance)
        .map(|(o, sum, c, _)| (o, sum, c))
        .collect();
    feasible.sort_by(|a, b| {
        a.0.abs()
            .total_cmp(&b.0.abs())
            .then(b.1.total_cmp(&a.1))
            .then(b.0.total_cmp(&a.0))
    });
    if let Some((o, _, c)) = feasible.into_iter().next() {
        return (Choice::Offset(o), c);
    }
    let first_unsafe = nominal.iter().position(|&d| d < cfg.safety_clearance).unwrap();
    let hold = first_unsafe.saturating_sub(1);
    let c = (0..path.len()).map(|j| path[j.min(hold)]).collect();
    (Choice::Stop(hold), c)
}

fn ctx(hazard: Option<Vec2>, ego: Vec2) -> ContextPackage {
    ContextPackage {
        hazard: hazard.map(|p| HazardAlert {
            x: p.x,
            y: p.y,
            z: 0.0,
            t_h: 0.5,
            issue_time: 0.0,
        }),
        nav_start: 0,
        nav_eff: vec![],
        ego_history: vec![VehicleState {
            agent_id: AgentId::from("ego"),
            k: 0,
            x: ego.x,
            y: ego.y,
            z: 0.0,
            vx: 10.0,
            vy: 0.0,
            yaw: 0.0,
        }],
        t_now: 0.0,
        dt: 0.1,
    }
}

fn corridor(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec2> {
    let mut x = rng.random_range(-100i32..100) as f64;
    let y = rng.random_range(-100i32..100) as f64 * 0.25;
    (0..m)
        .map(|_| {
            let p = Vec2::new(x, y);
            x += rng.random_range(8i32..=24) as f64 * 0.25;
            p
        })
        .collect()
}

fn check(path: &[Vec2], hazard: Option<Vec2>, agents: &[Vec<Vec2>], cfg: &AvoidanceConfig) -> Choice {
    let nominal = Trajectory::from_positions(AgentId::from("ego"), 0.0, 0.5, path.iter().copied()).unwrap();
    let times = nominal.times();
    let surroundings: Vec<Trajectory> = agents
        .iter()
        .enumerate()
        .map(|(i, a)| Trajectory::from_positions(AgentId::new(format!("a{i}")), 0.0, 0.5, a.iter().copied()).unwrap())
        .collect();
    assert_eq!(surroundings.first().map_or(times.clone(), |s| s.times()), times);
    let mut obstacles: Vec<Vec<Vec2>> = agents.to_vec();
    if let Some(h) = hazard {
        obstacles.push(vec![h; path.len()]);
    }
    let (residuals, decision) = geometric_avoidance(&ctx(hazard, path[0]), &nominal, &surroundings, cfg).unwrap();
    let (choice, expected) = oracle(path, &obstacles, cfg);
    let got: Vec<Vec2> = path.iter().zip(residuals.deltas()).map(|(&g, &d)| g + d).collect();
    assert_eq!(got, expected, "plan differs from the oracle for {choice:?}");
    let maneuver = match decision.maneuver {
        Maneuver::Keep => Choice::Keep,
        Maneuver::Offset(o) => Choice::Offset(o),
        Maneuver::Stop { hold_index } => Choice::Stop(hold_index),
    };
    assert_eq!(maneuver, choice);
    choice
}

#[test]
fn randomized_corridors_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let cfg = AvoidanceConfig::default();
    let (mut keep, mut offset, mut stop) = (0, 0, 0);
    for _ in 0..2000 {
        let m = rng.random_range(2..=8);
        let path = corridor(&mut rng, m);
        let hazard = rng.random_bool(0.8).then(|| {
            let j = rng.random_range(1..m);
            path[j]
                + Vec2::new(
                    rng.random_range(-8i32..8) as f64 * 0.5,
                    rng.random_range(-32i32..32) as f64 * 0.25,
                )
        });
        let agents: Vec<Vec<Vec2>> = (0..rng.random_range(0..3))
            .map(|_| {
                let start = path[0] + Vec2::new(rng.random_range(-10.0..40.0), rng.random_range(-10.0..10.0));
                let v = Vec2::new(rng.random_range(-8.0..8.0), rng.random_range(-2.0..2.0));
                (0..m).map(|t| start + v * (0.5 * t as f64)).collect()
            })
            .collect();
        match check(&path, hazard, &agents, &cfg) {
            Choice::Keep => keep += 1,
            Choice::Offset(_) => offset += 1,
            Choice::Stop(_) => stop += 1,
        }
    }
    // the sample exercises every branch
    assert!(
        keep > 50 && offset > 50 && stop > 50,
        "keep {keep}, offset {offset}, stop {stop}"
    );
}

#[test]
fn hazard_left_of_path_takes_smallest_right_offset() {
    let path: Vec<Vec2> = (0..5).map(|j| Vec2::new(5.0 * j as f64, 0.0)).collect();
    // left of a +x heading is -y
    let choice = check(&path, Some(Vec2::new(15.0, -3.0)), &[], &AvoidanceConfig::default());
    assert_eq!(choice, Choice::Offset(2.0));
}

#[test]
fn distant_hazard_leaves_plan_unchanged() {
    let path: Vec<Vec2> = (0..5).map(|j| Vec2::new(5.0 * j as f64, 0.0)).collect();
    assert_eq!(
        check(&path, Some(Vec2::new(15.0, 50.0)), &[], &AvoidanceConfig::default()),
        Choice::Keep
    );
}

#[test]
fn blocked_corridor_stops_at_last_safe_point() {
    let path: Vec<Vec2> = (0..6).map(|j| Vec2::new(5.0 * j as f64, 0.0)).collect();
    let wall: Vec<Vec<Vec2>> = (-4..=4).map(|k| vec![Vec2::new(20.0, 2.0 * k as f64); 6]).collect();
    let choice = check(&path, None, &wall, &AvoidanceConfig::default());
    // x = 15 sits exactly 5 m from the wall (safe); x = 20 is the first unsafe waypoint
    assert_eq!(choice, Choice::Stop(3));
}
