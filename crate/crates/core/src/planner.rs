//! Planner backends: anything that maps prompts and context to one
//! residual per nominal waypoint.
//!
//! Two backends live here: [`NullPlanner`] (always zero, i.e. keep the
//! nominal plan) and [`GeometricPlanner`], a deterministic lateral-offset /
//! stop search that stands in for a trained model. A remote model client
//! implements [`PlannerBackend`] in the `coplan` crate.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::alignment::{TextPrompt, VisualPrompt};
use crate::geom::Vec2;
use crate::metrics::min_distance_per_step;
use crate::scenario::{AgentId, Trajectory};
use crate::structuring::ContextPackage;
use crate::Result;

/// Agent id given to the stationary hazard obstacle.
pub const HAZARD_AGENT: &str = "hazard";

/// Per-waypoint `(dx, dy)` corrections, one per nominal waypoint.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualSet {
    deltas: Vec<Vec2>,
    pub reasoning: Option<String>,
}

impl ResidualSet {
    pub fn new(deltas: Vec<Vec2>) -> Self {
        Self {
            deltas,
            reasoning: None,
        }
    }

    pub fn zeros(m: usize) -> Self {
        Self::new(alloc::vec![Vec2::ZERO; m])
    }

    pub fn with_reasoning(mut self, reasoning: Option<String>) -> Self {
        self.reasoning = reasoning;
        self
    }

    pub fn deltas(&self) -> &[Vec2] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.deltas.iter().all(|d| d.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.deltas.iter().all(|d| *d == Vec2::ZERO)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AvoidanceConfig {
    pub max_lateral_offset: f64,
    pub lateral_step: f64,
    pub safety_clearance: f64,
}

impl Default for AvoidanceConfig {
    fn default() -> Self {
        Self {
            max_lateral_offset: 3.5,
            lateral_step: 0.5,
            safety_clearance: 5.0,
        }
    }
}

impl AvoidanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.safety_clearance > 0.0) {
            return Err(crate::Error::Config("safety_clearance must be positive"));
        }
        if !(self.lateral_step > 0.0) || !(self.max_lateral_offset >= 0.0) {
            return Err(crate::Error::Config(
                "lateral offsets must be non-negative with a positive step",
            ));
        }
        Ok(())
    }

    /// Offset magnitudes `step, 2 step, ...` up to the maximum.
    pub fn offset_magnitudes(&self) -> Vec<f64> {
        let n = libm::floor(self.max_lateral_offset / self.lateral_step + 1e-9) as usize;
        (1..=n).map(|i| i as f64 * self.lateral_step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Maneuver {
    Keep,
    /// Uniform lateral shift of every waypoint after the current one;
    /// positive is toward the right-hand lateral axis.
    Offset(f64),
    /// Hold at nominal waypoint `hold_index` from then on.
    Stop {
        hold_index: usize,
    },
}

/// Closest approach of the nominal plan that triggered avoidance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trigger {
    pub obstacle: AgentId,
    pub step: usize,
    /// Obstacle position relative to the ego's current position.
    pub relative_position: Vec2,
    pub distance: f64,
}

/// Decision log of the geometric planner.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AvoidanceDecision {
    pub trigger: Option<Trigger>,
    pub maneuver: Maneuver,
    pub safety_clearance: f64,
    /// Clearance of the nominal plan; `None` without obstacles.
    pub nominal_clearance: Option<f64>,
    /// Clearance of the returned plan; `None` without obstacles.
    pub achieved_clearance: Option<f64>,
    pub candidates_evaluated: usize,
}

impl AvoidanceDecision {
    pub fn trigger_text(&self) -> String {
        match &self.trigger {
            None => String::from("no hazard or agent comes within the safety clearance of the nominal path"),
            Some(t) => format!(
                "{} at x={:.2} y={:.2} relative to the ego comes within {:.2} m of nominal waypoint {} (clearance {:.2} m)",
                if t.obstacle.as_str() == HAZARD_AGENT { "hazard" } else { "agent" },
                t.relative_position.x,
                t.relative_position.y,
                t.distance,
                t.step,
                self.safety_clearance
            ),
        }
    }

    pub fn candidate_text(&self) -> String {
        match self.maneuver {
            Maneuver::Keep => String::from("keep the nominal plan"),
            Maneuver::Offset(o) => format!(
                "shift the remaining waypoints {:.2} m to the {}",
                o.abs(),
                if o >= 0.0 { "right" } else { "left" }
            ),
            Maneuver::Stop { hold_index } => {
                format!("no lateral offset up to the limit is clear, stop and hold at waypoint {hold_index}")
            }
        }
    }

    pub fn clearance_text(&self) -> String {
        match self.achieved_clearance {
            None => String::from("no obstacles in the planning horizon"),
            Some(c) => format!("minimum clearance {c:.2} m"),
        }
    }

    /// One-paragraph narration of trigger, choice and result.
    pub fn narrate(&self) -> String {
        format!(
            "Trigger: {}. Decision: {}. Result: {}.",
            self.trigger_text(),
            self.candidate_text(),
            self.clearance_text()
        )
    }
}

/// Everything a backend may look at.
#[derive(Debug, Clone, Copy)]
pub struct PlanRequest<'a> {
    pub text: &'a TextPrompt,
    pub visual: &'a VisualPrompt,
    pub nominal: &'a Trajectory,
    pub context: &'a ContextPackage,
    /// Predicted surrounding agents, time-aligned with `nominal`.
    pub surroundings: &'a [Trajectory],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReply {
    pub residuals: ResidualSet,
    pub decision: Option<AvoidanceDecision>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BackendErrorKind {
    Transport(String),
    Timeout,
    Status(u16),
    Parse(String),
    LengthMismatch { expected: usize, got: usize },
    NonFinite,
    Internal(String),
}

impl fmt::Display for BackendErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Transport(e) => write!(f, "transport error: {e}"),
            Self::Timeout => f.write_str("request timed out"),
            Self::Status(s) => write!(f, "unexpected HTTP status {s}"),
            Self::Parse(e) => write!(f, "unparseable response: {e}"),
            Self::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} residuals, got {got}")
            }
            Self::NonFinite => f.write_str("non-finite residual"),
            Self::Internal(e) => write!(f, "backend failure: {e}"),
        }
    }
}

/// A failed plan. `fallback` is what the pipeline uses instead (zero
/// residuals, i.e. keep the nominal plan).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind}")]
pub struct BackendError {
    pub kind: BackendErrorKind,
    pub fallback: ResidualSet,
}

impl BackendError {
    pub fn with_zero_fallback(kind: BackendErrorKind, m: usize) -> Self {
        Self {
            kind,
            fallback: ResidualSet::zeros(m),
        }
    }
}

pub trait PlannerBackend {
    fn name(&self) -> &'static str;
    fn plan(&self, req: &PlanRequest<'_>) -> core::result::Result<PlanReply, BackendError>;
}

/// Keeps the nominal plan.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullPlanner;

impl PlannerBackend for NullPlanner {
    fn name(&self) -> &'static str {
        "null"
    }

    fn plan(&self, req: &PlanRequest<'_>) -> core::result::Result<PlanReply, BackendError> {
        Ok(PlanReply {
            residuals: ResidualSet::zeros(req.nominal.len()),
            decision: None,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GeometricPlanner {
    pub config: AvoidanceConfig,
}

impl PlannerBackend for GeometricPlanner {
    fn name(&self) -> &'static str {
        "geometric"
    }

    fn plan(&self, req: &PlanRequest<'_>) -> core::result::Result<PlanReply, BackendError> {
        let m = req.nominal.len();
        let (residuals, decision) = geometric_avoidance(req.context, req.nominal, req.surroundings, &self.config)
            .map_err(|e| BackendError::with_zero_fallback(BackendErrorKind::Internal(format!("{e}")), m))?;
        Ok(PlanReply {
            residuals,
            decision: Some(decision),
        })
    }
}

/// Outcome of [`plan`]: always a usable residual set.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub residuals: ResidualSet,
    /// Set when the backend failed and the fallback was used.
    pub fallback: Option<BackendErrorKind>,
    pub decision: Option<AvoidanceDecision>,
}

/// Run a backend and enforce the output contract: exactly one finite
/// residual per nominal waypoint, zero residuals otherwise.
pub fn plan(req: &PlanRequest<'_>, backend: &dyn PlannerBackend) -> PlanOutcome {
    let m = req.nominal.len();
    match backend.plan(req) {
        Ok(reply) if reply.residuals.len() != m => PlanOutcome {
            residuals: ResidualSet::zeros(m),
            fallback: Some(BackendErrorKind::LengthMismatch {
                expected: m,
                got: reply.residuals.len(),
            }),
            decision: reply.decision,
        },
        Ok(reply) if !reply.residuals.is_finite() => PlanOutcome {
            residuals: ResidualSet::zeros(m),
            fallback: Some(BackendErrorKind::NonFinite),
            decision: reply.decision,
        },
        Ok(reply) => PlanOutcome {
            residuals: reply.residuals,
            fallback: None,
            decision: reply.decision,
        },
        Err(e) => {
            let residuals = if e.fallback.len() == m && e.fallback.is_finite() {
                e.fallback
            } else {
                ResidualSet::zeros(m)
            };
            PlanOutcome {
                residuals,
                fallback: Some(e.kind),
                decision: None,
            }
        }
    }
}

/// Obstacles seen by the planner: the surroundings plus the validated
/// hazard as a stationary agent sampled on the nominal timestamps.
pub fn planning_obstacles(
    ctx: &ContextPackage,
    nominal: &Trajectory,
    surroundings: &[Trajectory],
) -> Result<Vec<Trajectory>> {
    let mut obstacles = surroundings.to_vec();
    if let Some(h) = &ctx.hazard {
        obstacles.push(Trajectory::stationary(
            AgentId::from(HAZARD_AGENT),
            h.position(),
            &nominal.times(),
        )?);
    }
    Ok(obstacles)
}

/// Unit lateral direction at each waypoint: the right-hand normal of the
/// local path tangent (central difference, one-sided at the ends). Where
/// the path does not move, the ego heading is used instead.
pub fn lateral_normals(path: &[Vec2], fallback_heading: f64) -> Vec<Vec2> {
    let fallback = Vec2::new(libm::cos(fallback_heading), libm::sin(fallback_heading)).lateral();
    let n = path.len();
    (0..n)
        .map(|j| {
            let a = path[j.saturating_sub(1)];
            let b = path[(j + 1).min(n - 1)];
            (b - a).normalized().map_or(fallback, Vec2::lateral)
        })
        .collect()
}

/// Lateral-offset candidate `o`: waypoint 0 stays put, every later
/// waypoint moves by `o * normal`, snapped to the waypoint grid.
pub fn offset_candidate(nominal: &[Vec2], normals: &[Vec2], offset: f64) -> Vec<Vec2> {
    nominal
        .iter()
        .zip(normals)
        .enumerate()
        .map(|(j, (&g, &n))| if j == 0 { g } else { g + (n * offset).quantized() })
        .collect()
}

/// Stop candidate: nominal up to `hold_index`, then held there.
pub fn stop_candidate(nominal: &[Vec2], hold_index: usize) -> Vec<Vec2> {
    nominal
        .iter()
        .enumerate()
        .map(|(j, &g)| if j <= hold_index { g } else { nominal[hold_index] })
        .collect()
}

/// Deterministic avoidance search.
///
/// Triggers when some obstacle comes within `safety_clearance` of the
/// nominal plan. Candidates are lateral offsets of increasing magnitude;
/// the first magnitude with a clear candidate (MCD >= clearance) wins, with
/// `+o` vs `-o` ties going to the larger summed per-step clearance and then
/// to the positive side. If no offset clears, the plan stops at the last
/// waypoint before the first unsafe one. The result is expressed as
/// residuals against `nominal`.
pub fn geometric_avoidance(
    ctx: &ContextPackage,
    nominal: &Trajectory,
    surroundings: &[Trajectory],
    cfg: &AvoidanceConfig,
) -> Result<(ResidualSet, AvoidanceDecision)> {
    cfg.validate()?;
    let m = nominal.len();
    let obstacles = planning_obstacles(ctx, nominal, surroundings)?;
    let path = nominal.positions();
    let clearance = cfg.safety_clearance;

    let nominal_steps = min_distance_per_step(nominal, &obstacles)?;
    let nominal_mcd = min_of(&nominal_steps);
    let mut decision = AvoidanceDecision {
        trigger: None,
        maneuver: Maneuver::Keep,
        safety_clearance: clearance,
        nominal_clearance: nominal_mcd,
        achieved_clearance: nominal_mcd,
        candidates_evaluated: 0,
    };
    let triggered = nominal_mcd.is_some_and(|d| d < clearance);
    if !triggered {
        let reasoning = decision.narrate();
        return Ok((ResidualSet::zeros(m).with_reasoning(Some(reasoning)), decision));
    }
    decision.trigger = closest_approach(&path, &obstacles, &nominal_steps);

    let heading = ctx.ego_now().map_or(0.0, |s| s.yaw);
    let normals = lateral_normals(&path, heading);
    let evaluate = |candidate: &[Vec2]| -> Result<(f64, f64)> {
        let traj = nominal.with_positions(candidate)?;
        let steps = min_distance_per_step(&traj, &obstacles)?;
        let total: f64 = steps.iter().sum();
        Ok((min_of(&steps).unwrap_or(f64::INFINITY), total))
    };

    let mut chosen: Option<(f64, Vec<Vec2>, f64)> = None;
    for mag in cfg.offset_magnitudes() {
        let right = offset_candidate(&path, &normals, mag);
        let left = offset_candidate(&path, &normals, -mag);
        let (r_mcd, r_sum) = evaluate(&right)?;
        let (l_mcd, l_sum) = evaluate(&left)?;
        decision.candidates_evaluated += 2;
        let pick = match (r_mcd >= clearance, l_mcd >= clearance) {
            (true, true) if l_sum > r_sum => Some((-mag, left, l_mcd)),
            (true, _) => Some((mag, right, r_mcd)),
            (false, true) => Some((-mag, left, l_mcd)),
            (false, false) => None,
        };
        if pick.is_some() {
            chosen = pick;
            break;
        }
    }

    let (maneuver, waypoints, achieved) = match chosen {
        Some((o, wps, mcd)) => (Maneuver::Offset(o), wps, mcd),
        None => {
            let hold_index = nominal_steps
                .iter()
                .position(|&d| d < clearance)
                .map_or(m.saturating_sub(1), |first_unsafe| first_unsafe.saturating_sub(1));
            let wps = stop_candidate(&path, hold_index);
            let (mcd, _) = evaluate(&wps)?;
            decision.candidates_evaluated += 1;
            (Maneuver::Stop { hold_index }, wps, mcd)
        }
    };
    decision.maneuver = maneuver;
    decision.achieved_clearance = Some(achieved);
    let deltas = waypoints.iter().zip(&path).map(|(&w, &g)| w - g).collect();
    let reasoning = decision.narrate();
    Ok((ResidualSet::new(deltas).with_reasoning(Some(reasoning)), decision))
}

fn min_of(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

fn closest_approach(path: &[Vec2], obstacles: &[Trajectory], steps: &[f64]) -> Option<Trigger> {
    let (step, &distance) = steps.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    let ego_now = *path.first()?;
    let obstacle = obstacles.iter().min_by(|a, b| {
        let da = path[step].distance(a.points()[step].pos);
        let db = path[step].distance(b.points()[step].pos);
        da.total_cmp(&db)
    })?;
    Some(Trigger {
        obstacle: obstacle.agent_id.clone(),
        step,
        relative_position: obstacle.points()[step].pos - ego_now,
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{HazardAlert, VehicleState};
    use alloc::vec;

    fn nominal_straight(n: usize, spacing: f64) -> Trajectory {
        Trajectory::from_positions(
            AgentId::from("ego"),
            0.0,
            0.5,
            (0..n).map(|j| Vec2::new(j as f64 * spacing, 0.0)),
        )
        .unwrap()
    }

    fn ctx_with_hazard(h: Option<Vec2>) -> ContextPackage {
        ContextPackage {
            hazard: h.map(|p| HazardAlert {
                x: p.x,
                y: p.y,
                z: 0.0,
                t_h: 0.0,
                issue_time: 0.0,
            }),
            nav_start: 0,
            nav_eff: vec![],
            ego_history: vec![VehicleState {
                agent_id: AgentId::from("ego"),
                k: 0,
                x: 0.0,
                y: 0.0,
                z: 0.0,
                vx: 10.0,
                vy: 0.0,
                yaw: 0.0,
            }],
            t_now: 0.0,
            dt: 0.1,
        }
    }

    #[test]
    fn no_hazard_no_change() {
        let nominal = nominal_straight(5, 5.0);
        let (r, d) = geometric_avoidance(&ctx_with_hazard(None), &nominal, &[], &AvoidanceConfig::default()).unwrap();
        assert!(r.is_zero());
        assert_eq!(r.len(), 5);
        assert_eq!(d.maneuver, Maneuver::Keep);
        assert!(d.trigger.is_none());
    }

    #[test]
    fn distant_hazard_no_change() {
        let nominal = nominal_straight(5, 5.0);
        let ctx = ctx_with_hazard(Some(Vec2::new(10.0, 50.0)));
        let (r, d) = geometric_avoidance(&ctx, &nominal, &[], &AvoidanceConfig::default()).unwrap();
        assert!(r.is_zero());
        assert_eq!(
            d.nominal_clearance,
            Some(Vec2::new(10.0, 50.0).distance(Vec2::new(10.0, 0.0)))
        );
    }

    #[test]
    fn hazard_left_shifts_right() {
        // hazard 3 m to the left (negative lateral) at a waypoint
        let nominal = nominal_straight(5, 5.0);
        let ctx = ctx_with_hazard(Some(Vec2::new(15.0, -3.0)));
        let (r, d) = geometric_avoidance(&ctx, &nominal, &[], &AvoidanceConfig::default()).unwrap();
        // need |o + 3| >= 5 with o > 0: o = 2.0
        assert_eq!(d.maneuver, Maneuver::Offset(2.0));
        assert_eq!(r.deltas()[0], Vec2::ZERO);
        assert!(r.deltas()[1..].iter().all(|&v| v == Vec2::new(0.0, 2.0)));
        assert_eq!(d.achieved_clearance, Some(5.0));
        let t = d.trigger.unwrap();
        assert_eq!(t.obstacle.as_str(), HAZARD_AGENT);
        assert_eq!(t.step, 3);
        assert!(r.reasoning.unwrap().contains("2.00 m to the right"));
    }

    #[test]
    fn centred_hazard_forces_stop() {
        let nominal = nominal_straight(5, 5.0);
        let ctx = ctx_with_hazard(Some(Vec2::new(15.0, 0.0)));
        let (r, d) = geometric_avoidance(&ctx, &nominal, &[], &AvoidanceConfig::default()).unwrap();
        // waypoints at 0,5,10,15,20: 10 sits exactly at the clearance (safe),
        // 15 is the first unsafe one, so hold at index 2
        assert_eq!(d.maneuver, Maneuver::Stop { hold_index: 2 });
        let plan: Vec<Vec2> = nominal
            .positions()
            .iter()
            .zip(r.deltas())
            .map(|(&g, &d)| g + d)
            .collect();
        assert_eq!(plan[3], Vec2::new(10.0, 0.0));
        assert_eq!(plan[4], Vec2::new(10.0, 0.0));
        assert_eq!(d.achieved_clearance, Some(5.0));
        assert_eq!(d.candidates_evaluated, 15);
    }

    #[test]
    fn symmetric_tie_goes_right() {
        // two agents symmetric about the path
        let nominal = nominal_straight(3, 5.0);
        let times = nominal.times();
        let a = Trajectory::stationary(AgentId::from("a"), Vec2::new(10.0, 4.0), &times).unwrap();
        let b = Trajectory::stationary(AgentId::from("b"), Vec2::new(10.0, -4.0), &times).unwrap();
        let cfg = AvoidanceConfig {
            safety_clearance: 4.5,
            ..Default::default()
        };
        let (_, d) = geometric_avoidance(&ctx_with_hazard(None), &nominal, &[a, b], &cfg).unwrap();
        // no offset clears both; stops
        assert!(matches!(d.maneuver, Maneuver::Stop { .. }));
        let c = Trajectory::stationary(AgentId::from("c"), Vec2::new(10.0, 0.0), &times).unwrap();
        let cfg = AvoidanceConfig {
            safety_clearance: 3.0,
            ..Default::default()
        };
        // both sides clear at 3 m with equal summed clearance: right wins
        let (_, d) = geometric_avoidance(&ctx_with_hazard(None), &nominal, &[c], &cfg).unwrap();
        assert_eq!(d.maneuver, Maneuver::Offset(3.0));
    }

    #[test]
    fn dispatch_enforces_length() {
        struct Short;
        impl PlannerBackend for Short {
            fn name(&self) -> &'static str {
                "short"
            }
            fn plan(&self, _: &PlanRequest<'_>) -> core::result::Result<PlanReply, BackendError> {
                Ok(PlanReply {
                    residuals: ResidualSet::zeros(1),
                    decision: None,
                })
            }
        }
        use crate::alignment::{encode_text_prompt, VisualPrompt};
        use crate::bev::{BevMap, GridSpec};
        let ctx = ctx_with_hazard(None);
        let tp = encode_text_prompt(&ctx, "x");
        let g = GridSpec::new(8, 8, 1.0, (4, 4)).unwrap();
        let vp = VisualPrompt::new(BevMap::empty(g, 0.0), BevMap::empty(g, -0.5), 8).unwrap();
        let nominal = nominal_straight(3, 1.0);
        let req = PlanRequest {
            text: &tp,
            visual: &vp,
            nominal: &nominal,
            context: &ctx,
            surroundings: &[],
        };
        let out = plan(&req, &Short);
        assert_eq!(out.residuals, ResidualSet::zeros(3));
        assert_eq!(
            out.fallback,
            Some(BackendErrorKind::LengthMismatch { expected: 3, got: 1 })
        );
        let out = plan(&req, &NullPlanner);
        assert!(out.fallback.is_none() && out.residuals.is_zero() && out.residuals.len() == 3);
    }

    #[test]
    fn normals_follow_path() {
        let path = vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(0.0, 2.0)];
        for n in lateral_normals(&path, 0.0) {
            assert_eq!(n, Vec2::new(-1.0, 0.0));
        }
        let still = vec![Vec2::new(3.0, 3.0); 2];
        for n in lateral_normals(&still, 0.0) {
            assert_eq!(n, Vec2::new(0.0, 1.0));
        }
    }

    #[test]
    fn offset_magnitudes_grid() {
        assert_eq!(AvoidanceConfig::default().offset_magnitudes().len(), 7);
        let c = AvoidanceConfig {
            max_lateral_offset: 0.3,
            ..Default::default()
        };
        assert!(c.offset_magnitudes().is_empty());
        assert!(AvoidanceConfig {
            safety_clearance: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
