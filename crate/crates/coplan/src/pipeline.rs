//! End-to-end run of one scenario: structuring, BEV rendering, prompt
//! alignment, planning and residual fusion, plus the inputs evaluation
//! needs (ground-truth plan, actual obstacles, motion masks).
//!
//! The planning frame is scenario time 0. The pipeline is fail-safe: a
//! failing stage is recorded in [`RunResult::errors`] and the nominal plan
//! is returned unchanged.

use std::time::Instant;

use coplan_core::alignment::{
    encode_text_prompt, estimate_tokens, reduce_tokens, ReduceError, TextPrompt, VisualPrompt,
};
use coplan_core::bev::{motion_masks, overlay_axes, pool, rasterize, BevMap, GridSpec};
use coplan_core::metrics::{BinaryMask, MotionMaskSeq};
use coplan_core::planner::{
    geometric_avoidance, plan, planning_obstacles, AvoidanceDecision, BackendErrorKind, PlanRequest, PlannerBackend,
};
use coplan_core::rtf::{apply_residuals, clamp_kinematic};
use coplan_core::scenario::{rollout, AgentId, Scenario, ScenarioMeta, Trajectory, VehicleState};
use coplan_core::structuring::{build_context, filter_navigation, ContextPackage};
use coplan_core::Vec2;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::pgm::bev_to_base64_pgm;
use crate::{Error, Result};

/// Scenario time of the planning frame.
pub const T_NOW: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageLatency {
    pub structuring_ms: f64,
    pub bev_ms: f64,
    pub alignment_ms: f64,
    pub planner_ms: f64,
    pub rtf_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

impl StageError {
    fn new(stage: &str, message: impl ToString) -> Self {
        Self {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }
}

/// Motion masks packed as hex, one string per frame: row-major bits, four
/// per digit, most significant first, zero-padded at the end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedMasks {
    pub width: usize,
    pub height: usize,
    pub frames: Vec<String>,
}

impl PackedMasks {
    pub fn pack(seq: &MotionMaskSeq) -> Self {
        let (width, height) = seq.frames().first().map_or((0, 0), |f| (f.width, f.height));
        let frames = seq
            .frames()
            .iter()
            .map(|f| {
                f.bits()
                    .chunks(4)
                    .map(|c| {
                        let nibble = c
                            .iter()
                            .enumerate()
                            .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << (3 - i)));
                        char::from_digit(nibble, 16).expect("nibble < 16")
                    })
                    .collect()
            })
            .collect();
        Self { width, height, frames }
    }

    pub fn unpack(&self) -> Result<MotionMaskSeq> {
        let n = self.width * self.height;
        let frames = self
            .frames
            .iter()
            .map(|hex| {
                let mut bits = Vec::with_capacity(hex.len() * 4);
                for c in hex.chars() {
                    let d = c
                        .to_digit(16)
                        .ok_or_else(|| Error::Format("bad hex digit in mask".into()))?;
                    bits.extend((0..4).map(|i| d & (1 << (3 - i)) != 0));
                }
                if bits.len() < n || bits.len() >= n + 4 {
                    return Err(Error::Format("mask length does not match its shape".into()));
                }
                bits.truncate(n);
                Ok(BinaryMask::new(self.width, self.height, bits)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MotionMaskSeq::new(frames)?)
    }
}

/// Everything recorded about one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario_id: String,
    pub meta: ScenarioMeta,
    pub backend: String,
    pub nominal: Trajectory,
    pub optimized: Trajectory,
    pub residuals: Vec<[f64; 2]>,
    /// Backend failure that forced the zero-residual fallback.
    pub fallback: Option<BackendErrorKind>,
    pub errors: Vec<StageError>,
    pub decision: Option<AvoidanceDecision>,
    pub reasoning: Option<String>,
    pub hazard_validated: bool,
    pub prompt_tokens: Option<usize>,
    pub latency: StageLatency,
    /// Ego position at the planning frame (origin of BEV and masks).
    pub origin: Vec2,
    /// Hazard position as broadcast, validated or not.
    pub hazard: Option<Vec2>,
    /// Plan of the geometric planner with full information.
    pub ground_truth: Option<Trajectory>,
    /// Actual agent futures plus the hazard, aligned with the plans.
    pub obstacles: Vec<Trajectory>,
    pub masks_pred: Option<PackedMasks>,
    pub masks_gt: Option<PackedMasks>,
    /// Pooled grid of `bev_now`.
    pub bev_grid: Option<GridSpec>,
    /// Current overlaid, pooled BEV as base64 PGM.
    pub bev_now: Option<String>,
}

impl RunResult {
    /// Copy with latency zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            latency: StageLatency::default(),
            ..self.clone()
        }
    }
}

/// Stage outputs that both a run and a dataset record need.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub context: ContextPackage,
    pub text: TextPrompt,
    pub visual: VisualPrompt,
    pub nominal: Trajectory,
    /// Constant-velocity predictions of every other agent.
    pub surroundings: Vec<Trajectory>,
    pub tokens: usize,
    pub warnings: Vec<StageError>,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Nominal plan: the effective navigation waypoints, snapped to the
/// waypoint grid, at `waypoint_dt` spacing from the planning frame.
pub fn nominal_plan(scenario: &Scenario, cfg: &PipelineConfig) -> Result<Trajectory> {
    let nav = filter_navigation(&scenario.nav, &cfg.validation());
    Ok(Trajectory::from_positions(
        scenario.ego_id.clone(),
        0.0,
        cfg.waypoint_dt,
        nav.iter().map(|w| w.xy().quantized()),
    )?)
}

pub fn pooled_grid(cfg: &PipelineConfig) -> Result<GridSpec> {
    let g = cfg.raster_grid()?;
    let f = cfg.pool_factor;
    Ok(GridSpec::new(
        g.width / f,
        g.height / f,
        g.scale * f as f64,
        (g.anchor_u / f, g.anchor_v / f),
    )?)
}

fn ego_at(scenario: &Scenario, k: i64) -> Result<&VehicleState> {
    scenario
        .state(&scenario.ego_id, k)
        .ok_or_else(|| Error::Format(format!("no ego state at step {k}")))
}

/// Overlaid, pooled BEV of frame `k` around the ego.
pub fn render_bev(scenario: &Scenario, k: i64, hazard: Option<Vec2>, cfg: &PipelineConfig) -> Result<BevMap> {
    let ego = ego_at(scenario, k)?;
    let frame = scenario.frame(k);
    let raw = rasterize(&frame, hazard, ego, &cfg.raster_grid()?, k as f64 * scenario.dt)?;
    Ok(pool(&overlay_axes(&raw, &cfg.overlay()), cfg.pool_factor)?)
}

/// Constant-velocity predictions of every non-ego agent over the plan's
/// timestamps.
pub fn predict_surroundings(scenario: &Scenario, k_now: i64, n: usize, waypoint_dt: f64) -> Result<Vec<Trajectory>> {
    let zero_rates = vec![0.0; n.saturating_sub(1)];
    scenario
        .others()
        .filter_map(|id| scenario.state(id, k_now))
        .map(|s| Ok(rollout(s, &zero_rates, waypoint_dt)?))
        .collect()
}

/// Recorded futures of every non-ego agent at the plan's timestamps,
/// extrapolated at constant velocity past the end of the recording.
pub fn actual_futures(
    scenario: &Scenario,
    k_now: i64,
    nominal: &Trajectory,
    waypoint_dt: f64,
) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for id in scenario.others() {
        let states = &scenario.agents()[id];
        let last = states.last().expect("agents have states");
        let positions = (0..nominal.len()).map(|j| {
            let k = k_now + (j as f64 * waypoint_dt / scenario.dt).round() as i64;
            match scenario.state(id, k) {
                Some(s) => s.position(),
                None => last.position() + last.velocity() * ((k - last.k) as f64 * scenario.dt),
            }
        });
        out.push(Trajectory::from_positions(
            AgentId::clone(id),
            0.0,
            waypoint_dt,
            positions,
        )?);
    }
    Ok(out)
}

/// Structuring, BEV and alignment stages.
pub fn prepare(
    scenario: &Scenario,
    cfg: &PipelineConfig,
    instruction: &str,
    latency: &mut StageLatency,
) -> std::result::Result<Prepared, StageError> {
    let nominal = nominal_plan(scenario, cfg).map_err(|e| StageError::new("structuring", e))?;

    let t = Instant::now();
    let context = build_context(scenario, T_NOW, &cfg.validation()).map_err(|e| StageError::new("structuring", e))?;
    latency.structuring_ms = ms_since(t);

    let t = Instant::now();
    let visual = (|| -> Result<VisualPrompt> {
        let k_now = scenario
            .step_at(T_NOW)
            .ok_or_else(|| Error::Format("planning frame is not on the scenario clock".into()))?;
        let t_past = T_NOW - cfg.past_offset_s;
        let k_past = scenario
            .step_at(t_past)
            .ok_or_else(|| Error::Format("past frame is not on the scenario clock".into()))?;
        let hazard_now = context.hazard.as_ref().map(|h| h.position());
        let hazard_past = context
            .hazard
            .as_ref()
            .filter(|h| h.issue_time <= t_past)
            .map(|h| h.position());
        let now = render_bev(scenario, k_now, hazard_now, cfg)?;
        let past = render_bev(scenario, k_past, hazard_past, cfg)?;
        Ok(VisualPrompt::new(now, past, cfg.patch_size)?)
    })()
    .map_err(|e| StageError::new("bev", e))?;
    latency.bev_ms = ms_since(t);

    let t = Instant::now();
    let mut warnings = Vec::new();
    let visual_tokens = visual.visual_tokens().map_err(|e| StageError::new("alignment", e))?;
    let text_budget = cfg
        .token_budget
        .checked_sub(visual_tokens)
        .filter(|&b| b > 0)
        .ok_or_else(|| StageError::new("alignment", "visual tokens exhaust the token budget"))?;
    let instruction = instruction.trim_end();
    let text = match reduce_tokens(&encode_text_prompt(&context, instruction), text_budget) {
        Ok(tp) => tp,
        Err(ReduceError::OverBudget {
            best_effort,
            tokens,
            budget,
        }) => {
            warnings.push(StageError::new(
                "alignment",
                format!("prompt needs {tokens} text tokens, budget {budget}"),
            ));
            *best_effort
        }
        Err(e) => return Err(StageError::new("alignment", e)),
    };
    let tokens = estimate_tokens(&text, &visual).map_err(|e| StageError::new("alignment", e))?;
    latency.alignment_ms = ms_since(t);

    let k_now = scenario.step_at(T_NOW).expect("checked by the bev stage");
    let surroundings = predict_surroundings(scenario, k_now, nominal.len(), cfg.waypoint_dt)
        .map_err(|e| StageError::new("planner", e))?;
    Ok(Prepared {
        context,
        text,
        visual,
        nominal,
        surroundings,
        tokens,
        warnings,
    })
}

/// Plan of the geometric planner given full information: the broadcast
/// hazard whether or not it passed validation, and the agents' actual
/// futures. Returns the plan, its decision log and the actual obstacles.
pub fn ground_truth(
    scenario: &Scenario,
    nominal: &Trajectory,
    cfg: &PipelineConfig,
) -> Result<(Trajectory, AvoidanceDecision, Vec<Trajectory>)> {
    let mut ctx = build_context(scenario, T_NOW, &cfg.validation())?;
    ctx.hazard = scenario.hazard;
    let k_now = scenario
        .step_at(T_NOW)
        .ok_or_else(|| Error::Format("planning frame is not on the scenario clock".into()))?;
    let futures = actual_futures(scenario, k_now, nominal, cfg.waypoint_dt)?;
    let (residuals, decision) = geometric_avoidance(&ctx, nominal, &futures, &cfg.avoidance())?;
    let safe = apply_residuals(&nominal.positions(), &residuals)?;
    let obstacles = planning_obstacles(&ctx, nominal, &futures)?;
    Ok((nominal.with_positions(&safe.waypoints)?, decision, obstacles))
}

/// Run every stage on `scenario` with `backend`.
pub fn run_pipeline(scenario: &Scenario, backend: &dyn PlannerBackend, cfg: &PipelineConfig) -> RunResult {
    let start = Instant::now();
    let mut latency = StageLatency::default();
    let mut errors = Vec::new();
    let nominal = nominal_plan(scenario, cfg).unwrap_or_else(|e| {
        errors.push(StageError::new("structuring", &e));
        Trajectory::new(scenario.ego_id.clone(), Vec::new()).expect("empty trajectory is valid")
    });
    let mut result = RunResult {
        scenario_id: scenario.id.clone(),
        meta: scenario.meta.clone(),
        backend: backend.name().to_string(),
        optimized: nominal.clone(),
        residuals: vec![[0.0, 0.0]; nominal.len()],
        nominal,
        fallback: None,
        errors,
        decision: None,
        reasoning: None,
        hazard_validated: false,
        prompt_tokens: None,
        latency,
        origin: Vec2::ZERO,
        hazard: scenario.hazard.as_ref().map(|h| h.position()),
        ground_truth: None,
        obstacles: Vec::new(),
        masks_pred: None,
        masks_gt: None,
        bev_grid: None,
        bev_now: None,
    };
    if result.nominal.is_empty() {
        result.latency.total_ms = ms_since(start);
        return result;
    }

    let ego_now = scenario
        .step_at(T_NOW)
        .and_then(|k| scenario.state(&scenario.ego_id, k));
    result.origin = ego_now.map_or(result.nominal.points()[0].pos, |s| s.position());
    let heading = ego_now.map_or(0.0, |s| s.yaw);

    let instruction = match cfg.instruction() {
        Ok(i) => i,
        Err(e) => {
            result.errors.push(StageError::new("alignment", e));
            result.latency.total_ms = ms_since(start);
            return result;
        }
    };
    match prepare(scenario, cfg, &instruction, &mut latency) {
        Err(e) => result.errors.push(e),
        Ok(prep) => {
            result.errors.extend(prep.warnings.iter().cloned());
            result.hazard_validated = prep.context.hazard.is_some();
            result.prompt_tokens = Some(prep.tokens);
            result.bev_grid = Some(prep.visual.bev_now.grid);
            result.bev_now = Some(bev_to_base64_pgm(&prep.visual.bev_now));

            let t = Instant::now();
            let req = PlanRequest {
                text: &prep.text,
                visual: &prep.visual,
                nominal: &prep.nominal,
                context: &prep.context,
                surroundings: &prep.surroundings,
            };
            let outcome = plan(&req, backend);
            latency.planner_ms = ms_since(t);

            let t = Instant::now();
            let fused =
                apply_residuals(&prep.nominal.positions(), &outcome.residuals).and_then(|p| match cfg.limits() {
                    Some(l) => clamp_kinematic(&p, &l),
                    None => Ok(p),
                });
            match fused.and_then(|p| Ok((prep.nominal.with_positions(&p.waypoints)?, p))) {
                Ok((traj, p)) => {
                    result.optimized = traj;
                    result.residuals = p.residuals_applied.deltas().iter().map(|d| [d.x, d.y]).collect();
                }
                Err(e) => result.errors.push(StageError::new("rtf", e)),
            }
            latency.rtf_ms = ms_since(t);
            result.fallback = outcome.fallback;
            result.reasoning = outcome.residuals.reasoning.clone();
            result.decision = outcome.decision;
        }
    }
    latency.total_ms = ms_since(start);
    result.latency = latency;

    // evaluation inputs, outside the timed pipeline
    match ground_truth(scenario, &result.nominal, cfg) {
        Ok((gt, _, obstacles)) => {
            result.obstacles = obstacles;
            let masks = pooled_grid(cfg).and_then(|g| {
                let pred = motion_masks(&result.optimized.positions(), result.origin, heading, &g)?;
                let truth = motion_masks(&gt.positions(), result.origin, heading, &g)?;
                Ok((pred, truth))
            });
            match masks {
                Ok((pred, truth)) => {
                    result.masks_pred = Some(PackedMasks::pack(&pred));
                    result.masks_gt = Some(PackedMasks::pack(&truth));
                }
                Err(e) => result.errors.push(StageError::new("evaluation", e)),
            }
            result.ground_truth = Some(gt);
        }
        Err(e) => result.errors.push(StageError::new("evaluation", e)),
    }
    result
}
