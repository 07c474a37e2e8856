//! Turns raw scenario inputs into the validated, trimmed context package
//! that prompting consumes.

use alloc::vec::Vec;

use crate::scenario::{HazardAlert, NavigationPlan, Scenario, VehicleState, Waypoint};
use crate::{Error, Result};

/// Slack applied to history-window boundaries, in seconds. Timestamps are
/// `k * dt` products, so `3.0` may be stored as `3.0000000000000004`.
pub const WINDOW_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationConfig {
    /// Maximum `|t_h - t_now|` for a hazard alert to count as current.
    pub delta_t_max: f64,
    /// Length of the retained ego history, seconds.
    pub history_window: f64,
    /// Number of waypoints kept beyond the current one.
    pub nav_horizon: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            delta_t_max: 2.0,
            history_window: 2.0,
            nav_horizon: 4,
        }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_t_max > 0.0 && self.delta_t_max.is_finite()) {
            return Err(Error::Config("delta_t_max must be positive"));
        }
        if !(self.history_window > 0.0 && self.history_window.is_finite()) {
            return Err(Error::Config("history_window must be positive"));
        }
        Ok(())
    }
}

/// Symbolic input to prompting: validated hazard, short navigation horizon
/// and recent ego history.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextPackage {
    pub hazard: Option<HazardAlert>,
    /// Index of `nav_eff[0]` in the full navigation plan.
    pub nav_start: usize,
    pub nav_eff: Vec<Waypoint>,
    pub ego_history: Vec<VehicleState>,
    pub t_now: f64,
    /// Scenario step, needed to timestamp `ego_history`.
    pub dt: f64,
}

impl ContextPackage {
    /// The most recent ego state, i.e. the ego at `t_now` when present.
    pub fn ego_now(&self) -> Option<&VehicleState> {
        self.ego_history.last()
    }
}

/// Accept the alert iff the final waypoint lies beyond the hazard along the
/// longitudinal axis and the alert time is within `delta_t_max` of now.
pub fn validate_hazard(
    h: &HazardAlert,
    nav: &NavigationPlan,
    t_now: f64,
    cfg: &ValidationConfig,
) -> Option<HazardAlert> {
    let on_route = nav.destination().x > h.x;
    let fresh = (h.t_h - t_now).abs() < cfg.delta_t_max;
    (on_route && fresh).then_some(*h)
}

/// Waypoints `k..=k+M'` clipped to the end of the plan, `k` being the
/// plan's current index.
pub fn filter_navigation<'a>(nav: &'a NavigationPlan, cfg: &ValidationConfig) -> &'a [Waypoint] {
    let wps = nav.waypoints();
    let start = nav.current_index();
    let end = start.saturating_add(cfg.nav_horizon).min(wps.len() - 1);
    &wps[start..=end]
}

/// Closed window `[t_now - K, t_now]` (with [`WINDOW_EPS`] slack).
pub fn in_history_window(t: f64, t_now: f64, window: f64) -> bool {
    t >= t_now - window - WINDOW_EPS && t <= t_now + WINDOW_EPS
}

/// States whose timestamp falls in the history window, order preserved.
pub fn filter_ego_history(states: &[VehicleState], dt: f64, t_now: f64, cfg: &ValidationConfig) -> Vec<VehicleState> {
    states
        .iter()
        .filter(|s| in_history_window(s.time(dt), t_now, cfg.history_window))
        .cloned()
        .collect()
}

pub fn build_context(scenario: &Scenario, t_now: f64, cfg: &ValidationConfig) -> Result<ContextPackage> {
    cfg.validate()?;
    if scenario.step_at(t_now).is_none() {
        return Err(Error::Config("t_now is not on the scenario clock"));
    }
    let hazard = scenario
        .hazard
        .as_ref()
        .and_then(|h| validate_hazard(h, &scenario.nav, t_now, cfg));
    Ok(ContextPackage {
        hazard,
        nav_start: scenario.nav.current_index(),
        nav_eff: filter_navigation(&scenario.nav, cfg).to_vec(),
        ego_history: filter_ego_history(scenario.ego_states(), scenario.dt, t_now, cfg),
        t_now,
        dt: scenario.dt,
    })
}
