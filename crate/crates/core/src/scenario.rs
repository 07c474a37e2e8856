//! Domain types in the roadside-unit (RSU) frame and discrete-time
//! constant-velocity kinematics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geom::{normalize_angle, Vec2};
use crate::{Error, Result};

/// Default simulation step (10 Hz).
pub const DEFAULT_DT: f64 = 0.1;

/// Common coordinate frame centred at the roadside unit.
///
/// `x_up` is longitudinal (along the road), `y_right` lateral, `z_up`
/// vertical. Every position in this crate is expressed in this frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameRsu {
    pub origin: [f64; 3],
    pub x_up: [f64; 3],
    pub y_right: [f64; 3],
    pub z_up: [f64; 3],
}

impl FrameRsu {
    /// Axis-aligned frame at `origin` (world coordinates).
    pub fn at(origin: [f64; 3]) -> Self {
        Self {
            origin,
            x_up: [1.0, 0.0, 0.0],
            y_right: [0.0, 1.0, 0.0],
            z_up: [0.0, 0.0, 1.0],
        }
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let axes = [self.x_up, self.y_right, self.z_up];
        for (i, a) in axes.iter().enumerate() {
            for (j, b) in axes.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot(*a, *b) - want).abs() > tol {
                    return false;
                }
            }
        }
        // vertical-up means the z axis has a positive world-z component
        self.z_up[2] > 0.0
    }

    /// Express a world point in this frame.
    pub fn to_local(&self, world: [f64; 3]) -> [f64; 3] {
        let d = [
            world[0] - self.origin[0],
            world[1] - self.origin[1],
            world[2] - self.origin[2],
        ];
        let dot = |a: [f64; 3]| a[0] * d[0] + a[1] * d[1] + a[2] * d[2];
        [dot(self.x_up), dot(self.y_right), dot(self.z_up)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct AgentId(pub String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        Self(String::from(s))
    }
}

/// Kinematic state of one agent at one timestep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehicleState {
    pub agent_id: AgentId,
    /// Timestep index on the scenario clock; the timestamp is `k * dt`.
    pub k: i64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw: f64,
}

impl VehicleState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.k as f64 * dt
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.z, self.vx, self.vy, self.yaw]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Hazard alert broadcast by the roadside unit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HazardAlert {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// 0 means the accident already happened; > 0 is the predicted lead time.
    pub t_h: f64,
    /// When the alert was issued, on the scenario clock.
    pub issue_time: f64,
}

impl HazardAlert {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_well_formed(&self) -> bool {
        self.t_h >= 0.0
            && [self.x, self.y, self.z, self.t_h, self.issue_time]
                .iter()
                .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    /// Carried for completeness; planning is planar and ignores it.
    pub z: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Ordered route waypoints from the on-board route planner. The last
/// element is the destination.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NavigationPlan {
    waypoints: Vec<Waypoint>,
    current_index: usize,
}

impl NavigationPlan {
    pub fn new(waypoints: Vec<Waypoint>, current_index: usize) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::Empty("navigation plan"));
        }
        if current_index >= waypoints.len() {
            return Err(Error::Config("navigation current_index out of bounds"));
        }
        Ok(Self {
            waypoints,
            current_index,
        })
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn current_index(&self) -> usize {
        self.current_index
    }

    pub fn destination(&self) -> &Waypoint {
        // non-empty by construction
        &self.waypoints[self.waypoints.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajPoint {
    pub t: f64,
    pub pos: Vec2,
}

/// Timed planar path of one agent. Timestamps are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub agent_id: AgentId,
    points: Vec<TrajPoint>,
}

impl Trajectory {
    pub fn new(agent_id: AgentId, points: Vec<TrajPoint>) -> Result<Self> {
        for p in &points {
            if !(p.t.is_finite() && p.pos.is_finite()) {
                return Err(Error::InvalidState("non-finite trajectory point"));
            }
        }
        if points.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidState("trajectory time not strictly increasing"));
        }
        Ok(Self { agent_id, points })
    }

    /// Build from positions sampled at `t0 + n * dt`.
    pub fn from_positions(
        agent_id: AgentId,
        t0: f64,
        dt: f64,
        positions: impl IntoIterator<Item = Vec2>,
    ) -> Result<Self> {
        let points = positions
            .into_iter()
            .enumerate()
            .map(|(n, pos)| TrajPoint {
                t: t0 + n as f64 * dt,
                pos,
            })
            .collect();
        Self::new(agent_id, points)
    }

    /// A motionless agent at `pos`, sampled at the given timestamps.
    pub fn stationary(agent_id: AgentId, pos: Vec2, times: &[f64]) -> Result<Self> {
        Self::new(agent_id, times.iter().map(|&t| TrajPoint { t, pos }).collect())
    }

    pub fn points(&self) -> &[TrajPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.points.iter().map(|p| p.pos).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    /// Same length and bit-identical timestamps.
    pub fn is_time_aligned(&self, other: &Trajectory) -> bool {
        self.points.len() == other.points.len() && self.points.iter().zip(&other.points).all(|(a, b)| a.t == b.t)
    }

    /// Points with `t <= t_max`.
    pub fn truncated(&self, t_max: f64) -> Trajectory {
        Trajectory {
            agent_id: self.agent_id.clone(),
            points: self.points.iter().copied().filter(|p| p.t <= t_max).collect(),
        }
    }

    /// Same timestamps, new positions.
    pub fn with_positions(&self, positions: &[Vec2]) -> Result<Trajectory> {
        if positions.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                got: positions.len(),
            });
        }
        Trajectory::new(
            self.agent_id.clone(),
            self.points
                .iter()
                .zip(positions)
                .map(|(p, &pos)| TrajPoint { t: p.t, pos })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioMeta {
    pub weather: String,
    pub time_of_day: String,
    pub location: String,
}

/// A complete multi-agent episode on a shared timestep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub dt: f64,
    pub ego_id: AgentId,
    agents: BTreeMap<AgentId, Vec<VehicleState>>,
    pub hazard: Option<HazardAlert>,
    pub nav: NavigationPlan,
    pub meta: ScenarioMeta,
}

impl Scenario {
    /// Validates that `ego_id` exists, that every agent shares the same
    /// contiguous, ascending timestep grid, and that all values are finite.
    pub fn new(
        id: String,
        dt: f64,
        ego_id: AgentId,
        mut agents: BTreeMap<AgentId, Vec<VehicleState>>,
        hazard: Option<HazardAlert>,
        nav: NavigationPlan,
        meta: ScenarioMeta,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config("dt must be positive"));
        }
        if !agents.contains_key(&ego_id) {
            return Err(Error::InvalidState("ego_id not among agents"));
        }
        if let Some(h) = &hazard {
            if !h.is_well_formed() {
                return Err(Error::InvalidState("hazard must be finite with t_h >= 0"));
            }
        }
        let mut grid: Option<Vec<i64>> = None;
        for (id, states) in agents.iter_mut() {
            states.sort_by_key(|s| s.k);
            if states.is_empty() {
                return Err(Error::Empty("agent without states"));
            }
            if states.iter().any(|s| !s.is_finite()) {
                return Err(Error::InvalidState("non-finite agent state"));
            }
            if states.windows(2).any(|w| w[1].k != w[0].k + 1) {
                return Err(Error::InvalidState("agent timesteps not contiguous"));
            }
            for s in states.iter_mut() {
                s.agent_id = id.clone();
            }
            let ks: Vec<i64> = states.iter().map(|s| s.k).collect();
            match &grid {
                None => grid = Some(ks),
                Some(g) if *g != ks => return Err(Error::InvalidState("agents do not share the timestep grid")),
                Some(_) => {}
            }
        }
        Ok(Self {
            id,
            dt,
            ego_id,
            agents,
            hazard,
            nav,
            meta,
        })
    }

    pub fn agents(&self) -> &BTreeMap<AgentId, Vec<VehicleState>> {
        &self.agents
    }

    pub fn ego_states(&self) -> &[VehicleState] {
        &self.agents[&self.ego_id]
    }

    /// First and last timestep index of the shared grid.
    pub fn k_range(&self) -> (i64, i64) {
        let ego = self.ego_states();
        (ego[0].k, ego[ego.len() - 1].k)
    }

    /// Timestep index for a scenario-clock time, if it lies on the grid.
    pub fn step_at(&self, t: f64) -> Option<i64> {
        let k = libm::round(t / self.dt);
        if (k * self.dt - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return None;
        }
        let k = k as i64;
        let (lo, hi) = self.k_range();
        (lo..=hi).contains(&k).then_some(k)
    }

    pub fn state(&self, agent: &AgentId, k: i64) -> Option<&VehicleState> {
        let states = self.agents.get(agent)?;
        let first = states.first()?.k;
        let idx = usize::try_from(k - first).ok()?;
        states.get(idx)
    }

    /// All agent states at timestep `k`, ego included.
    pub fn frame(&self, k: i64) -> Vec<&VehicleState> {
        self.agents.keys().filter_map(|id| self.state(id, k)).collect()
    }

    /// Non-ego agent identifiers in sorted order.
    pub fn others(&self) -> impl Iterator<Item = &AgentId> {
        self.agents.keys().filter(move |id| **id != self.ego_id)
    }
}

/// Advance one step under constant velocity and flat grade; yaw integrates
/// the yaw rate and is wrapped into (-pi, pi].
pub fn propagate_state(s: &VehicleState, yaw_rate: f64, dt: f64) -> Result<VehicleState> {
    if !s.is_finite() || !yaw_rate.is_finite() || !dt.is_finite() {
        return Err(Error::InvalidState("non-finite kinematic input"));
    }
    if dt <= 0.0 {
        return Err(Error::InvalidState("dt must be positive"));
    }
    Ok(VehicleState {
        agent_id: s.agent_id.clone(),
        k: s.k + 1,
        x: s.x + s.vx * dt,
        y: s.y + s.vy * dt,
        z: s.z,
        vx: s.vx,
        vy: s.vy,
        yaw: normalize_angle(s.yaw + yaw_rate * dt),
    })
}

/// Roll a state forward once per yaw-rate sample.
///
/// The trajectory has `yaw_rates.len() + 1` points with timestamps `n * dt`
/// measured from the start state.
pub fn rollout(s: &VehicleState, yaw_rates: &[f64], dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidState("dt must be positive"));
    }
    if !s.is_finite() {
        return Err(Error::InvalidState("non-finite kinematic input"));
    }
    let mut state = s.clone();
    let mut positions = Vec::with_capacity(yaw_rates.len() + 1);
    positions.push(state.position());
    for &r in yaw_rates {
        state = propagate_state(&state, r, dt)?;
        positions.push(state.position());
    }
    Trajectory::from_positions(s.agent_id.clone(), 0.0, dt, positions)
}
