//! JSON scenario files.
//!
//! ```json
//! {
//!   "id": "rural-clear-noon-s7",
//!   "dt": 0.1,
//!   "ego_id": "ego",
//!   "hazard": { "x": 40.0, "y": 1.5, "z": 0.0, "t_h": 0.4, "issue_time": -0.3 },
//!   "nav": { "waypoints": [[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]], "current_index": 0 },
//!   "agents": { "ego": [[0, 0.0, 0.0, 0.0, 10.0, 0.0, 0.0]] },
//!   "meta": { "weather": "clear", "time_of_day": "noon", "location": "rural" }
//! }
//! ```
//!
//! Agent rows are `[k, x, y, z, vx, vy, yaw]`; `hazard` may be `null`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use coplan_core::scenario::{AgentId, HazardAlert, NavigationPlan, Scenario, ScenarioMeta, VehicleState, Waypoint};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

type StateRow = (i64, f64, f64, f64, f64, f64, f64);

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NavFile {
    waypoints: Vec<[f64; 3]>,
    current_index: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    id: String,
    dt: f64,
    ego_id: String,
    hazard: Option<HazardAlert>,
    nav: NavFile,
    agents: BTreeMap<String, Vec<StateRow>>,
    #[serde(default)]
    meta: ScenarioMeta,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let agents = s
            .agents()
            .iter()
            .map(|(id, states)| {
                let rows = states.iter().map(|v| (v.k, v.x, v.y, v.z, v.vx, v.vy, v.yaw)).collect();
                (id.to_string(), rows)
            })
            .collect();
        ScenarioFile {
            id: s.id.clone(),
            dt: s.dt,
            ego_id: s.ego_id.to_string(),
            hazard: s.hazard,
            nav: NavFile {
                waypoints: s.nav.waypoints().iter().map(|w| [w.x, w.y, w.z]).collect(),
                current_index: s.nav.current_index(),
            },
            agents,
            meta: s.meta.clone(),
        }
    }
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        let nav = NavigationPlan::new(
            f.nav
                .waypoints
                .iter()
                .map(|&[x, y, z]| Waypoint::new(x, y, z))
                .collect(),
            f.nav.current_index,
        )?;
        let agents = f
            .agents
            .into_iter()
            .map(|(id, rows)| {
                let id = AgentId::new(id);
                let states = rows
                    .into_iter()
                    .map(|(k, x, y, z, vx, vy, yaw)| VehicleState {
                        agent_id: id.clone(),
                        k,
                        x,
                        y,
                        z,
                        vx,
                        vy,
                        yaw,
                    })
                    .collect();
                (id, states)
            })
            .collect();
        Ok(Scenario::new(
            f.id,
            f.dt,
            AgentId::new(f.ego_id),
            agents,
            f.hazard,
            nav,
            f.meta,
        )?)
    }
}

pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from(s)).expect("scenario serializes")
}

pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    Scenario::try_from(file)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scenario_from_json(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn save_scenario(path: &Path, s: &Scenario) -> Result<()> {
    fs::write(path, scenario_to_json(s)).map_err(|e| Error::io(path, e))
}

/// Every `*.json` file directly inside `dir`, sorted by file name.
pub fn list_json(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
