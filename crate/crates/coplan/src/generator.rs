//! Seeded synthetic scenarios with occluded-hazard geometry.
//!
//! The ego drives a straight or constant-curvature route at constant speed.
//! The first surrounding agent is a lead vehicle a few metres ahead on the
//! route; when a hazard is drawn it sits on the route beyond the lead, close
//! enough to the nominal plan that keeping it means passing within the
//! collision threshold. Further agents travel in parallel lanes 12-18 m to
//! either side. Every agent other than the ego moves at constant velocity,
//! so constant-velocity prediction is exact.
//!
//! Condition tags only perturb the random draws (speed band, hazard timing);
//! the geometry rules are the same everywhere.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use coplan_core::geom::{quantize, Vec2};
use coplan_core::scenario::{
    AgentId, HazardAlert, NavigationPlan, Scenario, ScenarioMeta, VehicleState, Waypoint, DEFAULT_DT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// First and last timestep of generated scenarios (2 s of history, 3 s of
/// future at the default 0.1 s step).
pub const K_FIRST: i64 = -20;
pub const K_LAST: i64 = 30;
/// Navigation waypoints every 0.5 s from -2 s to +8 s; the current one is
/// at t = 0.
pub const NAV_CADENCE: f64 = 0.5;
pub const NAV_FIRST_T: f64 = -2.0;
pub const NAV_COUNT: usize = 21;
pub const NAV_CURRENT: usize = 4;
pub const EGO_ID: &str = "ego";

macro_rules! closed_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::Format(format!(concat!("unknown ", stringify!($name), " '{}'"), s))),
                }
            }
        }
    };
}

closed_enum!(Location {
    SmallTown => "small_town",
    Downtown => "downtown",
    Rural => "rural",
    Highway => "highway",
    Intersection => "intersection",
});

closed_enum!(Weather {
    Clear => "clear",
    Cloudy => "cloudy",
    Rainy => "rainy",
    Wet => "wet",
});

closed_enum!(TimeOfDay {
    Noon => "noon",
    Sunset => "sunset",
    Night => "night",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioProfile {
    pub location: Location,
    pub weather: Weather,
    pub time_of_day: TimeOfDay,
    /// Number of surrounding agents (the lead vehicle included).
    pub density: usize,
    pub seed: u64,
    #[serde(default = "default_hazard_probability")]
    pub hazard_probability: f64,
}

fn default_hazard_probability() -> f64 {
    1.0
}

impl ScenarioProfile {
    pub fn validate(&self) -> Result<()> {
        if self.density == 0 {
            return Err(Error::Format("density must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.hazard_probability) {
            return Err(Error::Format("hazard_probability must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn scenario_id(&self) -> String {
        format!("{}-{}-{}-s{}", self.location, self.weather, self.time_of_day, self.seed)
    }
}

/// Profiles of a mixed-condition suite: `n` scenarios with seeds `seed..`,
/// cycling through every location / weather / time-of-day combination and
/// densities 1 to 3, each with a hazard.
pub fn mixed_suite(seed: u64, n: usize) -> Vec<ScenarioProfile> {
    let combos: Vec<(Location, Weather, TimeOfDay)> = Location::ALL
        .iter()
        .flat_map(|&l| {
            Weather::ALL
                .iter()
                .flat_map(move |&w| TimeOfDay::ALL.iter().map(move |&t| (l, w, t)))
        })
        .collect();
    (0..n)
        .map(|i| {
            // stride through the combinations so short suites still mix
            let (location, weather, time_of_day) = combos[(i * 7) % combos.len()];
            ScenarioProfile {
                location,
                weather,
                time_of_day,
                density: 1 + i % 3,
                seed: seed + i as u64,
                hazard_probability: 1.0,
            }
        })
        .collect()
}

/// Arc-length parameterized route: straight when `curvature == 0`.
#[derive(Debug, Clone, Copy)]
struct Route {
    start: Vec2,
    heading: f64,
    curvature: f64,
}

impl Route {
    fn heading_at(&self, s: f64) -> f64 {
        self.heading + self.curvature * s
    }

    fn point(&self, s: f64) -> Vec2 {
        let h0 = self.heading;
        if self.curvature == 0.0 {
            return self.start + Vec2::new(h0.cos(), h0.sin()) * s;
        }
        let k = self.curvature;
        let h = self.heading_at(s);
        self.start + Vec2::new((h.sin() - h0.sin()) / k, (h0.cos() - h.cos()) / k)
    }

    fn tangent(&self, s: f64) -> Vec2 {
        let h = self.heading_at(s);
        Vec2::new(h.cos(), h.sin())
    }
}

fn tag_hash(tags: &[&str]) -> u64 {
    // FNV-1a over the tags, separated so that ("ab","c") != ("a","bc")
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for t in tags {
        for b in t.bytes().chain(std::iter::once(0xff)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn speed_band(p: &ScenarioProfile) -> (f64, f64) {
    let (lo, hi) = match p.location {
        Location::Highway => (11.0, 14.0),
        Location::Rural => (10.0, 14.0),
        Location::SmallTown | Location::Intersection => (8.0, 12.0),
        Location::Downtown => (8.0, 11.0),
    };
    match p.weather {
        Weather::Rainy | Weather::Wet => (lo, hi - 1.0),
        Weather::Clear | Weather::Cloudy => (lo, hi),
    }
}

fn cv_states(id: &AgentId, start: Vec2, vel: Vec2, dt: f64) -> Vec<VehicleState> {
    let yaw = vel.y.atan2(vel.x);
    (K_FIRST..=K_LAST)
        .map(|k| {
            let p = start + vel * (k as f64 * dt);
            VehicleState {
                agent_id: id.clone(),
                k,
                x: p.x,
                y: p.y,
                z: 0.0,
                vx: vel.x,
                vy: vel.y,
                yaw,
            }
        })
        .collect()
}

/// Deterministic in the profile: the same profile always yields the same
/// scenario, and therefore byte-identical scenario JSON.
pub fn generate_scenario(p: &ScenarioProfile) -> Result<Scenario> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(
        p.seed ^ tag_hash(&[p.location.as_str(), p.weather.as_str(), p.time_of_day.as_str()]),
    );
    let dt = DEFAULT_DT;

    let (v_lo, v_hi) = speed_band(p);
    let speed: f64 = rng.random_range(v_lo..=v_hi);
    let curved = p.location != Location::Highway && rng.random_bool(0.5);
    let curvature = if curved {
        let radius: f64 = rng.random_range(150.0..=400.0);
        if rng.random_bool(0.5) {
            1.0 / radius
        } else {
            -1.0 / radius
        }
    } else {
        0.0
    };
    let route = Route {
        start: Vec2::new(rng.random_range(-50.0..=50.0), rng.random_range(-50.0..=50.0)),
        heading: rng.random_range(-0.3..=0.3),
        curvature,
    };

    let ego_id = AgentId::from(EGO_ID);
    let ego_states: Vec<VehicleState> = (K_FIRST..=K_LAST)
        .map(|k| {
            let s = speed * k as f64 * dt;
            let pos = route.point(s);
            let vel = route.tangent(s) * speed;
            VehicleState {
                agent_id: ego_id.clone(),
                k,
                x: pos.x,
                y: pos.y,
                z: 0.0,
                vx: vel.x,
                vy: vel.y,
                yaw: route.heading_at(s),
            }
        })
        .collect();

    let nav_points = (0..NAV_COUNT)
        .map(|i| {
            let t = NAV_FIRST_T + NAV_CADENCE * i as f64;
            let pos = route.point(speed * t).quantized();
            Waypoint::new(pos.x, pos.y, 0.0)
        })
        .collect();
    let nav = NavigationPlan::new(nav_points, NAV_CURRENT)?;

    let mut agents = BTreeMap::new();
    agents.insert(ego_id.clone(), ego_states);

    // lead vehicle on the route, same speed, 6.5-9 m ahead
    let lead_id = AgentId::from("agent_01");
    let gap: f64 = rng.random_range(6.5..=9.0);
    agents.insert(
        lead_id.clone(),
        cv_states(&lead_id, route.point(gap), route.tangent(gap) * speed, dt),
    );

    // parallel traffic well clear of any lateral offset the planner considers
    for i in 1..p.density {
        let id = AgentId::new(format!("agent_{:02}", i + 1));
        let s: f64 = rng.random_range(-20.0..=30.0);
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let lateral: f64 = side * rng.random_range(12.0..=18.0);
        let v: f64 = rng.random_range(6.0..=14.0);
        let start = route.point(s) + route.tangent(s).lateral() * lateral;
        agents.insert(id.clone(), cv_states(&id, start, route.tangent(s) * v, dt));
    }

    let hazard = if rng.random_bool(p.hazard_probability) {
        // on-route beyond the lead, inside the 2 s plan and at most 3 m off
        // the centre line; waypoints are <= 7 m apart, so some waypoint is
        // within sqrt(3.5^2 + 3^2) < 5 m of it
        let s_h: f64 = rng.random_range(10.0..=2.0 * speed - 1.0);
        let lateral: f64 = rng.random_range(-3.0..=3.0);
        let pos = route.point(s_h) + route.tangent(s_h).lateral() * lateral;
        let t_h: f64 = match p.time_of_day {
            TimeOfDay::Night => rng.random_range(0.5..=1.5),
            TimeOfDay::Noon | TimeOfDay::Sunset => rng.random_range(0.0..=1.5),
        };
        let issue_time: f64 = -rng.random_range(0.0..=1.0);
        Some(HazardAlert {
            x: pos.x,
            y: pos.y,
            z: 0.0,
            t_h: quantize(t_h),
            issue_time: quantize(issue_time),
        })
    } else {
        None
    };

    Ok(Scenario::new(
        p.scenario_id(),
        dt,
        ego_id,
        agents,
        hazard,
        nav,
        ScenarioMeta {
            weather: p.weather.to_string(),
            time_of_day: p.time_of_day.to_string(),
            location: p.location.to_string(),
        },
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario_file::scenario_to_json;

    fn profile(seed: u64, density: usize) -> ScenarioProfile {
        ScenarioProfile {
            location: Location::Rural,
            weather: Weather::Clear,
            time_of_day: TimeOfDay::Noon,
            density,
            seed,
            hazard_probability: 1.0,
        }
    }

    #[test]
    fn deterministic() {
        let a = scenario_to_json(&generate_scenario(&profile(3, 3)).unwrap());
        let b = scenario_to_json(&generate_scenario(&profile(3, 3)).unwrap());
        assert_eq!(a, b);
        let c = scenario_to_json(&generate_scenario(&profile(4, 3)).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn tags_change_draws() {
        let a = generate_scenario(&profile(3, 1)).unwrap();
        let mut p = profile(3, 1);
        p.weather = Weather::Wet;
        let b = generate_scenario(&p).unwrap();
        assert_ne!(a.ego_states()[0], b.ego_states()[0]);
    }

    #[test]
    fn density_one_is_ego_plus_one() {
        let s = generate_scenario(&profile(9, 1)).unwrap();
        assert_eq!(s.agents().len(), 2);
        assert_eq!(s.k_range(), (K_FIRST, K_LAST));
    }

    #[test]
    fn hazard_probability_zero() {
        let mut p = profile(1, 2);
        p.hazard_probability = 0.0;
        assert!(generate_scenario(&p).unwrap().hazard.is_none());
        p.density = 0;
        assert!(generate_scenario(&p).is_err());
    }

    #[test]
    fn enum_text_round_trip() {
        for l in Location::ALL {
            assert_eq!(l.as_str().parse::<Location>().unwrap(), *l);
        }
        assert!("sunrise".parse::<TimeOfDay>().is_err());
    }

    #[test]
    fn suite_mixes_conditions() {
        let suite = mixed_suite(100, 60);
        let combos: std::collections::BTreeSet<_> =
            suite.iter().map(|p| (p.location, p.weather, p.time_of_day)).collect();
        assert_eq!(combos.len(), 60);
    }
}
