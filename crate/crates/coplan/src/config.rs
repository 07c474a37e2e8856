//! Flat TOML configuration for the pipeline and its planner backend.
//!
//! Every key is optional; missing keys take the defaults below.
//!
//! ```toml
//! delta_t_max = 2.0
//! history_window_s = 2.0
//! nav_horizon = 4
//! raster_width = 128
//! raster_height = 128
//! raster_scale = 0.625
//! pool_factor = 2
//! patch_size = 8
//! token_budget = 1600
//! backend = "geometric"        # null | geometric | remote
//! endpoint = "http://127.0.0.1:8080"
//! timeout_s = 10.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use coplan_core::alignment::{DEFAULT_INSTRUCTION, DEFAULT_PATCH_SIZE, DEFAULT_TOKEN_BUDGET};
use coplan_core::bev::{GridSpec, OverlaySpec};
use coplan_core::planner::{AvoidanceConfig, GeometricPlanner, NullPlanner, PlannerBackend};
use coplan_core::rtf::KinematicLimits;
use coplan_core::structuring::ValidationConfig;
use serde::{Deserialize, Serialize};

use crate::remote::RemotePlanner;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Null,
    #[default]
    Geometric,
    Remote,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Null => "null",
            Self::Geometric => "geometric",
            Self::Remote => "remote",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub timeout: Duration,
    pub max_new_tokens: usize,
    pub avoidance: AvoidanceConfig,
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        self.avoidance.validate()?;
        if self.timeout.is_zero() {
            return Err(Error::Format("timeout must be positive".into()));
        }
        if self.kind == BackendKind::Remote && self.endpoint.is_none() {
            return Err(Error::Format("the remote backend needs an endpoint".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn PlannerBackend + Send + Sync>> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Null => Box::new(NullPlanner),
            BackendKind::Geometric => Box::new(GeometricPlanner { config: self.avoidance }),
            BackendKind::Remote => Box::new(RemotePlanner::new(
                self.endpoint.clone().unwrap_or_default(),
                self.timeout,
                self.max_new_tokens,
            )),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub delta_t_max: f64,
    pub history_window_s: f64,
    pub nav_horizon: usize,
    /// Raster before pooling; the anchor sits at the centre.
    pub raster_width: usize,
    pub raster_height: usize,
    pub raster_scale: f64,
    pub pool_factor: usize,
    pub patch_size: usize,
    pub token_budget: usize,
    pub overlay_tick_spacing: f64,
    /// Time between consecutive plan waypoints, seconds.
    pub waypoint_dt: f64,
    /// Age of the past BEV frame, seconds.
    pub past_offset_s: f64,
    /// Optional spacing cap applied after fusion, metres.
    pub max_step: Option<f64>,
    pub instruction_file: Option<PathBuf>,
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub timeout_s: f64,
    pub max_new_tokens: usize,
    pub max_lateral_offset: f64,
    pub lateral_step: f64,
    pub safety_clearance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let v = ValidationConfig::default();
        let a = AvoidanceConfig::default();
        Self {
            delta_t_max: v.delta_t_max,
            history_window_s: v.history_window,
            nav_horizon: v.nav_horizon,
            raster_width: 128,
            raster_height: 128,
            raster_scale: 0.625,
            pool_factor: 2,
            patch_size: DEFAULT_PATCH_SIZE,
            token_budget: DEFAULT_TOKEN_BUDGET,
            overlay_tick_spacing: OverlaySpec::default().tick_spacing,
            waypoint_dt: 0.5,
            past_offset_s: 0.5,
            max_step: None,
            instruction_file: None,
            backend: BackendKind::default(),
            endpoint: None,
            timeout_s: 10.0,
            max_new_tokens: 256,
            max_lateral_offset: a.max_lateral_offset,
            lateral_step: a.lateral_step,
            safety_clearance: a.safety_clearance,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.validation().validate()?;
        self.raster_grid()?;
        if self.pool_factor == 0
            || !self.raster_width.is_multiple_of(self.pool_factor)
            || !self.raster_height.is_multiple_of(self.pool_factor)
        {
            return Err(Error::Format("pool_factor must divide the raster size".into()));
        }
        if !(self.waypoint_dt > 0.0) || !(self.past_offset_s > 0.0) {
            return Err(Error::Format("waypoint_dt and past_offset_s must be positive".into()));
        }
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(Error::Format("timeout_s must be positive".into()));
        }
        if let Some(m) = self.max_step {
            if !(m > 0.0) {
                return Err(Error::Format("max_step must be positive".into()));
            }
        }
        self.backend_config().validate()
    }

    pub fn validation(&self) -> ValidationConfig {
        ValidationConfig {
            delta_t_max: self.delta_t_max,
            history_window: self.history_window_s,
            nav_horizon: self.nav_horizon,
        }
    }

    /// Full-resolution raster grid, anchored at the centre.
    pub fn raster_grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(
            self.raster_width,
            self.raster_height,
            self.raster_scale,
            (self.raster_width / 2, self.raster_height / 2),
        )?)
    }

    pub fn overlay(&self) -> OverlaySpec {
        OverlaySpec {
            tick_spacing: self.overlay_tick_spacing,
            ..OverlaySpec::default()
        }
    }

    pub fn avoidance(&self) -> AvoidanceConfig {
        AvoidanceConfig {
            max_lateral_offset: self.max_lateral_offset,
            lateral_step: self.lateral_step,
            safety_clearance: self.safety_clearance,
        }
    }

    pub fn limits(&self) -> Option<KinematicLimits> {
        self.max_step.map(|max_step| KinematicLimits { max_step })
    }

    pub fn backend_config(&self) -> BackendConfig {
        BackendConfig {
            kind: self.backend,
            endpoint: self.endpoint.clone(),
            timeout: Duration::from_secs_f64(self.timeout_s),
            max_new_tokens: self.max_new_tokens,
            avoidance: self.avoidance(),
        }
    }

    pub fn instruction(&self) -> Result<String> {
        match &self.instruction_file {
            None => Ok(DEFAULT_INSTRUCTION.to_string()),
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e)),
        }
    }
}
