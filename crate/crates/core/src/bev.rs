//! Ego-anchored bird's-eye-view occupancy rasters.
//!
//! Pixel `(u, v)` maps to ego-relative metres `r * (u - u0, v - v0)`: the
//! column index follows the longitudinal axis and the row index the lateral
//! one. Rasters stay axis-aligned with the RSU frame; only the origin moves
//! with the ego, matching the translation-only alignment of the prompts.

use alloc::vec;
use alloc::vec::Vec;

use crate::geom::Vec2;
use crate::metrics::{BinaryMask, MotionMaskSeq};
use crate::scenario::VehicleState;
use crate::{Error, Result};

pub const FOOTPRINT_LENGTH: f64 = 4.5;
pub const FOOTPRINT_WIDTH: f64 = 2.0;
pub const HAZARD_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Metres per pixel.
    pub scale: f64,
    pub anchor_u: usize,
    pub anchor_v: usize,
}

impl Default for GridSpec {
    /// 64 x 64 at 1.25 m/px, spanning +-40 m around the ego.
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            scale: 1.25,
            anchor_u: 32,
            anchor_v: 32,
        }
    }
}

impl GridSpec {
    pub fn new(width: usize, height: usize, scale: f64, anchor: (usize, usize)) -> Result<Self> {
        let g = Self {
            width,
            height,
            scale,
            anchor_u: anchor.0,
            anchor_v: anchor.1,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("grid dimensions must be positive"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config("grid scale must be positive"));
        }
        if self.anchor_u >= self.width || self.anchor_v >= self.height {
            return Err(Error::Config("grid anchor outside grid"));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }
}

/// Pixel outside the grid, as returned by [`metric_to_pixel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutOfGrid {
    pub u: i64,
    pub v: i64,
}

/// Ego-relative metres of pixel `(u, v)`; out-of-grid pixels are allowed.
pub fn pixel_to_metric(u: i64, v: i64, grid: &GridSpec) -> Vec2 {
    Vec2::new(
        grid.scale * (u - grid.anchor_u as i64) as f64,
        grid.scale * (v - grid.anchor_v as i64) as f64,
    )
}

/// Nearest pixel to an ego-relative point.
pub fn metric_to_pixel(p: Vec2, grid: &GridSpec) -> core::result::Result<(usize, usize), OutOfGrid> {
    let u = libm::round(p.x / grid.scale) + grid.anchor_u as f64;
    let v = libm::round(p.y / grid.scale) + grid.anchor_v as f64;
    let (ui, vi) = (saturate(u), saturate(v));
    if ui >= 0 && vi >= 0 && (ui as usize) < grid.width && (vi as usize) < grid.height {
        Ok((ui as usize, vi as usize))
    } else {
        Err(OutOfGrid { u: ui, v: vi })
    }
}

fn saturate(x: f64) -> i64 {
    if x.is_nan() {
        i64::MIN
    } else {
        x.clamp(i64::MIN as f64, i64::MAX as f64) as i64
    }
}

/// Single-channel occupancy map, row-major (`cells[v * width + u]`).
#[derive(Debug, Clone, PartialEq)]
pub struct BevMap {
    pub grid: GridSpec,
    cells: Vec<f32>,
    pub timestamp: f64,
}

impl BevMap {
    pub fn empty(grid: GridSpec, timestamp: f64) -> Self {
        Self {
            grid,
            cells: vec![0.0; grid.cell_count()],
            timestamp,
        }
    }

    pub fn from_cells(grid: GridSpec, cells: Vec<f32>, timestamp: f64) -> Result<Self> {
        grid.validate()?;
        if cells.len() != grid.cell_count() {
            return Err(Error::ShapeMismatch("cell count does not match grid"));
        }
        if cells.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidState("occupancy outside [0, 1]"));
        }
        Ok(Self { grid, cells, timestamp })
    }

    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.cells[v * self.grid.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, value: f32) {
        let w = self.grid.width;
        self.cells[v * w + u] = value.clamp(0.0, 1.0);
    }

    pub fn cells(&self) -> &[f32] {
        &self.cells
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c > 0.0).count()
    }

    /// Occupancy scaled to 0..=255.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.cells.iter().map(|&c| libm::roundf(c * 255.0) as u8).collect()
    }

    pub fn from_gray8(grid: GridSpec, bytes: &[u8], timestamp: f64) -> Result<Self> {
        Self::from_cells(grid, bytes.iter().map(|&b| b as f32 / 255.0).collect(), timestamp)
    }

    /// Cells with value above one half.
    pub fn to_mask(&self) -> BinaryMask {
        let bits = self.cells.iter().map(|&c| c > 0.5).collect();
        BinaryMask::new(self.grid.width, self.grid.height, bits).expect("cell count matches grid")
    }

    /// Fill every cell whose centre satisfies `inside`, scanning only the
    /// square of half-size `radius` metres around `center`.
    fn fill_region(&mut self, center: Vec2, radius: f64, inside: impl Fn(Vec2) -> bool) {
        let g = self.grid;
        let lo_u = libm::floor((center.x - radius) / g.scale) as i64 + g.anchor_u as i64;
        let hi_u = libm::ceil((center.x + radius) / g.scale) as i64 + g.anchor_u as i64;
        let lo_v = libm::floor((center.y - radius) / g.scale) as i64 + g.anchor_v as i64;
        let hi_v = libm::ceil((center.y + radius) / g.scale) as i64 + g.anchor_v as i64;
        let clip = |lo: i64, hi: i64, n: usize| (lo.max(0), hi.min(n as i64 - 1));
        let (lo_u, hi_u) = clip(lo_u, hi_u, g.width);
        let (lo_v, hi_v) = clip(lo_v, hi_v, g.height);
        for v in lo_v..=hi_v {
            for u in lo_u..=hi_u {
                if inside(pixel_to_metric(u, v, &g) - center) {
                    self.set(u as usize, v as usize, 1.0);
                }
            }
        }
    }
}

/// True when ego-relative offset `d` from a vehicle centre lies in its
/// `FOOTPRINT_LENGTH x FOOTPRINT_WIDTH` rectangle rotated by `yaw`.
pub fn in_footprint(d: Vec2, yaw: f64) -> bool {
    let heading = Vec2::new(libm::cos(yaw), libm::sin(yaw));
    d.dot(heading).abs() <= FOOTPRINT_LENGTH / 2.0 && d.dot(heading.lateral()).abs() <= FOOTPRINT_WIDTH / 2.0
}

/// Render agent footprints and the optional hazard disc around `ego`.
///
/// Agents are positioned relative to the ego, which sits at the anchor.
/// Anything falling outside the grid is clipped.
pub fn rasterize(
    agents: &[&VehicleState],
    hazard: Option<Vec2>,
    ego: &VehicleState,
    grid: &GridSpec,
    timestamp: f64,
) -> Result<BevMap> {
    grid.validate()?;
    let mut map = BevMap::empty(*grid, timestamp);
    let origin = ego.position();
    let reach = libm::sqrt(
        (FOOTPRINT_LENGTH / 2.0) * (FOOTPRINT_LENGTH / 2.0) + (FOOTPRINT_WIDTH / 2.0) * (FOOTPRINT_WIDTH / 2.0),
    );
    let draw = |map: &mut BevMap, s: &VehicleState| {
        if !s.is_finite() {
            return;
        }
        let yaw = s.yaw;
        map.fill_region(s.position() - origin, reach, |d| in_footprint(d, yaw));
    };
    draw(&mut map, ego);
    for s in agents {
        if s.agent_id != ego.agent_id {
            draw(&mut map, s);
        }
    }
    if let Some(h) = hazard.filter(|h| h.is_finite()) {
        map.fill_region(h - origin, HAZARD_RADIUS, |d| {
            d.norm_sq() <= HAZARD_RADIUS * HAZARD_RADIUS
        });
    }
    Ok(map)
}

/// Motion masks of a planned path: one frame per waypoint with the ego
/// footprint at that waypoint, rendered relative to `origin`. The heading
/// follows the local path tangent, falling back to `heading` where the path
/// does not move.
pub fn motion_masks(path: &[Vec2], origin: Vec2, heading: f64, grid: &GridSpec) -> Result<MotionMaskSeq> {
    grid.validate()?;
    if path.is_empty() {
        return Err(Error::Empty("path"));
    }
    let n = path.len();
    let reach = libm::sqrt(
        (FOOTPRINT_LENGTH / 2.0) * (FOOTPRINT_LENGTH / 2.0) + (FOOTPRINT_WIDTH / 2.0) * (FOOTPRINT_WIDTH / 2.0),
    );
    let frames = (0..n)
        .map(|j| {
            let tangent = path[(j + 1).min(n - 1)] - path[j.saturating_sub(1)];
            let yaw = if tangent.norm_sq() > 0.0 {
                libm::atan2(tangent.y, tangent.x)
            } else {
                heading
            };
            let mut map = BevMap::empty(*grid, 0.0);
            map.fill_region(path[j] - origin, reach, |d| in_footprint(d, yaw));
            map.to_mask()
        })
        .collect();
    MotionMaskSeq::new(frames)
}

/// Metric ruler drawn over a raster.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverlaySpec {
    /// Tick spacing in metres.
    pub tick_spacing: f64,
    pub stroke_value: f32,
    /// Ruler half-extent from the anchor along u, pixels. `None` spans the grid.
    pub stroke_len_x: Option<usize>,
    /// Ruler half-extent from the anchor along v, pixels. `None` spans the grid.
    pub stroke_len_y: Option<usize>,
    /// Half-length of each tick mark, perpendicular to its ruler.
    pub tick_half_len: usize,
}

impl Default for OverlaySpec {
    fn default() -> Self {
        Self {
            tick_spacing: 5.0,
            stroke_value: 1.0,
            stroke_len_x: None,
            stroke_len_y: None,
            tick_half_len: 1,
        }
    }
}

impl OverlaySpec {
    /// Tick pitch in pixels, at least one.
    pub fn pitch(&self, grid: &GridSpec) -> usize {
        let p = libm::round(self.tick_spacing / grid.scale);
        if p >= 1.0 {
            p as usize
        } else {
            1
        }
    }

    /// Whether pixel `(u, v)` belongs to the stroked set.
    ///
    /// Ticks sit on the anchor row (at columns `u0 + n * pitch`) and on the
    /// anchor column (at rows `v0 + n * pitch`), each extending
    /// `tick_half_len` pixels across its ruler.
    pub fn contains(&self, u: usize, v: usize, grid: &GridSpec) -> bool {
        let p = self.pitch(grid) as i64;
        let (du, dv) = (u as i64 - grid.anchor_u as i64, v as i64 - grid.anchor_v as i64);
        let half = self.tick_half_len as i64;
        let lx = self.stroke_len_x.map_or(i64::MAX, |l| l as i64);
        let ly = self.stroke_len_y.map_or(i64::MAX, |l| l as i64);
        let on_x_ruler = dv.abs() <= half && du.abs() <= lx && du.rem_euclid(p) == 0;
        let on_y_ruler = du.abs() <= half && dv.abs() <= ly && dv.rem_euclid(p) == 0;
        on_x_ruler || on_y_ruler
    }
}

/// Write the stroke value on the stroked set; every other pixel is copied.
pub fn overlay_axes(bev: &BevMap, spec: &OverlaySpec) -> BevMap {
    let mut out = bev.clone();
    let g = bev.grid;
    let value = spec.stroke_value.clamp(0.0, 1.0);
    for v in 0..g.height {
        for u in 0..g.width {
            if spec.contains(u, v, &g) {
                out.set(u, v, value);
            }
        }
    }
    out
}

/// Max-pool over `factor x factor` windows; scale grows and the anchor
/// shrinks by the same factor.
pub fn pool(bev: &BevMap, factor: usize) -> Result<BevMap> {
    let g = bev.grid;
    if factor == 0 || !g.width.is_multiple_of(factor) || !g.height.is_multiple_of(factor) {
        return Err(Error::Config("pool factor must divide the grid dimensions"));
    }
    if factor == 1 {
        return Ok(bev.clone());
    }
    let grid = GridSpec {
        width: g.width / factor,
        height: g.height / factor,
        scale: g.scale * factor as f64,
        anchor_u: g.anchor_u / factor,
        anchor_v: g.anchor_v / factor,
    };
    let mut out = BevMap::empty(grid, bev.timestamp);
    for v in 0..grid.height {
        for u in 0..grid.width {
            let mut m = 0.0f32;
            for dv in 0..factor {
                for du in 0..factor {
                    m = m.max(bev.get(u * factor + du, v * factor + dv));
                }
            }
            out.set(u, v, m);
        }
    }
    Ok(out)
}
