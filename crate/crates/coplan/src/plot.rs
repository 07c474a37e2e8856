//! Static PGM plots of a run: the pooled BEV dimmed as background, the
//! nominal and optimized plans as polylines, and a cross on the hazard.

use std::path::Path;

use coplan_core::bev::GridSpec;
use coplan_core::Vec2;

use crate::pgm::GrayImage;
use crate::pipeline::RunResult;
use crate::{Error, Result};

pub const BACKGROUND_SCALE: u8 = 2;
pub const NOMINAL_VALUE: u8 = 160;
pub const OPTIMIZED_VALUE: u8 = 255;
pub const HAZARD_VALUE: u8 = 220;

/// Continuous pixel coordinates of an ego-relative point.
fn to_pixel(p: Vec2, g: &GridSpec) -> (f64, f64) {
    (p.x / g.scale + g.anchor_u as f64, p.y / g.scale + g.anchor_v as f64)
}

/// Sample a segment densely enough to touch every pixel it crosses.
fn draw_segment(img: &mut GrayImage, a: (f64, f64), b: (f64, f64), value: u8) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()) * 2.0).ceil().max(1.0) as usize;
    if steps > 100_000 {
        return;
    }
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let (u, v) = (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
        img.set(u.round() as i64, v.round() as i64, value);
    }
}

fn draw_polyline(img: &mut GrayImage, pts: &[Vec2], origin: Vec2, g: &GridSpec, value: u8) {
    let px: Vec<(f64, f64)> = pts.iter().map(|&p| to_pixel(p - origin, g)).collect();
    match px.as_slice() {
        [] => {}
        [only] => draw_segment(img, *only, *only, value),
        _ => {
            for w in px.windows(2) {
                draw_segment(img, w[0], w[1], value);
            }
        }
    }
}

/// Render a run. Needs the BEV recorded by the pipeline.
pub fn render_plot(r: &RunResult) -> Result<GrayImage> {
    let (Some(grid), Some(bev)) = (r.bev_grid, &r.bev_now) else {
        return Err(Error::Format("run has no BEV to plot on".into()));
    };
    let mut img = GrayImage::from_base64_pgm(bev)?;
    if img.width != grid.width || img.height != grid.height {
        return Err(Error::Format("BEV image does not match its grid".into()));
    }
    for p in &mut img.pixels {
        *p /= BACKGROUND_SCALE;
    }
    draw_polyline(&mut img, &r.nominal.positions(), r.origin, &grid, NOMINAL_VALUE);
    draw_polyline(&mut img, &r.optimized.positions(), r.origin, &grid, OPTIMIZED_VALUE);
    if let Some(h) = r.hazard {
        let (u, v) = to_pixel(h - r.origin, &grid);
        let (u, v) = (u.round() as i64, v.round() as i64);
        for d in -2..=2 {
            img.set(u + d, v + d, HAZARD_VALUE);
            img.set(u + d, v - d, HAZARD_VALUE);
        }
    }
    Ok(img)
}

pub fn emit_plot(r: &RunResult, path: &Path) -> Result<()> {
    let img = render_plot(r)?;
    std::fs::write(path, img.encode_pgm()).map_err(|e| Error::io(path, e))
}
