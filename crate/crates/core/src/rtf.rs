//! Residual trajectory fusion: nominal waypoints plus planner residuals.

use alloc::vec::Vec;

use crate::geom::Vec2;
use crate::planner::ResidualSet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedPlan {
    pub waypoints: Vec<Vec2>,
    pub source_nominal: Vec<Vec2>,
    pub residuals_applied: ResidualSet,
}

/// `w_j + delta_j` for every waypoint. Lengths must match exactly.
pub fn apply_residuals(nominal: &[Vec2], deltas: &ResidualSet) -> Result<OptimizedPlan> {
    if nominal.len() != deltas.len() {
        return Err(Error::LengthMismatch {
            expected: nominal.len(),
            got: deltas.len(),
        });
    }
    let waypoints = nominal.iter().zip(deltas.deltas()).map(|(&g, &d)| g + d).collect();
    Ok(OptimizedPlan {
        waypoints,
        source_nominal: nominal.to_vec(),
        residuals_applied: deltas.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KinematicLimits {
    /// Maximum distance between consecutive waypoints, metres.
    pub max_step: f64,
}

/// Cap consecutive spacing at `max_step` by scaling each residual toward
/// zero (i.e. toward its nominal waypoint).
///
/// Waypoints are processed in order; waypoint `j` keeps the largest
/// fraction `lambda` of its residual such that its distance to the already
/// clamped waypoint `j - 1` does not exceed `max_step`. When even the
/// nominal waypoint is too far, the residual is dropped entirely.
pub fn clamp_kinematic(plan: &OptimizedPlan, limits: &KinematicLimits) -> Result<OptimizedPlan> {
    if !(limits.max_step > 0.0) {
        return Err(Error::Config("max_step must be positive"));
    }
    let nominal = &plan.source_nominal;
    let mut deltas: Vec<Vec2> = plan.residuals_applied.deltas().to_vec();
    let mut out: Vec<Vec2> = plan.waypoints.clone();
    for j in 1..out.len() {
        let prev = out[j - 1];
        if out[j].distance(prev) <= limits.max_step {
            continue;
        }
        let lambda = shrink_factor(nominal[j] - prev, deltas[j], limits.max_step);
        deltas[j] = deltas[j] * lambda;
        out[j] = nominal[j] + deltas[j];
    }
    let residuals = ResidualSet::new(deltas).with_reasoning(plan.residuals_applied.reasoning.clone());
    Ok(OptimizedPlan {
        waypoints: out,
        source_nominal: nominal.clone(),
        residuals_applied: residuals,
    })
}

/// Largest `lambda` in [0, 1] with `|a + lambda * b| <= m`, or 0 if none.
fn shrink_factor(a: Vec2, b: Vec2, m: f64) -> f64 {
    let bb = b.norm_sq();
    if bb == 0.0 {
        return 0.0;
    }
    let ab = a.dot(b);
    let disc = ab * ab - bb * (a.norm_sq() - m * m);
    if disc < 0.0 {
        return 0.0;
    }
    let hi = (-ab + libm::sqrt(disc)) / bb;
    let lo = (-ab - libm::sqrt(disc)) / bb;
    if hi < 0.0 || lo > 1.0 {
        // the feasible interval misses [0, 1]
        return 0.0;
    }
    hi.clamp(0.0, 1.0)
}
