//! Wall-clock latency of repeated pipeline runs on one scenario.

use std::time::Instant;

use coplan_core::planner::PlannerBackend;
use coplan_core::scenario::Scenario;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::pipeline::{run_pipeline, StageLatency};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub reps: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub p90_ms: f64,
    /// Per-stage medians.
    pub stages: StageLatency,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Run the full pipeline `reps` times (after one warm-up run) and report
/// the distribution of end-to-end times.
pub fn bench(
    scenario: &Scenario,
    backend: &dyn PlannerBackend,
    cfg: &PipelineConfig,
    reps: usize,
) -> Result<BenchReport> {
    if reps == 0 {
        return Err(Error::Format("reps must be positive".into()));
    }
    let warm = run_pipeline(scenario, backend, cfg);
    if let Some(e) = warm.errors.first() {
        log::warn!("{} stage reported: {}", e.stage, e.message);
    }
    let mut totals = Vec::with_capacity(reps);
    let mut stages: [Vec<f64>; 5] = Default::default();
    for _ in 0..reps {
        let t = Instant::now();
        let r = run_pipeline(scenario, backend, cfg);
        totals.push(t.elapsed().as_secs_f64() * 1e3);
        let l = r.latency;
        for (acc, v) in stages
            .iter_mut()
            .zip([l.structuring_ms, l.bev_ms, l.alignment_ms, l.planner_ms, l.rtf_ms])
        {
            acc.push(v);
        }
    }
    let mean_ms = totals.iter().sum::<f64>() / reps as f64;
    let median_ms = median(&mut totals);
    let [mut s0, mut s1, mut s2, mut s3, mut s4] = stages;
    Ok(BenchReport {
        reps,
        median_ms,
        mean_ms,
        min_ms: totals[0],
        max_ms: totals[reps - 1],
        p90_ms: percentile(&totals, 0.9),
        stages: StageLatency {
            structuring_ms: median(&mut s0),
            bev_ms: median(&mut s1),
            alignment_ms: median(&mut s2),
            planner_ms: median(&mut s3),
            rtf_ms: median(&mut s4),
            total_ms: median_ms,
        },
    })
}
