//! Batch evaluation of run results: per-run metrics, then means overall,
//! per weather x time-of-day bucket and per location.
//!
//! A run collides when its plan comes within [`COLLISION_THRESHOLD`] of an
//! actual obstacle at any waypoint; the collision rate of a group is the
//! fraction of colliding runs. Frame-wise rates (the mean fraction of
//! waypoints in collision) and the reduction computed from them are
//! reported alongside. The baseline is the nominal plan of the same run
//! (what the null backend returns), which gives the collision rate reduction
//! without a second batch.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use coplan_core::metrics::{collision_rate, crr, iou, mcd, min_ade, min_fde, vpq, COLLISION_THRESHOLD};
use coplan_core::scenario::Trajectory;
use serde::{Deserialize, Serialize};

use crate::pipeline::RunResult;
use crate::{Error, Result};

/// Short evaluation horizon, seconds.
pub const SHORT_HORIZON: f64 = 1.0;
/// Full evaluation horizon, seconds.
pub const LONG_HORIZON: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scenario_id: String,
    pub weather: String,
    pub time_of_day: String,
    pub location: String,
    pub vpq: f64,
    pub iou: f64,
    pub min_ade_1s: f64,
    pub min_ade_2s: f64,
    pub min_fde: f64,
    pub collided: bool,
    pub baseline_collided: bool,
    /// Fraction of waypoints in collision.
    pub collision_frame_rate: f64,
    pub baseline_collision_frame_rate: f64,
    /// `None` without obstacles.
    pub mcd: Option<f64>,
    pub fallback: bool,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub vpq: f64,
    pub miou: f64,
    pub min_ade_1s: f64,
    pub min_ade_2s: f64,
    pub min_fde: f64,
    pub collision_rate: f64,
    pub baseline_collision_rate: f64,
    /// `None` when the baseline never collides.
    pub crr: Option<f64>,
    /// Mean fraction of waypoints in collision, and the reduction computed
    /// from these frame-wise rates.
    pub frame_collision_rate: f64,
    pub baseline_frame_collision_rate: f64,
    pub frame_crr: Option<f64>,
    /// Mean over runs with obstacles.
    pub mcd: Option<f64>,
    pub fallback_rate: f64,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub overall: Summary,
    /// Keyed `weather/time_of_day`.
    pub by_condition: BTreeMap<String, Summary>,
    pub by_location: BTreeMap<String, Summary>,
    pub runs: Vec<RunMetrics>,
    /// Runs without ground truth or masks.
    pub skipped: usize,
}

fn horizon(t: &Trajectory, t_max: f64) -> Trajectory {
    t.truncated(t_max + 1e-9)
}

/// Metrics of one run; `None` when it lacks ground truth or masks.
pub fn run_metrics(r: &RunResult) -> Result<Option<RunMetrics>> {
    let (Some(gt), Some(pred_masks), Some(gt_masks)) = (&r.ground_truth, &r.masks_pred, &r.masks_gt) else {
        return Ok(None);
    };
    let (pred_masks, gt_masks) = (pred_masks.unpack()?, gt_masks.unpack()?);
    let footprint = |m: &coplan_core::metrics::MotionMaskSeq| {
        m.footprint().ok_or_else(|| Error::Format("empty mask sequence".into()))
    };
    let plan = &r.optimized;
    let (frame_rate, record) = collision_rate(plan, &r.obstacles, COLLISION_THRESHOLD)?;
    let (baseline_frame_rate, baseline) = collision_rate(&r.nominal, &r.obstacles, COLLISION_THRESHOLD)?;
    Ok(Some(RunMetrics {
        scenario_id: r.scenario_id.clone(),
        weather: r.meta.weather.clone(),
        time_of_day: r.meta.time_of_day.clone(),
        location: r.meta.location.clone(),
        vpq: vpq(&pred_masks, &gt_masks)?,
        iou: iou(&footprint(&pred_masks)?, &footprint(&gt_masks)?)?,
        min_ade_1s: min_ade(&[horizon(plan, SHORT_HORIZON)], &horizon(gt, SHORT_HORIZON))?,
        min_ade_2s: min_ade(&[horizon(plan, LONG_HORIZON)], &horizon(gt, LONG_HORIZON))?,
        min_fde: min_fde(&[horizon(plan, LONG_HORIZON)], &horizon(gt, LONG_HORIZON))?,
        collided: record.any(),
        baseline_collided: baseline.any(),
        collision_frame_rate: frame_rate,
        baseline_collision_frame_rate: baseline_frame_rate,
        mcd: if r.obstacles.is_empty() {
            None
        } else {
            Some(mcd(plan, &r.obstacles)?)
        },
        fallback: r.fallback.is_some(),
        latency_ms: r.latency.total_ms,
    }))
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn rate(runs: &[&RunMetrics], f: impl Fn(&RunMetrics) -> bool) -> f64 {
    runs.iter().filter(|r| f(r)).count() as f64 / runs.len() as f64
}

pub fn summarize(runs: &[&RunMetrics]) -> Result<Summary> {
    if runs.is_empty() {
        return Err(Error::Format("nothing to summarize".into()));
    }
    let m = |f: fn(&RunMetrics) -> f64| mean(runs.iter().map(|r| f(r))).expect("non-empty");
    let collision_rate = rate(runs, |r| r.collided);
    let baseline_collision_rate = rate(runs, |r| r.baseline_collided);
    let frame_collision_rate = m(|r| r.collision_frame_rate);
    let baseline_frame_collision_rate = m(|r| r.baseline_collision_frame_rate);
    Ok(Summary {
        runs: runs.len(),
        vpq: m(|r| r.vpq),
        miou: m(|r| r.iou),
        min_ade_1s: m(|r| r.min_ade_1s),
        min_ade_2s: m(|r| r.min_ade_2s),
        min_fde: m(|r| r.min_fde),
        collision_rate,
        baseline_collision_rate,
        crr: crr(baseline_collision_rate, collision_rate).ok(),
        frame_collision_rate,
        baseline_frame_collision_rate,
        frame_crr: crr(baseline_frame_collision_rate, frame_collision_rate).ok(),
        mcd: mean(runs.iter().filter_map(|r| r.mcd)),
        fallback_rate: rate(runs, |r| r.fallback),
        latency_ms: m(|r| r.latency_ms),
    })
}

fn buckets<'a>(runs: &'a [RunMetrics], key: impl Fn(&RunMetrics) -> String) -> Result<BTreeMap<String, Summary>> {
    let mut groups: BTreeMap<String, Vec<&'a RunMetrics>> = BTreeMap::new();
    for r in runs {
        groups.entry(key(r)).or_default().push(r);
    }
    groups.into_iter().map(|(k, v)| Ok((k, summarize(&v)?))).collect()
}

/// Aggregate a batch. Runs are ordered by scenario id first, so the report
/// does not depend on input order.
pub fn evaluate(results: &[RunResult]) -> Result<Report> {
    if results.is_empty() {
        return Err(Error::Format("no runs to evaluate".into()));
    }
    let mut runs = Vec::new();
    let mut skipped = 0;
    for r in results {
        match run_metrics(r)? {
            Some(m) => runs.push(m),
            None => {
                log::warn!("{}: no ground truth, skipped", r.scenario_id);
                skipped += 1;
            }
        }
    }
    runs.sort_by(|a, b| a.scenario_id.cmp(&b.scenario_id));
    let all: Vec<&RunMetrics> = runs.iter().collect();
    Ok(Report {
        overall: summarize(&all)?,
        by_condition: buckets(&runs, |r| format!("{}/{}", r.weather, r.time_of_day))?,
        by_location: buckets(&runs, |r| r.location.clone())?,
        runs,
        skipped,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.6}"))
}

/// One CSV row per group: `overall`, `condition:<weather/time>`,
/// `location:<name>`.
pub fn report_csv(report: &Report) -> String {
    let mut out = String::from(
        "group,runs,vpq,miou,min_ade_1s,min_ade_2s,min_fde,collision_rate,baseline_collision_rate,crr,frame_collision_rate,baseline_frame_collision_rate,frame_crr,mcd,fallback_rate,latency_ms\n",
    );
    let rows = std::iter::once(("overall".to_string(), &report.overall))
        .chain(report.by_condition.iter().map(|(k, s)| (format!("condition:{k}"), s)))
        .chain(report.by_location.iter().map(|(k, s)| (format!("location:{k}"), s)));
    for (group, s) in rows {
        let _ = writeln!(
            out,
            "{group},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6},{:.6},{},{},{:.6},{:.3}",
            s.runs,
            s.vpq,
            s.miou,
            s.min_ade_1s,
            s.min_ade_2s,
            s.min_fde,
            s.collision_rate,
            s.baseline_collision_rate,
            opt(s.crr),
            s.frame_collision_rate,
            s.baseline_frame_collision_rate,
            opt(s.frame_crr),
            opt(s.mcd),
            s.fallback_rate,
            s.latency_ms
        );
    }
    out
}
