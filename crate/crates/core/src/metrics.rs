//! Evaluation metrics: VPQ, IoU/mIOU, minADE, minFDE, frame-wise collision
//! rate, collision rate reduction and minimum clearance distance.
//!
//! VPQ here is the temporal mean IoU of occupancy masks, not the
//! instance-level panoptic quality: there is no instance matching.

use alloc::vec::Vec;

use crate::scenario::Trajectory;
use crate::{Error, Result};

/// Collision threshold on ego-to-agent distance, metres.
pub const COLLISION_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::ShapeMismatch("mask bit count does not match shape"));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: alloc::vec![false; width * height],
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        self.bits[v * self.width + u] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Cell-wise OR.
    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.same_shape(other)?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect(),
        })
    }

    fn same_shape(&self, other: &BinaryMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch("mask shapes differ"));
        }
        Ok(())
    }
}

/// Sequence of equally shaped masks, one per timestep.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MotionMaskSeq {
    frames: Vec<BinaryMask>,
}

impl MotionMaskSeq {
    pub fn new(frames: Vec<BinaryMask>) -> Result<Self> {
        if let Some(first) = frames.first() {
            for f in &frames[1..] {
                first.same_shape(f)?;
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[BinaryMask] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Union over time of all frames, `None` for an empty sequence.
    pub fn footprint(&self) -> Option<BinaryMask> {
        let mut it = self.frames.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, f| acc.union(f).expect("uniform shape")))
    }
}

/// Intersection over union; two empty masks agree perfectly (IoU 1).
pub fn iou(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    pred.same_shape(gt)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &b) in pred.bits.iter().zip(&gt.bits) {
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Temporal mean of per-frame IoU.
pub fn vpq(pred: &MotionMaskSeq, gt: &MotionMaskSeq) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            expected: gt.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("motion mask sequence"));
    }
    let mut sum = 0.0;
    for (p, g) in pred.frames.iter().zip(&gt.frames) {
        sum += iou(p, g)?;
    }
    Ok(sum / pred.len() as f64)
}

/// Mean IoU over (predicted, ground-truth) region pairs, one per scenario.
pub fn miou(pairs: &[(BinaryMask, BinaryMask)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("region pairs"));
    }
    let mut sum = 0.0;
    for (p, g) in pairs {
        sum += iou(p, g)?;
    }
    Ok(sum / pairs.len() as f64)
}

fn check_aligned(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: b.len(),
            got: a.len(),
        });
    }
    if !a.is_time_aligned(b) {
        return Err(Error::TimeMisaligned);
    }
    Ok(())
}

/// Average displacement error of one candidate.
pub fn ade(candidate: &Trajectory, gt: &Trajectory) -> Result<f64> {
    check_aligned(candidate, gt)?;
    if gt.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    let sum: f64 = candidate
        .points()
        .iter()
        .zip(gt.points())
        .map(|(c, g)| c.pos.distance(g.pos))
        .sum();
    Ok(sum / gt.len() as f64)
}

/// Final displacement error of one candidate.
pub fn fde(candidate: &Trajectory, gt: &Trajectory) -> Result<f64> {
    check_aligned(candidate, gt)?;
    match (candidate.points().last(), gt.points().last()) {
        (Some(c), Some(g)) => Ok(c.pos.distance(g.pos)),
        _ => Err(Error::Empty("trajectory")),
    }
}

fn min_over(candidates: &[Trajectory], f: impl Fn(&Trajectory) -> Result<f64>) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate set"));
    }
    let mut best = f64::INFINITY;
    for c in candidates {
        best = best.min(f(c)?);
    }
    Ok(best)
}

pub fn min_ade(candidates: &[Trajectory], gt: &Trajectory) -> Result<f64> {
    min_over(candidates, |c| ade(c, gt))
}

pub fn min_fde(candidates: &[Trajectory], gt: &Trajectory) -> Result<f64> {
    min_over(candidates, |c| fde(c, gt))
}

/// Per-timestep distance from the ego to its nearest surrounding agent.
/// Empty when there are no agents.
pub fn min_distance_per_step(ego: &Trajectory, surroundings: &[Trajectory]) -> Result<Vec<f64>> {
    for s in surroundings {
        check_aligned(s, ego)?;
    }
    if surroundings.is_empty() {
        return Ok(Vec::new());
    }
    Ok(ego
        .points()
        .iter()
        .enumerate()
        .map(|(t, e)| {
            surroundings
                .iter()
                .map(|s| e.pos.distance(s.points()[t].pos))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CollisionRecord {
    pub threshold: f64,
    pub flags: Vec<bool>,
    pub min_distances: Vec<f64>,
}

impl CollisionRecord {
    pub fn any(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }
}

/// Frame-wise collision flags (`d_min < threshold`, strict) and their mean.
/// Without surrounding agents the rate is 0 and the record empty.
pub fn collision_rate(ego: &Trajectory, surroundings: &[Trajectory], threshold: f64) -> Result<(f64, CollisionRecord)> {
    let min_distances = min_distance_per_step(ego, surroundings)?;
    let flags: Vec<bool> = min_distances.iter().map(|&d| d < threshold).collect();
    let rate = if flags.is_empty() {
        0.0
    } else {
        flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
    };
    Ok((
        rate,
        CollisionRecord {
            threshold,
            flags,
            min_distances,
        },
    ))
}

/// Relative reduction of the collision rate against a baseline.
pub fn crr(c_baseline: f64, c_react: f64) -> Result<f64> {
    if !(c_baseline > 0.0) || !c_react.is_finite() {
        return Err(Error::UndefinedBaseline);
    }
    Ok((c_baseline - c_react) / c_baseline)
}

/// Minimum clearance distance: smallest ego-to-agent distance over the
/// horizon.
pub fn mcd(ego: &Trajectory, surroundings: &[Trajectory]) -> Result<f64> {
    if surroundings.is_empty() {
        return Err(Error::Empty("surrounding agents"));
    }
    if ego.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    Ok(min_distance_per_step(ego, surroundings)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::scenario::AgentId;
    use alloc::vec;

    fn traj(pts: &[(f64, f64)]) -> Trajectory {
        Trajectory::from_positions(AgentId::from("t"), 0.0, 0.5, pts.iter().map(|&p| Vec2::from(p))).unwrap()
    }

    fn mask(w: usize, on: &[usize]) -> BinaryMask {
        let mut bits = vec![false; w * w];
        for &i in on {
            bits[i] = true;
        }
        BinaryMask::new(w, w, bits).unwrap()
    }

    #[test]
    fn vpq_two_frames() {
        // IoU 1/2 and 3/4
        let pred = MotionMaskSeq::new(vec![mask(2, &[0]), mask(2, &[0, 1, 2])]).unwrap();
        let gt = MotionMaskSeq::new(vec![mask(2, &[0, 1]), mask(2, &[0, 1, 2, 3])]).unwrap();
        assert_eq!(vpq(&pred, &gt).unwrap(), 0.625);
        assert_eq!(vpq(&gt, &gt).unwrap(), 1.0);
    }

    #[test]
    fn vpq_errors() {
        let a = MotionMaskSeq::new(vec![mask(2, &[0])]).unwrap();
        let b = MotionMaskSeq::new(vec![mask(3, &[0])]).unwrap();
        assert!(vpq(&a, &b).is_err());
        let c = MotionMaskSeq::new(vec![mask(2, &[0]), mask(2, &[])]).unwrap();
        assert!(vpq(&a, &c).is_err());
        assert!(MotionMaskSeq::new(vec![mask(2, &[]), mask(3, &[])]).is_err());
        let e = MotionMaskSeq::new(vec![]).unwrap();
        assert!(vpq(&e, &e).is_err());
    }

    #[test]
    fn empty_masks_agree() {
        assert_eq!(iou(&mask(3, &[]), &mask(3, &[])).unwrap(), 1.0);
        assert_eq!(iou(&mask(3, &[1]), &mask(3, &[])).unwrap(), 0.0);
    }

    #[test]
    fn miou_mean() {
        // 3/5 and 4/5
        let pairs = vec![
            (mask(3, &[0, 1, 2]), mask(3, &[0, 1, 2, 3, 4])),
            (mask(3, &[0, 1, 2, 3]), mask(3, &[0, 1, 2, 3, 4])),
        ];
        assert!((miou(&pairs).unwrap() - 0.7).abs() < 1e-15);
        let same = vec![(mask(2, &[1]), mask(2, &[1])); 3];
        assert_eq!(miou(&same).unwrap(), 1.0);
        assert!(miou(&[]).is_err());
    }

    #[test]
    fn min_ade_examples() {
        let gt = traj(&[(0.0, 0.0), (1.0, 0.0)]);
        let c1 = traj(&[(0.0, 1.0), (1.0, 1.0)]);
        let c2 = traj(&[(0.0, 0.5), (1.0, 0.5)]);
        assert_eq!(min_ade(&[c1.clone(), c2.clone()], &gt).unwrap(), 0.5);
        assert_eq!(min_ade(std::slice::from_ref(&gt), &gt).unwrap(), 0.0);
        assert!(min_ade(&[], &gt).is_err());
        let short = traj(&[(0.0, 0.0)]);
        assert!(min_ade(&[short], &gt).is_err());
        let shifted = Trajectory::from_positions(AgentId::from("s"), 0.1, 0.5, c1.positions()).unwrap();
        assert_eq!(min_ade(&[shifted], &gt), Err(Error::TimeMisaligned));
    }

    #[test]
    fn min_fde_examples() {
        let gt = traj(&[(0.0, 0.0), (1.0, 0.0)]);
        let c1 = traj(&[(5.0, 5.0), (2.0, 0.0)]);
        let c2 = traj(&[(5.0, 5.0), (1.0, 0.5)]);
        assert_eq!(min_fde(&[c1, c2], &gt).unwrap(), 0.5);
        assert_eq!(min_fde(std::slice::from_ref(&gt), &gt).unwrap(), 0.0);
    }

    #[test]
    fn collision_threshold_is_strict() {
        let ego = traj(&[(0.0, 0.0), (0.0, 0.0)]);
        let other = traj(&[(4.9, 0.0), (5.1, 0.0)]);
        let (rate, rec) = collision_rate(&ego, &[other], 5.0).unwrap();
        assert_eq!(rec.flags, vec![true, false]);
        assert_eq!(rate, 0.5);
        let at = traj(&[(5.0, 0.0), (5.0, 0.0)]);
        assert_eq!(collision_rate(&ego, &[at], 5.0).unwrap().0, 0.0);
    }

    #[test]
    fn collision_far_and_empty() {
        let ego = traj(&[(0.0, 0.0), (1.0, 0.0)]);
        let far = traj(&[(100.0, 0.0), (100.0, 0.0)]);
        assert_eq!(collision_rate(&ego, &[far], 5.0).unwrap().0, 0.0);
        let (rate, rec) = collision_rate(&ego, &[], 5.0).unwrap();
        assert_eq!(rate, 0.0);
        assert!(rec.flags.is_empty() && rec.min_distances.is_empty());
    }

    #[test]
    fn crr_examples() {
        assert!((crr(1.0, 0.23).unwrap() - 0.77).abs() < 1e-12);
        assert_eq!(crr(0.4, 0.4).unwrap(), 0.0);
        assert_eq!(crr(0.4, 0.0).unwrap(), 1.0);
        assert_eq!(crr(0.0, 0.0), Err(Error::UndefinedBaseline));
    }

    #[test]
    fn mcd_examples() {
        let ego = traj(&[(0.0, 0.0), (0.0, 0.0)]);
        let a = traj(&[(5.0, 0.0), (1.0, 1.0)]);
        assert_eq!(mcd(&ego, &[a]).unwrap(), libm::sqrt(2.0));
        let e2 = traj(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let b = traj(&[(3.0, 4.0), (4.0, 4.0), (5.0, 4.0)]);
        assert_eq!(mcd(&e2, &[b]).unwrap(), 5.0);
        assert!(mcd(&e2, &[]).is_err());
    }

    #[test]
    fn footprint_is_union() {
        let s = MotionMaskSeq::new(vec![mask(2, &[0]), mask(2, &[3])]).unwrap();
        assert_eq!(s.footprint().unwrap(), mask(2, &[0, 3]));
        assert!(MotionMaskSeq::new(vec![]).unwrap().footprint().is_none());
    }
}
