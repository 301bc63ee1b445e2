//! Oriented 3D boxes, IoU, class-aware NMS and average precision.
//!
//! Boxes rotate about the z axis. Overlap is the bird's-eye-view polygon
//! intersection (Sutherland-Hodgman clipping of one rectangle by the other)
//! times the overlap of the z intervals; two boxes with zero yaw take the
//! axis-aligned closed form.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::math::Vec3;

/// Oriented box: center, full extents and yaw about z in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    center: Vec3,
    size: Vec3,
    yaw: f64,
}

/// Wraps an angle to `(-pi, pi]`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = libm::fmod(yaw + PI, two_pi);
    if r < 0.0 {
        r += two_pi;
    }
    let y = r - PI;
    if y <= -PI {
        PI
    } else {
        y
    }
}

impl Box3D {
    pub fn new(center: Vec3, size: Vec3, yaw: f64) -> Result<Self> {
        if !center.is_finite() || !yaw.is_finite() {
            return Err(Error::DegenerateBox);
        }
        if !(size.x > 0.0 && size.y > 0.0 && size.z > 0.0) || !size.is_finite() {
            return Err(Error::DegenerateBox);
        }
        Ok(Self { center, size, yaw: normalize_yaw(yaw) })
    }

    pub fn axis_aligned(center: Vec3, size: Vec3) -> Result<Self> {
        Self::new(center, size, 0.0)
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn size(&self) -> Vec3 {
        self.size
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn volume(&self) -> f64 {
        self.size.x * self.size.y * self.size.z
    }

    /// Whether `p` lies inside the closed box.
    pub fn contains(&self, p: Vec3) -> bool {
        let d = p - self.center;
        let (s, c) = (libm::sin(self.yaw), libm::cos(self.yaw));
        let lx = c * d.x + s * d.y;
        let ly = -s * d.x + c * d.y;
        lx.abs() <= 0.5 * self.size.x && ly.abs() <= 0.5 * self.size.y && d.z.abs() <= 0.5 * self.size.z
    }

    pub(crate) fn params<S: Scalar>(&self) -> BoxParams<S> {
        BoxParams {
            center: self.center.to_array().map(S::constant),
            size: self.size.to_array().map(S::constant),
            yaw: S::constant(self.yaw),
        }
    }
}

/// Box parameters over a generic scalar, for differentiation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BoxParams<S> {
    pub center: [S; 3],
    pub size: [S; 3],
    pub yaw: S,
}

type Pt<S> = [S; 2];

#[inline]
fn cross<S: Scalar>(a: Pt<S>, b: Pt<S>) -> S {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn sub<S: Scalar>(a: Pt<S>, b: Pt<S>) -> Pt<S> {
    [a[0] - b[0], a[1] - b[1]]
}

/// BEV corners in counter-clockwise order.
fn corners<S: Scalar>(b: &BoxParams<S>) -> [Pt<S>; 4] {
    let half = S::constant(0.5);
    let hx = b.size[0] * half;
    let hy = b.size[1] * half;
    let (s, c) = (b.yaw.sin(), b.yaw.cos());
    let local = [[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]];
    local.map(|[x, y]| [b.center[0] + c * x - s * y, b.center[1] + s * x + c * y])
}

/// Clips a convex polygon by the half-planes of a counter-clockwise convex
/// polygon.
fn clip<S: Scalar>(subject: &[Pt<S>], clipper: &[Pt<S>]) -> Vec<Pt<S>> {
    let mut poly: Vec<Pt<S>> = subject.to_vec();
    for i in 0..clipper.len() {
        if poly.is_empty() {
            break;
        }
        let e0 = clipper[i];
        let e1 = clipper[(i + 1) % clipper.len()];
        let edge = sub(e1, e0);
        let side = |p: Pt<S>| cross(edge, sub(p, e0));
        let input = core::mem::take(&mut poly);
        for k in 0..input.len() {
            let cur = input[k];
            let prev = input[(k + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            let cur_in = sc.re() >= 0.0;
            let prev_in = sp.re() >= 0.0;
            if cur_in != prev_in {
                // sides have opposite signs, so the denominator is non-zero
                let t = sp / (sp - sc);
                let d = sub(cur, prev);
                poly.push([prev[0] + d[0] * t, prev[1] + d[1] * t]);
            }
            if cur_in {
                poly.push(cur);
            }
        }
    }
    poly
}

fn polygon_area<S: Scalar>(poly: &[Pt<S>]) -> S {
    let mut acc = S::constant(0.0);
    for i in 0..poly.len() {
        acc = acc + cross(poly[i], poly[(i + 1) % poly.len()]);
    }
    acc * S::constant(0.5)
}

fn interval_overlap<S: Scalar>(c0: S, s0: S, c1: S, s1: S) -> S {
    let half = S::constant(0.5);
    let hi = (c0 + s0 * half).min_by_re(c1 + s1 * half);
    let lo = (c0 - s0 * half).max_by_re(c1 - s1 * half);
    (hi - lo).max_by_re(S::constant(0.0))
}

pub(crate) fn bev_intersection<S: Scalar>(a: &BoxParams<S>, b: &BoxParams<S>) -> S {
    let area = polygon_area(&clip(&corners(a), &corners(b)));
    area.max_by_re(S::constant(0.0))
}

pub(crate) fn intersection_volume<S: Scalar>(a: &BoxParams<S>, b: &BoxParams<S>, axis_aligned: bool) -> S {
    let z = interval_overlap(a.center[2], a.size[2], b.center[2], b.size[2]);
    if axis_aligned {
        let x = interval_overlap(a.center[0], a.size[0], b.center[0], b.size[0]);
        let y = interval_overlap(a.center[1], a.size[1], b.center[1], b.size[1]);
        x * y * z
    } else {
        bev_intersection(a, b) * z
    }
}

pub(crate) fn iou_params<S: Scalar>(a: &BoxParams<S>, b: &BoxParams<S>, axis_aligned: bool) -> S {
    let inter = intersection_volume(a, b, axis_aligned);
    let va = a.size[0] * a.size[1] * a.size[2];
    let vb = b.size[0] * b.size[1] * b.size[2];
    inter / (va + vb - inter)
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// 3D IoU in `[0, 1]`.
pub fn iou3d(a: &Box3D, b: &Box3D) -> f64 {
    let aligned = a.yaw == 0.0 && b.yaw == 0.0;
    clamp_unit(iou_params::<f64>(&a.params(), &b.params(), aligned))
}

/// 3D IoU through the polygon-clipping path regardless of yaw.
pub fn iou3d_rotated(a: &Box3D, b: &Box3D) -> f64 {
    clamp_unit(iou_params::<f64>(&a.params(), &b.params(), false))
}

/// Bird's-eye-view (xy) IoU of the box footprints.
pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection::<f64>(&a.params(), &b.params());
    let union = a.size.x * a.size.y + b.size.x * b.size.y - inter;
    clamp_unit(inter / union)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    bbox: Box3D,
    label: u32,
    score: f64,
}

impl Detection {
    pub fn new(bbox: Box3D, label: u32, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidParameter("detection score must lie in [0, 1]"));
        }
        Ok(Self { bbox, label, score })
    }

    pub fn bbox(&self) -> &Box3D {
        &self.bbox
    }

    pub fn label(&self) -> u32 {
        self.label
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub bbox: Box3D,
    pub label: u32,
}

/// Indices in descending score order, ties by lower index.
fn score_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
    order
}

/// Greedy class-aware NMS; returns kept indices in descending score order.
pub fn nms_indices(dets: &[Detection], iou_threshold: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in score_order(dets) {
        let d = &dets[i];
        let suppressed =
            kept.iter().any(|&k| dets[k].label == d.label && iou3d(&dets[k].bbox, &d.bbox) > iou_threshold);
        if !suppressed {
            kept.push(i);
        }
    }
    kept
}

pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    nms_indices(dets, iou_threshold).into_iter().map(|i| dets[i]).collect()
}

/// Number of interpolation points on the recall axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecallPositions {
    /// Recall 0, 0.1, ..., 1.0.
    Eleven,
    /// Recall 1/40, 2/40, ..., 1.
    #[default]
    Forty,
}

impl TryFrom<u32> for RecallPositions {
    type Error = Error;
    fn try_from(n: u32) -> Result<Self> {
        match n {
            11 => Ok(RecallPositions::Eleven),
            40 => Ok(RecallPositions::Forty),
            _ => Err(Error::InvalidParameter("recall positions must be 11 or 40")),
        }
    }
}

impl RecallPositions {
    pub fn count(self) -> u32 {
        match self {
            RecallPositions::Eleven => 11,
            RecallPositions::Forty => 40,
        }
    }

    /// Recall thresholds as `k / denom` pairs.
    fn thresholds(self) -> impl Iterator<Item = (u64, u64)> {
        let (range, denom) = match self {
            RecallPositions::Eleven => (0..=10u64, 10),
            RecallPositions::Forty => (1..=40u64, 40),
        };
        range.map(move |k| (k, denom))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOutcome {
    TruePositive,
    FalsePositive,
    /// Matched a ground truth excluded by the caller's filter; not counted.
    Ignored,
}

/// Greedy matching in descending score order. Returns one outcome per
/// detection, in score order, and the number of counted ground truths.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_threshold: f64,
    is_ignored: impl Fn(&GroundTruth) -> bool,
) -> (Vec<MatchOutcome>, usize) {
    let ignored: Vec<bool> = gts.iter().map(&is_ignored).collect();
    let mut taken = vec![false; gts.len()];
    let mut outcomes = Vec::with_capacity(dets.len());
    for i in score_order(dets) {
        let d = &dets[i];
        let mut best: Option<(usize, f64)> = None;
        let mut ignored_hit: Option<usize> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] || gt.label != d.label {
                continue;
            }
            let iou = iou3d(&d.bbox, &gt.bbox);
            if ignored[g] {
                if iou >= iou_threshold && ignored_hit.is_none() {
                    ignored_hit = Some(g);
                }
            } else if best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        let outcome = match (best, ignored_hit) {
            (Some((g, iou)), _) if iou >= iou_threshold => {
                taken[g] = true;
                MatchOutcome::TruePositive
            }
            (_, Some(g)) => {
                taken[g] = true;
                MatchOutcome::Ignored
            }
            _ => MatchOutcome::FalsePositive,
        };
        outcomes.push(outcome);
    }
    let counted = ignored.iter().filter(|&&x| !x).count();
    (outcomes, counted)
}

/// Interpolated AP from ranked outcomes: the mean over recall thresholds `r`
/// of the best precision reached at recall `>= r`.
pub fn ap_from_outcomes(outcomes: &[MatchOutcome], num_gt: usize, positions: RecallPositions) -> f64 {
    if num_gt == 0 {
        return 0.0;
    }
    // (tp, rank) after each counted detection
    let mut curve: Vec<(u64, u64)> = Vec::with_capacity(outcomes.len());
    let (mut tp, mut rank) = (0u64, 0u64);
    for o in outcomes {
        match o {
            MatchOutcome::Ignored => continue,
            MatchOutcome::TruePositive => tp += 1,
            MatchOutcome::FalsePositive => {}
        }
        rank += 1;
        curve.push((tp, rank));
    }
    let n = num_gt as u64;
    let mut total = 0.0;
    for (k, denom) in positions.thresholds() {
        // recall tp / n >= k / denom, compared exactly in integers
        let best = curve
            .iter()
            .filter(|&&(tp, _)| tp * denom >= k * n)
            .map(|&(tp, rank)| tp as f64 / rank as f64)
            .fold(0.0f64, f64::max);
        total += best;
    }
    total / f64::from(positions.count())
}

/// Average precision with every ground truth counted.
pub fn average_precision(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_threshold: f64,
    positions: RecallPositions,
) -> f64 {
    average_precision_filtered(dets, gts, iou_threshold, positions, |_| false)
}

/// Average precision where ground truths selected by `is_ignored` (e.g. a
/// difficulty level) neither count as misses nor turn matching detections
/// into false positives.
pub fn average_precision_filtered(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_threshold: f64,
    positions: RecallPositions,
    is_ignored: impl Fn(&GroundTruth) -> bool,
) -> f64 {
    let (outcomes, n) = match_detections(dets, gts, iou_threshold, is_ignored);
    ap_from_outcomes(&outcomes, n, positions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAp {
    pub label: u32,
    pub ap: f64,
    pub num_gt: usize,
    pub num_det: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanAp {
    pub map: f64,
    pub per_class: Vec<ClassAp>,
}

/// Mean of per-class AP over classes with at least one ground truth.
pub fn mean_ap(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_threshold: f64,
    positions: RecallPositions,
) -> Result<MeanAp> {
    let mut classes: BTreeMap<u32, (Vec<Detection>, Vec<GroundTruth>)> = BTreeMap::new();
    for g in gts {
        classes.entry(g.label).or_default().1.push(*g);
    }
    if classes.is_empty() {
        return Err(Error::EmptyInput("no ground truth boxes"));
    }
    for d in dets {
        if let Some(entry) = classes.get_mut(&d.label) {
            entry.0.push(*d);
        }
    }
    let per_class: Vec<ClassAp> = classes
        .into_iter()
        .map(|(label, (d, g))| ClassAp {
            label,
            ap: average_precision(&d, &g, iou_threshold, positions),
            num_gt: g.len(),
            num_det: d.len(),
        })
        .collect();
    let map = per_class.iter().map(|c| c.ap).sum::<f64>() / per_class.len() as f64;
    Ok(MeanAp { map, per_class })
}
