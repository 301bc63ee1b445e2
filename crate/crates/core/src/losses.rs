//! Scalar detection losses and their analytic gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::detection::{iou_params, Box3D, BoxParams};
use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::geometry::DepthMap;

/// Default focal-loss focusing parameter.
pub const FOCAL_GAMMA: f64 = 2.0;
/// Default focal-loss class balance.
pub const FOCAL_ALPHA: f64 = 0.25;

/// Weights of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Depth-loss weight.
    pub lambda: f64,
    /// Outdoor box-loss weight.
    pub alpha: f64,
    /// Outdoor direction-loss weight.
    pub beta: f64,
    /// Positive-sample count the detection terms are normalized by.
    pub n_pos: u32,
}

impl LossWeights {
    pub fn new(lambda: f64, alpha: f64, beta: f64, n_pos: u32) -> Result<Self> {
        if [lambda, alpha, beta].iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("loss weights must be non-negative"));
        }
        if n_pos == 0 {
            return Err(Error::InvalidParameter("n_pos must be >= 1"));
        }
        Ok(Self { lambda, alpha, beta, n_pos })
    }
}

impl Default for LossWeights {
    /// `lambda = 0.5`, `alpha = 2`, `beta = 0.2`, `n_pos = 1`.
    fn default() -> Self {
        Self { lambda: 0.5, alpha: 2.0, beta: 0.2, n_pos: 1 }
    }
}

/// Which detection head the objective belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Indoor,
    Outdoor,
}

/// Per-term loss values. `aux` is the centerness loss for the indoor head and
/// the direction loss for the outdoor head.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub cls: f64,
    pub bbox: f64,
    pub aux: f64,
    pub depth: f64,
}

/// Mask of pixels with a positive, finite target depth.
pub fn valid_depth_mask(target: &DepthMap) -> Vec<bool> {
    target.data().iter().map(|&d| d > 0.0 && d.is_finite()).collect()
}

fn check_depth_shapes(pred: &DepthMap, target: &DepthMap, mask: &[bool]) -> Result<()> {
    if pred.width() != target.width() || pred.height() != target.height() || mask.len() != pred.data().len() {
        return Err(Error::ShapeMismatch("depth maps and mask must share a shape"));
    }
    Ok(())
}

/// Mean absolute depth error over valid pixels, `0` if none is valid.
pub fn depth_l1(pred: &DepthMap, target: &DepthMap, valid_mask: &[bool]) -> Result<f64> {
    check_depth_shapes(pred, target, valid_mask)?;
    let (sum, n) = pred
        .data()
        .iter()
        .zip(target.data())
        .zip(valid_mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), ((p, t), _)| (s + libm::fabs(p - t), n + 1));
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Gradient of [`depth_l1`] with respect to `pred` (zero subgradient at ties).
pub fn depth_l1_grad(pred: &DepthMap, target: &DepthMap, valid_mask: &[bool]) -> Result<Vec<f64>> {
    check_depth_shapes(pred, target, valid_mask)?;
    let n = valid_mask.iter().filter(|&&m| m).count();
    let mut g = vec![0.0; pred.data().len()];
    if n == 0 {
        return Ok(g);
    }
    for (i, ((p, t), &m)) in pred.data().iter().zip(target.data()).zip(valid_mask).enumerate() {
        if m && p != t {
            g[i] = if p > t { 1.0 } else { -1.0 } / n as f64;
        }
    }
    Ok(g)
}

fn check_focal(p: f64, gamma: f64, alpha: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter("focal loss probability must lie in (0, 1)"));
    }
    if !(gamma >= 0.0) || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter("focal loss needs gamma >= 0 and alpha in [0, 1]"));
    }
    Ok(())
}

/// Binary focal loss of predicted probability `p` for a positive (`true`)
/// or negative target.
pub fn focal_loss(p: f64, target: bool, gamma: f64, alpha: f64) -> Result<f64> {
    check_focal(p, gamma, alpha)?;
    Ok(if target {
        -alpha * libm::pow(1.0 - p, gamma) * libm::log(p)
    } else {
        -(1.0 - alpha) * libm::pow(p, gamma) * libm::log(1.0 - p)
    })
}

/// `d focal_loss / d p`.
pub fn focal_loss_grad(p: f64, target: bool, gamma: f64, alpha: f64) -> Result<f64> {
    check_focal(p, gamma, alpha)?;
    let q = 1.0 - p;
    Ok(if target {
        let decay = if gamma == 0.0 { 0.0 } else { gamma * libm::pow(q, gamma - 1.0) * libm::log(p) };
        alpha * decay - alpha * libm::pow(q, gamma) / p
    } else {
        let decay = if gamma == 0.0 { 0.0 } else { gamma * libm::pow(p, gamma - 1.0) * libm::log(q) };
        -(1.0 - alpha) * decay + (1.0 - alpha) * libm::pow(p, gamma) / q
    })
}

/// Huber-style smooth L1. A non-positive `beta` degenerates to plain L1.
pub fn smooth_l1(x: f64, beta: f64) -> f64 {
    let a = libm::fabs(x);
    if beta > 0.0 && a < beta {
        0.5 * x * x / beta
    } else if beta > 0.0 {
        a - 0.5 * beta
    } else {
        a
    }
}

pub fn smooth_l1_grad(x: f64, beta: f64) -> f64 {
    if beta > 0.0 && libm::fabs(x) < beta {
        x / beta
    } else if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn use_axis_aligned(pred: &Box3D, target: &Box3D) -> bool {
    pred.yaw() == 0.0 && target.yaw() == 0.0
}

/// `1 - IoU3D(pred, target)`.
pub fn iou3d_loss(pred: &Box3D, target: &Box3D) -> f64 {
    1.0 - crate::detection::iou3d(pred, target)
}

/// Gradient of [`iou3d_loss`] with respect to the predicted box parameters
/// `[cx, cy, cz, dx, dy, dz, yaw]`.
pub fn iou3d_loss_grad(pred: &Box3D, target: &Box3D) -> [f64; 7] {
    let c = pred.center();
    let s = pred.size();
    let p = BoxParams {
        center: [Dual::variable(c.x, 0), Dual::variable(c.y, 1), Dual::variable(c.z, 2)],
        size: [Dual::variable(s.x, 3), Dual::variable(s.y, 4), Dual::variable(s.z, 5)],
        yaw: Dual::variable(pred.yaw(), 6),
    };
    let t = target.params::<Dual<7>>();
    let iou = iou_params(&p, &t, use_axis_aligned(pred, target));
    iou.eps.map(|e| -e)
}

fn check_probabilities(probs: &[f64], target: usize) -> Result<()> {
    if target >= probs.len() {
        return Err(Error::IndexOutOfRange { index: target, len: probs.len() });
    }
    let sum: f64 = probs.iter().sum();
    if libm::fabs(sum - 1.0) > 1e-6 || probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidParameter("probabilities must be non-negative and sum to 1"));
    }
    Ok(())
}

/// `-ln probs[target]`.
pub fn cross_entropy(probs: &[f64], target: usize) -> Result<f64> {
    check_probabilities(probs, target)?;
    Ok(-libm::log(probs[target]))
}

/// Gradient of [`cross_entropy`] with respect to the probability vector.
pub fn cross_entropy_grad(probs: &[f64], target: usize) -> Result<Vec<f64>> {
    check_probabilities(probs, target)?;
    let mut g = vec![0.0; probs.len()];
    g[target] = -1.0 / probs[target];
    Ok(g)
}

/// Coefficients multiplying each term in [`total_loss`], which is linear.
pub fn total_loss_grad(weights: &LossWeights, head: Head) -> LossTerms {
    let n = f64::from(weights.n_pos);
    let (box_w, aux_w) = match head {
        Head::Indoor => (1.0, 1.0),
        Head::Outdoor => (weights.alpha, weights.beta),
    };
    LossTerms { cls: 1.0 / n, bbox: box_w / n, aux: aux_w / n, depth: weights.lambda }
}

/// Indoor: `(cls + bbox + ctr) / N_p + lambda depth`.
/// Outdoor: `(cls + alpha bbox + beta dir) / N_p + lambda depth`.
pub fn total_loss(terms: &LossTerms, weights: &LossWeights, head: Head) -> Result<f64> {
    if [terms.cls, terms.bbox, terms.aux, terms.depth].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidParameter("loss components must be non-negative"));
    }
    let n = f64::from(weights.n_pos);
    let detection = match head {
        Head::Indoor => terms.cls + terms.bbox + terms.aux,
        Head::Outdoor => terms.cls + weights.alpha * terms.bbox + weights.beta * terms.aux,
    };
    Ok(detection / n + weights.lambda * terms.depth)
}
