use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxgeo_core::detection::Box3D;
use voxgeo_core::losses::{
    cross_entropy, cross_entropy_grad, depth_l1, depth_l1_grad, focal_loss, focal_loss_grad, iou3d_loss,
    iou3d_loss_grad, smooth_l1, smooth_l1_grad, total_loss, Head, LossTerms, LossWeights,
};
use voxgeo_core::{DepthConvention, DepthMap, Vec3};

const POINTS: usize = 100;

fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn assert_rel(analytic: f64, numeric: f64, what: &str) {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    assert!((analytic - numeric).abs() / scale <= 1e-4, "{what}: analytic {analytic} vs numeric {numeric}");
}

#[test]
fn focal_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..POINTS {
        let p = rng.random_range(0.02..0.98);
        let gamma = rng.random_range(0.0..4.0);
        let alpha = rng.random_range(0.0..1.0);
        for target in [true, false] {
            let g = focal_loss_grad(p, target, gamma, alpha).unwrap();
            let fd = central(|x| focal_loss(x, target, gamma, alpha).unwrap(), p, 1e-6);
            assert_rel(g, fd, "focal");
        }
    }
}

#[test]
fn focal_decreases_in_p_for_positive_target() {
    let mut prev = f64::INFINITY;
    for i in 1..1000 {
        let l = focal_loss(i as f64 / 1000.0, true, 2.0, 0.25).unwrap();
        assert!(l >= 0.0 && l <= prev);
        prev = l;
    }
}

#[test]
fn smooth_l1_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut n = 0;
    while n < POINTS {
        let beta: f64 = rng.random_range(0.1..2.0);
        let x: f64 = rng.random_range(-4.0..4.0);
        if (x.abs() - beta).abs() < 1e-3 || x.abs() < 1e-3 {
            continue;
        }
        assert_rel(smooth_l1_grad(x, beta), central(|t| smooth_l1(t, beta), x, 1e-6), "smooth_l1");
        n += 1;
    }
}

#[test]
fn cross_entropy_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..POINTS {
        let k = rng.random_range(2..6);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|r| r / sum).collect();
        let t = rng.random_range(0..k);
        let g = cross_entropy_grad(&probs, t).unwrap();
        for i in 0..k {
            let f = |x: f64| {
                let mut q = probs.clone();
                q[i] = x;
                cross_entropy(&q, t).unwrap()
            };
            // a 1e-8 step keeps the perturbed vector within the sum check
            assert_rel(g[i], central(f, probs[i], 1e-8), "cross_entropy");
        }
    }
}

#[test]
fn depth_l1_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..POINTS {
        let target: Vec<f64> =
            (0..9).map(|_| if rng.random_bool(0.8) { rng.random_range(0.5..5.0) } else { 0.0 }).collect();
        let pred: Vec<f64> = target.iter().map(|t| t + rng.random_range(-1.0..1.0)).collect();
        let tmap = DepthMap::new(3, 3, target.clone(), DepthConvention::Z).unwrap();
        let mask: Vec<bool> = target.iter().map(|&t| t > 0.0).collect();
        let pmap = DepthMap::new(3, 3, pred.clone(), DepthConvention::Z).unwrap();
        let g = depth_l1_grad(&pmap, &tmap, &mask).unwrap();
        for i in 0..9 {
            if (pred[i] - target[i]).abs() < 1e-3 {
                continue;
            }
            let f = |x: f64| {
                let mut p = pred.clone();
                p[i] = x;
                depth_l1(&DepthMap::new(3, 3, p, DepthConvention::Z).unwrap(), &tmap, &mask).unwrap()
            };
            let fd = central(f, pred[i], 1e-6);
            if mask[i] {
                assert_rel(g[i], fd, "depth_l1");
            } else {
                assert_eq!(g[i], 0.0);
                assert_eq!(fd, 0.0);
            }
        }
    }
}

fn box_from(params: &[f64; 7]) -> Box3D {
    Box3D::new(Vec3::new(params[0], params[1], params[2]), Vec3::new(params[3], params[4], params[5]), params[6])
        .unwrap()
}

#[test]
fn iou_loss_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut n = 0;
    while n < POINTS {
        let target = [
            0.0,
            0.0,
            0.0,
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
            rng.random_range(-3.0..3.0),
        ];
        let pred = [
            rng.random_range(-0.6..0.6),
            rng.random_range(-0.6..0.6),
            rng.random_range(-0.4..0.4),
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
            rng.random_range(-3.0..3.0),
        ];
        let (pb, tb) = (box_from(&pred), box_from(&target));
        let loss = iou3d_loss(&pb, &tb);
        if loss <= 1e-6 || loss >= 1.0 - 1e-6 {
            continue;
        }
        let g = iou3d_loss_grad(&pb, &tb);
        let h = 1e-6;
        let fds: Vec<f64> = (0..7)
            .map(|i| {
                let f = |x: f64| {
                    let mut p = pred;
                    p[i] = x;
                    iou3d_loss(&box_from(&p), &tb)
                };
                central(f, pred[i], h)
            })
            .collect();
        // skip seams: one-sided slopes that disagree mean a vertex or face crossing
        let smooth = (0..7).all(|i| {
            let f = |x: f64| {
                let mut p = pred;
                p[i] = x;
                iou3d_loss(&box_from(&p), &tb)
            };
            let left = (f(pred[i]) - f(pred[i] - h)) / h;
            let right = (f(pred[i] + h) - f(pred[i])) / h;
            (left - right).abs() <= 1e-3 * left.abs().max(right.abs()).max(1e-3)
        });
        if !smooth {
            continue;
        }
        for i in 0..7 {
            assert_rel(g[i], fds[i], &format!("iou param {i}"));
        }
        n += 1;
    }
}

#[test]
fn total_loss_is_linear_with_stated_coefficients() {
    let w = LossWeights::new(0.5, 2.0, 0.2, 3).unwrap();
    let base = LossTerms { cls: 0.7, bbox: 0.3, aux: 1.1, depth: 0.4 };
    for head in [Head::Indoor, Head::Outdoor] {
        let f0 = total_loss(&base, &w, head).unwrap();
        let coef = match head {
            Head::Indoor => [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.5],
            Head::Outdoor => [1.0 / 3.0, 2.0 / 3.0, 0.2 / 3.0, 0.5],
        };
        for (k, c) in coef.iter().enumerate() {
            let mut t = base;
            match k {
                0 => t.cls += 1.0,
                1 => t.bbox += 1.0,
                2 => t.aux += 1.0,
                _ => t.depth += 1.0,
            }
            assert!((total_loss(&t, &w, head).unwrap() - f0 - c).abs() < 1e-12);
        }
    }
}

#[test]
fn total_loss_worked_examples() {
    let indoor = LossWeights::new(0.5, 2.0, 0.2, 1).unwrap();
    let t = LossTerms { cls: 1.0, bbox: 1.0, aux: 1.0, depth: 2.0 };
    assert_eq!(total_loss(&t, &indoor, Head::Indoor).unwrap(), 4.0);
    let outdoor = LossWeights::new(0.5, 2.0, 0.2, 2).unwrap();
    let t = LossTerms { cls: 1.0, bbox: 1.0, aux: 1.0, depth: 1.0 };
    assert_eq!(total_loss(&t, &outdoor, Head::Outdoor).unwrap(), 2.1);
    assert_eq!(
        total_loss(&LossTerms { cls: 0.0, bbox: 0.0, aux: 0.0, depth: 0.0 }, &indoor, Head::Indoor).unwrap(),
        0.0
    );
}
