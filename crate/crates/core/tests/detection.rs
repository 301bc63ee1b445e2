use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use voxgeo_core::detection::{
    average_precision, bev_iou, iou3d, iou3d_rotated, mean_ap, nms, nms_indices, Box3D, Detection, GroundTruth,
    RecallPositions,
};
use voxgeo_core::Vec3;

fn random_box(rng: &mut ChaCha8Rng, spread: f64, rotated: bool) -> Box3D {
    let c =
        Vec3::new(rng.random_range(-spread..spread), rng.random_range(-spread..spread), rng.random_range(-0.3..0.3));
    let s = Vec3::new(rng.random_range(0.4..1.6), rng.random_range(0.4..1.6), rng.random_range(0.4..1.6));
    let yaw = if rotated { rng.random_range(-PI..PI) } else { 0.0 };
    Box3D::new(c, s, yaw).unwrap()
}

fn random_dets(rng: &mut ChaCha8Rng, n: usize, classes: u32, rotated: bool) -> Vec<Detection> {
    (0..n)
        .map(|_| {
            // coarse scores make ties likely
            let score = rng.random_range(0..6) as f64 / 5.0;
            Detection::new(random_box(rng, 1.2, rotated), rng.random_range(0..classes), score).unwrap()
        })
        .collect()
}

fn random_gts(rng: &mut ChaCha8Rng, n: usize, classes: u32, rotated: bool) -> Vec<GroundTruth> {
    (0..n).map(|_| GroundTruth { bbox: random_box(rng, 1.2, rotated), label: rng.random_range(0..classes) }).collect()
}

/// Point-in-box written from the box definition.
fn inside(b: &Box3D, p: Vec3) -> bool {
    let d = p - b.center();
    let (s, c) = b.yaw().sin_cos();
    let along = d.x * c + d.y * s;
    let across = -d.x * s + d.y * c;
    along.abs() <= b.size().x / 2.0 && across.abs() <= b.size().y / 2.0 && d.z.abs() <= b.size().z / 2.0
}

fn monte_carlo_iou(a: &Box3D, b: &Box3D, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = 0.5 * a.size().norm().max(b.size().norm());
    let lo = Vec3::new(
        a.center().x.min(b.center().x) - r,
        a.center().y.min(b.center().y) - r,
        a.center().z.min(b.center().z) - r,
    );
    let hi = Vec3::new(
        a.center().x.max(b.center().x) + r,
        a.center().y.max(b.center().y) + r,
        a.center().z.max(b.center().z) + r,
    );
    let (mut both, mut either) = (0u64, 0u64);
    for _ in 0..samples {
        let p = Vec3::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y), rng.random_range(lo.z..hi.z));
        let (ia, ib) = (inside(a, p), inside(b, p));
        both += (ia && ib) as u64;
        either += (ia || ib) as u64;
    }
    both as f64 / either as f64
}

#[test]
fn rotated_cube_closed_form_and_monte_carlo() {
    let a = Box3D::axis_aligned(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let b = Box3D::new(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), PI / 4.0).unwrap();
    let inter = 2.0 * (2f64.sqrt() - 1.0);
    let want = inter / (2.0 - inter);
    assert!((iou3d(&a, &b) - want).abs() < 1e-12);
    assert!((monte_carlo_iou(&a, &b, 1_000_000, 7) - want).abs() < 3e-3);
}

#[test]
fn random_rotated_pairs_agree_with_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 0..6 {
        let a = random_box(&mut rng, 0.4, true);
        let b = random_box(&mut rng, 0.4, true);
        let mc = monte_carlo_iou(&a, &b, 400_000, k);
        assert!((iou3d(&a, &b) - mc).abs() < 5e-3, "pair {k}: {} vs {mc}", iou3d(&a, &b));
    }
}

#[test]
fn basic_iou_cases() {
    let a = Box3D::axis_aligned(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0)).unwrap();
    assert_eq!(iou3d(&a, &a), 1.0);
    let far = Box3D::axis_aligned(Vec3::new(2.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0)).unwrap();
    assert_eq!(iou3d(&a, &far), 0.0);
    let half = Box3D::axis_aligned(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0)).unwrap();
    assert!((iou3d(&a, &half) - 1.0 / 3.0).abs() < 1e-15);
    assert!((bev_iou(&a, &half) - 1.0 / 3.0).abs() < 1e-15);
}

/// Reference NMS: repeatedly take the best remaining detection, then drop
/// every same-class detection that overlaps it too much.
fn nms_oracle(dets: &[Detection], thr: f64) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..dets.len()).collect();
    let mut kept = Vec::new();
    while !remaining.is_empty() {
        let mut best = remaining[0];
        for &i in &remaining {
            if dets[i].score() > dets[best].score() || (dets[i].score() == dets[best].score() && i < best) {
                best = i;
            }
        }
        kept.push(best);
        remaining.retain(|&i| {
            i != best && !(dets[i].label() == dets[best].label() && iou3d(dets[i].bbox(), dets[best].bbox()) > thr)
        });
    }
    kept
}

/// Reference AP: plain PR curve with float recall, interpolated precision by
/// scanning every curve point.
fn ap_oracle(dets: &[Detection], gts: &[GroundTruth], thr: f64, positions: u32) -> f64 {
    if gts.is_empty() {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score().partial_cmp(&dets[a].score()).unwrap().then(a.cmp(&b)));
    let mut used = vec![false; gts.len()];
    let mut recall = Vec::new();
    let mut precision = Vec::new();
    let mut tp = 0;
    for (rank, &i) in order.iter().enumerate() {
        let mut best: Option<usize> = None;
        let mut best_iou = -1.0;
        for (g, gt) in gts.iter().enumerate() {
            if used[g] || gt.label != dets[i].label() {
                continue;
            }
            let o = iou3d(dets[i].bbox(), &gt.bbox);
            if o > best_iou {
                best_iou = o;
                best = Some(g);
            }
        }
        if let Some(g) = best {
            if best_iou >= thr {
                used[g] = true;
                tp += 1;
            }
        }
        recall.push(tp as f64 / gts.len() as f64);
        precision.push(tp as f64 / (rank + 1) as f64);
    }
    let rs: Vec<f64> = if positions == 40 {
        (1..=40).map(|k| k as f64 / 40.0).collect()
    } else {
        (0..=10).map(|k| k as f64 / 10.0).collect()
    };
    let mut sum = 0.0;
    for r in &rs {
        let mut m: f64 = 0.0;
        for (rc, p) in recall.iter().zip(&precision) {
            if *rc >= r - 1e-12 {
                m = m.max(*p);
            }
        }
        sum += m;
    }
    sum / rs.len() as f64
}

#[test]
fn three_detection_curve_gives_five_sixths() {
    let unit = Vec3::new(1.0, 1.0, 1.0);
    let g1 = Box3D::axis_aligned(Vec3::ZERO, unit).unwrap();
    let g2 = Box3D::axis_aligned(Vec3::new(5.0, 0.0, 0.0), unit).unwrap();
    let miss = Box3D::axis_aligned(Vec3::new(-5.0, 0.0, 0.0), unit).unwrap();
    let gts = [GroundTruth { bbox: g1, label: 0 }, GroundTruth { bbox: g2, label: 0 }];
    let dets = [
        Detection::new(g1, 0, 0.9).unwrap(),
        Detection::new(miss, 0, 0.8).unwrap(),
        Detection::new(g2, 0, 0.7).unwrap(),
    ];
    let ap = average_precision(&dets, &gts, 0.25, RecallPositions::Forty);
    assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    assert!((ap_oracle(&dets, &gts, 0.25, 40) - 5.0 / 6.0).abs() < 1e-15);
    assert_eq!(average_precision(&[], &gts, 0.25, RecallPositions::Forty), 0.0);
}

#[test]
fn two_identical_boxes_keep_the_higher_score() {
    let b = Box3D::axis_aligned(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let dets = [Detection::new(b, 0, 0.8).unwrap(), Detection::new(b, 0, 0.9).unwrap()];
    let kept = nms(&dets, 0.25);
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].score(), 0.9);
}

#[test]
fn mean_ap_two_classes() {
    let b = Box3D::axis_aligned(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let gts = [GroundTruth { bbox: b, label: 0 }, GroundTruth { bbox: b, label: 1 }];
    let dets = [Detection::new(b, 0, 1.0).unwrap()];
    let m = mean_ap(&dets, &gts, 0.5, RecallPositions::Forty).unwrap();
    assert_eq!(m.map, 0.5);
    assert!(mean_ap(&dets, &[], 0.5, RecallPositions::Forty).is_err());
}

proptest! {
    #[test]
    fn nms_matches_reference(seed in any::<u64>(), n in 1usize..=10, thr in 0.0f64..0.8, rotated in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dets = random_dets(&mut rng, n, 2, rotated);
        let kept = nms_indices(&dets, thr);
        prop_assert_eq!(&kept, &nms_oracle(&dets, thr));
        // every suppressed detection overlaps a kept, higher-ranked one of its class
        for i in (0..n).filter(|i| !kept.contains(i)) {
            let covered = kept.iter().any(|&k| {
                dets[k].label() == dets[i].label()
                    && (dets[k].score() > dets[i].score() || (dets[k].score() == dets[i].score() && k < i))
                    && iou3d(dets[k].bbox(), dets[i].bbox()) > thr
            });
            prop_assert!(covered);
        }
    }

    #[test]
    fn ap_matches_reference(seed in any::<u64>(), nd in 0usize..=10, ng in 1usize..=10, thr in 0.05f64..0.7, eleven in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dets = random_dets(&mut rng, nd, 1, true);
        let gts = random_gts(&mut rng, ng, 1, true);
        let (pos, n) = if eleven { (RecallPositions::Eleven, 11) } else { (RecallPositions::Forty, 40) };
        prop_assert_eq!(average_precision(&dets, &gts, thr, pos), ap_oracle(&dets, &gts, thr, n));
    }

    #[test]
    fn mean_ap_matches_per_class_reference(seed in any::<u64>(), nd in 0usize..=10, ng in 1usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dets = random_dets(&mut rng, nd, 3, false);
        let gts = random_gts(&mut rng, ng, 3, false);
        let m = mean_ap(&dets, &gts, 0.25, RecallPositions::Forty).unwrap();
        let mut labels: Vec<u32> = gts.iter().map(|g| g.label).collect();
        labels.sort();
        labels.dedup();
        let mut sum = 0.0;
        for l in &labels {
            let d: Vec<Detection> = dets.iter().filter(|d| d.label() == *l).cloned().collect();
            let g: Vec<GroundTruth> = gts.iter().filter(|g| g.label == *l).cloned().collect();
            sum += ap_oracle(&d, &g, 0.25, 40);
        }
        prop_assert!((m.map - sum / labels.len() as f64).abs() < 1e-15);
        if labels.len() == 1 {
            prop_assert_eq!(m.map, m.per_class[0].ap);
        }
    }

    #[test]
    fn single_class_mean_ap_is_that_class_ap(seed in any::<u64>(), nd in 0usize..=10, ng in 1usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dets = random_dets(&mut rng, nd, 1, true);
        let gts = random_gts(&mut rng, ng, 1, true);
        let m = mean_ap(&dets, &gts, 0.5, RecallPositions::Forty).unwrap();
        prop_assert_eq!(m.map, average_precision(&dets, &gts, 0.5, RecallPositions::Forty));
    }

    #[test]
    fn ap_non_increasing_in_threshold(seed in any::<u64>(), nd in 0usize..=10, ng in 1usize..=10, t1 in 0.05f64..0.9, t2 in 0.05f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dets = random_dets(&mut rng, nd, 1, true);
        let gts = random_gts(&mut rng, ng, 1, true);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(average_precision(&dets, &gts, hi, RecallPositions::Forty) <= average_precision(&dets, &gts, lo, RecallPositions::Forty));
    }

    #[test]
    fn iou_symmetric_bounded_and_consistent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_box(&mut rng, 1.0, true);
        let b = random_box(&mut rng, 1.0, true);
        let ab = iou3d(&a, &b);
        prop_assert!((ab - iou3d(&b, &a)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((iou3d(&a, &a) - 1.0).abs() < 1e-12);
        let (aa, bb) = (random_box(&mut rng, 1.0, false), random_box(&mut rng, 1.0, false));
        prop_assert!((iou3d(&aa, &bb) - iou3d_rotated(&aa, &bb)).abs() < 1e-9);
    }
}
