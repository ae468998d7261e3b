use std::collections::BTreeMap;

use pseudobox::{BoundingBox, ClassLabel, Dataset, Detection};

/// IoU by counting pixels of the integer grid covered by each box.
pub fn pixel_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let x0 = a.xmin().min(b.xmin());
    let x1 = a.xmax().max(b.xmax());
    let y0 = a.ymin().min(b.ymin());
    let y1 = a.ymax().max(b.ymax());
    let inside = |bx: &BoundingBox, x: i32, y: i32| {
        x >= bx.xmin() && x <= bx.xmax() && y >= bx.ymin() && y <= bx.ymax()
    };
    let (mut inter, mut union) = (0u64, 0u64);
    for x in x0..=x1 {
        for y in y0..=y1 {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            if ia && ib {
                inter += 1;
            }
            if ia || ib {
                union += 1;
            }
        }
    }
    inter as f64 / union as f64
}

/// Outcome of one detection in the oracle's replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Tp,
    Fp,
    Ignored,
}

/// Replay VOC greedy matching naively for one class.
///
/// Detections are taken one at a time by picking the highest remaining score
/// (earliest index on ties). Returns flags in visiting order and npos.
pub fn replay_matching(
    dets: &[&Detection],
    gt: &Dataset,
    class: ClassLabel,
    iou_thr: f64,
) -> (Vec<Flag>, usize) {
    let npos = gt
        .iter()
        .flat_map(|img| img.objects.iter())
        .filter(|o| o.class == class && !o.difficult)
        .count();

    let mut used = vec![false; dets.len()];
    let mut claimed: BTreeMap<(String, usize), bool> = BTreeMap::new();
    let mut flags = Vec::new();
    for _ in 0..dets.len() {
        let mut pick: Option<usize> = None;
        for i in 0..dets.len() {
            if used[i] {
                continue;
            }
            match pick {
                None => pick = Some(i),
                Some(p) if dets[i].score > dets[p].score => pick = Some(i),
                _ => {}
            }
        }
        let p = pick.unwrap();
        used[p] = true;
        let d = dets[p];

        let objects: Vec<(usize, &pseudobox::GtObject)> = gt
            .get(&d.image_id)
            .map(|img| {
                img.objects
                    .iter()
                    .filter(|o| o.class == class)
                    .enumerate()
                    .collect()
            })
            .unwrap_or_default();
        let mut best_iou = -1.0;
        let mut best: Option<usize> = None;
        for (j, o) in &objects {
            let v = pixel_iou(&d.bbox, &o.bbox);
            if v > best_iou {
                best_iou = v;
                best = Some(*j);
            }
        }
        let flag = match best {
            Some(j) if best_iou >= iou_thr => {
                if objects[j].1.difficult {
                    Flag::Ignored
                } else if *claimed.get(&(d.image_id.clone(), j)).unwrap_or(&false) {
                    Flag::Fp
                } else {
                    claimed.insert((d.image_id.clone(), j), true);
                    Flag::Tp
                }
            }
            _ => Flag::Fp,
        };
        flags.push(flag);
    }
    (flags, npos)
}

/// 11-point AP by direct summation. Recall levels are compared exactly in
/// integers: recall `tp/npos` reaches level `t/10` iff `10 tp >= t npos`.
pub fn eleven_point_ap(flags: &[Flag], npos: usize) -> f64 {
    if npos == 0 {
        return 0.0;
    }
    let mut points: Vec<(usize, f64)> = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for f in flags {
        match f {
            Flag::Tp => tp += 1,
            Flag::Fp => fp += 1,
            Flag::Ignored => continue,
        }
        points.push((tp, tp as f64 / (tp + fp) as f64));
    }
    let mut total = 0.0;
    for t in 0..=10usize {
        let mut best = 0.0f64;
        for &(tp, prec) in &points {
            if 10 * tp >= t * npos && prec > best {
                best = prec;
            }
        }
        total += best;
    }
    total / 11.0
}

/// Area under the interpolated precision `p(r) = max{prec_i : rec_i >= r}`,
/// integrated with the midpoint rule on a grid of `npos * cells` intervals.
/// Every recall value is a multiple of `1/npos`, so each cell lies inside one
/// step of `p` and the sum is exact up to rounding.
pub fn grid_area_ap(flags: &[Flag], npos: usize, cells: usize) -> f64 {
    if npos == 0 {
        return 0.0;
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for f in flags {
        match f {
            Flag::Tp => tp += 1,
            Flag::Fp => fp += 1,
            Flag::Ignored => continue,
        }
        points.push((tp as f64 / npos as f64, tp as f64 / (tp + fp) as f64));
    }
    let n = npos * cells;
    let mut total = 0.0;
    for k in 0..n {
        let r = (k as f64 + 0.5) / n as f64;
        let p = points
            .iter()
            .filter(|(rec, _)| *rec >= r)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        total += p;
    }
    total / n as f64
}

/// Per-class result of the oracle: `None` when the class is excluded from mAP.
pub fn class_ap(dets: &[Detection], gt: &Dataset, class: ClassLabel, iou_thr: f64) -> Option<f64> {
    let of_class: Vec<&Detection> = dets.iter().filter(|d| d.class == class).collect();
    let (flags, npos) = replay_matching(&of_class, gt, class, iou_thr);
    if npos == 0 && of_class.is_empty() {
        return None;
    }
    Some(eleven_point_ap(&flags, npos))
}

/// Oracle mAP: mean of the non-excluded classes, 0 if none.
pub fn map(dets: &[Detection], gt: &Dataset, iou_thr: f64) -> f64 {
    let aps: Vec<f64> = ClassLabel::ALL
        .iter()
        .filter_map(|&c| class_ap(dets, gt, c, iou_thr))
        .collect();
    if aps.is_empty() {
        0.0
    } else {
        aps.iter().sum::<f64>() / aps.len() as f64
    }
}

/// Set comprehension: detections whose class occurs in their image.
pub fn class_consistent(dets: &[Detection], gt: &Dataset) -> Vec<Detection> {
    dets.iter()
        .filter(|d| {
            gt.get(&d.image_id)
                .is_some_and(|img| img.objects.iter().any(|o| o.class == d.class))
        })
        .cloned()
        .collect()
}
