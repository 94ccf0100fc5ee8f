use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Percentage of ROI pixels labeled differently from the ground truth.
    pub err_percent: f64,
    pub rand_index: f64,
    pub gce: f64,
    /// Mean boundary displacement in pixels.
    pub bde: f64,
    pub iou_obj: f64,
    pub iou_bkg: f64,
    pub iou_avg: f64,
}

impl MetricsReport {
    pub fn mean(reports: &[MetricsReport]) -> Option<MetricsReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Some(MetricsReport {
            err_percent: avg(|r| r.err_percent),
            rand_index: avg(|r| r.rand_index),
            gce: avg(|r| r.gce),
            bde: avg(|r| r.bde),
            iou_obj: avg(|r| r.iou_obj),
            iou_bkg: avg(|r| r.iou_bkg),
            iou_avg: avg(|r| r.iou_avg),
        })
    }
}

/// `n[p][g]`: pixel counts by predicted and true label.
fn confusion(pred: &Mask, gt: &Mask) -> [[f64; 2]; 2] {
    let mut n = [[0.0; 2]; 2];
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        n[p as usize][g as usize] += 1.0;
    }
    n
}

fn iou(tp: f64, fp: f64, fn_: f64) -> f64 {
    let union = tp + fp + fn_;
    if union == 0.0 {
        1.0
    } else {
        tp / union
    }
}

/// Agreement of label pairs, from the confusion matrix.
fn rand_index(n: &[[f64; 2]; 2]) -> f64 {
    let total: f64 = n.iter().flatten().sum();
    if total < 2.0 {
        return 1.0;
    }
    let rows: f64 = n.iter().map(|r| (r[0] + r[1]).powi(2)).sum();
    let cols: f64 = (0..2).map(|g| (n[0][g] + n[1][g]).powi(2)).sum();
    let cells: f64 = n.iter().flatten().map(|c| c * c).sum();
    let disagree = (rows + cols) / 2.0 - cells;
    1.0 - disagree / (total * (total - 1.0) / 2.0)
}

/// Smaller of the two directional local refinement errors, per pixel.
fn gce(n: &[[f64; 2]; 2]) -> f64 {
    let total: f64 = n.iter().flatten().sum();
    let rows = [n[0][0] + n[0][1], n[1][0] + n[1][1]];
    let cols = [n[0][0] + n[1][0], n[0][1] + n[1][1]];
    let (mut e_pred, mut e_gt) = (0.0, 0.0);
    for p in 0..2 {
        for g in 0..2 {
            let c = n[p][g];
            if c > 0.0 {
                e_pred += c * (rows[p] - c) / rows[p];
                e_gt += c * (cols[g] - c) / cols[g];
            }
        }
    }
    e_pred.min(e_gt) / total
}

/// Pixels with a 4-neighbour of the other label.
pub fn boundary_pixels(mask: &Mask) -> Vec<bool> {
    let (w, h) = (mask.width(), mask.height());
    let d = mask.data();
    (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            (x > 0 && d[i - 1] != d[i])
                || (x + 1 < w && d[i + 1] != d[i])
                || (y > 0 && d[i - w] != d[i])
                || (y + 1 < h && d[i + w] != d[i])
        })
        .collect()
}

/// Exact squared Euclidean distance to the nearest marked pixel (separable lower envelope).
pub fn squared_distance_transform(marked: &[bool], width: usize, height: usize) -> Vec<f64> {
    const INF: f64 = 1e20;
    let mut grid: Vec<f64> = marked.iter().map(|&m| if m { 0.0 } else { INF }).collect();
    let mut buf = vec![0.0; width.max(height)];
    let mut out = vec![0.0; width.max(height)];
    for x in 0..width {
        for y in 0..height {
            buf[y] = grid[y * width + x];
        }
        edt_1d(&buf[..height], &mut out[..height]);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        buf[..width].copy_from_slice(&grid[y * width..(y + 1) * width]);
        edt_1d(&buf[..width], &mut out[..width]);
        grid[y * width..(y + 1) * width].copy_from_slice(&out[..width]);
    }
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let meet = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    for q in 1..n {
        let mut s = meet(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = meet(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        *dq = (q as f64 - p as f64).powi(2) + f[p];
    }
}

/// Symmetric mean distance between the two label boundaries. With no boundary in exactly one
/// mask the displacement is the image diagonal.
pub fn boundary_displacement(pred: &Mask, gt: &Mask) -> f64 {
    let (w, h) = (pred.width(), pred.height());
    let bp = boundary_pixels(pred);
    let bg = boundary_pixels(gt);
    let (np, ng) = (bp.iter().filter(|&&b| b).count(), bg.iter().filter(|&&b| b).count());
    match (np, ng) {
        (0, 0) => return 0.0,
        (0, _) | (_, 0) => return ((w * w + h * h) as f64).sqrt(),
        _ => {}
    }
    let dg = squared_distance_transform(&bg, w, h);
    let dp = squared_distance_transform(&bp, w, h);
    let mean = |from: &[bool], dist: &[f64], count: usize| {
        from.iter()
            .zip(dist)
            .filter(|(&b, _)| b)
            .map(|(_, d)| d.sqrt())
            .sum::<f64>()
            / count as f64
    };
    (mean(&bp, &dg, np) + mean(&bg, &dp, ng)) / 2.0
}

/// Error rate inside `roi`; pair agreement, consistency error, boundary displacement and IoU
/// over the whole image.
pub fn compute_metrics(pred: &Mask, gt: &Mask, roi: &Mask) -> Result<MetricsReport> {
    if !pred.same_dims(gt) || !pred.same_dims(roi) {
        return Err(Error::InvalidInput(format!(
            "mask sizes differ: {}x{}, {}x{}, {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height(),
            roi.width(),
            roi.height()
        )));
    }
    let roi_size = roi.count();
    if roi_size == 0 {
        return Err(Error::InvalidInput("empty ROI".into()));
    }
    let wrong = (0..pred.len())
        .filter(|&i| roi.data()[i] && pred.data()[i] != gt.data()[i])
        .count();
    let n = confusion(pred, gt);
    let iou_obj = iou(n[1][1], n[1][0], n[0][1]);
    let iou_bkg = iou(n[0][0], n[0][1], n[1][0]);
    Ok(MetricsReport {
        err_percent: 100.0 * wrong as f64 / roi_size as f64,
        rand_index: rand_index(&n),
        gce: gce(&n),
        bde: boundary_displacement(pred, gt),
        iou_obj,
        iou_bkg,
        iou_avg: (iou_obj + iou_bkg) / 2.0,
    })
}
