//! Segmentation quality metrics, loose-ROI generation and batch evaluation.

mod metrics;

pub use metrics::{boundary_displacement, boundary_pixels, compute_metrics, squared_distance_transform, MetricsReport};

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::image::{load_image, Mask};
use crate::pipeline::{init_session, Polygon};

/// Inclusive pixel bounds `(x0, y0, x1, y1)`.
pub type Rect = (usize, usize, usize, usize);

pub fn bounding_box(mask: &Mask) -> Option<Rect> {
    let mut bb: Option<Rect> = None;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                bb = Some(match bb {
                    None => (x, y, x, y),
                    Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                });
            }
        }
    }
    bb
}

fn rect_area(r: Rect) -> usize {
    (r.2 - r.0 + 1) * (r.3 - r.1 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LooseRoi {
    pub alpha: f64,
    /// Area of `rect` over the area of the tight box.
    pub looseness: f64,
    pub rect: Rect,
}

impl LooseRoi {
    pub fn polygon(&self) -> Polygon {
        Polygon::rectangle(self.rect.0, self.rect.1, self.rect.2, self.rect.3)
    }
}

/// Moves each side of the tight box `alpha` of the way to the image border, rounding outward.
pub fn loose_roi(gt: &Mask, alpha: f64) -> Result<LooseRoi> {
    let tight = bounding_box(gt).ok_or_else(|| Error::InvalidInput("empty ground truth".into()))?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside [0, 1]")));
    }
    let (w, h) = ((gt.width() - 1) as f64, (gt.height() - 1) as f64);
    let (x0, y0, x1, y1) = (tight.0 as f64, tight.1 as f64, tight.2 as f64, tight.3 as f64);
    let rect = (
        ((1.0 - alpha) * x0).floor() as usize,
        ((1.0 - alpha) * y0).floor() as usize,
        ((x1 + alpha * (w - x1)).ceil() as usize).min(gt.width() - 1),
        ((y1 + alpha * (h - y1)).ceil() as usize).min(gt.height() - 1),
    );
    Ok(LooseRoi {
        alpha,
        looseness: rect_area(rect) as f64 / rect_area(tight) as f64,
        rect,
    })
}

/// ROIs at `alpha = k / levels` for `k = 1..=levels`.
pub fn looseness_sweep(gt: &Mask, levels: usize) -> Result<Vec<LooseRoi>> {
    if levels == 0 {
        return Err(Error::InvalidInput("levels must be at least 1".into()));
    }
    (1..=levels).map(|k| loose_roi(gt, k as f64 / levels as f64)).collect()
}

/// The smallest-alpha ROI whose looseness reaches `target` (capped at the full image).
pub fn roi_for_looseness(gt: &Mask, target: f64) -> Result<LooseRoi> {
    if !(target >= 1.0) {
        return Err(Error::InvalidInput(format!("looseness {target} below 1")));
    }
    let tight = loose_roi(gt, 0.0)?;
    if tight.looseness >= target {
        return Ok(tight);
    }
    let full = loose_roi(gt, 1.0)?;
    if full.looseness <= target {
        return Ok(full);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = (lo + hi) / 2.0;
        if loose_roi(gt, mid)?.looseness >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    loose_roi(gt, hi)
}

/// Where each image's ROI comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RoiSource {
    /// `<dir>/<stem>.json` polygon files.
    Polygons(PathBuf),
    /// Rectangle grown from the ground-truth box to this looseness.
    Looseness(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRow {
    pub name: String,
    pub metrics: Option<MetricsReport>,
    pub iterations: Option<usize>,
    pub looseness: Option<f64>,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub rows: Vec<ImageRow>,
    pub mean: Option<MetricsReport>,
    pub n_ok: usize,
    pub n_failed: usize,
}

impl DatasetReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per image plus a trailing `MEAN` row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Encode(e.to_string());
        w.write_record([
            "image", "err_percent", "rand_index", "gce", "bde", "iou_obj", "iou_bkg", "iou_avg", "iterations", "looseness", "seconds", "error",
        ])
        .map_err(csv_err)?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let metric_cells = |m: Option<&MetricsReport>| {
            let g = |f: fn(&MetricsReport) -> f64| fmt(m.map(f));
            vec![
                g(|m| m.err_percent),
                g(|m| m.rand_index),
                g(|m| m.gce),
                g(|m| m.bde),
                g(|m| m.iou_obj),
                g(|m| m.iou_bkg),
                g(|m| m.iou_avg),
            ]
        };
        for r in &self.rows {
            let mut rec = vec![r.name.clone()];
            rec.extend(metric_cells(r.metrics.as_ref()));
            rec.push(r.iterations.map(|i| i.to_string()).unwrap_or_default());
            rec.push(fmt(r.looseness));
            rec.push(format!("{:.3}", r.seconds));
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec).map_err(csv_err)?;
        }
        let mut rec = vec!["MEAN".to_string()];
        rec.extend(metric_cells(self.mean.as_ref()));
        rec.extend([String::new(), String::new(), String::new(), String::new()]);
        w.write_record(&rec).map_err(csv_err)?;
        let bytes = w.into_inner().map_err(|e| Error::Encode(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Encode(e.to_string()))
    }
}

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "bmp", "ppm"];

fn find_mask(dir: &Path, stem: &str) -> Option<PathBuf> {
    ["png", "bmp", "pgm"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

fn evaluate_one(image_path: &Path, root: &Path, stem: &str, source: &RoiSource, config: &Config) -> Result<(MetricsReport, usize, Option<f64>)> {
    let image = load_image(&std::fs::read(image_path)?)?;
    let gt_path = find_mask(&root.join("masks"), stem)
        .ok_or_else(|| Error::InvalidInput(format!("no ground truth for {stem}")))?;
    let gt = Mask::from_png(&std::fs::read(gt_path)?)?;
    if gt.width() != image.width() || gt.height() != image.height() {
        return Err(Error::InvalidInput(format!("ground truth for {stem} has a different size")));
    }
    let (roi, looseness) = match source {
        RoiSource::Polygons(dir) => {
            let text = std::fs::read_to_string(dir.join(format!("{stem}.json")))?;
            (Polygon::from_json(&text)?, None)
        }
        RoiSource::Looseness(l) => {
            let r = roi_for_looseness(&gt, *l)?;
            (r.polygon(), Some(r.looseness))
        }
    };
    let mut session = init_session(&image, &roi, config)?;
    let out = session.segment()?;
    let metrics = compute_metrics(&out.mask, &gt, &session.roi_mask)?;
    Ok((metrics, out.iterations(), looseness))
}

/// Segments every image in `root/images` against `root/masks/<stem>.png`, in file-name order.
/// Per-image failures are recorded and the run continues.
pub fn evaluate_dataset(root: &Path, source: RoiSource, config: &Config) -> Result<DatasetReport> {
    config.validate()?;
    let mut images: Vec<PathBuf> = std::fs::read_dir(root.join("images"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    images.sort();
    let mut rows = Vec::new();
    for path in images {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let started = Instant::now();
        let result = evaluate_one(&path, root, &stem, &source, config);
        let seconds = started.elapsed().as_secs_f64();
        rows.push(match result {
            Ok((m, iterations, looseness)) => ImageRow {
                name: stem,
                metrics: Some(m),
                iterations: Some(iterations),
                looseness,
                seconds,
                error: None,
            },
            Err(e) => ImageRow {
                name: stem,
                metrics: None,
                iterations: None,
                looseness: None,
                seconds,
                error: Some(e.to_string()),
            },
        });
    }
    let ok: Vec<MetricsReport> = rows.iter().filter_map(|r| r.metrics).collect();
    Ok(DatasetReport {
        mean: MetricsReport::mean(&ok),
        n_ok: ok.len(),
        n_failed: rows.len() - ok.len(),
        rows,
    })
}
