//! Iterated segmentation from a polygon ROI, plus brush edits.

mod roi;

pub use roi::Polygon;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::cut::{build_network, compute_gamma, max_flow_min_cut, region_weights};
use crate::error::{Error, Result};
use crate::forest::{candidate_regions, update_forest, CandidateSets, ModifiedForest};
use crate::gmm::{assign_components, fit_side, init_gmms, Gmm};
use crate::image::{Mask, RgbImage};
use crate::imagegraph::{build_region_graph, slico, RegionGraph, RegionMap};
use crate::nc::{compute_nc, NcResult, SeedSet};

/// A region seeds the background initially when more than this share lies outside the ROI.
pub const ROI_SEED_FRACTION: f64 = 0.5;
/// During iterations, regions with more than this share labeled background join the seeds.
pub const BACKGROUND_SEED_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub changed_pixels: usize,
    pub object_pixels: usize,
    pub gamma: f64,
    /// Energy of the new labeling, hard-constraint terms excluded.
    pub energy: f64,
    pub n_seeds: usize,
    pub p_obj: usize,
    pub p_bkg: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentOutcome {
    pub mask: Mask,
    pub trace: Vec<IterationSummary>,
}

impl SegmentOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn trace_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.trace)?)
    }
}

/// A brush stroke: polyline of pixel positions and the label it paints (1 = object).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stroke {
    pub path: Vec<[i64; 2]>,
    pub label: u8,
}

#[derive(Debug, Clone)]
pub struct SegSession {
    pub image: RgbImage,
    pub roi: Polygon,
    pub roi_mask: Mask,
    pub regions: RegionMap,
    pub graph: RegionGraph,
    /// Regions mostly outside the ROI.
    pub initial_seeds: Vec<usize>,
    pub seeds: SeedSet,
    pub labeling: Vec<u8>,
    pub object: Gmm,
    pub background: Gmm,
    pub nc: Option<NcResult>,
    pub candidates: Option<CandidateSets>,
    pub forest: Option<ModifiedForest>,
    pub gamma: Option<f64>,
    pub config: Config,
    /// Iterations run by the current or latest `segment`.
    pub iteration: usize,
    /// Per-region label forced by strokes.
    pub hard_constraints: Vec<Option<u8>>,
    pub history: Vec<IterationSummary>,
}

/// Builds superpixels, region graph and initial models for `roi` on `image`.
pub fn init_session(image: &RgbImage, roi: &Polygon, config: &Config) -> Result<SegSession> {
    config.validate()?;
    roi.roi_mask(image.width(), image.height())?;
    let regions = slico(image, config.n_regions.min(image.len()))?;
    init_session_with_regions(image, roi, config, regions)
}

/// As [`init_session`] with precomputed regions.
pub fn init_session_with_regions(image: &RgbImage, roi: &Polygon, config: &Config, regions: RegionMap) -> Result<SegSession> {
    config.validate()?;
    if regions.width() != image.width() || regions.height() != image.height() {
        return Err(Error::InvalidInput("region map does not match the image".into()));
    }
    let roi_mask = roi.roi_mask(image.width(), image.height())?;
    let mut graph = build_region_graph(image, &regions, config.delta_t)?;
    if !config.indeterminacy_enabled {
        graph = graph.without_indeterminacy();
    }
    let members = regions.pixels_by_region();
    let outside_share: Vec<f64> = members
        .iter()
        .map(|px| px.iter().filter(|&&i| !roi_mask.data()[i]).count() as f64 / px.len() as f64)
        .collect();
    let mut initial_seeds: Vec<usize> = (0..regions.n_regions())
        .filter(|&r| outside_share[r] > ROI_SEED_FRACTION)
        .collect();
    if initial_seeds.is_empty() {
        // Thin margins: fall back to every region touching the outside.
        initial_seeds = (0..regions.n_regions()).filter(|&r| outside_share[r] > 0.0).collect();
    }
    let seeds = SeedSet::new(initial_seeds.iter().copied(), regions.n_regions())?;
    let labeling = roi_mask.to_labels();
    let (object, background, _) = init_gmms(image, &labeling, config.k_gmm)?;
    Ok(SegSession {
        image: image.clone(),
        roi: roi.clone(),
        roi_mask,
        hard_constraints: vec![None; regions.n_regions()],
        regions,
        graph,
        initial_seeds,
        seeds,
        labeling,
        object,
        background,
        nc: None,
        candidates: None,
        forest: None,
        gamma: None,
        config: config.clone(),
        iteration: 0,
        history: Vec::new(),
    })
}

impl SegSession {
    pub fn mask(&self) -> Mask {
        Mask::from_labels(self.image.width(), self.image.height(), &self.labeling)
            .expect("labeling covers the image")
    }

    /// Forced label per pixel, from the stroke constraints of its region.
    pub fn pixel_constraints(&self) -> Vec<Option<u8>> {
        (0..self.image.len()).map(|i| self.hard_constraints[self.regions.label(i)]).collect()
    }

    fn current_seeds(&self) -> Result<SeedSet> {
        let members = self.regions.pixels_by_region();
        let mut seeds: Vec<usize> = (0..self.regions.n_regions())
            .filter(|&r| {
                let bkg = members[r].iter().filter(|&&i| self.labeling[i] == 0).count();
                self.initial_seeds.binary_search(&r).is_ok()
                    || bkg as f64 > BACKGROUND_SEED_FRACTION * members[r].len() as f64
                    || self.hard_constraints[r] == Some(0)
            })
            .filter(|&r| self.hard_constraints[r] != Some(1))
            .collect();
        if seeds.is_empty() {
            seeds = self.initial_seeds.clone();
        }
        SeedSet::new(seeds, self.regions.n_regions())
    }

    /// One pass: refit models, update seeds, connectedness, forest, weights and cut.
    pub fn run_iteration(&mut self) -> Result<&IterationSummary> {
        let cfg = &self.config;
        let assignment = assign_components(&self.image, &self.labeling, &self.object, &self.background)?;
        if self.labeling.contains(&1) {
            self.object = fit_side(&self.image, &self.labeling, &assignment, 1)?;
        }
        if self.labeling.contains(&0) {
            self.background = fit_side(&self.image, &self.labeling, &assignment, 0)?;
        }

        self.seeds = self.current_seeds()?;
        let nc = compute_nc(&self.graph, &self.seeds)?;
        let cands = candidate_regions(
            &nc,
            &self.graph,
            &self.regions,
            &self.background,
            &self.seeds,
            cfg.delta_b,
            cfg.epsilon,
            cfg.density_mode,
        )?;
        let forest = update_forest(&nc, &cands, &self.graph)?;

        let gamma = compute_gamma(&nc, cfg.delta_gamma);
        let rw = region_weights(&nc, &forest, cfg.delta_nc, cfg.t_clamp)?;
        let hard = self.pixel_constraints();
        let net = build_network(
            &self.image,
            &self.regions,
            &rw,
            &self.object,
            &self.background,
            gamma,
            cfg.eta,
            Some(&hard),
        )?;
        let cut = max_flow_min_cut(&net);

        let changed = cut
            .labeling
            .iter()
            .zip(&self.labeling)
            .filter(|(a, b)| a != b)
            .count();
        self.iteration += 1;
        let summary = IterationSummary {
            iteration: self.iteration,
            changed_pixels: changed,
            object_pixels: cut.labeling.iter().filter(|&&l| l == 1).count(),
            gamma,
            energy: cut.cut_value + net.total_shift(),
            n_seeds: self.seeds.len(),
            p_obj: cands.p_obj.len(),
            p_bkg: cands.p_bkg.len(),
        };
        self.labeling = cut.labeling;
        self.nc = Some(nc);
        self.candidates = Some(cands);
        self.forest = Some(forest);
        self.gamma = Some(gamma);
        self.history.push(summary);
        Ok(self.history.last().expect("just pushed"))
    }

    /// Iterates until the labeling stops changing or the iteration cap is reached.
    pub fn segment(&mut self) -> Result<SegmentOutcome> {
        self.iteration = 0;
        let mut trace = Vec::new();
        loop {
            let s = self.run_iteration()?.clone();
            let done = s.changed_pixels == 0 || self.iteration >= self.config.max_iterations;
            trace.push(s);
            if done {
                break;
            }
        }
        Ok(SegmentOutcome {
            mask: self.mask(),
            trace,
        })
    }

    /// Constrains every region under a stroke to its label (later strokes win), then
    /// re-segments. No strokes leaves the session untouched.
    pub fn apply_edit(&mut self, strokes: &[Stroke]) -> Result<SegmentOutcome> {
        let (w, h) = (self.image.width() as i64, self.image.height() as i64);
        for s in strokes {
            if s.label > 1 {
                return Err(Error::InvalidInput(format!("stroke label {} is not 0 or 1", s.label)));
            }
            if let Some(p) = s.path.iter().find(|p| p[0] < 0 || p[1] < 0 || p[0] >= w || p[1] >= h) {
                return Err(Error::InvalidInput(format!("stroke point {p:?} outside the {w}x{h} image")));
            }
        }
        if strokes.iter().all(|s| s.path.is_empty()) {
            return Ok(SegmentOutcome {
                mask: self.mask(),
                trace: Vec::new(),
            });
        }
        for s in strokes {
            for (x, y) in stroke_pixels(&s.path) {
                let r = self.regions.label(y as usize * w as usize + x as usize);
                self.hard_constraints[r] = Some(s.label);
            }
        }
        self.segment()
    }
}

/// Pixels on the polyline, consecutive points joined by Bresenham lines.
pub fn stroke_pixels(path: &[[i64; 2]]) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    match path {
        [] => {}
        [p] => out.push((p[0], p[1])),
        _ => {
            for seg in path.windows(2) {
                let (mut x, mut y) = (seg[0][0], seg[0][1]);
                let (x1, y1) = (seg[1][0], seg[1][1]);
                let (dx, dy) = ((x1 - x).abs(), -(y1 - y).abs());
                let (sx, sy) = ((x1 - x).signum(), (y1 - y).signum());
                let mut err = dx + dy;
                loop {
                    out.push((x, y));
                    if x == x1 && y == y1 {
                        break;
                    }
                    let e2 = 2 * err;
                    if e2 >= dy {
                        err += dy;
                        x += sx;
                    }
                    if e2 <= dx {
                        err += dx;
                        y += sy;
                    }
                }
            }
        }
    }
    out
}
