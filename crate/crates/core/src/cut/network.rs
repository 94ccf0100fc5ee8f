use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::maxflow::FlowGraph;
use super::{beta_constant, color_dist2, for_each_pair, RegionWeights};
use crate::error::{Error, Result};
use crate::gmm::Gmm;
use crate::image::RgbImage;
use crate::imagegraph::RegionMap;

/// Per-pixel forced label (1 = object), `None` where free.
pub type HardConstraints = Vec<Option<u8>>;

/// Pixel graph: node per pixel, source = object, sink = background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowNetwork {
    pub width: usize,
    pub height: usize,
    /// Source→pixel capacity: the (shifted) cost of labeling the pixel background.
    pub cost_background: Vec<f64>,
    /// Pixel→sink capacity: the (shifted) cost of labeling the pixel object.
    pub cost_object: Vec<f64>,
    /// Amount subtracted from both unary costs of each pixel.
    pub shift: Vec<f64>,
    /// Undirected neighbour capacities `(i, j, w)`, each pair once.
    pub edges: Vec<(u32, u32, f64)>,
}

impl FlowNetwork {
    pub fn n_pixels(&self) -> usize {
        self.cost_object.len()
    }

    /// Capacity of the cut that puts label-1 pixels on the source side.
    pub fn cut_cost(&self, labeling: &[u8]) -> f64 {
        let unary: f64 = labeling
            .iter()
            .enumerate()
            .map(|(i, &l)| if l == 1 { self.cost_object[i] } else { self.cost_background[i] })
            .sum();
        let pair: f64 = self
            .edges
            .iter()
            .filter(|&&(i, j, _)| labeling[i as usize] != labeling[j as usize])
            .map(|&(_, _, w)| w)
            .sum();
        unary + pair
    }

    pub fn total_shift(&self) -> f64 {
        self.shift.iter().sum()
    }

    /// Max-flow problem in DIMACS text form; pixels are nodes `1..=n`, then source and sink.
    pub fn to_dimacs(&self) -> String {
        let n = self.n_pixels();
        let (s, t) = (n + 1, n + 2);
        let arcs = 2 * n + 2 * self.edges.len();
        let mut out = format!("c pixel graph {}x{}\np max {} {}\nn {s} s\nn {t} t\n", self.width, self.height, n + 2, arcs);
        for i in 0..n {
            let _ = writeln!(out, "a {s} {} {}", i + 1, self.cost_background[i]);
            let _ = writeln!(out, "a {} {t} {}", i + 1, self.cost_object[i]);
        }
        for &(i, j, w) in &self.edges {
            let _ = writeln!(out, "a {} {} {w}", i + 1, j + 1);
            let _ = writeln!(out, "a {} {} {w}", j + 1, i + 1);
        }
        out
    }
}

fn check_inputs(image: &RgbImage, regions: &RegionMap, rw: &RegionWeights, object: &Gmm, background: &Gmm) -> Result<()> {
    if regions.width() != image.width() || regions.height() != image.height() {
        return Err(Error::InvalidInput("region map does not match the image".into()));
    }
    if rw.tlink.len() != regions.n_regions() {
        return Err(Error::InvalidInput("region weights do not match the region map".into()));
    }
    if object.k() == 0 || background.k() == 0 {
        return Err(Error::InvalidInput("empty mixture".into()));
    }
    Ok(())
}

/// Unary costs `(label 0, label 1)` before shifting.
fn unary(image: &RgbImage, regions: &RegionMap, rw: &RegionWeights, object: &Gmm, background: &Gmm, gamma: f64, i: usize) -> Result<(f64, f64)> {
    let x = image.color(i);
    let t = rw.tlink[regions.label(i)];
    let c0 = gamma * t.to_object - background.log_density(x);
    let c1 = gamma * t.to_background - object.log_density(x);
    if c0.is_nan() || c1.is_nan() || !c0.is_finite() || !c1.is_finite() {
        return Err(Error::Numerical(format!("non-finite unary cost at pixel {i}")));
    }
    Ok((c0, c1))
}

fn pair_weight(image: &RgbImage, regions: &RegionMap, rw: &RegionWeights, gamma: f64, eta: f64, beta: f64, i: usize, j: usize, d: f64) -> f64 {
    let nc = rw.pair_weight(regions.label(i), regions.label(j));
    let contrast = (-beta * color_dist2(image.color(i), image.color(j))).exp() / d;
    eta * (gamma * nc + contrast)
}

/// Pixel network for the combined energy. Forced pixels get a t-link of twice the total
/// remaining capacity toward their label.
#[allow(clippy::too_many_arguments)]
pub fn build_network(
    image: &RgbImage,
    regions: &RegionMap,
    rw: &RegionWeights,
    object: &Gmm,
    background: &Gmm,
    gamma: f64,
    eta: f64,
    hard: Option<&[Option<u8>]>,
) -> Result<FlowNetwork> {
    check_inputs(image, regions, rw, object, background)?;
    let n = image.len();
    if let Some(h) = hard {
        if h.len() != n {
            return Err(Error::InvalidInput("hard constraints do not cover the image".into()));
        }
    }
    let mut cost_background = Vec::with_capacity(n);
    let mut cost_object = Vec::with_capacity(n);
    let mut shift = Vec::with_capacity(n);
    for i in 0..n {
        let (c0, c1) = unary(image, regions, rw, object, background, gamma, i)?;
        let m = c0.min(c1);
        cost_background.push(c0 - m);
        cost_object.push(c1 - m);
        shift.push(m);
    }
    let beta = beta_constant(image);
    let mut edges = Vec::with_capacity(4 * n);
    for_each_pair(image.width(), image.height(), |i, j, d| {
        edges.push((i as u32, j as u32, pair_weight(image, regions, rw, gamma, eta, beta, i, j, d)));
    });
    if edges.iter().any(|e| !e.2.is_finite()) {
        return Err(Error::Numerical("non-finite pairwise capacity".into()));
    }

    if let Some(h) = hard {
        let mut total: f64 = edges.iter().map(|e| e.2).sum();
        for i in 0..n {
            total += match h[i] {
                Some(1) => cost_object[i],
                Some(_) => cost_background[i],
                None => cost_background[i] + cost_object[i],
            };
        }
        let surrogate = 2.0 * total + 1.0;
        for i in 0..n {
            match h[i] {
                Some(1) => cost_background[i] = surrogate,
                Some(_) => cost_object[i] = surrogate,
                None => {}
            }
        }
    }
    Ok(FlowNetwork {
        width: image.width(),
        height: image.height(),
        cost_background,
        cost_object,
        shift,
        edges,
    })
}

/// The combined energy of a labeling, evaluated directly from its definition.
#[allow(clippy::too_many_arguments)]
pub fn labeling_energy(
    image: &RgbImage,
    regions: &RegionMap,
    rw: &RegionWeights,
    object: &Gmm,
    background: &Gmm,
    gamma: f64,
    eta: f64,
    labeling: &[u8],
) -> Result<f64> {
    check_inputs(image, regions, rw, object, background)?;
    if labeling.len() != image.len() {
        return Err(Error::InvalidLabeling("labeling does not cover the image".into()));
    }
    let mut e = 0.0;
    for (i, &l) in labeling.iter().enumerate() {
        let (c0, c1) = unary(image, regions, rw, object, background, gamma, i)?;
        e += if l == 1 { c1 } else { c0 };
    }
    let beta = beta_constant(image);
    for_each_pair(image.width(), image.height(), |i, j, d| {
        if labeling[i] != labeling[j] {
            e += pair_weight(image, regions, rw, gamma, eta, beta, i, j, d);
        }
    });
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    /// 1 = object (source side).
    pub labeling: Vec<u8>,
    /// Capacity of the returned cut.
    pub cut_value: f64,
    /// Value of the maximum flow found by the solver.
    pub flow_value: f64,
}

/// Minimum cut; pixels not reachable from the source in the final residual graph get label 0.
pub fn max_flow_min_cut(net: &FlowNetwork) -> CutResult {
    let n = net.n_pixels();
    let mut g = FlowGraph::new(n);
    for i in 0..n {
        g.add_tweights(i, net.cost_background[i], net.cost_object[i]);
    }
    for &(i, j, w) in &net.edges {
        g.add_edge(i as usize, j as usize, w, w);
    }
    let flow_value = g.maxflow();
    let labeling: Vec<u8> = g.source_side().into_iter().map(u8::from).collect();
    CutResult {
        cut_value: net.cut_cost(&labeling),
        labeling,
        flow_value,
    }
}
