//! Pixel-level energy combining appearance and region connectedness, and its min-cut.

mod maxflow;
mod network;

pub use maxflow::FlowGraph;
pub use network::{build_network, labeling_energy, max_flow_min_cut, CutResult, FlowNetwork, HardConstraints};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ModifiedForest;
use crate::image::RgbImage;
use crate::nc::NcResult;

/// `exp(−Ī² / 2δ_γ²)` with Ī the mean region indeterminacy.
pub fn compute_gamma(nc: &NcResult, delta_gamma: f64) -> f64 {
    gamma_from_mean(nc.mean_indeterminacy(), delta_gamma)
}

pub fn gamma_from_mean(mean_indeterminacy: f64, delta_gamma: f64) -> f64 {
    (-mean_indeterminacy.powi(2) / (2.0 * delta_gamma * delta_gamma)).exp()
}

/// Terminal weights of one region. `to_object` (w(r,1) = −ln T) is paid when the region is
/// labeled background; `to_background` (w(r,0) = −ln(1 − T)) when labeled object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TLink {
    pub to_object: f64,
    pub to_background: f64,
}

impl TLink {
    pub fn from_truth(truth: f64, t_clamp: f64) -> Self {
        let t = truth.clamp(t_clamp, 1.0 - t_clamp);
        Self {
            to_object: -t.ln(),
            to_background: -(1.0 - t).ln(),
        }
    }

    /// Cost of assigning `label` (1 = object).
    pub fn label_cost(&self, label: u8) -> f64 {
        if label == 1 {
            self.to_background
        } else {
            self.to_object
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Parent,
    Aux,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NLink {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub kind: LinkKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionWeights {
    pub tlink: Vec<TLink>,
    /// Sorted by `(a, b)` with `a < b`.
    pub nlink: Vec<NLink>,
    pub lambda: f64,
}

impl RegionWeights {
    /// Weight between two regions; λ inside one region, 0 without a forest edge.
    pub fn pair_weight(&self, p: usize, q: usize) -> f64 {
        if p == q {
            return self.lambda;
        }
        let key = (p.min(q), p.max(q));
        match self.nlink.binary_search_by(|l| (l.a, l.b).cmp(&key)) {
            Ok(k) => self.nlink[k].weight,
            Err(_) => 0.0,
        }
    }

    /// Costs of the four labelings of a parent `t` and child `r`:
    /// `[r=0 t=1, r=1 t=0, both 0, both 1]`.
    pub fn local_cut_costs(&self, r: usize, t: usize) -> [f64; 4] {
        let (wr, wt, w) = (self.tlink[r], self.tlink[t], self.pair_weight(r, t));
        [
            wr.to_object + wt.to_background + w,
            wr.to_background + wt.to_object + w,
            wr.to_object + wt.to_object,
            wr.to_background + wt.to_background,
        ]
    }
}

/// t-links from the clamped truths; parent edges `λ·exp(−ΔT²/2δ²)`, auxiliary edges λ, with
/// λ one more than the largest t-link.
pub fn region_weights(nc: &NcResult, forest: &ModifiedForest, delta_nc: f64, t_clamp: f64) -> Result<RegionWeights> {
    let n = nc.n_regions();
    if forest.n_regions() != n {
        return Err(Error::InvalidInput("forest does not match NC result".into()));
    }
    let tlink: Vec<TLink> = nc
        .values
        .iter()
        .map(|v| TLink::from_truth(v.truth, t_clamp))
        .collect();
    let lambda = tlink
        .iter()
        .map(|t| t.to_object.max(t.to_background))
        .fold(0.0, f64::max)
        + 1.0;
    let mut nlink: Vec<NLink> = forest
        .parent_edges()
        .map(|(r, t)| {
            let dt = nc.values[r].truth - nc.values[t].truth;
            NLink {
                a: r.min(t),
                b: r.max(t),
                weight: lambda * (-dt * dt / (2.0 * delta_nc * delta_nc)).exp(),
                kind: LinkKind::Parent,
            }
        })
        .chain(forest.aux_edges().map(|(a, b)| NLink {
            a,
            b,
            weight: lambda,
            kind: LinkKind::Aux,
        }))
        .collect();
    nlink.sort_by_key(|l| (l.a, l.b));
    nlink.dedup_by_key(|l| (l.a, l.b));
    Ok(RegionWeights { tlink, nlink, lambda })
}

/// 8-neighbour offsets covering each unordered pair once, with their pixel distance.
pub(crate) const FORWARD_NEIGHBOURS: [(isize, isize, f64); 4] = [
    (1, 0, 1.0),
    (-1, 1, std::f64::consts::SQRT_2),
    (0, 1, 1.0),
    (1, 1, std::f64::consts::SQRT_2),
];

pub(crate) fn for_each_pair(width: usize, height: usize, mut f: impl FnMut(usize, usize, f64)) {
    for y in 0..height {
        for x in 0..width {
            for &(dx, dy, d) in &FORWARD_NEIGHBOURS {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                f(y * width + x, ny as usize * width + nx as usize, d);
            }
        }
    }
}

fn color_dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// `1 / (2·mean ‖x_i − x_j‖²)` over 8-neighbour pairs; 0 for a constant image.
pub fn beta_constant(image: &RgbImage) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for_each_pair(image.width(), image.height(), |i, j, _| {
        sum += color_dist2(image.color(i), image.color(j));
        count += 1;
    });
    if count == 0 || sum == 0.0 {
        0.0
    } else {
        1.0 / (2.0 * sum / count as f64)
    }
}
