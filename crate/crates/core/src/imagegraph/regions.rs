use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::filters::{inhomogeneity_map, DEFAULT_WINDOW_RADIUS};
use crate::error::{Error, Result};
use crate::image::{decode_gray16_png, encode_gray16_png, RgbImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub pixel_count: usize,
    pub mean_color: [f64; 3],
    /// Mean per-pixel inhomogeneity over the region, in [0, 1].
    pub inhomogeneity: f64,
}

/// Per-pixel region index plus per-region statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    stats: Vec<RegionStats>,
}

#[derive(Serialize, Deserialize)]
struct StatsSidecar {
    width: usize,
    height: usize,
    n_regions: usize,
    regions: Vec<RegionRecord>,
}

#[derive(Serialize, Deserialize)]
struct RegionRecord {
    id: usize,
    #[serde(flatten)]
    stats: RegionStats,
}

impl RegionMap {
    /// Builds region statistics for an explicit labeling. Labels must cover `0..N` with every
    /// index used at least once; connectivity is not required here (see [`Self::is_connected`]).
    pub fn from_labels(image: &RgbImage, labels: Vec<u32>) -> Result<Self> {
        let inhom = inhomogeneity_map(image, DEFAULT_WINDOW_RADIUS)?;
        Self::from_labels_with_map(image, labels, &inhom)
    }

    pub fn from_labels_with_map(image: &RgbImage, labels: Vec<u32>, inhom: &[f64]) -> Result<Self> {
        if labels.len() != image.len() || inhom.len() != image.len() {
            return Err(Error::InvalidInput(
                "label map does not match image dimensions".into(),
            ));
        }
        let n = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut count = vec![0usize; n];
        let mut sum = vec![[0.0f64; 3]; n];
        let mut hsum = vec![0.0f64; n];
        for (i, &l) in labels.iter().enumerate() {
            let l = l as usize;
            count[l] += 1;
            let c = image.color(i);
            for k in 0..3 {
                sum[l][k] += c[k];
            }
            hsum[l] += inhom[i];
        }
        if let Some(empty) = count.iter().position(|&c| c == 0) {
            return Err(Error::InvalidInput(format!("region {empty} owns no pixels")));
        }
        let stats = (0..n)
            .map(|r| {
                let c = count[r] as f64;
                RegionStats {
                    pixel_count: count[r],
                    mean_color: [sum[r][0] / c, sum[r][1] / c, sum[r][2] / c],
                    inhomogeneity: (hsum[r] / c).clamp(0.0, 1.0),
                }
            })
            .collect();
        Ok(Self {
            width: image.width(),
            height: image.height(),
            labels,
            stats,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_regions(&self) -> usize {
        self.stats.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, pixel: usize) -> usize {
        self.labels[pixel] as usize
    }

    pub fn stats(&self) -> &[RegionStats] {
        &self.stats
    }

    pub fn region(&self, r: usize) -> &RegionStats {
        &self.stats[r]
    }

    /// Pixel indices grouped by region, each list in raster order.
    pub fn pixels_by_region(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .stats
            .iter()
            .map(|s| Vec::with_capacity(s.pixel_count))
            .collect();
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    /// True when every region is a single 4-connected component.
    pub fn is_connected(&self) -> bool {
        let (w, h) = (self.width, self.height);
        let mut seen = vec![false; self.labels.len()];
        let mut visited_regions = vec![false; self.n_regions()];
        let mut queue = VecDeque::new();
        for start in 0..self.labels.len() {
            if seen[start] {
                continue;
            }
            let l = self.labels[start];
            if visited_regions[l as usize] {
                return false;
            }
            visited_regions[l as usize] = true;
            seen[start] = true;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                let (x, y) = (i % w, i / w);
                let mut visit = |j: usize| {
                    if !seen[j] && self.labels[j] == l {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < w {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - w);
                }
                if y + 1 < h {
                    visit(i + w);
                }
            }
        }
        true
    }

    /// 16-bit grayscale PNG whose pixel values are region indices.
    pub fn to_label_png(&self) -> Result<Vec<u8>> {
        if self.n_regions() > u16::MAX as usize + 1 {
            return Err(Error::InvalidInput(format!(
                "{} regions do not fit a 16-bit label image",
                self.n_regions()
            )));
        }
        let values: Vec<u16> = self.labels.iter().map(|&l| l as u16).collect();
        encode_gray16_png(self.width, self.height, &values)
    }

    pub fn stats_json(&self) -> Result<String> {
        let sidecar = StatsSidecar {
            width: self.width,
            height: self.height,
            n_regions: self.n_regions(),
            regions: self
                .stats
                .iter()
                .cloned()
                .enumerate()
                .map(|(id, stats)| RegionRecord { id, stats })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&sidecar)?)
    }

    /// Rebuilds a map from an exported label PNG and its JSON sidecar.
    pub fn from_exports(label_png: &[u8], stats_json: &str) -> Result<Self> {
        let (width, height, values) = decode_gray16_png(label_png)?;
        let sidecar: StatsSidecar = serde_json::from_str(stats_json)?;
        if sidecar.width != width || sidecar.height != height {
            return Err(Error::InvalidInput("sidecar dimensions differ from label image".into()));
        }
        let labels: Vec<u32> = values.into_iter().map(u32::from).collect();
        if labels.iter().any(|&l| l as usize >= sidecar.n_regions) {
            return Err(Error::InvalidInput("label exceeds sidecar region count".into()));
        }
        Ok(Self {
            width,
            height,
            labels,
            stats: sidecar.regions.into_iter().map(|r| r.stats).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMeasure {
    /// Connectedness strength between adjacent regions, in [0, 1].
    pub truth: f64,
    /// Indeterminacy of that connectedness, in [0, 1].
    pub indeterminacy: f64,
}

/// Sparse symmetric region adjacency with per-edge truth and indeterminacy.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    neighbors: Vec<Vec<(usize, EdgeMeasure)>>,
    self_indeterminacy: Vec<f64>,
}

/// Truth of connectedness between two mean colors: `exp(-‖a-b‖² / 2δ²)`.
pub fn truth_measure(a: [f64; 3], b: [f64; 3], delta_t: f64) -> f64 {
    let d2: f64 = (0..3).map(|k| (a[k] - b[k]).powi(2)).sum();
    (-d2 / (2.0 * delta_t * delta_t)).exp()
}

impl RegionGraph {
    /// Explicit construction; `edges` lists each unordered pair once.
    pub fn from_edges(
        self_indeterminacy: Vec<f64>,
        edges: &[(usize, usize, EdgeMeasure)],
    ) -> Result<Self> {
        let n = self_indeterminacy.len();
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !self_indeterminacy.iter().all(|&v| unit(v)) {
            return Err(Error::InvalidInput("self indeterminacy outside [0, 1]".into()));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(p, q, m) in edges {
            if p >= n || q >= n || p == q {
                return Err(Error::InvalidInput(format!("bad edge ({p}, {q})")));
            }
            if !unit(m.truth) || !unit(m.indeterminacy) {
                return Err(Error::InvalidInput(format!("edge ({p}, {q}) measure outside [0, 1]")));
            }
            neighbors[p].push((q, m));
            neighbors[q].push((p, m));
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(q, _)| q);
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidInput("duplicate edge".into()));
            }
        }
        Ok(Self {
            neighbors,
            self_indeterminacy,
        })
    }

    pub fn n_regions(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, p: usize) -> &[(usize, EdgeMeasure)] {
        &self.neighbors[p]
    }

    pub fn edge(&self, p: usize, q: usize) -> Option<EdgeMeasure> {
        let list = self.neighbors.get(p)?;
        list.binary_search_by_key(&q, |&(r, _)| r)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn self_indeterminacy(&self, p: usize) -> f64 {
        self.self_indeterminacy[p]
    }

    /// Each unordered edge once, as `(p, q, measure)` with `p < q`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeMeasure)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(p, list)| {
            list.iter()
                .filter(move |&&(q, _)| q > p)
                .map(move |&(q, m)| (p, q, m))
        })
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Copy with every indeterminacy (edges and diagonal) forced to zero.
    pub fn without_indeterminacy(&self) -> Self {
        Self {
            neighbors: self
                .neighbors
                .iter()
                .map(|list| {
                    list.iter()
                        .map(|&(q, m)| {
                            (
                                q,
                                EdgeMeasure {
                                    truth: m.truth,
                                    indeterminacy: 0.0,
                                },
                            )
                        })
                        .collect()
                })
                .collect(),
            self_indeterminacy: vec![0.0; self.self_indeterminacy.len()],
        }
    }
}

/// Region adjacency (4-neighborhood) with truth from mean colors and indeterminacy from
/// region inhomogeneity.
pub fn build_region_graph(image: &RgbImage, regions: &RegionMap, delta_t: f64) -> Result<RegionGraph> {
    if image.width() != regions.width() || image.height() != regions.height() {
        return Err(Error::InvalidInput("region map does not match image".into()));
    }
    if !(delta_t > 0.0) {
        return Err(Error::InvalidInput("delta_t must be positive".into()));
    }
    let (w, h) = (regions.width(), regions.height());
    let labels = regions.labels();
    let mut pairs = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let a = labels[i];
            if x + 1 < w && labels[i + 1] != a {
                pairs.push((a.min(labels[i + 1]), a.max(labels[i + 1])));
            }
            if y + 1 < h && labels[i + w] != a {
                pairs.push((a.min(labels[i + w]), a.max(labels[i + w])));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let stats = regions.stats();
    let edges: Vec<_> = pairs
        .into_iter()
        .map(|(p, q)| {
            let (p, q) = (p as usize, q as usize);
            let measure = EdgeMeasure {
                truth: truth_measure(stats[p].mean_color, stats[q].mean_color, delta_t),
                indeterminacy: stats[p].inhomogeneity.max(stats[q].inhomogeneity),
            };
            (p, q, measure)
        })
        .collect();
    RegionGraph::from_edges(stats.iter().map(|s| s.inhomogeneity).collect(), &edges)
}
