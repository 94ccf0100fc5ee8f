//! Neutro-connectedness between regions and background seeds.
//!
//! Connectedness of a path is the pair (T, I): T is the weakest edge truth along it, I the
//! largest edge indeterminacy. Paths compare lexicographically on ⟨T, 1 − I⟩. [`compute_nc`]
//! grows a best-path forest from the seeds in max-priority order of that key.

mod oracle;

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{encode_rgb_png, RgbImage};
use crate::imagegraph::{RegionGraph, RegionMap};

pub use oracle::{brute_force_nc, ORACLE_REGION_LIMIT};

/// Lexicographic key ⟨T, 1 − I⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexKey(pub f64, pub f64);

/// `a ⪯ b`: `a.0 < b.0`, or equal first components and `a.1 <= b.1`.
pub fn lex_leq(a: LexKey, b: LexKey) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 <= b.1)
}

/// Strict order: `a ⪯ b` and `a ≠ b`.
pub fn lex_lt(a: LexKey, b: LexKey) -> bool {
    lex_leq(a, b) && a != b
}

/// Truth and indeterminacy of connectedness; falsity is `1 - truth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcPair {
    #[serde(rename = "t")]
    pub truth: f64,
    #[serde(rename = "i")]
    pub indeterminacy: f64,
}

impl NcPair {
    pub const UNREACHED: NcPair = NcPair {
        truth: 0.0,
        indeterminacy: 0.0,
    };

    pub fn new(truth: f64, indeterminacy: f64) -> Self {
        Self {
            truth,
            indeterminacy,
        }
    }

    pub fn falsity(&self) -> f64 {
        1.0 - self.truth
    }

    pub fn key(&self) -> LexKey {
        LexKey(self.truth, 1.0 - self.indeterminacy)
    }

    /// Extends a path ending here by one edge.
    pub fn extend(&self, truth: f64, indeterminacy: f64) -> Self {
        Self {
            truth: self.truth.min(truth),
            indeterminacy: self.indeterminacy.max(indeterminacy),
        }
    }

    /// Order on ⟨T, 1 − I⟩, evaluated on I directly so no rounding from `1 - I` enters.
    pub fn strength_cmp(&self, other: &Self) -> Ordering {
        self.truth
            .total_cmp(&other.truth)
            .then_with(|| other.indeterminacy.total_cmp(&self.indeterminacy))
    }

    pub fn stronger_than(&self, other: &Self) -> bool {
        self.strength_cmp(other) == Ordering::Greater
    }
}

/// Non-empty set of seed region indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet(BTreeSet<usize>);

impl SeedSet {
    pub fn new(regions: impl IntoIterator<Item = usize>, n_regions: usize) -> Result<Self> {
        let set: BTreeSet<usize> = regions.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidInput("seed set is empty".into()));
        }
        if let Some(&bad) = set.iter().find(|&&r| r >= n_regions) {
            return Err(Error::InvalidInput(format!(
                "seed region {bad} outside [0, {n_regions})"
            )));
        }
        Ok(Self(set))
    }

    pub fn contains(&self, r: usize) -> bool {
        self.0.contains(&r)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    fn check(&self, n_regions: usize) -> Result<()> {
        match self.0.iter().next_back() {
            Some(&max) if max < n_regions => Ok(()),
            Some(&max) => Err(Error::InvalidInput(format!(
                "seed region {max} outside [0, {n_regions})"
            ))),
            None => Err(Error::InvalidInput("seed set is empty".into())),
        }
    }
}

/// Parent and root links of the best-path forest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NcForest {
    pub parent: Vec<usize>,
    pub root: Vec<usize>,
}

impl NcForest {
    fn identity(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            root: (0..n).collect(),
        }
    }

    /// Regions on the parent chain from the root down to `r`; `None` on a cycle.
    pub fn path_from_root(&self, r: usize) -> Option<Vec<usize>> {
        let mut path = vec![r];
        let mut cur = r;
        while self.parent[cur] != cur {
            cur = self.parent[cur];
            path.push(cur);
            if path.len() > self.parent.len() {
                return None;
            }
        }
        path.reverse();
        Some(path)
    }

    /// True when `r` is nobody's parent.
    pub fn leaves(&self) -> Vec<bool> {
        let mut leaf = vec![true; self.parent.len()];
        for (r, &p) in self.parent.iter().enumerate() {
            if p != r {
                leaf[p] = false;
            }
        }
        leaf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcResult {
    pub values: Vec<NcPair>,
    pub forest: NcForest,
    pub seeds: SeedSet,
    pub reached: Vec<bool>,
}

#[derive(Serialize)]
struct NcRecord {
    id: usize,
    t: f64,
    i: f64,
    pre: usize,
    rt: usize,
    reached: bool,
}

#[derive(Serialize)]
struct NcExport<'a> {
    n_regions: usize,
    seeds: Vec<usize>,
    mean_indeterminacy: f64,
    regions: &'a [NcRecord],
}

impl NcResult {
    pub fn n_regions(&self) -> usize {
        self.values.len()
    }

    pub fn mean_truth(&self) -> f64 {
        self.values.iter().map(|v| v.truth).sum::<f64>() / self.values.len() as f64
    }

    pub fn mean_indeterminacy(&self) -> f64 {
        self.values.iter().map(|v| v.indeterminacy).sum::<f64>() / self.values.len() as f64
    }

    /// Per-region `t, i, pre, rt` as JSON.
    pub fn to_json(&self) -> Result<String> {
        let regions: Vec<NcRecord> = (0..self.n_regions())
            .map(|r| NcRecord {
                id: r,
                t: self.values[r].truth,
                i: self.values[r].indeterminacy,
                pre: self.forest.parent[r],
                rt: self.forest.root[r],
                reached: self.reached[r],
            })
            .collect();
        Ok(serde_json::to_string_pretty(&NcExport {
            n_regions: self.n_regions(),
            seeds: self.seeds.iter().collect(),
            mean_indeterminacy: self.mean_indeterminacy(),
            regions: &regions,
        })?)
    }

    /// False-color map of T per pixel (blue = 0 through red = 1).
    pub fn truth_map_png(&self, regions: &RegionMap) -> Result<Vec<u8>> {
        if regions.n_regions() != self.n_regions() {
            return Err(Error::InvalidInput("region map does not match NC result".into()));
        }
        let img = RgbImage::from_fn(regions.width(), regions.height(), |x, y| {
            jet(self.values[regions.label(y * regions.width() + x)].truth)
        })?;
        encode_rgb_png(&img)
    }
}

/// Jet-style colormap for a value in [0, 1].
pub fn jet(v: f64) -> [u8; 3] {
    let v = v.clamp(0.0, 1.0);
    let channel = |center: f64| ((1.5 - (4.0 * v - center).abs()).clamp(0.0, 1.0) * 255.0).round() as u8;
    [channel(3.0), channel(2.0), channel(1.0)]
}

/// Strength of a region path: `(min μ_T, max μ_I)` over consecutive pairs.
pub fn path_strength(path: &[usize], graph: &RegionGraph) -> Result<NcPair> {
    if path.len() < 2 {
        return Err(Error::InvalidInput("path needs at least two regions".into()));
    }
    let mut acc = NcPair::new(1.0, 0.0);
    for w in path.windows(2) {
        let m = graph.edge(w[0], w[1]).ok_or(Error::InvalidPath(w[0], w[1]))?;
        acc = acc.extend(m.truth, m.indeterminacy);
    }
    Ok(acc)
}

#[derive(Debug, PartialEq)]
struct QueueEntry {
    value: NcPair,
    region: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .strength_cmp(&other.value)
            .then_with(|| other.region.cmp(&self.region))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-path propagation from the seed regions.
///
/// Seeds start at `(1, h(seed))` and are never relaxed. The strongest queued region is
/// extracted (equal keys: lower index first) and each neighbor is overwritten when the path
/// through the extracted region is strictly stronger. Stale queue entries are skipped.
pub fn compute_nc(graph: &RegionGraph, seeds: &SeedSet) -> Result<NcResult> {
    let n = graph.n_regions();
    seeds.check(n)?;
    let mut values = vec![NcPair::UNREACHED; n];
    let mut forest = NcForest::identity(n);
    let mut reached = vec![false; n];
    let mut queue = BinaryHeap::new();
    for s in seeds.iter() {
        values[s] = NcPair::new(1.0, graph.self_indeterminacy(s));
        reached[s] = true;
        queue.push(QueueEntry {
            value: values[s],
            region: s,
        });
    }
    while let Some(QueueEntry { value, region: p }) = queue.pop() {
        if value != values[p] {
            continue;
        }
        for &(q, m) in graph.neighbors(p) {
            if seeds.contains(q) {
                continue;
            }
            let candidate = value.extend(m.truth, m.indeterminacy);
            if candidate.stronger_than(&values[q]) {
                values[q] = candidate;
                forest.parent[q] = p;
                forest.root[q] = forest.root[p];
                reached[q] = true;
                queue.push(QueueEntry {
                    value: candidate,
                    region: q,
                });
            }
        }
    }
    Ok(NcResult {
        values,
        forest,
        seeds: seeds.clone(),
        reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagegraph::EdgeMeasure;

    fn e(p: usize, q: usize, t: f64, i: f64) -> (usize, usize, EdgeMeasure) {
        (
            p,
            q,
            EdgeMeasure {
                truth: t,
                indeterminacy: i,
            },
        )
    }

    #[test]
    fn lex_order_examples() {
        assert!(lex_leq(LexKey(0.4, 0.9), LexKey(0.6, 0.1)));
        assert!(lex_leq(LexKey(0.5, 0.8), LexKey(0.5, 0.8)));
        assert!(!lex_leq(LexKey(0.5, 0.9), LexKey(0.5, 0.8)));
        assert!(!lex_lt(LexKey(0.5, 0.8), LexKey(0.5, 0.8)));
        assert!(lex_lt(LexKey(0.5, 0.8), LexKey(0.5, 0.9)));
        assert!(lex_lt(LexKey(0.3, 0.5), LexKey(0.5, 0.5)));
    }

    #[test]
    fn pair_order_matches_key_order() {
        let pairs = [(0.3, 0.2), (0.3, 0.7), (0.8, 0.0), (0.8, 0.5), (0.3, 0.2)];
        for a in pairs {
            for b in pairs {
                let (pa, pb) = (NcPair::new(a.0, a.1), NcPair::new(b.0, b.1));
                assert_eq!(pb.stronger_than(&pa), lex_lt(pa.key(), pb.key()), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn path_strength_examples() {
        let g = RegionGraph::from_edges(
            vec![0.0; 4],
            &[e(0, 1, 0.9, 0.0), e(1, 2, 0.6, 0.0), e(2, 3, 0.8, 0.0)],
        )
        .unwrap();
        let s = path_strength(&[0, 1, 2, 3], &g).unwrap();
        assert_eq!((s.truth, s.indeterminacy), (0.6, 0.0));
        assert!((s.falsity() - 0.4).abs() < 1e-15);

        let g = RegionGraph::from_edges(vec![0.0; 2], &[e(0, 1, 0.7, 0.3)]).unwrap();
        let s = path_strength(&[0, 1], &g).unwrap();
        assert_eq!((s.truth, s.indeterminacy), (0.7, 0.3));
        assert!((s.falsity() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn path_strength_errors() {
        let g = RegionGraph::from_edges(vec![0.0; 3], &[e(0, 1, 0.7, 0.3)]).unwrap();
        assert!(matches!(path_strength(&[0, 2], &g), Err(Error::InvalidPath(0, 2))));
        assert!(path_strength(&[0], &g).is_err());
    }

    // Chain of regions with per-edge truth 0.9; a noisy region in the middle raises the
    // indeterminacy of its edges to 0.1. T never changes along the chain; I jumps to 0.1
    // once the path crosses the noisy region.
    #[test]
    fn indeterminacy_rises_past_noisy_node() {
        let g = RegionGraph::from_edges(
            vec![0.0, 0.0, 0.1, 0.0, 0.0],
            &[e(0, 1, 0.9, 0.0), e(1, 2, 0.9, 0.1), e(2, 3, 0.9, 0.1), e(3, 4, 0.9, 0.0)],
        )
        .unwrap();
        let nc = compute_nc(&g, &SeedSet::new([0], 5).unwrap()).unwrap();
        let t: Vec<f64> = nc.values.iter().map(|v| v.truth).collect();
        let i: Vec<f64> = nc.values.iter().map(|v| v.indeterminacy).collect();
        assert_eq!(t, vec![1.0, 0.9, 0.9, 0.9, 0.9]);
        assert_eq!(i, vec![0.0, 0.0, 0.1, 0.1, 0.1]);
        assert_eq!(path_strength(&[0, 1, 2, 3, 4], &g).unwrap(), NcPair::new(0.9, 0.1));
    }

    #[test]
    fn chain_example() {
        let g = RegionGraph::from_edges(vec![0.0; 3], &[e(0, 1, 0.9, 0.0), e(1, 2, 0.6, 0.0)])
            .unwrap();
        let nc = compute_nc(&g, &SeedSet::new([0], 3).unwrap()).unwrap();
        assert_eq!(nc.values[1].truth, 0.9);
        assert_eq!(nc.values[2].truth, 0.6);
        assert_eq!(nc.forest.parent[2], 1);
        assert_eq!(nc.forest.root[2], 0);
    }

    // s=0, a=1, b=2, t=3. Simple paths to t: s-a-t scores (0.5, 0.2) and s-b-t scores
    // (0.5, 0). Equal T, so the indeterminacy-free route through b wins.
    #[test]
    fn diamond_prefers_lower_indeterminacy() {
        let g = RegionGraph::from_edges(
            vec![0.0; 4],
            &[e(0, 1, 0.9, 0.2), e(0, 2, 0.5, 0.0), e(1, 3, 0.5, 0.0), e(2, 3, 0.9, 0.0)],
        )
        .unwrap();
        let seeds = SeedSet::new([0], 4).unwrap();
        let nc = compute_nc(&g, &seeds).unwrap();
        assert_eq!(nc.values[3], NcPair::new(0.5, 0.0));
        assert_eq!(nc.forest.parent[3], 2);
        assert_eq!(brute_force_nc(&g, &seeds).unwrap(), nc.values);
    }

    #[test]
    fn unreached_regions_stay_zero() {
        let g = RegionGraph::from_edges(vec![0.0; 3], &[e(0, 1, 0.4, 0.1)]).unwrap();
        let nc = compute_nc(&g, &SeedSet::new([0], 3).unwrap()).unwrap();
        assert_eq!(nc.values[2], NcPair::UNREACHED);
        assert!(!nc.reached[2]);
        assert_eq!((nc.forest.parent[2], nc.forest.root[2]), (2, 2));
    }

    #[test]
    fn seeds_are_roots_with_self_indeterminacy() {
        let g = RegionGraph::from_edges(vec![0.3, 0.0, 0.1], &[e(0, 1, 1.0, 0.0), e(1, 2, 1.0, 0.0)])
            .unwrap();
        let nc = compute_nc(&g, &SeedSet::new([0, 2], 3).unwrap()).unwrap();
        assert_eq!(nc.values[0], NcPair::new(1.0, 0.3));
        assert_eq!(nc.values[2], NcPair::new(1.0, 0.1));
        assert_eq!(nc.forest.parent[0], 0);
        assert_eq!(nc.forest.parent[2], 2);
        // Region 1 ties on T = 1 and takes the lower-indeterminacy seed.
        assert_eq!(nc.values[1], NcPair::new(1.0, 0.1));
        assert_eq!(nc.forest.root[1], 2);
    }

    #[test]
    fn empty_or_out_of_range_seeds_rejected() {
        assert!(SeedSet::new([], 3).is_err());
        assert!(SeedSet::new([3], 3).is_err());
        let g = RegionGraph::from_edges(vec![0.0; 2], &[e(0, 1, 0.5, 0.0)]).unwrap();
        let seeds = SeedSet::new([4], 5).unwrap();
        assert!(compute_nc(&g, &seeds).is_err());
    }

    #[test]
    fn forest_path_reproduces_values() {
        let g = RegionGraph::from_edges(
            vec![0.05, 0.0, 0.0, 0.0, 0.0],
            &[
                e(0, 1, 0.8, 0.1),
                e(1, 2, 0.7, 0.3),
                e(0, 3, 0.6, 0.0),
                e(3, 2, 0.9, 0.0),
                e(2, 4, 0.2, 0.4),
            ],
        )
        .unwrap();
        let nc = compute_nc(&g, &SeedSet::new([0], 5).unwrap()).unwrap();
        for r in 1..5 {
            let path = nc.forest.path_from_root(r).unwrap();
            let s = path_strength(&path, &g).unwrap();
            let with_seed = s.extend(1.0, g.self_indeterminacy(path[0]));
            assert_eq!(with_seed, nc.values[r], "region {r}");
        }
    }

    #[test]
    fn json_export_lists_every_region() {
        let g = RegionGraph::from_edges(vec![0.0; 2], &[e(0, 1, 0.5, 0.25)]).unwrap();
        let nc = compute_nc(&g, &SeedSet::new([0], 2).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&nc.to_json().unwrap()).unwrap();
        assert_eq!(v["regions"][1]["t"], 0.5);
        assert_eq!(v["regions"][1]["i"], 0.25);
        assert_eq!(v["regions"][1]["pre"], 0);
        assert_eq!(v["seeds"][0], 0);
    }

    #[test]
    fn jet_endpoints() {
        assert_eq!(jet(0.0), [0, 0, 128]);
        assert_eq!(jet(1.0), [128, 0, 0]);
        assert_eq!(jet(0.5), [128, 255, 128]);
    }
}
