//! Candidate object/background leaves and the pruned-and-linked forest.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::{gmm_density, Gmm};
use crate::imagegraph::{RegionGraph, RegionMap};
use crate::nc::{NcResult, SeedSet};

/// Upper end of the rescaled background-density range.
pub const DENSITY_RESCALE_MAX: f64 = 100.0;

/// How region background densities are scaled before the similarity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    /// Linear map of the densities over all regions onto `[0, 100]`.
    #[default]
    Rescale,
    /// Raw mixture densities.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateSets {
    pub p_obj: BTreeSet<usize>,
    pub p_bkg: BTreeSet<usize>,
    pub b_set: BTreeSet<usize>,
    pub u_b: f64,
}

/// Region background densities `p_bkg(m(r))` in the chosen scale.
pub fn region_background_density(regions: &RegionMap, bkg_model: &Gmm, mode: DensityMode) -> Vec<f64> {
    let raw: Vec<f64> = regions
        .stats()
        .iter()
        .map(|s| gmm_density(s.mean_color, bkg_model))
        .collect();
    match mode {
        DensityMode::Literal => raw,
        DensityMode::Rescale => {
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                raw.iter()
                    .map(|d| (d - lo) / (hi - lo) * DENSITY_RESCALE_MAX)
                    .collect()
            } else {
                vec![0.0; raw.len()]
            }
        }
    }
}

/// Low-truth leaves of the background forest, split by similarity to the seed regions.
///
/// A leaf is low when its T is below the mean T over all regions. Similarity is
/// `exp(−(p(r) − u_B)² / 2δ_B²) > ε` with `u_B` the mean density over the seed regions.
#[allow(clippy::too_many_arguments)]
pub fn candidate_regions(
    nc: &NcResult,
    graph: &RegionGraph,
    regions: &RegionMap,
    bkg_model: &Gmm,
    seeds: &SeedSet,
    delta_b: f64,
    epsilon: f64,
    mode: DensityMode,
) -> Result<CandidateSets> {
    let n = nc.n_regions();
    if graph.n_regions() != n || regions.n_regions() != n {
        return Err(Error::InvalidInput(format!(
            "NC over {n} regions, graph over {}, region map over {}",
            graph.n_regions(),
            regions.n_regions()
        )));
    }
    if seeds.iter().any(|s| s >= n) || seeds.is_empty() {
        return Err(Error::InvalidInput("seed set does not fit the regions".into()));
    }
    let density = region_background_density(regions, bkg_model, mode);
    let u_b = seeds.iter().map(|s| density[s]).sum::<f64>() / seeds.len() as f64;
    let b_set: BTreeSet<usize> = (0..n)
        .filter(|&r| (-(density[r] - u_b).powi(2) / (2.0 * delta_b * delta_b)).exp() > epsilon)
        .collect();

    let tau = nc.mean_truth();
    let leaves = nc.forest.leaves();
    let mut sets = CandidateSets {
        b_set,
        u_b,
        ..Default::default()
    };
    for r in 0..n {
        if leaves[r] && nc.values[r].truth < tau {
            if sets.b_set.contains(&r) {
                sets.p_bkg.insert(r);
            } else {
                sets.p_obj.insert(r);
            }
        }
    }
    Ok(sets)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModifiedForest {
    pub npre: Vec<usize>,
    pub nrt: Vec<usize>,
    pub aux: Vec<BTreeSet<usize>>,
}

impl ModifiedForest {
    /// The forest of `nc` with nothing pruned or linked.
    pub fn unmodified(nc: &NcResult) -> Self {
        Self {
            npre: nc.forest.parent.clone(),
            nrt: nc.forest.root.clone(),
            aux: vec![BTreeSet::new(); nc.n_regions()],
        }
    }

    pub fn n_regions(&self) -> usize {
        self.npre.len()
    }

    /// `(r, npre_r)` for every region with a parent.
    pub fn parent_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.npre
            .iter()
            .enumerate()
            .filter(|&(r, &p)| p != r)
            .map(|(r, &p)| (r, p))
    }

    /// Auxiliary edges with `r < g`.
    pub fn aux_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.aux
            .iter()
            .enumerate()
            .flat_map(|(r, set)| set.iter().filter(move |&&g| g > r).map(move |&g| (r, g)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Detaches every `P^bkg` region into its own tree and links adjacent `P^obj` regions that
/// share a root.
pub fn update_forest(nc: &NcResult, cands: &CandidateSets, graph: &RegionGraph) -> Result<ModifiedForest> {
    let n = nc.n_regions();
    if graph.n_regions() != n {
        return Err(Error::InvalidInput("graph does not match NC result".into()));
    }
    if cands.p_obj.iter().chain(&cands.p_bkg).any(|&r| r >= n) {
        return Err(Error::InvalidInput("candidate region out of range".into()));
    }
    let mut forest = ModifiedForest::unmodified(nc);
    for &r in &cands.p_bkg {
        forest.npre[r] = r;
        forest.nrt[r] = r;
    }
    for &r in &cands.p_obj {
        for &(g, _) in graph.neighbors(r) {
            if cands.p_obj.contains(&g) && nc.forest.root[r] == nc.forest.root[g] {
                forest.aux[r].insert(g);
                forest.aux[g].insert(r);
            }
        }
    }
    Ok(forest)
}

#[derive(Serialize)]
struct OverlayExport<'a> {
    candidates: &'a CandidateSets,
    forest: &'a ModifiedForest,
    pruned: Vec<(usize, usize)>,
    aux_edges: Vec<(usize, usize)>,
}

/// Candidates plus modified forest for overlays; `pruned` lists the detached `(r, old parent)`.
pub fn overlay_json(nc: &NcResult, cands: &CandidateSets, forest: &ModifiedForest) -> Result<String> {
    let pruned = cands
        .p_bkg
        .iter()
        .filter(|&&r| nc.forest.parent[r] != r)
        .map(|&r| (r, nc.forest.parent[r]))
        .collect();
    Ok(serde_json::to_string_pretty(&OverlayExport {
        candidates: cands,
        forest,
        pruned,
        aux_edges: forest.aux_edges().collect(),
    })?)
}
