use super::{NcPair, SeedSet};
use crate::error::{Error, Result};
use crate::imagegraph::RegionGraph;

/// Largest graph [`brute_force_nc`] will enumerate.
pub const ORACLE_REGION_LIMIT: usize = 12;

/// Exhaustive neutro-connectedness: for every region, the lexicographic maximum over all
/// simple paths from a seed. A path starts at `(1, h(seed))` like the seed itself, ends at the
/// first seed it meets, and is scored by min truth / max indeterminacy of its edges. Seeds
/// keep `(1, h(seed))`; regions without a path keep `(0, 0)`.
pub fn brute_force_nc(graph: &RegionGraph, seeds: &SeedSet) -> Result<Vec<NcPair>> {
    let n = graph.n_regions();
    if n > ORACLE_REGION_LIMIT {
        return Err(Error::TooLarge(n, ORACLE_REGION_LIMIT));
    }
    seeds.check(n)?;
    let mut best = vec![NcPair::UNREACHED; n];
    for s in seeds.iter() {
        best[s] = NcPair::new(1.0, graph.self_indeterminacy(s));
    }
    let mut on_path = vec![false; n];
    for s in seeds.iter() {
        on_path[s] = true;
        walk(graph, seeds, s, NcPair::new(1.0, graph.self_indeterminacy(s)), &mut on_path, &mut best);
        on_path[s] = false;
    }
    Ok(best)
}

fn walk(
    graph: &RegionGraph,
    seeds: &SeedSet,
    at: usize,
    strength: NcPair,
    on_path: &mut [bool],
    best: &mut [NcPair],
) {
    for &(q, m) in graph.neighbors(at) {
        if on_path[q] || seeds.contains(q) {
            continue;
        }
        let next = strength.extend(m.truth, m.indeterminacy);
        if next.stronger_than(&best[q]) {
            best[q] = next;
        }
        on_path[q] = true;
        walk(graph, seeds, q, next, on_path, best);
        on_path[q] = false;
    }
}
