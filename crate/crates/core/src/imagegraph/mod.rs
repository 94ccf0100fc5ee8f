//! Low-level image maps, superpixels and the region adjacency graph.

mod filters;
mod regions;
mod slico;

pub use filters::{inhomogeneity_map, local_std, sobel_magnitude, DEFAULT_WINDOW_RADIUS};
pub use regions::{build_region_graph, truth_measure, EdgeMeasure, RegionGraph, RegionMap, RegionStats};
pub use slico::{enforce_connectivity, rgb_to_lab, slico, DEFAULT_REGION_COUNT};
