//! Zero-parameter SLIC (SLICO) superpixels.
//!
//! Cluster centers start on a regular grid, nudged to the lowest-gradient position in their
//! 3×3 neighborhood. Each of a fixed number of sweeps assigns pixels within a `±S` window
//! of every center using `d_lab / m_k + d_xy / S²`, where `m_k` is the largest squared color
//! distance seen in cluster `k` during the previous sweep. Afterwards 4-connected components
//! are split apart and components smaller than a quarter of the nominal superpixel size are
//! merged into their largest neighbor.

use std::collections::{BTreeSet, VecDeque};

use super::filters::{inhomogeneity_map, DEFAULT_WINDOW_RADIUS};
use super::regions::RegionMap;
use crate::error::{Error, Result};
use crate::image::RgbImage;

pub const DEFAULT_REGION_COUNT: usize = 500;
const SWEEPS: usize = 10;
const INITIAL_COLOR_SCALE: f64 = 100.0;

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    if t > 0.008856 {
        t.cbrt()
    } else {
        7.787 * t + 16.0 / 116.0
    }
}

/// CIELAB (D65) from 8-bit sRGB.
pub fn rgb_to_lab(p: [u8; 3]) -> [f64; 3] {
    let (r, g, b) = (srgb_to_linear(p[0]), srgb_to_linear(p[1]), srgb_to_linear(p[2]));
    let x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.950456;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.088754;
    let (fx, fy, fz) = (lab_f(x), lab_f(y), lab_f(z));
    let l = if y > 0.008856 { 116.0 * fy - 16.0 } else { 903.3 * y };
    [l, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

fn lab_dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

#[derive(Clone, Copy)]
struct Center {
    lab: [f64; 3],
    x: f64,
    y: f64,
}

fn grid_centers(lab: &[[f64; 3]], w: usize, h: usize, step: f64) -> Vec<Center> {
    let nx = ((w as f64 / step).round() as usize).clamp(1, w);
    let ny = ((h as f64 / step).round() as usize).clamp(1, h);
    let grad = |x: usize, y: usize| -> f64 {
        let at = |xx: usize, yy: usize| &lab[yy * w + xx];
        let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
        lab_dist2(at(xr, y), at(xl, y)) + lab_dist2(at(x, yd), at(x, yu))
    };
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cx = (((i as f64 + 0.5) * w as f64 / nx as f64) as usize).min(w - 1);
            let cy = (((j as f64 + 0.5) * h as f64 / ny as f64) as usize).min(h - 1);
            let (mut bx, mut by, mut best) = (cx, cy, grad(cx, cy));
            for yy in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                for xx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                    let g = grad(xx, yy);
                    if g < best {
                        best = g;
                        bx = xx;
                        by = yy;
                    }
                }
            }
            centers.push(Center {
                lab: lab[by * w + bx],
                x: bx as f64,
                y: by as f64,
            });
        }
    }
    centers
}

fn cluster(lab: &[[f64; 3]], w: usize, h: usize, step: f64, mut centers: Vec<Center>) -> Vec<u32> {
    let n = w * h;
    let k = centers.len();
    let mut labels = vec![u32::MAX; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut color_scale = vec![INITIAL_COLOR_SCALE; k];
    let inv_xy = 1.0 / (step * step);
    let offset = if step < 10.0 { step * 1.5 } else { step };

    for _ in 0..SWEEPS {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        labels.iter_mut().for_each(|l| *l = u32::MAX);
        for (ci, c) in centers.iter().enumerate() {
            let x0 = (c.x - offset).max(0.0) as usize;
            let x1 = ((c.x + offset) as usize).min(w - 1);
            let y0 = (c.y - offset).max(0.0) as usize;
            let y1 = ((c.y + offset) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = y * w + x;
                    let dxy = (x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2);
                    let d = lab_dist2(&lab[i], &c.lab) / color_scale[ci] + dxy * inv_xy;
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = ci as u32;
                    }
                }
            }
        }
        // Pixels outside every window fall back to the spatially nearest center.
        for i in 0..n {
            if labels[i] == u32::MAX {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                let nearest = centers
                    .iter()
                    .enumerate()
                    .map(|(ci, c)| (ci, (x - c.x).powi(2) + (y - c.y).powi(2)))
                    .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
                labels[i] = nearest.0 as u32;
            }
        }

        let mut next_scale = vec![0.0f64; k];
        let mut sums = vec![[0.0f64; 5]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let l = labels[i] as usize;
            next_scale[l] = next_scale[l].max(lab_dist2(&lab[i], &centers[l].lab));
            let s = &mut sums[l];
            s[0] += lab[i][0];
            s[1] += lab[i][1];
            s[2] += lab[i][2];
            s[3] += (i % w) as f64;
            s[4] += (i / w) as f64;
            counts[l] += 1;
        }
        for ci in 0..k {
            color_scale[ci] = next_scale[ci].max(1.0);
            if counts[ci] > 0 {
                let c = counts[ci] as f64;
                let s = sums[ci];
                centers[ci] = Center {
                    lab: [s[0] / c, s[1] / c, s[2] / c],
                    x: s[3] / c,
                    y: s[4] / c,
                };
            }
        }
    }
    labels
}

/// Splits labels into 4-connected components, merges undersized components into their
/// largest adjacent component, and renumbers regions by first appearance in raster order.
pub fn enforce_connectivity(labels: &[u32], w: usize, h: usize, min_size: usize) -> Vec<u32> {
    let n = w * h;
    let mut comp = vec![u32::MAX; n];
    let mut sizes: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        let l = labels[start];
        comp[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp[j] == u32::MAX && labels[j] == l {
                    comp[j] = id;
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
        sizes.push(size);
    }

    let m = sizes.len();
    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let a = comp[i] as usize;
            if x + 1 < w && comp[i + 1] as usize != a {
                let b = comp[i + 1] as usize;
                adjacency[a].insert(b);
                adjacency[b].insert(a);
            }
            if y + 1 < h && comp[i + w] as usize != a {
                let b = comp[i + w] as usize;
                adjacency[a].insert(b);
                adjacency[b].insert(a);
            }
        }
    }

    // Union-find over components; the root carries group size and group adjacency.
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&c| (sizes[c], c));
    for c in order {
        let root = find(&mut parent, c);
        if sizes[root] >= min_size {
            continue;
        }
        let neighbor_roots: BTreeSet<usize> = adjacency[root]
            .iter()
            .map(|&b| find(&mut parent, b))
            .filter(|&b| b != root)
            .collect();
        let Some(target) = neighbor_roots
            .iter()
            .copied()
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        else {
            continue;
        };
        parent[root] = target;
        sizes[target] += sizes[root];
        let moved = std::mem::take(&mut adjacency[root]);
        adjacency[target].extend(moved);
    }

    let mut renumber = vec![u32::MAX; m];
    let mut next = 0u32;
    let mut out = vec![0u32; n];
    for i in 0..n {
        let root = find(&mut parent, comp[i] as usize);
        if renumber[root] == u32::MAX {
            renumber[root] = next;
            next += 1;
        }
        out[i] = renumber[root];
    }
    out
}

/// SLICO superpixels with roughly `n_regions` connected regions.
pub fn slico(image: &RgbImage, n_regions: usize) -> Result<RegionMap> {
    let n = image.len();
    if n_regions < 1 || n_regions > n {
        return Err(Error::InvalidInput(format!(
            "region count {n_regions} outside [1, {n}]"
        )));
    }
    let (w, h) = (image.width(), image.height());
    let labels = if n_regions == 1 {
        vec![0u32; n]
    } else {
        let lab: Vec<[f64; 3]> = image.pixels().iter().map(|&p| rgb_to_lab(p)).collect();
        let step = (n as f64 / n_regions as f64).sqrt();
        let centers = grid_centers(&lab, w, h, step);
        let raw = cluster(&lab, w, h, step, centers);
        let min_size = (n / n_regions / 4).max(1);
        enforce_connectivity(&raw, w, h, min_size)
    };
    let inhom = inhomogeneity_map(image, DEFAULT_WINDOW_RADIUS)?;
    RegionMap::from_labels_with_map(image, labels, &inhom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrants() -> RgbImage {
        RgbImage::from_fn(60, 60, |x, y| match (x < 30, y < 30) {
            (true, true) => [220, 30, 30],
            (false, true) => [30, 200, 40],
            (true, false) => [40, 40, 210],
            (false, false) => [230, 230, 60],
        })
        .unwrap()
    }

    #[test]
    fn single_region_covers_image() {
        let map = slico(&quadrants(), 1).unwrap();
        assert_eq!(map.n_regions(), 1);
        assert_eq!(map.region(0).pixel_count, 3600);
    }

    #[test]
    fn rejects_out_of_range_counts() {
        let img = quadrants();
        assert!(slico(&img, 0).is_err());
        assert!(slico(&img, 3601).is_err());
    }

    #[test]
    fn quadrants_recovered_by_majority_overlap() {
        let img = quadrants();
        let map = slico(&img, 4).unwrap();
        assert!(map.is_connected());
        for (qx, qy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let mut counts = std::collections::BTreeMap::new();
            for y in qy * 30..qy * 30 + 30 {
                for x in qx * 30..qx * 30 + 30 {
                    *counts.entry(map.label(y * 60 + x)).or_insert(0usize) += 1;
                }
            }
            let majority = counts.values().max().copied().unwrap();
            assert!(majority as f64 >= 0.95 * 900.0, "quadrant {qx},{qy}: {counts:?}");
        }
    }

    #[test]
    fn region_count_is_near_target() {
        let img = RgbImage::from_fn(120, 90, |x, y| {
            [((x * 7 + y * 3) % 256) as u8, ((x * y) % 200) as u8, (y * 2 % 256) as u8]
        })
        .unwrap();
        for target in [20, 100, 300] {
            let map = slico(&img, target).unwrap();
            let n = map.n_regions() as f64;
            assert!(
                (n - target as f64).abs() <= 0.3 * target as f64,
                "target {target} produced {n}"
            );
            assert!(map.is_connected());
        }
    }

    #[test]
    fn deterministic() {
        let img = quadrants();
        assert_eq!(slico(&img, 25).unwrap(), slico(&img, 25).unwrap());
    }

    #[test]
    fn connectivity_merges_specks() {
        // A one-pixel island of label 1 inside label 0 with min size 2 disappears.
        let labels = vec![0, 0, 0, 0, 1, 0, 0, 0, 0];
        let out = enforce_connectivity(&labels, 3, 3, 2);
        assert!(out.iter().all(|&l| l == 0));
        // Two disjoint pieces of one label become separate regions.
        let labels = vec![0, 1, 0];
        assert_eq!(enforce_connectivity(&labels, 3, 1, 1), vec![0, 1, 2]);
    }
}
