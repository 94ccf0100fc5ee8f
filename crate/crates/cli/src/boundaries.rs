use std::collections::BTreeMap;

use nccut_core::imagegraph::RegionMap;
use serde::Serialize;

type Vertex = [u32; 2];

/// Closed outlines of one superpixel, in pixel-corner coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionOutline {
    pub id: usize,
    /// Each loop lists its corners once; the last corner joins back to the first.
    pub polylines: Vec<Vec<Vertex>>,
}

/// Traces every region's boundary into closed loops, clockwise on screen, collinear
/// corners dropped. Holes give extra loops.
pub fn region_outlines(regions: &RegionMap) -> Vec<RegionOutline> {
    let (w, h) = (regions.width(), regions.height());
    let mut edges: Vec<BTreeMap<Vertex, Vec<Vertex>>> = vec![BTreeMap::new(); regions.n_regions()];
    let label_at = |x: i64, y: i64| {
        (x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h).then(|| regions.label(y as usize * w + x as usize))
    };
    for y in 0..h {
        for x in 0..w {
            let r = regions.label(y * w + x);
            let (xi, yi) = (x as i64, y as i64);
            let (x, y) = (x as u32, y as u32);
            let sides = [
                ((0, -1), [x, y], [x + 1, y]),
                ((1, 0), [x + 1, y], [x + 1, y + 1]),
                ((0, 1), [x + 1, y + 1], [x, y + 1]),
                ((-1, 0), [x, y + 1], [x, y]),
            ];
            for ((dx, dy), a, b) in sides {
                if label_at(xi + dx, yi + dy) != Some(r) {
                    edges[r].entry(a).or_default().push(b);
                }
            }
        }
    }
    edges
        .into_iter()
        .enumerate()
        .map(|(id, mut out)| {
            let mut polylines = Vec::new();
            while let Some((&start, _)) = out.iter().find(|(_, v)| !v.is_empty()) {
                let mut path = vec![start];
                let mut at = start;
                loop {
                    let next = out.get_mut(&at).and_then(|v| v.pop()).expect("boundary edges form closed loops");
                    if next == start {
                        break;
                    }
                    path.push(next);
                    at = next;
                }
                polylines.push(drop_collinear(path));
            }
            RegionOutline { id, polylines }
        })
        .collect()
}

fn drop_collinear(path: Vec<Vertex>) -> Vec<Vertex> {
    let n = path.len();
    let turn = |a: Vertex, b: Vertex, c: Vertex| {
        let (ux, uy) = (b[0] as i64 - a[0] as i64, b[1] as i64 - a[1] as i64);
        let (vx, vy) = (c[0] as i64 - b[0] as i64, c[1] as i64 - b[1] as i64);
        ux * vy - uy * vx != 0
    };
    (0..n)
        .filter(|&i| turn(path[(i + n - 1) % n], path[i], path[(i + 1) % n]))
        .map(|i| path[i])
        .collect()
}
