#![allow(dead_code)]

use nccut_core::eval::{loose_roi, roi_for_looseness};
use nccut_core::imagegraph::{EdgeMeasure, RegionGraph, RegionMap};
use nccut_core::pipeline::Polygon;
use nccut_core::{Mask, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LIGHT: [u8; 3] = [205, 195, 170];
pub const DARK: [u8; 3] = [55, 45, 80];

pub struct Fixture {
    pub name: &'static str,
    pub image: RgbImage,
    pub gt: Mask,
    /// Hand-drawn loose polygon.
    pub roi: Polygon,
}

impl Fixture {
    pub fn tight_roi(&self) -> Polygon {
        loose_roi(&self.gt, 0.0).unwrap().polygon()
    }

    pub fn roi_at(&self, looseness: f64) -> Polygon {
        roi_for_looseness(&self.gt, looseness).unwrap().polygon()
    }
}

fn jitter(rng: &mut ChaCha8Rng, c: [u8; 3], amp: i32) -> [u8; 3] {
    c.map(|v| (v as i32 + rng.random_range(-amp..=amp)).clamp(0, 255) as u8)
}

fn paint(w: usize, h: usize, seed: u64, amp: i32, object: impl Fn(usize, usize) -> Option<[u8; 3]>, bkg: impl Fn(usize, usize) -> [u8; 3]) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut px = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let c = object(x, y).unwrap_or_else(|| bkg(x, y));
            px.push(jitter(&mut rng, c, amp));
        }
    }
    RgbImage::new(w, h, px).unwrap()
}

fn octagon(cx: f64, cy: f64, r: f64) -> Polygon {
    Polygon::new(
        (0..8)
            .map(|k| {
                let a = std::f64::consts::PI / 8.0 + k as f64 * std::f64::consts::PI / 4.0;
                [(cx + r * a.cos()).round(), (cy + r * a.sin()).round()]
            })
            .collect(),
    )
}

fn dist(x: usize, y: usize, cx: f64, cy: f64) -> f64 {
    ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt()
}

/// Dark ring whose hole shows the background colour: the hole is background-coloured and
/// isolated from the outside by the ring.
pub fn ring() -> Fixture {
    let (w, h) = (200, 200);
    let in_ring = |x, y| {
        let d = dist(x, y, 100.0, 100.0);
        (26.0..=62.0).contains(&d)
    };
    let image = paint(w, h, 7, 12, |x, y| in_ring(x, y).then_some(DARK), |_, _| LIGHT);
    Fixture {
        name: "ring",
        gt: Mask::from_fn(w, h, in_ring),
        image,
        roi: octagon(100.0, 100.0, 88.0),
    }
}

/// The background-coloured hole of [`ring`].
pub fn ring_hole() -> Mask {
    Mask::from_fn(200, 200, |x, y| dist(x, y, 100.0, 100.0) < 26.0)
}

/// Dark rectangle on a light ground with a horizontal brightness gradient.
pub fn slab() -> Fixture {
    let (w, h) = (160, 120);
    let inside = |x: usize, y: usize| (50..110).contains(&x) && (35..85).contains(&y);
    let image = paint(
        w,
        h,
        11,
        10,
        |x, y| inside(x, y).then_some(DARK),
        |x, _| LIGHT.map(|v| (v as usize - 30 + x * 30 / w) as u8),
    );
    Fixture {
        name: "slab",
        gt: Mask::from_fn(w, h, inside),
        image,
        roi: Polygon::new(vec![[30.0, 20.0], [135.0, 15.0], [140.0, 100.0], [25.0, 105.0]]),
    }
}

/// Reddish ellipse on a two-tone striped ground.
pub fn ellipse() -> Fixture {
    let (w, h) = (180, 140);
    let inside = |x: usize, y: usize| {
        let (dx, dy) = ((x as f64 + 0.5 - 90.0) / 50.0, (y as f64 + 0.5 - 70.0) / 32.0);
        dx * dx + dy * dy <= 1.0
    };
    let image = paint(
        w,
        h,
        23,
        10,
        |x, y| inside(x, y).then_some([170, 40, 35]),
        |_, y| if (y / 20) % 2 == 0 { [70, 140, 200] } else { [90, 165, 215] },
    );
    Fixture {
        name: "ellipse",
        gt: Mask::from_fn(w, h, inside),
        image,
        roi: octagon(90.0, 70.0, 72.0),
    }
}

pub fn image_fixtures() -> Vec<Fixture> {
    vec![ring(), slab(), ellipse()]
}

/// 3×3 blocks of 20×20 pixels. Top row light, the rest dark; the top-left block carries
/// zero-mean 2×2 checker noise of ±30 so its mean equals the clean light colour.
pub fn nine_blocks() -> (RgbImage, RegionMap) {
    let b = 20;
    let light = 180i32;
    let image = RgbImage::from_fn(3 * b, 3 * b, |x, y| {
        let (bx, by) = (x / b, y / b);
        let v = if by == 0 { light } else { 60 };
        let v = if bx == 0 && by == 0 {
            v + if ((x / 2) + (y / 2)) % 2 == 0 { 30 } else { -30 }
        } else {
            v
        };
        [v as u8; 3]
    })
    .unwrap();
    let labels = (0..9 * b * b)
        .map(|i| {
            let (x, y) = (i % (3 * b), i / (3 * b));
            ((y / b) * 3 + x / b) as u32
        })
        .collect();
    let regions = RegionMap::from_labels(&image, labels).unwrap();
    (image, regions)
}

/// Random connected graph on `n` regions: a random spanning tree plus extra edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> RegionGraph {
    let mut edges: Vec<(usize, usize, EdgeMeasure)> = Vec::new();
    let mut has = std::collections::BTreeSet::new();
    let measure = |rng: &mut ChaCha8Rng| EdgeMeasure {
        truth: rng.random::<f64>(),
        indeterminacy: rng.random::<f64>(),
    };
    for q in 1..n {
        let p = rng.random_range(0..q);
        has.insert((p, q));
        edges.push((p, q, measure(rng)));
    }
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let (p, q) = (a.min(b), a.max(b));
        if p != q && has.insert((p, q)) {
            edges.push((p, q, measure(rng)));
        }
    }
    let h = (0..n).map(|_| rng.random::<f64>()).collect();
    RegionGraph::from_edges(h, &edges).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mask_diff(a: &Mask, b: &Mask) -> usize {
    a.data().iter().zip(b.data()).filter(|(x, y)| x != y).count()
}
