use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Mask;

/// Closed polygon in pixel coordinates; pixel `(x, y)` covers `[x, x+1) × [y, y+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct RoiFile {
    polygon: Vec<[f64; 2]>,
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection, touching and collinear overlap included.
fn segments_meet(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Self {
        Self { vertices }
    }

    /// Rectangle covering pixels `x0..=x1` × `y0..=y1`.
    pub fn rectangle(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        let (a, b, c, d) = (x0 as f64, y0 as f64, (x1 + 1) as f64, (y1 + 1) as f64);
        Self::new(vec![[a, b], [c, b], [c, d], [a, d]])
    }

    /// Parses `{"polygon": [[x, y], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: RoiFile = serde_json::from_str(text)?;
        Ok(Self::new(f.polygon))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&RoiFile {
            polygon: self.vertices.clone(),
        })?)
    }

    fn edge(&self, k: usize) -> ([f64; 2], [f64; 2]) {
        let n = self.vertices.len();
        (self.vertices[k], self.vertices[(k + 1) % n])
    }

    pub fn signed_area(&self) -> f64 {
        (0..self.vertices.len())
            .map(|k| {
                let (a, b) = self.edge(k);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0
    }

    /// At least three finite vertices, no zero-length edge, non-zero area, and no two
    /// non-adjacent edges meeting.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(Error::InvalidRoi(format!("polygon needs at least 3 vertices, got {n}")));
        }
        if self.vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRoi("non-finite vertex".into()));
        }
        for k in 0..n {
            let (a, b) = self.edge(k);
            if a == b {
                return Err(Error::InvalidRoi(format!("zero-length edge at vertex {k}")));
            }
        }
        if self.signed_area() == 0.0 {
            return Err(Error::InvalidRoi("polygon has zero area".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = self.edge(i);
                let (c, d) = self.edge(j);
                if segments_meet(a, b, c, d) {
                    return Err(Error::InvalidRoi(format!("edges {i} and {j} intersect")));
                }
            }
        }
        // Adjacent edges may only share their common vertex.
        for i in 0..n {
            let (a, b) = self.edge(i);
            let (_, c) = self.edge((i + 1) % n);
            if orient(a, b, c) == 0.0 && (on_segment(a, b, c) || on_segment(b, c, a)) {
                return Err(Error::InvalidRoi(format!("edges {i} and {} fold back", (i + 1) % n)));
            }
        }
        Ok(())
    }

    /// Even-odd test of the point.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let mut inside = false;
        for k in 0..self.vertices.len() {
            let (a, b) = self.edge(k);
            if (a[1] > py) != (b[1] > py) {
                let x = a[0] + (py - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if x > px {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Pixels whose centre lies inside.
    pub fn mask(&self, width: usize, height: usize) -> Mask {
        Mask::from_fn(width, height, |x, y| self.contains(x as f64 + 0.5, y as f64 + 0.5))
    }

    /// Validated inside mask that has both inside and outside pixels.
    pub fn roi_mask(&self, width: usize, height: usize) -> Result<Mask> {
        self.validate()?;
        let m = self.mask(width, height);
        match m.count() {
            0 => Err(Error::InvalidRoi("polygon contains no pixel centre".into())),
            c if c == m.len() => Err(Error::InvalidRoi("polygon covers every pixel".into())),
            _ => Ok(m),
        }
    }
}
