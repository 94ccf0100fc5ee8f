//! Object/background Gaussian mixtures over pixel RGB with hard component assignment.

use nalgebra::{Cholesky, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::RgbImage;

pub const DEFAULT_COMPONENTS: usize = 5;
/// Added to every sample covariance diagonal.
pub const COVARIANCE_FLOOR: f64 = 0.01;
const KMEANS_ITERATIONS: usize = 10;
const KMEANS_SEED: u64 = 0x6e63_6375_7400;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: [f64; 3],
    pub covariance: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq)]
struct Prepared {
    /// Inverse of the Cholesky factor, so the Mahalanobis term is ‖L⁻¹(x − μ)‖².
    l_inv: Matrix3<f64>,
    /// ln π − ½ ln det Σ − (3/2) ln 2π.
    log_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GmmParams", into = "GmmParams")]
pub struct Gmm {
    components: Vec<GaussianComponent>,
    prepared: Vec<Option<Prepared>>,
}

#[derive(Serialize, Deserialize)]
struct GmmParams {
    components: Vec<GaussianComponent>,
}

impl TryFrom<GmmParams> for Gmm {
    type Error = Error;
    fn try_from(p: GmmParams) -> Result<Self> {
        Gmm::new(p.components)
    }
}

impl From<Gmm> for GmmParams {
    fn from(g: Gmm) -> Self {
        GmmParams {
            components: g.components,
        }
    }
}

impl Gmm {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("mixture needs at least one component".into()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if components.iter().any(|c| !(c.weight >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "mixture weights must be non-negative and sum to 1 (sum {total})"
            )));
        }
        let prepared = components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let cov = Matrix3::from_fn(|i, j| c.covariance[i][j]);
                if (cov - cov.transpose()).abs().max() > 1e-9 * (1.0 + cov.abs().max()) {
                    return Err(Error::InvalidInput(format!("covariance {k} is not symmetric")));
                }
                let chol = Cholesky::new(cov).ok_or_else(|| {
                    Error::Numerical(format!("covariance {k} is not positive definite"))
                })?;
                if c.weight == 0.0 {
                    return Ok(None);
                }
                let l = chol.l();
                let log_det = 2.0 * (0..3).map(|i| l[(i, i)].ln()).sum::<f64>();
                let l_inv = l
                    .try_inverse()
                    .ok_or_else(|| Error::Numerical(format!("covariance {k} is singular")))?;
                Ok(Some(Prepared {
                    l_inv,
                    log_scale: c.weight.ln() - 0.5 * log_det - 1.5 * LN_2PI,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            prepared,
        })
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// ln(π_k · N(x; μ_k, Σ_k)); `-inf` for zero-weight components.
    pub fn component_log_score(&self, k: usize, x: [f64; 3]) -> f64 {
        match &self.prepared[k] {
            None => f64::NEG_INFINITY,
            Some(p) => {
                let m = self.components[k].mean;
                let d = Vector3::new(x[0] - m[0], x[1] - m[1], x[2] - m[2]);
                p.log_scale - 0.5 * (p.l_inv * d).norm_squared()
            }
        }
    }

    /// Best component and its log score; ties resolve to the lowest index.
    pub fn best_component(&self, x: [f64; 3]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for k in 0..self.components.len() {
            let s = self.component_log_score(k, x);
            if s > best.1 {
                best = (k, s);
            }
        }
        best
    }

    /// ln of `max_k π_k N(x; μ_k, Σ_k)`.
    pub fn log_density(&self, x: [f64; 3]) -> f64 {
        self.best_component(x).1
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `max_k π_k N(x; μ_k, Σ_k)`.
pub fn gmm_density(x: [f64; 3], gmm: &Gmm) -> f64 {
    gmm.log_density(x).exp()
}

/// Per-pixel component index, interpreted against the mixture of the pixel's label side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentAssignment {
    pub k: usize,
    pub components: Vec<usize>,
}

fn check_labeling(image: &RgbImage, labeling: &[u8]) -> Result<()> {
    if labeling.len() != image.len() {
        return Err(Error::InvalidLabeling(format!(
            "{} labels for {} pixels",
            labeling.len(),
            image.len()
        )));
    }
    if labeling.iter().any(|&l| l > 1) {
        return Err(Error::InvalidLabeling("labels must be 0 or 1".into()));
    }
    Ok(())
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// k-means with D²-weighted seeding; returns a cluster index per point.
fn kmeans(points: &[[f64; 3]], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = points.len() - 1;
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if acc > target && d > 0.0 {
                pick = i;
                break;
            }
        }
        centers.push(points[pick]);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &points[pick]));
        }
    }

    let mut assign = vec![0usize; points.len()];
    for _ in 0..KMEANS_ITERATIONS {
        for (i, p) in points.iter().enumerate() {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = dist2(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            assign[i] = best.0;
        }
        let mut sums = vec![[0.0f64; 3]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &a) in points.iter().zip(&assign) {
            for j in 0..3 {
                sums[a][j] += p[j];
            }
            counts[a] += 1;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            if counts[c] > 0 {
                let n = counts[c] as f64;
                *center = [sums[c][0] / n, sums[c][1] / n, sums[c][2] / n];
            }
        }
    }
    assign
}

/// Initial mixtures: k-means per label side, then exact statistics of the clusters.
pub fn init_gmms(image: &RgbImage, labeling: &[u8], k: usize) -> Result<(Gmm, Gmm, ComponentAssignment)> {
    check_labeling(image, labeling)?;
    if k < 1 {
        return Err(Error::InvalidInput("component count must be at least 1".into()));
    }
    let mut components = vec![0usize; image.len()];
    for side in [0u8, 1u8] {
        let idx: Vec<usize> = (0..image.len()).filter(|&i| labeling[i] == side).collect();
        if idx.is_empty() {
            return Err(Error::InvalidLabeling(format!("no pixels labeled {side}")));
        }
        let points: Vec<[f64; 3]> = idx.iter().map(|&i| image.color(i)).collect();
        let clusters = kmeans(&points, k, KMEANS_SEED + side as u64);
        for (&i, &c) in idx.iter().zip(&clusters) {
            components[i] = c;
        }
    }
    let assignment = ComponentAssignment { k, components };
    let (obj, bkg) = fit_gmms(image, labeling, &assignment)?;
    Ok((obj, bkg, assignment))
}

/// Statistics of one label side (1 = object); errors when the side has no pixels.
pub fn fit_side(image: &RgbImage, labeling: &[u8], assignment: &ComponentAssignment, side: u8) -> Result<Gmm> {
    let k = assignment.k;
    let mut counts = vec![0usize; k];
    let mut sums = vec![[0.0f64; 3]; k];
    let mut side_sum = [0.0f64; 3];
    let mut side_count = 0usize;
    for i in 0..image.len() {
        if labeling[i] != side {
            continue;
        }
        let c = assignment.components[i];
        let x = image.color(i);
        counts[c] += 1;
        side_count += 1;
        for j in 0..3 {
            sums[c][j] += x[j];
            side_sum[j] += x[j];
        }
    }
    if side_count == 0 {
        return Err(Error::InvalidLabeling(format!("no pixels labeled {side}")));
    }
    let side_mean = side_sum.map(|s| s / side_count as f64);
    let means: Vec<[f64; 3]> = (0..k)
        .map(|c| {
            if counts[c] == 0 {
                side_mean
            } else {
                sums[c].map(|s| s / counts[c] as f64)
            }
        })
        .collect();
    let mut scatter = vec![[[0.0f64; 3]; 3]; k];
    for i in 0..image.len() {
        if labeling[i] != side {
            continue;
        }
        let c = assignment.components[i];
        let x = image.color(i);
        let d = [x[0] - means[c][0], x[1] - means[c][1], x[2] - means[c][2]];
        for a in 0..3 {
            for b in 0..3 {
                scatter[c][a][b] += d[a] * d[b];
            }
        }
    }
    let components = (0..k)
        .map(|c| {
            let mut covariance = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    if counts[c] > 0 {
                        covariance[a][b] = scatter[c][a][b] / counts[c] as f64;
                    }
                }
                covariance[a][a] += COVARIANCE_FLOOR;
            }
            GaussianComponent {
                weight: counts[c] as f64 / side_count as f64,
                mean: means[c],
                covariance,
            }
        })
        .collect();
    Gmm::new(components)
}

/// Sample weights, means and population covariances (+ floor) per component and side.
/// Returns `(object, background)`. Errors when a side has no pixels.
pub fn fit_gmms(image: &RgbImage, labeling: &[u8], assignment: &ComponentAssignment) -> Result<(Gmm, Gmm)> {
    check_labeling(image, labeling)?;
    if assignment.components.len() != image.len()
        || assignment.components.iter().any(|&c| c >= assignment.k)
    {
        return Err(Error::InvalidInput("component assignment does not cover the image".into()));
    }
    Ok((
        fit_side(image, labeling, assignment, 1)?,
        fit_side(image, labeling, assignment, 0)?,
    ))
}

/// Reassigns each pixel to the best component of its side's mixture.
pub fn assign_components(image: &RgbImage, labeling: &[u8], object: &Gmm, background: &Gmm) -> Result<ComponentAssignment> {
    check_labeling(image, labeling)?;
    if object.k() != background.k() {
        return Err(Error::InvalidInput("object and background mixtures differ in size".into()));
    }
    let components = (0..image.len())
        .map(|i| {
            let gmm = if labeling[i] == 1 { object } else { background };
            gmm.best_component(image.color(i)).0
        })
        .collect();
    Ok(ComponentAssignment {
        k: object.k(),
        components,
    })
}
