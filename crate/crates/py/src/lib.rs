//! Python bindings: `import nccut`.

use nccut_core::eval::compute_metrics as core_metrics;
use nccut_core::imagegraph::{slico, EdgeMeasure, RegionGraph};
use nccut_core::nc::{compute_nc as core_nc, SeedSet};
use nccut_core::pipeline::{init_session, Polygon, SegSession, SegmentOutcome, Stroke};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

fn err(e: nccut_core::Error) -> PyErr {
    use nccut_core::Error as E;
    match e {
        E::Numerical(_) | E::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Image", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyImage(nccut_core::RgbImage);

#[pymethods]
impl PyImage {
    /// Decodes PNG (or another supported format) bytes.
    #[staticmethod]
    fn decode(data: &[u8]) -> PyResult<Self> {
        nccut_core::load_image(data).map(Self).map_err(err)
    }

    /// From packed RGB bytes, row-major.
    #[staticmethod]
    fn from_rgb(width: usize, height: usize, data: &[u8]) -> PyResult<Self> {
        if data.len() != width * height * 3 {
            return Err(PyValueError::new_err(format!("expected {} bytes, got {}", width * height * 3, data.len())));
        }
        let px = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        nccut_core::RgbImage::new(width, height, px).map(Self).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn to_png<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = nccut_core::image::encode_rgb_png(&self.0).map_err(err)?;
        Ok(PyBytes::new(py, &bytes))
    }
}

#[pyclass(name = "Mask", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyMask(nccut_core::Mask);

#[pymethods]
impl PyMask {
    #[staticmethod]
    fn decode(data: &[u8]) -> PyResult<Self> {
        nccut_core::Mask::from_png(data).map(Self).map_err(err)
    }

    /// From one byte per pixel, non-zero = object.
    #[staticmethod]
    fn from_bytes(width: usize, height: usize, data: &[u8]) -> PyResult<Self> {
        let bits = data.iter().map(|&b| b != 0).collect();
        nccut_core::Mask::new(width, height, bits).map(Self).map_err(err)
    }

    /// Inside-polygon mask.
    #[staticmethod]
    fn from_polygon(width: usize, height: usize, polygon: Vec<[f64; 2]>) -> PyResult<Self> {
        Polygon::new(polygon).roi_mask(width, height).map(Self).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn count(&self) -> usize {
        self.0.count()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<bool> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(PyValueError::new_err("pixel out of bounds"));
        }
        Ok(self.0.get(x, y))
    }

    /// One byte per pixel (0 or 1), row-major.
    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_labels())
    }

    fn to_png<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &self.0.to_png().map_err(err)?))
    }
}

#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone, Default)]
pub struct PyConfig(nccut_core::Config);

#[pymethods]
impl PyConfig {
    /// Defaults, then `key = value` overrides (newline- or comma-separated).
    #[new]
    #[pyo3(signature = (overrides = ""))]
    fn new(overrides: &str) -> PyResult<Self> {
        let mut c = nccut_core::Config::default();
        c.apply_overrides(overrides).map_err(err)?;
        c.validate().map_err(err)?;
        Ok(Self(c))
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        let mut c = self.0.clone();
        c.set(key, value).map_err(err)?;
        c.validate().map_err(err)?;
        self.0 = c;
        Ok(())
    }

    #[getter]
    fn n_regions(&self) -> usize {
        self.0.n_regions
    }

    #[getter]
    fn max_iterations(&self) -> usize {
        self.0.max_iterations
    }

    #[getter]
    fn indeterminacy_enabled(&self) -> bool {
        self.0.indeterminacy_enabled
    }
}

#[pyclass(name = "SegmentResult", frozen)]
pub struct PySegmentResult {
    #[pyo3(get)]
    mask: PyMask,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    gamma: Vec<f64>,
    #[pyo3(get)]
    changed_pixels: Vec<usize>,
}

impl From<SegmentOutcome> for PySegmentResult {
    fn from(o: SegmentOutcome) -> Self {
        Self {
            iterations: o.iterations(),
            gamma: o.trace.iter().map(|t| t.gamma).collect(),
            changed_pixels: o.trace.iter().map(|t| t.changed_pixels).collect(),
            mask: PyMask(o.mask),
        }
    }
}

/// Interactive segmentation state for one image and ROI.
#[pyclass(name = "Session")]
pub struct PySession(SegSession);

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (image, polygon, config = None))]
    fn new(py: Python<'_>, image: &PyImage, polygon: Vec<[f64; 2]>, config: Option<&PyConfig>) -> PyResult<Self> {
        let cfg = config.map(|c| c.0.clone()).unwrap_or_default();
        let img = image.0.clone();
        py.detach(|| init_session(&img, &Polygon::new(polygon), &cfg)).map(Self).map_err(err)
    }

    fn segment(&mut self, py: Python<'_>) -> PyResult<PySegmentResult> {
        let s = &mut self.0;
        py.detach(|| s.segment()).map(Into::into).map_err(err)
    }

    /// Strokes are `(path, label)` with `path` a list of `(x, y)` and label 1 for object.
    fn edit(&mut self, py: Python<'_>, strokes: Vec<(Vec<[i64; 2]>, u8)>) -> PyResult<PySegmentResult> {
        let strokes: Vec<Stroke> = strokes.into_iter().map(|(path, label)| Stroke { path, label }).collect();
        let s = &mut self.0;
        py.detach(|| s.apply_edit(&strokes)).map(Into::into).map_err(err)
    }

    fn mask(&self) -> PyMask {
        PyMask(self.0.mask())
    }

    fn roi_mask(&self) -> PyMask {
        PyMask(self.0.roi_mask.clone())
    }

    #[getter]
    fn n_regions(&self) -> usize {
        self.0.regions.n_regions()
    }

    /// Superpixel label per pixel, row-major.
    fn region_labels(&self) -> Vec<u32> {
        self.0.regions.labels().to_vec()
    }

    fn seeds(&self) -> Vec<usize> {
        self.0.seeds.iter().collect()
    }

    /// `(p_obj, p_bkg)` of the latest iteration, or None before the first.
    fn candidates(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        self.0
            .candidates
            .as_ref()
            .map(|c| (c.p_obj.iter().copied().collect(), c.p_bkg.iter().copied().collect()))
    }

    /// `(truth, indeterminacy)` per region from the latest iteration.
    fn connectedness(&self) -> Option<Vec<(f64, f64)>> {
        self.0
            .nc
            .as_ref()
            .map(|nc| nc.values.iter().map(|v| (v.truth, v.indeterminacy)).collect())
    }

    fn ncmap_png<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyBytes>>> {
        self.0
            .nc
            .as_ref()
            .map(|nc| nc.truth_map_png(&self.0.regions).map(|b| PyBytes::new(py, &b)))
            .transpose()
            .map_err(err)
    }
}

/// One-shot segmentation; returns the mask.
#[pyfunction]
#[pyo3(signature = (image, polygon, config = None))]
fn segment(py: Python<'_>, image: &PyImage, polygon: Vec<[f64; 2]>, config: Option<&PyConfig>) -> PyResult<PyMask> {
    let mut s = PySession::new(py, image, polygon, config)?;
    Ok(s.segment(py)?.mask)
}

/// Superpixel labels (row-major) for `image`.
#[pyfunction]
#[pyo3(signature = (image, n_regions = nccut_core::imagegraph::DEFAULT_REGION_COUNT))]
fn superpixels(py: Python<'_>, image: &PyImage, n_regions: usize) -> PyResult<Vec<u32>> {
    let img = image.0.clone();
    py.detach(|| slico(&img, n_regions.min(img.len())))
        .map(|r| r.labels().to_vec())
        .map_err(err)
}

/// Connectedness of every region to `seeds` on a graph given by self-indeterminacies and
/// `(p, q, truth, indeterminacy)` edges. Returns `(truth, indeterminacy, parent)` per region.
#[pyfunction]
fn compute_nc(self_indeterminacy: Vec<f64>, edges: Vec<(usize, usize, f64, f64)>, seeds: Vec<usize>) -> PyResult<Vec<(f64, f64, usize)>> {
    let edges: Vec<_> = edges
        .into_iter()
        .map(|(p, q, truth, indeterminacy)| (p, q, EdgeMeasure { truth, indeterminacy }))
        .collect();
    let n = self_indeterminacy.len();
    let graph = RegionGraph::from_edges(self_indeterminacy, &edges).map_err(err)?;
    let nc = core_nc(&graph, &SeedSet::new(seeds, n).map_err(err)?).map_err(err)?;
    Ok(nc
        .values
        .iter()
        .zip(&nc.forest.parent)
        .map(|(v, &p)| (v.truth, v.indeterminacy, p))
        .collect())
}

/// ERR (over `roi`), Rand index, GCE, BDE and IoU of `pred` against `gt`.
#[pyfunction]
fn compute_metrics<'py>(py: Python<'py>, pred: &PyMask, gt: &PyMask, roi: &PyMask) -> PyResult<Bound<'py, PyDict>> {
    let m = core_metrics(&pred.0, &gt.0, &roi.0).map_err(err)?;
    let d = PyDict::new(py);
    for (k, v) in [
        ("err_percent", m.err_percent),
        ("rand_index", m.rand_index),
        ("gce", m.gce),
        ("bde", m.bde),
        ("iou_obj", m.iou_obj),
        ("iou_bkg", m.iou_bkg),
        ("iou_avg", m.iou_avg),
    ] {
        d.set_item(k, v)?;
    }
    Ok(d)
}

#[pymodule]
fn nccut(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyMask>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PySession>()?;
    m.add_class::<PySegmentResult>()?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(superpixels, m)?)?;
    m.add_function(wrap_pyfunction!(compute_nc, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    Ok(())
}
