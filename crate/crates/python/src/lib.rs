//! Python bindings for the seequant toolkit.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use seequant_core::codec::{self, BlockSpec, Container, ImageGrid};
use seequant_core::object::{self, MatchParams, PointObject};
use seequant_core::see::{self, SeeConfig};
use seequant_core::spectral::{self, SpectrumQuantizer};
use seequant_core::vq::{self, VectorSet};

create_exception!(seequant, SeequantError, PyValueError, "Invalid input or malformed data.");
create_exception!(seequant, RefusedError, SeequantError, "A search or recursion cap would be exceeded.");

fn to_py(err: seequant_core::Error) -> PyErr {
    match err {
        seequant_core::Error::Refused(_) => RefusedError::new_err(err.to_string()),
        _ => SeequantError::new_err(err.to_string()),
    }
}

fn config(strategy: &str, seed: u64, max_depth: Option<usize>) -> PyResult<SeeConfig> {
    let base = match strategy {
        "greedy" => SeeConfig::greedy(),
        "exhaustive" => SeeConfig::exhaustive(),
        other => return Err(SeequantError::new_err(format!("unknown strategy {other:?}"))),
    };
    Ok(base.with_seed(seed).with_max_depth(max_depth))
}

fn block_spec(block: &str, pad: u16) -> PyResult<BlockSpec> {
    Ok(block.parse::<BlockSpec>().map_err(to_py)?.with_pad(pad))
}

fn to_points(rows: Vec<Vec<f64>>) -> PyResult<PointObject> {
    PointObject::from_points(&rows).map_err(to_py)
}

/// A grayscale image with samples in row-major order.
#[pyclass(name = "Image", module = "seequant", frozen)]
struct PyImage {
    inner: ImageGrid,
}

#[pymethods]
impl PyImage {
    #[new]
    #[pyo3(signature = (width, height, samples, bits = 8))]
    fn new(width: usize, height: usize, samples: Vec<u16>, bits: u32) -> PyResult<Self> {
        Ok(Self { inner: ImageGrid::new(width, height, bits, samples).map_err(to_py)? })
    }

    /// Parses a binary (P5) PGM.
    #[staticmethod]
    fn from_pgm(data: &[u8]) -> PyResult<Self> {
        Ok(Self { inner: codec::load_pgm(data).map_err(to_py)? })
    }

    fn to_pgm(&self) -> Vec<u8> {
        codec::write_pgm(&self.inner)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn bits(&self) -> u32 {
        self.inner.bits()
    }

    #[getter]
    fn samples(&self) -> Vec<u16> {
        self.inner.samples().to_vec()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{}, {} bits)", self.inner.width(), self.inner.height(), self.inner.bits())
    }
}

#[pyfunction]
fn compression_ratio(value_bits: u32, dim: usize, codebook_size: usize, count: usize) -> f64 {
    vq::compression_ratio(value_bits, dim, codebook_size, count)
}

/// Entropy estimate of a vector set. Returns `(bits, tree_json)`.
#[pyfunction]
#[pyo3(signature = (vectors, value_bits = 8, strategy = "greedy", seed = 0, max_depth = None))]
fn see_estimate(
    vectors: Vec<Vec<f64>>,
    value_bits: u32,
    strategy: &str,
    seed: u64,
    max_depth: Option<usize>,
) -> PyResult<(f64, String)> {
    let dim = vectors.first().map_or(1, Vec::len);
    let set = VectorSet::from_rows(dim, value_bits, &vectors).map_err(to_py)?;
    let (bits, tree) = see::see_estimate(&set, &config(strategy, seed, max_depth)?).map_err(to_py)?;
    Ok((bits, tree.to_json().to_string()))
}

/// Encodes an image into container bytes.
#[pyfunction]
#[pyo3(signature = (image, block = "4x4", pad = 0, depth = None, seed = 0))]
fn encode(image: &PyImage, block: &str, pad: u16, depth: Option<usize>, seed: u64) -> PyResult<Vec<u8>> {
    let cfg = SeeConfig::greedy().with_seed(seed).with_max_depth(depth);
    let container = codec::encode(&image.inner, &block_spec(block, pad)?, &cfg).map_err(to_py)?;
    container.to_bytes().map_err(to_py)
}

/// Decodes container bytes, optionally using only the first `depth` levels.
#[pyfunction]
#[pyo3(signature = (data, depth = None))]
fn decode(data: &[u8], depth: Option<usize>) -> PyResult<PyImage> {
    let container = Container::from_bytes(data).map_err(to_py)?;
    Ok(PyImage { inner: codec::decode_depth(&container, depth).map_err(to_py)? })
}

/// Encodes in memory and returns the compression report as a dict.
#[pyfunction]
#[pyo3(signature = (image, block = "4x4", pad = 0, seed = 0))]
fn analyze<'py>(py: Python<'py>, image: &PyImage, block: &str, pad: u16, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let container =
        codec::encode(&image.inner, &block_spec(block, pad)?, &SeeConfig::greedy().with_seed(seed)).map_err(to_py)?;
    let report = codec::report(&image.inner, &container).map_err(to_py)?;
    let out = PyDict::new(py);
    for (k, v) in report.rows() {
        out.set_item(k, v)?;
    }
    Ok(out)
}

type ProfileRow = (usize, usize, usize, f64, f64, f64);

/// Per-block spectrum entropy rows `(block_x, block_y, band, re_bits, im_bits, total_bits)`.
#[pyfunction]
#[pyo3(signature = (image, block = "4x4", step = None, seed = 0))]
fn spectrum_profile(
    image: &PyImage,
    block: &str,
    step: Option<f64>,
    seed: u64,
) -> PyResult<Vec<ProfileRow>> {
    let quant = match step {
        Some(s) => SpectrumQuantizer::with_step(s).map_err(to_py)?,
        None => SpectrumQuantizer::default(),
    };
    let rows =
        spectral::spectrum_block_see(&image.inner, &block_spec(block, 0)?, &quant, &SeeConfig::greedy().with_seed(seed))
            .map_err(to_py)?;
    Ok(rows.iter().map(|r| (r.block_x, r.block_y, r.band, r.re_bits, r.im_bits, r.total_bits)).collect())
}

#[pyfunction]
#[pyo3(signature = (a, b, alpha = 1.0, gamma = 0))]
fn chi_distance(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, alpha: f64, gamma: u64) -> PyResult<f64> {
    let params = MatchParams::new(alpha, gamma).map_err(to_py)?;
    object::chi_distance(&to_points(a)?, &to_points(b)?, params).map_err(to_py)
}

/// Minimum χ over scale and point order. Returns `(chi, alpha, gamma)`.
#[pyfunction]
fn best_match(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<(f64, f64, u64)> {
    let (params, chi) = object::best_match(&to_points(a)?, &to_points(b)?).map_err(to_py)?;
    Ok((chi, params.alpha, params.gamma))
}

#[pyfunction]
fn object_see(objects: Vec<Vec<Vec<f64>>>) -> PyResult<f64> {
    let objects = objects.into_iter().map(to_points).collect::<PyResult<Vec<_>>>()?;
    object::object_see(&objects, &SeeConfig::default()).map_err(to_py)
}

/// Lowest-entropy partition of a point set. Returns `(bits, cells)`.
#[pyfunction]
#[pyo3(signature = (points, max_cell = None))]
fn min_partition_see(points: Vec<Vec<f64>>, max_cell: Option<usize>) -> PyResult<(f64, Vec<Vec<usize>>)> {
    let (partition, bits) =
        object::min_partition_see(&to_points(points)?, max_cell, &SeeConfig::default()).map_err(to_py)?;
    Ok((bits, partition.cells))
}

#[pymodule]
fn seequant(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("SeequantError", py.get_type::<SeequantError>())?;
    m.add("RefusedError", py.get_type::<RefusedError>())?;
    m.add_class::<PyImage>()?;
    m.add_function(wrap_pyfunction!(compression_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(see_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_profile, m)?)?;
    m.add_function(wrap_pyfunction!(chi_distance, m)?)?;
    m.add_function(wrap_pyfunction!(best_match, m)?)?;
    m.add_function(wrap_pyfunction!(object_see, m)?)?;
    m.add_function(wrap_pyfunction!(min_partition_see, m)?)?;
    Ok(())
}
