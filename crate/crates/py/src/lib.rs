//! Python module `amrlab`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use amrlab_core::amr::{read_container, write_container, AmrDataset, FieldKind};
use amrlab_core::codec::{self, CodecId, CompressedField, ErrorBound};
use amrlab_core::iso::{self, Method, TriMesh};
use amrlab_core::metrics;
use amrlab_core::pipeline::{self, CompressedDataset};
use amrlab_core::ScalarGrid;

fn err(e: amrlab_core::Error) -> PyErr {
    match e {
        amrlab_core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn bound(mode: &str, eb: f64) -> PyResult<ErrorBound> {
    ErrorBound::new(mode.parse().map_err(err)?, eb).map_err(err)
}

fn grid(dims: [usize; 3], values: Vec<f64>) -> PyResult<ScalarGrid> {
    ScalarGrid::new(dims, values).map_err(err)
}

/// A two-level AMR hierarchy.
#[pyclass(name = "AmrDataset", module = "amrlab", frozen)]
struct PyDataset {
    inner: AmrDataset,
}

#[pymethods]
impl PyDataset {
    #[getter]
    fn coarse_dims(&self) -> [usize; 3] {
        self.inner.coarse_dims
    }

    #[getter]
    fn finest_dims(&self) -> [usize; 3] {
        self.inner.finest_dims()
    }

    #[getter]
    fn num_levels(&self) -> usize {
        self.inner.num_levels()
    }

    fn num_patches(&self, level: usize) -> PyResult<usize> {
        self.inner
            .levels
            .get(level)
            .map(|l| l.patches.len())
            .ok_or_else(|| PyValueError::new_err(format!("no level {level}")))
    }

    /// Fraction of the domain covered by `level`.
    fn coverage(&self, level: usize) -> PyResult<f64> {
        if level >= self.inner.num_levels() {
            return Err(PyValueError::new_err(format!("no level {level}")));
        }
        Ok(self.inner.coverage(level))
    }

    /// Finest-resolution flattening as `(dims, values)`, x fastest.
    fn uniformize(&self) -> PyResult<([usize; 3], Vec<f64>)> {
        let g = self.inner.uniformize().map_err(err)?;
        Ok((g.dims(), g.into_values()))
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        write_container(&self.inner, path).map_err(err)
    }

    fn __eq__(&self, other: &PyDataset) -> bool {
        self.inner.bit_eq(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "AmrDataset(coarse_dims={:?}, levels={}, stored_values={})",
            self.inner.coarse_dims,
            self.inner.num_levels(),
            self.inner.stored_values()
        )
    }
}

/// Every patch of a dataset compressed with one codec and bound.
#[pyclass(name = "CompressedDataset", module = "amrlab", frozen)]
struct PyCompressed {
    inner: CompressedDataset,
}

#[pymethods]
impl PyCompressed {
    #[getter]
    fn codec(&self) -> &'static str {
        self.inner.codec.as_str()
    }

    #[getter]
    fn level_eb_abs(&self) -> Vec<f64> {
        self.inner.level_eb_abs.clone()
    }

    #[getter]
    fn compressed_bytes(&self) -> usize {
        self.inner.compressed_bytes()
    }

    fn compression_ratio(&self) -> f64 {
        self.inner.compression_ratio()
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        pipeline::write_compressed(&self.inner, &path).map_err(err)
    }
}

/// Triangle mesh with its crack census.
#[pyclass(name = "Mesh", module = "amrlab", frozen)]
struct PyMesh {
    mesh: TriMesh,
    census: iso::CrackCensus,
}

#[pymethods]
impl PyMesh {
    #[getter]
    fn vertices(&self) -> Vec<[f64; 3]> {
        self.mesh.vertices.clone()
    }

    #[getter]
    fn triangles(&self) -> Vec<[u32; 3]> {
        self.mesh.triangles.clone()
    }

    #[getter]
    fn interface_open_edges(&self) -> u64 {
        self.census.interface_open_edges
    }

    #[getter]
    fn domain_open_edges(&self) -> u64 {
        self.census.domain_open_edges
    }

    #[getter]
    fn open_edge_length(&self) -> f64 {
        self.census.total_open_edge_length
    }

    fn area(&self) -> f64 {
        self.mesh.area()
    }

    fn write_obj(&self, path: PathBuf) -> PyResult<()> {
        iso::export_obj(&self.mesh, &path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.mesh.num_triangles()
    }
}

/// Synthetic field of `kind` ("smooth" or "irregular") refined where the
/// coarse gradient exceeds `theta`.
#[pyfunction]
#[pyo3(signature = (kind, dims=64, seed=42, theta=None))]
fn generate(kind: &str, dims: usize, seed: u64, theta: Option<f64>) -> PyResult<PyDataset> {
    let kind: FieldKind = kind.parse().map_err(err)?;
    let theta = theta.unwrap_or_else(|| pipeline::default_theta(kind));
    let inner = pipeline::generate_dataset(kind, dims, seed, theta).map_err(err)?;
    Ok(PyDataset { inner })
}

#[pyfunction]
fn two_level_sphere() -> PyResult<PyDataset> {
    Ok(PyDataset { inner: pipeline::two_level_sphere().map_err(err)? })
}

#[pyfunction]
fn read(path: PathBuf) -> PyResult<PyDataset> {
    Ok(PyDataset { inner: read_container(path).map_err(err)? })
}

#[pyfunction]
fn read_compressed(path: PathBuf) -> PyResult<PyCompressed> {
    Ok(PyCompressed { inner: pipeline::read_compressed(&path).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (ds, codec="LR", eb=1e-3, mode="rel"))]
fn compress(py: Python<'_>, ds: &PyDataset, codec: &str, eb: f64, mode: &str) -> PyResult<PyCompressed> {
    let codec: CodecId = codec.parse().map_err(err)?;
    let b = bound(mode, eb)?;
    let inner = py.detach(|| pipeline::compress_dataset(&ds.inner, codec, b)).map_err(err)?;
    Ok(PyCompressed { inner })
}

#[pyfunction]
fn decompress(py: Python<'_>, cd: &PyCompressed) -> PyResult<PyDataset> {
    Ok(PyDataset { inner: py.detach(|| pipeline::decompress_dataset(&cd.inner)).map_err(err)? })
}

/// Largest error per level; raises ValueError if any exceeds its bound.
#[pyfunction]
fn verify_bound(orig: &PyDataset, recon: &PyDataset, cd: &PyCompressed) -> PyResult<Vec<f64>> {
    pipeline::verify_bound(&orig.inner, &recon.inner, &cd.inner).map_err(err)
}

/// Compresses one grid to an AMRZ byte string.
#[pyfunction]
#[pyo3(signature = (dims, values, codec="LR", eb=1e-3, mode="rel"))]
fn compress_grid<'py>(
    py: Python<'py>,
    dims: [usize; 3],
    values: Vec<f64>,
    codec: &str,
    eb: f64,
    mode: &str,
) -> PyResult<Bound<'py, PyBytes>> {
    let g = grid(dims, values)?;
    let cf = codec::compress(&g, codec.parse().map_err(err)?, bound(mode, eb)?).map_err(err)?;
    Ok(PyBytes::new(py, &cf.to_bytes()))
}

/// Decodes an AMRZ byte string to `(dims, values)`.
#[pyfunction]
fn decompress_grid(data: &[u8]) -> PyResult<([usize; 3], Vec<f64>)> {
    let cf = CompressedField::from_bytes(data.to_vec()).map_err(err)?;
    let g = codec::decompress(&cf).map_err(err)?;
    Ok((g.dims(), g.into_values()))
}

/// Iso-surface by "resample", "dual-pad" or "dual-stitch". `iso` defaults
/// to the mean of the uniformized field.
#[pyfunction]
#[pyo3(signature = (ds, method="resample", iso=None))]
fn extract(py: Python<'_>, ds: &PyDataset, method: &str, iso: Option<f64>) -> PyResult<PyMesh> {
    let method: Method = method.parse().map_err(err)?;
    let iso = match iso {
        Some(v) => v,
        None => pipeline::default_iso(&ds.inner).map_err(err)?,
    };
    let (mesh, census) = py.detach(|| pipeline::extract_with_census(&ds.inner, iso, method)).map_err(err)?;
    Ok(PyMesh { mesh, census })
}

#[pyfunction]
fn psnr(dims: [usize; 3], orig: Vec<f64>, recon: Vec<f64>) -> PyResult<f64> {
    metrics::psnr(&grid(dims, orig)?, &grid(dims, recon)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (dims, orig, recon, window=metrics::SSIM_WINDOW))]
fn ssim3d(dims: [usize; 3], orig: Vec<f64>, recon: Vec<f64>, window: usize) -> PyResult<f64> {
    metrics::ssim3d(&grid(dims, orig)?, &grid(dims, recon)?, window).map_err(err)
}

#[pyfunction]
fn rssim(ssim: f64) -> f64 {
    metrics::rssim(ssim)
}

/// `(original, blocked, resampled)` for a 1D signal.
#[pyfunction]
#[pyo3(signature = (values, block=3))]
fn demo_1d(values: Vec<f64>, block: usize) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let d = iso::demo_1d(&values, block).map_err(err)?;
    Ok((d.original, d.blocked, d.resampled))
}

#[pymodule]
fn amrlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyCompressed>()?;
    m.add_class::<PyMesh>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(two_level_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(read, m)?)?;
    m.add_function(wrap_pyfunction!(read_compressed, m)?)?;
    m.add_function(wrap_pyfunction!(compress, m)?)?;
    m.add_function(wrap_pyfunction!(decompress, m)?)?;
    m.add_function(wrap_pyfunction!(verify_bound, m)?)?;
    m.add_function(wrap_pyfunction!(compress_grid, m)?)?;
    m.add_function(wrap_pyfunction!(decompress_grid, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim3d, m)?)?;
    m.add_function(wrap_pyfunction!(rssim, m)?)?;
    m.add_function(wrap_pyfunction!(demo_1d, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
