//! Iso-surface extraction, stitching and crack census.

mod census;
mod contour;
mod extract;
mod mesh;
mod resample;
pub mod table;

use std::fmt;
use std::str::FromStr;

pub use census::{open_edge_census, weld_vertices, Aabb, CrackCensus, WELD_FRACTION};
pub use contour::{contour_hexes, hex_is_flat, hex_to_tets, marching_cubes, marching_tetrahedra, Hex, Tet};
pub use extract::{build_dual, extract_dual, extract_resampled, DualLattice, GapMode};
pub use mesh::{export_obj, triangle_area, Node, TriKind, TriMesh, MIN_TRIANGLE_AREA, NODE_SNAP};
pub use resample::{demo_1d, resample_level, resample_to_vertices, resolution_ratio, Demo1d, VertexGrid};

use crate::amr::{level_cell_size, AmrDataset};
use crate::{Error, Result};

/// The three extraction pipelines compared in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Resample,
    DualPadding,
    DualStitch,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Resample, Method::DualPadding, Method::DualStitch];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Resample => "resample",
            Method::DualPadding => "dual-pad",
            Method::DualStitch => "dual-stitch",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resample" => Ok(Method::Resample),
            "dual-pad" | "dual-padding" | "padding" => Ok(Method::DualPadding),
            "dual-stitch" | "stitch" => Ok(Method::DualStitch),
            _ => Err(Error::Unsupported(format!("unknown method {s:?}"))),
        }
    }
}

pub fn extract(ds: &AmrDataset, iso: f64, method: Method) -> Result<TriMesh> {
    match method {
        Method::Resample => extract_resampled(ds, iso),
        Method::DualPadding => extract_dual(ds, iso, GapMode::Padding),
        Method::DualStitch => extract_dual(ds, iso, GapMode::Stitch),
    }
}

/// Physical extent of a dataset (coarsest cells have unit size).
pub fn domain_box(ds: &AmrDataset) -> Aabb {
    Aabb::new([0.0; 3], ds.coarse_dims.map(|d| d as f64 * level_cell_size(0)))
}

/// Boundary tolerance for classifying open edges. Vertex-lattice meshes
/// reach the domain faces; dual meshes stop at the outermost cell centres,
/// at most half a coarse cell inside.
pub fn boundary_eps(method: Method) -> f64 {
    match method {
        Method::Resample => 1e-9,
        Method::DualPadding | Method::DualStitch => 0.5 * level_cell_size(0) + 1e-9,
    }
}

/// Crack census of a mesh produced by `method` on `ds`.
pub fn census(ds: &AmrDataset, mesh: &TriMesh, method: Method) -> CrackCensus {
    open_edge_census(mesh, &domain_box(ds), boundary_eps(method))
}
