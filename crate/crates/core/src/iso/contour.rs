//! Cell contouring on top of the generated case tables.

use super::mesh::{MeshBuilder, Node, TriKind, TriMesh};
use super::table::{cube_table, tet_table, CUBE_CORNERS, CUBE_EDGES, TET_EDGES};
use crate::grid::flat_index;
use crate::ScalarGrid;

/// Hexahedral cell, corners indexed `x | y << 1 | z << 2`. Corners may
/// coincide (same id), which turns the cell into a pyramid, wedge or other
/// degenerate shape.
pub type Hex = [Node; 8];

pub type Tet = [Node; 4];

#[inline]
fn table_corner(c: usize) -> usize {
    let [x, y, z] = CUBE_CORNERS[c];
    x as usize | (y as usize) << 1 | (z as usize) << 2
}

/// True when, along some axis, every corner shares its id with the corner
/// opposite it: the cell has collapsed to zero thickness.
pub fn hex_is_flat(h: &Hex) -> bool {
    (0..3).any(|axis| {
        let bit = 1 << axis;
        (0..8).filter(|c| c & bit == 0).all(|c| h[c].id == h[c | bit].id)
    })
}

pub(crate) fn contour_hex(b: &mut MeshBuilder, h: &Hex, iso: f64, level: u8, kind: TriKind) {
    let nodes: [&Node; 8] = std::array::from_fn(|c| &h[table_corner(c)]);
    let mask = (0..8).fold(0usize, |m, c| m | ((b.value(nodes[c].value, iso) > iso) as usize) << c);
    for tri in &cube_table()[mask] {
        let t = tri.map(|e| {
            let [p, q] = CUBE_EDGES[e as usize];
            b.crossing(nodes[p], nodes[q], iso)
        });
        b.triangle(t, level, kind);
    }
}

pub(crate) fn contour_tet(b: &mut MeshBuilder, t: &Tet, iso: f64, level: u8, kind: TriKind) {
    let mask = (0..4).fold(0usize, |m, c| m | ((b.value(t[c].value, iso) > iso) as usize) << c);
    for tri in &tet_table()[mask] {
        let v = tri.map(|e| {
            let [p, q] = TET_EDGES[e as usize];
            b.crossing(&t[p], &t[q], iso)
        });
        b.triangle(v, level, kind);
    }
}

/// Marching cubes over a full lattice of point samples with spacing `h`;
/// point `(i, j, k)` sits at `origin + h·(i, j, k)`. Inside means `> iso`.
pub fn marching_cubes(lattice: &ScalarGrid, origin: [f64; 3], h: f64, iso: f64) -> TriMesh {
    let d = lattice.dims();
    let mut b = MeshBuilder::for_range(lattice.value_range());
    if d.iter().any(|&n| n < 2) {
        return b.finish();
    }
    let node = |i: usize, j: usize, k: usize| Node {
        id: flat_index(d, i, j, k) as u64,
        pos: [origin[0] + h * i as f64, origin[1] + h * j as f64, origin[2] + h * k as f64],
        value: lattice.get(i, j, k),
    };
    for k in 0..d[2] - 1 {
        for j in 0..d[1] - 1 {
            for i in 0..d[0] - 1 {
                let hex: Hex = std::array::from_fn(|c| node(i + (c & 1), j + (c >> 1 & 1), k + (c >> 2 & 1)));
                contour_hex(&mut b, &hex, iso, 0, TriKind::Regular);
            }
        }
    }
    b.finish()
}

pub fn contour_hexes<'a>(cells: impl IntoIterator<Item = &'a Hex>, iso: f64) -> TriMesh {
    let cells: Vec<&Hex> = cells.into_iter().collect();
    let mut b = MeshBuilder::for_range(node_range(cells.iter().flat_map(|h| h.iter())));
    for h in cells {
        contour_hex(&mut b, h, iso, 0, TriKind::Regular);
    }
    b.finish()
}

/// Marching tetrahedra over an explicit tet list (positively oriented
/// corners for outward-facing triangles).
pub fn marching_tetrahedra(tets: &[Tet], iso: f64) -> TriMesh {
    let mut b = MeshBuilder::for_range(node_range(tets.iter().flatten()));
    for t in tets {
        contour_tet(&mut b, t, iso, 0, TriKind::Regular);
    }
    b.finish()
}

fn node_range<'a>(nodes: impl Iterator<Item = &'a Node>) -> f64 {
    let (lo, hi) = nodes.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), n| (lo.min(n.value), hi.max(n.value)));
    if lo <= hi {
        hi - lo
    } else {
        0.0
    }
}

/// Six positively oriented tetrahedra sharing the 0–7 diagonal of a hex.
pub fn hex_to_tets(h: &Hex) -> [Tet; 6] {
    // Paths 0 → 7 through the cube edges, one per axis permutation.
    const PATHS: [[usize; 2]; 6] = [[1, 3], [2, 6], [4, 5], [1, 5], [2, 3], [4, 6]];
    let mut out = [[h[0]; 4]; 6];
    for (t, p) in PATHS.iter().enumerate() {
        let mut tet = [h[0], h[p[0]], h[p[1]], h[7]];
        if orientation(&tet) < 0.0 {
            tet.swap(1, 2);
        }
        out[t] = tet;
    }
    out
}

fn orientation(t: &Tet) -> f64 {
    use super::mesh::{cross, sub};
    let a = sub(t[1].pos, t[0].pos);
    let b = sub(t[2].pos, t[0].pos);
    let c = sub(t[3].pos, t[0].pos);
    let n = cross(a, b);
    n[0] * c[0] + n[1] * c[1] + n[2] * c[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_hex(values: [f64; 8]) -> Hex {
        std::array::from_fn(|c| Node {
            id: c as u64,
            pos: [(c & 1) as f64, (c >> 1 & 1) as f64, (c >> 2 & 1) as f64],
            value: values[c],
        })
    }

    #[test]
    fn single_corner_gives_one_outward_triangle() {
        let mut v = [0.0; 8];
        v[0] = 1.0;
        let m = contour_hexes(&[unit_hex(v)], 0.5);
        assert_eq!(m.num_triangles(), 1);
        let t = m.triangles[0].map(|i| m.vertices[i as usize]);
        let n = super::super::mesh::cross(super::super::mesh::sub(t[1], t[0]), super::super::mesh::sub(t[2], t[0]));
        // Inside corner at the origin, normal points away from it.
        assert!(n.iter().all(|&c| c > 0.0));
    }

    #[test]
    fn all_below_is_empty() {
        assert!(contour_hexes(&[unit_hex([0.0; 8])], 0.5).is_empty());
        assert!(marching_tetrahedra(&hex_to_tets(&unit_hex([0.0; 8])), 0.5).is_empty());
    }

    #[test]
    fn ties_count_as_outside() {
        assert!(contour_hexes(&[unit_hex([0.5; 8])], 0.5).is_empty());
    }

    #[test]
    fn tets_tile_the_cube() {
        let tets = hex_to_tets(&unit_hex([0.0; 8]));
        let vol: f64 = tets.iter().map(|t| orientation(t) / 6.0).sum();
        assert!((vol - 1.0).abs() < 1e-12);
        assert!(tets.iter().all(|t| orientation(t) > 0.0));
    }

    #[test]
    fn single_tet_corner_gives_one_triangle() {
        let mut tet = hex_to_tets(&unit_hex([0.0; 8]))[0];
        tet[2].value = 1.0;
        let m = marching_tetrahedra(&[tet], 0.5);
        assert_eq!(m.num_triangles(), 1);
    }

    #[test]
    fn tets_and_cube_cross_the_same_cube_edges() {
        // For every sign pattern, the cube edges carrying a vertex agree
        // between marching cubes and the six-tet split. Tets may add
        // vertices on face and body diagonals only.
        for mask in 0..256usize {
            let v: [f64; 8] = std::array::from_fn(|c| if mask >> c & 1 == 1 { 1.0 } else { 0.0 });
            let hex = unit_hex(v);
            let key = |m: &TriMesh| {
                let mut s: Vec<[i64; 3]> = m
                    .vertices
                    .iter()
                    .filter(|p| p.iter().filter(|&&c| c == 0.5).count() == 1)
                    .map(|p| p.map(|c| (c * 2.0) as i64))
                    .collect();
                s.sort();
                s
            };
            let a = contour_hexes(&[hex], 0.5);
            let b = marching_tetrahedra(&hex_to_tets(&hex), 0.5);
            assert_eq!(key(&a), key(&b), "mask {mask:#x}");
        }
    }

    #[test]
    fn flat_detection() {
        let mut h = unit_hex([0.0; 8]);
        assert!(!hex_is_flat(&h));
        for c in [1, 3, 5, 7] {
            h[c].id = h[c - 1].id;
        }
        assert!(hex_is_flat(&h));
    }
}
