use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::mesh::{norm, sub, TriMesh};

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Aabb {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Self { lo, hi }
    }

    pub fn diagonal(&self) -> f64 {
        norm(sub(self.hi, self.lo))
    }

    pub fn near_boundary(&self, p: [f64; 3], eps: f64) -> bool {
        (0..3).any(|a| (p[a] - self.lo[a]).abs() <= eps || (p[a] - self.hi[a]).abs() <= eps)
    }
}

/// Open (single-use) edges of a mesh, split into those lying on the domain
/// boundary and the rest.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrackCensus {
    pub interface_open_edges: u64,
    pub domain_open_edges: u64,
    pub total_open_edge_length: f64,
}

impl CrackCensus {
    pub fn open_edges(&self) -> u64 {
        self.interface_open_edges + self.domain_open_edges
    }
}

/// Welding tolerance as a fraction of the domain diagonal.
pub const WELD_FRACTION: f64 = 1e-9;

/// Merges vertices closer than `tol`; returns the representative id of each
/// vertex. Buckets are `tol` wide and the 27 surrounding buckets are
/// searched, so no pair within `tol` is missed.
pub fn weld_vertices(vertices: &[[f64; 3]], tol: f64) -> Vec<u32> {
    let key = |p: [f64; 3]| p.map(|c| (c / tol).floor() as i64);
    let mut buckets: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    let mut rep = Vec::with_capacity(vertices.len());
    for (i, &p) in vertices.iter().enumerate() {
        let k = key(p);
        let mut found = None;
        'search: for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(ids) = buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &j in ids {
                            if norm(sub(vertices[j as usize], p)) <= tol {
                                found = Some(rep[j as usize]);
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        rep.push(found.unwrap_or(i as u32));
        buckets.entry(k).or_default().push(i as u32);
    }
    rep
}

/// Counts edges used by exactly one triangle after welding vertices within
/// `1e-9 ×` the domain diagonal. Triangles that collapse under welding are
/// ignored. An open edge is a domain edge when both endpoints lie within
/// `eps` of the domain boundary.
pub fn open_edge_census(mesh: &TriMesh, domain: &Aabb, eps: f64) -> CrackCensus {
    let rep = weld_vertices(&mesh.vertices, WELD_FRACTION * domain.diagonal());
    let mut uses: HashMap<(u32, u32), u32> = HashMap::new();
    for t in &mesh.triangles {
        let w = t.map(|i| rep[i as usize]);
        if w[0] == w[1] || w[1] == w[2] || w[0] == w[2] {
            continue;
        }
        for s in 0..3 {
            let (a, b) = (w[s], w[(s + 1) % 3]);
            *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut open: Vec<(u32, u32)> = uses.into_iter().filter(|&(_, n)| n == 1).map(|(e, _)| e).collect();
    open.sort_unstable();
    let mut c = CrackCensus::default();
    for (a, b) in open {
        let (p, q) = (mesh.vertices[a as usize], mesh.vertices[b as usize]);
        c.total_open_edge_length += norm(sub(p, q));
        if domain.near_boundary(p, eps) && domain.near_boundary(q, eps) {
            c.domain_open_edges += 1;
        } else {
            c.interface_open_edges += 1;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::TriKind;

    fn mesh(vertices: Vec<[f64; 3]>, triangles: Vec<[u32; 3]>) -> TriMesh {
        let n = triangles.len();
        TriMesh { vertices, triangles, tri_level: vec![0; n], tri_kind: vec![TriKind::Regular; n] }
    }

    fn icosahedron() -> TriMesh {
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        let v = vec![
            [-1.0, p, 0.0],
            [1.0, p, 0.0],
            [-1.0, -p, 0.0],
            [1.0, -p, 0.0],
            [0.0, -1.0, p],
            [0.0, 1.0, p],
            [0.0, -1.0, -p],
            [0.0, 1.0, -p],
            [p, 0.0, -1.0],
            [p, 0.0, 1.0],
            [-p, 0.0, -1.0],
            [-p, 0.0, 1.0],
        ];
        let f = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        mesh(v, f)
    }

    fn big_box() -> Aabb {
        Aabb::new([-5.0; 3], [5.0; 3])
    }

    #[test]
    fn closed_icosahedron_has_no_open_edges() {
        let m = icosahedron();
        assert_eq!(open_edge_census(&m, &big_box(), 1e-9), CrackCensus::default());
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn lone_triangle_has_three_interface_edges() {
        let m = mesh(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]);
        let c = open_edge_census(&m, &big_box(), 1e-9);
        assert_eq!((c.interface_open_edges, c.domain_open_edges), (3, 0));
        assert!((c.total_open_edge_length - (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn clipped_plane_has_only_domain_edges() {
        // Plane z = 0.3 across the unit box, two triangles.
        let v = vec![[0.0, 0.0, 0.3], [1.0, 0.0, 0.3], [1.0, 1.0, 0.3], [0.0, 1.0, 0.3]];
        let m = mesh(v, vec![[0, 1, 2], [0, 2, 3]]);
        let c = open_edge_census(&m, &Aabb::new([0.0; 3], [1.0; 3]), 1e-9);
        assert_eq!((c.interface_open_edges, c.domain_open_edges), (0, 4));
    }

    #[test]
    fn duplicated_vertices_are_welded() {
        // Same two triangles with the shared edge stored twice.
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 0.0, 1e-13],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ];
        let m = mesh(v, vec![[0, 1, 2], [3, 4, 5]]);
        let c = open_edge_census(&m, &Aabb::new([-1.0; 3], [2.0; 3]), 1e-9);
        assert_eq!(c.interface_open_edges, 4);
    }
}
