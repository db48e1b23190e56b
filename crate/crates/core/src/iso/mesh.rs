use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

/// Triangles below this area are dropped.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;
/// Crossings closer than this (in edge parameter) to an endpoint are moved
/// onto that node and share one vertex per node.
pub const NODE_SNAP: f64 = 1e-9;
/// Node values within this fraction of the data range of the iso value are
/// treated as equal to it (and so as outside).
pub const ISO_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TriKind {
    Regular,
    Stitch,
}

impl TriKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TriKind::Regular => "regular",
            TriKind::Stitch => "stitch",
        }
    }
}

impl fmt::Display for TriKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Indexed triangle mesh with per-triangle provenance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub tri_level: Vec<u8>,
    pub tri_kind: Vec<TriKind>,
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn triangle_area(p: [f64; 3], q: [f64; 3], r: [f64; 3]) -> f64 {
    0.5 * norm(cross(sub(q, p), sub(r, p)))
}

impl TriMesh {
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| triangle_area(self.vertices[t[0] as usize], self.vertices[t[1] as usize], self.vertices[t[2] as usize]))
            .sum()
    }

    /// V − E + F over the vertices referenced by triangles.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        let mut verts = std::collections::HashSet::new();
        for t in &self.triangles {
            for s in 0..3 {
                let (a, b) = (t[s], t[(s + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
                verts.insert(a);
            }
        }
        verts.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    /// Triangle count per (level, kind).
    pub fn groups(&self) -> BTreeMap<(u8, TriKind), usize> {
        let mut m = BTreeMap::new();
        for (l, k) in self.tri_level.iter().zip(&self.tri_kind) {
            *m.entry((*l, *k)).or_insert(0) += 1;
        }
        m
    }

    /// Appends `other`, re-indexing its vertices.
    pub fn append(&mut self, other: &TriMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        self.tri_level.extend_from_slice(&other.tri_level);
        self.tri_kind.extend_from_slice(&other.tri_kind);
    }

    pub fn write_obj(&self, w: &mut impl Write) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
        }
        let mut order: Vec<usize> = (0..self.triangles.len()).collect();
        order.sort_by_key(|&t| (self.tri_level[t], self.tri_kind[t]));
        let mut current = None;
        for t in order {
            let key = (self.tri_level[t], self.tri_kind[t]);
            if current != Some(key) {
                writeln!(w, "g level{}_{}", key.0, key.1)?;
                current = Some(key);
            }
            let [a, b, c] = self.triangles[t];
            writeln!(w, "f {} {} {}", a + 1, b + 1, c + 1)?;
        }
        Ok(())
    }
}

pub fn export_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    mesh.write_obj(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Corner of a contouring cell: a global lattice id, its position and value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub id: u64,
    pub pos: [f64; 3],
    pub value: f64,
}

/// Accumulates contour triangles, sharing one vertex per crossed lattice
/// edge (keyed by the sorted endpoint ids), or per node for snapped
/// crossings (keyed `(id, id)`).
#[derive(Default)]
pub(crate) struct MeshBuilder {
    mesh: TriMesh,
    edge_vertex: HashMap<(u64, u64), u32>,
    iso_eps: f64,
}

impl MeshBuilder {
    #[cfg(test)]
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder for data spanning `range`, see [`ISO_TOLERANCE`].
    pub fn for_range(range: f64) -> Self {
        let iso_eps = if range.is_finite() { ISO_TOLERANCE * range } else { 0.0 };
        Self { iso_eps, ..Self::default() }
    }

    /// Node value as seen by the contouring rules.
    #[inline]
    pub fn value(&self, v: f64, iso: f64) -> f64 {
        if (v - iso).abs() <= self.iso_eps {
            iso
        } else {
            v
        }
    }

    pub fn crossing(&mut self, a: &Node, b: &Node, iso: f64) -> u32 {
        let (lo, hi) = if a.id <= b.id { (a, b) } else { (b, a) };
        if let Some(&v) = self.edge_vertex.get(&(lo.id, hi.id)) {
            return v;
        }
        let (vl, vh) = (self.value(lo.value, iso), self.value(hi.value, iso));
        let t = if vl == vh { 0.5 } else { (iso - vl) / (vh - vl) };
        let v = if t <= NODE_SNAP {
            self.node_vertex(lo)
        } else if t >= 1.0 - NODE_SNAP {
            self.node_vertex(hi)
        } else {
            let p = [0, 1, 2].map(|k| lo.pos[k] + t * (hi.pos[k] - lo.pos[k]));
            self.push_vertex(p)
        };
        self.edge_vertex.insert((lo.id, hi.id), v);
        v
    }

    fn node_vertex(&mut self, n: &Node) -> u32 {
        if let Some(&v) = self.edge_vertex.get(&(n.id, n.id)) {
            return v;
        }
        let v = self.push_vertex(n.pos);
        self.edge_vertex.insert((n.id, n.id), v);
        v
    }

    fn push_vertex(&mut self, p: [f64; 3]) -> u32 {
        self.mesh.vertices.push(p);
        (self.mesh.vertices.len() - 1) as u32
    }

    pub fn triangle(&mut self, t: [u32; 3], level: u8, kind: TriKind) {
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return;
        }
        let v = &self.mesh.vertices;
        if triangle_area(v[t[0] as usize], v[t[1] as usize], v[t[2] as usize]) < MIN_TRIANGLE_AREA {
            return;
        }
        self.mesh.triangles.push(t);
        self.mesh.tri_level.push(level);
        self.mesh.tri_kind.push(kind);
    }

    pub fn finish(self) -> TriMesh {
        self.mesh
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_node_crossings_share_the_node_vertex() {
        let n = |id, x: f64, y: f64, v| Node { id, pos: [x, y, 0.0], value: v };
        let mut b = MeshBuilder::new();
        let c = n(0, 0.0, 0.0, 1e-20);
        let e1 = b.crossing(&c, &n(1, 1.0, 0.0, -1.0), 0.0);
        let e2 = b.crossing(&c, &n(2, 0.0, 1.0, -1.0), 0.0);
        assert_eq!(e1, e2);
        assert_eq!(b.finish().vertices, vec![[0.0; 3]]);
    }

    #[test]
    fn values_within_tolerance_sit_on_the_iso_value() {
        let n = |id, x: f64, v| Node { id, pos: [x, 0.0, 0.0], value: v };
        let mut b = MeshBuilder::for_range(1.0);
        assert_eq!(b.value(3e-19, 0.0), 0.0);
        assert_eq!(b.value(1e-6, 0.0), 1e-6);
        let e = b.crossing(&n(0, 0.0, -1e-18), &n(1, 1.0, 2e-18 + 1e-3), 0.0);
        assert_eq!(b.finish().vertices[e as usize], [0.0; 3]);
    }

    #[test]
    fn builder_welds_and_drops_degenerates() {
        let n = |id, x: f64, v| Node { id, pos: [x, 0.0, 0.0], value: v };
        let mut b = MeshBuilder::new();
        let e1 = b.crossing(&n(0, 0.0, 0.0), &n(1, 1.0, 1.0), 0.25);
        let e2 = b.crossing(&n(1, 1.0, 1.0), &n(0, 0.0, 0.0), 0.25);
        assert_eq!(e1, e2);
        b.triangle([e1, e1, e2], 0, TriKind::Regular);
        let m = b.finish();
        assert_eq!(m.vertices, vec![[0.25, 0.0, 0.0]]);
        assert!(m.triangles.is_empty());
    }

    #[test]
    fn equal_values_cross_at_midpoint() {
        let mut b = MeshBuilder::new();
        let a = Node { id: 3, pos: [0.0; 3], value: 1.0 };
        let c = Node { id: 1, pos: [2.0, 0.0, 0.0], value: 1.0 };
        b.crossing(&a, &c, 1.0);
        assert_eq!(b.finish().vertices[0], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn obj_groups_by_level_and_kind() {
        let mesh = TriMesh {
            vertices: vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            triangles: vec![[0, 1, 2], [0, 2, 1], [1, 0, 2]],
            tri_level: vec![1, 0, 0],
            tri_kind: vec![TriKind::Regular, TriKind::Stitch, TriKind::Regular],
        };
        let mut out = Vec::new();
        mesh.write_obj(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let groups: Vec<&str> = text.lines().filter(|l| l.starts_with('g')).collect();
        assert_eq!(groups, ["g level0_regular", "g level0_stitch", "g level1_regular"]);
        assert!(text.contains("f 2 1 3"));
    }
}
