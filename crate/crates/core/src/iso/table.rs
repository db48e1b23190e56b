//! Case tables for marching cubes and marching tetrahedra, generated from
//! cell topology instead of typed in.
//!
//! For each inside/outside corner pattern the generator walks every face
//! (corners listed counter-clockwise seen from outside). Each maximal run
//! of inside corners contributes one segment, from the crossing where the
//! walk enters the run to the crossing where it leaves. Runs never merge
//! across a face, so ambiguous faces always separate their inside corners
//! and neighbouring cells agree on every shared face. Segments chain into
//! loops, which are fan-triangulated; the winding gives normals pointing
//! away from the inside corners.

use std::sync::OnceLock;

/// Cube corners: 0 (0,0,0), 1 (1,0,0), 2 (1,1,0), 3 (0,1,0), then the same
/// four at z = 1.
pub const CUBE_CORNERS: [[u8; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

pub const CUBE_EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

const CUBE_FACES: [&[usize]; 6] = [
    &[0, 3, 2, 1],
    &[4, 5, 6, 7],
    &[0, 1, 5, 4],
    &[3, 7, 6, 2],
    &[0, 4, 7, 3],
    &[1, 2, 6, 5],
];

/// Tetrahedron edges; corners are assumed positively oriented.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

const TET_FACES: [&[usize]; 4] = [&[1, 2, 3], &[0, 3, 2], &[0, 1, 3], &[0, 2, 1]];

/// Triangles (as edge-index triples) for every corner mask.
pub type CaseTable = Vec<Vec<[u8; 3]>>;

fn edge_index(edges: &[[usize; 2]], a: usize, b: usize) -> u8 {
    edges
        .iter()
        .position(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
        .expect("face edge belongs to the cell") as u8
}

fn build(corners: usize, edges: &[[usize; 2]], faces: &[&[usize]]) -> CaseTable {
    (0..1usize << corners)
        .map(|mask| {
            let inside = |c: usize| mask >> c & 1 == 1;
            // next[e] = edge reached after crossing e inside one face.
            let mut next = vec![None; edges.len()];
            for face in faces {
                let n = face.len();
                for s in 0..n {
                    let (a, b) = (face[s], face[(s + 1) % n]);
                    if inside(a) || !inside(b) {
                        continue;
                    }
                    // Entering a run at a→b; walk to its end.
                    let mut t = (s + 1) % n;
                    while inside(face[(t + 1) % n]) {
                        t = (t + 1) % n;
                    }
                    let enter = edge_index(edges, a, b);
                    let leave = edge_index(edges, face[t], face[(t + 1) % n]);
                    next[enter as usize] = Some(leave);
                }
            }
            let mut used = vec![false; edges.len()];
            let mut tris = Vec::new();
            for start in 0..edges.len() {
                if used[start] || next[start].is_none() {
                    continue;
                }
                let mut lp = vec![start as u8];
                used[start] = true;
                let mut e = next[start].unwrap();
                while e as usize != start {
                    used[e as usize] = true;
                    lp.push(e);
                    e = next[e as usize].expect("crossing loops are closed");
                }
                for i in 1..lp.len() - 1 {
                    tris.push([lp[0], lp[i], lp[i + 1]]);
                }
            }
            tris
        })
        .collect()
}

pub fn cube_table() -> &'static CaseTable {
    static T: OnceLock<CaseTable> = OnceLock::new();
    T.get_or_init(|| build(8, &CUBE_EDGES, &CUBE_FACES))
}

pub fn tet_table() -> &'static CaseTable {
    static T: OnceLock<CaseTable> = OnceLock::new();
    T.get_or_init(|| build(4, &TET_EDGES, &TET_FACES))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Classic 256-entry crossing-edge table, bit i = corner i below the
    // level. Only the edge sets are compared, which do not depend on the
    // inside/outside convention.
    const EDGE_TABLE: [u16; 256] = [
        0x0, 0x109, 0x203, 0x30a, 0x406, 0x50f, 0x605, 0x70c, 0x80c, 0x905, 0xa0f, 0xb06, 0xc0a, 0xd03, 0xe09,
        0xf00, 0x190, 0x99, 0x393, 0x29a, 0x596, 0x49f, 0x795, 0x69c, 0x99c, 0x895, 0xb9f, 0xa96, 0xd9a, 0xc93,
        0xf99, 0xe90, 0x230, 0x339, 0x33, 0x13a, 0x636, 0x73f, 0x435, 0x53c, 0xa3c, 0xb35, 0x83f, 0x936, 0xe3a,
        0xf33, 0xc39, 0xd30, 0x3a0, 0x2a9, 0x1a3, 0xaa, 0x7a6, 0x6af, 0x5a5, 0x4ac, 0xbac, 0xaa5, 0x9af, 0x8a6,
        0xfaa, 0xea3, 0xda9, 0xca0, 0x460, 0x569, 0x663, 0x76a, 0x66, 0x16f, 0x265, 0x36c, 0xc6c, 0xd65, 0xe6f,
        0xf66, 0x86a, 0x963, 0xa69, 0xb60, 0x5f0, 0x4f9, 0x7f3, 0x6fa, 0x1f6, 0xff, 0x3f5, 0x2fc, 0xdfc, 0xcf5,
        0xfff, 0xef6, 0x9fa, 0x8f3, 0xbf9, 0xaf0, 0x650, 0x759, 0x453, 0x55a, 0x256, 0x35f, 0x55, 0x15c, 0xe5c,
        0xf55, 0xc5f, 0xd56, 0xa5a, 0xb53, 0x859, 0x950, 0x7c0, 0x6c9, 0x5c3, 0x4ca, 0x3c6, 0x2cf, 0x1c5, 0xcc,
        0xfcc, 0xec5, 0xdcf, 0xcc6, 0xbca, 0xac3, 0x9c9, 0x8c0, 0x8c0, 0x9c9, 0xac3, 0xbca, 0xcc6, 0xdcf, 0xec5,
        0xfcc, 0xcc, 0x1c5, 0x2cf, 0x3c6, 0x4ca, 0x5c3, 0x6c9, 0x7c0, 0x950, 0x859, 0xb53, 0xa5a, 0xd56, 0xc5f,
        0xf55, 0xe5c, 0x15c, 0x55, 0x35f, 0x256, 0x55a, 0x453, 0x759, 0x650, 0xaf0, 0xbf9, 0x8f3, 0x9fa, 0xef6,
        0xfff, 0xcf5, 0xdfc, 0x2fc, 0x3f5, 0xff, 0x1f6, 0x6fa, 0x7f3, 0x4f9, 0x5f0, 0xb60, 0xa69, 0x963, 0x86a,
        0xf66, 0xe6f, 0xd65, 0xc6c, 0x36c, 0x265, 0x16f, 0x66, 0x76a, 0x663, 0x569, 0x460, 0xca0, 0xda9, 0xea3,
        0xfaa, 0x8a6, 0x9af, 0xaa5, 0xbac, 0x4ac, 0x5a5, 0x6af, 0x7a6, 0xaa, 0x1a3, 0x2a9, 0x3a0, 0xd30, 0xc39,
        0xf33, 0xe3a, 0x936, 0x83f, 0xb35, 0xa3c, 0x53c, 0x435, 0x73f, 0x636, 0x13a, 0x33, 0x339, 0x230, 0xe90,
        0xf99, 0xc93, 0xd9a, 0xa96, 0xb9f, 0x895, 0x99c, 0x69c, 0x795, 0x49f, 0x596, 0x29a, 0x393, 0x99, 0x190,
        0xf00, 0xe09, 0xd03, 0xc0a, 0xb06, 0xa0f, 0x905, 0x80c, 0x70c, 0x605, 0x50f, 0x406, 0x30a, 0x203, 0x109,
        0x0,
    ];

    #[test]
    fn cube_edge_usage_matches_reference() {
        let t = cube_table();
        assert_eq!(t.len(), 256);
        for (mask, tris) in t.iter().enumerate() {
            let mut used = 0u16;
            for tri in tris {
                for &e in tri {
                    used |= 1 << e;
                }
            }
            assert_eq!(used, EDGE_TABLE[mask], "mask {mask:#x}");
        }
    }

    #[test]
    fn trivial_cases() {
        let t = cube_table();
        assert!(t[0].is_empty() && t[255].is_empty());
        for c in 0..8 {
            assert_eq!(t[1 << c].len(), 1);
            assert_eq!(t[255 ^ (1 << c)].len(), 1);
        }
        // Ambiguous face: two diagonal inside corners on one face stay apart.
        assert_eq!(t[0b0000_0101].len(), 2);
        let tt = tet_table();
        assert!(tt[0].is_empty() && tt[15].is_empty());
        assert_eq!(tt[1].len(), 1);
        assert_eq!(tt[0b0011].len(), 2);
    }

    #[test]
    fn every_crossing_edge_is_shared_by_two_triangle_sides() {
        // Closed-loop property: within one cell each loop edge (a pair of
        // crossing edges) bounds the cell's patch once, and the patch
        // boundary is made of face segments only.
        for tris in cube_table() {
            let mut count = std::collections::HashMap::new();
            for t in tris {
                for s in 0..3 {
                    let (a, b) = (t[s], t[(s + 1) % 3]);
                    *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                }
            }
            assert!(count.values().all(|&c| c == 1 || c == 2));
        }
    }
}
