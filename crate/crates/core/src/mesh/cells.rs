use serde::Serialize;

use super::{face_vertices, local_edge_index, FaceSlot, LOCAL_EDGES};

#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root so representatives are minimal
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Dense class ids numbered in order of each class's smallest element.
    pub(crate) fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut id_of_root = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut next = 0;
        for x in 0..n {
            let r = self.find(x);
            if id_of_root[r] == usize::MAX {
                id_of_root[r] = next;
                next += 1;
            }
            labels[x] = id_of_root[r];
        }
        (labels, next)
    }
}

/// A tetrahedron edge with local endpoints `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TetEdge {
    pub tet: usize,
    pub a: u8,
    pub b: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeClass {
    pub members: Vec<TetEdge>,
}

impl EdgeClass {
    pub fn valence(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexClass {
    /// Corners `(tet, local vertex)`.
    pub members: Vec<(usize, u8)>,
}

/// Orbits of tetrahedron edges and corners under the gluing identifications.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellClasses {
    pub edges: Vec<EdgeClass>,
    pub vertices: Vec<VertexClass>,
    edge_of: Vec<[usize; 6]>,
    vertex_of: Vec<[usize; 4]>,
}

impl CellClasses {
    pub(crate) fn compute(n: usize, gluings: &[(FaceSlot, FaceSlot)]) -> Self {
        let mut ue = UnionFind::new(6 * n);
        let mut uv = UnionFind::new(4 * n);
        for &(s, t) in gluings {
            let (fs, ft) = (face_vertices(s.face), face_vertices(t.face));
            for i in 0..3 {
                uv.union(4 * s.tet + fs[i] as usize, 4 * t.tet + ft[i] as usize);
                for j in i + 1..3 {
                    ue.union(
                        6 * s.tet + local_edge_index(fs[i], fs[j]),
                        6 * t.tet + local_edge_index(ft[i], ft[j]),
                    );
                }
            }
        }
        let (el, ne) = ue.labels();
        let (vl, nv) = uv.labels();
        let mut edges = vec![EdgeClass { members: vec![] }; ne];
        let mut vertices = vec![VertexClass { members: vec![] }; nv];
        let mut edge_of = vec![[0; 6]; n];
        let mut vertex_of = vec![[0; 4]; n];
        for t in 0..n {
            for (k, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
                let c = el[6 * t + k];
                edge_of[t][k] = c;
                edges[c].members.push(TetEdge { tet: t, a, b });
            }
            for v in 0..4u8 {
                let c = vl[4 * t + v as usize];
                vertex_of[t][v as usize] = c;
                vertices[c].members.push((t, v));
            }
        }
        CellClasses { edges, vertices, edge_of, vertex_of }
    }

    /// Edge class of the local edge `ab` of tetrahedron `tet`.
    pub fn edge_class(&self, tet: usize, a: u8, b: u8) -> usize {
        self.edge_of[tet][local_edge_index(a, b)]
    }

    pub fn vertex_class(&self, tet: usize, v: u8) -> usize {
        self.vertex_of[tet][v as usize]
    }

    pub fn valences(&self) -> Vec<usize> {
        self.edges.iter().map(EdgeClass::valence).collect()
    }
}
