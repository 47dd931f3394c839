use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::cells::UnionFind;
use super::{face_vertices, MeshError, Triangulation};
use crate::linalg::Matrix;
use crate::Rational;

/// Compact index of an ordered pair `(v, w)` with `v != w` among 12 per tetrahedron.
pub(crate) fn pair_index(tet: usize, v: u8, w: u8) -> usize {
    debug_assert_ne!(v, w);
    12 * tet + 3 * v as usize + (w - u8::from(w > v)) as usize
}

/// The two vertices other than `v` and `x`, increasing.
pub(crate) fn remaining(v: u8, x: u8) -> (u8, u8) {
    let mut it = (0..4u8).filter(|&u| u != v && u != x);
    (it.next().unwrap(), it.next().unwrap())
}

/// Identification data for the corner triangles of all tetrahedra.
///
/// Points `p(t, v, w)` sit near corner `v` on edge `vw`; short edges `S(t, v, x)`
/// join the two points of corner `v` lying in the face opposite `x`.
pub(crate) struct CornerComplex {
    pub point_class: Vec<usize>,
    pub short_class: Vec<usize>,
    pub num_shorts: usize,
}

impl CornerComplex {
    pub(crate) fn new(tri: &Triangulation) -> Self {
        let n = tri.num_tets();
        let mut up = UnionFind::new(12 * n);
        let mut us = UnionFind::new(12 * n);
        for &(s, t) in tri.gluings() {
            let (fs, ft) = (face_vertices(s.face), face_vertices(t.face));
            for i in 0..3 {
                us.union(pair_index(s.tet, fs[i], s.face), pair_index(t.tet, ft[i], t.face));
                for j in 0..3 {
                    if i != j {
                        up.union(pair_index(s.tet, fs[i], fs[j]), pair_index(t.tet, ft[i], ft[j]));
                    }
                }
            }
        }
        let (point_class, _) = up.labels();
        let (short_class, num_shorts) = us.labels();
        CornerComplex { point_class, short_class, num_shorts }
    }

    pub(crate) fn point(&self, t: usize, v: u8, w: u8) -> usize {
        self.point_class[pair_index(t, v, w)]
    }

    pub(crate) fn short(&self, t: usize, v: u8, x: u8) -> usize {
        self.short_class[pair_index(t, v, x)]
    }

    /// Signed short edges bounding corner triangle `(t, v)`.
    pub(crate) fn triangle_boundary(&self, t: usize, v: u8) -> [(usize, i64); 3] {
        let w: Vec<u8> = (0..4u8).filter(|&u| u != v).collect();
        [(self.short(t, v, w[2]), 1), (self.short(t, v, w[0]), 1), (self.short(t, v, w[1]), -1)]
    }

    /// Endpoints (from, to) of short edge `S(t, v, x)`.
    pub(crate) fn short_ends(&self, t: usize, v: u8, x: u8) -> (usize, usize) {
        let (w1, w2) = remaining(v, x);
        (self.point(t, v, w1), self.point(t, v, w2))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexLink {
    pub vertex_class: usize,
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub euler_characteristic: i64,
    /// χ recomputed as b₀ − b₁ + b₂ from rational homology of the link.
    pub euler_from_homology: i64,
    pub boundary_components: usize,
    pub orientable: bool,
    pub betti: [usize; 3],
}

impl VertexLink {
    pub fn betti1(&self) -> usize {
        self.betti[1]
    }

    pub fn is_torus(&self) -> bool {
        self.boundary_components == 0 && self.orientable && self.euler_characteristic == 0
    }

    /// A short name for the surface type.
    pub fn kind(&self) -> String {
        let (chi, bd, or) = (self.euler_characteristic, self.boundary_components, self.orientable);
        match (chi, bd, or) {
            (2, 0, true) => "sphere".into(),
            (0, 0, true) => "torus".into(),
            (1, 0, false) => "projective plane".into(),
            (0, 0, false) => "klein bottle".into(),
            (1, 1, true) => "disk".into(),
            (0, 2, true) => "annulus".into(),
            (0, 1, false) => "mobius band".into(),
            _ => format!("surface(chi={chi}, boundary={bd}, orientable={or})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkReport {
    pub links: Vec<VertexLink>,
}

impl LinkReport {
    pub fn all_tori(&self) -> bool {
        !self.links.is_empty() && self.links.iter().all(VertexLink::is_torus)
    }
}

fn rank_of(rows: usize, cols: usize, entries: &[(usize, usize, i64)]) -> usize {
    if rows == 0 || cols == 0 {
        return 0;
    }
    let mut m = Matrix::<Rational>::zeros(rows, cols);
    for &(r, c, v) in entries {
        let cur = m.get(r, c).clone();
        m.set(r, c, cur + Rational::from_integer(v.into()));
    }
    m.rank()
}

/// Assembles the link surface of every vertex class from corner triangles.
pub fn vertex_links(tri: &Triangulation) -> Result<LinkReport, MeshError> {
    let cc = CornerComplex::new(tri);
    let mut links = Vec::new();
    for (vc, class) in tri.cells().vertices.iter().enumerate() {
        let corners = &class.members;
        let mut pts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut shorts: BTreeMap<usize, usize> = BTreeMap::new();
        // short class -> list of (triangle index, coefficient)
        let mut incidence: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
        let mut short_ends: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        let mut point_nodes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut short_local: BTreeMap<usize, Vec<(usize, usize, u8, u8)>> = BTreeMap::new();
        for (ti, &(t, v)) in corners.iter().enumerate() {
            for w in (0..4u8).filter(|&w| w != v) {
                let p = cc.point(t, v, w);
                let next = pts.len();
                pts.entry(p).or_insert(next);
                point_nodes.entry(p).or_default().push(4 * ti + w as usize);
                let s = cc.short(t, v, w);
                let next = shorts.len();
                shorts.entry(s).or_insert(next);
                short_ends.entry(s).or_insert_with(|| cc.short_ends(t, v, w));
                short_local.entry(s).or_default().push((ti, t, v, w));
            }
            for (s, c) in cc.triangle_boundary(t, v) {
                incidence.entry(s).or_default().push((ti, c));
            }
        }
        let (nv, ne, nf) = (pts.len(), shorts.len(), corners.len());
        if let Some((s, inc)) = incidence.iter().find(|(_, inc)| inc.len() > 2) {
            return Err(MeshError::NonManifoldLink {
                vertex: vc,
                reason: format!("link edge {s} meets {} triangles", inc.len()),
            });
        }

        // each link vertex must have a connected fan of triangle corners around it
        let mut fan = UnionFind::new(4 * nf);
        for sides in short_local.values() {
            if let [(ta, t_a, v_a, x_a), (tb, t_b, v_b, x_b)] = sides[..] {
                let (a1, a2) = remaining(v_a, x_a);
                let (b1, b2) = remaining(v_b, x_b);
                debug_assert_eq!(cc.point(t_a, v_a, a1), cc.point(t_b, v_b, b1));
                fan.union(4 * ta + a1 as usize, 4 * tb + b1 as usize);
                fan.union(4 * ta + a2 as usize, 4 * tb + b2 as usize);
            }
        }
        for (&p, nodes) in &point_nodes {
            let mut roots: Vec<usize> = nodes.iter().map(|&x| fan.find(x)).collect();
            roots.sort_unstable();
            roots.dedup();
            if roots.len() > 1 {
                return Err(MeshError::NonManifoldLink {
                    vertex: vc,
                    reason: format!("link vertex {p} has a disconnected star"),
                });
            }
        }

        // orientability by propagating triangle orientations across shared edges
        let mut orient: Vec<i64> = vec![0; nf];
        let mut orientable = true;
        let mut adj: Vec<Vec<(usize, i64, i64)>> = vec![vec![]; nf];
        for inc in incidence.values() {
            if inc.len() == 2 {
                let ((a, ca), (b, cb)) = (inc[0], inc[1]);
                adj[a].push((b, ca, cb));
                adj[b].push((a, cb, ca));
            }
        }
        for start in 0..nf {
            if orient[start] != 0 {
                continue;
            }
            orient[start] = 1;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for &(y, cx, cy) in &adj[x] {
                    // consistent orientations induce opposite signs on a shared edge
                    let want = -orient[x] * cx * cy;
                    if orient[y] == 0 {
                        orient[y] = want;
                        queue.push_back(y);
                    } else if orient[y] != want {
                        orientable = false;
                    }
                }
            }
        }

        let mut uf = UnionFind::new(nv);
        let mut has_boundary = vec![false; nv];
        for (s, inc) in &incidence {
            if inc.len() == 1 {
                let (a, b) = short_ends[s];
                uf.union(pts[&a], pts[&b]);
                has_boundary[pts[&a]] = true;
                has_boundary[pts[&b]] = true;
            }
        }
        let (labels, _) = uf.labels();
        let mut bcomp: Vec<usize> =
            (0..nv).filter(|&i| has_boundary[i]).map(|i| labels[i]).collect();
        bcomp.sort_unstable();
        bcomp.dedup();

        let mut d1 = Vec::new();
        for (s, &si) in &shorts {
            let (a, b) = short_ends[s];
            d1.push((pts[&b], si, 1));
            d1.push((pts[&a], si, -1));
        }
        let mut d2 = Vec::new();
        for (s, inc) in &incidence {
            for &(ti, c) in inc {
                d2.push((shorts[s], ti, c));
            }
        }
        let r1 = rank_of(nv, ne, &d1);
        let r2 = rank_of(ne, nf, &d2);
        let betti = [nv - r1, ne - r1 - r2, nf - r2];
        links.push(VertexLink {
            vertex_class: vc,
            vertices: nv,
            edges: ne,
            triangles: nf,
            euler_characteristic: nv as i64 - ne as i64 + nf as i64,
            euler_from_homology: betti[0] as i64 - betti[1] as i64 + betti[2] as i64,
            boundary_components: bcomp.len(),
            orientable,
            betti,
        });
    }
    Ok(LinkReport { links })
}
