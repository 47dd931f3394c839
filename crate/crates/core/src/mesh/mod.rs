//! Triangulated pseudo 3-manifolds glued from tetrahedra with ordered vertices.
//!
//! A gluing pairs two faces and identifies them by the unique order-preserving
//! bijection of their vertices, so no permutation data is stored.

mod cells;
pub mod codec;
mod homology;
mod links;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use cells::{CellClasses, EdgeClass, TetEdge, VertexClass};
pub use homology::{homology_h2_truncated, smith_invariants, HomologyReport};
pub use links::{vertex_links, LinkReport, VertexLink};

/// The six edges of a tetrahedron as local vertex pairs.
pub const LOCAL_EDGES: [(u8, u8); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Index into [`LOCAL_EDGES`] of the edge joining `a` and `b`.
pub fn local_edge_index(a: u8, b: u8) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => panic!("not an edge: {a}{b}"),
    }
}

/// Angle slot (0, 1, 2 for α₁, α₂, α₃) carried by a local edge.
///
/// Opposite edges share a slot: 01/23, 02/13, 03/12.
pub fn angle_slot(a: u8, b: u8) -> usize {
    match local_edge_index(a, b) {
        0 | 5 => 0,
        1 | 4 => 1,
        _ => 2,
    }
}

/// Vertices of face `f` (the face opposite vertex `f`) in increasing order.
pub fn face_vertices(f: u8) -> [u8; 3] {
    let mut out = [0u8; 3];
    let mut k = 0;
    for v in 0..4 {
        if v != f {
            out[k] = v;
            k += 1;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn from_i32(s: i32) -> Option<Sign> {
        match s {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Tetrahedron {
    pub id: usize,
    pub sign: Sign,
}

impl Tetrahedron {
    /// Sign of the face opposite vertex `face`: (−1)^face · sign(T).
    pub fn face_sign(&self, face: u8) -> Sign {
        if face % 2 == 0 {
            self.sign
        } else {
            self.sign.flip()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FaceSlot {
    pub tet: usize,
    pub face: u8,
}

impl FaceSlot {
    pub fn new(tet: usize, face: u8) -> Self {
        FaceSlot { tet, face }
    }
}

impl fmt::Display for FaceSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}∂{}", self.tet, self.face)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("face {0} is glued more than once")]
    DuplicateSlot(FaceSlot),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("face {0} is paired with itself")]
    SelfPairedFace(FaceSlot),
    #[error("link of vertex class {vertex} is not a surface: {reason}")]
    NonManifoldLink { vertex: usize, reason: String },
}

/// An immutable glued complex with its cell classes computed at build time.
#[derive(Clone, Debug)]
pub struct Triangulation {
    tets: Vec<Tetrahedron>,
    gluings: Vec<(FaceSlot, FaceSlot)>,
    partner: Vec<[Option<FaceSlot>; 4]>,
    gamma: BTreeSet<usize>,
    cells: CellClasses,
}

impl PartialEq for Triangulation {
    fn eq(&self, other: &Self) -> bool {
        self.tets == other.tets && self.gluings == other.gluings && self.gamma == other.gamma
    }
}

/// Builds a triangulation from tetrahedron signs and face pairings.
///
/// `gamma` lists edge class ids of the complex being built.
pub fn build_triangulation(
    signs: &[Sign],
    gluings: &[(FaceSlot, FaceSlot)],
    gamma: &[usize],
) -> Result<Triangulation, MeshError> {
    let n = signs.len();
    let mut partner = vec![[None; 4]; n];
    let mut canon = Vec::with_capacity(gluings.len());
    for &(a, b) in gluings {
        for s in [a, b] {
            if s.tet >= n {
                return Err(MeshError::InvalidIndex(format!("tetrahedron {} of {}", s.tet, n)));
            }
            if s.face > 3 {
                return Err(MeshError::InvalidIndex(format!("face {} of tetrahedron {}", s.face, s.tet)));
            }
        }
        if a == b {
            return Err(MeshError::SelfPairedFace(a));
        }
        for s in [a, b] {
            if partner[s.tet][s.face as usize].is_some() {
                return Err(MeshError::DuplicateSlot(s));
            }
        }
        partner[a.tet][a.face as usize] = Some(b);
        partner[b.tet][b.face as usize] = Some(a);
        canon.push(if a < b { (a, b) } else { (b, a) });
    }
    canon.sort();
    let tets = signs.iter().enumerate().map(|(id, &sign)| Tetrahedron { id, sign }).collect();
    let cells = CellClasses::compute(n, &canon);
    let mut gamma_set = BTreeSet::new();
    for &e in gamma {
        if e >= cells.edges.len() {
            return Err(MeshError::InvalidIndex(format!("edge class {} of {}", e, cells.edges.len())));
        }
        gamma_set.insert(e);
    }
    Ok(Triangulation { tets, gluings: canon, partner, gamma: gamma_set, cells })
}

impl Triangulation {
    pub fn tets(&self) -> &[Tetrahedron] {
        &self.tets
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn signs(&self) -> Vec<Sign> {
        self.tets.iter().map(|t| t.sign).collect()
    }

    /// Gluings in canonical order, each pair listed with the smaller slot first.
    pub fn gluings(&self) -> &[(FaceSlot, FaceSlot)] {
        &self.gluings
    }

    pub fn partner(&self, slot: FaceSlot) -> Option<FaceSlot> {
        self.partner[slot.tet][slot.face as usize]
    }

    pub fn gamma(&self) -> &BTreeSet<usize> {
        &self.gamma
    }

    pub fn cells(&self) -> &CellClasses {
        &self.cells
    }

    pub fn num_edges(&self) -> usize {
        self.cells.edges.len()
    }

    pub fn is_closed(&self) -> bool {
        self.gluings.len() * 2 == self.tets.len() * 4
    }

    /// Unglued faces, in slot order.
    pub fn boundary_slots(&self) -> Vec<FaceSlot> {
        let mut out = Vec::new();
        for t in 0..self.tets.len() {
            for f in 0..4u8 {
                if self.partner[t][f as usize].is_none() {
                    out.push(FaceSlot::new(t, f));
                }
            }
        }
        out
    }

    /// Splits the boundary faces by face sign into (∂₊, ∂₋).
    pub fn boundary_split(&self) -> (Vec<FaceSlot>, Vec<FaceSlot>) {
        self.boundary_slots()
            .into_iter()
            .partition(|s| self.tets[s.tet].face_sign(s.face) == Sign::Positive)
    }

    /// True when every gluing joins a positive face to a negative one.
    pub fn is_consistently_oriented(&self) -> bool {
        self.gluings.iter().all(|&(a, b)| {
            self.tets[a.tet].face_sign(a.face) != self.tets[b.tet].face_sign(b.face)
        })
    }

    /// An edge class is internal when none of its tetrahedron edges lies in a boundary face.
    pub fn is_internal_edge(&self, edge: usize) -> bool {
        self.cells.edges[edge].members.iter().all(|m| {
            (0..4u8)
                .filter(|&f| f != m.a && f != m.b)
                .all(|f| self.partner(FaceSlot::new(m.tet, f)).is_some())
        })
    }

    /// Internal edge classes that are not in Γ.
    pub fn balance_edges(&self) -> Vec<usize> {
        (0..self.num_edges())
            .filter(|&e| !self.gamma.contains(&e) && self.is_internal_edge(e))
            .collect()
    }

    /// Relabels tetrahedra: old tetrahedron `i` becomes `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Triangulation {
        assert_eq!(perm.len(), self.tets.len());
        let mut signs = vec![Sign::Positive; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            signs[p] = self.tets[i].sign;
        }
        let gl: Vec<_> = self
            .gluings
            .iter()
            .map(|&(a, b)| (FaceSlot::new(perm[a.tet], a.face), FaceSlot::new(perm[b.tet], b.face)))
            .collect();
        build_triangulation(&signs, &gl, &[]).expect("relabeling preserves validity")
    }

    /// Vertex classes of a face slot's three vertices are identified across a gluing
    /// position by position; returns the partner vertex of local vertex `v` on `slot`.
    pub fn glued_vertex(&self, slot: FaceSlot, v: u8) -> Option<(usize, u8)> {
        let other = self.partner(slot)?;
        let pos = face_vertices(slot.face).iter().position(|&w| w == v)?;
        Some((other.tet, face_vertices(other.face)[pos]))
    }
}
