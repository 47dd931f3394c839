//! Shaped 3-2 and 2-3 Pachner moves.
//!
//! A site is described by five abstract vertices P, Q, A, B, C: the
//! bipyramid with axis PQ and equator ABC. The three tetrahedra around PQ
//! are t₁ = PQAB, t₂ = PQBC, t₃ = PQCA and the two on the other side are
//! t₄ = PABC, t₅ = QABC. In t_i = PQxy the angles are α_i at PQ, β_i at Px
//! and γ_i at Py.

use serde::Serialize;
use thiserror::Error;

use crate::angles::ShapeAssignment;
use crate::linalg::Matrix;
use crate::lp::{self, LpOutcome};
use crate::mesh::{angle_slot, build_triangulation, face_vertices, FaceSlot, Sign, Triangulation};
use crate::scalar::Scalar;

const P: usize = 0;
const Q: usize = 1;
const A: usize = 2;
const B: usize = 3;
const C: usize = 4;
const EQUATOR: [usize; 3] = [A, B, C];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PachnerError {
    #[error("invalid site: {0}")]
    InvalidSite(String),
    /// Row multipliers of the 2-3 angle program proving that no strictly
    /// positive solution exists.
    #[error("no strictly positive angles solve the 2-3 move")]
    InfeasiblePositivity { multipliers: Vec<f64> },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, PachnerError> {
    Err(PachnerError::InvalidSite(msg.into()))
}

/// A valence-3 edge with its three tetrahedra and their (α, β, γ).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoveSite32<S> {
    pub edge: usize,
    pub tets: [usize; 3],
    pub angles: [[S; 3]; 3],
}

#[derive(Clone, Debug)]
pub struct MoveResult<S> {
    pub triangulation: Triangulation,
    pub shape: ShapeAssignment<S>,
    /// Indices of the inserted tetrahedra in the new triangulation.
    pub new_tets: Vec<usize>,
    /// (α, β, γ) of the inserted tetrahedra in site labels.
    pub new_angles: Vec<[S; 3]>,
    /// New id of each old edge class; `None` for the removed edge.
    pub edge_map: Vec<Option<usize>>,
    pub removed_edges: Vec<usize>,
    pub added_edges: Vec<usize>,
}

/// Local vertex of each abstract vertex in the tetrahedra of a site.
#[derive(Clone, Debug)]
struct Site {
    tets: Vec<usize>,
    local: Vec<[Option<u8>; 5]>,
}

impl Site {
    fn abstract_of(&self, i: usize, v: u8) -> usize {
        (0..5).find(|&k| self.local[i][k] == Some(v)).expect("vertex of a site tetrahedron")
    }

    fn angle<'a, S>(&self, shape: &'a ShapeAssignment<S>, i: usize, x: usize, y: usize) -> &'a S {
        let (a, b) = (self.local[i][x].unwrap(), self.local[i][y].unwrap());
        &shape.angles[self.tets[i]][angle_slot(a, b)]
    }

    /// Abstract vertices sorted by a linear extension of the vertex orders
    /// of the site tetrahedra.
    fn ranks(&self) -> Result<[usize; 5], PachnerError> {
        let mut before = [[false; 5]; 5];
        for i in 0..self.tets.len() {
            let order: Vec<usize> = (0..4u8).map(|v| self.abstract_of(i, v)).collect();
            for (k, &x) in order.iter().enumerate() {
                for &y in &order[k + 1..] {
                    before[x][y] = true;
                }
            }
        }
        let mut rank = [usize::MAX; 5];
        for r in 0..5 {
            let next = (0..5).find(|&v| rank[v] == usize::MAX && (0..5).all(|u| !before[u][v] || rank[u] != usize::MAX));
            match next {
                Some(v) => rank[v] = r,
                None => return invalid("the vertex orders around the site are cyclic"),
            }
        }
        Ok(rank)
    }
}

/// Walks around the edge class `edge` and labels the bipyramid.
fn site_32(tri: &Triangulation, edge: usize) -> Result<Site, PachnerError> {
    let Some(class) = tri.cells().edges.get(edge) else {
        return invalid(format!("edge {edge} does not exist"));
    };
    if class.members.len() != 3 {
        return invalid(format!("edge {edge} has valence {}", class.members.len()));
    }
    let m = &class.members[0];
    let (p, q) = (m.a.min(m.b), m.a.max(m.b));
    let rest: Vec<u8> = (0..4).filter(|&v| v != p && v != q).collect();
    let mut tets = vec![m.tet];
    let mut local = vec![[None; 5]];
    local[0][P] = Some(p);
    local[0][Q] = Some(q);
    local[0][A] = Some(rest[0]);
    local[0][B] = Some(rest[1]);
    // cross the face of t_i opposite its first equatorial vertex
    for i in 0..3 {
        let (back, front) = (EQUATOR[i], EQUATOR[(i + 1) % 3]);
        let slot = FaceSlot::new(tets[i], local[i][back].unwrap());
        let Some(other) = tri.partner(slot) else {
            return invalid(format!("edge {edge} touches a boundary face"));
        };
        let mut map = [None; 5];
        for x in [P, Q, front] {
            let (t, v) = tri.glued_vertex(slot, local[i][x].unwrap()).expect("glued slot");
            debug_assert_eq!(t, other.tet);
            map[x] = Some(v);
        }
        let last = (0..4u8).find(|v| !map.contains(&Some(*v))).expect("fourth vertex");
        if i == 2 {
            // closing the cycle must land back on t₁ with matching labels
            if other.tet != tets[0] || map != [local[0][P], local[0][Q], local[0][A], None, None] {
                return invalid(format!("the tetrahedra around edge {edge} do not close up"));
            }
            break;
        }
        if tets.contains(&other.tet) {
            return invalid(format!("edge {edge} meets a tetrahedron twice"));
        }
        map[EQUATOR[(i + 2) % 3]] = Some(last);
        tets.push(other.tet);
        local.push(map);
    }
    Ok(Site { tets, local })
}

/// The nine angles of t₁, t₂, t₃ as (α, β, γ).
fn site_angles<S: Scalar>(site: &Site, shape: &ShapeAssignment<S>) -> [[S; 3]; 3] {
    std::array::from_fn(|i| {
        let (x, y) = (EQUATOR[i], EQUATOR[(i + 1) % 3]);
        [site.angle(shape, i, P, Q).clone(), site.angle(shape, i, P, x).clone(), site.angle(shape, i, P, y).clone()]
    })
}

fn balanced<S: Scalar>(angles: &[[S; 3]; 3]) -> bool {
    let sum = angles[0][0].clone() + angles[1][0].clone() + angles[2][0].clone();
    (sum - S::from_ratio(2, 1)).abs().to_f64_lossy() <= 1e-9
}

/// All edges where a 3-2 move applies: internal, outside Γ, balanced,
/// with three distinct tetrahedra forming a bipyramid.
pub fn find_32_sites<S: Scalar>(tri: &Triangulation, shape: &ShapeAssignment<S>) -> Vec<MoveSite32<S>> {
    (0..tri.num_edges())
        .filter(|&e| !tri.gamma().contains(&e) && tri.is_internal_edge(e))
        .filter_map(|e| {
            let site = site_32(tri, e).ok()?;
            site.ranks().ok()?;
            let angles = site_angles(&site, shape);
            balanced(&angles).then(|| MoveSite32 { edge: e, tets: [site.tets[0], site.tets[1], site.tets[2]], angles })
        })
        .collect()
}

/// The map of angles across a 3-2 move: (α, β, γ) of t₄ and t₅.
pub fn map_32<S: Scalar>(t: &[[S; 3]; 3]) -> [[S; 3]; 2] {
    let b = |i: usize| t[i][1].clone();
    let g = |i: usize| t[i][2].clone();
    [[b(1) + g(0), b(0) + g(2), b(2) + g(1)], [b(0) + g(1), b(2) + g(0), b(1) + g(2)]]
}

/// A tetrahedron to insert: abstract vertices and angles by abstract pair.
struct NewTet<S> {
    verts: [usize; 4],
    /// (x, y, angle) for one edge of each opposite pair.
    pairs: [(usize, usize, S); 3],
}

/// Replaces the site tetrahedra by `new`, keeping every outside gluing.
fn rebuild<S: Scalar>(
    tri: &Triangulation,
    shape: &ShapeAssignment<S>,
    site: &Site,
    new: Vec<NewTet<S>>,
) -> Result<(Triangulation, ShapeAssignment<S>, Vec<usize>, Vec<Option<usize>>), PachnerError> {
    let rank = site.ranks()?;
    let n_old = tri.num_tets();
    let kept: Vec<usize> = (0..n_old).filter(|t| !site.tets.contains(t)).collect();
    let mut renum = vec![usize::MAX; n_old];
    for (k, &t) in kept.iter().enumerate() {
        renum[t] = k;
    }
    // local order of each new tetrahedron
    let orders: Vec<[usize; 4]> = new
        .iter()
        .map(|nt| {
            let mut v = nt.verts;
            v.sort_by_key(|&x| rank[x]);
            v
        })
        .collect();
    let new_index = |k: usize| kept.len() + k;
    let local_in = |k: usize, x: usize| orders[k].iter().position(|&y| y == x).map(|p| p as u8);

    // new slot carrying the abstract face `verts`, outside the new interior
    let find_face = |verts: &[usize; 3]| -> Option<(usize, u8)> {
        new.iter().enumerate().find_map(|(k, nt)| {
            if verts.iter().all(|v| nt.verts.contains(v)) {
                let missing = *nt.verts.iter().find(|v| !verts.contains(v)).unwrap();
                Some((k, local_in(k, missing).unwrap()))
            } else {
                None
            }
        })
    };
    let map_slot = |s: FaceSlot| -> Option<FaceSlot> {
        match site.tets.iter().position(|&t| t == s.tet) {
            None => Some(FaceSlot::new(renum[s.tet], s.face)),
            Some(i) => {
                let fv = face_vertices(s.face).map(|v| site.abstract_of(i, v));
                let shared_by_new = new.iter().filter(|nt| fv.iter().all(|v| nt.verts.contains(v))).count();
                if shared_by_new != 1 {
                    return None;
                }
                find_face(&fv).map(|(k, f)| FaceSlot::new(new_index(k), f))
            }
        }
    };

    // signs from the boundary faces each new tetrahedron inherits
    let mut signs: Vec<Sign> = kept.iter().map(|&t| tri.tets()[t].sign).collect();
    let mut new_signs: Vec<Option<Sign>> = vec![None; new.len()];
    for &t in &site.tets {
        for f in 0..4u8 {
            let old = FaceSlot::new(t, f);
            let Some(ns) = map_slot(old) else { continue };
            let k = ns.tet - kept.len();
            let face_sign = tri.tets()[t].face_sign(f);
            let sign = if ns.face % 2 == 0 { face_sign } else { face_sign.flip() };
            match new_signs[k] {
                None => new_signs[k] = Some(sign),
                Some(s) if s != sign => return invalid("the site is not consistently oriented"),
                _ => {}
            }
        }
    }
    for s in &new_signs {
        signs.push(s.ok_or_else(|| PachnerError::InvalidSite("inserted tetrahedron has no boundary face".into()))?);
    }

    let mut gluings = Vec::new();
    for &(s1, s2) in tri.gluings() {
        let in_site = |s: FaceSlot| site.tets.contains(&s.tet);
        match (map_slot(s1), map_slot(s2)) {
            (Some(a), Some(b)) => gluings.push((a, b)),
            (None, None) if in_site(s1) && in_site(s2) => {}
            _ => return invalid("a face of the site is glued inconsistently"),
        }
    }
    for k in 0..new.len() {
        for l in k + 1..new.len() {
            let common: Vec<usize> = new[k].verts.iter().copied().filter(|v| new[l].verts.contains(v)).collect();
            if common.len() == 3 {
                let mk = *new[k].verts.iter().find(|v| !common.contains(v)).unwrap();
                let ml = *new[l].verts.iter().find(|v| !common.contains(v)).unwrap();
                gluings.push((
                    FaceSlot::new(new_index(k), local_in(k, mk).unwrap()),
                    FaceSlot::new(new_index(l), local_in(l, ml).unwrap()),
                ));
            }
        }
    }

    let mut angles: Vec<[S; 3]> = kept.iter().map(|&t| shape.angles[t].clone()).collect();
    for (k, nt) in new.iter().enumerate() {
        let mut triple: [Option<S>; 3] = [None, None, None];
        for (x, y, v) in &nt.pairs {
            triple[angle_slot(local_in(k, *x).unwrap(), local_in(k, *y).unwrap())] = Some(v.clone());
        }
        angles.push(triple.map(|v| v.expect("one angle per opposite pair")));
    }

    // old edge classes through a surviving representative
    let provisional = build_triangulation(&signs, &gluings, &[]).map_err(|e| PachnerError::InvalidSite(e.to_string()))?;
    let edge_map: Vec<Option<usize>> = tri
        .cells()
        .edges
        .iter()
        .map(|class| {
            class.members.iter().find_map(|m| match site.tets.iter().position(|&t| t == m.tet) {
                None => Some(provisional.cells().edge_class(renum[m.tet], m.a, m.b)),
                Some(i) => {
                    let (x, y) = (site.abstract_of(i, m.a), site.abstract_of(i, m.b));
                    (0..new.len()).find_map(|k| {
                        let (a, b) = (local_in(k, x)?, local_in(k, y)?);
                        Some(provisional.cells().edge_class(new_index(k), a, b))
                    })
                }
            })
        })
        .collect();
    let gamma: Vec<usize> = tri.gamma().iter().filter_map(|&e| edge_map[e]).collect();
    let triangulation = build_triangulation(&signs, &gluings, &gamma).map_err(|e| PachnerError::InvalidSite(e.to_string()))?;
    let shape = ShapeAssignment { angles, level: shape.level.clone() };
    Ok((triangulation, shape, (0..new.len()).map(new_index).collect(), edge_map))
}

fn check_bijection(edge_map: &[Option<usize>], new_edges: usize, expected_missing: usize) -> Result<(), PachnerError> {
    let mut hit = vec![false; new_edges];
    for &e in edge_map.iter().flatten() {
        if hit[e] {
            return invalid("two edge classes merge under the move");
        }
        hit[e] = true;
    }
    if hit.iter().filter(|h| !**h).count() != expected_missing {
        return invalid("the move does not preserve the surviving edges");
    }
    Ok(())
}

/// Replaces the three tetrahedra around `edge` by two.
pub fn apply_32<S: Scalar>(
    tri: &Triangulation,
    shape: &ShapeAssignment<S>,
    edge: usize,
) -> Result<MoveResult<S>, PachnerError> {
    if tri.gamma().contains(&edge) {
        return invalid(format!("edge {edge} is in Γ"));
    }
    if edge < tri.num_edges() && !tri.is_internal_edge(edge) {
        return invalid(format!("edge {edge} is not internal"));
    }
    let site = site_32(tri, edge)?;
    let t = site_angles(&site, shape);
    if !balanced(&t) {
        return invalid(format!("edge {edge} is not balanced"));
    }
    let [t4, t5] = map_32(&t);
    let tet = |apex: usize, v: &[S; 3]| NewTet {
        verts: [apex, A, B, C],
        pairs: [(apex, B, v[0].clone()), (apex, A, v[1].clone()), (apex, C, v[2].clone())],
    };
    let new = vec![tet(P, &t4), tet(Q, &t5)];
    let (triangulation, shape, new_tets, edge_map) = rebuild(tri, shape, &site, new)?;
    if edge_map[edge].is_some() {
        return invalid("the removed edge survives");
    }
    check_bijection(&edge_map, triangulation.num_edges(), 0)?;
    Ok(MoveResult {
        triangulation,
        shape,
        new_tets,
        new_angles: vec![t4, t5],
        edge_map,
        removed_edges: vec![edge],
        added_edges: vec![],
    })
}

/// Solves the 3-2 map backwards for (α_i, β_i, γ_i), maximizing the
/// smallest angle.
pub fn solve_23<S: Scalar>(t4: &[S; 3], t5: &[S; 3]) -> Result<[[S; 3]; 3], PachnerError> {
    // unknowns: (α_i, β_i, γ_i) at 3i, 3i+1, 3i+2, then τ
    let one = S::from_ratio(1, 1);
    let zero = S::from_ratio(0, 1);
    let mut rows: Vec<Vec<S>> = Vec::new();
    let mut rhs = Vec::new();
    let mut push = |terms: &[usize], value: S| {
        let mut row = vec![zero.clone(); 10];
        for &k in terms {
            row[k] = row[k].clone() + one.clone();
        }
        row[9] = S::from_ratio(terms.len() as i64, 1);
        rows.push(row);
        rhs.push(value);
    };
    for i in 0..3 {
        push(&[3 * i, 3 * i + 1, 3 * i + 2], one.clone());
    }
    let beta = |i: usize| 3 * i + 1;
    let gamma = |i: usize| 3 * i + 2;
    push(&[beta(1), gamma(0)], t4[0].clone());
    push(&[beta(0), gamma(2)], t4[1].clone());
    push(&[beta(2), gamma(1)], t4[2].clone());
    push(&[beta(0), gamma(1)], t5[0].clone());
    push(&[beta(2), gamma(0)], t5[1].clone());
    push(&[beta(1), gamma(2)], t5[2].clone());
    let mut cost = vec![zero.clone(); 10];
    cost[9] = one;
    let to_f64 = |v: Vec<S>| v.iter().map(|x| x.to_f64_lossy()).collect();
    match lp::solve(&Matrix::from_rows(rows), &rhs, &cost) {
        LpOutcome::Infeasible { farkas } => Err(PachnerError::InfeasiblePositivity { multipliers: to_f64(farkas) }),
        LpOutcome::Unbounded => unreachable!("angles are bounded by their sums"),
        LpOutcome::Optimal { x, value, duals } => {
            if !(value > S::tolerance()) {
                return Err(PachnerError::InfeasiblePositivity { multipliers: to_f64(duals) });
            }
            Ok(std::array::from_fn(|i| std::array::from_fn(|k| x[3 * i + k].clone() + x[9].clone())))
        }
    }
}

/// Replaces the two tetrahedra on either side of `face` by three around a
/// new edge.
pub fn apply_23<S: Scalar>(
    tri: &Triangulation,
    shape: &ShapeAssignment<S>,
    face: FaceSlot,
) -> Result<MoveResult<S>, PachnerError> {
    if face.tet >= tri.num_tets() || face.face > 3 {
        return invalid(format!("face {} of tetrahedron {} does not exist", face.face, face.tet));
    }
    let Some(other) = tri.partner(face) else {
        return invalid("the face is on the boundary");
    };
    if other.tet == face.tet {
        return invalid("the face is glued to its own tetrahedron");
    }
    let fv = face_vertices(face.face);
    let mut l4 = [None; 5];
    let mut l5 = [None; 5];
    l4[P] = Some(face.face);
    l5[Q] = Some(other.face);
    for (k, &v) in fv.iter().enumerate() {
        l4[EQUATOR[k]] = Some(v);
        l5[EQUATOR[k]] = Some(tri.glued_vertex(face, v).expect("glued face").1);
    }
    let site = Site { tets: vec![face.tet, other.tet], local: vec![l4, l5] };
    let read = |i: usize, apex: usize| -> [S; 3] {
        [site.angle(shape, i, apex, B).clone(), site.angle(shape, i, apex, A).clone(), site.angle(shape, i, apex, C).clone()]
    };
    let (t4, t5) = (read(0, P), read(1, Q));
    let solved = solve_23(&t4, &t5)?;
    let new: Vec<NewTet<S>> = (0..3)
        .map(|i| {
            let (x, y) = (EQUATOR[i], EQUATOR[(i + 1) % 3]);
            NewTet {
                verts: [P, Q, x, y],
                pairs: [(P, Q, solved[i][0].clone()), (P, x, solved[i][1].clone()), (P, y, solved[i][2].clone())],
            }
        })
        .collect();
    let (triangulation, shape, new_tets, edge_map) = rebuild(tri, shape, &site, new)?;
    check_bijection(&edge_map, triangulation.num_edges(), 1)?;
    let added = (0..triangulation.num_edges()).find(|e| !edge_map.contains(&Some(*e))).expect("one new edge");
    Ok(MoveResult {
        triangulation,
        shape,
        new_tets,
        new_angles: solved.to_vec(),
        edge_map,
        removed_edges: vec![],
        added_edges: vec![added],
    })
}
