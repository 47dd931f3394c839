mod common;

use std::collections::HashMap;

use common::{closed_two_tet_gluings, corpus, glued};
use proptest::prelude::*;
use tqft::mesh::codec::{parse, serialize, TriFile};
use tqft::mesh::{
    build_triangulation, face_vertices, homology_h2_truncated, vertex_links, FaceSlot, Sign, Triangulation,
};

// ---- independent oracle: truncated complex rebuilt from scratch, ranks mod p ----

const P: i64 = 1_000_003;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Cell {
    Long(usize, u8, u8),
    Short(usize, u8, u8),
    Hex(usize, u8),
    Corner(usize, u8),
}

struct Classes(HashMap<Cell, Cell>);

impl Classes {
    fn find(&mut self, c: Cell) -> Cell {
        let p = *self.0.get(&c).unwrap_or(&c);
        if p == c {
            return c;
        }
        let r = self.find(p);
        self.0.insert(c, r);
        r
    }
    fn join(&mut self, a: Cell, b: Cell) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0.insert(ra, rb);
        }
    }
}

fn rank_mod_p(mut m: Vec<Vec<i64>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c].rem_euclid(P) != 0) else { continue };
        m.swap(rank, p);
        let inv = pow_mod(m[rank][c].rem_euclid(P), P - 2);
        for r in 0..m.len() {
            if r != rank && m[r][c].rem_euclid(P) != 0 {
                let f = m[r][c].rem_euclid(P) * inv % P;
                for k in 0..cols {
                    m[r][k] = (m[r][k] - f * m[rank][k]).rem_euclid(P);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn pow_mod(mut b: i64, mut e: i64) -> i64 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % P;
        }
        b = b * b % P;
        e >>= 1;
    }
    acc
}

fn oracle_h2_rank(tri: &Triangulation) -> usize {
    let n = tri.num_tets();
    let mut cl = Classes(HashMap::new());
    for &(s, t) in tri.gluings() {
        let (a, b) = (face_vertices(s.face), face_vertices(t.face));
        cl.join(Cell::Hex(s.tet, s.face), Cell::Hex(t.tet, t.face));
        for i in 0..3 {
            cl.join(Cell::Short(s.tet, a[i], s.face), Cell::Short(t.tet, b[i], t.face));
            for j in i + 1..3 {
                cl.join(Cell::Long(s.tet, a[i], a[j]), Cell::Long(t.tet, b[i], b[j]));
            }
        }
    }
    let mut ones: Vec<Cell> = Vec::new();
    let mut twos: Vec<Cell> = Vec::new();
    for t in 0..n {
        for a in 0..4u8 {
            for b in a + 1..4 {
                ones.push(cl.find(Cell::Long(t, a, b)));
            }
            for x in 0..4u8 {
                if x != a {
                    ones.push(cl.find(Cell::Short(t, a, x)));
                }
            }
            twos.push(cl.find(Cell::Hex(t, a)));
            twos.push(Cell::Corner(t, a));
        }
    }
    ones.sort_by_key(|c| format!("{c:?}"));
    ones.dedup();
    twos.sort_by_key(|c| format!("{c:?}"));
    twos.dedup();
    let row = |c: Cell, cl: &mut Classes| ones.iter().position(|&o| o == cl.find(c)).unwrap();
    let col2 = |c: Cell, cl: &mut Classes| twos.iter().position(|&o| o == cl.find(c)).unwrap();
    let mut d2 = vec![vec![0i64; twos.len()]; ones.len()];
    let mut d3 = vec![vec![0i64; n]; twos.len()];
    let mut done = std::collections::HashSet::new();
    for t in 0..n {
        for f in 0..4u8 {
            let h = col2(Cell::Hex(t, f), &mut cl);
            if done.insert(h) {
                let [a, b, c] = face_vertices(f);
                for (cell, k) in [
                    (Cell::Long(t, a, b), 1),
                    (Cell::Short(t, b, f), 1),
                    (Cell::Long(t, b, c), 1),
                    (Cell::Short(t, c, f), -1),
                    (Cell::Long(t, a, c), -1),
                    (Cell::Short(t, a, f), -1),
                ] {
                    d2[row(cell, &mut cl)][h] += k;
                }
            }
            let sgn = if f % 2 == 0 { 1 } else { -1 };
            d3[h][t] += sgn;
            let corner = col2(Cell::Corner(t, f), &mut cl);
            d3[corner][t] -= sgn;
            let w: Vec<u8> = (0..4).filter(|&u| u != f).collect();
            for (x, k) in [(w[2], 1), (w[0], 1), (w[1], -1)] {
                d2[row(Cell::Short(t, f, x), &mut cl)][corner] += k;
            }
        }
    }
    // the chain complex property is part of the oracle's own sanity
    for i in 0..ones.len() {
        for t in 0..n {
            let s: i64 = (0..twos.len()).map(|j| d2[i][j] * d3[j][t]).sum();
            assert_eq!(s, 0, "oracle boundary maps do not compose to zero");
        }
    }
    twos.len() - rank_mod_p(d2) - rank_mod_p(d3)
}

// ---- corpus examples ----

#[test]
fn fig8_cells() {
    let t = corpus("fig8.tri").triangulation;
    assert_eq!(t.num_edges(), 2);
    assert_eq!(t.cells().valences(), vec![6, 6]);
    assert_eq!(t.cells().vertices.len(), 1);
    assert!(t.is_closed());
    assert!(t.is_consistently_oriented());
    let (p, m) = t.boundary_split();
    assert!(p.is_empty() && m.is_empty());
}

#[test]
fn five2_cells() {
    let t = corpus("five2.tri").triangulation;
    assert_eq!(t.num_edges(), 3);
    assert_eq!(t.cells().vertices.len(), 1);
    assert!(t.is_consistently_oriented());
}

#[test]
fn trefoil_cells() {
    let t = corpus("trefoil.tri").triangulation;
    assert_eq!(t.cells().vertices.len(), 1);
    assert!(t.is_closed());
}

#[test]
fn single_tet_cells_and_links() {
    let t = build_triangulation(&[Sign::Positive], &[], &[]).unwrap();
    assert_eq!(t.cells().valences(), vec![1; 6]);
    assert_eq!(t.cells().vertices.len(), 4);
    let links = vertex_links(&t).unwrap();
    assert_eq!(links.links.len(), 4);
    for l in &links.links {
        assert_eq!(l.euler_characteristic, 1);
        assert_eq!(l.boundary_components, 1);
        assert_eq!(l.kind(), "disk");
    }
}

#[test]
fn corpus_links_are_tori_and_h2_vanishes() {
    for name in ["fig8.tri", "five2.tri", "trefoil.tri"] {
        let t = corpus(name).triangulation;
        let links = vertex_links(&t).unwrap();
        assert_eq!(links.links.len(), 1, "{name}");
        let l = &links.links[0];
        assert!(l.is_torus(), "{name}: {l:?}");
        assert_eq!(l.betti1(), 2);
        let h = homology_h2_truncated(&t);
        assert_eq!(h.rank, 0, "{name}");
        assert!(h.torsion.is_empty());
        assert!(h.is_admissible_topology);
        assert_eq!(oracle_h2_rank(&t), 0);
    }
}

#[test]
fn brute_force_finds_nonadmissible_two_tet_gluing() {
    let all = closed_two_tet_gluings();
    assert_eq!(all.len(), 105);
    let mut bad = 0;
    for t in &all {
        let h = homology_h2_truncated(t);
        assert_eq!(h.rank, oracle_h2_rank(t), "{:?}", t.gluings());
        if !h.is_admissible_topology {
            bad += 1;
        }
    }
    assert!(bad > 0);
    let t = glued(&[1, 1], &[(0, 0, 0, 3), (0, 1, 1, 1), (0, 2, 1, 2), (1, 0, 1, 3)]);
    let h = homology_h2_truncated(&t);
    assert_eq!(h.rank, 1);
    assert!(!h.is_admissible_topology);
}

#[test]
fn codec_five2_file() {
    let f = corpus("five2.tri");
    assert_eq!(f.triangulation.num_tets(), 3);
    assert_eq!(f.triangulation.num_edges(), 3);
    assert_eq!(f.angles.len(), 3);
    let again = parse(&serialize(&f)).unwrap();
    assert_eq!(again, f);
    assert_eq!(serialize(&again), serialize(&f));
}

// ---- properties ----

fn arb_triangulation(max_tets: usize) -> impl Strategy<Value = Triangulation> {
    (1..=max_tets)
        .prop_flat_map(|n| {
            let slots: Vec<FaceSlot> = (0..n).flat_map(|t| (0..4u8).map(move |f| FaceSlot::new(t, f))).collect();
            (
                proptest::collection::vec(any::<bool>(), n),
                Just(slots.clone()).prop_shuffle(),
                0..=2 * n,
            )
        })
        .prop_map(|(signs, slots, k)| {
            let signs: Vec<Sign> = signs.into_iter().map(|s| if s { Sign::Positive } else { Sign::Negative }).collect();
            let gl: Vec<_> = slots.chunks(2).take(k).map(|c| (c[0], c[1])).collect();
            build_triangulation(&signs, &gl, &[]).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn class_sizes_add_up(t in arb_triangulation(4)) {
        let n = t.num_tets();
        prop_assert_eq!(t.cells().valences().iter().sum::<usize>(), 6 * n);
        prop_assert_eq!(t.cells().vertices.iter().map(|v| v.members.len()).sum::<usize>(), 4 * n);
    }

    #[test]
    fn codec_round_trip(t in arb_triangulation(4)) {
        let f = TriFile::new(t);
        let text = serialize(&f);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn oriented_boundary_is_balanced(t in arb_triangulation(4)) {
        let (p, m) = t.boundary_split();
        if t.is_consistently_oriented() {
            prop_assert_eq!(p.len(), m.len());
        }
        if t.is_closed() {
            prop_assert!(p.is_empty() && m.is_empty());
        }
    }

    #[test]
    fn link_euler_characteristic_two_ways(t in arb_triangulation(3)) {
        if let Ok(report) = vertex_links(&t) {
            for l in report.links {
                prop_assert_eq!(l.euler_characteristic, l.euler_from_homology);
                if l.boundary_components == 0 && l.orientable && l.euler_characteristic == 0 {
                    prop_assert_eq!(l.betti1(), 2);
                }
            }
        }
    }

    #[test]
    fn homology_invariant_under_relabeling(t in arb_triangulation(3), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..t.num_tets()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let u = t.relabeled(&perm);
        prop_assert_eq!(homology_h2_truncated(&t), homology_h2_truncated(&u));
        prop_assert_eq!(homology_h2_truncated(&t).rank, oracle_h2_rank(&t));
    }
}
