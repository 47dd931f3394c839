#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tqft::mesh::codec::{self, TriFile};
use tqft::mesh::{build_triangulation, FaceSlot, Sign, Triangulation};
use tqft::{ExactShape, Rational, Scalar, ShapeAssignment};

fn rat(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

pub fn corpus(name: &str) -> TriFile {
    let text = std::fs::read_to_string(corpus_path(name)).expect("corpus file");
    codec::parse(&text).expect("corpus parses")
}

pub fn glued(signs: &[i32], list: &[(usize, u8, usize, u8)]) -> Triangulation {
    let signs: Vec<Sign> = signs.iter().map(|&s| Sign::from_i32(s).unwrap()).collect();
    let gl: Vec<_> = list.iter().map(|&(a, f, b, g)| (FaceSlot::new(a, f), FaceSlot::new(b, g))).collect();
    build_triangulation(&signs, &gl, &[]).unwrap()
}

/// All perfect matchings of `items` (no element paired with itself).
pub fn matchings<T: Copy>(items: &[T]) -> Vec<Vec<(T, T)>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let first = items[0];
    let mut out = Vec::new();
    for i in 1..items.len() {
        let rest: Vec<T> = items[1..].iter().enumerate().filter(|&(j, _)| j + 1 != i).map(|(_, &x)| x).collect();
        for mut m in matchings(&rest) {
            m.insert(0, (first, items[i]));
            out.push(m);
        }
    }
    out
}

/// Closed gluings of two tetrahedra, all signs positive.
pub fn closed_two_tet_gluings() -> Vec<Triangulation> {
    let slots: Vec<FaceSlot> = (0..2).flat_map(|t| (0..4u8).map(move |f| FaceSlot::new(t, f))).collect();
    matchings(&slots)
        .into_iter()
        .map(|m| build_triangulation(&[Sign::Positive, Sign::Positive], &m, &[]).unwrap())
        .collect()
}

/// Three tetrahedra PQAB, PQBC, PQAC (global order P<Q<A<B<C) glued around PQ.
pub fn bipyramid(signs: [i32; 3]) -> Triangulation {
    glued(&signs, &[(0, 2, 1, 3), (1, 2, 2, 2), (2, 3, 0, 3)])
}

pub fn oriented_bipyramid() -> Triangulation {
    for bits in 0..8 {
        let signs = [0, 1, 2].map(|k| if bits >> k & 1 == 0 { 1 } else { -1 });
        let tri = bipyramid(signs);
        if tri.is_consistently_oriented() {
            return tri;
        }
    }
    panic!("no consistent orientation of the bipyramid");
}

/// The edge class of local edge 01 (PQ) in every tetrahedron.
pub fn axis(tri: &Triangulation) -> usize {
    tri.cells().edge_class(0, 0, 1)
}

/// Random rational angles with the PQ angles summing to 2.
pub fn random_site_shape(rng: &mut ChaCha8Rng, n: i64) -> ExactShape {
    loop {
        let a0 = rng.gen_range(2..n - 1);
        let a1 = rng.gen_range(2..n - 1);
        let a2 = 2 * n - a0 - a1;
        if !(2..=n - 2).contains(&a2) {
            continue;
        }
        let angles = [a0, a1, a2]
            .map(|a| {
                let b = rng.gen_range(1..n - a);
                [rat(a, n), rat(b, n), rat(n - a - b, n)]
            })
            .to_vec();
        return ShapeAssignment::new(angles, rat(0, 1)).unwrap();
    }
}
