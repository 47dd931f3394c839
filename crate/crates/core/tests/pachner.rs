mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tqft::angles::edge_weights;
use common::{axis, oriented_bipyramid, random_site_shape};
use tqft::mesh::{build_triangulation, FaceSlot, Triangulation};
use tqft::pachner::{apply_23, apply_32, find_32_sites, map_32, solve_23, PachnerError};
use tqft::qdilog::QDilog;
use tqft::state::{assemble, StateConfig};
use tqft::{ExactShape, Rational, Scalar, Shape, ShapeAssignment};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn figure_eight() -> (Triangulation, Shape) {
    let f = common::corpus("fig8.tri");
    let shape = Shape::uniform(2, [1.0 / 3.0; 3]).unwrap();
    (f.triangulation, shape)
}

fn figure_eight_exact() -> (Triangulation, ExactShape) {
    let f = common::corpus("fig8.tri");
    (f.triangulation, ShapeAssignment::uniform(2, [q(1, 3), q(1, 3), q(1, 3)]).unwrap())
}

fn assert_weights_carried<S: Scalar + std::fmt::Debug>(
    before: (&Triangulation, &ShapeAssignment<S>),
    after: (&Triangulation, &ShapeAssignment<S>),
    edge_map: &[Option<usize>],
) {
    let w0 = edge_weights(before.0, before.1).unwrap().weights;
    let w1 = edge_weights(after.0, after.1).unwrap().weights;
    for (e, m) in edge_map.iter().enumerate() {
        if let Some(m) = m {
            assert_eq!(w0[e], w1[*m], "weight of edge {e}");
        }
    }
}

#[test]
fn figure_eight_has_no_sites() {
    let (tri, shape) = figure_eight();
    assert!(find_32_sites(&tri, &shape).is_empty());
    let e = 0;
    assert!(matches!(apply_32(&tri, &shape, e), Err(PachnerError::InvalidSite(_))));
}

#[test]
fn bipyramid_has_one_site() {
    let tri = oriented_bipyramid();
    assert_eq!(tri.num_tets(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let shape = random_site_shape(&mut rng, 24).to_f64();
    let sites = find_32_sites(&tri, &shape);
    assert_eq!(sites.len(), 1);
    assert_eq!(sites[0].edge, axis(&tri));
    let mut tets = sites[0].tets;
    tets.sort();
    assert_eq!(tets, [0, 1, 2]);
    for a in &sites[0].angles {
        assert!(a.iter().all(|x| *x > 0.0));
    }
}

#[test]
fn unbalanced_bipyramid_has_no_site() {
    let tri = oriented_bipyramid();
    let shape = Shape::uniform(3, [1.0 / 3.0; 3]).unwrap();
    assert!(find_32_sites(&tri, &shape).is_empty());
    assert!(matches!(apply_32(&tri, &shape, axis(&tri)), Err(PachnerError::InvalidSite(_))));
}

#[test]
fn gamma_edges_are_not_sites() {
    let base = oriented_bipyramid();
    let e = axis(&base);
    let tri = build_triangulation(&base.signs(), base.gluings(), &[e]).unwrap();
    let shape = Shape::uniform(3, [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]).unwrap();
    assert!(find_32_sites(&tri, &shape).is_empty());
    assert!(matches!(apply_32(&tri, &shape, e), Err(PachnerError::InvalidSite(_))));
}

#[test]
fn symmetric_site_maps_to_regular_pair() {
    let t: [[Rational; 3]; 3] = std::array::from_fn(|_| [q(2, 3), q(1, 6), q(1, 6)]);
    let third = [q(1, 3), q(1, 3), q(1, 3)];
    assert_eq!(map_32(&t), [third.clone(), third.clone()]);

    let tri = oriented_bipyramid();
    let shape = ShapeAssignment::uniform(3, t[0].clone()).unwrap();
    let r = apply_32(&tri, &shape, axis(&tri)).unwrap();
    assert_eq!(r.triangulation.num_tets(), 2);
    assert_eq!(r.new_angles, vec![third.clone(), third]);
    assert_eq!(r.removed_edges, vec![axis(&tri)]);
    assert_eq!(r.triangulation.num_edges(), tri.num_edges() - 1);
}

#[test]
fn map_32_preserves_sums_on_random_sites() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tri = oriented_bipyramid();
    let e = axis(&tri);
    for _ in 0..1000 {
        let shape = random_site_shape(&mut rng, 97);
        let r = apply_32(&tri, &shape, e).unwrap();
        for t in &r.new_angles {
            assert!(t.iter().all(|x| *x > q(0, 1)));
            assert_eq!(t[0].clone() + t[1].clone() + t[2].clone(), q(1, 1));
        }
        assert!(r.shape.is_positive());
        assert_weights_carried((&tri, &shape), (&r.triangulation, &r.shape), &r.edge_map);
        assert!(r.triangulation.is_consistently_oriented());
    }
}

#[test]
fn relabelled_sites_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tri = oriented_bipyramid();
    let shape = random_site_shape(&mut rng, 60);
    let r = apply_32(&tri, &shape, axis(&tri)).unwrap();
    for perm in [[1, 2, 0], [2, 0, 1], [0, 2, 1]] {
        let t2 = tri.relabeled(&perm);
        let mut angles = vec![shape.angles[0].clone(); 3];
        for (old, &new) in perm.iter().enumerate() {
            angles[new] = shape.angles[old].clone();
        }
        let s2 = ShapeAssignment::new(angles, q(0, 1)).unwrap();
        let r2 = apply_32(&t2, &s2, axis(&t2)).unwrap();
        let mut a = r.new_angles.clone();
        let mut b = r2.new_angles.clone();
        a.iter_mut().for_each(|t| t.sort());
        b.iter_mut().for_each(|t| t.sort());
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}

#[test]
fn solve_23_inverts_the_map() {
    let third = [q(1, 3), q(1, 3), q(1, 3)];
    let s = solve_23(&third, &third).unwrap();
    assert_eq!(map_32(&s), [third.clone(), third]);
    for t in &s {
        assert!(t.iter().all(|x| *x > q(0, 1)));
        assert_eq!(t[0].clone() + t[1].clone() + t[2].clone(), q(1, 1));
    }
    assert_eq!(s[0][0].clone() + s[1][0].clone() + s[2][0].clone(), q(2, 1));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let shape = random_site_shape(&mut rng, 50);
        let t: [[Rational; 3]; 3] = std::array::from_fn(|i| shape.angles[i].clone());
        let [t4, t5] = map_32(&t);
        let back = solve_23(&t4, &t5).unwrap();
        assert_eq!(map_32(&back), [t4, t5]);
    }
}

/// Smallest angle along the one-parameter family of solutions, γ₁ = s.
fn family_min(t4: [f64; 3], t5: [f64; 3], s: f64) -> f64 {
    let (g1, b2, b3) = (s, t4[0] - s, t5[1] - s);
    let g2 = t4[2] - b3;
    let b1 = t5[0] - g2;
    let g3 = t4[1] - b1;
    let v = [b1, b2, b3, g1, g2, g3, 1.0 - b1 - g1, 1.0 - b2 - g2, 1.0 - b3 - g3];
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn oracle_margin(t4: [f64; 3], t5: [f64; 3]) -> f64 {
    (0..=20000).map(|k| family_min(t4, t5, -1.0 + 3.0 * k as f64 / 20000.0)).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn infeasible_inverse_is_reported() {
    let (t4, t5) = ([0.1, 0.8, 0.1], [0.05, 0.9, 0.05]);
    assert!(oracle_margin(t4, t5) < 0.0);
    match solve_23(&t4, &t5) {
        Err(PachnerError::InfeasiblePositivity { multipliers }) => assert!(!multipliers.is_empty()),
        other => panic!("expected infeasibility, got {other:?}"),
    }
}

#[test]
fn inverse_feasibility_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut seen = [0usize; 2];
    let simplex = |rng: &mut ChaCha8Rng| {
        let (x, y): (f64, f64) = (rng.gen(), rng.gen());
        let (lo, hi) = (x.min(y), x.max(y));
        [lo, hi - lo, 1.0 - hi]
    };
    while seen[0] < 50 || seen[1] < 50 {
        let (t4, t5) = (simplex(&mut rng), simplex(&mut rng));
        let margin = oracle_margin(t4, t5);
        if margin.abs() < 1e-3 {
            continue;
        }
        let solved = solve_23(&t4, &t5);
        assert_eq!(solved.is_ok(), margin > 0.0, "{t4:?} {t5:?} margin {margin}");
        if let Ok(s) = solved {
            let min = s.iter().flatten().fold(f64::INFINITY, |m, x| m.min(*x));
            assert!((min - margin).abs() < 1e-3, "max-min {min} vs scan {margin}");
        }
        seen[usize::from(margin > 0.0)] += 1;
    }
}

#[test]
fn two_three_on_figure_eight() {
    let (tri, shape) = figure_eight_exact();
    let r = apply_23(&tri, &shape, FaceSlot::new(0, 0)).unwrap();
    assert_eq!(r.triangulation.num_tets(), 3);
    assert_eq!(r.triangulation.num_edges(), tri.num_edges() + 1);
    assert!(r.triangulation.is_closed());
    assert!(r.triangulation.is_consistently_oriented());
    assert_eq!(r.added_edges.len(), 1);
    let w = edge_weights(&r.triangulation, &r.shape).unwrap().weights;
    assert_eq!(w[r.added_edges[0]], q(2, 1));
    assert!(r.shape.is_positive());
    assert_weights_carried((&tri, &shape), (&r.triangulation, &r.shape), &r.edge_map);
}

#[test]
fn round_trip_stays_in_weight_fiber() {
    let (tri, shape) = figure_eight_exact();
    for f in 0..4u8 {
        let up = apply_23(&tri, &shape, FaceSlot::new(0, f)).unwrap();
        let sites = find_32_sites(&up.triangulation, &up.shape);
        assert!(sites.iter().any(|s| s.edge == up.added_edges[0]));
        let down = apply_32(&up.triangulation, &up.shape, up.added_edges[0]).unwrap();
        assert_eq!(down.triangulation.num_tets(), 2);
        assert_eq!(down.triangulation.num_edges(), tri.num_edges());
        let composed: Vec<Option<usize>> = up.edge_map.iter().map(|m| m.and_then(|e| down.edge_map[e])).collect();
        assert!(composed.iter().all(Option::is_some));
        assert_weights_carried((&tri, &shape), (&down.triangulation, &down.shape), &composed);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let bp = oriented_bipyramid();
    for _ in 0..50 {
        let shape = random_site_shape(&mut rng, 40);
        let down = apply_32(&bp, &shape, axis(&bp)).unwrap();
        let face = (0..4u8)
            .map(|f| FaceSlot::new(down.new_tets[0], f))
            .find(|s| down.triangulation.partner(*s).is_some_and(|o| o.tet == down.new_tets[1]))
            .unwrap();
        let up = apply_23(&down.triangulation, &down.shape, face).unwrap();
        let composed: Vec<Option<usize>> = down.edge_map.iter().map(|m| m.and_then(|e| up.edge_map[e])).collect();
        assert_weights_carried((&bp, &shape), (&up.triangulation, &up.shape), &composed);
        let w = edge_weights(&up.triangulation, &up.shape).unwrap().weights;
        assert_eq!(w[up.added_edges[0]], q(2, 1));
    }
}

#[test]
fn illegal_two_three_sites() {
    let bp = oriented_bipyramid();
    let shape = Shape::uniform(3, [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]).unwrap();
    let free = bp.boundary_slots()[0];
    assert!(matches!(apply_23(&bp, &shape, free), Err(PachnerError::InvalidSite(_))));
    assert!(matches!(apply_23(&bp, &shape, FaceSlot::new(7, 0)), Err(PachnerError::InvalidSite(_))));
}

#[test]
fn modulus_survives_two_three_on_figure_eight() {
    let (tri, shape) = figure_eight();
    let up = apply_23(&tri, &shape, FaceSlot::new(0, 0)).unwrap();
    let qd = QDilog::from_b(1.0).unwrap();
    let cfg = StateConfig { rel_tol: 1e-6, ..Default::default() };
    let z0 = assemble(&tri, &shape, qd.params()).unwrap().evaluate(&qd, &cfg).unwrap().z;
    let z1 = assemble(&up.triangulation, &up.shape, qd.params()).unwrap().evaluate(&qd, &cfg).unwrap().z;
    let rel = (z1.norm() - z0.norm()).abs() / z0.norm();
    assert!(rel <= 1e-3, "|Z| {} vs {} (rel {rel:e})", z0.norm(), z1.norm());
}
