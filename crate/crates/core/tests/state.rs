mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tqft::mesh::{FaceSlot, Triangulation};
use tqft::pachner::apply_23;
use tqft::qdilog::{params_from_hbar, QDilog};
use tqft::state::*;
use tqft::Shape;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn fig8() -> (Triangulation, Shape) {
    (common::corpus("fig8.tri").triangulation, Shape::uniform(2, [1.0 / 3.0; 3]).unwrap())
}

fn five2() -> (Triangulation, Shape) {
    let f = common::corpus("five2.tri");
    let shape = Shape::new(
        vec![[1.0 / 3.0, 5.0 / 12.0, 1.0 / 4.0], [5.0 / 12.0, 1.0 / 4.0, 1.0 / 3.0], [1.0 / 3.0, 1.0 / 2.0, 1.0 / 6.0]],
        0.0,
    )
    .unwrap();
    (f.triangulation, shape)
}

fn flipped(tri: &Triangulation) -> Triangulation {
    let signs: Vec<i32> = tri.signs().iter().map(|s| -s.value()).collect();
    let list: Vec<_> = tri.gluings().iter().map(|(a, b)| (a.tet, a.face, b.tet, b.face)).collect();
    common::glued(&signs, &list)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn phi_t_examples() {
    assert!((phi_t([1.0 / 3.0; 3], 0.25) + 5.0 / 36.0).abs() < 1e-15);
    for (a, hbar) in [(0.2, 0.1), (0.45, 0.25), (0.3, 0.04)] {
        let expected = a * a - (2.0 * hbar + 1.0) / 6.0;
        assert!((phi_t([a, 1.0 - 2.0 * a, a], hbar) - expected).abs() < 1e-15);
    }
}

#[test]
fn kernel_rejects_bad_angles() {
    let p = params_from_hbar(0.25).unwrap();
    for angles in [[0.0, 0.5, 0.5], [-0.1, 0.6, 0.5], [0.3, 0.3, 0.3]] {
        assert!(matches!(
            tet_kernel(tqft::mesh::Sign::Positive, angles, &p),
            Err(StateError::NonPositiveAngles { .. })
        ));
    }
}

#[test]
fn negative_kernel_is_conjugate() {
    let q = QDilog::from_b(1.2).unwrap();
    let angles = [0.25, 0.35, 0.4];
    let pos = tet_kernel(tqft::mesh::Sign::Positive, angles, q.params()).unwrap();
    let neg = tet_kernel(tqft::mesh::Sign::Negative, angles, q.params()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let x: [Complex64; 4] = std::array::from_fn(|_| Complex64::new(rng.gen_range(-2.0..2.0), 0.0));
        let a = pos.eval(&q, x).unwrap();
        let b = neg.eval(&q, x).unwrap();
        assert!(rel(b, a.conj()) < 1e-11, "{a} {b}");
    }
}

#[test]
fn level_factor() {
    let z = Complex64::new(0.3, -1.2);
    assert_eq!(apply_level(z, 0.0, 0.1), z);
    for hbar in [0.25, 0.1, 0.03] {
        assert!((apply_level(z, 4.0 * hbar, hbar) + z).norm() < 1e-14);
        for l in [-2.5, 0.1, 7.0] {
            assert!((apply_level(z, l, hbar).norm() - z.norm()).abs() < 1e-14);
        }
    }
}

#[test]
fn assembly_counts() {
    let p = params_from_hbar(0.25).unwrap();
    let (tri, shape) = fig8();
    let st = assemble(&tri, &shape, &p).unwrap();
    assert_eq!((st.num_faces, st.deltas.len(), st.dimension()), (4, 2, 2));
    let (tri, shape) = five2();
    let st = assemble(&tri, &shape, &p).unwrap();
    assert_eq!((st.num_faces, st.deltas.len(), st.dimension()), (6, 3, 3));
}

#[test]
fn assembly_preconditions() {
    let p = params_from_hbar(0.25).unwrap();
    let (tri, _) = five2();
    let uniform = Shape::uniform(3, [1.0 / 3.0; 3]).unwrap();
    assert!(matches!(assemble(&tri, &uniform, &p), Err(StateError::NotBalanced(_))));
    let (fig, shape) = fig8();
    assert!(matches!(assemble(&tri, &shape, &p), Err(StateError::NotAdmissible(_))));
    let open = common::glued(&[1, -1], &[(0, 0, 1, 2), (0, 1, 1, 3)]);
    assert!(matches!(assemble(&open, &shape, &p), Err(StateError::NotAdmissible(_))));
    let skew = Shape::new(vec![[0.5, 0.25, 0.25], [1.0 / 3.0; 3]], 0.0).unwrap();
    assert!(assemble(&fig, &skew, &p).is_err());
}

/// Brute-force substitution: the reduced integrand equals the product of
/// the original kernels on the constraint subspace.
fn check_elimination(tri: &Triangulation, shape: &Shape, seed: u64) {
    let q = QDilog::from_b(1.1).unwrap();
    let st = assemble(tri, shape, q.params()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..25 {
        let s: Vec<Complex64> = (0..st.dimension())
            .map(|_| Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-0.05..0.05)))
            .collect();
        let x = st.faces_from_decay(&s);
        for row in &st.deltas {
            let r: Complex64 = row.iter().zip(&x).map(|(a, v)| v * tqft::Scalar::to_f64_lossy(a)).sum();
            assert!(r.norm() < 1e-12);
        }
        let a = st.reduced_integrand(&q, &s).unwrap();
        let b = st.kernel_product(&q, &x).unwrap();
        assert!(rel(a, b) < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn elimination_reproduces_kernels() {
    let (tri, shape) = fig8();
    check_elimination(&tri, &shape, 1);
    let (tri, shape) = five2();
    check_elimination(&tri, &shape, 2);
    let (tri, shape) = fig8();
    let up = apply_23(&tri, &shape, FaceSlot::new(0, 0)).unwrap();
    check_elimination(&up.triangulation, &up.shape, 3);
}

#[test]
fn figure_eight_value() {
    // frozen from an independent double-exponential evaluation
    let q = QDilog::from_b(1.0).unwrap();
    let (tri, shape) = fig8();
    let st = assemble(&tri, &shape, q.params()).unwrap();
    assert_eq!(st.jacobian, 1.0);
    let v = st.evaluate(&q, &StateConfig::default()).unwrap();
    assert!((v.z - Complex64::new(0.27639320225002045, 0.0)).norm() < 1e-7, "{}", v.z);
    assert!(v.error_estimate < 1e-7);
}

#[test]
fn contour_independence() {
    let q = QDilog::from_b(1.2).unwrap();
    let (tri, shape) = fig8();
    let st = assemble(&tri, &shape, q.params()).unwrap();
    let probed = st.probe_shifts(&q).unwrap();
    let a = st.evaluate(&q, &StateConfig { shifts: Some(probed.clone()), ..Default::default() }).unwrap();
    let other: Vec<f64> = probed.iter().map(|s| 0.5 * s).collect();
    let b = st.evaluate(&q, &StateConfig { shifts: Some(other), ..Default::default() }).unwrap();
    assert!(rel(a.z, b.z) < 1e-6, "{} vs {}", a.z, b.z);
}

#[test]
fn orientation_reversal_conjugates() {
    let q = QDilog::from_b(1.3).unwrap();
    let (tri, shape) = fig8();
    let cfg = StateConfig::default();
    let z = assemble(&tri, &shape, q.params()).unwrap().evaluate(&q, &cfg).unwrap().z;
    let zbar = assemble(&flipped(&tri), &shape, q.params()).unwrap().evaluate(&q, &cfg).unwrap().z;
    assert!(rel(zbar, z.conj()) < 1e-7, "{z} {zbar}");
}

#[test]
fn tolerance_refinement_is_consistent() {
    let q = QDilog::from_b(1.0).unwrap();
    let (tri, shape) = fig8();
    let st = assemble(&tri, &shape, q.params()).unwrap();
    let loose = st.evaluate(&q, &StateConfig { rel_tol: 1e-5, ..Default::default() }).unwrap();
    let tight = st.evaluate(&q, &StateConfig { rel_tol: 1e-9, ..Default::default() }).unwrap();
    assert!((loose.z - tight.z).norm() <= loose.error_estimate.max(1e-5 * tight.z.norm()));
}

#[test]
fn nu_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for b in [1.0, 1.3, 2.0] {
        let p = tqft::qdilog::param_map(b).unwrap();
        for _ in 0..20 {
            let v = nu(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), &p);
            assert!((v.norm() - 1.0).abs() < 1e-13);
        }
        let cb2 = p.c_b * p.c_b;
        assert!((nu(0.0, 0.0, &p) - (-PI * I * cb2 / 6.0).exp()).norm() < 1e-14);
    }
    // b = 1: c_b² = −1 and the exponent is −0.12πi + 0.1πi
    let p = tqft::qdilog::param_map(1.0).unwrap();
    assert!((nu(0.1, 0.2, &p) - (-0.02 * PI * I).exp()).norm() < 1e-14);
}

#[test]
fn five2_reduction_data() {
    let (_, shape) = five2();
    let red = Five2Reduction::from_shape(&shape).unwrap();
    let a = red.a;
    let (b, c) = (red.b, red.c);
    assert!((2.0 * a[2] - a[0] - c[1]).abs() < 1e-15);
    assert!((b[2] - c[0] - b[1]).abs() < 1e-15);
    assert!((red.lambda() - (a[0] - c[0] + b[1] - a[2])).abs() < 1e-15);
    for bb in [1.0, 1.5] {
        let p = tqft::qdilog::param_map(bb).unwrap();
        assert!((red.prefactor(&p).norm() - 1.0).abs() < 1e-13);
        // a₁ = a₃ at this shape
        assert_eq!(red.contour_shift(&p), 0.0);
    }
    let bad = Five2Reduction::new([0.2, 0.2, 0.2], [0.15, 0.15, 0.15], [0.15, 0.15, 0.15]);
    assert!(matches!(bad, Err(StateError::NotBalanced(_))));
    let uniform = Shape::uniform(3, [1.0 / 3.0; 3]).unwrap();
    assert!(Five2Reduction::from_shape(&uniform).is_err());
}

#[test]
fn chi41_is_shift_independent() {
    for (b, x) in [(1.0, 0.0), (1.4, 0.4)] {
        let q = QDilog::from_b(b).unwrap();
        let m = b.min(1.0 / b);
        // small shifts decay slowly; give the quadrature room
        let quad = tqft::quad::QuadConfig { max_doublings: 11, truncation: 1e-13, ..ChiConfig::default().quad };
        let v: Vec<Complex64> = [0.05, 0.1]
            .iter()
            .map(|f| chi_41(&q, x, &ChiConfig { shift: Some(f * m), quad }).unwrap().value)
            .collect();
        assert!(rel(v[0], v[1]) < 1e-8, "b={b} x={x}: {} {}", v[0], v[1]);
        let probed = chi_41(&q, x, &ChiConfig::default()).unwrap().value;
        assert!(rel(probed, v[1]) < 1e-8);
    }
}

#[test]
fn chi52_symmetry_and_twist() {
    let q = QDilog::from_b(1.2).unwrap();
    let cfg = ChiConfig::default();
    let x = Complex64::new(0.3, 0.0);
    let plus = chi_52(&q, x, 0.0, &cfg).unwrap().value;
    let minus = chi_52(&q, -x, 0.0, &cfg).unwrap().value;
    assert!(rel(plus, minus) < 1e-8);
    let lambda = 0.17;
    let twisted = chi_52(&q, x, lambda, &cfg).unwrap().value;
    let expected = plus * (4.0 * PI * I * q.params().c_b * x * lambda).exp();
    assert!(rel(twisted, expected) < 1e-8);
}

#[test]
fn five2_routes_agree_in_modulus() {
    let q = QDilog::from_b(1.0).unwrap();
    let (tri, shape) = five2();
    let direct = assemble(&tri, &shape, q.params())
        .unwrap()
        .evaluate(&q, &StateConfig { rel_tol: 1e-6, ..Default::default() })
        .unwrap()
        .z;
    let red = Five2Reduction::from_shape(&shape).unwrap();
    let reduced = z52_reduced(&q, &red, &LatticeConfig::default()).unwrap().value;
    assert!((direct.norm() - reduced.norm()).abs() / reduced.norm() < 1e-6);
}

#[test]
fn rate_fit_recovers_model() {
    let grid = [0.15, 0.12, 0.10, 0.08, 0.06, 0.05, 0.04, 0.03];
    let data: Vec<(f64, f64)> = grid
        .iter()
        .map(|&h: &f64| {
            let y = -2.0 + 0.3 * h * h.ln() - 0.1 * h;
            (h, (y / (2.0 * PI * h)).exp())
        })
        .collect();
    let fit = fit_volume_rate(&data).unwrap();
    assert!((fit.volume - 2.0).abs() < 1e-9);
    assert!((fit.p - 0.3).abs() < 1e-7);
    assert!((fit.q + 0.1).abs() < 1e-7);
    assert!(fit.rms < 1e-10);
    assert!(fit.stability_shift < 1e-9);

    assert!(matches!(fit_volume_rate(&data[..4]), Err(StateError::IllConditionedFit(_))));
    let mut rising = data.clone();
    rising.reverse();
    assert!(matches!(fit_volume_rate(&rising), Err(StateError::IllConditionedFit(_))));
}
