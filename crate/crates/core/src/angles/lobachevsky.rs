use crate::scalar::Real;

/// ζ(2n) for n = 1..=30.
const ZETA_EVEN: [f64; 30] = [
    1.6449340668482264, 1.0823232337111381, 1.0173430619844492, 1.0040773561979444, 1.000994575127818,
    1.000246086553308, 1.0000612481350588, 1.0000152822594086, 1.000003817293265, 1.0000009539620338,
    1.0000002384505027, 1.000000059608189, 1.0000000149015549, 1.000000003725334, 1.0000000009313275,
    1.000000000232831, 1.0000000000582077, 1.000000000014552, 1.000000000003638, 1.0000000000009095,
    1.0000000000002274, 1.0000000000000568, 1.0000000000000142, 1.0000000000000036, 1.0000000000000009,
    1.0000000000000002, 1.0, 1.0, 1.0, 1.0,
];

/// Lobachevsky function Λ(θ) = −∫₀^θ log|2 sin t| dt.
///
/// θ is reduced to [−π/2, π/2] by π-periodicity, then the expansion of
/// log(sin t / t) in even powers is integrated termwise.
pub fn lobachevsky<T: Real>(theta: T) -> T {
    let pi = T::PI();
    let r = theta - pi * (theta / pi).round();
    let x = r.abs();
    if x == T::zero() {
        return T::zero();
    }
    let u = (x / pi) * (x / pi);
    let mut acc = T::zero();
    let mut pow = T::one();
    for (k, z) in ZETA_EVEN.iter().enumerate() {
        let n = T::c((k + 1) as f64);
        pow = pow * u;
        let term = T::c(*z) * pow / (n * (T::c(2.0) * n + T::one()));
        acc = acc + term;
        if term < T::epsilon() * T::c(1e-3) {
            break;
        }
    }
    let two = T::c(2.0);
    let v = x * (T::one() - (two * x).ln()) + x * acc;
    if r < T::zero() {
        -v
    } else {
        v
    }
}

/// Λ′(θ) = −log|2 sin θ|.
pub fn lobachevsky_derivative<T: Real>(theta: T) -> T {
    -(T::c(2.0) * theta.sin()).abs().ln()
}
