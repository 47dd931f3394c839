use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::links::CornerComplex;
use super::{face_vertices, FaceSlot, Triangulation};

/// H₂ of the complex with open vertex stars removed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomologyReport {
    pub rank: usize,
    /// Invariant factors greater than one.
    pub torsion: Vec<String>,
    pub is_admissible_topology: bool,
}

/// Nonzero invariant factors of an integer matrix, in divisibility order.
pub fn smith_invariants(matrix: &[Vec<BigInt>]) -> Vec<BigInt> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<BigInt>> = matrix.to_vec();
    let mut out = Vec::new();
    for t in 0..rows.min(cols) {
        // smallest nonzero entry of the trailing block becomes the pivot
        let Some((pi, pj)) = min_entry(&a, t, t) else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                for k in t..cols {
                    let v = &a[i][k] - &q * &a[t][k];
                    a[i][k] = v;
                }
                if !a[i][t].is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for row in a.iter_mut().skip(t) {
                    let v = &row[j] - &q * &row[t];
                    row[j] = v;
                }
                if !a[t][j].is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                // a smaller remainder appeared in the pivot row or column
                let mut best = (t, t);
                for i in t..rows {
                    if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t..cols {
                    if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                a.swap(t, best.0);
                for row in a.iter_mut() {
                    row.swap(t, best.1);
                }
                continue;
            }
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a[i][j].is_multiple_of(&a[t][t])));
            match bad {
                Some(i) => {
                    for k in t..cols {
                        let v = &a[t][k] + &a[i][k];
                        a[t][k] = v;
                    }
                }
                None => break,
            }
        }
        out.push(a[t][t].abs());
    }
    out
}

fn min_entry(a: &[Vec<BigInt>], r0: usize, c0: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(r0) {
        for (j, v) in row.iter().enumerate().skip(c0) {
            if !v.is_zero() && best.is_none_or(|(bi, bj)| v.abs() < a[bi][bj].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

/// Integer boundary matrices of the truncated cell structure.
///
/// Returns (∂₂, ∂₃) as dense matrices; rows index the lower-dimensional cells.
pub(crate) fn truncated_boundaries(tri: &Triangulation) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let n = tri.num_tets();
    let cc = CornerComplex::new(tri);
    let cells = tri.cells();
    let n_long = cells.edges.len();
    let n1 = n_long + cc.num_shorts;

    let mut face_id = vec![[usize::MAX; 4]; n];
    let mut n_hex = 0;
    for t in 0..n {
        for f in 0..4u8 {
            if face_id[t][f as usize] != usize::MAX {
                continue;
            }
            face_id[t][f as usize] = n_hex;
            if let Some(o) = tri.partner(FaceSlot::new(t, f)) {
                face_id[o.tet][o.face as usize] = n_hex;
            }
            n_hex += 1;
        }
    }
    let n2 = n_hex + 4 * n;
    let corner_id = |t: usize, v: u8| n_hex + 4 * t + v as usize;

    let mut d2 = vec![vec![BigInt::zero(); n2]; n1];
    let mut filled = vec![false; n_hex];
    for t in 0..n {
        for f in 0..4u8 {
            let h = face_id[t][f as usize];
            if filled[h] {
                continue;
            }
            filled[h] = true;
            let [a, b, c] = face_vertices(f);
            let long = |x: u8, y: u8| cells.edge_class(t, x, y);
            let short = |v: u8| n_long + cc.short(t, v, f);
            for (row, coef) in [
                (long(a, b), 1),
                (short(b), 1),
                (long(b, c), 1),
                (short(c), -1),
                (long(a, c), -1),
                (short(a), -1),
            ] {
                d2[row][h] += coef;
            }
        }
        for v in 0..4u8 {
            for (s, coef) in cc.triangle_boundary(t, v) {
                d2[n_long + s][corner_id(t, v)] += coef;
            }
        }
    }

    let mut d3 = vec![vec![BigInt::zero(); n]; n2];
    for t in 0..n {
        for f in 0..4u8 {
            let sign = if f % 2 == 0 { 1 } else { -1 };
            d3[face_id[t][f as usize]][t] += sign;
            d3[corner_id(t, f)][t] -= sign;
        }
    }
    (d2, d3)
}

/// H₂(X − Δ₀; ℤ) from the truncated tetrahedra.
pub fn homology_h2_truncated(tri: &Triangulation) -> HomologyReport {
    let (d2, d3) = truncated_boundaries(tri);
    let n2 = d3.len();
    let rank2 = smith_invariants(&d2).len();
    let inv3 = smith_invariants(&d3);
    let rank = n2 - rank2 - inv3.len();
    let torsion: Vec<String> =
        inv3.iter().filter(|d| !d.is_one()).map(ToString::to_string).collect();
    HomologyReport { rank, is_admissible_topology: rank == 0 && torsion.is_empty(), torsion }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn snf_examples() {
        let inv = smith_invariants(&m(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]));
        assert_eq!(inv, vec![2.into(), 6.into(), 12.into()]);
        assert_eq!(smith_invariants(&m(&[&[2, 0], &[0, 3]])), vec![1.into(), 6.into()]);
        assert_eq!(smith_invariants(&m(&[&[0, 0], &[0, 0]])), Vec::<BigInt>::new());
    }
}
