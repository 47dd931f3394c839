//! Dense two-phase simplex with Bland's rule.
//!
//! Solves `maximize cᵀx subject to Ax = b, x ≥ 0`. With an exact scalar
//! type the result is exact; Bland's rule rules out cycling.

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal {
        x: Vec<S>,
        value: S,
        /// Row multipliers `y` with `yᵀA ≥ cᵀ` and `yᵀb = value`.
        duals: Vec<S>,
    },
    /// `farkas` satisfies `farkasᵀA ≥ 0` and `farkasᵀb < 0`.
    Infeasible { farkas: Vec<S> },
    Unbounded,
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    basis: Vec<usize>,
    width: usize,
}

impl<S: Scalar> Tableau<S> {
    fn rhs(&self, r: usize) -> &S {
        &self.rows[r][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = S::one() / self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * p.clone();
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[S]) -> Vec<S> {
        (0..self.width)
            .map(|j| {
                self.rows.iter().zip(&self.basis).fold(cost[j].clone(), |acc, (row, &bj)| {
                    acc - cost[bj].clone() * row[j].clone()
                })
            })
            .collect()
    }

    /// Runs simplex iterations maximizing `cost` over columns `< allowed`.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[S], allowed: usize) -> bool {
        loop {
            let rc = self.reduced_costs(cost);
            let Some(enter) = (0..allowed).find(|&j| rc[j] > S::tolerance()) else { return true };
            let mut leave: Option<(usize, S)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][enter];
                if *a > S::tolerance() {
                    let ratio = self.rhs(r).clone() / a.clone();
                    let better = match &leave {
                        None => true,
                        Some((lr, lv)) => {
                            ratio < *lv || (ratio.approx_eq(lv) && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

pub fn solve<S: Scalar>(a: &Matrix<S>, b: &[S], c: &[S]) -> LpOutcome<S> {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);
    let width = n + m;
    let mut flip = vec![S::one(); m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        if b[i] < S::zero() {
            flip[i] = -S::one();
        }
        let mut row: Vec<S> = a.row(i).iter().map(|v| v.clone() * flip[i].clone()).collect();
        row.extend((0..m).map(|k| if k == i { S::one() } else { S::zero() }));
        row.push(b[i].clone() * flip[i].clone());
        rows.push(row);
    }
    let mut t = Tableau { rows, basis: (n..n + m).collect(), width };

    let mut phase1 = vec![S::zero(); width];
    for v in phase1.iter_mut().skip(n) {
        *v = -S::one();
    }
    t.optimize(&phase1, width);
    let infeas = t.rows.iter().zip(&t.basis).fold(S::zero(), |acc, (row, &bj)| {
        acc + if bj >= n { row[width].clone() } else { S::zero() }
    });
    if infeas > S::tolerance() {
        let rc = t.reduced_costs(&phase1);
        let farkas = (0..m).map(|i| (-S::one() - rc[n + i].clone()) * flip[i].clone()).collect();
        return LpOutcome::Infeasible { farkas };
    }

    // drive zero-level artificials out of the basis, dropping redundant rows
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n {
            match (0..n).find(|&j| !t.rows[r][j].is_negligible()) {
                Some(j) => t.pivot(r, j),
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut cost: Vec<S> = c.to_vec();
    cost.extend((0..m).map(|_| S::zero()));
    if !t.optimize(&cost, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![S::zero(); n];
    for (row, &bj) in t.rows.iter().zip(&t.basis) {
        x[bj] = row[width].clone();
    }
    let value = x.iter().zip(c).fold(S::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    let rc = t.reduced_costs(&cost);
    let duals = (0..m).map(|i| -rc[n + i].clone() * flip[i].clone()).collect();
    LpOutcome::Optimal { x, value, duals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_ratio(n, 1)
    }

    #[test]
    fn small_optimum() {
        // max x + y, x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = Matrix::from_rows(vec![
            vec![q(1), q(2), q(1), q(0)],
            vec![q(3), q(1), q(0), q(1)],
        ]);
        let out = solve(&a, &[q(4), q(6)], &[q(1), q(1), q(0), q(0)]);
        let LpOutcome::Optimal { x, value, duals } = out else { panic!("{out:?}") };
        assert_eq!(value, Rational::from_ratio(14, 5));
        assert_eq!(&x[..2], &[Rational::from_ratio(8, 5), Rational::from_ratio(6, 5)]);
        let dual_obj = duals[0].clone() * q(4) + duals[1].clone() * q(6);
        assert_eq!(dual_obj, value);
    }

    #[test]
    fn farkas_certificate() {
        // x + y = 1 and x + y = 3 cannot both hold
        let a = Matrix::from_rows(vec![vec![q(1), q(1)], vec![q(1), q(1)]]);
        let b = [q(1), q(3)];
        let LpOutcome::Infeasible { farkas } = solve(&a, &b, &[q(0), q(0)]) else { panic!() };
        for j in 0..2 {
            let s = (0..2).fold(q(0), |acc, i| acc + farkas[i].clone() * a.get(i, j).clone());
            assert!(s >= q(0));
        }
        assert!(farkas[0].clone() * b[0].clone() + farkas[1].clone() * b[1].clone() < q(0));
    }

    #[test]
    fn unbounded_and_float() {
        let a = Matrix::from_rows(vec![vec![q(1), q(-1)]]);
        assert_eq!(solve(&a, &[q(1)], &[q(1), q(0)]), LpOutcome::Unbounded);
        let af = Matrix::from_rows(vec![vec![1.0, 1.0]]);
        let LpOutcome::Optimal { value, .. } = solve(&af, &[2.0], &[3.0, 1.0]) else { panic!() };
        assert!((value - 6.0f64).abs() < 1e-12);
    }
}
