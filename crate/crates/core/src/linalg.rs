//! Dense row reduction over any [`Scalar`] field.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Matrix { rows: rows.len(), cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    /// Reduced row echelon form in place. Returns the pivot columns.
    ///
    /// Floating point types pick the largest available pivot; exact types take
    /// the first nonzero entry.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let mut best: Option<usize> = None;
            for i in r..self.rows {
                let v = self.get(i, c);
                if v.is_negligible() {
                    continue;
                }
                match best {
                    None => best = Some(i),
                    Some(b) if v.abs() > self.get(b, c).abs() && S::tolerance() > S::zero() => {
                        best = Some(i)
                    }
                    _ => {}
                }
            }
            let Some(p) = best else { continue };
            self.swap_rows(r, p);
            let inv = S::one() / self.get(r, c).clone();
            for k in 0..self.cols {
                let v = self.get(r, k).clone() * inv.clone();
                self.set(r, k, v);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for k in 0..self.cols {
                    let v = self.get(i, k).clone() - f.clone() * self.get(r, k).clone();
                    self.set(i, k, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right null space, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<S>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (i, &p) in pivots.iter().enumerate() {
                    v[p] = -m.get(i, f).clone();
                }
                v
            })
            .collect()
    }

    /// One solution of `self * x = rhs`, with free variables set to zero.
    pub fn solve(&self, rhs: &[S]) -> Option<Vec<S>> {
        assert_eq!(rhs.len(), self.rows);
        let mut aug = Matrix::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, self.cols, rhs[r].clone());
        }
        let pivots = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![S::zero(); self.cols];
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = aug.get(i, self.cols).clone();
        }
        Some(x)
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    /// Determinant of a square matrix by elimination.
    pub fn det(&self) -> S {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let n = self.rows;
        let mut det = S::one();
        for c in 0..n {
            let Some(p) = (c..n)
                .filter(|&i| !m.get(i, c).is_negligible())
                .max_by(|&a, &b| m.get(a, c).abs().partial_cmp(&m.get(b, c).abs()).unwrap())
            else {
                return S::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m.get(c, c).clone();
            det = det * piv.clone();
            for i in c + 1..n {
                let f = m.get(i, c).clone() / piv.clone();
                for k in c..n {
                    let v = m.get(i, k).clone() - f.clone() * m.get(c, k).clone();
                    m.set(i, k, v);
                }
            }
        }
        det
    }
}
