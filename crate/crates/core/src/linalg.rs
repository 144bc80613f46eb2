//! Small dense linear algebra: exact over the rationals and the integers,
//! floating point over the complex numbers.
//!
//! Everything here is sized for desk-scale toric data (a handful of points,
//! rank at most four or five), so plain `Vec<Vec<_>>` storage is used.

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar.
pub type Q = Ratio<i128>;

pub fn q(n: i128) -> Q {
    Q::from_integer(n)
}

pub fn qr(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

/// Reduced row echelon form in place. Returns the pivot columns.
pub fn rref(rows: &mut [Vec<Q>]) -> Vec<usize> {
    let m = rows.len();
    if m == 0 {
        return vec![];
    }
    let n = rows[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..m {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c];
                for j in 0..n {
                    let d = rows[r][j] * f;
                    rows[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Basis of `{x : M x = 0}` where `rows` are the rows of `M` and `ncols` its width.
pub fn kernel(rows: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); ncols];
            v[f] = Q::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[r][f];
            }
            v
        })
        .collect()
}

/// One solution of `M x = b`, if any.
pub fn solve(rows: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<Q>> = rows
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut r = r.clone();
            r.push(bi);
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![Q::zero(); ncols];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = aug[r][ncols];
    }
    Some(x)
}

/// Determinant of a square integer matrix (Bareiss).
pub fn det_i64(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return 0;
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    if n == 0 {
        1
    } else {
        sign * a[n - 1][n - 1]
    }
}

/// Integer row echelon data for a set of integer vectors (rows of `a`):
/// `u * a = h` with `u` unimodular and `h` in row echelon form.
#[derive(Debug, Clone)]
pub struct IntEchelon {
    pub h: Vec<Vec<i128>>,
    pub u: Vec<Vec<i128>>,
    pub pivots: Vec<usize>,
}

pub fn int_echelon(a: &[Vec<i64>]) -> IntEchelon {
    let n = a.len();
    let d = a.first().map_or(0, |r| r.len());
    let mut h: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut u: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..d {
        if r == n {
            break;
        }
        // Euclid on column c among rows r..n.
        loop {
            let nz: Vec<usize> = (r..n).filter(|&i| h[i][c] != 0).collect();
            if nz.is_empty() {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| h[i][c].abs()).unwrap();
            h.swap(r, p);
            u.swap(r, p);
            let mut done = true;
            for i in r + 1..n {
                if h[i][c] != 0 {
                    let f = Integer::div_floor(&h[i][c], &h[r][c]);
                    for j in 0..d {
                        h[i][j] -= f * h[r][j];
                    }
                    for j in 0..n {
                        u[i][j] -= f * u[r][j];
                    }
                    if h[i][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if h.get(r).is_some_and(|row| row[c] != 0) {
            if h[r][c] < 0 {
                for x in h[r].iter_mut() {
                    *x = -*x;
                }
                for x in u[r].iter_mut() {
                    *x = -*x;
                }
            }
            pivots.push(c);
            r += 1;
        }
    }
    IntEchelon { h, u, pivots }
}

/// Lattice basis of `{m in Z^n : sum m_i a_i = 0}` for the rows `a_i`.
pub fn integer_kernel(a: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let e = int_echelon(a);
    let r = e.pivots.len();
    e.u[r..]
        .iter()
        .map(|row| row.iter().map(|&x| x as i64).collect())
        .collect()
}

/// An integer vector `m` with `sum m_i a_i = b`, if one exists.
pub fn integer_solve(a: &[Vec<i64>], b: &[i64]) -> Option<Vec<i64>> {
    let e = int_echelon(a);
    let n = a.len();
    let mut residual: Vec<i128> = b.iter().map(|&x| x as i128).collect();
    let mut m = vec![0i128; n];
    for (i, &p) in e.pivots.iter().enumerate() {
        if residual[p] % e.h[i][p] != 0 {
            return None;
        }
        let z = residual[p] / e.h[i][p];
        for (res, hv) in residual.iter_mut().zip(&e.h[i]) {
            *res -= z * hv;
        }
        for (mj, uv) in m.iter_mut().zip(&e.u[i]) {
            *mj += z * uv;
        }
    }
    if residual.iter().any(|&x| x != 0) {
        return None;
    }
    Some(m.into_iter().map(|x| x as i64).collect())
}

pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

/// Dense complex matrix stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Complex64::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::one();
        }
        m
    }

    pub fn from_columns(rows: usize, columns: &[Vec<Complex64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, crate::linalg::nan_max)
    }

    /// LU with partial pivoting; returns `None` when a pivot falls below `tol`.
    fn lu(&self, tol: f64) -> Option<(Vec<Complex64>, Vec<usize>, f64)> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap();
            if a[p * n + k].norm() <= tol {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                a[i * n + k] = f;
                for j in k + 1..n {
                    let d = f * a[k * n + j];
                    a[i * n + j] -= d;
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn det(&self) -> Complex64 {
        let n = self.rows;
        match self.lu(0.0) {
            None => Complex64::zero(),
            Some((a, _, sign)) => (0..n).map(|i| a[i * n + i]).product::<Complex64>() * sign,
        }
    }

    pub fn inverse(&self) -> Option<CMatrix> {
        let n = self.rows;
        let scale = self.max_abs().max(1e-300);
        let (a, perm, _) = self.lu(scale * 1e-13)?;
        let mut inv = CMatrix::zeros(n, n);
        for col in 0..n {
            let mut x: Vec<Complex64> = (0..n).map(|i| Complex64::from(f64::from(u8::from(perm[i] == col)))).collect();
            for i in 0..n {
                for j in 0..i {
                    let d = a[i * n + j] * x[j];
                    x[i] -= d;
                }
            }
            for i in (0..n).rev() {
                for j in i + 1..n {
                    let d = a[i * n + j] * x[j];
                    x[i] -= d;
                }
                x[i] /= a[i * n + i];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Some(inv)
    }

    /// Numerical rank with relative tolerance.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let mut a = self.data.clone();
        let (m, n) = (self.rows, self.cols);
        let tol = self.max_abs() * rel_tol;
        let mut r = 0;
        for c in 0..n {
            if r == m {
                break;
            }
            let p = (r..m)
                .max_by(|&i, &j| a[i * n + c].norm().total_cmp(&a[j * n + c].norm()))
                .unwrap();
            if a[p * n + c].norm() <= tol {
                continue;
            }
            for j in 0..n {
                a.swap(r * n + j, p * n + j);
            }
            for i in r + 1..m {
                let f = a[i * n + c] / a[r * n + c];
                for j in c..n {
                    let d = f * a[r * n + j];
                    a[i * n + j] -= d;
                }
            }
            r += 1;
        }
        r
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Absolute value helper usable for any signed rational.
/// `max` that propagates NaN.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) }
}

pub fn q_abs(x: Q) -> Q {
    x.abs()
}

pub fn to_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: Q) -> Q {
    x - x.floor()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_conifold_points() {
        let pts = vec![vec![0, 0, 1], vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 1]];
        let k = integer_kernel(&pts);
        assert_eq!(k.len(), 1);
        let h = &k[0];
        let s: Vec<i64> = (0..3).map(|c| (0..4).map(|i| h[i] * pts[i][c]).sum()).collect();
        assert_eq!(s, vec![0, 0, 0]);
        assert_eq!(gcd_slice(h), 1);
    }

    #[test]
    fn integer_solve_respects_lattice() {
        let pts = vec![vec![0, 1], vec![1, 1], vec![2, 1]];
        let m = integer_solve(&pts, &[1, 1]).unwrap();
        let s: Vec<i64> = (0..2).map(|c| (0..3).map(|i| m[i] * pts[i][c]).sum()).collect();
        assert_eq!(s, vec![1, 1]);
        // sublattice 2Z x Z
        let pts = vec![vec![2, 0], vec![0, 1]];
        assert!(integer_solve(&pts, &[1, 0]).is_none());
    }

    #[test]
    fn rational_kernel_and_solve() {
        let m = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(7)]];
        let k = kernel(&m, 3);
        assert_eq!(k.len(), 1);
        for row in &m {
            let s: Q = row.iter().zip(&k[0]).map(|(a, b)| a * b).sum();
            assert!(s.is_zero());
        }
        let x = solve(&m, &[q(1), q(3)]).unwrap();
        assert_eq!(m[0].iter().zip(&x).map(|(a, b)| a * b).sum::<Q>(), q(1));
        assert!(solve(&[vec![q(1), q(1)], vec![q(2), q(2)]], &[q(1), q(3)]).is_none());
    }

    #[test]
    fn bareiss_determinant() {
        assert_eq!(det_i64(&[vec![0, 1], vec![2, 1]]), -2);
        assert_eq!(det_i64(&[vec![0, 0, 1], vec![1, 0, 1], vec![0, 1, 1]]), 1);
    }

    #[test]
    fn complex_inverse_roundtrip() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 1.0);
        m[(0, 1)] = Complex64::new(2.0, 0.0);
        m[(1, 0)] = Complex64::new(0.0, -1.0);
        m[(1, 1)] = Complex64::new(3.0, 0.5);
        let p = m.mul(&m.inverse().unwrap());
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - e).norm() < 1e-14);
            }
        }
        assert!((m.det() - (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)])).norm() < 1e-14);
    }
}
