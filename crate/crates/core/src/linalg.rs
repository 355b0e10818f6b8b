//! Dense complex matrices and the few factorizations the simulator needs.
//!
//! Storage is row-major. The SVD is a one-sided (Hestenes) Jacobi iteration
//! on the taller orientation of the matrix, which keeps the cost linear in
//! the long dimension: a 2500x16 feeder channel needs only 16x16 rotations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<Complex64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().position(|c| c.len() != rows) {
            return Err(invalid(format!("column {bad} does not have {rows} entries")));
        }
        Ok(Self::from_fn(rows, columns.len(), |r, c| columns[c][r]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[Complex64]) {
        for (r, v) in values.iter().enumerate() {
            self[(r, c)] = *v;
        }
    }

    /// The first `k` columns.
    pub fn leading_columns(&self, k: usize) -> CMatrix {
        CMatrix::from_fn(self.rows, k, |r, c| self[(r, c)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn mul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, a) in self.row(r).iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * diag(d)`.
    pub fn scale_columns(&self, d: &[Complex64]) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)] * d[c])
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.shape() != rhs.shape() {
            return Err(invalid("shape mismatch in subtraction"));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.frobenius_norm_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Solves `self * X = rhs` by LU decomposition with partial pivoting.
    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        let n = self.rows;
        if self.cols != n || rhs.rows != n {
            return Err(invalid("solve needs a square system with matching right-hand side"));
        }
        let mut a = self.clone();
        let mut x = rhs.clone();
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
                .unwrap_or(col);
            if a[(pivot, col)].norm() <= scale * f64::EPSILON * n as f64 {
                return Err(Error::Numerical(format!(
                    "singular {n}x{n} system (pivot {col} vanishes)"
                )));
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                x.swap_rows(pivot, col);
            }
            let p = a[(col, col)];
            for r in col + 1..n {
                let factor = a[(r, col)] / p;
                if factor == ZERO {
                    continue;
                }
                for c in col..n {
                    let v = a[(col, c)];
                    a[(r, c)] -= factor * v;
                }
                for c in 0..x.cols {
                    let v = x[(col, c)];
                    x[(r, c)] -= factor * v;
                }
            }
        }
        for col in (0..n).rev() {
            let p = a[(col, col)];
            for c in 0..x.cols {
                let mut acc = x[(col, c)];
                for k in col + 1..n {
                    acc -= a[(col, k)] * x[(k, c)];
                }
                x[(col, c)] = acc / p;
            }
        }
        Ok(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x.norm_sqr()).sum())
}

/// Thin singular value decomposition `M = left * diag(s) * right^H`.
///
/// `left` is `m x r`, `right` is `n x r` with `r = min(m, n)`. Each left
/// singular vector is rotated so that its largest-magnitude entry (lowest
/// index on ties) is real and non-negative; the matching right vector gets
/// the same rotation, so the product is unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSvd {
    pub left: CMatrix,
    pub singular_values: Vec<f64>,
    pub right: CMatrix,
    /// Number of singular values above the numerical rank threshold.
    pub rank_used: usize,
}

const MAX_SWEEPS: usize = 80;
const TIE_TOLERANCE: f64 = 1e-12;

impl CanonicalSvd {
    pub fn compute(m: &CMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::Numerical("SVD input has non-finite entries".into()));
        }
        if m.rows >= m.cols {
            let (left, s, right, rank) = jacobi_tall(m)?;
            let mut svd = CanonicalSvd {
                left,
                singular_values: s,
                right,
                rank_used: rank,
            };
            svd.canonicalize();
            Ok(svd)
        } else {
            // M^H = U' S V'^H  =>  M = V' S U'^H
            let (u, s, v, rank) = jacobi_tall(&m.adjoint())?;
            let mut svd = CanonicalSvd {
                left: v,
                singular_values: s,
                right: u,
                rank_used: rank,
            };
            svd.canonicalize();
            Ok(svd)
        }
    }

    /// Re-applies the phase rule. Idempotent.
    pub fn canonicalize(&mut self) {
        for j in 0..self.left.cols {
            let max_mag = (0..self.left.rows)
                .map(|i| self.left[(i, j)].norm())
                .fold(0.0, f64::max);
            if max_mag <= 0.0 {
                continue;
            }
            // Near-ties (rounding-level) resolve to the lowest index, which
            // keeps the choice stable when the rule is applied again.
            let best = (0..self.left.rows)
                .find(|&i| self.left[(i, j)].norm() >= max_mag * (1.0 - TIE_TOLERANCE))
                .unwrap_or(0);
            let pivot = self.left[(best, j)];
            let best_mag = pivot.norm();
            let rot = (pivot / best_mag).conj();
            if rot == ONE {
                continue;
            }
            for i in 0..self.left.rows {
                self.left[(i, j)] *= rot;
            }
            // The pivot becomes exactly real.
            self.left[(best, j)] = Complex64::new(best_mag, 0.0);
            for i in 0..self.right.rows {
                self.right[(i, j)] *= rot;
            }
        }
    }

    pub fn left_vector(&self, k: usize) -> Vec<Complex64> {
        self.left.column(k)
    }

    pub fn right_vector(&self, k: usize) -> Vec<Complex64> {
        self.right.column(k)
    }

    /// `left * diag(s) * right^H`.
    pub fn reconstruct(&self) -> CMatrix {
        let s: Vec<Complex64> = self.singular_values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.left
            .scale_columns(&s)
            .mul(&self.right.adjoint())
            .expect("thin SVD factors have compatible shapes")
    }

    /// Extends `left` to a full unitary basis of its column space dimension
    /// (`m x m`).
    pub fn completed_left(&self) -> CMatrix {
        complete_basis(&self.left)
    }

    /// Extends `right` to an `n x n` unitary basis.
    pub fn completed_right(&self) -> CMatrix {
        complete_basis(&self.right)
    }
}

/// One-sided Jacobi on a matrix with at least as many rows as columns.
/// Returns (U, s, V, rank) with U `m x n`, V `n x n`.
fn jacobi_tall(m: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix, usize)> {
    let (rows, n) = m.shape();
    // Work column-major so that column operations are contiguous.
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|c| m.column(c)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|c| {
            let mut e = vec![ZERO; n];
            e[c] = ONE;
            e
        })
        .collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x.norm_sqr()).sum()).collect();
    let tol = f64::EPSILON * rows as f64;

    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            let max = norms.iter().cloned().fold(0.0, f64::max);
            let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            return Err(Error::Numerical(format!(
                "Jacobi SVD of a {rows}x{n} matrix did not converge in {MAX_SWEEPS} sweeps \
                 (column norm ratio {:.3e})",
                libm::sqrt(max / min.max(f64::MIN_POSITIVE))
            )));
        }
        sweeps += 1;
        converged = true;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot_conj(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                converged = false;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut cols, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
                norms[p] = cols[p].iter().map(|x| x.norm_sqr()).sum();
                norms[q] = cols[q].iter().map(|x| x.norm_sqr()).sum();
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: ties keep their original column order.
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let s: Vec<f64> = order.iter().map(|&j| libm::sqrt(norms[j])).collect();
    let s_max = s.first().copied().unwrap_or(0.0);
    let threshold = s_max * f64::EPSILON * rows.max(n) as f64;
    let rank = s.iter().filter(|&&x| x > threshold).count();

    let mut u = CMatrix::zeros(rows, n);
    let mut vm = CMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        vm.set_column(k, &v[j]);
        if k < rank {
            let inv = 1.0 / s[k];
            let col: Vec<Complex64> = cols[j].iter().map(|x| x * inv).collect();
            u.set_column(k, &col);
        }
    }
    if rank < n {
        fill_orthonormal(&mut u, rank);
    }
    Ok((u, s, vm, rank))
}

fn rotate(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    let back = phase.conj();
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *x;
        let b = *y * back;
        *x = a * c - b * s;
        *y = a * s + b * c;
    }
}

/// Replaces columns `start..` with unit vectors orthogonal to all previous
/// columns, drawn from the standard basis in index order.
fn fill_orthonormal(m: &mut CMatrix, start: usize) {
    let (rows, cols) = m.shape();
    let mut basis: Vec<Vec<Complex64>> = (0..start).map(|c| m.column(c)).collect();
    let mut candidate = 0;
    for c in start..cols {
        loop {
            let mut e = vec![ZERO; rows];
            e[candidate % rows] = ONE;
            candidate += 1;
            // Two Gram-Schmidt passes.
            for _ in 0..2 {
                for b in &basis {
                    let proj = dot_conj(b, &e);
                    for (x, y) in e.iter_mut().zip(b) {
                        *x -= proj * y;
                    }
                }
            }
            let nrm = norm(&e);
            if nrm > 0.5 {
                for x in e.iter_mut() {
                    *x /= nrm;
                }
                m.set_column(c, &e);
                basis.push(e);
                break;
            }
        }
    }
}

fn complete_basis(thin: &CMatrix) -> CMatrix {
    let (rows, cols) = thin.shape();
    let mut full = CMatrix::zeros(rows, rows);
    for c in 0..cols.min(rows) {
        full.set_column(c, &thin.column(c));
    }
    fill_orthonormal(&mut full, cols.min(rows));
    full
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unitary_defect(m: &CMatrix) -> f64 {
        let g = m.adjoint().mul(m).unwrap();
        g.sub(&CMatrix::identity(m.cols())).unwrap().frobenius_norm()
    }

    #[test]
    fn identity_svd_is_standard_basis() {
        let svd = CanonicalSvd::compute(&CMatrix::identity(2)).unwrap();
        assert_eq!(svd.singular_values, vec![1.0, 1.0]);
        assert_eq!(svd.left, CMatrix::identity(2));
        assert_eq!(svd.right, CMatrix::identity(2));
        assert_eq!(svd.rank_used, 2);
    }

    #[test]
    fn rank_one_outer_product() {
        let a = [c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)];
        let b = [c(2.0, -1.0), c(0.25, 0.5)];
        let m = CMatrix::from_fn(3, 2, |r, k| a[r] * b[k].conj());
        let svd = CanonicalSvd::compute(&m).unwrap();
        let expected = norm(&a) * norm(&b);
        assert!((svd.singular_values[0] - expected).abs() < 1e-12 * expected);
        assert!(svd.singular_values[1] < 1e-12 * expected);
        assert_eq!(svd.rank_used, 1);
        assert!(unitary_defect(&svd.left) < 1e-12);
        let err = svd.reconstruct().sub(&m).unwrap().frobenius_norm();
        assert!(err < 1e-12 * m.frobenius_norm());
    }

    #[test]
    fn wide_matrix_uses_adjoint_path() {
        let m = CMatrix::from_fn(2, 5, |r, k| c((r * 5 + k) as f64 * 0.3 - 1.0, (k as f64).sin()));
        let svd = CanonicalSvd::compute(&m).unwrap();
        assert_eq!(svd.left.shape(), (2, 2));
        assert_eq!(svd.right.shape(), (5, 2));
        let err = svd.reconstruct().sub(&m).unwrap().frobenius_norm();
        assert!(err < 1e-12 * m.frobenius_norm());
        assert!(unitary_defect(&svd.right) < 1e-12);
    }

    #[test]
    fn canonical_pivot_is_real_nonnegative() {
        let m = CMatrix::from_fn(4, 3, |r, k| {
            c(((r + 1) * (k + 2)) as f64 % 5.0 - 2.0, (r as f64) - (k as f64))
        });
        let svd = CanonicalSvd::compute(&m).unwrap();
        for j in 0..3 {
            let col = svd.left_vector(j);
            let (idx, _) = col.iter().enumerate().fold(
                (0, -1.0),
                |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc },
            );
            assert_eq!(col[idx].im, 0.0);
            assert!(col[idx].re >= 0.0);
        }
        let mut again = svd.clone();
        again.canonicalize();
        assert_eq!(again, svd);
    }

    #[test]
    fn zero_matrix_gets_completed_basis() {
        let svd = CanonicalSvd::compute(&CMatrix::zeros(3, 2)).unwrap();
        assert_eq!(svd.rank_used, 0);
        assert!(unitary_defect(&svd.left) < 1e-15);
    }

    #[test]
    fn completion_is_unitary() {
        let m = CMatrix::from_fn(6, 2, |r, k| c((r as f64 + 1.0) / (k as f64 + 1.0), 0.1 * r as f64));
        let svd = CanonicalSvd::compute(&m).unwrap();
        let full = svd.completed_left();
        assert_eq!(full.shape(), (6, 6));
        assert!(unitary_defect(&full) < 1e-12);
        for r in 0..6 {
            for k in 0..2 {
                assert_eq!(full[(r, k)], svd.left[(r, k)]);
            }
        }
    }

    #[test]
    fn lu_solve_recovers_known_solution() {
        let a = CMatrix::from_row_major(
            3,
            3,
            vec![
                c(0.0, 1.0),
                c(2.0, 0.0),
                c(1.0, 1.0),
                c(3.0, 0.0),
                c(-1.0, 0.5),
                c(0.0, 0.0),
                c(1.0, -1.0),
                c(0.0, 2.0),
                c(4.0, 0.0),
            ],
        )
        .unwrap();
        let x = CMatrix::from_row_major(3, 1, vec![c(1.0, 0.0), c(-2.0, 1.0), c(0.5, 0.5)]).unwrap();
        let b = a.mul(&x).unwrap();
        let solved = a.solve(&b).unwrap();
        assert!(solved.sub(&x).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn singular_system_is_reported() {
        let a = CMatrix::from_row_major(2, 2, vec![ONE, ONE, ONE, ONE]).unwrap();
        assert!(matches!(a.solve(&CMatrix::identity(2)), Err(Error::Numerical(_))));
    }

    #[test]
    fn shape_errors() {
        assert!(CMatrix::zeros(2, 3).mul(&CMatrix::zeros(2, 3)).is_err());
        assert!(CMatrix::from_row_major(2, 2, vec![ONE]).is_err());
    }
}
