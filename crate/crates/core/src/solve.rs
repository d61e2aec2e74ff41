//! Dense storage and direct solution of the Galerkin system.
//!
//! Piecewise constants give a lower-triangular matrix that is solved by
//! forward substitution; higher degrees use LU with partial pivoting.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{FeSolution, FeSpace};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Every entry strictly above the diagonal is exactly zero.
    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| self.row(i)[(i + 1).min(self.cols)..].iter().all(|&v| v == 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    ForwardSubstitution,
    PartialPivotingLu,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: FeSolution,
    pub method: SolveMethod,
    /// `‖A u − r‖_∞`
    pub residual_inf: f64,
    /// Smallest pivot magnitude met during elimination.
    pub pivot_min: f64,
}

fn check_system(a: &DenseMatrix, b: &[f64]) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}",
            a.rows, a.cols
        )));
    }
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for {} rows",
            b.len(),
            a.rows
        )));
    }
    Ok(())
}

fn pivot_floor(a: &DenseMatrix) -> f64 {
    f64::EPSILON * a.max_abs()
}

/// Solves a lower-triangular system. Returns the solution and the smallest
/// diagonal magnitude.
pub fn forward_substitution(a: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_system(a, b)?;
    let floor = pivot_floor(a);
    let mut x = vec![0.0; a.rows];
    let mut pivot_min = f64::INFINITY;
    for i in 0..a.rows {
        let row = a.row(i);
        let d = row[i];
        if !(d.abs() > floor) {
            return Err(Error::SingularSystem { index: i, value: d });
        }
        pivot_min = pivot_min.min(d.abs());
        let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, u)| l * u).sum();
        x[i] = (b[i] - s) / d;
    }
    Ok((x, pivot_min))
}

const PARALLEL_ROWS: usize = 256;

/// Gaussian elimination with partial pivoting. Returns the solution and the
/// smallest pivot magnitude.
pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_system(a, b)?;
    let n = a.rows;
    let floor = pivot_floor(a);
    let mut lu = a.data.clone();
    let mut rhs = b.to_vec();
    let mut pivot_min = f64::INFINITY;

    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, lu[i * n + k]))
            .fold((k, 0.0f64), |best, (i, v)| if v.abs() > best.1.abs() { (i, v) } else { best });
        if !(pv.abs() > floor) {
            return Err(Error::SingularSystem { index: k, value: pv });
        }
        pivot_min = pivot_min.min(pv.abs());
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            rhs.swap(k, p);
        }

        let (head, tail) = lu.split_at_mut((k + 1) * n);
        let pivot_row = &head[k * n..];
        let rk = rhs[k];
        let (_, rhs_tail) = rhs.split_at_mut(k + 1);
        let update = |row: &mut [f64], r: &mut f64| {
            let l = row[k] / pivot_row[k];
            if l != 0.0 {
                for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *x -= l * u;
                }
                *r -= l * rk;
            }
            row[k] = l;
        };
        if n - k > PARALLEL_ROWS {
            tail.par_chunks_mut(n)
                .zip(rhs_tail.par_iter_mut())
                .for_each(|(row, r)| update(row, r));
        } else {
            tail.chunks_mut(n)
                .zip(rhs_tail.iter_mut())
                .for_each(|(row, r)| update(row, r));
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let row = &lu[i * n..(i + 1) * n];
        let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
        x[i] = (rhs[i] - s) / row[i];
    }
    Ok((x, pivot_min))
}

/// `‖A x − b‖_∞`
pub fn residual_inf(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let ax = a.mul_vec(x)?;
    Ok(ax.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs())))
}

/// Solves `A u = r` and wraps `u` as an element of `space`.
pub fn solve(a: &DenseMatrix, r: &[f64], space: &FeSpace) -> Result<SolveReport> {
    if a.rows != space.dim() {
        return Err(Error::DimensionMismatch(format!(
            "system of size {} for a space of dimension {}",
            a.rows,
            space.dim()
        )));
    }
    let (x, pivot_min, method) = if a.is_lower_triangular() {
        let (x, p) = forward_substitution(a, r)?;
        (x, p, SolveMethod::ForwardSubstitution)
    } else {
        let (x, p) = lu_solve(a, r)?;
        (x, p, SolveMethod::PartialPivotingLu)
    };
    let residual_inf = residual_inf(a, &x, r)?;
    Ok(SolveReport {
        solution: FeSolution::new(space.clone(), x)?,
        method,
        residual_inf,
        pivot_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_space;
    use proptest::prelude::*;

    #[test]
    fn small_lower_triangular() {
        let a = DenseMatrix::from_row_major(2, 2, vec![2.0, 0.0, 1.0, 4.0]).unwrap();
        let (x, p) = forward_substitution(&a, &[2.0, 9.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert_eq!(p, 2.0);
        let (y, _) = lu_solve(&a, &[2.0, 9.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn pivoting_required() {
        let a = DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let (x, p) = lu_solve(&a, &[3.0, 5.0]).unwrap();
        assert_eq!(x, vec![5.0, 3.0]);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn singular_pivot_is_named() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            forward_substitution(&a, &[1.0, 1.0]),
            Err(Error::SingularSystem { index: 1, value: 0.0 })
        );
        let b = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            lu_solve(&b, &[1.0, 1.0]),
            Err(Error::SingularSystem { index: 1, .. })
        ));
    }

    #[test]
    fn dimension_checks() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(lu_solve(&a, &[1.0, 1.0]).is_err());
        assert!(DenseMatrix::from_row_major(2, 2, vec![1.0]).is_err());
        let sq = DenseMatrix::from_fn(2, 2, |i, j| (i == j) as u8 as f64);
        assert!(forward_substitution(&sq, &[1.0]).is_err());
        let space = build_space(3, 0).unwrap();
        assert!(solve(&sq, &[1.0, 1.0], &space).is_err());
    }

    #[test]
    fn solve_dispatches_on_structure() {
        let space = build_space(3, 0).unwrap();
        let a = DenseMatrix::from_fn(3, 3, |i, j| if j <= i { 1.0 + (i + j) as f64 } else { 0.0 });
        let rep = solve(&a, &[1.0, 2.0, 3.0], &space).unwrap();
        assert_eq!(rep.method, SolveMethod::ForwardSubstitution);
        assert!(rep.residual_inf < 1e-14);
        let space = build_space(1, 2).unwrap();
        let full = DenseMatrix::from_fn(3, 3, |i, j| 1.0 / (1 + i + j) as f64 + (i == j) as u8 as f64);
        let rep = solve(&full, &[1.0, 0.0, -1.0], &space).unwrap();
        assert_eq!(rep.method, SolveMethod::PartialPivotingLu);
        assert!(rep.residual_inf < 1e-14);
    }

    #[test]
    fn large_parallel_elimination_is_accurate() {
        let n = 400;
        let a = DenseMatrix::from_fn(n, n, |i, j| {
            let d = (i as f64 - j as f64).abs();
            if i == j { 4.0 } else { 1.0 / (1.0 + d * d) }
        });
        let x0: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x0).unwrap();
        let (x, _) = lu_solve(&a, &b).unwrap();
        let err = x.iter().zip(&x0).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(err < 1e-12);
    }

    fn lower_strategy() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
        (1usize..12).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(-1.0f64..1.0, n * n),
                proptest::collection::vec(-1.0f64..1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn triangular_paths_agree((n, vals, b) in lower_strategy()) {
            let a = DenseMatrix::from_fn(n, n, |i, j| {
                if j > i { 0.0 } else if i == j { 2.0 + vals[i * n + j].abs() } else { vals[i * n + j] }
            });
            let (x, _) = forward_substitution(&a, &b).unwrap();
            let (y, _) = lu_solve(&a, &b).unwrap();
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
            }
            prop_assert!(residual_inf(&a, &x, &b).unwrap() < 1e-12);
        }
    }
}
