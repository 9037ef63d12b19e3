//! Small dense solvers: Gaussian elimination with partial pivoting, matrix
//! inversion, Cholesky, and numerical rank. Sized for the SEM laboratory
//! (systems of at most a few dozen unknowns), not for large-scale work.

use alloc::format;

use super::Matrix;
use crate::{Error, Result};

/// Solves `a * x = b` for square `a` by Gaussian elimination with partial
/// pivoting. `b` may have several right-hand-side columns.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape(format!("solve needs a square matrix, got {}x{}", n, a.cols())));
    }
    if b.rows() != n {
        return Err(Error::Shape(format!(
            "right-hand side has {} rows, expected {}",
            b.rows(),
            n
        )));
    }
    let mut lhs = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut pivot = col;
        let mut best = libm::fabs(lhs.get(col, col));
        for r in col + 1..n {
            let v = libm::fabs(lhs.get(r, col));
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::Numeric("singular matrix in solve".into()));
        }
        if pivot != col {
            swap_rows(&mut lhs, pivot, col);
            swap_rows(&mut rhs, pivot, col);
        }
        let diag = lhs.get(col, col);
        for r in col + 1..n {
            let factor = lhs.get(r, col) / diag;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                let v = lhs.get(r, c) - factor * lhs.get(col, c);
                lhs.set(r, c, v);
            }
            for c in 0..rhs.cols() {
                let v = rhs.get(r, c) - factor * rhs.get(col, c);
                rhs.set(r, c, v);
            }
        }
    }
    // Back substitution.
    let mut x = Matrix::zeros(n, rhs.cols());
    for c in 0..rhs.cols() {
        for r in (0..n).rev() {
            let mut acc = rhs.get(r, c);
            for k in r + 1..n {
                acc -= lhs.get(r, k) * x.get(k, c);
            }
            x.set(r, c, acc / lhs.get(r, r));
        }
    }
    Ok(x)
}

fn swap_rows(m: &mut Matrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    let cols = m.cols();
    for c in 0..cols {
        let tmp = m.get(a, c);
        m.set(a, c, m.get(b, c));
        m.set(b, c, tmp);
    }
}

pub fn invert(a: &Matrix) -> Result<Matrix> {
    solve(a, &Matrix::identity(a.rows()))
}

/// 1-norm condition number estimate `‖A‖₁ · ‖A⁻¹‖₁`. Returns infinity for a
/// singular matrix.
pub fn condition_number(a: &Matrix) -> f64 {
    match invert(a) {
        Ok(inv) => one_norm(a) * one_norm(&inv),
        Err(_) => f64::INFINITY,
    }
}

fn one_norm(a: &Matrix) -> f64 {
    let mut best = 0.0f64;
    for c in 0..a.cols() {
        let mut sum = 0.0;
        for r in 0..a.rows() {
            sum += libm::fabs(a.get(r, c));
        }
        best = best.max(sum);
    }
    best
}

/// Cholesky factor `L` (lower triangular, `L Lᵀ = a`) of a symmetric
/// positive-definite matrix. Fails on any non-positive pivot.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape("cholesky needs a square matrix".into()));
    }
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if acc <= 0.0 {
                    return Err(Error::Numeric(format!(
                        "matrix not positive definite (pivot {acc:.3e} at {i})"
                    )));
                }
                l.set(i, j, libm::sqrt(acc));
            } else {
                l.set(i, j, acc / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Numerical row rank by row-echelon reduction. A pivot counts when its
/// magnitude exceeds `tol` times the largest row norm of the input.
pub fn rank(a: &Matrix, tol: f64) -> usize {
    let mut m = a.clone();
    let rows = m.rows();
    let cols = m.cols();
    let scale: f64 = {
        let mut best = 0.0f64;
        for r in 0..rows {
            let norm: f64 = m.row(r).iter().map(|v| v * v).sum();
            best = best.max(libm::sqrt(norm));
        }
        best.max(1.0)
    };
    let threshold = tol * scale;

    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        if row >= rows {
            break;
        }
        let mut pivot = row;
        let mut best = libm::fabs(m.get(row, col));
        for r in row + 1..rows {
            let v = libm::fabs(m.get(r, col));
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best <= threshold {
            continue;
        }
        swap_rows(&mut m, pivot, row);
        let diag = m.get(row, col);
        for r in row + 1..rows {
            let factor = m.get(r, col) / diag;
            if factor == 0.0 {
                continue;
            }
            for c in col..cols {
                let v = m.get(r, c) - factor * m.get(row, c);
                m.set(r, c, v);
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}
