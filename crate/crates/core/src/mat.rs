//! Dense matrices and the few factorizations the rest of the crate needs.
//!
//! Everything here is deliberately self-contained: a row-major [`Mat`], a
//! symmetric wrapper [`SymMatrix`], a cyclic Jacobi eigensolver, singular
//! values through the Gram matrix, and projection onto the PSD cone. The
//! problem sizes in this crate stay in the hundreds, where Jacobi is simple,
//! accurate, and plenty fast.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Shape(format!(
                    "ragged rows: expected {c} columns, found {}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Mat { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Mat {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * other`; dimensions must agree.
    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let crow = out.row_mut(i);
                for j in 0..other.cols {
                    crow[j] += aik * orow[j];
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "matvec: {}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += row[j] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// `self^T * v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::Shape(format!(
                "tr_matvec: {}x{} transposed times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += row[j] * vi;
            }
        }
        Ok(out)
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix stored exactly symmetric: the constructor averages each
/// `(i,j)/(j,i)` pair, so `a[(i,j)] == a[(j,i)]` holds bitwise afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: Mat,
}

impl SymMatrix {
    /// Symmetrize and wrap a square matrix.
    pub fn new(m: Mat) -> Result<SymMatrix> {
        if m.rows() != m.cols() {
            return Err(Error::Shape(format!("not square: {}x{}", m.rows(), m.cols())));
        }
        let mut s = m;
        for i in 0..s.rows() {
            for j in (i + 1)..s.cols() {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(SymMatrix { m: s })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> SymMatrix {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix { m }
    }

    pub fn diag(d: &[f64]) -> SymMatrix {
        SymMatrix::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.m
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.m.matvec(v)
    }

    /// `x^T * self * x`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let mx = self.matvec(x)?;
        Ok(dot(x, &mx))
    }

    pub fn frob_norm(&self) -> f64 {
        self.m.frob_norm()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.m[(i, i)]).sum()
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.m[idx]
    }
}

/// Eigendecomposition of a symmetric matrix: `values` descending, `vectors`
/// holding the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenModel {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl EigenModel {
    /// Reassemble `Q * diag(values) * Q^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.values.len();
        SymMatrix::from_fn(n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)];
            }
            acc
        })
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues come back sorted descending (stable for ties); negative values
/// smaller in magnitude than `1e-9 * ||m||_F` are snapped to zero so that
/// nominally-PSD inputs don't leak tiny negative eigenvalues downstream.
pub fn sym_eig(m: &SymMatrix) -> Result<EigenModel> {
    let n = m.n();
    if n == 0 {
        return Ok(EigenModel { values: vec![], vectors: Mat::zeros(0, 0) });
    }
    let mut a = m.m.clone();
    let mut v = Mat::identity(n);
    let frob = a.frob_norm();
    let tol = 1e-14 * frob.max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                // Rotation angle that annihilates a[p][q] (Golub & Van Loan).
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = c * aip - s * aiq;
                        a[(p, i)] = a[(i, p)];
                        a[(i, q)] = s * aip + c * aiq;
                        a[(q, i)] = a[(i, q)];
                    }
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "sym_eig on a {n}x{n} matrix (||.||_F = {frob:.3e}) did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the Jacobi output order for exactly tied eigenvalues.
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let clamp = 1e-9 * frob;
    let values: Vec<f64> = order
        .iter()
        .map(|&i| {
            let lam = a[(i, i)];
            if lam < 0.0 && -lam < clamp {
                0.0
            } else {
                lam
            }
        })
        .collect();
    let vectors = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenModel { values, vectors })
}

/// Singular values of a rectangular matrix, descending.
///
/// Computed as square roots of the eigenvalues of the smaller Gram matrix
/// (`m m^T` or `m^T m`), which is exact for real matrices and keeps the cost
/// at the smaller dimension cubed.
pub fn singular_values(m: &Mat) -> Result<Vec<f64>> {
    let k = m.rows().min(m.cols());
    if k == 0 {
        return Ok(vec![]);
    }
    let gram = if m.rows() <= m.cols() {
        let mt = m.transpose();
        SymMatrix::new(m.matmul(&mt)?)?
    } else {
        let mt = m.transpose();
        SymMatrix::new(mt.matmul(m)?)?
    };
    let eig = sym_eig(&gram)?;
    Ok(eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect())
}

/// Nearest (Frobenius) positive-semidefinite matrix: eigendecompose and clamp
/// negative eigenvalues to zero.
pub fn project_psd(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(m)?;
    if eig.values.iter().all(|&l| l >= 0.0) {
        return Ok(m.clone());
    }
    let clamped = EigenModel {
        values: eig.values.iter().map(|&l| l.max(0.0)).collect(),
        vectors: eig.vectors,
    };
    Ok(clamped.reconstruct())
}

/// Attempt a Cholesky factorization of `m + shift * I`; returns `None` when
/// the shifted matrix is not positive definite. Cheap PSD test for matrices
/// too large to eigendecompose routinely.
pub fn try_cholesky_shifted(m: &SymMatrix, shift: f64) -> Option<Mat> {
    let n = m.n();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = m[(i, j)] + if i == j { shift } else { 0.0 };
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if acc <= 0.0 {
                    return None;
                }
                l[(i, j)] = acc.sqrt();
            } else {
                l[(i, j)] = acc / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Dot product of equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration; cheap
/// upper-bound-quality estimate for step-size selection.
pub fn power_iteration_lmax(m: &SymMatrix, iters: usize) -> f64 {
    let n = m.n();
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lam = 0.0;
    for _ in 0..iters {
        let y = m.matvec(&x).expect("square matvec");
        let ny = norm2(&y);
        if ny == 0.0 {
            return 0.0;
        }
        for i in 0..n {
            x[i] = y[i] / ny;
        }
        lam = ny;
    }
    lam
}
