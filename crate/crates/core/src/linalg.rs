//! Dense real matrix kernel.
//!
//! Row-major [`Matrix`] plus three structural newtypes ([`SymMatrix`],
//! [`SkewMatrix`], [`OrthMatrix`]) whose invariants are enforced at
//! construction. The kernels are deliberately small: cyclic Jacobi for the
//! symmetric eigenproblem, scaling-and-squaring Taylor for the exponential of
//! a skew-symmetric matrix, and Householder QR.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Orthogonality tolerance checked by [`OrthMatrix::new`].
pub const ORTH_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;
const EXP_SQUARING_THRESHOLD: f64 = 0.5;
const EXP_TAYLOR_RTOL: f64 = 1e-18;
const EXP_MAX_TERMS: usize = 40;

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("ragged rows");
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Diagonal matrix with the given entries.
    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Outer product `x yᵀ`.
    pub fn outer(x: &[f64], y: &[f64]) -> Self {
        Self::from_fn(x.len(), y.len(), |i, j| x[i] * y[j])
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "matrix dimension mismatch"
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

/// Symmetric matrix. Entries satisfy `a[i][j] == a[j][i]` exactly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Symmetrizes `(A + Aᵀ)/2`.
    pub fn new(a: Matrix) -> Result<Self> {
        if !a.is_square() {
            return invalid(format!(
                "symmetric matrix must be square, got {}x{}",
                a.rows, a.cols
            ));
        }
        let p = a.rows;
        let mut m = a;
        for i in 0..p {
            for j in (i + 1)..p {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self(m))
    }

    pub fn from_fn(p: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::new(Matrix::from_fn(p, p, f)).expect("square by construction")
    }

    pub fn zeros(p: usize) -> Self {
        Self(Matrix::zeros(p, p))
    }

    pub fn identity(p: usize) -> Self {
        Self(Matrix::identity(p))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self(Matrix::diag(values))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// `B A Bᵀ`, which stays symmetric.
    pub fn congruence(&self, b: &Matrix) -> SymMatrix {
        let m = &(b * &self.0) * &b.transpose();
        SymMatrix::new(m).expect("congruence of a square matrix is square")
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Skew-symmetric matrix, an element of the Lie algebra `so(p)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkewMatrix(Matrix);

impl SkewMatrix {
    /// Antisymmetrizes `(A - Aᵀ)/2`; the diagonal becomes exactly zero.
    pub fn new(a: Matrix) -> Result<Self> {
        if !a.is_square() {
            return invalid(format!(
                "skew-symmetric matrix must be square, got {}x{}",
                a.rows, a.cols
            ));
        }
        let p = a.rows;
        let mut m = a;
        for i in 0..p {
            m[(i, i)] = 0.0;
            for j in (i + 1)..p {
                let v = 0.5 * (m[(i, j)] - m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        Ok(Self(m))
    }

    pub fn zeros(p: usize) -> Self {
        Self(Matrix::zeros(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn scale(&self, c: f64) -> SkewMatrix {
        SkewMatrix(self.0.scale(c))
    }
}

impl Index<(usize, usize)> for SkewMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Orthogonal matrix, `‖UᵀU − I‖_max ≤ 1e-10`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthMatrix(Matrix);

impl OrthMatrix {
    pub fn new(u: Matrix) -> Result<Self> {
        if !u.is_square() {
            return invalid("orthogonal matrix must be square");
        }
        let err = orthogonality_error(&u);
        if !(err <= ORTH_TOL) {
            return invalid(format!("matrix is not orthogonal (‖UᵀU − I‖ = {err:e})"));
        }
        Ok(Self(u))
    }

    /// Wraps the output of a kernel that produces orthogonal matrices up to
    /// rounding.
    pub(crate) fn from_trusted(u: Matrix) -> Self {
        debug_assert!(orthogonality_error(&u) <= ORTH_TOL);
        Self(u)
    }

    pub fn identity(p: usize) -> Self {
        Self(Matrix::identity(p))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.0.column(j)
    }

    pub fn transpose(&self) -> OrthMatrix {
        OrthMatrix(self.0.transpose())
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &OrthMatrix) -> OrthMatrix {
        OrthMatrix(&self.0 * &other.0)
    }
}

impl Index<(usize, usize)> for OrthMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

fn orthogonality_error(u: &Matrix) -> f64 {
    let g = &u.transpose() * u;
    (&g - &Matrix::identity(u.rows)).max_abs()
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues non-increasing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    pub vectors: OrthMatrix,
}

impl EigDecomp {
    /// `V diag(values) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let v = self.vectors.as_matrix();
        let scaled = Matrix::from_fn(v.rows, v.cols, |i, j| v[(i, j)] * self.values[j]);
        &scaled * &v.transpose()
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps visit pairs `(p, q)`, `p < q`, in row order, so the result is a
/// deterministic function of the input. Eigenvalues are returned
/// non-increasing, and each eigenvector is signed so that its first
/// coordinate exceeding `1e-12` in magnitude is positive.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomp> {
    if !a.0.is_finite() {
        return invalid("sym_eig: non-finite entries");
    }
    let n = a.dim();
    let mut m = a.0.clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)] * m[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&k| m[(k, k)]).collect();
    let mut vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    for j in 0..n {
        let flip = (0..n)
            .map(|i| vectors[(i, j)])
            .find(|x| x.abs() > 1e-12)
            .is_some_and(|x| x < 0.0);
        if flip {
            for i in 0..n {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
    Ok(EigDecomp {
        values,
        vectors: OrthMatrix::from_trusted(vectors),
    })
}

// A ← JᵀAJ and V ← VJ for the rotation J acting on coordinates (p, q).
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows;
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let apq = m[(p, q)];
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        m[(k, p)] = new_kp;
        m[(p, k)] = new_kp;
        m[(k, q)] = new_kq;
        m[(q, k)] = new_kq;
    }
    m[(p, p)] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
    m[(q, q)] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// `exp(t ξ)` for skew-symmetric `ξ`, by scaling and squaring a truncated
/// Taylor series.
///
/// The argument is halved until `‖tξ‖₁ ≤ 0.5`; Taylor terms are summed until
/// they drop below `1e-18` relative to the scaled argument (at most 40
/// terms), then the result is squared back.
pub fn skew_exp(xi: &SkewMatrix, t: f64) -> OrthMatrix {
    let p = xi.dim();
    let a = xi.0.scale(t);
    let norm = a.norm_one();
    if norm == 0.0 {
        return OrthMatrix::identity(p);
    }
    let squarings = if norm > EXP_SQUARING_THRESHOLD {
        (norm / EXP_SQUARING_THRESHOLD).log2().ceil() as i32
    } else {
        0
    };
    let b = a.scale(0.5f64.powi(squarings));
    let cutoff = EXP_TAYLOR_RTOL * b.max_abs();
    let mut sum = Matrix::identity(p);
    let mut term = Matrix::identity(p);
    for k in 1..=EXP_MAX_TERMS {
        term = (&term * &b).scale(1.0 / k as f64);
        sum = &sum + &term;
        if term.max_abs() <= cutoff {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    OrthMatrix::from_trusted(sum)
}

/// Householder QR of an `m × n` matrix with `m ≥ n`.
///
/// Returns the full `m × m` orthogonal factor `Q` and the `m × n` upper
/// trapezoidal `R` with `A = QR`.
pub fn qr(a: &Matrix) -> (Matrix, Matrix) {
    let m = a.rows;
    let n = a.cols;
    assert!(m >= n, "qr requires rows >= cols");
    let mut r = a.clone();
    let mut q = Matrix::identity(m);
    for k in 0..n.min(m.saturating_sub(1)) {
        let Some(v) = householder_vector(&r, k) else {
            continue;
        };
        // R ← (I − 2vvᵀ) R on rows k..m
        for j in 0..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
            for i in k..m {
                r[(i, j)] -= 2.0 * v[i - k] * dot;
            }
        }
        // Q ← Q (I − 2vvᵀ) on columns k..m
        for i in 0..m {
            let dot: f64 = (k..m).map(|c| q[(i, c)] * v[c - k]).sum();
            for c in k..m {
                q[(i, c)] -= 2.0 * dot * v[c - k];
            }
        }
        for i in (k + 1)..m {
            r[(i, k)] = 0.0;
        }
    }
    (q, r)
}

fn householder_vector(r: &Matrix, k: usize) -> Option<Vec<f64>> {
    let m = r.rows;
    let x: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
    let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tail: f64 = x[1..].iter().map(|v| v * v).sum();
    if norm_x == 0.0 || tail == 0.0 {
        return None;
    }
    let alpha = if x[0] >= 0.0 { -norm_x } else { norm_x };
    let mut v = x;
    v[0] -= alpha;
    let nv = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= nv);
    Some(v)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return invalid("determinant of a non-square matrix");
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))
            .expect("non-empty range");
        if m[(pivot, k)] == 0.0 {
            return Ok(0.0);
        }
        if pivot != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            det = -det;
        }
        det *= m[(k, k)];
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
        }
    }
    Ok(det)
}

/// Half-vectorization, column by column below the diagonal:
/// `(a₁₁, a₂₁, …, a_p1, a₂₂, a₃₂, …, a_pp)`.
pub fn vech(a: &SymMatrix) -> Vec<f64> {
    let p = a.dim();
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    for j in 0..p {
        for i in j..p {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Inverse of [`vech`].
pub fn unvech(v: &[f64]) -> Result<SymMatrix> {
    let p = ((((8 * v.len() + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if p * (p + 1) / 2 != v.len() {
        return invalid(format!("{} is not a triangular number", v.len()));
    }
    let mut m = Matrix::zeros(p, p);
    let mut k = 0;
    for j in 0..p {
        for i in j..p {
            m[(i, j)] = v[k];
            m[(j, i)] = v[k];
            k += 1;
        }
    }
    Ok(SymMatrix(m))
}

/// Trace inner product `tr(aᵀ b)`.
pub fn hs_inner(a: &Matrix, b: &Matrix) -> Result<f64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return invalid(format!(
            "hs_inner: {}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        ));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}
