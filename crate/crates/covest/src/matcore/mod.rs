//! Dense linear-algebra kernel: symmetric/Hermitian matrix types, norms,
//! factorizations and the projections every estimator needs.
//!
//! Everything here is deterministic and allocation-simple: matrices are
//! row-major `Vec<f64>` (or `Vec<Complex64>`), eigendecompositions use a
//! cyclic Jacobi sweep (see [`eig`]), and dimensions stay at desk scale.

pub mod eig;
pub mod io;

pub use eig::{eig_herm, eig_sym, EigDecomp, EigDecompHerm};

use num_complex::Complex64;
use std::fmt;

/// Relative reconstruction tolerance guaranteed by the eigensolvers.
pub const TOL_EIG: f64 = 1e-10;
/// Relative ridge added once when a bare Cholesky factorization fails.
pub const RIDGE_REL: f64 = 1e-12;
/// Tolerance for matching duplicated eigenvalue pairs in the Hermitian embedding.
pub const TOL_PAIR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum MatError {
    /// An input entry is NaN or infinite.
    NonFinite,
    /// The Jacobi iteration exceeded its sweep cap.
    NoConvergence { sweeps: usize },
    DimMismatch { expected: usize, got: usize },
    /// Cholesky failed even after the ridge retry.
    NotPsd,
    Invalid(&'static str),
}

impl fmt::Display for MatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatError::NonFinite => write!(f, "matrix contains NaN or infinite entries"),
            MatError::NoConvergence { sweeps } => {
                write!(f, "eigendecomposition did not converge after {sweeps} sweeps")
            }
            MatError::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            MatError::NotPsd => write!(f, "matrix is not positive semi-definite"),
            MatError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for MatError {}

/// Plain dense real matrix, row-major. Used for eigenvector tables,
/// Cholesky factors and intermediate products.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
        y
    }

    pub fn frob(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Plain dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

/// Dense symmetric real p×p matrix. Symmetry is exact and maintained by
/// construction: all constructors either mirror the lower triangle or
/// reject asymmetric input.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(p: usize) -> Self {
        assert!(p >= 1, "dimension must be at least 1");
        SymMatrix { dim: p, data: vec![0.0; p * p] }
    }

    pub fn identity(p: usize) -> Self {
        let mut m = SymMatrix::zeros(p);
        for i in 0..p {
            m.data[i * p + i] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = SymMatrix::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = *v;
        }
        m
    }

    /// Builds from a function evaluated on the lower triangle (`i >= j`);
    /// the upper triangle is mirrored so symmetry holds exactly.
    pub fn from_fn_lower<F: FnMut(usize, usize) -> f64>(p: usize, mut f: F) -> Self {
        assert!(p >= 1, "dimension must be at least 1");
        let mut data = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..=i {
                let v = f(i, j);
                data[i * p + j] = v;
                data[j * p + i] = v;
            }
        }
        SymMatrix { dim: p, data }
    }

    /// Validating constructor: rows must form an exactly symmetric square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        let p = rows.len();
        if p == 0 {
            return Err(MatError::Invalid("matrix dimension must be at least 1"));
        }
        for r in rows {
            if r.len() != p {
                return Err(MatError::DimMismatch { expected: p, got: r.len() });
            }
        }
        for i in 0..p {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(MatError::Invalid("matrix is not symmetric"));
                }
            }
        }
        Ok(SymMatrix::from_fn_lower(p, |i, j| rows[i][j]))
    }

    /// (A + Aᵀ)/2 of a square matrix; symmetric exactly by construction.
    pub fn symmetrized(m: &Mat) -> Self {
        assert_eq!(m.rows(), m.cols(), "square matrix required");
        SymMatrix::from_fn_lower(m.rows(), |i, j| 0.5 * (m.get(i, j) + m.get(j, i)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets entry (i,j) and its mirror.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix, MatError> {
        if self.dim != other.dim {
            return Err(MatError::DimMismatch { expected: self.dim, got: other.dim });
        }
        Ok(SymMatrix::from_fn_lower(self.dim, |i, j| self.get(i, j) + other.get(i, j)))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix, MatError> {
        if self.dim != other.dim {
            return Err(MatError::DimMismatch { expected: self.dim, got: other.dim });
        }
        Ok(SymMatrix::from_fn_lower(self.dim, |i, j| self.get(i, j) - other.get(i, j)))
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix::from_fn_lower(self.dim, |i, j| c * self.get(i, j))
    }

    /// Entrywise map; symmetry is preserved since f is applied per entry.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> SymMatrix {
        SymMatrix::from_fn_lower(self.dim, |i, j| f(self.get(i, j)))
    }

    /// Entrywise (Hadamard) product with another symmetric matrix.
    pub fn hadamard_sym(&self, other: &SymMatrix) -> Result<SymMatrix, MatError> {
        if self.dim != other.dim {
            return Err(MatError::DimMismatch { expected: self.dim, got: other.dim });
        }
        Ok(SymMatrix::from_fn_lower(self.dim, |i, j| self.get(i, j) * other.get(i, j)))
    }

    /// General matrix product (result not symmetric in general).
    pub fn matmul_sym(&self, other: &SymMatrix) -> Result<Mat, MatError> {
        if self.dim != other.dim {
            return Err(MatError::DimMismatch { expected: self.dim, got: other.dim });
        }
        Ok(self.to_mat().matmul(&other.to_mat()))
    }

    pub fn to_mat(&self) -> Mat {
        Mat { rows: self.dim, cols: self.dim, data: self.data.clone() }
    }

    pub fn frob(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_col_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).powi(2)).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max)
    }
}

/// Dense Hermitian complex M×M matrix. Conjugate symmetry is exact and the
/// diagonal imaginary parts are exactly zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermMatrix {
    pub fn zeros(m: usize) -> Self {
        assert!(m >= 1, "dimension must be at least 1");
        HermMatrix { dim: m, data: vec![Complex64::new(0.0, 0.0); m * m] }
    }

    pub fn identity(m: usize) -> Self {
        let mut h = HermMatrix::zeros(m);
        for i in 0..m {
            h.data[i * m + i] = Complex64::new(1.0, 0.0);
        }
        h
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut h = HermMatrix::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            h.data[i * d.len() + i] = Complex64::new(*v, 0.0);
        }
        h
    }

    /// Builds from a function evaluated on the lower triangle (`i >= j`);
    /// the strict upper triangle is the conjugate mirror and diagonal
    /// imaginary parts are forced to zero.
    pub fn from_fn_lower<F: FnMut(usize, usize) -> Complex64>(m: usize, mut f: F) -> Self {
        assert!(m >= 1, "dimension must be at least 1");
        let mut data = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..m {
            for j in 0..=i {
                let mut v = f(i, j);
                if i == j {
                    v.im = 0.0;
                }
                data[i * m + j] = v;
                data[j * m + i] = v.conj();
            }
        }
        HermMatrix { dim: m, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn add(&self, other: &HermMatrix) -> Result<HermMatrix, MatError> {
        if self.dim != other.dim {
            return Err(MatError::DimMismatch { expected: self.dim, got: other.dim });
        }
        Ok(HermMatrix::from_fn_lower(self.dim, |i, j| self.get(i, j) + other.get(i, j)))
    }

    pub fn sub(&self, other: &HermMatrix) -> Result<HermMatrix, MatError> {
        if self.dim != other.dim {
            return Err(MatError::DimMismatch { expected: self.dim, got: other.dim });
        }
        Ok(HermMatrix::from_fn_lower(self.dim, |i, j| self.get(i, j) - other.get(i, j)))
    }

    pub fn scale(&self, c: f64) -> HermMatrix {
        HermMatrix::from_fn_lower(self.dim, |i, j| c * self.get(i, j))
    }

    /// Subtracts c from the diagonal.
    pub fn shift_diag(&self, c: f64) -> HermMatrix {
        HermMatrix::from_fn_lower(self.dim, |i, j| {
            if i == j {
                self.get(i, j) - Complex64::new(c, 0.0)
            } else {
                self.get(i, j)
            }
        })
    }

    pub fn frob(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    pub fn max_col_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max)
    }

    /// Quadratic form x^H A x; real up to rounding for Hermitian A.
    pub fn quad_form(&self, x: &[Complex64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += x[i].conj() * self.get(i, j) * x[j];
            }
        }
        acc.re
    }
}

/// First column of a symmetric Toeplitz matrix: Σ_{i,j} = σ_{|i−j|+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCol {
    col: Vec<f64>,
}

impl ToeplitzCol {
    pub fn new(col: Vec<f64>) -> Self {
        assert!(!col.is_empty(), "dimension must be at least 1");
        ToeplitzCol { col }
    }

    pub fn dim(&self) -> usize {
        self.col.len()
    }

    pub fn col(&self) -> &[f64] {
        &self.col
    }

    pub fn get(&self, r: usize) -> f64 {
        self.col[r]
    }

    pub fn expand(&self) -> SymMatrix {
        let p = self.col.len();
        SymMatrix::from_fn_lower(p, |i, j| self.col[i - j])
    }
}

/// Symmetric p×p mask with entries in [0,1]; applied via Hadamard product.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    entries: SymMatrix,
}

impl Mask {
    /// Validating constructor: entries must lie in [0,1].
    pub fn new(entries: SymMatrix) -> Result<Self, MatError> {
        for i in 0..entries.dim() {
            for j in 0..=i {
                let v = entries.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(MatError::Invalid("mask entries must lie in [0,1]"));
                }
            }
        }
        Ok(Mask { entries })
    }

    pub fn ones(p: usize) -> Self {
        Mask { entries: SymMatrix::from_fn_lower(p, |_, _| 1.0) }
    }

    /// Keeps only the diagonal.
    pub fn diagonal(p: usize) -> Self {
        Mask { entries: SymMatrix::identity(p) }
    }

    /// Banding mask: 1 where |i−j|+1 ≤ width, 0 elsewhere.
    pub fn banded(p: usize, width: usize) -> Result<Self, MatError> {
        if width < 1 || width > p {
            return Err(MatError::Invalid("band width must satisfy 1 <= width <= p"));
        }
        Ok(Mask {
            entries: SymMatrix::from_fn_lower(p, |i, j| if i - j + 1 <= width { 1.0 } else { 0.0 }),
        })
    }

    /// Symmetric Toeplitz mask from its first column (entries in [0,1]).
    pub fn from_toeplitz_col(col: &ToeplitzCol) -> Result<Self, MatError> {
        if col.col().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(MatError::Invalid("mask entries must lie in [0,1]"));
        }
        Ok(Mask { entries: col.expand() })
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.entries
    }
}

/// Norm bundle as used throughout: operator (max |eigenvalue|), Frobenius,
/// nuclear (sum of |eigenvalues|), entrywise max, maximum column ℓ2 norm,
/// and trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixNorms {
    pub operator: f64,
    pub frobenius: f64,
    pub nuclear: f64,
    pub max_abs: f64,
    pub max_col: f64,
    pub trace: f64,
}

pub fn norms(a: &SymMatrix) -> Result<MatrixNorms, MatError> {
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let ed = eig_sym(a)?;
    Ok(MatrixNorms {
        operator: ed.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        frobenius: a.frob(),
        nuclear: ed.values.iter().map(|v| v.abs()).sum(),
        max_abs: a.max_abs(),
        max_col: a.max_col_norm(),
        trace: a.trace(),
    })
}

pub fn norms_herm(a: &HermMatrix) -> Result<MatrixNorms, MatError> {
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let ed = eig_herm(a)?;
    Ok(MatrixNorms {
        operator: ed.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        frobenius: a.frob(),
        nuclear: ed.values.iter().map(|v| v.abs()).sum(),
        max_abs: a.max_abs(),
        max_col: a.max_col_norm(),
        trace: a.trace(),
    })
}

/// Operator norm of a symmetric matrix.
pub fn op_norm(a: &SymMatrix) -> Result<f64, MatError> {
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let ed = eig_sym(a)?;
    Ok(ed.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Projection onto the cone of positive semi-definite matrices: negative
/// eigenvalues are clamped to zero and the matrix reconstructed.
pub fn psd_project(a: &SymMatrix) -> Result<SymMatrix, MatError> {
    let ed = eig_sym(a)?;
    let p = a.dim();
    let clamped: Vec<f64> = ed.values.iter().map(|v| v.max(0.0)).collect();
    Ok(reconstruct_sym(p, &clamped, &ed.vectors))
}

/// V diag(vals) Vᵀ, symmetric by construction.
pub fn reconstruct_sym(p: usize, vals: &[f64], vectors: &Mat) -> SymMatrix {
    SymMatrix::from_fn_lower(p, |i, j| {
        let mut s = 0.0;
        for (k, lam) in vals.iter().enumerate() {
            if *lam != 0.0 {
                s += lam * vectors.get(i, k) * vectors.get(j, k);
            }
        }
        s
    })
}

/// Averages the matrix along its diagonals:
/// col[r] = (1/(p+1−r)) Σ_{i−j = r−1} A_{i,j}, r = 1..p.
pub fn toeplitz_project(a: &SymMatrix) -> Result<ToeplitzCol, MatError> {
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let p = a.dim();
    let mut col = Vec::with_capacity(p);
    for r in 1..=p {
        let mut s = 0.0;
        for i in (r - 1)..p {
            s += a.get(i, i - (r - 1));
        }
        col.push(s / ((p + 1 - r) as f64));
    }
    Ok(ToeplitzCol::new(col))
}

/// Hermitian variant: averages each lower co-diagonal, returning the first
/// column of the nearest Hermitian Toeplitz matrix. The leading entry is
/// real exactly.
pub fn toeplitz_project_herm(a: &HermMatrix) -> Result<Vec<Complex64>, MatError> {
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let m = a.dim();
    let mut col = Vec::with_capacity(m);
    for r in 1..=m {
        let mut s = Complex64::new(0.0, 0.0);
        for i in (r - 1)..m {
            s += a.get(i, i - (r - 1));
        }
        let mut v = s / ((m + 1 - r) as f64);
        if r == 1 {
            v.im = 0.0;
        }
        col.push(v);
    }
    Ok(col)
}

/// Expands a complex first column into the Hermitian Toeplitz matrix with
/// A_{i,j} = col[i−j] for i ≥ j.
pub fn herm_toeplitz_expand(col: &[Complex64]) -> HermMatrix {
    HermMatrix::from_fn_lower(col.len(), |i, j| col[i - j])
}

/// Entrywise product A ⊙ M.
pub fn hadamard(a: &SymMatrix, mask: &Mask) -> Result<SymMatrix, MatError> {
    if a.dim() != mask.dim() {
        return Err(MatError::DimMismatch { expected: a.dim(), got: mask.dim() });
    }
    Ok(SymMatrix::from_fn_lower(a.dim(), |i, j| a.get(i, j) * mask.get(i, j)))
}

/// Lower-triangular Cholesky factor L with LLᵀ = A. If the bare
/// factorization fails, a ridge of `RIDGE_REL`·trace(A)/p is added once and
/// the factorization retried; failure after that is `NotPsd`.
pub fn cholesky(a: &SymMatrix) -> Result<Mat, MatError> {
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let p = a.dim();
    match cholesky_attempt(a, 0.0) {
        Some(l) => Ok(l),
        None => {
            let ridge = RIDGE_REL * a.trace().abs() / p as f64;
            cholesky_attempt(a, ridge).ok_or(MatError::NotPsd)
        }
    }
}

fn cholesky_attempt(a: &SymMatrix, ridge: f64) -> Option<Mat> {
    let p = a.dim();
    // Zero pivots are tolerated for singular PSD input as long as the
    // column below is (numerically) zero as well.
    let zero_tol = 1e-10 * (a.max_abs().max(ridge)).sqrt();
    let mut l = Mat::zeros(p, p);
    for j in 0..p {
        let mut d = a.get(j, j) + ridge;
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d < 0.0 {
            return None;
        }
        let ljj = d.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..p {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if ljj > 0.0 {
                l.set(i, j, s / ljj);
            } else if s.abs() <= zero_tol {
                l.set(i, j, 0.0);
            } else {
                return None;
            }
        }
    }
    Some(l)
}

/// Complex Cholesky of a Hermitian PSD matrix, same ridge policy as the
/// real variant.
pub fn cholesky_herm(a: &HermMatrix) -> Result<CMat, MatError> {
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let m = a.dim();
    match cholesky_herm_attempt(a, 0.0) {
        Some(l) => Ok(l),
        None => {
            let ridge = RIDGE_REL * a.trace().abs() / m as f64;
            cholesky_herm_attempt(a, ridge).ok_or(MatError::NotPsd)
        }
    }
}

fn cholesky_herm_attempt(a: &HermMatrix, ridge: f64) -> Option<CMat> {
    let m = a.dim();
    let zero_tol = 1e-10 * (a.max_abs().max(ridge)).sqrt();
    let mut l = CMat::zeros(m, m);
    for j in 0..m {
        let mut d = a.get(j, j).re + ridge;
        for k in 0..j {
            d -= l.get(j, k).norm_sqr();
        }
        if d < 0.0 {
            return None;
        }
        let ljj = d.sqrt();
        l.set(j, j, Complex64::new(ljj, 0.0));
        for i in (j + 1)..m {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k).conj();
            }
            if ljj > 0.0 {
                l.set(i, j, s / ljj);
            } else if s.norm() <= zero_tol {
                l.set(i, j, Complex64::new(0.0, 0.0));
            } else {
                return None;
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn from_rows_rejects_asymmetric() {
        let err = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap_err();
        assert!(matches!(err, MatError::Invalid(_)));
    }

    #[test]
    fn norms_identity() {
        let n = norms(&SymMatrix::identity(4)).unwrap();
        assert_eq!(n.operator, 1.0);
        assert_eq!(n.frobenius, 2.0);
        assert_eq!(n.nuclear, 4.0);
        assert_eq!(n.max_abs, 1.0);
        assert_eq!(n.max_col, 1.0);
        assert_eq!(n.trace, 4.0);
    }

    #[test]
    fn norms_exchange() {
        let n = norms(&sym(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((n.operator - 1.0).abs() < 1e-12);
        assert!((n.nuclear - 2.0).abs() < 1e-12);
        assert!((n.frobenius - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norms_two_by_two() {
        // eigenvalues 3 and 1
        let n = norms(&sym(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((n.operator - 3.0).abs() < 1e-12);
        assert!((n.nuclear - 4.0).abs() < 1e-12);
        assert!((n.frobenius - 10f64.sqrt()).abs() < 1e-12);
        assert!((n.max_col - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norms_reject_nonfinite() {
        let mut a = SymMatrix::identity(2);
        a.set_sym(0, 1, f64::NAN);
        assert!(matches!(norms(&a), Err(MatError::NonFinite)));
    }

    #[test]
    fn psd_project_examples() {
        let fixed = psd_project(&SymMatrix::identity(3)).unwrap();
        assert!(fixed.sub(&SymMatrix::identity(3)).unwrap().max_abs() < 1e-10);

        let d = psd_project(&SymMatrix::from_diag(&[1.0, -2.0])).unwrap();
        assert!(d.sub(&SymMatrix::from_diag(&[1.0, 0.0])).unwrap().max_abs() < 1e-12);

        let e = psd_project(&sym(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let want = sym(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(e.sub(&want).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn toeplitz_project_examples() {
        // Toeplitz input is a fixed point.
        let t = ToeplitzCol::new(vec![2.0, -1.0, 0.5]);
        let back = toeplitz_project(&t.expand()).unwrap();
        assert_eq!(back.col(), t.col());

        let a = sym(&[&[1.0, 2.0, 4.0], &[2.0, 1.0, 2.0], &[4.0, 2.0, 1.0]]);
        assert_eq!(toeplitz_project(&a).unwrap().col(), &[1.0, 2.0, 4.0]);

        let b = sym(&[&[1.0, 2.0, 3.0], &[2.0, 5.0, 2.0], &[3.0, 2.0, 9.0]]);
        assert_eq!(toeplitz_project(&b).unwrap().col(), &[5.0, 2.0, 3.0]);
    }

    #[test]
    fn toeplitz_project_herm_diag_real() {
        let h = HermMatrix::from_fn_lower(3, |i, j| {
            Complex64::new((i + j) as f64, if i == j { 0.0 } else { 1.0 })
        });
        let col = toeplitz_project_herm(&h).unwrap();
        assert_eq!(col[0].im, 0.0);
        assert_eq!(col.len(), 3);
    }

    #[test]
    fn hadamard_examples() {
        let a = sym(&[&[1.0, 2.0], &[2.0, 3.0]]);
        let ones = Mask::ones(2);
        assert_eq!(hadamard(&a, &ones).unwrap(), a);

        let diag = Mask::diagonal(2);
        assert_eq!(hadamard(&a, &diag).unwrap(), SymMatrix::from_diag(&[1.0, 3.0]));

        let half = Mask::new(sym(&[&[1.0, 0.5], &[0.5, 1.0]])).unwrap();
        let got = hadamard(&a, &half).unwrap();
        assert_eq!(got, sym(&[&[1.0, 1.0], &[1.0, 3.0]]));

        let m3 = Mask::ones(3);
        assert!(matches!(hadamard(&a, &m3), Err(MatError::DimMismatch { .. })));
    }

    #[test]
    fn mask_rejects_out_of_range() {
        assert!(Mask::new(sym(&[&[1.0, 1.5], &[1.5, 1.0]])).is_err());
        assert!(Mask::new(sym(&[&[1.0, -0.1], &[-0.1, 1.0]])).is_err());
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&SymMatrix::identity(3)).unwrap();
        assert!((l.get(0, 0) - 1.0).abs() < 1e-15);

        let l = cholesky(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(l.get(0, 0), 2.0);
        assert_eq!(l.get(1, 1), 3.0);

        let l = cholesky(&sym(&[&[4.0, 2.0], &[2.0, 5.0]])).unwrap();
        assert!((l.get(0, 0) - 2.0).abs() < 1e-15);
        assert!((l.get(1, 0) - 1.0).abs() < 1e-15);
        assert!((l.get(1, 1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cholesky_singular_and_indefinite() {
        // Singular PSD factors fine.
        let l = cholesky(&SymMatrix::from_diag(&[2.0, 0.0])).unwrap();
        assert_eq!(l.get(1, 1), 0.0);
        // Zero matrix factors to zero.
        let l = cholesky(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(l.frob(), 0.0);
        // Indefinite input fails even with ridge.
        assert!(matches!(cholesky(&sym(&[&[0.0, 1.0], &[1.0, 0.0]])), Err(MatError::NotPsd)));
        assert!(matches!(cholesky(&SymMatrix::from_diag(&[-1.0])), Err(MatError::NotPsd)));
    }

    #[test]
    fn herm_toeplitz_expand_round_trip() {
        let col = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.3, -0.4),
            Complex64::new(-0.1, 0.2),
        ];
        let h = herm_toeplitz_expand(&col);
        let back = toeplitz_project_herm(&h).unwrap();
        for (a, b) in back.iter().zip(col.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
