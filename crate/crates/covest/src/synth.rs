//! Seeded generation of ground-truth covariance matrices and i.i.d. sample
//! batches (real and circularly-symmetric complex Gaussian).
//!
//! Randomness goes through [`RngStream`]: a ChaCha12 generator keyed by
//! (seed, stream_id). Distinct stream ids select independent cipher
//! streams, so Monte-Carlo trials can run in parallel while staying
//! bit-for-bit reproducible. Normal variates come from Box-Muller over the
//! stream's 53-bit uniforms.

use crate::matcore::{self, eig_sym, HermMatrix, MatError, SymMatrix};
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::fmt;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    InvalidParam(String),
    NotPsd,
    Mat(MatError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            SynthError::NotPsd => write!(f, "covariance matrix is not positive semi-definite"),
            SynthError::Mat(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SynthError {}

impl From<MatError> for SynthError {
    fn from(e: MatError) -> Self {
        match e {
            MatError::NotPsd => SynthError::NotPsd,
            other => SynthError::Mat(other),
        }
    }
}

/// Reproducible random stream: same (seed, stream_id) yields the identical
/// variate sequence.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng, spare_normal: None }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller; the second variate of each pair is
    /// cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite.
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Circularly-symmetric CN(0,1): real and imaginary parts N(0, 1/2).
    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(
            self.normal() * std::f64::consts::FRAC_1_SQRT_2,
            self.normal() * std::f64::consts::FRAC_1_SQRT_2,
        )
    }
}

/// n×p batch of real sample vectors, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl SampleBatch {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * p, "data length must be n*p");
        SampleBatch { n, p, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let p = if n == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(n * p);
        for r in rows {
            assert_eq!(r.len(), p, "ragged rows");
            data.extend_from_slice(r);
        }
        SampleBatch { n, p, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[k * self.p + i]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.p..(k + 1) * self.p]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// n×p batch of complex sample vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBatch {
    n: usize,
    p: usize,
    data: Vec<Complex64>,
}

impl ComplexBatch {
    pub fn new(n: usize, p: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n * p, "data length must be n*p");
        ComplexBatch { n, p, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> Complex64 {
        self.data[k * self.p + i]
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.p..(k + 1) * self.p]
    }
}

/// Parametric ground-truth covariance models.
#[derive(Debug, Clone, PartialEq)]
pub enum CovModel {
    /// (1−c)·I + c·ones: unit diagonal, constant off-diagonal c.
    ConstCorr { c: f64 },
    /// Symmetric Toeplitz with first column `col` (length = bandwidth),
    /// zero beyond the band.
    BandedToeplitz { col: Vec<f64>, bandwidth: usize },
    /// Random row-sparse matrix with unit-ish diagonal, shifted to PSD.
    /// `s` is the per-row entry budget counting the diagonal, so each row
    /// gets at most s−1 off-diagonal entries with magnitudes in
    /// [0.75, 1]·bound before symmetrization.
    SparseRandom { q: f64, s: f64, bound: f64 },
    /// G·Gᵀ/rank + ridge·I with a standard normal p×rank factor G.
    LowRankPlusRidge { rank: usize, ridge: f64 },
    Explicit { matrix: SymMatrix },
}

/// Draws a PSD ground-truth matrix from the model.
pub fn realize(model: &CovModel, p: usize, rng: &mut RngStream) -> Result<SymMatrix, SynthError> {
    if p == 0 {
        return Err(SynthError::InvalidParam("dimension must be at least 1".into()));
    }
    match model {
        CovModel::ConstCorr { c } => {
            let lower = if p >= 2 { -1.0 / (p as f64 - 1.0) } else { -1.0 };
            if !(*c > lower && *c < 1.0) {
                return Err(SynthError::InvalidParam(format!(
                    "const-corr c must lie in ({lower}, 1), got {c}"
                )));
            }
            Ok(SymMatrix::from_fn_lower(p, |i, j| if i == j { 1.0 } else { *c }))
        }
        CovModel::BandedToeplitz { col, bandwidth } => {
            if *bandwidth == 0 || *bandwidth > p {
                return Err(SynthError::InvalidParam(format!(
                    "bandwidth must lie in [1, {p}], got {bandwidth}"
                )));
            }
            if col.len() != *bandwidth {
                return Err(SynthError::InvalidParam(format!(
                    "column length {} must equal bandwidth {bandwidth}",
                    col.len()
                )));
            }
            let sigma = SymMatrix::from_fn_lower(p, |i, j| {
                let d = i - j;
                if d < col.len() {
                    col[d]
                } else {
                    0.0
                }
            });
            let ed = eig_sym(&sigma)?;
            let min = ed.values.last().copied().unwrap_or(0.0);
            let max = ed.values.first().copied().unwrap_or(0.0);
            if min < -1e-10 * max.abs().max(1.0) {
                return Err(SynthError::InvalidParam(
                    "banded toeplitz column is not positive semi-definite".into(),
                ));
            }
            Ok(sigma)
        }
        CovModel::SparseRandom { q, s, bound } => {
            if !(0.0..1.0).contains(q) {
                return Err(SynthError::InvalidParam(format!("q must lie in [0,1), got {q}")));
            }
            if *s <= 0.0 || *bound <= 0.0 {
                return Err(SynthError::InvalidParam("s and bound must be positive".into()));
            }
            realize_sparse(p, *s, *bound, rng)
        }
        CovModel::LowRankPlusRidge { rank, ridge } => {
            if *rank == 0 || *rank > p {
                return Err(SynthError::InvalidParam(format!(
                    "rank must lie in [1, {p}], got {rank}"
                )));
            }
            if *ridge < 0.0 {
                return Err(SynthError::InvalidParam("ridge must be nonnegative".into()));
            }
            let g: Vec<f64> = (0..p * rank).map(|_| rng.normal()).collect();
            Ok(SymMatrix::from_fn_lower(p, |i, j| {
                let mut acc = 0.0;
                for k in 0..*rank {
                    acc += g[i * rank + k] * g[j * rank + k];
                }
                acc / *rank as f64 + if i == j { *ridge } else { 0.0 }
            }))
        }
        CovModel::Explicit { matrix } => {
            if matrix.dim() != p {
                return Err(SynthError::InvalidParam(format!(
                    "explicit matrix has dimension {}, expected {p}",
                    matrix.dim()
                )));
            }
            let ed = eig_sym(matrix)?;
            let min = ed.values.last().copied().unwrap_or(0.0);
            let max = ed.values.first().copied().unwrap_or(0.0);
            if min < -1e-8 * max.abs().max(1.0) {
                return Err(SynthError::NotPsd);
            }
            Ok(matrix.clone())
        }
    }
}

fn realize_sparse(p: usize, s: f64, bound: f64, rng: &mut RngStream) -> Result<SymMatrix, SynthError> {
    let per_row = (s.floor() as usize).saturating_sub(1);
    let mut off = vec![0.0f64; p * p];
    for i in 0..p {
        if p < 2 {
            break;
        }
        for _ in 0..per_row {
            let mut j = rng.uniform_in(0.0, (p - 1) as f64) as usize;
            if j >= i {
                j += 1;
            }
            let mag = rng.uniform_in(0.75, 1.0) * bound;
            let val = if rng.uniform() < 0.5 { -mag } else { mag };
            // union-symmetrize: a later draw on the mirrored slot overwrites
            if off[i * p + j] == 0.0 && off[j * p + i] == 0.0 {
                off[i * p + j] = val;
                off[j * p + i] = val;
            }
        }
    }
    let base = SymMatrix::from_fn_lower(p, |i, j| if i == j { 1.0 } else { off[i * p + j] });
    let ed = eig_sym(&base)?;
    let min = ed.values.last().copied().unwrap_or(0.0);
    if min < 0.0 {
        // diagonal shift to enforce PSD
        Ok(SymMatrix::from_fn_lower(p, |i, j| {
            if i == j {
                1.0 + min.abs()
            } else {
                base.get(i, j)
            }
        }))
    } else {
        Ok(base)
    }
}

/// Draws n i.i.d. rows from N(0, Sigma) via the Cholesky factor.
pub fn sample_gaussian(
    sigma: &SymMatrix,
    n: usize,
    rng: &mut RngStream,
) -> Result<SampleBatch, SynthError> {
    if n == 0 {
        return Err(SynthError::InvalidParam("sample count must be at least 1".into()));
    }
    let p = sigma.dim();
    let l = matcore::cholesky(sigma)?;
    let mut data = vec![0.0f64; n * p];
    let mut z = vec![0.0f64; p];
    for k in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.normal();
        }
        for i in 0..p {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += l.get(i, j) * z[j];
            }
            data[k * p + i] = acc;
        }
    }
    Ok(SampleBatch { n, p, data })
}

/// Draws n i.i.d. circularly-symmetric CN(0, Sigma) rows.
pub fn sample_complex_gaussian(
    sigma: &HermMatrix,
    n: usize,
    rng: &mut RngStream,
) -> Result<ComplexBatch, SynthError> {
    if n == 0 {
        return Err(SynthError::InvalidParam("sample count must be at least 1".into()));
    }
    let p = sigma.dim();
    let l = matcore::cholesky_herm(sigma)?;
    let mut data = vec![Complex64::new(0.0, 0.0); n * p];
    let mut g = vec![Complex64::new(0.0, 0.0); p];
    for k in 0..n {
        for gi in g.iter_mut() {
            *gi = rng.complex_normal();
        }
        for i in 0..p {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=i {
                acc += l.get(i, j) * g[j];
            }
            data[k * p + i] = acc;
        }
    }
    Ok(ComplexBatch { n, p, data })
}

/// Dumps a batch in the shared text format, header `batch n p`.
pub fn write_batch<W: Write>(w: &mut W, b: &SampleBatch) -> Result<(), std::io::Error> {
    writeln!(w, "batch {} {}", b.n, b.p)?;
    for k in 0..b.n {
        let row: Vec<String> = b.row(k).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_batch<R: BufRead>(r: &mut R) -> Result<SampleBatch, matcore::io::IoError> {
    use matcore::io::IoError;
    let mut line = String::new();
    r.read_line(&mut line)?;
    let mut it = line.split_whitespace();
    match it.next() {
        Some("batch") => {}
        other => return Err(IoError::Parse(format!("expected header 'batch', got {other:?}"))),
    }
    let n: usize = it
        .next()
        .ok_or_else(|| IoError::Parse("missing n".into()))?
        .parse()
        .map_err(|e| IoError::Parse(format!("bad n: {e}")))?;
    let p: usize = it
        .next()
        .ok_or_else(|| IoError::Parse("missing p".into()))?
        .parse()
        .map_err(|e| IoError::Parse(format!("bad p: {e}")))?;
    let mut data = Vec::with_capacity(n * p);
    let mut buf = String::new();
    while data.len() < n * p {
        buf.clear();
        if r.read_line(&mut buf)? == 0 {
            return Err(IoError::Parse("unexpected end of batch data".into()));
        }
        for tok in buf.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|e| IoError::Parse(format!("bad value '{tok}': {e}")))?,
            );
        }
    }
    if data.len() != n * p {
        return Err(IoError::Parse("too many values in batch data".into()));
    }
    Ok(SampleBatch::new(n, p, data))
}
