//! One-bit sign quantization, dithered two-bit quantization, the matching
//! covariance estimators and the diagnostic quantities from their
//! non-asymptotic error bounds.
//!
//! The sign convention is sign(0) = +1 throughout, applied through one
//! shared kernel.

use crate::matcore::{self, hadamard, op_norm, Mask, MatError, SymMatrix};
use crate::synth::{RngStream, SampleBatch};
use std::fmt;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum QuantError {
    NonFinite,
    InvalidParam(String),
    EmptyBatch,
    /// Entries outside the admissible correlation range [−1, 1] or a
    /// non-unit diagonal.
    OutOfRange,
    Mat(MatError),
}

impl fmt::Display for QuantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantError::NonFinite => write!(f, "batch contains NaN or infinite entries"),
            QuantError::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            QuantError::EmptyBatch => write!(f, "bit batch is empty"),
            QuantError::OutOfRange => {
                write!(f, "entries must lie in [-1,1] with unit diagonal")
            }
            QuantError::Mat(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for QuantError {}

impl From<MatError> for QuantError {
    fn from(e: MatError) -> Self {
        QuantError::Mat(e)
    }
}

/// Shared sign kernel: +1 for x ≥ 0, −1 otherwise.
#[inline]
pub fn sign_bit(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// n×p matrix of ±1 bits.
#[derive(Debug, Clone, PartialEq)]
pub struct BitBatch {
    n: usize,
    p: usize,
    bits: Vec<i8>,
}

impl BitBatch {
    pub fn new(n: usize, p: usize, bits: Vec<i8>) -> Result<Self, QuantError> {
        if bits.len() != n * p {
            return Err(QuantError::InvalidParam("bit count must be n*p".into()));
        }
        if bits.iter().any(|b| *b != 1 && *b != -1) {
            return Err(QuantError::InvalidParam("bits must be exactly +1 or -1".into()));
        }
        Ok(BitBatch { n, p, bits })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> i8 {
        self.bits[k * self.p + i]
    }

    /// View as a real batch (for feeding bits back through real-valued
    /// operations).
    pub fn to_sample_batch(&self) -> SampleBatch {
        SampleBatch::new(self.n, self.p, self.bits.iter().map(|b| *b as f64).collect())
    }
}

/// Two dithered bit matrices produced from the same samples with
/// independent uniform dithers at level λ.
#[derive(Debug, Clone, PartialEq)]
pub struct DitheredBatch {
    pub bits_a: BitBatch,
    pub bits_b: BitBatch,
    pub dither_level: f64,
}

/// Entrywise one-bit quantization sign(X^k).
pub fn quantize_sign(batch: &SampleBatch) -> Result<BitBatch, QuantError> {
    if !batch.is_finite() {
        return Err(QuantError::NonFinite);
    }
    let bits = (0..batch.n() * batch.p())
        .map(|idx| sign_bit(batch.get(idx / batch.p(), idx % batch.p())))
        .collect();
    BitBatch::new(batch.n(), batch.p(), bits)
}

/// Two-bit dithered quantization: sign(X^k + τ^k) and sign(X^k + τ̄^k) with
/// independent dithers uniform in [−λ, λ]^p. The dithers are drawn and
/// discarded here; only the bits leave.
pub fn quantize_dithered(
    batch: &SampleBatch,
    lambda: f64,
    rng: &mut RngStream,
) -> Result<DitheredBatch, QuantError> {
    if !(lambda > 0.0) {
        return Err(QuantError::InvalidParam(format!(
            "dither level must be positive, got {lambda}"
        )));
    }
    if !batch.is_finite() {
        return Err(QuantError::NonFinite);
    }
    let (n, p) = (batch.n(), batch.p());
    let mut a = Vec::with_capacity(n * p);
    let mut b = Vec::with_capacity(n * p);
    for k in 0..n {
        for i in 0..p {
            let x = batch.get(k, i);
            a.push(sign_bit(x + rng.uniform_in(-lambda, lambda)));
            b.push(sign_bit(x + rng.uniform_in(-lambda, lambda)));
        }
    }
    Ok(DitheredBatch {
        bits_a: BitBatch::new(n, p, a)?,
        bits_b: BitBatch::new(n, p, b)?,
        dither_level: lambda,
    })
}

/// Sign estimator Σ̃_n = sin((π/2n)·Σ_k sign(X^k)sign(X^k)ᵀ). The diagonal
/// is exactly 1 and all entries lie in [−1, 1].
pub fn sign_estimator(bits: &BitBatch) -> Result<SymMatrix, QuantError> {
    if bits.n() == 0 {
        return Err(QuantError::EmptyBatch);
    }
    let (n, p) = (bits.n(), bits.p());
    Ok(SymMatrix::from_fn_lower(p, |i, j| {
        if i == j {
            return 1.0;
        }
        let mut acc: i64 = 0;
        for k in 0..n {
            acc += (bits.get(k, i) * bits.get(k, j)) as i64;
        }
        (std::f64::consts::FRAC_PI_2 * acc as f64 / n as f64).sin()
    }))
}

/// Arcsin law Γ = (2/π)·arcsin(Σ) for unit-diagonal Σ with entries in
/// [−1, 1]; sin((π/2)Γ) inverts it.
pub fn arcsin_law(sigma: &SymMatrix) -> Result<SymMatrix, QuantError> {
    check_correlation(sigma)?;
    Ok(sigma.map(|v| v.asin() / std::f64::consts::FRAC_PI_2))
}

fn check_correlation(sigma: &SymMatrix) -> Result<(), QuantError> {
    if !sigma.is_finite() {
        return Err(QuantError::NonFinite);
    }
    for i in 0..sigma.dim() {
        if sigma.get(i, i) != 1.0 {
            return Err(QuantError::OutOfRange);
        }
        for j in 0..i {
            if sigma.get(i, j).abs() > 1.0 {
                return Err(QuantError::OutOfRange);
            }
        }
    }
    Ok(())
}

/// Dithered estimator: symmetrized (λ²/n)·Σ_k sign(X^k+τ^k)sign(X^k+τ̄^k)ᵀ.
/// Not necessarily PSD; entries are bounded by λ².
pub fn dithered_estimator(d: &DitheredBatch) -> Result<SymMatrix, QuantError> {
    if d.bits_a.n() == 0 {
        return Err(QuantError::EmptyBatch);
    }
    if d.bits_a.n() != d.bits_b.n() || d.bits_a.p() != d.bits_b.p() {
        return Err(QuantError::InvalidParam("dithered bit matrices disagree in shape".into()));
    }
    let (n, p) = (d.bits_a.n(), d.bits_a.p());
    let scale = d.dither_level * d.dither_level / n as f64;
    // symmetrize ½(Σ̃' + Σ̃'ᵀ): entry (i,j) averages the two bit products
    Ok(SymMatrix::from_fn_lower(p, |i, j| {
        let mut ij: i64 = 0;
        let mut ji: i64 = 0;
        for k in 0..n {
            ij += (d.bits_a.get(k, i) * d.bits_b.get(k, j)) as i64;
            ji += (d.bits_a.get(k, j) * d.bits_b.get(k, i)) as i64;
        }
        0.5 * scale * (ij + ji) as f64
    }))
}

/// Dither level rule λ = √(c_λ·log(n)·‖Σ‖_∞). The max norm ‖Σ‖_∞ is an
/// explicit input: the rule presumes it known (experiments pass the ground
/// truth, deployments an upper bound).
pub fn dither_level_rule(sigma_inf: f64, n: usize, c_lambda: f64) -> Result<f64, QuantError> {
    if n < 2 {
        return Err(QuantError::InvalidParam("n must be at least 2".into()));
    }
    if !(c_lambda > 0.0) {
        return Err(QuantError::InvalidParam("c_lambda must be positive".into()));
    }
    if !(sigma_inf > 0.0) {
        return Err(QuantError::InvalidParam("max norm must be positive".into()));
    }
    Ok((c_lambda * (n as f64).ln() * sigma_inf).sqrt())
}

/// Diagnostics for the sign-estimator error bounds: A = cos(arcsin(Σ)),
/// the matrix standard deviation norm ‖σ(M⊙A)‖ and the ingredients of the
/// matching upper and lower bounds (absolute constants set to 1,
/// constant-free outputs).
#[derive(Debug, Clone)]
pub struct SignDiagnostics {
    /// cos(arcsin(Σ)) = sqrt(1 − Σ^{⊙2}).
    pub a: SymMatrix,
    /// ‖σ(M⊙A)‖ = ‖σ(M⊙A)²‖^{1/2}.
    pub sigma_ma_norm: f64,
    /// ‖M⊙A‖.
    pub ma_norm: f64,
    /// ‖M⊙Σ‖.
    pub msigma_norm: f64,
    /// ‖M⊙Σ⊙(1 − Γ^{⊙2})‖.
    pub lower_bias_norm: f64,
    /// ‖σ(M⊙Σ)²⊙Γ‖^{1/2}.
    pub lower_var_norm: f64,
}

impl SignDiagnostics {
    /// Right-hand side of the operator-norm upper bound with constant 1:
    /// ‖σ(M⊙A)‖·√((log p + t)/n) + max{‖M⊙A‖, ‖M⊙Σ‖}·(log p + t)/n.
    pub fn thm_upper(&self, t: f64, n: usize) -> f64 {
        let p = self.a.dim() as f64;
        let ratio = (p.ln() + t) / n as f64;
        self.sigma_ma_norm * ratio.sqrt() + self.ma_norm.max(self.msigma_norm) * ratio
    }

    /// Constant-free terms of the second-moment lower bound:
    /// (‖σ(M⊙A)‖/√n, ‖M⊙Σ⊙(1−Γ^{⊙2})‖/n, ‖σ(M⊙Σ)²⊙Γ‖^{1/2}/n).
    pub fn prop_lower_terms(&self, n: usize) -> (f64, f64, f64) {
        let nf = n as f64;
        (self.sigma_ma_norm / nf.sqrt(), self.lower_bias_norm / nf, self.lower_var_norm / nf)
    }
}

/// Matrix variance statistic σ(Z)² = Z²⊙Γ − (Z⊙Γ)² with matrix squares
/// (the Bernstein variance of the random matrix Z⊙(sign sign ᵀ)).
pub fn sigma_sq(z: &SymMatrix, gamma: &SymMatrix) -> Result<SymMatrix, QuantError> {
    let z2 = SymMatrix::symmetrized(&z.matmul_sym(z)?);
    let zg = z.hadamard_sym(gamma)?;
    let zg2 = SymMatrix::symmetrized(&zg.matmul_sym(&zg)?);
    Ok(z2.hadamard_sym(gamma)?.sub(&zg2)?)
}

pub fn sign_diagnostics(sigma: &SymMatrix, mask: &Mask) -> Result<SignDiagnostics, QuantError> {
    check_correlation(sigma)?;
    if mask.dim() != sigma.dim() {
        return Err(QuantError::Mat(MatError::DimMismatch {
            expected: sigma.dim(),
            got: mask.dim(),
        }));
    }
    let gamma = arcsin_law(sigma)?;
    // cos(arcsin(x)) = sqrt(1 − x²), exact at x = ±1
    let a = sigma.map(|v| ((1.0 - v) * (1.0 + v)).max(0.0).sqrt());
    let ma = hadamard(&a, mask)?;
    let msigma = hadamard(sigma, mask)?;

    let sigma_ma = sigma_sq(&ma, &gamma)?;
    let sigma_ma_norm = op_norm(&sigma_ma)?.max(0.0).sqrt();

    let gamma_had_sq = gamma.hadamard_sym(&gamma)?;
    let one_minus = gamma_had_sq.map(|v| 1.0 - v);
    let lower_bias_norm = op_norm(&msigma.hadamard_sym(&one_minus)?)?;

    let sigma_msigma = sigma_sq(&msigma, &gamma)?;
    let lower_var_norm = op_norm(&sigma_msigma.hadamard_sym(&gamma)?)?.max(0.0).sqrt();

    Ok(SignDiagnostics {
        sigma_ma_norm,
        ma_norm: op_norm(&ma)?,
        msigma_norm: op_norm(&msigma)?,
        lower_bias_norm,
        lower_var_norm,
        a,
    })
}

/// PSD projection of a quantized estimate, delegating to the kernel.
pub fn psd_projected(est: &SymMatrix) -> Result<SymMatrix, QuantError> {
    Ok(matcore::psd_project(est)?)
}

/// Writes a bit batch, header `bits n p`.
pub fn write_bits<W: Write>(w: &mut W, b: &BitBatch) -> Result<(), std::io::Error> {
    writeln!(w, "bits {} {}", b.n, b.p)?;
    for k in 0..b.n {
        let row: Vec<String> = (0..b.p).map(|i| format!("{}", b.get(k, i))).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Writes a dithered batch, header `dbits n p lambda`, then the two bit
/// blocks.
pub fn write_dbits<W: Write>(w: &mut W, d: &DitheredBatch) -> Result<(), std::io::Error> {
    writeln!(w, "dbits {} {} {}", d.bits_a.n(), d.bits_a.p(), d.dither_level)?;
    for block in [&d.bits_a, &d.bits_b] {
        for k in 0..block.n() {
            let row: Vec<String> = (0..block.p()).map(|i| format!("{}", block.get(k, i))).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

fn read_bit_block<R: BufRead>(
    r: &mut R,
    n: usize,
    p: usize,
) -> Result<BitBatch, matcore::io::IoError> {
    use matcore::io::IoError;
    let mut bits = Vec::with_capacity(n * p);
    let mut buf = String::new();
    while bits.len() < n * p {
        buf.clear();
        if r.read_line(&mut buf)? == 0 {
            return Err(IoError::Parse("unexpected end of bit data".into()));
        }
        for tok in buf.split_whitespace() {
            match tok {
                "1" | "+1" => bits.push(1i8),
                "-1" => bits.push(-1i8),
                other => return Err(IoError::Parse(format!("bit must be +1 or -1, got '{other}'"))),
            }
        }
    }
    if bits.len() != n * p {
        return Err(IoError::Parse("too many bits".into()));
    }
    BitBatch::new(n, p, bits).map_err(|e| IoError::Parse(e.to_string()))
}

pub fn read_bits<R: BufRead>(r: &mut R) -> Result<BitBatch, matcore::io::IoError> {
    use matcore::io::IoError;
    let mut line = String::new();
    r.read_line(&mut line)?;
    let mut it = line.split_whitespace();
    if it.next() != Some("bits") {
        return Err(IoError::Parse("expected header 'bits'".into()));
    }
    let n: usize =
        it.next().and_then(|t| t.parse().ok()).ok_or_else(|| IoError::Parse("bad n".into()))?;
    let p: usize =
        it.next().and_then(|t| t.parse().ok()).ok_or_else(|| IoError::Parse("bad p".into()))?;
    read_bit_block(r, n, p)
}

pub fn read_dbits<R: BufRead>(r: &mut R) -> Result<DitheredBatch, matcore::io::IoError> {
    use matcore::io::IoError;
    let mut line = String::new();
    r.read_line(&mut line)?;
    let mut it = line.split_whitespace();
    if it.next() != Some("dbits") {
        return Err(IoError::Parse("expected header 'dbits'".into()));
    }
    let n: usize =
        it.next().and_then(|t| t.parse().ok()).ok_or_else(|| IoError::Parse("bad n".into()))?;
    let p: usize =
        it.next().and_then(|t| t.parse().ok()).ok_or_else(|| IoError::Parse("bad p".into()))?;
    let lambda: f64 = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| IoError::Parse("bad lambda".into()))?;
    let bits_a = read_bit_block(r, n, p)?;
    let bits_b = read_bit_block(r, n, p)?;
    Ok(DitheredBatch { bits_a, bits_b, dither_level: lambda })
}
