//! Massive-MIMO channel covariance pipeline: ULA model, random angular
//! scattering functions, pilot simulation, MUSIC spike detection,
//! dictionary construction, weighted NNLS fitting and the two evaluation
//! metrics.
//!
//! All angular integrals use one composite midpoint rule on 16·M uniform
//! points over [−1, 1]. The channel is realized on the same grid, so the
//! true covariance, the dictionary atoms and the simulated samples stay
//! mutually consistent: the integrands are trigonometric polynomials of
//! degree below M, which the midpoint rule integrates exactly at this
//! resolution.

pub mod music;
pub mod nnls;

pub use music::{music_spikes, SpikeOrder, MUSIC_GAP_RHO, MUSIC_MAX_AUTO_ORDER};
pub use nnls::{nnls_solve, NnlsProblem, NnlsSolution};

use crate::matcore::{
    self as matcore, eig_herm, herm_toeplitz_expand, toeplitz_project_herm, HermMatrix, MatError,
};
use crate::synth::{ComplexBatch, RngStream};
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum MimoError {
    OutOfRange(String),
    InvalidParam(String),
    OrderTooLarge { order: usize, antennas: usize },
    ZeroMatrix,
    Mat(MatError),
}

impl fmt::Display for MimoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MimoError::OutOfRange(msg) => write!(f, "out of range: {msg}"),
            MimoError::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            MimoError::OrderTooLarge { order, antennas } => {
                write!(f, "model order {order} must stay below the antenna count {antennas}")
            }
            MimoError::ZeroMatrix => write!(f, "matrix is zero"),
            MimoError::Mat(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MimoError {}

impl From<MatError> for MimoError {
    fn from(e: MatError) -> Self {
        MimoError::Mat(e)
    }
}

/// Uniform linear array: M antennas at spacing d = spacing_ratio·λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaConfig {
    pub antennas: usize,
    pub spacing_ratio: f64,
}

impl UlaConfig {
    /// Half-wavelength spacing.
    pub fn new(antennas: usize) -> Result<Self, MimoError> {
        Self::with_spacing(antennas, 0.5)
    }

    pub fn with_spacing(antennas: usize, spacing_ratio: f64) -> Result<Self, MimoError> {
        if antennas < 2 {
            return Err(MimoError::InvalidParam("at least 2 antennas required".into()));
        }
        if !(spacing_ratio > 0.0) {
            return Err(MimoError::InvalidParam("spacing ratio must be positive".into()));
        }
        Ok(UlaConfig { antennas, spacing_ratio })
    }

    /// Midpoint quadrature cells used for every angular integral.
    pub fn quadrature_cells(&self) -> usize {
        16 * self.antennas
    }

    /// Default MUSIC search grid size.
    pub fn music_grid(&self) -> usize {
        32 * self.antennas
    }
}

/// Midpoint quadrature grid on [−1, 1].
#[derive(Debug, Clone)]
pub struct AngularGrid {
    pub points: Vec<f64>,
    pub cell: f64,
}

impl AngularGrid {
    pub fn midpoint(cells: usize) -> Self {
        assert!(cells >= 1);
        let h = 2.0 / cells as f64;
        let points = (0..cells).map(|j| -1.0 + h * (j as f64 + 0.5)).collect();
        AngularGrid { points, cell: h }
    }
}

/// Array response a(ξ) with unit-modulus entries e^{i·2π·spacing·m·ξ};
/// a(0) is the all-ones vector.
pub fn array_response(xi: f64, cfg: &UlaConfig) -> Result<Vec<Complex64>, MimoError> {
    if !(-1.0..=1.0).contains(&xi) {
        return Err(MimoError::OutOfRange(format!("angle {xi} outside [-1, 1]")));
    }
    let phase = 2.0 * std::f64::consts::PI * cfg.spacing_ratio * xi;
    Ok((0..cfg.antennas)
        .map(|m| {
            let (s, c) = (phase * m as f64).sin_cos();
            Complex64::new(c, s)
        })
        .collect())
}

/// One spike of the discrete ASF component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spike {
    pub location: f64,
    pub weight: f64,
}

/// Rectangular continuous component χ_[center−width/2, center+width/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectComp {
    pub center: f64,
    pub width: f64,
}

/// Gaussian continuous component: density of N(mean, std²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussComp {
    pub mean: f64,
    pub std: f64,
}

/// Parametric angular scattering function: spikes carrying total power
/// `alpha`, plus a continuous part (rectangles and Gaussians) normalized to
/// power 1 − alpha on the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AsfSpec {
    pub spikes: Vec<Spike>,
    pub rects: Vec<RectComp>,
    pub gaussians: Vec<GaussComp>,
    pub alpha: f64,
}

impl AsfSpec {
    pub fn validate(&self) -> Result<(), MimoError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(MimoError::InvalidParam("alpha must lie in [0,1]".into()));
        }
        let total: f64 = self.spikes.iter().map(|s| s.weight).sum();
        if (total - self.alpha).abs() > 1e-9 {
            return Err(MimoError::InvalidParam(format!(
                "spike weights sum to {total}, expected alpha = {}",
                self.alpha
            )));
        }
        for s in &self.spikes {
            if !(-1.0..=1.0).contains(&s.location) {
                return Err(MimoError::OutOfRange("spike location outside [-1,1]".into()));
            }
            if s.weight < 0.0 {
                return Err(MimoError::InvalidParam("spike weights must be nonnegative".into()));
            }
        }
        if self.alpha < 1.0 && self.rects.is_empty() && self.gaussians.is_empty() {
            return Err(MimoError::InvalidParam(
                "alpha below 1 requires a continuous component".into(),
            ));
        }
        for r in &self.rects {
            if !(r.width > 0.0) {
                return Err(MimoError::InvalidParam("rect width must be positive".into()));
            }
        }
        for g in &self.gaussians {
            if !(g.std > 0.0) {
                return Err(MimoError::InvalidParam("gaussian std must be positive".into()));
            }
        }
        Ok(())
    }

    /// Un-normalized continuous density Σ rect + Σ gaussian at ξ.
    pub fn continuous_raw(&self, xi: f64) -> f64 {
        let mut v = 0.0;
        for r in &self.rects {
            if (xi - r.center).abs() <= 0.5 * r.width {
                v += 1.0;
            }
        }
        for g in &self.gaussians {
            let z = (xi - g.mean) / g.std;
            v += (-0.5 * z * z).exp() / (g.std * (2.0 * std::f64::consts::PI).sqrt());
        }
        v
    }

    /// Per-cell masses of the continuous part on the grid, normalized to
    /// sum exactly to 1 − alpha (the grid plays the role of the normalizer
    /// Z, keeping everything downstream quadrature-consistent).
    pub fn continuous_masses(&self, grid: &AngularGrid) -> Result<Vec<f64>, MimoError> {
        let weight = 1.0 - self.alpha;
        if weight == 0.0 {
            return Ok(vec![0.0; grid.points.len()]);
        }
        let raw: Vec<f64> = grid.points.iter().map(|&xi| self.continuous_raw(xi)).collect();
        let z: f64 = raw.iter().sum();
        if z <= 0.0 {
            return Err(MimoError::InvalidParam(
                "continuous ASF component vanishes on the grid".into(),
            ));
        }
        Ok(raw.iter().map(|v| weight * v / z).collect())
    }
}

/// Randomization bounds for ASF drawing; defaults follow the empirical
/// recipe: 2 spikes uniform on [−1,1] at α = 0.5, one rectangle centered
/// in each half of the angular range with width in [0.1, 0.3], and 2
/// Gaussians with means in [−0.7, 0.7], stds in [0.03, 0.04].
#[derive(Debug, Clone, PartialEq)]
pub struct AsfRandomization {
    pub spike_count: usize,
    pub alpha: f64,
    pub spike_range: (f64, f64),
    pub rect_center_ranges: Vec<(f64, f64)>,
    pub rect_width_range: (f64, f64),
    pub gaussian_count: usize,
    pub gaussian_mean_range: (f64, f64),
    pub gaussian_std_range: (f64, f64),
}

impl Default for AsfRandomization {
    fn default() -> Self {
        AsfRandomization {
            spike_count: 2,
            alpha: 0.5,
            spike_range: (-1.0, 1.0),
            rect_center_ranges: vec![(-1.0, 0.0), (0.0, 1.0)],
            rect_width_range: (0.1, 0.3),
            gaussian_count: 2,
            gaussian_mean_range: (-0.7, 0.7),
            gaussian_std_range: (0.03, 0.04),
        }
    }
}

/// Draws an ASF with the default recipe.
pub fn random_asf(rng: &mut RngStream) -> AsfSpec {
    random_asf_with(&AsfRandomization::default(), rng)
}

pub fn random_asf_with(bounds: &AsfRandomization, rng: &mut RngStream) -> AsfSpec {
    let spike_w = if bounds.spike_count > 0 { bounds.alpha / bounds.spike_count as f64 } else { 0.0 };
    let spikes = (0..bounds.spike_count)
        .map(|_| Spike {
            location: rng.uniform_in(bounds.spike_range.0, bounds.spike_range.1),
            weight: spike_w,
        })
        .collect();
    let rects = bounds
        .rect_center_ranges
        .iter()
        .map(|&(lo, hi)| RectComp {
            center: rng.uniform_in(lo, hi),
            width: rng.uniform_in(bounds.rect_width_range.0, bounds.rect_width_range.1),
        })
        .collect();
    let gaussians = (0..bounds.gaussian_count)
        .map(|_| GaussComp {
            mean: rng.uniform_in(bounds.gaussian_mean_range.0, bounds.gaussian_mean_range.1),
            std: rng.uniform_in(bounds.gaussian_std_range.0, bounds.gaussian_std_range.1),
        })
        .collect();
    AsfSpec { spikes, rects, gaussians, alpha: bounds.alpha }
}

/// Channel covariance Σ_h = Σ_k c_k a(ξ_k)a(ξ_k)^H + ∫γ_c(ξ) a a^H dξ.
/// The result is Hermitian Toeplitz PSD by construction and its trace is
/// M·(total ASF mass).
pub fn true_covariance(asf: &AsfSpec, cfg: &UlaConfig) -> Result<HermMatrix, MimoError> {
    asf.validate()?;
    let grid = AngularGrid::midpoint(cfg.quadrature_cells());
    let masses = asf.continuous_masses(&grid)?;
    let m = cfg.antennas;
    let phase = 2.0 * std::f64::consts::PI * cfg.spacing_ratio;
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for d in 0..m {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in &asf.spikes {
            let (si, co) = (phase * d as f64 * s.location).sin_cos();
            acc += s.weight * Complex64::new(co, si);
        }
        for (mass, &xi) in masses.iter().zip(grid.points.iter()) {
            if *mass != 0.0 {
                let (si, co) = (phase * d as f64 * xi).sin_cos();
                acc += *mass * Complex64::new(co, si);
            }
        }
        col[d] = acc;
    }
    Ok(herm_toeplitz_expand(&col))
}

/// Pilot simulation output: the received samples and the noise level N0.
#[derive(Debug, Clone)]
pub struct PilotBatch {
    pub samples: ComplexBatch,
    pub noise_level: f64,
}

/// Simulates N received pilots y(s) = h(s) + z(s) with unit pilot symbols.
/// The channel is realized on the quadrature grid,
/// h = Σ_i √(mass_i)·g_i·a(ξ_i) over spike and grid atoms with i.i.d.
/// CN(0,1) gains, which reproduces Σ_h in expectation; z ~ CN(0, N0·I)
/// with N0 = (channel power per antenna)/10^(snr_db/10).
pub fn simulate_pilots(
    asf: &AsfSpec,
    cfg: &UlaConfig,
    n_pilots: usize,
    snr_db: f64,
    rng: &mut RngStream,
) -> Result<PilotBatch, MimoError> {
    if n_pilots == 0 {
        return Err(MimoError::InvalidParam("pilot count must be at least 1".into()));
    }
    asf.validate()?;
    let grid = AngularGrid::midpoint(cfg.quadrature_cells());
    let masses = asf.continuous_masses(&grid)?;
    let m = cfg.antennas;

    // (amplitude, response) atoms; zero-mass grid cells are dropped
    let mut atoms: Vec<(f64, Vec<Complex64>)> = Vec::new();
    for s in &asf.spikes {
        if s.weight > 0.0 {
            atoms.push((s.weight.sqrt(), array_response(s.location, cfg)?));
        }
    }
    for (mass, &xi) in masses.iter().zip(grid.points.iter()) {
        if *mass > 0.0 {
            atoms.push((mass.sqrt(), array_response(xi, cfg)?));
        }
    }

    let total_mass: f64 =
        asf.spikes.iter().map(|s| s.weight).sum::<f64>() + masses.iter().sum::<f64>();
    let n0 = total_mass / 10f64.powf(snr_db / 10.0);
    let noise_amp = (n0 / 2.0).sqrt();

    let mut data = vec![Complex64::new(0.0, 0.0); n_pilots * m];
    for k in 0..n_pilots {
        let row = &mut data[k * m..(k + 1) * m];
        for (amp, a) in &atoms {
            let g = rng.complex_normal() * *amp;
            for (ri, ai) in row.iter_mut().zip(a.iter()) {
                *ri += g * ai;
            }
        }
        for ri in row.iter_mut() {
            *ri += Complex64::new(noise_amp * rng.normal(), noise_amp * rng.normal());
        }
    }
    Ok(PilotBatch { samples: ComplexBatch::new(n_pilots, m, data), noise_level: n0 })
}

/// Sample covariance (1/N)·Σ_s y(s)y(s)^H of a complex batch.
pub fn sample_covariance(batch: &ComplexBatch) -> Result<HermMatrix, MimoError> {
    if batch.n() == 0 {
        return Err(MimoError::InvalidParam("batch is empty".into()));
    }
    let (n, m) = (batch.n(), batch.p());
    let inv = 1.0 / n as f64;
    Ok(HermMatrix::from_fn_lower(m, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            acc += batch.get(k, i) * batch.get(k, j).conj();
        }
        acc * inv
    }))
}

/// Denoised Toeplitz target: sample covariance minus N0·I, projected onto
/// Hermitian Toeplitz matrices by diagonal averaging; returns the first
/// column.
pub fn toeplitz_denoise(batch: &ComplexBatch, n0: f64) -> Result<Vec<Complex64>, MimoError> {
    if n0 < 0.0 {
        return Err(MimoError::InvalidParam("noise level must be nonnegative".into()));
    }
    let denoised = sample_covariance(batch)?.shift_diag(n0);
    Ok(toeplitz_project_herm(&denoised)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictKind {
    Dirac,
    Gaussian,
    Laplacian,
    Rect,
}

impl DictKind {
    pub fn name(&self) -> &'static str {
        match self {
            DictKind::Dirac => "dirac",
            DictKind::Gaussian => "gaussian",
            DictKind::Laplacian => "laplacian",
            DictKind::Rect => "rect",
        }
    }
}

/// Atom dictionary: G kernel atoms on an angular grid plus one Dirac atom
/// per detected spike. Each atom is stored as the first column of its
/// Hermitian Toeplitz matrix S_i, scaled so the leading entry is 1.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub kind: DictKind,
    pub grid_locs: Vec<f64>,
    pub spike_locs: Vec<f64>,
    /// Grid atoms first, then spike atoms.
    pub atoms: Vec<Vec<Complex64>>,
    pub antennas: usize,
}

impl Dictionary {
    pub fn total_atoms(&self) -> usize {
        self.atoms.len()
    }
}

/// Builds a dictionary of G atoms (Dirac steering vectors or unit-mass
/// kernel densities with width tied to the grid spacing 2/G) plus the
/// detected spike atoms.
pub fn build_dictionary(
    kind: DictKind,
    g_size: usize,
    cfg: &UlaConfig,
    spikes: &[f64],
) -> Result<Dictionary, MimoError> {
    if g_size == 0 {
        return Err(MimoError::InvalidParam("dictionary size must be at least 1".into()));
    }
    // cell midpoints avoid the aliased ±1 endpoints
    let step = 2.0 / g_size as f64;
    let grid_locs: Vec<f64> = (0..g_size).map(|i| -1.0 + step * (i as f64 + 0.5)).collect();
    let quad = AngularGrid::midpoint(cfg.quadrature_cells());
    let phase = 2.0 * std::f64::consts::PI * cfg.spacing_ratio;
    let m = cfg.antennas;

    let mut atoms = Vec::with_capacity(g_size + spikes.len());
    for &loc in &grid_locs {
        match kind {
            DictKind::Dirac => atoms.push(array_response(loc, cfg)?),
            _ => {
                let width = step;
                let density = |xi: f64| -> f64 {
                    match kind {
                        DictKind::Gaussian => {
                            let z = (xi - loc) / width;
                            (-0.5 * z * z).exp()
                        }
                        DictKind::Laplacian => (-(xi - loc).abs() / width).exp(),
                        DictKind::Rect => {
                            if (xi - loc).abs() <= 0.5 * width {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        DictKind::Dirac => unreachable!(),
                    }
                };
                let raw: Vec<f64> = quad.points.iter().map(|&xi| density(xi)).collect();
                let z: f64 = raw.iter().sum();
                if z <= 0.0 {
                    return Err(MimoError::InvalidParam(
                        "dictionary kernel vanishes on the quadrature grid".into(),
                    ));
                }
                let mut col = vec![Complex64::new(0.0, 0.0); m];
                for d in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (w, &xi) in raw.iter().zip(quad.points.iter()) {
                        if *w != 0.0 {
                            let (si, co) = (phase * d as f64 * xi).sin_cos();
                            acc += *w * Complex64::new(co, si);
                        }
                    }
                    col[d] = acc / z;
                }
                atoms.push(col);
            }
        }
    }
    for &xi in spikes {
        atoms.push(array_response(xi, cfg)?);
    }
    Ok(Dictionary { kind, grid_locs, spike_locs: spikes.to_vec(), atoms, antennas: m })
}

/// Assembles the weighted real-lifted NNLS problem
/// min_{u ≥ 0} ‖W(S̃u − σ̃)‖² from a dictionary and the Toeplitz target
/// column, with W = diag(√M, √(2(M−1)), …, √2).
pub fn build_nnls_problem(dict: &Dictionary, target: &[Complex64]) -> Result<NnlsProblem, MimoError> {
    let m = dict.antennas;
    if target.len() != m {
        return Err(MimoError::InvalidParam(format!(
            "target length {} must equal the antenna count {m}",
            target.len()
        )));
    }
    let vars = dict.total_atoms();
    let weights: Vec<f64> = (0..m)
        .map(|r| if r == 0 { (m as f64).sqrt() } else { (2.0 * (m - r) as f64).sqrt() })
        .collect();
    let mut a = crate::matcore::Mat::zeros(2 * m, vars);
    for (j, atom) in dict.atoms.iter().enumerate() {
        for r in 0..m {
            a.set(2 * r, j, weights[r] * atom[r].re);
            a.set(2 * r + 1, j, weights[r] * atom[r].im);
        }
    }
    let mut b = vec![0.0; 2 * m];
    for r in 0..m {
        b[2 * r] = weights[r] * target[r].re;
        b[2 * r + 1] = weights[r] * target[r].im;
    }
    Ok(NnlsProblem::new(a, b))
}

/// Σ_h(u) = Σ_i u_i S_i, expanded from the combined Toeplitz first column;
/// Hermitian PSD for u ≥ 0.
pub fn assemble_estimate(dict: &Dictionary, u: &[f64]) -> Result<HermMatrix, MimoError> {
    if u.len() != dict.total_atoms() {
        return Err(MimoError::InvalidParam(format!(
            "coefficient count {} must match the atom count {}",
            u.len(),
            dict.total_atoms()
        )));
    }
    let m = dict.antennas;
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for (coef, atom) in u.iter().zip(dict.atoms.iter()) {
        if *coef != 0.0 {
            for (c, a) in col.iter_mut().zip(atom.iter()) {
                *c += *coef * a;
            }
        }
    }
    Ok(herm_toeplitz_expand(&col))
}

/// Normalized Frobenius error ‖Σ_h − Σ̄‖_F/‖Σ_h‖_F.
pub fn metric_enf(truth: &HermMatrix, estimate: &HermMatrix) -> Result<f64, MimoError> {
    let denom = truth.frob();
    if denom == 0.0 {
        return Err(MimoError::ZeroMatrix);
    }
    Ok(truth.sub(estimate)?.frob() / denom)
}

/// Power efficiency E_PE(d) = 1 − ⟨Σ_h, Ū_d Ū_d^H⟩/⟨Σ_h, U_d U_d^H⟩ with
/// the d dominant eigenvectors of truth and estimate.
pub fn metric_epe(truth: &HermMatrix, estimate: &HermMatrix, d: usize) -> Result<f64, MimoError> {
    if estimate.dim() != truth.dim() {
        return Err(MimoError::Mat(MatError::DimMismatch {
            expected: truth.dim(),
            got: estimate.dim(),
        }));
    }
    let truth_eig = eig_herm(truth)?;
    let est_eig = eig_herm(estimate)?;
    metric_epe_from_eigs(truth, &truth_eig, &est_eig, d)
}

/// E_PE from precomputed eigendecompositions; the Monte-Carlo driver
/// caches the truth decomposition across realizations and d values.
pub fn metric_epe_from_eigs(
    truth: &HermMatrix,
    truth_eig: &matcore::EigDecompHerm,
    est_eig: &matcore::EigDecompHerm,
    d: usize,
) -> Result<f64, MimoError> {
    let m = truth.dim();
    if d < 1 || d > m {
        return Err(MimoError::InvalidParam(format!("d must lie in [1, {m}], got {d}")));
    }
    let mut captured = 0.0;
    let mut available = 0.0;
    for k in 0..d {
        captured += truth.quad_form(&est_eig.vectors.col(k));
        available += truth.quad_form(&truth_eig.vectors.col(k));
    }
    if available <= 0.0 {
        return Err(MimoError::ZeroMatrix);
    }
    Ok(1.0 - captured / available)
}

/// Pipeline configuration shared by the harness and the tests.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub ula: UlaConfig,
    pub dict_kind: DictKind,
    pub dict_size: usize,
    pub music_order: SpikeOrder,
    pub music_grid: usize,
}

impl PipelineConfig {
    /// Dirac dictionary with G = 2M and automatic MUSIC order.
    pub fn standard(ula: UlaConfig) -> Self {
        PipelineConfig {
            ula,
            dict_kind: DictKind::Dirac,
            dict_size: 2 * ula.antennas,
            music_order: SpikeOrder::Auto,
            music_grid: ula.music_grid(),
        }
    }
}

/// End-to-end pipeline outputs for one pilot batch.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub truth: HermMatrix,
    pub nnls_estimate: HermMatrix,
    /// Σ̂_y − N0·I, the plain denoised sample covariance baseline.
    pub sample_estimate: HermMatrix,
    pub spikes: Vec<f64>,
    pub noise_level: f64,
    pub nnls: NnlsSolution,
}

/// Runs truth construction, pilot simulation, MUSIC, dictionary, NNLS and
/// assembly for a single realization.
pub fn run_pipeline(
    asf: &AsfSpec,
    cfg: &PipelineConfig,
    n_pilots: usize,
    snr_db: f64,
    rng: &mut RngStream,
) -> Result<PipelineRun, MimoError> {
    let truth = true_covariance(asf, &cfg.ula)?;
    let pilots = simulate_pilots(asf, &cfg.ula, n_pilots, snr_db, rng)?;
    let spikes = music_spikes(&pilots.samples, &cfg.ula, cfg.music_order, cfg.music_grid)?;
    let dict = build_dictionary(cfg.dict_kind, cfg.dict_size, &cfg.ula, &spikes)?;
    let target = toeplitz_denoise(&pilots.samples, pilots.noise_level)?;
    let problem = build_nnls_problem(&dict, &target)?;
    let solution = nnls_solve(&problem)?;
    let nnls_estimate = assemble_estimate(&dict, &solution.u)?;
    let sample_estimate = sample_covariance(&pilots.samples)?.shift_diag(pilots.noise_level);
    Ok(PipelineRun {
        truth,
        nnls_estimate,
        sample_estimate,
        spikes,
        noise_level: pilots.noise_level,
        nnls: solution,
    })
}
