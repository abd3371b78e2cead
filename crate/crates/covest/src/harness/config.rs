//! Experiment configuration: the TOML schema and its resolution into a
//! fully-defaulted run plan.

use super::HarnessError;
use crate::mimo::{DictKind, SpikeOrder};
use crate::synth::CovModel;
use serde::Deserialize;
use std::path::PathBuf;

pub const CLASSICAL_ESTIMATORS: &[&str] = &[
    "sample",
    "masked",
    "threshold",
    "toeplitz",
    "toeplitz-threshold",
    "lasso",
    "sign",
    "dithered",
];
pub const MIMO_ESTIMATORS: &[&str] = &["nnls", "sample"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fig3Mimo,
    Fig4Correlation,
    Fig5Dimension,
    Fig6LambdaSweep,
    Custom,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Fig3Mimo => "fig3_mimo",
            ExperimentKind::Fig4Correlation => "fig4_correlation",
            ExperimentKind::Fig5Dimension => "fig5_dimension",
            ExperimentKind::Fig6LambdaSweep => "fig6_lambda_sweep",
            ExperimentKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Sample counts n (pilot counts N for MIMO).
    pub n: Option<Vec<usize>>,
    /// Dimensions p (antenna counts M for MIMO).
    pub p: Option<Vec<usize>>,
    /// Dither levels as multiples of the truth max norm.
    pub lambda_rel: Option<Vec<f64>>,
    /// Number of equispaced dither levels over (0, 4·max norm] when
    /// `lambda_rel` is not given explicitly.
    pub lambda_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    /// const-corr | banded-toeplitz | sparse-random | low-rank-ridge | explicit
    pub model: String,
    /// Off-diagonal levels for const-corr; a grid axis when longer than 1.
    pub c: Option<Vec<f64>>,
    pub col: Option<Vec<f64>>,
    pub bandwidth: Option<usize>,
    pub q: Option<f64>,
    pub s: Option<f64>,
    pub bound: Option<f64>,
    pub rank: Option<usize>,
    pub ridge: Option<f64>,
    /// Matrix file (`sym p` text format) for the explicit model.
    pub path: Option<String>,
}

impl TruthConfig {
    /// Instantiates the covariance model for one grid point.
    pub fn model_at(&self, c: Option<f64>) -> Result<CovModel, HarnessError> {
        match self.model.as_str() {
            "const-corr" => {
                let c = c.ok_or_else(|| {
                    HarnessError::Config("truth.c is required for const-corr".into())
                })?;
                Ok(CovModel::ConstCorr { c })
            }
            "banded-toeplitz" => {
                let col = self
                    .col
                    .clone()
                    .ok_or_else(|| HarnessError::Config("truth.col is required".into()))?;
                let bandwidth = self.bandwidth.unwrap_or(col.len());
                Ok(CovModel::BandedToeplitz { col, bandwidth })
            }
            "sparse-random" => Ok(CovModel::SparseRandom {
                q: self.q.unwrap_or(0.0),
                s: self.s.unwrap_or(3.0),
                bound: self.bound.unwrap_or(1.0),
            }),
            "low-rank-ridge" => Ok(CovModel::LowRankPlusRidge {
                rank: self
                    .rank
                    .ok_or_else(|| HarnessError::Config("truth.rank is required".into()))?,
                ridge: self.ridge.unwrap_or(0.0),
            }),
            "explicit" => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("truth.path is required".into()))?;
                let file = std::fs::File::open(path)?;
                let mut reader = std::io::BufReader::new(file);
                let matrix = crate::matcore::io::read_sym(&mut reader)
                    .map_err(|e| HarnessError::Config(format!("truth.path: {e}")))?;
                Ok(CovModel::Explicit { matrix })
            }
            other => Err(HarnessError::Config(format!("unknown truth model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub id: String,
    /// Bickel threshold constant M'.
    pub mprime: Option<f64>,
    /// Fixed threshold level (overrides the Bickel rule).
    pub tau: Option<f64>,
    /// Toeplitz-threshold constants C, K, c and band fraction α.
    pub c_abs: Option<f64>,
    pub k: Option<f64>,
    pub c_exp: Option<f64>,
    pub alpha: Option<f64>,
    /// Fixed nuclear-norm or dither level.
    pub lambda: Option<f64>,
    /// Constant in the λ selection rule for `lasso`.
    pub lounici_c: Option<f64>,
    /// Constant in the dither-level rule λ² = c_λ·log(n)·max norm.
    pub c_lambda: Option<f64>,
    /// Band width for the `masked` estimator's band mask.
    pub width: Option<usize>,
    /// Mask kind for `masked`: ones | diag | band.
    pub mask: Option<String>,
    /// Post-project the estimate onto the PSD cone.
    pub psd: Option<bool>,
}

impl EstimatorSpec {
    pub fn named(id: &str) -> Self {
        EstimatorSpec { id: id.to_string(), ..Default::default() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// operator | frobenius | enf | epe
    pub kinds: Option<Vec<String>>,
    pub epe_dims: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MimoSection {
    pub asf_count: Option<usize>,
    pub snr_db: Option<f64>,
    /// dirac | gaussian | laplacian | rect
    pub dict: Option<String>,
    /// Defaults to 2·M.
    pub dict_size: Option<usize>,
    /// "auto" or a fixed integer order.
    pub music_order: Option<String>,
    /// Defaults to 32·M.
    pub music_grid: Option<usize>,
    pub spacing_ratio: Option<f64>,
    /// Spike power fraction of the random ASFs.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub trials: Option<usize>,
    pub output: Option<String>,
    /// When false (the default) the wall-time column is written as 0 so
    /// reruns produce byte-identical CSVs.
    pub record_timing: Option<bool>,
    pub grid: Option<GridConfig>,
    pub truth: Option<TruthConfig>,
    pub estimators: Option<Vec<EstimatorSpec>>,
    pub metrics: Option<MetricsConfig>,
    pub mimo: Option<MimoSection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Operator,
    Frobenius,
    Enf,
    Epe,
}

impl MetricKind {
    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        match name {
            "operator" => Ok(MetricKind::Operator),
            "frobenius" => Ok(MetricKind::Frobenius),
            "enf" => Ok(MetricKind::Enf),
            "epe" => Ok(MetricKind::Epe),
            other => Err(HarnessError::Config(format!("unknown metric '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Operator => "operator",
            MetricKind::Frobenius => "frobenius",
            MetricKind::Enf => "enf",
            MetricKind::Epe => "epe",
        }
    }
}

/// One cell of the experiment grid. `index` keys the point's own random
/// streams; `sample_key` ignores the dither-level axis so estimators that
/// do not depend on λ see identical draws across a λ sweep (their curves
/// come out flat, as reference lines).
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub p: usize,
    pub n: usize,
    pub c: Option<f64>,
    pub lambda_rel: Option<f64>,
    pub index: usize,
    pub sample_key: usize,
}

impl GridPoint {
    pub fn label(&self) -> String {
        let mut parts = vec![format!("p={}", self.p), format!("n={}", self.n)];
        if let Some(c) = self.c {
            parts.push(format!("c={c}"));
        }
        if let Some(l) = self.lambda_rel {
            parts.push(format!("lambda_rel={l}"));
        }
        parts.join(";")
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedMimo {
    pub asf_count: usize,
    pub snr_db: f64,
    pub dict_kind: DictKind,
    pub dict_size: Option<usize>,
    pub music_order: SpikeOrder,
    pub music_grid: Option<usize>,
    pub spacing_ratio: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct ResolvedPlan {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    pub record_timing: bool,
    pub output: Option<PathBuf>,
    pub points: Vec<GridPoint>,
    pub estimators: Vec<EstimatorSpec>,
    pub metrics: Vec<MetricKind>,
    pub epe_dims: Vec<usize>,
    pub truth: Option<TruthConfig>,
    pub mimo: Option<ResolvedMimo>,
    /// Run-level facts for the sidecar metadata file.
    pub notes: Vec<(String, String)>,
}

fn default_truth(model: &str, c: Vec<f64>) -> TruthConfig {
    TruthConfig {
        model: model.to_string(),
        c: Some(c),
        col: None,
        bandwidth: None,
        q: None,
        s: None,
        bound: None,
        rank: None,
        ridge: None,
        path: None,
    }
}

/// Fills in per-experiment defaults, validates every referenced id and
/// produces the executable plan.
pub fn resolve(cfg: &ExperimentConfig) -> Result<ResolvedPlan, HarnessError> {
    let grid = cfg.grid.clone().unwrap_or_default();
    let metrics_cfg = cfg.metrics.clone().unwrap_or_default();
    let mut notes: Vec<(String, String)> = Vec::new();

    let is_mimo = matches!(cfg.experiment, ExperimentKind::Fig3Mimo)
        || (matches!(cfg.experiment, ExperimentKind::Custom) && cfg.mimo.is_some());

    // grid axes
    let (p_values, n_values) = match cfg.experiment {
        ExperimentKind::Fig3Mimo => {
            let p = grid.p.clone().unwrap_or_else(|| vec![32]);
            let n = grid.n.clone().unwrap_or_else(|| p.iter().map(|m| m / 2).collect());
            (p, n)
        }
        ExperimentKind::Fig4Correlation => (
            grid.p.clone().unwrap_or_else(|| vec![20]),
            grid.n.clone().unwrap_or_else(|| vec![10, 50, 100, 200, 300]),
        ),
        ExperimentKind::Fig5Dimension => (
            grid.p.clone().unwrap_or_else(|| vec![5, 10, 15, 20, 25, 30]),
            grid.n.clone().unwrap_or_else(|| vec![200]),
        ),
        ExperimentKind::Fig6LambdaSweep => (
            grid.p.clone().unwrap_or_else(|| vec![5]),
            grid.n.clone().unwrap_or_else(|| vec![200]),
        ),
        ExperimentKind::Custom => {
            let p = grid
                .p
                .clone()
                .ok_or_else(|| HarnessError::Config("grid.p is required for custom runs".into()))?;
            let n = grid
                .n
                .clone()
                .ok_or_else(|| HarnessError::Config("grid.n is required for custom runs".into()))?;
            (p, n)
        }
    };
    if p_values.is_empty() || n_values.is_empty() {
        return Err(HarnessError::Config("grid axes must be nonempty".into()));
    }
    if p_values.contains(&0) || n_values.contains(&0) {
        return Err(HarnessError::Config("grid values must be positive".into()));
    }

    // dither-level axis (fig6 and custom sweeps)
    let lambda_axis: Vec<Option<f64>> = if let Some(levels) = &grid.lambda_rel {
        if levels.is_empty() {
            return Err(HarnessError::Config("grid.lambda_rel must be nonempty".into()));
        }
        if levels.iter().any(|l| !(*l > 0.0)) {
            return Err(HarnessError::Config("grid.lambda_rel entries must be positive".into()));
        }
        levels.iter().map(|l| Some(*l)).collect()
    } else if matches!(cfg.experiment, ExperimentKind::Fig6LambdaSweep) {
        let points = grid.lambda_points.unwrap_or(64);
        if points == 0 {
            return Err(HarnessError::Config("grid.lambda_points must be positive".into()));
        }
        notes.push(("lambda_grid".into(), format!("{points} equispaced points over (0,4]")));
        (1..=points).map(|j| Some(4.0 * j as f64 / points as f64)).collect()
    } else {
        vec![None]
    };

    // truth (classical experiments only)
    let truth = if is_mimo {
        None
    } else {
        let t = match cfg.experiment {
            ExperimentKind::Fig4Correlation => cfg
                .truth
                .clone()
                .unwrap_or_else(|| default_truth("const-corr", vec![0.5, 0.9, 0.99])),
            ExperimentKind::Fig5Dimension | ExperimentKind::Fig6LambdaSweep => {
                // ground truth under-determined for these sweeps; the
                // const-corr 0.5 default is recorded below
                let t = cfg
                    .truth
                    .clone()
                    .unwrap_or_else(|| default_truth("const-corr", vec![0.5]));
                if cfg.truth.is_none() {
                    notes.push(("truth_default".into(), "const-corr c=0.5".into()));
                }
                t
            }
            _ => cfg.truth.clone().ok_or_else(|| {
                HarnessError::Config("truth section is required for custom runs".into())
            })?,
        };
        // validate eagerly at a representative point
        let c0 = t.c.as_ref().and_then(|v| v.first().copied());
        t.model_at(c0).map(|_| ()).map(|_| Some(t.clone()))?
    };

    let c_axis: Vec<Option<f64>> = match &truth {
        Some(t) if t.model == "const-corr" => {
            let cs = t
                .c
                .clone()
                .ok_or_else(|| HarnessError::Config("truth.c is required for const-corr".into()))?;
            if cs.is_empty() {
                return Err(HarnessError::Config("truth.c must be nonempty".into()));
            }
            cs.into_iter().map(Some).collect()
        }
        _ => vec![None],
    };

    // flatten the grid
    let mut points = Vec::new();
    let mut sample_key = 0usize;
    for &p in &p_values {
        for &n in &n_values {
            for &c in &c_axis {
                for &lam in &lambda_axis {
                    points.push(GridPoint {
                        p,
                        n,
                        c,
                        lambda_rel: lam,
                        index: points.len(),
                        sample_key,
                    });
                }
                sample_key += 1;
            }
        }
    }

    // estimators
    let estimators = match &cfg.estimators {
        Some(list) if !list.is_empty() => list.clone(),
        _ => match cfg.experiment {
            ExperimentKind::Fig3Mimo => {
                vec![EstimatorSpec::named("nnls"), EstimatorSpec::named("sample")]
            }
            ExperimentKind::Fig4Correlation => {
                vec![EstimatorSpec::named("sample"), EstimatorSpec::named("sign")]
            }
            ExperimentKind::Fig5Dimension => vec![
                EstimatorSpec::named("sample"),
                EstimatorSpec::named("sign"),
                EstimatorSpec::named("dithered"),
            ],
            ExperimentKind::Fig6LambdaSweep => vec![
                EstimatorSpec::named("dithered"),
                EstimatorSpec::named("sample"),
                EstimatorSpec::named("sign"),
            ],
            ExperimentKind::Custom => {
                return Err(HarnessError::Config(
                    "estimators list is required for custom runs".into(),
                ))
            }
        },
    };
    let known: &[&str] = if is_mimo { MIMO_ESTIMATORS } else { CLASSICAL_ESTIMATORS };
    for est in &estimators {
        if !known.contains(&est.id.as_str()) {
            return Err(HarnessError::Config(format!(
                "unknown estimator id '{}' (known: {})",
                est.id,
                known.join(", ")
            )));
        }
    }

    // metrics
    let metric_names = metrics_cfg.kinds.clone().unwrap_or_else(|| {
        if is_mimo {
            vec!["enf".into(), "epe".into()]
        } else {
            vec!["operator".into()]
        }
    });
    if metric_names.is_empty() {
        return Err(HarnessError::Config("metrics.kinds must be nonempty".into()));
    }
    let metrics: Vec<MetricKind> =
        metric_names.iter().map(|m| MetricKind::parse(m)).collect::<Result<_, _>>()?;
    if !is_mimo && metrics.iter().any(|m| matches!(m, MetricKind::Enf | MetricKind::Epe)) {
        return Err(HarnessError::Config(
            "enf/epe metrics apply to the mimo pipeline only".into(),
        ));
    }
    let epe_dims = match &metrics_cfg.epe_dims {
        Some(d) if !d.is_empty() => d.clone(),
        _ => {
            // 1, 2, 4, ... up to M/2
            let m_min = *p_values.iter().min().unwrap();
            let mut d = vec![1usize];
            while d.last().unwrap() * 2 <= (m_min / 2).max(1) {
                d.push(d.last().unwrap() * 2);
            }
            d
        }
    };
    if is_mimo {
        let m_min = *p_values.iter().min().unwrap();
        if epe_dims.iter().any(|d| *d == 0 || *d > m_min) {
            return Err(HarnessError::Config(format!(
                "metrics.epe_dims must lie in [1, {m_min}]"
            )));
        }
    }

    // mimo section
    let mimo = if is_mimo {
        let section = cfg.mimo.clone().unwrap_or_default();
        let dict_kind = match section.dict.as_deref().unwrap_or("dirac") {
            "dirac" => DictKind::Dirac,
            "gaussian" => DictKind::Gaussian,
            "laplacian" => DictKind::Laplacian,
            "rect" => DictKind::Rect,
            other => {
                return Err(HarnessError::Config(format!("unknown dictionary kind '{other}'")))
            }
        };
        let music_order = match section.music_order.as_deref().unwrap_or("auto") {
            "auto" => SpikeOrder::Auto,
            text => SpikeOrder::Fixed(text.parse::<usize>().map_err(|_| {
                HarnessError::Config(format!("mimo.music_order must be 'auto' or an integer, got '{text}'"))
            })?),
        };
        let alpha = section.alpha.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&alpha) {
            return Err(HarnessError::Config("mimo.alpha must lie in [0,1]".into()));
        }
        let asf_count = section.asf_count.unwrap_or(20);
        if asf_count == 0 {
            return Err(HarnessError::Config("mimo.asf_count must be positive".into()));
        }
        notes.push((
            "desk_scale".into(),
            format!(
                "antennas={:?} asf_count={asf_count} realizations={}",
                p_values,
                cfg.trials.unwrap_or(50)
            ),
        ));
        notes.push(("music_gap_rho".into(), format!("{}", crate::mimo::MUSIC_GAP_RHO)));
        Some(ResolvedMimo {
            asf_count,
            snr_db: section.snr_db.unwrap_or(10.0),
            dict_kind,
            dict_size: section.dict_size,
            music_order,
            music_grid: section.music_grid,
            spacing_ratio: section.spacing_ratio.unwrap_or(0.5),
            alpha,
        })
    } else {
        if cfg.mimo.is_some() {
            return Err(HarnessError::Config(
                "mimo section only applies to fig3_mimo or custom mimo runs".into(),
            ));
        }
        None
    };

    let trials = cfg.trials.unwrap_or(if is_mimo { 50 } else { 100 });
    if trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    notes.push(("trials".into(), format!("{trials}")));
    notes.push(("seed".into(), format!("{}", cfg.seed)));

    Ok(ResolvedPlan {
        kind: cfg.experiment,
        seed: cfg.seed,
        trials,
        record_timing: cfg.record_timing.unwrap_or(false),
        output: cfg.output.as_ref().map(PathBuf::from),
        points,
        estimators,
        metrics,
        epe_dims,
        truth,
        mimo,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_hard_errors() {
        let text = "experiment = \"fig4_correlation\"\nseed = 1\nbogus = 3\n";
        assert!(matches!(ExperimentConfig::from_toml(text), Err(HarnessError::Config(_))));
    }

    #[test]
    fn fig4_defaults() {
        let cfg = ExperimentConfig::from_toml("experiment = \"fig4_correlation\"\nseed = 7\n").unwrap();
        let plan = resolve(&cfg).unwrap();
        assert_eq!(plan.trials, 100);
        // 5 n-values × 3 c-values
        assert_eq!(plan.points.len(), 15);
        assert_eq!(plan.estimators.len(), 2);
        assert_eq!(plan.metrics, vec![MetricKind::Operator]);
        assert!(plan.points.iter().all(|pt| pt.p == 20));
    }

    #[test]
    fn fig6_gets_64_lambda_points_sharing_draw_keys() {
        let cfg = ExperimentConfig::from_toml("experiment = \"fig6_lambda_sweep\"\nseed = 7\n").unwrap();
        let plan = resolve(&cfg).unwrap();
        assert_eq!(plan.points.len(), 64);
        let key0 = plan.points[0].sample_key;
        assert!(plan.points.iter().all(|pt| pt.sample_key == key0));
        assert!((plan.points.last().unwrap().lambda_rel.unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_estimator_rejected() {
        let text = "experiment = \"fig4_correlation\"\nseed = 1\n[[estimators]]\nid = \"warp\"\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert!(matches!(resolve(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn custom_requires_sections() {
        let cfg = ExperimentConfig::from_toml("experiment = \"custom\"\nseed = 1\n").unwrap();
        assert!(matches!(resolve(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn fig3_defaults() {
        let cfg = ExperimentConfig::from_toml("experiment = \"fig3_mimo\"\nseed = 2\n").unwrap();
        let plan = resolve(&cfg).unwrap();
        assert_eq!(plan.points.len(), 1);
        assert_eq!(plan.points[0].p, 32);
        assert_eq!(plan.points[0].n, 16);
        assert!(plan.mimo.is_some());
        assert_eq!(plan.trials, 50);
        assert!(plan.metrics.contains(&MetricKind::Enf));
        assert_eq!(plan.epe_dims, vec![1, 2, 4, 8, 16]);
    }
}
