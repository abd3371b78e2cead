//! Experiment execution: deterministic trial streams, the estimator
//! registry, trial-level parallelism and incremental CSV persistence.

use super::config::{
    resolve, EstimatorSpec, ExperimentConfig, GridPoint, MetricKind, ResolvedMimo, ResolvedPlan,
};
use super::{metadata_string, worker_count, HarnessError, ResultRow};
use crate::estimators::{
    lasso_lowrank_cov, lounici_lambda, masked_cov, sample_cov, thresholded_cov,
    toeplitz_cov, toeplitz_thresholded_cov, ThresholdRule,
};
use crate::matcore::{eig_herm, op_norm, EigDecompHerm, HermMatrix, Mask, SymMatrix};
use crate::mimo::{
    self, random_asf_with, run_pipeline, AsfRandomization, AsfSpec, PipelineConfig, UlaConfig,
};
use crate::quantized::{
    dither_level_rule, dithered_estimator, psd_projected, quantize_dithered, quantize_sign,
    sign_estimator,
};
use crate::synth::{sample_gaussian, RngStream, SampleBatch};
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

const PURPOSE_TRUTH: u64 = 0;
const PURPOSE_SAMPLES: u64 = 1;
const PURPOSE_DITHER: u64 = 2;
const PURPOSE_ASF: u64 = 3;
const PURPOSE_CHANNEL: u64 = 4;

/// One stream per (grid key, trial, purpose).
fn stream(seed: u64, key: usize, trial: usize, purpose: u64) -> RngStream {
    RngStream::new(seed, ((key as u64) << 40) | ((trial as u64) << 8) | purpose)
}

/// Loads, resolves and runs a configuration.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    run_plan(&resolve(cfg)?)
}

/// Runs a resolved plan. Rows are returned and, when an output path is
/// set, appended to the CSV grid point by grid point (partial files stay
/// valid prefixes); a `<output>.meta.toml` sidecar records the run-level
/// facts.
pub fn run_plan(plan: &ResolvedPlan) -> Result<Vec<ResultRow>, HarnessError> {
    let mut sink = match &plan.output {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            let file = std::fs::File::create(path)?;
            let mut w = csv::WriterBuilder::new().from_writer(file);
            w.write_record([
                "experiment",
                "trial",
                "grid",
                "estimator",
                "metric",
                "value",
                "wall_ms",
                "metadata",
            ])?;
            Some(w)
        }
        None => None,
    };

    let mut all_rows = Vec::new();
    for point in &plan.points {
        let rows = match &plan.mimo {
            Some(mimo) => run_mimo_point(plan, mimo, point)?,
            None => run_classical_point(plan, point)?,
        };
        if let Some(w) = sink.as_mut() {
            for row in &rows {
                w.write_record([
                    row.experiment.as_str(),
                    &row.trial.to_string(),
                    row.grid.as_str(),
                    row.estimator.as_str(),
                    row.metric.as_str(),
                    &row.value.to_string(),
                    &row.wall_ms.to_string(),
                    row.metadata.as_str(),
                ])?;
            }
            w.flush()?;
        }
        all_rows.extend(rows);
    }

    if let Some(path) = &plan.output {
        write_sidecar(plan, path)?;
    }
    Ok(all_rows)
}

fn write_sidecar(plan: &ResolvedPlan, output: &std::path::Path) -> Result<(), HarnessError> {
    let mut path = output.as_os_str().to_owned();
    path.push(".meta.toml");
    let mut f = std::fs::File::create(std::path::PathBuf::from(path))?;
    writeln!(f, "experiment = \"{}\"", plan.kind.name())?;
    writeln!(f, "seed = {}", plan.seed)?;
    writeln!(f, "trials = {}", plan.trials)?;
    writeln!(f, "grid_points = {}", plan.points.len())?;
    let ids: Vec<String> = plan.estimators.iter().map(|e| format!("\"{}\"", e.id)).collect();
    writeln!(f, "estimators = [{}]", ids.join(", "))?;
    for (k, v) in &plan.notes {
        writeln!(f, "{k} = \"{v}\"")?;
    }
    Ok(())
}

/// Runs `count` independent jobs on the worker pool, preserving job order
/// in the output.
fn parallel_trials<F>(count: usize, job: F) -> Vec<Vec<ResultRow>>
where
    F: Fn(usize) -> Vec<ResultRow> + Sync,
{
    let workers = worker_count().min(count.max(1));
    if workers <= 1 {
        return (0..count).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Vec<ResultRow>>>> = Mutex::new(vec![None; count]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= count {
                    break;
                }
                let rows = job(idx);
                results.lock().unwrap()[idx] = Some(rows);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("job completed")).collect()
}

// ---------------------------------------------------------------------
// classical experiments
// ---------------------------------------------------------------------

fn run_classical_point(
    plan: &ResolvedPlan,
    point: &GridPoint,
) -> Result<Vec<ResultRow>, HarnessError> {
    let truth_cfg =
        plan.truth.as_ref().ok_or_else(|| HarnessError::Config("missing truth".into()))?;
    let model = truth_cfg.model_at(point.c)?;

    let per_trial = parallel_trials(plan.trials, |trial| {
        classical_trial(plan, point, trial, &model).unwrap_or_else(|msg| {
            vec![failure_row(plan, point, trial as u64, "trial", &msg)]
        })
    });
    Ok(per_trial.into_iter().flatten().collect())
}

fn classical_trial(
    plan: &ResolvedPlan,
    point: &GridPoint,
    trial: usize,
    model: &crate::synth::CovModel,
) -> Result<Vec<ResultRow>, String> {
    let mut truth_rng = stream(plan.seed, point.sample_key, trial, PURPOSE_TRUTH);
    let truth =
        crate::synth::realize(model, point.p, &mut truth_rng).map_err(|e| e.to_string())?;
    let mut sample_rng = stream(plan.seed, point.sample_key, trial, PURPOSE_SAMPLES);
    let batch =
        sample_gaussian(&truth, point.n, &mut sample_rng).map_err(|e| e.to_string())?;
    let sigma_inf = truth.max_abs();

    let mut rows = Vec::new();
    for est in &plan.estimators {
        let started = Instant::now();
        match apply_estimator(plan, est, point, trial, &batch, sigma_inf) {
            Ok((estimate, meta)) => {
                let wall = if plan.record_timing {
                    started.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                let diff = match estimate.sub(&truth) {
                    Ok(d) => d,
                    Err(e) => {
                        rows.push(failure_row(plan, point, trial as u64, &est.id, &e.to_string()));
                        continue;
                    }
                };
                for metric in &plan.metrics {
                    let value = match metric {
                        MetricKind::Operator => match op_norm(&diff) {
                            Ok(v) => v,
                            Err(e) => {
                                rows.push(failure_row(
                                    plan,
                                    point,
                                    trial as u64,
                                    &est.id,
                                    &e.to_string(),
                                ));
                                continue;
                            }
                        },
                        MetricKind::Frobenius => diff.frob(),
                        _ => unreachable!("mimo metrics rejected at resolve time"),
                    };
                    if !value.is_finite() {
                        rows.push(failure_row(
                            plan,
                            point,
                            trial as u64,
                            &est.id,
                            "non-finite metric value",
                        ));
                        continue;
                    }
                    rows.push(ResultRow {
                        experiment: plan.kind.name().into(),
                        trial: trial as u64,
                        grid: point.label(),
                        estimator: est.id.clone(),
                        metric: metric.name().into(),
                        value,
                        wall_ms: wall,
                        metadata: meta.clone(),
                    });
                }
            }
            Err(msg) => rows.push(failure_row(plan, point, trial as u64, &est.id, &msg)),
        }
    }
    Ok(rows)
}

fn failure_row(
    plan: &ResolvedPlan,
    point: &GridPoint,
    trial: u64,
    estimator: &str,
    msg: &str,
) -> ResultRow {
    ResultRow {
        experiment: plan.kind.name().into(),
        trial,
        grid: point.label(),
        estimator: estimator.into(),
        metric: "failure".into(),
        value: 1.0,
        wall_ms: 0.0,
        metadata: metadata_string(&[("err", msg.to_string())]),
    }
}

fn mask_from_spec(spec: &EstimatorSpec, p: usize) -> Result<(Mask, String), String> {
    let kind = spec.mask.as_deref().unwrap_or("ones");
    match kind {
        "ones" => Ok((Mask::ones(p), "ones".into())),
        "diag" => Ok((Mask::diagonal(p), "diag".into())),
        "band" => {
            let width = spec.width.unwrap_or(1);
            let mask = Mask::banded(p, width).map_err(|e| e.to_string())?;
            Ok((mask, format!("band:{width}")))
        }
        other => Err(format!("unknown mask kind '{other}'")),
    }
}

/// Applies one estimator to the trial batch, returning the estimate plus
/// the metadata string holding all resolved tuning constants.
fn apply_estimator(
    plan: &ResolvedPlan,
    spec: &EstimatorSpec,
    point: &GridPoint,
    trial: usize,
    batch: &SampleBatch,
    sigma_inf: f64,
) -> Result<(SymMatrix, String), String> {
    let n = batch.n();
    let p = batch.p();
    match spec.id.as_str() {
        "sample" => Ok((sample_cov(batch).map_err(|e| e.to_string())?, String::new())),
        "masked" => {
            let (mask, name) = mask_from_spec(spec, p)?;
            let est = masked_cov(batch, &mask).map_err(|e| e.to_string())?;
            Ok((est, metadata_string(&[("mask", name)])))
        }
        "threshold" => {
            let (rule, mut meta) = match spec.tau {
                Some(tau) => (ThresholdRule::Fixed { tau }, vec![]),
                None => {
                    let mprime = spec.mprime.unwrap_or(1.0);
                    (
                        ThresholdRule::Bickel { mprime },
                        vec![("mprime", format!("{mprime}"))],
                    )
                }
            };
            let tau = rule.resolve(n, p).map_err(|e| e.to_string())?;
            meta.push(("tau", format!("{tau}")));
            let est = thresholded_cov(batch, &rule).map_err(|e| e.to_string())?;
            Ok((est, metadata_string(&meta)))
        }
        "toeplitz" => {
            let est = toeplitz_cov(batch).map_err(|e| e.to_string())?;
            Ok((est.expand(), String::new()))
        }
        "toeplitz-threshold" => {
            let c_abs = spec.c_abs.unwrap_or(1.0);
            let k = spec.k.unwrap_or(1.0);
            let c_exp = spec.c_exp.unwrap_or(2.0);
            let alpha = spec.alpha.unwrap_or(0.5);
            let rule = ThresholdRule::Toeplitz { c_abs, k, c_exp, alpha };
            let tau = rule.resolve(n, p).map_err(|e| e.to_string())?;
            let width = ((alpha * p as f64).floor() as usize).max(1).min(p);
            let est = toeplitz_thresholded_cov(batch, &rule).map_err(|e| e.to_string())?;
            let meta = metadata_string(&[
                ("tau", format!("{tau}")),
                ("c_abs", format!("{c_abs}")),
                ("k", format!("{k}")),
                ("c_exp", format!("{c_exp}")),
                ("alpha", format!("{alpha}")),
                ("width", format!("{width}")),
            ]);
            Ok((est, meta))
        }
        "lasso" => {
            let (lambda, mut meta) = match spec.lambda {
                Some(l) => (l, vec![]),
                None => {
                    let c = spec.lounici_c.unwrap_or(1.0);
                    let l = lounici_lambda(batch, c).map_err(|e| e.to_string())?;
                    (l, vec![("lounici_c", format!("{c}"))])
                }
            };
            meta.push(("lambda", format!("{lambda}")));
            let est = lasso_lowrank_cov(batch, lambda).map_err(|e| e.to_string())?;
            Ok((est, metadata_string(&meta)))
        }
        "sign" => {
            let bits = quantize_sign(batch).map_err(|e| e.to_string())?;
            let mut est = sign_estimator(&bits).map_err(|e| e.to_string())?;
            let psd = spec.psd.unwrap_or(false);
            if psd {
                est = psd_projected(&est).map_err(|e| e.to_string())?;
            }
            Ok((est, metadata_string(&[("psd", format!("{psd}"))])))
        }
        "dithered" => {
            let mut meta: Vec<(&str, String)> = Vec::new();
            let lambda = if let Some(rel) = point.lambda_rel {
                meta.push(("lambda_rel", format!("{rel}")));
                rel * sigma_inf
            } else if let Some(l) = spec.lambda {
                l
            } else {
                let c_lambda = spec.c_lambda.unwrap_or(1.0);
                meta.push(("c_lambda", format!("{c_lambda}")));
                dither_level_rule(sigma_inf, n, c_lambda).map_err(|e| e.to_string())?
            };
            meta.push(("lambda", format!("{lambda}")));
            meta.push(("sigma_inf", format!("{sigma_inf}")));
            let mut rng = stream(plan.seed, point.index, trial, PURPOSE_DITHER);
            let dith = quantize_dithered(batch, lambda, &mut rng).map_err(|e| e.to_string())?;
            let mut est = dithered_estimator(&dith).map_err(|e| e.to_string())?;
            let psd = spec.psd.unwrap_or(false);
            if psd {
                est = psd_projected(&est).map_err(|e| e.to_string())?;
            }
            meta.push(("psd", format!("{psd}")));
            Ok((est, metadata_string(&meta)))
        }
        other => Err(format!("unknown estimator id '{other}'")),
    }
}

// ---------------------------------------------------------------------
// mimo experiments
// ---------------------------------------------------------------------

fn run_mimo_point(
    plan: &ResolvedPlan,
    mimo: &ResolvedMimo,
    point: &GridPoint,
) -> Result<Vec<ResultRow>, HarnessError> {
    let m = point.p;
    let ula = UlaConfig::with_spacing(m, mimo.spacing_ratio)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let pcfg = PipelineConfig {
        ula,
        dict_kind: mimo.dict_kind,
        dict_size: mimo.dict_size.unwrap_or(2 * m),
        music_order: mimo.music_order,
        music_grid: mimo.music_grid.unwrap_or_else(|| ula.music_grid()),
    };
    let bounds = AsfRandomization { alpha: mimo.alpha, ..AsfRandomization::default() };

    // ASFs, their covariances and eigendecompositions are shared across
    // all realizations of the point.
    let mut asfs: Vec<(AsfSpec, HermMatrix, EigDecompHerm)> = Vec::with_capacity(mimo.asf_count);
    for a in 0..mimo.asf_count {
        let mut rng = stream(plan.seed, point.index, a, PURPOSE_ASF);
        let asf = random_asf_with(&bounds, &mut rng);
        let truth = mimo::true_covariance(&asf, &ula)
            .map_err(|e| HarnessError::Run(format!("true covariance failed: {e}")))?;
        let eig = eig_herm(&truth).map_err(|e| HarnessError::Run(e.to_string()))?;
        asfs.push((asf, truth, eig));
    }

    let total = mimo.asf_count * plan.trials;
    let per_trial = parallel_trials(total, |t| {
        let asf_idx = t / plan.trials;
        mimo_trial(plan, mimo, point, &pcfg, &asfs[asf_idx], asf_idx, t)
            .unwrap_or_else(|msg| vec![failure_row(plan, point, t as u64, "pipeline", &msg)])
    });
    Ok(per_trial.into_iter().flatten().collect())
}

fn mimo_trial(
    plan: &ResolvedPlan,
    mimo: &ResolvedMimo,
    point: &GridPoint,
    pcfg: &PipelineConfig,
    asf: &(AsfSpec, HermMatrix, EigDecompHerm),
    asf_idx: usize,
    trial: usize,
) -> Result<Vec<ResultRow>, String> {
    let started = Instant::now();
    let mut rng = stream(plan.seed, point.index, trial, PURPOSE_CHANNEL);
    let run = run_pipeline(&asf.0, pcfg, point.n, mimo.snr_db, &mut rng)
        .map_err(|e| e.to_string())?;
    let wall =
        if plan.record_timing { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let truth = &asf.1;
    let truth_eig = &asf.2;

    let base_meta: Vec<(&str, String)> = vec![
        ("asf", format!("{asf_idx}")),
        ("snr_db", format!("{}", mimo.snr_db)),
        ("dict", pcfg.dict_kind.name().into()),
        ("dict_size", format!("{}", pcfg.dict_size)),
        ("rho", format!("{}", mimo::MUSIC_GAP_RHO)),
        ("r_hat", format!("{}", run.spikes.len())),
        ("n0", format!("{}", run.noise_level)),
        ("nnls_iters", format!("{}", run.nnls.iterations)),
        ("nnls_converged", format!("{}", run.nnls.converged)),
    ];
    let meta = metadata_string(&base_meta);

    let mut rows = Vec::new();
    for est in &plan.estimators {
        let estimate = match est.id.as_str() {
            "nnls" => &run.nnls_estimate,
            "sample" => &run.sample_estimate,
            other => return Err(format!("unknown mimo estimator '{other}'")),
        };
        let est_eig = eig_herm(estimate).map_err(|e| e.to_string())?;
        for metric in &plan.metrics {
            match metric {
                MetricKind::Enf => {
                    let value = mimo::metric_enf(truth, estimate).map_err(|e| e.to_string())?;
                    rows.push(ResultRow {
                        experiment: plan.kind.name().into(),
                        trial: trial as u64,
                        grid: point.label(),
                        estimator: est.id.clone(),
                        metric: "enf".into(),
                        value,
                        wall_ms: wall,
                        metadata: meta.clone(),
                    });
                }
                MetricKind::Epe => {
                    for &d in &plan.epe_dims {
                        let value = mimo::metric_epe_from_eigs(truth, truth_eig, &est_eig, d)
                            .map_err(|e| e.to_string())?;
                        rows.push(ResultRow {
                            experiment: plan.kind.name().into(),
                            trial: trial as u64,
                            grid: point.label(),
                            estimator: est.id.clone(),
                            metric: format!("epe_{d}"),
                            value,
                            wall_ms: wall,
                            metadata: meta.clone(),
                        });
                    }
                }
                _ => {
                    return Err("operator/frobenius metrics apply to classical runs only".into())
                }
            }
        }
    }
    Ok(rows)
}
