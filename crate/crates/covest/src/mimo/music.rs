//! MUSIC spike localization on the pilot sample covariance.

use super::{array_response, sample_covariance, MimoError, UlaConfig};
use crate::matcore::eig_herm;
use crate::synth::ComplexBatch;
use num_complex::Complex64;

/// Spectral-gap factor for automatic model-order selection.
pub const MUSIC_GAP_RHO: f64 = 3.0;
/// Hard cap on the automatic order (also capped at M/4).
pub const MUSIC_MAX_AUTO_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpikeOrder {
    Fixed(usize),
    /// Largest k with λ_k ≥ ρ·λ_{k+1}, capped at min(8, M/4); zero if the
    /// spectrum shows no gap, in which case the pipeline proceeds
    /// dictionary-only.
    Auto,
}

/// Estimates spike angles from the noisy pilots: eigendecompose the sample
/// covariance, form the noise subspace past the r̂ dominant eigenvectors,
/// and return the angles of the r̂ deepest strict local minima of
/// ‖E_noise^H a(ξ)‖² on a uniform grid (ties resolved toward smaller ξ).
/// The returned angles are sorted ascending.
pub fn music_spikes(
    samples: &ComplexBatch,
    cfg: &UlaConfig,
    order: SpikeOrder,
    grid_size: usize,
) -> Result<Vec<f64>, MimoError> {
    let m = cfg.antennas;
    if samples.p() != m {
        return Err(MimoError::InvalidParam(format!(
            "samples have {} antennas, config says {m}",
            samples.p()
        )));
    }
    if grid_size < 3 {
        return Err(MimoError::InvalidParam("music grid must have at least 3 points".into()));
    }
    let cov = sample_covariance(samples)?;
    let ed = eig_herm(&cov)?;

    let r_hat = match order {
        SpikeOrder::Fixed(r) => {
            if r >= m {
                return Err(MimoError::OrderTooLarge { order: r, antennas: m });
            }
            if samples.n() < r + 1 {
                return Err(MimoError::InvalidParam(format!(
                    "need at least r+1 = {} samples, got {}",
                    r + 1,
                    samples.n()
                )));
            }
            r
        }
        SpikeOrder::Auto => {
            let cap = MUSIC_MAX_AUTO_ORDER.min(m / 4).min(samples.n().saturating_sub(1));
            let mut best = 0usize;
            for k in 1..=cap {
                // indices are 1-based in the gap rule
                let lam_k = ed.values[k - 1];
                let lam_next = ed.values[k];
                if lam_k >= MUSIC_GAP_RHO * lam_next {
                    best = k;
                }
            }
            best
        }
    };
    if r_hat == 0 {
        return Ok(Vec::new());
    }

    // noise subspace: eigenvectors past the r̂ dominant ones
    let noise_cols: Vec<Vec<Complex64>> = (r_hat..m).map(|c| ed.vectors.col(c)).collect();

    // denominator of the pseudospectrum on the grid; peaks of P(ξ) are
    // minima of d(ξ)
    let step = 2.0 / (grid_size - 1) as f64;
    let mut denom = Vec::with_capacity(grid_size);
    for t in 0..grid_size {
        let xi = (-1.0 + step * t as f64).clamp(-1.0, 1.0);
        let a = array_response(xi, cfg)?;
        let mut val = 0.0;
        for col in &noise_cols {
            let mut inner = Complex64::new(0.0, 0.0);
            for (ci, ai) in col.iter().zip(a.iter()) {
                inner += ci.conj() * ai;
            }
            val += inner.norm_sqr();
        }
        denom.push(val);
    }

    // strict local minima, leftmost point of any plateau
    let mut minima: Vec<(f64, usize)> = Vec::new();
    for t in 0..grid_size {
        let left_ok = t == 0 || denom[t] < denom[t - 1];
        let right_ok = t + 1 == grid_size || denom[t] <= denom[t + 1];
        if left_ok && right_ok {
            minima.push((denom[t], t));
        }
    }
    minima.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut spikes: Vec<f64> =
        minima.iter().take(r_hat).map(|&(_, t)| -1.0 + step * t as f64).collect();
    spikes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(spikes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::{simulate_pilots, AsfSpec, Spike};
    use crate::synth::RngStream;

    #[test]
    fn zero_order_returns_empty() {
        let cfg = UlaConfig::new(4).unwrap();
        let mut rng = RngStream::new(1, 0);
        let asf = AsfSpec {
            spikes: vec![Spike { location: 0.5, weight: 1.0 }],
            rects: vec![],
            gaussians: vec![],
            alpha: 1.0,
        };
        let pilots = simulate_pilots(&asf, &cfg, 8, 10.0, &mut rng).unwrap();
        let spikes = music_spikes(&pilots.samples, &cfg, SpikeOrder::Fixed(0), 128).unwrap();
        assert!(spikes.is_empty());
    }

    #[test]
    fn order_too_large_rejected() {
        let cfg = UlaConfig::new(4).unwrap();
        let mut rng = RngStream::new(1, 1);
        let asf = AsfSpec {
            spikes: vec![Spike { location: 0.5, weight: 1.0 }],
            rects: vec![],
            gaussians: vec![],
            alpha: 1.0,
        };
        let pilots = simulate_pilots(&asf, &cfg, 8, 10.0, &mut rng).unwrap();
        assert!(matches!(
            music_spikes(&pilots.samples, &cfg, SpikeOrder::Fixed(4), 128),
            Err(MimoError::OrderTooLarge { .. })
        ));
    }

    #[test]
    fn noiseless_single_spike_hits_the_grid() {
        let cfg = UlaConfig::new(16).unwrap();
        let loc = 0.31;
        let asf = AsfSpec {
            spikes: vec![Spike { location: loc, weight: 1.0 }],
            rects: vec![],
            gaussians: vec![],
            alpha: 1.0,
        };
        let mut rng = RngStream::new(2, 0);
        let pilots = simulate_pilots(&asf, &cfg, 64, 280.0, &mut rng).unwrap();
        let grid = cfg.music_grid();
        let spikes = music_spikes(&pilots.samples, &cfg, SpikeOrder::Fixed(1), grid).unwrap();
        assert_eq!(spikes.len(), 1);
        let step = 2.0 / (grid - 1) as f64;
        assert!((spikes[0] - loc).abs() <= step, "found {} want {loc}", spikes[0]);
    }

    #[test]
    fn auto_order_finds_the_gap() {
        let cfg = UlaConfig::new(16).unwrap();
        let asf = AsfSpec {
            spikes: vec![
                Spike { location: -0.4, weight: 0.5 },
                Spike { location: 0.45, weight: 0.5 },
            ],
            rects: vec![],
            gaussians: vec![],
            alpha: 1.0,
        };
        let mut rng = RngStream::new(3, 0);
        let pilots = simulate_pilots(&asf, &cfg, 64, 20.0, &mut rng).unwrap();
        let spikes =
            music_spikes(&pilots.samples, &cfg, SpikeOrder::Auto, cfg.music_grid()).unwrap();
        assert_eq!(spikes.len(), 2, "spikes {spikes:?}");
        assert!((spikes[0] + 0.4).abs() < 0.05);
        assert!((spikes[1] - 0.45).abs() < 0.05);
    }
}
