//! Eigendecomposition kernels: cyclic Jacobi for real symmetric matrices
//! and a 2M×2M real embedding for Hermitian ones.

use super::{CMat, HermMatrix, Mat, MatError, SymMatrix, TOL_PAIR};
use num_complex::Complex64;

/// Full spectral decomposition of a symmetric matrix. Eigenvalues are
/// sorted descending (ties broken by original index, for determinism) and
/// `vectors` holds the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

/// Spectral decomposition of a Hermitian matrix: real eigenvalues, complex
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigDecompHerm {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

/// Cyclic Jacobi eigendecomposition.
///
/// Each sweep walks the strict upper triangle and annihilates every
/// off-diagonal element with a plane rotation; the rotations accumulate
/// into the eigenvector matrix. Convergence is quadratic once the
/// off-diagonal mass is small, so a handful of sweeps suffices at the
/// dimensions used here. The sweep cap is 100·p².
pub fn eig_sym(a: &SymMatrix) -> Result<EigDecomp, MatError> {
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let p = a.dim();
    let mut m: Vec<f64> = (0..p * p).map(|k| a.get(k / p, k % p)).collect();
    let mut v = Mat::identity(p);

    let scale = a.frob();
    let stop = 1e-14 * scale;
    let max_sweeps = 100 * p * p;
    let mut sweeps = 0usize;

    loop {
        let mut off = 0.0;
        for i in 0..p {
            for j in (i + 1)..p {
                off += m[i * p + j] * m[i * p + j];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(MatError::NoConvergence { sweeps });
        }

        for i in 0..p {
            for j in (i + 1)..p {
                let apq = m[i * p + j];
                if apq == 0.0 {
                    continue;
                }
                let app = m[i * p + i];
                let aqq = m[j * p + j];
                let theta = (aqq - app) / (2.0 * apq);
                // tan of the rotation angle; the small-angle root of
                // t² + 2tθ − 1 = 0, with an overflow-safe branch.
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m[i * p + i] = app - t * apq;
                m[j * p + j] = aqq + t * apq;
                m[i * p + j] = 0.0;
                m[j * p + i] = 0.0;
                for k in 0..p {
                    if k == i || k == j {
                        continue;
                    }
                    let aik = m[i * p + k];
                    let ajk = m[j * p + k];
                    let nik = aik - s * (ajk + tau * aik);
                    let njk = ajk + s * (aik - tau * ajk);
                    m[i * p + k] = nik;
                    m[k * p + i] = nik;
                    m[j * p + k] = njk;
                    m[k * p + j] = njk;
                }
                for k in 0..p {
                    let vki = v.get(k, i);
                    let vkj = v.get(k, j);
                    v.set(k, i, vki - s * (vkj + tau * vki));
                    v.set(k, j, vkj + s * (vki - tau * vkj));
                }
            }
        }
        sweeps += 1;
    }

    let raw: Vec<f64> = (0..p).map(|i| m[i * p + i]).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| raw[y].partial_cmp(&raw[x]).unwrap().then(x.cmp(&y)));

    let values: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
    let vectors = Mat::from_fn(p, p, |i, j| v.get(i, order[j]));
    Ok(EigDecomp { values, vectors })
}

/// Hermitian eigendecomposition via the real embedding
/// E = [[Re A, −Im A], [Im A, Re A]].
///
/// Every eigenvalue of A appears twice in E; duplicates are merged by
/// clustering (tolerance `TOL_PAIR` relative) and one complex eigenvector
/// per pair is extracted from the cluster's real eigenvectors by a
/// Gram–Schmidt pass over the candidates z = x + iy.
pub fn eig_herm(a: &HermMatrix) -> Result<EigDecompHerm, MatError> {
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let m = a.dim();
    let embedded = SymMatrix::from_fn_lower(2 * m, |i, j| {
        if i < m {
            a.get(i, j).re
        } else if j < m {
            a.get(i - m, j).im
        } else {
            a.get(i - m, j - m).re
        }
    });
    let ed = eig_sym(&embedded)?;

    let lam_scale = 1.0 + ed.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let pair_tol = TOL_PAIR * lam_scale;

    // Cluster consecutive eigenvalues; each cluster must have even size.
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    for k in 1..=2 * m {
        if k == 2 * m || (ed.values[k - 1] - ed.values[k]).abs() > pair_tol {
            clusters.push((start, k));
            start = k;
        }
    }

    let mut values = Vec::with_capacity(m);
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    for &(lo, hi) in &clusters {
        let size = hi - lo;
        if size % 2 != 0 {
            return Err(MatError::Invalid("hermitian eigenvalue pairing failed"));
        }
        let keep = size / 2;
        for k in 0..keep {
            values.push(0.5 * (ed.values[lo + 2 * k] + ed.values[lo + 2 * k + 1]));
        }

        // Candidate complex vectors from the cluster's real eigenvectors.
        let mut candidates: Vec<Vec<Complex64>> = (lo..hi)
            .map(|col| {
                (0..m)
                    .map(|r| Complex64::new(ed.vectors.get(r, col), ed.vectors.get(m + r, col)))
                    .collect()
            })
            .collect();

        // Greedy Gram-Schmidt: the candidates form a tight frame of the
        // complex eigenspace, so the largest residual always stays well
        // away from zero until `keep` vectors are found.
        let mut kept: Vec<Vec<Complex64>> = Vec::with_capacity(keep);
        while kept.len() < keep {
            for z in candidates.iter_mut() {
                for u in &kept {
                    let inner: Complex64 =
                        u.iter().zip(z.iter()).map(|(ui, zi)| ui.conj() * zi).sum();
                    for (zi, ui) in z.iter_mut().zip(u.iter()) {
                        *zi -= inner * ui;
                    }
                }
            }
            let (best, best_norm) = candidates
                .iter()
                .enumerate()
                .map(|(idx, z)| (idx, z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()))
                .fold((0usize, -1.0f64), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best_norm < 1e-8 {
                return Err(MatError::Invalid("hermitian eigenvector extraction failed"));
            }
            let mut z = candidates.swap_remove(best);
            for v in z.iter_mut() {
                *v /= best_norm;
            }
            kept.push(z);
        }
        columns.extend(kept);
    }

    // One polishing pass keeps near-degenerate clusters orthonormal to
    // machine precision.
    for j in 0..columns.len() {
        let (before, rest) = columns.split_at_mut(j);
        let z = &mut rest[0];
        for u in before.iter() {
            let inner: Complex64 = u.iter().zip(z.iter()).map(|(ui, zi)| ui.conj() * zi).sum();
            for (zi, ui) in z.iter_mut().zip(u.iter()) {
                *zi -= inner * ui;
            }
        }
        let nrm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for v in z.iter_mut() {
            *v /= nrm;
        }
    }

    let vectors = CMat::from_fn(m, m, |i, j| columns[j][i]);
    Ok(EigDecompHerm { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(ed: &EigDecomp) -> SymMatrix {
        super::super::reconstruct_sym(ed.values.len(), &ed.values, &ed.vectors)
    }

    #[test]
    fn identity_spectrum() {
        let ed = eig_sym(&SymMatrix::identity(3)).unwrap();
        assert_eq!(ed.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_is_sorted_with_permuted_vectors() {
        let ed = eig_sym(&SymMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(ed.values, vec![3.0, 2.0, 1.0]);
        // permuted identity columns
        assert_eq!(ed.vectors.get(0, 0), 1.0);
        assert_eq!(ed.vectors.get(2, 1), 1.0);
        assert_eq!(ed.vectors.get(1, 2), 1.0);
    }

    #[test]
    fn exchange_matrix_analytic() {
        let a = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let ed = eig_sym(&a).unwrap();
        assert!((ed.values[0] - 1.0).abs() < 1e-14);
        assert!((ed.values[1] + 1.0).abs() < 1e-14);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = ed.vectors.col(0);
        assert!((v0[0].abs() - inv_sqrt2).abs() < 1e-12);
        assert!((v0[1].abs() - inv_sqrt2).abs() < 1e-12);
        assert_eq!(v0[0].signum(), v0[1].signum());
        let v1 = ed.vectors.col(1);
        assert_ne!(v1[0].signum(), v1[1].signum());
    }

    #[test]
    fn zero_matrix() {
        let ed = eig_sym(&SymMatrix::zeros(4)).unwrap();
        assert!(ed.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reconstruction_and_orthogonality_random() {
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for p in [2usize, 5, 9, 20] {
            let a = SymMatrix::from_fn_lower(p, |_, _| 4.0 * next());
            let ed = eig_sym(&a).unwrap();
            let err = reconstruct(&ed).sub(&a).unwrap().frob();
            assert!(err <= 1e-9 * a.frob().max(1e-300), "p={p} err={err}");
            // VᵀV = I
            for i in 0..p {
                for j in 0..p {
                    let dot: f64 =
                        (0..p).map(|k| ed.vectors.get(k, i) * ed.vectors.get(k, j)).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn nonfinite_rejected() {
        let mut a = SymMatrix::identity(2);
        a.set_sym(0, 1, f64::INFINITY);
        assert!(matches!(eig_sym(&a), Err(MatError::NonFinite)));
    }

    #[test]
    fn herm_identity() {
        let ed = eig_herm(&HermMatrix::identity(2)).unwrap();
        assert_eq!(ed.values, vec![1.0, 1.0]);
    }

    #[test]
    fn herm_analytic_two_by_two() {
        // [[2, i], [-i, 2]] has characteristic polynomial (2−λ)² − 1.
        let a = HermMatrix::from_fn_lower(2, |i, j| {
            if i == j {
                Complex64::new(2.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0)
            }
        });
        assert_eq!(a.get(0, 1), Complex64::new(0.0, 1.0));
        let ed = eig_herm(&a).unwrap();
        assert!((ed.values[0] - 3.0).abs() < 1e-12);
        assert!((ed.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herm_diagonal() {
        let ed = eig_herm(&HermMatrix::from_diag(&[5.0, 0.0])).unwrap();
        assert!((ed.values[0] - 5.0).abs() < 1e-12);
        assert!(ed.values[1].abs() < 1e-12);
    }

    #[test]
    fn herm_reconstruction_and_orthonormality_random() {
        let mut state = 0x13198a2e03707344u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for m in [2usize, 4, 7, 12] {
            let a = HermMatrix::from_fn_lower(m, |i, j| {
                if i == j {
                    Complex64::new(3.0 * next(), 0.0)
                } else {
                    Complex64::new(2.0 * next(), 2.0 * next())
                }
            });
            let ed = eig_herm(&a).unwrap();
            assert_eq!(ed.values.len(), m);
            // reconstruction
            let mut err = 0.0f64;
            for i in 0..m {
                for j in 0..m {
                    let mut s = Complex64::new(0.0, 0.0);
                    for k in 0..m {
                        s += ed.values[k] * ed.vectors.get(i, k) * ed.vectors.get(j, k).conj();
                    }
                    err += (s - a.get(i, j)).norm_sqr();
                }
            }
            assert!(err.sqrt() <= 1e-10 * a.frob(), "m={m} err={}", err.sqrt());
            // V^H V = I
            for i in 0..m {
                for j in 0..m {
                    let dot: Complex64 = (0..m)
                        .map(|k| ed.vectors.get(k, i).conj() * ed.vectors.get(k, j))
                        .sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - Complex64::new(want, 0.0)).norm() < 1e-10);
                }
            }
        }
    }
}
