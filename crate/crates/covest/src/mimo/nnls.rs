//! Non-negative least squares by the Lawson-Hanson active-set method.

use super::MimoError;
use crate::matcore::Mat;

/// Real least-squares problem min_{u ≥ 0} ‖A u − b‖₂.
#[derive(Debug, Clone)]
pub struct NnlsProblem {
    a: Mat,
    b: Vec<f64>,
}

impl NnlsProblem {
    pub fn new(a: Mat, b: Vec<f64>) -> Self {
        assert_eq!(a.rows(), b.len(), "row count must match the target length");
        NnlsProblem { a, b }
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn vars(&self) -> usize {
        self.a.cols()
    }

    pub fn matrix(&self) -> &Mat {
        &self.a
    }

    pub fn target(&self) -> &[f64] {
        &self.b
    }

    /// ‖A u − b‖₂.
    pub fn residual_norm(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.vars());
        let au = self.a.matvec(u);
        au.iter().zip(self.b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    /// Dual vector w = Aᵀ(b − A u).
    pub fn dual(&self, u: &[f64]) -> Vec<f64> {
        let au = self.a.matvec(u);
        let resid: Vec<f64> = self.b.iter().zip(au.iter()).map(|(y, x)| y - x).collect();
        (0..self.vars())
            .map(|j| (0..self.rows()).map(|i| self.a.get(i, j) * resid[i]).sum())
            .collect()
    }

    /// Natural problem scale for tolerance tests.
    pub fn scale(&self) -> f64 {
        self.dual(&vec![0.0; self.vars()]).iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300)
    }

    /// Maximum KKT violation of a candidate solution: |w_i| on the support,
    /// max(w_i, 0) off it.
    pub fn kkt_violation(&self, u: &[f64]) -> f64 {
        let w = self.dual(u);
        let mut worst = 0.0f64;
        for (ui, wi) in u.iter().zip(w.iter()) {
            let v = if *ui > 0.0 { wi.abs() } else { wi.max(0.0) };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub u: Vec<f64>,
    /// False when the iteration cap 10·(number of variables) was hit; the
    /// best iterate is still returned.
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Least-squares solve for a column subset via Householder QR.
fn solve_subset_ls(a: &Mat, cols: &[usize], b: &[f64]) -> Vec<f64> {
    let m = a.rows();
    let k = cols.len();
    let mut r = vec![0.0f64; m * k];
    for (jj, &j) in cols.iter().enumerate() {
        for i in 0..m {
            r[i * k + jj] = a.get(i, j);
        }
    }
    let mut qtb = b.to_vec();
    for j in 0..k {
        let mut norm_sq = 0.0;
        for i in j..m {
            norm_sq += r[i * k + j] * r[i * k + j];
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[j * k + j] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0f64; m - j];
        for i in j..m {
            v[i - j] = r[i * k + j];
        }
        v[0] -= alpha;
        let v_sq: f64 = v.iter().map(|x| x * x).sum();
        if v_sq == 0.0 {
            continue;
        }
        for jj in (j + 1)..k {
            let mut dot = 0.0;
            for i in j..m {
                dot += v[i - j] * r[i * k + jj];
            }
            let f = 2.0 * dot / v_sq;
            for i in j..m {
                r[i * k + jj] -= f * v[i - j];
            }
        }
        let mut dot = 0.0;
        for i in j..m {
            dot += v[i - j] * qtb[i];
        }
        let f = 2.0 * dot / v_sq;
        for i in j..m {
            qtb[i] -= f * v[i - j];
        }
        r[j * k + j] = alpha;
        for i in (j + 1)..m {
            r[i * k + j] = 0.0;
        }
    }
    let mut z = vec![0.0f64; k];
    for j in (0..k).rev() {
        let mut s = qtb[j];
        for jj in (j + 1)..k {
            s -= r[j * k + jj] * z[jj];
        }
        let d = r[j * k + j];
        z[j] = if d.abs() > 1e-300 { s / d } else { 0.0 };
    }
    z
}

/// Lawson-Hanson active-set iteration. Terminates when the largest dual
/// component over the zero set drops to 1e−10 of the problem scale, or
/// after 10·vars outer iterations (flagged, best iterate returned).
pub fn nnls_solve(prob: &NnlsProblem) -> Result<NnlsSolution, MimoError> {
    let vars = prob.vars();
    if vars == 0 {
        return Err(MimoError::InvalidParam("problem has no variables".into()));
    }
    let tol = 1e-10 * prob.scale();
    let max_iter = 10 * vars;

    let mut x = vec![0.0f64; vars];
    let mut passive = vec![false; vars];
    // per-round exclusions guard against degenerate candidates whose
    // trial solve comes back non-positive
    let mut excluded = vec![false; vars];
    let mut iterations = 0usize;
    let mut converged = false;

    loop {
        let w = prob.dual(&x);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..vars {
            if passive[j] || excluded[j] {
                continue;
            }
            if w[j] > tol && best.is_none_or(|(_, bw)| w[j] > bw) {
                best = Some((j, w[j]));
            }
        }
        let Some((t, _)) = best else {
            // converged if no admissible positive dual remains and no
            // candidate was shelved by exclusion
            converged = (0..vars).all(|j| passive[j] || !excluded[j] || w[j] <= tol);
            break;
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        passive[t] = true;

        // inner loop: restore feasibility of the passive-set LS solution
        loop {
            let cols: Vec<usize> = (0..vars).filter(|&j| passive[j]).collect();
            let z = solve_subset_ls(&prob.a, &cols, &prob.b);
            if z.iter().any(|v| !v.is_finite()) {
                // near-dependent trial column; shelve it for this round
                passive[t] = false;
                excluded[t] = true;
                break;
            }
            if z.iter().all(|&v| v > 0.0) {
                for (jj, &j) in cols.iter().enumerate() {
                    x[j] = z[jj];
                }
                for (j, flag) in passive.iter().enumerate() {
                    if !flag {
                        x[j] = 0.0;
                    }
                }
                excluded.fill(false);
                break;
            }
            // step toward z until the first passive variable hits zero
            let mut alpha = f64::INFINITY;
            for (jj, &j) in cols.iter().enumerate() {
                if z[jj] <= 0.0 {
                    let denom = x[j] - z[jj];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (jj, &j) in cols.iter().enumerate() {
                x[j] += alpha * (z[jj] - x[j]);
            }
            let mut dropped_new = false;
            for &j in &cols {
                if x[j] <= 1e-14 * prob.scale() || (alpha == 0.0 && j == t) {
                    x[j] = 0.0;
                    passive[j] = false;
                    if j == t {
                        dropped_new = true;
                    }
                }
            }
            if dropped_new {
                excluded[t] = true;
                break;
            }
        }
    }

    let residual = prob.residual_norm(&x);
    Ok(NnlsSolution { u: x, converged, iterations, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Mat {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn exact_single_atom() {
        // target equals the first column: u = e1, zero residual
        let a = mat(&[&[1.0, 0.5], &[0.0, 1.0], &[2.0, -0.3]]);
        let b = vec![1.0, 0.0, 2.0];
        let prob = NnlsProblem::new(a, b);
        let sol = nnls_solve(&prob).unwrap();
        assert!(sol.converged);
        assert!((sol.u[0] - 1.0).abs() < 1e-12);
        assert!(sol.u[1].abs() < 1e-12);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn sign_constraint_binds() {
        // target is the negated column: zero beats any nonnegative fit
        let a = mat(&[&[1.0], &[2.0]]);
        let b = vec![-1.0, -2.0];
        let prob = NnlsProblem::new(a, b);
        let sol = nnls_solve(&prob).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.u, vec![0.0]);
        assert!((sol.residual - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn never_worse_than_zero_and_kkt_holds() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..50 {
            let rows = 8;
            let cols = 5;
            let a = Mat::from_fn(rows, cols, |_, _| 2.0 * next());
            let b: Vec<f64> = (0..rows).map(|_| 2.0 * next()).collect();
            let prob = NnlsProblem::new(a, b);
            let sol = nnls_solve(&prob).unwrap();
            assert!(sol.converged);
            let zero_resid = prob.residual_norm(&vec![0.0; cols]);
            assert!(sol.residual <= zero_resid + 1e-12);
            assert!(
                prob.kkt_violation(&sol.u) <= 1e-8 * prob.scale(),
                "kkt violation {}",
                prob.kkt_violation(&sol.u)
            );
        }
    }

    #[test]
    fn matches_unconstrained_when_interior() {
        // strictly positive unconstrained solution: NNLS must agree
        let a = mat(&[&[2.0, 0.0], &[0.0, 3.0], &[0.1, 0.1]]);
        let truth = [1.5, 0.7];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..2).map(|j| a.get(i, j) * truth[j]).sum())
            .collect();
        let prob = NnlsProblem::new(a, b);
        let sol = nnls_solve(&prob).unwrap();
        assert!((sol.u[0] - truth[0]).abs() < 1e-10);
        assert!((sol.u[1] - truth[1]).abs() < 1e-10);
    }
}
