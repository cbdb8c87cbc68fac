//! Sparse recovery from compressive measurements over a (possibly
//! redundant) dictionary, plus the reconstruction-quality metrics used by
//! the experiment pipelines.
//!
//! Two solvers are provided: orthogonal matching pursuit (greedy, fast
//! baseline) and proximal-gradient l1 minimization with monotone
//! backtracking (the default for the experiments, wrapped by
//! [`l1_debiased`] which adds regularization continuation and a
//! least-squares debias on the recovered support).

use crate::mat::{sym_eig, Mat, SymMatrix};
use crate::textio;
use crate::{Error, Result};

/// RSNR values are capped here; a perfect reconstruction reports the cap.
pub const RSNR_CAP_DB: f64 = 300.0;

/// Output of one reconstruction.
#[derive(Debug, Clone)]
pub struct ReconResult {
    /// Dictionary-domain coefficients, length N_d.
    pub coeffs: Vec<f64>,
    /// Reconstructed record; equals `coeffs` until
    /// [`through_dictionary`](Self::through_dictionary) maps it.
    pub x_hat: Vec<f64>,
    /// Solver iterations (greedy selections or proximal steps).
    pub iterations: usize,
    /// Final ‖P·coeffs − m‖.
    pub residual_norm: f64,
    /// True when a rank-deficient least-squares subproblem fell back to a
    /// pseudo-inverse.
    pub pinv_fallback: bool,
    /// False when the iteration budget ran out before the stopping rule.
    pub converged: bool,
}

impl ReconResult {
    /// Replaces `x_hat` with D·coeffs.
    pub fn through_dictionary(mut self, dict: &Mat) -> Result<Self> {
        self.x_hat = dict.matvec(&self.coeffs)?;
        Ok(self)
    }

    /// Nonzero coefficients as CSV rows of `index,value`.
    pub fn coeffs_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c != 0.0 {
                out.push_str(&textio::csv_line(&[i.to_string(), textio::fmt_g12(*c)]));
            }
        }
        out
    }

    /// Solver metadata as `key = value` text.
    pub fn meta_text(&self) -> String {
        textio::meta_to_text(&[
            ("iterations".to_string(), self.iterations.to_string()),
            ("residual_norm".to_string(), textio::fmt_g12(self.residual_norm)),
            ("converged".to_string(), self.converged.to_string()),
            ("pinv_fallback".to_string(), self.pinv_fallback.to_string()),
        ])
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&i| self.coeffs[i] != 0.0).collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_shapes(p: &Mat, m: &[f64]) -> Result<()> {
    if p.rows() != m.len() {
        return Err(Error::Shape(format!(
            "matrix has {} rows but measurement vector has {} entries",
            p.rows(),
            m.len()
        )));
    }
    Ok(())
}

/// Least squares of m onto the listed columns via the Gram spectrum.
/// Eigenvalues below 1e−12 of the largest are treated as zero
/// (pseudo-inverse); the flag reports whether that happened.
fn least_squares_on(p: &Mat, m: &[f64], support: &[usize]) -> Result<(Vec<f64>, bool)> {
    let k = support.len();
    let gram = SymMatrix::from_fn(k, |a, b| {
        (0..p.rows()).map(|t| p[(t, support[a])] * p[(t, support[b])]).sum()
    });
    let rhs: Vec<f64> = support
        .iter()
        .map(|&j| (0..p.rows()).map(|t| p[(t, j)] * m[t]).sum())
        .collect();
    let eig = sym_eig(&gram)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = 1e-12 * lmax;
    let mut pinv = false;
    let mut local = vec![0.0; k];
    for (idx, &lambda) in eig.values.iter().enumerate() {
        if lambda <= cutoff {
            pinv = true;
            continue;
        }
        let mut proj = 0.0;
        for a in 0..k {
            proj += eig.vectors[(a, idx)] * rhs[a];
        }
        let scale = proj / lambda;
        for a in 0..k {
            local[a] += scale * eig.vectors[(a, idx)];
        }
    }
    let mut dense = vec![0.0; p.cols()];
    for (a, &j) in support.iter().enumerate() {
        dense[j] = local[a];
    }
    Ok((dense, pinv))
}

fn residual_of(p: &Mat, coeffs: &[f64], m: &[f64]) -> Result<f64> {
    let pm = p.matvec(coeffs)?;
    Ok(norm(&pm.iter().zip(m).map(|(a, b)| a - b).collect::<Vec<f64>>()))
}

/// Orthogonal matching pursuit with a sparsity budget: greedily selects the
/// column with the largest normalized residual correlation (lowest index on
/// exact ties), refits by least squares on the grown support, and stops
/// early once the residual is negligible.
pub fn omp(p: &Mat, m: &[f64], k: usize) -> Result<ReconResult> {
    check_shapes(p, m)?;
    if k > p.rows() {
        return Err(Error::Domain(format!(
            "sparsity budget {k} exceeds the {} measurements",
            p.rows()
        )));
    }
    let n = p.cols();
    let col_norms: Vec<f64> = (0..n)
        .map(|j| (0..p.rows()).map(|t| p[(t, j)] * p[(t, j)]).sum::<f64>().sqrt())
        .collect();
    let m_norm = norm(m);
    let mut coeffs = vec![0.0; n];
    let mut residual: Vec<f64> = m.to_vec();
    let mut support: Vec<usize> = Vec::new();
    let mut pinv_any = false;
    let mut iterations = 0;
    while iterations < k {
        if norm(&residual) <= 1e-13 * m_norm.max(1e-300) {
            break;
        }
        let mut best_j = None;
        let mut best_score = 0.0;
        for j in 0..n {
            if col_norms[j] <= 1e-300 || support.contains(&j) {
                continue;
            }
            let corr: f64 = (0..p.rows()).map(|t| p[(t, j)] * residual[t]).sum();
            let score = corr.abs() / col_norms[j];
            if score > best_score {
                best_score = score;
                best_j = Some(j);
            }
        }
        let j = match best_j {
            Some(j) if best_score > 1e-14 * m_norm.max(1e-300) => j,
            _ => break,
        };
        support.push(j);
        let (fit, pinv) = least_squares_on(p, m, &support)?;
        pinv_any |= pinv;
        coeffs = fit;
        let pm = p.matvec(&coeffs)?;
        residual = m.iter().zip(&pm).map(|(a, b)| a - b).collect();
        iterations += 1;
    }
    Ok(ReconResult {
        x_hat: coeffs.clone(),
        residual_norm: norm(&residual),
        coeffs,
        iterations,
        pinv_fallback: pinv_any,
        converged: true,
    })
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Power-iteration estimate of ‖PᵀP‖ with a small safety factor.
fn lipschitz_estimate(p: &Mat) -> f64 {
    let n = p.cols();
    if n == 0 {
        return 1e-12;
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..40 {
        let pv = p.matvec(&v).expect("shape checked");
        let mut w = vec![0.0; n];
        for t in 0..p.rows() {
            for j in 0..n {
                w[j] += p[(t, j)] * pv[t];
            }
        }
        lambda = norm(&w);
        if lambda <= 1e-300 {
            return 1e-12;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / lambda;
        }
    }
    (lambda * 1.05).max(1e-12)
}

/// Proximal-gradient minimization of ½‖P c − m‖² + reg·‖c‖₁ with monotone
/// backtracking: each step satisfies the quadratic majorization test, so
/// the objective never increases. Stops when the relative objective change
/// drops below `tol`; exhausting `max_iters` returns the best iterate with
/// `converged = false`.
pub fn ista_l1(p: &Mat, m: &[f64], reg_weight: f64, max_iters: usize, tol: f64) -> Result<ReconResult> {
    ista_l1_from(p, m, reg_weight, max_iters, tol, None)
}

/// [`ista_l1`] with an optional warm-start point (used by the continuation
/// loop in [`l1_debiased`] so successive regularization levels don't restart
/// from zero).
fn ista_l1_from(
    p: &Mat,
    m: &[f64],
    reg_weight: f64,
    max_iters: usize,
    tol: f64,
    init: Option<&[f64]>,
) -> Result<ReconResult> {
    check_shapes(p, m)?;
    if !(reg_weight > 0.0) || !reg_weight.is_finite() {
        return Err(Error::Domain(format!(
            "regularization weight must be positive and finite, got {reg_weight}"
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::Domain(format!("tolerance must be nonnegative, got {tol}")));
    }
    let n = p.cols();
    let mut lip = lipschitz_estimate(p);
    let mut c: Vec<f64> = match init {
        Some(c0) if c0.len() == n => c0.to_vec(),
        _ => vec![0.0; n],
    };
    let mut pc: Vec<f64> = p.matvec(&c)?;
    let half_sq = |pc: &[f64]| -> f64 {
        0.5 * pc.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    };
    let mut g = half_sq(&pc);
    let mut objective = g + reg_weight * c.iter().map(|x| x.abs()).sum::<f64>();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iters {
        // gradient of the smooth part at c
        let mut grad = vec![0.0; n];
        for t in 0..p.rows() {
            let r = pc[t] - m[t];
            for j in 0..n {
                grad[j] += p[(t, j)] * r;
            }
        }
        // mild downward drift lets the step length re-adapt
        lip = (lip * 0.9).max(1e-12);
        let (cand, cand_pc, cand_g) = loop {
            let cand: Vec<f64> = c
                .iter()
                .zip(&grad)
                .map(|(ci, gi)| soft_threshold(ci - gi / lip, reg_weight / lip))
                .collect();
            let cand_pc = p.matvec(&cand)?;
            let cand_g = half_sq(&cand_pc);
            let mut linear = 0.0;
            let mut dist = 0.0;
            for j in 0..n {
                let d = cand[j] - c[j];
                linear += grad[j] * d;
                dist += d * d;
            }
            let majorant = g + linear + 0.5 * lip * dist;
            if cand_g <= majorant + 1e-12 * majorant.abs().max(1e-300) {
                break (cand, cand_pc, cand_g);
            }
            lip *= 2.0;
            if lip > 1e18 {
                return Err(Error::Numeric(
                    "backtracking failed to find a decreasing step".into(),
                ));
            }
        };
        iterations += 1;
        let cand_obj = cand_g + reg_weight * cand.iter().map(|x| x.abs()).sum::<f64>();
        let change = objective - cand_obj;
        c = cand;
        pc = cand_pc;
        g = cand_g;
        objective = cand_obj;
        if change.abs() <= tol * objective.abs().max(1e-300) {
            converged = true;
            break;
        }
    }
    Ok(ReconResult {
        x_hat: c.clone(),
        residual_norm: residual_of(p, &c, m)?,
        coeffs: c,
        iterations,
        pinv_fallback: false,
        converged,
    })
}

/// Default l1 pipeline: regularization continuation starting at
/// 0.1·‖Pᵀm‖∞ and halving (warm-started, at most 24 times) until the
/// support is at least as large as the refit target, then a least-squares
/// debias on the `k_target` largest-magnitude coefficients.
pub fn l1_debiased(
    p: &Mat,
    m: &[f64],
    k_target: usize,
    max_iters: usize,
    tol: f64,
) -> Result<ReconResult> {
    check_shapes(p, m)?;
    if k_target == 0 {
        return Err(Error::Domain("target support size must be positive".into()));
    }
    let n = p.cols();
    let mut corr_inf = 0.0_f64;
    for j in 0..n {
        let c: f64 = (0..p.rows()).map(|t| p[(t, j)] * m[t]).sum();
        corr_inf = corr_inf.max(c.abs());
    }
    if corr_inf <= 1e-300 {
        return Ok(ReconResult {
            coeffs: vec![0.0; n],
            x_hat: vec![0.0; n],
            iterations: 0,
            residual_norm: norm(m),
            pinv_fallback: false,
            converged: true,
        });
    }
    let want = k_target.min(p.rows());
    let mut reg = 0.1 * corr_inf;
    let mut total_iters = 0;
    let mut fit = ista_l1(p, m, reg, max_iters, tol)?;
    total_iters += fit.iterations;
    for _ in 0..24 {
        if fit.support().len() >= want {
            break;
        }
        reg *= 0.5;
        fit = ista_l1_from(p, m, reg, max_iters, tol, Some(&fit.coeffs))?;
        total_iters += fit.iterations;
    }
    // keep the k_target largest-magnitude coefficients and refit
    let mut order: Vec<usize> = fit.support();
    order.sort_by(|&a, &b| {
        fit.coeffs[b]
            .abs()
            .partial_cmp(&fit.coeffs[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(k_target.min(p.rows()));
    order.sort_unstable();
    if order.is_empty() {
        return Ok(ReconResult {
            coeffs: vec![0.0; n],
            x_hat: vec![0.0; n],
            iterations: total_iters,
            residual_norm: norm(m),
            pinv_fallback: false,
            converged: fit.converged,
        });
    }
    let (coeffs, pinv) = least_squares_on(p, m, &order)?;
    Ok(ReconResult {
        x_hat: coeffs.clone(),
        residual_norm: residual_of(p, &coeffs, m)?,
        coeffs,
        iterations: total_iters,
        pinv_fallback: pinv,
        converged: fit.converged,
    })
}

/// Reconstruction SNR in dB: signal energy over error energy, capped at
/// [`RSNR_CAP_DB`].
pub fn rsnr_db(x_true: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x_true.len() != x_hat.len() {
        return Err(Error::Shape(format!(
            "signal lengths differ: {} vs {}",
            x_true.len(),
            x_hat.len()
        )));
    }
    let energy: f64 = x_true.iter().map(|v| v * v).sum();
    if energy <= 0.0 {
        return Err(Error::Domain("reference signal has zero energy".into()));
    }
    let err: f64 = x_true.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    if err == 0.0 {
        return Ok(RSNR_CAP_DB);
    }
    Ok((10.0 * (energy / err).log10()).min(RSNR_CAP_DB))
}

/// Mean and sample standard deviation of a set of RSNR values in dB.
/// Capped samples contribute to the mean but are excluded from the spread
/// and counted separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArsnrStats {
    pub mean_db: f64,
    pub std_db: f64,
    pub n_capped: usize,
}

pub fn arsnr(samples_db: &[f64]) -> Result<ArsnrStats> {
    if samples_db.is_empty() {
        return Err(Error::InvalidInput("no RSNR samples".into()));
    }
    let mean_db = samples_db.iter().sum::<f64>() / samples_db.len() as f64;
    let free: Vec<f64> = samples_db
        .iter()
        .copied()
        .filter(|&v| v < RSNR_CAP_DB)
        .collect();
    let n_capped = samples_db.len() - free.len();
    let std_db = if free.len() >= 2 {
        let mu = free.iter().sum::<f64>() / free.len() as f64;
        (free.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (free.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(ArsnrStats {
        mean_db,
        std_db,
        n_capped,
    })
}
