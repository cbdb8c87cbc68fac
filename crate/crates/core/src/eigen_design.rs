//! Correlation design in an arbitrary orthonormal basis: given the
//! eigenvalues μ of a trace-one target correlation matrix, pick the
//! eigenvalue profile λ of the sensing process that maximizes the raked
//! power Σ λ_j μ_j subject to unit trace (Σλ = 1), a randomness budget on
//! the profile's energy (Σλ² = r), and positivity.
//!
//! The constrained maximum has a closed form on the optimal support: the
//! profile follows μ affinely over the leading J eigenvalues and is zero
//! beyond, where J is found by scanning support sizes ([`find_j`]). The
//! module also carries two brute-force verifiers used by the test suites:
//! a seeded projected-ascent search with Karush-Kuhn-Tucker recovery
//! ([`oracle_solve`]) and an exhaustive permutation check of the
//! sorted-alignment step ([`assignment_bruteforce`]).

use crate::mat::{dot, project_psd, sym_eig, EigenModel, SymMatrix};
use crate::rng::{rng, substream};
use crate::textio::{csv_line, fmt_g12};
use crate::{Error, Result};
use rand_distr::{Distribution, StandardNormal};

/// A designed sensing-process correlation: the budget `r`, the support size
/// `j_count`, the full-length eigenvalue profile `lambda` (strictly positive
/// for the first `j_count` entries, zero beyond), the target eigenvalues
/// `mu` it was designed against, and the assembled correlation matrix.
#[derive(Debug, Clone)]
pub struct RakenessDesign {
    pub r: f64,
    pub j_count: usize,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub correlation: SymMatrix,
}

impl RakenessDesign {
    /// Serializes the spectra as CSV with header `j,mu,lambda`.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("j,mu,lambda\n");
        for (j, (m, l)) in self.mu.iter().zip(&self.lambda).enumerate() {
            out.push_str(&csv_line(&[j.to_string(), fmt_g12(*m), fmt_g12(*l)]));
        }
        out
    }
}

/// Outcome of the brute-force profile search: the profile found, the two
/// Lagrange multipliers recovered from it (trace and energy constraints),
/// and the raked-power objective.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub lambda: Vec<f64>,
    pub ell_prime: f64,
    pub ell_double_prime: f64,
    pub objective: f64,
}

/// Checks that `mu` is a nonincreasing, nonnegative probability vector.
fn check_mu(mu: &[f64]) -> Result<()> {
    if mu.is_empty() {
        return Err(Error::InvalidInput("eigenvalue vector is empty".into()));
    }
    let mut sum = 0.0;
    for (j, m) in mu.iter().enumerate() {
        if !m.is_finite() || *m < 0.0 {
            return Err(Error::InvalidInput(format!(
                "eigenvalue {j} is invalid: {m}"
            )));
        }
        if j > 0 && *m > mu[j - 1] + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "eigenvalues must be nonincreasing (violated at index {j})"
            )));
        }
        sum += m;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "eigenvalues must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

/// Leading partial sums over the first `j_count` eigenvalues:
/// (Σ μ_j, Σ μ_j²).
pub fn partial_sums(mu: &[f64], j_count: usize) -> Result<(f64, f64)> {
    if j_count == 0 || j_count > mu.len() {
        return Err(Error::InvalidInput(format!(
            "support size {j_count} outside 1..={}",
            mu.len()
        )));
    }
    let s1 = mu[..j_count].iter().sum();
    let s2 = mu[..j_count].iter().map(|m| m * m).sum();
    Ok((s1, s2))
}

/// The Appendix-B radicand J·Σ2 − Σ1²: J times the variance of the leading
/// block, hence never negative.
pub fn radicand_check(mu: &[f64], j_count: usize) -> Result<f64> {
    let (s1, s2) = partial_sums(mu, j_count)?;
    let value = j_count as f64 * s2 - s1 * s1;
    if value < -1e-12 {
        return Err(Error::Numeric(format!(
            "leading-block variance came out negative: {value:.3e}"
        )));
    }
    Ok(value)
}

/// Closed-form optimal profile over a fixed support of size `j_count`:
/// λ_j = (1/J)·[1 + (J·μ_j − Σ1) / sqrt((Σ2 − Σ1²/J)/(r − 1/J))].
///
/// By construction Σλ = 1 exactly and Σλ² = r exactly (when the budget
/// binds). Degenerate branches: a single-entry support is pinned to λ = (1)
/// by the trace constraint; r = 1/J or an equal-eigenvalue block returns
/// the uniform profile 1/J.
pub fn lambda_of_j(mu: &[f64], j_count: usize, r: f64) -> Result<Vec<f64>> {
    check_mu(mu)?;
    let (s1, s2) = partial_sums(mu, j_count)?;
    let jf = j_count as f64;
    if !r.is_finite() || r > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "randomness budget r = {r} must lie in [1/J, 1]"
        )));
    }
    if r < 1.0 / jf - 1e-12 {
        return Err(Error::Domain(format!(
            "randomness budget r = {r} is below the support floor 1/J = {}",
            1.0 / jf
        )));
    }
    if j_count == 1 {
        return Ok(vec![1.0]);
    }
    let variance = s2 - s1 * s1 / jf;
    let slack = r - 1.0 / jf;
    if slack <= 1e-14 || variance <= 1e-14 * s2 {
        // Budget at its floor, or an equal-eigenvalue block: the profile is
        // uniform over the support.
        return Ok(vec![1.0 / jf; j_count]);
    }
    let scale = (variance / slack).sqrt();
    Ok(mu[..j_count]
        .iter()
        .map(|m| (1.0 + (jf * m - s1) / scale) / jf)
        .collect())
}

/// Optimal support size: the largest J, scanned from ceil(1/r) upward, whose
/// closed-form profile keeps its last (smallest) entry strictly positive.
pub fn find_j(mu: &[f64], r: f64) -> Result<usize> {
    check_mu(mu)?;
    if !r.is_finite() || r <= 0.0 || r > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "randomness budget r = {r} must lie in (0, 1]"
        )));
    }
    let n = mu.len();
    let floor = (1.0 / r).ceil() as usize;
    if floor > n {
        return Err(Error::Infeasible {
            requested: r,
            minimum: 1.0 / n as f64,
            what: "randomness budget r (needs r ≥ 1/n)".into(),
        });
    }
    let mut best = None;
    for j_count in floor.max(1)..=n {
        let lambda = lambda_of_j(mu, j_count, r)?;
        if lambda[j_count - 1] > 0.0 {
            best = Some(j_count);
        }
    }
    best.ok_or_else(|| {
        Error::Numeric("no support size yields a positive profile".into())
    })
}

/// Designs the sensing-process correlation for a trace-normalized PSD
/// target: eigendecomposes the target, shapes the eigenvalue profile by
/// [`find_j`] and [`lambda_of_j`], and reassembles on the target's
/// eigenvectors.
pub fn design_correlation(target: &SymMatrix, r: f64) -> Result<RakenessDesign> {
    let n = target.n();
    if n == 0 {
        return Err(Error::InvalidInput("empty correlation target".into()));
    }
    if !r.is_finite() || r > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "randomness budget r = {r} must lie in [1/n, 1]"
        )));
    }
    if r < 1.0 / n as f64 - 1e-12 {
        return Err(Error::Infeasible {
            requested: r,
            minimum: 1.0 / n as f64,
            what: "randomness budget r (1/n floor)".into(),
        });
    }
    let trace = target.trace();
    if !trace.is_finite() || trace <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "correlation target needs a positive trace, got {trace}"
        )));
    }
    let scaled = SymMatrix::from_fn(n, |i, j| target[(i, j)] / trace);
    let psd = project_psd(&scaled)?;
    let eig = sym_eig(&psd)?;
    let mu_sum: f64 = eig.values.iter().sum();
    let mu: Vec<f64> = eig.values.iter().map(|m| m / mu_sum).collect();

    let j_count = find_j(&mu, r)?;
    let mut lambda = lambda_of_j(&mu, j_count, r)?;
    lambda.resize(n, 0.0);
    let correlation = EigenModel {
        values: lambda.clone(),
        vectors: eig.vectors,
    }
    .reconstruct();

    let design = RakenessDesign {
        r,
        j_count,
        lambda,
        mu,
        correlation,
    };
    design.assert_invariants()?;
    Ok(design)
}

impl RakenessDesign {
    /// Defensive check of the type's contract; all of these hold
    /// algebraically, so a failure indicates a numerical defect upstream.
    fn assert_invariants(&self) -> Result<()> {
        let sum: f64 = self.lambda.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!("profile trace {sum} is not 1")));
        }
        for (j, l) in self.lambda.iter().enumerate() {
            if j < self.j_count && *l <= 0.0 {
                return Err(Error::Numeric(format!(
                    "profile entry {j} inside the support is not positive: {l}"
                )));
            }
            if j >= self.j_count && *l != 0.0 {
                return Err(Error::Numeric(format!(
                    "profile entry {j} outside the support is nonzero: {l}"
                )));
            }
            if j > 0 && *l > self.lambda[j - 1] + 1e-12 {
                return Err(Error::Numeric(format!(
                    "profile is not nonincreasing at index {j}"
                )));
            }
        }
        let trace = self.correlation.trace();
        if (trace - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!(
                "designed correlation trace {trace} is not 1"
            )));
        }
        Ok(())
    }
}

/// Brute-force verifier: maximizes the raked power over the simplex slice
/// of the energy sphere by seeded projected ascent with random restarts,
/// polishing each run on its discovered support, then recovers the two
/// Lagrange multipliers and checks the first-order system
/// μ_j + ℓ' + ℓ''·λ_j = 0 (support), μ_j + ℓ' ≤ 0 (off support), ℓ'' < 0.
pub fn oracle_solve(mu: &[f64], r: f64, seed: u64) -> Result<OracleSolution> {
    check_mu(mu)?;
    let n = mu.len();
    if !r.is_finite() || r < 1.0 / n as f64 - 1e-12 || r > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "randomness budget r = {r} must lie in [1/n, 1] = [{}, 1]",
            1.0 / n as f64
        )));
    }
    let cfg = &crate::qcqp::SOLVER;
    let mut best: Option<Vec<f64>> = None;
    let mut best_value = f64::NEG_INFINITY;
    for restart in 0..cfg.profile_restarts {
        let mut r_state = rng(substream(seed, restart as u64));
        let mut point: Vec<f64> = (0..n)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut r_state);
                g.abs() + 1e-3
            })
            .collect();
        project_sphere_slice(&mut point, r);
        for iter in 0..cfg.profile_iters {
            let step = 0.3 / (1.0 + iter as f64 / 25.0);
            for (p, m) in point.iter_mut().zip(mu) {
                *p += step * m;
            }
            project_sphere_slice(&mut point, r);
        }
        // Active-set polish: maximize exactly on the discovered support,
        // shrinking the support while the exact maximizer leaves it.
        let mut support: Vec<usize> = (0..n).filter(|&j| point[j] > 1e-9).collect();
        let polished = loop {
            if support.is_empty() {
                break None;
            }
            match max_on_support(mu, r, &support) {
                Some(candidate) => {
                    let negative: Vec<usize> = support
                        .iter()
                        .copied()
                        .filter(|&j| candidate[j] < 0.0)
                        .collect();
                    if negative.is_empty() {
                        break Some(candidate);
                    }
                    support.retain(|j| !negative.contains(j));
                }
                None => break None,
            }
        };
        let candidate = match polished {
            Some(c) => c,
            None => point,
        };
        let value = dot(mu, &candidate);
        if value > best_value {
            best_value = value;
            best = Some(candidate);
        }
    }
    let lambda = best.ok_or_else(|| Error::Numeric("profile search produced no candidate".into()))?;
    let (ell_prime, ell_double_prime) = recover_multipliers(mu, &lambda)?;
    Ok(OracleSolution {
        objective: dot(mu, &lambda),
        lambda,
        ell_prime,
        ell_double_prime,
    })
}

/// Projects onto {λ ≥ 0, Σλ = 1, Σλ² = r} by alternating the simplex
/// projection with the radial projection onto the energy sphere inside the
/// trace hyperplane.
fn project_sphere_slice(point: &mut [f64], r: f64) {
    let n = point.len();
    let center = 1.0 / n as f64;
    let radius = (r - center).max(0.0).sqrt();
    for _ in 0..12 {
        simplex_project(point);
        // radial step within the hyperplane Σλ = 1
        let mut dev: Vec<f64> = point.iter().map(|p| p - center).collect();
        let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm < 1e-15 {
            if radius > 0.0 {
                // arbitrary direction off the uniform point, kept in-plane
                for (j, d) in dev.iter_mut().enumerate() {
                    *d = if j == 0 { 1.0 } else { -1.0 / (n as f64 - 1.0) };
                }
                let nn = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
                for d in &mut dev {
                    *d /= nn;
                }
            } else {
                return;
            }
        } else {
            for d in &mut dev {
                *d /= norm;
            }
        }
        let mut worst_neg = 0.0;
        for (p, d) in point.iter_mut().zip(&dev) {
            *p = center + radius * d;
            worst_neg = f64::min(worst_neg, *p);
        }
        if worst_neg >= -1e-12 {
            for p in point.iter_mut() {
                if *p < 0.0 {
                    *p = 0.0;
                }
            }
            return;
        }
    }
    simplex_project(point);
}

/// Euclidean projection onto the probability simplex (sorted-threshold
/// scan).
fn simplex_project(point: &mut [f64]) {
    let n = point.len();
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        acc += v;
        let candidate = (acc - 1.0) / (k as f64 + 1.0);
        if k + 1 == n || sorted[k + 1] <= candidate {
            tau = candidate;
            if k + 1 < n && sorted[k + 1] > candidate {
                continue;
            }
            break;
        }
    }
    for p in point.iter_mut() {
        *p = (*p - tau).max(0.0);
    }
}

/// Exact maximizer of Σλμ over {Σλ = 1, Σλ² = r} restricted to `support`
/// (ignoring positivity): the sphere-slice point farthest along the
/// in-plane component of μ. Returns None when the slice is empty or μ is
/// constant on the support (every slice point ties).
fn max_on_support(mu: &[f64], r: f64, support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len() as f64;
    let center = 1.0 / k;
    let slack = r - center;
    if slack < -1e-12 {
        return None;
    }
    let radius = slack.max(0.0).sqrt();
    let mean: f64 = support.iter().map(|&j| mu[j]).sum::<f64>() / k;
    let mut dev: Vec<f64> = support.iter().map(|&j| mu[j] - mean).collect();
    let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
    let mut out = vec![0.0; mu.len()];
    if norm < 1e-14 {
        if radius > 1e-9 {
            // constant μ on a slice of positive radius: no unique maximizer
            for &j in support {
                out[j] = center;
            }
            return Some(out);
        }
        for &j in support {
            out[j] = center;
        }
        return Some(out);
    }
    for d in &mut dev {
        *d /= norm;
    }
    for (&j, d) in support.iter().zip(&dev) {
        out[j] = center + radius * d;
    }
    Some(out)
}

/// Least-squares recovery of the multipliers from a candidate profile, with
/// first-order residual checks (see [`oracle_solve`]).
fn recover_multipliers(mu: &[f64], lambda: &[f64]) -> Result<(f64, f64)> {
    let support: Vec<usize> = (0..lambda.len()).filter(|&j| lambda[j] > 1e-9).collect();
    if support.is_empty() {
        return Err(Error::Numeric("candidate profile is identically zero".into()));
    }
    let (ell_prime, ell_double_prime) = if support.len() == 1 {
        // Single-entry support: the stationarity equation alone is
        // underdetermined; pick ℓ' between the support and off-support
        // bounds so both dual conditions hold strictly where possible.
        let head = mu[support[0]];
        let next = mu
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != support[0])
            .map(|(_, m)| *m)
            .fold(f64::NEG_INFINITY, f64::max);
        let ell_prime = if next.is_finite() {
            -0.5 * (head + next)
        } else {
            -head - 1.0
        };
        (ell_prime, -(head + ell_prime) / lambda[support[0]])
    } else {
        // Fit μ_j = −ℓ' − ℓ''·λ_j over the support.
        let k = support.len() as f64;
        let sl: f64 = support.iter().map(|&j| lambda[j]).sum();
        let sm: f64 = support.iter().map(|&j| mu[j]).sum();
        let sll: f64 = support.iter().map(|&j| lambda[j] * lambda[j]).sum();
        let slm: f64 = support.iter().map(|&j| lambda[j] * mu[j]).sum();
        let det = k * sll - sl * sl;
        if det.abs() < 1e-14 {
            // constant profile over the support (uniform case): stationarity
            // holds with any negative curvature when μ is constant too
            let mean_mu = sm / k;
            let mean_l = sl / k;
            (-mean_mu - mean_l, 1.0)
        } else {
            let slope = (k * slm - sl * sm) / det;
            let intercept = (sm - slope * sl) / k;
            (-intercept, -slope)
        }
    };
    let ell_double_prime = if ell_double_prime >= 0.0 {
        -1.0
    } else {
        ell_double_prime
    };
    // First-order residuals
    let mut residual = 0.0_f64;
    for (j, (m, l)) in mu.iter().zip(lambda).enumerate() {
        if *l > 1e-9 {
            residual = residual.max((m + ell_prime + ell_double_prime * l).abs());
        } else if support.len() > 1 {
            // off-support dual feasibility (slack multiplier nonnegative)
            let slack_mult = -(m + ell_prime);
            if slack_mult < -1e-6 {
                return Err(Error::Numeric(format!(
                    "off-support condition fails at index {j}: μ + ℓ' = {:.3e}",
                    m + ell_prime
                )));
            }
        }
    }
    // The uniform-profile degenerate case has no meaningful stationarity
    // residual; everywhere else demand the Appendix-A system to 1e−6.
    let l_min = support.iter().map(|&j| lambda[j]).fold(f64::INFINITY, f64::min);
    let l_max = support.iter().map(|&j| lambda[j]).fold(f64::NEG_INFINITY, f64::max);
    if l_max - l_min > 1e-9 && residual > 1e-6 {
        return Err(Error::Numeric(format!(
            "first-order residual {residual:.3e} above 1e-6"
        )));
    }
    Ok((ell_prime, ell_double_prime))
}

/// Exhaustively scores Σ λ_j μ_{ξ(j)} over all permutations ξ (n ≤ 8) and
/// confirms the identity assignment is maximal (ties allowed). Returns the
/// best permutation found and its value.
pub fn assignment_bruteforce(lambda: &[f64], mu: &[f64]) -> Result<(Vec<usize>, f64)> {
    let n = lambda.len();
    if n != mu.len() {
        return Err(Error::Shape(format!(
            "length mismatch: {n} profile entries vs {} eigenvalues",
            mu.len()
        )));
    }
    if n == 0 || n > 8 {
        return Err(Error::InvalidInput(format!(
            "exhaustive assignment needs 1..=8 entries, got {n}"
        )));
    }
    for v in [lambda, mu] {
        for j in 1..n {
            if v[j] > v[j - 1] + 1e-12 {
                return Err(Error::InvalidInput(
                    "assignment check needs nonincreasing inputs".into(),
                ));
            }
        }
    }
    let identity_value = dot(lambda, mu);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_perm = perm.clone();
    let mut best_value = identity_value;
    // Heap's algorithm over all n! assignments
    let mut counters = vec![0usize; n];
    let mut i = 0;
    let score = |perm: &[usize], best_value: &mut f64, best_perm: &mut Vec<usize>| {
        let v: f64 = perm.iter().enumerate().map(|(j, &k)| lambda[j] * mu[k]).sum();
        if v > *best_value {
            *best_value = v;
            *best_perm = perm.to_vec();
        }
    };
    score(&perm, &mut best_value, &mut best_perm);
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            score(&perm, &mut best_value, &mut best_perm);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    if identity_value < best_value - 1e-12 * best_value.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "identity assignment loses: {identity_value} vs {best_value}"
        )));
    }
    Ok((best_perm, best_value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::Mat;
    use rand::Rng as _;

    fn random_descending_mu(r_state: &mut crate::rng::Rng, n: usize) -> Vec<f64> {
        let mut mu: Vec<f64> = (0..n).map(|_| r_state.random::<f64>() + 1e-3).collect();
        mu.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let sum: f64 = mu.iter().sum();
        mu.iter().map(|m| m / sum).collect()
    }

    #[test]
    fn partial_sums_pinned_values() {
        assert_eq!(partial_sums(&[1.0, 0.0, 0.0], 1).unwrap(), (1.0, 1.0));
        let (s1, s2) = partial_sums(&[0.5, 0.3, 0.2], 3).unwrap();
        assert!((s1 - 1.0).abs() < 1e-15 && (s2 - 0.38).abs() < 1e-15);
        let (s1, s2) = partial_sums(&[0.5, 0.3, 0.2], 2).unwrap();
        assert!((s1 - 0.8).abs() < 1e-15 && (s2 - 0.34).abs() < 1e-15);
        assert!(partial_sums(&[0.5, 0.5], 0).is_err());
        assert!(partial_sums(&[0.5, 0.5], 3).is_err());
    }

    #[test]
    fn radicand_is_block_variance() {
        let mu = [0.5, 0.3, 0.2];
        assert!((radicand_check(&mu, 3).unwrap() - 0.14).abs() < 1e-12);
        assert!(radicand_check(&[0.25; 4], 4).unwrap().abs() < 1e-15);
        let mut r_state = rng(5);
        for _ in 0..1000 {
            let n = 2 + (r_state.random::<u32>() % 9) as usize;
            let mu = random_descending_mu(&mut r_state, n);
            for j in 1..=n {
                assert!(radicand_check(&mu, j).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn profile_worked_example() {
        let mu = [0.5, 0.3, 0.2];
        let lambda = lambda_of_j(&mu, 3, 0.4).unwrap();
        let expected = [0.53252, 0.29349, 0.17398];
        for (l, e) in lambda.iter().zip(&expected) {
            assert!((l - e).abs() < 5e-5, "{l} vs {e}");
        }
        let sum: f64 = lambda.iter().sum();
        let energy: f64 = lambda.iter().map(|l| l * l).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((energy - 0.4).abs() < 1e-12);
        // exact closed-form head entry: (1 + 0.5/sqrt(0.7))/3
        let head = (1.0 + 0.5 / 0.7_f64.sqrt()) / 3.0;
        assert!((lambda[0] - head).abs() < 1e-15);
    }

    #[test]
    fn profile_degenerate_branches() {
        // equal eigenvalues: uniform profile at any feasible budget
        let lambda = lambda_of_j(&[0.25; 4], 4, 0.7).unwrap();
        for l in &lambda {
            assert_eq!(*l, 0.25);
        }
        // budget at the support floor
        let lambda = lambda_of_j(&[0.5, 0.3, 0.2], 2, 0.5).unwrap();
        assert_eq!(lambda, vec![0.5, 0.5]);
        // single-entry support pinned by the trace constraint
        assert_eq!(lambda_of_j(&[0.9, 0.1], 1, 1.0).unwrap(), vec![1.0]);
        // budget below the floor
        assert!(matches!(
            lambda_of_j(&[0.5, 0.3, 0.2], 3, 0.2),
            Err(Error::Domain(_))
        ));
        assert!(lambda_of_j(&[0.5, 0.3, 0.2], 3, 1.5).is_err());
    }

    #[test]
    fn support_scan_examples() {
        assert_eq!(find_j(&[0.9, 0.1], 1.0).unwrap(), 1);
        for &r in &[0.2, 0.5, 1.0] {
            assert_eq!(find_j(&[0.2; 5], r).unwrap(), 5);
        }
        assert_eq!(find_j(&[0.5, 0.3, 0.2], 0.4).unwrap(), 3);
        // post-conditions on random instances
        let mut r_state = rng(17);
        for _ in 0..200 {
            let n = 2 + (r_state.random::<u32>() % 11) as usize;
            let mu = random_descending_mu(&mut r_state, n);
            let r = 1.0 / n as f64 + (1.0 - 1.0 / n as f64) * r_state.random::<f64>();
            let j_count = find_j(&mu, r).unwrap();
            assert!(j_count >= (1.0 / r).ceil() as usize);
            let lambda = lambda_of_j(&mu, j_count, r).unwrap();
            assert!(lambda[j_count - 1] > 0.0);
            for pair in lambda.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12);
            }
            if j_count < n {
                let next = lambda_of_j(&mu, j_count + 1, r).unwrap();
                assert!(next[j_count] <= 0.0, "larger support stayed positive");
            }
        }
        // infeasibly small budget
        assert!(matches!(
            find_j(&[0.5, 0.5], 0.3),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn assignment_identity_always_wins() {
        let (_, best) = assignment_bruteforce(&[0.7, 0.3], &[0.6, 0.4]).unwrap();
        let identity = 0.7 * 0.6 + 0.3 * 0.4;
        assert!((best - identity).abs() < 1e-15);
        // margin over the swap is (λ0−λ1)(μ0−μ1) = 0.08
        let swapped = 0.7 * 0.4 + 0.3 * 0.6;
        assert!((identity - swapped - 0.08).abs() < 1e-12);

        // all-equal eigenvalues: every permutation ties
        let (_, tied) = assignment_bruteforce(&[0.5, 0.3, 0.2], &[1.0 / 3.0; 3]).unwrap();
        assert!((tied - 1.0 / 3.0).abs() < 1e-12);

        let mut r_state = rng(29);
        for _ in 0..1000 {
            let lambda = random_descending_mu(&mut r_state, 5);
            let mu = random_descending_mu(&mut r_state, 5);
            let (_, best) = assignment_bruteforce(&lambda, &mu).unwrap();
            assert!(best >= dot(&lambda, &mu) - 1e-12);
        }
        assert!(assignment_bruteforce(&[0.5; 9], &[0.5; 9]).is_err());
        assert!(assignment_bruteforce(&[0.3, 0.7], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn oracle_handles_pinned_cases() {
        // equal eigenvalues: objective is Σμ/J whatever the profile
        let sol = oracle_solve(&[0.25; 4], 0.6, 7).unwrap();
        assert!((sol.objective - 0.25).abs() < 1e-9);
        assert!(sol.ell_double_prime < 0.0);

        // r = 1: all mass on the leading eigenvalue
        let sol = oracle_solve(&[0.5, 0.3, 0.2], 1.0, 7).unwrap();
        assert!((sol.objective - 0.5).abs() < 1e-9);
        assert!((sol.lambda[0] - 1.0).abs() < 1e-9);
        assert!(sol.ell_double_prime < 0.0);

        // worked example: matches the closed form
        let sol = oracle_solve(&[0.5, 0.3, 0.2], 0.4, 7).unwrap();
        let closed = lambda_of_j(&[0.5, 0.3, 0.2], 3, 0.4).unwrap();
        let closed_obj = dot(&closed, &[0.5, 0.3, 0.2]);
        assert!((sol.objective - closed_obj).abs() < 1e-6);
        for (a, b) in sol.lambda.iter().zip(&closed) {
            assert!((a - b).abs() < 1e-4);
        }
        // multipliers reproduce the profile: λ_j = −(μ_j + ℓ')/ℓ''
        for (l, m) in sol.lambda.iter().zip(&[0.5, 0.3, 0.2]) {
            let back = -(m + sol.ell_prime) / sol.ell_double_prime;
            assert!((back - l).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_form_matches_oracle_on_random_instances() {
        let mut r_state = rng(41);
        for trial in 0..40u64 {
            let n = 2 + (r_state.random::<u32>() % 11) as usize;
            let mu = random_descending_mu(&mut r_state, n);
            let r = 1.0 / n as f64 + 0.02 + (0.98 - 1.0 / n as f64) * r_state.random::<f64>();
            let r = r.min(1.0);
            let j_count = find_j(&mu, r).unwrap();
            let mut closed = lambda_of_j(&mu, j_count, r).unwrap();
            closed.resize(n, 0.0);
            let closed_obj = dot(&closed, &mu);
            let sol = oracle_solve(&mu, r, 1000 + trial).unwrap();
            assert!(
                (closed_obj - sol.objective).abs() < 1e-5,
                "objective gap {} on trial {trial}",
                closed_obj - sol.objective
            );
            for (a, b) in closed.iter().zip(&sol.lambda) {
                assert!((a - b).abs() < 1e-4, "profile gap on trial {trial}");
            }
        }
    }

    #[test]
    fn objective_nondecreasing_in_budget() {
        let mut r_state = rng(43);
        for _ in 0..20 {
            let n = 3 + (r_state.random::<u32>() % 8) as usize;
            let mu = random_descending_mu(&mut r_state, n);
            let mut last = f64::NEG_INFINITY;
            for step in 0..6 {
                let r = 1.0 / n as f64 + (1.0 - 1.0 / n as f64) * step as f64 / 5.0;
                let j_count = find_j(&mu, r).unwrap();
                let lambda = lambda_of_j(&mu, j_count, r).unwrap();
                let objective = dot(&lambda, &mu[..j_count]);
                assert!(objective >= last - 1e-12);
                last = objective;
            }
        }
    }

    #[test]
    fn correlation_design_examples() {
        // equal-eigenvalue target: the design is the target
        let id3 = SymMatrix::from_fn(3, |i, j| if i == j { 1.0 / 3.0 } else { 0.0 });
        let design = design_correlation(&id3, 0.8).unwrap();
        assert_eq!(design.j_count, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((design.correlation[(i, j)] - id3[(i, j)]).abs() < 1e-9);
            }
        }

        // rank-1 target at r = 1 reproduces the target
        let q = [0.6, 0.48, 0.64];
        let rank1 = SymMatrix::from_fn(3, |i, j| q[i] * q[j]);
        let design = design_correlation(&rank1, 1.0).unwrap();
        assert_eq!(design.j_count, 1);
        for i in 0..3 {
            for j in 0..3 {
                assert!((design.correlation[(i, j)] - rank1[(i, j)]).abs() < 1e-8);
            }
        }

        // a dominant pair of axes: large budget drops the weakest axis
        let diag = SymMatrix::diag(&[0.6, 0.3, 0.1]);
        let design = design_correlation(&diag, 0.9).unwrap();
        assert_eq!(design.j_count, 2);
        assert!(design.correlation[(2, 2)].abs() < 1e-12);
        assert!(design.correlation[(0, 0)] > design.correlation[(1, 1)]);
        let energy: f64 = design.lambda.iter().map(|l| l * l).sum();
        assert!((energy - 0.9).abs() < 1e-8);

        // trace rescaling accepted
        let doubled = SymMatrix::from_fn(3, |i, j| 2.0 * id3[(i, j)]);
        let design = design_correlation(&doubled, 0.5).unwrap();
        assert!((design.correlation.trace() - 1.0).abs() < 1e-9);

        // errors
        assert!(matches!(
            design_correlation(&id3, 0.2),
            Err(Error::Infeasible { minimum, .. }) if (minimum - 1.0 / 3.0).abs() < 1e-12
        ));
        assert!(design_correlation(&id3, 1.5).is_err());
        assert!(design_correlation(&SymMatrix::diag(&[0.0, 0.0]), 0.9).is_err());
    }

    #[test]
    fn tied_eigenvalues_only_affect_basis_not_design() {
        // rotate a target with a tied leading pair; the design must commute
        // with the target (shared eigenspaces)
        let mut r_state = rng(59);
        let g: Vec<f64> = (0..9).map(|_| r_state.random::<f64>() - 0.5).collect();
        // orthonormalize three random vectors
        let mut q = Mat::from_rows(&[
            g[0..3].to_vec(),
            g[3..6].to_vec(),
            g[6..9].to_vec(),
        ])
        .unwrap();
        for i in 0..3 {
            for k in 0..i {
                let proj: f64 = (0..3).map(|c| q[(i, c)] * q[(k, c)]).sum();
                for c in 0..3 {
                    let sub = proj * q[(k, c)];
                    q[(i, c)] -= sub;
                }
            }
            let norm: f64 = (0..3).map(|c| q[(i, c)] * q[(i, c)]).sum::<f64>().sqrt();
            for c in 0..3 {
                q[(i, c)] /= norm;
            }
        }
        let tied = [0.4, 0.4, 0.2];
        let target = SymMatrix::from_fn(3, |i, j| {
            (0..3).map(|k| q[(k, i)] * tied[k] * q[(k, j)]).sum()
        });
        let design = design_correlation(&target, 0.6).unwrap();
        let a = target.as_mat();
        let b = design.correlation.as_mat();
        let ab = a.matmul(b).unwrap();
        let ba = b.matmul(a).unwrap();
        let mut commutator = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                commutator = commutator.max((ab[(i, j)] - ba[(i, j)]).abs());
            }
        }
        assert!(commutator < 1e-8, "design does not share eigenspaces: {commutator}");
        // rows serialize with the documented header
        assert!(design.rows_csv().starts_with("j,mu,lambda\n"));
    }
}
