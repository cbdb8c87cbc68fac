//! Maximize a linear objective over the intersection of a scaled simplex, a
//! PSD quadratic ball, and a coordinate-symmetry subspace:
//!
//! ```text
//!   maximize  w·x
//!   s.t.      x >= 0,  simplex_scale * sum(x) = 1,
//!             x' W x <= quad_bound,
//!             x_i = x_j  for every listed symmetry pair.
//! ```
//!
//! The feasible set is convex and compact, so the optimum sits on the
//! boundary. We search the scalar dual of the quadratic constraint: for a
//! multiplier `nu >= 0` the inner problem `max w·x − nu·x'Wx` over the
//! simplex-with-symmetry is smooth and concave and is solved by accelerated
//! projected gradient; an outer bisection drives the inner solution onto the
//! quadratic boundary. Symmetry is handled exactly by folding tied
//! coordinates into weighted groups, which also makes the inner projection a
//! plain (weighted) simplex projection.

use crate::error::{Error, Result};
use crate::mat::{dot, power_iteration_lmax, try_cholesky_shifted, SymMatrix};

/// Problem statement for [`maximize_linear_quadratic`].
#[derive(Debug, Clone)]
pub struct ConvexLpqcProblem {
    /// Linear objective coefficients.
    pub w: Vec<f64>,
    /// PSD quadratic form.
    pub quad: SymMatrix,
    /// Upper bound on `x' quad x`.
    pub quad_bound: f64,
    /// The equality constraint reads `simplex_scale * sum(x) = 1`.
    pub simplex_scale: f64,
    /// Index pairs forced equal (transitively merged).
    pub symmetry_pairs: Vec<(usize, usize)>,
}

/// Iteration caps and tolerances for the design solvers, kept in one record
/// so that every run of every experiment uses the same numbers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Cap on accelerated-projected-gradient steps per inner solve.
    pub inner_iters: usize,
    /// Cap on outer bisection steps over the dual multiplier.
    pub bisection_iters: usize,
    /// Relative slack allowed on the quadratic bound of a returned point.
    pub feas_rel_tol: f64,
    /// Gradient-mapping tolerance that ends an inner solve early.
    pub grad_tol: f64,
    /// A symmetric form is accepted as PSD if Cholesky succeeds after adding
    /// `psd_tol * max|diag|` to the diagonal.
    pub psd_tol: f64,
    /// Restart count for the sphere-constrained profile search.
    pub profile_restarts: usize,
    /// Iteration cap per restart of the profile search.
    pub profile_iters: usize,
}

/// The fixed solver configuration.
pub const SOLVER: SolverConfig = SolverConfig {
    inner_iters: 4000,
    bisection_iters: 96,
    feas_rel_tol: 1e-8,
    grad_tol: 1e-13,
    psd_tol: 1e-9,
    profile_restarts: 1000,
    profile_iters: 400,
};

/// Coordinates folded by symmetry group: index `g` carries `mult[g]` original
/// coordinates that share one value.
struct Folded {
    /// group id per original coordinate
    group_of: Vec<usize>,
    /// number of original coordinates per group
    mult: Vec<f64>,
    /// folded objective: sum of w over the group
    w: Vec<f64>,
    /// folded quadratic form
    quad: SymMatrix,
    /// required weighted sum: sum_g mult[g] * y[g] = target
    target: f64,
}

impl Folded {
    fn build(p: &ConvexLpqcProblem) -> Result<Folded> {
        let n = p.w.len();
        if p.quad.n() != n {
            return Err(Error::Shape(format!(
                "objective has {n} coordinates but the quadratic form is {0}x{0}",
                p.quad.n()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidInput("empty problem".into()));
        }
        if !(p.simplex_scale.is_finite() && p.simplex_scale > 0.0) {
            return Err(Error::InvalidInput(format!(
                "simplex_scale must be positive, got {}",
                p.simplex_scale
            )));
        }
        if !p.quad_bound.is_finite() || p.quad_bound < 0.0 {
            return Err(Error::InvalidInput(format!("quad_bound must be >= 0, got {}", p.quad_bound)));
        }
        if p.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("objective contains non-finite entries".into()));
        }

        // Union-find over the symmetry pairs.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(a, b) in &p.symmetry_pairs {
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!(
                    "symmetry pair ({a}, {b}) out of range for {n} coordinates"
                )));
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let mut group_of = vec![usize::MAX; n];
        let mut roots: Vec<usize> = Vec::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            let g = match roots.iter().position(|&x| x == r) {
                Some(g) => g,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            };
            group_of[i] = g;
        }
        let ng = roots.len();
        let mut mult = vec![0.0; ng];
        let mut w = vec![0.0; ng];
        for i in 0..n {
            mult[group_of[i]] += 1.0;
            w[group_of[i]] += p.w[i];
        }
        let mut quad = vec![vec![0.0; ng]; ng];
        for i in 0..n {
            for j in 0..n {
                quad[group_of[i]][group_of[j]] += p.quad[(i, j)];
            }
        }
        let quad = SymMatrix::from_fn(ng, |i, j| quad[i][j]);
        Ok(Folded { group_of, mult, w, quad, target: 1.0 / p.simplex_scale })
    }

    fn expand(&self, y: &[f64]) -> Vec<f64> {
        self.group_of.iter().map(|&g| y[g]).collect()
    }

    fn quad_value(&self, y: &[f64]) -> f64 {
        self.quad.quad_form(y).expect("folded dims agree")
    }

    fn obj(&self, y: &[f64]) -> f64 {
        dot(&self.w, y)
    }

    /// Exact projection onto `{ y >= 0, sum_g mult[g] y[g] = target }` in the
    /// multiplicity-weighted norm (which is the Euclidean norm of the
    /// unfolded vector). All active coordinates share one shift `tau`:
    /// `y[g] = max(z[g] - tau, 0)`.
    fn project_simplex(&self, z: &[f64]) -> Vec<f64> {
        let ng = z.len();
        let mut order: Vec<usize> = (0..ng).collect();
        order.sort_by(|&a, &b| z[b].partial_cmp(&z[a]).unwrap());
        let mut wsum = 0.0; // sum of mult over the active prefix
        let mut wzsum = 0.0; // weighted sum of z over the active prefix
        let mut tau = 0.0;
        for (k, &g) in order.iter().enumerate() {
            wsum += self.mult[g];
            wzsum += self.mult[g] * z[g];
            let cand = (wzsum - self.target) / wsum;
            let next = order.get(k + 1).map(|&h| z[h]);
            if z[g] > cand && next.map_or(true, |zn| zn <= cand) {
                tau = cand;
                break;
            }
            tau = cand; // all coordinates active
        }
        z.iter().map(|&v| (v - tau).max(0.0)).collect()
    }

    /// Flat point: every coordinate equal.
    fn flat(&self) -> Vec<f64> {
        let total: f64 = self.mult.iter().sum();
        vec![self.target / total; self.mult.len()]
    }

    /// Analytic solution for `nu = 0`: put the whole budget on the group with
    /// the best average objective coefficient.
    fn vertex(&self) -> Vec<f64> {
        let mut best = 0usize;
        let mut best_avg = f64::NEG_INFINITY;
        for g in 0..self.w.len() {
            let avg = self.w[g] / self.mult[g];
            if avg > best_avg {
                best_avg = avg;
                best = g;
            }
        }
        let mut y = vec![0.0; self.w.len()];
        y[best] = self.target / self.mult[best];
        y
    }

    /// Maximize `w·y − nu · y'Qy` over the weighted simplex by accelerated
    /// projected gradient (FISTA with adaptive restart), warm-started at `y0`.
    fn inner_solve(&self, nu: f64, y0: &[f64], lmax: f64, cfg: &SolverConfig) -> Vec<f64> {
        let lip = (2.0 * nu * lmax).max(1e-300);
        let step = 1.0 / (1.2 * lip);
        let mut y = self.project_simplex(y0);
        let mut y_prev = y.clone();
        let mut t_prev: f64 = 1.0;
        let scale = norm_inf(&self.w).max(1.0);
        for it in 0..cfg.inner_iters {
            let t = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
            let beta = (t_prev - 1.0) / t;
            let mut z: Vec<f64> = (0..y.len())
                .map(|i| y[i] + beta * (y[i] - y_prev[i]))
                .collect();
            // gradient of the concave objective at z
            let qz = self.quad.matvec(&z).expect("dims");
            for i in 0..z.len() {
                z[i] += step * (self.w[i] - 2.0 * nu * qz[i]);
            }
            let y_next = self.project_simplex(&z);
            // adaptive restart: fall back to plain gradient when the
            // extrapolation overshoots
            let f_next = self.obj(&y_next) - nu * self.quad_value(&y_next);
            let f_cur = self.obj(&y) - nu * self.quad_value(&y);
            let (y_next, t) = if f_next < f_cur {
                let qy = self.quad.matvec(&y).expect("dims");
                let plain: Vec<f64> = (0..y.len())
                    .map(|i| y[i] + step * (self.w[i] - 2.0 * nu * qy[i]))
                    .collect();
                (self.project_simplex(&plain), 1.0)
            } else {
                (y_next, t)
            };
            let move_norm: f64 = y_next
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            y_prev = y;
            y = y_next;
            t_prev = t;
            if move_norm <= cfg.grad_tol * scale * step.max(1.0) && it > 2 {
                break;
            }
        }
        y
    }

    /// Minimize the quadratic over the weighted simplex (objective zero,
    /// `nu = 1`); used for the feasibility certificate.
    fn min_quad(&self, lmax: f64, cfg: &SolverConfig) -> (Vec<f64>, f64) {
        let zero_w = Folded {
            group_of: self.group_of.clone(),
            mult: self.mult.clone(),
            w: vec![0.0; self.w.len()],
            quad: self.quad.clone(),
            target: self.target,
        };
        let y = zero_w.inner_solve(1.0, &self.flat(), lmax, cfg);
        let q = self.quad_value(&y);
        (y, q)
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solve the scaled-simplex / quadratic-ball / symmetry problem. Returns the
/// optimizer in original coordinates; errors with [`Error::Infeasible`] when
/// the quadratic bound is below the minimum achievable on the simplex.
pub fn maximize_linear_quadratic(p: &ConvexLpqcProblem) -> Result<Vec<f64>> {
    let cfg = &SOLVER;
    let f = Folded::build(p)?;

    // PSD validation on the folded form (the original form restricted to the
    // symmetry subspace): Cholesky with a tiny diagonal shift.
    let diag_scale = (0..f.quad.n()).fold(0.0f64, |m, i| m.max(f.quad[(i, i)].abs())).max(1e-300);
    if try_cholesky_shifted(&f.quad, cfg.psd_tol * diag_scale).is_none() {
        return Err(Error::InvalidInput(
            "quadratic form is not positive semidefinite within tolerance".into(),
        ));
    }
    let lmax = power_iteration_lmax(&f.quad, 128).max(1e-300);

    let rho = p.quad_bound;
    let abs_slack = 1e-12 * diag_scale * f.target * f.target;

    // Unconstrained-by-the-ball optimum: if it already satisfies the bound we
    // are done (covers W = 0 and generous bounds).
    let vertex = f.vertex();
    if f.quad_value(&vertex) <= rho * (1.0 + cfg.feas_rel_tol) + abs_slack {
        return Ok(f.expand(&vertex));
    }

    // Feasibility: the flat point is the cheap certificate; fall back to an
    // explicit minimization of the quadratic.
    let flat = f.flat();
    let q_flat = f.quad_value(&flat);
    let (y_min, _q_min) = if q_flat <= rho {
        (flat.clone(), q_flat)
    } else {
        let (y, q) = f.min_quad(lmax, cfg);
        if q > rho * (1.0 + cfg.feas_rel_tol) + abs_slack {
            return Err(Error::Infeasible {
                requested: rho,
                minimum: q,
                what: "quadratic bound".into(),
            });
        }
        (y, q)
    };

    // Outer search over the dual multiplier. quad(inner(nu)) decreases in nu;
    // find the boundary multiplier by doubling then bisection.
    let debug = std::env::var_os("QCQP_DEBUG").is_some();
    let mut best_y: Option<(f64, Vec<f64>)> = None;
    let mut consider = |y: &[f64], f: &Folded| {
        let q = f.quad_value(y);
        if debug {
            eprintln!("consider: obj={} quad={} rho={}", f.obj(y), q, rho);
        }
        if q <= rho * (1.0 + cfg.feas_rel_tol) + abs_slack {
            let obj = f.obj(y);
            if best_y.as_ref().map_or(true, |(b, _)| obj > *b) {
                best_y = Some((obj, y.to_vec()));
            }
        }
    };
    consider(&y_min, &f);

    let w_scale = norm_inf(&f.w).max(1e-300);
    let mut nu_lo = 0.0;
    let mut nu_hi = w_scale / (lmax * f.target).max(1e-300);
    let mut y_warm = y_min.clone();
    let mut found_hi = false;
    for _ in 0..cfg.bisection_iters {
        let y = f.inner_solve(nu_hi, &y_warm, lmax, cfg);
        consider(&y, &f);
        y_warm = y.clone();
        if f.quad_value(&y) <= rho {
            found_hi = true;
            break;
        }
        nu_lo = nu_hi;
        nu_hi *= 8.0;
    }
    if found_hi {
        for _ in 0..cfg.bisection_iters {
            if nu_hi - nu_lo <= 1e-12 * nu_hi {
                break;
            }
            let nu = if nu_lo > 0.0 && nu_hi / nu_lo > 4.0 {
                (nu_lo * nu_hi).sqrt()
            } else {
                0.5 * (nu_lo + nu_hi)
            };
            let y = f.inner_solve(nu, &y_warm, lmax, cfg);
            let q = f.quad_value(&y);
            consider(&y, &f);
            y_warm = y;
            if (q - rho).abs() <= 1e-11 * rho.max(1e-300) {
                break;
            }
            if q > rho {
                nu_lo = nu;
            } else {
                nu_hi = nu;
            }
        }
    }

    let (_, mut y) = best_y.ok_or_else(|| {
        Error::Numeric("dual search found no feasible point despite a feasibility certificate".into())
    })?;
    if debug {
        eprintln!("final pick: obj={} quad={}", f.obj(&y), f.quad_value(&y));
    }

    // Walk along the segment toward the quadratic minimizer if the accepted
    // point sits marginally outside the ball. q(theta) is convex in the blend
    // parameter with q(0) > rho >= q(1), so bisection finds the crossing.
    let q_y = f.quad_value(&y);
    if q_y > rho {
        let rho_target = rho * (1.0 - 1e-12);
        let blend = |theta: f64, y: &[f64]| -> Vec<f64> {
            y.iter().zip(&y_min).map(|(v, m)| v + theta * (m - v)).collect()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..128 {
            let mid = 0.5 * (lo + hi);
            if f.quad_value(&blend(mid, &y)) > rho_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        y = blend(hi, &y);
    }

    // Snap numerically-zero coordinates and restore the weighted sum exactly.
    let peak = norm_inf(&y);
    for v in y.iter_mut() {
        if *v < 1e-14 * peak {
            *v = 0.0;
        }
    }
    let y = f.project_simplex(&y);
    Ok(f.expand(&y))
}
