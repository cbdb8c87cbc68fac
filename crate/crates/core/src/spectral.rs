//! Power spectral densities on a symmetric frequency grid, the finite-window
//! spectral kernel, rakeness between densities, and shaped-spectrum design.
//!
//! A unit-power real process observed for `T` seconds couples to a sensing
//! process through the nonnegative window kernel sin²(πTf)/(π²Tf²); the
//! average power one process rakes from the other is the double integral of
//! their densities against that kernel. Everything here operates on
//! piecewise-constant densities over 2n+1 equal cells spanning [-B, B]:
//! estimation ([`average_psd`]), evaluation ([`rakeness_between`]), the
//! admissible-budget bounds ([`r_min`] / [`r_max`]), and design
//! ([`SpectrumDesigner`]), which maximizes the power raked from a target
//! density subject to an upper bound `r·T` on the designed density's
//! self-rakeness (its alignment with an independent copy of itself).

use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::mat::SymMatrix;
use crate::qcqp::{maximize_linear_quadratic, ConvexLpqcProblem};
use crate::special::{sin_cos_integrals, EULER_GAMMA};
use crate::textio::{csv_line, fmt_g12, matrix_from_csv};
use crate::{Error, Result};

/// Absolute error target for one cell-pair kernel integral (scaled down
/// further when the integral's natural size T·Δf² is below one).
const CELL_QUAD_TOL: f64 = 1e-9;

/// Recursion budget for the adaptive cell quadrature.
const CELL_QUAD_DEPTH: u32 = 24;

fn check_bandwidth(bandwidth_hz: f64) -> Result<()> {
    if !bandwidth_hz.is_finite() || bandwidth_hz <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "bandwidth must be a positive frequency, got {bandwidth_hz}"
        )));
    }
    Ok(())
}

fn check_window(time_window_s: f64) -> Result<()> {
    if !time_window_s.is_finite() || time_window_s <= 0.0 {
        return Err(Error::Domain(format!(
            "observation window must be positive, got {time_window_s}"
        )));
    }
    Ok(())
}

/// Window kernel value at frequency `f_hz` for an observation of
/// `time_window_s` seconds: sin²(πTf)/(π²Tf²), with the removable
/// singularity filled in as T at f = 0. Nonnegative, peaks at T, first
/// zeros at ±1/T.
pub fn fejer_kernel(f_hz: f64, time_window_s: f64) -> Result<f64> {
    check_window(time_window_s)?;
    if !f_hz.is_finite() {
        return Err(Error::Domain(format!("frequency must be finite, got {f_hz}")));
    }
    Ok(fejer_value(f_hz, time_window_s))
}

/// Kernel evaluation with the window already validated.
fn fejer_value(f_hz: f64, t: f64) -> f64 {
    let x = std::f64::consts::PI * t * f_hz;
    let s = if x.abs() < 1e-4 {
        // sin(x)/x to double precision for small arguments
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    t * s * s
}

/// Unit-power, even power spectral density, piecewise constant over 2n+1
/// equal-width cells covering [-B, B].
///
/// Invariants enforced by every constructor: all cell values are finite and
/// nonnegative, values are even in frequency (cell j equals its mirror),
/// and the total power Δf·Σ values is exactly renormalized to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    bandwidth_hz: f64,
    values: Vec<f64>,
}

impl SpectralDensity {
    /// Builds a density from per-cell values that must already be even
    /// (within 1e-6 of their mirrors) and carry unit power (within 1e-6);
    /// both properties are then made exact.
    pub fn new(bandwidth_hz: f64, values: Vec<f64>) -> Result<Self> {
        Self::check_values(bandwidth_hz, &values)?;
        let n = values.len();
        let peak = values.iter().fold(0.0_f64, |m, v| m.max(*v));
        for j in 0..n / 2 {
            let gap = (values[j] - values[n - 1 - j]).abs();
            if gap > 1e-6 * peak {
                return Err(Error::InvalidInput(format!(
                    "density is not even: cells {j} and {} differ by {gap:.3e}",
                    n - 1 - j
                )));
            }
        }
        let delta_f = 2.0 * bandwidth_hz / n as f64;
        let mass = delta_f * values.iter().sum::<f64>();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "total power is {mass}, expected 1"
            )));
        }
        Ok(Self::exact(bandwidth_hz, values))
    }

    /// Builds a density from arbitrary nonnegative values: mirror cells are
    /// averaged and the result is rescaled to unit power. This is the
    /// constructor for estimator and solver outputs.
    pub fn normalized(bandwidth_hz: f64, values: Vec<f64>) -> Result<Self> {
        Self::check_values(bandwidth_hz, &values)?;
        Ok(Self::exact(bandwidth_hz, values))
    }

    /// The flat (white, maximally spread) density on [-B, B].
    pub fn flat(bandwidth_hz: f64, n_half: usize) -> Result<Self> {
        check_bandwidth(bandwidth_hz)?;
        let value = 1.0 / (2.0 * bandwidth_hz);
        Ok(Self {
            bandwidth_hz,
            values: vec![value; 2 * n_half + 1],
        })
    }

    fn check_values(bandwidth_hz: f64, values: &[f64]) -> Result<()> {
        check_bandwidth(bandwidth_hz)?;
        if values.is_empty() || values.len() % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "frequency grid needs an odd cell count, got {}",
                values.len()
            )));
        }
        for (j, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "cell {j} has invalid density {v}"
                )));
            }
        }
        if values.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidInput("density carries no power".into()));
        }
        Ok(())
    }

    /// Symmetrizes mirror cells and rescales to unit power exactly.
    /// Assumes `check_values` has passed.
    fn exact(bandwidth_hz: f64, mut values: Vec<f64>) -> Self {
        let n = values.len();
        for j in 0..n / 2 {
            let mean = 0.5 * (values[j] + values[n - 1 - j]);
            values[j] = mean;
            values[n - 1 - j] = mean;
        }
        let delta_f = 2.0 * bandwidth_hz / n as f64;
        let mass = delta_f * values.iter().sum::<f64>();
        for v in &mut values {
            *v /= mass;
        }
        Self {
            bandwidth_hz,
            values,
        }
    }

    /// Band edge B in Hz; the density lives on [-B, B].
    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    /// Grid half-size n; the grid has 2n+1 cells.
    pub fn n_half(&self) -> usize {
        self.values.len() / 2
    }

    /// Total cell count 2n+1.
    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    /// Cell width Δf = 2B/(2n+1).
    pub fn delta_f(&self) -> f64 {
        2.0 * self.bandwidth_hz / self.values.len() as f64
    }

    /// Per-cell density values ordered by ascending center frequency.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Center frequency of cell `cell` (0-based from the lowest cell).
    pub fn f_center(&self, cell: usize) -> f64 {
        (cell as f64 - self.n_half() as f64) * self.delta_f()
    }

    /// Δf·Σ values; exactly 1 up to rounding by construction.
    pub fn total_power(&self) -> f64 {
        self.delta_f() * self.values.iter().sum::<f64>()
    }

    /// Re-grids the piecewise-constant density onto a 2·`n_half`+1-cell grid
    /// over the same band by exact cell averaging (mass-preserving).
    pub fn resample(&self, n_half: usize) -> Self {
        let n_new = 2 * n_half + 1;
        if n_new == self.values.len() {
            return self.clone();
        }
        let b = self.bandwidth_hz;
        let delta_new = 2.0 * b / n_new as f64;
        let mut cells = vec![0.0; n_new];
        for (k, v) in self.values.iter().enumerate() {
            let lo = -b + k as f64 * self.delta_f();
            spread_mass(&mut cells, b, delta_new, lo, lo + self.delta_f(), v * self.delta_f());
        }
        for c in &mut cells {
            *c /= delta_new;
        }
        Self::exact(b, cells)
    }

    /// Serializes as CSV with header `f_center_hz,psd`, rows ascending in
    /// frequency, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("f_center_hz,psd\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&csv_line(&[fmt_g12(self.f_center(j)), fmt_g12(*v)]));
        }
        out
    }

    /// Parses the CSV form written by [`to_csv`](Self::to_csv). Needs at
    /// least two rows to recover the cell width (and hence the band edge).
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = matrix_from_csv(text, true)?;
        if rows.len() < 2 {
            return Err(Error::InvalidInput(
                "density table needs at least two rows to define the grid".into(),
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != 2 {
                return Err(Error::InvalidInput(format!(
                    "density row {i} has {} fields, expected f_center_hz,psd",
                    row.len()
                )));
            }
        }
        let delta_f = rows[1][0] - rows[0][0];
        if !(delta_f > 0.0) {
            return Err(Error::InvalidInput(
                "density rows must ascend in frequency".into(),
            ));
        }
        for pair in rows.windows(2) {
            if ((pair[1][0] - pair[0][0]) - delta_f).abs() > 1e-6 * delta_f {
                return Err(Error::InvalidInput(
                    "density grid is not uniformly spaced".into(),
                ));
            }
        }
        if (rows[0][0] + rows[rows.len() - 1][0]).abs() > 1e-6 * delta_f {
            return Err(Error::InvalidInput(
                "density grid is not centered on zero frequency".into(),
            ));
        }
        let bandwidth = 0.5 * delta_f * rows.len() as f64;
        Self::new(bandwidth, rows.iter().map(|r| r[1]).collect())
    }
}

/// Adds `mass` spread uniformly over [lo, hi] into equal-width cells
/// covering [-b, b], clipping the part outside the band.
fn spread_mass(cells: &mut [f64], b: f64, delta_f: f64, lo: f64, hi: f64, mass: f64) {
    let lo_c = lo.max(-b);
    let hi_c = hi.min(b);
    if hi_c <= lo_c || mass <= 0.0 {
        return;
    }
    let density = mass / (hi - lo);
    let k_lo = ((lo_c + b) / delta_f).floor().max(0.0) as usize;
    let k_hi = (((hi_c + b) / delta_f).ceil() as usize).min(cells.len());
    for k in k_lo..k_hi {
        let cell_lo = -b + k as f64 * delta_f;
        let cell_hi = cell_lo + delta_f;
        let overlap = hi_c.min(cell_hi) - lo_c.max(cell_lo);
        if overlap > 0.0 {
            cells[k] += density * overlap;
        }
    }
}

/// Nodes and weights of the `order`-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    assert!(order >= 2, "quadrature order must be at least 2");
    let n = order as f64;
    let mut out = vec![(0.0, 0.0); order];
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        let weight = 2.0 / ((1.0 - x * x) * d * d);
        out[i] = (-x, weight);
        out[order - 1 - i] = (x, weight);
    }
    out
}

/// Legendre polynomial P_n and its derivative at `x` via the three-term
/// recurrence.
fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    for k in 2..=order {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * cur - (kf - 1.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    let d = order as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, d)
}

fn gl16() -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    CACHE.get_or_init(|| gauss_legendre(16))
}

fn gl32() -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    CACHE.get_or_init(|| gauss_legendre(32))
}

fn fixed_gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, nodes: &[(f64, f64)]) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for &(x, w) in nodes {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// 16-node Gauss-Legendre integral of `f` over [a, b], upgraded to 32 nodes
/// and split recursively until the 16-vs-32 residual drops below `tol`.
fn adaptive_gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let coarse = fixed_gl(f, a, b, gl16());
    let fine = fixed_gl(f, a, b, gl32());
    let residual = (coarse - fine).abs();
    if residual <= tol.max(1e-14 * fine.abs()) {
        return Ok(fine);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "cell quadrature stalled on [{a:.6e}, {b:.6e}]: residual {residual:.3e} above {tol:.3e}"
        )));
    }
    let mid = 0.5 * (a + b);
    Ok(adaptive_gl(f, a, mid, 0.5 * tol, depth - 1)?
        + adaptive_gl(f, mid, b, 0.5 * tol, depth - 1)?)
}

/// Kernel integrals over cell pairs, one entry per cell offset d: on a
/// uniform grid the double integral of the kernel over F_j × F_k depends
/// only on d = |j - k|, and the difference-coordinate substitution reduces
/// it to a single integral of the kernel against a tent of half-width Δf
/// centered at d·Δf. The tent's kink splits the range in two.
fn kernel_cell_offsets(n_cells: usize, delta_f: f64, t: f64) -> Result<Vec<f64>> {
    let tol = CELL_QUAD_TOL * (t * delta_f * delta_f).min(1.0);
    let mut out = Vec::with_capacity(n_cells);
    for d in 0..n_cells {
        let shift = d as f64 * delta_f;
        let left = adaptive_gl(
            &|u| (delta_f + u) * fejer_value(shift + u, t),
            -delta_f,
            0.0,
            0.5 * tol,
            CELL_QUAD_DEPTH,
        )?;
        let right = adaptive_gl(
            &|u| (delta_f - u) * fejer_value(shift + u, t),
            0.0,
            delta_f,
            0.5 * tol,
            CELL_QUAD_DEPTH,
        )?;
        out.push(left + right);
    }
    Ok(out)
}

/// Grid reduction of the raking objective and the self-rakeness form:
/// returns the per-cell weights w (w_j = Σ_k a_k · ∬_{F_j×F_k} kernel, the
/// power cell j rakes from the target density) and the cell-pair kernel
/// matrix W (W_{jk} = ∬_{F_j×F_k} kernel), which is symmetric positive
/// semidefinite.
pub fn discretize(
    a_hat: &SpectralDensity,
    time_window_s: f64,
) -> Result<(Vec<f64>, SymMatrix)> {
    check_window(time_window_s)?;
    let n = a_hat.n_cells();
    let offsets = kernel_cell_offsets(n, a_hat.delta_f(), time_window_s)?;
    let quad = SymMatrix::from_fn(n, |j, k| offsets[j.abs_diff(k)]);
    let a = a_hat.values();
    let weights = (0..n)
        .map(|j| (0..n).map(|k| a[k] * offsets[j.abs_diff(k)]).sum())
        .collect();
    Ok((weights, quad))
}

/// Average power the `alpha` process rakes from the `beta` process over a
/// window of `time_window_s` seconds: the double integral of the two
/// densities against the window kernel. Symmetric in its arguments and
/// nonnegative; both densities must share one grid.
pub fn rakeness_between(
    alpha: &SpectralDensity,
    beta: &SpectralDensity,
    time_window_s: f64,
) -> Result<f64> {
    check_window(time_window_s)?;
    let band_gap = (alpha.bandwidth_hz - beta.bandwidth_hz).abs();
    if band_gap > 1e-9 * alpha.bandwidth_hz || alpha.n_cells() != beta.n_cells() {
        return Err(Error::InvalidInput(format!(
            "grid mismatch: {} Hz / {} cells vs {} Hz / {} cells",
            alpha.bandwidth_hz,
            alpha.n_cells(),
            beta.bandwidth_hz,
            beta.n_cells()
        )));
    }
    let n = alpha.n_cells();
    let offsets = kernel_cell_offsets(n, alpha.delta_f(), time_window_s)?;
    let a = alpha.values();
    let b = beta.values();
    let mut rho = offsets[0] * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for d in 1..n {
        let mut corr = 0.0;
        for j in 0..n - d {
            corr += a[j] * b[j + d] + a[j + d] * b[j];
        }
        rho += offsets[d] * corr;
    }
    Ok(rho)
}

/// Smallest admissible self-rakeness budget for band-time product c = B·T:
/// the normalized self-rakeness of the flat density on [-B, B]. Closed form
/// in terms of the sine and cosine integrals; c·r_min(c) grows monotonically
/// toward 1/2.
pub fn r_min(c: f64) -> Result<f64> {
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::Domain(format!(
            "band-time product must be positive, got {c}"
        )));
    }
    let x = 4.0 * std::f64::consts::PI * c;
    if x < 1e-3 {
        // Small-argument limit of the closed form below; evaluating it
        // directly would cancel ln(x) + γ against the cosine integral.
        return Ok(1.0 - x * x / 72.0);
    }
    let (si, ci) = sin_cos_integrals(x)?;
    let numerator = ci + x * si - x.ln() + x.cos() - EULER_GAMMA - 1.0;
    Ok(numerator / (0.25 * x * x))
}

/// Largest admissible self-rakeness budget: 1 exactly, attained by a
/// constant (fully aligned) process. The window kernel never exceeds its
/// zero-offset value T, so no unit-power density's self-rakeness can top T.
pub fn r_max() -> f64 {
    1.0
}

/// One shaped-spectrum design request: the target density whose power the
/// sensing process should rake, the observation window, and the
/// self-rakeness budget r, which must lie in (r_min(B·T), 1].
#[derive(Debug, Clone)]
pub struct SpectralDesignInput {
    pub a_hat: SpectralDensity,
    pub time_window_s: f64,
    pub r: f64,
}

impl SpectralDesignInput {
    /// Band-time product B·T controlling the admissible range of `r`.
    pub fn c(&self) -> f64 {
        self.a_hat.bandwidth_hz() * self.time_window_s
    }
}

/// Reusable design context: runs the kernel discretization for one
/// (target, window) pair once, then solves for any number of budget values,
/// so an r-sweep does not repeat the cell integrals.
#[derive(Debug, Clone)]
pub struct SpectrumDesigner {
    a_hat: SpectralDensity,
    time_window_s: f64,
    weights: Vec<f64>,
    quad: SymMatrix,
}

impl SpectrumDesigner {
    pub fn new(a_hat: SpectralDensity, time_window_s: f64) -> Result<Self> {
        let (weights, quad) = discretize(&a_hat, time_window_s)?;
        Ok(Self {
            a_hat,
            time_window_s,
            weights,
            quad,
        })
    }

    /// The design target on the design grid.
    pub fn a_hat(&self) -> &SpectralDensity {
        &self.a_hat
    }

    /// Band-time product B·T of this design context.
    pub fn c(&self) -> f64 {
        self.a_hat.bandwidth_hz() * self.time_window_s
    }

    /// Power a candidate density rakes from the design target — the
    /// objective that [`design`](Self::design) maximizes.
    pub fn objective(&self, b: &SpectralDensity) -> Result<f64> {
        self.check_grid(b)?;
        Ok(self
            .weights
            .iter()
            .zip(b.values())
            .map(|(w, v)| w * v)
            .sum())
    }

    /// Normalized self-rakeness (self-rakeness divided by the window length)
    /// of a candidate density on this context's grid.
    pub fn self_rakeness_ratio(&self, b: &SpectralDensity) -> Result<f64> {
        self.check_grid(b)?;
        Ok(self.quad.quad_form(b.values())? / self.time_window_s)
    }

    fn check_grid(&self, b: &SpectralDensity) -> Result<()> {
        if b.n_cells() != self.a_hat.n_cells()
            || (b.bandwidth_hz() - self.a_hat.bandwidth_hz()).abs()
                > 1e-9 * self.a_hat.bandwidth_hz()
        {
            return Err(Error::InvalidInput(
                "candidate density is not on the design grid".into(),
            ));
        }
        Ok(())
    }

    /// Designs the density maximizing the power raked from the target
    /// subject to self-rakeness ≤ r·T, unit power, nonnegativity, and even
    /// symmetry. Budgets at or below the flat-spectrum floor r_min are
    /// rejected as infeasible; budgets above 1 are out of the admissible
    /// range.
    pub fn design(&self, r: f64) -> Result<SpectralDensity> {
        let floor = r_min(self.c())?;
        if !r.is_finite() || r > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "self-rakeness budget r = {r} must lie in (r_min = {floor:.6}, 1]"
            )));
        }
        if r <= floor * (1.0 + 1e-6) {
            return Err(Error::Infeasible {
                requested: r,
                minimum: floor,
                what: "self-rakeness budget r (flat-spectrum floor)".into(),
            });
        }
        let n = self.a_hat.n_cells();
        let problem = ConvexLpqcProblem {
            w: self.weights.clone(),
            quad: self.quad.clone(),
            quad_bound: r * self.time_window_s,
            simplex_scale: self.a_hat.delta_f(),
            symmetry_pairs: (0..self.a_hat.n_half()).map(|j| (j, n - 1 - j)).collect(),
        };
        let solution = maximize_linear_quadratic(&problem)?;
        SpectralDensity::normalized(self.a_hat.bandwidth_hz(), solution)
    }
}

/// One-shot design: resamples the target onto a 2·`n_half`+1-cell grid and
/// solves for the requested budget.
pub fn design_spectrum(input: &SpectralDesignInput, n_half: usize) -> Result<SpectralDensity> {
    let designer = SpectrumDesigner::new(input.a_hat.resample(n_half), input.time_window_s)?;
    designer.design(input.r)
}

/// Smallest grid half-size whose cell width is at most 1/(4T): four cells
/// per main lobe of the window kernel.
pub fn default_n_half(bandwidth_hz: f64, time_window_s: f64) -> usize {
    let cells_needed = 8.0 * bandwidth_hz * time_window_s;
    ((cells_needed - 1.0) / 2.0).ceil().max(1.0) as usize
}

/// Average of Hann-windowed per-record periodograms, re-gridded onto a
/// 2·`n_half`+1-cell density over [-`bandwidth_hz`, `bandwidth_hz`] by cell
/// averaging and normalized to unit power. Records are taken whole (no
/// segmenting or overlap) and must share one length; `sample_rate_hz` sets
/// the raw bin width.
pub fn average_psd(
    signals: &[Vec<f64>],
    sample_rate_hz: f64,
    bandwidth_hz: f64,
    n_half: usize,
) -> Result<SpectralDensity> {
    if signals.is_empty() {
        return Err(Error::InvalidInput(
            "need at least one record to estimate a density".into(),
        ));
    }
    if !sample_rate_hz.is_finite() || sample_rate_hz <= 0.0 {
        return Err(Error::Domain(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    check_bandwidth(bandwidth_hz)?;
    if bandwidth_hz > 0.5 * sample_rate_hz * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "band edge {bandwidth_hz} Hz is beyond the Nyquist frequency {}",
            0.5 * sample_rate_hz
        )));
    }
    let len = signals[0].len();
    if len < 2 {
        return Err(Error::InvalidInput(format!(
            "records of length {len} are too short for spectral estimation"
        )));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let window: Vec<f64> = (0..len)
        .map(|k| 0.5 * (1.0 - (two_pi * k as f64 / len as f64).cos()))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(len);
    let mut mean = vec![0.0; len];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (idx, s) in signals.iter().enumerate() {
        if s.len() != len {
            return Err(Error::Shape(format!(
                "record {idx} has length {}, expected {len}",
                s.len()
            )));
        }
        for (slot, (v, w)) in buf.iter_mut().zip(s.iter().zip(&window)) {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "record {idx} contains a non-finite sample"
                )));
            }
            *slot = Complex64::new(v * w, 0.0);
        }
        fft.process(&mut buf);
        for (m, c) in mean.iter_mut().zip(&buf) {
            *m += c.norm_sqr();
        }
    }
    // Each bin's energy is spread uniformly over its fs/len-wide interval;
    // the final normalization absorbs all constant scale factors.
    let n_cells = 2 * n_half + 1;
    let delta_f = 2.0 * bandwidth_hz / n_cells as f64;
    let bin_width = sample_rate_hz / len as f64;
    let mut cells = vec![0.0; n_cells];
    for (k, m) in mean.iter().enumerate() {
        let signed = if 2 * k <= len {
            k as f64
        } else {
            k as f64 - len as f64
        };
        let f = signed * bin_width;
        spread_mass(
            &mut cells,
            bandwidth_hz,
            delta_f,
            f - 0.5 * bin_width,
            f + 0.5 * bin_width,
            *m,
        );
    }
    SpectralDensity::normalized(bandwidth_hz, cells)
}
