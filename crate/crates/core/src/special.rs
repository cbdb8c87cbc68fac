//! Special functions: the sine and cosine integrals Si/Ci.
//!
//! `Si(x) = ∫₀ˣ sin t / t dt` and `Ci(x) = γ + ln x + ∫₀ˣ (cos t − 1)/t dt`
//! appear in the closed form for the minimum self-similarity of a flat
//! spectrum, where arguments grow like the time–bandwidth product. The
//! implementation follows the classic split: Maclaurin series below 2 and a
//! complex continued fraction for the exponential integral above, which is
//! accurate to near machine precision on the whole positive axis.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_CUTOFF: f64 = 2.0;
const EPS: f64 = 1e-16;
const MAX_ITERS: usize = 200;

/// Compute `(Si(x), Ci(x))` for `x > 0`.
pub fn sin_cos_integrals(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("sin_cos_integrals requires x > 0, got {x}")));
    }
    if x <= SERIES_CUTOFF {
        series(x)
    } else {
        continued_fraction(x)
    }
}

fn series(x: f64) -> Result<(f64, f64)> {
    let x2 = x * x;
    // Si: sum of (-1)^k x^(2k+1) / ((2k+1)(2k+1)!)
    let mut si = x;
    let mut term = x;
    for k in 1..MAX_ITERS {
        let k = k as f64;
        term *= -x2 * (2.0 * k - 1.0) / ((2.0 * k + 1.0) * (2.0 * k + 1.0) * (2.0 * k));
        si += term;
        if term.abs() < EPS * si.abs() {
            break;
        }
    }
    // Ci: gamma + ln x + sum of (-1)^k x^(2k) / ((2k)(2k)!)
    let mut sum = 0.0;
    let mut term = 1.0; // becomes x^2/4 at k = 1
    for k in 1..MAX_ITERS {
        let k = k as f64;
        term *= -x2 * (2.0 * k - 2.0).max(1.0) / ((2.0 * k) * (2.0 * k) * (2.0 * k - 1.0));
        sum += term;
        if term.abs() < EPS * sum.abs().max(1e-300) {
            break;
        }
    }
    Ok((si, EULER_GAMMA + x.ln() + sum))
}

/// Evaluate `E1(ix)` by a modified-Lentz continued fraction and read Si/Ci
/// off its real and imaginary parts.
fn continued_fraction(x: f64) -> Result<(f64, f64)> {
    const FPMIN: f64 = 1e-300;
    let one = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / FPMIN, 0.0);
    let mut d = one / b;
    let mut h = d;
    let mut converged = false;
    for i in 2..=10_000usize {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += Complex64::new(2.0, 0.0);
        d = one / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - one).norm() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "continued fraction for Si/Ci did not converge at x = {x}"
        )));
    }
    h *= Complex64::new(x.cos(), -x.sin());
    Ok((std::f64::consts::FRAC_PI_2 + h.im, -h.re))
}
