//! Small statistics helpers for result tables: sample moments and paired
//! two-sided confidence intervals on a mean difference.

use rakeness_core::{Error, Result};

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 normalization); 0 for fewer than two
/// samples.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Two-sided 95% confidence interval for the mean of paired differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedCi {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl PairedCi {
    /// True when the whole interval lies strictly above zero.
    pub fn excludes_zero_above(&self) -> bool {
        self.lo > 0.0
    }
}

/// 97.5% quantile of Student's t with `dof` degrees of freedom, by table
/// lookup with reciprocal-dof interpolation; exact entries for the usual
/// published table, 1.959964 asymptotically.
pub fn t_975(dof: usize) -> f64 {
    const TABLE: [(f64, f64); 18] = [
        (1.0, 12.7062),
        (2.0, 4.3027),
        (3.0, 3.1824),
        (4.0, 2.7764),
        (5.0, 2.5706),
        (6.0, 2.4469),
        (7.0, 2.3646),
        (8.0, 2.3060),
        (9.0, 2.2622),
        (10.0, 2.2281),
        (12.0, 2.1788),
        (15.0, 2.1314),
        (20.0, 2.0860),
        (30.0, 2.0423),
        (40.0, 2.0211),
        (60.0, 2.0003),
        (120.0, 1.9799),
        (1e18, 1.959964),
    ];
    let d = dof.max(1) as f64;
    let x = 1.0 / d;
    for w in TABLE.windows(2) {
        let (d_hi, t_hi) = w[0];
        let (d_lo, t_lo) = w[1];
        if d >= d_hi && d <= d_lo {
            // Interpolate linearly in 1/dof, where t is nearly affine.
            let x_hi = 1.0 / d_hi;
            let x_lo = 1.0 / d_lo;
            let f = (x - x_lo) / (x_hi - x_lo);
            return t_lo + f * (t_hi - t_lo);
        }
    }
    TABLE[0].1
}

/// Paired two-sided 95% confidence interval for `mean(a - b)`.
pub fn paired_ci_95(a: &[f64], b: &[f64]) -> Result<PairedCi> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "paired sample lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two pairs for an interval".into(),
        ));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mu = mean(&d);
    let half = t_975(d.len() - 1) * sample_std(&d) / (d.len() as f64).sqrt();
    Ok(PairedCi {
        mean: mu,
        lo: mu - half,
        hi: mu + half,
        n: d.len(),
    })
}
