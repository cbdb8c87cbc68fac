//! Projection-waveform synthesis with prescribed second-order statistics:
//! i.i.d. antipodal chips, stationary antipodal sequences whose spectrum
//! tracks a target density, Gaussian vectors with a prescribed covariance,
//! and antipodal vectors whose sign-correlation tracks a designed
//! correlation matrix.
//!
//! Antipodal shaping works by the arcsine law: the sign of a stationary
//! Gaussian sequence with autocorrelation C_g has autocorrelation
//! (2/π)·arcsin(C_g), so pre-distorting the target correlation C into
//! C_g(τ) = sin(π·C(τ)/2) makes the signs land exactly on C. The Gaussian
//! carrier is synthesized by circulant embedding of the lag covariance
//! (with eigenvalue clamping), falling back to an eigendecomposition of the
//! Toeplitz covariance when the embedding is materially indefinite.

use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::mat::{sym_eig, Mat, SymMatrix};
use crate::rng::rng;
use crate::spectral::SpectralDensity;
use crate::{Error, Result};

/// Relative clamped-away eigenvalue mass above which the circulant
/// embedding is considered materially indefinite.
const EMBED_NEG_TOL: f64 = 1e-9;

/// Size cap for the exact Toeplitz-eigendecomposition fallback.
const TOEPLITZ_FALLBACK_MAX: usize = 600;

/// One modulation sequence. In antipodal mode every chip is exactly ±1
/// (so the per-chip energy constraint holds by construction).
#[derive(Debug, Clone, PartialEq)]
pub struct ChipSequence {
    pub chips: Vec<f64>,
}

impl ChipSequence {
    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    /// One CSV row of ±1 integers.
    pub fn to_csv_row(&self) -> String {
        let fields: Vec<String> = self.chips.iter().map(|c| format!("{}", *c as i64)).collect();
        crate::textio::csv_line(&fields)
    }
}

fn sign_chip(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Independent equiprobable ±1 chips, deterministic per seed.
pub fn iid_antipodal(s: usize, seed: u64) -> Result<ChipSequence> {
    if s == 0 {
        return Err(Error::InvalidInput("chip count must be positive".into()));
    }
    let mut r = rng(seed);
    let chips = (0..s)
        .map(|_| if rand::Rng::random::<bool>(&mut r) { 1.0 } else { -1.0 })
        .collect();
    Ok(ChipSequence { chips })
}

/// Autocorrelation at lag `tau_s` seconds of the process with the given
/// density: the cosine transform of the piecewise-constant density,
/// integrated cell by cell. Equals 1 at lag zero (unit power).
pub fn correlation_at(target: &SpectralDensity, tau_s: f64) -> f64 {
    let df = target.delta_f();
    let x = std::f64::consts::PI * df * tau_s;
    let sinc = if x.abs() < 1e-8 { 1.0 } else { x.sin() / x };
    let two_pi_tau = 2.0 * std::f64::consts::PI * tau_s;
    let mut acc = 0.0;
    for (j, v) in target.values().iter().enumerate() {
        acc += v * (two_pi_tau * target.f_center(j)).cos();
    }
    acc * df * sinc
}

enum GaussianCarrier {
    /// Spectral square root of the circulant embedding, ready for one
    /// inverse pass per draw.
    Circulant {
        root: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
        len: usize,
    },
    /// Explicit matrix square root of the S×S Toeplitz covariance.
    Toeplitz { root: Mat },
}

/// Reusable generator of stationary antipodal sequences matching a target
/// density: the lag covariance and its square root are computed once, and
/// each [`draw`](Self::draw) costs one FFT (or one matrix-vector product on
/// the fallback path).
pub struct StationaryAntipodalSampler {
    carrier: GaussianCarrier,
    s: usize,
}

impl StationaryAntipodalSampler {
    pub fn new(target: &SpectralDensity, s: usize, chip_rate_hz: f64) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidInput("chip count must be positive".into()));
        }
        if !chip_rate_hz.is_finite() || chip_rate_hz <= 0.0 {
            return Err(Error::Domain(format!(
                "chip rate must be positive, got {chip_rate_hz}"
            )));
        }
        if chip_rate_hz < 2.0 * target.bandwidth_hz() * (1.0 - 1e-12) {
            return Err(Error::InvalidInput(format!(
                "chip rate {chip_rate_hz} Hz cannot carry a band edge of {} Hz",
                target.bandwidth_hz()
            )));
        }
        let embed_len = (2 * (s.max(2) - 1)).next_power_of_two();
        // pre-distorted lag covariance out to half the embedding length
        let mut lags = Vec::with_capacity(embed_len / 2 + 1);
        for k in 0..=embed_len / 2 {
            let c = correlation_at(target, k as f64 / chip_rate_hz);
            if c.abs() > 1.0 + 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "normalized target correlation reaches {c} at lag {k}"
                )));
            }
            lags.push((std::f64::consts::FRAC_PI_2 * c.clamp(-1.0, 1.0)).sin());
        }

        // circulant embedding: eigenvalues are the FFT of the symmetrized
        // lag sequence
        let mut buf: Vec<Complex64> = (0..embed_len)
            .map(|j| Complex64::new(lags[j.min(embed_len - j)], 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(embed_len);
        fft.process(&mut buf);
        let mut neg = 0.0;
        let mut total = 0.0;
        for c in &buf {
            neg += c.re.min(0.0).abs();
            total += c.re.abs();
        }
        if total > 0.0 && neg / total > EMBED_NEG_TOL && s <= TOEPLITZ_FALLBACK_MAX {
            // materially indefinite embedding on a small problem: use the
            // exact covariance square root instead
            let cov = SymMatrix::from_fn(s, |i, j| lags[i.abs_diff(j)]);
            let eig = sym_eig(&cov)?;
            let root = Mat::from_fn(s, s, |i, k| {
                eig.vectors[(i, k)] * eig.values[k].max(0.0).sqrt()
            });
            return Ok(Self {
                carrier: GaussianCarrier::Toeplitz { root },
                s,
            });
        }
        let root: Vec<f64> = buf.iter().map(|c| c.re.max(0.0).sqrt()).collect();
        Ok(Self {
            carrier: GaussianCarrier::Circulant {
                root,
                fft,
                len: embed_len,
            },
            s,
        })
    }

    /// Signs of one Gaussian carrier realization; deterministic per seed.
    pub fn draw(&self, seed: u64) -> ChipSequence {
        let mut r = rng(seed);
        let gaussian = match &self.carrier {
            GaussianCarrier::Circulant { root, fft, len } => {
                let scale = 1.0 / (*len as f64).sqrt();
                let mut buf: Vec<Complex64> = root
                    .iter()
                    .map(|sq| {
                        let a: f64 = StandardNormal.sample(&mut r);
                        let b: f64 = StandardNormal.sample(&mut r);
                        Complex64::new(sq * a, sq * b)
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..self.s].iter().map(|c| c.re * scale).collect::<Vec<f64>>()
            }
            GaussianCarrier::Toeplitz { root } => {
                let z: Vec<f64> = (0..self.s).map(|_| StandardNormal.sample(&mut r)).collect();
                root.matvec(&z).expect("square root has matching size")
            }
        };
        ChipSequence {
            chips: gaussian.iter().map(|g| sign_chip(*g)).collect(),
        }
    }
}

/// One stationary antipodal sequence whose spectrum tracks `target`.
/// Convenience wrapper over [`StationaryAntipodalSampler`] for single
/// draws.
pub fn antipodal_stationary(
    target: &SpectralDensity,
    s: usize,
    chip_rate_hz: f64,
    seed: u64,
) -> Result<ChipSequence> {
    Ok(StationaryAntipodalSampler::new(target, s, chip_rate_hz)?.draw(seed))
}

/// Reusable generator of zero-mean Gaussian vectors with covariance `B`:
/// the eigendecomposition square root is computed once.
pub struct CorrelatedGaussianSampler {
    root: Mat,
}

impl CorrelatedGaussianSampler {
    pub fn new(covariance: &SymMatrix) -> Result<Self> {
        let eig = sym_eig(covariance)?;
        let scale = eig.values.first().copied().unwrap_or(0.0).abs();
        for v in &eig.values {
            if *v < -1e-8 * scale.max(1e-300) {
                return Err(Error::InvalidInput(format!(
                    "covariance is not positive semidefinite (eigenvalue {v:.3e})"
                )));
            }
        }
        let n = covariance.n();
        let root = Mat::from_fn(n, n, |i, k| {
            eig.vectors[(i, k)] * eig.values[k].max(0.0).sqrt()
        });
        Ok(Self { root })
    }

    pub fn dim(&self) -> usize {
        self.root.rows()
    }

    pub fn draw(&self, seed: u64) -> Vec<f64> {
        let mut r = rng(seed);
        let z: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(&mut r)).collect();
        self.root.matvec(&z).expect("square root has matching size")
    }
}

/// One zero-mean Gaussian vector with covariance `B`, deterministic per
/// seed.
pub fn gaussian_correlated(covariance: &SymMatrix, seed: u64) -> Result<Vec<f64>> {
    Ok(CorrelatedGaussianSampler::new(covariance)?.draw(seed))
}

/// Reusable generator of antipodal vectors whose sign correlation tracks a
/// trace-one correlation matrix: the matrix is rescaled to unit diagonal,
/// pre-distorted elementwise, repaired to positive semidefinite, and rooted
/// once. Coordinates with (numerically) zero variance emit independent ±1.
pub struct AntipodalCorrelationSampler {
    gaussian: CorrelatedGaussianSampler,
    /// map from live coordinate order to original index, None = dead
    live: Vec<Option<usize>>,
}

impl AntipodalCorrelationSampler {
    pub fn new(correlation: &SymMatrix) -> Result<Self> {
        let n = correlation.n();
        if n == 0 {
            return Err(Error::InvalidInput("empty correlation matrix".into()));
        }
        let diag: Vec<f64> = (0..n).map(|i| correlation[(i, i)]).collect();
        let live_idx: Vec<usize> = (0..n).filter(|&i| diag[i] > 1e-9).collect();
        let live: Vec<Option<usize>> = (0..n)
            .map(|i| if diag[i] > 1e-9 { Some(i) } else { None })
            .collect();
        if live_idx.is_empty() {
            return Err(Error::InvalidInput(
                "correlation matrix has an all-zero diagonal".into(),
            ));
        }
        let unit = SymMatrix::from_fn(live_idx.len(), |a, b| {
            let (i, j) = (live_idx[a], live_idx[b]);
            let c = correlation[(i, j)] / (diag[i] * diag[j]).sqrt();
            (std::f64::consts::FRAC_PI_2 * c.clamp(-1.0, 1.0)).sin()
        });
        let repaired = crate::mat::project_psd(&unit)?;
        Ok(Self {
            gaussian: CorrelatedGaussianSampler::new(&repaired)?,
            live,
        })
    }

    pub fn draw(&self, seed: u64) -> ChipSequence {
        let carrier = self.gaussian.draw(seed);
        let mut r = rng(crate::rng::substream(seed, u64::MAX));
        let mut next_live = 0;
        let chips = self
            .live
            .iter()
            .map(|slot| match slot {
                Some(_) => {
                    let c = sign_chip(carrier[next_live]);
                    next_live += 1;
                    c
                }
                None => {
                    if rand::Rng::random::<bool>(&mut r) {
                        1.0
                    } else {
                        -1.0
                    }
                }
            })
            .collect();
        ChipSequence { chips }
    }
}

/// One antipodal vector whose sign correlation tracks `correlation`.
pub fn antipodal_from_correlation(correlation: &SymMatrix, seed: u64) -> Result<ChipSequence> {
    Ok(AntipodalCorrelationSampler::new(correlation)?.draw(seed))
}
