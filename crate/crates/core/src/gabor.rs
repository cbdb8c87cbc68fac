//! Gabor-atom dictionary for sparse coding of one-second records.
//!
//! An atom is a Gaussian-windowed cosine
//!
//! ```text
//! g(t) = s^{-1/2} · exp(-π ((t - u) / s)²) · cos(v t + w)
//! ```
//!
//! sampled on an `n`-point grid covering the centered second `[-1/2, 1/2)`
//! and rescaled to unit Euclidean norm. The parameter grid crosses 13
//! log-spaced scales `s`, 13 evenly spaced centers `u`, three modulation
//! frequencies `v` and two phases `w`. Identically-zero candidates are
//! dropped, near-duplicates (coherence above [`DUPLICATE_COHERENCE`]) are
//! pruned keeping the earlier atom, and the most mutually redundant of the
//! survivors are then removed one at a time until exactly
//! [`GABOR_ATOM_BUDGET`] columns remain, so the dictionary size is a fixed
//! dimensional budget rather than an accident of the grid.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::mat::Mat;

/// Number of atoms every built dictionary carries.
pub const GABOR_ATOM_BUDGET: usize = 507;

/// Coherence above which two grid candidates count as duplicates.
pub const DUPLICATE_COHERENCE: f64 = 0.999;

const SCALE_COUNT: usize = 13;
const SCALE_MIN_S: f64 = 0.02;
const SCALE_MAX_S: f64 = 0.5;
const CENTER_COUNT: usize = 13;
const CENTER_SPAN_S: f64 = 0.45;
const FREQS_HZ: [f64; 3] = [0.0, 5.0, 15.0];
const PHASES_RAD: [f64; 2] = [0.0, FRAC_PI_2];

/// Generating parameters of one dictionary column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborAtom {
    /// Envelope scale `s` in seconds.
    pub scale_s: f64,
    /// Envelope center `u` in seconds, relative to the record midpoint.
    pub center_s: f64,
    /// Modulation pulsation `v` in rad/s.
    pub freq_rad_s: f64,
    /// Modulation phase `w` in radians.
    pub phase_rad: f64,
}

/// A bank of unit-norm Gabor atoms sampled on a common time grid.
#[derive(Debug, Clone)]
pub struct GaborDictionary {
    /// `n × n_atoms` matrix whose columns are the atoms.
    pub atoms: Mat,
    /// Generating parameters, one entry per column of `atoms`.
    pub params: Vec<GaborAtom>,
}

impl GaborDictionary {
    /// Number of atoms (columns).
    pub fn n_atoms(&self) -> usize {
        self.params.len()
    }

    /// Largest absolute inner product between two distinct atoms.
    pub fn max_coherence(&self) -> f64 {
        let n = self.atoms.rows();
        let cols: Vec<Vec<f64>> = (0..self.n_atoms()).map(|j| self.atoms.col(j)).collect();
        let mut worst = 0.0f64;
        for i in 0..cols.len() {
            for j in (i + 1)..cols.len() {
                let dot: f64 = (0..n).map(|t| cols[i][t] * cols[j][t]).sum();
                worst = worst.max(dot.abs());
            }
        }
        worst
    }
}

/// Time coordinate of sample `i` on an `n`-point grid over the centered
/// second.
fn grid_time(i: usize, n: usize) -> f64 {
    i as f64 / n as f64 - 0.5
}

fn sample_atom(n: usize, a: &GaborAtom) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = grid_time(i, n);
            let arg = (t - a.center_s) / a.scale_s;
            (1.0 / a.scale_s.sqrt())
                * (-PI * arg * arg).exp()
                * (a.freq_rad_s * t + a.phase_rad).cos()
        })
        .collect()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Build the standard dictionary on an `n`-point grid.
///
/// The construction is fully deterministic. Candidates are enumerated in
/// canonical order (scale, then center, then frequency, then phase); when a
/// duplicate pair or a most-redundant pair must lose a member, the later
/// candidate is dropped. If pruning leaves fewer than
/// [`GABOR_ATOM_BUDGET`] atoms, the most recently pruned candidates are
/// re-admitted (newest first, skipping exact duplicates) to fill the
/// budget.
///
/// # Panics
///
/// Panics when the grid cannot supply the full budget of distinct atoms,
/// which only happens at very coarse resolutions; any `n` of a few dozen
/// samples or more is safe.
pub fn build_gabor_dictionary(n: usize) -> GaborDictionary {
    assert!(n >= 2, "atom grid needs at least two samples");
    let mut cand_params: Vec<GaborAtom> = Vec::new();
    let mut cand_cols: Vec<Vec<f64>> = Vec::new();
    for si in 0..SCALE_COUNT {
        let s = SCALE_MIN_S
            * (SCALE_MAX_S / SCALE_MIN_S).powf(si as f64 / (SCALE_COUNT - 1) as f64);
        for ui in 0..CENTER_COUNT {
            let u = -CENTER_SPAN_S
                + 2.0 * CENTER_SPAN_S * ui as f64 / (CENTER_COUNT - 1) as f64;
            for f_hz in FREQS_HZ {
                for w in PHASES_RAD {
                    let atom = GaborAtom {
                        scale_s: s,
                        center_s: u,
                        freq_rad_s: 2.0 * PI * f_hz,
                        phase_rad: w,
                    };
                    let mut col = sample_atom(n, &atom);
                    let nrm = l2(&col);
                    // A 90-degree phase at zero frequency samples to the
                    // zero function; anything that small cannot be
                    // normalized meaningfully.
                    if nrm <= 1e-12 {
                        continue;
                    }
                    for x in &mut col {
                        *x /= nrm;
                    }
                    cand_params.push(atom);
                    cand_cols.push(col);
                }
            }
        }
    }

    let nc = cand_cols.len();
    let mut coh = vec![0.0f64; nc * nc];
    for i in 0..nc {
        for j in (i + 1)..nc {
            let dot: f64 = cand_cols[i]
                .iter()
                .zip(&cand_cols[j])
                .map(|(a, b)| a * b)
                .sum();
            coh[i * nc + j] = dot.abs();
            coh[j * nc + i] = dot.abs();
        }
    }

    // Duplicate pruning: each candidate survives unless it nearly
    // coincides with an earlier survivor.
    let mut alive = vec![true; nc];
    let mut pruned: Vec<usize> = Vec::new();
    for i in 0..nc {
        if !alive[i] {
            continue;
        }
        for j in (i + 1)..nc {
            if alive[j] && coh[i * nc + j] > DUPLICATE_COHERENCE {
                alive[j] = false;
                pruned.push(j);
            }
        }
    }
    let mut count = alive.iter().filter(|b| **b).count();

    // Redundancy trim: repeatedly locate the most coherent surviving pair
    // and drop its later member until the budget is met.
    while count > GABOR_ATOM_BUDGET {
        let mut drop = 0;
        let mut best = -1.0;
        for i in 0..nc {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..nc {
                if alive[j] && coh[i * nc + j] > best {
                    best = coh[i * nc + j];
                    drop = j;
                }
            }
        }
        alive[drop] = false;
        count -= 1;
    }

    // Refill from the duplicate-pruned pool if the grid came up short,
    // newest first, never re-admitting an exact copy of a survivor.
    while count < GABOR_ATOM_BUDGET {
        let back = pruned
            .iter()
            .rposition(|&j| {
                !alive[j]
                    && (0..nc).all(|i| !alive[i] || coh[i * nc + j] < 1.0 - 1e-12)
            })
            .unwrap_or_else(|| {
                panic!(
                    "parameter grid supplies only {count} distinct atoms at \
                     n = {n}; cannot fill the {GABOR_ATOM_BUDGET}-atom budget"
                )
            });
        alive[pruned[back]] = true;
        count += 1;
    }

    let kept: Vec<usize> = (0..nc).filter(|&i| alive[i]).collect();
    let params: Vec<GaborAtom> = kept.iter().map(|&i| cand_params[i]).collect();
    let atoms = Mat::from_fn(n, kept.len(), |i, j| cand_cols[kept[j]][i]);
    GaborDictionary { atoms, params }
}
