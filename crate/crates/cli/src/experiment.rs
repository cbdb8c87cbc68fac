//! Monte-Carlo experiment engine.
//!
//! A [`RunPlan`] fixes everything a run needs — test corpus, sensing-waveform
//! banks, noise model, solver — and then maps a flat row index to one
//! reconstruction trial. Rows are indexed
//!
//! ```text
//! row = ((m_index · n_trials) + trial) · n_variants + variant
//! ```
//!
//! and every random draw inside a row is keyed to `substream`s of that row's
//! seed, so the full result table is a pure function of the master seed: any
//! subset of rows can be computed in any order, on any number of workers,
//! and the assembled CSV is byte-identical.
//!
//! Noise pairing: by default the noise seed depends only on `(m_index,
//! trial)`, not on the variant, so every method faces the same disturbance
//! realization in a given trial, and per-trial method differences cancel
//! the common noise draw. `pair_noise = false` gives each row its own noise
//! stream instead.

use rayon::prelude::*;

use rakeness_core::gabor::{build_gabor_dictionary, GaborDictionary};
use rakeness_core::glyph;
use rakeness_core::mat::{Mat, SymMatrix};
use rakeness_core::recon::{l1_debiased, omp, rsnr_db};
use rakeness_core::rmpi::{measure_record, projection_matrix, NoiseConfig, NoiseSite};
use rakeness_core::rng::substream;
use rakeness_core::spectral::SpectralDensity;
use rakeness_core::textio::{csv_line, fmt_g12};
use rakeness_core::waveform::{iid_antipodal, AntipodalCorrelationSampler, StationaryAntipodalSampler};
use rakeness_core::{ecg, Error, Result};

use crate::artifacts::CENTRAL_SUBGRIDS;
use crate::config::{Experiment, ExperimentConfig, Solver};

/// Nyquist samples in one heartbeat record (2·B·T with B = 128 Hz, T = 1 s).
pub const ECG_N: usize = 256;
/// Sample and chip rate of the heartbeat experiment.
pub const ECG_FS_HZ: f64 = 256.0;
/// Signal band of the heartbeat experiment.
pub const ECG_BANDWIDTH_HZ: f64 = 128.0;
/// Acquisition window in seconds.
pub const ECG_WINDOW_S: f64 = 1.0;
/// Dictionary coefficients kept by the heartbeat solvers.
pub const ECG_SPARSITY: usize = 14;
/// Pixels in one glyph frame.
pub const IMAGE_PIXELS: usize = 576;
/// Iteration budget of the proximal solver.
pub const ISTA_MAX_ITERS: usize = 600;
/// Relative-change stopping tolerance of the proximal solver.
pub const ISTA_TOL: f64 = 1e-7;

// Top-level seed streams hanging off the master seed. Everything the
// harness randomizes descends from exactly one of these.
const STREAM_TRAIN: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_ROWS: u64 = 3;
const STREAM_NOISE: u64 = 4;

/// Seed of the training corpus.
pub fn train_seed(master: u64) -> u64 {
    substream(master, STREAM_TRAIN)
}

/// Seed of the test corpus.
pub fn test_seed(master: u64) -> u64 {
    substream(master, STREAM_TEST)
}

/// Seed of one result row.
pub fn row_seed(master: u64, row_index: usize) -> u64 {
    substream(substream(master, STREAM_ROWS), row_index as u64)
}

/// Seed of the shared noise draw for one `(m_index, trial)` pair.
pub fn paired_noise_seed(master: u64, pair_index: usize) -> u64 {
    substream(substream(master, STREAM_NOISE), pair_index as u64)
}

/// One sensing-waveform method under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantSpec {
    /// `"iid"` or `"rakeness"`; the `method` column of the results table.
    pub method: &'static str,
    /// Self-rakeness budget; 0 for the unshaped baseline.
    pub r: f64,
}

/// Drawing rule for the rows of a projection matrix.
pub enum Bank {
    /// Unshaped ±1 chips over one heartbeat window.
    EcgIid,
    /// Spectrally shaped ±1 chips over one heartbeat window.
    EcgShaped(StationaryAntipodalSampler),
    /// Unshaped ±1 pixels over the whole frame.
    ImageIid,
    /// Correlation-shaped central subgrids (in [`CENTRAL_SUBGRIDS`] order),
    /// unshaped elsewhere.
    ImageShaped(Vec<AntipodalCorrelationSampler>),
}

impl Bank {
    /// Draw a full `m_count × N` projection matrix. Row `i` consumes
    /// `substream(wf_seed, i)` (and per-subgrid substreams below that), so
    /// the matrix does not depend on how rows are scheduled.
    pub fn draw_phi(&self, m_count: usize, wf_seed: u64) -> Result<Mat> {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m_count);
        for i in 0..m_count {
            let rseed = substream(wf_seed, i as u64);
            let row = match self {
                Bank::EcgIid => iid_antipodal(ECG_N, rseed)?.chips,
                Bank::EcgShaped(sampler) => sampler.draw(rseed).chips,
                Bank::ImageIid | Bank::ImageShaped(_) => self.draw_frame(rseed)?,
            };
            rows.push(row);
        }
        Mat::from_rows(&rows)
    }

    /// Assemble one 24×24 ±1 frame from its sixteen 6×6 subgrids; subgrid
    /// `g` consumes `substream(frame_seed, g)`.
    fn draw_frame(&self, frame_seed: u64) -> Result<Vec<f64>> {
        let mut frame = vec![0.0; IMAGE_PIXELS];
        for g in 0..glyph::SUBGRID_COUNT {
            let gseed = substream(frame_seed, g as u64);
            let chips = match self {
                Bank::ImageShaped(samplers) => {
                    match CENTRAL_SUBGRIDS.iter().position(|&c| c == g) {
                        Some(pos) => samplers[pos].draw(gseed).chips,
                        None => iid_antipodal(glyph::SUBGRID_SIDE * glyph::SUBGRID_SIDE, gseed)?.chips,
                    }
                }
                _ => iid_antipodal(glyph::SUBGRID_SIDE * glyph::SUBGRID_SIDE, gseed)?.chips,
            };
            // Same row-major block layout as GlyphImage::subgrid_vector.
            let r0 = (g / 4) * glyph::SUBGRID_SIDE;
            let c0 = (g % 4) * glyph::SUBGRID_SIDE;
            for (p, &chip) in chips.iter().enumerate() {
                let r = r0 + p / glyph::SUBGRID_SIDE;
                let c = c0 + p % glyph::SUBGRID_SIDE;
                frame[r * glyph::GLYPH_FRAME + c] = chip;
            }
        }
        Ok(frame)
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub method: String,
    pub r: f64,
    pub m_count: usize,
    pub trial: usize,
    pub rsnr_db: f64,
    pub seed: u64,
}

/// Header line of `results.csv`.
pub const RESULTS_HEADER: &str = "experiment,method,r,M,trial,rsnr_db,seed";

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        csv_line(&[
            self.experiment.clone(),
            self.method.clone(),
            fmt_g12(self.r),
            self.m_count.to_string(),
            self.trial.to_string(),
            fmt_g12(self.rsnr_db),
            self.seed.to_string(),
        ])
    }
}

/// Serialize a full results table (header + rows).
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
    }
    out
}

/// Parse a results table written by [`rows_to_csv`].
pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RESULTS_HEADER => {}
        Some(h) => {
            return Err(Error::InvalidInput(format!(
                "results header is {h:?}, expected {RESULTS_HEADER:?}"
            )))
        }
        None => return Err(Error::InvalidInput("results file is empty".into())),
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::InvalidInput(format!(
                "results line {}: {} fields, expected 7",
                ln + 2,
                f.len()
            )));
        }
        let bad = |what: &str| Error::InvalidInput(format!("results line {}: bad {what}", ln + 2));
        rows.push(ResultRow {
            experiment: f[0].to_string(),
            method: f[1].to_string(),
            r: f[2].parse().map_err(|_| bad("r"))?,
            m_count: f[3].parse().map_err(|_| bad("M"))?,
            trial: f[4].parse().map_err(|_| bad("trial"))?,
            rsnr_db: f[5].parse().map_err(|_| bad("rsnr_db"))?,
            seed: f[6].parse().map_err(|_| bad("seed"))?,
        });
    }
    Ok(rows)
}

/// Everything one run needs, fixed up front.
pub struct RunPlan {
    pub experiment: Experiment,
    pub m_list: Vec<usize>,
    pub n_trials: usize,
    pub variants: Vec<VariantSpec>,
    banks: Vec<Bank>,
    noise: NoiseConfig,
    solver: Solver,
    pair_noise: bool,
    master_seed: u64,
    /// Clean test records (heartbeat samples or glyph pixels).
    test: Vec<Vec<f64>>,
    /// Sparsifying dictionary; identity (None) for the image experiment.
    dict: Option<GaborDictionary>,
}

impl RunPlan {
    /// Total rows in the results table.
    pub fn n_rows(&self) -> usize {
        self.m_list.len() * self.n_trials * self.variants.len()
    }

    /// Inverse of the row-index formula.
    fn decode(&self, row: usize) -> (usize, usize, usize) {
        let n_v = self.variants.len();
        let variant = row % n_v;
        let mt = row / n_v;
        let trial = mt % self.n_trials;
        let m_index = mt / self.n_trials;
        (m_index, trial, variant)
    }

    /// Execute one row: draw the projection, measure under noise,
    /// reconstruct, score.
    pub fn execute_row(&self, row: usize) -> Result<ResultRow> {
        let (m_index, trial, variant) = self.decode(row);
        let m_count = self.m_list[m_index];
        let rseed = row_seed(self.master_seed, row);
        let wf_seed = substream(rseed, 0);
        let noise_seed = if self.pair_noise {
            paired_noise_seed(self.master_seed, m_index * self.n_trials + trial)
        } else {
            substream(rseed, 1)
        };

        let x = &self.test[trial % self.test.len()];
        let phi = self.banks[variant].draw_phi(m_count, wf_seed)?;
        let (mvec, _sigma) = measure_record(x, &phi, &self.noise, noise_seed)?;

        let recon = match (&self.dict, self.solver) {
            (Some(dict), Solver::Omp) => {
                let p = projection_matrix(&phi, &dict.atoms)?;
                omp(&p, &mvec, ECG_SPARSITY)?.through_dictionary(&dict.atoms)?
            }
            (Some(dict), Solver::Ista) => {
                let p = projection_matrix(&phi, &dict.atoms)?;
                l1_debiased(&p, &mvec, ECG_SPARSITY, ISTA_MAX_ITERS, ISTA_TOL)?
                    .through_dictionary(&dict.atoms)?
            }
            (None, Solver::Ista) => {
                l1_debiased(&phi, &mvec, image_support_target(m_count), ISTA_MAX_ITERS, ISTA_TOL)?
            }
            (None, Solver::Omp) => omp(&phi, &mvec, image_support_target(m_count))?,
        };

        Ok(ResultRow {
            experiment: self.experiment.name().to_string(),
            method: self.variants[variant].method.to_string(),
            r: self.variants[variant].r,
            m_count,
            trial,
            rsnr_db: rsnr_db(x, &recon.x_hat)?,
            seed: rseed,
        })
    }

    /// Execute every row in parallel on the ambient rayon pool and return
    /// them in row order.
    pub fn execute_all(&self) -> Result<Vec<ResultRow>> {
        let mut done: Vec<(usize, Result<ResultRow>)> = (0..self.n_rows())
            .into_par_iter()
            .map(|row| (row, self.execute_row(row)))
            .collect();
        done.sort_by_key(|(row, _)| *row);
        done.into_iter().map(|(_, res)| res).collect()
    }
}

/// Support size handed to the image solvers: generous enough for every
/// glyph's lit-pixel footprint but still well inside the measurement count
/// at the smallest M, so the debiasing least-squares stays overdetermined.
pub fn image_support_target(m_count: usize) -> usize {
    (m_count * 3 / 4).clamp(1, 160)
}

/// Build the heartbeat plan. `designs` pairs each shaped budget with its
/// designed sensing spectrum (artifact of the design stage); the unshaped
/// baseline is prepended as variant 0.
pub fn build_ecg_plan(
    cfg: &ExperimentConfig,
    designs: &[(f64, SpectralDensity)],
    m_list: Vec<usize>,
    n_trials: usize,
    include_iid: bool,
) -> Result<RunPlan> {
    let mut variants = Vec::new();
    let mut banks = Vec::new();
    if include_iid {
        variants.push(VariantSpec { method: "iid", r: 0.0 });
        banks.push(Bank::EcgIid);
    }
    for (r, density) in designs {
        variants.push(VariantSpec { method: "rakeness", r: *r });
        banks.push(Bank::EcgShaped(StationaryAntipodalSampler::new(
            density, ECG_N, ECG_FS_HZ,
        )?));
    }
    if variants.is_empty() {
        return Err(Error::InvalidInput("no methods to run".into()));
    }
    Ok(RunPlan {
        experiment: Experiment::Ecg,
        m_list,
        n_trials,
        variants,
        banks,
        noise: NoiseConfig {
            site: NoiseSite::Both,
            intrinsic_snr_db: cfg.intrinsic_snr_db,
        },
        solver: cfg.solver,
        pair_noise: cfg.pair_noise,
        master_seed: cfg.master_seed,
        test: ecg::ecg_corpus(cfg.n_test, test_seed(cfg.master_seed))?,
        dict: Some(build_gabor_dictionary(ECG_N)),
    })
}

/// Build the image plan. `designs` pairs each shaped budget with its four
/// central-subgrid correlation designs in [`CENTRAL_SUBGRIDS`] order.
pub fn build_image_plan(
    cfg: &ExperimentConfig,
    designs: &[(f64, Vec<SymMatrix>)],
    m_list: Vec<usize>,
    n_trials: usize,
    include_iid: bool,
) -> Result<RunPlan> {
    let mut variants = Vec::new();
    let mut banks = Vec::new();
    if include_iid {
        variants.push(VariantSpec { method: "iid", r: 0.0 });
        banks.push(Bank::ImageIid);
    }
    for (r, corrs) in designs {
        if corrs.len() != CENTRAL_SUBGRIDS.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} central-subgrid designs, got {}",
                CENTRAL_SUBGRIDS.len(),
                corrs.len()
            )));
        }
        let samplers = corrs
            .iter()
            .map(AntipodalCorrelationSampler::new)
            .collect::<Result<Vec<_>>>()?;
        variants.push(VariantSpec { method: "rakeness", r: *r });
        banks.push(Bank::ImageShaped(samplers));
    }
    if variants.is_empty() {
        return Err(Error::InvalidInput("no methods to run".into()));
    }
    let test = glyph::glyph_corpus(cfg.n_test, test_seed(cfg.master_seed))?
        .into_iter()
        .map(|g| g.pixels)
        .collect();
    Ok(RunPlan {
        experiment: Experiment::Image,
        m_list,
        n_trials,
        variants,
        banks,
        noise: NoiseConfig {
            site: NoiseSite::OnMeasurement,
            intrinsic_snr_db: cfg.intrinsic_snr_db,
        },
        solver: cfg.solver,
        pair_noise: cfg.pair_noise,
        master_seed: cfg.master_seed,
        test,
        dict: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn tiny_ecg_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(Experiment::Ecg);
        cfg.n_test = 3;
        cfg.master_seed = 11;
        cfg
    }

    #[test]
    fn row_indexing_round_trips() {
        let cfg = tiny_ecg_cfg();
        let plan = build_ecg_plan(&cfg, &[], vec![24, 32], 5, true).unwrap();
        assert_eq!(plan.n_rows(), 2 * 5 * 1);
        let mut seen = std::collections::HashSet::new();
        for row in 0..plan.n_rows() {
            let key = plan.decode(row);
            assert!(seen.insert(key), "duplicate decode {key:?}");
            let (im, t, v) = key;
            assert_eq!((im * plan.n_trials + t) * plan.variants.len() + v, row);
        }
    }

    #[test]
    fn results_table_round_trips_through_csv() {
        let rows = vec![
            ResultRow {
                experiment: "ecg".into(),
                method: "iid".into(),
                r: 0.0,
                m_count: 32,
                trial: 0,
                rsnr_db: 12.345678,
                seed: 42,
            },
            ResultRow {
                experiment: "ecg".into(),
                method: "rakeness".into(),
                r: 0.038,
                m_count: 32,
                trial: 1,
                rsnr_db: -3.5,
                seed: 43,
            },
        ];
        let text = rows_to_csv(&rows);
        assert!(text.starts_with(RESULTS_HEADER));
        let back = rows_from_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].method, "iid");
        assert_eq!(back[1].r, 0.038);
        assert!((back[0].rsnr_db - 12.345678).abs() < 1e-9);
        assert!(rows_from_csv("bogus header\n1,2\n").is_err());
    }

    #[test]
    fn ecg_rows_are_deterministic_and_finite() {
        let cfg = tiny_ecg_cfg();
        let plan = build_ecg_plan(&cfg, &[], vec![24], 2, true).unwrap();
        let a = plan.execute_all().unwrap();
        let b = plan.execute_all().unwrap();
        assert_eq!(a, b);
        for row in &a {
            assert!(row.rsnr_db.is_finite());
            assert_eq!(row.method, "iid");
        }
    }

    #[test]
    fn image_frames_tile_all_sixteen_subgrids() {
        let bank = Bank::ImageIid;
        let phi = bank.draw_phi(3, 77).unwrap();
        assert_eq!((phi.rows(), phi.cols()), (3, IMAGE_PIXELS));
        for i in 0..3 {
            for &v in phi.row(i) {
                assert!(v == 1.0 || v == -1.0);
            }
        }
        // Distinct seeds give distinct rows.
        assert_ne!(phi.row(0), phi.row(1));
    }

    #[test]
    fn paired_noise_is_shared_across_variants() {
        // Two single-variant plans (shaped list empty, iid only) with the
        // same master seed: pair index depends only on (m_index, trial).
        assert_eq!(paired_noise_seed(9, 3), paired_noise_seed(9, 3));
        assert_ne!(paired_noise_seed(9, 3), paired_noise_seed(9, 4));
        assert_ne!(row_seed(9, 0), row_seed(9, 1));
        assert_ne!(train_seed(9), test_seed(9));
    }
}
