//! Acquisition-chain simulation: projection-matrix assembly, noisy
//! measurement synthesis at a prescribed intrinsic SNR, and restricted-
//! isometry constant evaluation (exact enumeration on small problems, a
//! sampled lower bound on large ones).

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};

use crate::mat::{sym_eig, Mat, SymMatrix};
use crate::rng::{rng, substream};
use crate::textio;
use crate::{Error, Result};

/// Where the intrinsic noise enters the chain. Signal-domain noise is added
/// to the Nyquist-rate record before projection (and therefore folds
/// through the projection rows); measurement-domain noise is added to the
/// measurement vector itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSite {
    OnSignal,
    OnMeasurement,
    Both,
}

/// Noise-injection policy for one acquisition.
#[derive(Debug, Clone, Copy)]
pub struct NoiseConfig {
    pub site: NoiseSite,
    /// Target SNR in dB of each injection; `f64::INFINITY` disables noise.
    pub intrinsic_snr_db: f64,
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            site: NoiseSite::OnMeasurement,
            intrinsic_snr_db: f64::INFINITY,
        }
    }
}

/// One simulated acquisition: the chip matrix, its projection onto the
/// dictionary, the measurement vector, and the noise scale actually used.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    /// M×N matrix whose rows are the projection waveforms.
    pub phi: Mat,
    /// M×N_d projection of the rows onto the dictionary columns.
    pub p: Mat,
    /// Length-M measurement vector.
    pub m: Vec<f64>,
    /// Standard deviation of the last noise injection (0 when noiseless).
    pub noise_sigma: f64,
    pub seed: u64,
}

impl MeasurementSet {
    /// Writes `phi.csv`, `p.csv`, `m.csv`, and `meta.txt` into `dir`.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        textio::write_text(&dir.join("phi.csv"), &textio::matrix_to_csv(&mat_rows(&self.phi)))?;
        textio::write_text(&dir.join("p.csv"), &textio::matrix_to_csv(&mat_rows(&self.p)))?;
        textio::write_text(&dir.join("m.csv"), &textio::matrix_to_csv(&[self.m.clone()]))?;
        let meta = vec![
            ("noise_sigma".to_string(), textio::fmt_g12(self.noise_sigma)),
            ("seed".to_string(), self.seed.to_string()),
        ];
        textio::write_text(&dir.join("meta.txt"), &textio::meta_to_text(&meta))
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let phi = rows_to_mat(textio::matrix_from_csv(&textio::read_text(&dir.join("phi.csv"))?, false)?)?;
        let p = rows_to_mat(textio::matrix_from_csv(&textio::read_text(&dir.join("p.csv"))?, false)?)?;
        let m_rows = textio::matrix_from_csv(&textio::read_text(&dir.join("m.csv"))?, false)?;
        if m_rows.len() != 1 {
            return Err(Error::InvalidInput("m.csv must contain exactly one row".into()));
        }
        let meta = textio::meta_from_text(&textio::read_text(&dir.join("meta.txt"))?)?;
        let mut noise_sigma = 0.0;
        let mut seed = 0u64;
        for (k, v) in &meta {
            match k.as_str() {
                "noise_sigma" => {
                    noise_sigma = v
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad noise_sigma: {v}")))?
                }
                "seed" => {
                    seed = v.parse().map_err(|_| Error::InvalidInput(format!("bad seed: {v}")))?
                }
                _ => {}
            }
        }
        Ok(Self {
            phi,
            p,
            m: m_rows.into_iter().next().unwrap(),
            noise_sigma,
            seed,
        })
    }
}

fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

fn rows_to_mat(rows: Vec<Vec<f64>>) -> Result<Mat> {
    Mat::from_rows(&rows)
}

/// P = Phi·D: discrete inner products between every projection row and
/// every dictionary column.
pub fn projection_matrix(phi: &Mat, dict: &Mat) -> Result<Mat> {
    if phi.cols() != dict.rows() {
        return Err(Error::Shape(format!(
            "projection rows have {} samples but dictionary atoms have {}",
            phi.cols(),
            dict.rows()
        )));
    }
    phi.matmul(dict)
}

/// Adds i.i.d. Gaussian noise sized so the expected SNR equals `snr_db`.
/// `f64::INFINITY` is the noiseless sentinel and returns the input
/// unchanged; the realized per-call SNR is random around the target.
pub fn add_noise_for_snr(x: &[f64], snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    if snr_db == f64::INFINITY {
        return Ok(x.to_vec());
    }
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy <= 0.0 || x.is_empty() {
        return Err(Error::Domain(
            "cannot size noise against a zero signal at finite SNR".into(),
        ));
    }
    let sigma = (energy / (x.len() as f64 * 10f64.powf(snr_db / 10.0))).sqrt();
    let mut r = rng(seed);
    Ok(x.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut r);
            v + sigma * z
        })
        .collect())
}

/// Noise standard deviation that [`add_noise_for_snr`] would use, or 0 for
/// the noiseless sentinel.
pub fn noise_sigma_for_snr(x: &[f64], snr_db: f64) -> f64 {
    if !snr_db.is_finite() || x.is_empty() {
        return 0.0;
    }
    let energy: f64 = x.iter().map(|v| v * v).sum();
    (energy / (x.len() as f64 * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// Measures a Nyquist-rate record: m = Phi·(x + signal noise) + measurement
/// noise, with each stage keyed to its own derived stream. Returns the
/// measurement vector and the standard deviation of the last injection.
///
/// The signal-site injection is calibrated on the record itself. The
/// measurement-site injection models the chain's fixed back-end noise
/// floor: its level is set by the nominal per-measurement power of an
/// uncorrelated unit-chip front end, E[(phi_k·x)²] = ‖x‖², and does not
/// track the waveform actually in use. A waveform that concentrates
/// measurement energy on the signal therefore genuinely improves the
/// measurement-domain SNR instead of having the floor rescaled under it.
pub fn measure_record(
    x: &[f64],
    phi: &Mat,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    if x.len() != phi.cols() {
        return Err(Error::Shape(format!(
            "record length {} does not match projection row length {}",
            x.len(),
            phi.cols()
        )));
    }
    let mut sigma = 0.0;
    let staged: Vec<f64>;
    let x_in = if matches!(noise.site, NoiseSite::OnSignal | NoiseSite::Both) {
        sigma = noise_sigma_for_snr(x, noise.intrinsic_snr_db);
        staged = add_noise_for_snr(x, noise.intrinsic_snr_db, substream(seed, 0))?;
        &staged
    } else {
        x
    };
    let mut m = phi.matvec(x_in)?;
    if matches!(noise.site, NoiseSite::OnMeasurement | NoiseSite::Both) {
        let snr_db = noise.intrinsic_snr_db;
        if snr_db != f64::INFINITY {
            if !snr_db.is_finite() {
                return Err(Error::Domain(format!(
                    "SNR must be finite or +inf, got {snr_db}"
                )));
            }
            let nominal: f64 = x_in.iter().map(|v| v * v).sum();
            if nominal <= 0.0 {
                return Err(Error::Domain(
                    "cannot size measurement noise against a zero record at finite SNR".into(),
                ));
            }
            sigma = (nominal / 10f64.powf(snr_db / 10.0)).sqrt();
            let mut r = rng(substream(seed, 1));
            for v in &mut m {
                let z: f64 = StandardNormal.sample(&mut r);
                *v += sigma * z;
            }
        }
    }
    Ok((m, sigma))
}

/// Full acquisition of a dictionary-domain coefficient vector:
/// x = D·a, then [`measure_record`], packaged with Phi and P = Phi·D.
pub fn acquire(
    a_coeffs: &[f64],
    phi: &Mat,
    dict: &Mat,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<MeasurementSet> {
    if a_coeffs.len() != dict.cols() {
        return Err(Error::Shape(format!(
            "coefficient vector length {} does not match dictionary width {}",
            a_coeffs.len(),
            dict.cols()
        )));
    }
    let p = projection_matrix(phi, dict)?;
    let x = dict.matvec(a_coeffs)?;
    let (m, noise_sigma) = measure_record(&x, phi, noise, seed)?;
    Ok(MeasurementSet {
        phi: phi.clone(),
        p,
        m,
        noise_sigma,
        seed,
    })
}

/// Lexicographic enumeration of k-subsets of 0..n. Calls `visit` with each
/// subset; returns the number visited.
fn for_each_subset<F: FnMut(&[usize])>(n: usize, k: usize, mut visit: F) -> usize {
    let mut idx: Vec<usize> = (0..k).collect();
    let mut count = 0;
    loop {
        visit(&idx);
        count += 1;
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return count;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return count;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// Worst-case isometry defect of one column subset: the Gram spectrum's
/// largest deviation from 1 on either side.
fn subset_defect(p: &Mat, subset: &[usize]) -> Result<f64> {
    let k = subset.len();
    let gram = SymMatrix::from_fn(k, |a, b| {
        let mut acc = 0.0;
        for i in 0..p.rows() {
            acc += p[(i, subset[a])] * p[(i, subset[b])];
        }
        acc
    });
    let eig = sym_eig(&gram)?;
    let hi = eig.values.first().copied().unwrap_or(0.0);
    let lo = eig.values.last().copied().unwrap_or(0.0);
    Ok((hi - 1.0).max(1.0 - lo))
}

/// Exact restricted-isometry constant at sparsity `k`: the maximum subset
/// defect over every k-column submatrix. Combinatorially guarded; larger
/// problems should use [`rip_constant_mc`]. No internal rescaling of `p` is
/// performed — the caller chooses the normalization.
pub fn rip_constant(p: &Mat, k: usize) -> Result<f64> {
    let n_d = p.cols();
    if k == 0 || k > n_d {
        return Err(Error::Domain(format!(
            "sparsity {k} outside 1..={n_d} columns"
        )));
    }
    if n_d > 16 || k > 4 {
        return Err(Error::InvalidInput(format!(
            "exact enumeration is limited to 16 columns and sparsity 4 \
             (got {n_d} columns, sparsity {k}); use rip_constant_mc instead"
        )));
    }
    let mut worst = 0.0_f64;
    let mut failure = None;
    for_each_subset(n_d, k, |subset| {
        if failure.is_some() {
            return;
        }
        match subset_defect(p, subset) {
            Ok(d) => worst = worst.max(d),
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

/// Sampled lower bound on the restricted-isometry constant: the maximum
/// defect over `n_samples` seeded random k-subsets. Never exceeds the exact
/// value; switches to exhaustive enumeration when the subset count fits in
/// the sample budget, and is nested in `n_samples` (sample i is identical
/// for every budget ≥ i).
pub fn rip_constant_mc(p: &Mat, k: usize, n_samples: usize, seed: u64) -> Result<f64> {
    let n_d = p.cols();
    if k == 0 || k > n_d {
        return Err(Error::Domain(format!(
            "sparsity {k} outside 1..={n_d} columns"
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    if let Some(total) = binomial(n_d, k) {
        if total <= n_samples as u128 {
            let mut worst = 0.0_f64;
            let mut failure = None;
            for_each_subset(n_d, k, |subset| {
                if failure.is_some() {
                    return;
                }
                match subset_defect(p, subset) {
                    Ok(d) => worst = worst.max(d),
                    Err(e) => failure = Some(e),
                }
            });
            return match failure {
                Some(e) => Err(e),
                None => Ok(worst),
            };
        }
    }
    let mut worst = 0.0_f64;
    for s in 0..n_samples {
        let mut r = rng(substream(seed, s as u64));
        // partial Fisher-Yates: draw k distinct column indices
        let mut pool: Vec<usize> = (0..n_d).collect();
        let mut subset = Vec::with_capacity(k);
        for i in 0..k {
            let j = i + rand::Rng::random_range(&mut r, 0..(n_d - i));
            pool.swap(i, j);
            subset.push(pool[i]);
        }
        subset.sort_unstable();
        worst = worst.max(subset_defect(p, &subset)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut r = rng(seed);
        Mat::from_fn(rows, cols, |_, _| rand::Rng::random::<f64>(&mut r) * 2.0 - 1.0)
    }

    #[test]
    fn projection_matches_inner_product_oracle() {
        let phi = random_mat(4, 12, 1);
        let dict = random_mat(12, 7, 2);
        let p = projection_matrix(&phi, &dict).unwrap();
        for j in 0..4 {
            for k in 0..7 {
                let mut acc = 0.0;
                for t in 0..12 {
                    acc += phi[(j, t)] * dict[(t, k)];
                }
                assert!((p[(j, k)] - acc).abs() < 1e-12);
            }
        }
        // identity dictionary passes the chips through
        let eye = Mat::from_fn(12, 12, |i, j| if i == j { 1.0 } else { 0.0 });
        let p_eye = projection_matrix(&phi, &eye).unwrap();
        for j in 0..4 {
            for t in 0..12 {
                assert_eq!(p_eye[(j, t)], phi[(j, t)]);
            }
        }
        // all-ones row picks out column sums
        let ones = Mat::from_fn(1, 12, |_, _| 1.0);
        let sums = projection_matrix(&ones, &dict).unwrap();
        for k in 0..7 {
            let s: f64 = (0..12).map(|t| dict[(t, k)]).sum();
            assert!((sums[(0, k)] - s).abs() < 1e-12);
        }
        assert!(projection_matrix(&phi, &random_mat(5, 3, 3)).is_err());
    }

    #[test]
    fn noise_injection_hits_the_target_snr() {
        let x: Vec<f64> = (0..256).map(|i| ((i as f64) * 0.1).sin() + 0.3).collect();
        // infinite SNR is the noiseless sentinel
        assert_eq!(add_noise_for_snr(&x, f64::INFINITY, 7).unwrap(), x);
        assert!(add_noise_for_snr(&x, f64::NAN, 7).is_err());
        assert!(add_noise_for_snr(&[0.0; 8], 17.0, 7).is_err());

        let energy: f64 = x.iter().map(|v| v * v).sum();
        let mut mean_snr = 0.0;
        let trials = 1000;
        for t in 0..trials {
            let y = add_noise_for_snr(&x, 17.0, substream(11, t)).unwrap();
            let noise_energy: f64 =
                x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            mean_snr += 10.0 * (energy / noise_energy).log10();
        }
        mean_snr /= trials as f64;
        assert!((mean_snr - 17.0).abs() < 0.2, "mean realized SNR {mean_snr}");

        // doubling the signal doubles the noise draw exactly (same stream)
        let y1 = add_noise_for_snr(&x, 17.0, 99).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let y2 = add_noise_for_snr(&x2, 17.0, 99).unwrap();
        for i in 0..x.len() {
            assert!(((y2[i] - x2[i]) - 2.0 * (y1[i] - x[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn acquisition_is_linear_and_exact_without_noise() {
        let phi = random_mat(5, 16, 21);
        let dict = random_mat(16, 9, 22);
        let quiet = NoiseConfig::noiseless();
        // unit coordinate picks out a column of P
        let p = projection_matrix(&phi, &dict).unwrap();
        for k in [0usize, 4, 8] {
            let mut a = vec![0.0; 9];
            a[k] = 1.0;
            let set = acquire(&a, &phi, &dict, &quiet, 5).unwrap();
            for j in 0..5 {
                assert!((set.m[j] - p[(j, k)]).abs() < 1e-12);
            }
            assert_eq!(set.noise_sigma, 0.0);
        }
        // superposition on random pairs
        let mut r = rng(23);
        for _ in 0..10 {
            let a: Vec<f64> = (0..9).map(|_| rand::Rng::random::<f64>(&mut r) - 0.5).collect();
            let b: Vec<f64> = (0..9).map(|_| rand::Rng::random::<f64>(&mut r) - 0.5).collect();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let ma = acquire(&a, &phi, &dict, &quiet, 1).unwrap().m;
            let mb = acquire(&b, &phi, &dict, &quiet, 1).unwrap().m;
            let msum = acquire(&sum, &phi, &dict, &quiet, 1).unwrap().m;
            for j in 0..5 {
                assert!((msum[j] - ma[j] - mb[j]).abs() < 1e-9);
            }
        }
        // shape guards
        assert!(acquire(&[1.0; 3], &phi, &dict, &quiet, 1).is_err());
        assert!(measure_record(&[1.0; 3], &phi, &quiet, 1).is_err());
    }

    #[test]
    fn measurement_matches_oversampled_quadrature() {
        // Both the record and the chips are held piecewise-constant, so an
        // 8x-oversampled multiply-and-integrate must agree with the
        // discrete inner product.
        let phi = random_mat(6, 64, 31);
        let x: Vec<f64> = (0..64).map(|i| ((i as f64) * 0.37).cos()).collect();
        let (m, _) = measure_record(&x, &phi, &NoiseConfig::noiseless(), 0).unwrap();
        let over = 8;
        for j in 0..6 {
            let mut acc = 0.0;
            for t in 0..64 * over {
                let idx = t / over;
                acc += x[idx] * phi[(j, idx)];
            }
            let quad = acc / over as f64;
            assert!(
                (quad - m[j]).abs() <= 1e-3 * m[j].abs().max(1.0),
                "row {j}: {quad} vs {}",
                m[j]
            );
        }
    }

    #[test]
    fn noise_site_controls_where_noise_enters() {
        let phi = random_mat(4, 32, 41);
        let x: Vec<f64> = (0..32).map(|i| (i as f64 * 0.2).sin() + 0.1).collect();
        let clean = phi.matvec(&x).unwrap();

        let on_sig = NoiseConfig { site: NoiseSite::OnSignal, intrinsic_snr_db: 17.0 };
        let (m_sig, sig_sigma) = measure_record(&x, &phi, &on_sig, 77).unwrap();
        assert!(sig_sigma > 0.0);
        assert!(m_sig.iter().zip(&clean).any(|(a, b)| (a - b).abs() > 1e-9));

        let on_meas = NoiseConfig { site: NoiseSite::OnMeasurement, intrinsic_snr_db: 17.0 };
        let (m_meas, meas_sigma) = measure_record(&x, &phi, &on_meas, 77).unwrap();
        assert!(m_meas.iter().zip(&clean).any(|(a, b)| (a - b).abs() > 1e-9));
        // The measurement-stage floor is fixed by the record's energy (the
        // nominal per-measurement power of unit chips), not by the
        // realized measurement vector.
        let xe: f64 = x.iter().map(|v| v * v).sum();
        let expected_sigma = (xe / 10f64.powf(1.7)).sqrt();
        assert!((meas_sigma - expected_sigma).abs() < 1e-12 * expected_sigma);

        // With genuinely antipodal chips the realized measurement-domain
        // SNR concentrates near the target (averaged over many rows).
        let mut chip_rows = Vec::new();
        for i in 0..400 {
            chip_rows.push(
                crate::waveform::iid_antipodal(32, substream(5150, i)).unwrap().chips,
            );
        }
        let chips = Mat::from_rows(&chip_rows).unwrap();
        let chip_clean = chips.matvec(&x).unwrap();
        let (chip_noisy, _) = measure_record(&x, &chips, &on_meas, 66).unwrap();
        let me: f64 = chip_clean.iter().map(|v| v * v).sum();
        let ne: f64 = chip_noisy
            .iter()
            .zip(&chip_clean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let snr = 10.0 * (me / ne).log10();
        assert!((snr - 17.0).abs() < 1.5, "chip-row SNR {snr}");

        let both = NoiseConfig { site: NoiseSite::Both, intrinsic_snr_db: 17.0 };
        let (m_both, _) = measure_record(&x, &phi, &both, 77).unwrap();
        // both-site noise differs from either single site
        assert!(m_both.iter().zip(&m_sig).any(|(a, b)| (a - b).abs() > 1e-12));
        assert!(m_both.iter().zip(&m_meas).any(|(a, b)| (a - b).abs() > 1e-12));

        // determinism
        let again = measure_record(&x, &phi, &both, 77).unwrap();
        assert_eq!(m_both, again.0);
    }

    #[test]
    fn exact_rip_small_cases() {
        // orthonormal square matrix: zero defect at any sparsity
        let eye = Mat::from_fn(6, 6, |i, j| if i == j { 1.0 } else { 0.0 });
        for k in 1..=4 {
            assert!(rip_constant(&eye, k).unwrap() < 1e-12);
        }
        // scaling responds exactly through the Gram spectrum
        let two_eye = Mat::from_fn(6, 6, |i, j| if i == j { 2.0 } else { 0.0 });
        assert!((rip_constant(&two_eye, 2).unwrap() - 3.0).abs() < 1e-12);
        // a zero column is maximally defective at k = 1
        let flat = Mat::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!((rip_constant(&flat, 1).unwrap() - 1.0).abs() < 1e-12);
        // guards
        assert!(rip_constant(&random_mat(4, 17, 1), 2).is_err());
        assert!(rip_constant(&random_mat(4, 8, 1), 5).is_err());
        assert!(rip_constant(&random_mat(4, 8, 1), 0).is_err());
    }

    #[test]
    fn exact_rip_matches_independent_enumeration() {
        // independent oracle: explicit double loop over index pairs with a
        // closed-form 2x2 eigensolver
        let p = {
            let mut r = rng(51);
            let raw = Mat::from_fn(6, 10, |_, _| rand::Rng::random::<f64>(&mut r) - 0.5);
            // normalize columns so defects are O(1)
            Mat::from_fn(6, 10, |i, j| {
                let n: f64 = (0..6).map(|t| raw[(t, j)] * raw[(t, j)]).sum::<f64>().sqrt();
                raw[(i, j)] / n
            })
        };
        let mut oracle = 0.0_f64;
        for a in 0..10 {
            for b in (a + 1)..10 {
                let mut gaa = 0.0;
                let mut gbb = 0.0;
                let mut gab = 0.0;
                for t in 0..6 {
                    gaa += p[(t, a)] * p[(t, a)];
                    gbb += p[(t, b)] * p[(t, b)];
                    gab += p[(t, a)] * p[(t, b)];
                }
                let mean = 0.5 * (gaa + gbb);
                let disc = (0.25 * (gaa - gbb) * (gaa - gbb) + gab * gab).sqrt();
                oracle = oracle.max(mean + disc - 1.0).max(1.0 - (mean - disc));
            }
        }
        let exact = rip_constant(&p, 2).unwrap();
        assert!((exact - oracle).abs() < 1e-10, "{exact} vs {oracle}");
    }

    #[test]
    fn sampled_rip_is_a_nested_lower_bound() {
        let p = random_mat(6, 10, 61);
        let exact = rip_constant(&p, 2).unwrap();
        // covering budget switches to exhaustive enumeration: C(10,2) = 45
        let full = rip_constant_mc(&p, 2, 45, 3).unwrap();
        assert_eq!(full, exact);
        let mut prev = 0.0;
        for n in [1usize, 2, 5, 10, 20, 40] {
            let est = rip_constant_mc(&p, 2, n, 3).unwrap();
            assert!(est <= exact + 1e-12);
            assert!(est >= prev - 1e-15, "not monotone at {n}");
            prev = est;
        }
        // lower bound across 100 seeds
        for seed in 0..100 {
            assert!(rip_constant_mc(&p, 2, 10, seed).unwrap() <= exact + 1e-12);
        }
        assert!(rip_constant_mc(&p, 2, 0, 1).is_err());
    }

    #[test]
    fn more_measurements_improve_average_isometry() {
        // mean exact defect over random +-1/sqrt(M) matrices shrinks as M
        // grows
        let mut means = Vec::new();
        for &m_rows in &[10usize, 20, 30] {
            let mut acc = 0.0;
            for rep in 0..50 {
                let mut r = rng(substream(71, (m_rows * 100 + rep) as u64));
                let scale = 1.0 / (m_rows as f64).sqrt();
                let p = Mat::from_fn(m_rows, 10, |_, _| {
                    if rand::Rng::random::<bool>(&mut r) {
                        scale
                    } else {
                        -scale
                    }
                });
                acc += rip_constant(&p, 2).unwrap();
            }
            means.push(acc / 50.0);
        }
        assert!(
            means[0] > means[1] && means[1] > means[2],
            "defect means {means:?}"
        );
    }

    #[test]
    fn measurement_set_round_trips_through_disk() {
        let phi = random_mat(3, 8, 81);
        let dict = random_mat(8, 5, 82);
        let noise = NoiseConfig { site: NoiseSite::OnMeasurement, intrinsic_snr_db: 17.0 };
        let set = acquire(&[0.3, 0.0, -1.2, 0.0, 0.5], &phi, &dict, &noise, 4242).unwrap();
        let dir = std::env::temp_dir().join("rmpi_round_trip_test");
        set.save_dir(&dir).unwrap();
        let back = MeasurementSet::load_dir(&dir).unwrap();
        std::fs::remove_dir_all(&dir).ok();
        assert_eq!(back.seed, 4242);
        assert!((back.noise_sigma - set.noise_sigma).abs() <= 1e-9 * set.noise_sigma);
        for j in 0..3 {
            assert!((back.m[j] - set.m[j]).abs() < 1e-9);
            for t in 0..8 {
                assert!((back.phi[(j, t)] - set.phi[(j, t)]).abs() < 1e-9);
            }
            for k in 0..5 {
                assert!((back.p[(j, k)] - set.p[(j, k)]).abs() < 1e-9);
            }
        }
    }
}
