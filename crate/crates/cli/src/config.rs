//! Flat key–value experiment configuration.
//!
//! A config file is plain text, one `key = value` per line, `#` starting a
//! comment, blank lines ignored. Keys:
//!
//! ```text
//! experiment       ecg | image                              (required)
//! n_train          training-corpus size                     (default 200 / 520)
//! n_test           test-corpus size                         (default 200)
//! n_trials         Monte-Carlo trials per (method, r, M)    (default 200)
//! m_list           measurement counts, comma separated      (default 32,48,64,96 / 96,115,144)
//! r_list           self-rakeness budgets, comma separated   (default sweep grid / 0.047)
//! intrinsic_snr_db acquisition-chain SNR in dB              (default 17)
//! solver           omp | ista                               (default omp / ista)
//! master_seed      64-bit root seed                         (default 1)
//! design_n_half    spectral design grid half-size, ecg only (default 256)
//! sweep_trials     trials per r in the reduced sweep pass   (default 25)
//! pair_noise       share noise seeds across methods         (default true)
//! ```
//!
//! Unknown or duplicate keys are errors: a config that parses is exactly
//! the config that runs.

use rakeness_core::textio::fnv1a_hex;
use rakeness_core::{Error, Result};

/// Which of the two experiments a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Ecg,
    Image,
}

impl Experiment {
    /// Name used in files and CSV rows.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Ecg => "ecg",
            Experiment::Image => "image",
        }
    }

    /// Dimension of one record (Nyquist samples or pixels).
    pub fn signal_dim(self) -> usize {
        match self {
            Experiment::Ecg => 256,
            Experiment::Image => 576,
        }
    }
}

/// Reconstruction algorithm choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Omp,
    Ista,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Omp => "omp",
            Solver::Ista => "ista",
        }
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_train: usize,
    pub n_test: usize,
    pub n_trials: usize,
    pub m_list: Vec<usize>,
    pub r_list: Vec<f64>,
    pub intrinsic_snr_db: f64,
    pub solver: Solver,
    pub master_seed: u64,
    pub design_n_half: usize,
    pub sweep_trials: usize,
    pub pair_noise: bool,
}

impl ExperimentConfig {
    /// The per-experiment defaults; every key may be overridden in the file.
    pub fn defaults(experiment: Experiment) -> Self {
        match experiment {
            Experiment::Ecg => ExperimentConfig {
                experiment,
                n_train: 200,
                n_test: 200,
                n_trials: 200,
                m_list: vec![32, 48, 64, 96],
                // The standard line-search grid: the near-floor budget
                // 1/(2c) for c = B·T = 128, then widening steps up to the
                // fully concentrated end of the range.
                r_list: vec![1.0 / 256.0, 0.02, 0.038, 0.1, 0.3, 1.0],
                intrinsic_snr_db: 17.0,
                solver: Solver::Ista,
                master_seed: 1,
                design_n_half: 256,
                sweep_trials: 25,
                pair_noise: true,
            },
            Experiment::Image => ExperimentConfig {
                experiment,
                n_train: 520,
                n_test: 200,
                n_trials: 200,
                m_list: vec![96, 115, 144],
                r_list: vec![0.047],
                intrinsic_snr_db: 17.0,
                solver: Solver::Ista,
                master_seed: 1,
                design_n_half: 256,
                sweep_trials: 25,
                pair_noise: true,
            },
        }
    }

    /// Parse a config file's text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(cut) => &raw[..cut],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!(
                    "config line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                ))
            })?;
            let key = key.trim().to_string();
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(Error::InvalidInput(format!(
                    "config line {}: duplicate key {key}",
                    lineno + 1
                )));
            }
            pairs.push((key, value.trim().to_string()));
        }

        let experiment = match pairs.iter().find(|(k, _)| k == "experiment") {
            Some((_, v)) if v == "ecg" => Experiment::Ecg,
            Some((_, v)) if v == "image" => Experiment::Image,
            Some((_, v)) => {
                return Err(Error::InvalidInput(format!(
                    "experiment must be `ecg` or `image`, got {v}"
                )))
            }
            None => {
                return Err(Error::InvalidInput(
                    "config is missing the required `experiment` key".into(),
                ))
            }
        };

        let mut cfg = Self::defaults(experiment);
        for (key, value) in &pairs {
            match key.as_str() {
                "experiment" => {}
                "n_train" => cfg.n_train = parse_count(key, value)?,
                "n_test" => cfg.n_test = parse_count(key, value)?,
                "n_trials" => cfg.n_trials = parse_count(key, value)?,
                "m_list" => cfg.m_list = parse_list(key, value, parse_count)?,
                "r_list" => cfg.r_list = parse_list(key, value, parse_real)?,
                "intrinsic_snr_db" => cfg.intrinsic_snr_db = parse_real(key, value)?,
                "solver" => {
                    cfg.solver = match value.as_str() {
                        "omp" => Solver::Omp,
                        "ista" => Solver::Ista,
                        other => {
                            return Err(Error::InvalidInput(format!(
                                "solver must be `omp` or `ista`, got {other}"
                            )))
                        }
                    }
                }
                "master_seed" => {
                    cfg.master_seed = value.parse().map_err(|_| {
                        Error::InvalidInput(format!("master_seed: not a 64-bit integer: {value}"))
                    })?
                }
                "design_n_half" => cfg.design_n_half = parse_count(key, value)?,
                "sweep_trials" => cfg.sweep_trials = parse_count(key, value)?,
                "pair_noise" => {
                    cfg.pair_noise = match value.as_str() {
                        "true" => true,
                        "false" => false,
                        other => {
                            return Err(Error::InvalidInput(format!(
                                "pair_noise must be `true` or `false`, got {other}"
                            )))
                        }
                    }
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown config key {other}"
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks; feasibility of individual `r` values against the
    /// corpus is decided at design time, where it is recorded per value.
    pub fn validate(&self) -> Result<()> {
        if self.m_list.is_empty() {
            return Err(Error::InvalidInput("m_list is empty".into()));
        }
        if self.r_list.is_empty() {
            return Err(Error::InvalidInput("r_list is empty".into()));
        }
        for &m in &self.m_list {
            if m == 0 || m > self.experiment.signal_dim() {
                return Err(Error::InvalidInput(format!(
                    "measurement count {m} outside 1..={}",
                    self.experiment.signal_dim()
                )));
            }
        }
        for &r in &self.r_list {
            if !r.is_finite() || r <= 0.0 || r > 1.0 {
                return Err(Error::InvalidInput(format!(
                    "self-rakeness budget {r} outside (0, 1]"
                )));
            }
        }
        if !self.intrinsic_snr_db.is_finite() {
            return Err(Error::InvalidInput(
                "intrinsic_snr_db must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Canonical one-line-per-key rendering; reruns of the same resolved
    /// config hash identically no matter how the file was formatted.
    pub fn canonical_text(&self) -> String {
        let fmt_list_u = |v: &[usize]| {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        };
        let fmt_list_f = |v: &[f64]| {
            v.iter()
                .map(|x| rakeness_core::textio::fmt_g12(*x))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "design_n_half = {}\nexperiment = {}\nintrinsic_snr_db = {}\n\
             m_list = {}\nmaster_seed = {}\nn_test = {}\nn_train = {}\n\
             n_trials = {}\npair_noise = {}\nr_list = {}\nsolver = {}\n\
             sweep_trials = {}\n",
            self.design_n_half,
            self.experiment.name(),
            rakeness_core::textio::fmt_g12(self.intrinsic_snr_db),
            fmt_list_u(&self.m_list),
            self.master_seed,
            self.n_test,
            self.n_train,
            self.n_trials,
            self.pair_noise,
            fmt_list_f(&self.r_list),
            self.solver.name(),
            self.sweep_trials,
        )
    }

    /// Hash of the canonical text, stamped into every artifact.
    pub fn hash(&self) -> String {
        fnv1a_hex(self.canonical_text().as_bytes())
    }
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    let n: usize = value
        .parse()
        .map_err(|_| Error::InvalidInput(format!("{key}: not a count: {value}")))?;
    if n == 0 {
        return Err(Error::InvalidInput(format!("{key}: must be at least 1")));
    }
    Ok(n)
}

fn parse_real(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::InvalidInput(format!("{key}: not a number: {value}")))
}

fn parse_list<T>(
    key: &str,
    value: &str,
    item: impl Fn(&str, &str) -> Result<T>,
) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|piece| item(key, piece.trim()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in_and_overrides_stick() {
        let cfg = ExperimentConfig::parse(
            "# ecg run\nexperiment = ecg\nn_trials = 7\nm_list = 32, 48\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::Ecg);
        assert_eq!(cfg.n_trials, 7);
        assert_eq!(cfg.m_list, vec![32, 48]);
        assert_eq!(cfg.n_train, 200);
        assert_eq!(cfg.solver, Solver::Ista);
        assert_eq!(cfg.intrinsic_snr_db, 17.0);
        let img = ExperimentConfig::parse("experiment = image\n").unwrap();
        assert_eq!(img.n_train, 520);
        assert_eq!(img.m_list, vec![96, 115, 144]);
        assert_eq!(img.solver, Solver::Ista);
        assert_eq!(img.r_list, vec![0.047]);
    }

    #[test]
    fn bad_configs_are_rejected() {
        for text in [
            "n_trials = 5\n",                      // missing experiment
            "experiment = fft\n",                  // unknown experiment
            "experiment = ecg\nn_bogus = 3\n",     // unknown key
            "experiment = ecg\nexperiment = ecg\n",// duplicate key
            "experiment = ecg\nn_trials = 0\n",    // zero count
            "experiment = ecg\nr_list = 0.5, 2\n", // r out of range
            "experiment = ecg\nm_list = 999\n",    // m beyond dimension
            "experiment = ecg\nsolver = lasso\n",  // unknown solver
            "experiment = ecg\njust a line\n",     // not key = value
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "accepted: {text}");
        }
    }

    #[test]
    fn hash_tracks_content_not_formatting() {
        let a = ExperimentConfig::parse("experiment = ecg\nn_trials = 7\n").unwrap();
        let b = ExperimentConfig::parse("# hi\n  n_trials =7 \nexperiment = ecg\n").unwrap();
        let c = ExperimentConfig::parse("experiment = ecg\nn_trials = 8\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
