//! Subcommand implementations: design, run, summarize, sweep-r, corpus
//! export, and selftest.
//!
//! Each command is a pure function of `(config, out, workers)`; parallelism
//! is confined to the Monte-Carlo row fan-out, and every file written is a
//! deterministic function of the resolved config.

use std::path::Path;

use rakeness_core::ecg::ecg_corpus;
use rakeness_core::eigen_design::design_correlation;
use rakeness_core::glyph::{corpus_to_csv, glyph_corpus, subgrid_correlation};
use rakeness_core::mat::SymMatrix;
use rakeness_core::recon::arsnr;
use rakeness_core::spectral::{average_psd, SpectralDensity, SpectrumDesigner};
use rakeness_core::textio::{csv_line, fmt_g12, matrix_to_csv, read_text, write_text};
use rakeness_core::{Error, Result as CoreResult};

use crate::artifacts::{self, DesignState, CENTRAL_SUBGRIDS};
use crate::config::{Experiment, ExperimentConfig};
use crate::experiment::{
    build_ecg_plan, build_image_plan, rows_from_csv, rows_to_csv, test_seed, train_seed,
    ResultRow, ECG_BANDWIDTH_HZ, ECG_FS_HZ, ECG_WINDOW_S,
};
use crate::svg::{line_chart, Series};
use crate::Failure;

/// Header line of `summary.csv`.
pub const SUMMARY_HEADER: &str = "method,r,M,n,arsnr_db,std_db,n_capped";
/// Header line of `sweep.csv`.
pub const SWEEP_HEADER: &str = "r,n,arsnr_db,std_db,best";

/// Read and resolve a config file; `--seed` overrides the file's master
/// seed. All failures here are usage errors.
pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let text = read_text(path).map_err(|e| Failure::config(e.to_string()))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| Failure::config(e.to_string()))?;
    if let Some(seed) = seed_override {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

/// Run `f` on a rayon pool with `workers` threads (`None`: the default
/// machine-sized pool). Results must not depend on the choice.
pub fn with_pool<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, Failure> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            if n == 0 {
                return Err(Failure::config("--workers must be at least 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::runtime(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn provenance(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    vec![
        ("config_hash".into(), cfg.hash()),
        ("master_seed".into(), cfg.master_seed.to_string()),
        ("n_train".into(), cfg.n_train.to_string()),
    ]
}

/// Estimate the training spectrum and wrap it in a designer.
fn ecg_designer(cfg: &ExperimentConfig) -> CoreResult<(SpectralDensity, SpectrumDesigner)> {
    let train = ecg_corpus(cfg.n_train, train_seed(cfg.master_seed))?;
    let a_hat = average_psd(&train, ECG_FS_HZ, ECG_BANDWIDTH_HZ, cfg.design_n_half)?;
    let designer = SpectrumDesigner::new(a_hat.clone(), ECG_WINDOW_S)?;
    Ok((a_hat, designer))
}

/// Estimate the four central-subgrid pixel correlations from training
/// glyphs.
fn image_targets(cfg: &ExperimentConfig) -> CoreResult<Vec<SymMatrix>> {
    let glyphs = glyph_corpus(cfg.n_train, train_seed(cfg.master_seed))?;
    CENTRAL_SUBGRIDS
        .iter()
        .map(|&g| subgrid_correlation(&glyphs, g))
        .collect()
}

/// Solve and store the design for every budget in the config; budgets below
/// the floor are recorded as infeasible and skipped. Fails only when no
/// budget is feasible (or on a genuine solver error).
pub fn cmd_design(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    match cfg.experiment {
        Experiment::Ecg => design_ecg(cfg, out),
        Experiment::Image => design_image(cfg, out),
    }
}

fn design_ecg(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let (a_hat, designer) = ecg_designer(cfg)?;
    artifacts::save_ecg_target(out, &a_hat)?;
    let mut feasible = 0usize;
    for &r in &cfg.r_list {
        match designer.design(r) {
            Ok(density) => {
                let mut meta = vec![
                    ("experiment".to_string(), "ecg".to_string()),
                    ("r".to_string(), fmt_g12(r)),
                    (
                        "objective".to_string(),
                        fmt_g12(designer.objective(&density)?),
                    ),
                    (
                        "self_rakeness_ratio".to_string(),
                        fmt_g12(designer.self_rakeness_ratio(&density)?),
                    ),
                ];
                meta.extend(provenance(cfg));
                artifacts::save_ecg_design(out, r, &density, &meta)?;
                feasible += 1;
                println!("design ecg r = {}: ok", fmt_g12(r));
            }
            Err(Error::Infeasible { minimum, .. }) => {
                let msg = format!(
                    "r = {} is below the achievable floor {}",
                    fmt_g12(r),
                    fmt_g12(minimum)
                );
                artifacts::save_infeasible(out, "ecg", r, &msg)?;
                println!("design ecg r = {}: infeasible ({msg})", fmt_g12(r));
            }
            Err(e) => return Err(e.into()),
        }
    }
    finish_design(feasible, cfg.r_list.len())
}

fn design_image(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let targets = image_targets(cfg)?;
    for (pos, &g) in CENTRAL_SUBGRIDS.iter().enumerate() {
        artifacts::save_image_target(out, g, &targets[pos])?;
    }
    let mut feasible = 0usize;
    'budget: for &r in &cfg.r_list {
        let mut meta = vec![
            ("experiment".to_string(), "image".to_string()),
            ("r".to_string(), fmt_g12(r)),
        ];
        let mut designs = Vec::new();
        for (pos, &g) in CENTRAL_SUBGRIDS.iter().enumerate() {
            match design_correlation(&targets[pos], r) {
                Ok(design) => {
                    meta.push((format!("j_subgrid_{g}"), design.j_count.to_string()));
                    designs.push((g, design));
                }
                Err(Error::Infeasible { minimum, .. }) => {
                    let msg = format!(
                        "r = {} is below the achievable floor {}",
                        fmt_g12(r),
                        fmt_g12(minimum)
                    );
                    artifacts::save_infeasible(out, "image", r, &msg)?;
                    println!("design image r = {}: infeasible ({msg})", fmt_g12(r));
                    continue 'budget;
                }
                Err(e) => return Err(e.into()),
            }
        }
        for (g, design) in &designs {
            artifacts::save_image_design(out, r, *g, design)?;
        }
        meta.extend(provenance(cfg));
        artifacts::save_image_meta(out, r, &meta)?;
        feasible += 1;
        let j_list: Vec<String> = designs.iter().map(|(_, d)| d.j_count.to_string()).collect();
        println!(
            "design image r = {}: ok (modes kept per subgrid: {})",
            fmt_g12(r),
            j_list.join(", ")
        );
    }
    finish_design(feasible, cfg.r_list.len())
}

fn finish_design(feasible: usize, requested: usize) -> Result<(), Failure> {
    if feasible == 0 {
        return Err(Failure::infeasible(
            "every requested r is below the achievable floor; raise r_list",
        ));
    }
    println!("design: {feasible}/{requested} budgets feasible");
    Ok(())
}

fn missing_design_failure(out: &Path, experiment: &str, r: f64) -> Failure {
    Failure::infeasible(format!(
        "no design artifacts for r = {} under {}; run `rakeness design --config <config> --out {}` first",
        fmt_g12(r),
        artifacts::design_root(out, experiment).display(),
        out.display()
    ))
}

/// Load the spectral designs that a run over `r_values` needs.
fn load_ecg_designs(
    out: &Path,
    r_values: &[f64],
) -> Result<Vec<(f64, SpectralDensity)>, Failure> {
    let mut designs = Vec::new();
    for &r in r_values {
        match artifacts::ecg_design_state(out, r)? {
            DesignState::Ready(density) => designs.push((r, density)),
            DesignState::Infeasible(msg) => {
                return Err(Failure::infeasible(format!(
                    "r = {} is recorded infeasible ({msg}); drop it from r_list",
                    fmt_g12(r)
                )))
            }
            DesignState::Missing => return Err(missing_design_failure(out, "ecg", r)),
        }
    }
    Ok(designs)
}

/// Load the correlation designs that a run over `r_values` needs.
fn load_image_designs(
    out: &Path,
    r_values: &[f64],
) -> Result<Vec<(f64, Vec<SymMatrix>)>, Failure> {
    let mut designs = Vec::new();
    for &r in r_values {
        match artifacts::image_design_state(out, r)? {
            DesignState::Ready(corrs) => designs.push((r, corrs)),
            DesignState::Infeasible(msg) => {
                return Err(Failure::infeasible(format!(
                    "r = {} is recorded infeasible ({msg}); drop it from r_list",
                    fmt_g12(r)
                )))
            }
            DesignState::Missing => return Err(missing_design_failure(out, "image", r)),
        }
    }
    Ok(designs)
}

/// Execute the full Monte-Carlo table and write `results.csv`.
pub fn cmd_run(
    cfg: &ExperimentConfig,
    out: &Path,
    workers: Option<usize>,
) -> Result<(), Failure> {
    let rows = run_rows(cfg, out, workers, cfg.m_list.clone(), cfg.n_trials, true)?;
    let path = out.join("results.csv");
    write_text(&path, &rows_to_csv(&rows))?;
    println!(
        "run {}: {} rows -> {}",
        cfg.experiment.name(),
        rows.len(),
        path.display()
    );
    Ok(())
}

/// Shared run core for `run` and `sweep-r`.
fn run_rows(
    cfg: &ExperimentConfig,
    out: &Path,
    workers: Option<usize>,
    m_list: Vec<usize>,
    n_trials: usize,
    include_iid: bool,
) -> Result<Vec<ResultRow>, Failure> {
    if workers == Some(0) {
        return Err(Failure::config("--workers must be at least 1"));
    }
    let rows = match cfg.experiment {
        Experiment::Ecg => {
            let designs = load_ecg_designs(out, &cfg.r_list)?;
            let plan = build_ecg_plan(cfg, &designs, m_list, n_trials, include_iid)?;
            with_pool(workers, || plan.execute_all())??
        }
        Experiment::Image => {
            let designs = load_image_designs(out, &cfg.r_list)?;
            let plan = build_image_plan(cfg, &designs, m_list, n_trials, include_iid)?;
            with_pool(workers, || plan.execute_all())??
        }
    };
    Ok(rows)
}

/// One summary group: every trial of one method at one measurement count.
#[derive(Debug)]
struct SummaryGroup {
    method: String,
    r: f64,
    m_count: usize,
    samples: Vec<f64>,
}

fn group_rows(rows: &[ResultRow]) -> Vec<SummaryGroup> {
    let mut groups: Vec<SummaryGroup> = Vec::new();
    for row in rows {
        match groups
            .iter_mut()
            .find(|g| g.method == row.method && g.r == row.r && g.m_count == row.m_count)
        {
            Some(g) => g.samples.push(row.rsnr_db),
            None => groups.push(SummaryGroup {
                method: row.method.clone(),
                r: row.r,
                m_count: row.m_count,
                samples: vec![row.rsnr_db],
            }),
        }
    }
    // iid first, then shaped budgets ascending; M ascending inside a method.
    groups.sort_by(|a, b| {
        (a.method != "iid", a.r, a.m_count)
            .partial_cmp(&(b.method != "iid", b.r, b.m_count))
            .unwrap()
    });
    groups
}

/// Aggregate `results.csv` into `summary.csv` and `plot.svg`.
pub fn cmd_summarize(out: &Path) -> Result<(), Failure> {
    let path = out.join("results.csv");
    if !path.is_file() {
        return Err(Failure::infeasible(format!(
            "{} not found; run `rakeness run` first",
            path.display()
        )));
    }
    let rows = rows_from_csv(&read_text(&path)?)?;
    if rows.is_empty() {
        return Err(Failure::config("results.csv contains no rows"));
    }
    let signal_dim = match rows[0].experiment.as_str() {
        "ecg" => Experiment::Ecg.signal_dim(),
        "image" => Experiment::Image.signal_dim(),
        other => {
            return Err(Failure::config(format!(
                "unknown experiment {other:?} in results.csv"
            )))
        }
    };

    let groups = group_rows(&rows);
    let mut csv = String::from(SUMMARY_HEADER);
    csv.push('\n');
    let mut series: Vec<Series> = Vec::new();
    for g in &groups {
        let st = arsnr(&g.samples)?;
        csv.push_str(&csv_line(&[
            g.method.clone(),
            fmt_g12(g.r),
            g.m_count.to_string(),
            g.samples.len().to_string(),
            fmt_g12(st.mean_db),
            fmt_g12(st.std_db),
            st.n_capped.to_string(),
        ]));
        let label = if g.method == "iid" {
            "iid".to_string()
        } else {
            format!("{} r={}", g.method, fmt_g12(g.r))
        };
        let x = signal_dim as f64 / g.m_count as f64;
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((x, st.mean_db, st.std_db)),
            None => series.push(Series {
                label,
                points: vec![(x, st.mean_db, st.std_db)],
            }),
        }
    }
    write_text(&out.join("summary.csv"), &csv)?;
    let svg = line_chart(
        &format!("{} ARSNR", rows[0].experiment),
        "compression ratio N/M",
        "ARSNR [dB]",
        &series,
    );
    write_text(&out.join("plot.svg"), &svg)?;
    println!(
        "summarize: {} groups -> summary.csv, plot.svg",
        groups.len()
    );
    Ok(())
}

/// Reduced-trial line search over the configured budgets at the smallest
/// measurement count. Designs any budget that is not on disk yet, skips
/// recorded-infeasible budgets, and reports the per-budget ARSNR table with
/// the best budget flagged.
pub fn cmd_sweep_r(
    cfg: &ExperimentConfig,
    out: &Path,
    workers: Option<usize>,
) -> Result<(), Failure> {
    if cfg.r_list.len() < 2 {
        return Err(Failure::config(
            "sweep-r needs at least two entries in r_list",
        ));
    }
    ensure_designs(cfg, out)?;

    // Budgets that survived the design stage, in config order.
    let mut feasible: Vec<f64> = Vec::new();
    let mut skipped: Vec<(f64, String)> = Vec::new();
    for &r in &cfg.r_list {
        let state_infeasible = match cfg.experiment {
            Experiment::Ecg => match artifacts::ecg_design_state(out, r)? {
                DesignState::Ready(_) => None,
                DesignState::Infeasible(msg) => Some(msg),
                DesignState::Missing => {
                    return Err(missing_design_failure(out, "ecg", r))
                }
            },
            Experiment::Image => match artifacts::image_design_state(out, r)? {
                DesignState::Ready(_) => None,
                DesignState::Infeasible(msg) => Some(msg),
                DesignState::Missing => {
                    return Err(missing_design_failure(out, "image", r))
                }
            },
        };
        match state_infeasible {
            None => feasible.push(r),
            Some(msg) => skipped.push((r, msg)),
        }
    }
    if feasible.is_empty() {
        return Err(Failure::infeasible(
            "every budget in r_list is infeasible; nothing to sweep",
        ));
    }

    let mut sweep_cfg = cfg.clone();
    sweep_cfg.r_list = feasible.clone();
    let m0 = *cfg.m_list.iter().min().expect("validated nonempty");
    let rows = run_rows(&sweep_cfg, out, workers, vec![m0], cfg.sweep_trials, false)?;

    // Per-budget table sorted ascending.
    let mut entries: Vec<(f64, usize, f64, f64)> = Vec::new();
    for &r in &feasible {
        let samples: Vec<f64> = rows
            .iter()
            .filter(|row| row.r == r)
            .map(|row| row.rsnr_db)
            .collect();
        let st = arsnr(&samples)?;
        entries.push((r, samples.len(), st.mean_db, st.std_db));
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = entries
        .iter()
        .cloned()
        .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.total_cmp(&a.0)))
        .expect("nonempty");

    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    println!("sweep-r ({} trials at M = {m0}):", cfg.sweep_trials);
    println!("{:>14} {:>6} {:>12} {:>10}", "r", "n", "arsnr_db", "std_db");
    for (r, n, mean, std) in &entries {
        let flag = if *r == best.0 { 1 } else { 0 };
        csv.push_str(&csv_line(&[
            fmt_g12(*r),
            n.to_string(),
            fmt_g12(*mean),
            fmt_g12(*std),
            flag.to_string(),
        ]));
        println!(
            "{:>14} {:>6} {:>12} {:>10}{}",
            fmt_g12(*r),
            n,
            format!("{mean:.4}"),
            format!("{std:.4}"),
            if flag == 1 { "  <- best" } else { "" }
        );
    }
    for (r, msg) in &skipped {
        println!("skipped r = {}: {msg}", fmt_g12(*r));
    }
    write_text(&out.join("sweep.csv"), &csv)?;
    println!("best r = {}", fmt_g12(best.0));
    Ok(())
}

/// Solve any budget in the config that is not yet on disk; leaves existing
/// artifacts untouched so sweeps and runs can share one output tree.
fn ensure_designs(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let missing: Vec<f64> = match cfg.experiment {
        Experiment::Ecg => cfg
            .r_list
            .iter()
            .copied()
            .filter(|&r| {
                matches!(artifacts::ecg_design_state(out, r), Ok(DesignState::Missing))
            })
            .collect(),
        Experiment::Image => cfg
            .r_list
            .iter()
            .copied()
            .filter(|&r| {
                matches!(
                    artifacts::image_design_state(out, r),
                    Ok(DesignState::Missing)
                )
            })
            .collect(),
    };
    if missing.is_empty() {
        return Ok(());
    }
    let mut design_cfg = cfg.clone();
    design_cfg.r_list = missing;
    // All-infeasible is fine here; the caller decides whether anything is
    // left to sweep.
    match cmd_design(&design_cfg, out) {
        Ok(()) => Ok(()),
        Err(f) if f.code == 3 => Ok(()),
        Err(f) => Err(f),
    }
}

/// Export the heartbeat training and test corpora as CSV.
pub fn cmd_gen_ecg(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    if cfg.experiment != Experiment::Ecg {
        return Err(Failure::config("gen-ecg needs an `experiment = ecg` config"));
    }
    let train = ecg_corpus(cfg.n_train, train_seed(cfg.master_seed))?;
    let test = ecg_corpus(cfg.n_test, test_seed(cfg.master_seed))?;
    let dir = out.join("corpus").join("ecg");
    write_text(&dir.join("train.csv"), &matrix_to_csv(&train))?;
    write_text(&dir.join("test.csv"), &matrix_to_csv(&test))?;
    println!(
        "gen-ecg: {} train + {} test records -> {}",
        train.len(),
        test.len(),
        dir.display()
    );
    Ok(())
}

/// Export the glyph training and test corpora as CSV (label + pixels).
pub fn cmd_gen_images(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    if cfg.experiment != Experiment::Image {
        return Err(Failure::config(
            "gen-images needs an `experiment = image` config",
        ));
    }
    let train = glyph_corpus(cfg.n_train, train_seed(cfg.master_seed))?;
    let test = glyph_corpus(cfg.n_test, test_seed(cfg.master_seed))?;
    let dir = out.join("corpus").join("image");
    write_text(&dir.join("train.csv"), &corpus_to_csv(&train))?;
    write_text(&dir.join("test.csv"), &corpus_to_csv(&test))?;
    println!(
        "gen-images: {} train + {} test glyphs -> {}",
        train.len(),
        test.len(),
        dir.display()
    );
    Ok(())
}

/// Miniature end-to-end pass of both experiments, in memory, checking that
/// every stage produces finite, reproducible numbers.
pub fn cmd_selftest(workers: Option<usize>) -> Result<(), Failure> {
    // Heartbeat path: estimate, design, sample, acquire, reconstruct.
    let mut ecg_cfg = ExperimentConfig::defaults(Experiment::Ecg);
    ecg_cfg.n_train = 12;
    ecg_cfg.n_test = 3;
    ecg_cfg.design_n_half = 128;
    ecg_cfg.master_seed = 7070;
    let (_a_hat, designer) = ecg_designer(&ecg_cfg)?;
    let density = designer.design(0.1)?;
    let plan = build_ecg_plan(&ecg_cfg, &[(0.1, density)], vec![24], 2, true)?;
    let first = with_pool(workers, || plan.execute_all())??;
    let second = with_pool(workers, || plan.execute_all())??;
    if first != second {
        return Err(Failure::runtime("heartbeat pass is not reproducible"));
    }
    if first.len() != 2 * 2 || first.iter().any(|row| !row.rsnr_db.is_finite()) {
        return Err(Failure::runtime("heartbeat pass produced bad rows"));
    }
    println!("selftest: heartbeat pipeline ok ({} rows)", first.len());

    // Image path: correlation targets, eigen design, shaped subgrids.
    let mut img_cfg = ExperimentConfig::defaults(Experiment::Image);
    img_cfg.n_train = 48;
    img_cfg.n_test = 3;
    img_cfg.master_seed = 7171;
    let targets = image_targets(&img_cfg)?;
    let mut corrs = Vec::new();
    for t in &targets {
        corrs.push(design_correlation(t, 0.1)?.correlation);
    }
    let plan = build_image_plan(&img_cfg, &[(0.1, corrs)], vec![48], 2, true)?;
    let first = with_pool(workers, || plan.execute_all())??;
    let second = with_pool(workers, || plan.execute_all())??;
    if first != second {
        return Err(Failure::runtime("image pass is not reproducible"));
    }
    if first.len() != 2 * 2 || first.iter().any(|row| !row.rsnr_db.is_finite()) {
        return Err(Failure::runtime("image pass produced bad rows"));
    }
    println!("selftest: image pipeline ok ({} rows)", first.len());
    println!("selftest: ok");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping_orders_iid_first_then_budgets_then_m() {
        let mk = |method: &str, r: f64, m: usize, v: f64| ResultRow {
            experiment: "ecg".into(),
            method: method.into(),
            r,
            m_count: m,
            trial: 0,
            rsnr_db: v,
            seed: 0,
        };
        let rows = vec![
            mk("rakeness", 0.3, 48, 1.0),
            mk("iid", 0.0, 48, 2.0),
            mk("rakeness", 0.038, 32, 3.0),
            mk("iid", 0.0, 32, 4.0),
            mk("rakeness", 0.038, 32, 5.0),
        ];
        let groups = group_rows(&rows);
        let keys: Vec<(String, f64, usize)> = groups
            .iter()
            .map(|g| (g.method.clone(), g.r, g.m_count))
            .collect();
        assert_eq!(
            keys,
            vec![
                ("iid".to_string(), 0.0, 32),
                ("iid".to_string(), 0.0, 48),
                ("rakeness".to_string(), 0.038, 32),
                ("rakeness".to_string(), 0.3, 48),
            ]
        );
        assert_eq!(groups[2].samples, vec![3.0, 5.0]);
    }
}
