//! On-disk layout of design artifacts.
//!
//! `rakeness design` writes everything the run stage consumes under
//! `<out>/design/`; `rakeness run` only ever reads from there, so a run can
//! be repeated (or distributed) without re-solving the designs. Layout:
//!
//! ```text
//! design/ecg/a_hat.csv                     estimated average spectrum
//! design/ecg/r_<r>/spectrum.csv            designed sensing spectrum
//! design/ecg/r_<r>/meta.txt                budget, objective, provenance
//! design/ecg/r_<r>/infeasible.txt          written instead when r is below floor
//! design/image/subgrid_<g>/target.csv      empirical pixel correlation
//! design/image/r_<r>/subgrid_<g>/correlation.csv   designed correlation
//! design/image/r_<r>/subgrid_<g>/profile.csv       eigenvalue reshaping table
//! design/image/r_<r>/meta.txt              budget, per-subgrid mode counts
//! design/image/r_<r>/infeasible.txt
//! ```
//!
//! Directory names embed the budget through [`r_tag`], so sweeps over many
//! budgets coexist in one output tree.

use std::path::{Path, PathBuf};

use rakeness_core::eigen_design::RakenessDesign;
use rakeness_core::mat::{Mat, SymMatrix};
use rakeness_core::spectral::SpectralDensity;
use rakeness_core::textio::{fmt_g12, matrix_from_csv, matrix_to_csv, read_text, write_text};
use rakeness_core::{Error, Result};

/// The four structured subgrids at the center of the frame, in artifact and
/// sampler order.
pub const CENTRAL_SUBGRIDS: [usize; 4] = [5, 6, 9, 10];

/// Directory-name tag for a budget value (`r_0.047`, `r_0.00390625`, ...).
pub fn r_tag(r: f64) -> String {
    format!("r_{}", fmt_g12(r))
}

/// `<out>/design/<experiment>` root.
pub fn design_root(out: &Path, experiment: &str) -> PathBuf {
    out.join("design").join(experiment)
}

/// What the design stage left behind for one budget.
#[derive(Debug)]
pub enum DesignState<T> {
    /// Artifacts are present and loadable.
    Ready(T),
    /// The design stage ran and recorded that this budget is unachievable.
    Infeasible(String),
    /// Nothing on disk: the design stage has not run for this budget.
    Missing,
}

/// Serialize a symmetric matrix as a plain numeric CSV table.
pub fn sym_to_csv(m: &SymMatrix) -> String {
    let rows: Vec<Vec<f64>> = (0..m.n()).map(|i| m.as_mat().row(i).to_vec()).collect();
    matrix_to_csv(&rows)
}

/// Parse a symmetric matrix back from [`sym_to_csv`] output.
pub fn sym_from_csv(text: &str) -> Result<SymMatrix> {
    let rows = matrix_from_csv(text, false)?;
    SymMatrix::new(Mat::from_rows(&rows)?)
}

/// Record the estimated training spectrum.
pub fn save_ecg_target(out: &Path, a_hat: &SpectralDensity) -> Result<()> {
    write_text(&design_root(out, "ecg").join("a_hat.csv"), &a_hat.to_csv())
}

/// Record one feasible spectral design together with its meta file.
pub fn save_ecg_design(
    out: &Path,
    r: f64,
    density: &SpectralDensity,
    meta: &[(String, String)],
) -> Result<()> {
    let dir = design_root(out, "ecg").join(r_tag(r));
    write_text(&dir.join("spectrum.csv"), &density.to_csv())?;
    write_text(
        &dir.join("meta.txt"),
        &rakeness_core::textio::meta_to_text(meta),
    )
}

/// Record that a budget is below the achievable floor.
pub fn save_infeasible(out: &Path, experiment: &str, r: f64, message: &str) -> Result<()> {
    let dir = design_root(out, experiment).join(r_tag(r));
    write_text(&dir.join("infeasible.txt"), &format!("{message}\n"))
}

/// Load the spectral design for one budget, distinguishing "ready",
/// "recorded infeasible", and "never designed".
pub fn ecg_design_state(out: &Path, r: f64) -> Result<DesignState<SpectralDensity>> {
    let dir = design_root(out, "ecg").join(r_tag(r));
    let spectrum = dir.join("spectrum.csv");
    if spectrum.is_file() {
        return Ok(DesignState::Ready(SpectralDensity::from_csv(&read_text(
            &spectrum,
        )?)?));
    }
    let marker = dir.join("infeasible.txt");
    if marker.is_file() {
        return Ok(DesignState::Infeasible(read_text(&marker)?.trim().to_string()));
    }
    Ok(DesignState::Missing)
}

/// Record the empirical pixel correlation of one subgrid.
pub fn save_image_target(out: &Path, subgrid: usize, target: &SymMatrix) -> Result<()> {
    write_text(
        &design_root(out, "image")
            .join(format!("subgrid_{subgrid}"))
            .join("target.csv"),
        &sym_to_csv(target),
    )
}

/// Record one feasible correlation design for one subgrid.
pub fn save_image_design(out: &Path, r: f64, subgrid: usize, design: &RakenessDesign) -> Result<()> {
    let dir = design_root(out, "image")
        .join(r_tag(r))
        .join(format!("subgrid_{subgrid}"));
    write_text(&dir.join("correlation.csv"), &sym_to_csv(&design.correlation))?;
    write_text(&dir.join("profile.csv"), &design.rows_csv())
}

/// Record the meta file for one image budget (shared across subgrids).
pub fn save_image_meta(out: &Path, r: f64, meta: &[(String, String)]) -> Result<()> {
    let dir = design_root(out, "image").join(r_tag(r));
    write_text(&dir.join("meta.txt"), &rakeness_core::textio::meta_to_text(meta))
}

/// Load the four central-subgrid correlation designs for one budget.
pub fn image_design_state(out: &Path, r: f64) -> Result<DesignState<Vec<SymMatrix>>> {
    let dir = design_root(out, "image").join(r_tag(r));
    let marker = dir.join("infeasible.txt");
    if marker.is_file() {
        return Ok(DesignState::Infeasible(read_text(&marker)?.trim().to_string()));
    }
    let mut designs = Vec::with_capacity(CENTRAL_SUBGRIDS.len());
    for g in CENTRAL_SUBGRIDS {
        let path = dir.join(format!("subgrid_{g}")).join("correlation.csv");
        if !path.is_file() {
            return Ok(DesignState::Missing);
        }
        let corr = sym_from_csv(&read_text(&path)?)?;
        if corr.n() != 36 {
            return Err(Error::InvalidInput(format!(
                "{}: expected a 36x36 correlation, got {}x{}",
                path.display(),
                corr.n(),
                corr.n()
            )));
        }
        designs.push(corr);
    }
    Ok(DesignState::Ready(designs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_matrix_round_trips_through_csv() {
        let m = SymMatrix::from_fn(5, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let back = sym_from_csv(&sym_to_csv(&m)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((m.as_mat()[(i, j)] - back.as_mat()[(i, j)]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn budget_tags_are_path_safe_and_distinct() {
        let tags: Vec<String> = [1.0 / 256.0, 0.02, 0.038, 0.047, 0.1, 0.3, 1.0]
            .iter()
            .map(|r| r_tag(*r))
            .collect();
        for (i, t) in tags.iter().enumerate() {
            assert!(t.chars().all(|c| c.is_ascii_alphanumeric() || "._-+".contains(c)));
            for u in &tags[i + 1..] {
                assert_ne!(t, u);
            }
        }
        assert_eq!(r_tag(0.047), "r_0.047");
    }

    #[test]
    fn design_states_distinguish_ready_infeasible_missing() {
        let dir = std::env::temp_dir().join(format!("rakeness-art-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);

        match ecg_design_state(&dir, 0.1).unwrap() {
            DesignState::Missing => {}
            other => panic!("expected missing, got {other:?}"),
        }
        save_infeasible(&dir, "ecg", 0.001, "below floor").unwrap();
        match ecg_design_state(&dir, 0.001).unwrap() {
            DesignState::Infeasible(msg) => assert_eq!(msg, "below floor"),
            other => panic!("expected infeasible, got {other:?}"),
        }
        let density = SpectralDensity::flat(128.0, 16).unwrap();
        save_ecg_design(&dir, 0.1, &density, &[("r".into(), "0.1".into())]).unwrap();
        match ecg_design_state(&dir, 0.1).unwrap() {
            DesignState::Ready(d) => {
                assert_eq!(d.n_cells(), density.n_cells());
                assert!((d.total_power() - 1.0).abs() < 1e-9);
            }
            other => panic!("expected ready, got {other:?}"),
        }
        let _ = std::fs::remove_dir_all(&dir);
    }
}
