//! Golden fixtures: committed oracle reports and feasibility verdicts.
//!
//! One JSON file per gallery model, named after it and carrying the SHA-256
//! of the model definition, the full exact report, and the feasibility
//! verdict of its conditional outcome tables. Verification recomputes
//! everything and compares within documented tolerances: 1e-12 for oracle
//! values, 1e-9 for feasibility violations.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coupling::{
    jp_feasibility, FeasibilityStatus, PairwiseTable, DEFAULT_FEASIBILITY_TOL,
};
use crate::error::{Error, Result};
use crate::exact::{exact_report, ExactReport};
use crate::gallery;

/// Oracle comparison tolerance for committed values.
pub const ORACLE_TOL: f64 = 1e-12;
/// Feasibility violation comparison tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureFeasibility {
    pub tolerance: f64,
    pub status: FeasibilityStatus,
    pub max_facet_violation: f64,
    pub max_marginal_discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenFixture {
    pub model: String,
    pub model_sha256: String,
    pub exact: ExactReport<f64>,
    /// Verdict on the conditional outcome tables; absent when some pair
    /// never produces a coincidence.
    pub feasibility: Option<FixtureFeasibility>,
}

fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Conditional outcome tables of a report, when every pair has them.
pub fn conditional_tables(report: &ExactReport<f64>) -> Option<[PairwiseTable; 4]> {
    let mut tables = [PairwiseTable { probs: [0.0; 4] }; 4];
    for (slot, pair) in tables.iter_mut().zip(report.pairs.iter()) {
        *slot = PairwiseTable { probs: pair.outcome_probs_cond? };
    }
    Some(tables)
}

/// Computes the fixture for one gallery model.
pub fn compute_fixture(name: &str) -> Result<GoldenFixture> {
    let text = gallery::source(name).ok_or_else(|| Error::UnknownModel(name.to_string()))?;
    let model = gallery::load(name)?;
    let exact = exact_report(&model)?;
    let feasibility = match conditional_tables(&exact) {
        Some(tables) => {
            let r = jp_feasibility(&tables, DEFAULT_FEASIBILITY_TOL)?;
            Some(FixtureFeasibility {
                tolerance: DEFAULT_FEASIBILITY_TOL,
                status: r.status,
                max_facet_violation: r.max_facet_violation,
                max_marginal_discrepancy: r.max_marginal_discrepancy,
            })
        }
        None => None,
    };
    Ok(GoldenFixture {
        model: name.to_string(),
        model_sha256: sha256_hex(text),
        exact,
        feasibility,
    })
}

/// Writes one fixture file per gallery model into `dir`.
pub fn write_fixtures(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    for name in gallery::names() {
        let fixture = compute_fixture(name)?;
        let path = dir.join(format!("{name}.json"));
        let json = serde_json::to_string_pretty(&fixture)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    Ok(())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn compare_option(
    label: &str,
    got: Option<f64>,
    want: Option<f64>,
    tol: f64,
    failures: &mut Vec<String>,
) {
    match (got, want) {
        (Some(g), Some(w)) if close(g, w, tol) => {}
        (None, None) => {}
        _ => failures.push(format!("{label}: recomputed {got:?}, fixture {want:?}")),
    }
}

fn compare_reports(
    name: &str,
    got: &ExactReport<f64>,
    want: &ExactReport<f64>,
    failures: &mut Vec<String>,
) {
    for (i, (g, w)) in got.pairs.iter().zip(want.pairs.iter()).enumerate() {
        let pair = crate::model::SettingPair::ALL[i];
        let mut field = |label: &str, gv: f64, wv: f64| {
            if !close(gv, wv, ORACLE_TOL) {
                failures.push(format!(
                    "{name} pair {pair} {label}: recomputed {gv}, fixture {wv}"
                ));
            }
        };
        field("p_keep", g.p_keep, w.p_keep);
        field("e_ab_raw", g.e_ab_raw, w.e_ab_raw);
        field("e_a_raw", g.e_a_raw, w.e_a_raw);
        field("e_b_raw", g.e_b_raw, w.e_b_raw);
        field("p_a_zero_only", g.p_a_zero_only, w.p_a_zero_only);
        field("p_b_zero_only", g.p_b_zero_only, w.p_b_zero_only);
        field("p_both_zero", g.p_both_zero, w.p_both_zero);
        compare_option(
            &format!("{name} pair {pair} e_ab_cond"),
            g.e_ab_cond,
            w.e_ab_cond,
            ORACLE_TOL,
            failures,
        );
        compare_option(
            &format!("{name} pair {pair} e_a_cond"),
            g.e_a_cond,
            w.e_a_cond,
            ORACLE_TOL,
            failures,
        );
        compare_option(
            &format!("{name} pair {pair} e_b_cond"),
            g.e_b_cond,
            w.e_b_cond,
            ORACLE_TOL,
            failures,
        );
        match (&g.outcome_probs_cond, &w.outcome_probs_cond) {
            (Some(gp), Some(wp)) => {
                for (k, (gv, wv)) in gp.iter().zip(wp.iter()).enumerate() {
                    if !close(*gv, *wv, ORACLE_TOL) {
                        failures.push(format!(
                            "{name} pair {pair} outcome_probs_cond[{k}]: {gv} vs {wv}"
                        ));
                    }
                }
            }
            (None, None) => {}
            _ => failures.push(format!("{name} pair {pair} outcome_probs_cond presence differs")),
        }
    }
    match (&got.chsh_cond, &want.chsh_cond) {
        (Some(g), Some(w)) => {
            if !close(g.s_canonical, w.s_canonical, ORACLE_TOL)
                || !close(g.s_max, w.s_max, ORACLE_TOL)
            {
                failures.push(format!("{name} chsh_cond differs"));
            }
        }
        (None, None) => {}
        _ => failures.push(format!("{name} chsh_cond presence differs")),
    }
    if !close(got.chsh_raw.s_canonical, want.chsh_raw.s_canonical, ORACLE_TOL)
        || !close(got.chsh_raw.s_max, want.chsh_raw.s_max, ORACLE_TOL)
    {
        failures.push(format!("{name} chsh_raw differs"));
    }
}

/// Result of a fixture verification run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Recomputes every gallery fixture and compares against the files in `dir`.
///
/// Fails on missing fixtures, fixtures for unknown models, model-content
/// hash mismatches, and any value outside its tolerance.
pub fn verify_fixtures(dir: &Path) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    if !dir.is_dir() {
        return Err(Error::InvalidInput(format!(
            "fixtures directory {} does not exist",
            dir.display()
        )));
    }

    let known = gallery::names();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })? {
        let entry = entry.map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        if !known.contains(&stem.as_str()) {
            report
                .failures
                .push(format!("fixture {stem}.json has no matching gallery model"));
        }
    }

    for name in known {
        let path = dir.join(format!("{name}.json"));
        report.checked += 1;
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(_) => {
                report.failures.push(format!("missing fixture {name}.json"));
                continue;
            }
        };
        let stored: GoldenFixture = match serde_json::from_str(&text) {
            Ok(f) => f,
            Err(e) => {
                report.failures.push(format!("fixture {name}.json unreadable: {e}"));
                continue;
            }
        };
        let fresh = compute_fixture(name)?;
        if stored.model_sha256 != fresh.model_sha256 {
            report.failures.push(format!(
                "fixture {name}.json was built from a different model definition"
            ));
        }
        compare_reports(name, &fresh.exact, &stored.exact, &mut report.failures);
        match (&fresh.feasibility, &stored.feasibility) {
            (Some(f), Some(s)) => {
                if f.status != s.status {
                    report.failures.push(format!(
                        "{name} feasibility status: recomputed {:?}, fixture {:?}",
                        f.status, s.status
                    ));
                }
                if !close(f.max_facet_violation, s.max_facet_violation, FEASIBILITY_TOL) {
                    report.failures.push(format!("{name} max_facet_violation differs"));
                }
            }
            (None, None) => {}
            _ => report.failures.push(format!("{name} feasibility presence differs")),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_round_trip_through_a_directory() {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(dir.path()).unwrap();
        let report = verify_fixtures(dir.path()).unwrap();
        assert!(report.is_ok(), "{:?}", report.failures);
        assert_eq!(report.checked, gallery::names().len());
    }

    #[test]
    fn tampered_fixture_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(dir.path()).unwrap();
        let victim = dir.path().join("detection_gated.json");
        let mut fixture: GoldenFixture =
            serde_json::from_str(&std::fs::read_to_string(&victim).unwrap()).unwrap();
        // Nudge one committed digit past the oracle tolerance.
        fixture.exact.pairs[0].p_keep += 1e-9;
        std::fs::write(&victim, serde_json::to_string_pretty(&fixture).unwrap()).unwrap();
        let report = verify_fixtures(dir.path()).unwrap();
        assert!(!report.is_ok());
        assert!(report
            .failures
            .iter()
            .any(|f| f.contains("detection_gated") && f.contains("p_keep")));
    }

    #[test]
    fn missing_fixture_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("cbd_box.json")).unwrap();
        let report = verify_fixtures(dir.path()).unwrap();
        assert!(report
            .failures
            .iter()
            .any(|f| f.contains("missing fixture cbd_box.json")));
    }

    #[test]
    fn stray_fixture_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(dir.path()).unwrap();
        std::fs::write(dir.path().join("mystery.json"), "{}").unwrap();
        let report = verify_fixtures(dir.path()).unwrap();
        assert!(report
            .failures
            .iter()
            .any(|f| f.contains("mystery.json has no matching gallery model")));
    }
}
