//! Empirical estimators over post-selected data.
//!
//! Conditional correlations and marginals are plain sample means over the
//! kept records of each setting pair. Standard errors use the plug-in
//! sample variance (n−1 denominator) of the ±1-valued variable, so every
//! golden comparison is reproducible from counts alone.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exact::{chsh_values, ChshValues};
use crate::model::{Setting, SettingPair, Station};
use crate::pipeline::FinalDataset;

/// Sample moments of one setting pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub n_kept: u64,
    /// Conditional correlation estimate; `None` when no records were kept.
    pub e_ab: Option<f64>,
    /// Standard error; `None` when fewer than two records were kept.
    pub se_ab: Option<f64>,
    pub e_a: Option<f64>,
    pub se_a: Option<f64>,
    pub e_b: Option<f64>,
    pub se_b: Option<f64>,
}

/// Conditional correlations and marginals for all four setting pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    /// Indexed per [`SettingPair::index`].
    pub pairs: [PairEstimate; 4],
}

fn mean_and_se(sum: i64, n: u64) -> (Option<f64>, Option<f64>) {
    if n == 0 {
        return (None, None);
    }
    let mean = sum as f64 / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    // For a ±1-valued variable the sample variance is n(1 - mean^2)/(n-1).
    let var = (1.0 - mean * mean).max(0.0);
    let se = (var / (n as f64 - 1.0)).sqrt();
    (Some(mean), Some(se))
}

/// Sample means of `a·b`, `a`, and `b` over the kept records of each pair.
pub fn correlation_table(final_data: &FinalDataset) -> CorrelationTable {
    let mut out = CorrelationTable::default();
    for pair in SettingPair::ALL {
        let data = &final_data.pairs[pair.index()];
        let n = data.accounting.kept;
        let mut sum_ab = 0i64;
        let mut sum_a = 0i64;
        let mut sum_b = 0i64;
        for (a, b) in &data.outcomes {
            sum_ab += (*a as i64) * (*b as i64);
            sum_a += *a as i64;
            sum_b += *b as i64;
        }
        let (e_ab, se_ab) = mean_and_se(sum_ab, n);
        let (e_a, se_a) = mean_and_se(sum_a, n);
        let (e_b, se_b) = mean_and_se(sum_b, n);
        out.pairs[pair.index()] = PairEstimate { n_kept: n, e_ab, se_ab, e_a, se_a, e_b, se_b };
    }
    out
}

/// CHSH combinations of the four estimated correlations.
///
/// Errors with "incomplete table" when any pair has no estimate.
pub fn chsh(table: &CorrelationTable) -> Result<ChshValues<f64>> {
    let mut e = [0.0f64; 4];
    for (i, p) in table.pairs.iter().enumerate() {
        e[i] = p.e_ab.ok_or_else(|| {
            Error::IncompleteTable(format!(
                "pair {} has no kept records",
                SettingPair::ALL[i]
            ))
        })?;
    }
    Ok(chsh_values(&e))
}

/// Standard error of a CHSH combination, from the four independent per-pair
/// standard errors.
pub fn chsh_se(table: &CorrelationTable) -> Option<f64> {
    let mut acc = 0.0;
    for p in &table.pairs {
        acc += p.se_ab? * p.se_ab?;
    }
    Some(acc.sqrt())
}

/// One marginal comparison: the same local setting under the two remote
/// settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalComparison {
    pub station: Station,
    pub local_setting: Setting,
    /// Marginal estimates under remote setting 1 and 2.
    pub marginals: (Option<f64>, Option<f64>),
    pub n: (u64, u64),
    /// `marginal(remote=1) - marginal(remote=2)`; `None` when untestable.
    pub delta: Option<f64>,
    pub pooled_se: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
}

impl MarginalComparison {
    pub fn testable(&self) -> bool {
        self.delta.is_some()
    }
}

/// Remote-setting dependence of the post-selected marginals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoSignalingReport {
    /// A1, A2, B1, B2 in that order.
    pub comparisons: Vec<MarginalComparison>,
}

fn two_sided_p(z: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    2.0 * normal.cdf(-z.abs())
}

fn compare_arms(
    station: Station,
    local: Setting,
    arm1: (Option<f64>, Option<f64>, u64),
    arm2: (Option<f64>, Option<f64>, u64),
) -> MarginalComparison {
    let (m1, se1, n1) = arm1;
    let (m2, se2, n2) = arm2;
    let mut out = MarginalComparison {
        station,
        local_setting: local,
        marginals: (m1, m2),
        n: (n1, n2),
        delta: None,
        pooled_se: None,
        z: None,
        p_value: None,
    };
    // Both arms need at least two records for a pooled standard error.
    let (Some(m1), Some(m2), Some(se1), Some(se2)) = (m1, m2, se1, se2) else {
        return out;
    };
    let delta = m1 - m2;
    let pooled = (se1 * se1 + se2 * se2).sqrt();
    out.delta = Some(delta);
    out.pooled_se = Some(pooled);
    if pooled > 0.0 {
        let z = delta / pooled;
        out.z = Some(z);
        out.p_value = Some(two_sided_p(z));
    } else if delta == 0.0 {
        out.z = Some(0.0);
        out.p_value = Some(1.0);
    }
    // pooled = 0 with delta != 0 leaves z undefined: two exactly constant,
    // different arms are off the normal-approximation map entirely.
    out
}

/// Two-sample z-tests of every post-selected marginal against the remote
/// setting, with two-sided normal p-values.
pub fn no_signaling_test(final_data: &FinalDataset) -> NoSignalingReport {
    let table = correlation_table(final_data);
    let pick = |x: Setting, y: Setting| &table.pairs[SettingPair::new(x, y).index()];

    let mut comparisons = Vec::with_capacity(4);
    for x in Setting::ALL {
        let p1 = pick(x, Setting::One);
        let p2 = pick(x, Setting::Two);
        comparisons.push(compare_arms(
            Station::A,
            x,
            (p1.e_a, p1.se_a, p1.n_kept),
            (p2.e_a, p2.se_a, p2.n_kept),
        ));
    }
    for y in Setting::ALL {
        let p1 = pick(Setting::One, y);
        let p2 = pick(Setting::Two, y);
        comparisons.push(compare_arms(
            Station::B,
            y,
            (p1.e_b, p1.se_b, p1.n_kept),
            (p2.e_b, p2.se_b, p2.n_kept),
        ));
    }
    NoSignalingReport { comparisons }
}
