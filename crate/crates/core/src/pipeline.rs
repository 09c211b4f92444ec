//! Raw-to-final data extraction.
//!
//! Final data keep exactly the records with both outcomes nonzero,
//! partitioned by setting pair. Discard accounting is mandatory: the
//! quantitative content of post-selection lives in what is removed.

use serde::{Deserialize, Serialize};

use crate::model::SettingPair;
use crate::sim::RawDataset;

/// Per-pair discard accounting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAccounting {
    pub kept: u64,
    pub discarded_a_zero: u64,
    pub discarded_b_zero: u64,
    pub discarded_both_zero: u64,
}

impl PairAccounting {
    pub fn raw_total(&self) -> u64 {
        self.kept + self.discarded_a_zero + self.discarded_b_zero + self.discarded_both_zero
    }
}

/// Kept outcomes and accounting for one setting pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairData {
    /// Coincident outcome pairs, both in {−1, +1}.
    pub outcomes: Vec<(i8, i8)>,
    pub accounting: PairAccounting,
}

/// Post-selected dataset: the empirical coincidence event.
///
/// Records whose partner setting is unknown (singles reconstructed from
/// click streams) cannot be attributed to a setting pair; they are counted
/// per station under the setting that is known.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FinalDataset {
    /// Indexed per [`SettingPair::index`].
    pub pairs: [PairData; 4],
    /// Records with `b = 0` and unknown `y`, counted by known `x`.
    pub unattributed_b_zero_by_x: [u64; 2],
    /// Records with `a = 0` and unknown `x`, counted by known `y`.
    pub unattributed_a_zero_by_y: [u64; 2],
}

impl FinalDataset {
    pub fn total_kept(&self) -> u64 {
        self.pairs.iter().map(|p| p.accounting.kept).sum()
    }

    pub fn total_records(&self) -> u64 {
        self.pairs.iter().map(|p| p.accounting.raw_total()).sum::<u64>()
            + self.unattributed_b_zero_by_x.iter().sum::<u64>()
            + self.unattributed_a_zero_by_y.iter().sum::<u64>()
    }
}

/// Keeps exactly the records with `a != 0` and `b != 0` and partitions them
/// by setting pair; every discarded record is counted. Setting pairs with no
/// kept records stay present with count 0. Idempotent on already-final data.
pub fn extract_final(raw: &RawDataset) -> FinalDataset {
    let mut out = FinalDataset::default();
    for r in &raw.records {
        match (r.a != 0, r.b != 0) {
            (true, true) => {
                let pair = r
                    .pair()
                    .expect("nonzero outcomes always carry known settings");
                let p = &mut out.pairs[pair.index()];
                p.outcomes.push((r.a, r.b));
                p.accounting.kept += 1;
            }
            (false, true) => match r.pair() {
                Some(pair) => out.pairs[pair.index()].accounting.discarded_a_zero += 1,
                None => {
                    let y = r.y.expect("nonzero b carries its setting");
                    out.unattributed_a_zero_by_y[y.index()] += 1;
                }
            },
            (true, false) => match r.pair() {
                Some(pair) => out.pairs[pair.index()].accounting.discarded_b_zero += 1,
                None => {
                    let x = r.x.expect("nonzero a carries its setting");
                    out.unattributed_b_zero_by_x[x.index()] += 1;
                }
            },
            (false, false) => {
                if let Some(pair) = r.pair() {
                    out.pairs[pair.index()].accounting.discarded_both_zero += 1;
                }
                // A double-zero record can only come from the trial-level
                // path, which always knows both settings.
            }
        }
    }
    out
}

/// Rebuilds a raw dataset holding only the kept records of `final_data`.
pub fn final_to_raw(final_data: &FinalDataset) -> RawDataset {
    let mut records = Vec::new();
    for pair in SettingPair::ALL {
        for (a, b) in &final_data.pairs[pair.index()].outcomes {
            records.push(crate::sim::TrialRecord {
                trial_index: records.len() as i64,
                x: Some(pair.x),
                y: Some(pair.y),
                a: *a,
                b: *b,
            });
        }
    }
    RawDataset {
        records,
        metadata: crate::sim::RunMetadata {
            model: String::new(),
            seed: None,
            n_trials: None,
            schedule: None,
            timing: None,
            pairing: None,
            ambiguous_dropped: 0,
        },
    }
}
