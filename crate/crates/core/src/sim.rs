//! Trial-level simulation and timestamped click streams.
//!
//! `run_experiment` produces the trial-labelled dataset directly;
//! `generate_click_streams` converts the same trials into two per-station
//! time series (one click per detected outcome, non-detections emit
//! nothing); `pair_by_window` reconstructs trial records from the streams
//! alone, which is where the identification ambiguity lives.
//!
//! Per-trial randomness is addressed by `(master seed, stream, trial index)`,
//! so datasets are identical regardless of execution order or worker count.

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    evaluate_outcomes, sample_trial_state, HvModel, Setting, SettingPair, Station,
};
use crate::rng::{streams, SubRng};
use crate::scalar::Scalar;

/// How the per-trial setting pair is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingsSchedule {
    /// Independent uniform draw over the four pairs each trial.
    Uniform,
    /// Four consecutive equal blocks in pair order (1,1), (1,2), (2,1), (2,2).
    Blocks,
}

impl SettingsSchedule {
    fn pair_for(self, seed: u64, index: u64, n_trials: u64) -> SettingPair {
        match self {
            SettingsSchedule::Uniform => {
                let u = SubRng::new(seed, streams::SETTINGS, index).next_u64();
                // 4 divides 2^64, so the modulus is exactly unbiased.
                SettingPair::ALL[(u % 4) as usize]
            }
            SettingsSchedule::Blocks => {
                let block = ((index.saturating_mul(4)) / n_trials.max(1)).min(3);
                SettingPair::ALL[block as usize]
            }
        }
    }
}

/// Timing parameters for click-stream generation and pairing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    /// Nominal spacing between trials, seconds.
    pub trial_period: f64,
    /// Standard deviation of the Gaussian click jitter, seconds.
    pub jitter_sigma: f64,
    /// Coincidence half-width, seconds.
    pub window: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { trial_period: 1.0, jitter_sigma: 0.0, window: 0.25 }
    }
}

impl TimingConfig {
    /// Checks hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.window > 0.0) {
            return Err(Error::InvalidInput("window must be > 0".into()));
        }
        if !(self.trial_period > 0.0) {
            return Err(Error::InvalidInput("trial_period must be > 0".into()));
        }
        if !(self.jitter_sigma >= 0.0) {
            return Err(Error::InvalidInput("jitter_sigma must be >= 0".into()));
        }
        let mut warnings = Vec::new();
        if self.trial_period <= 2.0 * self.window {
            warnings.push(format!(
                "trial_period {} is not larger than twice the window {}; \
                 adjacent trials can share a coincidence window",
                self.trial_period, self.window
            ));
        }
        Ok(warnings)
    }
}

/// One experimental trial.
///
/// Settings are per-station options: simulation always knows them, while
/// records reconstructed from click streams leave the setting of a silent
/// station unknown. A nonzero outcome always comes with a known setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: i64,
    pub x: Option<Setting>,
    pub y: Option<Setting>,
    pub a: i8,
    pub b: i8,
}

impl TrialRecord {
    /// Both settings, when known.
    pub fn pair(&self) -> Option<SettingPair> {
        match (self.x, self.y) {
            (Some(x), Some(y)) => Some(SettingPair::new(x, y)),
            _ => None,
        }
    }
}

/// How click streams were (or would be) paired into records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingStrategy {
    /// Clicks binned at `round(t / trial_period)`; a bin pairs iff it holds
    /// exactly one click per station within the window.
    FixedBins,
    /// Greedy nearest-neighbor matching within the window.
    NearestNeighbor,
}

/// Provenance and accounting attached to a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub model: String,
    pub seed: Option<u64>,
    pub n_trials: Option<u64>,
    pub schedule: Option<SettingsSchedule>,
    pub timing: Option<TimingConfig>,
    pub pairing: Option<PairingStrategy>,
    /// Bins dropped because one station produced more than one click.
    pub ambiguous_dropped: u64,
}

impl RunMetadata {
    fn simulation(model: &str, seed: u64, n_trials: u64, schedule: SettingsSchedule) -> Self {
        RunMetadata {
            model: model.to_string(),
            seed: Some(seed),
            n_trials: Some(n_trials),
            schedule: Some(schedule),
            timing: None,
            pairing: None,
            ambiguous_dropped: 0,
        }
    }
}

/// Trial records plus provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub records: Vec<TrialRecord>,
    pub metadata: RunMetadata,
}

/// One detection event.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub time: f64,
    pub setting: Setting,
    pub polarity: i8,
}

/// Time-ordered click record of one station.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickStream {
    pub station: Station,
    pub events: Vec<ClickEvent>,
}

impl ClickStream {
    /// Timestamps must strictly increase.
    pub fn is_time_ordered(&self) -> bool {
        self.events.windows(2).all(|w| w[0].time < w[1].time)
    }
}

fn generate_trial<S: Scalar>(
    model: &HvModel<S>,
    schedule: SettingsSchedule,
    n_trials: u64,
    seed: u64,
    index: u64,
) -> TrialRecord {
    let pair = schedule.pair_for(seed, index, n_trials);
    let mut rng = SubRng::new(seed, streams::STATE, index);
    let state = sample_trial_state(model, pair, &mut rng);
    let (a, b) = evaluate_outcomes(model, state, pair);
    TrialRecord {
        trial_index: index as i64,
        x: Some(pair.x),
        y: Some(pair.y),
        a,
        b,
    }
}

/// Runs `n_trials` trials and returns the trial-labelled dataset.
///
/// Outcome generation is exactly `sample_trial_state` followed by
/// `evaluate_outcomes`; the model must already have passed validation.
pub fn run_experiment<S: Scalar + Send + Sync>(
    model: &HvModel<S>,
    schedule: SettingsSchedule,
    n_trials: u64,
    seed: u64,
) -> RawDataset {
    let records: Vec<TrialRecord> = (0..n_trials)
        .into_par_iter()
        .map(|i| generate_trial(model, schedule, n_trials, seed, i))
        .collect();
    RawDataset {
        records,
        metadata: RunMetadata::simulation(&model.name, seed, n_trials, schedule),
    }
}

/// Converts trials into two per-station click streams.
///
/// Trial `k` sits nominally at `k * trial_period`; each nonzero outcome
/// becomes one click at the nominal time plus independent Gaussian jitter,
/// and zero outcomes emit nothing. The trials are generated from the same
/// `(seed, stream, index)` addresses as [`run_experiment`], so the two views
/// describe the same experiment.
pub fn generate_click_streams<S: Scalar + Send + Sync>(
    model: &HvModel<S>,
    schedule: SettingsSchedule,
    n_trials: u64,
    timing: &TimingConfig,
    seed: u64,
) -> (ClickStream, ClickStream) {
    let jitter = |stream: u64, index: u64| -> f64 {
        if timing.jitter_sigma > 0.0 {
            let normal = Normal::new(0.0, timing.jitter_sigma).expect("valid sigma");
            normal.sample(&mut SubRng::new(seed, stream, index))
        } else {
            0.0
        }
    };

    let mut events_a = Vec::new();
    let mut events_b = Vec::new();
    for i in 0..n_trials {
        let r = generate_trial(model, schedule, n_trials, seed, i);
        let nominal = i as f64 * timing.trial_period;
        if r.a != 0 {
            events_a.push(ClickEvent {
                time: nominal + jitter(streams::JITTER_A, i),
                setting: r.x.expect("simulated record carries settings"),
                polarity: r.a,
            });
        }
        if r.b != 0 {
            events_b.push(ClickEvent {
                time: nominal + jitter(streams::JITTER_B, i),
                setting: r.y.expect("simulated record carries settings"),
                polarity: r.b,
            });
        }
    }
    events_a.sort_by(|p, q| p.time.partial_cmp(&q.time).expect("finite times"));
    events_b.sort_by(|p, q| p.time.partial_cmp(&q.time).expect("finite times"));
    (
        ClickStream { station: Station::A, events: events_a },
        ClickStream { station: Station::B, events: events_b },
    )
}

fn bin_of(time: f64, period: f64) -> i64 {
    (time / period).round() as i64
}

fn single_record(bin: i64, station: Station, e: &ClickEvent) -> TrialRecord {
    match station {
        Station::A => TrialRecord {
            trial_index: bin,
            x: Some(e.setting),
            y: None,
            a: e.polarity,
            b: 0,
        },
        Station::B => TrialRecord {
            trial_index: bin,
            x: None,
            y: Some(e.setting),
            a: 0,
            b: e.polarity,
        },
    }
}

fn pair_fixed_bins(
    a: &ClickStream,
    b: &ClickStream,
    timing: &TimingConfig,
) -> (Vec<TrialRecord>, u64) {
    use std::collections::BTreeMap;

    #[derive(Default)]
    struct Bin {
        a: Vec<usize>,
        b: Vec<usize>,
    }

    let mut bins: BTreeMap<i64, Bin> = BTreeMap::new();
    for (i, e) in a.events.iter().enumerate() {
        bins.entry(bin_of(e.time, timing.trial_period)).or_default().a.push(i);
    }
    for (i, e) in b.events.iter().enumerate() {
        bins.entry(bin_of(e.time, timing.trial_period)).or_default().b.push(i);
    }

    let mut records = Vec::new();
    let mut ambiguous = 0u64;
    for (bin, slot) in bins {
        if slot.a.len() > 1 || slot.b.len() > 1 {
            ambiguous += 1;
            continue;
        }
        match (slot.a.first(), slot.b.first()) {
            (Some(&ia), Some(&ib)) => {
                let ea = &a.events[ia];
                let eb = &b.events[ib];
                if (ea.time - eb.time).abs() <= timing.window {
                    records.push(TrialRecord {
                        trial_index: bin,
                        x: Some(ea.setting),
                        y: Some(eb.setting),
                        a: ea.polarity,
                        b: eb.polarity,
                    });
                } else {
                    records.push(single_record(bin, Station::A, ea));
                    records.push(single_record(bin, Station::B, eb));
                }
            }
            (Some(&ia), None) => records.push(single_record(bin, Station::A, &a.events[ia])),
            (None, Some(&ib)) => records.push(single_record(bin, Station::B, &b.events[ib])),
            (None, None) => {}
        }
    }
    (records, ambiguous)
}

fn pair_nearest_neighbor(
    a: &ClickStream,
    b: &ClickStream,
    timing: &TimingConfig,
) -> Vec<TrialRecord> {
    let mut matched_b = vec![false; b.events.len()];
    let mut matches: Vec<(usize, usize)> = Vec::new();
    let mut lo = 0usize;

    for (ia, ea) in a.events.iter().enumerate() {
        while lo < b.events.len() && b.events[lo].time < ea.time - timing.window {
            lo += 1;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut j = lo;
        while j < b.events.len() && b.events[j].time <= ea.time + timing.window {
            if !matched_b[j] {
                let d = (b.events[j].time - ea.time).abs();
                // Strict < keeps the earlier click on ties.
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            j += 1;
        }
        if let Some((jb, _)) = best {
            matched_b[jb] = true;
            matches.push((ia, jb));
        }
    }

    let matched_a: std::collections::HashSet<usize> = matches.iter().map(|(i, _)| *i).collect();
    let mut keyed: Vec<(f64, TrialRecord)> = Vec::new();
    for (ia, ib) in &matches {
        let ea = &a.events[*ia];
        let eb = &b.events[*ib];
        let mid = 0.5 * (ea.time + eb.time);
        keyed.push((
            ea.time.min(eb.time),
            TrialRecord {
                trial_index: bin_of(mid, timing.trial_period),
                x: Some(ea.setting),
                y: Some(eb.setting),
                a: ea.polarity,
                b: eb.polarity,
            },
        ));
    }
    for (ia, ea) in a.events.iter().enumerate() {
        if !matched_a.contains(&ia) {
            keyed.push((ea.time, single_record(bin_of(ea.time, timing.trial_period), Station::A, ea)));
        }
    }
    for (ib, eb) in b.events.iter().enumerate() {
        if !matched_b[ib] {
            keyed.push((eb.time, single_record(bin_of(eb.time, timing.trial_period), Station::B, eb)));
        }
    }
    keyed.sort_by(|p, q| {
        p.0.partial_cmp(&q.0)
            .expect("finite times")
            .then(p.1.trial_index.cmp(&q.1.trial_index))
    });
    keyed.into_iter().map(|(_, r)| r).collect()
}

/// Reconstructs trial records from two click streams.
///
/// Matched pairs become full records; unmatched clicks become records with
/// the partner outcome 0 and the partner setting unknown. Each click is used
/// at most once. Under `FixedBins`, bins holding more than one click at one
/// station are dropped and counted in `metadata.ambiguous_dropped`.
pub fn pair_by_window(
    a: &ClickStream,
    b: &ClickStream,
    timing: &TimingConfig,
    strategy: PairingStrategy,
) -> RawDataset {
    let (records, ambiguous) = match strategy {
        PairingStrategy::FixedBins => pair_fixed_bins(a, b, timing),
        PairingStrategy::NearestNeighbor => (pair_nearest_neighbor(a, b, timing), 0),
    };
    RawDataset {
        records,
        metadata: RunMetadata {
            model: String::new(),
            seed: None,
            n_trials: None,
            schedule: None,
            timing: Some(*timing),
            pairing: Some(strategy),
            ambiguous_dropped: ambiguous,
        },
    }
}
