//! Hidden-variable model families.
//!
//! A model assigns probabilities to a finite hidden state `(λ1, λ2, λx, λy)`
//! and deterministic outcome tables to each station. The source part
//! `(λ1, λ2)` is drawn from a setting-independent joint distribution; the
//! instrument part `(λx, λy)` is drawn per trial either from per-setting
//! marginals `p_x ⊗ p_y` (variant `Model1`) or from a setting-pair joint
//! `p_xy` (variant `Model3`). Station A's outcome reads only `(λ1, λx)` and
//! station B's only `(λ2, λy)`, so causal locality is enforced by the table
//! shapes themselves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SubRng;
use crate::scalar::{from_f64, CompensatedSum, Scalar};

/// Absolute tolerance for probability normalization checks.
///
/// Distributions failing it are rejected, never renormalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Measurement setting at one station, labelled 1 or 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Setting {
    One,
    Two,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::One, Setting::Two];

    /// Zero-based index for table lookups.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Setting::One => 0,
            Setting::Two => 1,
        }
    }

    /// Conventional label, 1 or 2.
    #[inline]
    pub fn label(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl From<Setting> for u8 {
    fn from(s: Setting) -> u8 {
        s.label()
    }
}

impl TryFrom<u8> for Setting {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Setting::One),
            2 => Ok(Setting::Two),
            other => Err(format!("setting label must be 1 or 2, got {other}")),
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A pair of local settings `(x, y)`, one per station.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SettingPair {
    pub x: Setting,
    pub y: Setting,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair { x: Setting::One, y: Setting::One },
        SettingPair { x: Setting::One, y: Setting::Two },
        SettingPair { x: Setting::Two, y: Setting::One },
        SettingPair { x: Setting::Two, y: Setting::Two },
    ];

    /// Index into per-pair arrays: `(1,1) → 0, (1,2) → 1, (2,1) → 2, (2,2) → 3`.
    #[inline]
    pub fn index(self) -> usize {
        (self.x.index() << 1) | self.y.index()
    }

    pub fn new(x: Setting, y: Setting) -> Self {
        SettingPair { x, y }
    }
}

impl std::fmt::Display for SettingPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.x.label(), self.y.label())
    }
}

/// Measurement station tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Station {
    A,
    B,
}

impl std::fmt::Display for Station {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Station::A => write!(f, "A"),
            Station::B => write!(f, "B"),
        }
    }
}

/// Dense row-major 2-D table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Table2<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "table data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Table2 { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidInput("ragged table rows".into()));
        }
        let data = rows.into_iter().flatten().collect();
        Table2::new(n_rows, n_cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &T {
        assert!(i < self.rows && j < self.cols, "table index out of range");
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        assert!(i < self.rows, "table row out of range");
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Table2<U> {
        Table2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

/// Sizes of the finite hidden-variable spaces.
///
/// The source space Λ12 is the product Λ1 × Λ2 carrying the joint source
/// distribution; Λx and Λy are the per-setting instrument spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSpec {
    pub lambda1: usize,
    pub lambda2: usize,
    pub lambda_x: usize,
    pub lambda_y: usize,
}

impl SupportSpec {
    /// |Λ12| = |Λ1| · |Λ2|.
    pub fn lambda12(&self) -> u128 {
        self.lambda1 as u128 * self.lambda2 as u128
    }

    /// Enumeration size |Λ12| · |Λx| · |Λy| for one setting pair.
    pub fn states_per_pair(&self) -> u128 {
        self.lambda12() * self.lambda_x as u128 * self.lambda_y as u128
    }
}

/// Setting-independent joint distribution of the source variables `(λ1, λ2)`.
///
/// λ1 and λ2 may be statistically dependent; the matrix is `|Λ1| × |Λ2|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceDistribution<S> {
    pub probs: Table2<S>,
}

/// Instrument hidden-variable distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InstrumentDistribution<S> {
    /// Per-setting marginals: `(λx, λy) ~ p_x ⊗ p_y`.
    Model1 { px: [Vec<S>; 2], py: [Vec<S>; 2] },
    /// Setting-pair joints: `(λx, λy) ~ p_xy`, indexed by [`SettingPair::index`].
    Model3 { pxy: [Table2<S>; 4] },
}

/// Model variant tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    Model1,
    Model3,
}

impl<S> InstrumentDistribution<S> {
    pub fn variant(&self) -> ModelVariant {
        match self {
            InstrumentDistribution::Model1 { .. } => ModelVariant::Model1,
            InstrumentDistribution::Model3 { .. } => ModelVariant::Model3,
        }
    }
}

/// Deterministic outcome tables, values in {−1, 0, +1}.
///
/// `a[x][λ1][λx]` is station A's outcome under setting `x`; `b[y][λ2][λy]`
/// is station B's. A zero encodes a non-detection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseTables {
    pub a: [Table2<i8>; 2],
    pub b: [Table2<i8>; 2],
}

/// A full locally causal hidden-variable model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvModel<S> {
    pub name: String,
    pub support: SupportSpec,
    pub source: SourceDistribution<S>,
    pub instruments: InstrumentDistribution<S>,
    pub responses: ResponseTables,
}

/// Outcome of [`validate_model`]: empty means the model is well-formed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            write!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "  - {v}")?;
            }
            Ok(())
        }
    }
}

fn check_distribution<'a, S: Scalar + 'a>(
    label: &str,
    probs: impl Iterator<Item = &'a S>,
    out: &mut Vec<String>,
) {
    let mut sum = CompensatedSum::<S>::new();
    let mut negatives = 0usize;
    let mut n = 0usize;
    for p in probs {
        if *p < S::zero() {
            negatives += 1;
        }
        sum.add(p.clone());
        n += 1;
    }
    if n == 0 {
        out.push(format!("{label} is empty"));
        return;
    }
    if negatives > 0 {
        out.push(format!("{label} has {negatives} negative entries"));
    }
    let err = (sum.total() - S::one()).abs();
    if err > from_f64::<S>(NORMALIZATION_TOL) {
        out.push(format!(
            "{label} not normalized: |sum - 1| = {:?} exceeds {NORMALIZATION_TOL:e}",
            err
        ));
    }
}

/// Checks every structural and probabilistic invariant of a model.
///
/// Diagnostic: always returns a report, never aborts.
pub fn validate_model<S: Scalar>(model: &HvModel<S>) -> ValidationReport {
    let mut v = Vec::new();
    let sup = &model.support;

    if sup.lambda1 == 0 || sup.lambda2 == 0 || sup.lambda_x == 0 || sup.lambda_y == 0 {
        v.push("support sizes must all be >= 1".into());
    }

    let src = &model.source.probs;
    if src.rows() != sup.lambda1 || src.cols() != sup.lambda2 {
        v.push(format!(
            "source shape {}x{} does not match support {}x{}",
            src.rows(),
            src.cols(),
            sup.lambda1,
            sup.lambda2
        ));
    }
    check_distribution("source p(λ1,λ2)", src.iter(), &mut v);

    match &model.instruments {
        InstrumentDistribution::Model1 { px, py } => {
            for (i, p) in px.iter().enumerate() {
                if p.len() != sup.lambda_x {
                    v.push(format!("p_x{} length {} != |Λx| {}", i + 1, p.len(), sup.lambda_x));
                }
                check_distribution(&format!("instrument p_x{}", i + 1), p.iter(), &mut v);
            }
            for (i, p) in py.iter().enumerate() {
                if p.len() != sup.lambda_y {
                    v.push(format!("p_y{} length {} != |Λy| {}", i + 1, p.len(), sup.lambda_y));
                }
                check_distribution(&format!("instrument p_y{}", i + 1), p.iter(), &mut v);
            }
        }
        InstrumentDistribution::Model3 { pxy } => {
            for pair in SettingPair::ALL {
                let t = &pxy[pair.index()];
                if t.rows() != sup.lambda_x || t.cols() != sup.lambda_y {
                    v.push(format!(
                        "p_{pair} shape {}x{} does not match |Λx|x|Λy| {}x{}",
                        t.rows(),
                        t.cols(),
                        sup.lambda_x,
                        sup.lambda_y
                    ));
                }
                check_distribution(&format!("instrument p_{pair}"), t.iter(), &mut v);
            }
        }
    }

    let is_model3 = model.instruments.variant() == ModelVariant::Model3;
    let mut check_response = |tag: &str, t: &Table2<i8>, rows: usize, cols: usize| {
        if t.rows() != rows || t.cols() != cols {
            v.push(format!(
                "response {tag} shape {}x{} does not match {rows}x{cols}",
                t.rows(),
                t.cols()
            ));
        }
        for e in t.iter() {
            if !(-1..=1).contains(e) {
                v.push(format!("response {tag} has out-of-range value {e}"));
                break;
            }
        }
        if is_model3 && t.iter().any(|e| *e == 0) {
            v.push(format!(
                "response {tag} has a 0 entry: CbD outcomes must be ±1"
            ));
        }
    };
    for x in Setting::ALL {
        check_response(
            &format!("A_{x}"),
            &model.responses.a[x.index()],
            sup.lambda1,
            sup.lambda_x,
        );
    }
    for y in Setting::ALL {
        check_response(
            &format!("B_{y}"),
            &model.responses.b[y.index()],
            sup.lambda2,
            sup.lambda_y,
        );
    }

    ValidationReport { violations: v }
}

/// One sampled hidden state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HiddenState {
    pub l1: usize,
    pub l2: usize,
    pub lx: usize,
    pub ly: usize,
}

/// Inverse-CDF draw over an unnormalized probability slice.
///
/// Deterministic given the slice and `u`; never selects a zero-probability
/// cell.
fn sample_index<'a, S: Scalar + 'a>(probs: impl Iterator<Item = &'a S> + Clone, u: f64) -> usize {
    let total: f64 = probs
        .clone()
        .map(|p| p.to_f64().expect("probability converts to f64"))
        .sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.enumerate() {
        let pf = p.to_f64().expect("probability converts to f64");
        if pf > 0.0 {
            acc += pf;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Draws one hidden state `(λ1, λ2, λx, λy)` for the given setting pair.
///
/// The source draw and the instrument draw consume separate uniforms from
/// `rng`, so they are independent by construction.
pub fn sample_trial_state<S: Scalar>(
    model: &HvModel<S>,
    pair: SettingPair,
    rng: &mut SubRng,
) -> HiddenState {
    let src = &model.source.probs;
    let flat = sample_index(src.iter(), rng.uniform());
    let (l1, l2) = (flat / src.cols(), flat % src.cols());

    let (lx, ly) = match &model.instruments {
        InstrumentDistribution::Model1 { px, py } => {
            let lx = sample_index(px[pair.x.index()].iter(), rng.uniform());
            let ly = sample_index(py[pair.y.index()].iter(), rng.uniform());
            (lx, ly)
        }
        InstrumentDistribution::Model3 { pxy } => {
            let t = &pxy[pair.index()];
            let flat = sample_index(t.iter(), rng.uniform());
            (flat / t.cols(), flat % t.cols())
        }
    };

    HiddenState { l1, l2, lx, ly }
}

/// Pure table lookup of the two outcomes for a hidden state.
///
/// Station A reads only `(λ1, λx)`, station B only `(λ2, λy)`. Out-of-range
/// indices are a programming error and abort.
pub fn evaluate_outcomes<S>(
    model: &HvModel<S>,
    state: HiddenState,
    pair: SettingPair,
) -> (i8, i8) {
    let a = *model.responses.a[pair.x.index()].at(state.l1, state.lx);
    let b = *model.responses.b[pair.y.index()].at(state.l2, state.ly);
    (a, b)
}

impl<S: Scalar> HvModel<S> {
    /// Maps probability entries into another scalar type.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> HvModel<T> {
        let instruments = match &self.instruments {
            InstrumentDistribution::Model1 { px, py } => InstrumentDistribution::Model1 {
                px: [px[0].iter().map(f).collect(), px[1].iter().map(f).collect()],
                py: [py[0].iter().map(f).collect(), py[1].iter().map(f).collect()],
            },
            InstrumentDistribution::Model3 { pxy } => InstrumentDistribution::Model3 {
                pxy: [
                    pxy[0].map(f),
                    pxy[1].map(f),
                    pxy[2].map(f),
                    pxy[3].map(f),
                ],
            },
        };
        HvModel {
            name: self.name.clone(),
            support: self.support,
            source: SourceDistribution { probs: self.source.probs.map(f) },
            instruments,
            responses: self.responses.clone(),
        }
    }

    /// Rewrites a `Model1` instrument block as the degenerate `Model3` joint
    /// `p_xy = p_x ⊗ p_y`. Responses and source are unchanged; note that the
    /// result only passes validation if the responses are zero-free.
    pub fn to_model3_embedding(&self) -> Result<HvModel<S>> {
        let (px, py) = match &self.instruments {
            InstrumentDistribution::Model1 { px, py } => (px, py),
            InstrumentDistribution::Model3 { .. } => {
                return Err(Error::InvalidInput(
                    "model is already a Model3 instrument distribution".into(),
                ))
            }
        };
        let joint = |x: &Vec<S>, y: &Vec<S>| -> Table2<S> {
            let mut data = Vec::with_capacity(x.len() * y.len());
            for a in x {
                for b in y {
                    data.push(a.clone() * b.clone());
                }
            }
            Table2::new(x.len(), y.len(), data).expect("product table shape")
        };
        let pxy = [
            joint(&px[0], &py[0]),
            joint(&px[0], &py[1]),
            joint(&px[1], &py[0]),
            joint(&px[1], &py[1]),
        ];
        Ok(HvModel {
            name: format!("{}_as_model3", self.name),
            support: self.support,
            source: self.source.clone(),
            instruments: InstrumentDistribution::Model3 { pxy },
            responses: self.responses.clone(),
        })
    }
}

impl HvModel<f64> {
    /// Exact rational copy of the model: every `f64` probability is a dyadic
    /// rational, so no information is lost.
    pub fn to_rational(&self) -> HvModel<num_rational::BigRational> {
        self.map_scalar(|p| {
            num_rational::BigRational::from_float(*p).expect("finite probability")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Deterministic one-point model: a = +1, b = -1 always.
    fn point_model() -> HvModel<f64> {
        HvModel {
            name: "point".into(),
            support: SupportSpec { lambda1: 1, lambda2: 1, lambda_x: 1, lambda_y: 1 },
            source: SourceDistribution {
                probs: Table2::new(1, 1, vec![1.0]).unwrap(),
            },
            instruments: InstrumentDistribution::Model1 {
                px: [vec![1.0], vec![1.0]],
                py: [vec![1.0], vec![1.0]],
            },
            responses: ResponseTables {
                a: [
                    Table2::new(1, 1, vec![1]).unwrap(),
                    Table2::new(1, 1, vec![1]).unwrap(),
                ],
                b: [
                    Table2::new(1, 1, vec![-1]).unwrap(),
                    Table2::new(1, 1, vec![-1]).unwrap(),
                ],
            },
        }
    }

    fn two_point_model() -> HvModel<f64> {
        // λ1 = λ2 uniform on {0,1}, a = b = 2λ-1, uniform two-point instruments.
        HvModel {
            name: "two_point".into(),
            support: SupportSpec { lambda1: 2, lambda2: 2, lambda_x: 2, lambda_y: 2 },
            source: SourceDistribution {
                probs: Table2::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap(),
            },
            instruments: InstrumentDistribution::Model1 {
                px: [vec![0.5, 0.5], vec![0.5, 0.5]],
                py: [vec![0.5, 0.5], vec![0.5, 0.5]],
            },
            responses: ResponseTables {
                a: [
                    Table2::from_rows(vec![vec![-1, -1], vec![1, 1]]).unwrap(),
                    Table2::from_rows(vec![vec![-1, -1], vec![1, 1]]).unwrap(),
                ],
                b: [
                    Table2::from_rows(vec![vec![-1, -1], vec![1, 1]]).unwrap(),
                    Table2::from_rows(vec![vec![-1, -1], vec![1, 1]]).unwrap(),
                ],
            },
        }
    }

    #[test]
    fn valid_model_passes() {
        assert!(validate_model(&point_model()).is_ok());
        assert!(validate_model(&two_point_model()).is_ok());
    }

    #[test]
    fn non_normalized_source_is_reported() {
        let mut m = point_model();
        m.source.probs = Table2::new(1, 1, vec![0.999]).unwrap();
        let report = validate_model(&m);
        assert!(!report.is_ok());
        assert!(report.violations.iter().any(|v| v.contains("source") && v.contains("not normalized")));
    }

    #[test]
    fn model3_with_zero_outcome_is_reported() {
        let m = point_model();
        let mut m3 = m.to_model3_embedding().unwrap();
        m3.responses.a[0] = Table2::new(1, 1, vec![0]).unwrap();
        let report = validate_model(&m3);
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("CbD outcomes must be ±1")));
    }

    #[test]
    fn out_of_range_response_is_reported() {
        let mut m = point_model();
        m.responses.b[1] = Table2::new(1, 1, vec![2]).unwrap();
        let report = validate_model(&m);
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("out-of-range value 2")));
    }

    #[test]
    fn point_mass_sampling_is_constant() {
        let m = point_model();
        for i in 0..100 {
            let mut rng = SubRng::new(9, 2, i);
            let s = sample_trial_state(&m, SettingPair::ALL[0], &mut rng);
            assert_eq!(s, HiddenState { l1: 0, l2: 0, lx: 0, ly: 0 });
        }
    }

    #[test]
    fn uniform_instrument_frequencies_concentrate() {
        // Spec contract: 10^6 draws, each λx value within 0.5 ± 0.002.
        let m = two_point_model();
        let n = 1_000_000u64;
        let mut count_lx1 = 0u64;
        for i in 0..n {
            let mut rng = SubRng::new(31, 2, i);
            let s = sample_trial_state(&m, SettingPair::ALL[0], &mut rng);
            count_lx1 += (s.lx == 1) as u64;
        }
        let freq = count_lx1 as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.002, "freq = {freq}");
    }

    #[test]
    fn correlated_model3_instruments_restrict_support() {
        // p_xy concentrated on λx = λy: every draw must agree.
        let m = two_point_model();
        let pxy_corr = Table2::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let m3 = HvModel {
            instruments: InstrumentDistribution::Model3 {
                pxy: [
                    pxy_corr.clone(),
                    pxy_corr.clone(),
                    pxy_corr.clone(),
                    pxy_corr,
                ],
            },
            ..m
        };
        for i in 0..1000 {
            let mut rng = SubRng::new(5, 2, i);
            let s = sample_trial_state(&m3, SettingPair::ALL[3], &mut rng);
            assert_eq!(s.lx, s.ly);
        }
    }

    #[test]
    fn evaluate_reads_only_local_state() {
        // Exhaustive sweep: for fixed (λ1, λx, x), a is identical across all
        // λ2, λy and the remote setting y; symmetric for b.
        let m = two_point_model();
        let sup = m.support;
        for l1 in 0..sup.lambda1 {
            for lx in 0..sup.lambda_x {
                for x in Setting::ALL {
                    let mut values = Vec::new();
                    for l2 in 0..sup.lambda2 {
                        for ly in 0..sup.lambda_y {
                            for y in Setting::ALL {
                                let (a, _) = evaluate_outcomes(
                                    &m,
                                    HiddenState { l1, l2, lx, ly },
                                    SettingPair::new(x, y),
                                );
                                values.push(a);
                            }
                        }
                    }
                    assert!(values.windows(2).all(|w| w[0] == w[1]));
                }
            }
        }
        for l2 in 0..sup.lambda2 {
            for ly in 0..sup.lambda_y {
                for y in Setting::ALL {
                    let mut values = Vec::new();
                    for l1 in 0..sup.lambda1 {
                        for lx in 0..sup.lambda_x {
                            for x in Setting::ALL {
                                let (_, b) = evaluate_outcomes(
                                    &m,
                                    HiddenState { l1, l2, lx, ly },
                                    SettingPair::new(x, y),
                                );
                                values.push(b);
                            }
                        }
                    }
                    assert!(values.windows(2).all(|w| w[0] == w[1]));
                }
            }
        }
    }

    #[test]
    fn lookup_examples() {
        let m = two_point_model();
        // λ1 = 0 gives a = -1 under the 2λ-1 table.
        let (a, _) = evaluate_outcomes(
            &m,
            HiddenState { l1: 0, l2: 0, lx: 0, ly: 0 },
            SettingPair::ALL[0],
        );
        assert_eq!(a, -1);
        // Constant +1 table.
        let mut constant = m.clone();
        constant.responses.a[0] = Table2::from_rows(vec![vec![1, 1], vec![1, 1]]).unwrap();
        for l1 in 0..2 {
            for lx in 0..2 {
                let (a, _) = evaluate_outcomes(
                    &constant,
                    HiddenState { l1, l2: 0, lx, ly: 0 },
                    SettingPair::ALL[0],
                );
                assert_eq!(a, 1);
            }
        }
        // Detection-gated: a = 0 when λx = 0.
        let mut gated = m;
        gated.responses.a[0] = Table2::from_rows(vec![vec![0, -1], vec![0, 1]]).unwrap();
        let (a, _) = evaluate_outcomes(
            &gated,
            HiddenState { l1: 1, l2: 0, lx: 0, ly: 0 },
            SettingPair::ALL[0],
        );
        assert_eq!(a, 0);
    }

    #[test]
    fn embedding_shapes_product_joint() {
        let m = two_point_model();
        let m3 = m.to_model3_embedding().unwrap();
        match &m3.instruments {
            InstrumentDistribution::Model3 { pxy } => {
                assert_eq!(*pxy[0].at(0, 1), 0.25);
            }
            _ => panic!("expected Model3"),
        }
        assert!(validate_model(&m3).is_ok());
    }
}
