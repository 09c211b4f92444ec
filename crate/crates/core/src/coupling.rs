//! Counterfactual couplings and joint-probability feasibility.
//!
//! A coupling realizes the outcomes of all four incompatible setting pairs
//! as one jointly distributed quadruple `(a1, a2, b1, b2)`. Per trial the
//! CHSH combination `a1 b1 + a1 b2 + a2 b1 - a2 b2` is identically ±2, so
//! every finite sample mean lands in [−2, 2] — no statistical slack needed.
//!
//! `jp_feasibility` asks the converse question of a given set of four
//! pairwise distributions: does any such joint distribution reproduce them?
//! The answer is settled by a linear program over the 16 outcome atoms,
//! cross-checkable against the eight CHSH facets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::chsh_values;
use crate::model::{HvModel, InstrumentDistribution, SettingPair};
use crate::rng::{philox4x64, streams};
use crate::scalar::Scalar;
use crate::simplex::{solve, LpOutcome, StandardLp};

/// Normalization tolerance for joint distributions over the 16 atoms.
pub const JP_NORMALIZATION_TOL: f64 = 1e-9;

/// Default feasibility tolerance for exact (oracle-derived) tables.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

/// Jointly realized outcomes of the four experiments, all ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingQuadruple {
    pub a1: i8,
    pub a2: i8,
    pub b1: i8,
    pub b2: i8,
}

impl CouplingQuadruple {
    pub fn new(a1: i8, a2: i8, b1: i8, b2: i8) -> Result<Self> {
        for v in [a1, a2, b1, b2] {
            if v != 1 && v != -1 {
                return Err(Error::InvalidInput(format!(
                    "coupling outcomes must be ±1, got {v}"
                )));
            }
        }
        Ok(CouplingQuadruple { a1, a2, b1, b2 })
    }

    /// Atom index: bit 3..0 = (a1, a2, b1, b2), bit set means −1.
    pub fn index(self) -> usize {
        let bit = |v: i8| usize::from(v < 0);
        (bit(self.a1) << 3) | (bit(self.a2) << 2) | (bit(self.b1) << 1) | bit(self.b2)
    }

    pub fn from_index(idx: usize) -> Self {
        assert!(idx < 16, "atom index out of range");
        let sign = |bit: usize| if idx >> bit & 1 == 0 { 1i8 } else { -1 };
        CouplingQuadruple { a1: sign(3), a2: sign(2), b1: sign(1), b2: sign(0) }
    }

    /// Components seen by the context `(x, y)`.
    pub fn outcomes_for(self, pair: SettingPair) -> (i8, i8) {
        let a = if pair.x.index() == 0 { self.a1 } else { self.a2 };
        let b = if pair.y.index() == 0 { self.b1 } else { self.b2 };
        (a, b)
    }
}

/// Distribution over the 16 outcome atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution16 {
    pub probs: [f64; 16],
}

impl JointDistribution16 {
    pub fn new(probs: [f64; 16]) -> Result<Self> {
        if probs.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidInput("joint distribution has negative mass".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > JP_NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!(
                "joint distribution sums to {sum}, not 1 within {JP_NORMALIZATION_TOL:e}"
            )));
        }
        Ok(JointDistribution16 { probs })
    }

    pub fn uniform() -> Self {
        JointDistribution16 { probs: [1.0 / 16.0; 16] }
    }

    /// Pairwise distribution induced on context `(x, y)`.
    pub fn induced_pairwise(&self, pair: SettingPair) -> PairwiseTable {
        let mut probs = [0.0f64; 4];
        for idx in 0..16 {
            let (a, b) = CouplingQuadruple::from_index(idx).outcomes_for(pair);
            probs[outcome_index(a, b)] += self.probs[idx];
        }
        PairwiseTable { probs }
    }

    /// All four induced pairwise tables, indexed per [`SettingPair::index`].
    pub fn induced_tables(&self) -> [PairwiseTable; 4] {
        SettingPair::ALL.map(|p| self.induced_pairwise(p))
    }

    fn cumulative(&self) -> [f64; 16] {
        let mut cum = [0.0f64; 16];
        let mut acc = 0.0;
        for (c, p) in cum.iter_mut().zip(self.probs.iter()) {
            acc += p;
            *c = acc;
        }
        cum
    }
}

#[inline]
fn outcome_index(a: i8, b: i8) -> usize {
    2 * usize::from(a < 0) + usize::from(b < 0)
}

/// Distribution of one context's outcome pair, order `(+,+), (+,-), (-,+), (-,-)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTable {
    pub probs: [f64; 4],
}

impl PairwiseTable {
    pub fn expectation(&self) -> f64 {
        self.probs[0] - self.probs[1] - self.probs[2] + self.probs[3]
    }

    /// P(a = +1).
    pub fn marginal_a(&self) -> f64 {
        self.probs[0] + self.probs[1]
    }

    /// P(b = +1).
    pub fn marginal_b(&self) -> f64 {
        self.probs[0] + self.probs[2]
    }

    /// Builds a table from `E(ab)`, `E(a)`, `E(b)`.
    pub fn from_moments(e_ab: f64, e_a: f64, e_b: f64) -> Result<Self> {
        let mut probs = [0.0f64; 4];
        for (i, p) in probs.iter_mut().enumerate() {
            let alpha = if i < 2 { 1.0 } else { -1.0 };
            let beta = if i % 2 == 0 { 1.0 } else { -1.0 };
            *p = (1.0 + alpha * e_a + beta * e_b + alpha * beta * e_ab) / 4.0;
            if *p < -1e-12 {
                return Err(Error::InvalidInput(format!(
                    "moments (e_ab={e_ab}, e_a={e_a}, e_b={e_b}) are not a distribution"
                )));
            }
            *p = p.max(0.0);
        }
        Ok(PairwiseTable { probs })
    }
}

/// Per-trial CHSH combination `a1 b1 + a1 b2 + a2 b1 - a2 b2`.
///
/// Identically ±2 on ±1-valued quadruples.
pub fn chsh_identity(q: CouplingQuadruple) -> i32 {
    let (a1, a2, b1, b2) = (q.a1 as i32, q.a2 as i32, q.b1 as i32, q.b2 as i32);
    a1 * b1 + a1 * b2 + a2 * b1 - a2 * b2
}

/// I.i.d. quadruples from `jp`, deterministically addressed per index:
/// sample `i` consumes word `i % 4` of Philox block `i / 4` under key
/// `(seed, COUPLING)`.
pub fn sample_coupling(jp: &JointDistribution16, n: usize, seed: u64) -> Vec<CouplingQuadruple> {
    let cum = jp.cumulative();
    let pick = |u: f64| -> CouplingQuadruple {
        let target = u * cum[15];
        for idx in 0..16 {
            if jp.probs[idx] > 0.0 && target < cum[idx] {
                return CouplingQuadruple::from_index(idx);
            }
        }
        let last = (0..16).rfind(|i| jp.probs[*i] > 0.0).unwrap_or(15);
        CouplingQuadruple::from_index(last)
    };

    let mut out = vec![CouplingQuadruple { a1: 1, a2: 1, b1: 1, b2: 1 }; n];
    const CHUNK: usize = 4096; // multiple of 4: chunks own whole blocks
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk_idx, chunk)| {
        let base = chunk_idx * CHUNK;
        let mut block = [0u64; 4];
        for (k, slot) in chunk.iter_mut().enumerate() {
            let i = base + k;
            if i % 4 == 0 || k == 0 {
                block = philox4x64([(i / 4) as u64, 0, 0, 0], [seed, streams::COUPLING]);
            }
            let word = block[i % 4];
            let u = (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            *slot = pick(u);
        }
    });
    out
}

/// Mean of [`chsh_identity`] over the samples.
///
/// Computed from the ±2 counts, so the result is guaranteed to lie in
/// [−2, 2] exactly for every finite sample.
pub fn empirical_chsh_from_coupling(samples: &[CouplingQuadruple]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let plus: u64 = samples
        .par_iter()
        .map(|q| u64::from(chsh_identity(*q) == 2))
        .sum();
    let minus = samples.len() as u64 - plus;
    let diff = plus as i64 - minus as i64;
    Ok(diff as f64 * 2.0 / samples.len() as f64)
}

/// Verdict of the joint-probability feasibility question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    MarginalsInconsistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// A joint distribution reproducing the inputs within tolerance, when
    /// one exists.
    pub witness: Option<JointDistribution16>,
    /// `s_max - 2` of the input expectations (negative inside the polytope).
    pub max_facet_violation: f64,
    /// Largest cross-context marginal discrepancy found.
    pub max_marginal_discrepancy: f64,
}

/// `s_max - 2` over the eight CHSH facets of four pairwise expectations.
pub fn facet_check(expectations: &[f64; 4]) -> f64 {
    chsh_values(expectations).s_max - 2.0
}

/// Atom-consistency matrix: `A[i][k] = 1` iff atom `k` induces outcome cell
/// `i = 4*ctx + outcome`.
fn consistency_matrix() -> [[bool; 16]; 16] {
    let mut a = [[false; 16]; 16];
    for (ctx, pair) in SettingPair::ALL.into_iter().enumerate() {
        for k in 0..16 {
            let (qa, qb) = CouplingQuadruple::from_index(k).outcomes_for(pair);
            a[4 * ctx + outcome_index(qa, qb)][k] = true;
        }
    }
    a
}

/// Builds and solves `min t` s.t. the induced tables match the inputs within
/// `t`. Returns the optimum and the 16 atom weights.
fn solve_min_violation<S: Scalar>(targets: &[S; 16], eps: S) -> Result<(S, Vec<S>)> {
    let consistent = consistency_matrix();
    // Columns: q (16), t (1), s+ (16), s- (16).
    let n = 16 + 1 + 16 + 16;
    let mut constraints = Vec::with_capacity(33);
    let mut rhs = Vec::with_capacity(33);

    for i in 0..16 {
        // A q - t + s_i = p_i
        let mut row = vec![S::zero(); n];
        for k in 0..16 {
            if consistent[i][k] {
                row[k] = S::one();
            }
        }
        row[16] = -S::one();
        row[17 + i] = S::one();
        constraints.push(row);
        rhs.push(targets[i].clone());

        // A q + t - s'_i = p_i
        let mut row = vec![S::zero(); n];
        for k in 0..16 {
            if consistent[i][k] {
                row[k] = S::one();
            }
        }
        row[16] = S::one();
        row[33 + i] = -S::one();
        constraints.push(row);
        rhs.push(targets[i].clone());
    }
    // Σ q = 1
    let mut row = vec![S::zero(); n];
    for k in 0..16 {
        row[k] = S::one();
    }
    constraints.push(row);
    rhs.push(S::one());

    let mut objective = vec![S::zero(); n];
    objective[16] = S::one();

    match solve(&StandardLp { objective, constraints, rhs }, eps)? {
        LpOutcome::Optimal { x, objective } => Ok((objective, x[..16].to_vec())),
        other => Err(Error::InvalidInput(format!(
            "min-violation LP cannot be {other:?}: the problem is always feasible and bounded"
        ))),
    }
}

fn flatten_targets(tables: &[PairwiseTable; 4]) -> [f64; 16] {
    let mut t = [0.0f64; 16];
    for (ctx, table) in tables.iter().enumerate() {
        for (o, p) in table.probs.iter().enumerate() {
            t[4 * ctx + o] = *p;
        }
    }
    t
}

/// Decides whether any [`JointDistribution16`] reproduces the four pairwise
/// distributions within `tolerance`.
///
/// Marginal consistency is checked first: when a station's marginal depends
/// on the remote setting beyond `tolerance`, no coupling exists for the
/// direct reason, and the LP is skipped. The LP runs in `f64`; verdicts
/// within the floating-point guard band of the threshold are re-solved in
/// exact rational arithmetic.
pub fn jp_feasibility(tables: &[PairwiseTable; 4], tolerance: f64) -> Result<FeasibilityResult> {
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidInput("tolerance must be nonnegative".into()));
    }
    for (i, t) in tables.iter().enumerate() {
        if t.probs.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidInput(format!(
                "pairwise table {} has negative entries",
                SettingPair::ALL[i]
            )));
        }
        let sum: f64 = t.probs.iter().sum();
        if (sum - 1.0).abs() > tolerance.max(JP_NORMALIZATION_TOL) {
            return Err(Error::InvalidInput(format!(
                "pairwise table {} sums to {sum}, not 1",
                SettingPair::ALL[i]
            )));
        }
    }

    let expectations = [
        tables[0].expectation(),
        tables[1].expectation(),
        tables[2].expectation(),
        tables[3].expectation(),
    ];
    let max_facet_violation = facet_check(&expectations);

    let table = |x: usize, y: usize| &tables[2 * x + y];
    let mut max_marginal_discrepancy = 0.0f64;
    for x in 0..2 {
        let d = (table(x, 0).marginal_a() - table(x, 1).marginal_a()).abs();
        max_marginal_discrepancy = max_marginal_discrepancy.max(d);
    }
    for y in 0..2 {
        let d = (table(0, y).marginal_b() - table(1, y).marginal_b()).abs();
        max_marginal_discrepancy = max_marginal_discrepancy.max(d);
    }
    if max_marginal_discrepancy > tolerance {
        return Ok(FeasibilityResult {
            status: FeasibilityStatus::MarginalsInconsistent,
            witness: None,
            max_facet_violation,
            max_marginal_discrepancy,
        });
    }

    let targets = flatten_targets(tables);
    let (t_star, weights) = solve_min_violation(&targets, 1e-11f64)?;

    // Near the threshold the f64 optimum cannot be trusted; re-decide exactly.
    let guard = (tolerance * 1e-6).max(1e-12);
    let (feasible, weights) = if (t_star - tolerance).abs() <= guard {
        let exact_targets: [num_rational::BigRational; 16] = targets
            .map(|p| num_rational::BigRational::from_float(p).expect("finite probability"));
        let zero = num_rational::BigRational::from_integer(0.into());
        let (t_exact, w_exact) = solve_min_violation(&exact_targets, zero)?;
        let tol_exact =
            num_rational::BigRational::from_float(tolerance).expect("finite tolerance");
        (
            t_exact <= tol_exact,
            w_exact
                .iter()
                .map(|w| num_traits::ToPrimitive::to_f64(w).expect("witness weight"))
                .collect::<Vec<f64>>(),
        )
    } else {
        (t_star <= tolerance, weights)
    };

    if feasible {
        let mut probs = [0.0f64; 16];
        for (slot, w) in probs.iter_mut().zip(weights.iter()) {
            *slot = w.max(0.0);
        }
        Ok(FeasibilityResult {
            status: FeasibilityStatus::Feasible,
            witness: Some(JointDistribution16::new(probs)?),
            max_facet_violation,
            max_marginal_discrepancy,
        })
    } else {
        Ok(FeasibilityResult {
            status: FeasibilityStatus::Infeasible,
            witness: None,
            max_facet_violation,
            max_marginal_discrepancy,
        })
    }
}

/// The natural product coupling of a zero-free `Model1` model: draw the
/// source once, draw instrument variables for both settings of each station
/// independently, and evaluate all four responses on the shared state.
///
/// Its pairwise margins equal the model's raw expectations by construction.
pub fn product_coupling(model: &HvModel<f64>) -> Result<JointDistribution16> {
    let (px, py) = match &model.instruments {
        InstrumentDistribution::Model1 { px, py } => (px, py),
        InstrumentDistribution::Model3 { .. } => {
            return Err(Error::InvalidInput(
                "product coupling is defined for Model1 instrument distributions".into(),
            ))
        }
    };
    let zero_free = model
        .responses
        .a
        .iter()
        .chain(model.responses.b.iter())
        .all(|t| t.iter().all(|v| *v != 0));
    if !zero_free {
        return Err(Error::InvalidInput(
            "product coupling requires zero-free responses: quadruples are ±1-valued".into(),
        ));
    }

    let sup = &model.support;
    let states = sup.lambda12()
        * (sup.lambda_x as u128).pow(2)
        * (sup.lambda_y as u128).pow(2);
    if states > crate::exact::DEFAULT_STATE_BUDGET {
        return Err(Error::BudgetExceeded {
            required: states,
            cap: crate::exact::DEFAULT_STATE_BUDGET,
        });
    }

    let mut probs = [0.0f64; 16];
    let source = &model.source.probs;
    for l1 in 0..sup.lambda1 {
        for l2 in 0..sup.lambda2 {
            let w12 = *source.at(l1, l2);
            if w12 == 0.0 {
                continue;
            }
            for (lx1, wx1) in px[0].iter().enumerate() {
                for (lx2, wx2) in px[1].iter().enumerate() {
                    let a1 = *model.responses.a[0].at(l1, lx1);
                    let a2 = *model.responses.a[1].at(l1, lx2);
                    let wx = wx1 * wx2;
                    if wx == 0.0 {
                        continue;
                    }
                    for (ly1, wy1) in py[0].iter().enumerate() {
                        for (ly2, wy2) in py[1].iter().enumerate() {
                            let w = w12 * wx * wy1 * wy2;
                            if w == 0.0 {
                                continue;
                            }
                            let b1 = *model.responses.b[0].at(l2, ly1);
                            let b2 = *model.responses.b[1].at(l2, ly2);
                            let q = CouplingQuadruple { a1, a2, b1, b2 };
                            probs[q.index()] += w;
                        }
                    }
                }
            }
        }
    }
    JointDistribution16::new(probs)
}
