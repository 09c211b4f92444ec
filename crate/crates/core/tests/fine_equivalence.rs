//! Property tests of the feasibility LP against the facet description: for
//! consistent-marginal pairwise tables, a joint distribution over the 16
//! atoms exists exactly when all eight CHSH facets are satisfied.

use bellsim::coupling::{
    facet_check, jp_feasibility, FeasibilityStatus, PairwiseTable, DEFAULT_FEASIBILITY_TOL,
};
use proptest::prelude::*;

/// A consistent-marginal family: shared station marginals, per-context
/// correlations sampled inside the rectangle that keeps every cell
/// probability nonnegative.
fn consistent_tables() -> impl Strategy<Value = [PairwiseTable; 4]> {
    let m = || -0.95..0.95f64;
    (m(), m(), m(), m(), 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(
        |(ma1, ma2, mb1, mb2, u0, u1, u2, u3)| {
            let margins = [(ma1, mb1), (ma1, mb2), (ma2, mb1), (ma2, mb2)];
            let us = [u0, u1, u2, u3];
            let mut tables = [PairwiseTable { probs: [0.25; 4] }; 4];
            for (i, ((ma, mb), u)) in margins.into_iter().zip(us).enumerate() {
                let lo = (ma + mb).abs() - 1.0;
                let hi = 1.0 - (ma - mb).abs();
                let c = lo + u * (hi - lo);
                tables[i] = PairwiseTable::from_moments(c, ma, mb).unwrap();
            }
            tables
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lp_verdict_matches_the_facet_check(tables in consistent_tables()) {
        let result = jp_feasibility(&tables, DEFAULT_FEASIBILITY_TOL).unwrap();
        let expectations = [
            tables[0].expectation(),
            tables[1].expectation(),
            tables[2].expectation(),
            tables[3].expectation(),
        ];
        let violation = facet_check(&expectations);
        match result.status {
            FeasibilityStatus::Feasible => {
                prop_assert!(violation <= DEFAULT_FEASIBILITY_TOL,
                    "LP feasible but facet violation {violation}");
            }
            FeasibilityStatus::Infeasible => {
                prop_assert!(violation >= -DEFAULT_FEASIBILITY_TOL,
                    "LP infeasible but facets satisfied by {violation}");
            }
            FeasibilityStatus::MarginalsInconsistent => {
                prop_assert!(false, "generator produced inconsistent marginals");
            }
        }
    }

    /// Any witness must reproduce the inputs within tolerance, checked here
    /// against the inputs directly rather than through the solver.
    #[test]
    fn witnesses_reproduce_their_inputs(tables in consistent_tables()) {
        let result = jp_feasibility(&tables, DEFAULT_FEASIBILITY_TOL).unwrap();
        if let Some(witness) = result.witness {
            prop_assert_eq!(result.status, FeasibilityStatus::Feasible);
            for (induced, input) in witness.induced_tables().iter().zip(tables.iter()) {
                for (p, q) in induced.probs.iter().zip(input.probs.iter()) {
                    prop_assert!((p - q).abs() <= DEFAULT_FEASIBILITY_TOL + 1e-10,
                        "witness cell {p} vs input {q}");
                }
            }
        }
    }
}
