//! Event-based simulation and analysis of Bell-test experiments under
//! locally causal hidden-variable models with setting-dependent instrument
//! distributions.
//!
//! The crate covers the full experimental loop:
//!
//! - [`model`]: finite hidden-variable models — a setting-independent source
//!   over `(λ1, λ2)` plus per-setting (`Model1`) or per-setting-pair
//!   (`Model3`) instrument distributions and deterministic ±1/0 response
//!   tables.
//! - [`sim`]: trial generation, timestamped click streams, and
//!   coincidence-window pairing.
//! - [`pipeline`]: raw-to-final extraction of coincident nonzero pairs with
//!   exact discard accounting.
//! - [`stats`]: conditional correlations, CHSH combinations, and
//!   no-signaling z-tests.
//! - [`exact`]: a brute-force enumeration oracle every estimator is tested
//!   against.
//! - [`coupling`]: counterfactual quadruple couplings, the per-trial CHSH
//!   identity, and a joint-probability feasibility LP.
//!
//! Numeric kernels are generic over [`scalar::Scalar`]; the crate-level
//! aliases pin the defaults: [`Real`] (`f64`) for simulation and [`Rational`]
//! for exact LP verdicts and oracle cross-checks.

pub mod coupling;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod gallery;
pub mod model;
pub mod model_file;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod simplex;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    evaluate_outcomes, sample_trial_state, validate_model, HiddenState, HvModel,
    InstrumentDistribution, ModelVariant, ResponseTables, Setting, SettingPair,
    SourceDistribution, Station, SupportSpec, Table2, ValidationReport,
};

/// Default scalar for probabilities and estimates.
pub type Real = f64;

/// Exact scalar used for rational LP verdicts and oracle cross-checks.
pub type Rational = num_rational::BigRational;

/// Hidden-variable model over the default scalar.
pub type Model = HvModel<Real>;
