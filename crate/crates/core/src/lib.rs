//! Fountain-code laboratory: finite fields and exact linear algebra,
//! degree distributions, LT / random-linear / raptor codes, inactivation
//! decoding, finite-length dynamic programs, distance spectra, failure
//! bounds, Monte Carlo simulation, and degree-distribution design.

pub mod analysis;
pub mod bounds;
pub mod degree;
pub mod design;
pub mod gf;
pub mod inactivation;
pub mod linalg;
pub mod lt;
pub mod numeric;
pub mod raptor;
pub mod sim;
pub mod spectra;

pub use analysis::{
    binomial_ripple_approximation, expected_inactivations_dp, inactivation_distribution_dp,
    release_probabilities, FirstOrderDp, InactivationDistribution,
};
pub use bounds::{
    lrfc_bounds, lt_ml_lower_bound, raptor_ml_upper_bound, BoundCurve, BoundEstimate, BoundKind,
    KrawtchoukKernel, NumericStatus,
};
pub use degree::{DegreeDistribution, RsdParams};
pub use design::{
    anneal, design_tsv, objective, DesignContext, DesignResult, DesignSpec, Family, OverheadPoint,
    Schedule,
};
pub use gf::{Fe, FieldSpec};
pub use inactivation::{
    inactivation_decode, triangulate, InactivationStrategy, SparseSystem,
};
pub use linalg::{BitMatrix, EliminationReport, FieldMatrix};
pub use lt::{lrfc_encode, lt_encode, ml_decode, peel_decode, LtColumn, ReceivedSet};
pub use raptor::{ConcatCode, Precode, PrecodeSpec, R10Params, RaptorCode, SystematicRaptor};
pub use sim::{
    erase, fixed_receipts_trial, parse_plan_tsv, plan_tsv, run_plan, BuiltCode, ChannelSpec,
    CodeConfig, DistSpec, EstimateRow, SimError, StopRule, SweepSpec, TrialPlan,
};
pub use spectra::{
    growth_rate, raptor_ensemble_spectrum, region_membership, typical_min_distance, GrowthCurve,
    RatePair, WeightEnumerator,
};
