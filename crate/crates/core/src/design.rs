//! Simulated-annealing design of output degree distributions: minimize the
//! expected inactivation count subject to a failure-probability target, a
//! mean-degree budget, and a support mask.
//!
//! The annealer walks either free mass vectors on the support or the
//! two-parameter truncated robust-soliton family. Inner-loop scoring uses
//! the fast ripple approximations and analytic failure bounds; the final
//! design is re-scored with the exact dynamic program before it is reported.

use crate::analysis::{
    binomial_ripple_approximation, expected_inactivations_dp, parity_row_degree_distribution,
    surrogate_binomial_approximation, surrogate_intermediate_distribution,
};
use crate::bounds::{
    lt_ml_lower_bound_with_receipts, raptor_ml_upper_bound_with_kernel, KrawtchoukKernel,
};
use crate::degree::{DegreeDistribution, DegreeError, RsdParams};
use crate::raptor::Precode;
use crate::spectra::WeightEnumerator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("target failure probability {0} must lie strictly inside (0,1)")]
    BadTarget(f64),
    #[error("mean-degree budget {0} must exceed 1")]
    BadMeanCap(f64),
    #[error("support mask is empty")]
    EmptySupport,
    #[error("support degree {0} outside 1..=dmax")]
    BadSupportDegree(usize),
    #[error("soliton-family designs need the support mask to cover 1..=dmax")]
    PartialSolitonSupport,
    #[error("no distribution on the support can satisfy the mean constraint")]
    UnreachableMean,
    #[error("schedule needs at least one chain running at least one step")]
    BadSchedule,
    #[error("degree cap {dmax} exceeds the {h} intermediate variables")]
    DegreeCapTooLarge { dmax: usize, h: usize },
    #[error(transparent)]
    Degree(#[from] DegreeError),
}

/// Where the design is scored: receipts relative to or in excess of k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverheadPoint {
    Relative { epsilon: f64 },
    Absolute { delta: usize },
}

impl OverheadPoint {
    pub fn receipts(&self, k: usize) -> usize {
        match *self {
            OverheadPoint::Relative { epsilon } => (k as f64 * (1.0 + epsilon)).round() as usize,
            OverheadPoint::Absolute { delta } => k + delta,
        }
    }
}

/// The space the annealer walks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// Free probability masses on the support mask.
    Free,
    /// Truncated robust-soliton distributions; the fields seed the walk.
    TruncatedRsd { c: f64, delta: f64 },
}

impl Default for Family {
    fn default() -> Self {
        Family::Free
    }
}

/// Annealing schedule. A missing initial temperature is calibrated so that
/// roughly 80% of initially-worsening moves would be accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    pub t_init: Option<f64>,
    pub cooling: f64,
    pub sweeps: usize,
    pub steps_per_sweep: usize,
    pub chains: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { t_init: None, cooling: 0.97, sweeps: 150, steps_per_sweep: 20, chains: 2 }
    }
}

/// Complete design problem statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    /// Source block size the failure target refers to.
    pub k: usize,
    /// Failure-probability target the design must beat.
    pub target_pf: f64,
    /// Overhead point where both objective terms are evaluated.
    pub eval_at: OverheadPoint,
    /// Mean-degree budget; with `pin_mean` the mean is held there exactly.
    pub max_mean: f64,
    #[serde(default)]
    pub pin_mean: bool,
    pub dmax: usize,
    /// Degrees a design may use. Every candidate's support stays inside
    /// this mask (soliton-family walks therefore need it to cover 1..=dmax).
    pub support: Vec<usize>,
    /// Penalty weight b; defaults to 1000 for plain and 10000 for precoded
    /// contexts.
    #[serde(default)]
    pub penalty: Option<f64>,
    #[serde(default)]
    pub family: Family,
    #[serde(default)]
    pub schedule: Schedule,
    pub seed: u64,
}

/// Convenience mask for soliton-family specs.
pub fn full_support(dmax: usize) -> Vec<usize> {
    (1..=dmax).collect()
}

/// What the design is for: a plain sparse fountain scored by the
/// uncovered-variable lower bound, or a precoded fountain scored by the
/// Krawtchouk union bound on its constraint system.
#[derive(Debug, Clone)]
pub enum DesignContext {
    Lt,
    Raptor { precode: Precode, spectrum: WeightEnumerator },
}

/// One scored candidate: objective = E[Y] estimate + failure penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub expected_inactivations: f64,
    pub failure_bound: f64,
    pub penalty: f64,
    pub objective: f64,
}

impl Evaluation {
    fn rejected() -> Self {
        Evaluation {
            expected_inactivations: f64::INFINITY,
            failure_bound: f64::INFINITY,
            penalty: f64::INFINITY,
            objective: f64::INFINITY,
        }
    }
}

/// Per-sweep snapshot of the walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub temperature: f64,
    pub objective: f64,
    pub expected_inactivations: f64,
    pub failure_bound: f64,
}

/// Final design plus how it was reached.
#[derive(Debug, Clone)]
pub struct DesignResult {
    pub dist: DegreeDistribution,
    /// Inner-loop score of the optimum (approximate E[Y]).
    pub evaluation: Evaluation,
    /// Exact dynamic-program E[Y] at the optimum.
    pub expected_inactivations: f64,
    /// Failure bound at the optimum; feasible iff it beats the target.
    pub failure_bound: f64,
    pub feasible: bool,
    /// Trajectory of the winning chain, one point per sweep.
    pub trajectory: Vec<TrajectoryPoint>,
    /// Fraction of worsening proposals accepted during the first sweep of
    /// the winning chain (the calibration target is roughly 0.8).
    pub initial_acceptance: f64,
}

fn penalty_term(bound: f64, target: f64, b: f64) -> f64 {
    if bound < target {
        0.0
    } else {
        b * (1.0 - target / bound)
    }
}

pub(crate) fn metropolis_accept<R: Rng + ?Sized>(delta: f64, t: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if !(t > 0.0) || delta.is_infinite() {
        return false;
    }
    let p = (-delta / t).exp();
    p > 0.0 && rng.gen_bool(p.min(1.0))
}

/// Immutable scoring context shared by all chains.
struct Prepared<'a> {
    spec: &'a DesignSpec,
    m: usize,
    b: f64,
    /// Sorted, deduplicated support mask.
    mask: Vec<usize>,
    raptor: Option<RaptorPrep<'a>>,
}

struct RaptorPrep<'a> {
    spectrum: &'a WeightEnumerator,
    theta: DegreeDistribution,
    kernel: KrawtchoukKernel,
    h: usize,
}

impl DesignSpec {
    fn validate(&self) -> Result<Vec<usize>, DesignError> {
        if !(self.target_pf > 0.0 && self.target_pf < 1.0) {
            return Err(DesignError::BadTarget(self.target_pf));
        }
        if !(self.max_mean > 1.0) {
            return Err(DesignError::BadMeanCap(self.max_mean));
        }
        if self.support.is_empty() {
            return Err(DesignError::EmptySupport);
        }
        let mut mask = self.support.clone();
        mask.sort_unstable();
        mask.dedup();
        for &d in &mask {
            if d == 0 || d > self.dmax {
                return Err(DesignError::BadSupportDegree(d));
            }
        }
        if matches!(self.family, Family::TruncatedRsd { .. }) && mask.len() != self.dmax {
            return Err(DesignError::PartialSolitonSupport);
        }
        let lo = *mask.first().expect("nonempty") as f64;
        let hi = *mask.last().expect("nonempty") as f64;
        if self.pin_mean {
            if lo > self.max_mean || hi < self.max_mean {
                return Err(DesignError::UnreachableMean);
            }
        } else if lo > self.max_mean {
            return Err(DesignError::UnreachableMean);
        }
        let s = &self.schedule;
        if s.chains == 0
            || s.sweeps == 0
            || s.steps_per_sweep == 0
            || !(s.cooling > 0.0 && s.cooling < 1.0)
        {
            return Err(DesignError::BadSchedule);
        }
        Ok(mask)
    }
}

/// Score one candidate distribution. Candidates that break a hard
/// constraint (support outside the mask, degree above dmax, mean over or
/// off the budget) score infinity.
pub fn objective(
    dist: &DegreeDistribution,
    spec: &DesignSpec,
    ctx: &DesignContext,
) -> Evaluation {
    let mask = match spec.validate() {
        Ok(mask) => mask,
        Err(_) => return Evaluation::rejected(),
    };
    let prep = prepare(spec, ctx, mask);
    evaluate(dist, &prep)
}

fn prepare<'a>(spec: &'a DesignSpec, ctx: &'a DesignContext, mask: Vec<usize>) -> Prepared<'a> {
    let m = spec.eval_at.receipts(spec.k);
    match ctx {
        DesignContext::Lt => Prepared {
            spec,
            m,
            b: spec.penalty.unwrap_or(1000.0),
            mask,
            raptor: None,
        },
        DesignContext::Raptor { precode, spectrum } => {
            let kernel = KrawtchoukKernel::new(precode.h, precode.field.q(), spec.dmax);
            Prepared {
                spec,
                m,
                b: spec.penalty.unwrap_or(10_000.0),
                mask,
                raptor: Some(RaptorPrep {
                    spectrum,
                    theta: parity_row_degree_distribution(&precode.parity),
                    kernel,
                    h: precode.h,
                }),
            }
        }
    }
}

fn evaluate(dist: &DegreeDistribution, prep: &Prepared) -> Evaluation {
    let spec = prep.spec;
    let mean = dist.mean();
    let mean_ok = if spec.pin_mean {
        (mean - spec.max_mean).abs() <= 1e-6
    } else {
        mean <= spec.max_mean + 1e-9
    };
    if !mean_ok || dist.max_degree() > spec.dmax {
        return Evaluation::rejected();
    }
    if dist.support().any(|(d, _)| prep.mask.binary_search(&d).is_err()) {
        return Evaluation::rejected();
    }
    let (ey, bound) = match &prep.raptor {
        None => {
            let ey = binomial_ripple_approximation(dist, spec.k, prep.m).expected_inactivations;
            let bound = lt_ml_lower_bound_with_receipts(dist, spec.k, prep.m).value;
            (ey, bound)
        }
        Some(rp) => {
            let ey = surrogate_binomial_approximation(&rp.theta, dist, rp.h, spec.k, prep.m)
                .expected_inactivations;
            let delta = prep.m.saturating_sub(spec.k);
            let bound = if prep.m < spec.k {
                1.0
            } else {
                raptor_ml_upper_bound_with_kernel(rp.spectrum, dist, &rp.kernel, spec.k, delta)
            };
            (ey, bound)
        }
    };
    let penalty = penalty_term(bound, spec.target_pf, prep.b);
    Evaluation {
        expected_inactivations: ey,
        failure_bound: bound,
        penalty,
        objective: ey + penalty,
    }
}

/// Scale masses onto the mean budget: mix toward an extreme supported
/// degree until the mean equals `target`. Leaves slack-satisfying vectors
/// untouched unless the mean is pinned.
fn mean_project(masses: &mut [f64], mask: &[usize], target: f64, pin: bool) {
    let mean: f64 = masses.iter().zip(mask).map(|(p, &d)| p * d as f64).sum();
    let (anchor, overshoot) = if mean > target + 1e-12 {
        (0, true)
    } else if pin && mean < target - 1e-12 {
        (mask.len() - 1, false)
    } else {
        return;
    };
    let d = mask[anchor] as f64;
    // (1-l)*mean + l*d = target
    let l = (target - mean) / (d - mean);
    debug_assert!((0.0..=1.0 + 1e-9).contains(&l), "projection weight {l} (overshoot {overshoot})");
    let l = l.clamp(0.0, 1.0);
    for p in masses.iter_mut() {
        *p *= 1.0 - l;
    }
    masses[anchor] += l;
}

fn normalize(masses: &mut [f64]) {
    let sum: f64 = masses.iter().sum();
    for p in masses.iter_mut() {
        *p /= sum;
    }
}

const MOVE_MASS: f64 = 0.005;

#[derive(Clone)]
enum State {
    Free(Vec<f64>),
    Rsd { c: f64, delta: f64 },
}

impl State {
    fn initial(spec: &DesignSpec, mask: &[usize]) -> State {
        match spec.family {
            Family::Free => {
                let mut masses = vec![1.0 / mask.len() as f64; mask.len()];
                mean_project(&mut masses, mask, spec.max_mean, spec.pin_mean);
                State::Free(masses)
            }
            Family::TruncatedRsd { c, delta } => State::Rsd { c, delta },
        }
    }

    fn propose<R: Rng + ?Sized>(&self, spec: &DesignSpec, mask: &[usize], rng: &mut R) -> State {
        match self {
            State::Free(masses) => {
                let mut next = masses.clone();
                if mask.len() >= 2 {
                    let from = rng.gen_range(0..mask.len());
                    let mut to = rng.gen_range(0..mask.len() - 1);
                    if to >= from {
                        to += 1;
                    }
                    let amount = MOVE_MASS.min(next[from]);
                    next[from] -= amount;
                    next[to] += amount;
                    normalize(&mut next);
                    mean_project(&mut next, mask, spec.max_mean, spec.pin_mean);
                }
                State::Free(next)
            }
            State::Rsd { c, delta } => {
                let factor = 1.0 + 0.3 * (rng.gen::<f64>() - 0.5);
                if rng.gen_bool(0.5) {
                    State::Rsd { c: (c * factor).clamp(1e-4, 5.0), delta: *delta }
                } else {
                    State::Rsd { c: *c, delta: (delta * factor).clamp(1e-6, 0.999) }
                }
            }
        }
    }

    fn dist(&self, spec: &DesignSpec, mask: &[usize]) -> Option<DegreeDistribution> {
        match self {
            State::Free(masses) => {
                let pairs: Vec<(usize, f64)> = mask
                    .iter()
                    .zip(masses)
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(&d, &p)| (d, p))
                    .collect();
                DegreeDistribution::from_pairs(&pairs).ok()
            }
            State::Rsd { c, delta } => DegreeDistribution::truncated_robust_soliton(
                &RsdParams { k: spec.k, c: *c, delta: *delta },
                spec.dmax,
            )
            .ok(),
        }
    }
}

struct ChainOutcome {
    best_dist: DegreeDistribution,
    best_eval: Evaluation,
    trajectory: Vec<TrajectoryPoint>,
    initial_acceptance: f64,
}

fn run_chain(prep: &Prepared, chain: u64) -> ChainOutcome {
    let spec = prep.spec;
    let mask = &prep.mask;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(chain);
    let mut state = State::initial(spec, mask);
    let score = |s: &State| -> (Option<DegreeDistribution>, Evaluation) {
        match s.dist(spec, mask) {
            Some(d) => {
                let e = evaluate(&d, prep);
                (Some(d), e)
            }
            None => (None, Evaluation::rejected()),
        }
    };
    let (dist0, eval0) = score(&state);
    let mut cur_eval = eval0;
    let mut best_dist = dist0.clone();
    let mut best_eval = eval0;
    // Calibrate the starting temperature on probe moves so that a typical
    // worsening step would be accepted with probability ~0.8.
    let t0 = spec.schedule.t_init.unwrap_or_else(|| {
        let mut worse = Vec::new();
        for _ in 0..64 {
            let (_, e) = score(&state.propose(spec, mask, &mut rng));
            let d = e.objective - cur_eval.objective;
            if d.is_finite() && d > 0.0 {
                worse.push(d);
            }
        }
        if worse.is_empty() {
            1.0
        } else {
            let mean = worse.iter().sum::<f64>() / worse.len() as f64;
            mean / (1.0f64 / 0.8).ln()
        }
    });
    let mut t = t0;
    let mut trajectory = Vec::with_capacity(spec.schedule.sweeps);
    let mut step = 0usize;
    let mut first_sweep = (0u64, 0u64); // worsening proposed, accepted
    for sweep in 0..spec.schedule.sweeps {
        for _ in 0..spec.schedule.steps_per_sweep {
            step += 1;
            let cand = state.propose(spec, mask, &mut rng);
            let (cand_dist, cand_eval) = score(&cand);
            let delta = cand_eval.objective - cur_eval.objective;
            let worsening = delta > 0.0;
            let accept = metropolis_accept(delta, t, &mut rng);
            if sweep == 0 && worsening {
                first_sweep.0 += 1;
                first_sweep.1 += u64::from(accept);
            }
            if cand_eval.objective < best_eval.objective {
                best_eval = cand_eval;
                best_dist = cand_dist.clone();
            }
            if accept {
                state = cand;
                cur_eval = cand_eval;
            }
        }
        trajectory.push(TrajectoryPoint {
            step,
            temperature: t,
            objective: cur_eval.objective,
            expected_inactivations: cur_eval.expected_inactivations,
            failure_bound: cur_eval.failure_bound,
        });
        t *= spec.schedule.cooling;
    }
    // A chain whose every candidate was rejected still reports its start.
    let best_dist = best_dist
        .or_else(|| State::initial(spec, mask).dist(spec, mask))
        .expect("validated spec admits at least one distribution");
    ChainOutcome {
        best_dist,
        best_eval,
        trajectory,
        initial_acceptance: if first_sweep.0 == 0 {
            1.0
        } else {
            first_sweep.1 as f64 / first_sweep.0 as f64
        },
    }
}

/// Pruning threshold for the exact verify pass: loose enough to keep very
/// large blocks tractable, tight enough that the reported mean is within a
/// fraction of a percent. Never zero — an unpruned march drags the full
/// (cloud, ripple) grid through every binomial tail and stops being
/// tractable well below k=1000.
fn verify_prune(k: usize) -> f64 {
    if k >= 5000 {
        1e-7
    } else if k >= 1000 {
        1e-10
    } else {
        1e-12
    }
}

/// Run the full design: independent annealing chains, deterministic
/// best-of-chains selection, then an exact dynamic-program re-score of the
/// winner. An infeasible outcome is reported, never masked.
pub fn anneal(spec: &DesignSpec, ctx: &DesignContext) -> Result<DesignResult, DesignError> {
    let mask = spec.validate()?;
    if let DesignContext::Raptor { precode, .. } = ctx {
        if spec.dmax > precode.h {
            return Err(DesignError::DegreeCapTooLarge { dmax: spec.dmax, h: precode.h });
        }
    }
    let prep = prepare(spec, ctx, mask);
    let chains: Vec<ChainOutcome> = (0..spec.schedule.chains as u64)
        .into_par_iter()
        .map(|c| run_chain(&prep, c))
        .collect();
    let winner = chains
        .into_iter()
        .enumerate()
        .min_by(|(ai, a), (bi, b)| {
            a.best_eval
                .objective
                .partial_cmp(&b.best_eval.objective)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ai.cmp(bi))
        })
        .map(|(_, c)| c)
        .expect("at least one chain");
    let dist = winner.best_dist;
    let exact_ey = match &prep.raptor {
        None => {
            expected_inactivations_dp(&dist, spec.k, prep.m, verify_prune(spec.k))
                .expected_inactivations
        }
        Some(rp) => {
            let mix = surrogate_intermediate_distribution(&rp.theta, &dist, rp.h, spec.k, prep.m);
            let rows = rp.h - spec.k + prep.m;
            expected_inactivations_dp(&mix, rp.h, rows, verify_prune(rp.h)).expected_inactivations
        }
    };
    let final_eval = evaluate(&dist, &prep);
    let feasible = final_eval.failure_bound < spec.target_pf;
    Ok(DesignResult {
        dist,
        evaluation: final_eval,
        expected_inactivations: exact_ey,
        failure_bound: final_eval.failure_bound,
        feasible,
        trajectory: winner.trajectory,
        initial_acceptance: winner.initial_acceptance,
    })
}

/// Render the design spec and winning trajectory as TSV with the spec
/// embedded in the header.
pub fn design_tsv(spec: &DesignSpec, result: &DesignResult) -> String {
    let config = serde_json::to_string(spec).expect("spec serializes");
    let mut out = format!("# design {config}\n");
    out.push_str(&format!(
        "# feasible {} bound {:e} expected_inactivations {}\n",
        result.feasible, result.failure_bound, result.expected_inactivations
    ));
    out.push_str("# step\ttemperature\tobjective\texpected_inact\tbound\n");
    for p in &result.trajectory {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            p.step, p.temperature, p.objective, p.expected_inactivations, p.failure_bound
        ));
    }
    out
}
