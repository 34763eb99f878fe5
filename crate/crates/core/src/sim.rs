//! Seeded Monte Carlo harness: erasure channels, fixed-receipts and
//! channel-mode overhead sweeps, and reproducible trial plans whose
//! statistics do not depend on how many workers execute them.
//!
//! Every trial draws from its own counter-indexed RNG stream derived from
//! (master seed, grid point, trial index), so parallel scheduling can never
//! change the sampled outcomes, and aggregation is a commutative monoid of
//! integer counts.

use crate::degree::{DegreeDistribution, DegreeError, RsdParams};
use crate::gf::{Fe, FieldError, FieldSpec};
use crate::inactivation::{inactivation_decode, InactivationStrategy, SparseSystem};
use crate::linalg::{BitMatrix, FieldMatrix};
use crate::lt::sample_sparse_column;
use crate::raptor::{PrecodeSpec, RaptorCode, RaptorError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("stop rule must allow at least one trial and one failure")]
    BadStopRule,
    #[error("erasure probability {epsilon} outside [0,1]")]
    BadEpsilon { epsilon: f64 },
    #[error("channel sweep is not defined for a concatenated code; its erasure probability is part of the code config")]
    UnsupportedSweep,
    #[error("grid too large: {points} points (limit {limit})")]
    GridTooLarge { points: usize, limit: usize },
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Raptor(#[from] RaptorError),
    #[error("malformed results table: {0}")]
    BadTable(String),
}

/// A memoryless erasure channel and the symbol alphabet it carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub epsilon: f64,
    #[serde(default)]
    pub alphabet: Alphabet,
}

/// What one transmitted symbol is: an element of GF(2^m), or a packet of
/// bytes treated as one erasure unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    Field { m: u32 },
    Packet { bytes: usize },
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::Field { m: 1 }
    }
}

/// Pass symbols through the channel; each survives independently with
/// probability 1 - epsilon. Survivors keep their original index.
pub fn erase<T: Copy, R: Rng + ?Sized>(
    channel: &ChannelSpec,
    symbols: &[T],
    rng: &mut R,
) -> Vec<(usize, T)> {
    assert!((0.0..=1.0).contains(&channel.epsilon));
    symbols
        .iter()
        .copied()
        .enumerate()
        .filter(|_| !rng.gen_bool(channel.epsilon))
        .collect()
}

/// Degree distribution selector for configs. Distributions are built at the
/// code's variable count; a reference distribution whose top degree exceeds
/// that count is folded onto it, mirroring what the sparse encoder does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    /// The standardized raptor output distribution (mean 4.63, top degree 40).
    R10,
    /// The heavy-tailed reference distribution (mean 5.82).
    HeavyTail,
    IdealSoliton,
    RobustSoliton { c: f64, delta: f64 },
    TruncatedRobustSoliton { c: f64, delta: f64, dmax: usize },
    /// Binomial degrees conditioned on being nonzero, scaled to the mean.
    BinomialMean { mean: f64 },
    Degrees { pairs: Vec<(usize, f64)> },
}

impl DistSpec {
    /// Materialize the distribution for a code with `vars` input variables.
    pub fn build(&self, vars: usize) -> Result<DegreeDistribution, SimError> {
        let dist = match *self {
            DistSpec::R10 => DegreeDistribution::standardized_raptor(),
            DistSpec::HeavyTail => DegreeDistribution::heavy_tail_reference(),
            DistSpec::IdealSoliton => DegreeDistribution::ideal_soliton(vars),
            DistSpec::RobustSoliton { c, delta } => {
                DegreeDistribution::robust_soliton(&RsdParams { k: vars, c, delta })?
            }
            DistSpec::TruncatedRobustSoliton { c, delta, dmax } => {
                DegreeDistribution::truncated_robust_soliton(&RsdParams { k: vars, c, delta }, dmax)?
            }
            DistSpec::BinomialMean { mean } => {
                DegreeDistribution::binomial_truncated(vars, mean / vars as f64)?
            }
            DistSpec::Degrees { ref pairs } => DegreeDistribution::from_pairs(pairs)?,
        };
        Ok(if dist.max_degree() > vars { dist.clamped_to(vars) } else { dist })
    }
}

/// Outer/block code selector, mirroring the precode constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrecodeKind {
    LinearRandom { h: usize },
    Hamming { t: u32 },
    SingleParityCheck,
    Grs { n: usize },
    R10Style,
}

impl PrecodeKind {
    fn spec(&self) -> PrecodeSpec {
        match *self {
            PrecodeKind::LinearRandom { h } => PrecodeSpec::LinearRandom { h },
            PrecodeKind::Hamming { t } => PrecodeSpec::Hamming { t },
            PrecodeKind::SingleParityCheck => PrecodeSpec::SingleParityCheck,
            PrecodeKind::Grs { n } => PrecodeSpec::Grs { n },
            PrecodeKind::R10Style => PrecodeSpec::R10Style,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategySpec {
    #[default]
    Random,
    MaxReducedDegree,
    MaxAccumulatedReducedDegree,
    MaxComponent,
}

impl From<StrategySpec> for InactivationStrategy {
    fn from(s: StrategySpec) -> Self {
        match s {
            StrategySpec::Random => InactivationStrategy::Random,
            StrategySpec::MaxReducedDegree => InactivationStrategy::MaxReducedDegree,
            StrategySpec::MaxAccumulatedReducedDegree => {
                InactivationStrategy::MaxAccumulatedReducedDegree
            }
            StrategySpec::MaxComponent => InactivationStrategy::MaxComponent,
        }
    }
}

fn default_field_m() -> u32 {
    1
}

/// The code a plan simulates. `k` is always the source block size that
/// overheads are measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeConfig {
    /// Dense random fountain over GF(2^field_m).
    Lrfc {
        k: usize,
        #[serde(default = "default_field_m")]
        field_m: u32,
    },
    /// Sparse fountain with the given degree distribution, decoded by
    /// inactivation with the given selection strategy.
    Lt {
        k: usize,
        dist: DistSpec,
        #[serde(default)]
        strategy: StrategySpec,
    },
    /// Precoded sparse fountain decoded on the intermediate block.
    Raptor {
        k: usize,
        precode: PrecodeKind,
        dist: DistSpec,
        #[serde(default)]
        strategy: StrategySpec,
        #[serde(default = "default_field_m")]
        field_m: u32,
    },
    /// Parallel concatenation: the block code's symbols cross an erasure
    /// channel with the given epsilon, and a dense random fountain tail
    /// tops the receiver up to its target receipt count.
    Concat {
        k: usize,
        block: PrecodeKind,
        epsilon: f64,
        #[serde(default = "default_field_m")]
        field_m: u32,
    },
}

impl CodeConfig {
    pub fn k(&self) -> usize {
        match *self {
            CodeConfig::Lrfc { k, .. }
            | CodeConfig::Lt { k, .. }
            | CodeConfig::Raptor { k, .. }
            | CodeConfig::Concat { k, .. } => k,
        }
    }

    /// Build the immutable per-plan context. Randomized constructions (the
    /// linear-random precode) are sampled once here, so one plan simulates
    /// one code; `rng` is otherwise unused.
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BuiltCode, SimError> {
        match *self {
            CodeConfig::Lrfc { k, field_m } => {
                Ok(BuiltCode::Lrfc { k, field: FieldSpec::new(field_m)? })
            }
            CodeConfig::Lt { k, ref dist, strategy } => Ok(BuiltCode::Lt {
                k,
                field: FieldSpec::binary(),
                dist: dist.build(k)?,
                strategy: strategy.into(),
            }),
            CodeConfig::Raptor { k, ref precode, ref dist, strategy, field_m } => {
                let field = FieldSpec::new(field_m)?;
                let pre = precode.spec().build(k, &field, rng)?;
                let dist = dist.build(pre.h)?;
                Ok(BuiltCode::Raptor {
                    code: RaptorCode::new(pre, dist)?,
                    strategy: strategy.into(),
                })
            }
            CodeConfig::Concat { k, ref block, epsilon, field_m } => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(SimError::BadEpsilon { epsilon });
                }
                let field = FieldSpec::new(field_m)?;
                let pre = block.spec().build(k, &field, rng)?;
                // One row per block symbol: the code's generator columns.
                let rows: Vec<Vec<Fe>> = (0..pre.h)
                    .map(|j| {
                        let col = pre.generator_column(j);
                        let mut row = vec![0u32; k];
                        for (slot, &v) in col.vars.iter().enumerate() {
                            row[v as usize] = col.coefs[slot];
                        }
                        row
                    })
                    .collect();
                Ok(BuiltCode::Concat { k, field, epsilon, block_rows: rows })
            }
        }
    }
}

/// Prebuilt simulation context shared (immutably) by all trials of a plan.
#[derive(Debug, Clone)]
pub enum BuiltCode {
    Lrfc {
        k: usize,
        field: FieldSpec,
    },
    Lt {
        k: usize,
        field: FieldSpec,
        dist: DegreeDistribution,
        strategy: InactivationStrategy,
    },
    Raptor {
        code: RaptorCode,
        strategy: InactivationStrategy,
    },
    Concat {
        k: usize,
        field: FieldSpec,
        epsilon: f64,
        block_rows: Vec<Vec<Fe>>,
    },
}

impl BuiltCode {
    pub fn k(&self) -> usize {
        match self {
            BuiltCode::Lrfc { k, .. } | BuiltCode::Lt { k, .. } | BuiltCode::Concat { k, .. } => {
                *k
            }
            BuiltCode::Raptor { code, .. } => code.precode.k,
        }
    }

    /// One decoding attempt from exactly m received symbols; returns the
    /// success flag and, when the decoder is an inactivation decoder, the
    /// number of inactivations (None when the plan skips tracking them).
    fn trial<R: Rng + ?Sized>(
        &self,
        m: usize,
        track_inactivations: bool,
        rng: &mut R,
    ) -> (bool, Option<usize>) {
        match self {
            BuiltCode::Lrfc { k, field } => {
                // Dense elimination decodes without inactivation bookkeeping.
                let ok = if field.is_binary() {
                    m >= *k && BitMatrix::random(m, *k, rng).rank() == *k
                } else {
                    m >= *k && FieldMatrix::random(m, *k, field, rng).rank() == *k
                };
                (ok, Some(0))
            }
            BuiltCode::Lt { k, field, dist, strategy } => {
                if track_inactivations {
                    let mut sys = SparseSystem::new(*k, field.clone());
                    for _ in 0..m {
                        let col = sample_sparse_column(*k, dist, field, rng);
                        sys.push(&col.vars, &col.coefs, 0);
                    }
                    let report = inactivation_decode(&sys, *strategy, rng);
                    (report.success, Some(report.inactivations))
                } else {
                    let mut mat = BitMatrix::zeros(m, *k);
                    for r in 0..m {
                        let col = sample_sparse_column(*k, dist, field, rng);
                        for &v in &col.vars {
                            mat.set(r, v as usize, true);
                        }
                    }
                    (mat.rank() == *k, None)
                }
            }
            BuiltCode::Raptor { code, strategy } => {
                let pre = &code.precode;
                let h = pre.h;
                let field = &pre.field;
                if track_inactivations {
                    let mut cols = Vec::with_capacity(m);
                    for _ in 0..m {
                        cols.push(sample_sparse_column(h, &code.dist, field, rng));
                    }
                    let sys = code.constraint_system(&cols, &vec![0; m]);
                    let report = inactivation_decode(&sys, *strategy, rng);
                    (report.success, Some(report.inactivations))
                } else {
                    // Failure is a rank property of the constraint matrix;
                    // bit-packed elimination is much faster than the full
                    // decoder when only the flag is wanted.
                    let p = pre.parity.rows();
                    let mut mat = BitMatrix::zeros(p + m, h);
                    for r in 0..p {
                        for c in 0..h {
                            if pre.parity.get(r, c) != 0 {
                                mat.set(r, c, true);
                            }
                        }
                    }
                    for r in 0..m {
                        let col = sample_sparse_column(h, &code.dist, field, rng);
                        for &v in &col.vars {
                            mat.set(p + r, v as usize, true);
                        }
                    }
                    (mat.rank() == h, None)
                }
            }
            BuiltCode::Concat { k, field, epsilon, block_rows } => {
                // Block symbols cross the channel first; the receiver keeps
                // the first m survivors and fills any shortfall with dense
                // fountain symbols.
                let mut rows: Vec<Vec<Fe>> = Vec::with_capacity(m);
                for row in block_rows {
                    if rows.len() == m {
                        break;
                    }
                    if !rng.gen_bool(*epsilon) {
                        rows.push(row.clone());
                    }
                }
                while rows.len() < m {
                    rows.push((0..*k).map(|_| field.random(rng)).collect());
                }
                let ok = m >= *k
                    && FieldMatrix::from_rows(field, &rows)
                        .expect("uniform row lengths")
                        .rank()
                        == *k;
                (ok, Some(0))
            }
        }
    }
}

/// One decoding attempt from exactly m received symbols, with inactivation
/// tracking: the δ-sweep primitive that conditions on the receipt count
/// rather than on a channel rate.
pub fn fixed_receipts_trial<R: Rng + ?Sized>(
    code: &BuiltCode,
    m: usize,
    rng: &mut R,
) -> (bool, usize) {
    let (ok, y) = code.trial(m, true, rng);
    (ok, y.unwrap_or(0))
}

/// How the receipt count is swept across the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSpec {
    /// Condition on the absolute receiver overhead: m = k + delta.
    FixedReceipts { deltas: Vec<i64> },
    /// Condition on the relative receiver overhead: m = round(k(1+eps)).
    RelativeReceipts { epsilons: Vec<f64> },
    /// Transmit a fixed number of symbols through channels of varying
    /// erasure probability and decode from whatever survives.
    Channel { epsilons: Vec<f64>, sent: usize },
}

impl SweepSpec {
    fn len(&self) -> usize {
        match self {
            SweepSpec::FixedReceipts { deltas } => deltas.len(),
            SweepSpec::RelativeReceipts { epsilons } | SweepSpec::Channel { epsilons, .. } => {
                epsilons.len()
            }
        }
    }
}

/// Stop a grid point after this many failures or this many trials,
/// whichever comes first (checked at batch boundaries).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub target_failures: u64,
    pub max_trials: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { target_failures: 200, max_trials: 100_000 }
    }
}

fn default_track() -> bool {
    true
}

/// A complete reproducible experiment: code, sweep, stop rule, seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialPlan {
    pub code: CodeConfig,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub stop: StopRule,
    /// Whether trials run the inactivation decoder (tracking y) or only the
    /// rank test. Skipping the tracking roughly halves the cost of large
    /// failure-rate sweeps; the inactivation columns then read NaN.
    #[serde(default = "default_track")]
    pub track_inactivations: bool,
    pub seed: u64,
}

/// Estimates for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub x: f64,
    pub trials: u64,
    pub failures: u64,
    pub pf: f64,
    pub stderr: f64,
    pub mean_inactivations: f64,
    pub stderr_inactivations: f64,
}

const BATCH: u64 = 1024;
/// Trial indices occupy the low bits of the RNG stream id; grid points the
/// high bits; the plan-construction stream is u64::MAX.
const POINT_SHIFT: u32 = 40;

impl TrialPlan {
    fn validate(&self) -> Result<(), SimError> {
        if self.sweep.len() == 0 {
            return Err(SimError::EmptyGrid);
        }
        let limit = 1usize << (64 - POINT_SHIFT - 1);
        if self.sweep.len() >= limit {
            return Err(SimError::GridTooLarge { points: self.sweep.len(), limit });
        }
        if self.stop.target_failures == 0
            || self.stop.max_trials == 0
            || self.stop.max_trials >= 1 << POINT_SHIFT
        {
            return Err(SimError::BadStopRule);
        }
        if let SweepSpec::Channel { epsilons, .. } = &self.sweep {
            if matches!(self.code, CodeConfig::Concat { .. }) {
                return Err(SimError::UnsupportedSweep);
            }
            for &e in epsilons {
                if !(0.0..=1.0).contains(&e) {
                    return Err(SimError::BadEpsilon { epsilon: e });
                }
            }
        }
        Ok(())
    }
}

enum PointJob {
    Receipts { m: usize },
    Channel { sent: usize, epsilon: f64 },
}

/// Run every grid point of the plan. Deterministic for a given seed
/// regardless of worker count; per-trial panics propagate.
pub fn run_plan(plan: &TrialPlan) -> Result<Vec<EstimateRow>, SimError> {
    plan.validate()?;
    let mut build_rng = ChaCha8Rng::seed_from_u64(plan.seed);
    build_rng.set_stream(u64::MAX);
    let code = plan.code.build(&mut build_rng)?;
    let k = code.k();
    let points: Vec<(f64, PointJob)> = match &plan.sweep {
        SweepSpec::FixedReceipts { deltas } => deltas
            .iter()
            .map(|&d| (d as f64, PointJob::Receipts { m: (k as i64 + d).max(0) as usize }))
            .collect(),
        SweepSpec::RelativeReceipts { epsilons } => epsilons
            .iter()
            .map(|&e| {
                (e, PointJob::Receipts { m: (k as f64 * (1.0 + e)).round().max(0.0) as usize })
            })
            .collect(),
        SweepSpec::Channel { epsilons, sent } => epsilons
            .iter()
            .map(|&e| (e, PointJob::Channel { sent: *sent, epsilon: e }))
            .collect(),
    };
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(pi, (x, job))| run_point(&code, x, &job, plan, pi))
        .collect())
}

fn run_point(
    code: &BuiltCode,
    x: f64,
    job: &PointJob,
    plan: &TrialPlan,
    point_index: usize,
) -> EstimateRow {
    let stream_base = (point_index as u64) << POINT_SHIFT;
    let mut trials = 0u64;
    let mut failures = 0u64;
    let mut y_count = 0u64;
    let mut y_sum = 0u128;
    let mut y_sq_sum = 0u128;
    while trials < plan.stop.max_trials && failures < plan.stop.target_failures {
        let len = BATCH.min(plan.stop.max_trials - trials);
        let (f, yc, ys, ysq) = (trials..trials + len)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
                rng.set_stream(stream_base | t);
                let m = match *job {
                    PointJob::Receipts { m } => m,
                    PointJob::Channel { sent, epsilon } => {
                        (0..sent).filter(|_| !rng.gen_bool(epsilon)).count()
                    }
                };
                let (ok, y) = code.trial(m, plan.track_inactivations, &mut rng);
                let y = y.map(|v| v as u128);
                (
                    u64::from(!ok),
                    u64::from(y.is_some()),
                    y.unwrap_or(0),
                    y.map(|v| v * v).unwrap_or(0),
                )
            })
            .reduce(|| (0, 0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3));
        trials += len;
        failures += f;
        y_count += yc;
        y_sum += ys;
        y_sq_sum += ysq;
    }
    let pf = failures as f64 / trials as f64;
    let stderr = (pf * (1.0 - pf) / trials as f64).sqrt();
    let (mean_y, stderr_y) = if y_count == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let n = y_count as f64;
        let mean = y_sum as f64 / n;
        let var = if y_count > 1 {
            ((y_sq_sum as f64) - n * mean * mean).max(0.0) / (n - 1.0)
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    };
    EstimateRow {
        x,
        trials,
        failures,
        pf,
        stderr,
        mean_inactivations: mean_y,
        stderr_inactivations: stderr_y,
    }
}

/// Render results as TSV with the full plan embedded in the header, so the
/// run can be reproduced from its own output.
pub fn plan_tsv(plan: &TrialPlan, rows: &[EstimateRow]) -> String {
    let config = serde_json::to_string(plan).expect("plan serializes");
    let mut out = format!("# config {config}\n");
    out.push_str("# x\ttrials\tfailures\tpf\tstderr\tmean_inact\tstderr_inact\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.x,
            r.trials,
            r.failures,
            r.pf,
            r.stderr,
            r.mean_inactivations,
            r.stderr_inactivations
        ));
    }
    out
}

/// Parse a table produced by `plan_tsv` back into the plan and its rows.
pub fn parse_plan_tsv(text: &str) -> Result<(TrialPlan, Vec<EstimateRow>), SimError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| SimError::BadTable("empty input".into()))?;
    let config = header
        .strip_prefix("# config ")
        .ok_or_else(|| SimError::BadTable("missing config header".into()))?;
    let plan: TrialPlan =
        serde_json::from_str(config).map_err(|e| SimError::BadTable(e.to_string()))?;
    let mut rows = Vec::new();
    for line in lines {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(SimError::BadTable(format!("expected 7 columns, got {}", fields.len())));
        }
        let num =
            |i: usize| fields[i].parse::<f64>().map_err(|e| SimError::BadTable(e.to_string()));
        let int =
            |i: usize| fields[i].parse::<u64>().map_err(|e| SimError::BadTable(e.to_string()));
        rows.push(EstimateRow {
            x: num(0)?,
            trials: int(1)?,
            failures: int(2)?,
            pf: num(3)?,
            stderr: num(4)?,
            mean_inactivations: num(5)?,
            stderr_inactivations: num(6)?,
        });
    }
    Ok((plan, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::expected_inactivations_dp;
    use crate::bounds::{concat_bounds, lrfc_bounds};

    fn receipts_plan(code: CodeConfig, deltas: Vec<i64>, stop: StopRule, seed: u64) -> TrialPlan {
        TrialPlan {
            code,
            sweep: SweepSpec::FixedReceipts { deltas },
            stop,
            track_inactivations: true,
            seed,
        }
    }

    #[test]
    fn erase_edges_and_concentration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let symbols: Vec<u32> = (0..100_000).collect();
        let clean = ChannelSpec { epsilon: 0.0, alphabet: Alphabet::default() };
        assert_eq!(erase(&clean, &symbols, &mut rng).len(), symbols.len());
        let dead = ChannelSpec { epsilon: 1.0, alphabet: Alphabet::default() };
        assert!(erase(&dead, &symbols, &mut rng).is_empty());
        let lossy = ChannelSpec { epsilon: 0.3, alphabet: Alphabet::Packet { bytes: 1024 } };
        let kept = erase(&lossy, &symbols, &mut rng);
        let fraction = kept.len() as f64 / symbols.len() as f64;
        assert!((fraction - 0.7).abs() < 0.005, "{fraction}");
        // Survivors keep their identity.
        assert!(kept.iter().all(|&(i, s)| i as u32 == s));
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let plan = receipts_plan(
            CodeConfig::Lt {
                k: 30,
                dist: DistSpec::RobustSoliton { c: 0.2, delta: 0.1 },
                strategy: StrategySpec::Random,
            },
            vec![0, 3],
            StopRule { target_failures: 1_000_000, max_trials: 600 },
            42,
        );
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let multi = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = single.install(|| run_plan(&plan)).unwrap();
        let b = multi.install(|| run_plan(&plan)).unwrap();
        let c = multi.install(|| run_plan(&plan)).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
        // x carries the grid values, trials the cap.
        assert_eq!(a[0].x, 0.0);
        assert_eq!(a[1].x, 3.0);
        assert!(a.iter().all(|r| r.trials == 600 && r.failures <= r.trials));
    }

    #[test]
    fn degenerate_plans_fail_exactly() {
        // One degree-one symbol can never cover two variables.
        let plan = receipts_plan(
            CodeConfig::Lt {
                k: 2,
                dist: DistSpec::Degrees { pairs: vec![(1, 1.0)] },
                strategy: StrategySpec::Random,
            },
            vec![-1, -2],
            StopRule { target_failures: 1_000_000, max_trials: 500 },
            1,
        );
        let rows = run_plan(&plan).unwrap();
        assert_eq!(rows[0].pf, 1.0);
        assert_eq!(rows[1].pf, 1.0); // m = 0
        assert_eq!(rows[0].stderr, 0.0);
    }

    #[test]
    fn single_variable_identity_columns_decode_without_inactivations() {
        let code = CodeConfig::Lt {
            k: 1,
            dist: DistSpec::Degrees { pairs: vec![(1, 1.0)] },
            strategy: StrategySpec::Random,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let built = code.build(&mut rng).unwrap();
        let (ok, y) = fixed_receipts_trial(&built, 3, &mut rng);
        assert!(ok);
        assert_eq!(y, 0);
        let (ok, _) = fixed_receipts_trial(&built, 0, &mut rng);
        assert!(!ok);
    }

    #[test]
    fn lrfc_rows_sit_inside_the_analytic_bracket() {
        let plan = receipts_plan(
            CodeConfig::Lrfc { k: 10, field_m: 1 },
            vec![0, 2],
            StopRule { target_failures: 1_000_000, max_trials: 20_000 },
            11,
        );
        let rows = run_plan(&plan).unwrap();
        for (row, delta) in rows.iter().zip([0u32, 2]) {
            let (lo, hi) = lrfc_bounds(2, delta);
            assert!(lo <= row.pf && row.pf < hi, "delta={delta}: {}", row.pf);
            assert_eq!(row.mean_inactivations, 0.0);
        }
    }

    #[test]
    fn mean_inactivations_track_the_dynamic_program() {
        let k = 60;
        let m = 66;
        let plan = receipts_plan(
            CodeConfig::Lt {
                k,
                dist: DistSpec::RobustSoliton { c: 0.2, delta: 0.1 },
                strategy: StrategySpec::Random,
            },
            vec![(m - k) as i64],
            StopRule { target_failures: 1_000_000, max_trials: 4_000 },
            21,
        );
        let row = &run_plan(&plan).unwrap()[0];
        let dist = DistSpec::RobustSoliton { c: 0.2, delta: 0.1 }.build(k).unwrap();
        let dp = expected_inactivations_dp(&dist, k, m, 0.0);
        let gap = (row.mean_inactivations - dp.expected_inactivations).abs();
        assert!(
            gap <= 4.0 * row.stderr_inactivations,
            "mc {} vs dp {}",
            row.mean_inactivations,
            dp.expected_inactivations
        );
    }

    #[test]
    fn skipping_inactivation_tracking_changes_speed_not_failures() {
        let mut plan = receipts_plan(
            CodeConfig::Raptor {
                k: 20,
                precode: PrecodeKind::Hamming { t: 5 },
                dist: DistSpec::R10,
                strategy: StrategySpec::Random,
                field_m: 1,
            },
            vec![2],
            StopRule { target_failures: 1_000_000, max_trials: 1_500 },
            5,
        );
        // Hamming t=5 has k=26; rebuild the config to match.
        plan.code = CodeConfig::Raptor {
            k: 26,
            precode: PrecodeKind::Hamming { t: 5 },
            dist: DistSpec::R10,
            strategy: StrategySpec::Random,
            field_m: 1,
        };
        let tracked = run_plan(&plan).unwrap();
        plan.track_inactivations = false;
        let untracked = run_plan(&plan).unwrap();
        // Identical trials and columns except the inactivation summaries:
        // the rank of the constraint matrix decides failure either way.
        assert_eq!(tracked[0].trials, untracked[0].trials);
        assert_eq!(tracked[0].failures, untracked[0].failures);
        assert!(tracked[0].mean_inactivations.is_finite());
        assert!(untracked[0].mean_inactivations.is_nan());
    }

    #[test]
    fn reported_stderr_matches_observed_dispersion() {
        let mut estimates = Vec::new();
        let mut stderrs = Vec::new();
        for seed in 0..48 {
            let plan = receipts_plan(
                CodeConfig::Lrfc { k: 4, field_m: 1 },
                vec![1],
                StopRule { target_failures: 1_000_000, max_trials: 256 },
                9_000 + seed,
            );
            let row = &run_plan(&plan).unwrap()[0];
            estimates.push(row.pf);
            stderrs.push(row.stderr);
        }
        let n = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / n;
        let sd =
            (estimates.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        let reported = stderrs.iter().sum::<f64>() / n;
        let ratio = sd / reported;
        assert!((0.5..1.7).contains(&ratio), "dispersion {sd} vs reported {reported}");
    }

    #[test]
    fn concat_trials_match_the_scaled_bracket() {
        // Clean channel: the block code alone always suffices.
        let clean = receipts_plan(
            CodeConfig::Concat {
                k: 10,
                block: PrecodeKind::SingleParityCheck,
                epsilon: 0.0,
                field_m: 1,
            },
            vec![0],
            StopRule { target_failures: 10, max_trials: 500 },
            2,
        );
        assert_eq!(run_plan(&clean).unwrap()[0].pf, 0.0);
        // Lossy channel, GF(16) Reed-Solomon style block: the failure rate
        // lands inside the shortfall-scaled fountain bracket.
        let plan = receipts_plan(
            CodeConfig::Concat { k: 10, block: PrecodeKind::Grs { n: 15 }, epsilon: 0.35, field_m: 4 },
            vec![0],
            StopRule { target_failures: 1_000_000, max_trials: 30_000 },
            23,
        );
        let row = &run_plan(&plan).unwrap()[0];
        let (lo, hi) = concat_bounds(15, 10, 16, 0.35, 0);
        assert!(
            row.pf >= lo - 3.0 * row.stderr && row.pf < hi + 3.0 * row.stderr,
            "{} outside [{lo}, {hi})",
            row.pf
        );
    }

    #[test]
    fn channel_sweep_degrades_with_erasure_probability() {
        let plan = TrialPlan {
            code: CodeConfig::Lt {
                k: 40,
                dist: DistSpec::RobustSoliton { c: 0.2, delta: 0.1 },
                strategy: StrategySpec::Random,
            },
            sweep: SweepSpec::Channel { epsilons: vec![0.0, 0.4, 1.0], sent: 60 },
            stop: StopRule { target_failures: 1_000_000, max_trials: 2_000 },
            track_inactivations: true,
            seed: 31,
        };
        let rows = run_plan(&plan).unwrap();
        assert!(rows[0].pf < rows[1].pf);
        assert_eq!(rows[2].pf, 1.0); // nothing survives
        // Concatenated codes own their channel; sweeping it is rejected.
        let bad = TrialPlan {
            code: CodeConfig::Concat {
                k: 10,
                block: PrecodeKind::SingleParityCheck,
                epsilon: 0.1,
                field_m: 1,
            },
            sweep: SweepSpec::Channel { epsilons: vec![0.1], sent: 20 },
            stop: StopRule::default(),
            track_inactivations: true,
            seed: 1,
        };
        assert!(matches!(run_plan(&bad), Err(SimError::UnsupportedSweep)));
    }

    #[test]
    fn plan_validation_rejects_nonsense() {
        let mut plan = receipts_plan(
            CodeConfig::Lrfc { k: 5, field_m: 1 },
            vec![],
            StopRule::default(),
            0,
        );
        assert!(matches!(run_plan(&plan), Err(SimError::EmptyGrid)));
        plan.sweep = SweepSpec::FixedReceipts { deltas: vec![0] };
        plan.stop = StopRule { target_failures: 0, max_trials: 100 };
        assert!(matches!(run_plan(&plan), Err(SimError::BadStopRule)));
    }

    #[test]
    fn tsv_round_trips_plan_and_rows() {
        let plan = receipts_plan(
            CodeConfig::Lt {
                k: 12,
                dist: DistSpec::Degrees { pairs: vec![(1, 0.25), (3, 0.75)] },
                strategy: StrategySpec::MaxReducedDegree,
            },
            vec![0, 4],
            StopRule { target_failures: 50, max_trials: 400 },
            77,
        );
        let rows = run_plan(&plan).unwrap();
        let text = plan_tsv(&plan, &rows);
        assert!(text.starts_with("# config {"));
        let (plan2, rows2) = parse_plan_tsv(&text).unwrap();
        assert_eq!(plan, plan2);
        assert_eq!(rows, rows2);
        // Unknown config fields are rejected, not ignored.
        let poisoned = text.replacen("\"seed\":77", "\"seed\":77,\"extra\":1", 1);
        assert!(parse_plan_tsv(&poisoned).is_err());
    }

    #[test]
    fn config_json_shape_is_stable() {
        let plan = receipts_plan(
            CodeConfig::Raptor {
                k: 57,
                precode: PrecodeKind::Hamming { t: 6 },
                dist: DistSpec::R10,
                strategy: StrategySpec::Random,
                field_m: 1,
            },
            vec![10],
            StopRule::default(),
            5,
        );
        let json = serde_json::to_string(&plan).unwrap();
        assert!(json.contains("\"family\":\"raptor\""));
        assert!(json.contains("\"kind\":\"hamming\""));
        assert!(json.contains("\"family\":\"r10\""));
        let back: TrialPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(plan, back);
    }
}
