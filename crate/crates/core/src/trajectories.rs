//! Quantum-trajectory ensembles with pluggable unravelings.
//!
//! Every Grover iteration applies the oracle and diffusion MPOs and then, for
//! each qubit in ascending order, samples one operator of a (possibly mixed)
//! Kraus set with Born probabilities. Trajectory `i` draws from ChaCha8 stream
//! `i` keyed on the master seed, so results do not depend on scheduling.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::bits::Bitstring;
use crate::channels::{make_channel, mix_channel, ChannelKind, KrausChannel};
use crate::dense::{DenseDensityMatrix, DenseNoise, DenseState, MAX_DENSITY_QUBITS};
use crate::error::{GroverError, Result};
use crate::linalg::{c, Mat2, ONE};
use crate::stats;
use crate::tensornet::{Mpo, MpsState, TruncationPolicy};

/// Tolerance on Σ_m p_m − 1 before a step is rejected.
pub const PROBABILITY_SUM_TOL: f64 = 1e-8;

const FLAT_TOL: f64 = 1e-14;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    Naive,
    MaxNonUnitarity,
    GreedyEntropyMin,
}

impl StrategyKind {
    pub fn tag(self) -> &'static str {
        match self {
            StrategyKind::Naive => "naive",
            StrategyKind::MaxNonUnitarity => "numu",
            StrategyKind::GreedyEntropyMin => "greedy",
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = GroverError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(StrategyKind::Naive),
            "numu" | "adaptive" => Ok(StrategyKind::MaxNonUnitarity),
            "greedy" => Ok(StrategyKind::GreedyEntropyMin),
            other => Err(GroverError::Validation(format!("unknown strategy '{other}' (naive|numu|greedy)"))),
        }
    }
}

/// Unraveling strategy with its optimizer settings. The search covers the
/// mixings U(a, φ) = [[cos a, e^{iφ} sin a], [−e^{−iφ} sin a, cos a]] on a
/// `grid` × `grid` lattice, then refines each coordinate by golden-section
/// search for `refine` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnravelingStrategy {
    pub kind: StrategyKind,
    pub grid: usize,
    pub refine: usize,
}

impl UnravelingStrategy {
    pub fn naive() -> Self {
        UnravelingStrategy { kind: StrategyKind::Naive, grid: 4, refine: 0 }
    }

    pub fn max_nonunitarity() -> Self {
        UnravelingStrategy { kind: StrategyKind::MaxNonUnitarity, grid: 16, refine: 24 }
    }

    pub fn greedy_entropy() -> Self {
        UnravelingStrategy { kind: StrategyKind::GreedyEntropyMin, grid: 6, refine: 10 }
    }

    pub fn from_kind(kind: StrategyKind) -> Self {
        match kind {
            StrategyKind::Naive => Self::naive(),
            StrategyKind::MaxNonUnitarity => Self::max_nonunitarity(),
            StrategyKind::GreedyEntropyMin => Self::greedy_entropy(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < 4 {
            return Err(GroverError::Validation(format!("strategy grid must be >= 4, got {}", self.grid)));
        }
        Ok(())
    }
}

/// The mixing family used by the optimizers.
pub fn mixing_unitary(a: f64, phi: f64) -> DMatrix<C64> {
    let e = C64::from_polar(1.0, phi);
    DMatrix::from_row_slice(2, 2, &[c(a.cos()), e * a.sin(), -e.conj() * a.sin(), c(a.cos())])
}

fn mixed_operators(ch: &KrausChannel, u: &DMatrix<C64>) -> Vec<Mat2> {
    let ops = ch.operators();
    (0..ops.len())
        .map(|m| ops.iter().enumerate().fold(Mat2::zeros(), |acc, (k, e)| acc + e * u[(m, k)]))
        .collect()
}

fn expect(rho: &Mat2, x: &Mat2) -> f64 {
    (rho * x).trace().re
}

/// Non-unitarity of a mixed Kraus set on a qubit in reduced state `rho`:
/// Σ_m (1 − |⟨F_m⟩|² / ⟨F_m†F_m⟩) over outcomes that can occur. Each ratio
/// is the fidelity between the state before and after outcome m, so the sum
/// vanishes only when every outcome acts as a phase on the state. Weighting
/// by p_m instead would give 1 − Σ_m |⟨F_m⟩|², which is the same for every
/// unitary mixing.
pub fn nonunitarity(rho: &Mat2, ch: &KrausChannel, u: &DMatrix<C64>) -> f64 {
    mixed_operators(ch, u)
        .iter()
        .map(|f| {
            let pm = expect(rho, &(f.adjoint() * f));
            if pm <= 1e-14 {
                return 0.0;
            }
            (1.0 - (rho * f).trace().norm_sqr() / pm).max(0.0)
        })
        .sum()
}

/// Grid search plus coordinate-wise golden-section refinement maximizing
/// `f(a, φ)`. Returns `None` when `f` is flat on the grid.
fn maximize_mixing(
    grid: usize,
    refine: usize,
    seeds: &[(f64, f64)],
    mut f: impl FnMut(f64, f64) -> f64,
) -> Option<(f64, f64, f64)> {
    let da = FRAC_PI_2 / (grid - 1) as f64;
    let dphi = 2.0 * PI / grid as f64;
    let mut best = (0.0, 0.0, f(0.0, 0.0));
    let mut lo = best.2;
    let mut hi = best.2;
    let mut consider = |a: f64, phi: f64, best: &mut (f64, f64, f64), f: &mut dyn FnMut(f64, f64) -> f64| {
        let v = f(a, phi);
        lo = lo.min(v);
        hi = hi.max(v);
        if v > best.2 {
            *best = (a, phi, v);
        }
    };
    for i in 0..grid {
        for j in 0..grid {
            if i == 0 && j == 0 {
                continue;
            }
            consider(i as f64 * da, j as f64 * dphi, &mut best, &mut f);
        }
    }
    for &(a, phi) in seeds {
        consider(a, phi, &mut best, &mut f);
    }
    if hi - lo <= FLAT_TOL {
        return None;
    }
    if refine > 0 {
        for _pass in 0..2 {
            let (a0, phi0, _) = best;
            let a_new = golden_max(|a| f(a, phi0), (a0 - da).max(0.0), (a0 + da).min(FRAC_PI_2), refine);
            let v = f(a_new, phi0);
            if v > best.2 {
                best = (a_new, phi0, v);
            }
            let (a0, phi0, _) = best;
            let phi_new = golden_max(|p| f(a0, p), phi0 - dphi, phi0 + dphi, refine);
            let v = f(a0, phi_new);
            if v > best.2 {
                best = (a0, phi_new, v);
            }
        }
    }
    Some(best)
}

fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

/// State interface the unraveling step needs; implemented for MPS and dense
/// statevectors.
pub trait UnravelState: Clone {
    fn qubits(&self) -> usize;
    /// Single-qubit reduced density matrix.
    fn local_rho(&mut self, q: usize) -> Result<Mat2>;
    /// Apply `op` on qubit `q`, renormalize, return the Born weight.
    fn apply_kraus(&mut self, q: usize, op: &Mat2) -> Result<f64>;
    fn cut_entropy(&mut self, cut: usize) -> Result<f64>;
}

impl UnravelState for MpsState {
    fn qubits(&self) -> usize {
        self.n()
    }

    fn local_rho(&mut self, q: usize) -> Result<Mat2> {
        self.local_density(q)
    }

    fn apply_kraus(&mut self, q: usize, op: &Mat2) -> Result<f64> {
        self.apply_local_op(q, op, true)
    }

    fn cut_entropy(&mut self, cut: usize) -> Result<f64> {
        self.bipartite_entropy(cut)
    }
}

impl UnravelState for DenseState {
    fn qubits(&self) -> usize {
        self.n()
    }

    fn local_rho(&mut self, q: usize) -> Result<Mat2> {
        let mut rho = Mat2::zeros();
        for s in 0..2 {
            for t in 0..2 {
                // ⟨ψ| |t⟩⟨s| |ψ⟩ = ρ[s, t]
                let mut e = Mat2::zeros();
                e[(t, s)] = ONE;
                rho[(s, t)] = self.local_expectation(q, &e)?;
            }
        }
        let tr = rho.trace();
        Ok(rho / tr)
    }

    fn apply_kraus(&mut self, q: usize, op: &Mat2) -> Result<f64> {
        let before = self.norm().powi(2);
        self.apply_single_qubit(q, op)?;
        let after = self.norm().powi(2);
        if after <= 0.0 || !after.is_finite() {
            return Err(GroverError::ImpossibleOutcome(after));
        }
        self.normalize();
        Ok(after / before)
    }

    fn cut_entropy(&mut self, cut: usize) -> Result<f64> {
        self.entropy(cut)
    }
}

fn two_operator(ch: &KrausChannel) -> Result<()> {
    if ch.len() != 2 {
        return Err(GroverError::Validation(format!(
            "mixing optimization needs a two-operator channel, got {}",
            ch.len()
        )));
    }
    Ok(())
}

fn optimize_nonunitarity_rho(rho: &Mat2, ch: &KrausChannel, strategy: &UnravelingStrategy) -> Option<(f64, f64)> {
    maximize_mixing(strategy.grid, strategy.refine, &[], |a, phi| nonunitarity(rho, ch, &mixing_unitary(a, phi)))
        .map(|(a, phi, _)| (a, phi))
}

/// Mixing maximizing [`nonunitarity`] on the qubit's reduced state. Falls
/// back to the identity when the functional is flat.
pub fn optimize_mixing_nonunitarity<S: UnravelState>(
    state: &mut S,
    qubit: usize,
    ch: &KrausChannel,
    strategy: &UnravelingStrategy,
) -> Result<DMatrix<C64>> {
    two_operator(ch)?;
    strategy.validate()?;
    let rho = state.local_rho(qubit)?;
    Ok(match optimize_nonunitarity_rho(&rho, ch, strategy) {
        Some((a, phi)) => mixing_unitary(a, phi),
        None => DMatrix::identity(2, 2),
    })
}

/// Σ_m p_m S(ψ_m) at `cut` after applying the mixed set on `qubit`.
pub fn expected_entropy<S: UnravelState>(
    state: &S,
    qubit: usize,
    ch: &KrausChannel,
    u: &DMatrix<C64>,
    cut: usize,
) -> Result<f64> {
    let mut probe = state.clone();
    let rho = probe.local_rho(qubit)?;
    let mut total = 0.0;
    for f in mixed_operators(ch, u) {
        let p = expect(&rho, &(f.adjoint() * f));
        if p <= 1e-14 {
            continue;
        }
        let mut trial = state.clone();
        trial.apply_kraus(qubit, &f)?;
        total += p * trial.cut_entropy(cut)?;
    }
    Ok(total)
}

/// Mixing minimizing the expected post-measurement entropy at `cut`, found
/// by trial application. The identity and the non-unitarity optimum are
/// always among the candidates.
pub fn optimize_mixing_entropy<S: UnravelState>(
    state: &mut S,
    qubit: usize,
    ch: &KrausChannel,
    cut: usize,
    strategy: &UnravelingStrategy,
) -> Result<DMatrix<C64>> {
    two_operator(ch)?;
    strategy.validate()?;
    let rho = state.local_rho(qubit)?;
    let seeds: Vec<(f64, f64)> = optimize_nonunitarity_rho(&rho, ch, &UnravelingStrategy::max_nonunitarity())
        .into_iter()
        .collect();
    let snapshot = state.clone();
    let mut err = None;
    let best = maximize_mixing(strategy.grid, strategy.refine, &seeds, |a, phi| {
        match expected_entropy(&snapshot, qubit, ch, &mixing_unitary(a, phi), cut) {
            Ok(v) => -v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(match best {
        Some((a, phi, _)) => mixing_unitary(a, phi),
        None => DMatrix::identity(2, 2),
    })
}

/// One sampled outcome that was not the last operator of its set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Jump {
    pub iteration: usize,
    pub qubit: usize,
    pub outcome: usize,
}

/// Apply the channel to every qubit in ascending order, sampling outcomes.
/// Outcomes other than the last operator of the (mixed) set are appended to
/// `jumps`.
pub fn noise_layer<S: UnravelState, R: Rng>(
    state: &mut S,
    ch: &KrausChannel,
    strategy: &UnravelingStrategy,
    cut: usize,
    iteration: usize,
    rng: &mut R,
    jumps: &mut Vec<Jump>,
) -> Result<()> {
    for q in 0..state.qubits() {
        let ops: Vec<Mat2> = match strategy.kind {
            StrategyKind::Naive => ch.operators().to_vec(),
            StrategyKind::MaxNonUnitarity => {
                mix_channel(ch, &optimize_mixing_nonunitarity(state, q, ch, strategy)?)?.operators().to_vec()
            }
            StrategyKind::GreedyEntropyMin => {
                mix_channel(ch, &optimize_mixing_entropy(state, q, ch, cut, strategy)?)?.operators().to_vec()
            }
        };
        let rho = state.local_rho(q)?;
        let probs: Vec<f64> = ops.iter().map(|f| expect(&rho, &(f.adjoint() * f)).max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(GroverError::Numerical(format!(
                "outcome probabilities on qubit {q} sum to {total} at iteration {iteration}"
            )));
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (m, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            pick = Some(m);
            if u < acc {
                break;
            }
        }
        let m = pick.ok_or(GroverError::ImpossibleOutcome(total))?;
        state.apply_kraus(q, &ops[m])?;
        if m + 1 != ops.len() {
            jumps.push(Jump { iteration, qubit: q, outcome: m });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub n: usize,
    pub omega: Bitstring,
    pub channel: ChannelKind,
    pub p: f64,
    pub iters: usize,
    pub n_traj: usize,
    pub policy: TruncationPolicy,
    pub strategy: UnravelingStrategy,
    pub seed: u64,
    pub cut: usize,
    /// Keep per-trajectory records (entropy series, jump logs).
    pub retain: bool,
}

impl TrajectoryConfig {
    /// Defaults: all-ones target, M optimal iterations, equal cut, χ ≤ 64.
    pub fn new(n: usize, channel: ChannelKind, p: f64, n_traj: usize, strategy: StrategyKind, seed: u64) -> Self {
        TrajectoryConfig {
            n,
            omega: Bitstring::all_ones(n),
            channel,
            p,
            iters: crate::analytic::optimal_iterations(n),
            n_traj,
            policy: TruncationPolicy { chi_max: 64, sv_cutoff: 1e-10, renormalize: true },
            strategy: UnravelingStrategy::from_kind(strategy),
            seed,
            cut: n / 2,
            retain: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(GroverError::Validation(format!("n must be at least 2, got {}", self.n)));
        }
        self.omega.expect_len(self.n)?;
        if self.n_traj == 0 {
            return Err(GroverError::Validation("trajectory count must be at least 1".into()));
        }
        if self.iters == 0 {
            return Err(GroverError::Validation("iteration count must be at least 1".into()));
        }
        if self.cut == 0 || self.cut >= self.n {
            return Err(GroverError::Validation(format!("cut {} must lie in 1..{}", self.cut, self.n)));
        }
        if self.channel == ChannelKind::Custom {
            return Err(GroverError::Validation("trajectory runs take pf or ad channels".into()));
        }
        self.strategy.validate()?;
        TruncationPolicy::new(self.policy.chi_max, self.policy.sv_cutoff, self.policy.renormalize)?;
        self.kraus().map(|_| ())
    }

    pub fn kraus(&self) -> Result<KrausChannel> {
        make_channel(self.channel, self.p)
    }
}

/// Per-trajectory output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    /// Entropy at the cut before the first iteration and after each one.
    pub entropy_series: Vec<f64>,
    pub success_series: Vec<f64>,
    pub jump_log: Vec<Jump>,
    pub final_success: f64,
    /// Master seed; the trajectory draws from ChaCha8 stream `index`.
    pub seed_used: u64,
    pub max_bond: usize,
    pub discarded_weight: f64,
}

/// Random stream for trajectory `index`.
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Precomputed operators shared by all trajectories of one configuration.
#[derive(Clone, Debug)]
pub struct TrajectoryContext {
    pub cfg: TrajectoryConfig,
    channel: KrausChannel,
    oracle: Mpo,
    diffusion: Mpo,
}

/// Output of one Grover step on a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub iteration: usize,
    pub entropy: f64,
    pub success: f64,
    pub jumps: Vec<Jump>,
}

impl TrajectoryContext {
    pub fn new(cfg: &TrajectoryConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(TrajectoryContext {
            cfg: cfg.clone(),
            channel: cfg.kraus()?,
            oracle: Mpo::oracle(&cfg.omega),
            diffusion: Mpo::diffusion(cfg.n)?,
        })
    }

    /// Oracle, diffusion, noise layer; entropy recorded after the noise.
    pub fn step<R: Rng>(&self, state: &mut MpsState, iteration: usize, rng: &mut R) -> Result<StepRecord> {
        state.apply_mpo(&self.oracle, &self.cfg.policy)?;
        state.apply_mpo(&self.diffusion, &self.cfg.policy)?;
        let mut jumps = Vec::new();
        noise_layer(state, &self.channel, &self.cfg.strategy, self.cfg.cut, iteration, rng, &mut jumps)?;
        Ok(StepRecord {
            iteration,
            entropy: state.bipartite_entropy(self.cfg.cut)?,
            success: state.success_probability(&self.cfg.omega)?,
            jumps,
        })
    }

    pub fn run_trajectory(&self, index: usize) -> Result<TrajectoryRecord> {
        let cfg = &self.cfg;
        let mut rng = trajectory_rng(cfg.seed, index);
        let mut psi = MpsState::uniform(cfg.n)?;
        let mut entropy_series = Vec::with_capacity(cfg.iters + 1);
        let mut success_series = Vec::with_capacity(cfg.iters + 1);
        entropy_series.push(psi.bipartite_entropy(cfg.cut)?);
        success_series.push(psi.success_probability(&cfg.omega)?);
        let mut jump_log = Vec::new();
        let mut max_bond = 1;
        for k in 1..=cfg.iters {
            let rec = self.step(&mut psi, k, &mut rng)?;
            max_bond = max_bond.max(psi.max_bond());
            entropy_series.push(rec.entropy);
            success_series.push(rec.success);
            jump_log.extend(rec.jumps);
        }
        Ok(TrajectoryRecord {
            index,
            final_success: *success_series.last().unwrap_or(&0.0),
            entropy_series,
            success_series,
            jump_log,
            seed_used: cfg.seed,
            max_bond,
            discarded_weight: psi.discarded_weight(),
        })
    }
}

/// One Grover step of an MPS trajectory under `cfg` (builds the MPOs on each
/// call; use [`TrajectoryContext`] in loops).
pub fn step_trajectory<R: Rng>(
    state: &mut MpsState,
    cfg: &TrajectoryConfig,
    iteration: usize,
    rng: &mut R,
) -> Result<StepRecord> {
    TrajectoryContext::new(cfg)?.step(state, iteration, rng)
}

/// Percentile levels reported for every iteration.
pub const PERCENTILE_LEVELS: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub n_traj: usize,
    /// S_T per iteration (index 0 is the initial state).
    pub mean_te: Vec<f64>,
    pub te_stderr: Vec<f64>,
    /// Entropy percentiles at [`PERCENTILE_LEVELS`], per iteration.
    pub te_percentiles: Vec<[f64; 5]>,
    pub te_min: Vec<f64>,
    pub te_max: Vec<f64>,
    pub mean_success_series: Vec<f64>,
    pub success_stderr_series: Vec<f64>,
    pub mean_success: f64,
    pub standard_error: f64,
    pub max_bond: usize,
    pub mean_discarded_weight: f64,
    pub total_jumps: usize,
    pub records: Option<Vec<TrajectoryRecord>>,
}

impl EnsembleResult {
    fn from_records(records: Vec<TrajectoryRecord>, retain: bool) -> Self {
        let n_traj = records.len();
        let len = records.first().map_or(0, |r| r.entropy_series.len());
        let column = |k: usize, f: fn(&TrajectoryRecord) -> &Vec<f64>| -> Vec<f64> {
            records.iter().map(|r| f(r)[k]).collect()
        };
        let mut out = EnsembleResult {
            n_traj,
            mean_te: Vec::with_capacity(len),
            te_stderr: Vec::with_capacity(len),
            te_percentiles: Vec::with_capacity(len),
            te_min: Vec::with_capacity(len),
            te_max: Vec::with_capacity(len),
            mean_success_series: Vec::with_capacity(len),
            success_stderr_series: Vec::with_capacity(len),
            mean_success: 0.0,
            standard_error: 0.0,
            max_bond: records.iter().map(|r| r.max_bond).max().unwrap_or(1),
            mean_discarded_weight: stats::mean(&records.iter().map(|r| r.discarded_weight).collect::<Vec<_>>()),
            total_jumps: records.iter().map(|r| r.jump_log.len()).sum(),
            records: None,
        };
        for k in 0..len {
            let s = column(k, |r| &r.entropy_series);
            out.mean_te.push(stats::mean(&s));
            out.te_stderr.push(stats::standard_error(&s));
            let p = stats::percentiles(&s, &PERCENTILE_LEVELS);
            out.te_percentiles.push([p[0], p[1], p[2], p[3], p[4]]);
            out.te_min.push(s.iter().copied().fold(f64::INFINITY, f64::min));
            out.te_max.push(s.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let ps = column(k, |r| &r.success_series);
            out.mean_success_series.push(stats::mean(&ps));
            out.success_stderr_series.push(stats::standard_error(&ps));
        }
        out.mean_success = out.mean_success_series.last().copied().unwrap_or(f64::NAN);
        out.standard_error = out.success_stderr_series.last().copied().unwrap_or(0.0);
        if retain {
            out.records = Some(records);
        }
        out
    }
}

/// Run `cfg.n_traj` trajectories on the current rayon pool.
pub fn run_ensemble(cfg: &TrajectoryConfig) -> Result<EnsembleResult> {
    let ctx = TrajectoryContext::new(cfg)?;
    let records = (0..cfg.n_traj)
        .into_par_iter()
        .map(|i| ctx.run_trajectory(i))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleResult::from_records(records, cfg.retain))
}

/// [`run_ensemble`] on a dedicated pool of `workers` threads.
pub fn run_ensemble_with_workers(cfg: &TrajectoryConfig, workers: usize) -> Result<EnsembleResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| GroverError::Resource(format!("thread pool: {e}")))?;
    pool.install(|| run_ensemble(cfg))
}

/// Result of averaging dense statevector trajectories.
#[derive(Clone, Debug)]
pub struct DenseCrosscheck {
    pub n_traj: usize,
    pub averaged: DMatrix<C64>,
    pub exact: DMatrix<C64>,
    /// Max-norm distance between averaged and exact density matrices.
    pub distance: f64,
    pub mean_success: f64,
    pub exact_success: f64,
}

const CHUNK: usize = 64;

/// Dense statevector trajectories (n ≤ 8) averaged into a density matrix and
/// compared with exact density-matrix evolution.
pub fn dense_trajectory_crosscheck(cfg: &TrajectoryConfig) -> Result<DenseCrosscheck> {
    cfg.validate()?;
    if cfg.n > 8 || cfg.n > MAX_DENSITY_QUBITS {
        return Err(GroverError::Resource(format!("dense trajectory crosscheck limited to n <= 8, got {}", cfg.n)));
    }
    let ch = cfg.kraus()?;
    let dim = 1usize << cfg.n;
    let run_one = |i: usize| -> Result<DenseState> {
        let mut rng = trajectory_rng(cfg.seed, i);
        let mut psi = DenseState::init_uniform(cfg.n)?;
        let mut jumps = Vec::new();
        for k in 1..=cfg.iters {
            psi.apply_oracle(&cfg.omega)?;
            psi.apply_diffusion();
            noise_layer(&mut psi, &ch, &cfg.strategy, cfg.cut, k, &mut rng, &mut jumps)?;
        }
        Ok(psi)
    };
    let chunks: Vec<DMatrix<C64>> = (0..cfg.n_traj.div_ceil(CHUNK))
        .into_par_iter()
        .map(|b| {
            let mut acc = DMatrix::<C64>::zeros(dim, dim);
            for i in b * CHUNK..((b + 1) * CHUNK).min(cfg.n_traj) {
                acc += run_one(i)?.outer();
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut averaged = DMatrix::<C64>::zeros(dim, dim);
    for m in &chunks {
        averaged += m;
    }
    averaged /= c(cfg.n_traj as f64);
    let exact = crate::dense::evolve_density_matrix(cfg.n, &cfg.omega, &DenseNoise::Kraus(ch), cfg.iters)?;
    let distance = crate::linalg::max_abs((&averaged - exact.matrix()).iter());
    let idx = cfg.omega.index();
    Ok(DenseCrosscheck {
        n_traj: cfg.n_traj,
        mean_success: averaged[(idx, idx)].re,
        exact_success: exact.success_probability(&cfg.omega)?,
        exact: exact.matrix().clone(),
        averaged,
        distance,
    })
}

/// Exact density matrix the trajectories approximate (dense engine).
pub fn exact_density_matrix(cfg: &TrajectoryConfig) -> Result<DenseDensityMatrix> {
    crate::dense::evolve_density_matrix(cfg.n, &cfg.omega, &DenseNoise::Kraus(cfg.kraus()?), cfg.iters)
}
