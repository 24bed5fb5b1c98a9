//! C ABI for the noisy Grover simulator.
//!
//! Every fallible call returns an [`NgStatus`] and writes its result through
//! an out-pointer. On failure the message is kept per thread and can be read
//! with [`ng_last_error`]. Results are opaque handles released with the
//! matching `_free` function; freeing NULL is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use noisy_grover::analytic;
use noisy_grover::channels::{make_channel, verify_completeness, ChannelKind, KrausChannel};
use noisy_grover::dense::{run_grover_dense, DenseNoise};
use noisy_grover::experiments::{fit_scaling, run_sweep, Engine, FitWindow, ScalingModel, ScalingPoint, SweepSpec};
use noisy_grover::mpdo::run_grover_mpdo;
use noisy_grover::symmetric::run_grover_symmetric;
use noisy_grover::tensornet::{run_grover_mps, TruncationPolicy};
use noisy_grover::trajectories::{
    run_ensemble_with_workers, EnsembleResult, StrategyKind, TrajectoryConfig, UnravelingStrategy,
};
use noisy_grover::{Bitstring, GroverError, RunTrace};

/// Status codes; 2–4 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NgStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Tolerance = 3,
    Resource = 4,
    Domain = 5,
    State = 6,
    Numerical = 7,
    Fit = 8,
    Io = 9,
    OutOfRange = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NgChannelKind {
    PhaseFlip = 0,
    AmplitudeDamping = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NgStrategy {
    Naive = 0,
    MaxNonUnitarity = 1,
    GreedyEntropyMin = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NgEngine {
    Orbit = 0,
    Mpdo = 1,
    Dense = 2,
}

/// Opaque single-qubit Kraus channel.
pub struct NgChannel(KrausChannel);

/// Opaque per-iteration run trace.
pub struct NgTrace(RunTrace);

/// Opaque trajectory ensemble summary.
pub struct NgEnsemble(EnsembleResult);

/// Opaque list of sweep points.
pub struct NgSweep(Vec<ScalingPoint>);

/// One row of a run trace.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NgRecord {
    pub k: u64,
    pub success_probability: f64,
    /// Bits; NaN when the engine has no chain to cut.
    pub entropy: f64,
    pub trace_drift: f64,
    pub discarded_weight: f64,
}

/// Trajectory run settings. Zero in `iters`, `cut` or `chi` selects the
/// default (optimal M, n/2, 64).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NgTrajectoryConfig {
    pub n: u32,
    pub channel: NgChannelKind,
    pub p: f64,
    pub iters: u32,
    pub n_traj: u32,
    pub strategy: NgStrategy,
    pub seed: u64,
    pub chi: u32,
    pub cutoff: f64,
    pub cut: u32,
}

/// One iteration of an ensemble summary.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NgEnsembleRow {
    pub mean_te: f64,
    pub te_stderr: f64,
    /// 5, 25, 50, 75 and 95th percentiles of the trajectory entropies.
    pub percentiles: [f64; 5],
    pub mean_success: f64,
    pub success_stderr: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NgScalingPoint {
    pub n: u32,
    pub p: f64,
    pub p_f: f64,
    pub excess: f64,
    pub converged: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NgFit {
    /// (α, β) for phase flip, (γ, δ) for amplitude damping.
    pub exponents: [f64; 2],
    pub standard_errors: [f64; 2],
    pub residual_norm: f64,
    pub point_count: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &GroverError) -> NgStatus {
    match err {
        GroverError::Domain(_) => NgStatus::Domain,
        GroverError::Validation(_) => NgStatus::Validation,
        GroverError::State(_) | GroverError::ImpossibleOutcome(_) => NgStatus::State,
        GroverError::Resource(_) => NgStatus::Resource,
        GroverError::Numerical(_) => NgStatus::Numerical,
        GroverError::Fit(_) => NgStatus::Fit,
        GroverError::Tolerance(_) => NgStatus::Tolerance,
        GroverError::Io(_) => NgStatus::Io,
    }
}

enum Failure {
    Grover(GroverError),
    Null(&'static str),
    Range(String),
}

impl From<GroverError> for Failure {
    fn from(e: GroverError) -> Self {
        Failure::Grover(e)
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NgStatus::Ok,
        Ok(Err(Failure::Grover(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            NgStatus::NullPointer
        }
        Ok(Err(Failure::Range(msg))) => {
            set_error(msg);
            NgStatus::OutOfRange
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            NgStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

/// NULL selects the all-ones target.
unsafe fn target(omega: *const c_char, n: u32) -> Result<Bitstring, Failure> {
    if omega.is_null() {
        return Ok(Bitstring::all_ones(n as usize));
    }
    let s = CStr::from_ptr(omega)
        .to_str()
        .map_err(|_| GroverError::Validation("target is not valid UTF-8".into()))?;
    let bits: Bitstring = s.parse()?;
    bits.expect_len(n as usize)?;
    Ok(bits)
}

fn kind(c: NgChannelKind) -> ChannelKind {
    match c {
        NgChannelKind::PhaseFlip => ChannelKind::PhaseFlip,
        NgChannelKind::AmplitudeDamping => ChannelKind::AmplitudeDamping,
    }
}

fn into_handle<T>(value: T, out: &mut *mut T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ng_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ng_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ng_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// floor(π/4 · 2^(n/2)).
#[no_mangle]
pub extern "C" fn ng_optimal_iterations(n: u32) -> u64 {
    analytic::optimal_iterations(n as usize) as u64
}

/// sin²((2k+1)·asin(2^(−n/2))).
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn ng_ideal_success_probability(n: u32, k: u64, out: *mut f64) -> NgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = analytic::ideal_success_probability(n as usize, k as usize)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ng_channel_new(kind_: NgChannelKind, p: f64, out: *mut *mut NgChannel) -> NgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        into_handle(NgChannel(make_channel(kind(kind_), p)?), out);
        Ok(())
    })
}

/// Frobenius norm of Σ E†E − 1.
///
/// # Safety
/// `ch` must come from [`ng_channel_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ng_channel_completeness(ch: *const NgChannel, out: *mut f64) -> NgStatus {
    guard(|| {
        let ch = in_ref(ch, "channel")?;
        *out_ref(out, "out")? = verify_completeness(&ch.0);
        Ok(())
    })
}

/// # Safety
/// `ch` must come from [`ng_channel_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ng_channel_free(ch: *mut NgChannel) {
    free_handle(ch)
}

/// Noiseless MPS run with bond dimension `chi` (2 is exact).
///
/// # Safety
/// `omega` is NULL or a NUL-terminated bitstring; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ng_run_ideal(
    n: u32,
    omega: *const c_char,
    iters: u64,
    chi: u32,
    out: *mut *mut NgTrace,
) -> NgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let omega = target(omega, n)?;
        let policy = TruncationPolicy::new(chi as usize, 1e-14, true)?;
        into_handle(NgTrace(run_grover_mps(&omega, iters as usize, &policy)?), out);
        Ok(())
    })
}

/// Noisy density-operator run. `engine` selects MPDO (with `chi`, `cutoff`),
/// exact dense or the exact permutation-orbit engine.
///
/// # Safety
/// `ch` must be a live channel handle, `omega` NULL or a NUL-terminated
/// bitstring, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ng_run_noisy(
    engine: NgEngine,
    n: u32,
    omega: *const c_char,
    ch: *const NgChannel,
    iters: u64,
    chi: u32,
    cutoff: f64,
    out: *mut *mut NgTrace,
) -> NgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let ch = &in_ref(ch, "channel")?.0;
        let omega = target(omega, n)?;
        let m = iters as usize;
        let trace = match engine {
            NgEngine::Mpdo => run_grover_mpdo(&omega, Some(ch), m, &TruncationPolicy::new(chi as usize, cutoff, true)?)?,
            NgEngine::Dense => run_grover_dense(n as usize, &omega, &DenseNoise::Kraus(ch.clone()), m)?,
            NgEngine::Orbit => run_grover_symmetric(n as usize, omega.count_ones(), Some(ch), m)?,
        };
        into_handle(NgTrace(trace), out);
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ng_trace_len(trace: *const NgTrace) -> u64 {
    trace.as_ref().map_or(0, |t| t.0.len() as u64)
}

/// # Safety
/// `trace` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ng_trace_get(trace: *const NgTrace, index: u64, out: *mut NgRecord) -> NgStatus {
    guard(|| {
        let t = in_ref(trace, "trace")?;
        let out = out_ref(out, "out")?;
        let r = t
            .0
            .records
            .get(index as usize)
            .ok_or_else(|| Failure::Range(format!("record {index} out of range (len {})", t.0.len())))?;
        *out = NgRecord {
            k: r.k as u64,
            success_probability: r.success_probability,
            entropy: r.entropy,
            trace_drift: r.trace_drift,
            discarded_weight: r.discarded_weight,
        };
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ng_trace_free(trace: *mut NgTrace) {
    free_handle(trace)
}

/// Defaults for a trajectory run on `n` qubits.
#[no_mangle]
pub extern "C" fn ng_trajectory_config_default(n: u32, channel: NgChannelKind, p: f64) -> NgTrajectoryConfig {
    NgTrajectoryConfig {
        n,
        channel,
        p,
        iters: 0,
        n_traj: 100,
        strategy: NgStrategy::Naive,
        seed: 0,
        chi: 0,
        cutoff: 1e-10,
        cut: 0,
    }
}

/// Runs an ensemble on `workers` threads (0 = global pool). Output does not
/// depend on `workers`.
///
/// # Safety
/// `cfg` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ng_trajectories_run(
    cfg: *const NgTrajectoryConfig,
    workers: u32,
    out: *mut *mut NgEnsemble,
) -> NgStatus {
    guard(|| {
        let c = *in_ref(cfg, "config")?;
        let out = out_ref(out, "out")?;
        let n = c.n as usize;
        let strategy = match c.strategy {
            NgStrategy::Naive => StrategyKind::Naive,
            NgStrategy::MaxNonUnitarity => StrategyKind::MaxNonUnitarity,
            NgStrategy::GreedyEntropyMin => StrategyKind::GreedyEntropyMin,
        };
        let base = TrajectoryConfig::new(n, kind(c.channel), c.p, c.n_traj as usize, strategy, c.seed);
        let cfg = TrajectoryConfig {
            iters: if c.iters == 0 { base.iters } else { c.iters as usize },
            cut: if c.cut == 0 { base.cut } else { c.cut as usize },
            policy: TruncationPolicy::new(if c.chi == 0 { 64 } else { c.chi as usize }, c.cutoff, true)?,
            strategy: UnravelingStrategy::from_kind(strategy),
            retain: false,
            ..base
        };
        into_handle(NgEnsemble(run_ensemble_with_workers(&cfg, workers as usize)?), out);
        Ok(())
    })
}

/// Number of rows (iterations + 1).
///
/// # Safety
/// `ens` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ng_ensemble_len(ens: *const NgEnsemble) -> u64 {
    ens.as_ref().map_or(0, |e| e.0.mean_te.len() as u64)
}

/// Final mean success probability and its standard error.
///
/// # Safety
/// `ens` must be a live handle; `mean` and `stderr_` valid.
#[no_mangle]
pub unsafe extern "C" fn ng_ensemble_success(ens: *const NgEnsemble, mean: *mut f64, stderr_: *mut f64) -> NgStatus {
    guard(|| {
        let e = &in_ref(ens, "ensemble")?.0;
        *out_ref(mean, "mean")? = e.mean_success;
        *out_ref(stderr_, "stderr")? = e.standard_error;
        Ok(())
    })
}

/// # Safety
/// `ens` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ng_ensemble_get(ens: *const NgEnsemble, index: u64, out: *mut NgEnsembleRow) -> NgStatus {
    guard(|| {
        let e = &in_ref(ens, "ensemble")?.0;
        let out = out_ref(out, "out")?;
        let k = index as usize;
        if k >= e.mean_te.len() {
            return Err(Failure::Range(format!("row {index} out of range (len {})", e.mean_te.len())));
        }
        *out = NgEnsembleRow {
            mean_te: e.mean_te[k],
            te_stderr: e.te_stderr[k],
            percentiles: e.te_percentiles[k],
            mean_success: e.mean_success_series[k],
            success_stderr: e.success_stderr_series[k],
        };
        Ok(())
    })
}

/// # Safety
/// `ens` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ng_ensemble_free(ens: *mut NgEnsemble) {
    free_handle(ens)
}

/// Final-success sweep over `n_list` × `p_grid`. Amplitude damping averages
/// over targets binomially; phase flip uses the all-ones target.
///
/// # Safety
/// `n_list` and `p_grid` must point to `n_len` and `p_len` values; `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn ng_sweep_run(
    channel: NgChannelKind,
    engine: NgEngine,
    n_list: *const u32,
    n_len: usize,
    p_grid: *const f64,
    p_len: usize,
    chi: u32,
    out: *mut *mut NgSweep,
) -> NgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if n_list.is_null() || p_grid.is_null() {
            return Err(Failure::Null("grid"));
        }
        let ns: Vec<usize> = std::slice::from_raw_parts(n_list, n_len).iter().map(|&n| n as usize).collect();
        let ps = std::slice::from_raw_parts(p_grid, p_len).to_vec();
        let base = match channel {
            NgChannelKind::PhaseFlip => SweepSpec::phase_flip(ns, ps),
            NgChannelKind::AmplitudeDamping => SweepSpec::amplitude_damping(ns, ps),
        };
        let engine = match engine {
            NgEngine::Orbit => Engine::Orbit,
            NgEngine::Mpdo => Engine::Mpdo,
            NgEngine::Dense => Engine::Dense,
        };
        let spec = SweepSpec { engine, chi_max: if chi == 0 { base.chi_max } else { chi as usize }, ..base };
        into_handle(NgSweep(run_sweep(&spec)?), out);
        Ok(())
    })
}

/// # Safety
/// `sweep` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ng_sweep_len(sweep: *const NgSweep) -> u64 {
    sweep.as_ref().map_or(0, |s| s.0.len() as u64)
}

/// # Safety
/// `sweep` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ng_sweep_get(sweep: *const NgSweep, index: u64, out: *mut NgScalingPoint) -> NgStatus {
    guard(|| {
        let s = &in_ref(sweep, "sweep")?.0;
        let out = out_ref(out, "out")?;
        let pt = s
            .get(index as usize)
            .ok_or_else(|| Failure::Range(format!("point {index} out of range (len {})", s.len())))?;
        *out = NgScalingPoint { n: pt.n as u32, p: pt.p, p_f: pt.p_f, excess: pt.excess, converged: pt.converged };
        Ok(())
    })
}

/// Fits log(excess) = −b·n − a·ln p over points with floor ≤ excess ≤
/// ceiling and p ≤ p_max.
///
/// # Safety
/// `sweep` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ng_sweep_fit(
    sweep: *const NgSweep,
    channel: NgChannelKind,
    floor: f64,
    ceiling: f64,
    p_max: f64,
    intercept: bool,
    out: *mut NgFit,
) -> NgStatus {
    guard(|| {
        let s = &in_ref(sweep, "sweep")?.0;
        let out = out_ref(out, "out")?;
        let model = match channel {
            NgChannelKind::PhaseFlip => ScalingModel::PhaseFlipLaw,
            NgChannelKind::AmplitudeDamping => ScalingModel::AmplitudeDampingLaw,
        };
        let f = fit_scaling(s, model, FitWindow { floor, ceiling, p_max }, intercept)?;
        *out = NgFit {
            exponents: f.exponents,
            standard_errors: f.standard_errors,
            residual_norm: f.residual_norm,
            point_count: f.point_count as u64,
        };
        Ok(())
    })
}

/// # Safety
/// `sweep` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ng_sweep_free(sweep: *mut NgSweep) {
    free_handle(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_out_pointer_reports() {
        let st = unsafe { ng_ideal_success_probability(4, 1, ptr::null_mut()) };
        assert_eq!(st, NgStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(ng_last_error()) }.to_str().unwrap();
        assert!(msg.contains("null"));
        ng_clear_error();
        assert!(ng_last_error().is_null());
    }

    #[test]
    fn domain_errors_map() {
        let mut ch = ptr::null_mut();
        let st = unsafe { ng_channel_new(NgChannelKind::PhaseFlip, 1.5, &mut ch) };
        assert_eq!(st, NgStatus::Domain);
        assert!(ch.is_null());
    }
}
