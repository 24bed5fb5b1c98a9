//! Scaling sweeps of the final success probability and log-linear fits of
//! the excess probability P_f − 2⁻ⁿ ≃ e^{−βn} p^{−α}.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::bits::Bitstring;
use crate::channels::{make_channel, ChannelKind};
use crate::dense::{run_grover_dense, DenseNoise, MAX_DENSITY_QUBITS};
use crate::error::{GroverError, Result};
use crate::mpdo::run_grover_mpdo;
use crate::tensornet::TruncationPolicy;

/// P_f change under χ doubling above which a point is flagged.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Engine {
    /// Exact density matrix on permutation orbits (see [`crate::symmetric`]).
    Orbit,
    Mpdo,
    Dense,
}

impl Engine {
    pub fn tag(self) -> &'static str {
        match self {
            Engine::Orbit => "orbit",
            Engine::Mpdo => "mpdo",
            Engine::Dense => "dense",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetPolicy {
    FixedAllOnes,
    BinomialAverage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub channel: ChannelKind,
    pub n_list: Vec<usize>,
    pub p_grid: Vec<f64>,
    pub chi_max: usize,
    pub sv_cutoff: f64,
    pub engine: Engine,
    pub targets: TargetPolicy,
    /// Rerun every point at 2·chi_max and flag changes above
    /// [`CONVERGENCE_TOL`] (MPDO engine only; the other engines are exact).
    pub check_convergence: bool,
}

/// `count` log-spaced points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect();
    g[0] = lo;
    g[count - 1] = hi;
    g
}

/// 20 log-spaced rates on [5e−3, 5e−1].
pub fn default_p_grid() -> Vec<f64> {
    log_grid(5e-3, 5e-1, 20)
}

impl SweepSpec {
    pub fn phase_flip(n_list: Vec<usize>, p_grid: Vec<f64>) -> Self {
        SweepSpec {
            channel: ChannelKind::PhaseFlip,
            n_list,
            p_grid,
            chi_max: 32,
            sv_cutoff: 1e-12,
            engine: Engine::Orbit,
            targets: TargetPolicy::FixedAllOnes,
            check_convergence: true,
        }
    }

    pub fn amplitude_damping(n_list: Vec<usize>, p_grid: Vec<f64>) -> Self {
        SweepSpec {
            channel: ChannelKind::AmplitudeDamping,
            targets: TargetPolicy::BinomialAverage,
            ..Self::phase_flip(n_list, p_grid)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.p_grid.is_empty() {
            return Err(GroverError::Validation("sweep needs at least one n and one p".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2 || n % 2 == 1) {
            return Err(GroverError::Validation(format!("sweep n must be even and >= 2, got {n}")));
        }
        if let Some(&p) = self.p_grid.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(GroverError::Validation(format!("sweep rates must lie in (0,1), got {p}")));
        }
        if self.chi_max < 2 {
            return Err(GroverError::Validation("sweep chi_max must be >= 2".into()));
        }
        if self.engine == Engine::Dense {
            if let Some(&n) = self.n_list.iter().find(|&&n| n > MAX_DENSITY_QUBITS) {
                return Err(GroverError::Resource(format!(
                    "dense engine limited to n <= {MAX_DENSITY_QUBITS}, got {n}"
                )));
            }
        }
        if self.channel == ChannelKind::Custom {
            return Err(GroverError::Validation("sweeps take pf or ad channels".into()));
        }
        Ok(())
    }

    fn policy(&self, chi: usize) -> TruncationPolicy {
        TruncationPolicy { chi_max: chi, sv_cutoff: self.sv_cutoff, renormalize: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub p: f64,
    pub p_f: f64,
    pub excess: f64,
    pub chi: usize,
    pub engine: Engine,
    pub targets_averaged: usize,
    /// |P_f(2χ) − P_f(χ)|, 0 when not checked.
    pub chi_delta: f64,
    /// False when the χ-doubling check failed.
    pub converged: bool,
}

impl ScalingPoint {
    pub fn new(n: usize, p: f64, p_f: f64) -> Self {
        ScalingPoint {
            n,
            p,
            p_f,
            excess: p_f - 0.5f64.powi(n as i32),
            chi: 0,
            engine: Engine::Dense,
            targets_averaged: 1,
            chi_delta: 0.0,
            converged: true,
        }
    }
}

fn final_success(spec: &SweepSpec, n: usize, p: f64, omega: &Bitstring, chi: usize) -> Result<f64> {
    let ch = make_channel(spec.channel, p)?;
    let m = analytic::optimal_iterations(n);
    let trace = match spec.engine {
        Engine::Orbit => crate::symmetric::run_grover_symmetric(n, omega.count_ones(), Some(&ch), m)?,
        Engine::Mpdo => run_grover_mpdo(omega, Some(&ch), m, &spec.policy(chi))?,
        Engine::Dense => run_grover_dense(n, omega, &DenseNoise::Kraus(ch), m)?,
    };
    Ok(trace.final_success())
}

/// (P_f at χ, |ΔP_f| under χ doubling).
fn checked_success(spec: &SweepSpec, n: usize, p: f64, omega: &Bitstring) -> Result<(f64, f64)> {
    let base = final_success(spec, n, p, omega, spec.chi_max)?;
    if spec.engine != Engine::Mpdo || !spec.check_convergence {
        return Ok((base, 0.0));
    }
    let doubled = final_success(spec, n, p, omega, 2 * spec.chi_max)?;
    Ok((base, (doubled - base).abs()))
}

/// Exact binomial weights C(n, n₁)/2ⁿ, n₁ = 0..n.
pub fn binomial_weights(n: usize) -> Vec<f64> {
    let mut row = vec![1u128];
    for k in 1..=n {
        let prev = row[k - 1];
        row.push(prev * (n - k + 1) as u128 / k as u128);
    }
    let total = 2f64.powi(n as i32);
    row.into_iter().map(|c| c as f64 / total).collect()
}

/// Phase-flip sweep with the all-ones target (target-independent channel).
pub fn run_phase_flip_sweep(spec: &SweepSpec) -> Result<Vec<ScalingPoint>> {
    spec.validate()?;
    if spec.channel != ChannelKind::PhaseFlip {
        return Err(GroverError::Validation("phase-flip sweep needs channel pf".into()));
    }
    let jobs: Vec<(usize, f64)> = spec.n_list.iter().flat_map(|&n| spec.p_grid.iter().map(move |&p| (n, p))).collect();
    jobs.par_iter()
        .map(|&(n, p)| {
            let (p_f, delta) = checked_success(spec, n, p, &Bitstring::all_ones(n))?;
            Ok(ScalingPoint {
                chi: spec.chi_max,
                engine: spec.engine,
                chi_delta: delta,
                converged: delta <= CONVERGENCE_TOL,
                ..ScalingPoint::new(n, p, p_f)
            })
        })
        .collect()
}

/// Amplitude-damping sweep averaged over targets: P_f = Σ C(n,n₁)/2ⁿ P_{n₁},
/// with one representative target (n₁ leading ones) per weight class.
pub fn run_amplitude_damping_sweep(spec: &SweepSpec) -> Result<Vec<ScalingPoint>> {
    spec.validate()?;
    if spec.channel != ChannelKind::AmplitudeDamping {
        return Err(GroverError::Validation("amplitude-damping sweep needs channel ad".into()));
    }
    let jobs: Vec<(usize, f64, usize)> = spec
        .n_list
        .iter()
        .flat_map(|&n| {
            let ones: Vec<usize> = match spec.targets {
                TargetPolicy::BinomialAverage => (0..=n).collect(),
                TargetPolicy::FixedAllOnes => vec![n],
            };
            spec.p_grid.iter().flat_map(move |&p| ones.clone().into_iter().map(move |k| (n, p, k)))
        })
        .collect();
    let results: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(n, p, k)| checked_success(spec, n, p, &Bitstring::leading_ones(n, k)))
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    let mut cursor = 0;
    for &n in &spec.n_list {
        let weights = match spec.targets {
            TargetPolicy::BinomialAverage => binomial_weights(n),
            TargetPolicy::FixedAllOnes => vec![1.0],
        };
        for &p in &spec.p_grid {
            let chunk = &results[cursor..cursor + weights.len()];
            cursor += weights.len();
            let p_f = crate::stats::sum(weights.iter().zip(chunk).map(|(w, (pk, _))| w * pk));
            let delta = crate::stats::sum(weights.iter().zip(chunk).map(|(w, (_, d))| w * d));
            points.push(ScalingPoint {
                chi: spec.chi_max,
                engine: spec.engine,
                targets_averaged: weights.len(),
                chi_delta: delta,
                converged: delta <= CONVERGENCE_TOL,
                ..ScalingPoint::new(n, p, p_f)
            });
        }
    }
    Ok(points)
}

/// Dispatch on the sweep's channel.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ScalingPoint>> {
    match spec.channel {
        ChannelKind::PhaseFlip => run_phase_flip_sweep(spec),
        _ => run_amplitude_damping_sweep(spec),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingModel {
    /// e^{−βn} p^{−α}
    PhaseFlipLaw,
    /// e^{−δn} p^{−γ}
    AmplitudeDampingLaw,
}

impl ScalingModel {
    pub fn exponent_names(self) -> [&'static str; 2] {
        match self {
            ScalingModel::PhaseFlipLaw => ["alpha", "beta"],
            ScalingModel::AmplitudeDampingLaw => ["gamma", "delta"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub floor: f64,
    pub ceiling: f64,
    /// Largest noise rate admitted; 1 keeps every rate.
    pub p_max: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow { floor: 1e-9, ceiling: 1e-2, p_max: 1.0 }
    }
}

impl FitWindow {
    pub fn contains(&self, excess: f64) -> bool {
        excess >= self.floor && excess <= self.ceiling
    }

    pub fn admits(&self, pt: &ScalingPoint) -> bool {
        self.contains(pt.excess) && pt.p <= self.p_max
    }
}

/// Window plus the indices of the points it retains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSelection {
    pub window: FitWindow,
    pub retained: Vec<usize>,
}

pub fn select_fit_window(points: &[ScalingPoint], floor: f64, ceiling: f64) -> Result<WindowSelection> {
    select_window(points, FitWindow { floor, ceiling, p_max: 1.0 })
}

pub fn select_window(points: &[ScalingPoint], window: FitWindow) -> Result<WindowSelection> {
    if !(window.floor < window.ceiling) {
        return Err(GroverError::Validation(format!(
            "fit window floor {} must be below ceiling {}",
            window.floor, window.ceiling
        )));
    }
    if !(window.p_max > 0.0) {
        return Err(GroverError::Validation(format!("fit window p_max must be positive, got {}", window.p_max)));
    }
    let retained = points.iter().enumerate().filter(|(_, pt)| window.admits(pt)).map(|(i, _)| i).collect();
    Ok(WindowSelection { window, retained })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ScalingModel,
    /// (α, β) or (γ, δ).
    pub exponents: [f64; 2],
    pub standard_errors: [f64; 2],
    /// Intercept and its standard error when fitted.
    pub intercept: Option<(f64, f64)>,
    pub residual_norm: f64,
    pub window: FitWindow,
    pub point_count: usize,
}

pub const MIN_FIT_POINTS: usize = 8;

/// Least squares on log(excess) = −β n − α ln p (+ c with `intercept`).
pub fn fit_scaling(points: &[ScalingPoint], model: ScalingModel, window: FitWindow, intercept: bool) -> Result<FitResult> {
    let sel = select_window(points, window)?;
    let inside: Vec<&ScalingPoint> = sel.retained.iter().map(|&i| &points[i]).collect();
    let bad: Vec<String> =
        inside.iter().filter(|pt| !(pt.excess > 0.0)).map(|pt| format!("(n={}, p={}, excess={})", pt.n, pt.p, pt.excess)).collect();
    if !bad.is_empty() {
        return Err(GroverError::Fit(format!("non-positive excess inside window: {}", bad.join(", "))));
    }
    let flagged: Vec<String> =
        inside.iter().filter(|pt| !pt.converged).map(|pt| format!("(n={}, p={})", pt.n, pt.p)).collect();
    if !flagged.is_empty() {
        return Err(GroverError::Fit(format!("unconverged points inside window: {}", flagged.join(", "))));
    }
    let k = if intercept { 3 } else { 2 };
    if inside.len() < MIN_FIT_POINTS.max(k) {
        return Err(GroverError::Fit(format!(
            "{} points inside window [{:e}, {:e}], need at least {MIN_FIT_POINTS}",
            inside.len(),
            window.floor,
            window.ceiling
        )));
    }
    let rows = inside.len();
    let x = DMatrix::from_fn(rows, k, |r, col| match col {
        0 => -inside[r].p.ln(),
        1 => -(inside[r].n as f64),
        _ => 1.0,
    });
    let y = DVector::from_iterator(rows, inside.iter().map(|pt| pt.excess.ln()));
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| GroverError::Fit("design matrix is rank deficient".into()))?;
    let resid = &y - &x * &coef;
    let rss = resid.norm_squared();
    let dof = rows - k;
    let sigma2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let rinv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| GroverError::Fit("design matrix is rank deficient".into()))?;
    let cov = &rinv * rinv.transpose() * sigma2;
    let se = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let out = FitResult {
        model,
        exponents: [coef[0], coef[1]],
        standard_errors: [se(0), se(1)],
        intercept: intercept.then(|| (coef[2], se(2))),
        residual_norm: rss.sqrt(),
        window,
        point_count: rows,
    };
    if !out.exponents.iter().all(|e| e.is_finite()) {
        return Err(GroverError::Fit("non-finite exponents".into()));
    }
    Ok(out)
}

/// Fits over a family of windows, for reporting how the exponents move with
/// the window. Windows with too few points are skipped.
pub fn window_sensitivity(points: &[ScalingPoint], model: ScalingModel, windows: &[FitWindow]) -> Vec<FitResult> {
    windows.iter().filter_map(|w| fit_scaling(points, model, *w, false).ok()).collect()
}

pub fn default_sensitivity_windows() -> Vec<FitWindow> {
    let mut out = Vec::new();
    for p_max in [1.0, 0.1, 0.03] {
        for ceiling in [1e-1, 1e-2, 1e-3] {
            for floor in [1e-9, 1e-6] {
                out.push(FitWindow { floor, ceiling, p_max });
            }
        }
    }
    out
}

/// Points 2⁻ⁿ + e^{−βn} p^{−α} (1 + jitter·z) with z standard normal drawn
/// from a seeded ChaCha8 generator in (n, p) order.
pub fn generate_synthetic(
    exponents: [f64; 2],
    n_list: &[usize],
    p_grid: &[f64],
    jitter: f64,
    seed: u64,
) -> Result<Vec<ScalingPoint>> {
    if !(jitter >= 0.0) {
        return Err(GroverError::Validation(format!("jitter must be non-negative, got {jitter}")));
    }
    let [alpha, beta] = exponents;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_list.len() * p_grid.len());
    for &n in n_list {
        for &p in p_grid {
            let z: f64 = if jitter > 0.0 { StandardNormal.sample(&mut rng) } else { 0.0 };
            let excess = (-beta * n as f64).exp() * p.powf(-alpha) * (1.0 + jitter * z);
            let mut pt = ScalingPoint::new(n, p, 0.5f64.powi(n as i32) + excess);
            pt.excess = excess;
            points.push(pt);
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: FitWindow = FitWindow { floor: 0.0, ceiling: f64::INFINITY, p_max: 1.0 };

    #[test]
    fn grid_endpoints() {
        let g = default_p_grid();
        assert_eq!(g.len(), 20);
        assert!(g[0] == 5e-3 && g[19] == 0.5);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn binomial_weights_sum_to_one() {
        for n in [4, 10, 16] {
            let w = binomial_weights(n);
            assert_eq!(w.len(), n + 1);
            assert_eq!(w.iter().sum::<f64>(), 1.0);
        }
        assert_eq!(binomial_weights(4), vec![1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0]);
    }

    #[test]
    fn exact_synthetic_recovery() {
        let pts = generate_synthetic([1.735, 0.7844], &[8, 10, 12, 14, 16], &default_p_grid(), 0.0, 1).unwrap();
        assert!(pts.iter().all(|p| p.p_f >= 0.5f64.powi(p.n as i32)));
        let fit = fit_scaling(&pts, ScalingModel::PhaseFlipLaw, ALL, false).unwrap();
        assert!((fit.exponents[0] - 1.735).abs() < 1e-9);
        assert!((fit.exponents[1] - 0.7844).abs() < 1e-9);
        let with_c = fit_scaling(&pts, ScalingModel::PhaseFlipLaw, ALL, true).unwrap();
        assert!(with_c.intercept.unwrap().0.abs() < 1e-9);
    }

    #[test]
    fn window_selection_and_errors() {
        let pts = generate_synthetic([2.0, 1.5], &[8, 10], &default_p_grid(), 0.0, 1).unwrap();
        let all = select_fit_window(&pts, 0.0, f64::INFINITY).unwrap();
        assert_eq!(all.retained.len(), pts.len());
        assert!(select_fit_window(&pts, 1.0, 0.5).is_err());
        let empty = FitWindow { floor: 1e9, ceiling: 1e10, p_max: 1.0 };
        assert!(matches!(fit_scaling(&pts, ScalingModel::AmplitudeDampingLaw, empty, false), Err(GroverError::Fit(_))));
        let mut neg = pts.clone();
        neg[0].excess = 0.0;
        assert!(fit_scaling(&neg, ScalingModel::AmplitudeDampingLaw, ALL, false).is_err());
        let mut flagged = pts;
        flagged[3].converged = false;
        assert!(fit_scaling(&flagged, ScalingModel::AmplitudeDampingLaw, ALL, false).is_err());
    }

    #[test]
    fn dense_sweep_is_monotone_in_rate() {
        let mut spec = SweepSpec::phase_flip(vec![6], log_grid(1e-3, 0.3, 8));
        spec.engine = Engine::Dense;
        let pts = run_phase_flip_sweep(&spec).unwrap();
        assert!(pts.windows(2).all(|w| w[1].p_f <= w[0].p_f + 1e-9));
    }

    #[test]
    fn engines_agree_on_sweep() {
        let spec = SweepSpec::amplitude_damping(vec![4, 6], vec![0.01, 0.1]);
        let orbit = run_amplitude_damping_sweep(&spec).unwrap();
        let mpdo = run_amplitude_damping_sweep(&SweepSpec { engine: Engine::Mpdo, ..spec.clone() }).unwrap();
        let dense = run_amplitude_damping_sweep(&SweepSpec { engine: Engine::Dense, ..spec }).unwrap();
        for ((a, b), d) in orbit.iter().zip(&mpdo).zip(&dense) {
            assert!((a.p_f - d.p_f).abs() < 1e-13);
            assert!((b.p_f - d.p_f).abs() < 1e-9);
            assert!(b.converged);
            assert_eq!(a.targets_averaged, a.n + 1);
        }
    }
}
