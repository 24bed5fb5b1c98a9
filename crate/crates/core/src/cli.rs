//! Command-line front end: argument and config handling, CSV/JSON writers
//! and the six subcommands.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analytic;
use crate::channels::{make_channel, ChannelKind};
use crate::dense::{run_grover_dense, DenseNoise, MAX_DENSITY_QUBITS};
use crate::error::{GroverError, Result};
use crate::experiments::{
    default_p_grid, default_sensitivity_windows, fit_scaling, run_sweep, window_sensitivity, Engine, FitResult,
    FitWindow, ScalingModel, ScalingPoint, SweepSpec, TargetPolicy,
};
use crate::mpdo::run_grover_mpdo;
use crate::symmetric::run_grover_symmetric;
use crate::tensornet::{max_deviation_from_analytic, run_grover_mps, TruncationPolicy};
use crate::trajectories::{run_ensemble_with_workers, StrategyKind, TrajectoryConfig, UnravelingStrategy};
use crate::Bitstring;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest deviation tolerated between the MPS run and the closed form.
pub const IDEAL_TOL: f64 = 1e-10;
/// Dense vs MPDO agreement required by `crosscheck`.
pub const MPDO_TOL: f64 = 1e-6;
/// Dense vs trajectory agreement, in standard errors.
pub const TRAJECTORY_SIGMAS: f64 = 3.0;

#[derive(Parser, Debug)]
#[command(name = "noisy-grover", version, about = "Noisy Grover search simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Noiseless MPS run checked against the closed form.
    Ideal(Flags),
    /// Stochastic unraveling ensembles (entropy bands and mean success).
    Trajectories(Flags),
    /// Density-operator run with per-iteration diagnostics.
    Mpdo(Flags),
    /// Final success probability over an (n, p) grid.
    Sweep(Flags),
    /// Scaling-law fit of a sweep CSV.
    Fit(Flags),
    /// Dense, MPDO, orbit and trajectory engines on one small instance.
    Crosscheck(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ideal(_) => "ideal",
            Command::Trajectories(_) => "trajectories",
            Command::Mpdo(_) => "mpdo",
            Command::Sweep(_) => "sweep",
            Command::Fit(_) => "fit",
            Command::Crosscheck(_) => "crosscheck",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Ideal(f)
            | Command::Trajectories(f)
            | Command::Mpdo(f)
            | Command::Sweep(f)
            | Command::Fit(f)
            | Command::Crosscheck(f) => f,
        }
    }
}

/// Flags shared by every subcommand. Lists are comma separated. Each flag
/// can also be given as `key=value` in the `--config` file (flag names with
/// `-` replaced by `_`); flags win.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    #[arg(long)]
    pub n: Option<String>,
    /// Target bitstring, e.g. 1011.
    #[arg(long)]
    pub omega: Option<String>,
    /// pf or ad.
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub iters: Option<String>,
    #[arg(long)]
    pub chi: Option<String>,
    #[arg(long)]
    pub cutoff: Option<String>,
    #[arg(long)]
    pub traj: Option<String>,
    /// naive, numu (alias adaptive) or greedy.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub cut: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub workers: Option<String>,
    /// key=value file, or a manifest JSON from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// orbit, mpdo or dense (sweep).
    #[arg(long)]
    pub engine: Option<String>,
    /// Sweep CSV to fit.
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub floor: Option<String>,
    #[arg(long)]
    pub ceiling: Option<String>,
    #[arg(long = "p-max")]
    pub p_max: Option<String>,
    /// Fit a free intercept.
    #[arg(long)]
    pub intercept: bool,
    /// Also write the per-trajectory entropy matrix.
    #[arg(long)]
    pub matrix: bool,
}

const KEYS: &[&str] = &[
    "n", "omega", "channel", "p", "iters", "chi", "cutoff", "traj", "strategy", "seed", "cut", "out", "workers",
    "engine", "data", "floor", "ceiling", "p_max", "intercept", "matrix",
];

#[derive(Clone, Debug)]
struct Setting {
    value: String,
    origin: String,
}

/// Merged view of config file and flags, remembering where each value came
/// from so that parse errors can point at it.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    map: BTreeMap<String, Setting>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_flags(flags: &Flags) -> Result<Self> {
        let mut s = Settings::default();
        if let Some(path) = &flags.config {
            s.load_file(path)?;
        }
        let pairs: [(&str, &Option<String>); 18] = [
            ("n", &flags.n),
            ("omega", &flags.omega),
            ("channel", &flags.channel),
            ("p", &flags.p),
            ("iters", &flags.iters),
            ("chi", &flags.chi),
            ("cutoff", &flags.cutoff),
            ("traj", &flags.traj),
            ("strategy", &flags.strategy),
            ("seed", &flags.seed),
            ("cut", &flags.cut),
            ("out", &flags.out),
            ("workers", &flags.workers),
            ("engine", &flags.engine),
            ("data", &flags.data),
            ("floor", &flags.floor),
            ("ceiling", &flags.ceiling),
            ("p_max", &flags.p_max),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                let flag = format!("--{}", key.replace('_', "-"));
                s.map.insert(key.to_string(), Setting { value: v.clone(), origin: format!("flag {flag}") });
            }
        }
        for (key, on) in [("intercept", flags.intercept), ("matrix", flags.matrix)] {
            if on {
                s.map.insert(key.to_string(), Setting { value: "true".into(), origin: format!("flag --{key}") });
            }
        }
        Ok(s)
    }

    /// Reads `key=value` lines, or the `config` object of a JSON manifest.
    fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| GroverError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| GroverError::Validation(format!("config {}: {e}", path.display())))?;
            let Some(obj) = value.get("config").and_then(|c| c.as_object()) else {
                return Err(GroverError::Validation(format!("config {}: manifest has no config object", path.display())));
            };
            for (key, v) in obj {
                let origin = format!("manifest {} key {key}", path.display());
                let Some(v) = v.as_str() else {
                    return Err(GroverError::Validation(format!("{origin}: value must be a string")));
                };
                self.insert_checked(key, v, origin)?;
            }
            return Ok(());
        }
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = format!("config {} line {}", path.display(), i + 1);
            let Some((key, value)) = line.split_once('=') else {
                return Err(GroverError::Validation(format!("{origin}: expected key=value, got {line:?}")));
            };
            self.insert_checked(&key.trim().replace('-', "_"), value.trim(), origin)?;
        }
        Ok(())
    }

    fn insert_checked(&mut self, key: &str, value: &str, origin: String) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(GroverError::Validation(format!("{origin}: unknown key {key:?}")));
        }
        self.map.insert(key.to_string(), Setting { value: value.to_string(), origin });
        Ok(())
    }

    fn parse_one<T: FromStr>(key: &str, s: &Setting, text: &str) -> Result<T>
    where
        T::Err: Display,
    {
        text.trim().parse().map_err(|e| GroverError::Validation(format!("{} ({key}={:?}): {e}", s.origin, s.value)))
    }

    /// Parsed value, or `default` when unset; records the resolved value.
    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let v = match self.map.get(key) {
            Some(s) => Self::parse_one(key, s, &s.value)?,
            None => default,
        };
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn get_opt<T: FromStr + Display>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.map.get(key) {
            Some(s) => {
                let v: T = Self::parse_one(key, s, &s.value)?;
                self.resolved.insert(key.to_string(), v.to_string());
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }

    pub fn require<T: FromStr + Display>(&mut self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get_opt(key)?
            .ok_or_else(|| GroverError::Validation(format!("missing --{} (or {key}= in config)", key.replace('_', "-"))))
    }

    /// Comma-separated list, or `default` when unset.
    pub fn list<T: FromStr + Display>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        let v: Vec<T> = match self.map.get(key) {
            Some(s) => {
                let items: Vec<&str> = s.value.split(',').filter(|x| !x.trim().is_empty()).collect();
                if items.is_empty() {
                    return Err(GroverError::Validation(format!("{} ({key}): empty list", s.origin)));
                }
                items.iter().map(|x| Self::parse_one(key, s, x)).collect::<Result<_>>()?
            }
            None => default,
        };
        let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        self.resolved.insert(key.to_string(), text.join(","));
        Ok(v)
    }

    pub fn flag(&mut self, key: &str) -> Result<bool> {
        self.get(key, false)
    }

    /// Fails when the setting was given but fails a domain check.
    fn check(&self, key: &str, ok: bool, what: &str) -> Result<()> {
        if ok {
            return Ok(());
        }
        let origin = self.map.get(key).map_or_else(|| "default".to_string(), |s| s.origin.clone());
        Err(GroverError::Validation(format!("{origin} ({key}): {what}")))
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}

/// Parses `pf`/`ad` (long names accepted).
pub fn parse_channel(s: &str) -> Result<ChannelKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "pf" | "phase-flip" | "phase_flip" => Ok(ChannelKind::PhaseFlip),
        "ad" | "amplitude-damping" | "amplitude_damping" => Ok(ChannelKind::AmplitudeDamping),
        other => Err(GroverError::Validation(format!("unknown channel {other:?} (expected pf or ad)"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Channel(ChannelKind);

impl FromStr for Channel {
    type Err = GroverError;
    fn from_str(s: &str) -> Result<Self> {
        parse_channel(s).map(Channel)
    }
}

impl Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0.tag())
    }
}

impl Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Engine {
    type Err = GroverError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "orbit" => Ok(Engine::Orbit),
            "mpdo" => Ok(Engine::Mpdo),
            "dense" => Ok(Engine::Dense),
            other => Err(GroverError::Validation(format!("unknown engine {other:?} (expected orbit, mpdo or dense)"))),
        }
    }
}

impl Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Round-trip float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV table with a versioned schema comment on the first line.
pub struct CsvTable {
    kind: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        CsvTable { kind: kind.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, manifest: &str) -> String {
        let mut s = format!(
            "# schema: noisy-grover/{}/v{SCHEMA_VERSION} columns={}\n# manifest: {manifest}\n",
            self.kind,
            self.columns.join(",")
        );
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Reads a CSV written by [`CsvTable`] into (columns, rows).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| GroverError::Validation(format!("{}: no header row", path.display())))?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if row.len() != columns.len() {
            return Err(GroverError::Validation(format!(
                "{}: data row {} has {} fields, header has {}",
                path.display(),
                i + 1,
                row.len(),
                columns.len()
            )));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub guards: Vec<String>,
    pub outputs: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Collects output files for one invocation and writes them with a shared
/// manifest.
pub struct Output {
    dir: PathBuf,
    command: String,
    started: u64,
    files: Vec<(String, String)>,
    pub guards: Vec<String>,
}

impl Output {
    fn new(dir: PathBuf, command: &str) -> Self {
        Output { dir, command: command.into(), started: unix_now(), files: Vec::new(), guards: Vec::new() }
    }

    fn manifest_name(&self) -> String {
        format!("manifest_{}.json", self.command)
    }

    fn csv(&mut self, name: String, table: &CsvTable) {
        let body = table.render(&self.manifest_name());
        self.files.push((name, body));
    }

    fn json<T: Serialize>(&mut self, name: String, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value).map_err(|e| GroverError::Validation(e.to_string()))?;
        body.push('\n');
        self.files.push((name, body));
        Ok(())
    }

    /// Writes every file plus the manifest; returns the paths written.
    fn finish(self, settings: &Settings, seed: Option<u64>) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        let manifest = RunManifest {
            command: self.command.clone(),
            config: settings.resolved().clone(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_s: self.started,
            finished_unix_s: unix_now(),
            guards: self.guards.clone(),
            outputs: self.files.iter().map(|(n, _)| n.clone()).collect(),
        };
        let mut paths = Vec::new();
        for (name, body) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, body)?;
            paths.push(path);
        }
        let path = self.dir.join(self.manifest_name());
        let mut body = serde_json::to_string_pretty(&manifest).map_err(|e| GroverError::Validation(e.to_string()))?;
        body.push('\n');
        fs::write(&path, body)?;
        paths.push(path);
        Ok(paths)
    }
}

/// Compact rate label for file names, e.g. 0.02 → `0.02`.
fn rate_label(p: f64) -> String {
    format!("{p}")
}

fn target(settings: &mut Settings, n: usize) -> Result<Bitstring> {
    let omega = settings.get("omega", Bitstring::all_ones(n))?;
    settings.check("omega", omega.len() == n, &format!("target has {} bits, n = {n}", omega.len()))?;
    Ok(omega)
}

fn out_dir(settings: &mut Settings) -> Result<PathBuf> {
    Ok(PathBuf::from(settings.get("out", "out".to_string())?))
}

fn workers(settings: &mut Settings) -> Result<usize> {
    // Not recorded: output must not depend on it.
    let w = match settings.map.get("workers") {
        Some(s) => Settings::parse_one::<usize>("workers", s, &s.value)?,
        None => 0,
    };
    Ok(w)
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| GroverError::Resource(format!("cannot build worker pool: {e}")))?;
    pool.install(f)
}

pub fn cmd_ideal(settings: &mut Settings) -> Result<Vec<PathBuf>> {
    let n: usize = settings.require("n")?;
    settings.check("n", n >= 2 && n.is_multiple_of(2), "n must be even and >= 2")?;
    let iters = settings.get("iters", analytic::optimal_iterations(n))?;
    let chi = settings.get("chi", 2usize)?;
    let cutoff = settings.get("cutoff", 1e-14)?;
    let omega = target(settings, n)?;
    let mut out = Output::new(out_dir(settings)?, "ideal");
    let policy = TruncationPolicy::new(chi, cutoff, true)?;
    let trace = run_grover_mps(&omega, iters, &policy)?;
    let mut table = CsvTable::new("ideal", &["k", "P_omega", "S_vN_bits"]);
    for r in &trace.records {
        table.push(vec![r.k.to_string(), fmt_f64(r.success_probability), fmt_f64(r.entropy)]);
    }
    out.csv(format!("ideal_n{n}.csv"), &table);
    let dev = max_deviation_from_analytic(&trace, n)?;
    let max_s = trace.records.iter().map(|r| r.entropy).fold(0.0, f64::max);
    let paths = out.finish(settings, None)?;
    if dev > IDEAL_TOL || max_s > 1.0 + 1e-12 {
        return Err(GroverError::Tolerance(format!(
            "ideal n={n}: max |P - sin^2(theta_k)| = {dev:e} (limit {IDEAL_TOL:e}), max S = {max_s} bits"
        )));
    }
    Ok(paths)
}

pub fn cmd_trajectories(settings: &mut Settings) -> Result<Vec<PathBuf>> {
    let n = settings.get("n", 10usize)?;
    let channels = settings.list("channel", vec![Channel(ChannelKind::PhaseFlip), Channel(ChannelKind::AmplitudeDamping)])?;
    let rates = settings.list("p", vec![0.005, 0.01, 0.02, 0.04])?;
    let strategies = settings.list("strategy", vec![StrategyKind::Naive, StrategyKind::MaxNonUnitarity])?;
    let n_traj = settings.get("traj", 2000usize)?;
    let seed = settings.get("seed", 0u64)?;
    let chi = settings.get("chi", 64usize)?;
    let cutoff = settings.get("cutoff", 1e-10)?;
    let iters = settings.get("iters", analytic::optimal_iterations(n))?;
    let cut = settings.get("cut", n / 2)?;
    let omega = target(settings, n)?;
    let matrix = settings.flag("matrix")?;
    let workers = workers(settings)?;
    let mut out = Output::new(out_dir(settings)?, "trajectories");
    for (ci, &Channel(channel)) in channels.iter().enumerate() {
        for (pi, &p) in rates.iter().enumerate() {
            for (si, &kind) in strategies.iter().enumerate() {
                // Distinct, reproducible master seed per ensemble.
                let sub = seed
                    .wrapping_add((ci as u64) << 40)
                    .wrapping_add((pi as u64) << 20)
                    .wrapping_add(si as u64);
                let cfg = TrajectoryConfig {
                    omega: omega.clone(),
                    iters,
                    policy: TruncationPolicy::new(chi, cutoff, true)?,
                    strategy: UnravelingStrategy::from_kind(kind),
                    cut,
                    retain: matrix,
                    ..TrajectoryConfig::new(n, channel, p, n_traj, kind, sub)
                };
                let res = run_ensemble_with_workers(&cfg, workers)?;
                if res.max_bond >= chi {
                    out.guards.push(format!("{} p={p} {}: bond dimension reached chi={chi}", channel.tag(), kind.tag()));
                }
                let stem = format!("trajectories_{}_p{}_{}", channel.tag(), rate_label(p), kind.tag());
                let mut table = CsvTable::new(
                    "trajectories",
                    &["k", "S_T", "p5", "p25", "p50", "p75", "p95", "min", "max", "mean_success", "stderr"],
                );
                for k in 0..res.mean_te.len() {
                    let q = res.te_percentiles[k];
                    table.push(vec![
                        k.to_string(),
                        fmt_f64(res.mean_te[k]),
                        fmt_f64(q[0]),
                        fmt_f64(q[1]),
                        fmt_f64(q[2]),
                        fmt_f64(q[3]),
                        fmt_f64(q[4]),
                        fmt_f64(res.te_min[k]),
                        fmt_f64(res.te_max[k]),
                        fmt_f64(res.mean_success_series[k]),
                        fmt_f64(res.success_stderr_series[k]),
                    ]);
                }
                out.csv(format!("{stem}.csv"), &table);
                if let Some(records) = &res.records {
                    let cols: Vec<String> =
                        std::iter::once("trajectory".to_string()).chain((0..res.mean_te.len()).map(|k| format!("k{k}"))).collect();
                    let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
                    let mut m = CsvTable::new("trajectory-entropy", &refs);
                    for r in records {
                        let mut row = vec![r.index.to_string()];
                        row.extend(r.entropy_series.iter().map(|&s| fmt_f64(s)));
                        m.push(row);
                    }
                    out.csv(format!("{stem}_entropy.csv"), &m);
                }
            }
        }
    }
    out.finish(settings, Some(seed))
}

pub fn cmd_mpdo(settings: &mut Settings) -> Result<Vec<PathBuf>> {
    let n = settings.get("n", 8usize)?;
    let Channel(channel) = settings.get("channel", Channel(ChannelKind::PhaseFlip))?;
    let p = settings.get("p", 0.01)?;
    let chi = settings.get("chi", 32usize)?;
    let cutoff = settings.get("cutoff", 1e-12)?;
    let iters = settings.get("iters", analytic::optimal_iterations(n))?;
    let omega = target(settings, n)?;
    let mut out = Output::new(out_dir(settings)?, "mpdo");
    let ch = make_channel(channel, p)?;
    let trace = run_grover_mpdo(&omega, Some(&ch), iters, &TruncationPolicy::new(chi, cutoff, true)?)?;
    let mut table = CsvTable::new("mpdo", &["k", "P_omega", "OE", "trace_drift", "discarded_weight"]);
    for r in &trace.records {
        table.push(vec![
            r.k.to_string(),
            fmt_f64(r.success_probability),
            fmt_f64(r.entropy),
            fmt_f64(r.trace_drift),
            fmt_f64(r.discarded_weight),
        ]);
    }
    out.csv(format!("mpdo_{}_n{n}_p{}.csv", channel.tag(), rate_label(p)), &table);
    out.finish(settings, None)
}

pub fn cmd_sweep(settings: &mut Settings) -> Result<Vec<PathBuf>> {
    let Channel(channel) = settings.require("channel")?;
    let n_list = settings.list("n", vec![8usize, 10, 12, 14, 16])?;
    let p_grid = settings.list("p", default_p_grid())?;
    let chi = settings.get("chi", 32usize)?;
    let cutoff = settings.get("cutoff", 1e-12)?;
    let engine = settings.get("engine", Engine::Orbit)?;
    let workers = workers(settings)?;
    let mut out = Output::new(out_dir(settings)?, "sweep");
    let base = match channel {
        ChannelKind::AmplitudeDamping => SweepSpec::amplitude_damping(n_list, p_grid),
        _ => SweepSpec::phase_flip(n_list, p_grid),
    };
    let spec = SweepSpec { chi_max: chi, sv_cutoff: cutoff, engine, ..base };
    let points = with_pool(workers, || run_sweep(&spec))?;
    let mut table =
        CsvTable::new("sweep", &["n", "p", "P_f", "excess", "chi", "chi_flag", "chi_delta", "engine", "targets"]);
    for pt in &points {
        if !pt.converged {
            out.guards.push(format!("n={} p={}: chi doubling moved P_f by {:e}", pt.n, pt.p, pt.chi_delta));
        }
        table.push(vec![
            pt.n.to_string(),
            fmt_f64(pt.p),
            fmt_f64(pt.p_f),
            fmt_f64(pt.excess),
            pt.chi.to_string(),
            u8::from(!pt.converged).to_string(),
            fmt_f64(pt.chi_delta),
            pt.engine.tag().to_string(),
            pt.targets_averaged.to_string(),
        ]);
    }
    let targets = match spec.targets {
        TargetPolicy::FixedAllOnes => "all-ones",
        TargetPolicy::BinomialAverage => "binomial",
    };
    out.guards.push(format!("targets: {targets}"));
    out.csv(format!("sweep_{}.csv", channel.tag()), &table);
    out.finish(settings, None)
}

/// Loads sweep points from a CSV written by `sweep` (columns n, p, P_f;
/// excess and chi_flag optional).
pub fn load_sweep_points(path: &Path) -> Result<Vec<ScalingPoint>> {
    let (cols, rows) = read_csv(path)?;
    let col = |name: &str| cols.iter().position(|c| c == name);
    let (Some(ci_n), Some(ci_p), Some(ci_pf)) = (col("n"), col("p"), col("P_f")) else {
        return Err(GroverError::Validation(format!("{}: need columns n, p, P_f", path.display())));
    };
    let ci_flag = col("chi_flag");
    let bad = |row: usize, what: &str| GroverError::Validation(format!("{}: data row {row}: bad {what}", path.display()));
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let n: usize = r[ci_n].parse().map_err(|_| bad(i + 1, "n"))?;
            let p: f64 = r[ci_p].parse().map_err(|_| bad(i + 1, "p"))?;
            let p_f: f64 = r[ci_pf].parse().map_err(|_| bad(i + 1, "P_f"))?;
            let mut pt = ScalingPoint::new(n, p, p_f);
            if let Some(c) = ci_flag {
                pt.converged = r[c] == "0";
            }
            Ok(pt)
        })
        .collect()
}

#[derive(Serialize)]
struct FitReport<'a> {
    model: &'static str,
    exponent_names: [&'static str; 2],
    data: String,
    fit: &'a FitResult,
    sensitivity: Vec<FitResult>,
}

pub fn cmd_fit(settings: &mut Settings) -> Result<Vec<PathBuf>> {
    let data: String = settings.require("data")?;
    let Channel(channel) = settings.require("channel")?;
    let d = FitWindow::default();
    let window = FitWindow {
        floor: settings.get("floor", d.floor)?,
        ceiling: settings.get("ceiling", d.ceiling)?,
        p_max: settings.get("p_max", d.p_max)?,
    };
    let intercept = settings.flag("intercept")?;
    let mut out = Output::new(out_dir(settings)?, "fit");
    let model = match channel {
        ChannelKind::AmplitudeDamping => ScalingModel::AmplitudeDampingLaw,
        _ => ScalingModel::PhaseFlipLaw,
    };
    let points = load_sweep_points(Path::new(&data))?;
    let fit = fit_scaling(&points, model, window, intercept)?;
    let report = FitReport {
        model: channel.tag(),
        exponent_names: model.exponent_names(),
        data,
        fit: &fit,
        sensitivity: window_sensitivity(&points, model, &default_sensitivity_windows()),
    };
    out.json(format!("fit_{}.json", channel.tag()), &report)?;
    out.finish(settings, None)
}

/// One line of the crosscheck report.
#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub reference: &'static str,
    pub engine: &'static str,
    pub quantity: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

pub fn cmd_crosscheck(settings: &mut Settings) -> Result<Vec<PathBuf>> {
    let n = settings.get("n", 6usize)?;
    settings.check("n", (2..=8).contains(&n) && n <= MAX_DENSITY_QUBITS, "crosscheck needs 2 <= n <= 8")?;
    let Channel(channel) = settings.get("channel", Channel(ChannelKind::PhaseFlip))?;
    let p = settings.get("p", 0.02)?;
    let chi = settings.get("chi", 32usize)?;
    let cutoff = settings.get("cutoff", 1e-12)?;
    let n_traj = settings.get("traj", 2000usize)?;
    let seed = settings.get("seed", 0u64)?;
    let strategy = settings.get("strategy", StrategyKind::Naive)?;
    let iters = settings.get("iters", analytic::optimal_iterations(n))?;
    let omega = target(settings, n)?;
    let workers = workers(settings)?;
    let mut out = Output::new(out_dir(settings)?, "crosscheck");

    let ch = make_channel(channel, p)?;
    let dense = run_grover_dense(n, &omega, &DenseNoise::Kraus(ch.clone()), iters)?;
    let mpdo = run_grover_mpdo(&omega, Some(&ch), iters, &TruncationPolicy::new(chi, cutoff, true)?)?;
    let orbit = run_grover_symmetric(n, omega.count_ones(), Some(&ch), iters)?;
    let cfg = TrajectoryConfig {
        omega: omega.clone(),
        iters,
        policy: TruncationPolicy::new(chi.max(2), 1e-10, true)?,
        retain: false,
        ..TrajectoryConfig::new(n, channel, p, n_traj, strategy, seed)
    };
    let ens = run_ensemble_with_workers(&cfg, workers)?;

    let mut series = CsvTable::new(
        "crosscheck-series",
        &["k", "P_dense", "P_mpdo", "P_orbit", "P_traj", "P_traj_stderr", "OE_dense", "OE_mpdo"],
    );
    let mut dev_p_mpdo = 0.0f64;
    let mut dev_oe_mpdo = 0.0f64;
    let mut dev_p_orbit = 0.0f64;
    let mut z_traj = 0.0f64;
    for k in 0..=iters {
        let (d, m, o) = (dense.records[k], mpdo.records[k], orbit.records[k]);
        let (t, se) = (ens.mean_success_series[k], ens.success_stderr_series[k]);
        dev_p_mpdo = dev_p_mpdo.max((d.success_probability - m.success_probability).abs());
        dev_oe_mpdo = dev_oe_mpdo.max((d.entropy - m.entropy).abs());
        dev_p_orbit = dev_p_orbit.max((d.success_probability - o.success_probability).abs());
        let diff = (d.success_probability - t).abs();
        let z = if se > 0.0 { diff / se } else if diff <= 1e-12 { 0.0 } else { f64::INFINITY };
        z_traj = z_traj.max(z);
        series.push(vec![
            k.to_string(),
            fmt_f64(d.success_probability),
            fmt_f64(m.success_probability),
            fmt_f64(o.success_probability),
            fmt_f64(t),
            fmt_f64(se),
            fmt_f64(d.entropy),
            fmt_f64(m.entropy),
        ]);
    }
    let final_se = ens.standard_error;
    let final_diff = (dense.final_success() - ens.mean_success).abs();
    let final_z = if final_se > 0.0 { final_diff / final_se } else if final_diff <= 1e-12 { 0.0 } else { f64::INFINITY };
    let lines = vec![
        CheckLine { reference: "dense", engine: "mpdo", quantity: "P_omega(k)", deviation: dev_p_mpdo, tolerance: MPDO_TOL },
        CheckLine { reference: "dense", engine: "mpdo", quantity: "OE(k)", deviation: dev_oe_mpdo, tolerance: MPDO_TOL },
        CheckLine { reference: "dense", engine: "orbit", quantity: "P_omega(k)", deviation: dev_p_orbit, tolerance: 1e-10 },
        CheckLine {
            reference: "dense",
            engine: "trajectories",
            quantity: "P_f sigmas",
            deviation: final_z,
            tolerance: TRAJECTORY_SIGMAS,
        },
    ];
    // Per-iteration z-scores are reported but not gated: the maximum of
    // M + 1 correlated z-scores exceeds 3 too often to be a test.
    out.guards.push(format!("max per-iteration trajectory z-score {z_traj:.3}"));
    let mut table = CsvTable::new("crosscheck", &["reference", "engine", "quantity", "max_deviation", "tolerance", "pass"]);
    for l in &lines {
        table.push(vec![
            l.reference.into(),
            l.engine.into(),
            l.quantity.into(),
            fmt_f64(l.deviation),
            fmt_f64(l.tolerance),
            u8::from(l.passed()).to_string(),
        ]);
    }
    let stem = format!("crosscheck_{}_n{n}_p{}", channel.tag(), rate_label(p));
    out.csv(format!("{stem}.csv"), &table);
    out.csv(format!("{stem}_series.csv"), &series);
    let paths = out.finish(settings, Some(seed))?;
    let failed: Vec<String> = lines
        .iter()
        .filter(|l| !l.passed())
        .map(|l| format!("{} vs {} {}: {:e} > {:e}", l.engine, l.reference, l.quantity, l.deviation, l.tolerance))
        .collect();
    if !failed.is_empty() {
        return Err(GroverError::Tolerance(failed.join("; ")));
    }
    Ok(paths)
}

/// Runs a parsed command; returns the files written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut settings = Settings::from_flags(cli.command.flags())?;
    match &cli.command {
        Command::Ideal(_) => cmd_ideal(&mut settings),
        Command::Trajectories(_) => cmd_trajectories(&mut settings),
        Command::Mpdo(_) => cmd_mpdo(&mut settings),
        Command::Sweep(_) => cmd_sweep(&mut settings),
        Command::Fit(_) => cmd_fit(&mut settings),
        Command::Crosscheck(_) => cmd_crosscheck(&mut settings),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
