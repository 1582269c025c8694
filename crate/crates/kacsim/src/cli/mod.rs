//! Command-line entry point: configuration loading, dispatch and artifacts.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    checkpoint_records, monitor_monotone, DiagError, DiagnosticsConfig, DiagnosticsRecord, MonitorResult,
    ENTROPY_MIN_SAMPLES, FISHER_MIN_SAMPLES,
};
use crate::functionals::{inequality_suite, FunctionalError, SuiteConfig};
use crate::kernels::{KernelError, KernelSpec};
use crate::simulator::{SimConfig, SimError, Simulation};
use crate::sphere_spectral::{self_test, SelfTestConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Slack, in combined standard errors, of the monotonicity monitors.
pub const MONITOR_SLACK: f64 = 2.0;

#[derive(Debug, Parser)]
#[command(name = "kacsim", version, about = "Kac particle simulation and spherical Fisher-information checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap; falls back to KK_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Run a replica ensemble and its diagnostics.
    Simulate,
    /// Evaluate the functional inequalities on a test-function family.
    Inequalities,
    /// Print the derived constants of a kernel.
    KernelInfo,
    /// Check the spherical transforms and operators.
    SphereSelftest,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequalities: Option<SuiteConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selftest: Option<SelfTestConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::Io(m) => CliError::Io(m),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => CliError::Config(m),
            SimError::Kernel(k) => k.into(),
            SimError::Io(m) => CliError::Io(m),
            SimError::Replica { index, source } => match CliError::from(*source) {
                CliError::Config(m) => CliError::Config(format!("replica {index}: {m}")),
                CliError::Invariant(m) => CliError::Invariant(format!("replica {index}: {m}")),
                CliError::Io(m) => CliError::Io(format!("replica {index}: {m}")),
            },
            e @ SimError::Conservation { .. } => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<FunctionalError> for CliError {
    fn from(e: FunctionalError) -> Self {
        match e {
            FunctionalError::EmptyFamily | FunctionalError::Invalid(_) => CliError::Config(e.to_string()),
            e => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<DiagError> for CliError {
    fn from(e: DiagError) -> Self {
        match e {
            DiagError::Kernel(k) => k.into(),
            e => CliError::Invariant(e.to_string()),
        }
    }
}

fn json_err(e: serde_json::Error) -> CliError {
    if e.is_io() {
        CliError::Io(e.to_string())
    } else {
        CliError::Config(e.to_string())
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(json_err)
    }

    /// Apply command-line overrides and propagate the master seed.
    pub fn resolve(mut self, cli: &Cli) -> Result<Self, CliError> {
        if let Some(c) = self.command {
            if c != cli.command {
                return Err(CliError::Config(format!("config is for {c:?}, invoked as {:?}", cli.command)));
            }
        }
        self.command = Some(cli.command);
        if let Some(s) = cli.seed {
            self.seed = Some(s);
        }
        if let Some(o) = &cli.out {
            self.out_dir = Some(o.clone());
        }
        if let Some(s) = self.seed {
            if let Some(sim) = self.simulation.as_mut() {
                sim.seed = s;
            }
            if let Some(q) = self.inequalities.as_mut() {
                q.seed = s;
            }
            if let Some(t) = self.selftest.as_mut() {
                t.seed = s;
            }
        }
        Ok(self)
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("kacsim-out"))
    }
}

fn thread_cap(cli: &Cli) -> Result<Option<usize>, CliError> {
    if let Some(t) = cli.threads {
        return Ok(Some(t));
    }
    match std::env::var("KK_THREADS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Config(format!("KK_THREADS = {v:?} is not a count"))),
        Err(_) => Ok(None),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(json_err)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    write_json(&dir.join("resolved_config.json"), cfg)?;
    Ok(dir)
}

/// Parse arguments, run and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("kacsim: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    let cfg = cfg.resolve(cli)?;
    let threads = thread_cap(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Simulate => cmd_simulate(&cfg, cli.verbose),
        Command::Inequalities => cmd_inequalities(&cfg, cli.verbose),
        Command::KernelInfo => cmd_kernel_info(&cfg, cli.out.is_some()),
        Command::SphereSelftest => cmd_sphere_selftest(&cfg, cli.out.is_some() || cfg.out_dir.is_some()),
    })
}

#[derive(Debug, Serialize)]
struct ReplicaSummary {
    replica: usize,
    proposals: u64,
    collisions: u64,
    coincident: u64,
    mean_acceptance: f64,
    momentum_residual: f64,
    energy_residual: f64,
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    seed: u64,
    n: usize,
    replicas: Vec<ReplicaSummary>,
    max_momentum_residual: f64,
    max_energy_residual: f64,
    monitors: Vec<MonitorResult>,
    notes: Vec<String>,
}

pub fn cmd_simulate(cfg: &RunConfig, verbose: bool) -> Result<i32, CliError> {
    let sim_cfg = cfg.simulation.clone().ok_or_else(|| CliError::Config("missing simulation block".into()))?;
    let sim = Simulation::new(sim_cfg.clone())?;
    let dir = prepare_out(cfg)?;
    if verbose {
        eprintln!("simulate: N = {}, R = {}, T = {}, seed = {}", sim_cfg.n, sim_cfg.replicas, sim_cfg.horizon, sim_cfg.seed);
    }
    let ens = sim.run_ensemble()?;
    ens.write_csv(create(&dir.join("checkpoints.csv"))?)?;
    if sim_cfg.event_log {
        ens.write_events_csv(create(&dir.join("events.csv"))?)?;
    }

    let mut dcfg = cfg.diagnostics.clone().unwrap_or_default();
    let pooled = ens.n * ens.replicas.len();
    let mut notes = Vec::new();
    if dcfg.entropy && pooled < ENTROPY_MIN_SAMPLES {
        dcfg.entropy = false;
        notes.push(format!("entropy skipped: {pooled} pooled samples"));
    }
    if dcfg.fisher && pooled < FISHER_MIN_SAMPLES {
        dcfg.fisher = false;
        notes.push(format!("fisher skipped: {pooled} pooled samples"));
    }
    if verbose {
        eprintln!("diagnostics at {} checkpoints", ens.checkpoints.len());
    }
    let records = checkpoint_records(&ens, &dcfg)?;
    write_diagnostics_csv(&dir.join("diagnostics.csv"), &records)?;
    let nan = records.iter().flat_map(|r| &r.quantities).find(|q| q.value.is_nan());

    let mut monitors = Vec::new();
    if dcfg.entropy {
        monitors.push(monitor_monotone(&records, "boltzmann_h", false, MONITOR_SLACK)?);
    }
    if dcfg.fisher {
        monitors.push(monitor_monotone(&records, "fisher", false, MONITOR_SLACK)?);
    }
    let replicas: Vec<ReplicaSummary> = ens
        .replicas
        .iter()
        .map(|r| ReplicaSummary {
            replica: r.replica,
            proposals: r.proposals,
            collisions: r.collisions,
            coincident: r.coincident,
            mean_acceptance: if r.proposals > 0 { r.acceptance_sum / r.proposals as f64 } else { 0.0 },
            momentum_residual: r.momentum_residual,
            energy_residual: r.energy_residual,
        })
        .collect();
    let summary = SimulateSummary {
        seed: sim_cfg.seed,
        n: ens.n,
        max_momentum_residual: replicas.iter().map(|r| r.momentum_residual).fold(0.0, f64::max),
        max_energy_residual: replicas.iter().map(|r| r.energy_residual).fold(0.0, f64::max),
        replicas,
        monitors,
        notes,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    if verbose {
        for m in &summary.monitors {
            eprintln!("monitor {}: {} (worst {:.3})", m.name, if m.passed { "ok" } else { "violated" }, m.worst);
        }
    }
    if let Some(q) = nan {
        return Err(CliError::Invariant(format!("{} is NaN", q.name)));
    }
    Ok(EXIT_OK)
}

fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["t", "name", "value", "se", "estimator"]).map_err(io)?;
    for r in records {
        for q in &r.quantities {
            w.write_record([format!("{:e}", r.t), q.name.clone(), format!("{:e}", q.value), format!("{:e}", q.se), q.estimator.clone()])
                .map_err(io)?;
        }
    }
    w.flush().map_err(CliError::from)
}

pub fn cmd_inequalities(cfg: &RunConfig, verbose: bool) -> Result<i32, CliError> {
    let suite = cfg.inequalities.clone().ok_or_else(|| CliError::Config("missing inequalities block".into()))?;
    if suite.family_size == 0 {
        return Err(CliError::Config("family_size must be positive".into()));
    }
    let dir = prepare_out(cfg)?;
    if verbose {
        eprintln!("inequalities: {} functions at L = {}, s = {:?}", suite.family_size, suite.band_limit, suite.s_values);
    }
    let (reports, summary) = inequality_suite(&suite)?;
    write_json(&dir.join("reports.json"), &reports)?;
    write_json(&dir.join("summary.json"), &summary)?;
    for m in &summary.minima {
        let s = m.s.map(|s| format!(" s={s}")).unwrap_or_default();
        let r = m.min_ratio.map(|r| format!("{r:.6e}")).unwrap_or_else(|| "none".into());
        println!("{}{s}: min ratio {r} (threshold {:.6e}) {}", m.kind.name(), m.threshold, if m.pass { "ok" } else { "FAILED" });
    }
    Ok(if summary.all_pass { EXIT_OK } else { EXIT_INVARIANT })
}

pub fn cmd_kernel_info(cfg: &RunConfig, write: bool) -> Result<i32, CliError> {
    let spec = cfg
        .kernel
        .clone()
        .or_else(|| cfg.simulation.as_ref().map(|s| s.kernel.clone()))
        .ok_or_else(|| CliError::Config("missing kernel block".into()))?;
    let info = spec.info()?;
    println!("{}", serde_json::to_string_pretty(&info).map_err(json_err)?);
    if write {
        let dir = prepare_out(cfg)?;
        write_json(&dir.join("kernel_info.json"), &info)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_sphere_selftest(cfg: &RunConfig, write: bool) -> Result<i32, CliError> {
    let st = cfg.selftest.clone().unwrap_or_default();
    let report = self_test(&st).map_err(|e| CliError::Config(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(json_err)?);
    if write {
        let dir = prepare_out(cfg)?;
        write_json(&dir.join("selftest.json"), &report)?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_INVARIANT })
}
