//! Exact simulation of Kac's particle system with a bounded kernel by
//! thinning a global Poisson clock, and seeded replica ensembles.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::kernels::{CollisionKernel, KernelError, KernelSpec};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("io: {0}")]
    Io(String),
    #[error("conservation drift at t = {t}: momentum {momentum:.3e}, energy {energy:.3e}; last events: {tail}")]
    Conservation { t: f64, momentum: f64, energy: f64, tail: String },
    #[error("replica {index}: {source}")]
    Replica {
        index: usize,
        #[source]
        source: Box<SimError>,
    },
}

/// Relative conservation tolerance checked at checkpoints.
pub const CONSERVATION_TOL: f64 = 1e-9;
/// `|v − w|` below which a proposed pair is rejected.
pub const COINCIDENT_TOL: f64 = 1e-300;
const TAIL_EVENTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: [f64; 3],
    pub std: f64,
}

/// Law of the i.i.d. initial velocities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLaw {
    Gaussian {
        #[serde(default)]
        mean: [f64; 3],
        #[serde(default = "unit")]
        std: f64,
    },
    GaussianMixture { components: Vec<MixtureComponent> },
    /// Resampling with replacement from a CSV of `vx, vy, vz` rows.
    File { path: PathBuf },
}

fn unit() -> f64 {
    1.0
}

impl Default for InitialLaw {
    fn default() -> Self {
        InitialLaw::Gaussian { mean: [0.0; 3], std: 1.0 }
    }
}

fn one_replica() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub initial: InitialLaw,
    pub horizon: f64,
    /// Sorted times in `[0, horizon]`; `[0, horizon]` when empty.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    #[serde(default = "one_replica")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub event_log: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 2 {
            return Err(SimError::Config(format!("N = {} but pairs need N ≥ 2", self.n)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SimError::Config(format!("horizon {} must be positive", self.horizon)));
        }
        if self.replicas == 0 {
            return Err(SimError::Config("at least one replica".into()));
        }
        let cps = &self.checkpoints;
        if cps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::Config("checkpoint times must be strictly increasing".into()));
        }
        if cps.iter().any(|t| !(*t >= 0.0 && *t <= self.horizon)) {
            return Err(SimError::Config("checkpoint times must lie in [0, horizon]".into()));
        }
        match &self.initial {
            InitialLaw::Gaussian { std, .. } if !(*std > 0.0) => {
                return Err(SimError::Config("initial std must be positive".into()))
            }
            InitialLaw::GaussianMixture { components } => {
                if components.is_empty() || components.iter().any(|c| !(c.weight > 0.0 && c.std > 0.0)) {
                    return Err(SimError::Config("mixture needs positive weights and stds".into()));
                }
            }
            _ => {}
        }
        self.kernel.validate()?;
        Ok(())
    }

    pub fn checkpoint_times(&self) -> Vec<f64> {
        if self.checkpoints.is_empty() {
            vec![0.0, self.horizon]
        } else {
            self.checkpoints.clone()
        }
    }
}

/// One proposed collision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub sigma_p: Vec3,
    pub accepted: bool,
}

/// Velocities of one replica with its clock, counters and RNG stream.
#[derive(Debug, Clone)]
pub struct ParticleState {
    pub v: Vec<Vec3>,
    pub t: f64,
    pub proposals: u64,
    pub collisions: u64,
    /// Proposals rejected because the pair had `|v − w| < COINCIDENT_TOL`.
    pub coincident: u64,
    /// Sum over proposals of the acceptance probability.
    pub acceptance_sum: f64,
    pub p0: Vec3,
    pub e0: f64,
    pub rng: ChaCha8Rng,
    tail: VecDeque<Event>,
    pub log: Option<Vec<Event>>,
}

impl ParticleState {
    pub fn from_velocities(v: Vec<Vec3>, rng: ChaCha8Rng) -> Self {
        let (p0, e0) = totals(&v);
        ParticleState {
            v,
            t: 0.0,
            proposals: 0,
            collisions: 0,
            coincident: 0,
            acceptance_sum: 0.0,
            p0,
            e0,
            rng,
            tail: VecDeque::with_capacity(TAIL_EVENTS),
            log: None,
        }
    }

    pub fn momentum(&self) -> Vec3 {
        totals(&self.v).0
    }

    pub fn energy(&self) -> f64 {
        totals(&self.v).1
    }

    /// `(|ΣV − P₀| / (1 + |P₀|), |Σ|V|² − E₀| / E₀)`.
    pub fn conservation_residuals(&self) -> (f64, f64) {
        let (p, e) = totals(&self.v);
        ((p - self.p0).norm() / (1.0 + self.p0.norm()), (e - self.e0).abs() / self.e0.max(f64::MIN_POSITIVE))
    }

    pub fn check_conservation(&self) -> Result<(f64, f64), SimError> {
        let (dp, de) = self.conservation_residuals();
        if !(dp <= CONSERVATION_TOL && de <= CONSERVATION_TOL) {
            let tail = self.tail.iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join("; ");
            return Err(SimError::Conservation { t: self.t, momentum: dp, energy: de, tail });
        }
        Ok((dp, de))
    }

    fn record(&mut self, e: Event) {
        if self.tail.len() == TAIL_EVENTS {
            self.tail.pop_front();
        }
        self.tail.push_back(e);
        if let Some(log) = self.log.as_mut() {
            log.push(e);
        }
    }
}

fn totals(v: &[Vec3]) -> (Vec3, f64) {
    let mut p = Vec3::ZERO;
    let mut e = 0.0;
    for x in v {
        p += *x;
        e += x.norm_sq();
    }
    (p, e)
}

fn gaussian(rng: &mut ChaCha8Rng, mean: Vec3, std: f64) -> Vec3 {
    let mut g = || -> f64 { StandardNormal.sample(rng) };
    mean + Vec3::new(g(), g(), g()) * std
}

/// Replica stream: ChaCha8 keyed by the master seed, stream id = replica.
pub fn replica_rng(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

pub fn read_velocity_samples(path: &Path) -> Result<Vec<Vec3>, SimError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match vals {
            Ok(v) if v.len() == 3 && v.iter().all(|x| x.is_finite()) => out.push(Vec3::new(v[0], v[1], v[2])),
            _ if i == 0 => continue,
            _ => return Err(SimError::Io(format!("{}: row {} is not three numbers", path.display(), i + 1))),
        }
    }
    if out.is_empty() {
        return Err(SimError::Io(format!("{}: no samples", path.display())));
    }
    Ok(out)
}

/// A validated configuration with its kernel and initial samples loaded.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: SimConfig,
    pub kernel: CollisionKernel,
    samples: Option<Vec<Vec3>>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let kernel = config.kernel.build()?;
        Self::with_kernel(config, kernel)
    }

    /// Use an already built kernel (must match `config.kernel`).
    pub fn with_kernel(config: SimConfig, kernel: CollisionKernel) -> Result<Self, SimError> {
        config.validate()?;
        let samples = match &config.initial {
            InitialLaw::File { path } => Some(read_velocity_samples(path)?),
            _ => None,
        };
        Ok(Simulation { config, kernel, samples })
    }

    /// `N` i.i.d. initial velocities on the replica's stream.
    pub fn init_state(&self, replica: usize) -> ParticleState {
        let mut rng = replica_rng(self.config.seed, replica);
        let n = self.config.n;
        let v: Vec<Vec3> = match &self.config.initial {
            InitialLaw::Gaussian { mean, std } => {
                let m = Vec3::from_array(*mean);
                (0..n).map(|_| gaussian(&mut rng, m, *std)).collect()
            }
            InitialLaw::GaussianMixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                (0..n)
                    .map(|_| {
                        let mut u = rng.random::<f64>() * total;
                        let mut pick = &components[components.len() - 1];
                        for c in components {
                            if u < c.weight {
                                pick = c;
                                break;
                            }
                            u -= c.weight;
                        }
                        gaussian(&mut rng, Vec3::from_array(pick.mean), pick.std)
                    })
                    .collect()
            }
            InitialLaw::File { .. } => {
                let s = self.samples.as_ref().expect("samples loaded with the configuration");
                (0..n).map(|_| s[rng.random_range(0..s.len())]).collect()
            }
        };
        let mut st = ParticleState::from_velocities(v, rng);
        if self.config.event_log {
            st.log = Some(Vec::new());
        }
        st
    }

    /// Total proposal rate `N · sup α · ‖b‖_{L¹} / 2`.
    pub fn proposal_rate(&self) -> f64 {
        0.5 * self.config.n as f64 * self.kernel.envelope()
    }

    /// Advance `state` to time `until` by thinning.
    pub fn run(&self, state: &mut ParticleState, until: f64) -> Result<(), SimError> {
        run(state, until, &self.kernel)
    }

    /// Every replica advanced through the checkpoints, with snapshots.
    pub fn run_ensemble(&self) -> Result<Ensemble, SimError> {
        let times = self.config.checkpoint_times();
        let replicas: Result<Vec<ReplicaTrace>, SimError> = (0..self.config.replicas)
            .into_par_iter()
            .map(|r| self.run_replica(r, &times).map_err(|e| SimError::Replica { index: r, source: Box::new(e) }))
            .collect();
        Ok(Ensemble { n: self.config.n, checkpoints: times, replicas: replicas? })
    }

    fn run_replica(&self, replica: usize, times: &[f64]) -> Result<ReplicaTrace, SimError> {
        let mut st = self.init_state(replica);
        let mut snapshots = Vec::with_capacity(times.len());
        let (mut dp, mut de) = (0.0f64, 0.0f64);
        for &t in times {
            self.run(&mut st, t)?;
            let (a, b) = st.check_conservation()?;
            dp = dp.max(a);
            de = de.max(b);
            snapshots.push(st.v.clone());
        }
        Ok(ReplicaTrace {
            replica,
            snapshots,
            proposals: st.proposals,
            collisions: st.collisions,
            coincident: st.coincident,
            acceptance_sum: st.acceptance_sum,
            momentum_residual: dp,
            energy_residual: de,
            events: st.log.take(),
        })
    }
}

/// Thinned simulation of the pair jump process up to `until`: a global
/// exponential clock at the envelope rate, a uniform pair, `σ'` from the
/// tabulated angular law, acceptance `α(r)/sup α`.
pub fn run(state: &mut ParticleState, until: f64, kernel: &CollisionKernel) -> Result<(), SimError> {
    let n = state.v.len();
    if n < 2 {
        return Err(SimError::Config("pairs need N ≥ 2".into()));
    }
    if until <= state.t {
        return Ok(());
    }
    let alpha_max = kernel.alpha_bound();
    let rate = 0.5 * n as f64 * alpha_max * kernel.l1_norm();
    let clock = Exp::new(rate).map_err(|e| SimError::Config(format!("proposal rate {rate}: {e}")))?;
    loop {
        let dt: f64 = clock.sample(&mut state.rng);
        if state.t + dt > until {
            state.t = until;
            return Ok(());
        }
        state.t += dt;
        let i = state.rng.random_range(0..n);
        let mut j = state.rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (vi, vj) = (state.v[i], state.v[j]);
        let d = vi - vj;
        let len = d.norm();
        state.proposals += 1;
        if len < COINCIDENT_TOL {
            state.coincident += 1;
            continue;
        }
        let r = 0.5 * len;
        let sigma = d / len;
        let sigma_p = kernel.sampler.sample_sigma_prime(&mut state.rng, sigma);
        let p_acc = kernel.alpha.eval(r) / alpha_max;
        state.acceptance_sum += p_acc;
        let u: f64 = state.rng.random();
        let accepted = u < p_acc;
        if accepted {
            let z = (vi + vj) * 0.5;
            state.v[i] = z + sigma_p * r;
            state.v[j] = z - sigma_p * r;
            state.collisions += 1;
        }
        state.record(Event { t: state.t, i, j, sigma_p, accepted });
    }
}

/// Result of one replica.
#[derive(Debug, Clone)]
pub struct ReplicaTrace {
    pub replica: usize,
    /// Velocities at each checkpoint.
    pub snapshots: Vec<Vec<Vec3>>,
    pub proposals: u64,
    pub collisions: u64,
    pub coincident: u64,
    pub acceptance_sum: f64,
    pub momentum_residual: f64,
    pub energy_residual: f64,
    pub events: Option<Vec<Event>>,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub n: usize,
    pub checkpoints: Vec<f64>,
    pub replicas: Vec<ReplicaTrace>,
}

impl Ensemble {
    /// All replicas' velocities at checkpoint `c`, pooled.
    pub fn pooled(&self, c: usize) -> Vec<Vec3> {
        self.replicas.iter().flat_map(|r| r.snapshots[c].iter().copied()).collect()
    }

    /// CSV rows `replica, particle, t, vx, vy, vz`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| SimError::Io(e.to_string());
        w.write_record(["replica", "particle", "t", "vx", "vy", "vz"]).map_err(io)?;
        for r in &self.replicas {
            for (c, snap) in r.snapshots.iter().enumerate() {
                let t = self.checkpoints[c];
                for (p, v) in snap.iter().enumerate() {
                    w.write_record(&[
                        r.replica.to_string(),
                        p.to_string(),
                        format!("{t:e}"),
                        format!("{:e}", v.x),
                        format!("{:e}", v.y),
                        format!("{:e}", v.z),
                    ])
                    .map_err(io)?;
                }
            }
        }
        w.flush().map_err(|e| SimError::Io(e.to_string()))
    }

    /// CSV rows `replica, t, i, j, sx, sy, sz, accepted` of logged events.
    pub fn write_events_csv<W: std::io::Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| SimError::Io(e.to_string());
        w.write_record(["replica", "t", "i", "j", "sx", "sy", "sz", "accepted"]).map_err(io)?;
        for r in &self.replicas {
            for e in r.events.iter().flatten() {
                w.write_record(&[
                    r.replica.to_string(),
                    format!("{:e}", e.t),
                    e.i.to_string(),
                    e.j.to_string(),
                    format!("{:e}", e.sigma_p.x),
                    format!("{:e}", e.sigma_p.y),
                    format!("{:e}", e.sigma_p.z),
                    e.accepted.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| SimError::Io(e.to_string()))
    }
}
