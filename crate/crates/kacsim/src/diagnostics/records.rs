use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimators::{entropy_knn_grouped, fisher_kde_grouped, sample_se, Estimate};
use super::weak::{weak_distance, WeakIntegrals};
use super::{moments, DiagError, EmpiricalMeasure};
use crate::geometry::Vec3;
use crate::simulator::Ensemble;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub se: f64,
    pub estimator: String,
}

/// Diagnostics of one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub quantities: Vec<Quantity>,
}

impl DiagnosticsRecord {
    pub fn get(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.name == name)
    }

    fn push(&mut self, name: &str, value: f64, se: f64, estimator: impl Into<String>) {
        self.quantities.push(Quantity { name: name.into(), value, se, estimator: estimator.into() });
    }

    fn push_estimate(&mut self, name: &str, e: &Estimate) {
        self.push(name, e.value, e.se, e.estimator.clone());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_orders")]
    pub moment_orders: Vec<f64>,
    #[serde(default = "default_k_nn")]
    pub k_nn: usize,
    #[serde(default = "yes")]
    pub entropy: bool,
    #[serde(default = "yes")]
    pub fisher: bool,
    #[serde(default = "yes")]
    pub pair_closeness: bool,
    #[serde(default = "yes")]
    pub weak_distance: bool,
}

fn default_orders() -> Vec<f64> {
    vec![2.0, 4.0]
}

fn default_k_nn() -> usize {
    4
}

fn yes() -> bool {
    true
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            moment_orders: default_orders(),
            k_nn: default_k_nn(),
            entropy: true,
            fisher: true,
            pair_closeness: true,
            weak_distance: true,
        }
    }
}

/// `E|V₁ − V₂|^{−2}` estimated per replica by the average over all
/// distinct pairs, with the standard error across replicas.
pub fn pair_inverse_square(replicas: &[&[Vec3]]) -> Result<Estimate, DiagError> {
    let per: Vec<f64> = replicas
        .par_iter()
        .map(|v| {
            let n = v.len();
            let mut acc = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    acc += 1.0 / (v[i] - v[j]).norm_sq();
                }
            }
            2.0 * acc / (n * (n - 1)) as f64
        })
        .collect();
    if per.iter().any(|x| !x.is_finite()) {
        return Err(DiagError::Invalid("coincident particles".into()));
    }
    let value = per.iter().sum::<f64>() / per.len() as f64;
    Ok(Estimate { value, se: sample_se(&per), n: per.len(), estimator: "all-pairs per replica".into(), excluded: 0 })
}

/// One record per checkpoint of the ensemble. Standard errors come from
/// the spread across replicas.
pub fn checkpoint_records(ens: &Ensemble, cfg: &DiagnosticsConfig) -> Result<Vec<DiagnosticsRecord>, DiagError> {
    let sizes: Vec<usize> = vec![ens.n; ens.replicas.len()];
    let groups = (sizes.len() >= 2).then_some(sizes.as_slice());
    let initial = EmpiricalMeasure::new(ens.pooled(0))?;
    let initial_weak = WeakIntegrals::from_empirical(&initial);
    let mut out = Vec::with_capacity(ens.checkpoints.len());
    for (c, &t) in ens.checkpoints.iter().enumerate() {
        let mut rec = DiagnosticsRecord { t, quantities: Vec::new() };
        let pooled = EmpiricalMeasure::new(ens.pooled(c))?;
        let per_rep: Vec<Vec<f64>> = ens
            .replicas
            .iter()
            .map(|r| moments(&EmpiricalMeasure::new(r.snapshots[c].clone())?, &cfg.moment_orders))
            .collect::<Result<_, _>>()?;
        for (k, l) in cfg.moment_orders.iter().enumerate() {
            let vals: Vec<f64> = per_rep.iter().map(|m| m[k]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            rec.push(&format!("m_{l}"), mean, sample_se(&vals), "replica mean of (1/N) Σ ⟨v⟩^ℓ");
        }
        if cfg.entropy {
            let e = entropy_knn_grouped(&pooled, cfg.k_nn, groups)?;
            rec.push_estimate("entropy", &e);
            rec.push("boltzmann_h", -e.value, e.se, format!("−({})", e.estimator));
        }
        if cfg.fisher {
            let f = fisher_kde_grouped(&pooled, groups)?;
            rec.push_estimate("fisher", &f);
        }
        if cfg.pair_closeness {
            let snaps: Vec<&[Vec3]> = ens.replicas.iter().map(|r| r.snapshots[c].as_slice()).collect();
            let p = pair_inverse_square(&snaps)?;
            rec.push_estimate("pair_inverse_square", &p);
        }
        if cfg.weak_distance {
            let d = weak_distance(&WeakIntegrals::from_empirical(&pooled), &initial_weak)?;
            rec.push("weak_distance_to_initial", d, f64::NAN, super::BUMP_FAMILY_VERSION);
        }
        out.push(rec);
    }
    Ok(out)
}

/// Outcome of a directional check over checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorResult {
    pub name: String,
    pub passed: bool,
    /// Largest violation in units of the combined standard error
    /// (non-positive when the trend holds outright).
    pub worst: f64,
}

/// `q(t_{c+1}) ≤ q(t_c) + slack·√(se_c² + se_{c+1}²)` at every step, or the
/// reverse inequality when `increasing`.
pub fn monitor_monotone(records: &[DiagnosticsRecord], name: &str, increasing: bool, slack: f64) -> Result<MonitorResult, DiagError> {
    let mut worst = f64::NEG_INFINITY;
    let mut passed = true;
    for w in records.windows(2) {
        let a = w[0].get(name).ok_or_else(|| DiagError::Invalid(format!("no quantity {name}")))?;
        let b = w[1].get(name).ok_or_else(|| DiagError::Invalid(format!("no quantity {name}")))?;
        let se = (a.se * a.se + b.se * b.se).sqrt();
        let rise = if increasing { a.value - b.value } else { b.value - a.value };
        let z = rise / se;
        worst = worst.max(z);
        if !(rise <= slack * se) {
            passed = false;
        }
    }
    Ok(MonitorResult { name: name.into(), passed, worst })
}
