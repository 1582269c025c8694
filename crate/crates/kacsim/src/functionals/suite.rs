use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{frac_dissipation_double, FunctionalError, FunctionalReport, HeatTrace, LogData, TestFunctionFamily, TimeGrid};
use crate::sphere_spectral::{kappa_s, SpherePlan};

/// `K(g) ≥ c_0 ‖√g‖²_{Ḣ²}`.
pub const C0: f64 = 4.0 / 3.0;
/// `‖√g‖²_{Ḣ²} ≥ c_1 J(g)`.
pub const C1: f64 = 1.0 / 432.0;

/// Slack on the constants `c_0`, `c_1` and on the `K^s` chain.
pub const CONSTANT_SLACK: f64 = 1e-2;
pub const C1_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    /// `K(g) / ‖√g‖²_{Ḣ²}`
    C0,
    /// `‖√g‖²_{Ḣ²} / J(g)`
    C1,
    /// `⟨I'(g),(−Δ)^s g⟩ / ‖√g‖²_{Ḣ^{1+s}}`
    KeyInequality,
    /// `⟨I'(g),(−Δ)^s g⟩ / ((2 κ_s c_0 / s) K^s(g))`
    DissipationChain,
    /// `(‖√g‖²_{Ḣ^{1+s}} + ‖g‖_{L¹}) / J^s(g)`
    NonlinearSobolev,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 5] = [
        InequalityKind::C0,
        InequalityKind::C1,
        InequalityKind::KeyInequality,
        InequalityKind::DissipationChain,
        InequalityKind::NonlinearSobolev,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InequalityKind::C0 => "c0",
            InequalityKind::C1 => "c1",
            InequalityKind::KeyInequality => "key_inequality",
            InequalityKind::DissipationChain => "dissipation_chain",
            InequalityKind::NonlinearSobolev => "nonlinear_sobolev",
        }
    }

    /// Ratio a member must reach.
    pub fn threshold(&self) -> f64 {
        match self {
            InequalityKind::C0 => C0 - CONSTANT_SLACK,
            InequalityKind::C1 => C1 - C1_SLACK,
            InequalityKind::DissipationChain => 1.0 - CONSTANT_SLACK,
            InequalityKind::KeyInequality | InequalityKind::NonlinearSobolev => 0.0,
        }
    }

    fn strict(&self) -> bool {
        matches!(self, InequalityKind::KeyInequality | InequalityKind::NonlinearSobolev)
    }

    fn per_s(&self) -> bool {
        !matches!(self, InequalityKind::C0 | InequalityKind::C1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub s_values: Vec<f64>,
    pub family_size: usize,
    pub seed: u64,
    pub band_limit: usize,
    pub time_grid: TimeGrid,
    /// Band limit for the double-integral cross-check of the dissipation;
    /// skipped when absent.
    pub cross_check_band_limit: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            s_values: vec![0.5, 0.75, 0.9],
            family_size: 50,
            seed: 1,
            band_limit: 32,
            time_grid: TimeGrid::default(),
            cross_check_band_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinRatio {
    pub kind: InequalityKind,
    pub s: Option<f64>,
    pub min_ratio: Option<f64>,
    pub argmin_seed: Option<u64>,
    pub threshold: f64,
    pub pass: bool,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub family_size: usize,
    pub band_limit: usize,
    pub oversampled_band_limit: usize,
    pub minima: Vec<MinRatio>,
    pub all_pass: bool,
}

impl SuiteSummary {
    pub fn min_ratio(&self, kind: InequalityKind, s: Option<f64>) -> Option<&MinRatio> {
        self.minima.iter().find(|m| m.kind == kind && m.s == s)
    }
}

fn member_reports(
    seed: u64,
    ld: &LogData,
    cfg: &SuiteConfig,
) -> Vec<FunctionalReport> {
    let plan: &SpherePlan = &ld.plan;
    let mut out = Vec::new();
    let k = ld.cal_k();
    let h2 = ld.sqrt_seminorm_sq(2.0);
    let j = ld.cal_j();
    let mass = ld.mass();
    out.push(FunctionalReport::inequality(InequalityKind::C0.name(), seed, k, h2, C0, plan));
    out.push(FunctionalReport::inequality(InequalityKind::C1.name(), seed, h2, j, C1, plan));
    let trace = HeatTrace::new(ld, cfg.time_grid);
    for &s in &cfg.s_values {
        let diss = trace.frac_dissipation(s);
        let spectral = ld.frac_dissipation_spectral(s);
        let h1s = ld.sqrt_seminorm_sq(1.0 + s);
        let ks = trace.k_s(s);
        let js = ld.j_s(s);
        let chain = 2.0 * kappa_s(s) * C0 / s * ks;
        let mut r = FunctionalReport::inequality(InequalityKind::KeyInequality.name(), seed, diss, h1s, 0.0, plan);
        r.s = Some(s);
        out.push(r);
        let mut r = FunctionalReport::inequality(InequalityKind::DissipationChain.name(), seed, diss, chain, 1.0, plan);
        r.s = Some(s);
        r.note = format!("K^s = {ks:.10e}");
        out.push(r);
        let mut r = FunctionalReport::inequality(InequalityKind::NonlinearSobolev.name(), seed, h1s + mass, js, 0.0, plan);
        r.s = Some(s);
        out.push(r);
        let mut r = FunctionalReport::value("frac_dissipation", seed, diss, plan);
        r.s = Some(s);
        r.lhs = Some(diss);
        r.rhs = Some(spectral);
        r.note = "lhs: subordination in time; rhs: spectral".into();
        if let Some(lb) = cfg.cross_check_band_limit {
            if let Ok(v) = frac_dissipation_double(ld, s, lb) {
                r.note = format!("{}; double integral at L={lb}: {v:.10e}", r.note);
            }
        }
        out.push(r);
    }
    out
}

/// Evaluate every inequality on every family member and summarize the
/// minimum ratios.
pub fn inequality_suite(cfg: &SuiteConfig) -> Result<(Vec<FunctionalReport>, SuiteSummary), FunctionalError> {
    if cfg.family_size == 0 {
        return Err(FunctionalError::EmptyFamily);
    }
    if cfg.s_values.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
        return Err(FunctionalError::Invalid("s must lie in (0, 1)".into()));
    }
    if cfg.band_limit < 2 {
        return Err(FunctionalError::Invalid("band limit must be at least 2".into()));
    }
    let family = TestFunctionFamily::generate(cfg.family_size, cfg.seed);
    let fine = SpherePlan::shared(2 * cfg.band_limit);
    let per_member: Vec<Result<Vec<FunctionalReport>, FunctionalError>> = family
        .members
        .par_iter()
        .map(|(seed, f)| {
            let ld = LogData::new(&f.sample(&fine))?;
            Ok(member_reports(*seed, &ld, cfg))
        })
        .collect();
    let mut reports = Vec::new();
    for r in per_member {
        reports.extend(r?);
    }
    for r in &reports {
        r.check_nan()?;
    }
    let summary = summarize(&reports, cfg, fine.band_limit);
    Ok((reports, summary))
}

fn summarize(reports: &[FunctionalReport], cfg: &SuiteConfig, fine: usize) -> SuiteSummary {
    let mut minima = Vec::new();
    for kind in InequalityKind::ALL {
        let s_list: Vec<Option<f64>> = if kind.per_s() {
            cfg.s_values.iter().map(|s| Some(*s)).collect()
        } else {
            vec![None]
        };
        for s in s_list {
            let rows: Vec<&FunctionalReport> =
                reports.iter().filter(|r| r.name == kind.name() && r.s == s).collect();
            let degenerate = rows.iter().filter(|r| r.degenerate).count();
            let best = rows
                .iter()
                .filter(|r| !r.degenerate)
                .map(|r| (r.ratio.unwrap(), r.seed))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let (min_ratio, argmin_seed) = (best.map(|b| b.0), best.map(|b| b.1));
            let threshold = kind.threshold();
            let pass = match min_ratio {
                None => true,
                Some(v) if kind.strict() => v > threshold,
                Some(v) => v >= threshold,
            };
            minima.push(MinRatio { kind, s, min_ratio, argmin_seed, threshold, pass, degenerate });
        }
    }
    let all_pass = minima.iter().all(|m| m.pass);
    SuiteSummary { family_size: cfg.family_size, band_limit: cfg.band_limit, oversampled_band_limit: fine, minima, all_pass }
}
