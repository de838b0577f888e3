//! Edge sampling and the Horvitz–Thompson motif count estimator.
//!
//! Each edge is kept independently with probability `p`. With ωᵢ the keep
//! indicator, the estimator and its variance are
//!
//! ```text
//! Ĉ  = Σ ωᵢ ηᵢ / (p l)
//! σ² = (1 − p) / (p l²) · Σ ηᵢ²          (exact variance of Ĉ)
//! σ̂² = (1 − p) / (p² l²) · Σ ωᵢ ηᵢ²      (unbiased estimate of σ²)
//! ```
//!
//! and the confidence interval is `Ĉ ± z_{α/2} σ̂`.

use std::io::Write;

use rand::distr::{Bernoulli, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::count::LocalCountProfile;
use crate::error::{Error, Result};
use crate::parallel::{derive_seed, pool, rng};
use crate::stats;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Sampled-edge indicators ω.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMask {
    pub omega: Vec<bool>,
    pub p: f64,
    pub seed: u64,
}

impl SampleMask {
    pub fn popcount(&self) -> usize {
        self.omega.iter().filter(|&&w| w).count()
    }
}

fn check_p(p: f64) -> Result<Bernoulli> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::arg(format!("sampling probability must be in (0, 1], got {p}")));
    }
    Bernoulli::new(p).map_err(|e| Error::arg(e.to_string()))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(format!("alpha must be in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Draws ω₁..ω_m i.i.d. Bernoulli(p) from a generator seeded with `seed`.
pub fn draw_mask(m: usize, p: f64, seed: u64) -> Result<SampleMask> {
    let coin = check_p(p)?;
    let mut r = rng(seed);
    let omega = (0..m).map(|_| coin.sample(&mut r)).collect();
    Ok(SampleMask { omega, p, seed })
}

/// Point estimate, variances and confidence interval from one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleEstimate {
    pub c_hat: f64,
    /// σ², known only because the full local counts are at hand.
    pub sigma2_true: f64,
    pub sigma2_hat: f64,
    /// (Ĉ − C)/σ; `None` when σ² = 0.
    pub z_stat: Option<f64>,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub alpha: f64,
    pub true_count: u64,
    /// Number of sampled edges.
    pub sampled: usize,
    /// No sampled edge carries a positive local count; the interval is [0, 0].
    pub empty_sample: bool,
}

impl SampleEstimate {
    /// Whether the interval contains the true count.
    pub fn covered(&self) -> bool {
        let c = self.true_count as f64;
        self.ci_lo <= c && c <= self.ci_hi
    }

    /// Ĉ / C, undefined when C = 0.
    pub fn ratio(&self) -> Option<f64> {
        (self.true_count > 0).then(|| self.c_hat / self.true_count as f64)
    }
}

/// Quantities fixed across replicates of one profile.
#[derive(Debug, Clone, Copy)]
struct Plan {
    p: f64,
    l: f64,
    alpha: f64,
    z: f64,
    total: u64,
    sigma2_true: f64,
}

impl Plan {
    fn new(profile: &LocalCountProfile, p: f64, alpha: f64) -> Result<Self> {
        check_p(p)?;
        check_alpha(alpha)?;
        let l = profile.l() as f64;
        Ok(Self {
            p,
            l,
            alpha,
            z: stats::z_critical(alpha),
            total: profile.total,
            sigma2_true: (1.0 - p) / (p * l * l) * profile.power_sum(2) as f64,
        })
    }

    fn finish(&self, s1: u128, s2: u128, sampled: usize) -> SampleEstimate {
        let (p, l) = (self.p, self.l);
        let c_hat = s1 as f64 / (p * l);
        let sigma2_hat = (1.0 - p) / (p * p * l * l) * s2 as f64;
        let half = self.z * sigma2_hat.sqrt();
        let z_stat = (self.sigma2_true > 0.0)
            .then(|| (c_hat - self.total as f64) / self.sigma2_true.sqrt());
        SampleEstimate {
            c_hat,
            sigma2_true: self.sigma2_true,
            sigma2_hat,
            z_stat,
            ci_lo: c_hat - half,
            ci_hi: c_hat + half,
            alpha: self.alpha,
            true_count: self.total,
            sampled,
            empty_sample: s1 == 0,
        }
    }

    fn apply(&self, eta: &[u64], omega: impl Iterator<Item = bool>) -> SampleEstimate {
        let (mut s1, mut s2, mut sampled) = (0u128, 0u128, 0usize);
        for (&x, w) in eta.iter().zip(omega) {
            if w {
                sampled += 1;
                s1 += x as u128;
                s2 += (x as u128) * (x as u128);
            }
        }
        self.finish(s1, s2, sampled)
    }
}

/// Horvitz–Thompson estimate from a drawn mask.
pub fn ht_estimate(
    profile: &LocalCountProfile,
    mask: &SampleMask,
    alpha: f64,
) -> Result<SampleEstimate> {
    if mask.omega.len() != profile.m() {
        return Err(Error::arg(format!(
            "mask length {} does not match {} edges",
            mask.omega.len(),
            profile.m()
        )));
    }
    let plan = Plan::new(profile, mask.p, alpha)?;
    Ok(plan.apply(&profile.eta, mask.omega.iter().copied()))
}

/// Same result as `ht_estimate(profile, &draw_mask(m, p, seed)?, alpha)`
/// without materializing the mask.
pub fn estimate_with_seed(
    profile: &LocalCountProfile,
    p: f64,
    alpha: f64,
    seed: u64,
) -> Result<SampleEstimate> {
    let plan = Plan::new(profile, p, alpha)?;
    Ok(sample_once(&plan, profile, seed))
}

fn sample_once(plan: &Plan, profile: &LocalCountProfile, seed: u64) -> SampleEstimate {
    let coin = Bernoulli::new(plan.p).expect("p validated");
    let mut r = rng(seed);
    plan.apply(
        &profile.eta,
        std::iter::repeat_with(|| coin.sample(&mut r)),
    )
}

/// Finite-sample indicators for the consistency and CLT conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionDiagnostics {
    /// Ση² / (Ση)².
    pub r_consistency: Option<f64>,
    /// Ση³ / (Ση²)^{3/2}.
    pub r_clt: Option<f64>,
    /// ((1 − p)² + p²) / √(p(1 − p)) · r_clt; undefined at p = 1.
    pub berry_esseen_bound: Option<f64>,
    pub max_eta: u64,
    /// C / m^{2/3}.
    pub count_growth: Option<f64>,
    pub total: u64,
    pub m: usize,
}

pub fn diagnostics(profile: &LocalCountProfile, p: f64) -> Result<ConditionDiagnostics> {
    check_p(p)?;
    let s1 = profile.power_sum(1) as f64;
    let s2 = profile.power_sum(2) as f64;
    let s3 = profile.power_sum(3) as f64;
    let defined = s1 > 0.0;
    // Divisions ordered so that η ≡ 1 yields 1/m and 1/√m exactly.
    let r_consistency = defined.then(|| s2 / s1 / s1);
    let r_clt = defined.then(|| s3 / s2 / s2.sqrt());
    let berry_esseen_bound = r_clt
        .filter(|_| p < 1.0)
        .map(|r| ((1.0 - p).powi(2) + p * p) / (p * (1.0 - p)).sqrt() * r);
    let m = profile.m();
    Ok(ConditionDiagnostics {
        r_consistency,
        r_clt,
        berry_esseen_bound,
        max_eta: profile.max_eta(),
        count_growth: (m > 0).then(|| profile.total as f64 / (m as f64).powf(2.0 / 3.0)),
        total: profile.total,
        m,
    })
}

/// One row of a replicate table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateRow {
    pub rep: usize,
    pub seed: u64,
    pub estimate: SampleEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateSummary {
    pub reps: usize,
    pub p: f64,
    pub alpha: f64,
    pub true_count: u64,
    pub sigma2_true: f64,
    pub mean_c_hat: f64,
    pub var_c_hat: f64,
    pub mean_sigma2_hat: f64,
    /// Mean and standard deviation of Ĉ/C; NaN when C = 0.
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub covered: usize,
    pub coverage: f64,
    pub empty_samples: usize,
}

impl ReplicateSummary {
    pub fn from_estimates(estimates: &[SampleEstimate], p: f64, alpha: f64) -> Self {
        let c_hat: Vec<f64> = estimates.iter().map(|e| e.c_hat).collect();
        let s2hat: Vec<f64> = estimates.iter().map(|e| e.sigma2_hat).collect();
        let ratios: Vec<f64> = estimates.iter().filter_map(|e| e.ratio()).collect();
        let covered = estimates.iter().filter(|e| e.covered()).count();
        let first = estimates.first();
        Self {
            reps: estimates.len(),
            p,
            alpha,
            true_count: first.map_or(0, |e| e.true_count),
            sigma2_true: first.map_or(f64::NAN, |e| e.sigma2_true),
            mean_c_hat: stats::mean(&c_hat),
            var_c_hat: stats::variance(&c_hat),
            mean_sigma2_hat: stats::mean(&s2hat),
            mean_ratio: stats::mean(&ratios),
            std_ratio: stats::std_dev(&ratios),
            covered,
            coverage: covered as f64 / estimates.len().max(1) as f64,
            empty_samples: estimates.iter().filter(|e| e.empty_sample).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateTable {
    pub rows: Vec<ReplicateRow>,
    pub summary: ReplicateSummary,
}

pub const REPLICATE_HEADER: [&str; 8] = [
    "rep", "seed", "c_hat", "ratio", "sigma2_hat", "ci_lo", "ci_hi", "covered",
];

pub(crate) fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ReplicateTable {
    pub fn estimates(&self) -> impl Iterator<Item = &SampleEstimate> {
        self.rows.iter().map(|r| &r.estimate)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPLICATE_HEADER)?;
        for row in &self.rows {
            let e = &row.estimate;
            w.write_record([
                row.rep.to_string(),
                row.seed.to_string(),
                e.c_hat.to_string(),
                opt(e.ratio()),
                e.sigma2_hat.to_string(),
                e.ci_lo.to_string(),
                e.ci_hi.to_string(),
                u8::from(e.covered()).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let s = &self.summary;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "reps",
            "p",
            "alpha",
            "true_count",
            "sigma2_true",
            "mean_c_hat",
            "var_c_hat",
            "mean_sigma2_hat",
            "mean_ratio",
            "std_ratio",
            "coverage",
            "empty_samples",
        ])?;
        w.write_record([
            s.reps.to_string(),
            s.p.to_string(),
            s.alpha.to_string(),
            s.true_count.to_string(),
            s.sigma2_true.to_string(),
            s.mean_c_hat.to_string(),
            s.var_c_hat.to_string(),
            s.mean_sigma2_hat.to_string(),
            s.mean_ratio.to_string(),
            s.std_ratio.to_string(),
            s.coverage.to_string(),
            s.empty_samples.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Runs `reps` independent sampling replicates on the current rayon pool.
/// Replicate `r` uses seed `derive_seed(base_seed, r)`; rows come back in
/// replicate order whatever the scheduling.
pub fn replicate_estimates(
    profile: &LocalCountProfile,
    p: f64,
    alpha: f64,
    reps: usize,
    base_seed: u64,
) -> Result<ReplicateTable> {
    if reps == 0 {
        return Err(Error::arg("reps must be at least 1"));
    }
    let plan = Plan::new(profile, p, alpha)?;
    let rows: Vec<ReplicateRow> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(base_seed, rep as u64);
            ReplicateRow {
                rep,
                seed,
                estimate: sample_once(&plan, profile, seed),
            }
        })
        .collect();
    let estimates: Vec<SampleEstimate> = rows.iter().map(|r| r.estimate).collect();
    let summary = ReplicateSummary::from_estimates(&estimates, p, alpha);
    Ok(ReplicateTable { rows, summary })
}

pub fn replicate_estimates_with_threads(
    profile: &LocalCountProfile,
    p: f64,
    alpha: f64,
    reps: usize,
    base_seed: u64,
    threads: usize,
) -> Result<ReplicateTable> {
    pool(threads)?.install(|| replicate_estimates(profile, p, alpha, reps, base_seed))
}
