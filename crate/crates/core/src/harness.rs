//! Batch experiments: sampling distributions on fixed streams, on freshly
//! generated streams, and confidence-interval coverage.
//!
//! Every random draw descends from `base_seed` through [`derive_seed`], so a
//! run is reproducible from its spec alone and does not depend on the number
//! of worker threads.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::count::{exact_count, LocalCountProfile};
use crate::error::{Error, Result};
use crate::estimator::{
    diagnostics, estimate_with_seed, opt, replicate_estimates, ConditionDiagnostics,
    SampleEstimate, DEFAULT_ALPHA,
};
use crate::generators::{generate_fixed_length, ModelConfig};
use crate::motif::{DeltaQuery, MotifSpec, RawMotif};
use crate::parallel::{derive_seed, pool};
use crate::stats;
use crate::stream::{parse_stream, TemporalStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One stream per sweep value, resampled `reps` times.
    Deterministic,
    /// A fresh stream and a fresh mask for every replicate.
    Stochastic,
    /// CI coverage on one fixed stream, swept over `p`.
    Coverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Lambda,
    DiagonalIntensity,
    Tau,
    P,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::DiagonalIntensity => "diagonal_intensity",
            SweepParam::Tau => "tau",
            SweepParam::P => "p",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

/// A motif given by builtin name, file path, or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MotifRef {
    Named(String),
    Inline(RawMotif),
}

impl MotifRef {
    pub fn resolve(&self) -> Result<MotifSpec> {
        match self {
            MotifRef::Named(name) => match MotifSpec::builtin(name) {
                Some(m) => Ok(m),
                None => MotifSpec::load(name),
            },
            MotifRef::Inline(raw) => MotifSpec::from_raw(raw.clone()),
        }
    }
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

/// Full description of one experiment, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    /// Generate fixed-length streams instead of horizon-bounded ones.
    #[serde(default)]
    pub m_target: Option<usize>,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub time_unit: Option<f64>,
    pub motif: MotifRef,
    pub delta: f64,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub reps: usize,
    pub sweep: Sweep,
    #[serde(default)]
    pub base_seed: u64,
    /// Force histogram output on or off; by default emitted when reps ≥ 1000.
    #[serde(default)]
    pub histogram: Option<bool>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::arg("reps must be at least 1"));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::arg("sweep needs at least one value"));
        }
        if self.sweep.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("sweep values must be finite"));
        }
        match (&self.model, &self.input) {
            (Some(_), Some(_)) => return Err(Error::arg("give either a model or an input file")),
            (None, None) => return Err(Error::arg("experiment needs a model or an input file")),
            _ => {}
        }
        match self.mode {
            Mode::Stochastic if self.model.is_none() => {
                Err(Error::arg("stochastic experiments need a generator model"))
            }
            Mode::Coverage if self.sweep.parameter != SweepParam::P => {
                Err(Error::arg("coverage experiments sweep over p"))
            }
            Mode::Deterministic | Mode::Stochastic
                if self.input.is_some() && self.sweep.parameter != SweepParam::P =>
            {
                Err(Error::arg("a file input can only be swept over p"))
            }
            _ => Ok(()),
        }
    }

    fn query(&self) -> Result<DeltaQuery> {
        DeltaQuery::new(self.motif.resolve()?, self.delta)
    }

    fn emit_histogram(&self) -> bool {
        self.histogram.unwrap_or(self.reps >= 1000)
    }

    /// Model and sampling probability for one sweep value.
    fn at(&self, value: f64) -> Result<(Option<ModelConfig>, f64)> {
        let mut model = self.model.clone();
        let mut p = self.p;
        match (self.sweep.parameter, &mut model) {
            (SweepParam::P, _) => p = value,
            (SweepParam::Lambda, Some(ModelConfig::Uniform(c))) => c.lambda = value,
            (SweepParam::Tau, Some(ModelConfig::Uniform(c))) => c.tau = value,
            (SweepParam::Tau, Some(ModelConfig::Sbm(c))) => c.tau = value,
            (SweepParam::DiagonalIntensity, Some(ModelConfig::Sbm(c))) => {
                for (a, row) in c.intensity.iter_mut().enumerate() {
                    row[a] = value;
                }
            }
            (param, _) => {
                return Err(Error::arg(format!(
                    "cannot sweep {} for this source",
                    param.name()
                )))
            }
        }
        Ok((model, p))
    }
}

/// Estimate from one replicate, with the size of the stream it ran on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub rep: usize,
    pub seed: u64,
    pub m: usize,
    pub estimate: SampleEstimate,
}

/// All replicates for one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub value: f64,
    pub p: f64,
    /// Fixed-stream diagnostics (deterministic and coverage modes).
    pub diagnostics: Option<ConditionDiagnostics>,
    pub outcomes: Vec<ReplicateOutcome>,
}

impl SweepResult {
    pub fn ratios(&self) -> Vec<f64> {
        self.outcomes.iter().filter_map(|o| o.estimate.ratio()).collect()
    }

    pub fn z_stats(&self) -> Vec<f64> {
        self.outcomes.iter().filter_map(|o| o.estimate.z_stat).collect()
    }

    pub fn covered(&self) -> usize {
        self.outcomes.iter().filter(|o| o.estimate.covered()).count()
    }

    pub fn coverage(&self) -> f64 {
        self.covered() as f64 / self.outcomes.len() as f64
    }

    pub fn wilson(&self) -> (f64, f64) {
        stats::wilson_interval(self.covered(), self.outcomes.len(), 0.05)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub parameter: SweepParam,
    pub histogram: bool,
    pub sweeps: Vec<SweepResult>,
}

/// An in-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

impl ExperimentReport {
    pub fn summary_table(&self) -> Table {
        match self.mode {
            Mode::Deterministic => self.deterministic_summary(),
            Mode::Stochastic => self.stochastic_summary(),
            Mode::Coverage => self.coverage_summary(),
        }
    }

    fn deterministic_summary(&self) -> Table {
        let rows = self
            .sweeps
            .iter()
            .map(|s| {
                let ratios = s.ratios();
                let d = s.diagnostics.as_ref();
                vec![
                    self.parameter.name().to_string(),
                    s.value.to_string(),
                    s.p.to_string(),
                    s.outcomes.first().map_or(0, |o| o.m).to_string(),
                    s.outcomes.first().map_or(0, |o| o.estimate.true_count).to_string(),
                    s.outcomes.len().to_string(),
                    ratios.len().to_string(),
                    stats::mean(&ratios).to_string(),
                    stats::std_dev(&ratios).to_string(),
                    s.coverage().to_string(),
                    opt(d.and_then(|d| d.r_consistency)),
                    opt(d.and_then(|d| d.r_clt)),
                ]
            })
            .collect();
        Table {
            header: vec![
                "sweep_param",
                "sweep_value",
                "p",
                "m",
                "true_count",
                "reps",
                "defined",
                "mean_ratio",
                "std_ratio",
                "coverage",
                "r_consistency",
                "r_clt",
            ],
            rows,
        }
    }

    fn stochastic_summary(&self) -> Table {
        let rows = self
            .sweeps
            .iter()
            .map(|s| {
                let ratios = s.ratios();
                let counts: Vec<f64> = s
                    .outcomes
                    .iter()
                    .map(|o| o.estimate.true_count as f64)
                    .collect();
                let ms: Vec<f64> = s.outcomes.iter().map(|o| o.m as f64).collect();
                vec![
                    self.parameter.name().to_string(),
                    s.value.to_string(),
                    s.p.to_string(),
                    s.outcomes.len().to_string(),
                    ratios.len().to_string(),
                    (s.outcomes.len() - ratios.len()).to_string(),
                    stats::mean(&ms).to_string(),
                    stats::mean(&counts).to_string(),
                    stats::mean(&ratios).to_string(),
                    stats::std_dev(&ratios).to_string(),
                    s.coverage().to_string(),
                ]
            })
            .collect();
        Table {
            header: vec![
                "sweep_param",
                "sweep_value",
                "p",
                "reps",
                "defined",
                "undefined",
                "mean_m",
                "mean_true_count",
                "mean_ratio",
                "std_ratio",
                "coverage",
            ],
            rows,
        }
    }

    fn coverage_summary(&self) -> Table {
        let rows = self
            .sweeps
            .iter()
            .map(|s| {
                let ratios = s.ratios();
                let (lo, hi) = s.wilson();
                vec![
                    s.p.to_string(),
                    s.outcomes.len().to_string(),
                    s.covered().to_string(),
                    s.coverage().to_string(),
                    lo.to_string(),
                    hi.to_string(),
                    stats::mean(&ratios).to_string(),
                    stats::std_dev(&ratios).to_string(),
                    s.outcomes.first().map_or(0, |o| o.estimate.true_count).to_string(),
                    s.outcomes
                        .iter()
                        .filter(|o| o.estimate.empty_sample)
                        .count()
                        .to_string(),
                ]
            })
            .collect();
        Table {
            header: vec![
                "p",
                "reps",
                "covered",
                "rf",
                "wilson_lo",
                "wilson_hi",
                "mean_ratio",
                "std_ratio",
                "true_count",
                "empty_samples",
            ],
            rows,
        }
    }

    /// Per-replicate rows; `None` for coverage runs.
    pub fn replicate_table(&self) -> Option<Table> {
        if self.mode == Mode::Coverage {
            return None;
        }
        let rows = self
            .sweeps
            .iter()
            .flat_map(|s| {
                s.outcomes.iter().map(move |o| {
                    let e = &o.estimate;
                    vec![
                        s.value.to_string(),
                        o.rep.to_string(),
                        o.seed.to_string(),
                        o.m.to_string(),
                        e.true_count.to_string(),
                        e.c_hat.to_string(),
                        opt(e.ratio()),
                        e.sigma2_hat.to_string(),
                        opt(e.z_stat),
                        e.ci_lo.to_string(),
                        e.ci_hi.to_string(),
                        u8::from(e.covered()).to_string(),
                    ]
                })
            })
            .collect();
        Some(Table {
            header: vec![
                "sweep_value",
                "rep",
                "seed",
                "m",
                "true_count",
                "c_hat",
                "ratio",
                "sigma2_hat",
                "z_stat",
                "ci_lo",
                "ci_hi",
                "covered",
            ],
            rows,
        })
    }

    /// Freedman–Diaconis histograms of Ĉ/C and Z for each sweep value.
    pub fn histogram_table(&self) -> Option<Table> {
        if !self.histogram || self.mode == Mode::Coverage {
            return None;
        }
        let mut rows = Vec::new();
        for s in &self.sweeps {
            for (name, samples) in [("ratio", s.ratios()), ("z", s.z_stats())] {
                for bin in stats::freedman_diaconis(&samples) {
                    rows.push(vec![
                        s.value.to_string(),
                        name.to_string(),
                        bin.lo.to_string(),
                        bin.hi.to_string(),
                        bin.count.to_string(),
                    ]);
                }
            }
        }
        Some(Table {
            header: vec!["sweep_value", "statistic", "bin_lo", "bin_hi", "count"],
            rows,
        })
    }

    /// Writes the summary to `path`, and when present the replicate and
    /// histogram tables next to it as `<stem>.replicates.csv` and
    /// `<stem>.hist.csv`. Returns the files written.
    pub fn write_files(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let sibling = |suffix: &str| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "experiment".into());
            path.with_file_name(format!("{stem}.{suffix}.csv"))
        };
        let mut emit = |table: &Table, target: PathBuf| -> Result<()> {
            table.write(BufWriter::new(File::create(&target)?))?;
            written.push(target);
            Ok(())
        };
        emit(&self.summary_table(), path.to_path_buf())?;
        if let Some(t) = self.replicate_table() {
            emit(&t, sibling("replicates"))?;
        }
        if let Some(t) = self.histogram_table() {
            emit(&t, sibling("hist"))?;
        }
        Ok(written)
    }
}

fn load_fixed_stream(spec: &ExperimentSpec, model: Option<&ModelConfig>, seed: u64) -> Result<TemporalStream> {
    if let Some(path) = &spec.input {
        return Ok(parse_stream(path, spec.time_unit)?.stream);
    }
    let model = model
        .ok_or_else(|| Error::arg("experiment needs a model or an input file"))?
        .clone()
        .with_seed(seed);
    match spec.m_target {
        Some(m) => generate_fixed_length(&model, m),
        None => model.generate(),
    }
}

fn fixed_stream_sweep(
    spec: &ExperimentSpec,
    query: &DeltaQuery,
    index: usize,
    value: f64,
    cached: &mut Option<(TemporalStream, LocalCountProfile)>,
) -> Result<SweepResult> {
    let (model, p) = spec.at(value)?;
    let sweep_seed = derive_seed(spec.base_seed, index as u64);
    // A file input, or a sweep over p alone, keeps one stream for the whole run.
    let reuse = spec.input.is_some() || spec.sweep.parameter == SweepParam::P;
    if !reuse || cached.is_none() {
        let stream_seed = if reuse {
            derive_seed(spec.base_seed, u64::MAX)
        } else {
            derive_seed(sweep_seed, 0)
        };
        let stream = load_fixed_stream(spec, model.as_ref(), stream_seed)?;
        let profile = exact_count(&stream, query)?;
        *cached = Some((stream, profile));
    }
    let (stream, profile) = cached.as_ref().expect("populated above");
    let table = replicate_estimates(profile, p, spec.alpha, spec.reps, derive_seed(sweep_seed, 1))?;
    let outcomes = table
        .rows
        .iter()
        .map(|r| ReplicateOutcome {
            rep: r.rep,
            seed: r.seed,
            m: stream.len(),
            estimate: r.estimate,
        })
        .collect();
    Ok(SweepResult {
        value,
        p,
        diagnostics: Some(diagnostics(profile, p)?),
        outcomes,
    })
}

fn run_fixed(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let query = spec.query()?;
    let mut cached = None;
    let sweeps = spec
        .sweep
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| fixed_stream_sweep(spec, &query, i, v, &mut cached))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        mode: spec.mode,
        parameter: spec.sweep.parameter,
        histogram: spec.emit_histogram(),
        sweeps,
    })
}

fn run_stochastic(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let query = spec.query()?;
    let mut sweeps = Vec::with_capacity(spec.sweep.values.len());
    for (i, &value) in spec.sweep.values.iter().enumerate() {
        let (model, p) = spec.at(value)?;
        let model = model.ok_or_else(|| Error::arg("stochastic experiments need a model"))?;
        model.validate()?;
        let sweep_seed = derive_seed(spec.base_seed, i as u64);
        let outcomes = (0..spec.reps)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(sweep_seed, rep as u64);
                let stream = model.clone().with_seed(derive_seed(seed, 0)).generate()?;
                let profile = exact_count(&stream, &query)?;
                let estimate = estimate_with_seed(&profile, p, spec.alpha, derive_seed(seed, 1))?;
                Ok(ReplicateOutcome {
                    rep,
                    seed,
                    m: stream.len(),
                    estimate,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        sweeps.push(SweepResult {
            value,
            p,
            diagnostics: None,
            outcomes,
        });
    }
    Ok(ExperimentReport {
        mode: spec.mode,
        parameter: spec.sweep.parameter,
        histogram: spec.emit_histogram(),
        sweeps,
    })
}

fn expect_mode(spec: &ExperimentSpec, mode: Mode) -> Result<()> {
    if spec.mode != mode {
        return Err(Error::arg(format!("spec mode is {:?}, expected {:?}", spec.mode, mode)));
    }
    spec.validate()
}

/// One fixed stream per sweep value, resampled `reps` times.
pub fn run_deterministic_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentReport> {
    expect_mode(spec, Mode::Deterministic)?;
    pool(threads)?.install(|| run_fixed(spec))
}

/// A new stream and a new mask for every replicate.
pub fn run_stochastic_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentReport> {
    expect_mode(spec, Mode::Stochastic)?;
    pool(threads)?.install(|| run_stochastic(spec))
}

/// Coverage of the confidence interval on one fixed stream for each `p`.
pub fn run_coverage_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentReport> {
    expect_mode(spec, Mode::Coverage)?;
    pool(threads)?.install(|| run_fixed(spec))
}

pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentReport> {
    match spec.mode {
        Mode::Deterministic => run_deterministic_experiment(spec, threads),
        Mode::Stochastic => run_stochastic_experiment(spec, threads),
        Mode::Coverage => run_coverage_experiment(spec, threads),
    }
}
