use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use tmotif::count::exact_count;
use tmotif::estimator::{self, DEFAULT_ALPHA};
use tmotif::generators::{
    generate_fixed_length, ModelConfig, SbmPoissonConfig, UniformPoissonConfig,
};
use tmotif::harness::{self, ExperimentSpec, Mode, MotifRef, Sweep, SweepParam};
use tmotif::motif::{DeltaQuery, MotifSpec};
use tmotif::stream::{parse_stream, TemporalStream};
use tmotif::theory::{self, TheoryParams};
use tmotif::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "tmotif", version, about = "Temporal motif counting and edge-sampling estimation")]
struct Cli {
    /// Base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact motif count of an edge-list file.
    Count {
        #[command(flatten)]
        query: QueryArgs,
        /// Also dump per-edge local counts as CSV.
        #[arg(long)]
        eta: Option<PathBuf>,
    },
    /// Per-edge local counts as CSV (index,src,dst,time,eta).
    LocalCounts {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// One sampled estimate with its confidence interval.
    Estimate {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Replicate table of sampled estimates on a fixed stream.
    Replicate {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Write the summary row to this CSV as well.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Consistency and CLT condition ratios for a stream.
    Diagnostics {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
    },
    /// Generate a synthetic stream in edge-list format.
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        /// Exact number of edges (exponential inter-arrivals) instead of a horizon.
        #[arg(long)]
        m_target: Option<usize>,
    },
    /// Sampling distribution on fixed streams over a parameter sweep.
    SimulateDet(ExperimentArgs),
    /// Sampling distribution on freshly generated streams over a sweep.
    SimulateSto(ExperimentArgs),
    /// Confidence-interval coverage over a sweep of sampling probabilities.
    Coverage(ExperimentArgs),
    /// Closed-form and Monte Carlo model quantities.
    Theory {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1_000_000)]
        draws: usize,
    },
}

#[derive(Args, Debug)]
struct QueryArgs {
    /// Edge-list file (SRC DST TIME per line).
    #[arg(long)]
    input: PathBuf,
    /// Multiply every timestamp by this factor.
    #[arg(long)]
    time_unit: Option<f64>,
    /// Motif JSON file or builtin name (cyclic-triangle, single-edge).
    #[arg(long)]
    motif: String,
    #[arg(long)]
    delta: f64,
}

impl QueryArgs {
    fn load(&self) -> Result<(TemporalStream, DeltaQuery)> {
        let motif = resolve_motif(&self.motif)?;
        let query = DeltaQuery::new(motif, self.delta)?;
        let parsed = parse_stream(&self.input, self.time_unit)?;
        if parsed.dropped_self_loops > 0 {
            eprintln!("warning: dropped {} self-loop line(s)", parsed.dropped_self_loops);
        }
        Ok((parsed.stream, query))
    }
}

#[derive(Args, Debug)]
struct SamplingArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModelKind {
    Uniform,
    Sbm,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// JSON generator config; overrides the model flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelKind::Uniform)]
    model: ModelKind,
    #[arg(long, default_value_t = 30.0)]
    lambda: f64,
    #[arg(long, default_value_t = 100.0)]
    tau: f64,
    #[arg(long, default_value_t = 100)]
    nodes: usize,
    /// Comma-separated block sizes (sbm); defaults to two equal blocks.
    #[arg(long, value_delimiter = ',')]
    blocks: Vec<usize>,
    /// Within-block intensity (sbm).
    #[arg(long, default_value_t = 0.2)]
    diag: f64,
    /// Between-block intensity (sbm).
    #[arg(long, default_value_t = 0.06)]
    off_diag: f64,
}

impl ModelArgs {
    fn build(&self, seed: Option<u64>) -> Result<ModelConfig> {
        let cfg = if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            let cfg: ModelConfig = serde_json::from_str(&text)?;
            match seed {
                Some(s) => cfg.with_seed(s),
                None => cfg,
            }
        } else {
            let seed = seed.unwrap_or(0);
            match self.model {
                ModelKind::Uniform => ModelConfig::Uniform(UniformPoissonConfig {
                    lambda: self.lambda,
                    tau: self.tau,
                    n_nodes: self.nodes,
                    seed,
                }),
                ModelKind::Sbm => {
                    let sizes = if self.blocks.is_empty() {
                        vec![self.nodes / 2, self.nodes - self.nodes / 2]
                    } else {
                        self.blocks.clone()
                    };
                    let nb = sizes.len();
                    let intensity = (0..nb)
                        .map(|a| {
                            (0..nb)
                                .map(|b| if a == b { self.diag } else { self.off_diag })
                                .collect()
                        })
                        .collect();
                    ModelConfig::Sbm(SbmPoissonConfig {
                        block_sizes: sizes,
                        intensity,
                        tau: self.tau,
                        seed,
                    })
                }
            }
        };
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON experiment spec; overrides every other experiment flag.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Fixed input stream instead of a generator.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    time_unit: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    m_target: Option<usize>,
    #[arg(long, default_value = "cyclic-triangle")]
    motif: String,
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.03)]
    p: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Parameter to sweep: lambda, diagonal-intensity, tau or p.
    #[arg(long, value_enum)]
    sweep_param: Option<SweepArg>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<f64>,
    /// Force histogram output on.
    #[arg(long)]
    histogram: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SweepArg {
    Lambda,
    DiagonalIntensity,
    Tau,
    P,
}

impl From<SweepArg> for SweepParam {
    fn from(a: SweepArg) -> Self {
        match a {
            SweepArg::Lambda => SweepParam::Lambda,
            SweepArg::DiagonalIntensity => SweepParam::DiagonalIntensity,
            SweepArg::Tau => SweepParam::Tau,
            SweepArg::P => SweepParam::P,
        }
    }
}

impl ExperimentArgs {
    fn to_spec(&self, mode: Mode, seed: Option<u64>, output: Option<PathBuf>) -> Result<ExperimentSpec> {
        if let Some(path) = &self.spec {
            let mut spec = ExperimentSpec::load(path)?;
            if spec.mode != mode {
                return Err(Error::InvalidArgument(format!(
                    "spec file is for {:?} experiments",
                    spec.mode
                )));
            }
            if spec.output.is_none() {
                spec.output = output;
            }
            return Ok(spec);
        }
        let parameter = self.sweep_param.map(SweepParam::from).unwrap_or(match mode {
            Mode::Deterministic => SweepParam::Lambda,
            Mode::Stochastic => SweepParam::Tau,
            Mode::Coverage => SweepParam::P,
        });
        let values = if self.sweep.is_empty() {
            vec![match parameter {
                SweepParam::P => self.p,
                SweepParam::Lambda => self.model.lambda,
                SweepParam::Tau => self.model.tau,
                SweepParam::DiagonalIntensity => self.model.diag,
            }]
        } else {
            self.sweep.clone()
        };
        let model = match &self.input {
            Some(_) => None,
            None => Some(self.model.build(None)?),
        };
        Ok(ExperimentSpec {
            mode,
            model,
            m_target: self.m_target,
            input: self.input.clone(),
            time_unit: self.time_unit,
            motif: MotifRef::Named(self.motif.clone()),
            delta: self.delta,
            p: self.p,
            alpha: self.alpha,
            reps: self.reps,
            sweep: Sweep { parameter, values },
            base_seed: seed.unwrap_or(0),
            histogram: self.histogram.then_some(true),
            output,
        })
    }
}

fn resolve_motif(name: &str) -> Result<MotifSpec> {
    match MotifSpec::builtin(name) {
        Some(m) => Ok(m),
        None => MotifSpec::load(name),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| v.to_string())
}

fn run(cli: Cli) -> Result<()> {
    let pool = tmotif::parallel::pool(cli.threads)?;
    let seed = cli.seed;
    let output = cli.output.clone();
    let threads = cli.threads;
    pool.install(|| match cli.command {
        Command::Count { query, eta } => {
            let (stream, q) = query.load()?;
            let start = Instant::now();
            let profile = exact_count(&stream, &q)?;
            info!("counted in {:.3}s", start.elapsed().as_secs_f64());
            let mut out = open_output(output.as_deref())?;
            writeln!(out, "edges\t{}", stream.len())?;
            writeln!(out, "nodes\t{}", stream.node_count())?;
            writeln!(out, "delta\t{}", q.delta)?;
            writeln!(out, "count\t{}", profile.total)?;
            out.flush()?;
            if let Some(path) = eta {
                profile.write_eta_csv(&stream, BufWriter::new(File::create(path)?))?;
            }
            Ok(())
        }
        Command::LocalCounts { query } => {
            let (stream, q) = query.load()?;
            let profile = exact_count(&stream, &q)?;
            profile.write_eta_csv(&stream, open_output(output.as_deref())?)
        }
        Command::Estimate { query, sampling } => {
            let (stream, q) = query.load()?;
            let profile = exact_count(&stream, &q)?;
            let mask = estimator::draw_mask(stream.len(), sampling.p, seed.unwrap_or(0))?;
            let est = estimator::ht_estimate(&profile, &mask, sampling.alpha)?;
            let mut out = open_output(output.as_deref())?;
            writeln!(out, "true_count\t{}", est.true_count)?;
            writeln!(out, "sampled_edges\t{}", est.sampled)?;
            writeln!(out, "c_hat\t{}", est.c_hat)?;
            writeln!(out, "sigma2_hat\t{}", est.sigma2_hat)?;
            writeln!(out, "sigma2\t{}", est.sigma2_true)?;
            writeln!(out, "ci_lo\t{}", est.ci_lo)?;
            writeln!(out, "ci_hi\t{}", est.ci_hi)?;
            writeln!(out, "z\t{}", fmt_opt(est.z_stat))?;
            out.flush()?;
            if est.empty_sample {
                eprintln!("warning: no sampled edge participates in an instance; interval is degenerate");
            }
            Ok(())
        }
        Command::Replicate {
            query,
            sampling,
            reps,
            summary,
        } => {
            let (stream, q) = query.load()?;
            let profile = exact_count(&stream, &q)?;
            let table = estimator::replicate_estimates(
                &profile,
                sampling.p,
                sampling.alpha,
                reps,
                seed.unwrap_or(0),
            )?;
            table.write_csv(open_output(output.as_deref())?)?;
            if let Some(path) = summary {
                table.write_summary_csv(BufWriter::new(File::create(path)?))?;
            }
            let s = &table.summary;
            eprintln!(
                "count={} mean_ratio={} std_ratio={} coverage={}",
                s.true_count, s.mean_ratio, s.std_ratio, s.coverage
            );
            Ok(())
        }
        Command::Diagnostics { query, p } => {
            let (stream, q) = query.load()?;
            let profile = exact_count(&stream, &q)?;
            let d = estimator::diagnostics(&profile, p)?;
            let mut out = open_output(output.as_deref())?;
            writeln!(out, "edges\t{}", d.m)?;
            writeln!(out, "count\t{}", d.total)?;
            writeln!(out, "max_eta\t{}", d.max_eta)?;
            writeln!(out, "r_consistency\t{}", fmt_opt(d.r_consistency))?;
            writeln!(out, "r_clt\t{}", fmt_opt(d.r_clt))?;
            writeln!(out, "berry_esseen_bound\t{}", fmt_opt(d.berry_esseen_bound))?;
            writeln!(out, "count_growth\t{}", fmt_opt(d.count_growth))?;
            out.flush()?;
            Ok(())
        }
        Command::Generate { model, m_target } => {
            let cfg = model.build(seed)?;
            let stream = match m_target {
                Some(m) => generate_fixed_length(&cfg, m)?,
                None => cfg.generate()?,
            };
            stream.write_edge_list(open_output(output.as_deref())?)
        }
        Command::SimulateDet(args) => experiment(&args, Mode::Deterministic, seed, output, threads),
        Command::SimulateSto(args) => experiment(&args, Mode::Stochastic, seed, output, threads),
        Command::Coverage(args) => experiment(&args, Mode::Coverage, seed, output, threads),
        Command::Theory {
            delta,
            tau,
            l,
            k,
            nodes,
            lambda,
            draws,
        } => {
            let params = TheoryParams {
                delta,
                tau,
                l,
                k,
                n_nodes: nodes,
                lambda,
            };
            params.validate()?;
            let seed = seed.unwrap_or(0);
            let desc = format!("delta={delta} tau={tau} l={l} k={k} nodes={nodes} lambda={lambda}");
            let mut w = csv::Writer::from_writer(open_output(output.as_deref())?);
            w.write_record(["quantity", "parameters", "value", "std_error"])?;
            let (pi_mc, se) = theory::pi_monte_carlo(delta, tau, l, draws, seed)?;
            w.write_record(["pi_monte_carlo", &desc, &pi_mc.to_string(), &se.to_string()])?;
            if l == 2 {
                let pi = theory::pi_closed_form_l2(delta, tau)?;
                w.write_record(["pi_closed_form", &desc, &pi.to_string(), "0"])?;
            }
            let lb = theory::pi_lower_bound(delta, tau, l)?;
            w.write_record(["pi_lower_bound", &desc, &lb.to_string(), "0"])?;
            let c = theory::motif_match_probability(nodes, k, l)?;
            w.write_record(["motif_match_probability", &desc, &c.to_string(), "0"])?;
            let (pi, pi_se) = theory::pi_for(&params, draws, seed)?;
            let e = theory::expected_count_uniform(&params, pi)?;
            let scale = if pi > 0.0 { e / pi } else { 0.0 };
            w.write_record([
                "expected_count",
                &desc,
                &e.to_string(),
                &(scale * pi_se).to_string(),
            ])?;
            w.flush()?;
            Ok(())
        }
    })
}

fn experiment(
    args: &ExperimentArgs,
    mode: Mode,
    seed: Option<u64>,
    output: Option<PathBuf>,
    threads: usize,
) -> Result<()> {
    let spec = args.to_spec(mode, seed, output)?;
    let start = Instant::now();
    let report = harness::run_experiment(&spec, threads)?;
    info!("experiment finished in {:.3}s", start.elapsed().as_secs_f64());
    match &spec.output {
        Some(path) => {
            for p in report.write_files(path)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => report.summary_table().write(io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
