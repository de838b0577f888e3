//! Stochastic temporal-graph generators.
//!
//! Two models are provided: a homogeneous Poisson arrival process whose
//! events are marked with a uniformly random ordered node pair, and a
//! Poisson-process stochastic block model where every ordered pair of nodes
//! carries its own Poisson process with a rate fixed by the blocks of its
//! endpoints.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::rng;
use crate::stream::{NodeId, NodeRegistry, TemporalEdge, TemporalStream};

/// Poisson arrivals at rate `lambda` on `(0, tau]`, uniform ordered pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformPoissonConfig {
    pub lambda: f64,
    pub tau: f64,
    pub n_nodes: usize,
    #[serde(default)]
    pub seed: u64,
}

impl UniformPoissonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::arg(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::arg(format!("tau must be positive, got {}", self.tau)));
        }
        if self.n_nodes < 2 {
            return Err(Error::arg("need at least 2 nodes"));
        }
        Ok(())
    }
}

/// Poisson-process stochastic block model. `intensity[a][b]` is the rate of
/// the process on each ordered pair with source in block `a` and destination
/// in block `b`. Nodes are assigned to blocks contiguously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmPoissonConfig {
    pub block_sizes: Vec<usize>,
    pub intensity: Vec<Vec<f64>>,
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SbmPoissonConfig {
    /// Equal-sized blocks with `diagonal` rate within blocks and `off_diagonal`
    /// rate across blocks.
    pub fn two_level(
        blocks: usize,
        block_size: usize,
        diagonal: f64,
        off_diagonal: f64,
        tau: f64,
        seed: u64,
    ) -> Self {
        let intensity = (0..blocks)
            .map(|a| {
                (0..blocks)
                    .map(|b| if a == b { diagonal } else { off_diagonal })
                    .collect()
            })
            .collect();
        Self {
            block_sizes: vec![block_size; blocks],
            intensity,
            tau,
            seed,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Block index of every node.
    pub fn memberships(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &n)| std::iter::repeat_n(b, n))
            .collect()
    }

    /// Number of ordered pairs `(i, j)`, `i ≠ j`, with `i` in block `a` and
    /// `j` in block `b`.
    fn pair_count(&self, a: usize, b: usize) -> f64 {
        let (sa, sb) = (self.block_sizes[a] as f64, self.block_sizes[b] as f64);
        if a == b {
            sa * (sa - 1.0)
        } else {
            sa * sb
        }
    }

    /// Σ_{i≠j} rate(i, j).
    pub fn aggregate_rate(&self) -> f64 {
        let nb = self.block_sizes.len();
        (0..nb)
            .flat_map(|a| (0..nb).map(move |b| (a, b)))
            .map(|(a, b)| self.intensity[a][b] * self.pair_count(a, b))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let nb = self.block_sizes.len();
        if nb == 0 || self.block_sizes.contains(&0) {
            return Err(Error::arg("block sizes must be positive"));
        }
        if self.n_nodes() < 2 {
            return Err(Error::arg("need at least 2 nodes"));
        }
        if self.intensity.len() != nb || self.intensity.iter().any(|row| row.len() != nb) {
            return Err(Error::arg(format!("intensity must be a {nb}x{nb} matrix")));
        }
        if self
            .intensity
            .iter()
            .flatten()
            .any(|&r| !(r.is_finite() && r >= 0.0))
        {
            return Err(Error::arg("intensities must be finite and non-negative"));
        }
        if !self.intensity.iter().flatten().any(|&r| r > 0.0) {
            return Err(Error::arg("at least one intensity must be positive"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::arg(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Either generator model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelConfig {
    Uniform(UniformPoissonConfig),
    Sbm(SbmPoissonConfig),
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Uniform(c) => c.validate(),
            ModelConfig::Sbm(c) => c.validate(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::Uniform(c) => c.seed,
            ModelConfig::Sbm(c) => c.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelConfig::Uniform(c) => c.seed = seed,
            ModelConfig::Sbm(c) => c.seed = seed,
        }
        self
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            ModelConfig::Uniform(c) => c.n_nodes,
            ModelConfig::Sbm(c) => c.n_nodes(),
        }
    }

    /// Expected number of events per unit time.
    pub fn aggregate_rate(&self) -> f64 {
        match self {
            ModelConfig::Uniform(c) => c.lambda,
            ModelConfig::Sbm(c) => c.aggregate_rate(),
        }
    }

    /// Draws a stream on the configured horizon.
    pub fn generate(&self) -> Result<TemporalStream> {
        match self {
            ModelConfig::Uniform(c) => generate_uniform(c),
            ModelConfig::Sbm(c) => generate_sbm(c),
        }
    }
}

fn poisson_count(r: &mut ChaCha8Rng, mean: f64) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::arg(format!("poisson mean {mean}: {e}")))?;
    Ok(dist.sample(r) as usize)
}

/// Uniform on `(0, tau]`.
#[inline]
fn arrival(r: &mut ChaCha8Rng, tau: f64) -> f64 {
    tau * (1.0 - r.random::<f64>())
}

/// Uniform ordered pair with distinct endpoints.
#[inline]
fn uniform_pair(r: &mut ChaCha8Rng, n: usize) -> (u32, u32) {
    let src = r.random_range(0..n);
    let mut dst = r.random_range(0..n - 1);
    if dst >= src {
        dst += 1;
    }
    (src as u32, dst as u32)
}

/// Sequence numbers are assigned after sorting by time, so they agree with the
/// stream order.
fn assemble(mut events: Vec<(f64, u32, u32)>, n_nodes: usize) -> Result<TemporalStream> {
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let edges = events
        .into_iter()
        .enumerate()
        .map(|(i, (t, s, d))| TemporalEdge::new(NodeId(s), NodeId(d), t, i as u64))
        .collect();
    TemporalStream::new(edges, NodeRegistry::numbered(n_nodes))
}

/// N ~ Poisson(λτ) arrivals, i.i.d. uniform on (0, τ] and sorted, each marked
/// with a uniform ordered pair.
pub fn generate_uniform(config: &UniformPoissonConfig) -> Result<TemporalStream> {
    config.validate()?;
    let mut r = rng(config.seed);
    let n = poisson_count(&mut r, config.lambda * config.tau)?;
    let events = (0..n)
        .map(|_| {
            let t = arrival(&mut r, config.tau);
            let (s, d) = uniform_pair(&mut r, config.n_nodes);
            (t, s, d)
        })
        .collect();
    assemble(events, config.n_nodes)
}

/// Independent Poisson process on every ordered pair, merged by time.
pub fn generate_sbm(config: &SbmPoissonConfig) -> Result<TemporalStream> {
    config.validate()?;
    let mut r = rng(config.seed);
    let z = config.memberships();
    let n = z.len();
    let mut events = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let rate = config.intensity[z[i]][z[j]];
            let count = poisson_count(&mut r, rate * config.tau)?;
            for _ in 0..count {
                events.push((arrival(&mut r, config.tau), i as u32, j as u32));
            }
        }
    }
    assemble(events, n)
}

/// Sampler for edge marks of the SBM: a block pair weighted by its aggregate
/// rate, then a uniform ordered node pair inside it.
struct SbmMarks {
    classes: Vec<(usize, usize)>,
    weights: WeightedIndex<f64>,
    offsets: Vec<usize>,
    sizes: Vec<usize>,
}

impl SbmMarks {
    fn new(config: &SbmPoissonConfig) -> Result<Self> {
        let nb = config.block_sizes.len();
        let mut classes = Vec::new();
        let mut w = Vec::new();
        for a in 0..nb {
            for b in 0..nb {
                let weight = config.intensity[a][b] * config.pair_count(a, b);
                if weight > 0.0 {
                    classes.push((a, b));
                    w.push(weight);
                }
            }
        }
        if w.is_empty() {
            return Err(Error::arg("model has zero aggregate rate"));
        }
        let weights = WeightedIndex::new(&w).map_err(|e| Error::arg(e.to_string()))?;
        let mut offsets = Vec::with_capacity(nb);
        let mut acc = 0;
        for &s in &config.block_sizes {
            offsets.push(acc);
            acc += s;
        }
        Ok(Self {
            classes,
            weights,
            offsets,
            sizes: config.block_sizes.clone(),
        })
    }

    fn sample(&self, r: &mut ChaCha8Rng) -> (u32, u32) {
        let (a, b) = self.classes[self.weights.sample(r)];
        if a == b {
            let (s, d) = uniform_pair(r, self.sizes[a]);
            (
                (self.offsets[a] + s as usize) as u32,
                (self.offsets[a] + d as usize) as u32,
            )
        } else {
            let s = self.offsets[a] + r.random_range(0..self.sizes[a]);
            let d = self.offsets[b] + r.random_range(0..self.sizes[b]);
            (s as u32, d as u32)
        }
    }
}

/// Exactly `m_target` events: exponential inter-arrivals at the model's
/// aggregate rate, marks from the model's edge distribution. The horizon
/// `tau` of the config is ignored.
pub fn generate_fixed_length(config: &ModelConfig, m_target: usize) -> Result<TemporalStream> {
    let (seed, n_nodes, rate) = match config {
        ModelConfig::Uniform(c) => {
            if !(c.lambda.is_finite() && c.lambda > 0.0) {
                return Err(Error::arg(format!("lambda must be positive, got {}", c.lambda)));
            }
            if c.n_nodes < 2 {
                return Err(Error::arg("need at least 2 nodes"));
            }
            (c.seed, c.n_nodes, c.lambda)
        }
        ModelConfig::Sbm(c) => (c.seed, c.n_nodes(), c.aggregate_rate()),
    };
    if m_target == 0 {
        return TemporalStream::new(Vec::new(), NodeRegistry::numbered(n_nodes));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::arg("zero aggregate rate cannot produce events"));
    }
    let gaps = Exp::new(rate).map_err(|e| Error::arg(e.to_string()))?;
    let mut r = rng(seed);
    let sbm = match config {
        ModelConfig::Sbm(c) => Some(SbmMarks::new(c)?),
        ModelConfig::Uniform(_) => None,
    };
    let mut t = 0.0;
    let mut events = Vec::with_capacity(m_target);
    for _ in 0..m_target {
        t += gaps.sample(&mut r);
        let (s, d) = match &sbm {
            Some(marks) => marks.sample(&mut r),
            None => uniform_pair(&mut r, n_nodes),
        };
        events.push((t, s, d));
    }
    assemble(events, n_nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(lambda: f64, tau: f64, n: usize, seed: u64) -> UniformPoissonConfig {
        UniformPoissonConfig {
            lambda,
            tau,
            n_nodes: n,
            seed,
        }
    }

    #[test]
    fn validation() {
        assert!(generate_uniform(&uniform(0.0, 1.0, 5, 0)).is_err());
        assert!(generate_uniform(&uniform(1.0, -1.0, 5, 0)).is_err());
        assert!(generate_uniform(&uniform(1.0, 1.0, 1, 0)).is_err());
        let mut sbm = SbmPoissonConfig::two_level(2, 3, 0.0, 0.0, 1.0, 0);
        assert!(generate_sbm(&sbm).is_err());
        sbm.intensity[0][1] = -1.0;
        assert!(generate_sbm(&sbm).is_err());
        let bad_shape = SbmPoissonConfig {
            block_sizes: vec![2, 2],
            intensity: vec![vec![1.0]],
            tau: 1.0,
            seed: 0,
        };
        assert!(bad_shape.validate().is_err());
    }

    #[test]
    fn tiny_mean_gives_empty_stream() {
        let s = generate_uniform(&uniform(1e-12, 1.0, 5, 3)).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.node_count(), 5);
    }

    #[test]
    fn uniform_stream_shape() {
        let s = generate_uniform(&uniform(50.0, 10.0, 7, 1)).unwrap();
        assert!(!s.is_empty());
        for w in s.edges().windows(2) {
            assert!(w[0].time < w[1].time);
        }
        for e in s.edges() {
            assert!(e.time > 0.0 && e.time <= 10.0);
            assert_ne!(e.src, e.dst);
            assert!(e.src.index() < 7 && e.dst.index() < 7);
        }
        assert_eq!(s, generate_uniform(&uniform(50.0, 10.0, 7, 1)).unwrap());
    }

    #[test]
    fn sbm_single_class() {
        // Only block 0 → block 1 carries events.
        let mut c = SbmPoissonConfig::two_level(2, 4, 0.0, 0.0, 50.0, 9);
        c.intensity[0][1] = 0.5;
        let s = generate_sbm(&c).unwrap();
        assert!(!s.is_empty());
        assert!(s.edges().iter().all(|e| e.src.index() < 4 && e.dst.index() >= 4));
        let f = generate_fixed_length(&ModelConfig::Sbm(c), 300).unwrap();
        assert_eq!(f.len(), 300);
        assert!(f.edges().iter().all(|e| e.src.index() < 4 && e.dst.index() >= 4));
    }

    #[test]
    fn sbm_sequence_follows_time() {
        let c = SbmPoissonConfig::two_level(2, 5, 0.3, 0.1, 20.0, 4);
        let s = generate_sbm(&c).unwrap();
        for w in s.edges().windows(2) {
            assert!(w[0].seq < w[1].seq);
        }
    }

    #[test]
    fn fixed_length() {
        let cfg = ModelConfig::Uniform(uniform(250.0, 1.0, 100, 17));
        assert!(generate_fixed_length(&cfg, 0).unwrap().is_empty());
        let s = generate_fixed_length(&cfg, 7000).unwrap();
        assert_eq!(s.len(), 7000);
        assert_eq!(s, generate_fixed_length(&cfg, 7000).unwrap());
        let zero = ModelConfig::Sbm(SbmPoissonConfig::two_level(2, 3, 0.0, 0.0, 1.0, 0));
        assert!(generate_fixed_length(&zero, 5).is_err());
        assert!(generate_fixed_length(&zero, 0).unwrap().is_empty());
    }

    #[test]
    fn aggregate_rate() {
        let c = SbmPoissonConfig::two_level(2, 50, 0.2, 0.06, 1.0, 0);
        let expect = 2.0 * 50.0 * 49.0 * 0.2 + 2.0 * 50.0 * 50.0 * 0.06;
        assert!((c.aggregate_rate() - expect).abs() < 1e-9);
    }

    #[test]
    fn model_config_json() {
        let text = r#"{"model":"uniform","lambda":30,"tau":100,"n_nodes":10}"#;
        let cfg: ModelConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg, ModelConfig::Uniform(uniform(30.0, 100.0, 10, 0)));
    }
}
