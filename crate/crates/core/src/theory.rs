//! Closed-form and Monte Carlo quantities for the uniform Poisson model.
//!
//! Under the model, conditional on N arrivals the times are i.i.d. uniform on
//! (0, τ] and the marks are i.i.d. uniform ordered pairs, so
//!
//! ```text
//! E[C] = E[binom(N, l)] · π(δ, l, τ) · C(|V|, k)
//!      = (λτ)^l / l!  · π · C(|V|, k)
//! ```
//!
//! where π is the probability that `l` uniform times span at most δ and
//! C(|V|, k) the probability that `l` uniform ordered edges, in order, map
//! onto the motif.

use rayon::prelude::*;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel::{derive_seed, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryParams {
    pub delta: f64,
    pub tau: f64,
    pub l: usize,
    pub k: usize,
    pub n_nodes: usize,
    pub lambda: f64,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        check_window(self.delta, self.tau)?;
        if self.l < 1 {
            return Err(Error::arg("l must be at least 1"));
        }
        if self.k < 2 || self.k > self.n_nodes {
            return Err(Error::arg(format!(
                "need 2 <= k <= |V|, got k={} |V|={}",
                self.k, self.n_nodes
            )));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::arg(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}

fn check_window(delta: f64, tau: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite() && tau.is_finite()) {
        return Err(Error::arg(format!("delta must be positive, got {delta}")));
    }
    if delta > tau {
        return Err(Error::arg(format!("delta {delta} exceeds tau {tau}")));
    }
    Ok(())
}

/// π(δ, 2, τ) = 1 − (1 − δ/τ)².
pub fn pi_closed_form_l2(delta: f64, tau: f64) -> Result<f64> {
    check_window(delta, tau)?;
    let x = delta / tau;
    Ok(2.0 * x - x * x)
}

/// Lower bound ⌊τ/δ⌋ · (δ/τ)^l from disjoint sub-cubes of side δ.
pub fn pi_lower_bound(delta: f64, tau: f64, l: usize) -> Result<f64> {
    check_window(delta, tau)?;
    if l < 1 {
        return Err(Error::arg("l must be at least 1"));
    }
    let x = delta / tau;
    Ok((tau / delta).floor() * x.powi(l as i32))
}

/// Monte Carlo estimate of P(max − min ≤ δ) for `l` i.i.d. uniform times on
/// (0, τ], with its binomial standard error. Deterministic given `seed` and
/// independent of the worker count.
pub fn pi_monte_carlo(
    delta: f64,
    tau: f64,
    l: usize,
    n_draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_window(delta, tau)?;
    if l < 1 || n_draws < 1 {
        return Err(Error::arg("need l >= 1 and n_draws >= 1"));
    }
    const CHUNK: usize = 1 << 16;
    let chunks = n_draws.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng(derive_seed(seed, c as u64));
            let draws = CHUNK.min(n_draws - c * CHUNK);
            let mut hits = 0u64;
            for _ in 0..draws {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for _ in 0..l {
                    let t = tau * (1.0 - r.random::<f64>());
                    lo = lo.min(t);
                    hi = hi.max(t);
                }
                if hi - lo <= delta {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let n = n_draws as f64;
    let est = hits as f64 / n;
    Ok((est, (est * (1.0 - est) / n).sqrt()))
}

/// C(|V|, k) = binom(|V|, k) · k! / (|V|(|V| − 1))^l.
pub fn motif_match_probability(n_nodes: usize, k: usize, l: usize) -> Result<f64> {
    if k < 2 || n_nodes < k {
        return Err(Error::arg(format!("need 2 <= k <= |V|, got k={k} |V|={n_nodes}")));
    }
    if l + 1 < k {
        return Err(Error::arg(format!("a connected motif on {k} nodes needs l >= {}", k - 1)));
    }
    let n = n_nodes as f64;
    let pairs = n * (n - 1.0);
    let falling: f64 = (0..k).map(|i| n - i as f64).product();
    let direct = falling / pairs.powi(l as i32);
    if direct.is_finite() && direct > 0.0 {
        return Ok(direct);
    }
    let log = (0..k).map(|i| (n - i as f64).ln()).sum::<f64>() - l as f64 * pairs.ln();
    Ok(log.exp())
}

/// E[binom(N, l)] for N ~ Poisson(mean): the l-th factorial moment over l!.
pub fn poisson_binomial_moment(mean: f64, l: usize) -> f64 {
    (1..=l).map(|i| mean / i as f64).product()
}

/// Expected motif count under the uniform model, with π supplied by the
/// caller (closed form for l = 2, Monte Carlo otherwise).
pub fn expected_count_uniform(params: &TheoryParams, pi: f64) -> Result<f64> {
    params.validate()?;
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::arg(format!("pi must be a probability, got {pi}")));
    }
    let c = motif_match_probability(params.n_nodes, params.k, params.l)?;
    Ok(poisson_binomial_moment(params.lambda * params.tau, params.l) * pi * c)
}

/// π for the given parameters: exact for l ≤ 2, Monte Carlo otherwise.
pub fn pi_for(params: &TheoryParams, n_draws: usize, seed: u64) -> Result<(f64, f64)> {
    match params.l {
        1 => {
            check_window(params.delta, params.tau)?;
            Ok((1.0, 0.0))
        }
        2 => Ok((pi_closed_form_l2(params.delta, params.tau)?, 0.0)),
        l => pi_monte_carlo(params.delta, params.tau, l, n_draws, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(pi_closed_form_l2(3.0, 3.0).unwrap(), 1.0);
        assert_eq!(pi_closed_form_l2(0.5, 1.0).unwrap(), 0.75);
        assert!((pi_closed_form_l2(0.01, 1.0).unwrap() - 0.0199).abs() < 1e-15);
        assert!(pi_closed_form_l2(2.0, 1.0).is_err());
    }

    #[test]
    fn lower_bound_values() {
        let b = pi_lower_bound(0.3, 1.0, 1).unwrap();
        assert!(b <= 1.0);
        assert_eq!(pi_lower_bound(0.5, 1.0, 2).unwrap(), 0.5);
        assert!(pi_lower_bound(0.5, 1.0, 2).unwrap() <= pi_closed_form_l2(0.5, 1.0).unwrap());
        assert!((pi_lower_bound(0.1, 1.0, 3).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_full_window() {
        assert_eq!(pi_monte_carlo(2.0, 2.0, 4, 1000, 1).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = pi_monte_carlo(0.2, 1.0, 3, 200_000, 5).unwrap();
        let b = crate::parallel::pool(1)
            .unwrap()
            .install(|| pi_monte_carlo(0.2, 1.0, 3, 200_000, 5).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn match_probability() {
        assert_eq!(motif_match_probability(2, 2, 1).unwrap(), 1.0);
        assert!((motif_match_probability(3, 2, 1).unwrap() - 1.0).abs() < 1e-15);
        let p = motif_match_probability(100, 3, 3).unwrap();
        assert!((p - 970_200.0 / 9900f64.powi(3)).abs() < 1e-20);
        assert!(motif_match_probability(2, 3, 3).is_err());
        assert!(motif_match_probability(10, 4, 2).is_err());
    }

    #[test]
    fn single_edge_expectation_is_lambda_tau() {
        let params = TheoryParams {
            delta: 1.0,
            tau: 100.0,
            l: 1,
            k: 2,
            n_nodes: 50,
            lambda: 3.0,
        };
        let (pi, _) = pi_for(&params, 10, 0).unwrap();
        let e = expected_count_uniform(&params, pi).unwrap();
        assert!((e - 300.0).abs() < 1e-9);
    }

    #[test]
    fn factorial_moment() {
        assert_eq!(poisson_binomial_moment(3000.0, 2), 4_500_000.0);
        assert_eq!(poisson_binomial_moment(0.0, 3), 0.0);
    }
}
