//! Seeded Monte Carlo estimates of `Pr{|S_N| ≥ εN}` and `E exp⟨S_N, u⟩`.
//!
//! Replica `r` draws from a ChaCha8 stream keyed by the master seed with
//! stream id `r`, so a replica's path depends only on `(seed, r)` and the
//! rayon schedule cannot change any result. Each replica draws
//! `s₀ ~ μ⁽⁰⁾`, steps `s₁, …, s_N` by `P`, and accumulates
//! `S_N = Σ_{t=1}^{N} f(s_t)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;

use crate::chain::{InitialDistribution, ReversibleChain};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::observable::VectorObservable;

/// One-sided confidence level of `upper99`.
pub const UPPER_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub steps: u64,
    pub replicas: u64,
    pub epsilon_grid: Vec<f64>,
    /// Replicas with `|S_N| ≥ εN`, per threshold.
    pub hits: Vec<u64>,
    pub estimate: Vec<f64>,
    /// Clopper–Pearson 99% upper bound on the tail probability.
    pub upper99: Vec<f64>,
    pub seed: u64,
}

/// Inverse-CDF sampler over precomputed cumulative rows.
struct Sampler {
    initial: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    // states past the last positive weight are never drawn
    if let Some(last) = weights.iter().rposition(|w| *w > 0.0) {
        c[last..].iter_mut().for_each(|x| *x = 1.0);
    }
    c
}

impl Sampler {
    fn new(chain: &ReversibleChain, mu0: &InitialDistribution) -> Self {
        Self {
            initial: cumulative(mu0.weights()),
            rows: (0..chain.n())
                .map(|s| cumulative(chain.transition().row(s)))
                .collect(),
        }
    }

    #[inline]
    fn draw(c: &[f64], rng: &mut ChaCha8Rng) -> usize {
        let x: f64 = rng.gen();
        c.partition_point(|&v| v <= x)
    }

    /// Runs one replica, calling `visit` on `s₁, …, s_N`.
    fn run(&self, seed: u64, replica: u64, steps: u64, mut visit: impl FnMut(usize)) {
        let mut rng = replica_rng(seed, replica);
        let mut s = Self::draw(&self.initial, &mut rng);
        for _ in 0..steps {
            s = Self::draw(&self.rows[s], &mut rng);
            visit(s);
        }
    }
}

/// The random stream of one replica.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

fn check_inputs(
    chain: &ReversibleChain,
    f: &VectorObservable,
    mu0: &InitialDistribution,
    replicas: u64,
) -> Result<()> {
    if f.n() != chain.n() {
        return Err(Error::DimensionMismatch {
            expected: chain.n(),
            got: f.n(),
        });
    }
    if mu0.len() != chain.n() {
        return Err(Error::DimensionMismatch {
            expected: chain.n(),
            got: mu0.len(),
        });
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }
    Ok(())
}

/// `S_N` for one replica.
fn replica_sum(sampler: &Sampler, f: &VectorObservable, seed: u64, r: u64, steps: u64) -> Vec<f64> {
    let mut sum = vec![0.0; f.dim()];
    sampler.run(seed, r, steps, |s| {
        for (acc, x) in sum.iter_mut().zip(f.value(s)) {
            *acc += x;
        }
    });
    sum
}

pub fn simulate_tails(
    chain: &ReversibleChain,
    f: &VectorObservable,
    mu0: &InitialDistribution,
    steps: u64,
    replicas: u64,
    epsilon_grid: &[f64],
    seed: u64,
) -> Result<SimulationReport> {
    check_inputs(chain, f, mu0, replicas)?;
    if steps == 0 {
        return Err(Error::InvalidParameter("need at least one step".into()));
    }
    if epsilon_grid.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon grid".into()));
    }
    let sampler = Sampler::new(chain, mu0);
    let norms: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| norm2(&replica_sum(&sampler, f, seed, r, steps)))
        .collect();

    let n = steps as f64;
    let hits: Vec<u64> = epsilon_grid
        .iter()
        .map(|eps| norms.iter().filter(|&&s| s >= eps * n).count() as u64)
        .collect();
    let estimate = hits.iter().map(|&h| h as f64 / replicas as f64).collect();
    let upper99 = hits
        .iter()
        .map(|&h| clopper_pearson_upper(h, replicas, UPPER_CONFIDENCE))
        .collect();
    Ok(SimulationReport {
        steps,
        replicas,
        epsilon_grid: epsilon_grid.to_vec(),
        hits,
        estimate,
        upper99,
        seed,
    })
}

/// Sample mean of `exp⟨S_N, u⟩` and its standard error.
pub fn estimate_mgf(
    chain: &ReversibleChain,
    f: &VectorObservable,
    u: &[f64],
    mu0: &InitialDistribution,
    steps: u64,
    replicas: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    check_inputs(chain, f, mu0, replicas)?;
    if u.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: u.len(),
        });
    }
    let sampler = Sampler::new(chain, mu0);
    let samples: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| dot(&replica_sum(&sampler, f, seed, r, steps), u).exp())
        .collect();
    let count = replicas as f64;
    let mean = samples.iter().sum::<f64>() / count;
    if replicas < 2 {
        return Ok((mean, f64::INFINITY));
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    Ok((mean, (var / count).sqrt()))
}

/// Visit counts of each state over all replicas and steps `1..=N`.
pub fn occupancy(
    chain: &ReversibleChain,
    mu0: &InitialDistribution,
    steps: u64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    if mu0.len() != chain.n() {
        return Err(Error::DimensionMismatch {
            expected: chain.n(),
            got: mu0.len(),
        });
    }
    let sampler = Sampler::new(chain, mu0);
    let n = chain.n();
    Ok((0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut counts = vec![0u64; n];
            sampler.run(seed, r, steps, |s| counts[s] += 1);
            counts
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        ))
}

/// One-sided Clopper–Pearson upper bound: the `p` with
/// `Pr{Bin(n, p) ≤ hits} = 1 − confidence`, i.e. the `confidence`
/// quantile of `Beta(hits + 1, n − hits)`; `1` when `hits = n`.
pub fn clopper_pearson_upper(hits: u64, trials: u64, confidence: f64) -> f64 {
    assert!(hits <= trials && trials > 0);
    if hits == trials {
        return 1.0;
    }
    let alpha = 1.0 - confidence;
    if hits == 0 {
        return 1.0 - alpha.powf(1.0 / trials as f64);
    }
    let (a, b) = ((hits + 1) as f64, (trials - hits) as f64);
    // I_p(a, b) is increasing in p; bisect for I_p = confidence
    let (mut lo, mut hi) = (hits as f64 / trials as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < confidence {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    hi
}
