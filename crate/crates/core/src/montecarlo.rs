//! Seeded stochastic simulation of concept creation and cleanup.
//!
//! The state is the integer pair `(c, c_p)`; base concepts are drawn uniformly
//! with replacement, so the counts are a sufficient statistic. One step:
//!
//! 1. Draw `B = b_min + Binomial(b_max - b_min, 1/2)`. The new concept is
//!    parasitic if a uniform draw falls below `p_err`, or else if any of `B`
//!    uniform picks over the current `c` concepts hits a parasite. Picks stop at
//!    the first hit. `c` grows by one, `c_p` by one if parasitic.
//! 2. Pragmatic cleanup: `floor(r_prag)` attempts plus one more with
//!    probability `frac(r_prag)`. Each picks a concept and removes it if parasitic.
//! 3. Competing cleanup: attempts as above with `r_comp`. Each makes two picks and
//!    removes the first if it is parasitic and the second is accurate.
//!
//! Random streams are ChaCha8 seeded through [`split_seed`]. The Bernoulli
//! draw for a fractional attempt is skipped when the fractional part is zero.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{Sample, Trajectory};
use crate::error::{Error, Result};
use crate::model::{KnowledgeState, ModelParams};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of epoch `index`: the `(index + 1)`-th output of a SplitMix64 stream
/// started at `master`, i.e. `splitmix64(master + (index + 1) * 0x9e3779b97f4a7c15)`.
pub fn split_seed(master: u64, index: u32) -> u64 {
    splitmix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(u64::from(index) + 1)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub c0: u64,
    pub cp0: u64,
    pub b_min: u32,
    pub b_max: u32,
    pub p_err: f64,
    pub r_prag: f64,
    pub r_comp: f64,
    pub steps: u64,
    pub epochs: u32,
    pub seed: u64,
    pub checkpoint_every: u64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.c0 < 1 {
            return fail("c0 must be at least 1".into());
        }
        if self.cp0 > self.c0 {
            return fail(format!("cp0 = {} exceeds c0 = {}", self.cp0, self.c0));
        }
        if self.b_min < 1 || self.b_min > self.b_max {
            return fail(format!(
                "need 1 <= b_min <= b_max, got b_min = {}, b_max = {}",
                self.b_min, self.b_max
            ));
        }
        if !(0.0..=1.0).contains(&self.p_err) {
            return fail(format!("p_err = {} outside [0,1]", self.p_err));
        }
        for (name, r) in [("r_prag", self.r_prag), ("r_comp", self.r_comp)] {
            if !(r >= 0.0 && r.is_finite()) {
                return fail(format!("{name} = {r} must be non-negative"));
            }
        }
        if self.steps < 1 {
            return fail("steps must be at least 1".into());
        }
        if self.epochs < 1 {
            return fail("epochs must be at least 1".into());
        }
        if self.checkpoint_every < 1 {
            return fail("checkpoint_every must be at least 1".into());
        }
        Ok(())
    }

    /// Mean base count `(b_min + b_max) / 2`.
    pub fn mean_base_count(&self) -> f64 {
        (f64::from(self.b_min) + f64::from(self.b_max)) / 2.0
    }

    /// Mean-field parameters using the mean base count. Fails when the mean
    /// is not an integer.
    pub fn mean_field_params(&self) -> Result<ModelParams<f64>> {
        let sum = self.b_min + self.b_max;
        if !sum.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "mean base count ({} + {}) / 2 is not an integer",
                self.b_min, self.b_max
            )));
        }
        ModelParams::new(self.p_err, sum / 2, self.r_prag, self.r_comp)
    }

    pub fn epoch_seeds(&self) -> Vec<u64> {
        (0..self.epochs).map(|i| split_seed(self.seed, i)).collect()
    }
}

/// Draws a base count from `b_min + Binomial(b_max - b_min, 1/2)`.
pub fn draw_base_count<R: RngCore + ?Sized>(config: &McConfig, rng: &mut R) -> u32 {
    binomial_base_count(config.b_min, config.b_max, rng)
}

// A Binomial(n, 1/2) variate is the number of set bits among n fair bits.
fn binomial_base_count<R: RngCore + ?Sized>(b_min: u32, b_max: u32, rng: &mut R) -> u32 {
    let mut n = b_max - b_min;
    let mut count = b_min;
    while n >= 64 {
        count += rng.next_u64().count_ones();
        n -= 64;
    }
    if n > 0 {
        count += (rng.next_u64() & ((1u64 << n) - 1)).count_ones();
    }
    count
}

fn attempts<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    let whole = rate.floor();
    let frac = rate - whole;
    whole as u64 + u64::from(frac > 0.0 && rng.gen::<f64>() < frac)
}

fn is_parasitic_pick<R: Rng + ?Sized>(c: u64, c_p: u64, rng: &mut R) -> bool {
    rng.gen_range(0..c) < c_p
}

fn creates_parasite<R: Rng + ?Sized>(p_err: f64, b: u32, c: u64, c_p: u64, rng: &mut R) -> bool {
    rng.gen::<f64>() < p_err || (0..b).any(|_| is_parasitic_pick(c, c_p, rng))
}

fn competing_removes<R: Rng + ?Sized>(c: u64, c_p: u64, rng: &mut R) -> bool {
    let first = is_parasitic_pick(c, c_p, rng);
    let second = is_parasitic_pick(c, c_p, rng);
    first && !second
}

/// One epoch from `(c0, cp0)`, sampled at step 0, every `checkpoint_every`
/// steps and at the final step. Sample `t` holds the step number.
pub fn run_epoch(config: &McConfig, epoch_seed: u64) -> Result<Trajectory<f64>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed);
    let (mut c, mut c_p) = (config.c0, config.cp0);
    let record = |c: u64, c_p: u64, step: u64| Sample::new(c as f64, c_p as f64, Some(step as f64));
    let mut samples = Vec::with_capacity((config.steps / config.checkpoint_every) as usize + 2);
    samples.push(record(c, c_p, 0));

    for step in 1..=config.steps {
        let b = binomial_base_count(config.b_min, config.b_max, &mut rng);
        let parasitic = creates_parasite(config.p_err, b, c, c_p, &mut rng);
        c += 1;
        c_p += u64::from(parasitic);

        for _ in 0..attempts(config.r_prag, &mut rng) {
            if is_parasitic_pick(c, c_p, &mut rng) {
                c -= 1;
                c_p -= 1;
                if c == 0 {
                    return Err(Error::DegenerateState { c: 0.0, step });
                }
            }
        }
        for _ in 0..attempts(config.r_comp, &mut rng) {
            // a single remaining concept cannot be removed by competition
            if competing_removes(c, c_p, &mut rng) {
                c -= 1;
                c_p -= 1;
            }
        }

        if step % config.checkpoint_every == 0 || step == config.steps {
            samples.push(record(c, c_p, step));
        }
    }
    Ok(Trajectory::from_parts(samples, config.steps, 0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheckpoint {
    pub step: u64,
    pub c_mean: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_mean: f64,
}

/// Per-checkpoint spread of `k` over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct McEnvelope {
    pub checkpoints: Vec<EnvelopeCheckpoint>,
    pub epoch_seeds: Vec<u64>,
}

/// Runs `config.epochs` epochs on the global thread pool.
pub fn run_ensemble(config: &McConfig) -> Result<McEnvelope> {
    run_ensemble_with(config, None)
}

/// `threads = Some(n)` runs the epochs on a dedicated pool of `n` workers;
/// `Some(1)` is sequential. The envelope does not depend on this choice.
pub fn run_ensemble_with(config: &McConfig, threads: Option<usize>) -> Result<McEnvelope> {
    config.validate()?;
    let seeds = config.epoch_seeds();
    let run_all = || -> Vec<Result<Trajectory<f64>>> {
        seeds.par_iter().map(|&s| run_epoch(config, s)).collect()
    };
    let runs = match threads {
        None => run_all(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run_all),
    };
    let trajectories = runs
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Epoch {
                epoch: i as u32,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_points = trajectories[0].samples().len();
    let n = trajectories.len() as f64;
    let checkpoints = (0..n_points)
        .map(|j| {
            let mut k_min = f64::INFINITY;
            let mut k_max = f64::NEG_INFINITY;
            let (mut c_sum, mut k_sum) = (0.0, 0.0);
            for t in &trajectories {
                let s = t.samples()[j];
                k_min = k_min.min(s.k);
                k_max = k_max.max(s.k);
                c_sum += s.c;
                k_sum += s.k;
            }
            EnvelopeCheckpoint {
                step: trajectories[0].samples()[j].t.unwrap_or(0.0) as u64,
                c_mean: c_sum / n,
                k_min,
                k_max,
                // mean of values in [k_min, k_max] can round just outside it
                k_mean: (k_sum / n).clamp(k_min, k_max),
            }
        })
        .collect();
    Ok(McEnvelope {
        checkpoints,
        epoch_seeds: seeds,
    })
}

/// Empirical per-step frequencies at a frozen state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinnedFrequencies {
    /// Fraction of creation decisions that produced a parasite.
    pub p_p_hat: f64,
    /// Mean pragmatic removals per step.
    pub prag_hat: f64,
    /// Mean competing removals per step.
    pub comp_hat: f64,
    pub n_trials: u64,
}

/// Repeats one creation decision and one step's worth of each cleanup kind at
/// `state` without mutating it. Uses the fixed base count of `params`.
pub fn pinned_state_frequencies(
    params: &ModelParams<f64>,
    state: &KnowledgeState<f64>,
    n_trials: u64,
    seed: u64,
) -> Result<PinnedFrequencies> {
    if n_trials < 10_000 {
        return Err(Error::InvalidConfig(format!(
            "n_trials = {n_trials} below 10^4"
        )));
    }
    let (c, c_p) = (state.c(), state.c_p());
    if c.fract() != 0.0 || c_p.fract() != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "state ({c}, {c_p}) is not integer-valued"
        )));
    }
    let (c, c_p) = (c as u64, c_p as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut created, mut prag, mut comp) = (0u64, 0u64, 0u64);
    for _ in 0..n_trials {
        created += u64::from(creates_parasite(
            params.p_err(),
            params.b(),
            c,
            c_p,
            &mut rng,
        ));
        for _ in 0..attempts(params.r_prag(), &mut rng) {
            prag += u64::from(is_parasitic_pick(c, c_p, &mut rng));
        }
        for _ in 0..attempts(params.r_comp(), &mut rng) {
            comp += u64::from(competing_removes(c, c_p, &mut rng));
        }
    }
    let n = n_trials as f64;
    Ok(PinnedFrequencies {
        p_p_hat: created as f64 / n,
        prag_hat: prag as f64 / n,
        comp_hat: comp as f64 / n,
        n_trials,
    })
}
