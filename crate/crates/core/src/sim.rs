//! Seeded Monte Carlo simulation of the epoch renewal process.
//!
//! Attempts are drawn at the probability level: a packet is decoded on its
//! first attempt with probability `q1`, otherwise on its second with
//! probability `q2`, otherwise it is dropped and a fresh packet is sent. The
//! age grows linearly between deliveries, so each epoch contributes the exact
//! trapezoid `Y·L + ½L²` to the age integral.
//!
//! Replicas use independent ChaCha8 streams derived from one seed, so results
//! are bit-reproducible regardless of how many threads run them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{epoch_moments, WaitingPolicy};
use crate::channel::{AttemptProbs, HarqScheme};
use crate::error::{Error, Result};

pub const DEFAULT_BATCHES: u32 = 100;

/// How the idle time after each delivery is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PolicyMode {
    /// Fixed waits after first- and second-attempt deliveries.
    ExplicitWaits { w1: f64, w2: f64 },
    /// `w(y) = [λ − E[X] − y]⁺` with `E[X]` from the analysis.
    Threshold { lambda: f64 },
}

impl From<WaitingPolicy> for PolicyMode {
    fn from(p: WaitingPolicy) -> Self {
        PolicyMode::ExplicitWaits { w1: p.w1, w2: p.w2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_epochs: u64,
    pub seed: u64,
    pub policy: PolicyMode,
    /// Leading epochs simulated but excluded from the estimates.
    pub warmup_epochs: u64,
    /// Number of batches for batch-means standard errors.
    pub batches: u32,
}

impl SimConfig {
    /// Config with 1% warm-up and the default batch count.
    pub fn new(num_epochs: u64, seed: u64, policy: PolicyMode) -> Result<Self> {
        let cfg = Self {
            num_epochs,
            seed,
            policy,
            warmup_epochs: num_epochs / 100,
            batches: DEFAULT_BATCHES,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_epochs == 0 {
            return Err(Error::invalid("num_epochs must be at least 1"));
        }
        if self.warmup_epochs >= self.num_epochs {
            return Err(Error::invalid(format!(
                "warmup_epochs ({}) must be smaller than num_epochs ({})",
                self.warmup_epochs, self.num_epochs
            )));
        }
        if self.batches == 0 {
            return Err(Error::invalid("batches must be at least 1"));
        }
        match self.policy {
            PolicyMode::ExplicitWaits { w1, w2 } => {
                WaitingPolicy::new(w1, w2)?;
            }
            PolicyMode::Threshold { lambda } => {
                if !(lambda.is_finite() && lambda >= 0.0) {
                    return Err(Error::invalid(format!(
                        "threshold λ = {lambda} must be finite and non-negative"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Result of one simulated epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochOutcome {
    /// Channel busy time `X`.
    pub busy: f64,
    /// Area under the age curve over the epoch, `Q`.
    pub q_area: f64,
    /// Age right after the delivery that closes the epoch (next epoch's `Y`).
    pub end_age: f64,
}

/// Simulates one epoch that starts at age `start_age` and idles for `wait`.
pub fn simulate_epoch<R: Rng + ?Sized>(
    probs: &AttemptProbs,
    scheme: &HarqScheme,
    start_age: f64,
    wait: f64,
    rng: &mut R,
) -> EpochOutcome {
    let (n, m) = (scheme.n(), scheme.m());
    let mut busy = 0.0;
    let end_age = loop {
        if rng.random::<f64>() < probs.q1() {
            busy += n;
            break n;
        }
        busy += n + m;
        if rng.random::<f64>() < probs.q2() {
            break n + m;
        }
    };
    let len = wait + busy;
    EpochOutcome {
        busy,
        q_area: start_age * len + 0.5 * len * len,
        end_age,
    }
}

/// Monte Carlo estimates over the measured epochs.
///
/// Standard errors are batch means; they are zero when fewer than two
/// batches are available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    /// Time-average age, `Σ Q_k / Σ L_k`.
    pub avg_aoi: f64,
    pub stderr_avg_aoi: f64,
    pub mean_x_hat: f64,
    pub stderr_mean_x: f64,
    pub mean_x2_hat: f64,
    pub stderr_mean_x2: f64,
    pub mean_y_hat: f64,
    pub stderr_mean_y: f64,
    pub prob_y_n_hat: f64,
    pub stderr_prob_y_n: f64,
    pub mean_q_hat: f64,
    pub mean_l_hat: f64,
    pub mean_wait_hat: f64,
    pub epochs_measured: u64,
    pub batches: u32,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    count: u64,
    busy: f64,
    busy2: f64,
    end_age: f64,
    first_attempt: u64,
    q: f64,
    l: f64,
    wait: f64,
}

impl Accum {
    fn merge(&mut self, o: &Accum) {
        self.count += o.count;
        self.busy += o.busy;
        self.busy2 += o.busy2;
        self.end_age += o.end_age;
        self.first_attempt += o.first_attempt;
        self.q += o.q;
        self.l += o.l;
        self.wait += o.wait;
    }
}

/// Runs a single replica on stream 0 of `config.seed`.
pub fn run(scheme: &HarqScheme, probs: &AttemptProbs, config: &SimConfig) -> Result<SimStats> {
    config.validate()?;
    let batches = simulate_replica(scheme, probs, config, 0);
    Ok(summarize(&batches))
}

/// Runs `replicas` independent replicas in parallel and pools their batches in
/// replica order. `run_replicas(.., 1)` equals [`run`].
pub fn run_replicas(
    scheme: &HarqScheme,
    probs: &AttemptProbs,
    config: &SimConfig,
    replicas: u32,
) -> Result<SimStats> {
    config.validate()?;
    if replicas == 0 {
        return Err(Error::invalid("replicas must be at least 1"));
    }
    let per_replica: Vec<Vec<Accum>> = (0..replicas)
        .into_par_iter()
        .map(|r| simulate_replica(scheme, probs, config, u64::from(r)))
        .collect();
    let pooled: Vec<Accum> = per_replica.into_iter().flatten().collect();
    Ok(summarize(&pooled))
}

fn simulate_replica(
    scheme: &HarqScheme,
    probs: &AttemptProbs,
    config: &SimConfig,
    stream: u64,
) -> Vec<Accum> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);

    let n = scheme.n();
    let wait_for: Box<dyn Fn(f64) -> f64> = match config.policy {
        PolicyMode::ExplicitWaits { w1, w2 } => Box::new(move |y| if y == n { w1 } else { w2 }),
        PolicyMode::Threshold { lambda } => {
            let level = lambda - epoch_moments(scheme, probs).mean_x;
            Box::new(move |y| (level - y).max(0.0))
        }
    };

    let measured = config.num_epochs - config.warmup_epochs;
    let n_batches = u64::from(config.batches).min(measured);
    let mut batches = vec![Accum::default(); n_batches as usize];

    let mut age = n;
    for k in 0..config.num_epochs {
        let wait = wait_for(age);
        let out = simulate_epoch(probs, scheme, age, wait, &mut rng);
        if k >= config.warmup_epochs {
            let i = k - config.warmup_epochs;
            let b = (u128::from(i) * u128::from(n_batches) / u128::from(measured)) as usize;
            let acc = &mut batches[b];
            acc.count += 1;
            acc.busy += out.busy;
            acc.busy2 += out.busy * out.busy;
            acc.end_age += out.end_age;
            acc.first_attempt += u64::from(out.end_age == n);
            acc.q += out.q_area;
            acc.l += wait + out.busy;
            acc.wait += wait;
        }
        age = out.end_age;
    }
    batches
}

fn summarize(batches: &[Accum]) -> SimStats {
    let mut total = Accum::default();
    for b in batches {
        total.merge(b);
    }
    let count = total.count as f64;
    let mean_q_hat = total.q / count;
    let mean_l_hat = total.l / count;

    let stderr = |f: &dyn Fn(&Accum) -> f64| -> f64 {
        let k = batches.len();
        if k < 2 {
            return 0.0;
        }
        let vals: Vec<f64> = batches.iter().map(f).collect();
        let mean = vals.iter().sum::<f64>() / k as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    };

    SimStats {
        avg_aoi: mean_q_hat / mean_l_hat,
        stderr_avg_aoi: stderr(&|b| b.q / b.l),
        mean_x_hat: total.busy / count,
        stderr_mean_x: stderr(&|b| b.busy / b.count as f64),
        mean_x2_hat: total.busy2 / count,
        stderr_mean_x2: stderr(&|b| b.busy2 / b.count as f64),
        mean_y_hat: total.end_age / count,
        stderr_mean_y: stderr(&|b| b.end_age / b.count as f64),
        prob_y_n_hat: total.first_attempt as f64 / count,
        stderr_prob_y_n: stderr(&|b| b.first_attempt as f64 / b.count as f64),
        mean_q_hat,
        mean_l_hat,
        mean_wait_hat: total.wait / count,
        epochs_measured: total.count,
        batches: batches.len() as u32,
    }
}
