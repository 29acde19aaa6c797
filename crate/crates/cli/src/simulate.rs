use std::path::Path;

use clap::Args;
use harq_aoi::sim::{run_replicas, PolicyMode, SimConfig, SimStats, DEFAULT_BATCHES};
use harq_aoi::{closed_form, epoch_objective, optimal_waits, WaitingPolicy};
use serde::{Deserialize, Serialize};

use crate::config::{self, layered, Layered};
use crate::design::{Design, DesignArgs};
use crate::manifest::RunManifest;
use crate::output::{emit, to_json, write_manifests, OutputArgs};
use crate::UsageError;

pub const DEFAULT_EPOCHS: u64 = 1_000_000;

#[derive(Debug, Args)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub params: SimulateParams,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Without --w1/--w2 or --lambda the threshold policy at the closed-form
/// optimum is simulated.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateParams {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArgs,
    /// Epochs per replica.
    #[arg(long)]
    pub epochs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Warm-up epochs excluded from the estimates (default 1% of --epochs).
    #[arg(long)]
    pub warmup: Option<u64>,
    /// Batches for batch-means standard errors.
    #[arg(long)]
    pub batches: Option<u32>,
    /// Independent replicas pooled in replica order.
    #[arg(long)]
    pub replicas: Option<u32>,
    /// Fixed wait after a first-attempt delivery (requires --w2).
    #[arg(long, requires = "w2")]
    pub w1: Option<f64>,
    /// Fixed wait after a second-attempt delivery (requires --w1).
    #[arg(long, requires = "w1")]
    pub w2: Option<f64>,
    /// Threshold policy with this λ instead of the optimum.
    #[arg(long, conflicts_with_all = ["w1", "w2"])]
    pub lambda: Option<f64>,
}

layered!(SimulateParams { epochs, seed, warmup, batches, replicas, w1, w2, lambda } flatten { design });

impl SimulateParams {
    fn with_defaults(self) -> Self {
        let epochs = self.epochs.unwrap_or(DEFAULT_EPOCHS);
        Self {
            design: self.design.with_defaults(),
            epochs: Some(epochs),
            seed: self.seed.or(Some(0)),
            warmup: self.warmup.or(Some(epochs / 100)),
            batches: self.batches.or(Some(DEFAULT_BATCHES)),
            replicas: self.replicas.or(Some(1)),
            ..self
        }
    }

    fn policy(&self, design: &Design) -> anyhow::Result<PolicyMode> {
        match (self.w1, self.w2, self.lambda) {
            (None, None, None) => {
                let sol = closed_form(&design.scheme, &design.probs)?;
                Ok(PolicyMode::Threshold {
                    lambda: sol.lambda_star,
                })
            }
            (Some(w1), Some(w2), None) => Ok(WaitingPolicy::new(w1, w2)?.into()),
            (None, None, Some(lambda)) => Ok(PolicyMode::Threshold { lambda }),
            _ => Err(UsageError::new(
                "give both --w1 and --w2, or --lambda, but not a mix of them",
            )
            .into()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Analytic {
    pub lambda_star: f64,
    pub region: String,
    /// Analytical average age of the simulated policy.
    pub predicted_avg_aoi: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub l: Option<u32>,
    pub n: u32,
    pub m: u32,
    pub eps: Option<f64>,
    pub convention: Option<String>,
    pub q1: f64,
    pub q2: f64,
    pub policy: PolicyMode,
    pub analytic: Analytic,
    pub stats: SimStats,
    /// `(avg_aoi − predicted) / stderr`; null when the standard error is zero
    /// and the two differ.
    pub z_score: Option<f64>,
}

pub fn simulate(params: &SimulateParams, design: &Design) -> anyhow::Result<SimulateReport> {
    let Design { scheme, probs } = *design;
    let policy = params.policy(design)?;
    let config = SimConfig {
        num_epochs: params.epochs.unwrap_or(DEFAULT_EPOCHS),
        seed: params.seed.unwrap_or(0),
        policy,
        warmup_epochs: params.warmup.unwrap_or(0),
        batches: params.batches.unwrap_or(DEFAULT_BATCHES),
    };
    let stats = run_replicas(&scheme, &probs, &config, params.replicas.unwrap_or(1))?;

    let sol = closed_form(&scheme, &probs)?;
    let waits = match policy {
        PolicyMode::ExplicitWaits { w1, w2 } => WaitingPolicy { w1, w2 },
        PolicyMode::Threshold { lambda } => optimal_waits(lambda, &scheme, &probs),
    };
    let predicted = epoch_objective(&scheme, &probs, &waits).ratio;
    let diff = stats.avg_aoi - predicted;
    let z = if stats.stderr_avg_aoi > 0.0 {
        Some(diff / stats.stderr_avg_aoi)
    } else if diff == 0.0 {
        Some(0.0)
    } else {
        None
    };

    let d = &params.design;
    Ok(SimulateReport {
        l: d.l,
        n: scheme.codeword_len(),
        m: scheme.ir_len(),
        eps: d.eps,
        convention: d.eps.map(|_| d.convention.unwrap_or_default().to_string()),
        q1: probs.q1(),
        q2: probs.q2(),
        policy,
        analytic: Analytic {
            lambda_star: sol.lambda_star,
            region: sol.region.to_string(),
            predicted_avg_aoi: predicted,
        },
        stats,
        z_score: z,
    })
}

pub fn run(cmd: SimulateCmd, config_path: Option<&Path>) -> anyhow::Result<()> {
    let mut params = cmd.params;
    if let Some(path) = config_path {
        params = params.or(config::load(path, "simulate")?);
    }
    let params = params.with_defaults();
    let design = params.design.resolve()?;
    let report = simulate(&params, &design)?;

    let out = cmd.output.out.as_deref();
    emit(out, &to_json(&report)?)?;

    let mut manifest = RunManifest::new("simulate", &params);
    manifest.seed = params.seed;
    manifest.convention = report.convention.as_deref();
    write_manifests(&manifest, cmd.output.manifest.as_deref(), &[out])
}
