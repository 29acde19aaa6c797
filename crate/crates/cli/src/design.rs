use clap::Args;
use harq_aoi::{bsc_mds_probs, explicit_probs, AttemptProbs, BscParams, HarqScheme, SumConvention};
use serde::{Deserialize, Serialize};

use crate::config::layered;
use crate::UsageError;

/// A single code design and the channel it is used on.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignArgs {
    /// Data length ℓ in bits (required with --eps).
    #[arg(long = "l")]
    pub l: Option<u32>,
    /// Codeword length n in bits.
    #[arg(long)]
    pub n: Option<u32>,
    /// Incremental-redundancy length m in bits.
    #[arg(long)]
    pub m: Option<u32>,
    /// BSC crossover probability in (0, 0.5).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Explicit first-attempt success probability (with --q2, instead of --eps).
    #[arg(long)]
    pub q1: Option<f64>,
    /// Explicit second-attempt success probability.
    #[arg(long)]
    pub q2: Option<f64>,
    /// Error-count summation convention for the BSC model.
    #[arg(long)]
    pub convention: Option<SumConvention>,
}

layered!(DesignArgs {
    l,
    n,
    m,
    eps,
    q1,
    q2,
    convention
});

#[derive(Debug, Clone, Copy)]
pub struct Design {
    pub scheme: HarqScheme,
    pub probs: AttemptProbs,
}

impl DesignArgs {
    /// Fills the convention default when a BSC channel is used.
    pub fn with_defaults(mut self) -> Self {
        if self.eps.is_some() && self.convention.is_none() {
            self.convention = Some(SumConvention::default());
        }
        self
    }

    pub fn resolve(&self) -> anyhow::Result<Design> {
        let n = self.n.ok_or_else(|| UsageError::new("missing --n"))?;
        let m = self.m.ok_or_else(|| UsageError::new("missing --m"))?;
        match (self.eps, self.q1, self.q2) {
            (Some(eps), None, None) => {
                let l = self
                    .l
                    .ok_or_else(|| UsageError::new("--eps requires --l"))?;
                let scheme = HarqScheme::new(l, n, m)?;
                let convention = self.convention.unwrap_or_default();
                let probs = bsc_mds_probs(&scheme, BscParams::new(eps)?, convention)?;
                Ok(Design { scheme, probs })
            }
            (None, Some(q1), Some(q2)) => {
                let scheme = HarqScheme::new(self.l.unwrap_or(1), n, m)?;
                Ok(Design {
                    scheme,
                    probs: explicit_probs(q1, q2)?,
                })
            }
            _ => Err(UsageError::new(
                "specify the channel with either --eps or both --q1 and --q2",
            )
            .into()),
        }
    }
}
