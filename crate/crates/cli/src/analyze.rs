use std::path::Path;

use clap::Args;
use harq_aoi::analysis::DEFAULT_BISECTION_TOL;
use harq_aoi::{closed_form, epoch_moments, solve_lambda_bisection, Error};
use serde::{Deserialize, Serialize};

use crate::config::{self, layered, Layered};
use crate::design::{Design, DesignArgs};
use crate::manifest::RunManifest;
use crate::output::{emit, to_json, write_manifests, OutputArgs};

/// Largest allowed gap between the closed-form optimum and the bisection root.
/// Relative slack covers ages so large that 1e-8 is below their resolution.
pub fn agreement_tol(lambda: f64) -> f64 {
    1e-8_f64.max(1e-13 * lambda.abs())
}

#[derive(Debug, Args)]
pub struct AnalyzeCmd {
    #[command(flatten)]
    pub params: AnalyzeParams,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzeParams {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArgs,
    /// Bisection tolerance for the self-check root.
    #[arg(long)]
    pub tol: Option<f64>,
}

layered!(AnalyzeParams { tol } flatten { design });

impl AnalyzeParams {
    fn with_defaults(self) -> Self {
        Self {
            design: self.design.with_defaults(),
            tol: self.tol.or(Some(DEFAULT_BISECTION_TOL)),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub l: Option<u32>,
    pub n: u32,
    pub m: u32,
    pub eps: Option<f64>,
    pub convention: Option<String>,
    pub q1: f64,
    pub q2: f64,
    pub mean_x: f64,
    pub mean_x2: f64,
    pub mean_y: f64,
    pub prob_y_n: f64,
    pub c_xy: f64,
    pub region: String,
    pub lambda_star: f64,
    pub w1: f64,
    pub w2: f64,
    pub lambda_bisection: f64,
}

/// Closed form plus the bisection cross-check; disagreement is an error.
pub fn analyze(params: &AnalyzeParams, design: &Design) -> anyhow::Result<AnalyzeReport> {
    let Design { scheme, probs } = *design;
    let tol = params.tol.unwrap_or(DEFAULT_BISECTION_TOL);
    let mo = epoch_moments(&scheme, &probs);
    let sol = closed_form(&scheme, &probs)?;
    let bis = solve_lambda_bisection(&scheme, &probs, tol)?;
    if (bis - sol.lambda_star).abs() > agreement_tol(sol.lambda_star).max(tol) {
        return Err(Error::Consistency(format!(
            "closed form λ* = {} but bisection root = {bis}",
            sol.lambda_star
        ))
        .into());
    }

    let d = &params.design;
    Ok(AnalyzeReport {
        l: d.l,
        n: scheme.codeword_len(),
        m: scheme.ir_len(),
        eps: d.eps,
        convention: d.eps.map(|_| d.convention.unwrap_or_default().to_string()),
        q1: probs.q1(),
        q2: probs.q2(),
        mean_x: mo.mean_x,
        mean_x2: mo.mean_x2,
        mean_y: mo.mean_y,
        prob_y_n: mo.prob_y_n,
        c_xy: sol.c_xy,
        region: sol.region.to_string(),
        lambda_star: sol.lambda_star,
        w1: sol.policy.w1,
        w2: sol.policy.w2,
        lambda_bisection: bis,
    })
}

pub fn run(cmd: AnalyzeCmd, config_path: Option<&Path>) -> anyhow::Result<()> {
    let mut params = cmd.params;
    if let Some(path) = config_path {
        params = params.or(config::load(path, "analyze")?);
    }
    let params = params.with_defaults();
    let design = params.design.resolve()?;
    let report = analyze(&params, &design)?;

    let out = cmd.output.out.as_deref();
    emit(out, &to_json(&report)?)?;

    let mut manifest = RunManifest::new("analyze", &params);
    manifest.convention = report.convention.as_deref();
    write_manifests(&manifest, cmd.output.manifest.as_deref(), &[out])
}
