//! `optimize` and `sweep`: table outputs with the fixed header
//! `l,eps,n,m,q1,q2,lambda_star,region,w1,w2`.

use std::path::{Path, PathBuf};

use clap::Args;
use harq_aoi::optimizer::{DEFAULT_M_RANGE, DEFAULT_N_SPAN};
use harq_aoi::{
    grid_search, sweep_epsilon, BscParams, GridRow, GridSpec, SumConvention, SweepSpec,
};
use serde::{Deserialize, Serialize};

use crate::config::{self, layered, Layered};
use crate::manifest::RunManifest;
use crate::output::{csv_num, emit, to_json, write_manifests};
use crate::UsageError;

pub const CSV_HEADER: [&str; 10] = [
    "l",
    "eps",
    "n",
    "m",
    "q1",
    "q2",
    "lambda_star",
    "region",
    "w1",
    "w2",
];

pub const DEFAULT_EPS_GRID: [f64; 9] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45];
pub const DEFAULT_DATA_LENS: [u32; 3] = [10, 15, 20];

fn table_row(l: u32, eps: f64, row: &GridRow) -> [String; 10] {
    let (region, lambda, w1, w2) = match row.solution {
        Some(s) => (
            s.region.to_string(),
            csv_num(s.lambda_star),
            csv_num(s.policy.w1),
            csv_num(s.policy.w2),
        ),
        None => (
            "infeasible".into(),
            String::new(),
            String::new(),
            String::new(),
        ),
    };
    [
        l.to_string(),
        eps.to_string(),
        row.n.to_string(),
        row.m.to_string(),
        csv_num(row.q1),
        csv_num(row.q2),
        lambda,
        region,
        w1,
        w2,
    ]
}

fn to_csv(rows: impl IntoIterator<Item = [String; 10]>) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Debug, Args)]
pub struct OptimizeCmd {
    #[command(flatten)]
    pub params: OptimizeParams,
    /// Write all grid rows as CSV here (default stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the best design as JSON here (default: summary on stderr).
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the run manifest here (default: next to each output file).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeParams {
    /// Data length ℓ in bits.
    #[arg(long = "l")]
    pub l: Option<u32>,
    /// BSC crossover probability in (0, 0.5).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Smallest codeword length (default ℓ).
    #[arg(long)]
    pub n_min: Option<u32>,
    /// Largest codeword length (default ℓ + 60).
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub m_min: Option<u32>,
    #[arg(long)]
    pub m_max: Option<u32>,
    #[arg(long)]
    pub convention: Option<SumConvention>,
}

layered!(OptimizeParams {
    l,
    eps,
    n_min,
    n_max,
    m_min,
    m_max,
    convention
});

impl OptimizeParams {
    fn with_defaults(self) -> anyhow::Result<Self> {
        let l = self.l.ok_or_else(|| UsageError::new("missing --l"))?;
        Ok(Self {
            l: Some(l),
            eps: Some(self.eps.ok_or_else(|| UsageError::new("missing --eps"))?),
            n_min: self.n_min.or(Some(l)),
            n_max: self.n_max.or(Some(l.saturating_add(DEFAULT_N_SPAN))),
            m_min: self.m_min.or(Some(DEFAULT_M_RANGE.0)),
            m_max: self.m_max.or(Some(DEFAULT_M_RANGE.1)),
            convention: self.convention.or(Some(SumConvention::default())),
        })
    }

    fn grid_spec(&self) -> anyhow::Result<GridSpec> {
        let get = |v: Option<u32>| v.ok_or_else(|| UsageError::new("incomplete grid"));
        Ok(GridSpec {
            data_len: get(self.l)?,
            n_range: (get(self.n_min)?, get(self.n_max)?),
            m_range: (get(self.m_min)?, get(self.m_max)?),
            channel: BscParams::new(self.eps.unwrap_or(f64::NAN))?,
            convention: self.convention.unwrap_or_default(),
        })
    }
}

#[derive(Debug, Serialize)]
pub struct OptimizeReport {
    pub l: u32,
    pub eps: f64,
    pub convention: String,
    pub n: u32,
    pub m: u32,
    pub q1: f64,
    pub q2: f64,
    pub lambda_star: f64,
    pub region: String,
    pub w1: f64,
    pub w2: f64,
    /// Best zero-wait age; null when no cell is in R1.
    pub lambda_bar_star: Option<f64>,
    /// Best waiting age; null when no cell is in R2.
    pub lambda_underbar_star: Option<f64>,
    pub rho_star: f64,
    pub cells: usize,
    pub feasible_cells: usize,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn run_optimize(cmd: OptimizeCmd, config_path: Option<&Path>) -> anyhow::Result<()> {
    let mut params = cmd.params;
    if let Some(path) = config_path {
        params = params.or(config::load(path, "optimize")?);
    }
    let params = params.with_defaults()?;
    let spec = params.grid_spec()?;
    let res = grid_search(&spec)?;

    let eps = spec.channel.epsilon();
    let csv = to_csv(res.rows.iter().map(|r| table_row(spec.data_len, eps, r)))?;
    let best = res.best.solution.expect("best cell is feasible");
    let report = OptimizeReport {
        l: spec.data_len,
        eps,
        convention: spec.convention.to_string(),
        n: res.best.n,
        m: res.best.m,
        q1: res.best.q1,
        q2: res.best.q2,
        lambda_star: best.lambda_star,
        region: best.region.to_string(),
        w1: best.policy.w1,
        w2: best.policy.w2,
        lambda_bar_star: finite(res.lambda_bar_star),
        lambda_underbar_star: finite(res.lambda_underbar_star),
        rho_star: res.rho_star(),
        cells: res.rows.len(),
        feasible_cells: res.rows.iter().filter(|r| r.solution.is_some()).count(),
    };

    emit(cmd.csv.as_deref(), &csv)?;
    match cmd.json.as_deref() {
        Some(path) => emit(Some(path), &to_json(&report)?)?,
        None => eprintln!(
            "best: n={} m={} lambda_star={} region={}",
            report.n, report.m, report.lambda_star, report.region
        ),
    }

    let mut manifest = RunManifest::new("optimize", &params);
    manifest.convention = Some(spec.convention.as_str());
    write_manifests(
        &manifest,
        cmd.manifest.as_deref(),
        &[cmd.csv.as_deref(), cmd.json.as_deref()],
    )
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub params: SweepParams,
    /// Write the table as CSV here (default stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the run manifest here (default: next to the CSV file).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepParams {
    /// Data lengths, comma separated (default 10,15,20).
    #[arg(long = "l", value_delimiter = ',')]
    pub l: Option<Vec<u32>>,
    /// Crossover probabilities, comma separated (default 0.05,0.1,...,0.45).
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Codeword lengths span [ℓ, ℓ + n_span].
    #[arg(long)]
    pub n_span: Option<u32>,
    #[arg(long)]
    pub m_min: Option<u32>,
    #[arg(long)]
    pub m_max: Option<u32>,
    #[arg(long)]
    pub convention: Option<SumConvention>,
}

layered!(SweepParams {
    l,
    eps,
    n_span,
    m_min,
    m_max,
    convention
});

impl SweepParams {
    fn with_defaults(self) -> Self {
        Self {
            l: self.l.or_else(|| Some(DEFAULT_DATA_LENS.to_vec())),
            eps: self.eps.or_else(|| Some(DEFAULT_EPS_GRID.to_vec())),
            n_span: self.n_span.or(Some(DEFAULT_N_SPAN)),
            m_min: self.m_min.or(Some(DEFAULT_M_RANGE.0)),
            m_max: self.m_max.or(Some(DEFAULT_M_RANGE.1)),
            convention: self.convention.or(Some(SumConvention::default())),
        }
    }

    fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            data_lens: self.l.clone().unwrap_or_default(),
            eps_grid: self.eps.clone().unwrap_or_default(),
            n_span: self.n_span.unwrap_or(DEFAULT_N_SPAN),
            m_range: (
                self.m_min.unwrap_or(DEFAULT_M_RANGE.0),
                self.m_max.unwrap_or(DEFAULT_M_RANGE.1),
            ),
            convention: self.convention.unwrap_or_default(),
        }
    }
}

pub fn run_sweep(cmd: SweepCmd, config_path: Option<&Path>) -> anyhow::Result<()> {
    let mut params = cmd.params;
    if let Some(path) = config_path {
        params = params.or(config::load(path, "sweep")?);
    }
    let params = params.with_defaults();
    let spec = params.sweep_spec();
    let rows = sweep_epsilon(&spec)?;

    let table = rows.iter().map(|r| match &r.outcome {
        Ok(best) => table_row(r.data_len, r.epsilon, best),
        Err(e) => {
            eprintln!("ℓ={} ε={}: {e}", r.data_len, r.epsilon);
            let mut cells: [String; 10] = Default::default();
            cells[0] = r.data_len.to_string();
            cells[1] = r.epsilon.to_string();
            cells[7] = match e {
                harq_aoi::Error::Infeasible(_) => "infeasible".into(),
                _ => "error".into(),
            };
            cells
        }
    });
    emit(cmd.csv.as_deref(), &to_csv(table)?)?;

    let mut manifest = RunManifest::new("sweep", &params);
    manifest.convention = Some(spec.convention.as_str());
    write_manifests(&manifest, cmd.manifest.as_deref(), &[cmd.csv.as_deref()])
}
