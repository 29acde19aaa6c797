//! Grid search over code designs `(n, m)` for a BSC with punctured MDS codes.
//!
//! Every cell is solved in closed form. The best design is the minimum over
//! all feasible cells, which also equals the smaller of the best zero-wait
//! (`R1`) design and the best waiting (`R2`) design.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{closed_form, AgeSolution, Region};
use crate::channel::{raw_bsc_mds_probs, AttemptProbs, BscParams, HarqScheme, SumConvention};
use crate::error::{Error, Result};

/// Two designs whose ages differ by less than this are considered tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_N_SPAN: u32 = 60;
pub const DEFAULT_M_RANGE: (u32, u32) = (0, 200);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub data_len: u32,
    /// Inclusive codeword-length range.
    pub n_range: (u32, u32),
    /// Inclusive IR-length range.
    pub m_range: (u32, u32),
    pub channel: BscParams,
    pub convention: SumConvention,
}

impl GridSpec {
    /// `n ∈ [ℓ, ℓ + 60]`, `m ∈ [0, 200]`.
    pub fn with_defaults(data_len: u32, channel: BscParams, convention: SumConvention) -> Self {
        Self {
            data_len,
            n_range: (data_len, data_len.saturating_add(DEFAULT_N_SPAN)),
            m_range: DEFAULT_M_RANGE,
            channel,
            convention,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n_lo, n_hi) = self.n_range;
        let (m_lo, m_hi) = self.m_range;
        if self.data_len == 0 {
            return Err(Error::invalid("data length must be at least 1 bit"));
        }
        if n_lo < self.data_len {
            return Err(Error::invalid(format!(
                "n range starts at {n_lo}, below the data length {}",
                self.data_len
            )));
        }
        if n_lo > n_hi || m_lo > m_hi {
            return Err(Error::invalid(format!(
                "empty grid: n ∈ [{n_lo}, {n_hi}], m ∈ [{m_lo}, {m_hi}]"
            )));
        }
        if n_hi.checked_add(m_hi).is_none() {
            return Err(Error::invalid("n + m overflows"));
        }
        Ok(())
    }
}

/// One evaluated cell. `solution` is `None` for infeasible cells (`q1` or `q2` zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub n: u32,
    pub m: u32,
    pub q1: f64,
    pub q2: f64,
    pub solution: Option<AgeSolution>,
}

impl GridRow {
    /// Optimal age of the cell, `+∞` when infeasible.
    pub fn lambda_star(&self) -> f64 {
        self.solution.map_or(f64::INFINITY, |s| s.lambda_star)
    }

    pub fn region(&self) -> Option<Region> {
        self.solution.map(|s| s.region)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GridRow,
    /// All cells in `(n, m)` lexicographic order.
    pub rows: Vec<GridRow>,
    /// Best age among zero-wait (`R1`) cells, `+∞` if there are none.
    pub lambda_bar_star: f64,
    /// Best age among waiting (`R2`) cells, `+∞` if there are none.
    pub lambda_underbar_star: f64,
}

impl GridResult {
    /// `ρ* = min{λ̄*, λ̲*}`
    pub fn rho_star(&self) -> f64 {
        self.lambda_bar_star.min(self.lambda_underbar_star)
    }
}

/// Evaluates every cell of the grid and picks the best design.
///
/// Ties within [`TIE_TOLERANCE`] go to the smaller `n`, then the smaller `m`.
pub fn grid_search(spec: &GridSpec) -> Result<GridResult> {
    spec.validate()?;
    let (n_lo, n_hi) = spec.n_range;
    let (m_lo, m_hi) = spec.m_range;

    let cells: Vec<(u32, u32)> = (n_lo..=n_hi)
        .flat_map(|n| (m_lo..=m_hi).map(move |m| (n, m)))
        .collect();

    let rows = cells
        .into_par_iter()
        .map(|(n, m)| evaluate_cell(spec, n, m))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<GridRow> = None;
    let mut lambda_bar_star = f64::INFINITY;
    let mut lambda_underbar_star = f64::INFINITY;
    for row in &rows {
        let Some(sol) = row.solution else { continue };
        match sol.region {
            Region::R1 => lambda_bar_star = lambda_bar_star.min(sol.lambda_star),
            _ => lambda_underbar_star = lambda_underbar_star.min(sol.lambda_star),
        }
        if best.is_none_or(|b| sol.lambda_star < b.lambda_star() - TIE_TOLERANCE) {
            best = Some(*row);
        }
    }

    let best = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "every cell of ℓ={} n∈[{n_lo},{n_hi}] m∈[{m_lo},{m_hi}] ε={} is infeasible",
            spec.data_len,
            spec.channel.epsilon()
        ))
    })?;

    Ok(GridResult {
        best,
        rows,
        lambda_bar_star,
        lambda_underbar_star,
    })
}

fn evaluate_cell(spec: &GridSpec, n: u32, m: u32) -> Result<GridRow> {
    let scheme = HarqScheme::new(spec.data_len, n, m)?;
    let (q1, q2) = raw_bsc_mds_probs(&scheme, spec.channel, spec.convention);
    let solution = if q1 > 0.0 && q2 > 0.0 {
        Some(closed_form(&scheme, &AttemptProbs::new(q1, q2)?)?)
    } else {
        None
    };
    Ok(GridRow {
        n,
        m,
        q1,
        q2,
        solution,
    })
}

/// Crossover-probability sweep with both `n` and `m` optimized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub data_lens: Vec<u32>,
    pub eps_grid: Vec<f64>,
    /// For each `ℓ`, `n` ranges over `[ℓ, ℓ + n_span]`.
    pub n_span: u32,
    pub m_range: (u32, u32),
    pub convention: SumConvention,
}

impl SweepSpec {
    pub fn new(data_lens: Vec<u32>, eps_grid: Vec<f64>) -> Self {
        Self {
            data_lens,
            eps_grid,
            n_span: DEFAULT_N_SPAN,
            m_range: DEFAULT_M_RANGE,
            convention: SumConvention::default(),
        }
    }
}

/// Best design for one `(ℓ, ε)` pair, or the error that grid search raised.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub data_len: u32,
    pub epsilon: f64,
    pub outcome: Result<GridRow>,
}

impl SweepRow {
    pub fn rho_star(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(GridRow::lambda_star)
    }
}

/// Runs one grid search per `(ℓ, ε)`, ordered by `ℓ` then `ε` as given.
///
/// Per-cell failures are recorded in the row; only an invalid sweep
/// specification aborts.
pub fn sweep_epsilon(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.data_lens.is_empty() || spec.eps_grid.is_empty() {
        return Err(Error::invalid("sweep needs at least one ℓ and one ε"));
    }
    let channels = spec
        .eps_grid
        .iter()
        .map(|&e| BscParams::new(e))
        .collect::<Result<Vec<_>>>()?;

    let pairs: Vec<(u32, BscParams)> = spec
        .data_lens
        .iter()
        .flat_map(|&l| channels.iter().map(move |&c| (l, c)))
        .collect();

    Ok(pairs
        .into_par_iter()
        .map(|(l, channel)| {
            let grid = GridSpec {
                data_len: l,
                n_range: (l, l.saturating_add(spec.n_span)),
                m_range: spec.m_range,
                channel,
                convention: spec.convention,
            };
            SweepRow {
                data_len: l,
                epsilon: channel.epsilon(),
                outcome: grid_search(&grid).map(|r| r.best),
            }
        })
        .collect())
}
