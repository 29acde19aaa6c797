//! Per-attempt decoding success probabilities.
//!
//! The concrete model is a binary symmetric channel with an `(n + m, ℓ)` MDS
//! code: the first attempt decodes the punctured `(n, ℓ)` code and the second
//! attempt decodes the full `(n + m, ℓ)` code. An MDS code of length `N`
//! corrects up to `⌊(N − ℓ)/2⌋` bit errors under bounded-distance decoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Code design: `ℓ` data bits, `n`-bit codeword, `m` incremental-redundancy bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HarqScheme {
    data_len: u32,
    codeword_len: u32,
    ir_len: u32,
}

impl HarqScheme {
    pub fn new(data_len: u32, codeword_len: u32, ir_len: u32) -> Result<Self> {
        if data_len == 0 {
            return Err(Error::invalid("data length must be at least 1 bit"));
        }
        if codeword_len < data_len {
            return Err(Error::invalid(format!(
                "codeword length {codeword_len} is shorter than data length {data_len}"
            )));
        }
        Ok(Self {
            data_len,
            codeword_len,
            ir_len,
        })
    }

    /// `ℓ`
    pub fn data_len(&self) -> u32 {
        self.data_len
    }

    /// `n`
    pub fn codeword_len(&self) -> u32 {
        self.codeword_len
    }

    /// `m`
    pub fn ir_len(&self) -> u32 {
        self.ir_len
    }

    /// Correctable errors on the first attempt, `⌊(n − ℓ)/2⌋`.
    pub fn first_radius(&self) -> u32 {
        (self.codeword_len - self.data_len) / 2
    }

    /// Correctable errors on the second attempt, `⌊(n + m − ℓ)/2⌋`.
    pub fn second_radius(&self) -> u32 {
        (self.codeword_len + self.ir_len - self.data_len) / 2
    }

    pub(crate) fn n(&self) -> f64 {
        f64::from(self.codeword_len)
    }

    pub(crate) fn m(&self) -> f64 {
        f64::from(self.ir_len)
    }
}

/// Binary symmetric channel with crossover probability in `(0, ½)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BscParams {
    epsilon: f64,
}

impl BscParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::invalid(format!(
                "crossover probability {epsilon} must lie in (0, 0.5)"
            )));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Lower limit of the error-count sums that define `q1` and `q2`.
///
/// Bounded-distance decoding succeeds whenever the number of bit errors is at
/// most the correctable radius, including the error-free case. The
/// `ZeroExclusive` variant starts the sums at one error instead.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumConvention {
    #[default]
    ZeroInclusive,
    ZeroExclusive,
}

impl SumConvention {
    pub fn include_zero_errors(self) -> bool {
        matches!(self, SumConvention::ZeroInclusive)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SumConvention::ZeroInclusive => "zero-inclusive",
            SumConvention::ZeroExclusive => "zero-exclusive",
        }
    }
}

impl std::fmt::Display for SumConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SumConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-inclusive" => Ok(SumConvention::ZeroInclusive),
            "zero-exclusive" => Ok(SumConvention::ZeroExclusive),
            other => Err(Error::invalid(format!(
                "unknown convention {other:?} (expected zero-inclusive or zero-exclusive)"
            ))),
        }
    }
}

/// Success probabilities of the first and second decoding attempts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttemptProbs {
    q1: f64,
    q2: f64,
}

impl AttemptProbs {
    pub fn new(q1: f64, q2: f64) -> Result<Self> {
        for (name, q) in [("q1", q1), ("q2", q2)] {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::invalid(format!("{name} = {q} must lie in (0, 1]")));
            }
        }
        Ok(Self { q1, q2 })
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn q2(&self) -> f64 {
        self.q2
    }

    /// Probability that a packet is delivered by either attempt, `q1 + q2 − q1·q2`.
    pub fn delivery(&self) -> f64 {
        // Factored so that q1 = 1 gives exactly 1.
        self.q1 + self.q2 * (1.0 - self.q1)
    }
}

/// Passthrough constructor for arbitrary `(q1, q2)`.
pub fn explicit_probs(q1: f64, q2: f64) -> Result<AttemptProbs> {
    AttemptProbs::new(q1, q2)
}

/// `P(B ≤ k)` for `B ~ Binomial(n_trials, p)`.
pub fn binomial_cdf(k: u32, n_trials: u32, p: f64) -> Result<f64> {
    if k > n_trials {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the number of trials {n_trials}"
        )));
    }
    check_probability(p)?;
    Ok(binomial_range_sum(0, k, n_trials, p))
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "probability {p} must lie in [0, 1]"
        )));
    }
    Ok(())
}

/// `Σ_{l=lo}^{hi} C(n, l) p^l (1−p)^{n−l}`, with `hi` clipped to `n`.
///
/// Terms are generated in log space from the ratio
/// `t(l+1)/t(l) = (n−l)/(l+1) · p/(1−p)` and combined with a log-sum-exp, so
/// neither the binomial coefficients nor `(1−p)^n` overflow or underflow for
/// large `n`.
fn binomial_range_sum(lo: u32, hi: u32, n: u32, p: f64) -> f64 {
    let hi = hi.min(n);
    if lo > hi {
        return 0.0;
    }
    if p == 0.0 {
        return if lo == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if hi == n { 1.0 } else { 0.0 };
    }

    let ln_q = (-p).ln_1p();
    let ln_odds = p.ln() - ln_q;
    let mut ln_term = f64::from(n) * ln_q;
    let mut ln_terms = Vec::with_capacity((hi - lo + 1) as usize);
    for l in 0..=hi {
        if l >= lo {
            ln_terms.push(ln_term);
        }
        ln_term += (f64::from(n - l) / f64::from(l + 1)).ln() + ln_odds;
    }

    let peak = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return 0.0;
    }
    let scaled: f64 = ln_terms.iter().map(|&t| (t - peak).exp()).sum();
    (peak + scaled.ln()).exp().clamp(0.0, 1.0)
}

/// `(q1, q2)` for the punctured-MDS design over a BSC.
///
/// Fails with [`Error::Infeasible`] when either probability is zero, e.g.
/// `n = ℓ` under [`SumConvention::ZeroExclusive`].
pub fn bsc_mds_probs(
    scheme: &HarqScheme,
    bsc: BscParams,
    convention: SumConvention,
) -> Result<AttemptProbs> {
    let (q1, q2) = raw_bsc_mds_probs(scheme, bsc, convention);
    if q1 <= 0.0 || q2 <= 0.0 {
        return Err(Error::Infeasible(format!(
            "ℓ={} n={} m={} ε={}: q1={q1}, q2={q2} ({convention})",
            scheme.data_len, scheme.codeword_len, scheme.ir_len, bsc.epsilon
        )));
    }
    AttemptProbs::new(q1, q2)
}

/// Same sums as [`bsc_mds_probs`] without the feasibility check; used to
/// report infeasible grid cells.
pub(crate) fn raw_bsc_mds_probs(
    scheme: &HarqScheme,
    bsc: BscParams,
    convention: SumConvention,
) -> (f64, f64) {
    let lo = if convention.include_zero_errors() {
        0
    } else {
        1
    };
    let eps = bsc.epsilon;
    let q1 = binomial_range_sum(lo, scheme.first_radius(), scheme.codeword_len, eps);
    let q2 = binomial_range_sum(
        lo,
        scheme.second_radius(),
        scheme.codeword_len + scheme.ir_len,
        eps,
    );
    (q1, q2)
}
