//! Closed-form age analysis for stationary policies with two decoding attempts.
//!
//! An epoch runs between two successful deliveries. It starts with age `Y`
//! (either `n` or `n + m`, depending on which attempt delivered the previous
//! update), idles for `w(Y)`, and then keeps the channel busy for `X` until the
//! next delivery. The long-term average age is `E[Q] / E[L]` where `Q` is the
//! area under the age curve during one epoch and `L = w(Y) + X` its length.
//!
//! The ratio is minimized through the parametric problem
//! `p(λ) = min_w E[Q] − λ E[L]`, which is strictly decreasing in `λ`; the
//! optimal age is its unique root. For fixed `λ` the minimizing waits have
//! the threshold form `w(y) = [λ − E[X] − y]⁺`.

use serde::{Deserialize, Serialize};

use crate::channel::{AttemptProbs, HarqScheme};
use crate::error::{Error, Result};

/// Moments of the busy period `X` and the epoch-start age `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMoments {
    pub mean_x: f64,
    pub mean_x2: f64,
    pub mean_y: f64,
    /// `P(Y = n)`, the fraction of deliveries made by the first attempt.
    pub prob_y_n: f64,
    /// `q1 + q2 − q1·q2`
    pub denom: f64,
}

impl EpochMoments {
    /// Average age under the zero-wait policy, `E[Y] + ½E[X²]/E[X]`.
    pub fn zero_wait_age(&self) -> f64 {
        self.mean_y + 0.5 * self.mean_x2 / self.mean_x
    }
}

/// Idle time after a delivery by the first (`w1`) or second (`w2`) attempt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WaitingPolicy {
    pub w1: f64,
    pub w2: f64,
}

impl WaitingPolicy {
    pub const ZERO: WaitingPolicy = WaitingPolicy { w1: 0.0, w2: 0.0 };

    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        if !(w1 >= 0.0 && w2 >= 0.0 && w1.is_finite() && w2.is_finite()) {
            return Err(Error::invalid(format!(
                "waiting times must be finite and non-negative (w1={w1}, w2={w2})"
            )));
        }
        Ok(Self { w1, w2 })
    }

    pub fn is_zero(&self) -> bool {
        self.w1 == 0.0 && self.w2 == 0.0
    }
}

/// Position of an age value relative to the two waiting thresholds.
///
/// - `R1`: `λ ≤ E[X] + n`, no waiting.
/// - `R2`: `E[X] + n < λ ≤ E[X] + n + m`, wait only after a first-attempt delivery.
/// - `R3`: `λ > E[X] + n + m`, wait after every delivery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    R1,
    R2,
    R3,
}

impl Region {
    pub fn classify(lambda: f64, moments: &EpochMoments, scheme: &HarqScheme) -> Region {
        let first = moments.mean_x + scheme.n();
        if lambda <= first {
            Region::R1
        } else if lambda <= first + scheme.m() {
            Region::R2
        } else {
            Region::R3
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::R1 => "R1",
            Region::R2 => "R2",
            Region::R3 => "R3",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimal age of a fixed `(n, m)` design together with its waiting policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeSolution {
    pub lambda_star: f64,
    pub region: Region,
    pub policy: WaitingPolicy,
    /// `E[X]² + n·E[X] − ½E[X²] − E[Y]·E[X]`; negative exactly when waiting pays off.
    pub c_xy: f64,
}

/// Components of the age objective for a given waiting policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochObjective {
    /// `E[Q]`, expected age area per epoch.
    pub mean_q: f64,
    /// `E[L]`, expected epoch length.
    pub mean_l: f64,
    /// `E[Q] / E[L]`, the long-term average age.
    pub ratio: f64,
}

/// Busy-period masses for the `j`-th packet of an epoch.
///
/// Returns `(P(X = jn + (j−1)m), P(X = jn + jm))`: the first value is the
/// probability that the first `j − 1` packets failed both attempts and the
/// `j`-th is decoded on its first attempt; the second that it is decoded on
/// its second attempt.
pub fn busy_pmf(probs: &AttemptProbs, j: u32) -> Result<(f64, f64)> {
    if j == 0 {
        return Err(Error::invalid("packet index j must be at least 1"));
    }
    let (q1, q2) = (probs.q1(), probs.q2());
    let fail1 = 1.0 - q1;
    let both_fail = fail1 * (1.0 - q2);
    let prior = both_fail.powf(f64::from(j - 1));
    Ok((prior * q1, prior * fail1 * q2))
}

pub fn epoch_moments(scheme: &HarqScheme, probs: &AttemptProbs) -> EpochMoments {
    let (n, m) = (scheme.n(), scheme.m());
    let (q1, q2) = (probs.q1(), probs.q2());
    let denom = probs.delivery();
    let fail1 = 1.0 - q1;

    let mean_x = (n + m * fail1) / denom;
    let nm = n + m;
    let mean_x2 = (nm * nm * (2.0 - q1 - q2 + q1 * q2) - 2.0 * m * nm * q1) / (denom * denom)
        + m * m * q1 / denom;
    let mean_y = n + m * fail1 * q2 / denom;
    let prob_y_n = q1 / denom;

    EpochMoments {
        mean_x,
        mean_x2,
        mean_y,
        prob_y_n,
        denom,
    }
}

pub fn epoch_objective(
    scheme: &HarqScheme,
    probs: &AttemptProbs,
    policy: &WaitingPolicy,
) -> EpochObjective {
    objective_with(&epoch_moments(scheme, probs), scheme, probs, policy)
}

fn objective_with(
    mo: &EpochMoments,
    scheme: &HarqScheme,
    probs: &AttemptProbs,
    policy: &WaitingPolicy,
) -> EpochObjective {
    let (n, m) = (scheme.n(), scheme.m());
    let q1 = probs.q1();
    let second = (1.0 - q1) * probs.q2();
    let (w1, w2) = (policy.w1, policy.w2);

    let mean_w = (q1 * w1 + second * w2) / mo.denom;
    let mean_w2 = (q1 * w1 * w1 + second * w2 * w2) / mo.denom;
    let mean_yw = (q1 * w1 * n + second * w2 * (n + m)) / mo.denom;

    let mean_l = mo.mean_x + mean_w;
    let mean_q =
        mean_yw + mo.mean_y * mo.mean_x + 0.5 * mo.mean_x2 + mo.mean_x * mean_w + 0.5 * mean_w2;

    EpochObjective {
        mean_q,
        mean_l,
        ratio: mean_q / mean_l,
    }
}

/// Threshold waits minimizing `E[Q] − λE[L]`: `w(y) = [λ − E[X] − y]⁺`.
pub fn optimal_waits(lambda: f64, scheme: &HarqScheme, probs: &AttemptProbs) -> WaitingPolicy {
    waits_with(lambda, &epoch_moments(scheme, probs), scheme)
}

fn waits_with(lambda: f64, mo: &EpochMoments, scheme: &HarqScheme) -> WaitingPolicy {
    let threshold = lambda - mo.mean_x;
    WaitingPolicy {
        w1: (threshold - scheme.n()).max(0.0),
        w2: (threshold - scheme.n() - scheme.m()).max(0.0),
    }
}

/// `p(λ) = E[Q] − λE[L]` evaluated at the threshold waits for `λ`.
pub fn p_of_lambda(lambda: f64, scheme: &HarqScheme, probs: &AttemptProbs) -> f64 {
    p_with(lambda, &epoch_moments(scheme, probs), scheme, probs)
}

fn p_with(lambda: f64, mo: &EpochMoments, scheme: &HarqScheme, probs: &AttemptProbs) -> f64 {
    let policy = waits_with(lambda, mo, scheme);
    let obj = objective_with(mo, scheme, probs, &policy);
    obj.mean_q - lambda * obj.mean_l
}

pub const DEFAULT_BISECTION_TOL: f64 = 1e-10;

/// Root of `p(λ)` by bisection.
///
/// The bracket is `[E[X], λ₀ + 1]` where `λ₀` is the zero-wait age: the
/// optimum always exceeds `E[X]`, and the zero-wait policy is feasible so the
/// optimum cannot exceed `λ₀`. Returns the midpoint of the final bracket.
pub fn solve_lambda_bisection(scheme: &HarqScheme, probs: &AttemptProbs, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!("tolerance {tol} must be positive")));
    }
    let mo = epoch_moments(scheme, probs);
    let p = |lambda: f64| p_with(lambda, &mo, scheme, probs);

    let mut lo = mo.mean_x;
    let mut hi = mo.zero_wait_age() + 1.0;
    let (p_lo, p_hi) = (p(lo), p(hi));
    if !(p_lo > 0.0 && p_hi < 0.0) {
        return Err(Error::Consistency(format!(
            "p(λ) does not change sign on [{lo}, {hi}]: p(lo)={p_lo}, p(hi)={p_hi}"
        )));
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p_mid = p(mid);
        if p_mid == 0.0 {
            return Ok(mid);
        } else if p_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Optimal age of a fixed design in closed form.
///
/// If `n ≥ m·√(1 − q1)` the zero-wait policy is optimal and the age is
/// `E[Y] + ½E[X²]/E[X]`. Otherwise the optimum waits only after first-attempt
/// deliveries, with `w1` the positive root of
/// `½α·w² + E[X]·w + C_XY = 0`, `α = q1/(q1 + q2 − q1q2)`.
pub fn closed_form(scheme: &HarqScheme, probs: &AttemptProbs) -> Result<AgeSolution> {
    let mo = epoch_moments(scheme, probs);
    let (n, m) = (scheme.n(), scheme.m());
    let c_xy = mo.mean_x * mo.mean_x + n * mo.mean_x - 0.5 * mo.mean_x2 - mo.mean_y * mo.mean_x;

    if n >= m * (1.0 - probs.q1()).sqrt() {
        return Ok(AgeSolution {
            lambda_star: mo.zero_wait_age(),
            region: Region::R1,
            policy: WaitingPolicy::ZERO,
            c_xy,
        });
    }

    let alpha = probs.q1() / mo.denom;
    let disc = mo.mean_x * mo.mean_x - 2.0 * alpha * c_xy;
    // Written so that NaN also fails.
    if !(disc >= 0.0 && c_xy < 0.0) {
        return Err(Error::Consistency(format!(
            "waiting branch requires C_XY < 0 and a non-negative discriminant \
             (C_XY={c_xy}, discriminant={disc})"
        )));
    }
    // (√disc − E[X])/α rewritten to avoid cancellation when α·C_XY ≪ E[X]².
    let w1 = -2.0 * c_xy / (disc.sqrt() + mo.mean_x);
    let lambda_star = mo.mean_x + n + w1;
    let policy = waits_with(lambda_star, &mo, scheme);

    Ok(AgeSolution {
        lambda_star,
        region: Region::R2,
        policy,
        c_xy,
    })
}
