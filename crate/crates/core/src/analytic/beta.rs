//! Beta approximation of the meta distribution: match the first two moments
//! of the conditional success probability to a beta law and read the CCDF
//! off its regularized incomplete beta function.

use super::{CcdfMethod, MetaCurve};
use crate::specfun::reg_inc_beta;
use crate::{Error, Result};

/// Shape parameters of the moment-matched beta law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaParams {
    pub mu1: f64,
    pub mu2: f64,
}

/// Solves the two-moment matching equations for the beta shape parameters.
///
/// Requires `0 < m1 < 1` and `m1^2 < m2 < m1`; anything else corresponds to
/// zero or negative variance (or a variance too large for a [0, 1] law) and
/// has no beta representation.
pub fn beta_approx_params(m1: f64, m2: f64) -> Result<BetaParams> {
    if !m1.is_finite() || !m2.is_finite() || m1 <= 0.0 || m1 >= 1.0 {
        return Err(Error::DegenerateDistribution(format!(
            "first moment must lie strictly inside (0, 1), got {m1}"
        )));
    }
    let variance = m2 - m1 * m1;
    if variance <= 0.0 {
        return Err(Error::DegenerateDistribution(format!(
            "moments ({m1}, {m2}) imply nonpositive variance {variance}"
        )));
    }
    if m2 >= m1 {
        return Err(Error::DegenerateDistribution(format!(
            "second moment {m2} must stay below the first {m1} on [0, 1]"
        )));
    }
    let mu2 = (m1 - m2) * (1.0 - m1) / variance;
    let mu1 = m1 * mu2 / (1.0 - m1);
    Ok(BetaParams { mu1, mu2 })
}

impl BetaParams {
    /// Mean of the matched law, `mu1 / (mu1 + mu2)`.
    pub fn mean(&self) -> f64 {
        self.mu1 / (self.mu1 + self.mu2)
    }

    /// Second raw moment of the matched law.
    pub fn second_moment(&self) -> f64 {
        let s = self.mu1 + self.mu2;
        self.mu1 * (self.mu1 + 1.0) / (s * (s + 1.0))
    }
}

/// Evaluates the approximate meta-distribution CCDF on a reliability grid.
pub fn meta_ccdf_beta(x_grid: &[f64], params: &BetaParams) -> Result<MetaCurve> {
    if !(params.mu1 > 0.0) || !(params.mu2 > 0.0) {
        return Err(Error::DegenerateDistribution(format!(
            "beta shapes must be positive, got ({}, {})",
            params.mu1, params.mu2
        )));
    }
    let ccdf = x_grid
        .iter()
        .map(|&x| {
            if x <= 0.0 {
                Ok(1.0)
            } else if x >= 1.0 {
                Ok(0.0)
            } else {
                Ok(1.0 - reg_inc_beta(x, params.mu1, params.mu2)?)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    MetaCurve::new(x_grid.to_vec(), ccdf, CcdfMethod::BetaApprox)
}
