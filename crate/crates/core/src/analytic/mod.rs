//! Closed-form and semi-closed-form results: moments of the conditional
//! success probability for both user classes and schemes, bounds for the
//! edge-user moment, the beta approximation of the meta distribution,
//! characteristic-function inversion of the exact meta distribution, mean
//! local delay, and cell throughput.

mod beta;
mod gilpelaez;
mod moments;

pub use beta::{beta_approx_params, meta_ccdf_beta, BetaParams};
pub use gilpelaez::{meta_ccdf_gilpelaez, GilPelaezSettings};
pub use moments::{
    cell_throughput, ce_moment_bounds, matched_ce_rate_rho, mean_local_delay,
    mean_local_delay_cc, mean_local_delay_cc_alt_exponent, meta_moment, moment_cc, moment_ce,
    moment_ce_bounds, moment_ce_fast, success_moment, success_moment_order, MomentResult,
    ThroughputResult,
};

use crate::{Error, Result};

/// How a meta-distribution CCDF curve was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CcdfMethod {
    BetaApprox,
    GilPelaez,
    Empirical,
}

impl CcdfMethod {
    /// Lowercase name used for runtime selection and tabular output.
    pub fn label(self) -> &'static str {
        match self {
            CcdfMethod::BetaApprox => "beta",
            CcdfMethod::GilPelaez => "gilpelaez",
            CcdfMethod::Empirical => "empirical",
        }
    }
}

/// Distribution of reliability across network geometries: the fraction of
/// users whose conditional success probability exceeds each grid value.
#[derive(Clone, Debug, PartialEq)]
pub struct MetaCurve {
    x_grid: Vec<f64>,
    ccdf: Vec<f64>,
    method: CcdfMethod,
}

/// Slack allowed on the nonincreasing check; inversion noise may produce
/// violations up to this size, anything larger is a real defect.
const MONOTONE_SLACK: f64 = 1e-4;

impl MetaCurve {
    pub fn new(x_grid: Vec<f64>, ccdf: Vec<f64>, method: CcdfMethod) -> Result<Self> {
        if x_grid.len() != ccdf.len() || x_grid.is_empty() {
            return Err(Error::Domain(format!(
                "curve needs matching nonempty grids, got {} x {}",
                x_grid.len(),
                ccdf.len()
            )));
        }
        for pair in x_grid.windows(2) {
            if !(pair[1] >= pair[0]) {
                return Err(Error::Domain("x grid must be nondecreasing".into()));
            }
        }
        if x_grid.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::Domain("reliability grid must lie in [0, 1]".into()));
        }
        if ccdf.iter().any(|&y| !(0.0..=1.0).contains(&y)) {
            return Err(Error::Domain("CCDF values must lie in [0, 1]".into()));
        }
        for pair in ccdf.windows(2) {
            if pair[1] > pair[0] + MONOTONE_SLACK {
                return Err(Error::Domain(format!(
                    "CCDF must be nonincreasing, got rise {:.3e}",
                    pair[1] - pair[0]
                )));
            }
        }
        Ok(Self { x_grid, ccdf, method })
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn ccdf(&self) -> &[f64] {
        &self.ccdf
    }

    pub fn method(&self) -> CcdfMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.x_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty()
    }

    /// Largest pointwise distance to another curve on the same grid.
    pub fn sup_distance(&self, other: &MetaCurve) -> Result<f64> {
        if self.x_grid != other.x_grid {
            return Err(Error::Domain(
                "sup distance needs curves on identical grids".into(),
            ));
        }
        Ok(self
            .ccdf
            .iter()
            .zip(&other.ccdf)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Mean implied by the curve: trapezoidal integral of the CCDF over
    /// [0, 1], extending the first and last grid values to the endpoints.
    pub fn implied_mean(&self) -> f64 {
        let mut total = self.ccdf[0] * self.x_grid[0];
        for i in 1..self.len() {
            total +=
                0.5 * (self.ccdf[i] + self.ccdf[i - 1]) * (self.x_grid[i] - self.x_grid[i - 1]);
        }
        total += self.ccdf[self.len() - 1] * (1.0 - self.x_grid[self.len() - 1]);
        total
    }
}
