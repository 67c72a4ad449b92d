//! Network and power-split parameter types, user classification, and the
//! exact law of the (serving, dominant-interferer) distance pair.
//!
//! Base stations form a homogeneous Poisson process of density `lambda_b`.
//! The typical user at the origin is served by its nearest base station at
//! distance `serving`; the nearest interferer sits at distance `dominant`.
//! The user is labeled cell-center (CC) when `serving <= tau * dominant`
//! and cell-edge (CE) otherwise, so the distance ratio alone decides the
//! label and `P[CC] = tau^2`.

use rand::Rng;
use rand_distr::Exp1;

use crate::{Error, Result};

/// Convert a power ratio in decibels to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Pairing label of the typical user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UserClass {
    CellCenter,
    CellEdge,
}

impl UserClass {
    /// Short lowercase label used in tabular output.
    pub fn label(self) -> &'static str {
        match self {
            UserClass::CellCenter => "cc",
            UserClass::CellEdge => "ce",
        }
    }
}

/// Multiple-access scheme: superposition coding with interference
/// cancellation, or orthogonal time sharing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Noma,
    Oma,
}

impl Scheme {
    /// Short lowercase label used in tabular output.
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Noma => "noma",
            Scheme::Oma => "oma",
        }
    }
}

/// Distances from the typical user to its server and nearest interferer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistancePair {
    /// Distance to the serving (nearest) base station.
    pub serving: f64,
    /// Distance to the dominant interferer (second-nearest base station).
    pub dominant: f64,
}

impl DistancePair {
    pub fn new(serving: f64, dominant: f64) -> Result<Self> {
        if !(serving > 0.0) || !(dominant >= serving) || !dominant.is_finite() {
            return Err(Error::Domain(format!(
                "distance pair needs 0 < serving <= dominant, got ({serving}, {dominant})"
            )));
        }
        Ok(Self { serving, dominant })
    }

    /// Ratio serving/dominant, always in (0, 1].
    pub fn ratio(&self) -> f64 {
        self.serving / self.dominant
    }
}

/// Deployment geometry: base-station density, path loss, and the distance
/// ratio that separates cell-center from cell-edge users.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkParams {
    /// Base-station density (points per unit area).
    pub lambda_b: f64,
    /// Path-loss exponent, > 2 so interference has finite moments.
    pub alpha: f64,
    /// Classification threshold on serving/dominant, in (0, 1).
    pub tau: f64,
}

impl NetworkParams {
    pub fn new(lambda_b: f64, alpha: f64, tau: f64) -> Result<Self> {
        if !(lambda_b > 0.0) || !lambda_b.is_finite() {
            return Err(Error::Domain(format!(
                "base-station density must be positive and finite, got {lambda_b}"
            )));
        }
        if !(alpha > 2.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!(
                "path-loss exponent must exceed 2, got {alpha}"
            )));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Domain(format!(
                "classification threshold must lie in (0, 1), got {tau}"
            )));
        }
        Ok(Self { lambda_b, alpha, tau })
    }

    /// `delta = 2/alpha`, the stability index of the interference field.
    pub fn delta(&self) -> f64 {
        2.0 / self.alpha
    }

    /// Probability that the typical user is cell-center: `tau^2`.
    pub fn cc_probability(&self) -> f64 {
        self.tau * self.tau
    }

    /// Probability that the typical user is cell-edge: `1 - tau^2`.
    pub fn ce_probability(&self) -> f64 {
        1.0 - self.tau * self.tau
    }

    /// Label a distance pair; the boundary `serving = tau * dominant`
    /// counts as cell-center.
    pub fn classify(&self, pair: &DistancePair) -> UserClass {
        if pair.serving <= self.tau * pair.dominant {
            UserClass::CellCenter
        } else {
            UserClass::CellEdge
        }
    }

    /// Joint density of (serving, dominant) at `(r_o, r_d)`:
    /// `(2 pi lambda)^2 r_o r_d exp(-pi lambda r_d^2)` on `0 < r_o < r_d`.
    pub fn joint_distance_density(&self, r_o: f64, r_d: f64) -> f64 {
        if r_o <= 0.0 || r_d <= r_o {
            return 0.0;
        }
        let pl = std::f64::consts::PI * self.lambda_b;
        (2.0 * pl) * (2.0 * pl) * r_o * r_d * (-pl * r_d * r_d).exp()
    }

    /// Marginal CDF of the dominant-interferer distance. It is the same for
    /// both classes: the squared distance is the sum of two unit-rate
    /// exponentials scaled by `1/(pi lambda)`.
    pub fn dominant_distance_cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let s = std::f64::consts::PI * self.lambda_b * r * r;
        1.0 - (-s).exp() * (1.0 + s)
    }

    /// Class-conditional CDF of the serving distance.
    pub fn serving_distance_cdf(&self, class: UserClass, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let t2 = self.tau * self.tau;
        let s = std::f64::consts::PI * self.lambda_b * r * r;
        match class {
            // Given CC, serving^2 is exponential with rate pi lambda / tau^2.
            UserClass::CellCenter => 1.0 - (-s / t2).exp(),
            UserClass::CellEdge => {
                ((1.0 - (-s).exp()) - t2 * (1.0 - (-s / t2).exp())) / (1.0 - t2)
            }
        }
    }

    /// Draw a distance pair from the exact conditional law given the class.
    ///
    /// The squared dominant distance is a sum of two exponentials; given the
    /// dominant distance, the squared serving distance is uniform on the
    /// sub-interval of `[0, dominant^2]` selected by the class.
    pub fn sample_distance_pair<R: Rng + ?Sized>(
        &self,
        class: UserClass,
        rng: &mut R,
    ) -> DistancePair {
        let e1: f64 = rng.sample(Exp1);
        let e2: f64 = rng.sample(Exp1);
        let dominant_sq = (e1 + e2) / (std::f64::consts::PI * self.lambda_b);
        let t2 = self.tau * self.tau;
        let u: f64 = rng.random();
        // u is in [0, 1): CC uses u directly so serving < tau * dominant
        // strictly; CE uses 1 - u in (0, 1] so serving > tau * dominant.
        let v = match class {
            UserClass::CellCenter => t2 * u,
            UserClass::CellEdge => t2 + (1.0 - t2) * (1.0 - u),
        };
        let pair = DistancePair {
            serving: (v * dominant_sq).sqrt(),
            dominant: dominant_sq.sqrt(),
        };
        debug_assert_eq!(self.classify(&pair), class);
        pair
    }

    /// Draw the class with probability `tau^2` / `1 - tau^2`, then the pair.
    pub fn sample_user<R: Rng + ?Sized>(&self, rng: &mut R) -> (UserClass, DistancePair) {
        let class = if rng.random::<f64>() < self.cc_probability() {
            UserClass::CellCenter
        } else {
            UserClass::CellEdge
        };
        (class, self.sample_distance_pair(class, rng))
    }
}

/// Two-user superposition-coding configuration: fraction `theta` of the
/// transmit power goes to the cell-center message, `1 - theta` to the
/// cell-edge message, decoded against thresholds `beta_c` and `beta_e`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NomaConfig {
    /// Power fraction allocated to the cell-center message, in (0, 1).
    pub theta: f64,
    /// SIR threshold of the cell-center message (linear).
    pub beta_c: f64,
    /// SIR threshold of the cell-edge message (linear).
    pub beta_e: f64,
}

impl NomaConfig {
    pub fn new(theta: f64, beta_c: f64, beta_e: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Domain(format!(
                "power fraction must lie in (0, 1), got {theta}"
            )));
        }
        if !(beta_c > 0.0) || !beta_c.is_finite() || !(beta_e > 0.0) || !beta_e.is_finite() {
            return Err(Error::Domain(format!(
                "decoding thresholds must be positive and finite, got ({beta_c}, {beta_e})"
            )));
        }
        Ok(Self { theta, beta_c, beta_e })
    }

    /// Thresholds given in decibels.
    pub fn from_db(theta: f64, beta_c_db: f64, beta_e_db: f64) -> Result<Self> {
        Self::new(theta, db_to_linear(beta_c_db), db_to_linear(beta_e_db))
    }

    /// Largest power fraction that still lets the cell-edge message be
    /// decoded: `1 / (1 + beta_e)`.
    pub fn feasibility_limit(&self) -> f64 {
        1.0 / (1.0 + self.beta_e)
    }

    /// Whether the cell-edge message is decodable at any SIR.
    pub fn is_feasible(&self) -> bool {
        self.theta < self.feasibility_limit()
    }

    /// Effective SIR threshold of the cell-edge decoding step,
    /// `beta_e / (1 - theta (1 + beta_e))`. The same step is performed by
    /// both users (the cell-center user cancels the edge message first).
    pub fn chi_e(&self) -> Result<f64> {
        if !self.is_feasible() {
            return Err(Error::InfeasiblePowerSplit {
                theta: self.theta,
                limit: self.feasibility_limit(),
            });
        }
        Ok(self.beta_e / (1.0 - self.theta * (1.0 + self.beta_e)))
    }

    /// Effective SIR threshold of the cell-center user: it must both cancel
    /// the edge message and decode its own, so the binding threshold is
    /// `max(beta_c / theta, chi_e)`.
    pub fn chi_c(&self) -> Result<f64> {
        Ok((self.beta_c / self.theta).max(self.chi_e()?))
    }

    /// The SIR threshold that governs the given class under the given
    /// scheme: the effective NOMA thresholds, or the raw decoding
    /// thresholds under orthogonal access (no intra-cell sharing).
    pub fn effective_threshold(&self, class: UserClass, scheme: Scheme) -> Result<f64> {
        match (scheme, class) {
            (Scheme::Noma, UserClass::CellCenter) => self.chi_c(),
            (Scheme::Noma, UserClass::CellEdge) => self.chi_e(),
            (Scheme::Oma, UserClass::CellCenter) => Ok(self.beta_c),
            (Scheme::Oma, UserClass::CellEdge) => Ok(self.beta_e),
        }
    }
}
