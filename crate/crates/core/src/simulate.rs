//! Monte Carlo engine: Poisson interferer configurations sampled around a
//! fixed user, fading averaged in closed form per configuration, and the
//! resulting conditional success probabilities aggregated into empirical
//! moments and reliability curves.
//!
//! Randomness is counter-based: realization `i` draws from substream `i` of
//! a stream cipher keyed by the master seed, so output is bit-identical for
//! any worker count or schedule.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use rayon::prelude::*;

use crate::analytic::{CcdfMethod, MetaCurve};
use crate::model::{DistancePair, NetworkParams, NomaConfig, Scheme, UserClass};
use crate::{Error, Result};

/// Smallest expected point count accepted for a sampling window. Below
/// this the truncated interference field is not trusted to stand in for
/// the full plane.
pub const MIN_EXPECTED_POINTS: f64 = 200.0;

/// Degenerate draws (fewer than two points) are replaced from fresh
/// substreams at most this many times before giving up.
const MAX_RESAMPLES: u64 = 256;

/// Default window radius `15 / sqrt(pi lambda_b)`: 225 expected points
/// regardless of density.
pub fn default_window_radius(lambda_b: f64) -> f64 {
    15.0 / (PI * lambda_b).sqrt()
}

/// Evenly spaced reliability grid with `points` entries covering `[0, 1]`.
pub fn default_x_grid(points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Experiment description: network and power-split parameters plus the
/// sampling protocol (window, realization count, seed, reliability grid).
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub params: NetworkParams,
    pub cfg: NomaConfig,
    /// Access scheme whose effective thresholds the experiment scores.
    pub scheme: Scheme,
    pub window_radius: f64,
    pub n_realizations: usize,
    pub seed: u64,
    /// Grid on which empirical reliability curves are reported.
    pub x_grid: Vec<f64>,
}

impl SimConfig {
    /// Window and grid take their defaults; see [`default_window_radius`]
    /// and [`default_x_grid`].
    pub fn new(
        params: NetworkParams,
        cfg: NomaConfig,
        scheme: Scheme,
        n_realizations: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_realizations == 0 {
            return Err(Error::Domain("need at least one realization".into()));
        }
        Ok(Self {
            window_radius: default_window_radius(params.lambda_b),
            params,
            cfg,
            scheme,
            n_realizations,
            seed,
            x_grid: default_x_grid(101),
        })
    }

    /// Replace the window radius, keeping the expected point count at or
    /// above [`MIN_EXPECTED_POINTS`].
    pub fn with_window_radius(mut self, window_radius: f64) -> Result<Self> {
        let expected = self.params.lambda_b * PI * window_radius * window_radius;
        if !window_radius.is_finite() || !(expected >= MIN_EXPECTED_POINTS) {
            return Err(Error::Domain(format!(
                "window of radius {window_radius} holds {expected:.1} points in \
                 expectation, need at least {MIN_EXPECTED_POINTS}"
            )));
        }
        self.window_radius = window_radius;
        Ok(self)
    }

    /// Replace the reliability grid.
    pub fn with_x_grid(mut self, x_grid: Vec<f64>) -> Self {
        self.x_grid = x_grid;
        self
    }

    /// Expected number of points in the window, `lambda_b pi R^2`.
    pub fn expected_points(&self) -> f64 {
        self.params.lambda_b * PI * self.window_radius * self.window_radius
    }
}

/// One sampled station configuration seen from the user at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkRealization {
    /// Distance to the serving (nearest) station.
    pub r_o: f64,
    /// Distance to the dominant (second-nearest) station.
    pub r_d: f64,
    /// Distances to the remaining stations, ascending, all at least `r_d`.
    pub other_interferer_distances: Vec<f64>,
    /// Label from the serving/dominant distance ratio.
    pub class: UserClass,
}

/// Aggregated outcome of an experiment: conditional success samples split
/// by class, each list in realization order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeta {
    pub samples_cc: Vec<f64>,
    pub samples_ce: Vec<f64>,
    /// `(center, edge)` realization counts; they sum to the requested
    /// realization count.
    pub class_counts: (usize, usize),
    /// Draws discarded for holding fewer than two points, each replaced
    /// from a fresh substream.
    pub degenerate_draws: u64,
}

fn sample_distances(
    params: &NetworkParams,
    radius: f64,
    seed: u64,
    stream: u64,
) -> Result<NetworkRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mean = params.lambda_b * PI * radius * radius;
    let poisson = Poisson::new(mean).expect("window implies a positive finite mean");
    let count = rng.sample(poisson) as usize;
    if count < 2 {
        return Err(Error::DegenerateRealization);
    }
    // Uniform on the disk: squared radius uniform over (0, R^2], with the
    // open end at zero so the serving distance stays positive.
    let mut distances: Vec<f64> = (0..count)
        .map(|_| radius * (1.0 - rng.random::<f64>()).sqrt())
        .collect();
    distances.sort_unstable_by(f64::total_cmp);
    let others = distances.split_off(2);
    let pair = DistancePair::new(distances[0], distances[1])?;
    Ok(NetworkRealization {
        r_o: pair.serving,
        r_d: pair.dominant,
        other_interferer_distances: others,
        class: params.classify(&pair),
    })
}

/// Draw the station configuration for one realization from its own
/// substream of the master seed.
pub fn sample_realization(config: &SimConfig, stream_index: u64) -> Result<NetworkRealization> {
    sample_distances(&config.params, config.window_radius, config.seed, stream_index)
}

/// Retry degenerate draws on substreams offset by whole strides, which
/// never collide with the primary substreams `0..stride`.
fn sample_with_resampling(
    params: &NetworkParams,
    radius: f64,
    seed: u64,
    index: u64,
    stride: u64,
) -> Result<(NetworkRealization, u64)> {
    let mut resamples = 0u64;
    loop {
        let stream = index.wrapping_add(resamples.wrapping_mul(stride));
        match sample_distances(params, radius, seed, stream) {
            Ok(real) => return Ok((real, resamples)),
            Err(Error::DegenerateRealization) if resamples < MAX_RESAMPLES => resamples += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Fading-averaged success factor contributed by one interferer at
/// distance `d`.
fn interferer_factor(r_o: f64, d: f64, alpha: f64, chi: f64) -> f64 {
    1.0 / (1.0 + (r_o / d).powf(alpha) * chi)
}

/// Product of per-interferer factors over the given distances; the empty
/// product is one.
fn interference_product<I: IntoIterator<Item = f64>>(
    r_o: f64,
    alpha: f64,
    chi: f64,
    distances: I,
) -> f64 {
    distances
        .into_iter()
        .fold(1.0, |acc, d| acc * interferer_factor(r_o, d, alpha, chi))
}

fn check_class(real: &NetworkRealization, expected: UserClass) -> Result<()> {
    if real.class != expected {
        return Err(Error::ClassMismatch { expected, found: real.class });
    }
    Ok(())
}

fn check_threshold(chi: f64) -> Result<f64> {
    if !(chi > 0.0) || !chi.is_finite() {
        return Err(Error::Domain(format!(
            "effective threshold must be positive and finite, got {chi}"
        )));
    }
    Ok(chi)
}

/// Dominant factor times the residual product: the success probability of
/// the configuration with fading already integrated out.
fn conditional_success(real: &NetworkRealization, alpha: f64, chi: f64) -> f64 {
    interferer_factor(real.r_o, real.r_d, alpha, chi)
        * interference_product(
            real.r_o,
            alpha,
            chi,
            real.other_interferer_distances.iter().copied(),
        )
}

/// Success probability of a center-classified configuration at threshold
/// `chi_c`: the product runs over every station beyond the server, the
/// dominant one included on the same footing as the rest.
pub fn conditional_success_cc(
    real: &NetworkRealization,
    alpha: f64,
    chi_c: f64,
) -> Result<f64> {
    check_class(real, UserClass::CellCenter)?;
    Ok(conditional_success(real, alpha, check_threshold(chi_c)?))
}

/// Success probability of an edge-classified configuration at threshold
/// `chi_e`: the dominant station contributes its factor at `r_d`
/// explicitly, the remaining field the residual product.
pub fn conditional_success_ce(
    real: &NetworkRealization,
    alpha: f64,
    chi_e: f64,
) -> Result<f64> {
    check_class(real, UserClass::CellEdge)?;
    Ok(conditional_success(real, alpha, check_threshold(chi_e)?))
}

/// Run the configured experiment: independent draws, one conditional
/// success probability per draw at the scheme's effective threshold for
/// the realized class. Output is deterministic for a given seed no matter
/// how many workers execute it.
pub fn run_experiment(config: &SimConfig) -> Result<EmpiricalMeta> {
    // An infeasible power split makes the edge decoding step (and with it
    // the center user's cancellation step) impossible at any SIR, so every
    // draw scores zero instead of erroring out.
    let thresholds = match (
        config.cfg.effective_threshold(UserClass::CellCenter, config.scheme),
        config.cfg.effective_threshold(UserClass::CellEdge, config.scheme),
    ) {
        (Ok(chi_c), Ok(chi_e)) => Some((chi_c, chi_e)),
        (Err(Error::InfeasiblePowerSplit { .. }), _)
        | (_, Err(Error::InfeasiblePowerSplit { .. })) => None,
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let stride = config.n_realizations as u64;
    let mut tagged: Vec<(u64, UserClass, f64, u64)> = (0..stride)
        .into_par_iter()
        .map(|index| {
            let (real, resamples) = sample_with_resampling(
                &config.params,
                config.window_radius,
                config.seed,
                index,
                stride,
            )?;
            let p = match thresholds {
                Some((chi_c, chi_e)) => match real.class {
                    UserClass::CellCenter => {
                        conditional_success_cc(&real, config.params.alpha, chi_c)?
                    }
                    UserClass::CellEdge => {
                        conditional_success_ce(&real, config.params.alpha, chi_e)?
                    }
                },
                None => 0.0,
            };
            Ok((index, real.class, p, resamples))
        })
        .collect::<Result<Vec<_>>>()?;
    // The indexed parallel collect already restores realization order; the
    // sort states the merge contract instead of trusting the scheduler.
    tagged.sort_unstable_by_key(|entry| entry.0);
    let mut meta = EmpiricalMeta {
        samples_cc: Vec::new(),
        samples_ce: Vec::new(),
        class_counts: (0, 0),
        degenerate_draws: 0,
    };
    for (_, class, p, resamples) in tagged {
        meta.degenerate_draws += resamples;
        match class {
            UserClass::CellCenter => {
                meta.class_counts.0 += 1;
                meta.samples_cc.push(p);
            }
            UserClass::CellEdge => {
                meta.class_counts.1 += 1;
                meta.samples_ce.push(p);
            }
        }
    }
    Ok(meta)
}

/// Empirical complementary CDF over the reliability grid: at each grid
/// point, the fraction of samples strictly greater than it.
pub fn empirical_ccdf(samples: &[f64], x_grid: &[f64]) -> Result<MetaCurve> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if samples.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
        return Err(Error::Domain("success samples must lie in [0, 1]".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let ccdf = x_grid
        .iter()
        .map(|&x| (n - sorted.partition_point(|&s| s <= x)) as f64 / n as f64)
        .collect();
    MetaCurve::new(x_grid.to_vec(), ccdf, CcdfMethod::Empirical)
}

/// Empirical raw moment of the given order together with its standard
/// error (sample standard deviation of `s^order` over `sqrt(n)`).
pub fn empirical_moment(samples: &[f64], order: u32) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let n = samples.len() as f64;
    let powered: Vec<f64> = samples.iter().map(|&s| s.powi(order as i32)).collect();
    let mean = powered.iter().sum::<f64>() / n;
    let variance = powered.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, (variance / n).sqrt()))
}
