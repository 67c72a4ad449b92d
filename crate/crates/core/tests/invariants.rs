//! Cross-module consistency checks: the analytic moments, the distribution
//! estimators, and the Monte Carlo engine must describe the same network.

use noma_meta_core::analytic::{beta_approx_params, ce_moment_bounds, success_moment};
use noma_meta_core::meta::{EstimatorRegistry, MetaContext};
use noma_meta_core::model::{NetworkParams, NomaConfig, Scheme, UserClass};
use noma_meta_core::simulate::{empirical_ccdf, run_experiment, SimConfig};

const CLASSES: [UserClass; 2] = [UserClass::CellCenter, UserClass::CellEdge];
const SCHEMES: [Scheme; 2] = [Scheme::Noma, Scheme::Oma];

fn net(tau: f64) -> NetworkParams {
    NetworkParams::new(1.0, 4.0, tau).unwrap()
}

fn cfg(theta: f64) -> NomaConfig {
    NomaConfig::from_db(theta, 3.0, -3.0).unwrap()
}

#[test]
fn moments_shrink_as_the_order_grows() {
    let network = net(0.7);
    for theta in [0.1, 0.25, 0.4] {
        let split = cfg(theta);
        for class in CLASSES {
            for scheme in SCHEMES {
                let orders = [0.5, 1.0, 2.0, 3.0];
                let mut previous = 1.0;
                for b in orders {
                    let m = success_moment(&network, &split, class, scheme, b).unwrap();
                    assert!(
                        m > 0.0 && m < previous,
                        "theta {theta} {} {}: order {b} gives {m}, previous {previous}",
                        class.label(),
                        scheme.label(),
                    );
                    previous = m;
                }
            }
        }
    }
}

#[test]
fn success_variance_is_nonnegative_and_beta_fittable() {
    let network = net(0.7);
    for theta in [0.1, 0.25, 0.4] {
        let split = cfg(theta);
        for class in CLASSES {
            for scheme in SCHEMES {
                let m1 = success_moment(&network, &split, class, scheme, 1.0).unwrap();
                let m2 = success_moment(&network, &split, class, scheme, 2.0).unwrap();
                let variance = m2 - m1 * m1;
                assert!(
                    variance > 0.0,
                    "theta {theta} {} {}: variance {variance}",
                    class.label(),
                    scheme.label(),
                );
                let fit = beta_approx_params(m1, m2).unwrap();
                assert!((fit.mean() - m1).abs() < 1e-12);
                assert!((fit.second_moment() - m2).abs() < 1e-12);
            }
        }
    }
}

/// The conditional success probability only sees distance ratios, so the
/// station density cancels everywhere. With a shared seed the sampler
/// reuses the same uniform draws at every density, making the cancellation
/// visible sample by sample instead of only in distribution.
#[test]
fn empirical_pipeline_is_scale_invariant() {
    let split = cfg(0.25);
    let runs: Vec<_> = [0.1, 1.0, 10.0]
        .into_iter()
        .map(|lambda| {
            let network = NetworkParams::new(lambda, 4.0, 0.7).unwrap();
            let config = SimConfig::new(network, split, Scheme::Noma, 5_000, 11).unwrap();
            run_experiment(&config).unwrap()
        })
        .collect();
    let reference = &runs[1];
    for run in [&runs[0], &runs[2]] {
        assert_eq!(run.class_counts, reference.class_counts);
        for (a, b) in run
            .samples_cc
            .iter()
            .zip(&reference.samples_cc)
            .chain(run.samples_ce.iter().zip(&reference.samples_ce))
        {
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }
}

#[test]
fn inversion_mean_matches_the_first_moment() {
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let ctx = MetaContext {
        net: net(0.7),
        cfg: cfg(0.25),
        class: UserClass::CellCenter,
        scheme: Scheme::Noma,
        x_grid: grid,
        mc: None,
    };
    let curve = EstimatorRegistry::with_builtins()
        .get("gilpelaez")
        .unwrap()
        .estimate(&ctx)
        .unwrap();
    let m1 = success_moment(&ctx.net, &ctx.cfg, ctx.class, ctx.scheme, 1.0).unwrap();
    assert!(
        (curve.implied_mean() - m1).abs() < 1e-3,
        "{} vs {m1}",
        curve.implied_mean()
    );
}

/// The three estimators must agree on the center-user curve: the beta fit
/// within its approximation quality, the sampler within binomial noise of
/// the inversion (window enlarged so truncation bias stays negligible).
#[test]
fn estimator_family_agrees_on_the_center_curve() {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let ctx = MetaContext {
        net: net(0.7),
        cfg: cfg(0.25),
        class: UserClass::CellCenter,
        scheme: Scheme::Noma,
        x_grid: grid.clone(),
        mc: None,
    };
    let registry = EstimatorRegistry::with_builtins();
    let beta = registry.get("beta").unwrap().estimate(&ctx).unwrap();
    let gp = registry.get("gilpelaez").unwrap().estimate(&ctx).unwrap();
    assert!(beta.sup_distance(&gp).unwrap() <= 0.03);

    let config = SimConfig::new(ctx.net, ctx.cfg, Scheme::Noma, 20_000, 3)
        .unwrap()
        .with_window_radius(30.0 / std::f64::consts::PI.sqrt())
        .unwrap();
    let meta = run_experiment(&config).unwrap();
    let empirical = empirical_ccdf(&meta.samples_cc, &grid).unwrap();
    let n = meta.samples_cc.len() as f64;
    for ((&x, &e), &g) in grid.iter().zip(empirical.ccdf()).zip(gp.ccdf()) {
        let sigma = (g * (1.0 - g) / n).sqrt();
        assert!(
            (e - g).abs() <= 3.0 * sigma + 3e-3,
            "x {x}: empirical {e}, inverted {g}, sigma {sigma}"
        );
    }
}

#[test]
fn closed_form_bounds_bracket_the_edge_moments() {
    let splits = [0.1, 0.3];
    let taus = [0.5, 0.85];
    for theta in splits {
        for tau in taus {
            let network = net(tau);
            let split = cfg(theta);
            for b in [-1.0, 1.0, 2.0] {
                let (lower, upper) =
                    ce_moment_bounds(&network, &split, Scheme::Noma, b).unwrap();
                if !upper.is_finite() {
                    assert!(b < 0.0, "only negative orders may diverge");
                    continue;
                }
                let exact =
                    success_moment(&network, &split, UserClass::CellEdge, Scheme::Noma, b)
                        .unwrap();
                assert!(
                    lower <= exact + 1e-9 && exact <= upper + 1e-9,
                    "theta {theta} tau {tau} order {b}: {lower} <= {exact} <= {upper}"
                );
            }
        }
    }
}
