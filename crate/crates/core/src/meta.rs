//! Runtime-selectable reliability-curve estimators.
//!
//! Every method of producing the distribution of the conditional success
//! probability (moment-matched beta fit, characteristic-function
//! inversion, Monte Carlo) sits behind one trait and is registered under a
//! short name, so front ends can pick and compare methods per run without
//! hard-wiring any of them.

use std::collections::BTreeMap;

use crate::analytic::{
    beta_approx_params, meta_ccdf_beta, meta_ccdf_gilpelaez, moment_cc, moment_ce_fast,
    success_moment, CcdfMethod, GilPelaezSettings, MetaCurve,
};
use crate::model::{NetworkParams, NomaConfig, Scheme, UserClass};
use crate::simulate::{empirical_ccdf, run_experiment, SimConfig};
use crate::specfun::QuadratureSpec;
use crate::{Error, Result};

/// Monte Carlo knobs for estimators that draw samples.
#[derive(Clone, Debug)]
pub struct McSettings {
    pub n_realizations: usize,
    pub seed: u64,
    /// Overrides the default sampling window when set.
    pub window_radius: Option<f64>,
}

/// Everything an estimator may consult: network and power-split
/// parameters, the population and scheme to score, the reliability grid,
/// and optional Monte Carlo settings.
#[derive(Clone, Debug)]
pub struct MetaContext {
    pub net: NetworkParams,
    pub cfg: NomaConfig,
    pub class: UserClass,
    pub scheme: Scheme,
    pub x_grid: Vec<f64>,
    pub mc: Option<McSettings>,
}

/// A strategy that produces the reliability CCDF on the context's grid.
pub trait CcdfEstimator: Send + Sync {
    /// Registry key, also used on command lines and in output files.
    fn name(&self) -> &'static str;

    fn estimate(&self, ctx: &MetaContext) -> Result<MetaCurve>;
}

/// An infeasible power split pins every conditional success probability at
/// zero, so the reliability curve is identically zero. Estimators short
/// circuit to it rather than failing, mirroring what the sampler measures.
fn zero_curve(ctx: &MetaContext, method: CcdfMethod) -> Result<MetaCurve> {
    MetaCurve::new(ctx.x_grid.clone(), vec![0.0; ctx.x_grid.len()], method)
}

fn infeasible(ctx: &MetaContext) -> bool {
    ctx.scheme == Scheme::Noma && !ctx.cfg.is_feasible()
}

/// Beta fit matched to the first two moments of the conditional success
/// probability.
pub struct BetaApproxEstimator;

impl CcdfEstimator for BetaApproxEstimator {
    fn name(&self) -> &'static str {
        CcdfMethod::BetaApprox.label()
    }

    fn estimate(&self, ctx: &MetaContext) -> Result<MetaCurve> {
        if infeasible(ctx) {
            return zero_curve(ctx, CcdfMethod::BetaApprox);
        }
        let m1 = success_moment(&ctx.net, &ctx.cfg, ctx.class, ctx.scheme, 1.0)?;
        let m2 = success_moment(&ctx.net, &ctx.cfg, ctx.class, ctx.scheme, 2.0)?;
        let params = beta_approx_params(m1, m2)?;
        meta_ccdf_beta(&ctx.x_grid, &params)
    }
}

/// Exact distribution recovery from imaginary-order moments.
pub struct GilPelaezEstimator {
    pub settings: GilPelaezSettings,
}

impl Default for GilPelaezEstimator {
    fn default() -> Self {
        Self { settings: GilPelaezSettings::default() }
    }
}

impl CcdfEstimator for GilPelaezEstimator {
    fn name(&self) -> &'static str {
        CcdfMethod::GilPelaez.label()
    }

    fn estimate(&self, ctx: &MetaContext) -> Result<MetaCurve> {
        if infeasible(ctx) {
            return zero_curve(ctx, CcdfMethod::GilPelaez);
        }
        let chi = ctx.cfg.effective_threshold(ctx.class, ctx.scheme)?;
        let tau = ctx.net.tau;
        let delta = ctx.net.delta();
        match ctx.class {
            UserClass::CellCenter => {
                let spec = QuadratureSpec::default();
                meta_ccdf_gilpelaez(
                    &ctx.x_grid,
                    |b| moment_cc(tau, delta, chi, b, &spec),
                    &self.settings,
                )
            }
            UserClass::CellEdge => {
                let spec =
                    QuadratureSpec { rel_tol: 1e-7, abs_tol: 1e-10, max_subdivisions: 200 };
                meta_ccdf_gilpelaez(
                    &ctx.x_grid,
                    |b| moment_ce_fast(tau, delta, chi, b, &spec),
                    &self.settings,
                )
            }
        }
    }
}

/// Monte Carlo estimate from the sampler; needs [`McSettings`].
pub struct EmpiricalEstimator;

impl CcdfEstimator for EmpiricalEstimator {
    fn name(&self) -> &'static str {
        CcdfMethod::Empirical.label()
    }

    fn estimate(&self, ctx: &MetaContext) -> Result<MetaCurve> {
        let mc = ctx.mc.as_ref().ok_or_else(|| {
            Error::Domain("the empirical estimator needs Monte Carlo settings".into())
        })?;
        let mut config = SimConfig::new(
            ctx.net,
            ctx.cfg,
            ctx.scheme,
            mc.n_realizations,
            mc.seed,
        )?
        .with_x_grid(ctx.x_grid.clone());
        if let Some(radius) = mc.window_radius {
            config = config.with_window_radius(radius)?;
        }
        let meta = run_experiment(&config)?;
        let samples = match ctx.class {
            UserClass::CellCenter => &meta.samples_cc,
            UserClass::CellEdge => &meta.samples_ce,
        };
        empirical_ccdf(samples, &ctx.x_grid)
    }
}

/// Name-keyed collection of estimators.
pub struct EstimatorRegistry {
    entries: BTreeMap<&'static str, Box<dyn CcdfEstimator>>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Registry preloaded with the built-in methods.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register(Box::new(BetaApproxEstimator));
        registry.register(Box::new(GilPelaezEstimator::default()));
        registry.register(Box::new(EmpiricalEstimator));
        registry
    }

    /// Insert an estimator under its own name, replacing any previous
    /// holder of that name.
    pub fn register(&mut self, estimator: Box<dyn CcdfEstimator>) {
        self.entries.insert(estimator.name(), estimator);
    }

    pub fn get(&self, name: &str) -> Option<&dyn CcdfEstimator> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    /// Registered names in sorted order.
    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn context(class: UserClass, scheme: Scheme, x_grid: Vec<f64>) -> MetaContext {
        MetaContext {
            net: NetworkParams::new(1.0, 4.0, 0.7).unwrap(),
            cfg: NomaConfig::from_db(0.25, 3.0, -3.0).unwrap(),
            class,
            scheme,
            x_grid,
            mc: None,
        }
    }

    #[test]
    fn registry_serves_builtins_by_name() {
        let registry = EstimatorRegistry::with_builtins();
        assert_eq!(registry.names(), vec!["beta", "empirical", "gilpelaez"]);
        for name in registry.names() {
            assert_eq!(registry.get(name).unwrap().name(), name);
        }
        assert!(registry.get("nonsense").is_none());
    }

    #[test]
    fn custom_estimators_can_shadow_builtins() {
        struct Flat;
        impl CcdfEstimator for Flat {
            fn name(&self) -> &'static str {
                "beta"
            }
            fn estimate(&self, ctx: &MetaContext) -> Result<MetaCurve> {
                MetaCurve::new(
                    ctx.x_grid.clone(),
                    vec![1.0; ctx.x_grid.len()],
                    CcdfMethod::BetaApprox,
                )
            }
        }
        let mut registry = EstimatorRegistry::with_builtins();
        registry.register(Box::new(Flat));
        let ctx = context(UserClass::CellCenter, Scheme::Noma, vec![0.5]);
        let curve = registry.get("beta").unwrap().estimate(&ctx).unwrap();
        assert_eq!(curve.ccdf(), &[1.0]);
    }

    #[test]
    fn beta_estimator_matches_the_direct_fit() {
        let ctx = context(
            UserClass::CellCenter,
            Scheme::Noma,
            vec![0.1, 0.3, 0.5, 0.7, 0.9],
        );
        let via_registry = EstimatorRegistry::with_builtins()
            .get("beta")
            .unwrap()
            .estimate(&ctx)
            .unwrap();
        let m1 = success_moment(&ctx.net, &ctx.cfg, ctx.class, ctx.scheme, 1.0).unwrap();
        let m2 = success_moment(&ctx.net, &ctx.cfg, ctx.class, ctx.scheme, 2.0).unwrap();
        let direct =
            meta_ccdf_beta(&ctx.x_grid, &beta_approx_params(m1, m2).unwrap()).unwrap();
        assert_eq!(via_registry.method(), CcdfMethod::BetaApprox);
        for (a, b) in via_registry.ccdf().iter().zip(direct.ccdf()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gilpelaez_estimator_matches_the_direct_inversion() {
        let ctx = context(UserClass::CellCenter, Scheme::Noma, vec![0.2, 0.5, 0.8]);
        let via_registry = EstimatorRegistry::with_builtins()
            .get("gilpelaez")
            .unwrap()
            .estimate(&ctx)
            .unwrap();
        let chi = ctx.cfg.chi_c().unwrap();
        let spec = QuadratureSpec::default();
        let direct = meta_ccdf_gilpelaez(
            &ctx.x_grid,
            |b| moment_cc(ctx.net.tau, ctx.net.delta(), chi, b, &spec),
            &GilPelaezSettings::default(),
        )
        .unwrap();
        assert_eq!(via_registry.method(), CcdfMethod::GilPelaez);
        for (a, b) in via_registry.ccdf().iter().zip(direct.ccdf()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_estimator_needs_and_uses_mc_settings() {
        let mut ctx = context(
            UserClass::CellEdge,
            Scheme::Noma,
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
        );
        let registry = EstimatorRegistry::with_builtins();
        assert!(registry.get("empirical").unwrap().estimate(&ctx).is_err());

        ctx.mc = Some(McSettings { n_realizations: 2_000, seed: 7, window_radius: None });
        let curve = registry.get("empirical").unwrap().estimate(&ctx).unwrap();
        assert_eq!(curve.method(), CcdfMethod::Empirical);
        assert_eq!(curve.ccdf().last(), Some(&0.0));
        assert!(curve.ccdf()[0] > 0.9);
    }

    #[test]
    fn infeasible_splits_yield_the_zero_curve() {
        let mut ctx = context(UserClass::CellCenter, Scheme::Noma, vec![0.0, 0.5, 1.0]);
        ctx.cfg = NomaConfig::from_db(0.7, 3.0, -3.0).unwrap();
        ctx.mc = Some(McSettings { n_realizations: 500, seed: 1, window_radius: None });
        let registry = EstimatorRegistry::with_builtins();
        for name in ["beta", "gilpelaez", "empirical"] {
            let curve = registry.get(name).unwrap().estimate(&ctx).unwrap();
            assert!(
                curve.ccdf().iter().all(|&y| y == 0.0),
                "{name} should produce the zero curve"
            );
        }
    }
}
