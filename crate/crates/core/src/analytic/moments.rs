//! Moments of the conditional success probability, bounds for the edge
//! user, mean local delay, and cell throughput.
//!
//! All quantities depend on the geometry only through `tau` and
//! `delta = 2/alpha`; the base-station density cancels out of every
//! distance ratio, so none of these functions read it.

use std::cell::RefCell;
use std::collections::HashMap;

use num_complex::Complex64;

use crate::model::{NetworkParams, NomaConfig, Scheme, UserClass};
use crate::specfun::{
    complex_pow_principal, expm1_complex, integrate_adaptive, integrate_finite,
    integrate_semi_infinite_seeded, panels_for_phase, qk15, z_kernel_with, QuadratureSpec,
};
use crate::{Error, Result};

/// Outer tolerance for the nested edge-user integral. The inner kernel
/// runs at the tighter default so the outer error dominates and invariant
/// checks are not polluted by inner noise.
const CE_OUTER: QuadratureSpec =
    QuadratureSpec { rel_tol: 1e-7, abs_tol: 1e-10, max_subdivisions: 200 };

/// A moment of the conditional success probability, tagged with the order
/// and the population it describes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentResult {
    /// Moment value; real (zero imaginary part) for real orders.
    pub value: Complex64,
    /// Moment order, possibly complex.
    pub order: Complex64,
    pub user_class: UserClass,
    pub scheme: Scheme,
}

fn validate_tau(tau: f64, allow_one: bool) -> Result<()> {
    let ok = tau > 0.0 && (tau < 1.0 || (allow_one && tau == 1.0));
    if !ok {
        return Err(Error::Domain(format!(
            "distance-ratio threshold must lie in (0, 1{}, got {tau}",
            if allow_one { "]" } else { ")" }
        )));
    }
    Ok(())
}

/// Moment of order `b` for the center user at effective threshold `chi`:
/// `1 / (1 + tau^2 Z(b, chi, tau^-2))`.
///
/// `tau = 1` is allowed as the single-user limit (the whole cell is
/// "center"), where the expression reduces to classic nearest-server
/// coverage for `b = 1`.
pub fn moment_cc(
    tau: f64,
    delta: f64,
    chi: f64,
    b: Complex64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    validate_tau(tau, true)?;
    let z = z_kernel_with(b, chi, tau.powi(-2), delta, spec)?;
    Ok(1.0 / (1.0 + tau * tau * z))
}

/// Moment of order `b` for the edge user at effective threshold `chi`:
/// the average over the squared distance ratio `v` of
/// `(1 + v^(1/delta) chi)^(-b) / (1 + v Z(b, chi, 1/v))^2` on `[tau^2, 1]`.
///
/// The first factor is the dominant interferer's own fading average; the
/// kernel in the denominator carries the rest of the field, whose
/// guaranteed clearance shrinks as `v` grows.
pub fn moment_ce(
    tau: f64,
    delta: f64,
    chi: f64,
    b: Complex64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    validate_tau(tau, false)?;
    let t2 = tau * tau;
    let inv_delta = 1.0 / delta;
    let inner_spec = QuadratureSpec::default();
    let inner_err: RefCell<Option<Error>> = RefCell::new(None);
    let f = |v: f64| -> Complex64 {
        let numerator = match complex_pow_principal(1.0 + v.powf(inv_delta) * chi, -b) {
            Ok(p) => p,
            Err(e) => {
                *inner_err.borrow_mut() = Some(e);
                return Complex64::new(f64::NAN, 0.0);
            }
        };
        match z_kernel_with(b, chi, 1.0 / v, delta, &inner_spec) {
            Ok(z) => {
                let den = 1.0 + v * z;
                numerator / (den * den)
            }
            Err(e) => {
                *inner_err.borrow_mut() = Some(e);
                Complex64::new(f64::NAN, 0.0)
            }
        }
    };
    // Seed one panel per half period of the dominant-interferer phase
    // Im(b) ln(1 + v^(1/delta) chi) so oscillatory orders start resolved.
    let phase = b.im.abs() * ((1.0 + chi).ln() - (1.0 + t2.powf(inv_delta) * chi).ln());
    let seeds = panels_for_phase(phase);
    let seeded = spec.with_budget(spec.max_subdivisions + seeds);
    let outer = integrate_adaptive(&f, t2, 1.0, seeds, &seeded);
    if let Some(e) = inner_err.into_inner() {
        return Err(e);
    }
    Ok(outer? / (1.0 - t2))
}

/// Same quantity as [`moment_ce`], reorganized for large imaginary orders.
///
/// The nested form evaluates one semi-infinite kernel integral per outer
/// node, so its cost grows quadratically with `|Im b|` once both layers
/// need phase-resolving panel counts. Here the kernel is integrated once:
/// the outer rule is a fixed composite 15-point rule whose nodes are known
/// up front, and the kernel tail integral at every node follows from one
/// semi-infinite integral at the farthest lower limit plus short bridging
/// segments between consecutive limits. Cost then grows linearly in
/// `|Im b|`, which keeps distribution inversion tractable.
pub fn moment_ce_fast(
    tau: f64,
    delta: f64,
    chi: f64,
    b: Complex64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    validate_tau(tau, false)?;
    if !b.re.is_finite() || !b.im.is_finite() {
        return Err(Error::Domain(format!("moment order must be finite, got {b}")));
    }
    if !(chi > 0.0) || !chi.is_finite() {
        return Err(Error::Domain(format!("threshold must be positive, got {chi}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }

    let t2 = tau * tau;
    let phase = b.im.abs() * ((1.0 + chi).ln() - (1.0 + t2.powf(1.0 / delta) * chi).ln());
    // Double the oscillation-resolving count: the kernel in the denominator
    // drifts slowly on top of the dominant-interferer phase.
    let mut panels = 2 * panels_for_phase(phase);
    let mut last_err = f64::INFINITY;
    for _ in 0..3 {
        let (value, err) = ce_fixed_rule(tau, delta, chi, b, panels, spec)?;
        let value = value / (1.0 - t2);
        let err = err / (1.0 - t2);
        if err <= spec.abs_tol.max(spec.rel_tol * value.norm()) {
            return Ok(value);
        }
        last_err = err;
        panels *= 2;
    }
    Err(Error::NonConvergent(format!(
        "fixed-rule edge moment stuck at error {last_err:.3e} with {panels} panels"
    )))
}

/// One pass of the fixed composite rule behind [`moment_ce_fast`]: returns
/// the unnormalized integral over `[tau^2, 1]` and its error bound.
fn ce_fixed_rule(
    tau: f64,
    delta: f64,
    chi: f64,
    b: Complex64,
    panels: usize,
    spec: &QuadratureSpec,
) -> Result<(Complex64, f64)> {
    let t2 = tau * tau;
    let inv_delta = 1.0 / delta;
    let scale = chi.powf(-delta);
    let g = move |t: f64| {
        let u = t.powf(-inv_delta);
        -expm1_complex(-b * u.ln_1p())
    };
    let phase_at = |t: f64| b.im.abs() * t.powf(-inv_delta).ln_1p();

    // Shared edges guarantee both qk15 sweeps see bit-identical nodes.
    let width = (1.0 - t2) / panels as f64;
    let edges: Vec<(f64, f64)> = (0..panels)
        .map(|p| {
            let lo = t2 + p as f64 * width;
            let hi = if p + 1 == panels { 1.0 } else { t2 + (p + 1) as f64 * width };
            (lo, hi)
        })
        .collect();

    // Sweep 1 records the outer nodes without evaluating anything.
    let recorded: RefCell<Vec<f64>> = RefCell::new(Vec::with_capacity(panels * 15));
    for &(lo, hi) in &edges {
        qk15(
            &|v: f64| {
                recorded.borrow_mut().push(v);
                Complex64::default()
            },
            lo,
            hi,
        );
    }
    let mut nodes = recorded.into_inner();
    nodes.sort_by(f64::total_cmp);

    // Kernel tail integral at the farthest lower limit, then march down:
    // each smaller limit adds one short bridging segment.
    let l_max = scale / nodes[0];
    let split = l_max.max(1.0);
    let head_panels =
        if l_max < split { panels_for_phase(phase_at(l_max) - phase_at(split)) } else { 1 };
    let tail_panels = panels_for_phase(phase_at(split));
    let tail_spec = spec.with_budget(spec.max_subdivisions + head_panels + tail_panels);
    let mut cum = integrate_semi_infinite_seeded(&g, l_max, head_panels, tail_panels, &tail_spec)?;

    let seg_spec = QuadratureSpec {
        rel_tol: spec.rel_tol,
        abs_tol: spec.abs_tol.min(1e-12),
        max_subdivisions: 50,
    };
    let chi_pow = chi.powf(delta);
    let mut kernel_by_node = HashMap::with_capacity(nodes.len());
    kernel_by_node.insert(nodes[0].to_bits(), chi_pow * cum);
    for j in 1..nodes.len() {
        let l_lo = scale / nodes[j];
        let l_hi = scale / nodes[j - 1];
        let seeds = ((phase_at(l_lo) - phase_at(l_hi)) / std::f64::consts::PI).ceil() as usize;
        let seg_spec = seg_spec.with_budget(seg_spec.max_subdivisions + seeds);
        cum += integrate_adaptive(&g, l_lo, l_hi, seeds.max(1), &seg_spec)?;
        kernel_by_node.insert(nodes[j].to_bits(), chi_pow * cum);
    }

    // Sweep 2 evaluates the outer integrand against the tabulated kernel.
    let lookup_miss: RefCell<bool> = RefCell::new(false);
    let pow_err: RefCell<Option<Error>> = RefCell::new(None);
    let h = |v: f64| -> Complex64 {
        let Some(&z) = kernel_by_node.get(&v.to_bits()) else {
            *lookup_miss.borrow_mut() = true;
            return Complex64::new(f64::NAN, 0.0);
        };
        let numerator = match complex_pow_principal(1.0 + v.powf(inv_delta) * chi, -b) {
            Ok(p) => p,
            Err(e) => {
                *pow_err.borrow_mut() = Some(e);
                return Complex64::new(f64::NAN, 0.0);
            }
        };
        let den = 1.0 + v * z;
        numerator / (den * den)
    };
    let mut total = Complex64::default();
    let mut err_sum = 0.0;
    for &(lo, hi) in &edges {
        let (est, err) = qk15(&h, lo, hi);
        total += est;
        err_sum += err;
    }
    if let Some(e) = pow_err.into_inner() {
        return Err(e);
    }
    if lookup_miss.into_inner() {
        return Err(Error::NonConvergent(
            "composite-rule node lookup failed; sweeps disagreed".into(),
        ));
    }
    Ok((total, err_sum))
}

/// Moment of the conditional success probability for the typical user of
/// the given class under the given scheme, at complex order `b`.
pub fn success_moment_order(
    net: &NetworkParams,
    cfg: &NomaConfig,
    class: UserClass,
    scheme: Scheme,
    b: Complex64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    let chi = cfg.effective_threshold(class, scheme)?;
    match class {
        UserClass::CellCenter => moment_cc(net.tau, net.delta(), chi, b, spec),
        UserClass::CellEdge => moment_ce(net.tau, net.delta(), chi, b, spec),
    }
}

/// Real-order moment as a plain float, with class-appropriate default
/// tolerances.
pub fn success_moment(
    net: &NetworkParams,
    cfg: &NomaConfig,
    class: UserClass,
    scheme: Scheme,
    b: f64,
) -> Result<f64> {
    let spec = match class {
        UserClass::CellCenter => QuadratureSpec::default(),
        UserClass::CellEdge => CE_OUTER,
    };
    let v = success_moment_order(net, cfg, class, scheme, Complex64::new(b, 0.0), &spec)?;
    debug_assert!(v.im.abs() < 1e-8, "real-order moment has imaginary part {}", v.im);
    Ok(v.re)
}

/// [`success_moment_order`] packaged with its population tags.
pub fn meta_moment(
    net: &NetworkParams,
    cfg: &NomaConfig,
    class: UserClass,
    scheme: Scheme,
    b: Complex64,
    spec: &QuadratureSpec,
) -> Result<MomentResult> {
    let value = success_moment_order(net, cfg, class, scheme, b, spec)?;
    Ok(MomentResult { value, order: b, user_class: class, scheme })
}

/// Closed-form bounds on the edge-user moment of real order `b`, obtained
/// by freezing the kernel clearance at its two extremes over the ratio
/// range: `a = 1` and `a = tau^-2`. Returns `(lower, upper)`; a bound whose
/// frozen-kernel integral diverges is reported as `+inf`.
pub fn moment_ce_bounds(tau: f64, delta: f64, chi: f64, b: f64) -> Result<(f64, f64)> {
    validate_tau(tau, false)?;
    if b == 0.0 {
        return Err(Error::Domain(
            "bounds are defined for nonzero real order only".into(),
        ));
    }
    let t2 = tau * tau;
    let inv_delta = 1.0 / delta;
    let order = Complex64::new(b, 0.0);
    let spec = QuadratureSpec::default();
    let mut values = [0.0f64; 2];
    for (slot, a_frozen) in values.iter_mut().zip([1.0, tau.powi(-2)]) {
        let z = z_kernel_with(order, chi, a_frozen, delta, &spec)?.re;
        // A frozen kernel with 1 + v z <= 0 anywhere on the range puts a
        // nonintegrable pole in the denominator: the expectation diverges.
        if 1.0 + z <= 0.0 {
            *slot = f64::INFINITY;
            continue;
        }
        let integral = integrate_finite(
            |v| {
                let den = 1.0 + v * z;
                Complex64::new((1.0 + v.powf(inv_delta) * chi).powf(-b) / (den * den), 0.0)
            },
            t2,
            1.0,
            &spec,
        )?;
        *slot = integral.re / (1.0 - t2);
    }
    Ok((values[0].min(values[1]), values[0].max(values[1])))
}

/// [`moment_ce_bounds`] for a configured network, using the edge threshold
/// of the given scheme.
pub fn ce_moment_bounds(
    net: &NetworkParams,
    cfg: &NomaConfig,
    scheme: Scheme,
    b: f64,
) -> Result<(f64, f64)> {
    let chi = cfg.effective_threshold(UserClass::CellEdge, scheme)?;
    moment_ce_bounds(net.tau, net.delta(), chi, b)
}

/// Mean number of transmission attempts until the center user succeeds,
/// i.e. the order `-1` moment: `1 / (1 - (delta/(1-delta)) chi tau^(2/delta))`
/// when the denominator is positive, `+inf` otherwise (the retransmission
/// tail is then heavier than geometric and the mean diverges).
///
/// `tau = 1` is the single-user limit; `chi = 0` always succeeds, delay 1.
pub fn mean_local_delay_cc(tau: f64, delta: f64, chi: f64) -> f64 {
    debug_assert!(tau > 0.0 && tau <= 1.0 && delta > 0.0 && delta < 1.0 && chi >= 0.0);
    let denominator = 1.0 - (delta / (1.0 - delta)) * chi * tau.powf(2.0 / delta);
    if denominator > 0.0 {
        1.0 / denominator
    } else {
        f64::INFINITY
    }
}

/// Variant of [`mean_local_delay_cc`] with the threshold exponent `1 - delta`
/// instead of `1`. The two disagree except at `chi = 1`; the order `-1`
/// moment agrees with the exponent-`1` form, so this variant exists only so
/// front ends can report the discrepancy side by side.
pub fn mean_local_delay_cc_alt_exponent(tau: f64, delta: f64, chi: f64) -> f64 {
    debug_assert!(tau > 0.0 && tau <= 1.0 && delta > 0.0 && delta < 1.0 && chi >= 0.0);
    let denominator = 1.0 - (delta / (1.0 - delta)) * chi.powf(1.0 - delta) * tau.powf(2.0 / delta);
    if denominator > 0.0 {
        1.0 / denominator
    } else {
        f64::INFINITY
    }
}

/// Mean number of transmission attempts for the typical user of the given
/// class and scheme. Infinity is a legal return; per-class divergence is
/// detected exactly rather than through quadrature failure.
pub fn mean_local_delay(
    net: &NetworkParams,
    cfg: &NomaConfig,
    class: UserClass,
    scheme: Scheme,
) -> Result<f64> {
    let chi = cfg.effective_threshold(class, scheme)?;
    let delta = net.delta();
    match class {
        UserClass::CellCenter => Ok(mean_local_delay_cc(net.tau, delta, chi)),
        UserClass::CellEdge => {
            // The conditional mean at ratio v diverges once
            // (delta/(1-delta)) chi v^(1/delta) reaches 1; v = 1 is in the
            // averaging range, so that is the divergence threshold.
            if (delta / (1.0 - delta)) * chi >= 1.0 {
                return Ok(f64::INFINITY);
            }
            let v = moment_ce(net.tau, delta, chi, Complex64::new(-1.0, 0.0), &CE_OUTER)?;
            Ok(v.re)
        }
    }
}

/// Per-class rate terms of the cell throughput, in bits/s/Hz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThroughputResult {
    /// Center-user term (under OMA, already weighted by its time share).
    pub cc_rate: f64,
    /// Edge-user term.
    pub ce_rate: f64,
    pub total: f64,
    /// False only when the power split cannot serve the edge user at all;
    /// both rates are then zero so sweeps still render complete curves.
    pub feasible: bool,
}

/// Cell throughput. Under superposition coding both users transmit all the
/// time; under orthogonal access the center user is scheduled a fraction
/// `rho` of the time (`rho` is ignored otherwise).
pub fn cell_throughput(
    net: &NetworkParams,
    cfg: &NomaConfig,
    scheme: Scheme,
    rho: f64,
) -> Result<ThroughputResult> {
    let rate_c = (1.0 + cfg.beta_c).log2();
    let rate_e = (1.0 + cfg.beta_e).log2();
    match scheme {
        Scheme::Noma => {
            if !cfg.is_feasible() {
                return Ok(ThroughputResult {
                    cc_rate: 0.0,
                    ce_rate: 0.0,
                    total: 0.0,
                    feasible: false,
                });
            }
            let cc = rate_c
                * success_moment(net, cfg, UserClass::CellCenter, Scheme::Noma, 1.0)?;
            let ce = rate_e * success_moment(net, cfg, UserClass::CellEdge, Scheme::Noma, 1.0)?;
            Ok(ThroughputResult { cc_rate: cc, ce_rate: ce, total: cc + ce, feasible: true })
        }
        Scheme::Oma => {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::Domain(format!(
                    "time share must lie in [0, 1], got {rho}"
                )));
            }
            let cc = rho
                * rate_c
                * success_moment(net, cfg, UserClass::CellCenter, Scheme::Oma, 1.0)?;
            let ce = (1.0 - rho)
                * rate_e
                * success_moment(net, cfg, UserClass::CellEdge, Scheme::Oma, 1.0)?;
            Ok(ThroughputResult { cc_rate: cc, ce_rate: ce, total: cc + ce, feasible: true })
        }
    }
}

/// Orthogonal-access time share that gives the edge user the same rate it
/// gets under superposition coding: `1 - M_1^ce(chi_e) / M_1^ce(beta_e)`.
/// Always in (0, 1) for a feasible split, because `chi_e > beta_e`.
pub fn matched_ce_rate_rho(net: &NetworkParams, cfg: &NomaConfig) -> Result<f64> {
    let noma = success_moment(net, cfg, UserClass::CellEdge, Scheme::Noma, 1.0)?;
    let oma = success_moment(net, cfg, UserClass::CellEdge, Scheme::Oma, 1.0)?;
    Ok(1.0 - noma / oma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::db_to_linear;
    use crate::specfun::z_kernel_quadrature;

    // Arbitrary-precision references (mpmath, 25 digits) at the default
    // geometry tau = 0.7, alpha = 4, thresholds (3, -3) dB.
    const TAU: f64 = 0.7;
    const CHI_C_25: f64 = 7.981_049_259_875_518_4;
    const CHI_E_25: f64 = 0.802_280_571_592_876_57;
    const M1_CC_25: f64 = 0.433_195_610_025_633_405_8;
    const M2_CC_25: f64 = 0.303_841_846_287_741_712_6;
    const M1_CE_25: f64 = 0.372_121_735_338_292_037_3;
    const M2_CE_25: f64 = 0.179_571_525_992_426_543_9;
    const M1_CC_35: f64 = 0.497_437_955_314_449_093_9;
    const M1_CE_35: f64 = 0.298_661_395_419_066_308_8;
    const OMA_M1_CC: f64 = 0.704_698_362_283_124_498_1;
    const OMA_M1_CE: f64 = 0.504_283_070_154_611_406_6;
    const OMA_M2_CC: f64 = 0.558_497_498_814_004_929_3;
    const OMA_M2_CE: f64 = 0.293_946_406_579_730_896_4;
    const BOUND_LO_B1_25: f64 = 0.322_442_997_014;
    const BOUND_HI_B1_25: f64 = 0.432_759_722_51;
    const BOUND_LO_BM1_25: f64 = 3.044_781_897_35;
    const BOUND_HI_BM1_25: f64 = 13.135_172_331_5;
    const DELAY_CE_25: f64 = 8.726_989_985_299_297_2;
    const CHI_C_55: f64 = 3.627_749_663_579_781_1;
    const DELAY_CC_55: f64 = 7.753_301_978_166_699_947;
    const DELAY_CC_55_ALT: f64 = 1.842_673_031_055_501_048;
    const T_NOMA_25: f64 = 0.903_713_058_410_147_058_9;
    const T_OMA_HALF: f64 = 0.705_437_975_489_052_454_5;
    const RHO_STAR_25: f64 = 0.262_077_675_492_455_400_7;
    const T_OMA_MATCHED_25: f64 = 0.510_400_822_577_875_601;

    fn net() -> NetworkParams {
        NetworkParams::new(1.0, 4.0, TAU).unwrap()
    }

    fn cfg(theta: f64) -> NomaConfig {
        NomaConfig::new(theta, db_to_linear(3.0), db_to_linear(-3.0)).unwrap()
    }

    fn real(b: f64) -> Complex64 {
        Complex64::new(b, 0.0)
    }

    #[test]
    fn zeroth_moment_is_one_for_both_classes() {
        let net = net();
        let cfg = cfg(0.25);
        for class in [UserClass::CellCenter, UserClass::CellEdge] {
            for scheme in [Scheme::Noma, Scheme::Oma] {
                let m = success_moment(&net, &cfg, class, scheme, 0.0).unwrap();
                assert!((m - 1.0).abs() < 1e-12, "{class:?}/{scheme:?}: {m}");
            }
        }
    }

    #[test]
    fn degenerate_geometry_recovers_single_user_coverage() {
        // With every user central and a unit threshold at alpha = 4, the
        // first moment reduces to the textbook downlink coverage 1/(1+pi/4).
        let want = 1.0 / (1.0 + std::f64::consts::FRAC_PI_4);
        let m = moment_cc(1.0, 0.5, 1.0, real(1.0), &QuadratureSpec::default()).unwrap();
        assert!((m.re - want).abs() < 1e-14, "{} vs {want}", m.re);
        assert!(m.im.abs() < 1e-15);

        // Same limit through the public API: a split chosen so the center
        // threshold is exactly one, with the class boundary pushed to the
        // cell edge.
        let net = NetworkParams::new(1.0, 4.0, 1.0 - 1e-9).unwrap();
        let cfg = NomaConfig::new(0.5, 0.5, 0.01).unwrap();
        assert!((cfg.chi_c().unwrap() - 1.0).abs() < 1e-15);
        let m = success_moment(&net, &cfg, UserClass::CellCenter, Scheme::Noma, 1.0).unwrap();
        assert!((m - want).abs() < 1e-6, "{m} vs {want}");
    }

    #[test]
    fn effective_thresholds_match_references() {
        let quarter = cfg(0.25);
        assert!((quarter.chi_c().unwrap() - CHI_C_25).abs() < 1e-12);
        assert!((quarter.chi_e().unwrap() - CHI_E_25).abs() < 1e-12);
        assert!((cfg(0.55).chi_c().unwrap() - CHI_C_55).abs() < 1e-12);
    }

    #[test]
    fn center_moments_match_references() {
        let net = net();
        let m1 = success_moment(&net, &cfg(0.25), UserClass::CellCenter, Scheme::Noma, 1.0)
            .unwrap();
        assert!((m1 - M1_CC_25).abs() < 1e-9, "m1 {m1}");
        let m2 = success_moment(&net, &cfg(0.25), UserClass::CellCenter, Scheme::Noma, 2.0)
            .unwrap();
        assert!((m2 - M2_CC_25).abs() < 1e-8, "m2 {m2}");
        let m1 = success_moment(&net, &cfg(0.35), UserClass::CellCenter, Scheme::Noma, 1.0)
            .unwrap();
        assert!((m1 - M1_CC_35).abs() < 1e-9, "m1(0.35) {m1}");
    }

    #[test]
    fn edge_moments_match_references() {
        let net = net();
        let m1 =
            success_moment(&net, &cfg(0.25), UserClass::CellEdge, Scheme::Noma, 1.0).unwrap();
        assert!((m1 - M1_CE_25).abs() < 5e-7, "m1 {m1}");
        let m2 =
            success_moment(&net, &cfg(0.25), UserClass::CellEdge, Scheme::Noma, 2.0).unwrap();
        assert!((m2 - M2_CE_25).abs() < 5e-7, "m2 {m2}");
        let m1 =
            success_moment(&net, &cfg(0.35), UserClass::CellEdge, Scheme::Noma, 1.0).unwrap();
        assert!((m1 - M1_CE_35).abs() < 5e-7, "m1(0.35) {m1}");
    }

    #[test]
    fn fast_edge_moment_matches_the_adaptive_path() {
        let chi = CHI_E_25;
        let fast = moment_ce_fast(TAU, 0.5, chi, real(1.0), &CE_OUTER).unwrap();
        assert!((fast.re - M1_CE_25).abs() < 5e-7, "{}", fast.re);
        for b in [real(2.0), Complex64::new(0.0, 2.0), Complex64::new(0.5, 2.0)] {
            let fast = moment_ce_fast(TAU, 0.5, chi, b, &CE_OUTER).unwrap();
            let slow = moment_ce(TAU, 0.5, chi, b, &CE_OUTER).unwrap();
            assert!((fast - slow).norm() < 1e-6, "b={b}: {fast} vs {slow}");
        }
        // An order deep into inversion territory, where the nested path is
        // already expensive but still affordable as a reference.
        let b = Complex64::new(0.0, 50.0);
        let fast = moment_ce_fast(TAU, 0.5, chi, b, &CE_OUTER).unwrap();
        let slow = moment_ce(TAU, 0.5, chi, b, &CE_OUTER).unwrap();
        assert!((fast - slow).norm() < 5e-6, "{fast} vs {slow}");
    }

    #[test]
    fn orthogonal_moments_match_references_and_reuse_the_code_path() {
        let net = net();
        let cfg = cfg(0.25);
        let pairs = [
            (UserClass::CellCenter, 1.0, OMA_M1_CC),
            (UserClass::CellCenter, 2.0, OMA_M2_CC),
            (UserClass::CellEdge, 1.0, OMA_M1_CE),
            (UserClass::CellEdge, 2.0, OMA_M2_CE),
        ];
        for (class, b, want) in pairs {
            let got = success_moment(&net, &cfg, class, Scheme::Oma, b).unwrap();
            assert!((got - want).abs() < 5e-7, "{class:?} b={b}: {got} vs {want}");
        }

        // The scheme wrapper only swaps the threshold; it adds no numerics
        // of its own on top of the raw evaluation at chi = beta.
        let via_scheme = success_moment_order(
            &net,
            &cfg,
            UserClass::CellCenter,
            Scheme::Oma,
            real(1.0),
            &QuadratureSpec::default(),
        )
        .unwrap();
        let direct =
            moment_cc(TAU, 0.5, cfg.beta_c, real(1.0), &QuadratureSpec::default()).unwrap();
        assert!((via_scheme - direct).norm() < 1e-13);
    }

    #[test]
    fn vanishing_power_split_approaches_orthogonal_edge_moment() {
        let net = net();
        let tiny = cfg(1e-9);
        let noma =
            success_moment(&net, &tiny, UserClass::CellEdge, Scheme::Noma, 1.0).unwrap();
        let oma = success_moment(&net, &tiny, UserClass::CellEdge, Scheme::Oma, 1.0).unwrap();
        assert!((noma - oma).abs() < 1e-6, "noma {noma} vs oma {oma}");
    }

    #[test]
    fn imaginary_order_moments_match_references() {
        let net = net();
        let cfg = cfg(0.25);
        let spec = QuadratureSpec::default();
        let cases = [
            (0.5, 0.617_859_177_734_640_1, -0.441_110_813_900_628_6),
            (2.0, 0.181_557_361_143_811_2, -0.241_724_959_422_973_7),
            (7.0, 0.108_158_687_306_505_3, -0.113_088_920_723_400_1),
        ];
        for (t, want_re, want_im) in cases {
            let m = success_moment_order(
                &net,
                &cfg,
                UserClass::CellCenter,
                Scheme::Noma,
                Complex64::new(0.0, t),
                &spec,
            )
            .unwrap();
            assert!((m.re - want_re).abs() < 1e-8, "t={t}: re {} vs {want_re}", m.re);
            assert!((m.im - want_im).abs() < 1e-8, "t={t}: im {} vs {want_im}", m.im);
        }

        let m = success_moment_order(
            &net,
            &cfg,
            UserClass::CellEdge,
            Scheme::Noma,
            Complex64::new(0.0, 2.0),
            &CE_OUTER,
        )
        .unwrap();
        assert!((m.re - (-0.117_033_420_562_436_4)).abs() < 1e-6, "re {}", m.re);
        assert!((m.im - (-0.463_014_654_762_940_7)).abs() < 1e-6, "im {}", m.im);
    }

    #[test]
    fn moments_shrink_as_order_grows() {
        let net = net();
        let cfg = cfg(0.25);
        for class in [UserClass::CellCenter, UserClass::CellEdge] {
            for scheme in [Scheme::Noma, Scheme::Oma] {
                let mut prev = 1.0;
                for b in [0.5, 1.0, 2.0, 3.0] {
                    let m = success_moment(&net, &cfg, class, scheme, b).unwrap();
                    assert!(m > 0.0 && m <= prev + 1e-12, "{class:?}/{scheme:?} b={b}");
                    prev = m;
                }
            }
        }
    }

    #[test]
    fn edge_bounds_sandwich_the_exact_moment() {
        let net = net();
        let cfg = cfg(0.25);
        for b in [-1.0, 1.0, 2.0] {
            let (lo, hi) = ce_moment_bounds(&net, &cfg, Scheme::Noma, b).unwrap();
            let exact = success_moment(&net, &cfg, UserClass::CellEdge, Scheme::Noma, b)
                .unwrap();
            assert!(
                lo <= exact + 1e-9 && exact <= hi + 1e-9,
                "b={b}: {lo} <= {exact} <= {hi}"
            );
        }
        let (lo, hi) = ce_moment_bounds(&net, &cfg, Scheme::Noma, 1.0).unwrap();
        assert!((lo - BOUND_LO_B1_25).abs() < 1e-8, "lo {lo}");
        assert!((hi - BOUND_HI_B1_25).abs() < 1e-8, "hi {hi}");
        let (lo, hi) = ce_moment_bounds(&net, &cfg, Scheme::Noma, -1.0).unwrap();
        assert!((lo - BOUND_LO_BM1_25).abs() < 1e-7, "lo {lo}");
        assert!((hi - BOUND_HI_BM1_25).abs() < 1e-7, "hi {hi}");
    }

    #[test]
    fn bounds_collapse_when_all_users_are_central() {
        // tau -> 1 shrinks the ratio range to a point, so the frozen-kernel
        // evaluations and the exact moment all meet.
        let chi = 0.9;
        let (lo, hi) = moment_ce_bounds(0.999_99, 0.5, chi, 1.0).unwrap();
        let exact = moment_ce(0.999_99, 0.5, chi, real(1.0), &CE_OUTER).unwrap().re;
        assert!(hi - lo < 1e-4, "gap {}", hi - lo);
        assert!(lo <= exact + 1e-7 && exact <= hi + 1e-7);
    }

    #[test]
    fn bounds_reject_zero_order() {
        assert!(matches!(
            moment_ce_bounds(0.7, 0.5, 1.0, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn center_delay_closed_form_agrees_with_kernel_quadrature() {
        // Single-user limit, chi = 0.5: closed form gives exactly 2.
        let closed = mean_local_delay_cc(1.0, 0.5, 0.5);
        assert_eq!(closed, 2.0);
        let z = z_kernel_quadrature(real(-1.0), 0.5, 1.0, 0.5, &QuadratureSpec::default())
            .unwrap();
        let via_moment = 1.0 / (1.0 + z.re);
        assert!((closed - via_moment).abs() < 1e-8, "{closed} vs {via_moment}");

        // Zero threshold always succeeds on the first attempt.
        assert_eq!(mean_local_delay_cc(0.7, 0.5, 0.0), 1.0);

        // Nonpositive denominator: heavier-than-geometric retransmissions.
        assert!(mean_local_delay_cc(1.0, 0.5, 2.0).is_infinite());
        assert!(mean_local_delay_cc(1.0, 0.5, 1.0).is_infinite());
    }

    #[test]
    fn delay_matches_references_across_classes() {
        let net = net();
        // Strong center threshold at theta = 0.25: divergent.
        let d = mean_local_delay(&net, &cfg(0.25), UserClass::CellCenter, Scheme::Noma)
            .unwrap();
        assert!(d.is_infinite());

        // Mild threshold at theta = 0.55: finite, matches the reference.
        let d = mean_local_delay(&net, &cfg(0.55), UserClass::CellCenter, Scheme::Noma)
            .unwrap();
        assert!((d - DELAY_CC_55).abs() < 1e-9, "{d}");
        let alt = mean_local_delay_cc_alt_exponent(TAU, 0.5, CHI_C_55);
        assert!((alt - DELAY_CC_55_ALT).abs() < 1e-9, "{alt}");
        // The two conventions genuinely disagree here.
        assert!((d - alt).abs() > 1.0);

        // Edge user at theta = 0.25: finite.
        let d =
            mean_local_delay(&net, &cfg(0.25), UserClass::CellEdge, Scheme::Noma).unwrap();
        assert!((d - DELAY_CE_25).abs() < 5e-5, "{d}");

        // Edge user past its divergence threshold (chi_e >= 1 at delta=1/2).
        let d =
            mean_local_delay(&net, &cfg(0.34), UserClass::CellEdge, Scheme::Noma).unwrap();
        assert!(d.is_infinite());
    }

    #[test]
    fn throughput_examples_and_matched_time_share() {
        let net = net();
        let cfg25 = cfg(0.25);

        let t = cell_throughput(&net, &cfg25, Scheme::Noma, 0.0).unwrap();
        assert!(t.feasible);
        assert!((t.total - T_NOMA_25).abs() < 1e-6, "{}", t.total);
        assert!((t.cc_rate + t.ce_rate - t.total).abs() < 1e-12);

        let t = cell_throughput(&net, &cfg25, Scheme::Oma, 0.5).unwrap();
        assert!((t.total - T_OMA_HALF).abs() < 1e-6, "{}", t.total);

        // Degenerate time shares: one class never scheduled.
        let t = cell_throughput(&net, &cfg25, Scheme::Oma, 1.0).unwrap();
        assert_eq!(t.ce_rate, 0.0);
        assert!((t.total - (1.0 + cfg25.beta_c).log2() * OMA_M1_CC).abs() < 1e-6);
        let t = cell_throughput(&net, &cfg25, Scheme::Oma, 0.0).unwrap();
        assert_eq!(t.cc_rate, 0.0);
        assert!((t.total - (1.0 + cfg25.beta_e).log2() * OMA_M1_CE).abs() < 1e-6);

        // Infeasible split renders flat zero with the flag cleared.
        let t = cell_throughput(&net, &cfg(0.7), Scheme::Noma, 0.0).unwrap();
        assert!(!t.feasible);
        assert_eq!(t.total, 0.0);

        assert!(cell_throughput(&net, &cfg25, Scheme::Oma, 1.2).is_err());

        let rho = matched_ce_rate_rho(&net, &cfg25).unwrap();
        assert!((rho - RHO_STAR_25).abs() < 1e-6, "{rho}");
        let t_matched = cell_throughput(&net, &cfg25, Scheme::Oma, rho).unwrap();
        assert!((t_matched.total - T_OMA_MATCHED_25).abs() < 1e-6);
        // Superposition beats orthogonal sharing at the same edge rate.
        assert!(T_NOMA_25 > t_matched.total);
        assert!(
            (t_matched.ce_rate
                - (1.0 + cfg25.beta_e).log2()
                    * success_moment(&net, &cfg25, UserClass::CellEdge, Scheme::Noma, 1.0)
                        .unwrap())
            .abs()
                < 1e-6
        );
    }

    #[test]
    fn edge_moment_decreases_and_center_increases_with_power_split() {
        let net = net();
        let mut prev_ce = f64::INFINITY;
        let mut prev_cc = 0.0;
        for theta in [0.05, 0.15, 0.25, 0.35] {
            let cfg = cfg(theta);
            let ce = success_moment(&net, &cfg, UserClass::CellEdge, Scheme::Noma, 1.0)
                .unwrap();
            assert!(ce < prev_ce, "theta={theta}: {ce} !< {prev_ce}");
            prev_ce = ce;
            // beta_c/theta is the active center branch on this whole grid.
            assert!((cfg.chi_c().unwrap() - cfg.beta_c / theta).abs() < 1e-12);
            let cc = success_moment(&net, &cfg, UserClass::CellCenter, Scheme::Noma, 1.0)
                .unwrap();
            assert!(cc > prev_cc, "theta={theta}: {cc} !> {prev_cc}");
            prev_cc = cc;
        }
    }
}
