//! Numerical kernels shared by the analytic layer: adaptive quadrature, the
//! regularized incomplete beta function, principal-branch complex powers,
//! and the interference kernel `Z`.
//!
//! The kernel
//!
//! ```text
//! Z(b, chi, a, delta) = chi^delta * INT_{chi^(-delta) a}^{inf}
//!                       [1 - (1 + t^(-1/delta))^(-b)] dt
//! ```
//!
//! aggregates the fading-averaged contribution of the interference field to
//! the `b`-th conditional success moment. `chi` is the effective SIR
//! threshold, `delta = 2/alpha` for path-loss exponent `alpha`, and `a >= 1`
//! encodes the squared clearance ratio between the serving distance and the
//! nearest possible interferer. The order `b` may be complex; purely
//! imaginary orders drive characteristic-function inversion.

mod betainc;
mod quad;

pub use betainc::{ln_gamma, reg_inc_beta};
pub(crate) use quad::{integrate_adaptive, integrate_semi_infinite_seeded, qk15};
pub use quad::{integrate_finite, integrate_semi_infinite, QuadratureSpec};

use num_complex::Complex64;

use crate::{Error, Result};

/// `base^exponent` on the principal branch, for strictly positive real base.
pub fn complex_pow_principal(base: f64, exponent: Complex64) -> Result<Complex64> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::Domain(format!(
            "principal power needs a positive finite base, got {base}"
        )));
    }
    Ok((exponent * base.ln()).exp())
}

/// `exp(z) - 1` without cancellation near `z = 0`, where the kernel
/// integrand would otherwise lose all relative precision in its tail.
pub(crate) fn expm1_complex(z: Complex64) -> Complex64 {
    if z.norm() > 0.5 {
        return z.exp() - 1.0;
    }
    let mut term = z;
    let mut sum = z;
    for k in 2..32 {
        term *= z / k as f64;
        sum += term;
        if term.norm() <= f64::EPSILON * sum.norm() {
            break;
        }
    }
    sum
}

fn validate_z_args(b: Complex64, chi: f64, a: f64, delta: f64) -> Result<()> {
    if !b.re.is_finite() || !b.im.is_finite() {
        return Err(Error::Domain(format!("kernel order must be finite, got {b}")));
    }
    if !(chi > 0.0) || !chi.is_finite() {
        return Err(Error::Domain(format!(
            "effective threshold must be positive and finite, got {chi}"
        )));
    }
    if !(a >= 1.0) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "clearance ratio must be >= 1 (nearest interferer no closer than the server), got {a}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta = 2/alpha must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// Interference kernel `Z(b, chi, a, delta)` with default quadrature knobs.
///
/// Dispatches to exact closed forms where they exist (`b = 0`, `b = -1`,
/// and `b = 1` with `delta = 1/2`), otherwise integrates numerically.
pub fn z_kernel(b: Complex64, chi: f64, a: f64, delta: f64) -> Result<Complex64> {
    z_kernel_with(b, chi, a, delta, &QuadratureSpec::default())
}

/// [`z_kernel`] with caller-controlled quadrature tolerances and budget.
pub fn z_kernel_with(
    b: Complex64,
    chi: f64,
    a: f64,
    delta: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    validate_z_args(b, chi, a, delta)?;
    if b == Complex64::ZERO {
        // (1 + u)^0 = 1: the integrand vanishes identically.
        return Ok(Complex64::ZERO);
    }
    if b.im == 0.0 {
        if b.re == -1.0 {
            // 1 - (1 + t^(-1/delta)) = -t^(-1/delta) integrates in closed form.
            let value = -(delta / (1.0 - delta)) * chi * a.powf(1.0 - 1.0 / delta);
            return Ok(Complex64::new(value, 0.0));
        }
        if b.re == 1.0 && delta == 0.5 {
            // Integrand reduces to 1/(1 + t^2).
            let sqrt_chi = chi.sqrt();
            let value = sqrt_chi * (std::f64::consts::FRAC_PI_2 - (a / sqrt_chi).atan());
            return Ok(Complex64::new(value, 0.0));
        }
    }
    z_kernel_quadrature(b, chi, a, delta, spec)
}

/// The always-integrate route behind [`z_kernel`], exposed so closed forms
/// can be cross-checked against it.
pub fn z_kernel_quadrature(
    b: Complex64,
    chi: f64,
    a: f64,
    delta: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    validate_z_args(b, chi, a, delta)?;
    let lower = chi.powf(-delta) * a;
    let inv_delta = 1.0 / delta;
    // 1 - (1 + u)^(-b) as -expm1(-b ln(1 + u)): the far tail has u ~ 0 and
    // a naive 1 - exp(...) would leave only absolute precision there, which
    // the unbounded tail Jacobian then amplifies into integrable noise.
    let g = move |t: f64| {
        let u = t.powf(-inv_delta);
        -expm1_complex(-b * u.ln_1p())
    };

    // Im(b) != 0 makes the integrand oscillate in the phase
    // Im(b) * ln(1 + t^(-1/delta)); seed one panel per half period so the
    // first pass already resolves every oscillation.
    let split = lower.max(1.0);
    let phase_at = |t: f64| b.im.abs() * t.powf(-inv_delta).ln_1p();
    let phase_split = phase_at(split);
    let head_panels = if lower < split {
        panels_for_phase(phase_at(lower) - phase_split)
    } else {
        1
    };
    let tail_panels = panels_for_phase(phase_split);
    let budget = spec.max_subdivisions + head_panels + tail_panels;
    let seeded_spec = spec.with_budget(budget);

    let value =
        integrate_semi_infinite_seeded(&g, lower, head_panels, tail_panels, &seeded_spec)?;
    Ok(chi.powf(delta) * value)
}

pub(crate) fn panels_for_phase(phase_range: f64) -> usize {
    if phase_range.is_finite() {
        ((phase_range / std::f64::consts::PI).ceil() as usize).clamp(8, 1 << 16)
    } else {
        1 << 16
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn arctan_closed_form_agrees_with_quadrature() {
        // At b = 1, delta = 1/2 the kernel is sqrt(chi) (pi/2 - atan(a/sqrt(chi))).
        let spec = QuadratureSpec::default();
        for chi in [0.1, 1.0, 10.0] {
            for a in [1.0, 2.0, 4.0] {
                let closed = z_kernel(re(1.0), chi, a, 0.5).unwrap();
                let sqrt_chi = chi.sqrt();
                let expect = sqrt_chi * (std::f64::consts::FRAC_PI_2 - (a / sqrt_chi).atan());
                assert!((closed.re - expect).abs() <= 1e-14 * expect);
                let quad = z_kernel_quadrature(re(1.0), chi, a, 0.5, &spec).unwrap();
                let rel = (quad.re - expect).abs() / expect;
                assert!(rel < 1e-8, "chi={chi} a={a}: rel error {rel:.2e}");
                assert_eq!(quad.im, 0.0);
            }
        }
    }

    #[test]
    fn reciprocal_order_closed_form_agrees_with_quadrature() {
        // Slow t^(1 - 1/delta) tails need extra budget at delta near 1.
        let spec = QuadratureSpec::default().with_budget(800);
        for delta in [0.4, 0.5, 0.8] {
            let closed = z_kernel(re(-1.0), 1.7, 1.3, delta).unwrap();
            let expect = -(delta / (1.0 - delta)) * 1.7 * 1.3f64.powf(1.0 - 1.0 / delta);
            assert!((closed.re - expect).abs() <= 1e-14 * expect.abs());
            let quad = z_kernel_quadrature(re(-1.0), 1.7, 1.3, delta, &spec).unwrap();
            let rel = (quad.re - closed.re).abs() / closed.re.abs();
            assert!(rel < 1e-8, "delta={delta}: rel error {rel:.2e}");
        }
    }

    #[test]
    fn zero_order_vanishes_exactly() {
        let v = z_kernel(Complex64::ZERO, 3.0, 2.0, 0.5).unwrap();
        assert_eq!(v, Complex64::ZERO);
    }

    #[test]
    fn matches_arbitrary_precision_references() {
        // mpmath (30 digits): Z(2, 1.7, 1.3, 0.5)
        let v = z_kernel(re(2.0), 1.7, 1.3, 0.5).unwrap();
        assert!((v.re - 1.864_894_187_841_247_575_5).abs() < 2e-9, "got {}", v.re);
        assert!(v.im.abs() < 1e-12);

        // mpmath: Z(1.5, 0.8, 2.5, 0.625)
        let v = z_kernel(re(1.5), 0.8, 2.5, 0.625).unwrap();
        assert!((v.re - 1.089_417_246_167_997_443_4).abs() < 2e-9, "got {}", v.re);

        // mpmath: Z(3i, 1.7, 1.3, 0.5)
        let v = z_kernel(Complex64::new(0.0, 3.0), 1.7, 1.3, 0.5).unwrap();
        assert!((v.re - 1.064_268_106_982_343_477_4).abs() < 2e-9, "got {}", v.re);
        assert!((v.im - 2.972_890_892_691_386_862_3).abs() < 2e-9, "got {}", v.im);

        // mpmath: Z(0.5 + 2i, 1.2, 1.0, 0.375)
        let v = z_kernel(Complex64::new(0.5, 2.0), 1.2, 1.0, 0.375).unwrap();
        assert!((v.re - 0.556_463_332_628_587_177_5).abs() < 2e-9, "got {}", v.re);
        assert!((v.im - 0.949_099_784_359_209_676_9).abs() < 2e-9, "got {}", v.im);
    }

    #[test]
    fn kernel_shrinks_as_clearance_grows() {
        // Positive order: Z decreases in a. Negative order: Z < 0 rises to 0.
        let mut prev = f64::INFINITY;
        for a in [1.0, 1.5, 2.5, 5.0, 20.0] {
            let v = z_kernel(re(2.0), 1.3, a, 0.5).unwrap().re;
            assert!(v > 0.0 && v < prev, "a={a}: {v} !< {prev}");
            prev = v;
        }
        let mut prev = f64::NEG_INFINITY;
        for a in [1.0, 1.5, 2.5, 5.0, 20.0] {
            let v = z_kernel(re(-2.0), 1.3, a, 0.5).unwrap().re;
            assert!(v < 0.0 && v > prev, "a={a}: {v} !> {prev}");
            prev = v;
        }
    }

    #[test]
    fn rejects_out_of_domain_arguments() {
        let b = re(1.0);
        assert!(matches!(z_kernel(b, 0.0, 2.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(z_kernel(b, -1.0, 2.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(z_kernel(b, 1.0, 0.9, 0.5), Err(Error::Domain(_))));
        assert!(matches!(z_kernel(b, 1.0, 2.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(z_kernel(b, 1.0, 2.0, 1.0), Err(Error::Domain(_))));
        let nan = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(z_kernel(nan, 1.0, 2.0, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn principal_power_of_two_to_the_i() {
        // 2^i = cos(ln 2) + i sin(ln 2), mpmath at 20 digits.
        let v = complex_pow_principal(2.0, Complex64::new(0.0, 1.0)).unwrap();
        assert!((v.re - 0.769_238_901_363_972_126_6).abs() < 1e-15);
        assert!((v.im - 0.638_961_276_313_634_801_2).abs() < 1e-15);

        let one = complex_pow_principal(5.3, Complex64::ZERO).unwrap();
        assert_eq!(one, Complex64::new(1.0, 0.0));

        assert!(complex_pow_principal(0.0, Complex64::new(1.0, 0.0)).is_err());
        assert!(complex_pow_principal(-2.0, Complex64::new(1.0, 0.0)).is_err());
    }
}
