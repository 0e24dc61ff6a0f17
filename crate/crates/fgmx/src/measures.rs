//! Association measures: Spearman's rho, tail dependence, Blomqvist's beta
//! and the diagonal singular mass P(U = V).

use serde::{Deserialize, Serialize};

use crate::copula::CopulaSpec;
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadratureConfig};

/// How a measure value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Closed form or an exact short-circuit (e.g. λ = 0 when φ(1) = 0).
    Analytic,
    /// Numeric estimation: quadrature or extrapolated differences.
    Quadrature,
    /// Empirical estimate from samples.
    MonteCarlo,
}

/// A measure value tagged with its provenance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Measure {
    pub value: f64,
    pub method: Method,
}

impl Measure {
    fn analytic(value: f64) -> Self {
        Measure {
            value,
            method: Method::Analytic,
        }
    }

    fn quadrature(value: f64) -> Self {
        Measure {
            value,
            method: Method::Quadrature,
        }
    }
}

/// The association measures of a validated spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureSet {
    pub rho: Measure,
    pub lambda_upper: Measure,
    pub lambda_lower: Measure,
    pub beta: Measure,
    pub diagonal_mass: Measure,
}

/// Spearman's rho.
///
/// The primary route integrates 24·θ(v)·φ(v)·Φ(v) over the unit interval
/// (Φ the antiderivative of φ), which keeps θ′ out of the integrand where
/// θ diverges at 0⁺. When θ carries an analytic derivative the equivalent
/// form 12·[Φ²(1)θ(1) − ∫Φ²θ′] serves as a cross-check; on disagreement —
/// or when a numerically built Φ disagrees with itself across tolerances —
/// the defining double integral 12·∬C − 3 decides.
pub fn spearman_rho(spec: &CopulaSpec, cfg: &QuadratureConfig) -> Result<f64> {
    spec.ensure_valid()?;
    let primary = rho_intermediate(spec, cfg)?;

    if spec.theta().has_analytic_derivative() {
        let stated = rho_stated(spec, cfg)?;
        if (primary - stated).abs() <= 1e-6 {
            return Ok(primary);
        }
        return rho_via_cdf(spec, cfg);
    }

    if !spec.phi().has_analytic_antiderivative() {
        let tighter = QuadratureConfig {
            abs_tol: cfg.abs_tol * 0.1,
            rel_tol: cfg.rel_tol * 0.1,
            ..*cfg
        };
        let again = rho_intermediate(spec, &tighter)?;
        if (primary - again).abs() > 1e-7 {
            return rho_via_cdf(spec, cfg);
        }
    }
    Ok(primary)
}

/// 24·∫ θ φ Φ over [0, 1].
pub fn rho_intermediate(spec: &CopulaSpec, cfg: &QuadratureConfig) -> Result<f64> {
    let phi = spec.phi();
    let v = integrate(
        |t| Ok(spec.theta().eval(t) * phi.eval(t) * phi.antideriv(t)?),
        0.0,
        1.0,
        cfg,
    )?;
    Ok(24.0 * v)
}

/// 12·[Φ²(1)·θ(1⁻) − ∫ Φ² θ′].
pub fn rho_stated(spec: &CopulaSpec, cfg: &QuadratureConfig) -> Result<f64> {
    let phi = spec.phi();
    let big_phi_1 = phi.antideriv(1.0)?;
    let boundary = big_phi_1 * big_phi_1 * spec.theta_at_one();
    let tail = integrate(
        |t| {
            let p = phi.antideriv(t)?;
            Ok(p * p * spec.theta_deriv(t))
        },
        0.0,
        1.0,
        cfg,
    )?;
    Ok(12.0 * (boundary - tail))
}

/// The defining form 12·∬ C(u,v) du dv − 3, by iterated quadrature with the
/// inner integral split at the diagonal kink.
pub fn rho_via_cdf(spec: &CopulaSpec, cfg: &QuadratureConfig) -> Result<f64> {
    spec.ensure_valid()?;
    let inner_cfg = QuadratureConfig {
        abs_tol: (cfg.abs_tol * 0.1).max(1e-12),
        rel_tol: (cfg.rel_tol * 0.1).max(1e-12),
        ..*cfg
    };
    let outer = integrate(
        |u| {
            let left = integrate(|v| spec.cdf(u, v), 0.0, u, &inner_cfg)?;
            let right = integrate(|v| spec.cdf(u, v), u, 1.0, &inner_cfg)?;
            Ok(left + right)
        },
        0.0,
        1.0,
        cfg,
    )?;
    Ok(12.0 * outer - 3.0)
}

/// Upper tail dependence coefficient λ = −φ²(1)·θ′(1⁻).
///
/// φ(1) = 0 short-circuits to an exact zero. Otherwise θ′ at 1 is taken
/// from the analytic derivative when present, else from Richardson-
/// extrapolated one-sided differences. Values escaping [0, 1] by less than
/// 1e-6 are clamped; anything worse reports an inconsistency.
pub fn upper_tail_dep(spec: &CopulaSpec) -> Result<Measure> {
    spec.ensure_valid()?;
    let phi1 = spec.phi().eval(1.0);
    if phi1.abs() <= 1e-12 {
        return Ok(Measure::analytic(0.0));
    }
    let analytic = spec.theta().has_analytic_derivative();
    let dtheta = spec.theta().deriv_left_limit(1.0)?;
    let lambda = -phi1 * phi1 * dtheta;
    if !(-1e-6..=1.0 + 1e-6).contains(&lambda) {
        return Err(Error::Inconsistency {
            label: spec.label().to_string(),
            detail: format!("upper tail coefficient {lambda} outside [0, 1]"),
        });
    }
    let value = lambda.clamp(0.0, 1.0);
    Ok(if analytic {
        Measure::analytic(value)
    } else {
        Measure::quadrature(value)
    })
}

/// Lower tail dependence coefficient; identically zero in this family.
pub fn lower_tail_dep(spec: &CopulaSpec) -> Result<Measure> {
    spec.ensure_valid()?;
    Ok(Measure::analytic(0.0))
}

/// Numeric verification of the vanishing lower tail: the sequence
/// C(t, t)/t at t = 1e-3, 1e-4, 1e-5, 1e-6.
pub fn lower_tail_limit_sequence(spec: &CopulaSpec) -> Result<Vec<(f64, f64)>> {
    [1e-3, 1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&t| Ok((t, spec.cdf(t, t)? / t)))
        .collect()
}

/// Blomqvist's beta = 4·C(1/2, 1/2) − 1.
pub fn blomqvist_beta(spec: &CopulaSpec) -> Result<Measure> {
    Ok(Measure::analytic(4.0 * spec.cdf(0.5, 0.5)? - 1.0))
}

/// Mass of the singular diagonal component, P(U = V) = −∫ θ′ φ².
pub fn diagonal_mass(spec: &CopulaSpec, cfg: &QuadratureConfig) -> Result<Measure> {
    let m = spec.singular_below(1.0, cfg)?;
    if m > 1.0 + 1e-6 {
        return Err(Error::Inconsistency {
            label: spec.label().to_string(),
            detail: format!("diagonal mass {m} exceeds 1"),
        });
    }
    Ok(Measure::quadrature(m.clamp(0.0, 1.0)))
}

/// All measures of a validated spec.
pub fn measure_set(spec: &CopulaSpec, cfg: &QuadratureConfig) -> Result<MeasureSet> {
    Ok(MeasureSet {
        rho: Measure::quadrature(spearman_rho(spec, cfg)?),
        lambda_upper: upper_tail_dep(spec)?,
        lambda_lower: lower_tail_dep(spec)?,
        beta: blomqvist_beta(spec)?,
        diagonal_mass: diagonal_mass(spec, cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::ValidationOptions;
    use crate::expr::parse;
    use crate::func::Func1D;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn fgm(theta: f64) -> CopulaSpec {
        CopulaSpec::new(
            format!("fgm({theta})"),
            Func1D::constant(theta),
            Func1D::from_fn("t(1-t)", (0.0, 1.0), |t| t * (1.0 - t))
                .with_derivative(|t| 1.0 - 2.0 * t)
                .with_antiderivative(|t| t * t / 2.0 - t * t * t / 3.0),
        )
        .validated(&ValidationOptions::default())
        .unwrap()
    }

    fn ca(alpha: f64) -> CopulaSpec {
        CopulaSpec::new(
            format!("ca({alpha})"),
            Func1D::from_fn("t^-a-1", (0.0, 1.0), move |t| t.powf(-alpha) - 1.0)
                .with_derivative(move |t| -alpha * t.powf(-alpha - 1.0)),
            Func1D::identity(),
        )
        .validated(&ValidationOptions::default())
        .unwrap()
    }

    fn remark() -> CopulaSpec {
        CopulaSpec::new(
            "remark",
            Func1D::from_expr(&parse("1/t").unwrap(), (0.0, 1.0)),
            Func1D::from_expr(&parse("t*(1-t)").unwrap(), (0.0, 1.0)),
        )
        .validated(&ValidationOptions::default())
        .unwrap()
    }

    #[test]
    fn rho_of_fgm_theta_one_is_one_third() {
        let rho = spearman_rho(&fgm(1.0), &cfg()).unwrap();
        assert!((rho - 1.0 / 3.0).abs() < 1e-8, "got {rho}");
    }

    #[test]
    fn rho_of_ca_half_is_three_sevenths() {
        let rho = spearman_rho(&ca(0.5), &cfg()).unwrap();
        assert!((rho - 3.0 / 7.0).abs() < 1e-8, "got {rho}");
    }

    #[test]
    fn rho_of_remark_copula_is_three_fifths() {
        let rho = spearman_rho(&remark(), &cfg()).unwrap();
        assert!((rho - 0.6).abs() < 1e-8, "got {rho}");
    }

    #[test]
    fn three_rho_routes_agree() {
        for spec in [fgm(1.0), fgm(-0.7), ca(0.3), ca(0.8), remark()] {
            let a = rho_intermediate(&spec, &cfg()).unwrap();
            let b = rho_stated(&spec, &cfg()).unwrap();
            let c = rho_via_cdf(&spec, &cfg()).unwrap();
            assert!(
                (a - b).abs() < 1e-6 && (a - c).abs() < 1e-6,
                "{}: {a} vs {b} vs {c}",
                spec.label()
            );
        }
    }

    #[test]
    fn lambda_of_ca_is_alpha() {
        let m = upper_tail_dep(&ca(0.7)).unwrap();
        assert_eq!(m.method, Method::Analytic);
        assert!((m.value - 0.7).abs() < 1e-9, "got {}", m.value);
    }

    #[test]
    fn lambda_numeric_path() {
        // same generator but with the analytic derivative withheld
        let alpha = 0.7;
        let spec = CopulaSpec::new(
            "ca-numeric",
            Func1D::from_fn("t^-a-1", (0.0, 1.0), move |t| t.powf(-alpha) - 1.0),
            Func1D::identity(),
        )
        .validated(&ValidationOptions::default())
        .unwrap();
        let m = upper_tail_dep(&spec).unwrap();
        assert_eq!(m.method, Method::Quadrature);
        assert!((m.value - 0.7).abs() < 1e-5, "got {}", m.value);
    }

    #[test]
    fn lambda_zero_when_phi_vanishes_at_one() {
        for spec in [fgm(1.0), fgm(-0.5), remark()] {
            let m = upper_tail_dep(&spec).unwrap();
            assert_eq!(m.value, 0.0);
            assert_eq!(m.method, Method::Analytic);
        }
    }

    #[test]
    fn lower_tail_always_zero_and_limit_trend() {
        assert_eq!(lower_tail_dep(&ca(0.9)).unwrap().value, 0.0);
        assert_eq!(lower_tail_dep(&fgm(1.0)).unwrap().value, 0.0);
        // independence: C(t,t)/t = t decays linearly
        let seq = lower_tail_limit_sequence(&fgm(0.0)).unwrap();
        for (t, v) in seq {
            assert!((v - t).abs() < 1e-12);
        }
        // a strongly upper-tail-dependent member still trends to zero,
        // slowly: C(t,t)/t = t^(1-alpha) for this one
        let seq = lower_tail_limit_sequence(&ca(0.9)).unwrap();
        assert!(seq.windows(2).all(|w| w[1].1 < w[0].1));
        for (t, v) in seq {
            assert!((v - t.powf(0.1)).abs() < 1e-9);
        }
    }

    #[test]
    fn beta_values() {
        // independence
        assert!(blomqvist_beta(&fgm(0.0)).unwrap().value.abs() < 1e-15);
        // comonotone limit
        assert!((blomqvist_beta(&ca(1.0)).unwrap().value - 1.0).abs() < 1e-9);
        // B11: beta = sigma
        let mut b11 = CopulaSpec::new(
            "b11(0.5)",
            Func1D::from_fn("0.5(1/t-1)", (0.0, 1.0), |t| 0.5 * (1.0 / t - 1.0))
                .with_derivative(|t| -0.5 / (t * t)),
            Func1D::identity(),
        );
        b11.validate(&ValidationOptions::default()).unwrap();
        assert!((blomqvist_beta(&b11).unwrap().value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn diagonal_mass_values() {
        // constant theta: no singular component
        assert!(diagonal_mass(&fgm(0.9), &cfg()).unwrap().value < 1e-12);
        // CA: alpha / (2 - alpha)
        let m = diagonal_mass(&ca(0.5), &cfg()).unwrap().value;
        assert!((m - 1.0 / 3.0).abs() < 1e-8, "got {m}");
        // the integration-by-parts route (no analytic derivative attached)
        let spec = CopulaSpec::new(
            "ca-no-deriv",
            Func1D::from_fn("t^-0.5-1", (0.0, 1.0), |t| t.powf(-0.5) - 1.0),
            Func1D::identity(),
        )
        .validated(&ValidationOptions::default())
        .unwrap();
        let m = diagonal_mass(&spec, &cfg()).unwrap().value;
        assert!((m - 1.0 / 3.0).abs() < 1e-8, "parts route got {m}");
    }

    #[test]
    fn measure_set_aggregates() {
        let set = measure_set(&ca(0.5), &cfg()).unwrap();
        assert!((set.rho.value - 3.0 / 7.0).abs() < 1e-8);
        assert!((set.lambda_upper.value - 0.5).abs() < 1e-9);
        assert_eq!(set.lambda_lower.value, 0.0);
        assert!((set.beta.value - (2f64.sqrt() - 1.0)).abs() < 1e-9);
        assert!((set.diagonal_mass.value - 1.0 / 3.0).abs() < 1e-8);
        let json = serde_json::to_string(&set).unwrap();
        assert!(json.contains("\"method\":\"analytic\""));
    }
}
