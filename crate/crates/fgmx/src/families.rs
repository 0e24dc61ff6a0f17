//! Named members of the family and the survival-function machinery behind
//! the θ(1) = 0 subfamily.
//!
//! A nonnegative random lifetime with cdf K, survival K̄ and density k
//! generates the copula uv·[1 + K̄⁻¹(max(u,v))], i.e. θ = K̄⁻¹ and φ = Id.
//! Such a generator is admissible exactly when its hazard rate dominates
//! that of the standard Pareto law: k(t)/K̄(t) ≥ 1/(1+t). That criterion
//! replaces the generic grid validation for these members and gives closed
//! forms ρ = 3∫K̄⁴ and λ = 1/k(0).

use serde::Serialize;

use crate::copula::{
    CondMax, CondMin, CondScalar, CopulaSpec, GridSpec, ValidationOptions, ValidityReport,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::func::Func1D;
use crate::quad::{integrate, QuadratureConfig};
use crate::root::find_root_monotone;
use crate::stats::spearman_rho_hat;

/// A survival-function generator: K̄, its density k, the generalized
/// inverse K̄⁻¹ and the right endpoint of the support of K.
#[derive(Debug, Clone)]
pub struct KGenerator {
    label: String,
    survival: Func1D,
    density: Func1D,
    inverse: Func1D,
    support_end: f64,
}

impl KGenerator {
    /// Build from explicit parts, enforcing the structural invariants:
    /// K̄(0) = 1, K̄ non-increasing and vanishing at the support end, and
    /// K̄(K̄⁻¹(x)) = x on probe points.
    pub fn new(
        label: impl Into<String>,
        survival: Func1D,
        density: Func1D,
        inverse: Func1D,
        support_end: f64,
    ) -> Result<Self> {
        let label = label.into();
        let gen = KGenerator {
            label: label.clone(),
            survival,
            density,
            inverse,
            support_end,
        };
        let err = |detail: String| {
            Err(Error::Generator {
                label: label.clone(),
                detail,
            })
        };

        let at0 = gen.survival.eval(0.0);
        if (at0 - 1.0).abs() > 1e-9 {
            return err(format!("survival function at 0 is {at0}, expected 1"));
        }
        let horizon = gen.probe_horizon();
        let mut prev = at0;
        for i in 1..=64 {
            let t = horizon * i as f64 / 64.0;
            let s = gen.survival.eval(t);
            if s > prev + 1e-9 {
                return err(format!("survival function increases near t = {t}"));
            }
            prev = s;
        }
        if prev > 1e-3 {
            return err(format!(
                "survival function is still {prev} at t = {horizon}; it must vanish"
            ));
        }
        for i in 1..=32 {
            let x = i as f64 / 32.0;
            let t = gen.inverse.eval(x);
            if !t.is_finite() || t < 0.0 {
                return err(format!("inverse survival at {x} is {t}"));
            }
            let back = gen.survival.eval(t);
            if (back - x).abs() > 1e-9 {
                return err(format!(
                    "inverse round-trip failed at {x}: survival({t}) = {back}"
                ));
            }
        }
        Ok(gen)
    }

    /// Build from survival and density alone; the inverse is obtained by
    /// monotone bisection per call.
    pub fn from_survival(
        label: impl Into<String>,
        survival: Func1D,
        density: Func1D,
        support_end: f64,
    ) -> Result<Self> {
        let surv = survival.clone();
        let horizon = if support_end.is_finite() {
            support_end
        } else {
            // push the bracket out until the survival probability is dust
            let mut t = 1.0;
            let mut steps = 0;
            while surv.eval(t) > 1e-15 && steps < 80 {
                t *= 2.0;
                steps += 1;
            }
            t
        };
        let surv_for_inverse = survival.clone();
        let inverse = Func1D::from_fn("inverse-survival", (0.0, 1.0), move |x| {
            if x >= 1.0 {
                return 0.0;
            }
            if x <= 0.0 {
                return horizon;
            }
            // 1 - survival is non-decreasing
            find_root_monotone(
                |t| 1.0 - surv_for_inverse.eval(t),
                0.0,
                horizon,
                1.0 - x,
                1e-13,
            )
            .unwrap_or(f64::NAN)
        });
        KGenerator::new(label, survival, density, inverse, support_end)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn survival(&self) -> &Func1D {
        &self.survival
    }

    pub fn density(&self) -> &Func1D {
        &self.density
    }

    pub fn inverse_survival(&self) -> &Func1D {
        &self.inverse
    }

    pub fn support_end(&self) -> f64 {
        self.support_end
    }

    fn probe_horizon(&self) -> f64 {
        if self.support_end.is_finite() {
            self.support_end
        } else {
            let mut t = 1.0;
            let mut steps = 0;
            while self.survival.eval(t).powi(4) > 1e-14 && steps < 64 {
                t *= 2.0;
                steps += 1;
            }
            t
        }
    }

    /// Probe the necessary admissibility bound K̄(x) ≤ 1/(1+x); returns a
    /// witness (x, K̄(x) − 1/(1+x)) if it fails anywhere on the probes.
    pub fn admissibility_probe(&self) -> Option<(f64, f64)> {
        for &t in self.hazard_probe_points().iter() {
            if t == 0.0 {
                continue;
            }
            let excess = self.survival.eval(t) - 1.0 / (1.0 + t);
            if excess > 1e-9 {
                return Some((t, excess));
            }
        }
        None
    }

    fn hazard_probe_points(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        if self.support_end.is_finite() {
            let n = 512;
            for i in 1..n {
                pts.push(self.support_end * i as f64 / n as f64);
            }
        } else {
            let horizon = self.probe_horizon();
            let n = 512;
            let lo: f64 = 1e-9;
            let ratio = (horizon / lo).ln();
            for i in 0..=n {
                pts.push(lo * (ratio * i as f64 / n as f64).exp());
            }
        }
        pts
    }
}

/// Outcome of the hazard admissibility criterion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HazardCheck {
    pub pass: bool,
    /// Worst margin k/K̄ − 1/(1+t) over the probes, with its location.
    pub min_margin: f64,
    pub at: f64,
    pub probes: usize,
}

/// Check k(t)/K̄(t) ≥ 1/(1+t) on probe points over {t ≥ 0 : 0 < K(t) < 1}.
pub fn check_hazard(gen: &KGenerator) -> HazardCheck {
    let pts = gen.hazard_probe_points();
    let mut min_margin = f64::INFINITY;
    let mut at = 0.0;
    let mut used = 0;
    for &t in &pts {
        let surv = gen.survival.eval(t);
        if !(surv > 0.0 && surv < 1.0 || t == 0.0) {
            continue;
        }
        let margin = gen.density.eval(t) / surv.max(f64::MIN_POSITIVE) - 1.0 / (1.0 + t);
        if !margin.is_finite() {
            return HazardCheck {
                pass: false,
                min_margin: f64::NEG_INFINITY,
                at: t,
                probes: pts.len(),
            };
        }
        used += 1;
        if margin < min_margin {
            min_margin = margin;
            at = t;
        }
    }
    HazardCheck {
        pass: used > 0 && min_margin >= -1e-9,
        min_margin,
        at,
        probes: pts.len(),
    }
}

/// Build the copula uv·[1 + K̄⁻¹(max(u,v))] with θ = K̄⁻¹ and φ = Id.
///
/// Validation goes through the hazard criterion instead of the generic
/// grid; a failing hazard yields a spec in the invalid state whose report
/// carries the witness.
pub fn make_k_copula(gen: &KGenerator) -> CopulaSpec {
    let hazard = check_hazard(gen);

    let inv = gen.inverse_survival().clone();
    let theta_value = move |u: f64| {
        if u <= 0.0 {
            f64::INFINITY
        } else if u >= 1.0 {
            inv.eval(1.0)
        } else {
            inv.eval(u)
        }
    };
    let inv_d = gen.inverse_survival().clone();
    let dens = gen.density().clone();
    // d/du K̄⁻¹(u) = -1 / k(K̄⁻¹(u))
    let theta_deriv = move |u: f64| {
        let t = inv_d.eval(u.clamp(1e-300, 1.0));
        -1.0 / dens.eval(t)
    };

    let theta = Func1D::from_fn(format!("inv-survival[{}]", gen.label()), (0.0, 1.0), theta_value)
        .with_derivative(theta_deriv);
    let mut spec = CopulaSpec::new(format!("k-copula[{}]", gen.label()), theta, Func1D::identity());

    // synthesize the four-condition report from the hazard margins:
    // phi = Id makes (c) equivalent to (θφ)'(v) = t - K̄(t)/k(t) ≥ -1
    // at t = K̄⁻¹(v), which is the hazard criterion verbatim
    let mut cond_c_min = f64::INFINITY;
    let mut cond_c_at = (1.0, 1.0);
    let mut cond_d_max = f64::NEG_INFINITY;
    let mut cond_d_at = 1.0;
    for &t in &gen.hazard_probe_points() {
        let surv = gen.survival().eval(t);
        if !(surv > 0.0 && surv < 1.0) && t != 0.0 {
            continue;
        }
        let k = gen.density().eval(t);
        let tp = t - surv / k.max(f64::MIN_POSITIVE);
        if tp.is_finite() && tp < cond_c_min {
            cond_c_min = tp;
            cond_c_at = (surv, surv);
        }
        let dtheta = -1.0 / k.max(f64::MIN_POSITIVE);
        if dtheta.is_finite() && dtheta > cond_d_max {
            cond_d_max = dtheta;
            cond_d_at = surv;
        }
    }
    let theta_at_1 = gen.inverse_survival().eval(1.0);
    let report = ValidityReport {
        cond_a: CondScalar {
            pass: true,
            value: 0.0,
        },
        cond_b: CondScalar {
            pass: theta_at_1.abs() <= 1e-9,
            value: theta_at_1.abs(),
        },
        cond_c: CondMin {
            pass: hazard.pass,
            min: cond_c_min,
            argmin: cond_c_at,
        },
        cond_d: CondMax {
            pass: cond_d_max <= 1e-9,
            max: cond_d_max,
            argmax: cond_d_at,
        },
        grid: GridSpec {
            n_points: hazard.probes,
            eps: 0.0,
        },
        verdict: hazard.pass && theta_at_1.abs() <= 1e-9 && cond_d_max <= 1e-9,
    };
    spec.set_state(report);
    spec
}

/// Spearman's rho of the generated copula, straight from the survival
/// function: 3·∫ K̄⁴ over the support.
pub fn rho_k(gen: &KGenerator, cfg: &QuadratureConfig) -> Result<f64> {
    let surv = gen.survival();
    let integral = if gen.support_end().is_finite() {
        integrate(
            |t| Ok(surv.eval(t).powi(4)),
            0.0,
            gen.support_end(),
            cfg,
        )?
    } else {
        // map the half line to (0,1); admissibility K̄ ≤ 1/(1+t) makes the
        // transformed integrand bounded by (1-x)^2, so no truncation is
        // needed
        integrate(
            |x| {
                let om = 1.0 - x;
                let t = x / om;
                Ok(surv.eval(t).powi(4) / (om * om))
            },
            0.0,
            1.0,
            cfg,
        )?
    };
    Ok(3.0 * integral)
}

/// Upper tail dependence of the generated copula: 1/k(0).
pub fn lambda_k(gen: &KGenerator) -> Result<f64> {
    let k0 = gen.density().eval(0.0);
    if !(k0 > 0.0) || !k0.is_finite() {
        return Err(Error::Generator {
            label: gen.label().to_string(),
            detail: format!("density at 0 is {k0}; the tail coefficient 1/k(0) needs k(0) > 0"),
        });
    }
    Ok((1.0 / k0).clamp(0.0, 1.0))
}

/// Invert (ρ, λ) into the two-parameter survival-generator family with
/// K̄(x) = (1 + x/σ)^(−1/α): α = 4 − 3λ/ρ and σ = ρλ/(4ρ − 3λ).
/// The pair must lie strictly inside the triangle ρ ≤ λ < 4ρ/3 in (0,1)².
pub fn gpd_from_rho_lambda(rho: f64, lambda: f64) -> Result<(f64, f64)> {
    let fail = |ineq: &str| {
        Err(Error::Parameter(format!(
            "(rho, lambda) = ({rho}, {lambda}) violates {ineq}"
        )))
    };
    if !(rho > 0.0 && rho < 1.0) {
        return fail("rho in (0, 1)");
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return fail("lambda in (0, 1)");
    }
    if !(rho <= lambda) {
        return fail("rho <= lambda");
    }
    if !(lambda < 4.0 * rho / 3.0) {
        return fail("lambda < 4*rho/3");
    }
    let alpha = 4.0 - 3.0 * lambda / rho;
    let sigma = rho * lambda / (4.0 * rho - 3.0 * lambda);
    Ok((alpha, sigma))
}

// -- named families -------------------------------------------------------

/// Parameter sets of the named members.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyParams {
    /// uv + θ·u(1−u)·v(1−v), θ ∈ [−1, 1].
    Fgm { theta: f64 },
    /// Constant θ with a user-supplied kernel φ (φ(1) = 0 family).
    ConstantTheta { theta: f64, phi: Expr },
    /// min(u,v)^α (uv)^(1−α); generated by K̄(x) = (1+x)^(−1/α).
    CuadrasAuge { alpha: f64 },
    /// σ·min(u,v) + (1−σ)·uv; generated by K̄(x) = (1+x/σ)^(−1).
    B11 { sigma: f64 },
    /// K̄(x) = (1+x/σ)^(−1/α) with α ∈ (0,1], ασ ∈ (0,1].
    Gpd { alpha: f64, sigma: f64 },
    /// K uniform on [0, α], α ∈ (0,1]: uv(1 + α·min(1−u, 1−v)).
    UniformK { alpha: f64 },
    /// K̄(x) = exp(−rate·x), rate ≥ 1.
    ExponentialK { rate: f64 },
    /// min(u,v)·f(max(u,v)), embedded through θ(u) = f(u)/u − 1, φ = Id.
    DuranteF { f: Expr },
}

/// The family tags exposed by the CLI.
pub const FAMILY_TAGS: [&str; 8] = [
    "fgm",
    "constant-theta",
    "ca",
    "b11",
    "gpd",
    "uniform-k",
    "exponential-k",
    "durante-f",
];

impl FamilyParams {
    pub fn tag(&self) -> &'static str {
        match self {
            FamilyParams::Fgm { .. } => "fgm",
            FamilyParams::ConstantTheta { .. } => "constant-theta",
            FamilyParams::CuadrasAuge { .. } => "ca",
            FamilyParams::B11 { .. } => "b11",
            FamilyParams::Gpd { .. } => "gpd",
            FamilyParams::UniformK { .. } => "uniform-k",
            FamilyParams::ExponentialK { .. } => "exponential-k",
            FamilyParams::DuranteF { .. } => "durante-f",
        }
    }

    /// Check the per-family parameter domain.
    pub fn check_domain(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        match self {
            FamilyParams::Fgm { theta } => {
                if !(-1.0..=1.0).contains(theta) {
                    return bad(format!("fgm needs theta in [-1, 1], got {theta}"));
                }
            }
            FamilyParams::ConstantTheta { theta, .. } => {
                if !theta.is_finite() {
                    return bad(format!("constant-theta needs finite theta, got {theta}"));
                }
            }
            FamilyParams::CuadrasAuge { alpha } => {
                if !(0.0..=1.0).contains(alpha) {
                    return bad(format!("ca needs alpha in [0, 1], got {alpha}"));
                }
            }
            FamilyParams::B11 { sigma } => {
                if !(*sigma > 0.0 && *sigma <= 1.0) {
                    return bad(format!("b11 needs sigma in (0, 1], got {sigma}"));
                }
            }
            FamilyParams::Gpd { alpha, sigma } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return bad(format!("gpd needs alpha in (0, 1], got {alpha}"));
                }
                let prod = alpha * sigma;
                if !(*sigma > 0.0 && prod > 0.0 && prod <= 1.0) {
                    return bad(format!(
                        "gpd needs alpha*sigma in (0, 1], got {alpha}*{sigma} = {prod}"
                    ));
                }
            }
            FamilyParams::UniformK { alpha } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return bad(format!("uniform-k needs alpha in (0, 1], got {alpha}"));
                }
            }
            FamilyParams::ExponentialK { rate } => {
                if !(*rate >= 1.0 && rate.is_finite()) {
                    return bad(format!("exponential-k needs rate >= 1, got {rate}"));
                }
            }
            FamilyParams::DuranteF { .. } => {}
        }
        Ok(())
    }

    /// The survival generator behind the member, for the families that have
    /// one.
    pub fn k_generator(&self) -> Result<Option<KGenerator>> {
        self.check_domain()?;
        let gen = match self {
            FamilyParams::CuadrasAuge { alpha } if *alpha > 0.0 => {
                let a = *alpha;
                Some(KGenerator::new(
                    format!("ca({a})"),
                    Func1D::from_fn("(1+x)^(-1/a)", (0.0, f64::INFINITY), move |x| {
                        (1.0 + x).powf(-1.0 / a)
                    }),
                    Func1D::from_fn("density", (0.0, f64::INFINITY), move |x| {
                        (1.0 / a) * (1.0 + x).powf(-1.0 / a - 1.0)
                    }),
                    Func1D::from_fn("x^-a-1", (0.0, 1.0), move |x| x.powf(-a) - 1.0),
                    f64::INFINITY,
                )?)
            }
            FamilyParams::B11 { sigma } => {
                let s = *sigma;
                Some(KGenerator::new(
                    format!("b11({s})"),
                    Func1D::from_fn("(1+x/s)^-1", (0.0, f64::INFINITY), move |x| {
                        1.0 / (1.0 + x / s)
                    }),
                    Func1D::from_fn("density", (0.0, f64::INFINITY), move |x| {
                        (1.0 / s) / (1.0 + x / s).powi(2)
                    }),
                    Func1D::from_fn("s(1/x-1)", (0.0, 1.0), move |x| s * (1.0 / x - 1.0)),
                    f64::INFINITY,
                )?)
            }
            FamilyParams::Gpd { alpha, sigma } => {
                let (a, s) = (*alpha, *sigma);
                Some(KGenerator::new(
                    format!("gpd({a},{s})"),
                    Func1D::from_fn("(1+x/s)^(-1/a)", (0.0, f64::INFINITY), move |x| {
                        (1.0 + x / s).powf(-1.0 / a)
                    }),
                    Func1D::from_fn("density", (0.0, f64::INFINITY), move |x| {
                        (1.0 / (a * s)) * (1.0 + x / s).powf(-1.0 / a - 1.0)
                    }),
                    Func1D::from_fn("s(x^-a-1)", (0.0, 1.0), move |x| s * (x.powf(-a) - 1.0)),
                    f64::INFINITY,
                )?)
            }
            FamilyParams::UniformK { alpha } => {
                let a = *alpha;
                Some(KGenerator::new(
                    format!("uniform(0,{a})"),
                    Func1D::from_fn("1-x/a", (0.0, f64::INFINITY), move |x| {
                        (1.0 - x / a).clamp(0.0, 1.0)
                    }),
                    Func1D::from_fn("density", (0.0, f64::INFINITY), move |x| {
                        if x <= a {
                            1.0 / a
                        } else {
                            0.0
                        }
                    }),
                    Func1D::from_fn("a(1-x)", (0.0, 1.0), move |x| a * (1.0 - x)),
                    a,
                )?)
            }
            FamilyParams::ExponentialK { rate } => {
                let r = *rate;
                Some(KGenerator::new(
                    format!("exponential({r})"),
                    Func1D::from_fn("exp(-rx)", (0.0, f64::INFINITY), move |x| (-r * x).exp()),
                    Func1D::from_fn("density", (0.0, f64::INFINITY), move |x| {
                        r * (-r * x).exp()
                    }),
                    Func1D::from_fn("-ln(x)/r", (0.0, 1.0), move |x| -x.ln() / r),
                    f64::INFINITY,
                )?)
            }
            _ => None,
        };
        Ok(gen)
    }
}

/// FGM kernel t(1−t) with its closed forms attached.
pub fn fgm_phi() -> Func1D {
    Func1D::from_fn("t*(1-t)", (0.0, 1.0), |t| t * (1.0 - t))
        .with_derivative(|t| 1.0 - 2.0 * t)
        .with_antiderivative(|t| t * t / 2.0 - t * t * t / 3.0)
}

impl FamilyParams {
    /// The raw (θ, φ) pair with closed-form derivatives, built without any
    /// domain gate or validation. This is what the validator runs against
    /// when asked to judge out-of-range parameters.
    pub fn generator_pair(&self) -> Result<(Func1D, Func1D, String)> {
        let pair = match self {
            FamilyParams::Fgm { theta } => (
                Func1D::constant(*theta),
                fgm_phi(),
                format!("fgm({theta})"),
            ),
            FamilyParams::ConstantTheta { theta, phi } => (
                Func1D::constant(*theta),
                Func1D::from_expr(phi, (0.0, 1.0)),
                format!("constant-theta({theta}, {phi})"),
            ),
            FamilyParams::CuadrasAuge { alpha } => {
                let a = *alpha;
                (
                    Func1D::from_fn("t^-a-1", (0.0, 1.0), move |t| t.powf(-a) - 1.0)
                        .with_derivative(move |t| -a * t.powf(-a - 1.0)),
                    Func1D::identity(),
                    format!("ca({a})"),
                )
            }
            FamilyParams::B11 { sigma } => {
                let s = *sigma;
                (
                    Func1D::from_fn("s(1/t-1)", (0.0, 1.0), move |t| s * (1.0 / t - 1.0))
                        .with_derivative(move |t| -s / (t * t)),
                    Func1D::identity(),
                    format!("b11({s})"),
                )
            }
            FamilyParams::Gpd { alpha, sigma } => {
                let (a, s) = (*alpha, *sigma);
                (
                    Func1D::from_fn("s(t^-a-1)", (0.0, 1.0), move |t| s * (t.powf(-a) - 1.0))
                        .with_derivative(move |t| -s * a * t.powf(-a - 1.0)),
                    Func1D::identity(),
                    format!("gpd({a},{s})"),
                )
            }
            FamilyParams::UniformK { alpha } => {
                let a = *alpha;
                (
                    Func1D::from_fn("a(1-t)", (0.0, 1.0), move |t| a * (1.0 - t))
                        .with_derivative(move |_| -a),
                    Func1D::identity(),
                    format!("uniform-k({a})"),
                )
            }
            FamilyParams::ExponentialK { rate } => {
                let r = *rate;
                (
                    Func1D::from_fn("-ln(t)/r", (0.0, 1.0), move |t| -t.ln() / r)
                        .with_derivative(move |t| -1.0 / (r * t)),
                    Func1D::identity(),
                    format!("exponential-k({r})"),
                )
            }
            FamilyParams::DuranteF { f } => {
                let theta_expr = Expr::Sub(
                    Expr::Div(Box::new(f.clone()), Box::new(Expr::Var)).into(),
                    Expr::Lit(1.0).into(),
                )
                .simplify();
                (
                    Func1D::from_expr(&theta_expr, (0.0, 1.0)),
                    Func1D::identity(),
                    format!("durante({f})"),
                )
            }
        };
        if let FamilyParams::Fgm { theta } = self {
            if !theta.is_finite() {
                return Err(Error::Parameter(format!("non-finite theta {theta}")));
            }
        }
        Ok(pair)
    }

    /// Unvalidated spec from the raw pair.
    pub fn raw_spec(&self) -> Result<CopulaSpec> {
        let (theta, phi, label) = self.generator_pair()?;
        Ok(CopulaSpec::new(label, theta, phi))
    }
}

/// Construct the named member and validate it (hazard criterion for the
/// survival-generated ones, the generic grid otherwise). The returned spec
/// carries its validation state; parameter-domain violations error out.
pub fn make_named(params: &FamilyParams) -> Result<CopulaSpec> {
    params.check_domain()?;
    if let FamilyParams::DuranteF { f } = params {
        // min(u,v) f(max(u,v)) = uv [1 + theta(max)] needs f(1) = 1,
        // otherwise the margins are off before validation even starts
        let f1 = f
            .eval(1.0)
            .map_err(|e| Error::Parameter(format!("durante-f generator undefined at 1: {e}")))?;
        if (f1 - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("durante-f needs f(1) = 1, got {f1}")));
        }
    }
    if let Some(gen) = params.k_generator()? {
        return Ok(make_k_copula(&gen));
    }
    let mut spec = params.raw_spec()?;
    spec.validate(&ValidationOptions::default())?;
    Ok(spec)
}

/// Admissible range for a constant θ paired with the given φ, from the
/// product condition θ·φ′(u)φ′(v) ≥ −1 on the triangle u ≤ v.
pub fn constant_theta_bounds(phi: &Func1D, n_grid: usize) -> (f64, f64) {
    let eps = 1e-4;
    let ts: Vec<f64> = (0..n_grid)
        .map(|i| eps + (1.0 - 2.0 * eps) * i as f64 / (n_grid - 1) as f64)
        .collect();
    let d: Vec<f64> = ts.iter().map(|&t| phi.deriv_shifted(t)).collect();
    let mut min_p = f64::INFINITY;
    let mut max_p = f64::NEG_INFINITY;
    for j in 0..n_grid {
        for i in 0..=j {
            let p = d[i] * d[j];
            if p.is_finite() {
                min_p = min_p.min(p);
                max_p = max_p.max(p);
            }
        }
    }
    let hi = if min_p < 0.0 { -1.0 / min_p } else { 1e6 };
    let lo = if max_p > 0.0 { -1.0 / max_p } else { -1e6 };
    (lo, hi)
}

// -- fitting --------------------------------------------------------------

/// Families fit_rho_inversion can invert: those with one scalar parameter
/// monotone in ρ.
#[derive(Debug, Clone)]
pub enum FitFamily {
    Ca,
    B11,
    UniformK,
    Fgm,
    ConstantTheta { phi: Expr },
}

impl FitFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            FitFamily::Ca => "ca",
            FitFamily::B11 => "b11",
            FitFamily::UniformK => "uniform-k",
            FitFamily::Fgm => "fgm",
            FitFamily::ConstantTheta { .. } => "constant-theta",
        }
    }

    pub fn parameter_name(&self) -> &'static str {
        match self {
            FitFamily::Ca | FitFamily::UniformK => "alpha",
            FitFamily::B11 => "sigma",
            FitFamily::Fgm | FitFamily::ConstantTheta { .. } => "theta",
        }
    }
}

/// Result of a rank-correlation fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub family: String,
    pub parameter_name: String,
    pub parameter: f64,
    pub rho_hat: f64,
    pub n: usize,
}

/// Invert the family's ρ(parameter) map for a target ρ.
pub fn invert_rho(family: &FitFamily, rho: f64) -> Result<f64> {
    // (map, parameter bracket, attainable rho range)
    let (map, bracket): (Box<dyn Fn(f64) -> f64>, (f64, f64)) = match family {
        FitFamily::Ca => (Box::new(|a: f64| 3.0 * a / (4.0 - a)), (0.0, 1.0)),
        FitFamily::B11 => (Box::new(|s: f64| s), (0.0, 1.0)),
        FitFamily::UniformK => (Box::new(|a: f64| 0.6 * a), (0.0, 1.0)),
        FitFamily::Fgm => (Box::new(|t: f64| t / 3.0), (-1.0, 1.0)),
        FitFamily::ConstantTheta { phi } => {
            let phi_fn = Func1D::from_expr(phi, (0.0, 1.0));
            let big_phi_1 = phi_fn.antideriv(1.0)?;
            let slope = 12.0 * big_phi_1 * big_phi_1;
            if slope < 1e-12 {
                return Err(Error::Data(format!(
                    "phi `{phi}` has a vanishing mean; rho does not move with theta"
                )));
            }
            let (lo, hi) = constant_theta_bounds(&phi_fn, 256);
            (Box::new(move |t: f64| slope * t), (lo, hi))
        }
    };
    let (lo, hi) = bracket;
    let (rho_lo, rho_hi) = (map(lo), map(hi));
    if rho < rho_lo - 1e-12 || rho > rho_hi + 1e-12 {
        return Err(Error::OutOfRange {
            what: "rho".into(),
            value: rho,
            family: family.tag().into(),
            lo: rho_lo,
            hi: rho_hi,
        });
    }
    find_root_monotone(map, lo, hi, rho, 1e-12)
}

/// Method-of-moments fit: sample Spearman rank correlation inverted
/// through the family's ρ(parameter) map.
pub fn fit_rho_inversion(data: &[(f64, f64)], family: &FitFamily) -> Result<FitResult> {
    if data.len() < 30 {
        return Err(Error::Data(format!(
            "need at least 30 pairs to fit, got {}",
            data.len()
        )));
    }
    let xs: Vec<f64> = data.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = data.iter().map(|p| p.1).collect();
    let rho_hat = spearman_rho_hat(&xs, &ys)
        .ok_or_else(|| Error::Data("degenerate sample: a marginal is constant".into()))?;
    let parameter = invert_rho(family, rho_hat)?;
    Ok(FitResult {
        family: family.tag().to_string(),
        parameter_name: family.parameter_name().to_string(),
        parameter,
        rho_hat,
        n: data.len(),
    })
}
