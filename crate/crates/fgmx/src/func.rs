//! Uniform access to univariate real functions.
//!
//! [`Func1D`] bundles a value kernel with optional analytic derivative and
//! antiderivative closures. Where an analytic part is missing, numeric
//! fallbacks step in: fourth-order central differences for the derivative
//! and a cached cumulative-quadrature table for the antiderivative. The
//! generator functions θ, φ, Φ, the survival functions K̄ and densities k
//! all live in this type.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{integrate_fn, QuadratureConfig};

pub type Kernel = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Where a function came from; drives method provenance in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    NamedClosedForm,
    Expression,
    Tabulated,
}

/// Number of cells in the cached antiderivative table.
const PRIMITIVE_CELLS: usize = 1024;

struct PrimitiveTable {
    /// Cumulative integral at the 1025 uniform grid points, zero at the
    /// left endpoint.
    cumulative: Vec<f64>,
    step: f64,
}

/// A univariate real function on a closed interval with derivative and
/// antiderivative access.
///
/// Immutable after construction; the antiderivative table is built at most
/// once behind a [`OnceLock`], so shared concurrent use is fine.
#[derive(Clone)]
pub struct Func1D {
    label: String,
    domain: (f64, f64),
    value: Kernel,
    derivative: Option<Kernel>,
    antiderivative: Option<Kernel>,
    provenance: Provenance,
    primitive: Arc<OnceLock<PrimitiveTable>>,
    antideriv_offset: Arc<OnceLock<f64>>,
}

impl std::fmt::Debug for Func1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Func1D")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("provenance", &self.provenance)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("analytic_antiderivative", &self.antiderivative.is_some())
            .finish()
    }
}

impl Func1D {
    /// Build from a value closure alone; derivative and antiderivative fall
    /// back to numerics.
    pub fn from_fn<F>(label: impl Into<String>, domain: (f64, f64), f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Func1D {
            label: label.into(),
            domain,
            value: Arc::new(f),
            derivative: None,
            antiderivative: None,
            provenance: Provenance::NamedClosedForm,
            primitive: Arc::new(OnceLock::new()),
            antideriv_offset: Arc::new(OnceLock::new()),
        }
    }

    /// Attach an analytic derivative.
    pub fn with_derivative<F>(mut self, df: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(df));
        self
    }

    /// Attach an analytic antiderivative. It is normalized internally so the
    /// reported antiderivative vanishes at the left endpoint.
    pub fn with_antiderivative<F>(mut self, af: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.antiderivative = Some(Arc::new(af));
        self
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    /// Compile an expression in `t`; the symbolic derivative comes along.
    /// Domain errors during evaluation surface as NaN values.
    pub fn from_expr(expr: &Expr, domain: (f64, f64)) -> Self {
        let label = expr.to_string();
        let e = expr.clone();
        let d = expr.differentiate();
        Func1D {
            label,
            domain,
            value: Arc::new(move |t| e.eval(t).unwrap_or(f64::NAN)),
            derivative: Some(Arc::new(move |t| d.eval(t).unwrap_or(f64::NAN))),
            antiderivative: None,
            provenance: Provenance::Expression,
            primitive: Arc::new(OnceLock::new()),
            antideriv_offset: Arc::new(OnceLock::new()),
        }
    }

    /// The identity on [0, 1].
    pub fn identity() -> Self {
        Func1D::from_fn("t", (0.0, 1.0), |t| t)
            .with_derivative(|_| 1.0)
            .with_antiderivative(|t| 0.5 * t * t)
    }

    /// A constant on [0, 1].
    pub fn constant(c: f64) -> Self {
        Func1D::from_fn(format!("{c}"), (0.0, 1.0), move |_| c)
            .with_derivative(|_| 0.0)
            .with_antiderivative(move |t| c * t)
    }

    /// Piecewise-linear interpolation of uniformly spaced samples.
    pub fn tabulated(label: impl Into<String>, domain: (f64, f64), values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "need at least two samples");
        let (a, b) = domain;
        let n = values.len() - 1;
        let step = (b - a) / n as f64;
        let f = move |t: f64| -> f64 {
            if t < a || t > b {
                return f64::NAN;
            }
            let x = ((t - a) / step).clamp(0.0, n as f64);
            let i = (x as usize).min(n - 1);
            let w = x - i as f64;
            values[i] * (1.0 - w) + values[i + 1] * w
        };
        Func1D::from_fn(label, domain, f).with_provenance(Provenance::Tabulated)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn has_analytic_antiderivative(&self) -> bool {
        self.antiderivative.is_some()
    }

    /// Plain evaluation. Out-of-domain or undefined points yield NaN.
    pub fn eval(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    fn difference_step(t: f64) -> f64 {
        1e-6 * t.abs().max(1.0)
    }

    /// Derivative at an interior point: analytic when attached, otherwise a
    /// fourth-order central difference. The numeric fallback needs the
    /// stencil `[t-2h, t+2h]` inside the domain and errors at the edges;
    /// endpoint callers should use [`Func1D::deriv_left_limit`] or the
    /// shifted variant.
    pub fn deriv(&self, t: f64) -> Result<f64> {
        if let Some(df) = &self.derivative {
            return Ok(df(t));
        }
        let h = Self::difference_step(t);
        let (a, b) = self.domain;
        if t - 2.0 * h < a || t + 2.0 * h > b {
            return Err(Error::Derivative {
                label: self.label.clone(),
                at: t,
                reason: "central-difference stencil leaves the domain".into(),
            });
        }
        Ok(self.central_difference(t, h))
    }

    fn central_difference(&self, t: f64, h: f64) -> f64 {
        let f = |x: f64| (self.value)(x);
        (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
    }

    /// Derivative with the stencil shifted inside the domain when `t` sits
    /// too close to an edge; the O(h²) placement error is negligible at
    /// h ≈ 1e-6 for the smooth generators this crate handles.
    pub fn deriv_shifted(&self, t: f64) -> f64 {
        if let Some(df) = &self.derivative {
            return df(t);
        }
        let h = Self::difference_step(t);
        let (a, b) = self.domain;
        let c = t.clamp(a + 2.0 * h, b - 2.0 * h);
        self.central_difference(c, h)
    }

    /// One-sided derivative limit at `at` approached from the left, via
    /// first-order differences at h ∈ {1e-4, 1e-5, 1e-6} and two Richardson
    /// extrapolation stages. Errors when the extrapolation stages disagree
    /// (oscillatory or non-smooth behaviour).
    pub fn deriv_left_limit(&self, at: f64) -> Result<f64> {
        if let Some(df) = &self.derivative {
            let exact = df(at);
            if exact.is_finite() {
                return Ok(exact);
            }
            // analytic form undefined at the endpoint itself; extrapolate
            let d = 1e-7;
            let v = 2.0 * df(at - d) - df(at - 2.0 * d);
            if v.is_finite() {
                return Ok(v);
            }
            return Err(Error::Derivative {
                label: self.label.clone(),
                at,
                reason: "analytic derivative non-finite near the endpoint".into(),
            });
        }
        let mu = 1e-9;
        let f_at = (self.value)(at - mu);
        let d = |h: f64| (f_at - (self.value)(at - h)) / (h - mu);
        let d0 = d(1e-4);
        let d1 = d(1e-5);
        let d2 = d(1e-6);
        let r0 = (10.0 * d1 - d0) / 9.0;
        let r1 = (10.0 * d2 - d1) / 9.0;
        let out = (100.0 * r1 - r0) / 99.0;
        if !out.is_finite() || (r1 - r0).abs() > 1e-2 * (1.0 + r1.abs()) {
            return Err(Error::Derivative {
                label: self.label.clone(),
                at,
                reason: format!("left-limit extrapolation unstable ({r0} vs {r1})"),
            });
        }
        Ok(out)
    }

    /// Antiderivative normalized to zero at the left endpoint. Analytic when
    /// attached, otherwise served from a cumulative Gauss–Kronrod table over
    /// 1024 uniform cells (plus an in-cell pass for the fractional part).
    pub fn antideriv(&self, t: f64) -> Result<f64> {
        if let Some(af) = &self.antiderivative {
            let offset = self.antideriv_offset.get_or_init(|| af(self.domain.0));
            return Ok(af(t) - offset);
        }
        let table = self.primitive_table()?;
        let (a, _) = self.domain;
        let x = (t - a) / table.step;
        let i = (x.floor() as usize).min(PRIMITIVE_CELLS - 1).max(0);
        let cell_start = a + i as f64 * table.step;
        let cfg = QuadratureConfig {
            max_depth: 8,
            ..Default::default()
        };
        let partial = if (t - cell_start).abs() < 1e-300 {
            0.0
        } else {
            integrate_fn(|x| (self.value)(x), cell_start, t, &cfg)?
        };
        Ok(table.cumulative[i] + partial)
    }

    fn primitive_table(&self) -> Result<&PrimitiveTable> {
        if let Some(t) = self.primitive.get() {
            return Ok(t);
        }
        let (a, b) = self.domain;
        let step = (b - a) / PRIMITIVE_CELLS as f64;
        let mut cumulative = Vec::with_capacity(PRIMITIVE_CELLS + 1);
        cumulative.push(0.0);
        let cfg = QuadratureConfig {
            max_depth: 10,
            ..Default::default()
        };
        let mut acc = 0.0;
        for i in 0..PRIMITIVE_CELLS {
            let lo = a + i as f64 * step;
            let hi = a + (i + 1) as f64 * step;
            acc += integrate_fn(|x| (self.value)(x), lo, hi, &cfg)?;
            cumulative.push(acc);
        }
        let _ = self.primitive.set(PrimitiveTable { cumulative, step });
        Ok(self.primitive.get().expect("just initialized"))
    }

    /// Probe the analytic derivative and antiderivative against their
    /// numeric counterparts on interior points; errors when either
    /// disagrees beyond 1e-6 relative.
    pub fn check_consistency(&self) -> Result<()> {
        let (a, b) = self.domain;
        let n = 100;
        for i in 1..=n {
            let t = a + (b - a) * i as f64 / (n + 1) as f64;
            let h = Self::difference_step(t);
            if t - 2.0 * h < a || t + 2.0 * h > b {
                continue;
            }
            if let Some(df) = &self.derivative {
                let analytic = df(t);
                let numeric = self.central_difference(t, h);
                if !analytic.is_finite() || !numeric.is_finite() {
                    continue;
                }
                let scale = analytic.abs().max(1.0);
                if (analytic - numeric).abs() > 1e-6 * scale {
                    return Err(Error::Inconsistency {
                        label: self.label.clone(),
                        detail: format!(
                            "derivative {analytic} vs central difference {numeric} at t = {t}"
                        ),
                    });
                }
            }
            if let Some(af) = &self.antiderivative {
                let fwd = (af(t + h) - af(t - h)) / (2.0 * h);
                let val = (self.value)(t);
                if !fwd.is_finite() || !val.is_finite() {
                    continue;
                }
                let scale = val.abs().max(1.0);
                if (fwd - val).abs() > 1e-6 * scale {
                    return Err(Error::Inconsistency {
                        label: self.label.clone(),
                        detail: format!(
                            "antiderivative slope {fwd} vs value {val} at t = {t}"
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}
