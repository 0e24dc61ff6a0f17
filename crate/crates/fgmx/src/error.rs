//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by parsing, evaluation, quadrature, root finding and the
/// copula operations built on top of them.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Text failed to parse under the expression grammar.
    #[error("syntax error at byte {offset}: found {found}, expected {}", expected.join(" | "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },

    /// An identifier other than `t` / `ln` / `exp` / `sqrt` / `pow` appeared.
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    /// Evaluation left the real domain (ln of a non-positive value, ...).
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },

    /// A derivative was requested where no stencil fits and no analytic
    /// derivative is attached.
    #[error("numeric derivative of `{label}` unavailable at t = {at}: {reason}")]
    Derivative {
        label: String,
        at: f64,
        reason: String,
    },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    QuadratureNonConvergence { estimate: f64, error_bound: f64 },

    /// The integrand returned a non-finite value.
    #[error("non-finite value {value} from `{label}` at t = {at}")]
    NonFinite { label: String, at: f64, value: f64 },

    /// Root bracket does not contain the target.
    #[error("bracket [{lo}, {hi}] does not contain target {target}: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        target: f64,
        g_lo: f64,
        g_hi: f64,
    },

    /// An operation that requires a validated spec was called on an
    /// unchecked or invalid one.
    #[error("copula spec `{label}` is not validated ({state})")]
    Unvalidated { label: String, state: String },

    /// Caller asked for a pointwise density on the diagonal, where the mass
    /// is atomic; use the diagonal-mass operations instead.
    #[error("density is undefined on the diagonal u = v = {0}; the diagonal carries atomic mass")]
    DensityOnDiagonal(f64),

    /// An internal consistency condition failed (signals an invalid spec
    /// that slipped through validation).
    #[error("internal consistency violation in `{label}`: {detail}")]
    Inconsistency { label: String, detail: String },

    /// θ is identically zero (within tolerance), so the endpoint v* is
    /// undefined.
    #[error("theta is identically zero within tolerance {0}; v* is undefined")]
    ThetaIdenticallyZero(f64),

    /// A parameter fell outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    /// A generator (survival function) violated one of its invariants.
    #[error("invalid survival-function generator `{label}`: {detail}")]
    Generator { label: String, detail: String },

    /// A fitted or requested association value is outside the family's
    /// attainable range.
    #[error("{what} = {value} outside attainable range [{lo}, {hi}] for family `{family}`")]
    OutOfRange {
        what: String,
        value: f64,
        family: String,
        lo: f64,
        hi: f64,
    },

    /// Input data unusable for fitting.
    #[error("unusable data: {0}")]
    Data(String),

    /// A quantile transform failed its monotonicity probe.
    #[error("quantile function `{label}` is not monotone near t = {at}")]
    NonMonotoneQuantile { label: String, at: f64 },

    /// A copula-spec document failed schema validation.
    #[error("spec file error: {0}")]
    SpecFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
