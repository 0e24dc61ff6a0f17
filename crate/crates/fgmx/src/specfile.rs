//! The JSON document format describing a copula spec, shared between the
//! library and the CLI.
//!
//! Two shapes are accepted. A named family with parameters:
//!
//! ```json
//! {"family": "ca", "params": {"alpha": 0.5}}
//! ```
//!
//! or an explicit generator pair, each generator either an expression in
//! `t` or one of the named forms `identity` / `constant`:
//!
//! ```json
//! {"label": "remark",
//!  "theta": {"kind": "expr", "expr": "1/t"},
//!  "phi":   {"kind": "expr", "expr": "t*(1-t)"}}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::copula::CopulaSpec;
use crate::error::{Error, Result};
use crate::expr;
use crate::families::{make_named, FamilyParams};
use crate::func::Func1D;

/// One generator in a spec document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FuncSpec {
    /// An expression in `t` under the crate's grammar.
    Expr { expr: String },
    /// A named form: `identity`, or `constant` with a `value`.
    Named {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
    },
}

impl FuncSpec {
    pub fn build(&self) -> Result<Func1D> {
        match self {
            FuncSpec::Expr { expr: src } => {
                let e = expr::parse(src)?;
                Ok(Func1D::from_expr(&e, (0.0, 1.0)))
            }
            FuncSpec::Named { name, value } => match name.as_str() {
                "identity" => Ok(Func1D::identity()),
                "constant" => {
                    let c = value.ok_or_else(|| {
                        Error::SpecFile("named form `constant` needs a `value`".into())
                    })?;
                    Ok(Func1D::constant(c))
                }
                other => Err(Error::SpecFile(format!(
                    "unknown named form `{other}` (expected `identity` or `constant`)"
                ))),
            },
        }
    }

    fn describe(&self) -> String {
        match self {
            FuncSpec::Expr { expr } => expr.clone(),
            FuncSpec::Named { name, value } => match value {
                Some(v) => format!("{name}({v})"),
                None => name.clone(),
            },
        }
    }
}

/// A spec document: either a named family or an explicit pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecFile {
    Family {
        family: String,
        #[serde(default)]
        params: serde_json::Map<String, Value>,
    },
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        theta: FuncSpec,
        phi: FuncSpec,
    },
}

fn param_f64(params: &serde_json::Map<String, Value>, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::SpecFile(format!("missing or non-numeric parameter `{key}`")))
}

fn param_expr(params: &serde_json::Map<String, Value>, key: &str) -> Result<expr::Expr> {
    let src = params
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::SpecFile(format!("missing or non-string parameter `{key}`")))?;
    expr::parse(src)
}

/// Interpret a family tag plus parameter map.
pub fn family_params(tag: &str, params: &serde_json::Map<String, Value>) -> Result<FamilyParams> {
    let p = match tag {
        "fgm" => FamilyParams::Fgm {
            theta: param_f64(params, "theta")?,
        },
        "constant-theta" => FamilyParams::ConstantTheta {
            theta: param_f64(params, "theta")?,
            phi: param_expr(params, "phi")?,
        },
        "ca" => FamilyParams::CuadrasAuge {
            alpha: param_f64(params, "alpha")?,
        },
        "b11" => FamilyParams::B11 {
            sigma: param_f64(params, "sigma")?,
        },
        "gpd" => FamilyParams::Gpd {
            alpha: param_f64(params, "alpha")?,
            sigma: param_f64(params, "sigma")?,
        },
        "uniform-k" => FamilyParams::UniformK {
            alpha: param_f64(params, "alpha")?,
        },
        "exponential-k" => FamilyParams::ExponentialK {
            rate: params.get("rate").and_then(Value::as_f64).unwrap_or(1.0),
        },
        "durante-f" => FamilyParams::DuranteF {
            f: param_expr(params, "f")?,
        },
        other => {
            return Err(Error::SpecFile(format!(
                "unknown family `{other}` (known: {})",
                crate::families::FAMILY_TAGS.join(", ")
            )))
        }
    };
    Ok(p)
}

impl SpecFile {
    /// Parse a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::SpecFile(e.to_string()))
    }

    /// Build the spec this document describes. Family documents come back
    /// validated (possibly in the invalid state, with report attached);
    /// custom pairs come back unchecked so the caller picks the grid.
    pub fn build(&self) -> Result<CopulaSpec> {
        match self {
            SpecFile::Family { family, params } => {
                let p = family_params(family, params)?;
                make_named(&p)
            }
            SpecFile::Custom { .. } => self.build_raw(),
        }
    }

    /// Build the generator pair without any parameter-domain gate or
    /// validation; this is the construction the validator judges.
    pub fn build_raw(&self) -> Result<CopulaSpec> {
        match self {
            SpecFile::Family { family, params } => {
                family_params(family, params)?.raw_spec()
            }
            SpecFile::Custom { label, theta, phi } => {
                let t = theta.build()?;
                let p = phi.build()?;
                let label = label.clone().unwrap_or_else(|| {
                    format!("theta={}, phi={}", theta.describe(), phi.describe())
                });
                Ok(CopulaSpec::new(label, t, p))
            }
        }
    }
}
