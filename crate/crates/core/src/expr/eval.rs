use std::fmt;

use thiserror::Error;

use super::{rational_to_f64, Func, Node, ScalarExpr};

/// What went wrong at the offending node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogOfNonPositive,
    SqrtOfNegative,
    DivisionByZero,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::LogOfNonPositive => "log of non-positive value",
            DomainKind::SqrtOfNegative => "sqrt of negative value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::NonFinite => "non-finite value",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error ({kind}) at `{node}`")]
    Domain { kind: DomainKind, node: String },
    #[error("coordinate index {index} out of range for a point of dimension {dimension}")]
    DimensionMismatch { index: usize, dimension: usize },
}

fn domain(kind: DomainKind, e: &ScalarExpr) -> EvalError {
    let mut node = format!("{e:?}");
    if node.len() > 120 {
        let cut = (0..=117).rev().find(|&i| node.is_char_boundary(i)).unwrap_or(0);
        node.truncate(cut);
        node.push_str("...");
    }
    EvalError::Domain { kind, node }
}

impl ScalarExpr {
    /// IEEE double value at `point`.
    pub fn eval_at(&self, point: &[f64]) -> Result<f64, EvalError> {
        let v = match self.node() {
            Node::Const(c) => rational_to_f64(c),
            Node::Var(i) => *point
                .get(*i)
                .ok_or(EvalError::DimensionMismatch { index: *i, dimension: point.len() })?,
            Node::Sum(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval_at(point)?;
                }
                acc
            }
            Node::Product(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= f.eval_at(point)?;
                }
                acc
            }
            Node::Pow(b, n) => {
                let x = b.eval_at(point)?;
                if x == 0.0 && *n < 0 {
                    return Err(domain(DomainKind::DivisionByZero, self));
                }
                match i32::try_from(*n) {
                    Ok(n) => x.powi(n),
                    Err(_) => x.powf(*n as f64),
                }
            }
            Node::Func(f, a) => {
                let x = a.eval_at(point)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(domain(DomainKind::LogOfNonPositive, self));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(domain(DomainKind::SqrtOfNegative, self));
                        }
                        x.sqrt()
                    }
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                }
            }
        };
        if !v.is_finite() {
            return Err(domain(DomainKind::NonFinite, self));
        }
        Ok(v)
    }
}
