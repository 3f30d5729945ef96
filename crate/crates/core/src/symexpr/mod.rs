//! Symbolic expressions in `t, x1..xn` over exact rationals.
//!
//! Trees are immutable values. [`Expr::simplify`] brings an expression into a
//! sum-of-products normal form (see [`NormalForm`]); parsing, printing, exact
//! evaluation at the origin and partial differentiation are provided here.

mod normal;
mod parse;

use std::fmt;

use num_traits::{One, Pow, Zero};
use thiserror::Error;

use crate::rational::{self, Rational};

pub use normal::{Atom, Monomial, NormalForm};
pub use parse::parse_expr;

/// A variable: time `t` or a state coordinate `x_i` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    X(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(i) => write!(f, "x{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(Rational),
    Var(Var),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at {position}")]
    UnknownIdentifier { position: usize, name: String },
    #[error("variable x{index} at {position} is out of range for dimension {dimension}")]
    VariableOutOfRange { position: usize, index: usize, dimension: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. }
            | ParseError::UnknownIdentifier { position, .. }
            | ParseError::VariableOutOfRange { position, .. } => *position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero at the origin")]
    DivisionByZero,
    #[error("{function} of an argument that is nonzero at the origin has no exact rational value")]
    TranscendentalOfNonzero { function: &'static str },
}

impl Expr {
    pub fn constant(c: Rational) -> Self {
        Expr::Const(c)
    }

    pub fn int(n: i64) -> Self {
        Expr::Const(rational::int(n))
    }

    pub fn zero() -> Self {
        Expr::int(0)
    }

    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    pub fn t() -> Self {
        Expr::Var(Var::T)
    }

    pub fn x(i: usize) -> Self {
        Expr::Var(Var::X(i))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn simplify(&self) -> Expr {
        NormalForm::from_expr(self).to_expr()
    }

    /// Largest `i` such that `x_i` occurs in the expression (0 if none).
    pub fn max_state_index(&self) -> usize {
        let mut max = 0;
        self.visit_vars(&mut |v| {
            if let Var::X(i) = v {
                max = max.max(i);
            }
        });
        max
    }

    pub fn depends_on(&self, var: Var) -> bool {
        let mut found = false;
        self.visit_vars(&mut |v| found |= v == var);
        found
    }

    fn visit_vars(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Sum(items) | Expr::Product(items) => items.iter().for_each(|e| e.visit_vars(f)),
            Expr::Quotient(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Expr::Pow(e, _) | Expr::Neg(e) | Expr::Sin(e) | Expr::Cos(e) | Expr::Exp(e) => e.visit_vars(f),
        }
    }

    /// Replaces `var` by `value` everywhere (no simplification).
    pub fn substitute(&self, var: Var, value: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(var, value));
        match self {
            Expr::Var(v) if *v == var => value.clone(),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Sum(items) => Expr::Sum(items.iter().map(|e| e.substitute(var, value)).collect()),
            Expr::Product(items) => Expr::Product(items.iter().map(|e| e.substitute(var, value)).collect()),
            Expr::Quotient(a, b) => Expr::Quotient(sub(a), sub(b)),
            Expr::Pow(e, k) => Expr::Pow(sub(e), *k),
            Expr::Neg(e) => Expr::Neg(sub(e)),
            Expr::Sin(e) => Expr::Sin(sub(e)),
            Expr::Cos(e) => Expr::Cos(sub(e)),
            Expr::Exp(e) => Expr::Exp(sub(e)),
        }
    }

    /// Exact value at `t = 0, x = 0`.
    pub fn eval_at_origin(&self) -> Result<Rational, EvalError> {
        match self {
            Expr::Const(c) => Ok(c.clone()),
            Expr::Var(_) => Ok(Rational::zero()),
            Expr::Sum(items) => items.iter().try_fold(Rational::zero(), |acc, e| Ok(acc + e.eval_at_origin()?)),
            Expr::Product(items) => items.iter().try_fold(Rational::one(), |acc, e| Ok(acc * e.eval_at_origin()?)),
            Expr::Quotient(a, b) => {
                let num = a.eval_at_origin()?;
                let den = b.eval_at_origin()?;
                if den.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(num / den)
            }
            Expr::Pow(e, k) => Ok(Pow::pow(e.eval_at_origin()?, *k)),
            Expr::Neg(e) => Ok(-e.eval_at_origin()?),
            Expr::Sin(e) => transcendental_at_zero(e, "sin", Rational::zero()),
            Expr::Cos(e) => transcendental_at_zero(e, "cos", Rational::one()),
            Expr::Exp(e) => transcendental_at_zero(e, "exp", Rational::one()),
        }
    }

    /// Exact value at a rational point; transcendental functions are only
    /// accepted where their argument vanishes.
    pub fn eval_exact(&self, t: &Rational, x: &[Rational]) -> Result<Rational, EvalError> {
        let at = |e: &Expr| e.eval_exact(t, x);
        match self {
            Expr::Const(c) => Ok(c.clone()),
            Expr::Var(Var::T) => Ok(t.clone()),
            Expr::Var(Var::X(i)) => Ok(x.get(i - 1).cloned().unwrap_or_else(Rational::zero)),
            Expr::Sum(items) => items.iter().try_fold(Rational::zero(), |acc, e| Ok(acc + at(e)?)),
            Expr::Product(items) => items.iter().try_fold(Rational::one(), |acc, e| Ok(acc * at(e)?)),
            Expr::Quotient(a, b) => {
                let den = at(b)?;
                if den.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(at(a)? / den)
            }
            Expr::Pow(e, k) => Ok(Pow::pow(at(e)?, *k)),
            Expr::Neg(e) => Ok(-at(e)?),
            Expr::Sin(e) | Expr::Cos(e) | Expr::Exp(e) => {
                let (name, value) = match self {
                    Expr::Sin(_) => ("sin", Rational::zero()),
                    Expr::Cos(_) => ("cos", Rational::one()),
                    _ => ("exp", Rational::one()),
                };
                if at(e)?.is_zero() {
                    Ok(value)
                } else {
                    Err(EvalError::TranscendentalOfNonzero { function: name })
                }
            }
        }
    }

    /// Floating-point evaluation, used by numerical verification only.
    pub fn eval_f64(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => rational::to_f64(c),
            Expr::Var(Var::T) => t,
            Expr::Var(Var::X(i)) => x.get(i - 1).copied().unwrap_or(0.0),
            Expr::Sum(items) => items.iter().map(|e| e.eval_f64(t, x)).sum(),
            Expr::Product(items) => items.iter().map(|e| e.eval_f64(t, x)).product(),
            Expr::Quotient(a, b) => a.eval_f64(t, x) / b.eval_f64(t, x),
            Expr::Pow(e, k) => e.eval_f64(t, x).powi(*k as i32),
            Expr::Neg(e) => -e.eval_f64(t, x),
            Expr::Sin(e) => e.eval_f64(t, x).sin(),
            Expr::Cos(e) => e.eval_f64(t, x).cos(),
            Expr::Exp(e) => e.eval_f64(t, x).exp(),
        }
    }

    /// Partial derivative by the chain, product and quotient rules, simplified.
    pub fn differentiate(&self, v: Var) -> Expr {
        self.derivative_tree(v).simplify()
    }

    fn derivative_tree(&self, v: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(w) => Expr::int(if *w == v { 1 } else { 0 }),
            Expr::Sum(items) => Expr::Sum(items.iter().map(|e| e.derivative_tree(v)).collect()),
            Expr::Product(items) => {
                let mut terms = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    let mut factors = items.clone();
                    factors[i] = item.derivative_tree(v);
                    terms.push(Expr::Product(factors));
                }
                Expr::Sum(terms)
            }
            Expr::Quotient(a, b) => {
                // a'/b - a b'/b^2
                Expr::Sum(vec![
                    Expr::Quotient(Box::new(a.derivative_tree(v)), b.clone()),
                    Expr::Neg(Box::new(Expr::Quotient(
                        Box::new(Expr::Product(vec![(**a).clone(), b.derivative_tree(v)])),
                        Box::new(Expr::Pow(b.clone(), 2)),
                    ))),
                ])
            }
            Expr::Pow(e, k) => match k {
                0 => Expr::zero(),
                _ => Expr::Product(vec![
                    Expr::int(*k as i64),
                    Expr::Pow(e.clone(), k - 1),
                    e.derivative_tree(v),
                ]),
            },
            Expr::Neg(e) => Expr::Neg(Box::new(e.derivative_tree(v))),
            Expr::Sin(e) => Expr::Product(vec![Expr::Cos(e.clone()), e.derivative_tree(v)]),
            Expr::Cos(e) => Expr::Neg(Box::new(Expr::Product(vec![Expr::Sin(e.clone()), e.derivative_tree(v)]))),
            Expr::Exp(e) => Expr::Product(vec![Expr::Exp(e.clone()), e.derivative_tree(v)]),
        }
    }
}

fn transcendental_at_zero(arg: &Expr, function: &'static str, value: Rational) -> Result<Rational, EvalError> {
    if arg.eval_at_origin()?.is_zero() {
        Ok(value)
    } else {
        Err(EvalError::TranscendentalOfNonzero { function })
    }
}

// Printing precedence: sums < products/quotients < unary minus < powers < atoms.
const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if rational::is_negative(c) => PREC_UNARY,
        Expr::Const(c) if !c.is_integer() => PREC_PRODUCT,
        Expr::Const(_) | Expr::Var(_) | Expr::Sin(_) | Expr::Cos(_) | Expr::Exp(_) => PREC_ATOM,
        Expr::Sum(items) if items.len() > 1 => PREC_SUM,
        Expr::Product(items) if items.len() > 1 => PREC_PRODUCT,
        Expr::Sum(_) | Expr::Product(_) => PREC_ATOM,
        Expr::Quotient(..) => PREC_PRODUCT,
        Expr::Neg(_) => PREC_UNARY,
        Expr::Pow(..) => PREC_POW,
    }
}

/// The expression `x` such that parsing `a - x` yields the sum term `e`.
fn strip_negation(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Const(c) if rational::is_negative(c) => Some(Expr::Const(-c.clone())),
        Expr::Neg(inner) => {
            let candidate = (**inner).clone();
            (parse::negate(candidate.clone()) == *e).then_some(candidate)
        }
        Expr::Product(items) if items.len() > 1 => match &items[0] {
            Expr::Const(c) if rational::is_negative(c) => {
                let mut flipped = items.clone();
                flipped[0] = Expr::Const(-c.clone());
                Some(Expr::Product(flipped))
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_wrapped(e: &Expr, f: &mut fmt::Formatter<'_>, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_leading_factor(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let ok = match e {
        Expr::Quotient(..) => true,
        Expr::Const(_) => true,
        Expr::Product(items) => items.len() <= 1,
        other => precedence(other) >= PREC_UNARY,
    };
    write_wrapped(e, f, !ok)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{}", rational::to_string(c)),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Sum(items) => match items.as_slice() {
                [] => write!(f, "0"),
                [only] => write!(f, "{only}"),
                [first, rest @ ..] => {
                    write_wrapped(first, f, precedence(first) <= PREC_SUM)?;
                    for item in rest {
                        match strip_negation(item) {
                            Some(positive) => {
                                write!(f, " - ")?;
                                write_wrapped(&positive, f, precedence(&positive) <= PREC_SUM)?;
                            }
                            None => {
                                write!(f, " + ")?;
                                write_wrapped(item, f, precedence(item) <= PREC_SUM)?;
                            }
                        }
                    }
                    Ok(())
                }
            },
            Expr::Product(items) => match items.as_slice() {
                [] => write!(f, "1"),
                [only] => write!(f, "{only}"),
                [first, rest @ ..] => {
                    write_leading_factor(first, f)?;
                    for item in rest {
                        write!(f, "*")?;
                        write_wrapped(item, f, precedence(item) < PREC_POW)?;
                    }
                    Ok(())
                }
            },
            Expr::Quotient(a, b) => {
                match &**a {
                    Expr::Product(items) if items.len() > 1 => write!(f, "{a}")?,
                    other => write_leading_factor(other, f)?,
                }
                write!(f, "/")?;
                write_wrapped(b, f, precedence(b) < PREC_POW)
            }
            Expr::Pow(base, k) => {
                write_wrapped(base, f, precedence(base) < PREC_ATOM)?;
                write!(f, "^{k}")
            }
            Expr::Neg(e) => {
                write!(f, "-")?;
                let wrap = precedence(e) < PREC_POW || matches!(&**e, Expr::Const(c) if rational::is_negative(c));
                write_wrapped(e, f, wrap)
            }
            Expr::Sin(e) => write!(f, "sin({e})"),
            Expr::Cos(e) => write!(f, "cos({e})"),
            Expr::Exp(e) => write!(f, "exp({e})"),
        }
    }
}
