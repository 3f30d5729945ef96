//! Coefficients of the moment series of `x' = a(t,x) + b(t,x) u`.
//!
//! With `R_a f = f_t + f_x a` and `R_b f = f_x b`, the coefficient of the word
//! `(m1, ..., mk)` is
//! `(-1)^k / (m1! ... mk!) * ad^{m1}_{R_a} R_b ... ad^{mk}_{R_a} R_b E` at `t = 0, x = 0`,
//! where `E(x) = x`. Each `ad^j_{R_a} R_b` is the first-order operator `f_x c_j`
//! with `c_0 = b` and `c_j = (c_{j-1})_t + (c_{j-1})_x a - a_x c_{j-1}`, so the
//! engine works with these vector fields on Taylor polynomials of `a` and `b`
//! rather than with operator compositions.

mod poly;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freealg::{enumerate_basis, AlgElem, Word};
use crate::liealg::LieBasisElement;
use crate::rational::{self, Rational};
use crate::symexpr::{parse_expr, EvalError, Expr, NormalForm, ParseError, Var};
use poly::{Caps, Poly};

/// Number of sample times used when `a(t, 0)` does not simplify to zero.
const EQUILIBRIUM_SAMPLES: i64 = 20;
/// Tolerance for the floating-point fallback of the equilibrium check.
const EQUILIBRIUM_FLOAT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("the system must have at least one state")]
    EmptySystem,
    #[error("a has {a} components and b has {b}, expected {n}")]
    DimensionMismatch { n: usize, a: usize, b: usize },
    #[error("{field} refers to x{index} but the state dimension is {n}")]
    VariableOutOfRange { field: String, index: usize, n: usize },
    #[error("cannot parse {field}: {source}")]
    Parse { field: String, source: ParseError },
    #[error("the origin is not an equilibrium: a{component}(t, 0) = {value} at t = {time}")]
    NotEquilibrium { component: usize, value: String, time: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("cannot expand the system at the origin: {0}")]
    Eval(#[from] EvalError),
    #[error("{word} has order {order}, above the table's maximum order {max}")]
    OrderExceeded { word: Word, order: usize, max: usize },
}

/// `x' = a(t,x) + b(t,x) u` with `a(t,0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSystem {
    n: usize,
    a: Vec<Expr>,
    b: Vec<Expr>,
}

impl ControlSystem {
    /// Validates dimensions, variable indices and the equilibrium condition.
    pub fn new(a: Vec<Expr>, b: Vec<Expr>) -> Result<Self, SystemError> {
        let n = a.len();
        if n == 0 {
            return Err(SystemError::EmptySystem);
        }
        if b.len() != n {
            return Err(SystemError::DimensionMismatch { n, a: a.len(), b: b.len() });
        }
        for (name, field) in [("a", &a), ("b", &b)] {
            for (i, e) in field.iter().enumerate() {
                let index = e.max_state_index();
                if index > n {
                    return Err(SystemError::VariableOutOfRange { field: format!("{name}{}", i + 1), index, n });
                }
            }
        }
        let sys = Self { n, a: a.iter().map(Expr::simplify).collect(), b: b.iter().map(Expr::simplify).collect() };
        sys.check_equilibrium()?;
        Ok(sys)
    }

    /// Parses component strings in the grammar of [`parse_expr`].
    pub fn from_strs(a: &[&str], b: &[&str]) -> Result<Self, SystemError> {
        let n = a.len();
        let parse = |name: &str, items: &[&str]| -> Result<Vec<Expr>, SystemError> {
            items
                .iter()
                .enumerate()
                .map(|(i, text)| {
                    parse_expr(text, n).map_err(|source| SystemError::Parse { field: format!("{name}{}", i + 1), source })
                })
                .collect()
        };
        Self::new(parse("a", a)?, parse("b", b)?)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn drift(&self) -> &[Expr] {
        &self.a
    }

    pub fn control_field(&self) -> &[Expr] {
        &self.b
    }

    /// True when neither `a` nor `b` depends on `t`.
    pub fn is_autonomous(&self) -> bool {
        !self.a.iter().chain(&self.b).any(|e| e.depends_on(Var::T))
    }

    fn check_equilibrium(&self) -> Result<(), SystemError> {
        let zeros = vec![Rational::zero(); self.n];
        let float_zeros = vec![0.0; self.n];
        for (i, a) in self.a.iter().enumerate() {
            let mut at_origin = a.clone();
            for j in 1..=self.n {
                at_origin = at_origin.substitute(Var::X(j), &Expr::zero());
            }
            let at_origin = at_origin.simplify();
            if at_origin.is_zero() {
                continue;
            }
            for k in 0..EQUILIBRIUM_SAMPLES {
                let t = rational::frac(k - EQUILIBRIUM_SAMPLES / 2, 3);
                let violation = match at_origin.eval_exact(&t, &zeros) {
                    Ok(value) => (!value.is_zero()).then(|| rational::to_string(&value)),
                    Err(_) => {
                        let value = at_origin.eval_f64(rational::to_f64(&t), &float_zeros);
                        (value.abs() > EQUILIBRIUM_FLOAT_TOL || value.is_nan()).then(|| format!("{value:e}"))
                    }
                };
                if let Some(value) = violation {
                    return Err(SystemError::NotEquilibrium { component: i + 1, value, time: rational::to_string(&t) });
                }
            }
        }
        Ok(())
    }
}

fn jacobian_action(f: &[Expr], field: &[Expr]) -> Vec<Expr> {
    f.iter()
        .map(|fi| {
            let terms = field
                .iter()
                .enumerate()
                .map(|(j, fj)| Expr::Product(vec![fi.differentiate(Var::X(j + 1)), fj.clone()]))
                .collect();
            Expr::Sum(terms)
        })
        .collect()
}

/// `f_t + f_x a`, componentwise.
pub fn apply_r_a(sys: &ControlSystem, f: &[Expr]) -> Vec<Expr> {
    f.iter()
        .zip(jacobian_action(f, &sys.a))
        .map(|(fi, transport)| Expr::Sum(vec![fi.differentiate(Var::T), transport]).simplify())
        .collect()
}

/// `f_x b`, componentwise.
pub fn apply_r_b(sys: &ControlSystem, f: &[Expr]) -> Vec<Expr> {
    jacobian_action(f, &sys.b).iter().map(Expr::simplify).collect()
}

/// The vector fields `c_0, ..., c_{N-1}` at `t = 0`, as Taylor polynomials
/// truncated to what words of order at most `N` can observe.
struct FieldTower {
    n: usize,
    fields: Vec<Vec<Poly>>,
}

fn taylor_poly(e: &Expr, n: usize, degree: u32) -> Result<Poly, EvalError> {
    Ok(Poly::from_normal_form(&NormalForm::from_expr(e).taylor(degree)?, n))
}

impl FieldTower {
    fn new(sys: &ControlSystem, max_order: usize) -> Result<Self, EvalError> {
        let n = sys.n;
        let big_n = max_order as u32;
        // c_j needs t-degree and x-degree at most N - 1 - j each
        let degree = 2 * big_n;
        let a: Vec<Poly> = sys.a.iter().map(|e| taylor_poly(e, n, degree)).collect::<Result<_, _>>()?;
        let b: Vec<Poly> = sys.b.iter().map(|e| taylor_poly(e, n, degree)).collect::<Result<_, _>>()?;
        let caps = |j: usize| {
            let d = big_n.saturating_sub(1 + j as u32);
            Caps { t: d, x: d }
        };
        let mut c = b;
        c.iter_mut().for_each(|p| p.truncate(caps(0)));
        let a_jacobian: Vec<Vec<Poly>> =
            a.iter().map(|ai| (1..=n).map(|k| ai.derivative(k)).collect()).collect();
        let mut fields = vec![c.iter().map(Poly::at_time_zero).collect::<Vec<_>>()];
        for j in 1..max_order {
            let cap = caps(j);
            let next: Vec<Poly> = (0..n)
                .map(|i| {
                    let mut out = c[i].derivative(0);
                    out.truncate(cap);
                    for k in 0..n {
                        out.add_product(&c[i].derivative(k + 1), &a[k], cap);
                        let mut correction = Poly::zero();
                        correction.add_product(&a_jacobian[i][k], &c[k], cap);
                        out.sub_assign(&correction);
                    }
                    out
                })
                .collect();
            fields.push(next.iter().map(Poly::at_time_zero).collect());
            c = next;
        }
        Ok(Self { n, fields })
    }

    /// `f_x c_j`, keeping x-degree at most `x_cap`.
    fn apply(&self, j: usize, f: &[Poly], x_cap: u32) -> Vec<Poly> {
        let field = &self.fields[j];
        let caps = Caps { t: 0, x: x_cap };
        f.iter()
            .map(|fi| {
                let mut out = Poly::zero();
                for (k, ck) in field.iter().enumerate() {
                    if ck.is_zero() {
                        continue;
                    }
                    let d = fi.derivative(k + 1);
                    if !d.is_zero() {
                        out.add_product(ck, &d, caps);
                    }
                }
                out
            })
            .collect()
    }

    fn identity(&self) -> Vec<Poly> {
        (1..=self.n).map(|i| Poly::coordinate(self.n, i)).collect()
    }

    fn scale_for(w: &Word) -> Rational {
        let denominator = w.letters().iter().fold(Rational::one(), |acc, &m| acc * rational::factorial(m as u32));
        let sign = if w.len().is_multiple_of(2) { Rational::one() } else { -Rational::one() };
        sign / denominator
    }

    fn coefficient(w: &Word, applied: &[Poly]) -> Vec<Rational> {
        let scale = Self::scale_for(w);
        applied.iter().map(|p| p.value_at_origin() * &scale).collect()
    }
}

/// The coefficient vector `v_w` of a single word.
pub fn moment_coefficient(sys: &ControlSystem, w: &Word) -> Result<Vec<Rational>, SeriesError> {
    if w.is_empty() {
        return Ok(vec![Rational::zero(); sys.n]);
    }
    let big_n = w.order();
    let tower = FieldTower::new(sys, big_n)?;
    let mut f = tower.identity();
    let letters = w.letters();
    let mut suffix_order = 0;
    for &m in letters.iter().rev() {
        suffix_order += m as usize + 1;
        f = tower.apply(m as usize, &f, (big_n - suffix_order) as u32);
    }
    Ok(FieldTower::coefficient(w, &f))
}

/// Coefficients `v_w` for every word of order at most `max_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    n: usize,
    max_order: usize,
    coeffs: BTreeMap<Word, Vec<Rational>>,
}

/// JSON form of one table entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub word: Word,
    #[serde(with = "rational::serde_vec")]
    pub coeff: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub dimension: usize,
    pub max_order: usize,
    pub entries: Vec<SeriesEntry>,
}

/// A word, its coefficients and, when needed later, the applied field.
type GradeEntry = (Word, Vec<Rational>, Option<Arc<Vec<Poly>>>);

/// Computes all coefficients up to `max_order`, grade by grade. Within a grade
/// the words are independent and are processed in parallel; each word reuses
/// the operator chain already applied to its tail.
pub fn series_up_to(sys: &ControlSystem, max_order: usize) -> Result<SeriesTable, SeriesError> {
    let tower = FieldTower::new(sys, max_order)?;
    let mut applied: HashMap<Word, Arc<Vec<Poly>>> = HashMap::new();
    applied.insert(Word::empty(), Arc::new(tower.identity()));
    let mut coeffs = BTreeMap::new();
    for m in 1..=max_order {
        let words = enumerate_basis(m);
        let x_cap = (max_order - m) as u32;
        let keep = m < max_order;
        let grade: Vec<GradeEntry> = words
            .into_par_iter()
            .map(|w| {
                let tail = &applied[&w.tail()];
                let first = w.first().expect("words are nonempty") as usize;
                let f = tower.apply(first, tail, x_cap);
                let v = FieldTower::coefficient(&w, &f);
                let stored = keep.then(|| Arc::new(f));
                (w, v, stored)
            })
            .collect();
        for (w, v, stored) in grade {
            if let Some(f) = stored {
                applied.insert(w.clone(), f);
            }
            coeffs.insert(w, v);
        }
    }
    Ok(SeriesTable { n: sys.n, max_order, coeffs })
}

impl SeriesTable {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn get(&self, w: &Word) -> Result<&[Rational], SeriesError> {
        self.coeffs
            .get(w)
            .map(Vec::as_slice)
            .ok_or_else(|| SeriesError::OrderExceeded { word: w.clone(), order: w.order(), max: self.max_order })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Word, &Vec<Rational>)> {
        self.coeffs.iter()
    }

    /// Words with a nonzero coefficient, in canonical order.
    pub fn nonzero(&self) -> impl Iterator<Item = (&Word, &Vec<Rational>)> {
        self.coeffs.iter().filter(|(_, v)| v.iter().any(|c| !c.is_zero()))
    }

    /// The linear extension of `v` to an element of the free algebra. The
    /// scalar part is ignored.
    pub fn eval(&self, e: &AlgElem) -> Result<Vec<Rational>, SeriesError> {
        let mut out = vec![Rational::zero(); self.n];
        for (w, c) in e.terms() {
            for (slot, value) in out.iter_mut().zip(self.get(w)?) {
                if !value.is_zero() {
                    *slot += c * value;
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            dimension: self.n,
            max_order: self.max_order,
            entries: self.coeffs.iter().map(|(w, v)| SeriesEntry { word: w.clone(), coeff: v.clone() }).collect(),
        }
    }

    pub fn from_json(json: &SeriesJson) -> Self {
        SeriesTable {
            n: json.dimension,
            max_order: json.max_order,
            coeffs: json.entries.iter().map(|e| (e.word.clone(), e.coeff.clone())).collect(),
        }
    }
}

/// `v(g)` for a Lie basis element.
pub fn lie_coefficient(table: &SeriesTable, g: &LieBasisElement) -> Result<Vec<Rational>, SeriesError> {
    table.eval(&g.expansion)
}
