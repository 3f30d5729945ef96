//! Polynomial vector fields produced by the reconstruction steps.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};
use crate::series::{ControlSystem, SystemError};
use crate::symexpr::{Expr, Var};

/// A polynomial in `t, x1..xn` with rational coefficients. Exponent vectors
/// are `[deg_t, deg_x1, ..., deg_xn]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Polynomial {
    terms: BTreeMap<Vec<u32>, Rational>,
}

/// JSON form of one term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    #[serde(with = "rational::serde_string")]
    pub coeff: Rational,
    pub t: u32,
    pub x: Vec<u32>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `c * t^t_exp * prod x_i^{x_exps[i-1]}`.
    pub fn monomial(c: Rational, t_exp: u32, x_exps: &[u32]) -> Self {
        let mut out = Self::zero();
        let mut key = Vec::with_capacity(x_exps.len() + 1);
        key.push(t_exp);
        key.extend_from_slice(x_exps);
        out.add_term(key, c);
        out
    }

    pub fn constant(c: Rational, n: usize) -> Self {
        Self::monomial(c, 0, &vec![0; n])
    }

    fn add_term(&mut self, key: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(key.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add_assign(&mut self, other: &Polynomial) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c.clone());
        }
    }

    pub fn scale(&self, k: &Rational) -> Polynomial {
        let mut out = Polynomial::zero();
        for (key, c) in &self.terms {
            out.add_term(key.clone(), c * k);
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(&-Rational::one())
    }

    /// Multiplies by `t^k`.
    pub fn times_t_power(&self, k: u32) -> Polynomial {
        Polynomial { terms: self.terms.iter().map(|(key, c)| (shift_t(key, k), c.clone())).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(t exponent, x exponents, coefficient)` in ascending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &[u32], &Rational)> {
        self.terms.iter().map(|(k, c)| (k[0], &k[1..], c))
    }

    /// Largest `i` such that `x_i` occurs, or 0.
    pub fn max_state_index(&self) -> usize {
        self.terms
            .keys()
            .filter_map(|k| k[1..].iter().rposition(|&e| e > 0).map(|i| i + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn t_degree(&self) -> u32 {
        self.terms.keys().map(|k| k[0]).max().unwrap_or(0)
    }

    pub fn to_expr(&self) -> Expr {
        let terms: Vec<Expr> = self
            .terms
            .iter()
            .map(|(key, c)| {
                let mut factors = vec![Expr::Const(c.clone())];
                for (slot, &e) in key.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let var = if slot == 0 { Var::T } else { Var::X(slot) };
                    factors.push(Expr::Pow(Box::new(Expr::Var(var)), e));
                }
                Expr::Product(factors)
            })
            .collect();
        Expr::Sum(terms).simplify()
    }

    pub fn to_json(&self) -> Vec<PolyTerm> {
        self.terms.iter().map(|(k, c)| PolyTerm { coeff: c.clone(), t: k[0], x: k[1..].to_vec() }).collect()
    }

    pub fn from_json(terms: &[PolyTerm]) -> Self {
        let mut out = Polynomial::zero();
        for term in terms {
            out.add_term(shift_t(&[&[0][..], &term.x].concat(), term.t), term.coeff.clone());
        }
        out
    }
}

fn shift_t(key: &[u32], k: u32) -> Vec<u32> {
    let mut key = key.to_vec();
    key[0] += k;
    key
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Polynomial::from_json(&Vec::<PolyTerm>::deserialize(d)?))
    }
}

/// `x' = a_hat(t,x) + b_hat(t,x) u` with polynomial right-hand sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialSystem {
    pub n: usize,
    pub a_hat: Vec<Polynomial>,
    pub b_hat: Vec<Polynomial>,
}

impl PolynomialSystem {
    pub fn to_control_system(&self) -> Result<ControlSystem, SystemError> {
        ControlSystem::new(
            self.a_hat.iter().map(Polynomial::to_expr).collect(),
            self.b_hat.iter().map(Polynomial::to_expr).collect(),
        )
    }

    pub fn is_autonomous(&self) -> bool {
        self.a_hat.iter().chain(&self.b_hat).all(|p| p.t_degree() == 0)
    }
}
