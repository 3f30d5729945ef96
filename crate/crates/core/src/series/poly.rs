//! Dense-exponent sparse polynomials in `t, x1..xn` used by the moment engine.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::rational::Rational;
use crate::symexpr::{Atom, NormalForm, Var};

/// Exponents `[deg_t, deg_x1, ..., deg_xn]`.
pub(crate) type Exponents = Vec<u8>;

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Poly {
    terms: BTreeMap<Exponents, Rational>,
}

/// Degree caps applied after every product.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Caps {
    pub t: u32,
    pub x: u32,
}

fn x_degree(e: &[u8]) -> u32 {
    e[1..].iter().map(|&d| d as u32).sum()
}

fn within(e: &[u8], caps: Caps) -> bool {
    e[0] as u32 <= caps.t && x_degree(e) <= caps.x
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The coordinate function `x_i` in `n` state variables.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut e = vec![0u8; n + 1];
        e[i] = 1;
        Poly { terms: BTreeMap::from([(e, Rational::one())]) }
    }

    /// Converts a polynomial normal form; panics on non-variable atoms.
    pub fn from_normal_form(nf: &NormalForm, n: usize) -> Self {
        let mut out = Poly::zero();
        for (m, c) in nf.terms() {
            let mut e = vec![0u8; n + 1];
            for (atom, power) in m.factors() {
                let slot = match atom {
                    Atom::Var(Var::T) => 0,
                    Atom::Var(Var::X(i)) => *i,
                    other => panic!("non-polynomial atom {other:?} in a Taylor polynomial"),
                };
                e[slot] = u8::try_from(*power).expect("polynomial degree fits in u8");
            }
            out.add_term(e, c.clone());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, e: Exponents, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn sub_assign(&mut self, other: &Poly) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), -c.clone());
        }
    }

    /// `self += a * b`, keeping only terms within `caps`.
    pub fn add_product(&mut self, a: &Poly, b: &Poly, caps: Caps) {
        for (e1, c1) in &a.terms {
            if !within(e1, caps) {
                continue;
            }
            for (e2, c2) in &b.terms {
                let e: Exponents = e1.iter().zip(e2).map(|(p, q)| p + q).collect();
                if within(&e, caps) {
                    self.add_term(e, c1 * c2);
                }
            }
        }
    }

    /// Partial derivative by slot (0 = t, i = x_i).
    pub fn derivative(&self, slot: usize) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            let d = e[slot];
            if d == 0 {
                continue;
            }
            let mut e = e.clone();
            e[slot] = d - 1;
            out.add_term(e, c * Rational::from_integer(d.into()));
        }
        out
    }

    pub fn truncate(&mut self, caps: Caps) {
        self.terms.retain(|e, _| within(e, caps));
    }

    /// Substitutes `t = 0`.
    pub fn at_time_zero(&self) -> Poly {
        Poly { terms: self.terms.iter().filter(|(e, _)| e[0] == 0).map(|(e, c)| (e.clone(), c.clone())).collect() }
    }

    pub fn value_at_origin(&self) -> Rational {
        self.terms.iter().next().filter(|(e, _)| e.iter().all(|&d| d == 0)).map(|(_, c)| c.clone()).unwrap_or_else(Rational::zero)
    }
}
