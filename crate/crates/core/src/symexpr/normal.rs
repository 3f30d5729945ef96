//! Sum-of-products normal form.
//!
//! An expression is represented as a rational combination of monomials, where a
//! monomial is a product of atoms raised to positive integer powers. Atoms are
//! variables, `sin`/`cos`/`exp` of simplified arguments, and reciprocals of
//! expressions that do not reduce to a single monomial. Products are fully
//! expanded, so like terms always merge; no trigonometric identities are used.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{EvalError, Expr, Var};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Var(Var),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Recip(Expr),
}

impl Atom {
    fn to_expr(&self) -> Expr {
        match self {
            Atom::Var(v) => Expr::Var(*v),
            Atom::Sin(u) => Expr::Sin(Box::new(u.clone())),
            Atom::Cos(u) => Expr::Cos(Box::new(u.clone())),
            Atom::Exp(u) => Expr::Exp(Box::new(u.clone())),
            Atom::Recip(u) => Expr::Quotient(Box::new(Expr::int(1)), Box::new(u.clone())),
        }
    }

    fn argument(&self) -> Option<&Expr> {
        match self {
            Atom::Var(_) => None,
            Atom::Sin(u) | Atom::Cos(u) | Atom::Exp(u) | Atom::Recip(u) => Some(u),
        }
    }

    fn depends_on(&self, var: Var) -> bool {
        match self {
            Atom::Var(v) => *v == var,
            other => other.argument().is_some_and(|u| u.depends_on(var)),
        }
    }

    fn derivative(&self, var: Var) -> NormalForm {
        match self {
            Atom::Var(v) => {
                if *v == var {
                    NormalForm::one()
                } else {
                    NormalForm::zero()
                }
            }
            Atom::Sin(u) => NormalForm::atom(Atom::Cos(u.clone())).mul(&NormalForm::from_expr(u).derivative(var)),
            Atom::Cos(u) => NormalForm::atom(Atom::Sin(u.clone())).mul(&NormalForm::from_expr(u).derivative(var)).neg(),
            Atom::Exp(u) => NormalForm::atom(Atom::Exp(u.clone())).mul(&NormalForm::from_expr(u).derivative(var)),
            Atom::Recip(u) => {
                let r = NormalForm::atom(Atom::Recip(u.clone()));
                r.mul(&r).mul(&NormalForm::from_expr(u).derivative(var)).neg()
            }
        }
    }

    fn eval_at_origin(&self) -> Result<Rational, EvalError> {
        match self {
            Atom::Var(_) => Ok(Rational::zero()),
            Atom::Sin(u) => zero_argument(u, "sin").map(|_| Rational::zero()),
            Atom::Cos(u) => zero_argument(u, "cos").map(|_| Rational::one()),
            Atom::Exp(u) => zero_argument(u, "exp").map(|_| Rational::one()),
            Atom::Recip(u) => {
                let d = u.eval_at_origin()?;
                if d.is_zero() {
                    Err(EvalError::DivisionByZero)
                } else {
                    Ok(d.recip())
                }
            }
        }
    }
}

/// Taylor polynomial of a single atom, via power series in its argument.
fn atom_taylor(atom: &Atom, max_degree: u32) -> Result<NormalForm, EvalError> {
    let Some(u) = atom.argument() else {
        return Ok(NormalForm::atom(atom.clone()));
    };
    let p = NormalForm::from_expr(u).taylor(max_degree)?;
    let p0 = p.terms.get(&Monomial::default()).cloned().unwrap_or_else(Rational::zero);
    let mut q = p;
    q.terms.remove(&Monomial::default());
    let require_zero = |function: &'static str| {
        if p0.is_zero() {
            Ok(())
        } else {
            Err(EvalError::TranscendentalOfNonzero { function })
        }
    };
    let mut factorial = Rational::one();
    let mut coefficients = Vec::with_capacity(max_degree as usize + 1);
    for k in 0..=max_degree {
        if k > 0 {
            factorial *= Rational::from_integer(k.into());
        }
        let c = match atom {
            Atom::Sin(_) if k % 2 == 1 => {
                let sign = if (k / 2) % 2 == 0 { Rational::one() } else { -Rational::one() };
                sign / &factorial
            }
            Atom::Cos(_) if k % 2 == 0 => {
                let sign = if (k / 2) % 2 == 0 { Rational::one() } else { -Rational::one() };
                sign / &factorial
            }
            Atom::Exp(_) => Rational::one() / &factorial,
            Atom::Recip(_) => {
                if p0.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                // 1/(p0 + q) = (1/p0) sum (-q/p0)^k
                num_traits::Pow::pow(-p0.recip(), k) * p0.recip()
            }
            _ => Rational::zero(),
        };
        coefficients.push(c);
    }
    match atom {
        Atom::Sin(_) => require_zero("sin")?,
        Atom::Cos(_) => require_zero("cos")?,
        Atom::Exp(_) => require_zero("exp")?,
        _ => {}
    }
    let mut out = NormalForm::zero();
    let mut power = NormalForm::one();
    for (k, c) in coefficients.iter().enumerate() {
        if k > 0 {
            power = power.mul_truncated(&q, max_degree);
            if power.is_zero() {
                break;
            }
        }
        out.add_assign(&power.scale(c));
    }
    Ok(out)
}

fn zero_argument(u: &Expr, function: &'static str) -> Result<(), EvalError> {
    if u.eval_at_origin()?.is_zero() {
        Ok(())
    } else {
        Err(EvalError::TranscendentalOfNonzero { function })
    }
}

/// Product of atoms with positive exponents, sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    /// Total degree in the polynomial variables `t, x_i`; other atoms count as degree 0.
    pub fn var_degree(&self) -> u32 {
        self.0.iter().filter(|(a, _)| matches!(a, Atom::Var(_))).map(|(_, e)| e).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NormalForm {
    terms: BTreeMap<Monomial, Rational>,
}

impl NormalForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::default(), c);
        }
        Self { terms }
    }

    pub fn atom(a: Atom) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial(vec![(a, 1)]), Rational::one());
        Self { terms }
    }

    pub fn var(v: Var) -> Self {
        Self::atom(Atom::Var(v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::default()).cloned(),
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
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

    pub fn add_assign(&mut self, other: &NormalForm) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn add(&self, other: &NormalForm) -> NormalForm {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &NormalForm) -> NormalForm {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> NormalForm {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, k: &Rational) -> NormalForm {
        if k.is_zero() {
            return NormalForm::zero();
        }
        NormalForm { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &NormalForm) -> NormalForm {
        let mut out = NormalForm::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> NormalForm {
        let mut result = NormalForm::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn derivative(&self, var: Var) -> NormalForm {
        let mut out = NormalForm::zero();
        for (m, c) in &self.terms {
            for (i, (atom, e)) in m.0.iter().enumerate() {
                if !atom.depends_on(var) {
                    continue;
                }
                let mut rest = m.0.clone();
                if *e == 1 {
                    rest.remove(i);
                } else {
                    rest[i].1 = e - 1;
                }
                let coefficient = c * Rational::from_integer((*e).into());
                let d = atom.derivative(var);
                for (dm, dc) in &d.terms {
                    out.add_term(Monomial(rest.clone()).mul(dm), &coefficient * dc);
                }
            }
        }
        out
    }

    /// Drops every term whose polynomial degree exceeds `max_degree`.
    pub fn truncate(&mut self, max_degree: u32) {
        self.terms.retain(|m, _| m.var_degree() <= max_degree);
    }

    fn mul_truncated(&self, other: &NormalForm, max_degree: u32) -> NormalForm {
        let mut out = NormalForm::zero();
        for (m1, c1) in &self.terms {
            let d1 = m1.var_degree();
            if d1 > max_degree {
                continue;
            }
            for (m2, c2) in &other.terms {
                if d1 + m2.var_degree() <= max_degree {
                    out.add_term(m1.mul(m2), c1 * c2);
                }
            }
        }
        out
    }

    /// True when every atom is a variable.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|m| m.0.iter().all(|(a, _)| matches!(a, Atom::Var(_))))
    }

    /// Taylor polynomial at the origin in `t, x_i`, up to total degree `max_degree`.
    pub fn taylor(&self, max_degree: u32) -> Result<NormalForm, EvalError> {
        let mut out = NormalForm::zero();
        for (m, c) in &self.terms {
            let mut term = NormalForm::constant(c.clone());
            for (atom, e) in &m.0 {
                let series = atom_taylor(atom, max_degree)?;
                for _ in 0..*e {
                    term = term.mul_truncated(&series, max_degree);
                }
            }
            out.add_assign(&term);
        }
        Ok(out)
    }

    /// Substitutes `var = 0`.
    pub fn substitute_zero(&self, var: Var) -> NormalForm {
        let mut out = NormalForm::zero();
        for (m, c) in &self.terms {
            if m.0.iter().any(|(a, _)| *a == Atom::Var(var)) {
                continue;
            }
            if !m.0.iter().any(|(a, _)| a.depends_on(var)) {
                out.add_term(m.clone(), c.clone());
                continue;
            }
            let mut term = NormalForm::constant(c.clone());
            for (atom, e) in &m.0 {
                let factor = if atom.depends_on(var) {
                    NormalForm::from_expr(&atom.to_expr().substitute(var, &Expr::zero()))
                } else {
                    NormalForm { terms: BTreeMap::from([(Monomial(vec![(atom.clone(), 1)]), Rational::one())]) }
                };
                term = term.mul(&factor.pow(*e));
            }
            out.add_assign(&term);
        }
        out
    }

    pub fn eval_at_origin(&self) -> Result<Rational, EvalError> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut value = c.clone();
            for (atom, e) in &m.0 {
                let a = atom.eval_at_origin()?;
                value *= num_traits::Pow::pow(a, *e);
            }
            total += value;
        }
        Ok(total)
    }

    pub fn from_expr(e: &Expr) -> NormalForm {
        match e {
            Expr::Const(c) => NormalForm::constant(c.clone()),
            Expr::Var(v) => NormalForm::var(*v),
            Expr::Sum(items) => {
                let mut out = NormalForm::zero();
                for item in items {
                    out.add_assign(&NormalForm::from_expr(item));
                }
                out
            }
            Expr::Product(items) => {
                let mut out = NormalForm::one();
                for item in items {
                    if out.is_zero() {
                        break;
                    }
                    out = out.mul(&NormalForm::from_expr(item));
                }
                out
            }
            Expr::Quotient(a, b) => NormalForm::from_expr(a).mul(&reciprocal_of_expr(b)),
            Expr::Pow(base, k) => NormalForm::from_expr(base).pow(*k),
            Expr::Neg(inner) => NormalForm::from_expr(inner).neg(),
            Expr::Sin(u) => {
                let arg = u.simplify();
                if arg.is_zero() {
                    NormalForm::zero()
                } else {
                    NormalForm::atom(Atom::Sin(arg))
                }
            }
            Expr::Cos(u) => {
                let arg = u.simplify();
                if arg.is_zero() {
                    NormalForm::one()
                } else {
                    NormalForm::atom(Atom::Cos(arg))
                }
            }
            Expr::Exp(u) => {
                let arg = u.simplify();
                if arg.is_zero() {
                    NormalForm::one()
                } else {
                    NormalForm::atom(Atom::Exp(arg))
                }
            }
        }
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> = self.terms.iter().map(|(m, c)| term_expr(m, c)).collect();
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => Expr::Sum(terms),
        }
    }
}

fn term_expr(m: &Monomial, c: &Rational) -> Expr {
    let mut numerator = Vec::new();
    let mut denominator = Vec::new();
    for (atom, e) in &m.0 {
        match atom {
            Atom::Recip(u) => denominator.push(power_expr(u.clone(), *e)),
            other => numerator.push(power_expr(other.to_expr(), *e)),
        }
    }
    let numerator = if numerator.is_empty() {
        Expr::Const(c.clone())
    } else {
        let body = if numerator.len() == 1 { numerator.pop().unwrap() } else { Expr::Product(numerator) };
        if c.is_one() {
            body
        } else if (-c).is_one() {
            Expr::Neg(Box::new(body))
        } else {
            let mut factors = vec![Expr::Const(c.clone())];
            match body {
                Expr::Product(items) => factors.extend(items),
                single => factors.push(single),
            }
            Expr::Product(factors)
        }
    };
    if denominator.is_empty() {
        numerator
    } else {
        let den = if denominator.len() == 1 { denominator.pop().unwrap() } else { Expr::Product(denominator) };
        Expr::Quotient(Box::new(numerator), Box::new(den))
    }
}

fn power_expr(base: Expr, e: u32) -> Expr {
    if e == 1 {
        base
    } else {
        Expr::Pow(Box::new(base), e)
    }
}

fn reciprocal_of_expr(b: &Expr) -> NormalForm {
    match b {
        Expr::Product(items) => {
            let mut out = NormalForm::one();
            for item in items {
                out = out.mul(&reciprocal_of_expr(item));
            }
            out
        }
        Expr::Pow(base, k) => reciprocal_of_expr(base).pow(*k),
        Expr::Neg(inner) => reciprocal_of_expr(inner).neg(),
        Expr::Quotient(num, den) => NormalForm::from_expr(den).mul(&reciprocal_of_expr(num)),
        other => reciprocal(&NormalForm::from_expr(other)),
    }
}

fn reciprocal(nf: &NormalForm) -> NormalForm {
    if nf.terms.len() != 1 {
        let den = if nf.is_zero() { Expr::zero() } else { nf.to_expr() };
        return NormalForm::atom(Atom::Recip(den));
    }
    let (m, c) = nf.terms.iter().next().unwrap();
    let mut out = NormalForm::constant(c.recip());
    for (atom, e) in &m.0 {
        let inverse = match atom {
            Atom::Recip(u) => NormalForm::from_expr(u),
            other => NormalForm::atom(Atom::Recip(other.to_expr())),
        };
        out = out.mul(&inverse.pow(*e));
    }
    out
}
