//! The free associative algebra of nonlinear power moments.
//!
//! A [`Word`] `(m1, ..., mk)` stands for the moment
//! `xi_{m1...mk}(theta, u) = ∫_0^theta ∫_0^{tau1} ... ∏ tau_i^{m_i} u(tau_i) dtau_k ... dtau_1`,
//! whose order `m1 + ... + mk + k` is the exponent of `theta` in its size. An
//! [`AlgElem`] is a finite rational combination of words, optionally with a
//! scalar part (needed transiently when `psi(xi_0) = 1`).

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FreeAlgError {
    #[error("element is not homogeneous of order {order}")]
    NotHomogeneous { order: usize },
    #[error("vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A moment index `(m1, ..., mk)`. Ordered by length, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(letters: impl Into<Vec<u8>>) -> Self {
        Word(letters.into())
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(m: u8) -> Self {
        Word(vec![m])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `m1 + ... + mk + k`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&m| m as usize + 1).sum()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.0);
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    pub fn first(&self) -> Option<u8> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    /// The word without its first letter.
    pub fn tail(&self) -> Word {
        Word(self.0.get(1..).unwrap_or(&[]).to_vec())
    }

    /// The word without its last letter.
    pub fn prefix(&self) -> Word {
        Word(self.0[..self.0.len().saturating_sub(1)].to_vec())
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "xi_{{")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

impl From<&[u8]> for Word {
    fn from(letters: &[u8]) -> Self {
        Word(letters.to_vec())
    }
}

impl<const K: usize> From<[u8; K]> for Word {
    fn from(letters: [u8; K]) -> Self {
        Word(letters.to_vec())
    }
}

/// All words of order `m`, in canonical order. There are `2^(m-1)` of them.
pub fn enumerate_basis(m: usize) -> Vec<Word> {
    fn extend(remaining: usize, current: &mut Vec<u8>, out: &mut Vec<Word>) {
        if remaining == 0 {
            out.push(Word(current.clone()));
            return;
        }
        for letter_order in 1..=remaining {
            current.push((letter_order - 1) as u8);
            extend(remaining - letter_order, current, out);
            current.pop();
        }
    }
    let mut out = Vec::with_capacity(1usize << m.saturating_sub(1).min(40));
    if m > 0 {
        extend(m, &mut Vec::new(), &mut out);
    }
    out.sort();
    out
}

/// Words of order `m` and length `k`, in canonical order.
pub fn enumerate_block(m: usize, k: usize) -> Vec<Word> {
    enumerate_basis(m).into_iter().filter(|w| w.len() == k).collect()
}

/// Coordinates for the graded component `A^m` in canonical word order.
#[derive(Debug, Clone)]
pub struct GradedComponent {
    order: usize,
    words: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl GradedComponent {
    pub fn new(order: usize) -> Self {
        Self::from_words(order, enumerate_basis(order))
    }

    pub fn from_words(order: usize, words: Vec<Word>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self { order, words, index }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn position(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn vectorize(&self, e: &AlgElem) -> Result<Vec<Rational>, FreeAlgError> {
        let mut out = vec![Rational::zero(); self.words.len()];
        if !e.scalar.is_zero() {
            return Err(FreeAlgError::NotHomogeneous { order: self.order });
        }
        for (w, c) in &e.terms {
            let i = self.position(w).ok_or(FreeAlgError::NotHomogeneous { order: self.order })?;
            out[i] = c.clone();
        }
        Ok(out)
    }

    pub fn devectorize(&self, v: &[Rational]) -> Result<AlgElem, FreeAlgError> {
        if v.len() != self.words.len() {
            return Err(FreeAlgError::DimensionMismatch { expected: self.words.len(), found: v.len() });
        }
        Ok(AlgElem::from_terms(self.words.iter().cloned().zip(v.iter().cloned())))
    }
}

/// Coordinates of a homogeneous element of order `m` in canonical word order.
pub fn vectorize(e: &AlgElem, m: usize) -> Result<Vec<Rational>, FreeAlgError> {
    GradedComponent::new(m).vectorize(e)
}

pub fn devectorize(v: &[Rational], m: usize) -> Result<AlgElem, FreeAlgError> {
    GradedComponent::new(m).devectorize(v)
}

/// Rational combination of words plus a scalar part.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct AlgElem {
    terms: BTreeMap<Word, Rational>,
    scalar: Rational,
}

impl AlgElem {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn word(w: impl Into<Word>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(w.into(), Rational::one());
        Self { terms, scalar: Rational::zero() }
    }

    /// `xi_m` for a single letter.
    pub fn xi(m: u8) -> Self {
        Self::word(Word::letter(m))
    }

    pub fn scalar(c: Rational) -> Self {
        Self { terms: BTreeMap::new(), scalar: c }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Word, Rational)>) -> Self {
        let mut out = Self::zero();
        for (w, c) in terms {
            out.add_term(w, c);
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, w: &Word) -> Rational {
        self.terms.get(w).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scalar_part(&self) -> &Rational {
        &self.scalar
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.scalar.is_zero()
    }

    pub fn add_term(&mut self, w: Word, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(w) {
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

    pub fn add_scaled(&mut self, other: &AlgElem, k: &Rational) {
        if k.is_zero() {
            return;
        }
        for (w, c) in &other.terms {
            self.add_term(w.clone(), c * k);
        }
        self.scalar += &other.scalar * k;
    }

    pub fn scale(&self, k: &Rational) -> AlgElem {
        if k.is_zero() {
            return AlgElem::zero();
        }
        AlgElem {
            terms: self.terms.iter().map(|(w, c)| (w.clone(), c * k)).collect(),
            scalar: &self.scalar * k,
        }
    }

    /// True when every word has order `m` and there is no scalar part.
    pub fn is_homogeneous(&self, m: usize) -> bool {
        self.scalar.is_zero() && self.terms.keys().all(|w| w.order() == m)
    }

    /// The common order of all words, if the element is nonzero and homogeneous.
    pub fn order(&self) -> Option<usize> {
        if !self.scalar.is_zero() {
            return if self.terms.is_empty() { Some(0) } else { None };
        }
        let mut orders = self.terms.keys().map(Word::order);
        let first = orders.next()?;
        orders.all(|o| o == first).then_some(first)
    }

    /// Largest word in canonical order.
    pub fn leading_word(&self) -> Option<&Word> {
        self.terms.keys().next_back()
    }

    /// Inner product in which the words form an orthonormal basis.
    pub fn inner(&self, other: &AlgElem) -> Rational {
        let (small, large) = if self.terms.len() <= other.terms.len() { (self, other) } else { (other, self) };
        let mut acc = &self.scalar * &other.scalar;
        for (w, c) in &small.terms {
            if let Some(d) = large.terms.get(w) {
                acc += c * d;
            }
        }
        acc
    }

    /// Bilinear extension of word concatenation.
    pub fn concat(&self, other: &AlgElem) -> AlgElem {
        let mut out = AlgElem::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(w1.concat(w2), c1 * c2);
            }
            if !other.scalar.is_zero() {
                out.add_term(w1.clone(), c1 * &other.scalar);
            }
        }
        if !self.scalar.is_zero() {
            for (w2, c2) in &other.terms {
                out.add_term(w2.clone(), &self.scalar * c2);
            }
            out.scalar += &self.scalar * &other.scalar;
        }
        out
    }

    /// Bilinear extension of the shuffle product; scalars act as the unit.
    pub fn shuffle(&self, other: &AlgElem) -> AlgElem {
        let mut acc: HashMap<Word, Rational> = HashMap::new();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let product = c1 * c2;
                for (w, n) in shuffle_words(w1, w2).iter() {
                    *acc.entry(w.clone()).or_insert_with(Rational::zero) += &product * Rational::from_integer(BigInt::from(*n));
                }
            }
        }
        let mut out = AlgElem::from_terms(acc);
        if !other.scalar.is_zero() {
            for (w1, c1) in &self.terms {
                out.add_term(w1.clone(), c1 * &other.scalar);
            }
        }
        if !self.scalar.is_zero() {
            for (w2, c2) in &other.terms {
                out.add_term(w2.clone(), &self.scalar * c2);
            }
        }
        out.scalar = &self.scalar * &other.scalar;
        out
    }

    /// `self ⧢ self ⧢ ... ⧢ self` (`q` factors); `q = 0` gives the unit.
    pub fn shuffle_power(&self, q: u32) -> AlgElem {
        let mut out = AlgElem::scalar(Rational::one());
        for _ in 0..q {
            out = out.shuffle(self);
        }
        out
    }

    /// The derivation with `phi(xi_m) = m xi_{m-1}`.
    pub fn phi(&self) -> AlgElem {
        let mut out = AlgElem::zero();
        for (w, c) in &self.terms {
            for (i, &m) in w.0.iter().enumerate() {
                if m == 0 {
                    continue;
                }
                let mut letters = w.0.clone();
                letters[i] = m - 1;
                out.add_term(Word(letters), c * Rational::from_integer(BigInt::from(m)));
            }
        }
        out
    }

    /// Strips a trailing `xi_0`; words ending in another letter map to zero.
    pub fn psi(&self) -> AlgElem {
        let mut out = AlgElem::zero();
        for (w, c) in &self.terms {
            if w.last() != Some(0) {
                continue;
            }
            if w.len() == 1 {
                out.scalar += c;
            } else {
                out.add_term(w.prefix(), c.clone());
            }
        }
        out
    }
}

impl fmt::Debug for AlgElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for AlgElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        let mut write_term = |f: &mut fmt::Formatter<'_>, c: &Rational, body: Option<&Word>| -> fmt::Result {
            let negative = rational::is_negative(c);
            let magnitude = if negative { -c.clone() } else { c.clone() };
            if first {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if negative { " - " } else { " + " })?;
            }
            first = false;
            match body {
                Some(w) if magnitude.is_one() => write!(f, "{w}"),
                Some(w) => write!(f, "{}*{w}", rational::to_string(&magnitude)),
                None => write!(f, "{}", rational::to_string(&magnitude)),
            }
        };
        if !self.scalar.is_zero() {
            write_term(f, &self.scalar, None)?;
        }
        for (w, c) in &self.terms {
            write_term(f, c, Some(w))?;
        }
        Ok(())
    }
}

impl Add for &AlgElem {
    type Output = AlgElem;
    fn add(self, rhs: &AlgElem) -> AlgElem {
        let mut out = self.clone();
        out.add_scaled(rhs, &Rational::one());
        out
    }
}

impl Sub for &AlgElem {
    type Output = AlgElem;
    fn sub(self, rhs: &AlgElem) -> AlgElem {
        let mut out = self.clone();
        out.add_scaled(rhs, &-Rational::one());
        out
    }
}

impl Neg for &AlgElem {
    type Output = AlgElem;
    fn neg(self) -> AlgElem {
        self.scale(&-Rational::one())
    }
}

type ShuffleTerms = Rc<Vec<(Word, u64)>>;

thread_local! {
    static SHUFFLE_MEMO: RefCell<HashMap<(Word, Word), ShuffleTerms>> = RefCell::new(HashMap::new());
}

/// Shuffle of two words with multiplicities, memoized per thread.
pub fn shuffle_words(u: &Word, v: &Word) -> ShuffleTerms {
    if u.is_empty() {
        return Rc::new(vec![(v.clone(), 1)]);
    }
    if v.is_empty() {
        return Rc::new(vec![(u.clone(), 1)]);
    }
    let key = if u <= v { (u.clone(), v.clone()) } else { (v.clone(), u.clone()) };
    if let Some(hit) = SHUFFLE_MEMO.with(|memo| memo.borrow().get(&key).cloned()) {
        return hit;
    }
    let mut acc: HashMap<Word, u64> = HashMap::new();
    for (head, rest_u, rest_v) in [(u.0[0], u.tail(), v.clone()), (v.0[0], u.clone(), v.tail())] {
        for (w, n) in shuffle_words(&rest_u, &rest_v).iter() {
            let mut letters = Vec::with_capacity(w.len() + 1);
            letters.push(head);
            letters.extend_from_slice(&w.0);
            *acc.entry(Word(letters)).or_insert(0) += n;
        }
    }
    let mut terms: Vec<(Word, u64)> = acc.into_iter().collect();
    terms.sort();
    let terms = Rc::new(terms);
    SHUFFLE_MEMO.with(|memo| memo.borrow_mut().insert(key, terms.clone()));
    terms
}

/// JSON form: words as integer arrays with `"p/q"` coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgElemJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<String>,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub word: Word,
    pub coeff: String,
}

impl From<&AlgElem> for AlgElemJson {
    fn from(e: &AlgElem) -> Self {
        AlgElemJson {
            scalar: (!e.scalar.is_zero()).then(|| rational::to_string(&e.scalar)),
            terms: e.terms.iter().map(|(w, c)| TermJson { word: w.clone(), coeff: rational::to_string(c) }).collect(),
        }
    }
}

impl AlgElemJson {
    pub fn to_elem(&self) -> Option<AlgElem> {
        let mut out = AlgElem::zero();
        if let Some(s) = &self.scalar {
            out.scalar = rational::parse(s)?;
        }
        for t in &self.terms {
            out.add_term(t.word.clone(), rational::parse(&t.coeff)?);
        }
        Some(out)
    }
}

impl Serialize for AlgElem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        AlgElemJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgElem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let json = AlgElemJson::deserialize(d)?;
        json.to_elem().ok_or_else(|| serde::de::Error::custom("invalid rational coefficient"))
    }
}
