//! Homogeneous approximation: core Lie subalgebra selection, the right ideal it
//! generates, projection onto the ideal's orthogonal complement, and the
//! reconstruction of polynomial approximating systems.

mod polynomial;
#[cfg(test)]
mod tests;

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freealg::{enumerate_basis, AlgElem, GradedComponent, Word};
use crate::liealg::{cached_lie_basis, witt_dimension, LieBasisElement};
use crate::linalg::{to_sparse, Insertion, Projector, SparseEchelon, SparseVec};
use crate::rational::{self, Rational};
use crate::series::{lie_coefficient, series_up_to, ControlSystem, SeriesEntry, SeriesError, SeriesTable};

pub use polynomial::{PolyTerm, Polynomial, PolynomialSystem};

/// Default cap on the series order explored by iterative deepening.
pub const DEFAULT_MAX_ORDER: usize = 13;
/// Largest accepted order; the graded components have `2^(N-1)` words.
pub const ORDER_LIMIT: usize = 18;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(
        "the system is not accessible up to order {max_order}: only {found} of {n} independent directions found; \
         try a larger maximum order"
    )]
    NotAccessible { n: usize, found: usize, max_order: usize },
    #[error("{element} (order {order}) is not a shuffle polynomial of the preceding projected elements")]
    NotRepresentable { element: AlgElem, order: usize },
    #[error("maximum order must be between 1 and {limit}, got {requested}")]
    OrderLimit { requested: usize, limit: usize },
}

/// A Lie element selected or derived in the core decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreElement {
    /// Combination of basis elements, e.g. `g7 + 6*g6` (1-based labels).
    pub label: String,
    /// The same combination in bracket notation.
    pub bracket: String,
    pub order: usize,
    pub element: AlgElem,
}

impl CoreElement {
    fn from_combination(basis: &[LieBasisElement], combination: &[(usize, Rational)]) -> Self {
        let render = |name: &dyn Fn(usize) -> String| {
            let mut out = String::new();
            for (k, (i, c)) in combination.iter().enumerate() {
                let negative = rational::is_negative(c);
                let magnitude = if negative { -c.clone() } else { c.clone() };
                match (k, negative) {
                    (0, true) => out.push('-'),
                    (0, false) => {}
                    (_, true) => out.push_str(" - "),
                    (_, false) => out.push_str(" + "),
                }
                if !magnitude.is_one() {
                    out.push_str(&rational::to_string(&magnitude));
                    out.push('*');
                }
                out.push_str(&name(*i));
            }
            out
        };
        let mut element = AlgElem::zero();
        for (i, c) in combination {
            element.add_scaled(&basis[*i].expansion, c);
        }
        CoreElement {
            label: render(&|i| format!("g{}", i + 1)),
            bracket: render(&|i| basis[i].bracket_string()),
            order: basis[combination[0].0].order,
            element,
        }
    }
}

/// The `n` selected Lie elements `ell` and the generators `dees` of the core subalgebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreDecomposition {
    pub ell: Vec<CoreElement>,
    pub dees: Vec<CoreElement>,
}

impl CoreDecomposition {
    pub fn orders(&self) -> Vec<usize> {
        self.ell.iter().map(|e| e.order).collect()
    }
}

/// Splits the Lie basis, in order, into elements with new independent
/// coefficient vectors (`ell`) and core generators (`dees`), continuing through
/// every basis element of the order of the last `ell`.
pub fn select_core(table: &SeriesTable, basis: &[LieBasisElement], n: usize) -> Result<CoreDecomposition, ApproxError> {
    let mut ell: Vec<usize> = Vec::new();
    let mut dees = Vec::new();
    let mut span = SparseEchelon::with_tracking();
    let mut last_order: Option<usize> = None;
    for (index, g) in basis.iter().enumerate() {
        if last_order.is_some_and(|w| g.order > w) {
            break;
        }
        let v = to_sparse(&lie_coefficient(table, g)?);
        let coefficients = match span.insert(&v) {
            Insertion::Independent(_) if ell.len() < n => {
                ell.push(index);
                if ell.len() == n {
                    last_order = Some(g.order);
                }
                continue;
            }
            Insertion::Independent(_) => unreachable!("coefficient vectors cannot exceed the state dimension"),
            Insertion::Dependent(coefficients) => coefficients,
        };
        // v(g) = sum c_j v(ell_j); cancel the same-order part so that the
        // remainder lies in the image of lower orders
        let mut combination = vec![(index, Rational::one())];
        for (j, c) in coefficients {
            if basis[ell[j]].order == g.order {
                combination.push((ell[j], -c));
            }
        }
        dees.push(CoreElement::from_combination(basis, &combination));
    }
    if ell.len() < n {
        return Err(ApproxError::NotAccessible { n, found: ell.len(), max_order: table.max_order() });
    }
    let ell = ell.iter().map(|&i| CoreElement::from_combination(basis, &[(i, Rational::one())])).collect();
    Ok(CoreDecomposition { ell, dees })
}

/// Independent spanning rows of the right ideal in one graded component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealBlock {
    pub order: usize,
    pub rows: Vec<AlgElem>,
}

impl IdealBlock {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Rows as coordinate vectors in canonical word order.
    pub fn matrix(&self) -> Vec<Vec<Rational>> {
        let component = GradedComponent::new(self.order);
        self.rows.iter().map(|r| component.vectorize(r).expect("ideal rows are homogeneous")).collect()
    }
}

fn elem_to_sparse(e: &AlgElem) -> SparseVec<Word> {
    e.terms().map(|(w, c)| (w.clone(), c.clone())).collect()
}

fn sparse_to_elem(v: SparseVec<Word>) -> AlgElem {
    AlgElem::from_terms(v)
}

/// The ideal generated by the `dees`, intersected with each order of an `ell`.
pub fn build_ideal_blocks(core: &CoreDecomposition) -> Vec<IdealBlock> {
    let mut orders = core.orders();
    orders.dedup();
    orders
        .into_par_iter()
        .map(|m| {
            let full = 1usize << (m - 1);
            let mut echelon = SparseEchelon::new();
            let mut rows = Vec::new();
            'generators: for d in core.dees.iter().filter(|d| d.order <= m) {
                let candidates: Vec<AlgElem> = if d.order == m {
                    vec![d.element.clone()]
                } else {
                    enumerate_basis(m - d.order).into_iter().map(|z| d.element.concat(&AlgElem::word(z))).collect()
                };
                for row in candidates {
                    if let Insertion::Independent(_) = echelon.insert(&elem_to_sparse(&row)) {
                        rows.push(row);
                        if rows.len() == full {
                            break 'generators;
                        }
                    }
                }
            }
            IdealBlock { order: m, rows }
        })
        .collect()
}

/// Projections of the `ell` onto the orthogonal complement of the ideal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub ell_tilde: Vec<AlgElem>,
    pub orders: Vec<usize>,
}

pub fn project(core: &CoreDecomposition, blocks: &[IdealBlock]) -> Projection {
    let projectors: BTreeMap<usize, Projector<Word>> = blocks
        .par_iter()
        .map(|block| {
            let rows: Vec<SparseVec<Word>> = block.rows.iter().map(elem_to_sparse).collect();
            (block.order, Projector::new(&rows, &enumerate_basis(block.order)))
        })
        .collect();
    let ell_tilde = core
        .ell
        .iter()
        .map(|l| {
            let f = elem_to_sparse(&l.element);
            match projectors.get(&l.order) {
                Some(p) => sparse_to_elem(p.apply(&f)),
                None => l.element.clone(),
            }
        })
        .collect();
    Projection { ell_tilde, orders: core.orders() }
}

/// `sum beta_q  l_1^{sh q_1} sh ... sh l_r^{sh q_r}`, keyed by the exponents `q`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShufflePolynomial {
    pub terms: BTreeMap<Vec<u32>, Rational>,
}

impl ShufflePolynomial {
    /// The commutative polynomial `sum beta_q x^q` in `n` state variables.
    pub fn to_polynomial(&self, n: usize) -> Polynomial {
        let mut out = Polynomial::zero();
        for (q, beta) in &self.terms {
            let mut exps = q.clone();
            exps.resize(n, 0);
            out.add_assign(&Polynomial::monomial(beta.clone(), 0, &exps));
        }
        out
    }
}

/// Exponent vectors `q >= 0` with `sum weights[i] * q[i] = target`.
pub fn weighted_multi_indices(weights: &[usize], target: usize) -> Vec<Vec<u32>> {
    fn extend(weights: &[usize], remaining: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let Some((&w, rest)) = weights.split_first() else {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        };
        for q in 0..=remaining / w {
            current.push(q as u32);
            extend(rest, remaining - q * w, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    extend(weights, target, &mut Vec::new(), &mut out);
    out
}

/// Writes the order-`m` element `y` as a shuffle polynomial of `basis`
/// (elements with their orders). Order 0 stands for the scalar part.
pub fn express_as_shuffle_poly(
    y: &AlgElem,
    basis: &[(AlgElem, usize)],
    m: usize,
) -> Result<ShufflePolynomial, ApproxError> {
    let not_representable = || ApproxError::NotRepresentable { element: y.clone(), order: m };
    let mut out = ShufflePolynomial::default();
    if m == 0 {
        if y.num_terms() > 0 {
            return Err(not_representable());
        }
        if !y.scalar_part().is_zero() {
            out.terms.insert(vec![0; basis.len()], y.scalar_part().clone());
        }
        return Ok(out);
    }
    if !y.scalar_part().is_zero() || !y.is_homogeneous(m) {
        return Err(not_representable());
    }
    if y.is_zero() {
        return Ok(out);
    }
    let weights: Vec<usize> = basis.iter().map(|(_, w)| *w).collect();
    let indices = weighted_multi_indices(&weights, m);
    let mut powers: Vec<Vec<AlgElem>> = basis.iter().map(|(e, _)| vec![AlgElem::scalar(Rational::one()), e.clone()]).collect();
    let mut echelon = SparseEchelon::with_tracking();
    let mut accepted = Vec::new();
    for q in &indices {
        let mut monomial = AlgElem::scalar(Rational::one());
        for (i, &qi) in q.iter().enumerate() {
            while powers[i].len() <= qi as usize {
                let next = powers[i].last().unwrap().shuffle(&basis[i].0);
                powers[i].push(next);
            }
            if qi > 0 {
                monomial = monomial.shuffle(&powers[i][qi as usize]);
            }
        }
        if let Insertion::Independent(_) = echelon.insert(&elem_to_sparse(&monomial)) {
            accepted.push(q.clone());
        }
    }
    let coefficients = echelon.express(&elem_to_sparse(y)).ok_or_else(not_representable)?;
    for (k, c) in coefficients {
        out.terms.insert(accepted[k].clone(), c);
    }
    Ok(out)
}

fn previous(proj: &Projection, i: usize) -> Vec<(AlgElem, usize)> {
    proj.ell_tilde[..i].iter().cloned().zip(proj.orders[..i].iter().copied()).collect()
}

/// The approximating system with `a_hat = 0`, built by splitting each
/// projected element on the last letter of its words.
pub fn build_nonautonomous(proj: &Projection) -> Result<PolynomialSystem, ApproxError> {
    let n = proj.ell_tilde.len();
    let mut b_hat = Vec::with_capacity(n);
    for (i, (ell, &w)) in proj.ell_tilde.iter().zip(&proj.orders).enumerate() {
        let mut alpha = Rational::zero();
        let mut parts: BTreeMap<u8, AlgElem> = BTreeMap::new();
        for (word, c) in ell.terms() {
            let last = word.last().expect("words are nonempty");
            if word.len() == 1 {
                alpha += c;
            } else {
                parts.entry(last).or_default().add_term(word.prefix(), c.clone());
            }
        }
        let mut b = Polynomial::monomial(-alpha, (w - 1) as u32, &vec![0; n]);
        let basis = previous(proj, i);
        for (j, y) in parts {
            let p = express_as_shuffle_poly(&y, &basis, w - j as usize - 1)?;
            b.add_assign(&p.to_polynomial(n).times_t_power(j as u32).neg());
        }
        b_hat.push(b);
    }
    Ok(PolynomialSystem { n, a_hat: vec![Polynomial::zero(); n], b_hat })
}

/// Which of the two maps produced an element outside the shuffle span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessMap {
    Phi,
    Psi,
}

/// Evidence that no autonomous approximating system exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoAutonomousApproximation {
    pub nonexistent: bool,
    /// 1-based index `i` of the projected element that fails.
    pub witness_index: usize,
    pub witness_map: WitnessMap,
    pub witness_element: AlgElem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutonomousOutcome {
    Found(PolynomialSystem),
    Nonexistent(NoAutonomousApproximation),
}

/// The time-invariant approximating system, if one exists: `phi` and `psi` of
/// every projected element must be shuffle polynomials of the preceding ones.
pub fn build_autonomous(proj: &Projection) -> AutonomousOutcome {
    let n = proj.ell_tilde.len();
    let mut a_hat = Vec::with_capacity(n);
    let mut b_hat = Vec::with_capacity(n);
    for (i, (ell, &w)) in proj.ell_tilde.iter().zip(&proj.orders).enumerate() {
        let basis = previous(proj, i);
        let mut parts = Vec::with_capacity(2);
        for (map, image) in [(WitnessMap::Phi, ell.phi()), (WitnessMap::Psi, ell.psi())] {
            match express_as_shuffle_poly(&image, &basis, w - 1) {
                Ok(p) => parts.push(p.to_polynomial(n).neg()),
                Err(_) => {
                    return AutonomousOutcome::Nonexistent(NoAutonomousApproximation {
                        nonexistent: true,
                        witness_index: i + 1,
                        witness_map: map,
                        witness_element: image,
                    })
                }
            }
        }
        b_hat.push(parts.pop().unwrap());
        a_hat.push(parts.pop().unwrap());
    }
    AutonomousOutcome::Found(PolynomialSystem { n, a_hat, b_hat })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Both,
    Nonautonomous,
    Autonomous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    /// Largest series order tried by iterative deepening.
    pub max_order: usize,
    pub mode: Mode,
    /// Directory for the Lie basis cache; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Self { max_order: DEFAULT_MAX_ORDER, mode: Mode::Both, cache_dir: None }
    }
}

/// Everything the pipeline derives for one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationResult {
    pub dimension: usize,
    /// Series order at which `n` independent directions were found.
    pub series_order: usize,
    /// Nonzero series coefficients up to `series_order`.
    pub series: Vec<SeriesEntry>,
    pub ell: Vec<CoreElement>,
    pub dees: Vec<CoreElement>,
    pub ideal_blocks: Vec<IdealBlock>,
    pub ell_tilde: Vec<AlgElem>,
    pub orders: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonautonomous: Option<PolynomialSystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub autonomous: Option<AutonomousOutcome>,
}

impl ApproximationResult {
    pub fn projection(&self) -> Projection {
        Projection { ell_tilde: self.ell_tilde.clone(), orders: self.orders.clone() }
    }
}

/// Smallest order whose Lie components jointly have dimension at least `n`.
fn first_candidate_order(n: usize) -> usize {
    let mut total = 0u64;
    let mut m = 0;
    while total < n as u64 {
        m += 1;
        total += witt_dimension(m);
    }
    m
}

/// Runs the whole pipeline, raising the series order until the coefficient
/// vectors of the Lie basis span the state space.
pub fn approximate(sys: &ControlSystem, options: &Options) -> Result<ApproximationResult, ApproxError> {
    let n = sys.dimension();
    if options.max_order == 0 || options.max_order > ORDER_LIMIT {
        return Err(ApproxError::OrderLimit { requested: options.max_order, limit: ORDER_LIMIT });
    }
    let start = first_candidate_order(n).min(options.max_order);
    let mut found = None;
    let mut last_error = None;
    for order in start..=options.max_order {
        log::info!("trying series order {order}");
        let basis = cached_lie_basis(order, options.cache_dir.as_deref());
        let table = series_up_to(sys, order)?;
        match select_core(&table, &basis, n) {
            Ok(core) => {
                found = Some((table, core));
                break;
            }
            Err(err @ ApproxError::NotAccessible { .. }) => last_error = Some(err),
            Err(err) => return Err(err),
        }
    }
    let Some((table, core)) = found else {
        return Err(last_error.expect("at least one order was tried"));
    };
    log::info!("core found with orders {:?}", core.orders());
    let blocks = build_ideal_blocks(&core);
    let projection = project(&core, &blocks);
    let nonautonomous = match options.mode {
        Mode::Both | Mode::Nonautonomous => Some(build_nonautonomous(&projection)?),
        Mode::Autonomous => None,
    };
    let autonomous = match options.mode {
        Mode::Both | Mode::Autonomous => Some(build_autonomous(&projection)),
        Mode::Nonautonomous => None,
    };
    Ok(ApproximationResult {
        dimension: n,
        series_order: table.max_order(),
        series: table.nonzero().map(|(w, v)| SeriesEntry { word: w.clone(), coeff: v.clone() }).collect(),
        ell: core.ell,
        dees: core.dees,
        ideal_blocks: blocks,
        ell_tilde: projection.ell_tilde,
        orders: projection.orders,
        nonautonomous,
        autonomous,
    })
}
