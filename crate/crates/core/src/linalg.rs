//! Exact linear algebra over the rationals.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::rational::Rational;

pub type SparseVec<K> = BTreeMap<K, Rational>;

#[derive(Debug, Clone)]
struct Row<K> {
    entries: SparseVec<K>,
    // the row as a combination of accepted inputs (when tracking)
    combo: BTreeMap<usize, Rational>,
}

/// Result of feeding a vector to a [`SparseEchelon`].
#[derive(Debug, Clone, PartialEq)]
pub enum Insertion {
    /// The vector was independent and was accepted under this index.
    Independent(usize),
    /// The vector equals this combination of accepted inputs (empty without tracking).
    Dependent(BTreeMap<usize, Rational>),
}

/// Incremental row echelon form of sparse vectors. The pivot of a row is its
/// largest key, and reduction proceeds in descending key order.
#[derive(Debug, Clone)]
pub struct SparseEchelon<K: Ord + Clone> {
    rows: Vec<Row<K>>,
    pivots: BTreeMap<K, usize>,
    track: bool,
}

impl<K: Ord + Clone> Default for SparseEchelon<K> {
    fn default() -> Self {
        Self::new()
    }
}

/// `target += factor * source`.
pub fn axpy<K: Ord + Clone>(target: &mut SparseVec<K>, factor: &Rational, source: &SparseVec<K>) {
    for (k, c) in source {
        let value = factor * c;
        match target.get_mut(k) {
            Some(slot) => {
                *slot += value;
                if slot.is_zero() {
                    target.remove(k);
                }
            }
            None => {
                if !value.is_zero() {
                    target.insert(k.clone(), value);
                }
            }
        }
    }
}

impl<K: Ord + Clone> SparseEchelon<K> {
    pub fn new() -> Self {
        Self { rows: Vec::new(), pivots: BTreeMap::new(), track: false }
    }

    /// Also records how each row combines the accepted inputs, so that
    /// dependent vectors can be expressed through them.
    pub fn with_tracking() -> Self {
        Self { track: true, ..Self::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the stored rows. Returns the residual and, when
    /// tracking, the combination of inputs that was subtracted.
    fn reduce_tracked(&self, v: &SparseVec<K>) -> (SparseVec<K>, BTreeMap<usize, Rational>) {
        let mut residual: SparseVec<K> = v.iter().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (k.clone(), c.clone())).collect();
        let mut used: BTreeMap<usize, Rational> = BTreeMap::new();
        let mut bound: Option<K> = None;
        loop {
            let next = match &bound {
                None => residual.keys().next_back().cloned(),
                Some(b) => residual.range(..b.clone()).next_back().map(|(k, _)| k.clone()),
            };
            let Some(key) = next else { break };
            if let Some(&r) = self.pivots.get(&key) {
                let factor = residual[&key].clone();
                let row = &self.rows[r];
                axpy(&mut residual, &-factor.clone(), &row.entries);
                if self.track {
                    axpy(&mut used, &factor, &row.combo);
                }
            }
            bound = Some(key);
        }
        (residual, used)
    }

    /// The residual of `v` after eliminating all stored pivots; zero iff `v` is in the span.
    pub fn reduce(&self, v: &SparseVec<K>) -> SparseVec<K> {
        self.reduce_tracked(v).0
    }

    pub fn contains(&self, v: &SparseVec<K>) -> bool {
        self.reduce(v).is_empty()
    }

    /// Coefficients over accepted inputs reproducing `v`, if `v` is in the span.
    /// Requires tracking.
    pub fn express(&self, v: &SparseVec<K>) -> Option<BTreeMap<usize, Rational>> {
        assert!(self.track, "express requires an echelon built with tracking");
        let (residual, used) = self.reduce_tracked(v);
        residual.is_empty().then_some(used)
    }

    /// Adds `v` if it is independent of the stored rows.
    pub fn insert(&mut self, v: &SparseVec<K>) -> Insertion {
        let (mut residual, used) = self.reduce_tracked(v);
        let Some((pivot, lead)) = residual.iter().next_back().map(|(k, c)| (k.clone(), c.clone())) else {
            return Insertion::Dependent(used);
        };
        let index = self.rows.len();
        let inv = Rational::one() / lead;
        for c in residual.values_mut() {
            *c *= &inv;
        }
        let mut combo = BTreeMap::new();
        if self.track {
            // residual = input - sum(used_j input_j)
            combo.insert(index, inv.clone());
            axpy(&mut combo, &-inv, &used);
        }
        self.pivots.insert(pivot, index);
        self.rows.push(Row { entries: residual, combo });
        Insertion::Independent(index)
    }

    /// A basis of the vectors over `keys` orthogonal to every stored row.
    pub fn null_space(&self, keys: &[K]) -> Vec<SparseVec<K>> {
        let mut out = Vec::new();
        for free in keys.iter().filter(|k| !self.pivots.contains_key(*k)) {
            let mut z: SparseVec<K> = BTreeMap::from([(free.clone(), Rational::one())]);
            // rows with larger pivots only involve smaller keys, already solved
            for (pivot, &r) in self.pivots.range(free.clone()..) {
                let mut value = Rational::zero();
                for (k, c) in &self.rows[r].entries {
                    if k != pivot {
                        if let Some(zk) = z.get(k) {
                            value -= c * zk;
                        }
                    }
                }
                if !value.is_zero() {
                    z.insert(pivot.clone(), value);
                }
            }
            out.push(z);
        }
        out
    }
}

/// Dense vector to sparse map over indices, dropping zeros.
pub fn to_sparse(v: &[Rational]) -> SparseVec<usize> {
    v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i, c.clone())).collect()
}

/// Solves the square system `a x = b` by Gaussian elimination. Returns `None`
/// when `a` is singular.
pub fn solve_dense(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n), "solve_dense needs a square system");
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Rational::one() / &a[col][col];
        for c in a[col][col..].iter_mut() {
            *c *= &inv;
        }
        b[col] *= &inv;
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let factor = row[col].clone();
            if factor.is_zero() {
                continue;
            }
            for j in col..n {
                if !pivot_row[j].is_zero() {
                    let delta = &factor * &pivot_row[j];
                    row[j] -= delta;
                }
            }
            let delta = &factor * &b[col];
            b[col + 1 + offset] -= delta;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col].clone();
        for j in col + 1..n {
            if !a[col][j].is_zero() {
                acc -= &a[col][j] * &b[j];
            }
        }
        b[col] = acc;
    }
    Some(b)
}

fn dot<K: Ord>(u: &SparseVec<K>, v: &SparseVec<K>) -> Rational {
    let (small, large) = if u.len() <= v.len() { (u, v) } else { (v, u) };
    let mut acc = Rational::zero();
    for (k, c) in small {
        if let Some(d) = large.get(k) {
            acc += c * d;
        }
    }
    acc
}

/// Orthogonal projection of `f` onto the span of the independent `basis`.
fn project_onto<K: Ord + Clone>(basis: &[SparseVec<K>], f: &SparseVec<K>) -> SparseVec<K> {
    let mut out = BTreeMap::new();
    if basis.is_empty() {
        return out;
    }
    let rhs: Vec<Rational> = basis.iter().map(|r| dot(r, f)).collect();
    if rhs.iter().all(Zero::is_zero) {
        return out;
    }
    let n = basis.len();
    let mut gram = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let value = dot(&basis[i], &basis[j]);
            gram[j][i] = value.clone();
            gram[i][j] = value;
        }
    }
    let x = solve_dense(gram, rhs).expect("projection basis must be independent");
    for (row, coeff) in basis.iter().zip(&x) {
        axpy(&mut out, coeff, row);
    }
    out
}

/// Orthogonal projection onto the complement of the span of independent rows,
/// within the coordinate space spanned by a given key set.
///
/// The normal equations are solved on whichever side is smaller: the row
/// space itself, or its orthogonal complement.
#[derive(Debug, Clone)]
pub struct Projector<K: Ord + Clone> {
    basis: Vec<SparseVec<K>>,
    // true: `basis` spans the complement; false: it spans the rows
    onto_basis: bool,
}

impl<K: Ord + Clone> Projector<K> {
    pub fn new(rows: &[SparseVec<K>], keys: &[K]) -> Self {
        if rows.len() * 2 <= keys.len() {
            return Self { basis: rows.to_vec(), onto_basis: false };
        }
        let mut echelon = SparseEchelon::new();
        for r in rows {
            echelon.insert(r);
        }
        Self { basis: echelon.null_space(keys), onto_basis: true }
    }

    pub fn apply(&self, f: &SparseVec<K>) -> SparseVec<K> {
        let along = project_onto(&self.basis, f);
        if self.onto_basis {
            return along;
        }
        let mut out = f.clone();
        axpy(&mut out, &-Rational::one(), &along);
        out
    }
}

/// One-shot form of [`Projector`].
pub fn project_out<K: Ord + Clone>(rows: &[SparseVec<K>], keys: &[K], f: &SparseVec<K>) -> SparseVec<K> {
    Projector::new(rows, keys).apply(f)
}
