//! A graded basis of the free Lie algebra generated by the `xi_m`, built from
//! right-normed brackets filtered block by block (fixed order and length).

use std::cmp::Ordering;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::freealg::{enumerate_block, AlgElem, Word};
use crate::linalg::{Insertion, SparseEchelon, SparseVec};

const CACHE_VERSION: u32 = 1;
const CACHE_FILE: &str = "lie_basis_v1.json";

/// A right-normed bracket `[xi_m1, [xi_m2, ... [xi_m(k-1), xi_mk]...]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LieBasisElement {
    pub word: Word,
    pub expansion: AlgElem,
    pub order: usize,
    pub length: usize,
    /// Zero-based position in the global list.
    pub index: usize,
}

impl LieBasisElement {
    /// Bracket notation, e.g. `[xi_0, [xi_1, xi_0]]`.
    pub fn bracket_string(&self) -> String {
        let letters = self.word.letters();
        let mut out = String::new();
        for (i, m) in letters.iter().enumerate() {
            if i + 1 < letters.len() {
                out.push_str(&format!("[xi_{m}, "));
            } else {
                out.push_str(&format!("xi_{m}"));
            }
        }
        out.push_str(&"]".repeat(letters.len() - 1));
        out
    }
}

/// `a b - b a`.
pub fn bracket(a: &AlgElem, b: &AlgElem) -> AlgElem {
    &a.concat(b) - &b.concat(a)
}

/// Expands the right-normed bracket encoded by `w` into the free algebra.
pub fn expand_right_normed(w: &Word) -> AlgElem {
    let letters = w.letters();
    let Some((&last, init)) = letters.split_last() else {
        return AlgElem::zero();
    };
    init.iter().rev().fold(AlgElem::xi(last), |acc, &m| bracket(&AlgElem::xi(m), &acc))
}

/// Candidate order inside a block: first letter ascending, then the
/// remaining letters in descending lexicographic order.
fn candidate_order(a: &Word, b: &Word) -> Ordering {
    let (la, lb) = (a.letters(), b.letters());
    la[0].cmp(&lb[0]).then_with(|| lb[1..].cmp(&la[1..]))
}

fn elem_to_sparse(e: &AlgElem) -> SparseVec<Word> {
    e.terms().map(|(w, c)| (w.clone(), c.clone())).collect()
}

/// Surviving right-normed words of order `m` and length `k`, with expansions.
pub fn build_block(m: usize, k: usize) -> Vec<(Word, AlgElem)> {
    let mut candidates = enumerate_block(m, k);
    candidates.sort_by(candidate_order);
    let mut echelon = SparseEchelon::new();
    let mut kept = Vec::new();
    for w in candidates {
        let expansion = expand_right_normed(&w);
        if expansion.is_zero() {
            continue;
        }
        if let Insertion::Independent(_) = echelon.insert(&elem_to_sparse(&expansion)) {
            kept.push((w, expansion));
        }
    }
    kept
}

/// Basis words with their expansions, keyed by (order, position).
type Block = ((usize, usize), Vec<(Word, AlgElem)>);

fn assemble(blocks: Vec<Block>) -> Vec<LieBasisElement> {
    let mut out = Vec::new();
    for ((m, k), block) in blocks {
        for (word, expansion) in block {
            let index = out.len();
            out.push(LieBasisElement { word, expansion, order: m, length: k, index });
        }
    }
    out
}

fn block_keys(n: usize) -> Vec<(usize, usize)> {
    (1..=n).flat_map(|m| (1..=m).map(move |k| (m, k))).collect()
}

/// Basis elements of orders `1..=n`, sorted by order, then length.
pub fn build_lie_basis(n: usize) -> Vec<LieBasisElement> {
    let blocks: Vec<_> = block_keys(n).into_par_iter().map(|(m, k)| ((m, k), build_block(m, k))).collect();
    assemble(blocks)
}

/// Dimension of the order-`m` component of the free Lie algebra.
pub fn witt_dimension(m: usize) -> u64 {
    if m <= 1 {
        return m as u64;
    }
    let mut total: i128 = 0;
    for d in (1..=m).filter(|d| m.is_multiple_of(*d)) {
        total += mobius(d) as i128 * (1i128 << (m / d));
    }
    (total / m as i128) as u64
}

fn mobius(mut n: usize) -> i32 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    max_order: usize,
    blocks: Vec<CacheBlock>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheBlock {
    order: usize,
    length: usize,
    elements: Vec<CacheEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    word: Word,
    expansion: AlgElem,
}

pub fn cache_path(dir: &Path) -> PathBuf {
    dir.join(CACHE_FILE)
}

fn read_cache(path: &Path, n: usize) -> Option<Vec<LieBasisElement>> {
    let text = fs::read_to_string(path).ok()?;
    let cache: CacheFile = serde_json::from_str(&text).ok()?;
    if cache.version != CACHE_VERSION || cache.max_order < n {
        return None;
    }
    let blocks = cache
        .blocks
        .into_iter()
        .filter(|b| b.order <= n)
        .map(|b| ((b.order, b.length), b.elements.into_iter().map(|e| (e.word, e.expansion)).collect()))
        .collect();
    Some(assemble(blocks))
}

fn write_cache(path: &Path, n: usize, basis: &[LieBasisElement]) -> io::Result<()> {
    let mut blocks: Vec<CacheBlock> = Vec::new();
    for (m, k) in block_keys(n) {
        let elements = basis
            .iter()
            .filter(|g| g.order == m && g.length == k)
            .map(|g| CacheEntry { word: g.word.clone(), expansion: g.expansion.clone() })
            .collect();
        blocks.push(CacheBlock { order: m, length: k, elements });
    }
    let text = serde_json::to_string(&CacheFile { version: CACHE_VERSION, max_order: n, blocks })?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    // write then rename so that concurrent readers never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)
}

/// Like [`build_lie_basis`], reusing a JSON cache in `dir` when one covers `n`.
/// Cache I/O failures fall back to recomputation.
pub fn cached_lie_basis(n: usize, dir: Option<&Path>) -> Vec<LieBasisElement> {
    let Some(dir) = dir else {
        return build_lie_basis(n);
    };
    let path = cache_path(dir);
    if let Some(basis) = read_cache(&path, n) {
        log::debug!("loaded Lie basis up to order {n} from {}", path.display());
        return basis;
    }
    let basis = build_lie_basis(n);
    if let Err(err) = write_cache(&path, n, &basis) {
        log::warn!("could not write Lie basis cache {}: {err}", path.display());
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseEchelon;
    use crate::rational::int;
    use proptest::prelude::*;

    fn word<const K: usize>(letters: [u8; K]) -> Word {
        Word::from(letters)
    }

    fn elem(terms: &[(&[u8], i64)]) -> AlgElem {
        AlgElem::from_terms(terms.iter().map(|(l, c)| (Word::from(*l), int(*c))))
    }

    #[test]
    fn right_normed_expansions() {
        assert_eq!(expand_right_normed(&word([0, 1])), elem(&[(&[0, 1], 1), (&[1, 0], -1)]));
        assert_eq!(
            expand_right_normed(&word([0, 1, 0])),
            elem(&[(&[0, 1, 0], 2), (&[0, 0, 1], -1), (&[1, 0, 0], -1)])
        );
        assert_eq!(expand_right_normed(&word([2])), AlgElem::xi(2));
        assert!(expand_right_normed(&word([1, 1])).is_zero());
    }

    #[test]
    fn basis_up_to_order_four() {
        let basis = build_lie_basis(4);
        let words: Vec<Word> = basis.iter().map(|g| g.word.clone()).collect();
        assert_eq!(
            words,
            vec![word([0]), word([1]), word([2]), word([0, 1]), word([3]), word([0, 2]), word([0, 1, 0])]
        );
        assert_eq!(basis[6].bracket_string(), "[xi_0, [xi_1, xi_0]]");
        assert_eq!(basis[6].expansion, elem(&[(&[0, 1, 0], 2), (&[0, 0, 1], -1), (&[1, 0, 0], -1)]));
        assert!(basis.iter().enumerate().all(|(i, g)| g.index == i));
        assert!(basis.windows(2).all(|p| p[0].order <= p[1].order));
    }

    #[test]
    fn per_order_counts_match_witt() {
        let basis = build_lie_basis(10);
        let expected = [1, 1, 2, 3, 6, 9, 18, 30, 56, 99];
        for (m, want) in (1..=10).zip(expected) {
            let count = basis.iter().filter(|g| g.order == m).count() as u64;
            assert_eq!(count, want, "order {m}");
            assert_eq!(witt_dimension(m), want);
        }
        for g in &basis {
            assert!(g.expansion.is_homogeneous(g.order));
            assert!(g.expansion.terms().all(|(w, _)| w.len() == g.length));
        }
    }

    #[test]
    fn blocks_are_independent() {
        let basis = build_lie_basis(7);
        for m in 1..=7 {
            for k in 1..=m {
                let mut echelon = SparseEchelon::new();
                let members: Vec<_> = basis.iter().filter(|g| g.order == m && g.length == k).collect();
                for g in &members {
                    echelon.insert(&elem_to_sparse(&g.expansion));
                }
                assert_eq!(echelon.rank(), members.len());
            }
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let fresh = cached_lie_basis(5, Some(dir.path()));
        assert!(cache_path(dir.path()).exists());
        let smaller = cached_lie_basis(4, Some(dir.path()));
        assert_eq!(smaller, build_lie_basis(4));
        assert_eq!(cached_lie_basis(5, Some(dir.path())), fresh);
        fs::write(cache_path(dir.path()), "not json").unwrap();
        assert_eq!(cached_lie_basis(3, Some(dir.path())), build_lie_basis(3));
    }

    proptest! {
        #[test]
        fn brackets_are_antisymmetric(a in 0u8..6, b in 0u8..6) {
            let ab = expand_right_normed(&Word::new(vec![a, b]));
            let ba = expand_right_normed(&Word::new(vec![b, a]));
            prop_assert_eq!(ab, -&ba);
        }
    }
}
