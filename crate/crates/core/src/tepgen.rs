//! Ordered test-error-pattern generation over a flipping pattern tree.
//!
//! Patterns live in the coordinate system of ascending reliability. The tree
//! root is the all-zero pattern; a pattern `f` has a left-most child (set the
//! least reliable position, when `min S(f) > 0`) and an adjacent right sibling
//! (move the minimum support element up by one, when that slot is free).
//! Both are never lighter than `f` under [`tep_less`], so a priority frontier
//! seeded with the root emits every pattern in total order.
//!
//! Ties in soft weight and Hamming weight are broken by reading the pattern as
//! a binary number whose least significant digit is the least reliable
//! position; the smaller number comes first. This is the tie order under
//! which both tree moves are strictly increasing.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use smallvec::SmallVec;

use crate::gf2::BinaryVector;

/// A test error pattern and its soft weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Tep {
    pub bits: BinaryVector,
    pub weight: f64,
}

impl Tep {
    pub fn hamming_weight(&self) -> usize {
        self.bits.weight()
    }

    /// Indices of the ones, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.bits.iter_ones().collect()
    }
}

/// Compares two bit vectors of equal length as binary numbers with index 0
/// as the least significant digit.
fn lex_cmp(a: &[u64], b: &[u64]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// The total order `≺`: soft weight, then Hamming weight, then the
/// lexicographic rule described in the module docs.
pub fn tep_less(a: &Tep, b: &Tep) -> Ordering {
    a.weight
        .total_cmp(&b.weight)
        .then(a.hamming_weight().cmp(&b.hamming_weight()))
        .then_with(|| lex_cmp(a.bits.words(), b.bits.words()))
}

type Words = SmallVec<[u64; 2]>;

#[derive(Debug, Clone)]
struct Node {
    weight: f64,
    hamming: u32,
    bits: Words,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.hamming.cmp(&other.hamming))
            .then_with(|| lex_cmp(&self.bits, &other.bits))
    }
}

/// A pattern emitted by the generator, in sorted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedPattern {
    words: Words,
    len: usize,
    pub weight: f64,
    pub hamming: u32,
}

impl SortedPattern {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sorted positions of the ones, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn to_vector(&self) -> BinaryVector {
        let mut v = BinaryVector::zeros(self.len);
        for i in self.support() {
            v.set(i, true);
        }
        v
    }

    /// Compares two patterns of the same generator under `≺`.
    pub fn order(&self, other: &SortedPattern) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.hamming.cmp(&other.hamming))
            .then_with(|| lex_cmp(&self.words, &other.words))
    }

    pub fn to_tep(&self) -> Tep {
        Tep {
            bits: self.to_vector(),
            weight: self.weight,
        }
    }
}

/// On-demand generator of all `2^K` patterns in `≺` order.
#[derive(Debug, Clone)]
pub struct TepGenerator {
    reliabilities: Vec<f64>,
    perm: Vec<usize>,
    frontier: BinaryHeap<Reverse<Node>>,
    emitted: u64,
}

impl TepGenerator {
    /// Sorts `|r|` ascending (stable, so equal reliabilities keep index order)
    /// and seeds the frontier with the all-zero pattern.
    pub fn new(r: &[f64]) -> Self {
        let mut perm: Vec<usize> = (0..r.len()).collect();
        perm.sort_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()));
        let reliabilities = perm.iter().map(|&i| r[i].abs()).collect();
        Self::from_sorted(reliabilities, perm)
    }

    /// Builds a generator over reliabilities that are already non-decreasing.
    /// `perm[j]` is the caller's index for sorted position `j`.
    pub fn from_sorted(reliabilities: Vec<f64>, perm: Vec<usize>) -> Self {
        debug_assert!(reliabilities.windows(2).all(|w| w[0] <= w[1]));
        debug_assert_eq!(reliabilities.len(), perm.len());
        let words = reliabilities.len().div_ceil(64).max(1);
        let mut frontier = BinaryHeap::new();
        frontier.push(Reverse(Node {
            weight: 0.0,
            hamming: 0,
            bits: SmallVec::from_elem(0, words),
        }));
        Self {
            reliabilities,
            perm,
            frontier,
            emitted: 0,
        }
    }

    /// Number of positions `K`.
    pub fn len(&self) -> usize {
        self.reliabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reliabilities.is_empty()
    }

    /// Ascending reliabilities.
    pub fn reliabilities(&self) -> &[f64] {
        &self.reliabilities
    }

    /// `perm[j]` is the original index of sorted position `j`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    /// Soft weight of a support set, summed over ascending sorted positions.
    fn weight_of(&self, bits: &[u64]) -> f64 {
        let mut w = 0.0;
        for (wi, &word) in bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let tz = word.trailing_zeros() as usize;
                w += self.reliabilities[wi * 64 + tz];
                word &= word - 1;
            }
        }
        w
    }

    fn lowest_one(bits: &[u64]) -> Option<usize> {
        bits.iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(wi, w)| wi * 64 + w.trailing_zeros() as usize)
    }

    /// Builds the pattern with the given sorted positions set, weighted the
    /// same way as emitted patterns.
    pub fn pattern(&self, sorted_positions: impl IntoIterator<Item = usize>) -> SortedPattern {
        let k = self.reliabilities.len();
        let mut words: Words = SmallVec::from_elem(0, k.div_ceil(64).max(1));
        for j in sorted_positions {
            words[j / 64] |= 1 << (j % 64);
        }
        let hamming = words.iter().map(|w| w.count_ones()).sum();
        SortedPattern {
            weight: self.weight_of(&words),
            hamming,
            words,
            len: k,
        }
    }

    /// The next pattern in sorted coordinates, or `None` once all `2^K`
    /// patterns have been emitted.
    pub fn next_sorted(&mut self) -> Option<SortedPattern> {
        let Reverse(node) = self.frontier.pop()?;
        let k = self.reliabilities.len();
        let min = Self::lowest_one(&node.bits);
        // left-most child
        if k > 0 && min.is_none_or(|m| m > 0) {
            let mut bits = node.bits.clone();
            bits[0] |= 1;
            self.frontier.push(Reverse(Node {
                weight: self.weight_of(&bits),
                hamming: node.hamming + 1,
                bits,
            }));
        }
        // adjacent right sibling
        if let Some(i) = min {
            let j = i + 1;
            if j < k && (node.bits[j / 64] >> (j % 64)) & 1 == 0 {
                let mut bits = node.bits.clone();
                bits[i / 64] ^= 1 << (i % 64);
                bits[j / 64] ^= 1 << (j % 64);
                self.frontier.push(Reverse(Node {
                    weight: self.weight_of(&bits),
                    hamming: node.hamming,
                    bits,
                }));
            }
        }
        self.emitted += 1;
        Some(SortedPattern {
            words: node.bits,
            len: k,
            weight: node.weight,
            hamming: node.hamming,
        })
    }

    /// The next pattern mapped back to the caller's coordinates.
    pub fn next_tep(&mut self) -> Option<Tep> {
        let p = self.next_sorted()?;
        let mut bits = BinaryVector::zeros(p.len());
        for j in p.support() {
            bits.set(self.perm[j], true);
        }
        Some(Tep {
            bits,
            weight: p.weight,
        })
    }
}

impl Iterator for TepGenerator {
    type Item = Tep;

    fn next(&mut self) -> Option<Tep> {
        self.next_tep()
    }
}
