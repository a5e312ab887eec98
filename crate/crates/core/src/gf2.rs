//! Binary-field linear algebra.
//!
//! Vectors and matrices over GF(2) are stored bit-packed in `u64` words. The
//! public contract is entry-wise; packing only shows up through [`BinaryVector::words`].

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

/// GF(2) linear algebra error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    /// The matrix does not have the row rank required by the operation.
    #[error("matrix is rank deficient: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    /// Operand shapes do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    /// The matrix text could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryVector {
    len: usize,
    words: Vec<u64>,
}

impl BinaryVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds a vector from 0/1 entries; any nonzero entry is a one.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Unit vector with a single one at `index`.
    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(index, true);
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Packed words, least significant bit first. Bits past `len` are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// `self ^= other`. Panics on length mismatch.
    pub fn xor_assign(&mut self, other: &BinaryVector) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BinaryVector) -> BinaryVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Parity of the bitwise AND, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &BinaryVector) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of the ones, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Entries at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> BinaryVector {
        let mut out = BinaryVector::zeros(indices.len());
        for (j, &i) in indices.iter().enumerate() {
            if self.get(i) {
                out.set(j, true);
            }
        }
        out
    }

    /// Concatenation `self ∥ other`.
    pub fn concat(&self, other: &BinaryVector) -> BinaryVector {
        let mut out = BinaryVector::zeros(self.len + other.len);
        for i in self.iter_ones() {
            out.set(i, true);
        }
        for i in other.iter_ones() {
            out.set(self.len + i, true);
        }
        out
    }

    /// Sub-vector `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BinaryVector {
        assert!(start + len <= self.len);
        let mut out = BinaryVector::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                out.set(i, true);
            }
        }
        out
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryVector({self})")
    }
}

impl FromStr for BinaryVector {
    type Err = Gf2Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut v = BinaryVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                other => {
                    return Err(Gf2Error::Parse {
                        line: 1,
                        msg: format!("unexpected character {other:?} in bit string"),
                    })
                }
            }
        }
        Ok(v)
    }
}

/// A row-major matrix over GF(2).
///
/// Zero-row matrices are allowed: a full-rate code has an empty parity-check
/// matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    cols: usize,
    rows: Vec<BinaryVector>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            rows: vec![BinaryVector::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from its rows; all rows must have length `cols`.
    pub fn from_rows(cols: usize, rows: Vec<BinaryVector>) -> Result<Self, Gf2Error> {
        for r in &rows {
            if r.len() != cols {
                return Err(Gf2Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
        }
        Ok(Self { cols, rows })
    }

    /// Builds a matrix from 0/1 strings, one per row.
    pub fn from_strs(rows: &[&str]) -> Result<Self, Gf2Error> {
        let parsed: Vec<BinaryVector> = rows
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?;
        let cols = parsed.first().map_or(0, BinaryVector::len);
        Self::from_rows(cols, parsed)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value);
    }

    pub fn row(&self, r: usize) -> &BinaryVector {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[BinaryVector] {
        &self.rows
    }

    pub fn column(&self, c: usize) -> BinaryVector {
        let mut v = BinaryVector::zeros(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            if row.get(c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn transpose(&self) -> BinaryMatrix {
        let mut t = BinaryMatrix::zeros(self.cols, self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            for c in row.iter_ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// `v · M` (row vector times matrix).
    pub fn left_mul(&self, v: &BinaryVector) -> Result<BinaryVector, Gf2Error> {
        if v.len() != self.rows.len() {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.rows.len(),
                found: v.len(),
            });
        }
        let mut out = BinaryVector::zeros(self.cols);
        for r in v.iter_ones() {
            out.xor_assign(&self.rows[r]);
        }
        Ok(out)
    }

    /// `v · Mᵀ`, the syndrome-style product.
    pub fn mul_transpose(&self, v: &BinaryVector) -> Result<BinaryVector, Gf2Error> {
        if v.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = BinaryVector::zeros(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            if row.dot(v) {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.cols != other.num_rows() {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: other.num_rows(),
            });
        }
        let rows = self
            .rows
            .iter()
            .map(|r| other.left_mul(r))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BinaryMatrix {
            cols: other.cols,
            rows,
        })
    }

    /// Columns at `indices`, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> BinaryMatrix {
        BinaryMatrix {
            cols: indices.len(),
            rows: self.rows.iter().map(|r| r.select(indices)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BinaryVector::is_zero)
    }

    /// Reduced row echelon form with left-to-right pivot search. Returns the
    /// reduced matrix (zero rows dropped) and the pivot columns.
    pub fn rref(&self) -> (BinaryMatrix, Vec<usize>) {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..self.cols {
            if next == rows.len() {
                break;
            }
            let Some(p) = (next..rows.len()).find(|&r| rows[r].get(c)) else {
                continue;
            };
            rows.swap(next, p);
            let pivot_row = rows[next].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != next && row.get(c) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(c);
            next += 1;
        }
        rows.truncate(next);
        (
            BinaryMatrix {
                cols: self.cols,
                rows,
            },
            pivots,
        )
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Writes the matrix in the text format: `rows cols` then one 0/1 string per row.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii")
    }

    /// Reads one matrix in the text format. Blank lines before the header are
    /// skipped. Returns `Ok(None)` at end of input.
    pub fn read_text<R: BufRead>(
        lines: &mut std::iter::Peekable<std::iter::Enumerate<std::io::Lines<R>>>,
    ) -> Result<Option<BinaryMatrix>, Gf2Error> {
        let io_err = |line: usize, e: std::io::Error| Gf2Error::Parse {
            line,
            msg: e.to_string(),
        };
        let (hline, header) = loop {
            match lines.next() {
                None => return Ok(None),
                Some((i, l)) => {
                    let l = l.map_err(|e| io_err(i + 1, e))?;
                    if !l.trim().is_empty() {
                        break (i + 1, l);
                    }
                }
            }
        };
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| Gf2Error::Parse {
                line: hline,
                msg: format!("bad header {header:?}: {e}"),
            })?;
        let [nrows, ncols] = dims[..] else {
            return Err(Gf2Error::Parse {
                line: hline,
                msg: format!("header must be `rows cols`, got {header:?}"),
            });
        };
        if ncols == 0 {
            return Err(Gf2Error::Parse {
                line: hline,
                msg: "matrix must have at least one column".into(),
            });
        }
        let mut rows = Vec::with_capacity(nrows);
        for _ in 0..nrows {
            let (i, l) = lines.next().ok_or(Gf2Error::Parse {
                line: hline + rows.len() + 1,
                msg: "unexpected end of input".into(),
            })?;
            let l = l.map_err(|e| io_err(i + 1, e))?;
            let t = l.trim();
            if t.len() != ncols {
                return Err(Gf2Error::Parse {
                    line: i + 1,
                    msg: format!("row has length {}, expected {ncols}", t.len()),
                });
            }
            let v: BinaryVector = t.parse().map_err(|e: Gf2Error| match e {
                Gf2Error::Parse { msg, .. } => Gf2Error::Parse { line: i + 1, msg },
                other => other,
            })?;
            rows.push(v);
        }
        Ok(Some(BinaryMatrix { cols: ncols, rows }))
    }

    /// Parses every matrix in `text`, in order.
    pub fn parse_all(text: &str) -> Result<Vec<BinaryMatrix>, Gf2Error> {
        let mut lines = std::io::Cursor::new(text).lines().enumerate().peekable();
        let mut out = Vec::new();
        while let Some(m) = Self::read_text(&mut lines)? {
            out.push(m);
        }
        Ok(out)
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{} [", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

/// A parity-check matrix brought into the form `[I P]` by row operations and
/// a column permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystematicForm {
    /// `[I P]`, shape `(N-K) x N`.
    pub h_sys: BinaryMatrix,
    /// The `P` block, shape `(N-K) x K`.
    pub p: BinaryMatrix,
    /// `perm[j]` is the original column placed at systematic column `j`.
    pub perm: Vec<usize>,
}

impl SystematicForm {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Number of parity rows `N - K`.
    pub fn redundancy(&self) -> usize {
        self.h_sys.num_rows()
    }

    pub fn k(&self) -> usize {
        self.n() - self.redundancy()
    }

    /// Reorders a vector from original into systematic coordinates.
    pub fn to_systematic<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| values[i]).collect()
    }

    pub fn vector_to_systematic(&self, v: &BinaryVector) -> BinaryVector {
        v.select(&self.perm)
    }

    /// Reorders a vector from systematic back into original coordinates.
    pub fn vector_from_systematic(&self, v: &BinaryVector) -> BinaryVector {
        let mut out = BinaryVector::zeros(v.len());
        for j in v.iter_ones() {
            out.set(self.perm[j], true);
        }
        out
    }
}

/// Brings `h` into the form `[I P]`.
///
/// Pivot columns are chosen scanning left to right; they are moved to the
/// front in pivot order and the remaining columns keep their relative order.
pub fn systematize(h: &BinaryMatrix) -> Result<SystematicForm, Gf2Error> {
    let m = h.num_rows();
    let n = h.num_cols();
    let (reduced, pivots) = h.rref();
    if pivots.len() < m {
        return Err(Gf2Error::RankDeficient {
            rank: pivots.len(),
            expected: m,
        });
    }
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut perm = pivots.clone();
    perm.extend((0..n).filter(|&c| !is_pivot[c]));
    let h_sys = reduced.select_columns(&perm);
    let p = h_sys.select_columns(&(m..n).collect::<Vec<_>>());
    Ok(SystematicForm { h_sys, p, perm })
}

/// `s = z · Hᵀ`.
pub fn syndrome(z: &BinaryVector, h_sys: &BinaryMatrix) -> Result<BinaryVector, Gf2Error> {
    h_sys.mul_transpose(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming_h_shuffled() -> BinaryMatrix {
        // columns are the nonzero 3-bit words in a scrambled order
        BinaryMatrix::from_strs(&["1101010", "0111001", "1011100"]).unwrap()
    }

    fn codewords(h: &BinaryMatrix) -> Vec<BinaryVector> {
        let n = h.num_cols();
        (0u32..1 << n)
            .map(|x| BinaryVector::from_bits(&(0..n).map(|i| ((x >> i) & 1) as u8).collect::<Vec<_>>()))
            .filter(|c| h.mul_transpose(c).unwrap().is_zero())
            .collect()
    }

    #[test]
    fn systematize_identity_case() {
        let h = BinaryMatrix::from_strs(&["100110", "010011", "001101"]).unwrap();
        let sys = systematize(&h).unwrap();
        assert_eq!(sys.perm, (0..6).collect::<Vec<_>>());
        assert_eq!(sys.h_sys, h);
        assert_eq!(
            sys.p,
            BinaryMatrix::from_strs(&["110", "011", "101"]).unwrap()
        );
    }

    #[test]
    fn systematize_hamming_any_order() {
        let h = hamming_h_shuffled();
        let sys = systematize(&h).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(sys.h_sys.get(r, c), r == c);
            }
        }
        let words = codewords(&h);
        assert_eq!(words.len(), 16);
        for c in &words {
            let cp = sys.vector_to_systematic(c);
            assert!(syndrome(&cp, &sys.h_sys).unwrap().is_zero());
        }
    }

    #[test]
    fn systematize_pivot_swap() {
        // second column is zero, so the third column must be pulled forward
        let h = BinaryMatrix::from_strs(&["1010", "0011"]).unwrap();
        let sys = systematize(&h).unwrap();
        assert_eq!(sys.perm, vec![0, 2, 1, 3]);
    }

    #[test]
    fn systematize_rank_deficient() {
        let h = BinaryMatrix::zeros(1, 4);
        assert_eq!(
            systematize(&h),
            Err(Gf2Error::RankDeficient {
                rank: 0,
                expected: 1
            })
        );
        let dup = BinaryMatrix::from_strs(&["1100", "1100"]).unwrap();
        assert!(matches!(
            systematize(&dup),
            Err(Gf2Error::RankDeficient { rank: 1, .. })
        ));
    }

    #[test]
    fn syndrome_of_codeword_plus_unit() {
        let h = hamming_h_shuffled();
        let sys = systematize(&h).unwrap();
        let words = codewords(&h);
        for c in &words {
            let cp = sys.vector_to_systematic(c);
            for j in 0..7 {
                let mut z = cp.clone();
                z.flip(j);
                assert_eq!(syndrome(&z, &sys.h_sys).unwrap(), sys.h_sys.column(j));
            }
        }
    }

    #[test]
    fn syndrome_dimension_mismatch() {
        let h = hamming_h_shuffled();
        assert_eq!(
            syndrome(&BinaryVector::zeros(6), &h),
            Err(Gf2Error::DimensionMismatch {
                expected: 7,
                found: 6
            })
        );
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let h = hamming_h_shuffled();
        let text = h.to_text();
        assert_eq!(BinaryMatrix::parse_all(&text).unwrap(), vec![h]);
        assert!(matches!(
            BinaryMatrix::parse_all("2 3\n101\n11\n"),
            Err(Gf2Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            BinaryMatrix::parse_all("1 3\n1x1\n"),
            Err(Gf2Error::Parse { line: 2, .. })
        ));
        let empty = BinaryMatrix::parse_all("0 4\n").unwrap();
        assert_eq!(empty[0].num_rows(), 0);
        assert_eq!(empty[0].num_cols(), 4);
    }

    #[test]
    fn vector_ops() {
        let v: BinaryVector = "1011000000000000000000000000000000000000000000000000000000000000001"
            .parse()
            .unwrap();
        assert_eq!(v.len(), 67);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![0, 2, 3, 66]);
        assert_eq!(v.weight(), 4);
        assert_eq!(v.slice(1, 3).to_string(), "011");
        assert_eq!(v.select(&[66, 1, 0]).to_string(), "101");
    }
}
