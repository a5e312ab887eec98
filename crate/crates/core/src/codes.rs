//! Code constructions, CRC arithmetic and matrix-file I/O.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf2::{systematize, BinaryMatrix, BinaryVector, Gf2Error, SystematicForm};

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("invalid Reed-Muller order r={r} for m={m}")]
    InvalidOrder { m: usize, r: usize },
    #[error("invalid code parameters: {0}")]
    InvalidParameters(String),
    #[error("could not draw a full-rank parity-check matrix after {0} attempts")]
    GenerationFailed(usize),
    #[error("inconsistent code: {0}")]
    InconsistentCode(String),
    #[error(transparent)]
    Parse(#[from] Gf2Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A binary linear block code `C[n, k]`.
///
/// Both a generator and a parity-check matrix are kept; the generator is
/// derived from the systematic form when only `h` is supplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Code {
    n: usize,
    k: usize,
    g: BinaryMatrix,
    h: BinaryMatrix,
    sys: SystematicForm,
}

impl Code {
    /// Builds a code from its parity-check matrix, which must have full row rank.
    pub fn from_parity_check(h: BinaryMatrix) -> Result<Self, CodeError> {
        let sys = systematize(&h).map_err(|e| match e {
            Gf2Error::RankDeficient { rank, expected } => CodeError::InconsistentCode(format!(
                "parity-check matrix has rank {rank}, expected {expected}"
            )),
            other => CodeError::Parse(other),
        })?;
        let g = generator_from_systematic(&sys);
        Ok(Self {
            n: h.num_cols(),
            k: g.num_rows(),
            g,
            h,
            sys,
        })
    }

    /// Builds a code from a generator/parity-check pair, checking `G Hᵀ = 0`
    /// and the rank conditions.
    pub fn from_pair(g: BinaryMatrix, h: BinaryMatrix) -> Result<Self, CodeError> {
        if g.num_cols() != h.num_cols() {
            return Err(CodeError::InconsistentCode(format!(
                "G has {} columns but H has {}",
                g.num_cols(),
                h.num_cols()
            )));
        }
        let base = Self::from_parity_check(h)?;
        let product = g.mul(&base.h.transpose())?;
        if !product.is_zero() {
            return Err(CodeError::InconsistentCode("G·Hᵀ ≠ 0".into()));
        }
        let rank = g.rank();
        if rank != base.k || g.num_rows() != base.k {
            return Err(CodeError::InconsistentCode(format!(
                "G has {} rows of rank {rank}, expected dimension {}",
                g.num_rows(),
                base.k
            )));
        }
        Ok(Self { g, ..base })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn generator(&self) -> &BinaryMatrix {
        &self.g
    }

    pub fn parity_check(&self) -> &BinaryMatrix {
        &self.h
    }

    pub fn systematic(&self) -> &SystematicForm {
        &self.sys
    }

    /// `u · G`.
    pub fn encode(&self, u: &BinaryVector) -> BinaryVector {
        self.g.left_mul(u).expect("message length equals k")
    }

    pub fn is_codeword(&self, c: &BinaryVector) -> bool {
        self.h
            .mul_transpose(c)
            .map(|s| s.is_zero())
            .unwrap_or(false)
    }

    /// Every codeword, for small dimensions.
    pub fn codewords(&self) -> Vec<BinaryVector> {
        assert!(self.k <= 24, "codeword enumeration limited to k <= 24");
        (0u64..1 << self.k)
            .map(|x| {
                let mut u = BinaryVector::zeros(self.k);
                for i in 0..self.k {
                    if (x >> i) & 1 == 1 {
                        u.set(i, true);
                    }
                }
                self.encode(&u)
            })
            .collect()
    }

    /// Writes `G` then `H` in the matrix text format.
    pub fn to_text(&self) -> String {
        let mut s = self.g.to_text();
        s.push_str(&self.h.to_text());
        s
    }

    /// Parses one matrix (taken as `H`) or two matrices (`G` then `H`).
    pub fn from_text(text: &str) -> Result<Self, CodeError> {
        let mats = BinaryMatrix::parse_all(text)?;
        match <[BinaryMatrix; 1]>::try_from(mats) {
            Ok([h]) => Self::from_parity_check(h),
            Err(mats) => match <[BinaryMatrix; 2]>::try_from(mats) {
                Ok([g, h]) => Self::from_pair(g, h),
                Err(mats) => Err(CodeError::Parse(Gf2Error::Parse {
                    line: 1,
                    msg: format!("expected one or two matrices, found {}", mats.len()),
                })),
            },
        }
    }
}

/// `[Pᵀ I]` in systematic coordinates, mapped back to original columns.
fn generator_from_systematic(sys: &SystematicForm) -> BinaryMatrix {
    let n = sys.n();
    let m = sys.redundancy();
    let k = n - m;
    let mut g = BinaryMatrix::zeros(k, n);
    for i in 0..k {
        for r in 0..m {
            if sys.p.get(r, i) {
                g.set(i, sys.perm[r], true);
            }
        }
        g.set(i, sys.perm[m + i], true);
    }
    g
}

/// Monomials of degree `<= r` in `m` variables, graded then lexicographic.
fn monomials(m: usize, r: usize) -> Vec<Vec<usize>> {
    fn combos(start: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            combos(i + 1, m, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=r {
        combos(0, m, d, &mut Vec::new(), &mut out);
    }
    out
}

fn rm_generator(m: usize, r: usize) -> BinaryMatrix {
    let n = 1usize << m;
    let rows = monomials(m, r)
        .into_iter()
        .map(|mono| {
            let mut row = BinaryVector::zeros(n);
            for j in 0..n {
                if mono.iter().all(|&v| (j >> v) & 1 == 1) {
                    row.set(j, true);
                }
            }
            row
        })
        .collect();
    BinaryMatrix::from_rows(n, rows).expect("rows have length n")
}

/// Reed-Muller code `RM(r, m)` of length `2^m`.
pub fn rm_code(m: usize, r: usize) -> Result<Code, CodeError> {
    if r > m || m > 16 {
        return Err(CodeError::InvalidOrder { m, r });
    }
    let g = rm_generator(m, r);
    let h = if r == m {
        BinaryMatrix::zeros(0, 1 << m)
    } else {
        rm_generator(m, m - r - 1)
    };
    Code::from_pair(g, h)
}

/// The `[2^m - 1, 2^m - 1 - m]` Hamming code; column `j` of `H` is `j + 1` in binary.
pub fn hamming_code(m: usize) -> Result<Code, CodeError> {
    if !(2..=12).contains(&m) {
        return Err(CodeError::InvalidParameters(format!(
            "Hamming order must be in 2..=12, got {m}"
        )));
    }
    let n = (1usize << m) - 1;
    let mut h = BinaryMatrix::zeros(m, n);
    for j in 0..n {
        for b in 0..m {
            if ((j + 1) >> b) & 1 == 1 {
                h.set(b, j, true);
            }
        }
    }
    Code::from_parity_check(h)
}

const RANDOM_CODE_RETRIES: usize = 1000;

/// A random code whose parity-check matrix has i.i.d. uniform entries,
/// redrawn until it has full row rank.
pub fn random_code(n: usize, k: usize, seed: u64) -> Result<Code, CodeError> {
    if k == 0 || k > n {
        return Err(CodeError::InvalidParameters(format!(
            "need 1 <= k <= n, got n={n} k={k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = n - k;
    for _ in 0..RANDOM_CODE_RETRIES {
        let mut h = BinaryMatrix::zeros(m, n);
        for r in 0..m {
            for c in 0..n {
                if rng.random::<bool>() {
                    h.set(r, c, true);
                }
            }
        }
        if h.rank() == m {
            return Code::from_parity_check(h);
        }
    }
    Err(CodeError::GenerationFailed(RANDOM_CODE_RETRIES))
}

/// Reads a code from a matrix text file.
pub fn load_code(path: impl AsRef<Path>) -> Result<Code, CodeError> {
    Code::from_text(&fs::read_to_string(path)?)
}

/// Writes `G` then `H` to a matrix text file.
pub fn save_code(code: &Code, path: impl AsRef<Path>) -> Result<(), CodeError> {
    fs::write(path, code.to_text())?;
    Ok(())
}

/// A CRC generator polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrcSpec {
    /// Coefficients from `x^degree` down to `x^0`; length `degree + 1`.
    poly: BinaryVector,
}

impl CrcSpec {
    /// `poly` lists coefficients highest degree first and must start with a one.
    pub fn new(poly: BinaryVector) -> Result<Self, CodeError> {
        if poly.len() < 2 || !poly.get(0) {
            return Err(CodeError::InvalidParameters(format!(
                "CRC polynomial {poly} must have degree >= 1 and a leading one"
            )));
        }
        Ok(Self { poly })
    }

    /// `x^11 + x^10 + x^9 + x^5 + 1`.
    pub fn crc11() -> Self {
        Self::new("111000100001".parse().expect("static")).expect("static")
    }

    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }

    pub fn poly(&self) -> &BinaryVector {
        &self.poly
    }

    /// Remainder of `word` (highest degree first) modulo the polynomial.
    fn remainder_of(&self, word: &BinaryVector) -> BinaryVector {
        let d = self.degree();
        let mut work = word.clone();
        if work.len() < d {
            let pad = BinaryVector::zeros(d - work.len());
            work = pad.concat(&work);
        }
        for i in 0..=work.len() - d - 1 {
            if work.get(i) {
                for j in self.poly.iter_ones() {
                    work.flip(i + j);
                }
            }
        }
        work.slice(work.len() - d, d)
    }

    /// Remainder of `msg · x^degree`, highest degree first.
    pub fn remainder(&self, msg: &BinaryVector) -> BinaryVector {
        self.remainder_of(&msg.concat(&BinaryVector::zeros(self.degree())))
    }

    /// `msg ∥ remainder(msg)`.
    pub fn attach(&self, msg: &BinaryVector) -> BinaryVector {
        msg.concat(&self.remainder(msg))
    }

    /// True when `word` is divisible by the polynomial.
    pub fn check(&self, word: &BinaryVector) -> bool {
        self.remainder_of(word).is_zero()
    }
}

/// Free-function form of [`CrcSpec::remainder`].
pub fn crc_remainder(msg: &BinaryVector, crc: &CrcSpec) -> BinaryVector {
    crc.remainder(msg)
}

impl FromStr for CrcSpec {
    type Err = CodeError;

    /// Accepts `0x`-prefixed hex including the leading term (`0xE21`) or a
    /// binary coefficient string (`111000100001`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || CodeError::InvalidParameters(format!("cannot parse CRC polynomial {s:?}"));
        let bits = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            let v = u128::from_str_radix(hex, 16).map_err(|_| bad())?;
            if v < 2 {
                return Err(bad());
            }
            let deg = 127 - v.leading_zeros() as usize;
            (0..=deg)
                .map(|i| ((v >> (deg - i)) & 1) as u8)
                .collect::<Vec<_>>()
        } else {
            let v: BinaryVector = s.parse().map_err(|_| bad())?;
            let first = v.iter_ones().next().ok_or_else(bad)?;
            v.slice(first, v.len() - first).to_bits()
        };
        Self::new(BinaryVector::from_bits(&bits))
    }
}

impl fmt::Display for CrcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly)
    }
}
