//! Polar codes: construction, SC kernels, list decoding bit by bit (SCL) and
//! over pruned trees whose leaves are decoded by GCD or exhaustive search.
//!
//! Encoding is `c = u G_m` with `G_m` the `m`-fold Kronecker power of
//! `[[1,0],[1,1]]` in natural order. Frozen bits are zero. A node covering
//! `u[start..start+n_v]` outputs `β_v = u[start..start+n_v] G_{n_v}`.

mod engine;
mod tree;

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::codes::{Code, CodeError, CrcSpec};
use crate::gf2::{BinaryMatrix, BinaryVector};

pub use engine::{
    gcd_leaf_extend, scl_decode, scl_gcd_decode, scl_leaf_extend, LeafCandidate, NodeStats,
    PolarCandidate, PolarDecoder, SclGcdOutput,
};
pub use tree::{
    esd_leaf_steps, gcd_leaf_steps, genie_avg_queries, prune_tree, scl_cost, gcd_cost,
    time_steps_scl, time_steps_tree, LeafMode, PolarTree, PruneConfig, TreeNode,
};

#[derive(Debug, Error)]
pub enum PolarError {
    #[error("length {0} is not a power of two")]
    InvalidLength(usize),
    #[error("{active} active bits do not fit in length {n}")]
    CapacityExceeded { active: usize, n: usize },
    #[error("invalid reliability order: {0}")]
    InvalidReliability(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("message has {found} bits, expected {expected}")]
    MessageLength { expected: usize, found: usize },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// `G_m`, the `m`-fold Kronecker power of `[[1,0],[1,1]]`.
pub fn arikan_matrix(m: usize) -> BinaryMatrix {
    let n = 1usize << m;
    let mut g = BinaryMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i & j == j {
                g.set(i, j, true);
            }
        }
    }
    g
}

/// In-place `x ← x G_{len}` for a power-of-two length. The transform is an
/// involution.
pub fn polar_transform(x: &mut [u8]) {
    let n = x.len();
    let mut s = 1;
    while s < n {
        for b in (0..n).step_by(2 * s) {
            for j in b..b + s {
                x[j] ^= x[j + s];
            }
        }
        s *= 2;
    }
}

/// Min-sum check-node update `sgn(a) sgn(b) min(|a|, |b|)`.
#[inline]
pub fn f_update(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Variable-node update `(-1)^c a + b`.
#[inline]
pub fn g_update(a: f64, b: f64, c: bool) -> f64 {
    if c {
        b - a
    } else {
        a + b
    }
}

/// `(β_l ⊕ β_r, β_r)`.
pub fn beta_combine(left: &BinaryVector, right: &BinaryVector) -> BinaryVector {
    left.xor(right).concat(right)
}

const RELIABILITY_1024: &str = include_str!("../../data/reliability_1024.txt");

/// Built-in reliability order for length `n <= 1024`: 0-based indices from
/// least to most reliable.
pub fn builtin_reliability(n: usize) -> Result<Vec<usize>, PolarError> {
    if !n.is_power_of_two() || n > 1024 {
        return Err(PolarError::InvalidReliability(format!(
            "built-in order covers powers of two up to 1024, got {n}"
        )));
    }
    Ok(RELIABILITY_1024
        .split_whitespace()
        .map(|t| t.parse::<usize>().expect("valid table"))
        .filter(|&i| i < n)
        .collect())
}

/// Parses whitespace-separated 1-based indices, most reliable last.
pub fn parse_reliability(text: &str, n: usize) -> Result<Vec<usize>, PolarError> {
    let mut order = Vec::with_capacity(n);
    for (line_no, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let v: usize = tok.parse().map_err(|_| PolarError::Parse {
                line: line_no + 1,
                msg: format!("not an index: {tok}"),
            })?;
            if v == 0 || v > n {
                return Err(PolarError::Parse {
                    line: line_no + 1,
                    msg: format!("index {v} outside 1..={n}"),
                });
            }
            order.push(v - 1);
        }
    }
    check_permutation(&order, n)?;
    Ok(order)
}

pub fn load_reliability(path: impl AsRef<Path>, n: usize) -> Result<Vec<usize>, PolarError> {
    parse_reliability(&std::fs::read_to_string(path)?, n)
}

fn check_permutation(order: &[usize], n: usize) -> Result<(), PolarError> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(PolarError::InvalidReliability(format!(
            "expected {n} indices, got {}",
            order.len()
        )));
    }
    for &i in order {
        if i >= n || seen[i] {
            return Err(PolarError::InvalidReliability(format!("index {i} repeated or out of range")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// A polar code with optional CRC outer code.
#[derive(Debug, Clone)]
pub struct PolarCode {
    m: usize,
    k: usize,
    reliability: Vec<usize>,
    active: Vec<usize>,
    frozen: Vec<bool>,
    crc: Option<CrcSpec>,
    code: Code,
}

impl PolarCode {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        1 << self.m
    }

    /// Message bits, excluding CRC.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Active indices (message and CRC), ascending.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn crc(&self) -> Option<&CrcSpec> {
        self.crc.as_ref()
    }

    pub fn crc_degree(&self) -> usize {
        self.crc.as_ref().map_or(0, |c| c.degree())
    }

    /// Reliability order, least reliable first.
    pub fn reliability(&self) -> &[usize] {
        &self.reliability
    }

    /// The linear code with parity checks on the frozen positions.
    pub fn code(&self) -> &Code {
        &self.code
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n() as f64
    }

    /// Active positions inside `[start, start + len)`.
    pub fn active_in(&self, start: usize, len: usize) -> usize {
        self.frozen[start..start + len].iter().filter(|&&f| !f).count()
    }

    /// Places `message ∥ crc` on the active positions in index order.
    pub fn u_from_message(&self, msg: &BinaryVector) -> Result<Vec<u8>, PolarError> {
        if msg.len() != self.k {
            return Err(PolarError::MessageLength {
                expected: self.k,
                found: msg.len(),
            });
        }
        let v = match &self.crc {
            Some(c) => c.attach(msg),
            None => msg.clone(),
        };
        let mut u = vec![0u8; self.n()];
        for (j, &i) in self.active.iter().enumerate() {
            u[i] = v.get(j) as u8;
        }
        Ok(u)
    }

    pub fn encode(&self, msg: &BinaryVector) -> Result<BinaryVector, PolarError> {
        let mut u = self.u_from_message(msg)?;
        polar_transform(&mut u);
        Ok(BinaryVector::from_bits(&u))
    }

    /// Message bits carried by `u`.
    pub fn message_from_u(&self, u: &[u8]) -> BinaryVector {
        BinaryVector::from_bits(&self.active[..self.k].iter().map(|&i| u[i]).collect::<Vec<_>>())
    }

    /// CRC check of the active bits of `u`; always true without a CRC.
    pub fn crc_ok(&self, u: &[u8]) -> bool {
        match &self.crc {
            Some(c) => {
                let v = BinaryVector::from_bits(&self.active.iter().map(|&i| u[i]).collect::<Vec<_>>());
                c.check(&v)
            }
            None => true,
        }
    }

    fn with_active(&self, active: Vec<usize>) -> Result<PolarCode, PolarError> {
        build(self.m, self.k, self.reliability.clone(), active, self.crc.clone())
    }
}

impl fmt::Display for PolarCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "polar[{}, {}]", self.n(), self.k)?;
        if let Some(c) = &self.crc {
            write!(f, " + crc{}", c.degree())?;
        }
        Ok(())
    }
}

/// Parity-check matrix with one row per frozen index `f`: column `f` of
/// `G_len`, i.e. the positions `i` with `i & f == f`.
pub(crate) fn frozen_parity_check(frozen: &[bool]) -> BinaryMatrix {
    let n = frozen.len();
    let rows = frozen
        .iter()
        .enumerate()
        .filter(|(_, &fz)| fz)
        .map(|(f, _)| {
            let mut row = BinaryVector::zeros(n);
            for i in 0..n {
                if i & f == f {
                    row.set(i, true);
                }
            }
            row
        })
        .collect();
    BinaryMatrix::from_rows(n, rows).expect("rows have length n")
}

fn build(
    m: usize,
    k: usize,
    reliability: Vec<usize>,
    mut active: Vec<usize>,
    crc: Option<CrcSpec>,
) -> Result<PolarCode, PolarError> {
    let n = 1 << m;
    active.sort_unstable();
    let mut frozen = vec![true; n];
    for &i in &active {
        frozen[i] = false;
    }
    let code = Code::from_parity_check(frozen_parity_check(&frozen))?;
    Ok(PolarCode {
        m,
        k,
        reliability,
        active,
        frozen,
        crc,
        code,
    })
}

/// Selects the `k + crc degree` most reliable positions of `reliability`
/// (0-based, least reliable first; the built-in order when `None`).
pub fn construct_polar(
    n: usize,
    k: usize,
    reliability: Option<&[usize]>,
    crc: Option<CrcSpec>,
) -> Result<PolarCode, PolarError> {
    if !n.is_power_of_two() {
        return Err(PolarError::InvalidLength(n));
    }
    let m = n.trailing_zeros() as usize;
    let order = match reliability {
        Some(r) => {
            check_permutation(r, n)?;
            r.to_vec()
        }
        None => builtin_reliability(n)?,
    };
    let active_len = k + crc.as_ref().map_or(0, |c| c.degree());
    if active_len > n {
        return Err(PolarError::CapacityExceeded { active: active_len, n });
    }
    let active = order[n - active_len..].to_vec();
    build(m, k, order, active, crc)
}

/// Moves the `t` least reliable active positions to the `t` most reliable
/// frozen positions.
pub fn reallocate_bits(code: &PolarCode, t: usize) -> Result<PolarCode, PolarError> {
    let n = code.n();
    let by_rel: Vec<usize> = code.reliability.clone();
    let active_by_rel: Vec<usize> = by_rel.iter().copied().filter(|&i| !code.frozen[i]).collect();
    let frozen_by_rel: Vec<usize> = by_rel.iter().copied().filter(|&i| code.frozen[i]).collect();
    if t > active_by_rel.len() || t > frozen_by_rel.len() {
        return Err(PolarError::CapacityExceeded { active: t, n });
    }
    let drop: Vec<usize> = active_by_rel[..t].to_vec();
    let add = &frozen_by_rel[frozen_by_rel.len() - t..];
    let mut active: Vec<usize> = code.active.iter().copied().filter(|i| !drop.contains(i)).collect();
    active.extend_from_slice(add);
    code.with_active(active)
}
