//! List decoders: guessing codeword decoding (sequential and parallel),
//! guessing noise decoding and exhaustive search.
//!
//! All decoders work on the systematic form `[I P]` of the parity-check
//! matrix. A full TEP splits into `(e_I, e_P)` with `e_I = s + e_P Pᵀ`.
//! Full-TEP soft weights are summed in ascending systematic coordinate order
//! by every decoder so their lists compare bit-exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{hard_decision, LlrVector};
use crate::codes::Code;
use crate::gf2::BinaryVector;
use crate::tepgen::{SortedPattern, Tep, TepGenerator};

pub const ESD_MAX_K: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("list size must be at least 1")]
    EmptyList,
    #[error("exhaustive search limited to k <= {max}, got {k}")]
    TooLarge { k: usize, max: usize },
    #[error("list size {l} exceeds the number of codewords {max}")]
    ListTooLarge { l: usize, max: u64 },
    #[error("prefix length {delta} exceeds dimension {k}")]
    InvalidDelta { delta: usize, k: usize },
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error("only {} valid patterns found within {} queries", .0.list.len(), .0.queries)]
    Exhausted(Box<DecodeResult>),
}

/// Fixed-capacity list kept sorted by weight. Equal weights keep insertion
/// order.
#[derive(Debug, Clone)]
pub struct CandidateList<T> {
    capacity: usize,
    items: Vec<(f64, T)>,
}

impl<T> CandidateList<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "list capacity must be at least 1");
        Self {
            capacity,
            items: Vec::with_capacity(capacity + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    /// `γ(f^(L))`, or `+∞` while the list has free slots.
    pub fn worst(&self) -> f64 {
        if self.is_full() {
            self.items[self.capacity - 1].0
        } else {
            f64::INFINITY
        }
    }

    /// Inserts when `weight` is strictly below the worst retained weight.
    pub fn insert(&mut self, weight: f64, item: T) -> bool {
        if weight >= self.worst() {
            return false;
        }
        let pos = self.items.partition_point(|(w, _)| *w <= weight);
        self.items.insert(pos, (weight, item));
        self.items.truncate(self.capacity);
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = &(f64, T)> {
        self.items.iter()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.items.iter().map(|(w, _)| *w).collect()
    }

    pub fn into_vec(self) -> Vec<(f64, T)> {
        self.items
    }
}

/// Truncation rules; the first one to fire stops the decode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    /// Maximum number of queries.
    pub l_max: Option<u64>,
    /// Stop before querying a partial TEP with `γ(e_P) >= tau_s`.
    pub tau_s: Option<f64>,
    /// Stop once the queried posterior mass reaches `1 - tau_p`.
    pub tau_p: Option<f64>,
    /// Tolerance added to `γ(e_P)` in the optimality test.
    pub delta: f64,
}

impl TruncationConfig {
    pub fn with_l_max(l_max: u64) -> Self {
        Self {
            l_max: Some(l_max),
            ..Self::default()
        }
    }

    pub fn with_tau_s(tau_s: f64) -> Self {
        Self {
            tau_s: Some(tau_s),
            ..Self::default()
        }
    }

    pub fn with_tau_p(tau_p: f64) -> Self {
        Self {
            tau_p: Some(tau_p),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.l_max == Some(0) {
            return Err(DecodeError::InvalidTruncation("l_max must be at least 1".into()));
        }
        if let Some(t) = self.tau_s {
            if !(t > 0.0) {
                return Err(DecodeError::InvalidTruncation(format!("tau_s must be positive, got {t}")));
            }
        }
        if let Some(t) = self.tau_p {
            if !(t > 0.0 && t < 1.0) {
                return Err(DecodeError::InvalidTruncation(format!("tau_p must lie in (0, 1), got {t}")));
            }
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(DecodeError::InvalidTruncation(format!(
                "delta must be a finite non-negative number, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Optimal,
    LMax,
    TauS,
    TauP,
    Exhausted,
}

impl StopReason {
    pub const ALL: [StopReason; 5] = [
        StopReason::Optimal,
        StopReason::LMax,
        StopReason::TauS,
        StopReason::TauP,
        StopReason::Exhausted,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Optimal => "optimal",
            StopReason::LMax => "l_max",
            StopReason::TauS => "tau_s",
            StopReason::TauP => "tau_p",
            StopReason::Exhausted => "exhausted",
        }
    }
}

/// A decoded list entry in original coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tep: BinaryVector,
    pub codeword: BinaryVector,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Candidates sorted by non-decreasing weight.
    pub list: Vec<Candidate>,
    /// Re-encoded partial TEPs (GCD) or checked full TEPs (GND).
    pub queries: u64,
    /// Generator emissions, including one that triggers the stop.
    pub emissions: u64,
    /// Total re-encodings; exceeds `queries` only for the parallel decoder.
    pub reencodings: u64,
    pub stop_reason: StopReason,
    /// With a genie codeword supplied: whether its partial TEP was queried.
    pub true_tep_queried: Option<bool>,
}

impl DecodeResult {
    pub fn weights(&self) -> Vec<f64> {
        self.list.iter().map(|c| c.weight).collect()
    }

    pub fn contains(&self, codeword: &BinaryVector) -> bool {
        self.list.iter().any(|c| &c.codeword == codeword)
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.list.first()
    }
}

/// `P(e_P | r_P) = Π q_i` with the bitwise posterior
/// `q_i = 1/(1+e^{|r_i|})` on flipped bits and `e^{|r_i|}/(1+e^{|r_i|})` elsewhere.
pub fn tep_posterior(e_p: &Tep, r_p: &LlrVector) -> Result<f64, DecodeError> {
    if e_p.bits.len() != r_p.len() {
        return Err(DecodeError::DimensionMismatch {
            expected: r_p.len(),
            found: e_p.bits.len(),
        });
    }
    let gamma: f64 = e_p.bits.iter_ones().map(|i| r_p.values()[i].abs()).sum();
    Ok((log_posterior_base(r_p.values()) - gamma).exp())
}

/// `ln P(0 | r) = -Σ ln(1 + e^{-|r_i|})`.
fn log_posterior_base(r: &[f64]) -> f64 {
    -r.iter().map(|x| (-x.abs()).exp().ln_1p()).sum::<f64>()
}

/// Precomputed systematic data of a code for repeated GCD decoding.
#[derive(Debug, Clone)]
pub struct GcdContext {
    n: usize,
    k: usize,
    m: usize,
    perm: Vec<usize>,
    /// Column `j` of `P`, one per information position.
    pcols: Vec<BinaryVector>,
}

/// Per-received-word state in systematic coordinates.
#[derive(Debug, Clone)]
pub struct Frame {
    pub r_sys: Vec<f64>,
    pub z_sys: BinaryVector,
    pub syndrome: BinaryVector,
    /// Ordered generator over the information positions.
    pub generator: TepGenerator,
}

impl GcdContext {
    pub fn new(code: &Code) -> Self {
        let sys = code.systematic();
        let k = sys.k();
        Self {
            n: sys.n(),
            k,
            m: sys.redundancy(),
            perm: sys.perm.clone(),
            pcols: (0..k).map(|j| sys.p.column(j)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn redundancy(&self) -> usize {
        self.m
    }

    fn check_len(&self, r: &[f64]) -> Result<(), DecodeError> {
        if r.len() != self.n {
            return Err(DecodeError::DimensionMismatch {
                expected: self.n,
                found: r.len(),
            });
        }
        Ok(())
    }

    /// Hard decision, syndrome and information-set generator of `r`.
    pub fn frame(&self, r: &[f64]) -> Frame {
        let r_sys: Vec<f64> = self.perm.iter().map(|&i| r[i]).collect();
        let z_sys = hard_decision_slice(&r_sys);
        let mut syndrome = z_sys.slice(0, self.m);
        for j in z_sys.iter_ones().filter(|&j| j >= self.m) {
            syndrome.xor_assign(&self.pcols[j - self.m]);
        }
        let generator = TepGenerator::new(&r_sys[self.m..]);
        Frame {
            r_sys,
            z_sys,
            syndrome,
            generator,
        }
    }

    /// Full TEP in systematic coordinates for a partial TEP given as
    /// information indices.
    pub fn reencode(&self, frame: &Frame, info_support: impl IntoIterator<Item = usize>) -> BinaryVector {
        let mut e = BinaryVector::zeros(self.n);
        let mut e_i = frame.syndrome.clone();
        for j in info_support {
            e.set(self.m + j, true);
            e_i.xor_assign(&self.pcols[j]);
        }
        for i in e_i.iter_ones() {
            e.set(i, true);
        }
        e
    }

    /// Full TEP for a pattern emitted by the frame's generator.
    pub fn reencode_sorted(&self, frame: &Frame, p: &SortedPattern) -> BinaryVector {
        let perm = frame.generator.perm();
        self.reencode(frame, p.support().map(|j| perm[j]))
    }

    /// Canonical soft weight of a systematic-coordinate TEP.
    pub fn weight(&self, frame: &Frame, e_sys: &BinaryVector) -> f64 {
        e_sys.iter_ones().map(|i| frame.r_sys[i].abs()).sum()
    }

    pub fn to_original(&self, e_sys: &BinaryVector) -> BinaryVector {
        let mut out = BinaryVector::zeros(self.n);
        for j in e_sys.iter_ones() {
            out.set(self.perm[j], true);
        }
        out
    }

    pub fn to_systematic(&self, v: &BinaryVector) -> BinaryVector {
        v.select(&self.perm)
    }

    fn candidate(&self, frame: &Frame, weight: f64, e_sys: &BinaryVector) -> Candidate {
        let c_sys = frame.z_sys.xor(e_sys);
        Candidate {
            tep: self.to_original(e_sys),
            codeword: self.to_original(&c_sys),
            weight,
        }
    }

    /// The genie partial TEP of `codeword` in the frame generator's sorted
    /// coordinates.
    fn true_pattern(&self, frame: &Frame, codeword: &BinaryVector) -> SortedPattern {
        let e_sys = frame.z_sys.xor(&self.to_systematic(codeword));
        let mut inv = vec![0; self.k];
        for (s, &j) in frame.generator.perm().iter().enumerate() {
            inv[j] = s;
        }
        frame
            .generator
            .pattern(e_sys.iter_ones().filter(|&i| i >= self.m).map(|i| inv[i - self.m]))
    }

    /// Sequential GCD. `genie` is the transmitted codeword, used only to
    /// report whether its partial TEP was reached.
    pub fn decode(
        &self,
        r: &LlrVector,
        l: usize,
        trunc: &TruncationConfig,
        genie: Option<&BinaryVector>,
    ) -> Result<DecodeResult, DecodeError> {
        self.check_len(r.values())?;
        if l == 0 {
            return Err(DecodeError::EmptyList);
        }
        trunc.validate()?;
        let mut frame = self.frame(r.values());
        let truth = genie.map(|c| self.true_pattern(&frame, c));
        let base = if trunc.tau_p.is_some() {
            log_posterior_base(&frame.r_sys[self.m..])
        } else {
            0.0
        };
        let mut list: CandidateList<BinaryVector> = CandidateList::new(l);
        let mut queries = 0u64;
        let mut mass = 0.0;
        let mut last: Option<SortedPattern> = None;
        let stop_reason = loop {
            let Some(p) = frame.generator.next_sorted() else {
                break StopReason::Exhausted;
            };
            if p.weight + trunc.delta >= list.worst() {
                break StopReason::Optimal;
            }
            if trunc.tau_s.is_some_and(|t| p.weight >= t) {
                break StopReason::TauS;
            }
            queries += 1;
            let e = self.reencode_sorted(&frame, &p);
            list.insert(self.weight(&frame, &e), e);
            if let Some(tau_p) = trunc.tau_p {
                mass += (base - p.weight).exp();
                if mass >= 1.0 - tau_p {
                    last = Some(p);
                    break StopReason::TauP;
                }
            }
            if trunc.l_max.is_some_and(|lm| queries >= lm) {
                last = Some(p);
                break StopReason::LMax;
            }
            last = Some(p);
        };
        let true_tep_queried = truth.map(|t| last.is_some_and(|q| t.order(&q) != Ordering::Greater));
        let emissions = frame.generator.emitted();
        let list = list
            .into_vec()
            .into_iter()
            .map(|(w, e)| self.candidate(&frame, w, &e))
            .collect();
        Ok(DecodeResult {
            list,
            queries,
            emissions,
            reencodings: queries,
            stop_reason,
            true_tep_queried,
        })
    }

    /// Queries of a genie-aided GCD that knows the transmitted codeword is
    /// all-zero and stops as soon as the true partial TEP has been queried.
    pub fn genie_queries(&self, r: &[f64], l: usize, l_max: Option<u64>) -> u64 {
        let mut frame = self.frame(r);
        let zero = BinaryVector::zeros(self.n);
        let truth = self.true_pattern(&frame, &zero);
        let mut list: CandidateList<()> = CandidateList::new(l.max(1));
        let mut queries = 0u64;
        while let Some(p) = frame.generator.next_sorted() {
            if p.weight >= list.worst() {
                break;
            }
            queries += 1;
            if p.order(&truth) == Ordering::Equal || l_max.is_some_and(|lm| queries >= lm) {
                break;
            }
            let e = self.reencode_sorted(&frame, &p);
            list.insert(self.weight(&frame, &e), ());
        }
        queries
    }

    /// Whether `codeword` is among the `l` lightest codewords for `r`, i.e.
    /// whether untruncated GCD with list size `l` would return it. Only
    /// patterns lighter than the codeword's own TEP are enumerated.
    pub fn list_contains(&self, r: &LlrVector, l: usize, codeword: &BinaryVector) -> Result<bool, DecodeError> {
        self.check_len(r.values())?;
        if l == 0 {
            return Err(DecodeError::EmptyList);
        }
        let mut frame = self.frame(r.values());
        let e_true = frame.z_sys.xor(&self.to_systematic(codeword));
        let w_true = self.weight(&frame, &e_true);
        let mut lighter = 0;
        while let Some(p) = frame.generator.next_sorted() {
            if p.weight >= w_true {
                break;
            }
            let e = self.reencode_sorted(&frame, &p);
            if e != e_true && self.weight(&frame, &e) < w_true {
                lighter += 1;
                if lighter >= l {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Parallel decoding with the `delta_bits` least reliable information
    /// positions enumerated up front.
    pub fn decode_parallel(
        &self,
        r: &LlrVector,
        l: usize,
        delta_bits: usize,
        trunc: &TruncationConfig,
    ) -> Result<DecodeResult, DecodeError> {
        self.check_len(r.values())?;
        if l == 0 {
            return Err(DecodeError::EmptyList);
        }
        if delta_bits > self.k || delta_bits >= 63 {
            return Err(DecodeError::InvalidDelta {
                delta: delta_bits,
                k: self.k,
            });
        }
        trunc.validate()?;
        let frame = self.frame(r.values());
        let rel = frame.generator.reliabilities();
        let order = frame.generator.perm();
        let prefix_pos = &order[..delta_bits];
        let mut suffix = TepGenerator::from_sorted(rel[delta_bits..].to_vec(), order[delta_bits..].to_vec());
        let base = if trunc.tau_p.is_some() {
            log_posterior_base(&frame.r_sys[self.m..])
        } else {
            0.0
        };

        struct Branch {
            weight: f64,
            support: Vec<usize>,
            open: bool,
        }
        let mut branches: Vec<Branch> = (0u64..1 << delta_bits)
            .map(|x| {
                let support: Vec<usize> = (0..delta_bits)
                    .filter(|&b| (x >> b) & 1 == 1)
                    .map(|b| prefix_pos[b])
                    .collect();
                let weight = (0..delta_bits)
                    .filter(|&b| (x >> b) & 1 == 1)
                    .map(|b| rel[b])
                    .sum();
                Branch {
                    weight,
                    support,
                    open: true,
                }
            })
            .collect();

        let mut list: CandidateList<BinaryVector> = CandidateList::new(l);
        let mut queries = 0u64;
        let mut reencodings = 0u64;
        let mut mass = 0.0;
        let stop_reason = 'outer: loop {
            let Some(p2) = suffix.next_sorted() else {
                break StopReason::Exhausted;
            };
            let snapshot = list.worst();
            let suffix_support: Vec<usize> = p2.support().map(|j| suffix.perm()[j]).collect();
            let step = |b: &mut Branch| -> Option<(f64, f64, BinaryVector)> {
                if !b.open {
                    return None;
                }
                let partial = b.weight + p2.weight;
                if partial + trunc.delta >= snapshot || trunc.tau_s.is_some_and(|t| partial >= t) {
                    b.open = false;
                    return None;
                }
                let e = self.reencode(&frame, b.support.iter().copied().chain(suffix_support.iter().copied()));
                Some((partial, self.weight(&frame, &e), e))
            };
            let found: Vec<Option<(f64, f64, BinaryVector)>> = if branches.len() >= 256 {
                branches.par_iter_mut().map(step).collect()
            } else {
                branches.iter_mut().map(step).collect()
            };
            if !branches.iter().any(|b| b.open) {
                break StopReason::Optimal;
            }
            queries += 1;
            for (partial, w, e) in found.into_iter().flatten() {
                reencodings += 1;
                list.insert(w, e);
                if let Some(tau_p) = trunc.tau_p {
                    mass += (base - partial).exp();
                    if mass >= 1.0 - tau_p {
                        break 'outer StopReason::TauP;
                    }
                }
            }
            if trunc.l_max.is_some_and(|lm| queries >= lm) {
                break StopReason::LMax;
            }
        };
        let list = list
            .into_vec()
            .into_iter()
            .map(|(w, e)| self.candidate(&frame, w, &e))
            .collect();
        Ok(DecodeResult {
            list,
            queries,
            emissions: suffix.emitted(),
            reencodings,
            stop_reason,
            true_tep_queried: None,
        })
    }

    /// Exhaustive search over all `2^K` information patterns.
    pub fn decode_exhaustive(&self, r: &LlrVector, l: usize) -> Result<DecodeResult, DecodeError> {
        self.check_len(r.values())?;
        if l == 0 {
            return Err(DecodeError::EmptyList);
        }
        if self.k > ESD_MAX_K {
            return Err(DecodeError::TooLarge {
                k: self.k,
                max: ESD_MAX_K,
            });
        }
        let total = 1u64 << self.k;
        if l as u64 > total {
            return Err(DecodeError::ListTooLarge { l, max: total });
        }
        let frame = self.frame(r.values());

        #[derive(PartialEq)]
        struct Entry(f64, usize, Vec<u64>, BinaryVector);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                self.0
                    .total_cmp(&other.0)
                    .then(self.1.cmp(&other.1))
                    .then_with(|| self.2.iter().rev().cmp(other.2.iter().rev()))
            }
        }

        let mut heap: BinaryHeap<Entry> = BinaryHeap::with_capacity(l + 1);
        let mut e_i = frame.syndrome.clone();
        let mut e_p = BinaryVector::zeros(self.k);
        for x in 0..total {
            if x > 0 {
                // Gray-code step flips one information bit.
                let j = x.trailing_zeros() as usize;
                e_p.flip(j);
                e_i.xor_assign(&self.pcols[j]);
            }
            let e = e_i.concat(&e_p);
            let w = self.weight(&frame, &e);
            let entry = Entry(w, e.weight(), e.words().to_vec(), e);
            if heap.len() < l {
                heap.push(entry);
            } else if entry < *heap.peek().expect("non-empty") {
                heap.pop();
                heap.push(entry);
            }
        }
        let list = heap
            .into_sorted_vec()
            .into_iter()
            .map(|Entry(w, _, _, e)| self.candidate(&frame, w, &e))
            .collect();
        Ok(DecodeResult {
            list,
            queries: total,
            emissions: total,
            reencodings: total,
            stop_reason: StopReason::Exhausted,
            true_tep_queried: None,
        })
    }
}

fn hard_decision_slice(r: &[f64]) -> BinaryVector {
    let mut z = BinaryVector::zeros(r.len());
    for (i, &v) in r.iter().enumerate() {
        if v < 0.0 {
            z.set(i, true);
        }
    }
    z
}

/// Guessing codeword decoding.
pub fn gcd_decode(
    r: &LlrVector,
    code: &Code,
    l: usize,
    trunc: &TruncationConfig,
) -> Result<DecodeResult, DecodeError> {
    GcdContext::new(code).decode(r, l, trunc, None)
}

/// Parallel GCD over a split of the information set.
pub fn parallel_gcd_decode(
    r: &LlrVector,
    code: &Code,
    l: usize,
    delta_bits: usize,
    trunc: &TruncationConfig,
) -> Result<DecodeResult, DecodeError> {
    GcdContext::new(code).decode_parallel(r, l, delta_bits, trunc)
}

/// Exhaustive search decoding; the reference for list optimality.
pub fn esd_decode(r: &LlrVector, code: &Code, l: usize) -> Result<DecodeResult, DecodeError> {
    GcdContext::new(code).decode_exhaustive(r, l)
}

/// Guessing noise decoding: full-length TEPs in `≺` order, each checked
/// against the syndrome, until `l` valid ones are found.
pub fn gnd_decode(
    r: &LlrVector,
    code: &Code,
    l: usize,
    l_max: Option<u64>,
) -> Result<DecodeResult, DecodeError> {
    let n = code.n();
    if r.len() != n {
        return Err(DecodeError::DimensionMismatch {
            expected: n,
            found: r.len(),
        });
    }
    if l == 0 {
        return Err(DecodeError::EmptyList);
    }
    let ctx = GcdContext::new(code);
    let h = code.parity_check();
    let hcols: Vec<BinaryVector> = (0..n).map(|j| h.column(j)).collect();
    let z = hard_decision(r);
    let s = h.mul_transpose(&z).expect("length checked");
    let r_sys: Vec<f64> = ctx.perm.iter().map(|&i| r.values()[i]).collect();
    let mut gen = TepGenerator::new(r.values());
    let mut found = Vec::new();
    let mut queries = 0u64;
    let stop_reason = loop {
        if l_max.is_some_and(|lm| queries >= lm) {
            break StopReason::LMax;
        }
        let Some(p) = gen.next_sorted() else {
            break StopReason::Exhausted;
        };
        queries += 1;
        let mut acc = BinaryVector::zeros(s.len());
        for j in p.support() {
            acc.xor_assign(&hcols[gen.perm()[j]]);
        }
        if acc == s {
            let mut e = BinaryVector::zeros(n);
            for j in p.support() {
                e.set(gen.perm()[j], true);
            }
            let w: f64 = ctx.to_systematic(&e).iter_ones().map(|i| r_sys[i].abs()).sum();
            found.push(Candidate {
                codeword: z.xor(&e),
                tep: e,
                weight: w,
            });
            if found.len() == l {
                break StopReason::Optimal;
            }
        }
    };
    let result = DecodeResult {
        list: found,
        queries,
        emissions: gen.emitted(),
        reencodings: 0,
        stop_reason,
        true_tep_queried: None,
    };
    if result.list.len() < l {
        return Err(DecodeError::Exhausted(Box::new(result)));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{hamming_code, random_code, rm_code};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian_llrs(n: usize, rng: &mut ChaCha8Rng) -> LlrVector {
        LlrVector::new((0..n).map(|_| rng.random_range(-3.0..3.0)).collect())
    }

    #[test]
    fn candidate_list_keeps_best() {
        let mut l = CandidateList::new(2);
        assert_eq!(l.worst(), f64::INFINITY);
        assert!(l.insert(3.0, 'a'));
        assert!(l.insert(1.0, 'b'));
        assert_eq!(l.worst(), 3.0);
        assert!(!l.insert(3.0, 'c'));
        assert!(l.insert(2.0, 'd'));
        assert_eq!(l.weights(), vec![1.0, 2.0]);
    }

    #[test]
    fn codeword_received_stops_after_one_query() {
        let code = hamming_code(3).unwrap();
        let c = code.encode(&BinaryVector::from_bits(&[1, 0, 1, 1]));
        let r = LlrVector::new(
            (0..7)
                .map(|i| if c.get(i) { -1.0 - i as f64 } else { 1.0 + i as f64 })
                .collect(),
        );
        let res = gcd_decode(&r, &code, 1, &TruncationConfig::default()).unwrap();
        assert_eq!(res.list[0].codeword, c);
        assert_eq!(res.queries, 1);
        assert_eq!(res.emissions, 2);
        assert_eq!(res.stop_reason, StopReason::Optimal);
        let g = gnd_decode(&r, &code, 1, None).unwrap();
        assert_eq!(g.queries, 1);
    }

    #[test]
    fn gcd_matches_esd_on_random_codes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 0..60 {
            let n = rng.random_range(6..=16);
            let k = rng.random_range(1..=n.min(10));
            let code = random_code(n, k, t).unwrap();
            let r = gaussian_llrs(n, &mut rng);
            let l = [1, 2, 4][t as usize % 3].min(1 << k);
            let g = gcd_decode(&r, &code, l, &TruncationConfig::default()).unwrap();
            let e = esd_decode(&r, &code, l).unwrap();
            assert_eq!(g.weights(), e.weights());
            for c in &g.list {
                assert!(code.is_codeword(&c.codeword));
            }
        }
    }

    #[test]
    fn list_contains_agrees_with_decode() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 0..80 {
            let n = rng.random_range(8..=16);
            let k = rng.random_range(2..=n.min(9));
            let code = random_code(n, k, t).unwrap();
            let ctx = GcdContext::new(&code);
            let r = gaussian_llrs(n, &mut rng);
            let l = [1, 2, 4][t as usize % 3];
            let all = esd_decode(&r, &code, 1 << k).unwrap();
            let top = gcd_decode(&r, &code, l, &TruncationConfig::default()).unwrap();
            for c in all.list.iter().take(l + 3) {
                let inside = top.list.iter().any(|x| x.codeword == c.codeword);
                assert_eq!(ctx.list_contains(&r, l, &c.codeword).unwrap(), inside);
            }
        }
    }

    #[test]
    fn esd_full_list_and_guards() {
        let code = hamming_code(3).unwrap();
        let r = LlrVector::new(vec![0.3, -1.0, 2.0, 0.1, -0.7, 1.5, 0.9]);
        let res = esd_decode(&r, &code, 16).unwrap();
        assert_eq!(res.list.len(), 16);
        assert!(res.weights().windows(2).all(|w| w[0] <= w[1]));
        let mut cws: Vec<String> = res.list.iter().map(|c| c.codeword.to_string()).collect();
        cws.sort();
        cws.dedup();
        assert_eq!(cws.len(), 16);
        assert!(matches!(esd_decode(&r, &code, 17), Err(DecodeError::ListTooLarge { .. })));
        let big = rm_code(6, 3).unwrap();
        let r = LlrVector::new(vec![1.0; 64]);
        assert!(matches!(esd_decode(&r, &big, 1), Err(DecodeError::TooLarge { .. })));
    }

    #[test]
    fn posterior_examples() {
        let z = Tep {
            bits: BinaryVector::zeros(1),
            weight: 0.0,
        };
        assert!((tep_posterior(&z, &LlrVector::new(vec![0.0])).unwrap() - 0.5).abs() < 1e-15);
        let r = LlrVector::new(vec![2.0, 2.0]);
        let z2 = Tep {
            bits: BinaryVector::zeros(2),
            weight: 0.0,
        };
        let e2 = 2f64.exp();
        let expect = (e2 / (1.0 + e2)).powi(2);
        assert!((tep_posterior(&z2, &r).unwrap() - expect).abs() < 1e-14);
        let r3 = LlrVector::new(vec![0.4, -1.3, 2.2]);
        let total: f64 = TepGenerator::new(r3.values())
            .map(|t| tep_posterior(&t, &r3).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_matches_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 0..40 {
            let code = random_code(24, 12, 100 + t).unwrap();
            let r = gaussian_llrs(24, &mut rng);
            let seq = gcd_decode(&r, &code, 4, &TruncationConfig::default()).unwrap();
            for d in 0..=4 {
                let par = parallel_gcd_decode(&r, &code, 4, d, &TruncationConfig::default()).unwrap();
                assert_eq!(seq.weights(), par.weights());
                assert_eq!(
                    seq.list.iter().map(|c| &c.codeword).collect::<Vec<_>>(),
                    par.list.iter().map(|c| &c.codeword).collect::<Vec<_>>()
                );
                if d == 0 {
                    assert_eq!(seq.queries, par.queries);
                }
            }
        }
    }

    #[test]
    fn truncation_rules_fire() {
        let code = rm_code(5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = LlrVector::new((0..32).map(|_| rng.random_range(-0.5..1.0)).collect());
        let res = gcd_decode(&r, &code, 2, &TruncationConfig::with_l_max(3)).unwrap();
        assert!(res.queries <= 3);
        let res = gcd_decode(&r, &code, 2, &TruncationConfig::with_tau_s(1e-9)).unwrap();
        assert_eq!(res.queries, 1);
        assert_eq!(res.stop_reason, StopReason::TauS);
        assert!(gcd_decode(&r, &code, 2, &TruncationConfig::with_tau_p(1.5)).is_err());
    }

    #[test]
    fn full_rate_code_is_pure_enumeration() {
        let code = rm_code(2, 2).unwrap();
        let r = LlrVector::new(vec![0.5, 1.0, -1.2, 1.9]);
        let res = gcd_decode(&r, &code, 5, &TruncationConfig::default()).unwrap();
        let w = res.weights();
        assert_eq!(w.len(), 5);
        assert!((w[4] - 1.5).abs() < 1e-12);
    }
}
