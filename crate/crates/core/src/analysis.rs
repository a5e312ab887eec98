//! Truncation analytics: the rank `D(r_P)` of the true partial TEP, its
//! saddlepoint approximation, Monte Carlo CCDFs of `D` and `Γ`, and the
//! closed-form query counts of the [7,4] Hamming code on the BSC.
//!
//! Transmission of the all-zero codeword is assumed throughout, so the true
//! partial TEP is `e_P[i] = [r_i < 0]`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::channel::{derive_rng, ChannelSpec, LlrVector};
use crate::gf2::BinaryVector;
use crate::tepgen::TepGenerator;

/// Result of a capped count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Exact(u64),
    AtLeast(u64),
}

impl Count {
    /// The counted value, or the cap when the count was cut short.
    pub fn value(&self) -> u64 {
        match *self {
            Count::Exact(n) | Count::AtLeast(n) => n,
        }
    }

    pub fn exceeds(&self, threshold: f64) -> bool {
        match *self {
            Count::Exact(n) => n as f64 > threshold,
            Count::AtLeast(n) => n as f64 > threshold,
        }
    }
}

/// `|{f : γ(f) <= γ(e_P)}|`, counted by ordered enumeration up to `cap`.
pub fn exact_d(r_p: &LlrVector, cap: u64) -> Count {
    let mut gen = TepGenerator::new(r_p.values());
    let inv = inverse(gen.perm());
    let target = gen.pattern(
        r_p.values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < 0.0)
            .map(|(i, _)| inv[i]),
    );
    let mut count = 0u64;
    while let Some(p) = gen.next_sorted() {
        if p.weight > target.weight {
            return Count::Exact(count);
        }
        if count == cap {
            return Count::AtLeast(cap);
        }
        count += 1;
    }
    Count::Exact(count)
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (s, &i) in perm.iter().enumerate() {
        inv[i] = s;
    }
    inv
}

/// Saddlepoint evaluation of `D(r_P) = 2^K P{W <= 0}` with
/// `W = Σ W_i`, `W_i` uniform on `{0, r_i}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlepointEval {
    pub s_hat: f64,
    pub kappa: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub d_estimate: f64,
    /// `true` when all `r_i` share a sign and the value is exact.
    pub boundary: bool,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `κ(s) = Σ ln(½ + ½ e^{s r_i})` with its first two derivatives.
pub fn cumulants(r: &[f64], s: f64) -> (f64, f64, f64) {
    let mut k0 = 0.0;
    let mut k1 = 0.0;
    let mut k2 = 0.0;
    for &ri in r {
        let x = s * ri;
        let q = sigmoid(x);
        k0 += softplus(x) - std::f64::consts::LN_2;
        k1 += ri * q;
        k2 += ri * ri * q * (1.0 - q);
    }
    (k0, k1, k2)
}

/// Scale used for the relative root tolerance: `Σ |r_i| σ(s r_i)`.
fn kappa1_scale(r: &[f64], s: f64) -> f64 {
    r.iter().map(|&ri| ri.abs() * sigmoid(s * ri)).sum()
}

/// `ln(e^{x²} erfc(x))`.
fn ln_erfcx(x: f64) -> f64 {
    if x < 20.0 {
        x * x + erfc(x).ln()
    } else {
        // asymptotic series
        let x2 = x * x;
        let series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
        -(x * std::f64::consts::PI.sqrt()).ln() + series.ln()
    }
}

/// Solves `κ'(s) = 0` by bracketed Newton iteration with bisection fallback.
pub fn solve_saddlepoint(r: &[f64]) -> Option<f64> {
    let has_pos = r.iter().any(|&v| v > 0.0);
    let has_neg = r.iter().any(|&v| v < 0.0);
    if !(has_pos && has_neg) {
        return None;
    }
    let k1 = |s: f64| cumulants(r, s).1;
    let at0 = k1(0.0);
    if at0 == 0.0 {
        return Some(0.0);
    }
    // κ' is increasing; the root lies on the side opposite to the sign of κ'(0).
    let (mut lo, mut hi) = if at0 > 0.0 {
        let mut lo = -1.0;
        while k1(lo) > 0.0 {
            lo *= 2.0;
        }
        (lo, 0.0)
    } else {
        let mut hi = 1.0;
        while k1(hi) < 0.0 {
            hi *= 2.0;
        }
        (0.0, hi)
    };
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (_, f, df) = cumulants(r, s);
        if f.abs() <= 1e-13 * kappa1_scale(r, s) {
            return Some(s);
        }
        if f > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let newton = s - f / df;
        s = if df > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * s.abs().max(1e-300) {
            return Some(s);
        }
    }
    Some(s)
}

/// Saddlepoint estimate of `D`.
///
/// The open tail is approximated by
/// `2^K P{W < 0} ≈ 2^K · ½ · exp(κ(ŝ) + ½ŝ²κ''(ŝ)) · erfc(-ŝ √(κ''(ŝ)/2))`
/// and the atom `f = e_P` (where `W = 0`) is added exactly.
pub fn saddlepoint_d(r_p: &LlrVector) -> SaddlepointEval {
    let r = r_p.values();
    let k = r.len() as f64;
    match solve_saddlepoint(r) {
        None => {
            let all_neg = !r.is_empty() && r.iter().all(|&v| v < 0.0);
            let d = if all_neg { 2f64.powf(k) } else { 1.0 };
            SaddlepointEval {
                s_hat: 0.0,
                kappa: 0.0,
                kappa1: 0.0,
                kappa2: 0.0,
                d_estimate: d,
                boundary: true,
            }
        }
        Some(s) => {
            let (k0, k1, k2) = cumulants(r, s);
            let x = -s * (k2 / 2.0).sqrt();
            let ln_d = k * std::f64::consts::LN_2 - std::f64::consts::LN_2 + k0 + ln_erfcx(x);
            SaddlepointEval {
                s_hat: s,
                kappa: k0,
                kappa1: k1,
                kappa2: k2,
                d_estimate: 1.0 + ln_d.exp(),
                boundary: false,
            }
        }
    }
}

/// Relative residual `|κ'(ŝ)| / Σ|r_i|σ(ŝ r_i)` of a saddlepoint evaluation.
pub fn saddlepoint_residual(r_p: &LlrVector, eval: &SaddlepointEval) -> f64 {
    if eval.boundary {
        return 0.0;
    }
    eval.kappa1.abs() / kappa1_scale(r_p.values(), eval.s_hat)
}

/// `Γ(r_P) = Σ z_P[i] |r_P[i]|`.
pub fn gamma_of(r_p: &LlrVector) -> f64 {
    r_p.values().iter().filter(|&&v| v < 0.0).map(|v| -v).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CcdfKind {
    D,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DMethod {
    Exact,
    Saddlepoint,
}

impl CcdfKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CcdfKind::D => "D",
            CcdfKind::Gamma => "Gamma",
        }
    }
}

impl DMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DMethod::Exact => "exact",
            DMethod::Saddlepoint => "saddlepoint",
        }
    }
}

/// Monte Carlo estimate of `P{X > t}` on a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfCurve {
    pub kind: CcdfKind,
    pub method: DMethod,
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub trials: u64,
    pub snr: Option<f64>,
}

#[derive(Serialize)]
struct CcdfRow<'a> {
    threshold: f64,
    probability: f64,
    trials: u64,
    snr: Option<f64>,
    kind: &'a str,
    method: &'a str,
}

impl CcdfCurve {
    /// Writes `threshold,probability,trials,snr,kind,method`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        if self.thresholds.is_empty() {
            out.write_record(["threshold", "probability", "trials", "snr", "kind", "method"])?;
        }
        for (&t, &p) in self.thresholds.iter().zip(&self.probabilities) {
            out.serialize(CcdfRow {
                threshold: t,
                probability: p,
                trials: self.trials,
                snr: self.snr,
                kind: self.kind.as_str(),
                method: self.method.as_str(),
            })?;
        }
        out.flush()?;
        Ok(())
    }

    /// Probability at the first threshold equal to `t`.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .position(|&x| x == t)
            .map(|i| self.probabilities[i])
    }
}

/// LLRs of `k` positions of the all-zero codeword for draw `trial`.
pub fn sample_partial_llrs(k: usize, ch: &ChannelSpec, seed: u64, trial: u64) -> LlrVector {
    let mut rng = derive_rng(seed, 0, trial);
    ch.transmit(&BinaryVector::zeros(k), &mut rng)
}

/// Monte Carlo CCDF of `D` or `Γ` over `trials` draws of `k` channel LLRs.
/// Thresholds are sorted ascending in the output.
pub fn ccdf(
    kind: CcdfKind,
    k: usize,
    ch: &ChannelSpec,
    thresholds: &[f64],
    trials: u64,
    seed: u64,
    method: DMethod,
) -> CcdfCurve {
    let mut grid = thresholds.to_vec();
    grid.sort_by(f64::total_cmp);
    let cap = grid
        .iter()
        .filter(|t| t.is_finite())
        .fold(0.0f64, |a, &b| a.max(b))
        .max(0.0)
        .min(u64::MAX as f64 / 2.0) as u64
        + 1;
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let r = sample_partial_llrs(k, ch, seed, t);
            let exceeds: Vec<u64> = match (kind, method) {
                (CcdfKind::Gamma, _) => {
                    let g = gamma_of(&r);
                    grid.iter().map(|&th| u64::from(g > th)).collect()
                }
                (CcdfKind::D, DMethod::Exact) => {
                    let d = exact_d(&r, cap);
                    grid.iter().map(|&th| u64::from(d.exceeds(th))).collect()
                }
                (CcdfKind::D, DMethod::Saddlepoint) => {
                    let d = saddlepoint_d(&r).d_estimate;
                    grid.iter().map(|&th| u64::from(d > th)).collect()
                }
            };
            exceeds
        })
        .reduce(
            || vec![0; grid.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    let probabilities = counts
        .iter()
        .map(|&c| if trials == 0 { 0.0 } else { c as f64 / trials as f64 })
        .collect();
    CcdfCurve {
        kind,
        method,
        thresholds: grid,
        probabilities,
        trials,
        snr: None,
    }
}

/// `p₀ = (1-p)^7 + 7p^3(1-p)^3 + p^7`, `p₁ = (1-p₀)/7`; returns the mean
/// query counts `(p₀ + 35p₁, p₀ + 17p₁)` of GND and GCD on the [7,4]
/// Hamming code.
pub fn hamming_query_curves(p: f64) -> (f64, f64) {
    let q = 1.0 - p;
    let p0 = q.powi(7) + 7.0 * p.powi(3) * q.powi(3) + p.powi(7);
    let p1 = (1.0 - p0) / 7.0;
    (p0 + 35.0 * p1, p0 + 17.0 * p1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_d_examples() {
        assert_eq!(exact_d(&LlrVector::new(vec![1.0, 2.0, 0.5]), 100), Count::Exact(1));
        assert_eq!(exact_d(&LlrVector::new(vec![-1.0, 2.0]), 100), Count::Exact(2));
        let heavy = LlrVector::new(vec![-1.0; 8]);
        assert_eq!(exact_d(&heavy, 10), Count::AtLeast(10));
        assert_eq!(exact_d(&heavy, 1000), Count::Exact(256));
    }

    #[test]
    fn saddlepoint_boundary_and_symmetric() {
        let pos = saddlepoint_d(&LlrVector::new(vec![1.0, 2.0]));
        assert!(pos.boundary);
        assert_eq!(pos.d_estimate, 1.0);
        let r = LlrVector::new(vec![1.3, -1.3, 0.7, -0.7, 2.1, -2.1]);
        let ev = saddlepoint_d(&r);
        assert!(ev.s_hat.abs() < 1e-12);
        let exact = exact_d(&r, 1 << 20).value() as f64;
        assert!(ev.d_estimate / exact < 2.0 && exact / ev.d_estimate < 2.0);
        assert!(ev.kappa2 > 0.0);
    }

    #[test]
    fn saddlepoint_root_precision() {
        let r = LlrVector::new(vec![3.0, 2.5, -0.4, 4.0, 1.1, -0.2, 5.0, 0.3]);
        let ev = saddlepoint_d(&r);
        assert!(ev.s_hat < 0.0);
        assert!(saddlepoint_residual(&r, &ev) < 1e-10);
    }

    #[test]
    fn ln_erfcx_is_continuous() {
        let a = ln_erfcx(19.999999);
        let b = ln_erfcx(20.0);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn hamming_curves() {
        let (gnd, gcd) = hamming_query_curves(1e-9);
        assert!((gnd - 1.0).abs() < 1e-6 && (gcd - 1.0).abs() < 1e-6);
        let (gnd, gcd) = hamming_query_curves(0.05);
        assert!(gcd < gnd);
    }

    #[test]
    fn ccdf_endpoints_and_monotone() {
        let ch = ChannelSpec::awgn_from_ebn0(2.0, 0.5);
        let c = ccdf(CcdfKind::Gamma, 12, &ch, &[f64::INFINITY, 0.0, 1.0, -1.0], 300, 3, DMethod::Exact);
        assert_eq!(c.thresholds[0], -1.0);
        assert_eq!(c.probabilities[0], 1.0);
        assert_eq!(*c.probabilities.last().unwrap(), 0.0);
        assert!(c.probabilities.windows(2).all(|w| w[0] >= w[1]));
        let d = ccdf(CcdfKind::D, 10, &ch, &[0.0, 10.0, 100.0], 200, 3, DMethod::Exact);
        assert_eq!(d.probabilities[0], 1.0);
        assert!(d.probabilities.windows(2).all(|w| w[0] >= w[1]));
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("threshold,probability,trials,snr,kind,method\n"));
    }
}
