//! Channel models, log-likelihood ratios and the soft-weight metric.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::BinaryVector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Per-bit log-likelihood ratios `ln P(y|0) / P(y|1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector(Vec<f64>);

impl LlrVector {
    /// Wraps raw values. Panics if any value is not finite.
    pub fn new(values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|v| v.is_finite()),
            "LLR values must be finite"
        );
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    /// Reliabilities `|r_i|`.
    pub fn reliabilities(&self) -> Vec<f64> {
        self.0.iter().map(|r| r.abs()).collect()
    }

    pub fn select(&self, indices: &[usize]) -> LlrVector {
        LlrVector(indices.iter().map(|&i| self.0[i]).collect())
    }
}

impl From<Vec<f64>> for LlrVector {
    fn from(v: Vec<f64>) -> Self {
        Self::new(v)
    }
}

/// A memoryless binary-input channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelSpec {
    /// BPSK `x = (-1)^c` over additive Gaussian noise of variance `sigma2`.
    Awgn { sigma2: f64 },
    /// Binary symmetric channel with crossover probability `p`.
    Bsc { p: f64 },
}

impl ChannelSpec {
    /// AWGN channel at `snr_db` (Eb/N0) for a code of rate `rate`:
    /// `sigma2 = 1 / (2 R 10^(snr/10))`.
    pub fn awgn_from_ebn0(snr_db: f64, rate: f64) -> Self {
        ChannelSpec::Awgn {
            sigma2: ebn0_to_sigma2(snr_db, rate),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        match *self {
            ChannelSpec::Awgn { sigma2 } if !(sigma2 > 0.0 && sigma2.is_finite()) => Err(
                ChannelError::InvalidChannel(format!("sigma2 must be positive, got {sigma2}")),
            ),
            ChannelSpec::Bsc { p } if !(p > 0.0 && p < 0.5) => Err(ChannelError::InvalidChannel(
                format!("crossover probability must lie in (0, 1/2), got {p}"),
            )),
            _ => Ok(()),
        }
    }

    /// Sends codeword bits through the channel and returns the LLRs of the
    /// observation.
    pub fn transmit<R: Rng + ?Sized>(&self, c: &BinaryVector, rng: &mut R) -> LlrVector {
        match *self {
            ChannelSpec::Awgn { sigma2 } => {
                let noise = Normal::new(0.0, sigma2.sqrt()).expect("valid sigma");
                let scale = 2.0 / sigma2;
                LlrVector::new(
                    (0..c.len())
                        .map(|i| {
                            let x = if c.get(i) { -1.0 } else { 1.0 };
                            scale * (x + noise.sample(rng))
                        })
                        .collect(),
                )
            }
            ChannelSpec::Bsc { p } => {
                let mag = ((1.0 - p) / p).ln();
                LlrVector::new(
                    (0..c.len())
                        .map(|i| {
                            let y = c.get(i) ^ rng.random_bool(p);
                            if y {
                                -mag
                            } else {
                                mag
                            }
                        })
                        .collect(),
                )
            }
        }
    }
}

/// Counter-style RNG for the `(a, b)`-th draw under a master seed, so results
/// do not depend on the order in which draws are evaluated.
pub fn derive_rng(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&a.to_le_bytes());
    bytes[16..24].copy_from_slice(&b.to_le_bytes());
    bytes[24..].copy_from_slice(b"listdec\0");
    ChaCha8Rng::from_seed(bytes)
}

/// How an SNR in dB maps to the AWGN noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrConvention {
    /// `sigma2 = 1 / (2 R 10^(snr/10))`.
    #[default]
    Ebn0,
    /// `sigma2 = 10^(-snr/10)`, independent of the rate.
    InverseNoise,
}

impl SnrConvention {
    pub fn sigma2(&self, snr_db: f64, rate: f64) -> f64 {
        match self {
            SnrConvention::Ebn0 => ebn0_to_sigma2(snr_db, rate),
            SnrConvention::InverseNoise => 10f64.powf(-snr_db / 10.0),
        }
    }

    pub fn channel(&self, snr_db: f64, rate: f64) -> ChannelSpec {
        ChannelSpec::Awgn {
            sigma2: self.sigma2(snr_db, rate),
        }
    }
}

/// Noise variance for BPSK at the given Eb/N0 in dB and code rate.
pub fn ebn0_to_sigma2(snr_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))
}

/// A channel observation.
#[derive(Debug, Clone, Copy)]
pub enum Observation<'a> {
    /// Real-valued AWGN outputs.
    Real(&'a [f64]),
    /// Hard BSC outputs.
    Bits(&'a BinaryVector),
}

/// Computes the LLR vector of an observation.
pub fn llr_from_observation(y: Observation<'_>, ch: &ChannelSpec) -> Result<LlrVector, ChannelError> {
    ch.validate()?;
    match (y, *ch) {
        (Observation::Real(y), ChannelSpec::Awgn { sigma2 }) => {
            Ok(LlrVector::new(y.iter().map(|&v| 2.0 * v / sigma2).collect()))
        }
        (Observation::Bits(y), ChannelSpec::Bsc { p }) => {
            let mag = ((1.0 - p) / p).ln();
            Ok(LlrVector::new(
                (0..y.len())
                    .map(|i| if y.get(i) { -mag } else { mag })
                    .collect(),
            ))
        }
        (Observation::Real(_), ChannelSpec::Bsc { .. }) => Err(ChannelError::InvalidChannel(
            "BSC expects a bit observation".into(),
        )),
        (Observation::Bits(_), ChannelSpec::Awgn { .. }) => Err(ChannelError::InvalidChannel(
            "AWGN expects a real observation".into(),
        )),
    }
}

/// `z_i = 0` iff `r_i >= 0`.
pub fn hard_decision(r: &LlrVector) -> BinaryVector {
    let mut z = BinaryVector::zeros(r.len());
    for (i, &v) in r.values().iter().enumerate() {
        if v < 0.0 {
            z.set(i, true);
        }
    }
    z
}

/// Soft weight `Σ e_i |r_i|`, summed in ascending index order.
pub fn soft_weight(e: &BinaryVector, r: &LlrVector) -> Result<f64, ChannelError> {
    if e.len() != r.len() {
        return Err(ChannelError::DimensionMismatch {
            expected: r.len(),
            found: e.len(),
        });
    }
    Ok(soft_weight_unchecked(e, r.values()))
}

#[inline]
pub(crate) fn soft_weight_unchecked(e: &BinaryVector, r: &[f64]) -> f64 {
    e.iter_ones().map(|i| r[i].abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awgn_llr() {
        let ch = ChannelSpec::Awgn { sigma2: 1.0 };
        let r = llr_from_observation(Observation::Real(&[1.0]), &ch).unwrap();
        assert_eq!(r.values(), &[2.0]);
    }

    #[test]
    fn bsc_llr() {
        let ch = ChannelSpec::Bsc { p: 0.05 };
        let y = BinaryVector::from_bits(&[0, 1]);
        let r = llr_from_observation(Observation::Bits(&y), &ch).unwrap();
        let l19 = 19f64.ln();
        assert!((r.values()[0] - l19).abs() < 1e-12);
        assert!((r.values()[1] + l19).abs() < 1e-12);
    }

    #[test]
    fn invalid_channels() {
        let bad = [
            ChannelSpec::Awgn { sigma2: 0.0 },
            ChannelSpec::Awgn { sigma2: -1.0 },
            ChannelSpec::Bsc { p: 0.0 },
            ChannelSpec::Bsc { p: 0.5 },
        ];
        for ch in bad {
            assert!(matches!(
                llr_from_observation(Observation::Real(&[1.0]), &ch),
                Err(ChannelError::InvalidChannel(_))
            ));
        }
    }

    #[test]
    fn hard_decision_sign_rule() {
        let z = hard_decision(&LlrVector::new(vec![0.5, -1.2, 1.9]));
        assert_eq!(z.to_string(), "010");
        assert_eq!(hard_decision(&LlrVector::new(vec![0.0])).to_string(), "0");
        assert_eq!(
            hard_decision(&LlrVector::new(vec![-0.1, -3.0, -2.0])).to_string(),
            "111"
        );
    }

    #[test]
    fn soft_weight_examples() {
        let r = LlrVector::new(vec![0.5, 1.0, -1.2, 1.9]);
        let w = |s: &str| soft_weight(&s.parse().unwrap(), &r).unwrap();
        assert_eq!(w("0000"), 0.0);
        assert!((w("1010") - 1.7).abs() < 1e-12);
        assert!((w("1100") - 1.5).abs() < 1e-12);
        assert!(matches!(
            soft_weight(&BinaryVector::zeros(3), &r),
            Err(ChannelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bsc_roundtrip_and_hamming_scaling() {
        let ch = ChannelSpec::Bsc { p: 0.1 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = BinaryVector::from_bits(&[1, 0, 1, 1, 0, 0, 1, 0]);
        let r = ch.transmit(&c, &mut rng);
        let y = hard_decision(&r);
        let r2 = llr_from_observation(Observation::Bits(&y), &ch).unwrap();
        assert_eq!(r, r2);
        assert_eq!(hard_decision(&r2), y);
        let mag = (0.9f64 / 0.1).ln();
        let e = BinaryVector::from_bits(&[1, 1, 0, 0, 1, 0, 0, 0]);
        assert_eq!(soft_weight(&e, &r2).unwrap(), 3.0 * mag);
    }

    #[test]
    fn ebn0_convention() {
        assert!((ebn0_to_sigma2(0.0, 0.5) - 1.0).abs() < 1e-15);
        assert!((ebn0_to_sigma2(10.0, 0.5) - 0.1).abs() < 1e-15);
        assert!((SnrConvention::InverseNoise.sigma2(10.0, 0.3) - 0.1).abs() < 1e-15);
    }
}
