//! Soft-decision list decoding of binary linear block codes.
//!
//! The crate implements guessing codeword decoding (GCD) with its truncated
//! and parallel variants, the GND and exhaustive-search baselines, saddlepoint
//! analysis of the truncation parameters, and successive-cancellation list
//! decoding of polar codes over a pruned tree whose leaves are decoded by GCD.

pub mod analysis;
pub mod channel;
pub mod codes;
pub mod decoders;
pub mod gf2;
pub mod polar;
pub mod sim;
pub mod tepgen;
