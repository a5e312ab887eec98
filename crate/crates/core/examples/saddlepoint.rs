//! Saddlepoint approximation of D(r_P) against exact counting, and the CCDF
//! of D for K = 42.

use listdec::analysis::{ccdf, exact_d, sample_partial_llrs, saddlepoint_d, CcdfKind, DMethod};
use listdec::channel::SnrConvention;

fn main() {
    let ch = SnrConvention::InverseNoise.channel(4.0, 1.0);
    println!("draw  exact      saddlepoint");
    for t in 0..8 {
        let r = sample_partial_llrs(16, &ch, 2, t);
        let exact = exact_d(&r, 1 << 16).value();
        let sp = saddlepoint_d(&r);
        println!("{t:>4}  {exact:<9}  {:.1}", sp.d_estimate);
    }
    for snr in [4.0, 5.0] {
        let ch = SnrConvention::InverseNoise.channel(snr, 1.0);
        let curve = ccdf(CcdfKind::D, 42, &ch, &[10.0, 100.0, 1000.0], 10_000, 11, DMethod::Saddlepoint);
        println!("{snr} dB: P(D > 10, 100, 1000) = {:?}", curve.probabilities);
    }
}
