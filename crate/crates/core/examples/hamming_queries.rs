//! Mean query counts of GCD and GND on the [7,4] Hamming code over a BSC,
//! next to their closed forms.

use listdec::analysis::hamming_query_curves;
use listdec::channel::{derive_rng, ChannelSpec};
use listdec::codes::hamming_code;
use listdec::decoders::{gcd_decode, gnd_decode, TruncationConfig};
use listdec::gf2::BinaryVector;

fn main() {
    let code = hamming_code(3).unwrap();
    let frames = 100_000;
    for p in [0.01, 0.05, 0.1] {
        let ch = ChannelSpec::Bsc { p };
        let (mut gcd, mut gnd) = (0u64, 0u64);
        for f in 0..frames {
            let mut rng = derive_rng(1, 0, f);
            let r = ch.transmit(&BinaryVector::zeros(7), &mut rng);
            gcd += gcd_decode(&r, &code, 1, &TruncationConfig::default()).unwrap().queries;
            gnd += gnd_decode(&r, &code, 1, None).unwrap().queries;
        }
        let (gnd_cf, gcd_cf) = hamming_query_curves(p);
        println!(
            "p={p:<5} gcd {:.4} (closed form {gcd_cf:.4})  gnd {:.4} (closed form {gnd_cf:.4})",
            gcd as f64 / frames as f64,
            gnd as f64 / frames as f64
        );
    }
}
