//! List decoding of RM[16,11] with GCD, checked against exhaustive search.

use listdec::channel::{derive_rng, ChannelSpec};
use listdec::codes::rm_code;
use listdec::decoders::{esd_decode, gcd_decode, TruncationConfig};
use listdec::gf2::BinaryVector;

fn main() {
    let code = rm_code(4, 2).unwrap();
    let ch = ChannelSpec::awgn_from_ebn0(2.0, code.rate());
    let mut rng = derive_rng(7, 0, 0);
    let r = ch.transmit(&BinaryVector::zeros(code.n()), &mut rng);
    let gcd = gcd_decode(&r, &code, 4, &TruncationConfig::default()).unwrap();
    let esd = esd_decode(&r, &code, 4).unwrap();
    println!("code [{}, {}], list size 4", code.n(), code.k());
    for (a, b) in gcd.list.iter().zip(&esd.list) {
        println!("{}  {:.4}  (esd {:.4})", a.codeword, a.weight, b.weight);
    }
    println!("gcd queries {} of {} patterns, stop: {}", gcd.queries, 1u64 << code.k(), gcd.stop_reason.as_str());
}
