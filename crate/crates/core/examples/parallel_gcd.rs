//! Parallel GCD with the least reliable positions enumerated up front gives
//! the same list as sequential GCD in fewer serial steps.

use listdec::channel::{derive_rng, ChannelSpec};
use listdec::codes::rm_code;
use listdec::decoders::{GcdContext, TruncationConfig};
use listdec::gf2::BinaryVector;

fn main() {
    let code = rm_code(6, 3).unwrap();
    let ctx = GcdContext::new(&code);
    let ch = ChannelSpec::awgn_from_ebn0(3.5, code.rate());
    let trunc = TruncationConfig::default();
    for f in 0..5 {
        let r = ch.transmit(&BinaryVector::zeros(code.n()), &mut derive_rng(3, 0, f));
        let seq = ctx.decode(&r, 2, &trunc, None).unwrap();
        print!("frame {f}: sequential {:>4} queries", seq.queries);
        for delta in [1, 2, 4] {
            let par = ctx.decode_parallel(&r, 2, delta, &trunc).unwrap();
            assert_eq!(par.weights(), seq.weights());
            print!(" | δ={delta}: {:>4} steps", par.queries);
        }
        println!();
    }
}
