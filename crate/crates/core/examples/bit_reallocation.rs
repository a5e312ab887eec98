//! Moving the least reliable active bit to the most reliable frozen position.

use listdec::channel::{derive_rng, SnrConvention};
use listdec::codes::CrcSpec;
use listdec::gf2::BinaryVector;
use listdec::polar::{construct_polar, prune_tree, reallocate_bits, PolarCode, PolarDecoder, PruneConfig};
use rand::Rng;

fn fer(code: &PolarCode, snr: f64, frames: u64) -> f64 {
    let ch = SnrConvention::Ebn0.channel(snr, code.rate());
    let cfg = PruneConfig {
        list_size: 8,
        l_max: Some(100),
        channel: SnrConvention::Ebn0.channel(2.0, code.rate()),
        trials: 300,
        seed: 1,
        final_list_size: 1,
    };
    let dec = PolarDecoder::new(code, &prune_tree(code, &cfg).unwrap()).unwrap();
    let mut errors = 0;
    for f in 0..frames {
        let mut rng = derive_rng(4, 0, f);
        let msg: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
        let c = code.encode(&BinaryVector::from_bits(&msg)).unwrap();
        let r = ch.transmit(&c, &mut rng);
        errors += usize::from(dec.decode(r.values()).unwrap().list[0].codeword != c);
    }
    errors as f64 / frames as f64
}

fn main() {
    let code = construct_polar(128, 64, None, Some(CrcSpec::crc11())).unwrap();
    let moved = reallocate_bits(&code, 1).unwrap();
    let gone: Vec<_> = code.active().iter().filter(|i| !moved.active().contains(i)).collect();
    let new: Vec<_> = moved.active().iter().filter(|i| !code.active().contains(i)).collect();
    println!("moved active index {gone:?} -> {new:?}");
    for snr in [2.5, 3.0] {
        println!("{snr} dB: original {:.4}  reallocated {:.4}", fer(&code, snr, 5000), fer(&moved, snr, 5000));
    }
}
