//! SCL and SCL-by-GCD over a pruned tree on the 5G polar code C[128,64]
//! with CRC-11.

use listdec::channel::{derive_rng, SnrConvention};
use listdec::codes::CrcSpec;
use listdec::gf2::BinaryVector;
use listdec::polar::{construct_polar, prune_tree, PolarDecoder, PolarTree, PruneConfig};
use rand::Rng;

fn main() {
    let code = construct_polar(128, 64, None, Some(CrcSpec::crc11())).unwrap();
    let snr = 2.5;
    let ch = SnrConvention::Ebn0.channel(snr, code.rate());
    let cfg = PruneConfig {
        list_size: 8,
        l_max: Some(100),
        channel: ch,
        trials: 500,
        seed: 1,
        final_list_size: 1,
    };
    let tree = prune_tree(&code, &cfg).unwrap();
    print!("pruned tree (start len k mode L l_max):\n{tree}");
    let gcd = PolarDecoder::new(&code, &tree).unwrap();
    let scl = PolarDecoder::new(&code, &PolarTree::bit_tree(&code, 8)).unwrap();
    let frames = 2000;
    let (mut e_gcd, mut e_scl, mut queries) = (0, 0, 0);
    for f in 0..frames {
        let mut rng = derive_rng(9, 0, f);
        let msg: Vec<u8> = (0..64).map(|_| rng.random_range(0..2u8)).collect();
        let c = code.encode(&BinaryVector::from_bits(&msg)).unwrap();
        let r = ch.transmit(&c, &mut rng);
        let out = gcd.decode(r.values()).unwrap();
        queries += out.stats.iter().map(|s| s.queries).sum::<u64>();
        e_gcd += usize::from(out.list[0].codeword != c);
        e_scl += usize::from(scl.decode(r.values()).unwrap().list[0].codeword != c);
    }
    println!("{snr} dB, {frames} frames: SCL errors {e_scl}, SCL-GCD errors {e_gcd}");
    println!("mean GCD queries per frame {:.1}", queries as f64 / frames as f64);
}
