//! Decoding time steps for N = 128 and L = 32: bit-wise SCL against pruned
//! trees with genie query estimates.

use listdec::channel::SnrConvention;
use listdec::codes::CrcSpec;
use listdec::polar::{construct_polar, prune_tree, time_steps_scl, time_steps_tree, PruneConfig};

fn main() {
    println!("K    SCL   tree@3.0dB  tree@4.5dB");
    for k in [32, 64, 96] {
        let code = construct_polar(128, k, None, Some(CrcSpec::crc11())).unwrap();
        let scl = time_steps_scl(code.n(), code.active().len());
        let tree_steps = |snr: f64| {
            let cfg = PruneConfig {
                list_size: 32,
                l_max: Some(100),
                channel: SnrConvention::Ebn0.channel(snr, code.rate()),
                trials: 300,
                seed: 1,
                final_list_size: 1,
            };
            let tree = prune_tree(&code, &cfg).unwrap();
            let l_avg: Vec<f64> = tree.leaves().iter().map(|l| l.l_avg.unwrap_or(1.0)).collect();
            time_steps_tree(&tree, 32, &l_avg)
        };
        println!("{k:<4} {scl:<5} {:<11.1} {:.1}", tree_steps(3.0), tree_steps(4.5));
    }
}
