//! Truncated GCD on RM[64,42]: frame errors and queries under each rule.

use listdec::channel::{derive_rng, ChannelSpec};
use listdec::codes::rm_code;
use listdec::decoders::{GcdContext, TruncationConfig};
use listdec::gf2::BinaryVector;

fn main() {
    let code = rm_code(6, 3).unwrap();
    let ctx = GcdContext::new(&code);
    let ch = ChannelSpec::awgn_from_ebn0(3.5, code.rate());
    let rules = [
        ("none", TruncationConfig::default()),
        ("l_max=500", TruncationConfig::with_l_max(500)),
        ("tau_s=12", TruncationConfig::with_tau_s(12.0)),
        ("tau_p=0.01", TruncationConfig::with_tau_p(0.01)),
    ];
    let frames = 400;
    let zero = BinaryVector::zeros(code.n());
    for (name, trunc) in rules {
        let (mut errors, mut queries, mut missed) = (0, 0, 0);
        for f in 0..frames {
            let r = ch.transmit(&zero, &mut derive_rng(5, 0, f));
            let res = ctx.decode(&r, 2, &trunc, Some(&zero)).unwrap();
            errors += usize::from(!res.contains(&zero));
            missed += usize::from(res.true_tep_queried == Some(false));
            queries += res.queries;
        }
        println!(
            "{name:<11} errors {errors:>3}  not queried {missed:>3}  mean queries {:.1}",
            queries as f64 / frames as f64
        );
    }
}
