//! Partial test error patterns in increasing soft weight.

use listdec::tepgen::TepGenerator;

fn main() {
    let r = [0.9, -0.2, 1.7, 0.4, -1.1];
    for (i, tep) in TepGenerator::new(&r).take(12).enumerate() {
        let bits: String = tep.bits.to_bits().iter().map(|b| char::from(b'0' + b)).collect();
        println!("{:>2}  {bits}  {:.2}", i + 1, tep.weight);
    }
}
