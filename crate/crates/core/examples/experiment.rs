//! A configured Monte Carlo run written as CSV to stdout.

use listdec::sim::{run_experiment, write_results, ExperimentConfig, OutputFormat};

const CONFIG: &str = r#"
seed = 1
target_errors = 50
max_frames = 20000

[code]
kind = "rm"
m = 5
r = 2

[channel]
kind = "awgn"
points = [2.0, 3.0, 4.0]

[decoder]
kind = "gcd"
list_size = 1
truncation = { l_max = 1000 }
"#;

fn main() {
    let cfg = ExperimentConfig::from_toml(CONFIG).unwrap();
    let records = run_experiment(&cfg).unwrap();
    write_results(&records, OutputFormat::Csv, std::io::stdout().lock()).unwrap();
}
