use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use listdec::analysis::{ccdf, CcdfKind, DMethod};
use listdec::channel::{LlrVector, SnrConvention};
use listdec::codes::save_code;
use listdec::polar::{
    construct_polar, load_reliability, prune_tree, reallocate_bits, time_steps_scl, time_steps_tree,
    LeafMode, PolarCode, PolarDecoder, PolarTree, PruneConfig,
};
use listdec::sim::{
    build_code, parse_crc, point_channel, run_experiment, simulate_frame, write_results, BuiltCode,
    ConfigError, ExperimentConfig, OutputFormat, PreparedDecoder, SimError,
};

#[derive(Parser)]
#[command(name = "listdec", version, about = "Soft-decision list decoding experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decode one frame of LLRs with the code and decoder of a config file.
    Decode {
        #[arg(long)]
        config: PathBuf,
        /// Comma- or space-separated LLRs; read from stdin when absent.
        #[arg(long)]
        llr: Option<String>,
    },
    /// Frame error rates over the configured channel points.
    Fer(RunArgs),
    /// Query statistics over the configured channel points.
    Queries(RunArgs),
    /// CCDF of D or Γ over random partial LLR vectors.
    Ccdf {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        snr: f64,
        #[arg(long, value_enum, default_value = "inverse-noise")]
        convention: Convention,
        /// Rate used by the Eb/N0 convention.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[arg(long, value_enum, default_value = "d")]
        kind: Kind,
        #[arg(long, value_enum, default_value = "saddlepoint")]
        method: Method,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 10.0, 100.0, 1000.0])]
        thresholds: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prune a polar decoding tree and write it in the leaf-per-line format.
    Prune {
        #[command(flatten)]
        polar: PolarArgs,
        #[arg(short = 'L', long, default_value_t = 8)]
        list_size: usize,
        #[arg(long)]
        l_max: Option<u64>,
        /// Design Eb/N0 in dB.
        #[arg(long)]
        snr: f64,
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decoding time steps of SCL and of a pruned tree.
    Latency {
        #[command(flatten)]
        polar: PolarArgs,
        #[arg(short = 'L', long, default_value_t = 32)]
        list_size: usize,
        /// Tree file; pruned at `--snr` when absent.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        l_max: Option<u64>,
        /// Eb/N0 in dB for measuring per-leaf query rounds.
        #[arg(long)]
        snr: f64,
        #[arg(long, default_value_t = 200)]
        frames: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Build a polar code and print its active set; optionally save G and H.
    Construct {
        #[command(flatten)]
        polar: PolarArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    /// Overrides the channel points.
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<f64>>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PolarArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// `crc11` or a generator polynomial.
    #[arg(long)]
    crc: Option<String>,
    /// 1-based reliability order, most reliable last.
    #[arg(long)]
    reliability: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    realloc: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Ebn0,
    InverseNoise,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    D,
    Gamma,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Saddlepoint,
}

fn config_err(field: &str, msg: impl ToString) -> SimError {
    SimError::Config(ConfigError::Invalid {
        field: field.to_string(),
        msg: msg.to_string(),
    })
}

impl PolarArgs {
    fn build(&self) -> Result<PolarCode, SimError> {
        let crc = self.crc.as_deref().map(parse_crc).transpose()?;
        let order = match &self.reliability {
            Some(p) => Some(load_reliability(p, self.n).map_err(|e| config_err("reliability", e))?),
            None => None,
        };
        let code = construct_polar(self.n, self.k, order.as_deref(), crc).map_err(|e| config_err("code", e))?;
        if self.realloc > 0 {
            reallocate_bits(&code, self.realloc).map_err(|e| config_err("realloc", e))
        } else {
            Ok(code)
        }
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, SimError> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_run(args: &RunArgs) -> Result<ExperimentConfig, SimError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.target_errors {
        cfg.target_errors = t;
    }
    if let Some(m) = args.max_frames {
        cfg.max_frames = m;
    }
    if let Some(p) = &args.points {
        cfg.channel.points = p.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_llrs(text: &str) -> Result<Vec<f64>, SimError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| config_err("llr", format!("not a number: {t}"))))
        .collect()
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.cmd {
        Cmd::Decode { config, llr } => {
            let cfg = ExperimentConfig::load(&config)?;
            let code = build_code(&cfg.code)?;
            let text = match llr {
                Some(t) => t,
                None => io::read_to_string(io::stdin())?,
            };
            let r = parse_llrs(&text)?;
            if r.len() != code.n() {
                return Err(config_err("llr", format!("expected {} values, got {}", code.n(), r.len())));
            }
            let design = point_channel(&cfg.channel, cfg.decoder.design_snr_db.unwrap_or(cfg.channel.points[0]), code.rate());
            let dec = PreparedDecoder::new(&cfg.decoder, &code, Some(design), cfg.seed)?;
            let mut out = io::stdout().lock();
            let r = LlrVector::new(r);
            match (&dec, &code) {
                (PreparedDecoder::Polar(pd), BuiltCode::Polar(_)) => {
                    let res = pd.decode(r.values())?;
                    for c in &res.list {
                        writeln!(out, "{} {:.6} crc_ok={}", c.codeword, c.metric, c.crc_ok)?;
                    }
                    let q: u64 = res.stats.iter().map(|s| s.queries).sum();
                    writeln!(out, "queries {q}")?;
                }
                _ => {
                    let res = decode_block(&dec, &r)?;
                    for c in &res.list {
                        writeln!(out, "{} {:.6}", c.codeword, c.weight)?;
                    }
                    writeln!(out, "queries {} stop {}", res.queries, res.stop_reason.as_str())?;
                }
            }
        }
        Cmd::Fer(args) => {
            let cfg = load_run(&args)?;
            let recs = run_experiment(&cfg)?;
            write_results(&recs, args.format, output(&args.out)?)?;
        }
        Cmd::Queries(args) => {
            let cfg = load_run(&args)?;
            let recs = run_experiment(&cfg)?;
            if args.out.is_some() {
                write_results(&recs, args.format, output(&args.out)?)?;
            } else {
                let mut out = io::stdout().lock();
                writeln!(out, "point,frames,mean_queries,queries_stderr,p50,p90,p99,max")?;
                for r in &recs {
                    writeln!(
                        out,
                        "{},{},{:.6},{:.6},{},{},{},{}",
                        r.point, r.frames, r.mean_queries, r.queries_stderr, r.p50_queries, r.p90_queries, r.p99_queries, r.max_queries
                    )?;
                }
            }
        }
        Cmd::Ccdf {
            k,
            snr,
            convention,
            rate,
            kind,
            method,
            thresholds,
            trials,
            seed,
            out,
        } => {
            if k == 0 || trials == 0 || !(rate > 0.0) {
                return Err(config_err("ccdf", "k, trials and rate must be positive"));
            }
            let conv = match convention {
                Convention::Ebn0 => SnrConvention::Ebn0,
                Convention::InverseNoise => SnrConvention::InverseNoise,
            };
            let kind = match kind {
                Kind::D => CcdfKind::D,
                Kind::Gamma => CcdfKind::Gamma,
            };
            let method = match method {
                Method::Exact => DMethod::Exact,
                Method::Saddlepoint => DMethod::Saddlepoint,
            };
            let mut curve = ccdf(kind, k, &conv.channel(snr, rate), &thresholds, trials, seed, method);
            curve.snr = Some(snr);
            curve.write_csv(output(&out)?)?;
        }
        Cmd::Prune {
            polar,
            list_size,
            l_max,
            snr,
            trials,
            seed,
            out,
        } => {
            let code = polar.build()?;
            let tree = prune_tree(
                &code,
                &PruneConfig {
                    list_size,
                    l_max,
                    channel: SnrConvention::Ebn0.channel(snr, code.rate()),
                    trials,
                    seed,
                    final_list_size: 1,
                },
            )?;
            let mut w = output(&out)?;
            write!(w, "{}", tree.to_text())?;
            w.flush()?;
            eprintln!(
                "{} leaves: {} gcd, {} esd (multi-bit)",
                tree.leaves().len(),
                tree.count(LeafMode::Gcd),
                tree.count(LeafMode::Esd)
            );
        }
        Cmd::Latency {
            polar,
            list_size,
            tree,
            l_max,
            snr,
            frames,
            seed,
        } => {
            let code = polar.build()?;
            let ch = SnrConvention::Ebn0.channel(snr, code.rate());
            let tree = match tree {
                Some(p) => PolarTree::load(p)?,
                None => prune_tree(
                    &code,
                    &PruneConfig {
                        list_size,
                        l_max,
                        channel: ch,
                        trials: 500,
                        seed,
                        final_list_size: 1,
                    },
                )?,
            };
            let dec = PreparedDecoder::Polar(Box::new(PolarDecoder::new(&code, &tree)?));
            let built = BuiltCode::Polar(code.clone());
            let mut total = 0.0;
            for f in 0..frames.max(1) {
                let o = simulate_frame(&built, &ch, &dec, seed, 0, f)?;
                total += o.time_steps.unwrap_or(0.0);
            }
            let genie: Vec<f64> = tree.leaves().iter().map(|l| l.l_avg.unwrap_or(1.0)).collect();
            println!("scl {}", time_steps_scl(code.n(), code.active().len()));
            if tree.leaves().iter().all(|l| l.l_avg.is_some()) {
                println!("tree_genie {:.2}", time_steps_tree(&tree, list_size, &genie));
            }
            println!("tree_measured {:.2}", total / frames.max(1) as f64);
        }
        Cmd::Construct { polar, out } => {
            let code = polar.build()?;
            println!("{code}");
            let active: Vec<String> = code.active().iter().map(|i| i.to_string()).collect();
            println!("active {}", active.join(" "));
            if let Some(p) = out {
                save_code(code.code(), p).map_err(|e| SimError::Io(io::Error::other(e.to_string())))?;
            }
        }
    }
    Ok(())
}

fn decode_block(dec: &PreparedDecoder, r: &LlrVector) -> Result<listdec::decoders::DecodeResult, SimError> {
    use listdec::decoders::{gnd_decode, DecodeError};
    Ok(match dec {
        PreparedDecoder::Gcd { ctx, l, trunc } => ctx.decode(r, *l, trunc, None)?,
        PreparedDecoder::Parallel {
            ctx,
            l,
            delta_bits,
            trunc,
        } => ctx.decode_parallel(r, *l, *delta_bits, trunc)?,
        PreparedDecoder::Gnd { code, l, l_max } => match gnd_decode(r, code, *l, *l_max) {
            Err(DecodeError::Exhausted(res)) => *res,
            other => other?,
        },
        PreparedDecoder::Esd { ctx, l } => ctx.decode_exhaustive(r, *l)?,
        PreparedDecoder::Polar(_) => unreachable!("handled by caller"),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SimError::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
