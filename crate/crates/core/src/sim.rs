//! Monte Carlo frame-error and query-count experiments.
//!
//! Configuration is TOML:
//!
//! ```toml
//! seed = 1
//! target_errors = 100
//! max_frames = 1000000
//!
//! [code]
//! kind = "rm"
//! m = 6
//! r = 3
//!
//! [channel]
//! kind = "awgn"
//! points = [3.0, 3.5]
//!
//! [decoder]
//! kind = "gcd"
//! list_size = 2
//! truncation = { l_max = 200 }
//! ```
//!
//! Every frame draws its message and noise from `derive_rng(seed, point, frame)`,
//! so results do not depend on thread count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{derive_rng, ChannelSpec, LlrVector, SnrConvention};
use crate::codes::{hamming_code, load_code, random_code, rm_code, Code, CrcSpec};
use crate::decoders::{gnd_decode, DecodeError, DecodeResult, GcdContext, StopReason, TruncationConfig};
use crate::gf2::BinaryVector;
use crate::polar::{
    construct_polar, load_reliability, prune_tree, reallocate_bits, time_steps_tree, LeafMode,
    PolarCode, PolarDecoder, PolarError, PolarTree, PruneConfig,
};

/// A configuration problem, reported with the offending field.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {msg}")]
    Invalid { field: String, msg: String },
}

impl ConfigError {
    fn invalid(field: &str, msg: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CodeSpec {
    Hamming {
        m: usize,
    },
    Rm {
        m: usize,
        r: usize,
    },
    Random {
        n: usize,
        k: usize,
        #[serde(default)]
        seed: u64,
    },
    File {
        path: PathBuf,
    },
    Polar {
        n: usize,
        k: usize,
        /// `"crc11"` or a generator polynomial, highest degree first.
        #[serde(default)]
        crc: Option<String>,
        /// 1-based reliability file; the built-in order when absent.
        #[serde(default)]
        reliability: Option<PathBuf>,
        /// Number of bits moved by [`reallocate_bits`].
        #[serde(default)]
        realloc: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    Bsc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    /// SNR in dB for AWGN, crossover probability for BSC.
    pub points: Vec<f64>,
    #[serde(default)]
    pub snr_convention: SnrConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Gcd,
    ParallelGcd,
    Gnd,
    Esd,
    Scl,
    SclGcd,
}

impl DecoderKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecoderKind::Gcd => "gcd",
            DecoderKind::ParallelGcd => "parallel_gcd",
            DecoderKind::Gnd => "gnd",
            DecoderKind::Esd => "esd",
            DecoderKind::Scl => "scl",
            DecoderKind::SclGcd => "scl_gcd",
        }
    }

    pub fn is_polar(&self) -> bool {
        matches!(self, DecoderKind::Scl | DecoderKind::SclGcd)
    }
}

fn one() -> usize {
    1
}

fn default_prune_trials() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderConfig {
    pub kind: DecoderKind,
    #[serde(default = "one")]
    pub list_size: usize,
    /// GCD truncation; `l_max` also caps GND and the GCD leaves of a pruned
    /// tree.
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub delta_bits: usize,
    /// Pruned tree file for `scl_gcd`; pruned on the fly when absent.
    #[serde(default)]
    pub tree: Option<PathBuf>,
    /// Design SNR for on-the-fly pruning; the first channel point when absent.
    #[serde(default)]
    pub design_snr_db: Option<f64>,
    #[serde(default = "default_prune_trials")]
    pub prune_trials: u64,
}

fn default_target() -> u64 {
    100
}

fn default_max_frames() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_target")]
    pub target_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    pub code: CodeSpec,
    pub channel: ChannelConfig,
    pub decoder: DecoderConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_frames == 0 {
            return Err(ConfigError::invalid("max_frames", "must be at least 1"));
        }
        if self.target_errors == 0 {
            return Err(ConfigError::invalid("target_errors", "must be at least 1"));
        }
        if self.channel.points.is_empty() {
            return Err(ConfigError::invalid("channel.points", "no channel points given"));
        }
        for &p in &self.channel.points {
            let ok = match self.channel.kind {
                ChannelKind::Awgn => p.is_finite(),
                ChannelKind::Bsc => p > 0.0 && p < 0.5,
            };
            if !ok {
                return Err(ConfigError::invalid("channel.points", format!("bad point {p}")));
            }
        }
        let d = &self.decoder;
        if d.list_size == 0 {
            return Err(ConfigError::invalid("decoder.list_size", "must be at least 1"));
        }
        d.truncation
            .validate()
            .map_err(|e| ConfigError::invalid("decoder.truncation", e.to_string()))?;
        let polar_code = matches!(self.code, CodeSpec::Polar { .. });
        if d.kind.is_polar() && !polar_code {
            return Err(ConfigError::invalid(
                "decoder.kind",
                format!("{} needs a polar code", d.kind.as_str()),
            ));
        }
        if d.kind.is_polar() && self.channel.kind != ChannelKind::Awgn && d.tree.is_none() {
            return Err(ConfigError::invalid("decoder.tree", "pruning needs an AWGN channel"));
        }
        if d.prune_trials == 0 {
            return Err(ConfigError::invalid("decoder.prune_trials", "must be at least 1"));
        }
        Ok(())
    }
}

pub fn parse_crc(s: &str) -> Result<CrcSpec, ConfigError> {
    match s {
        "crc11" => Ok(CrcSpec::crc11()),
        other => other
            .parse()
            .map_err(|e: crate::codes::CodeError| ConfigError::invalid("code.crc", e.to_string())),
    }
}

/// The code an experiment runs on.
#[derive(Debug, Clone)]
pub enum BuiltCode {
    Block(Code),
    Polar(PolarCode),
}

impl BuiltCode {
    pub fn n(&self) -> usize {
        match self {
            BuiltCode::Block(c) => c.n(),
            BuiltCode::Polar(p) => p.n(),
        }
    }

    /// Message bits per frame.
    pub fn k(&self) -> usize {
        match self {
            BuiltCode::Block(c) => c.k(),
            BuiltCode::Polar(p) => p.k(),
        }
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn linear(&self) -> &Code {
        match self {
            BuiltCode::Block(c) => c,
            BuiltCode::Polar(p) => p.code(),
        }
    }

    fn encode(&self, msg: &BinaryVector) -> BinaryVector {
        match self {
            BuiltCode::Block(c) => c.encode(msg),
            BuiltCode::Polar(p) => p.encode(msg).expect("message length matches"),
        }
    }
}

pub fn build_code(spec: &CodeSpec) -> Result<BuiltCode, ConfigError> {
    let code_err = |e: crate::codes::CodeError| ConfigError::invalid("code", e.to_string());
    let polar_err = |e: PolarError| ConfigError::invalid("code", e.to_string());
    Ok(match spec {
        CodeSpec::Hamming { m } => BuiltCode::Block(hamming_code(*m).map_err(code_err)?),
        CodeSpec::Rm { m, r } => BuiltCode::Block(rm_code(*m, *r).map_err(code_err)?),
        CodeSpec::Random { n, k, seed } => BuiltCode::Block(random_code(*n, *k, *seed).map_err(code_err)?),
        CodeSpec::File { path } => BuiltCode::Block(load_code(path).map_err(code_err)?),
        CodeSpec::Polar {
            n,
            k,
            crc,
            reliability,
            realloc,
        } => {
            let crc = crc.as_deref().map(parse_crc).transpose()?;
            let order = reliability
                .as_ref()
                .map(|p| load_reliability(p, *n))
                .transpose()
                .map_err(polar_err)?;
            let code = construct_polar(*n, *k, order.as_deref(), crc).map_err(polar_err)?;
            let code = if *realloc > 0 {
                reallocate_bits(&code, *realloc).map_err(polar_err)?
            } else {
                code
            };
            BuiltCode::Polar(code)
        }
    })
}

/// Aggregated results for one channel point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub decoder: String,
    pub channel: String,
    pub point: f64,
    pub frames: u64,
    pub errors: u64,
    pub fer: f64,
    pub fer_stderr: f64,
    pub mean_queries: f64,
    pub queries_stderr: f64,
    pub p50_queries: u64,
    pub p90_queries: u64,
    pub p99_queries: u64,
    pub max_queries: u64,
    pub mean_emissions: f64,
    pub mean_time_steps: Option<f64>,
    /// Frames whose true partial TEP was never queried (GCD only).
    pub not_queried: u64,
    pub stop_optimal: u64,
    pub stop_l_max: u64,
    pub stop_tau_s: u64,
    pub stop_tau_p: u64,
    pub stop_exhausted: u64,
}

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 21] = [
    "decoder",
    "channel",
    "point",
    "frames",
    "errors",
    "fer",
    "fer_stderr",
    "mean_queries",
    "queries_stderr",
    "p50_queries",
    "p90_queries",
    "p99_queries",
    "max_queries",
    "mean_emissions",
    "mean_time_steps",
    "not_queried",
    "stop_optimal",
    "stop_l_max",
    "stop_tau_s",
    "stop_tau_p",
    "stop_exhausted",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

pub fn write_results<W: Write>(records: &[SummaryRecord], format: OutputFormat, w: W) -> Result<(), SimError> {
    match format {
        OutputFormat::Csv => {
            let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            wr.write_record(CSV_COLUMNS)?;
            for r in records {
                wr.serialize(r)?;
            }
            wr.flush()?;
        }
        OutputFormat::Jsonl => {
            let mut w = w;
            for r in records {
                serde_json::to_writer(&mut w, r)?;
                writeln!(w)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn emit_results(records: &[SummaryRecord], format: OutputFormat, path: impl AsRef<Path>) -> Result<(), SimError> {
    write_results(records, format, BufWriter::new(File::create(path)?))
}

/// A decoder prepared once per channel point.
pub enum PreparedDecoder {
    Gcd {
        ctx: GcdContext,
        l: usize,
        trunc: TruncationConfig,
    },
    Parallel {
        ctx: GcdContext,
        l: usize,
        delta_bits: usize,
        trunc: TruncationConfig,
    },
    Gnd {
        code: Code,
        l: usize,
        l_max: Option<u64>,
    },
    Esd {
        ctx: GcdContext,
        l: usize,
    },
    Polar(Box<PolarDecoder>),
}

/// What one frame contributed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOutcome {
    pub error: bool,
    pub queries: u64,
    pub emissions: u64,
    pub time_steps: Option<f64>,
    pub stop: Option<StopReason>,
    pub not_queried: bool,
}

impl PreparedDecoder {
    pub fn new(cfg: &DecoderConfig, code: &BuiltCode, design: Option<ChannelSpec>, seed: u64) -> Result<Self, SimError> {
        let l = cfg.list_size;
        let trunc = cfg.truncation;
        Ok(match cfg.kind {
            DecoderKind::Gcd => PreparedDecoder::Gcd {
                ctx: GcdContext::new(code.linear()),
                l,
                trunc,
            },
            DecoderKind::ParallelGcd => PreparedDecoder::Parallel {
                ctx: GcdContext::new(code.linear()),
                l,
                delta_bits: cfg.delta_bits,
                trunc,
            },
            DecoderKind::Gnd => PreparedDecoder::Gnd {
                code: code.linear().clone(),
                l,
                l_max: trunc.l_max,
            },
            DecoderKind::Esd => {
                let k = code.linear().k();
                if k > crate::decoders::ESD_MAX_K {
                    return Err(DecodeError::TooLarge {
                        k,
                        max: crate::decoders::ESD_MAX_K,
                    }
                    .into());
                }
                PreparedDecoder::Esd {
                    ctx: GcdContext::new(code.linear()),
                    l,
                }
            }
            DecoderKind::Scl | DecoderKind::SclGcd => {
                let BuiltCode::Polar(pc) = code else {
                    return Err(ConfigError::invalid("decoder.kind", "needs a polar code").into());
                };
                let tree = if cfg.kind == DecoderKind::Scl {
                    PolarTree::bit_tree(pc, l)
                } else if let Some(path) = &cfg.tree {
                    PolarTree::load(path)?
                } else {
                    let channel = design.ok_or_else(|| ConfigError::invalid("decoder.design_snr_db", "no design channel"))?;
                    prune_tree(
                        pc,
                        &PruneConfig {
                            list_size: l,
                            l_max: trunc.l_max,
                            channel,
                            trials: cfg.prune_trials,
                            seed,
                            final_list_size: 1,
                        },
                    )?
                };
                PreparedDecoder::Polar(Box::new(PolarDecoder::new(pc, &tree)?))
            }
        })
    }

    pub fn frame(&self, r: &LlrVector, sent: &BinaryVector) -> Result<FrameOutcome, SimError> {
        let block = |res: DecodeResult| FrameOutcome {
            error: !res.contains(sent),
            queries: res.queries,
            emissions: res.emissions,
            time_steps: None,
            stop: Some(res.stop_reason),
            not_queried: res.true_tep_queried == Some(false),
        };
        Ok(match self {
            PreparedDecoder::Gcd { ctx, l, trunc } => block(ctx.decode(r, *l, trunc, Some(sent))?),
            PreparedDecoder::Parallel {
                ctx,
                l,
                delta_bits,
                trunc,
            } => block(ctx.decode_parallel(r, *l, *delta_bits, trunc)?),
            PreparedDecoder::Gnd { code, l, l_max } => match gnd_decode(r, code, *l, *l_max) {
                Ok(res) => block(res),
                Err(DecodeError::Exhausted(res)) => block(*res),
                Err(e) => return Err(e.into()),
            },
            PreparedDecoder::Esd { ctx, l } => block(ctx.decode_exhaustive(r, *l)?),
            PreparedDecoder::Polar(dec) => {
                let out = dec.decode(r.values())?;
                let tree = dec.tree();
                let l = tree.leaves().iter().map(|x| x.list_size).max().unwrap_or(1);
                let steps: Vec<f64> = out.stats.iter().map(|s| s.steps as f64).collect();
                let queries = out
                    .stats
                    .iter()
                    .filter(|s| s.mode == LeafMode::Gcd)
                    .map(|s| s.queries)
                    .sum();
                FrameOutcome {
                    error: out.best().is_none_or(|c| &c.codeword != sent),
                    queries,
                    emissions: queries,
                    time_steps: Some(time_steps_tree(tree, l, &steps)),
                    stop: None,
                    not_queried: false,
                }
            }
        })
    }
}

/// Channel for a configured point.
pub fn point_channel(cfg: &ChannelConfig, point: f64, rate: f64) -> ChannelSpec {
    match cfg.kind {
        ChannelKind::Awgn => cfg.snr_convention.channel(point, rate),
        ChannelKind::Bsc => ChannelSpec::Bsc { p: point },
    }
}

/// Encodes a random message, transmits it and decodes; frame `f` of point
/// `idx` always sees the same message and noise.
pub fn simulate_frame(
    code: &BuiltCode,
    ch: &ChannelSpec,
    dec: &PreparedDecoder,
    seed: u64,
    idx: u64,
    f: u64,
) -> Result<FrameOutcome, SimError> {
    let mut rng = derive_rng(seed, idx, f);
    let msg: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
    let c = code.encode(&BinaryVector::from_bits(&msg));
    let r = ch.transmit(&c, &mut rng);
    dec.frame(&r, &c)
}

const CHUNK: u64 = 256;

fn summarize(decoder: &str, channel: &str, point: f64, outcomes: &[FrameOutcome]) -> SummaryRecord {
    let frames = outcomes.len() as u64;
    let nf = frames.max(1) as f64;
    let errors = outcomes.iter().filter(|o| o.error).count() as u64;
    let fer = errors as f64 / nf;
    let mut q: Vec<u64> = outcomes.iter().map(|o| o.queries).collect();
    q.sort_unstable();
    let mean_q = q.iter().sum::<u64>() as f64 / nf;
    let var_q = q.iter().map(|&x| (x as f64 - mean_q).powi(2)).sum::<f64>() / (nf - 1.0).max(1.0);
    let pct = |p: f64| -> u64 {
        if q.is_empty() {
            return 0;
        }
        let i = ((p * q.len() as f64).ceil() as usize).clamp(1, q.len()) - 1;
        q[i]
    };
    let steps: Vec<f64> = outcomes.iter().filter_map(|o| o.time_steps).collect();
    let stop = |s: StopReason| outcomes.iter().filter(|o| o.stop == Some(s)).count() as u64;
    SummaryRecord {
        decoder: decoder.to_string(),
        channel: channel.to_string(),
        point,
        frames,
        errors,
        fer,
        fer_stderr: (fer * (1.0 - fer) / nf).sqrt(),
        mean_queries: mean_q,
        queries_stderr: (var_q / nf).sqrt(),
        p50_queries: pct(0.5),
        p90_queries: pct(0.9),
        p99_queries: pct(0.99),
        max_queries: q.last().copied().unwrap_or(0),
        mean_emissions: outcomes.iter().map(|o| o.emissions).sum::<u64>() as f64 / nf,
        mean_time_steps: (!steps.is_empty()).then(|| steps.iter().sum::<f64>() / steps.len() as f64),
        not_queried: outcomes.iter().filter(|o| o.not_queried).count() as u64,
        stop_optimal: stop(StopReason::Optimal),
        stop_l_max: stop(StopReason::LMax),
        stop_tau_s: stop(StopReason::TauS),
        stop_tau_p: stop(StopReason::TauP),
        stop_exhausted: stop(StopReason::Exhausted),
    }
}

/// Runs frames in fixed-size chunks until `target_errors` errors or
/// `max_frames` frames, whichever comes first at a chunk boundary.
pub fn run_point(
    code: &BuiltCode,
    ch: &ChannelSpec,
    dec: &PreparedDecoder,
    seed: u64,
    idx: u64,
    target_errors: u64,
    max_frames: u64,
) -> Result<Vec<FrameOutcome>, SimError> {
    let mut outcomes: Vec<FrameOutcome> = Vec::new();
    let mut errors = 0;
    while errors < target_errors && (outcomes.len() as u64) < max_frames {
        let lo = outcomes.len() as u64;
        let hi = (lo + CHUNK).min(max_frames);
        let chunk: Vec<FrameOutcome> = (lo..hi)
            .into_par_iter()
            .map(|f| simulate_frame(code, ch, dec, seed, idx, f))
            .collect::<Result<_, _>>()?;
        errors += chunk.iter().filter(|o| o.error).count() as u64;
        outcomes.extend(chunk);
    }
    Ok(outcomes)
}

/// One summary per channel point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SummaryRecord>, SimError> {
    cfg.validate()?;
    let code = build_code(&cfg.code)?;
    let rate = code.rate();
    let design = match cfg.channel.kind {
        ChannelKind::Awgn => {
            let snr = cfg.decoder.design_snr_db.unwrap_or(cfg.channel.points[0]);
            Some(cfg.channel.snr_convention.channel(snr, rate))
        }
        ChannelKind::Bsc => None,
    };
    let dec = PreparedDecoder::new(&cfg.decoder, &code, design, cfg.seed)?;
    let channel = match cfg.channel.kind {
        ChannelKind::Awgn => "awgn",
        ChannelKind::Bsc => "bsc",
    };
    let mut out = Vec::with_capacity(cfg.channel.points.len());
    for (idx, &point) in cfg.channel.points.iter().enumerate() {
        let ch = point_channel(&cfg.channel, point, rate);
        let outcomes = run_point(&code, &ch, &dec, cfg.seed, idx as u64, cfg.target_errors, cfg.max_frames)?;
        out.push(summarize(cfg.decoder.kind.as_str(), channel, point, &outcomes));
    }
    Ok(out)
}
