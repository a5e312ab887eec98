use serde::Serialize;

use super::tree::{LeafMode, PolarTree, TreeNode};
use super::{f_update, frozen_parity_check, g_update, polar_transform, PolarCode, PolarError};
use crate::codes::Code;
use crate::decoders::{CandidateList, GcdContext};
use crate::gf2::BinaryVector;

/// Largest leaf dimension decoded by enumerating every sub-codeword.
pub const ESD_LEAF_MAX_K: usize = 16;

/// A decoded polar codeword with its path metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCandidate {
    pub u: Vec<u8>,
    pub codeword: BinaryVector,
    pub metric: f64,
    pub crc_ok: bool,
}

/// Query statistics of one leaf for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeStats {
    pub start: usize,
    pub len: usize,
    pub k: usize,
    pub mode: LeafMode,
    /// Synchronous query rounds `ℓ` executed over all live paths.
    pub steps: u64,
    /// Re-encoded partial TEPs summed over paths.
    pub queries: u64,
    pub paths_in: usize,
}

#[derive(Debug, Clone)]
pub struct SclGcdOutput {
    /// CRC-passing candidates first, each group by increasing metric.
    pub list: Vec<PolarCandidate>,
    pub stats: Vec<NodeStats>,
}

impl SclGcdOutput {
    pub fn best(&self) -> Option<&PolarCandidate> {
        self.list.first()
    }
}

/// One extension produced at a leaf from input path `parent`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafCandidate {
    pub parent: usize,
    pub beta: Vec<u8>,
    pub metric: f64,
}

#[inline]
fn off(n: usize, d: usize) -> usize {
    2 * n - 2 * (n >> d)
}

/// `Σ |α_i|` over positions where `β` disagrees with the hard decision.
#[inline]
fn leaf_metric(alpha: &[f64], beta: &[u8]) -> f64 {
    let mut s = 0.0;
    for (a, &b) in alpha.iter().zip(beta) {
        if (*a < 0.0) != (b == 1) {
            s += a.abs();
        }
    }
    s
}

#[derive(Debug, Clone)]
struct Path {
    alpha: Vec<f64>,
    left: Vec<u8>,
    beta: Vec<u8>,
    u: Vec<u8>,
    metric: f64,
    origin: usize,
}

#[derive(Debug, Clone)]
enum Plan {
    Words(Vec<Vec<u8>>),
    Gcd(Box<GcdContext>),
}

#[derive(Debug, Clone)]
struct LeafPlan {
    node: TreeNode,
    depth: usize,
    plan: Plan,
}

/// Sub-codewords `u G` over the active positions of `frozen`.
fn leaf_words(frozen: &[bool]) -> Vec<Vec<u8>> {
    let active: Vec<usize> = (0..frozen.len()).filter(|&i| !frozen[i]).collect();
    (0u64..1 << active.len())
        .map(|mask| {
            let mut u = vec![0u8; frozen.len()];
            for (b, &i) in active.iter().enumerate() {
                u[i] = ((mask >> b) & 1) as u8;
            }
            polar_transform(&mut u);
            u
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Engine {
    n: usize,
    plans: Vec<LeafPlan>,
}

struct Run<'a> {
    paths: Vec<Path>,
    next_leaf: usize,
    stats: Vec<NodeStats>,
    crc: Option<&'a dyn Fn(&[u8]) -> bool>,
    fallback: Vec<Path>,
}

impl Engine {
    fn new(frozen: &[bool], tree: &PolarTree) -> Result<Self, PolarError> {
        let n = frozen.len();
        tree.check_against(frozen)?;
        let m = n.trailing_zeros() as usize;
        let mut plans = Vec::with_capacity(tree.leaves().len());
        for node in tree.leaves() {
            let local = &frozen[node.start..node.start + node.len];
            let plan = match node.mode {
                LeafMode::Esd => {
                    if node.k > ESD_LEAF_MAX_K {
                        return Err(PolarError::InvalidTree(format!(
                            "esd leaf at {} has k={} > {ESD_LEAF_MAX_K}",
                            node.start, node.k
                        )));
                    }
                    Plan::Words(leaf_words(local))
                }
                LeafMode::Gcd => {
                    let code = Code::from_parity_check(frozen_parity_check(local))?;
                    Plan::Gcd(Box::new(GcdContext::new(&code)))
                }
            };
            let depth = m - node.len.trailing_zeros() as usize;
            plans.push(LeafPlan {
                node: node.clone(),
                depth,
                plan,
            });
        }
        Ok(Self { n, plans })
    }

    fn start_paths(&self, inputs: &[(&[f64], f64)]) -> Vec<Path> {
        let n = self.n;
        inputs
            .iter()
            .enumerate()
            .map(|(origin, (llr, metric))| {
                let mut alpha = vec![0.0; 2 * n];
                alpha[..n].copy_from_slice(llr);
                Path {
                    alpha,
                    left: vec![0; 2 * n],
                    beta: vec![0; 2 * n],
                    u: vec![0; n],
                    metric: *metric,
                    origin,
                }
            })
            .collect()
    }

    fn run<'a>(
        &self,
        paths: Vec<Path>,
        crc: Option<&'a dyn Fn(&[u8]) -> bool>,
    ) -> (Vec<Path>, Vec<Path>, Vec<NodeStats>) {
        let mut run = Run {
            paths,
            next_leaf: 0,
            stats: Vec::with_capacity(self.plans.len()),
            crc,
            fallback: Vec::new(),
        };
        self.visit(0, 0, &mut run);
        (run.paths, run.fallback, run.stats)
    }

    fn visit(&self, d: usize, start: usize, run: &mut Run<'_>) {
        let n = self.n;
        let len = n >> d;
        let plan = &self.plans[run.next_leaf];
        if plan.node.start == start && plan.node.len == len {
            let last = run.next_leaf + 1 == self.plans.len();
            run.next_leaf += 1;
            self.leaf(plan, last, run);
            return;
        }
        let h = len / 2;
        let (a, c) = (off(n, d), off(n, d + 1));
        for p in run.paths.iter_mut() {
            for i in 0..h {
                p.alpha[c + i] = f_update(p.alpha[a + i], p.alpha[a + h + i]);
            }
        }
        self.visit(d + 1, start, run);
        for p in run.paths.iter_mut() {
            p.left[a..a + h].copy_from_slice(&p.beta[c..c + h]);
            for i in 0..h {
                p.alpha[c + i] = g_update(p.alpha[a + i], p.alpha[a + h + i], p.left[a + i] == 1);
            }
        }
        self.visit(d + 1, start + h, run);
        for p in run.paths.iter_mut().chain(run.fallback.iter_mut()) {
            for i in 0..h {
                let r = p.beta[c + i];
                p.beta[a + i] = p.left[a + i] ^ r;
                p.beta[a + h + i] = r;
            }
        }
    }

    fn leaf(&self, plan: &LeafPlan, last: bool, run: &mut Run<'_>) {
        let node = &plan.node;
        let a = off(self.n, plan.depth);
        let len = node.len;
        let filter = if last { run.crc } else { None };
        let mut list: CandidateList<(usize, Vec<u8>)> = CandidateList::new(node.list_size);
        let mut rejected: CandidateList<(usize, Vec<u8>)> = CandidateList::new(node.list_size);
        let mut scratch = Vec::new();
        let mut offer = |list: &mut CandidateList<(usize, Vec<u8>)>,
                         rejected: &mut CandidateList<(usize, Vec<u8>)>,
                         p: usize,
                         path: &Path,
                         metric: f64,
                         beta: Vec<u8>| {
            match filter {
                Some(check) if metric < list.worst() || metric < rejected.worst() => {
                    scratch.clear();
                    scratch.extend_from_slice(&path.u);
                    let mut uv = beta.clone();
                    polar_transform(&mut uv);
                    scratch[node.start..node.start + len].copy_from_slice(&uv);
                    if check(&scratch) {
                        list.insert(metric, (p, beta));
                    } else {
                        rejected.insert(metric, (p, beta));
                    }
                }
                Some(_) => {}
                None => {
                    list.insert(metric, (p, beta));
                }
            }
        };
        let mut stats = NodeStats {
            start: node.start,
            len,
            k: node.k,
            mode: node.mode,
            steps: 0,
            queries: 0,
            paths_in: run.paths.len(),
        };
        match &plan.plan {
            Plan::Words(words) => {
                for (p, path) in run.paths.iter().enumerate() {
                    let alpha = &path.alpha[a..a + len];
                    for w in words {
                        let metric = path.metric + leaf_metric(alpha, w);
                        offer(&mut list, &mut rejected, p, path, metric, w.clone());
                    }
                }
                stats.steps = 1;
                stats.queries = (words.len() * run.paths.len()) as u64;
            }
            Plan::Gcd(ctx) => {
                let mut frames: Vec<_> = run.paths.iter().map(|p| ctx.frame(&p.alpha[a..a + len])).collect();
                let mut open = vec![true; frames.len()];
                let mut live = frames.len();
                while live > 0 && node.l_max.is_none_or(|lm| stats.steps < lm) {
                    stats.steps += 1;
                    for (p, path) in run.paths.iter().enumerate() {
                        if !open[p] {
                            continue;
                        }
                        let frame = &mut frames[p];
                        let stop = match frame.generator.next_sorted() {
                            None => true,
                            Some(pat) => {
                                if pat.weight + path.metric >= list.worst() {
                                    true
                                } else {
                                    stats.queries += 1;
                                    let e = ctx.reencode_sorted(frame, &pat);
                                    let beta = frame.z_sys.xor(&e);
                                    let beta = ctx.to_original(&beta).to_bits();
                                    let metric = path.metric + leaf_metric(&path.alpha[a..a + len], &beta);
                                    offer(&mut list, &mut rejected, p, path, metric, beta);
                                    false
                                }
                            }
                        };
                        if stop {
                            open[p] = false;
                            live -= 1;
                        }
                    }
                }
            }
        }
        run.stats.push(stats);
        let old = std::mem::take(&mut run.paths);
        run.paths = extend_paths(&old, list.into_vec(), node.start, plan.depth, self.n);
        if filter.is_some() {
            run.fallback = extend_paths(&old, rejected.into_vec(), node.start, plan.depth, self.n);
        }
    }
}

fn extend_paths(
    parents: &[Path],
    chosen: Vec<(f64, (usize, Vec<u8>))>,
    start: usize,
    depth: usize,
    n: usize,
) -> Vec<Path> {
    let a = off(n, depth);
    chosen
        .into_iter()
        .map(|(metric, (p, beta))| {
            let mut path = parents[p].clone();
            path.beta[a..a + beta.len()].copy_from_slice(&beta);
            let mut uv = beta;
            polar_transform(&mut uv);
            path.u[start..start + uv.len()].copy_from_slice(&uv);
            path.metric = metric;
            path
        })
        .collect()
}

/// List decoder for a fixed polar code and decoding tree.
#[derive(Debug, Clone)]
pub struct PolarDecoder {
    code: PolarCode,
    tree: PolarTree,
    engine: Engine,
}

impl PolarDecoder {
    pub fn new(code: &PolarCode, tree: &PolarTree) -> Result<Self, PolarError> {
        Ok(Self {
            code: code.clone(),
            tree: tree.clone(),
            engine: Engine::new(code.frozen_mask(), tree)?,
        })
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn tree(&self) -> &PolarTree {
        &self.tree
    }

    /// Decodes channel LLRs `r`. With a CRC, the final leaf keeps only
    /// CRC-passing extensions in the main list; failing ones are ranked after.
    pub fn decode(&self, r: &[f64]) -> Result<SclGcdOutput, PolarError> {
        let n = self.code.n();
        if r.len() != n {
            return Err(PolarError::MessageLength {
                expected: n,
                found: r.len(),
            });
        }
        let paths = self.engine.start_paths(&[(r, 0.0)]);
        let code = &self.code;
        let check = |u: &[u8]| code.crc_ok(u);
        let crc: Option<&dyn Fn(&[u8]) -> bool> = if code.crc().is_some() { Some(&check) } else { None };
        let (main, fallback, stats) = self.engine.run(paths, crc);
        let has_crc = crc.is_some();
        let list = main
            .into_iter()
            .map(|p| (p, true))
            .chain(fallback.into_iter().map(|p| (p, false)))
            .map(|(p, ok)| PolarCandidate {
                codeword: BinaryVector::from_bits(&p.beta[..n]),
                u: p.u,
                metric: p.metric,
                crc_ok: ok || !has_crc,
            })
            .collect();
        Ok(SclGcdOutput { list, stats })
    }
}

/// Bit-by-bit SCL with list size `l` at every bit.
pub fn scl_decode(r: &[f64], code: &PolarCode, l: usize) -> Result<Vec<PolarCandidate>, PolarError> {
    let tree = PolarTree::bit_tree(code, l);
    Ok(PolarDecoder::new(code, &tree)?.decode(r)?.list)
}

/// SCL decoding over `tree`, building the leaf decoders on each call.
pub fn scl_gcd_decode(r: &[f64], code: &PolarCode, tree: &PolarTree) -> Result<SclGcdOutput, PolarError> {
    PolarDecoder::new(code, tree)?.decode(r)
}

fn extend_single_leaf(
    inputs: &[(&[f64], f64)],
    frozen: &[bool],
    tree: &PolarTree,
) -> Result<Vec<LeafCandidate>, PolarError> {
    let engine = Engine::new(frozen, tree)?;
    for (llr, _) in inputs {
        if llr.len() != frozen.len() {
            return Err(PolarError::MessageLength {
                expected: frozen.len(),
                found: llr.len(),
            });
        }
    }
    let (paths, _, _) = engine.run(engine.start_paths(inputs), None);
    Ok(paths
        .into_iter()
        .map(|p| LeafCandidate {
            parent: p.origin,
            beta: p.beta[..frozen.len()].to_vec(),
            metric: p.metric,
        })
        .collect())
}

/// Extends the input paths (node LLRs and metrics) over one GCD leaf with
/// local frozen pattern `frozen`, keeping `list_size` extensions.
pub fn gcd_leaf_extend(
    inputs: &[(&[f64], f64)],
    frozen: &[bool],
    list_size: usize,
    l_max: Option<u64>,
) -> Result<Vec<LeafCandidate>, PolarError> {
    let tree = PolarTree::single_leaf(frozen, LeafMode::Gcd, list_size, l_max)?;
    extend_single_leaf(inputs, frozen, &tree)
}

/// The same extension done bit by bit, keeping `list_size` paths after each
/// bit.
pub fn scl_leaf_extend(
    inputs: &[(&[f64], f64)],
    frozen: &[bool],
    list_size: usize,
) -> Result<Vec<LeafCandidate>, PolarError> {
    let tree = PolarTree::bit_tree_for(frozen, list_size)?;
    extend_single_leaf(inputs, frozen, &tree)
}
