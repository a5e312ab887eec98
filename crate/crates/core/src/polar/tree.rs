use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{frozen_parity_check, PolarCode, PolarError};
use crate::channel::{derive_rng, ChannelSpec};
use crate::codes::Code;
use crate::decoders::GcdContext;
use crate::gf2::BinaryVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafMode {
    Gcd,
    Esd,
}

impl LeafMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LeafMode::Gcd => "gcd",
            LeafMode::Esd => "esd",
        }
    }
}

impl FromStr for LeafMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gcd" => Ok(LeafMode::Gcd),
            "esd" => Ok(LeafMode::Esd),
            other => Err(format!("unknown leaf mode {other:?}")),
        }
    }
}

/// A leaf of a pruned decoding tree covering `u[start..start + len]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub level: usize,
    pub start: usize,
    pub len: usize,
    pub k: usize,
    pub mode: LeafMode,
    pub list_size: usize,
    pub l_max: Option<u64>,
    /// Genie query estimate from pruning; not persisted.
    pub l_avg: Option<f64>,
}

/// Leaves of a decoding tree in left-to-right order. Internal nodes are
/// implied by the leaf spans.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarTree {
    n: usize,
    leaves: Vec<TreeNode>,
}

impl PolarTree {
    /// Checks that the leaves are aligned dyadic blocks tiling `0..n`.
    pub fn new(n: usize, mut leaves: Vec<TreeNode>) -> Result<Self, PolarError> {
        if !n.is_power_of_two() {
            return Err(PolarError::InvalidLength(n));
        }
        let m = n.trailing_zeros() as usize;
        leaves.sort_by_key(|l| l.start);
        let mut next = 0;
        for leaf in &mut leaves {
            if leaf.start != next {
                return Err(PolarError::InvalidTree(format!("gap or overlap at index {next}")));
            }
            if !leaf.len.is_power_of_two() || leaf.start % leaf.len != 0 || leaf.len > n {
                return Err(PolarError::InvalidTree(format!(
                    "leaf {}+{} is not an aligned power-of-two block",
                    leaf.start, leaf.len
                )));
            }
            if leaf.list_size == 0 {
                return Err(PolarError::InvalidTree(format!("leaf at {} has list size 0", leaf.start)));
            }
            leaf.level = m - leaf.len.trailing_zeros() as usize;
            next += leaf.len;
        }
        if next != n {
            return Err(PolarError::InvalidTree(format!("leaves cover {next} of {n} positions")));
        }
        Ok(Self { n, leaves })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn leaves(&self) -> &[TreeNode] {
        &self.leaves
    }

    pub fn leaves_mut(&mut self) -> &mut [TreeNode] {
        &mut self.leaves
    }

    pub fn count(&self, mode: LeafMode) -> usize {
        self.leaves.iter().filter(|l| l.mode == mode && l.len > 1).count()
    }

    /// Leaves with more than one bit.
    pub fn multi_bit_leaves(&self) -> usize {
        self.leaves.iter().filter(|l| l.len > 1).count()
    }

    /// Checks length and per-leaf dimensions against a frozen mask.
    pub fn check_against(&self, frozen: &[bool]) -> Result<(), PolarError> {
        if frozen.len() != self.n {
            return Err(PolarError::InvalidTree(format!(
                "tree length {} does not match code length {}",
                self.n,
                frozen.len()
            )));
        }
        for leaf in &self.leaves {
            let k = frozen[leaf.start..leaf.start + leaf.len].iter().filter(|&&f| !f).count();
            if k != leaf.k {
                return Err(PolarError::InvalidTree(format!(
                    "leaf at {} declares k={} but covers {k} active bits",
                    leaf.start, leaf.k
                )));
            }
        }
        Ok(())
    }

    /// Single-bit leaves with list size `l`: plain SCL.
    pub fn bit_tree(code: &PolarCode, l: usize) -> PolarTree {
        Self::bit_tree_for(code.frozen_mask(), l).expect("code length is a power of two")
    }

    pub fn bit_tree_for(frozen: &[bool], l: usize) -> Result<PolarTree, PolarError> {
        let leaves = frozen
            .iter()
            .enumerate()
            .map(|(i, &f)| TreeNode {
                level: 0,
                start: i,
                len: 1,
                k: usize::from(!f),
                mode: LeafMode::Esd,
                list_size: l,
                l_max: None,
                l_avg: None,
            })
            .collect();
        PolarTree::new(frozen.len(), leaves)
    }

    /// A tree whose root is its only leaf.
    pub fn single_leaf(
        frozen: &[bool],
        mode: LeafMode,
        l: usize,
        l_max: Option<u64>,
    ) -> Result<PolarTree, PolarError> {
        PolarTree::new(
            frozen.len(),
            vec![TreeNode {
                level: 0,
                start: 0,
                len: frozen.len(),
                k: frozen.iter().filter(|&&f| !f).count(),
                mode,
                list_size: l,
                l_max,
                l_avg: None,
            }],
        )
    }

    /// Sets the list size of the last leaf.
    pub fn with_final_list_size(mut self, l: usize) -> Self {
        if let Some(last) = self.leaves.last_mut() {
            last.list_size = l.max(1);
        }
        self
    }

    /// One line per leaf: `start len k mode L_i l_max`, `l_max` 0 when
    /// unbounded.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<PolarTree, PolarError> {
        let mut leaves = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| PolarError::Parse { line: i + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<u64>().map_err(|_| err(format!("not a number: {s}")));
            let l_max = num(f[5])?;
            leaves.push(TreeNode {
                level: 0,
                start: num(f[0])? as usize,
                len: num(f[1])? as usize,
                k: num(f[2])? as usize,
                mode: f[3].parse().map_err(err)?,
                list_size: num(f[4])? as usize,
                l_max: (l_max > 0).then_some(l_max),
                l_avg: None,
            });
        }
        let n = leaves.iter().map(|l| l.len).sum();
        PolarTree::new(n, leaves)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PolarError> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PolarTree, PolarError> {
        PolarTree::from_text(&std::fs::read_to_string(path)?)
    }
}

impl fmt::Display for PolarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.leaves {
            writeln!(
                f,
                "{} {} {} {} {} {}",
                l.start,
                l.len,
                l.k,
                l.mode.as_str(),
                l.list_size,
                l.l_max.unwrap_or(0)
            )?;
        }
        Ok(())
    }
}

fn lg(x: f64) -> f64 {
    x.max(1.0).log2()
}

/// Cost of extending `l` paths bit by bit over a node `C[n, k]`: sorting,
/// f/g updates and partial-sum transforms.
pub fn scl_cost(n: usize, k: usize, l: usize) -> f64 {
    let (n, k, l) = (n as f64, k as f64, l as f64);
    2.0 * k * l * lg(2.0 * l) + l * n * lg(n) + l * (n / 2.0) * lg(n)
}

/// Cost of `l` parallel GCD processors averaging `l_avg` queries on `C[n, k]`.
pub fn gcd_cost(n: usize, k: usize, l: usize, l_avg: f64) -> f64 {
    let (n, k, l) = (n as f64, k as f64, l as f64);
    l * k * lg(k) + l_avg * (l * lg(l_avg) + lg(l) + l * k) + l * l_avg * (n - k)
}

/// Smallest mean query count at which GCD is no cheaper than SCL on
/// `C[n, k]`.
fn break_even_queries(n: usize, k: usize, l: usize) -> f64 {
    let scl = scl_cost(n, k, l);
    let mut hi = 2f64.powi(k.min(60) as i32) + 1.0;
    if gcd_cost(n, k, l, hi) < scl {
        return f64::INFINITY;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gcd_cost(n, k, l, mid) < scl {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Mean genie query count of GCD with list size `l` on `code` when the
/// all-zero codeword is sent over `ch`.
pub fn genie_avg_queries(
    code: &Code,
    ch: &ChannelSpec,
    l: usize,
    l_max: Option<u64>,
    trials: u64,
    seed: u64,
) -> f64 {
    let ctx = GcdContext::new(code);
    let zero = BinaryVector::zeros(code.n());
    let total: u64 = (0..trials.max(1))
        .map(|t| {
            let mut rng = derive_rng(seed, 0, t);
            let r = ch.transmit(&zero, &mut rng);
            ctx.genie_queries(r.values(), l, l_max)
        })
        .sum();
    total as f64 / trials.max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PruneConfig {
    pub list_size: usize,
    #[serde(default)]
    pub l_max: Option<u64>,
    /// Channel at the design SNR.
    pub channel: ChannelSpec,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_final")]
    pub final_list_size: usize,
}

fn default_final() -> usize {
    1
}

/// Node LLRs under the all-zero codeword with a genie-correct prefix, stored
/// per depth so that node `(d, s)` occupies `[s, s + (n >> d))`.
fn genie_llrs(r: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = r.len();
    let mut out = vec![r.to_vec()];
    for d in 0..m {
        let prev = &out[d];
        let h = n >> (d + 1);
        let mut next = vec![0.0; n];
        for s in (0..n).step_by(2 * h) {
            for i in 0..h {
                let (a, b) = (prev[s + i], prev[s + h + i]);
                next[s + i] = super::f_update(a, b);
                next[s + h + i] = a + b;
            }
        }
        out.push(next);
    }
    out
}

/// Pre-order pruning: a node becomes a leaf when `l` parallel GCD processors
/// are estimated cheaper than bit-wise SCL on its sub-code.
pub fn prune_tree(code: &PolarCode, cfg: &PruneConfig) -> Result<PolarTree, PolarError> {
    let n = code.n();
    let m = code.m();
    let l = cfg.list_size.max(1);
    let trials = cfg.trials.max(1);
    let zero = BinaryVector::zeros(n);
    let samples: Vec<Vec<Vec<f64>>> = (0..trials)
        .map(|t| {
            let mut rng = derive_rng(cfg.seed, 1, t);
            genie_llrs(cfg.channel.transmit(&zero, &mut rng).values(), m)
        })
        .collect();
    let mut leaves = Vec::new();
    prune_node(code, cfg, l, &samples, 0, 0, &mut leaves)?;
    Ok(PolarTree::new(n, leaves)?.with_final_list_size(cfg.final_list_size))
}

fn prune_node(
    code: &PolarCode,
    cfg: &PruneConfig,
    l: usize,
    samples: &[Vec<Vec<f64>>],
    d: usize,
    start: usize,
    leaves: &mut Vec<TreeNode>,
) -> Result<(), PolarError> {
    let len = code.n() >> d;
    let k = code.active_in(start, len);
    let esd = (k as f64) <= (l as f64).log2();
    let leaf = |mode, l_avg| TreeNode {
        level: d,
        start,
        len,
        k,
        mode,
        list_size: l,
        l_max: if mode == LeafMode::Gcd { cfg.l_max } else { None },
        l_avg,
    };
    if len == 1 {
        leaves.push(leaf(LeafMode::Esd, None));
        return Ok(());
    }
    let local = &code.frozen_mask()[start..start + len];
    let sub = Code::from_parity_check(frozen_parity_check(local))?;
    let ctx = GcdContext::new(&sub);
    // once the summed queries reach `budget` the node cannot become a leaf
    let budget = (break_even_queries(len, k, l) * samples.len() as f64).ceil();
    let budget = if budget < u64::MAX as f64 { budget as u64 } else { u64::MAX };
    let mut total = 0u64;
    for s in samples {
        let cap = cfg.l_max.map_or(budget - total, |lm| lm.min(budget - total));
        total += ctx.genie_queries(&s[d][start..start + len], l, Some(cap));
        if total >= budget {
            break;
        }
    }
    let l_avg = total as f64 / samples.len() as f64;
    if total < budget && gcd_cost(len, k, l, l_avg) < scl_cost(len, k, l) {
        let mode = if esd { LeafMode::Esd } else { LeafMode::Gcd };
        leaves.push(leaf(mode, Some(l_avg)));
        return Ok(());
    }
    prune_node(code, cfg, l, samples, d + 1, start, leaves)?;
    prune_node(code, cfg, l, samples, d + 1, start + len / 2, leaves)
}

/// Time steps of bit-wise SCL: `2n - 2` f/g steps plus one sort per active
/// bit.
pub fn time_steps_scl(n: usize, active: usize) -> u64 {
    (2 * n - 2 + active) as u64
}

/// A leaf decoded by enumeration: `k + 1` steps; one step for a single
/// active bit; none for a rate-0 leaf.
pub fn esd_leaf_steps(len: usize, k: usize) -> f64 {
    match (len, k) {
        (_, 0) => 0.0,
        (1, _) => 1.0,
        _ => (k + 1) as f64,
    }
}

/// A GCD leaf: one step per query plus `max(1, n / 2L)` for sorting.
pub fn gcd_leaf_steps(n: usize, l: usize, l_avg: f64) -> f64 {
    l_avg + (n as f64 / (2.0 * l as f64)).max(1.0)
}

/// Time steps over a tree: two f/g steps per internal node plus the leaf
/// costs. `l_avg[i]` is the query estimate for leaf `i` (ignored for ESD
/// leaves).
pub fn time_steps_tree(tree: &PolarTree, l: usize, l_avg: &[f64]) -> f64 {
    let internal = tree.leaves().len().saturating_sub(1);
    let leaves: f64 = tree
        .leaves()
        .iter()
        .enumerate()
        .map(|(i, leaf)| match leaf.mode {
            LeafMode::Esd => esd_leaf_steps(leaf.len, leaf.k),
            LeafMode::Gcd => gcd_leaf_steps(leaf.len, l, l_avg.get(i).copied().unwrap_or(1.0)),
        })
        .sum();
    2.0 * internal as f64 + leaves
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{hamming_code, CrcSpec};
    use crate::polar::construct_polar;

    #[test]
    fn scl_time_steps_row() {
        for (k, want) in [(32, 297), (64, 329), (96, 361)] {
            let code = construct_polar(128, k, None, Some(CrcSpec::crc11())).unwrap();
            assert_eq!(time_steps_scl(code.n(), code.active().len()), want);
            let tree = PolarTree::bit_tree(&code, 32);
            assert_eq!(time_steps_tree(&tree, 32, &[]), want as f64);
        }
    }

    #[test]
    fn leaf_step_formulas() {
        assert_eq!(esd_leaf_steps(8, 2), 3.0);
        assert_eq!(gcd_leaf_steps(128, 32, 8.0), 10.0);
        assert_eq!(gcd_leaf_steps(16, 32, 3.5), 4.5);
    }

    #[test]
    fn text_roundtrip() {
        let code = construct_polar(8, 4, None, None).unwrap();
        let text = "0 4 1 esd 4 0\n4 2 1 gcd 4 10\n6 2 2 esd 1 0\n";
        let tree = PolarTree::from_text(text).unwrap();
        tree.check_against(code.frozen_mask()).unwrap();
        assert_eq!(tree.to_text(), text);
        assert_eq!(tree.leaves()[1].l_max, Some(10));
        assert_eq!(tree.leaves()[0].level, 1);
        assert!(PolarTree::from_text("0 4 1 esd 4 0\n").is_ok());
        assert!(PolarTree::from_text("0 4 1 esd 4 0\n2 4 1 esd 4 0\n").is_err());
        assert!(PolarTree::from_text("0 3 1 esd 4 0\n3 1 0 esd 4 0\n").is_err());
        assert!(PolarTree::from_text("0 4 1 foo 4 0\n4 4 3 esd 4 0\n").is_err());
        let bad_k = PolarTree::from_text("0 8 3 gcd 4 0\n").unwrap();
        assert!(bad_k.check_against(code.frozen_mask()).is_err());
    }

    #[test]
    fn pruning_small_code() {
        let code = construct_polar(8, 4, None, None).unwrap();
        let cfg = PruneConfig {
            list_size: 4,
            l_max: None,
            channel: ChannelSpec::Awgn { sigma2: 0.5 },
            trials: 200,
            seed: 3,
            final_list_size: 1,
        };
        let tree = prune_tree(&code, &cfg).unwrap();
        tree.check_against(code.frozen_mask()).unwrap();
        assert!(tree.leaves().len() <= 3);
        assert_eq!(tree.leaves().last().unwrap().list_size, 1);
        for leaf in tree.leaves() {
            assert_eq!(leaf.mode == LeafMode::Esd, leaf.k as f64 <= 2.0 || leaf.len == 1);
        }
    }

    #[test]
    fn rate_zero_subtree_is_esd() {
        let code = construct_polar(128, 64, None, Some(CrcSpec::crc11())).unwrap();
        let cfg = PruneConfig {
            list_size: 8,
            l_max: Some(50),
            channel: ChannelSpec::awgn_from_ebn0(2.5, 0.5),
            trials: 50,
            seed: 1,
            final_list_size: 1,
        };
        let tree = prune_tree(&code, &cfg).unwrap();
        assert!(tree.leaves().len() > 1);
        for leaf in tree.leaves().iter().filter(|l| l.k == 0) {
            assert_eq!(leaf.mode, LeafMode::Esd);
        }
    }

    #[test]
    fn genie_queries_degenerate_cases() {
        let code = hamming_code(3).unwrap();
        let noiseless = ChannelSpec::Awgn { sigma2: 1e-6 };
        assert_eq!(genie_avg_queries(&code, &noiseless, 4, None, 20, 1), 1.0);
        let frozen = [true; 8];
        let rate0 = Code::from_parity_check(frozen_parity_check(&frozen)).unwrap();
        assert_eq!(genie_avg_queries(&rate0, &ChannelSpec::Awgn { sigma2: 1.0 }, 4, None, 20, 1), 1.0);
    }

    #[test]
    fn break_even_separates_costs() {
        for (n, k, l) in [(16, 5, 8), (32, 20, 8), (128, 75, 32), (64, 63, 4)] {
            let b = break_even_queries(n, k, l);
            assert!(b.is_finite());
            assert!(gcd_cost(n, k, l, b) >= scl_cost(n, k, l));
            assert!(gcd_cost(n, k, l, b * (1.0 - 1e-9)) < scl_cost(n, k, l));
        }
        assert_eq!(break_even_queries(8, 0, 8), f64::INFINITY);
    }

    #[test]
    fn cost_model_prefers_gcd_on_extreme_rates() {
        assert!(gcd_cost(16, 0, 8, 1.0) < scl_cost(16, 0, 8));
        assert!(gcd_cost(16, 16, 8, 2.0) < scl_cost(16, 16, 8));
        assert!(gcd_cost(128, 64, 8, 100.0) > scl_cost(128, 64, 8));
    }
}
