//! SDCT-BT: top-down binary halving of angle subbands with exhaustive
//! per-subband angle search, signaled as a binary decision tree.
//!
//! Coefficients are never free variables here: every candidate angle vector
//! is evaluated with the quantized transform of the block and the real
//! entropy-coder bitrate. A split of a subband into two halves is accepted
//! only when it strictly decreases J; the accepted structure costs 2s-1 tree
//! bits plus one angle per leaf.

use crate::codec::arith::measure_block_rate;
use crate::error::{Result, SdctError};
use crate::rd::{ceil_log2, coeff_index, RdBreakdown, RdParams};
use crate::transform::{AngleVector, SdctContext};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Binary subband tree over zigzag positions 0..p-1. Structure only; leaf
/// angles travel alongside in breadth-first leaf order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandTree {
    pub p: usize,
    root: Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Leaf,
    Split(Box<Node>, Box<Node>),
}

/// Maximum number of split levels for p positions (Algorithm loop bound);
/// tree depth is at most this plus one.
pub fn max_split_levels(p: usize) -> usize {
    debug_assert!(p >= 1);
    (usize::BITS - 1 - p.leading_zeros()) as usize
}

/// A parent range halves with the remainder going to the last group.
fn child_ranges(start: usize, end: usize) -> ((usize, usize), (usize, usize)) {
    let mid = start + (end - start) / 2;
    ((start, mid), (mid, end))
}

impl SubbandTree {
    pub fn single_leaf(p: usize) -> Self {
        SubbandTree {
            p,
            root: Node::Leaf,
        }
    }

    /// Rebuilds the tree implied by a set of subband ranges produced by the
    /// deterministic halving rule.
    pub fn from_subbands(p: usize, ranges: &[(usize, usize)]) -> Result<Self> {
        fn build(start: usize, end: usize, ranges: &[(usize, usize)]) -> Result<Node> {
            if ranges.contains(&(start, end)) {
                return Ok(Node::Leaf);
            }
            if end - start < 2 {
                return Err(SdctError::MalformedTree(format!(
                    "range {start}..{end} is not a subband and cannot split"
                )));
            }
            let ((s1, e1), (s2, e2)) = child_ranges(start, end);
            Ok(Node::Split(
                Box::new(build(s1, e1, ranges)?),
                Box::new(build(s2, e2, ranges)?),
            ))
        }
        Ok(SubbandTree {
            p,
            root: build(0, p, ranges)?,
        })
    }

    pub fn leaf_count(&self) -> usize {
        fn count(n: &Node) -> usize {
            match n {
                Node::Leaf => 1,
                Node::Split(l, r) => count(l) + count(r),
            }
        }
        count(&self.root)
    }

    pub fn node_count(&self) -> usize {
        2 * self.leaf_count() - 1
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf => 1,
                Node::Split(l, r) => 1 + depth(l).max(depth(r)),
            }
        }
        depth(&self.root)
    }

    /// Leaf ranges in breadth-first encounter order, matching the order of
    /// the serialized node bits (and of the transported leaf angles).
    pub fn leaves_bfs(&self) -> Vec<(usize, usize)> {
        let mut leaves = Vec::new();
        let mut level: Vec<(&Node, usize, usize)> = vec![(&self.root, 0, self.p)];
        while !level.is_empty() {
            let mut next = Vec::new();
            for (node, start, end) in level {
                match node {
                    Node::Leaf => leaves.push((start, end)),
                    Node::Split(l, r) => {
                        let ((s1, e1), (s2, e2)) = child_ranges(start, end);
                        next.push((&**l, s1, e1));
                        next.push((&**r, s2, e2));
                    }
                }
            }
            level = next;
        }
        leaves
    }

    /// Structure bit count, always 2s - 1 for s leaves.
    pub fn structure_bits(&self) -> usize {
        self.node_count()
    }
}

/// Breadth-first node labels from level 1 down: 1 = leaf (subband), 0 =
/// split. Exactly 2s - 1 bits for s leaves.
pub fn serialize_tree(tree: &SubbandTree) -> Vec<bool> {
    let mut bits = Vec::with_capacity(tree.node_count());
    let mut level: Vec<&Node> = vec![&tree.root];
    while !level.is_empty() {
        let mut next = Vec::new();
        for node in level {
            match node {
                Node::Leaf => bits.push(true),
                Node::Split(l, r) => {
                    bits.push(false);
                    next.push(&**l);
                    next.push(&**r);
                }
            }
        }
        level = next;
    }
    bits
}

/// Parses breadth-first node labels from an incremental bit source,
/// validating the range arithmetic and the depth bound. Consumes exactly the
/// tree's 2s - 1 bits from the source.
pub fn read_tree<E>(
    mut next_bit: impl FnMut() -> std::result::Result<bool, E>,
    p: usize,
) -> Result<SubbandTree>
where
    SdctError: From<E>,
{
    if p == 0 {
        return Err(SdctError::MalformedTree("p must be positive".into()));
    }
    let max_depth = max_split_levels(p) + 1;
    // subbands discovered so far; split nodes become None placeholders fixed
    // up bottom-up after the walk
    enum Slot {
        Root,
        Child(usize, bool), // (parent index in `nodes`, is_right)
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut parents: Vec<Slot> = Vec::new();
    let mut level: Vec<(usize, usize, Slot)> = vec![(0, p, Slot::Root)];
    let mut depth = 0usize;
    while !level.is_empty() {
        depth += 1;
        if depth > max_depth {
            return Err(SdctError::MalformedTree(format!(
                "depth exceeds {max_depth} for p={p}"
            )));
        }
        let mut next = Vec::new();
        for (start, end, slot) in level {
            let is_leaf = next_bit().map_err(SdctError::from)?;
            if is_leaf {
                nodes.push(Node::Leaf);
                parents.push(slot);
            } else {
                if end - start < 2 {
                    return Err(SdctError::MalformedTree(format!(
                        "length-{} range {start}..{end} cannot split",
                        end - start
                    )));
                }
                let idx = nodes.len();
                nodes.push(Node::Split(Box::new(Node::Leaf), Box::new(Node::Leaf)));
                parents.push(slot);
                let ((s1, e1), (s2, e2)) = child_ranges(start, end);
                next.push((s1, e1, Slot::Child(idx, false)));
                next.push((s2, e2, Slot::Child(idx, true)));
            }
        }
        level = next;
    }
    // stitch children into parents, last level first
    for idx in (1..nodes.len()).rev() {
        let node = nodes[idx].clone();
        match parents[idx] {
            Slot::Root => unreachable!("only the first node is the root"),
            Slot::Child(parent, is_right) => {
                if let Node::Split(l, r) = &mut nodes[parent] {
                    if is_right {
                        **r = node;
                    } else {
                        **l = node;
                    }
                }
            }
        }
    }
    Ok(SubbandTree {
        p,
        root: nodes.swap_remove(0),
    })
}

/// Parses a complete bit slice as one tree, rejecting truncated or overlong
/// sequences.
pub fn deserialize_tree(bits: &[bool], p: usize) -> Result<SubbandTree> {
    let mut used = 0usize;
    let mut source = bits.iter();
    let tree = read_tree::<SdctError>(
        || {
            used += 1;
            source
                .next()
                .copied()
                .ok_or_else(|| SdctError::MalformedTree("truncated tree bits".into()))
        },
        p,
    )?;
    if used != bits.len() {
        return Err(SdctError::MalformedTree(format!(
            "overlong: {} bits supplied, {used} consumed",
            bits.len()
        )));
    }
    Ok(tree)
}

/// Piecewise-constant angle vector from a tree and its breadth-first leaf
/// angle indices.
pub fn expand_tree_to_angles(
    tree: &SubbandTree,
    leaf_angles: &[u8],
    n: usize,
    q_theta: usize,
) -> Result<AngleVector> {
    let leaves = tree.leaves_bfs();
    if leaves.len() != leaf_angles.len() {
        return Err(SdctError::MalformedTree(format!(
            "{} leaves but {} angles",
            leaves.len(),
            leaf_angles.len()
        )));
    }
    let mut angles = vec![0.0; tree.p];
    for ((start, end), &idx) in leaves.iter().zip(leaf_angles) {
        if idx as usize >= q_theta {
            return Err(SdctError::MalformedStream(format!(
                "angle index {idx} out of Q_theta range {q_theta}"
            )));
        }
        let theta = idx as f64 * PI / q_theta as f64;
        for a in &mut angles[*start..*end] {
            *a = theta;
        }
    }
    AngleVector::new(n, angles)
}

/// Outcome of one SDCT-BT run.
#[derive(Debug, Clone)]
pub struct BtResult {
    pub tree: SubbandTree,
    /// Quantized angle index per leaf, breadth-first order.
    pub leaf_angles: Vec<u8>,
    pub angles: AngleVector,
    /// Quantized transform indices of the block at the final angles.
    pub indices: Vec<i64>,
    /// distortion + lambda (real coefficient bits + tree-signaled angle
    /// bits); the per-block mode bit is charged at the codec layer.
    pub breakdown: RdBreakdown,
}

/// Shared evaluation state for one block: cached DCT coefficients and a memo
/// of the theta-dependent cost so repeated configurations (within and across
/// initializations) are not re-coded.
pub struct BtEvaluator<'a> {
    ctx: &'a SdctContext,
    params: &'a RdParams,
    dct: Vec<f64>,
    /// theta index vector -> (distortion, real coeff bits, nonzeros)
    memo: HashMap<Box<[u8]>, (f64, usize, usize)>,
}

impl<'a> BtEvaluator<'a> {
    pub fn new(ctx: &'a SdctContext, samples: &[f64], params: &'a RdParams) -> Result<Self> {
        Ok(BtEvaluator {
            ctx,
            params,
            dct: ctx.dct_coeffs(samples)?,
            memo: HashMap::new(),
        })
    }

    fn angles_of(&self, theta_idx: &[u8]) -> AngleVector {
        AngleVector {
            n: self.ctx.n,
            angles: theta_idx
                .iter()
                .map(|&i| i as f64 * PI / self.params.q_theta as f64)
                .collect(),
        }
    }

    /// Quantized transform indices at the given angles.
    pub fn indices_at(&self, theta_idx: &[u8]) -> Vec<i64> {
        let av = self.angles_of(theta_idx);
        let mut exact = self.dct.clone();
        self.ctx.rotate_forward(&av, &mut exact);
        exact
            .iter()
            .map(|&v| coeff_index(v, self.params.coeff_step))
            .collect()
    }

    /// Theta-determined parts of J: distortion, real coefficient bitrate and
    /// nonzero count of the quantized transform at these angles.
    fn core(&mut self, theta_idx: &[u8]) -> (f64, usize, usize) {
        if let Some(hit) = self.memo.get(theta_idx) {
            return *hit;
        }
        let av = self.angles_of(theta_idx);
        let mut exact = self.dct.clone();
        self.ctx.rotate_forward(&av, &mut exact);
        let step = self.params.coeff_step;
        let mut distortion = 0.0;
        let mut nonzeros = 0;
        let indices: Vec<i64> = exact
            .iter()
            .map(|&v| {
                let idx = coeff_index(v, step);
                let err = v - idx as f64 * step;
                distortion += err * err;
                if idx != 0 {
                    nonzeros += 1;
                }
                idx
            })
            .collect();
        let bits = measure_block_rate(&indices);
        self.memo
            .insert(theta_idx.into(), (distortion, bits, nonzeros));
        (distortion, bits, nonzeros)
    }

    fn angle_side_bits(&self, leaves: usize) -> f64 {
        (leaves * ceil_log2(self.params.q_theta) + 2 * leaves - 1) as f64
    }

    pub fn j(&mut self, theta_idx: &[u8], leaves: usize) -> f64 {
        self.breakdown_at(theta_idx, leaves).j
    }

    /// Full RD breakdown at the given angles and leaf count.
    pub fn breakdown_at(&mut self, theta_idx: &[u8], leaves: usize) -> RdBreakdown {
        let (distortion, bits, nonzeros) = self.core(theta_idx);
        RdBreakdown::assemble(
            distortion,
            bits as f64,
            self.angle_side_bits(leaves),
            self.params.lambda,
            leaves,
            nonzeros,
        )
    }
}

/// One SDCT-BT run from a single initial angle index.
pub fn run_sdct_bt(
    ctx: &SdctContext,
    samples: &[f64],
    params: &RdParams,
    init_angle_idx: u8,
) -> Result<BtResult> {
    let mut eval = BtEvaluator::new(ctx, samples, params)?;
    run_with_evaluator(ctx, params, &mut eval, init_angle_idx)
}

/// SDCT-BT over every initial angle from the quantized grid, sharing the
/// per-block memo; returns the result with the smallest J (earliest
/// initialization wins ties).
pub fn run_sdct_bt_best(ctx: &SdctContext, samples: &[f64], params: &RdParams) -> Result<BtResult> {
    let mut eval = BtEvaluator::new(ctx, samples, params)?;
    let mut best: Option<BtResult> = None;
    for init in 0..params.q_theta as u8 {
        let result = run_with_evaluator(ctx, params, &mut eval, init)?;
        if best
            .as_ref()
            .map_or(true, |b| result.breakdown.j < b.breakdown.j)
        {
            best = Some(result);
        }
    }
    Ok(best.unwrap())
}

fn run_with_evaluator(
    ctx: &SdctContext,
    params: &RdParams,
    eval: &mut BtEvaluator,
    init_angle_idx: u8,
) -> Result<BtResult> {
    let p = ctx.pair_count();
    let q = params.q_theta as u8;
    if init_angle_idx >= q {
        return Err(SdctError::InvalidParam(format!(
            "initial angle index {init_angle_idx} out of Q_theta range {q}"
        )));
    }
    // in-order subband list: (start, end)
    let mut subbands: Vec<(usize, usize)> = vec![(0, p)];
    let mut theta_idx: Vec<u8> = vec![init_angle_idx; p];
    let mut j_hat = eval.j(&theta_idx, 1);

    for _level in 1..=max_split_levels(p) {
        let snapshot = subbands.clone();
        let mut any_split = false;
        for &(start, end) in &snapshot {
            if end - start < 2 {
                continue;
            }
            let leaves_if_split = subbands.len() + 1;
            let ((s1, e1), (s2, e2)) = child_ranges(start, end);
            let saved: Vec<u8> = theta_idx[start..end].to_vec();
            // sequentially optimize each group: the second holds the parent
            // angle while the first is searched, then the first's new angle
            // stays in place for the second's search
            for (gs, ge) in [(s1, e1), (s2, e2)] {
                let mut best_angle = theta_idx[gs];
                let mut best_j = f64::INFINITY;
                for a in 0..q {
                    for t in &mut theta_idx[gs..ge] {
                        *t = a;
                    }
                    let j = eval.j(&theta_idx, leaves_if_split);
                    if j < best_j {
                        best_j = j;
                        best_angle = a;
                    }
                }
                for t in &mut theta_idx[gs..ge] {
                    *t = best_angle;
                }
            }
            let j_split = eval.j(&theta_idx, leaves_if_split);
            if j_split < j_hat {
                j_hat = j_split;
                let pos = subbands.iter().position(|r| *r == (start, end)).unwrap();
                subbands.splice(pos..=pos, [(s1, e1), (s2, e2)]);
                any_split = true;
            } else {
                theta_idx[start..end].copy_from_slice(&saved);
            }
        }
        if !any_split {
            break;
        }
    }

    let tree = SubbandTree::from_subbands(p, &subbands)?;
    let leaf_angles: Vec<u8> = tree
        .leaves_bfs()
        .iter()
        .map(|&(start, _)| theta_idx[start])
        .collect();
    let angles = expand_tree_to_angles(&tree, &leaf_angles, ctx.n, params.q_theta)?;
    let indices = eval.indices_at(&theta_idx);
    let breakdown = eval.breakdown_at(&theta_idx, subbands.len());
    debug_assert_eq!(breakdown.j, j_hat);
    Ok(BtResult {
        tree,
        leaf_angles,
        angles,
        indices,
        breakdown,
    })
}
