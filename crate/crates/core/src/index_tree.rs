//! Seeded, sparse, PCR-navigable index tree.
//!
//! Each internal node owns four outgoing 2-grams, one per child: an edge
//! letter followed by a spacer of the opposite GC class. The edge letters of
//! a node are a seeded permutation of ACGT. The two weak-edge children get the
//! two strong spacers (C, G) in seeded order, the two strong-edge children get
//! A and T. Sibling 2-grams therefore differ in both positions, every 2-gram
//! is exactly half G/C, and no run of equal bases exceeds two.
//!
//! Only `(depth, seed)` is ever stored; the tree is rebuilt on demand.

use std::collections::BTreeMap;

use crate::codec::{hamming, Base, DnaString, SplitMix64};
use crate::error::{Error, Result};

/// Base placed between the forward primer and the unit index.
pub const SYNC_BASE: Base = Base::A;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TreeConfig {
    pub depth: usize,
    pub seed: u64,
}

impl TreeConfig {
    pub fn leaf_count(&self) -> usize {
        4usize.pow(self.depth as u32)
    }

    pub fn index_len(&self) -> usize {
        2 * self.depth
    }
}

/// The four child 2-grams of one internal node, in child order 0..4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeLabels {
    pub grams: [[Base; 2]; 4],
}

/// A path from the root; each level is a child choice in 0..4.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodePath {
    pub levels: Vec<u8>,
}

impl NodePath {
    pub fn root() -> Self {
        NodePath { levels: Vec::new() }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Digits of `block` in base 4, most significant first.
    pub fn of_leaf(block: usize, depth: usize) -> Self {
        let levels = (0..depth)
            .rev()
            .map(|i| ((block >> (2 * i)) & 3) as u8)
            .collect();
        NodePath { levels }
    }

    /// Leaf ordinals covered by this node in a tree of `depth`.
    pub fn leaf_range(&self, depth: usize) -> std::ops::RangeInclusive<usize> {
        let prefix = self.levels.iter().fold(0usize, |acc, &d| acc * 4 + d as usize);
        let span = 4usize.pow((depth - self.levels.len()) as u32);
        prefix * span..=prefix * span + span - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexTree {
    config: TreeConfig,
    /// Internal nodes in heap order: children of node `n` are `4n + 1 + i`.
    nodes: Vec<NodeLabels>,
}

fn internal_node_count(depth: usize) -> usize {
    (4usize.pow(depth as u32) - 1) / 3
}

pub fn build_tree(config: TreeConfig) -> Result<IndexTree> {
    if config.depth == 0 {
        return Err(Error::Config("tree depth must be at least 1".into()));
    }
    if config.depth > 15 {
        return Err(Error::Config(format!("tree depth {} too large", config.depth)));
    }
    let mut rng = SplitMix64::new(config.seed);
    let nodes = (0..internal_node_count(config.depth))
        .map(|_| {
            let mut edges = Base::ALL;
            rng.shuffle(&mut edges);
            let mut strong = [Base::C, Base::G];
            let mut weak = [Base::A, Base::T];
            rng.shuffle(&mut strong);
            rng.shuffle(&mut weak);
            let (mut si, mut wi) = (0, 0);
            let grams = edges.map(|e| {
                let spacer = if e.is_strong() {
                    wi += 1;
                    weak[wi - 1]
                } else {
                    si += 1;
                    strong[si - 1]
                };
                [e, spacer]
            });
            NodeLabels { grams }
        })
        .collect();
    Ok(IndexTree { config, nodes })
}

impl IndexTree {
    /// Build from explicit node labels in heap order; used for hand-built
    /// trees and negative controls. No invariants are enforced.
    pub fn from_nodes(depth: usize, nodes: Vec<NodeLabels>) -> Result<Self> {
        if depth == 0 || nodes.len() != internal_node_count(depth) {
            return Err(Error::Config(format!(
                "depth {depth} needs {} internal nodes, got {}",
                internal_node_count(depth.max(1)),
                nodes.len()
            )));
        }
        Ok(IndexTree { config: TreeConfig { depth, seed: 0 }, nodes })
    }

    pub fn config(&self) -> TreeConfig {
        self.config
    }

    pub fn depth(&self) -> usize {
        self.config.depth
    }

    pub fn leaf_count(&self) -> usize {
        self.config.leaf_count()
    }

    pub fn nodes(&self) -> &[NodeLabels] {
        &self.nodes
    }

    fn node_id(path: &[u8]) -> usize {
        path.iter().fold(0, |n, &d| 4 * n + 1 + d as usize)
    }

    pub fn labels(&self, path: &NodePath) -> Option<&NodeLabels> {
        self.nodes.get(Self::node_id(&path.levels))
    }

    /// Sparse rendering of a path: 2 bases per level.
    pub fn render(&self, path: &NodePath) -> DnaString {
        let mut out = DnaString::new();
        let mut node = 0;
        for &d in &path.levels {
            out.extend_from_slice(&self.nodes[node].grams[d as usize]);
            node = 4 * node + 1 + d as usize;
        }
        out
    }

    pub fn leaf_index(&self, block_no: usize) -> Result<DnaString> {
        if block_no >= self.leaf_count() {
            return Err(Error::Address(format!(
                "block {block_no} outside tree of {} leaves",
                self.leaf_count()
            )));
        }
        Ok(self.render(&NodePath::of_leaf(block_no, self.depth())))
    }

    /// Inverse of `leaf_index` for exact indexes.
    pub fn locate(&self, index: &[Base]) -> Option<usize> {
        if index.len() != self.config.index_len() {
            return None;
        }
        let mut node = 0;
        let mut block = 0;
        for gram in index.chunks_exact(2) {
            let d = self.nodes[node].grams.iter().position(|g| g == gram)?;
            block = block * 4 + d;
            node = 4 * node + 1 + d;
        }
        Some(block)
    }

    /// The unique leaf within `max_mismatches` substitutions of `index`, or
    /// `None` when no leaf or more than one leaf is that close.
    pub fn locate_nearest(&self, index: &[Base], max_mismatches: usize) -> Option<usize> {
        if let Some(b) = self.locate(index) {
            return Some(b);
        }
        if index.len() != self.config.index_len() {
            return None;
        }
        fn walk(t: &IndexTree, index: &[Base], node: usize, block: usize, left: usize, hits: &mut Vec<usize>) {
            if index.is_empty() {
                hits.push(block);
                return;
            }
            for (d, g) in t.nodes[node].grams.iter().enumerate() {
                let cost = crate::codec::hamming(g, &index[..2]);
                if cost <= left && hits.len() < 2 {
                    walk(t, &index[2..], 4 * node + 1 + d, block * 4 + d, left - cost, hits);
                }
            }
        }
        let mut hits = Vec::new();
        walk(self, index, 0, 0, max_mismatches, &mut hits);
        (hits.len() == 1).then(|| hits[0])
    }

    pub fn all_leaf_indexes(&self) -> Vec<DnaString> {
        (0..self.leaf_count())
            .map(|b| self.render(&NodePath::of_leaf(b, self.depth())))
            .collect()
    }
}

/// `main_primer` + sync base + the first `levels` 2-grams of the leaf index.
pub fn elongate_primer(
    main_primer: &[Base],
    tree: &IndexTree,
    block_no: usize,
    levels: usize,
) -> Result<DnaString> {
    if levels > tree.depth() {
        return Err(Error::Config(format!(
            "elongation of {levels} levels exceeds tree depth {}",
            tree.depth()
        )));
    }
    let index = tree.leaf_index(block_no)?;
    let mut out = DnaString::from(main_primer);
    out.push(SYNC_BASE);
    out.extend_from_slice(&index[..2 * levels]);
    Ok(out)
}

/// Minimal set of nodes whose leaves are exactly `first..=last`.
pub fn prefix_cover(tree: &IndexTree, first_block: usize, last_block: usize) -> Result<Vec<NodePath>> {
    if first_block > last_block || last_block >= tree.leaf_count() {
        return Err(Error::Address(format!(
            "invalid block range {first_block}..={last_block} for {} leaves",
            tree.leaf_count()
        )));
    }
    fn walk(path: &mut Vec<u8>, depth: usize, lo: usize, hi: usize, out: &mut Vec<NodePath>) {
        let node = NodePath { levels: path.clone() };
        let range = node.leaf_range(depth);
        if *range.end() < lo || *range.start() > hi {
            return;
        }
        if lo <= *range.start() && *range.end() <= hi {
            out.push(node);
            return;
        }
        for d in 0..4u8 {
            path.push(d);
            walk(path, depth, lo, hi, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(&mut Vec::new(), tree.depth(), first_block, last_block, &mut out);
    Ok(out)
}

/// One named check with its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn push(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name, passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Distance statistics over every pair of leaf indexes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseStats {
    pub min: usize,
    pub mean: f64,
}

pub fn pairwise_hamming(indexes: &[DnaString]) -> PairwiseStats {
    let mut min = usize::MAX;
    let mut sum = 0u64;
    let mut pairs = 0u64;
    for (i, a) in indexes.iter().enumerate() {
        for b in &indexes[i + 1..] {
            let d = hamming(a, b);
            min = min.min(d);
            sum += d as u64;
            pairs += 1;
        }
    }
    PairwiseStats { min, mean: if pairs == 0 { 0.0 } else { sum as f64 / pairs as f64 } }
}

/// The conventional dense enumeration of `4^depth` addresses, `depth` bases each.
pub fn dense_indexes(depth: usize) -> Vec<DnaString> {
    (0..4usize.pow(depth as u32))
        .map(|b| NodePath::of_leaf(b, depth).levels.iter().map(|&d| Base::from_bits(d)).collect())
        .collect()
}

pub fn validate_index_set(tree: &IndexTree) -> ValidationReport {
    let mut report = ValidationReport::default();
    let leaves = tree.all_leaf_indexes();

    let worst_run = leaves
        .iter()
        .map(|idx| {
            let mut s = vec![SYNC_BASE];
            s.extend_from_slice(idx);
            crate::codec::longest_homopolymer(&s)
        })
        .max()
        .unwrap_or(0);
    report.push("homopolymer", worst_run <= 2, format!("longest run {worst_run}"));

    let mut gc_failures = 0;
    for idx in &leaves {
        for end in (2..=idx.len()).step_by(2) {
            let strong = idx[..end].iter().filter(|b| b.is_strong()).count();
            if 2 * strong != end {
                gc_failures += 1;
            }
        }
    }
    report.push("even_prefix_gc", gc_failures == 0, format!("{gc_failures} unbalanced prefixes"));

    let mut sibling_failures = 0;
    for node in tree.nodes() {
        for i in 0..4 {
            for j in i + 1..4 {
                if hamming(&node.grams[i], &node.grams[j]) != 2 {
                    sibling_failures += 1;
                }
            }
        }
    }
    report.push(
        "sibling_distance",
        sibling_failures == 0,
        format!("{sibling_failures} sibling pairs not at distance 2"),
    );

    let stats = pairwise_hamming(&leaves);
    report.push("min_leaf_distance", stats.min >= 2, format!("minimum pairwise distance {}", stats.min));

    let dense = pairwise_hamming(&dense_indexes(tree.depth()));
    let ratio = stats.mean / dense.mean;
    report.push(
        "sparsity_gain",
        ratio >= 1.9,
        format!("mean distance {:.3} vs dense {:.3} (ratio {ratio:.3})", stats.mean, dense.mean),
    );
    report
}

/// Block → index table, handy for diagnostics.
pub fn index_table(tree: &IndexTree) -> BTreeMap<usize, DnaString> {
    tree.all_leaf_indexes().into_iter().enumerate().collect()
}
