//! Browser demo. Each export takes plain numbers and returns a JSON string,
//! so the page needs no bindings beyond `JSON.parse`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use blockdna::analyze::capacity_table;
use blockdna::index_tree::{build_tree, prefix_cover, IndexTree, NodePath, TreeConfig, SYNC_BASE};
use blockdna::partition::PartitionLayout;
use blockdna::pipeline::{Reference, RetrievalMetrics};
use blockdna::scenario::{reference_primers, sample_text, Partition};
use blockdna::wetlab::{read_sequences, sequence, two_stage_pcr, ChannelModel, PcrParams, TWO_STAGE_CYCLES};

/// Tree seed of the demo partition.
pub const DEMO_TREE_SEED: u64 = 0x1D7E_5EED;
const DEMO_RANDOMIZER_SEED: u64 = 0x5C4A_3B1E;
/// Largest partition the histogram demo will simulate.
pub const MAX_DEMO_BLOCKS: usize = 256;
pub const MAX_DEMO_READS: usize = 20_000;

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct CurvePoint {
    index_len: usize,
    log2_bytes: f64,
    density: f64,
}

/// Capacity (log2 bytes) and density for every index length of one layout.
#[wasm_bindgen]
pub fn capacity_curve(strand_len: usize, primer_len: usize) -> Result<String, String> {
    let table = capacity_table(strand_len, primer_len).map_err(|e| e.to_string())?;
    if table.is_empty() {
        return Err(format!("primers of {primer_len} bases leave no room in a {strand_len}-base strand"));
    }
    let points: Vec<_> = table
        .iter()
        .map(|p| CurvePoint { index_len: p.index_len, log2_bytes: p.log2_bytes(), density: p.density() })
        .collect();
    json(&points)
}

#[derive(Debug, Serialize)]
struct CoverNode {
    /// Child choice at each level from the root.
    path: Vec<u8>,
    /// Index bases the node fixes.
    prefix: String,
    first_block: usize,
    last_block: usize,
    /// Forward primer that amplifies exactly this subtree.
    primer: String,
}

#[derive(Debug, Serialize)]
struct Cover {
    depth: usize,
    nodes: Vec<CoverNode>,
}

fn demo_tree() -> Result<IndexTree, String> {
    let depth = PartitionLayout::default().tree_depth();
    build_tree(TreeConfig { depth, seed: DEMO_TREE_SEED }).map_err(|e| e.to_string())
}

fn cover_node(tree: &IndexTree, node: NodePath) -> CoverNode {
    let prefix = tree.render(&node);
    let mut primer = reference_primers().forward;
    primer.push(SYNC_BASE);
    primer.extend_from_slice(&prefix);
    let range = node.leaf_range(tree.depth());
    CoverNode {
        first_block: *range.start(),
        last_block: *range.end(),
        prefix: prefix.to_string(),
        primer: primer.to_string(),
        path: node.levels,
    }
}

/// Fewest index-tree prefixes whose leaves are exactly `first..=last`.
#[wasm_bindgen]
pub fn prefix_cover_json(first: usize, last: usize) -> Result<String, String> {
    let tree = demo_tree()?;
    let nodes = prefix_cover(&tree, first, last).map_err(|e| e.to_string())?;
    json(&Cover { depth: tree.depth(), nodes: nodes.into_iter().map(|n| cover_node(&tree, n)).collect() })
}

#[derive(Debug, Serialize)]
struct Histogram {
    target: usize,
    reads: usize,
    on_target: f64,
    misprimed: f64,
    other_block: f64,
    background: f64,
    /// Unwanted reads per wanted read.
    unwanted_ratio: f64,
    /// `(block, reads)` by the payload each read carries.
    source: Vec<(usize, usize)>,
}

/// Retrieve `target` from a partition of `blocks` text blocks by two-stage
/// PCR, sequence `reads` reads and count them by the block they came from.
#[wasm_bindgen]
pub fn pcr_histogram(blocks: usize, target: usize, reads: usize, misprime_decay: f64, seed: u32) -> Result<String, String> {
    if !(1..=MAX_DEMO_BLOCKS).contains(&blocks) {
        return Err(format!("blocks must be in 1..={MAX_DEMO_BLOCKS}"));
    }
    if target >= blocks {
        return Err(format!("target {target} outside 0..{blocks}"));
    }
    if !(1..=MAX_DEMO_READS).contains(&reads) {
        return Err(format!("reads must be in 1..={MAX_DEMO_READS}"));
    }
    let err = |e: blockdna::Error| e.to_string();
    let text = sample_text(blocks * 256, u64::from(seed));
    let p = Partition::encode(text, reference_primers(), DEMO_TREE_SEED, DEMO_RANDOMIZER_SEED).map_err(err)?;
    let params = PcrParams { misprime_decay, ..PcrParams::default() };
    params.validate().map_err(err)?;
    let primer = p.elongated_primer(target).map_err(err)?;
    let pool = two_stage_pcr(
        &p.pool(1.0),
        &p.manifest.primers,
        &primer,
        &params.with_cycles(TWO_STAGE_CYCLES.0),
        &params.with_cycles(TWO_STAGE_CYCLES.1),
    )
    .map_err(err)?;
    let channel = ChannelModel { seed: u64::from(seed), ..ChannelModel::default() };
    let seqs = read_sequences(&sequence(&pool, reads, &channel).map_err(err)?);
    let reference = Reference::from_strands(&p.strands, &p.manifest);
    let m = RetrievalMetrics::compute(&seqs, &p.manifest, &p.tree, target, Some(&reference), 2);
    json(&Histogram {
        target,
        reads: m.total,
        on_target: m.on_target_fraction(),
        misprimed: m.misprime_fraction(),
        other_block: m.other_block_fraction(),
        background: m.background_fraction(),
        unwanted_ratio: m.unwanted_ratio(),
        source: m.source_histogram.into_iter().collect(),
    })
}
