//! Reads to bytes: primer location, clustering, consensus, unit assembly.

mod cluster;
mod decode;
mod metrics;
mod reconstruct;

pub use cluster::{cluster_payloads, sort_clusters, Cluster, DEFAULT_THRESHOLD};
pub use decode::{
    decode_block, decode_partition, decode_with_candidates, reconstruct_addresses, BlockDecode, CandidateDecode,
    DecodeConfig, PartitionDecode, ReconstructedStrand,
};
pub use metrics::{
    address_histogram, cost_reduction_factor, read_cost_ratio, reduction_from_ratios, synthesis_cost_ratio,
    unwanted_ratio, Reference, RetrievalMetrics,
};
pub use reconstruct::{reconstruct, DEFAULT_WINDOW};

use crate::align::{locate_prefix, locate_suffix};
use crate::codec::{Base, DnaString};
use crate::index_tree::{IndexTree, SYNC_BASE};
use crate::partition::PartitionManifest;

/// A read with the primers stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    /// Block whose unit index the read carries, if it names a leaf.
    pub block: Option<usize>,
    /// Version base, intra index and payload.
    pub tail: DnaString,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    pub items: Vec<Extracted>,
    /// Reads in which the primers could not be located.
    pub background: usize,
}

/// Locate `forward` (the main primer or an elongation of it) and the reverse
/// site within `max_edits` each, trying the reverse complement when the read
/// does not parse as given.
pub fn extract_read(
    read: &[Base],
    forward: &[Base],
    reverse: &[Base],
    manifest: &PartitionManifest,
    tree: &IndexTree,
    max_edits: usize,
) -> Option<Extracted> {
    extract_oriented(read, forward, reverse, manifest, tree, max_edits).or_else(|| {
        let rc = DnaString::from(read).reverse_complement();
        extract_oriented(&rc, forward, reverse, manifest, tree, max_edits)
    })
}

fn extract_oriented(
    read: &[Base],
    forward: &[Base],
    reverse: &[Base],
    manifest: &PartitionManifest,
    tree: &IndexTree,
    max_edits: usize,
) -> Option<Extracted> {
    let l = &manifest.layout;
    let address_len = l.sync_len + l.unit_index_len;
    let covered = forward.len().checked_sub(l.primer_len)?.min(address_len);
    let (end, _) = locate_prefix(forward, read, max_edits)?;
    let (start, _) = locate_suffix(reverse, read, max_edits)?;
    let rest = address_len - covered;
    if start < end + rest {
        return None;
    }
    let region = &read[end..start];
    let mut address: Vec<Base> = forward[l.primer_len..l.primer_len + covered].to_vec();
    address.extend_from_slice(&region[..rest]);
    let block = (address[0] == SYNC_BASE)
        .then(|| tree.locate_nearest(&address[l.sync_len..], 1))
        .flatten()
        .filter(|&b| b < manifest.block_count);
    Some(Extracted { block, tail: DnaString::from(&region[rest..]) })
}

pub fn extract_payloads(
    reads: &[DnaString],
    forward: &[Base],
    reverse: &[Base],
    manifest: &PartitionManifest,
    tree: &IndexTree,
    max_edits: usize,
) -> Extraction {
    let mut out = Extraction::default();
    for r in reads {
        match extract_read(r, forward, reverse, manifest, tree, max_edits) {
            Some(e) => out.items.push(e),
            None => out.background += 1,
        }
    }
    out
}
