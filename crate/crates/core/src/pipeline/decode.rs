use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{cluster_payloads, extract_payloads, reconstruct, sort_clusters, DEFAULT_THRESHOLD, DEFAULT_WINDOW};
use crate::codec::{Base, DnaString};
use crate::ecc::{self, COLUMN_BYTES, N};
use crate::error::{Error, Result};
use crate::index_tree::{elongate_primer, IndexTree};
use crate::partition::{column_of, payload_column, unscramble_block, PartitionManifest};
use crate::updates::{deserialize_patch, resolve_chain, UpdatePatch, VersionChain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub max_primer_edits: usize,
    pub cluster_threshold: f64,
    pub window: usize,
    /// Upper bound on assignments tried per unit by the candidate decoder.
    pub max_assignments: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig { max_primer_edits: 2, cluster_threshold: DEFAULT_THRESHOLD, window: DEFAULT_WINDOW, max_assignments: 1 << 17 }
    }
}

/// A consensus tail and the address it parses to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructedStrand {
    pub version: u8,
    pub column: u8,
    pub tail: DnaString,
    pub cluster_size: usize,
}

impl ReconstructedStrand {
    fn column_bytes(&self) -> Option<[u8; COLUMN_BYTES]> {
        payload_column(&self.tail[3..]).ok()
    }
}

/// Reconstructions grouped by address, each list in cluster order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AddressCandidates {
    pub by_address: BTreeMap<(u8, u8), Vec<ReconstructedStrand>>,
    pub clusters: usize,
    /// Reconstructions whose address failed to parse.
    pub quarantined: usize,
}

impl AddressCandidates {
    /// Reconstructions dropped because their address was already recovered.
    pub fn duplicates(&self) -> usize {
        self.by_address.values().map(|v| v.len() - 1).sum()
    }
}

/// Cluster the tails, reconstruct each cluster in descending size order and
/// file every consensus under the address it names.
pub fn reconstruct_addresses(tails: &[DnaString], manifest: &PartitionManifest, config: &DecodeConfig) -> AddressCandidates {
    let tail_len = manifest.layout.tail_len();
    let mut clusters = cluster_payloads(tails, config.cluster_threshold);
    sort_clusters(&mut clusters);
    let mut out = AddressCandidates { clusters: clusters.len(), ..Default::default() };
    for c in &clusters {
        let tail = DnaString::from(reconstruct(&c.members, tail_len, config.window));
        let version = tail[0].bits();
        let column = column_of([tail[1], tail[2]]);
        match column {
            Some(column) if (version as usize) < manifest.layout.version_slots => {
                out.by_address.entry((version, column)).or_default().push(ReconstructedStrand {
                    version,
                    column,
                    tail,
                    cluster_size: c.size(),
                });
            }
            _ => out.quarantined += 1,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecode {
    pub block_no: usize,
    /// The version-0 data at its logical length.
    pub original: Vec<u8>,
    pub patches: Vec<UpdatePatch>,
    /// The original with every patch applied.
    pub resolved: Vec<u8>,
    pub clusters: usize,
    pub duplicates_discarded: usize,
    pub corrected_symbols: usize,
    pub erased_columns: usize,
}

fn decode_unit(
    manifest: &PartitionManifest,
    block_no: usize,
    version: u8,
    columns: &[Option<[u8; COLUMN_BYTES]>],
) -> Result<(Vec<u8>, ecc::UnitDecode)> {
    let present: Vec<(usize, [u8; COLUMN_BYTES])> =
        columns.iter().enumerate().filter_map(|(i, c)| c.map(|c| (i, c))).collect();
    if present.len() + ecc::PARITY < N {
        let missing = (0..N).filter(|&i| columns[i].is_none()).map(|i| (version, i as u8)).collect();
        return Err(Error::InsufficientCoverage { block: block_no, missing });
    }
    let unit = ecc::rs_decode_unit_detailed(&present, &BTreeSet::new())?;
    let (data, padding_ok) = unscramble_block(&unit.data, manifest.randomizer_seed, block_no, version);
    if !padding_ok {
        return Err(Error::DecodeFailure(format!("block {block_no} version {version}: padding check failed after RS decode")));
    }
    Ok((data, unit))
}

fn finish(manifest: &PartitionManifest, block_no: usize, units: Vec<Vec<u8>>, stats: (usize, usize, usize, usize)) -> Result<BlockDecode> {
    let mut units = units.into_iter();
    let mut original = units.next().expect("version 0 present");
    original.truncate(manifest.block_len(block_no));
    let patches = units.map(|u| deserialize_patch(&u)).collect::<Result<Vec<_>>>()?;
    let resolved = resolve_chain(&VersionChain { original: original.clone(), patches: patches.clone() })?;
    Ok(BlockDecode {
        block_no,
        original,
        patches,
        resolved,
        clusters: stats.0,
        duplicates_discarded: stats.1,
        corrected_symbols: stats.2,
        erased_columns: stats.3,
    })
}

fn decode_tails(tails: &[DnaString], manifest: &PartitionManifest, block_no: usize, config: &DecodeConfig) -> Result<BlockDecode> {
    if tails.is_empty() {
        return Err(Error::DecodeFailure(format!("no reads for block {block_no}")));
    }
    let cands = reconstruct_addresses(tails, manifest, config);
    let versions = manifest.version_count(block_no);
    let mut units = Vec::new();
    let (mut corrected, mut erased) = (0, 0);
    for v in 0..versions {
        let columns: Vec<Option<[u8; COLUMN_BYTES]>> = (0..N as u8)
            .map(|c| cands.by_address.get(&(v, c)).and_then(|list| list[0].column_bytes()))
            .collect();
        let (data, unit) = decode_unit(manifest, block_no, v, &columns)?;
        corrected += unit.corrected_symbols;
        erased += unit.erased_columns.len();
        units.push(data);
    }
    finish(manifest, block_no, units, (cands.clusters, cands.duplicates(), corrected, erased))
}

fn block_tails(reads: &[DnaString], manifest: &PartitionManifest, tree: &IndexTree, block_no: usize, config: &DecodeConfig) -> Result<Vec<DnaString>> {
    let primer = elongate_primer(&manifest.primers.forward, tree, block_no, tree.depth())?;
    let ex = extract_payloads(reads, &primer, &manifest.primers.reverse, manifest, tree, config.max_primer_edits);
    Ok(ex.items.into_iter().filter(|e| e.block.is_none_or(|b| b == block_no)).map(|e| e.tail).collect())
}

/// Decode one block and its updates from a readout taken with the block's
/// elongated primer. Of several reconstructions naming one address only the
/// one from the largest cluster is kept.
pub fn decode_block(reads: &[DnaString], manifest: &PartitionManifest, tree: &IndexTree, block_no: usize, config: &DecodeConfig) -> Result<BlockDecode> {
    let tails = block_tails(reads, manifest, tree, block_no, config)?;
    decode_tails(&tails, manifest, block_no, config)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateDecode {
    pub block: BlockDecode,
    /// RS decodes attempted over all versions.
    pub attempts: usize,
}

/// Per-column options sorted by cost, enumerated best first. `None` is an
/// erasure; at most `max_erasures` of them appear in one assignment.
struct Assignments {
    options: Vec<Vec<(f64, Option<usize>)>>,
    max_erasures: usize,
    heap: std::collections::BinaryHeap<Pending>,
}

struct Pending {
    cost: f64,
    picks: Vec<usize>,
    last: usize,
}

impl PartialEq for Pending {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == std::cmp::Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Pending {
    // min-heap on cost, then on the pick vector for determinism
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.cost.total_cmp(&self.cost).then_with(|| o.picks.cmp(&self.picks))
    }
}

impl Assignments {
    fn new(options: Vec<Vec<(f64, Option<usize>)>>, max_erasures: usize) -> Self {
        let mut heap = std::collections::BinaryHeap::new();
        let picks = vec![0; options.len()];
        let cost = options.iter().map(|o| o[0].0).sum();
        heap.push(Pending { cost, picks, last: 0 });
        Assignments { options, max_erasures, heap }
    }
}

impl Iterator for Assignments {
    type Item = Vec<Option<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let p = self.heap.pop()?;
            for j in p.last..self.options.len() {
                if p.picks[j] + 1 < self.options[j].len() {
                    let mut picks = p.picks.clone();
                    picks[j] += 1;
                    let cost = p.cost - self.options[j][p.picks[j]].0 + self.options[j][picks[j]].0;
                    self.heap.push(Pending { cost, picks, last: j });
                }
            }
            let chosen: Vec<Option<usize>> = p.picks.iter().zip(&self.options).map(|(&i, o)| o[i].1).collect();
            if chosen.iter().filter(|c| c.is_none()).count() <= self.max_erasures {
                return Some(chosen);
            }
        }
    }
}

/// Rows checked before a full unit decode is attempted.
const SCREEN_ROWS: usize = 4;

/// Erasing an address is scored like trusting a cluster of this many reads.
const ERASURE_WEIGHT: f64 = 1.5;

fn column_options(sizes: &[usize]) -> Vec<(f64, Option<usize>)> {
    let Some(&top) = sizes.first() else { return vec![(0.0, None)] };
    let mut opts: Vec<(f64, Option<usize>)> =
        sizes.iter().enumerate().map(|(r, &s)| ((top as f64 / s as f64).ln(), Some(r))).collect();
    opts.push(((top as f64 / ERASURE_WEIGHT).ln(), None));
    opts.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.is_some().cmp(&a.1.is_some())));
    opts
}

/// Like [`decode_block`], but when several reconstructions claim an address
/// up to `max_candidates` of them are tried per address, as is erasing the
/// address. Assignments are enumerated by how much cluster support they
/// give up; the first that decodes without any RS correction and keeps at
/// least one independent check wins.
pub fn decode_with_candidates(
    reads: &[DnaString],
    manifest: &PartitionManifest,
    tree: &IndexTree,
    block_no: usize,
    max_candidates: usize,
    config: &DecodeConfig,
) -> Result<CandidateDecode> {
    if max_candidates == 0 {
        return Err(Error::Config("max_candidates must be at least 1".into()));
    }
    let tails = block_tails(reads, manifest, tree, block_no, config)?;
    if tails.is_empty() {
        return Err(Error::DecodeFailure(format!("no reads for block {block_no}")));
    }
    let cands = reconstruct_addresses(&tails, manifest, config);
    let versions = manifest.version_count(block_no);
    let mut units = Vec::new();
    let (mut attempts, mut corrected, mut erased) = (0, 0, 0);
    for v in 0..versions {
        // identical reconstructions from split clusters pool their support
        let per_col: Vec<Vec<([u8; COLUMN_BYTES], usize)>> = (0..N as u8)
            .map(|c| {
                let mut merged: Vec<([u8; COLUMN_BYTES], usize)> = Vec::new();
                for r in cands.by_address.get(&(v, c)).into_iter().flatten() {
                    let Some(bytes) = r.column_bytes() else { continue };
                    match merged.iter_mut().find(|m| m.0 == bytes) {
                        Some(m) => m.1 += r.cluster_size,
                        None => merged.push((bytes, r.cluster_size)),
                    }
                }
                merged.sort_by(|a, b| b.1.cmp(&a.1));
                merged
            })
            .collect();
        let options = per_col
            .iter()
            .map(|c| column_options(&c.iter().take(max_candidates).map(|x| x.1).collect::<Vec<_>>()))
            .collect();
        let mut found = None;
        for a in Assignments::new(options, ecc::PARITY).take(config.max_assignments) {
            attempts += 1;
            let columns: Vec<Option<[u8; COLUMN_BYTES]>> =
                a.iter().enumerate().map(|(c, r)| r.map(|r| per_col[c][r].0)).collect();
            if !ecc::rows_consistent(&columns, SCREEN_ROWS) {
                continue;
            }
            let Ok((data, unit)) = decode_unit(manifest, block_no, v, &columns) else { continue };
            if unit.corrected_symbols > 0 {
                continue;
            }
            // Every accepted unit keeps at least one independent check: a
            // spare parity column, or an erased column whose recomputed
            // content matches some reconstruction at that address.
            let full = ecc::rs_encode_unit(&unit.data)?;
            let spare = ecc::PARITY - unit.erased_columns.len();
            let confirmed =
                unit.erased_columns.iter().filter(|&&c| per_col[c].iter().any(|x| x.0 == full.columns[c])).count();
            if spare + confirmed > 0 {
                found = Some((data, unit));
                break;
            }
        }
        let (data, unit) = found.ok_or_else(|| {
            Error::DecodeFailure(format!("block {block_no} version {v}: no candidate assignment decodes"))
        })?;
        corrected += unit.corrected_symbols;
        erased += unit.erased_columns.len();
        units.push(data);
    }
    let block = finish(manifest, block_no, units, (cands.clusters, cands.duplicates(), corrected, erased))?;
    Ok(CandidateDecode { block, attempts })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionDecode {
    pub blocks: Vec<Result<BlockDecode, String>>,
    pub background: usize,
}

impl PartitionDecode {
    /// Concatenated resolved blocks, or the first failure.
    pub fn file_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            match b {
                Ok(b) => out.extend_from_slice(&b.resolved),
                Err(e) => return Err(Error::DecodeFailure(format!("block {i}: {e}"))),
            }
        }
        Ok(out)
    }
}

/// Decode every block from a whole-partition readout: extract once with the
/// main primer and bin reads by the unit index they carry.
pub fn decode_partition(reads: &[DnaString], manifest: &PartitionManifest, tree: &IndexTree, config: &DecodeConfig) -> PartitionDecode {
    let ex = extract_payloads(reads, &manifest.primers.forward, &manifest.primers.reverse, manifest, tree, config.max_primer_edits);
    let mut bins: Vec<Vec<DnaString>> = vec![Vec::new(); manifest.block_count];
    for e in ex.items {
        if let Some(b) = e.block.filter(|&b| b < manifest.block_count) {
            bins[b].push(e.tail);
        }
    }
    let blocks = bins
        .iter()
        .enumerate()
        .map(|(b, tails)| decode_tails(tails, manifest, b, config).map_err(|e| e.to_string()))
        .collect();
    PartitionDecode { blocks, background: ex.background }
}

/// The tail a strand carries: version base, intra index, payload.
pub(crate) fn strand_tail(strand: &[Base], manifest: &PartitionManifest) -> DnaString {
    let l = &manifest.layout;
    DnaString::from(&strand[l.version_offset()..l.reverse_offset()])
}
