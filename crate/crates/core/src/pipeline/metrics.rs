use std::collections::{BTreeMap, HashMap};

use super::decode::strand_tail;
use super::extract_read;
use crate::align::bounded_levenshtein;
use crate::codec::{Base, DnaString};
use crate::index_tree::IndexTree;
use crate::partition::{PartitionManifest, StrandRecord};

const KMER: usize = 16;
const STRIDE: usize = 8;

/// Known strands of a partition, searchable by tail.
#[derive(Debug, Clone, Default)]
pub struct Reference {
    tails: Vec<DnaString>,
    owners: Vec<(usize, u8, u8)>,
    exact: HashMap<DnaString, usize>,
    kmers: HashMap<u32, Vec<u32>>,
    max_edits: usize,
}

fn pack(kmer: &[Base]) -> u32 {
    kmer.iter().fold(0u32, |acc, b| (acc << 2) | b.bits() as u32)
}

impl Reference {
    pub fn from_strands(strands: &[StrandRecord], manifest: &PartitionManifest) -> Self {
        let mut r = Reference { max_edits: (0.15 * manifest.layout.tail_len() as f64) as usize, ..Default::default() };
        for s in strands {
            let tail = strand_tail(&s.to_dna(), manifest);
            let id = r.tails.len();
            for pos in (0..tail.len().saturating_sub(KMER - 1)).step_by(STRIDE) {
                r.kmers.entry(pack(&tail[pos..pos + KMER])).or_default().push(id as u32);
            }
            r.exact.insert(tail.clone(), id);
            r.tails.push(tail);
            r.owners.push((s.block_no, s.version, s.column));
        }
        r
    }

    pub fn len(&self) -> usize {
        self.tails.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tails.is_empty()
    }

    /// `(block, version, column)` of the known strand closest to `tail`.
    pub fn lookup(&self, tail: &[Base]) -> Option<(usize, u8, u8)> {
        if let Some(&id) = self.exact.get(&DnaString::from(tail)) {
            return Some(self.owners[id]);
        }
        let mut votes: HashMap<u32, usize> = HashMap::new();
        for pos in 0..tail.len().saturating_sub(KMER - 1) {
            if let Some(ids) = self.kmers.get(&pack(&tail[pos..pos + KMER])) {
                for &id in ids {
                    *votes.entry(id).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(usize, u32)> = votes.into_iter().map(|(id, v)| (v, id)).collect();
        ranked.sort_by(|a, b| b.cmp(a));
        ranked
            .iter()
            .take(4)
            .filter_map(|&(_, id)| bounded_levenshtein(&self.tails[id as usize], tail, self.max_edits).map(|d| (d, id)))
            .min()
            .map(|(_, id)| self.owners[id as usize])
    }
}

/// Classified readout for one target block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetrievalMetrics {
    pub target_block: usize,
    pub total: usize,
    pub target: usize,
    /// Reads under the target's address carrying another block's payload.
    pub misprimed: usize,
    pub other_block: usize,
    pub background: usize,
    /// Reads per `(block, version)` address as written in the read.
    pub address_histogram: BTreeMap<(usize, u8), usize>,
    /// Reads per block whose payload they carry.
    pub source_histogram: BTreeMap<usize, usize>,
}

impl RetrievalMetrics {
    fn frac(&self, n: usize) -> f64 {
        if self.total == 0 { 0.0 } else { n as f64 / self.total as f64 }
    }

    pub fn on_target_fraction(&self) -> f64 {
        self.frac(self.target)
    }

    pub fn misprime_fraction(&self) -> f64 {
        self.frac(self.misprimed)
    }

    pub fn other_block_fraction(&self) -> f64 {
        self.frac(self.other_block)
    }

    pub fn background_fraction(&self) -> f64 {
        self.frac(self.background)
    }

    /// Unwanted reads per wanted read.
    pub fn unwanted_ratio(&self) -> f64 {
        unwanted_ratio(self.on_target_fraction())
    }

    /// Block with the most reads carrying its payload.
    pub fn modal_block(&self) -> Option<usize> {
        self.source_histogram.iter().max_by_key(|(b, n)| (**n, std::cmp::Reverse(**b))).map(|(b, _)| *b)
    }

    /// Sort reads into target, misprimed, other-block and background.
    ///
    /// A read is background when neither primer site can be located or its
    /// unit index names no leaf. With a reference, reads under the target
    /// address are split by whose payload they carry; without one they all
    /// count as target.
    pub fn compute(
        reads: &[DnaString],
        manifest: &PartitionManifest,
        tree: &IndexTree,
        target_block: usize,
        reference: Option<&Reference>,
        max_edits: usize,
    ) -> Self {
        let mut m = RetrievalMetrics { target_block, total: reads.len(), ..Default::default() };
        for r in reads {
            let Some(e) = extract_read(r, &manifest.primers.forward, &manifest.primers.reverse, manifest, tree, max_edits)
            else {
                m.background += 1;
                continue;
            };
            let Some(block) = e.block else {
                m.background += 1;
                continue;
            };
            let version = e.tail.first().map_or(0, |b| b.bits());
            *m.address_histogram.entry((block, version)).or_default() += 1;
            let source = reference.and_then(|rf| rf.lookup(&e.tail)).map(|(b, _, _)| b);
            *m.source_histogram.entry(source.unwrap_or(block)).or_default() += 1;
            if block != target_block {
                m.other_block += 1;
            } else if source.is_some_and(|s| s != target_block) {
                m.misprimed += 1;
            } else {
                m.target += 1;
            }
        }
        m
    }
}

/// Reads per `(block, version)` address. Reads that do not parse, or name a
/// version the block does not have, are skipped.
pub fn address_histogram(
    reads: &[DnaString],
    manifest: &PartitionManifest,
    tree: &IndexTree,
    max_edits: usize,
) -> BTreeMap<(usize, u8), usize> {
    let mut h = BTreeMap::new();
    for r in reads {
        if let Some(e) = extract_read(r, &manifest.primers.forward, &manifest.primers.reverse, manifest, tree, max_edits) {
            if let (Some(b), Some(v)) = (e.block, e.tail.first()) {
                if v.bits() < manifest.version_count(b) {
                    *h.entry((b, v.bits())).or_default() += 1;
                }
            }
        }
    }
    h
}

/// `w = 1/f - 1`: unwanted reads per wanted read at on-target fraction `f`.
pub fn unwanted_ratio(on_target_fraction: f64) -> f64 {
    1.0 / on_target_fraction - 1.0
}

/// Sequencing cost reduction between two readouts: `(w_b + 1) / (w_p + 1)`.
pub fn reduction_from_ratios(w_baseline: f64, w_precise: f64) -> f64 {
    (w_baseline + 1.0) / (w_precise + 1.0)
}

pub fn cost_reduction_factor(baseline: &RetrievalMetrics, precise: &RetrievalMetrics) -> f64 {
    reduction_from_ratios(baseline.unwanted_ratio(), precise.unwanted_ratio())
}

/// Molecules synthesized for a full rewrite versus for one patch unit.
pub fn synthesis_cost_ratio(partition_strands: usize, update_strands: usize) -> f64 {
    partition_strands as f64 / update_strands as f64
}

/// Reads needed to see one block through the whole partition versus through
/// a precise readout in which `useful_fraction` of reads are wanted.
pub fn read_cost_ratio(useful_fraction: f64, partition_strands: usize, block_strands: usize) -> f64 {
    useful_fraction * partition_strands as f64 / block_strands as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::encode_data;

    #[test]
    fn cost_arithmetic() {
        assert_eq!(unwanted_ratio(0.0034).round(), 293.0);
        assert_eq!(reduction_from_ratios(293.0, 1.08).round(), 141.0);
        assert_eq!(synthesis_cost_ratio(8805, 15), 587.0);
        assert_eq!(read_cost_ratio(0.5, 8805, 30).floor(), 146.0);
        assert_eq!(unwanted_ratio(1.0), 0.0);
        assert_eq!(reduction_from_ratios(0.0, 0.0), 1.0);
    }

    #[test]
    fn classes_partition_the_readout() {
        let m = PartitionManifest::for_testing(4);
        let tree = m.tree().unwrap();
        let data: Vec<u8> = (0..1024).map(|i| (i % 256) as u8).collect();
        let strands = encode_data(&data, &m, &tree).unwrap();
        let reference = Reference::from_strands(&strands, &m);
        let mut reads: Vec<DnaString> = strands.iter().map(StrandRecord::to_dna).collect();
        // one misprime: block 2's address over block 3's payload
        let mut mp = strands[30].to_dna().into_bases();
        mp[31..].copy_from_slice(&strands[45].to_dna()[31..]);
        reads.push(DnaString::from(mp));
        reads.push("ACGTACGT".parse().unwrap());
        let r = RetrievalMetrics::compute(&reads, &m, &tree, 2, Some(&reference), 2);
        assert_eq!((r.target, r.misprimed, r.other_block, r.background), (15, 1, 45, 1));
        let sum = r.on_target_fraction() + r.misprime_fraction() + r.other_block_fraction() + r.background_fraction();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(r.source_histogram[&3], 16);
        assert_eq!(r.address_histogram[&(2, 0)], 16);
        let no_ref = RetrievalMetrics::compute(&reads, &m, &tree, 2, None, 2);
        assert_eq!(no_ref.target, 16);
        assert_eq!(address_histogram(&reads, &m, &tree, 2).values().sum::<usize>(), 61);
        assert!(address_histogram(&[], &m, &tree, 2).is_empty());
    }

    #[test]
    fn noisy_lookup() {
        let m = PartitionManifest::for_testing(3);
        let tree = m.tree().unwrap();
        let strands = encode_data(&vec![9u8; 768], &m, &tree).unwrap();
        let reference = Reference::from_strands(&strands, &m);
        let mut tail = strand_tail(&strands[17].to_dna(), &m).into_bases();
        tail.remove(40);
        tail[70] = Base::from_bits((tail[70].bits() + 1) % 4);
        assert_eq!(reference.lookup(&tail), Some((1, 0, 2)));
    }
}
