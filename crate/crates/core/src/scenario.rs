//! Reference experiment: one text file in one partition with a few updated
//! blocks, packaged for the acceptance suite, the CLI and the demo.

use std::collections::BTreeMap;

use crate::codec::{DnaString, SplitMix64};
use crate::error::{Error, Result};
use crate::index_tree::{elongate_primer, IndexTree};
use crate::partition::{build_strands, encode_data, PartitionManifest, PrimerPair, StrandRecord, BLOCK_BYTES};
use crate::updates::{resolve_chain, serialize_patch, UpdatePatch, VersionChain};
use crate::wetlab::Pool;

/// Size of the reference text: 587 blocks of 256 bytes.
pub const TEXT_LEN: usize = 150_272;
pub const TARGET_BLOCK: usize = 531;

const WORDS: &[&str] = &[
    "alice", "rabbit", "watch", "pocket", "hole", "tea", "party", "hatter", "queen", "croquet", "garden", "door",
    "key", "bottle", "cake", "grow", "small", "tall", "curious", "sister", "bank", "book", "pictures", "conversations",
    "daisy", "chain", "pleasure", "trouble", "getting", "up", "picking", "suddenly", "white", "pink", "eyes", "ran",
    "close", "by", "her", "there", "was", "nothing", "so", "very", "remarkable", "in", "that", "the", "a", "of", "and",
    "to", "she", "it", "said", "thought", "herself", "way", "out", "of", "the", "wood",
];

/// Deterministic English-looking text of exactly `len` bytes.
pub fn sample_text(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(len + 16);
    let mut sentence = 0;
    while out.len() < len {
        let w = WORDS[rng.below(WORDS.len() as u64) as usize];
        if sentence == 0 {
            let mut cs = w.chars();
            out.extend(cs.next().unwrap().to_uppercase().to_string().bytes());
            out.extend(cs.as_str().bytes());
        } else {
            out.extend(w.bytes());
        }
        sentence += 1;
        if sentence > 6 && rng.below(5) == 0 {
            out.extend_from_slice(if rng.below(6) == 0 { b".\n" } else { b". " });
            sentence = 0;
        } else {
            out.push(b' ');
        }
    }
    out.truncate(len);
    out
}

/// An encoded file plus its update history.
#[derive(Debug, Clone)]
pub struct Partition {
    pub manifest: PartitionManifest,
    pub tree: IndexTree,
    pub data: Vec<u8>,
    /// Every strand, updates included, in synthesis order.
    pub strands: Vec<StrandRecord>,
    pub patches: BTreeMap<usize, Vec<UpdatePatch>>,
}

impl Partition {
    pub fn encode(data: Vec<u8>, primers: PrimerPair, tree_seed: u64, randomizer_seed: u64) -> Result<Self> {
        let manifest = PartitionManifest::new(primers, tree_seed, randomizer_seed, data.len())?;
        let tree = manifest.tree()?;
        let strands = encode_data(&data, &manifest, &tree)?;
        Ok(Partition { manifest, tree, data, strands, patches: BTreeMap::new() })
    }

    /// Build the next version of `block`; returns its 15 strands, which are
    /// also appended to `strands`.
    pub fn add_update(&mut self, block: usize, patch: UpdatePatch) -> Result<Vec<StrandRecord>> {
        let version = self.manifest.version_count(block);
        if version as usize >= self.manifest.layout.version_slots {
            return Err(Error::Config(format!("block {block} has no free version slot")));
        }
        let mut trial = self.patches.get(&block).cloned().unwrap_or_default();
        trial.push(patch.clone());
        resolve_chain(&VersionChain { original: self.block(block).to_vec(), patches: trial })?;
        let record = serialize_patch(&patch)?;
        let new = build_strands(block, version, &record, &self.manifest, &self.tree)?;
        self.patches.entry(block).or_default().push(patch);
        self.manifest.set_version_count(block, version + 1);
        self.strands.extend(new.iter().cloned());
        Ok(new)
    }

    pub fn block(&self, block: usize) -> &[u8] {
        let start = block * BLOCK_BYTES;
        &self.data[start..(start + BLOCK_BYTES).min(self.data.len())]
    }

    /// The block as a reader should see it after all patches.
    pub fn resolved(&self, block: usize) -> Result<Vec<u8>> {
        let patches = self.patches.get(&block).cloned().unwrap_or_default();
        resolve_chain(&VersionChain { original: self.block(block).to_vec(), patches })
    }

    pub fn dna(&self) -> Vec<DnaString> {
        self.strands.iter().map(StrandRecord::to_dna).collect()
    }

    pub fn pool(&self, abundance: f64) -> Pool {
        Pool::uniform(self.dna(), abundance)
    }

    /// Main primer + sync base + the full unit index of `block`.
    pub fn elongated_primer(&self, block: usize) -> Result<DnaString> {
        elongate_primer(&self.manifest.primers.forward, &self.tree, block, self.tree.depth())
    }
}

pub fn reference_primers() -> PrimerPair {
    PrimerPair::parse("CAGTGACTTGCAGTACGATC", "GTCATGACAGTCACTGCATG").expect("valid primers")
}

/// The edit applied to the target block: rewrite its opening.
pub fn reference_patch() -> UpdatePatch {
    UpdatePatch::new(0, 16, 0, *b"Alice, updated: ")
}

/// Reference text with updates on the target and two further blocks, all
/// synthesized together: 8805 + 45 strands.
pub fn reference_partition() -> Result<Partition> {
    let mut p = Partition::encode(sample_text(TEXT_LEN, 13), reference_primers(), 0x1D7E_5EED, 0x5C4A_3B1E)?;
    p.add_update(TARGET_BLOCK, reference_patch())?;
    p.add_update(17, UpdatePatch::new(100, 4, 100, *b"tiny"))?;
    p.add_update(302, UpdatePatch::new(40, 19, 40, *b" (see the footnote)"))?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_is_deterministic() {
        let t = sample_text(1000, 1);
        assert_eq!(t.len(), 1000);
        assert_eq!(t, sample_text(1000, 1));
        assert_ne!(t, sample_text(1000, 2));
        assert!(t.iter().all(|b| b.is_ascii()));
    }

    #[test]
    fn reference_counts() {
        let p = reference_partition().unwrap();
        assert_eq!(p.manifest.block_count, 587);
        assert_eq!(p.strands.len(), 8850);
        assert_eq!(p.manifest.total_strands(), 8850);
        assert!(p.resolved(TARGET_BLOCK).unwrap().starts_with(b"Alice, updated: "));
        let mut q = Partition::encode(vec![1; 300], reference_primers(), 1, 2).unwrap();
        for _ in 0..3 {
            q.add_update(0, UpdatePatch::identity()).unwrap();
        }
        assert!(q.add_update(0, UpdatePatch::identity()).is_err());
        assert!(q.add_update(1, UpdatePatch::new(40, 10, 0, vec![])).is_err());
    }
}
