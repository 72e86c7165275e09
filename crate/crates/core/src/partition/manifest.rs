//! Partition manifest and its TOML file representation.
//!
//! ```toml
//! format = "blockdna-manifest/1"
//! block_count = 587
//! file_len = 150272
//!
//! [layout]
//! strand_len = 150
//! primer_len = 20
//! sync_len = 1
//! unit_index_len = 10
//! version_len = 1
//! intra_index_len = 2
//! payload_len = 96
//! version_slots = 4
//!
//! [primers]
//! forward = "ACGT..."   # 20 bases
//! reverse = "TGCA..."   # 20 bases, as written on the strand
//!
//! [tree]
//! depth = 5
//! seed = "0x00000000000004d2"
//!
//! [randomizer]
//! seed = "0x000000000000162e"
//!
//! [[updated]]          # blocks with versions beyond the original
//! block = 531
//! versions = 2         # including the original
//! ```
//!
//! Seeds are written as hex strings because TOML integers are signed 64-bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PartitionLayout, PrimerPair, BLOCK_BYTES};
use crate::codec::RandomizerSeed;
use crate::error::{Error, Result};
use crate::index_tree::{build_tree, IndexTree, TreeConfig};

pub const MANIFEST_FORMAT: &str = "blockdna-manifest/1";

mod hex_seed {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:#018x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let text = String::deserialize(d)?;
        let digits = text.strip_prefix("0x").unwrap_or(&text);
        u64::from_str_radix(digits, 16).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TreeSection {
    depth: usize,
    #[serde(with = "hex_seed")]
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RandomizerSection {
    #[serde(with = "hex_seed")]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdatedBlock {
    pub block: usize,
    pub versions: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ManifestFile {
    format: String,
    block_count: usize,
    file_len: usize,
    layout: PartitionLayout,
    primers: PrimerPairText,
    tree: TreeSection,
    randomizer: RandomizerSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    updated: Vec<UpdatedBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct PrimerPairText {
    forward: String,
    reverse: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionManifest {
    pub layout: PartitionLayout,
    pub primers: PrimerPair,
    pub tree: TreeConfig,
    pub randomizer_seed: RandomizerSeed,
    pub block_count: usize,
    /// Length of the encoded file; the last block may be partial.
    pub file_len: usize,
    /// Blocks that carry update versions, sorted by block number.
    pub updated: Vec<UpdatedBlock>,
}

impl PartitionManifest {
    pub fn new(primers: PrimerPair, tree_seed: u64, randomizer_seed: u64, file_len: usize) -> Result<Self> {
        let layout = PartitionLayout::default();
        let m = PartitionManifest {
            layout,
            primers,
            tree: TreeConfig { depth: layout.tree_depth(), seed: tree_seed },
            randomizer_seed: RandomizerSeed(randomizer_seed),
            block_count: file_len.div_ceil(BLOCK_BYTES),
            file_len,
            updated: Vec::new(),
        };
        m.validate()?;
        Ok(m)
    }

    /// A full partition of `block_count` blocks with fixed test primers.
    pub fn for_testing(block_count: usize) -> Self {
        let primers = PrimerPair::parse("CAGTGACTTGCAGTACGATC", "GTCATGACAGTCACTGCATG").unwrap();
        PartitionManifest::new(primers, 0x5EED_0001, 0x5EED_0002, block_count * BLOCK_BYTES).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if self.primers.forward.len() != self.layout.primer_len || self.primers.reverse.len() != self.layout.primer_len {
            return Err(Error::Config(format!("primers must be {} bases", self.layout.primer_len)));
        }
        if self.tree.depth != self.layout.tree_depth() {
            return Err(Error::Config(format!(
                "tree depth {} does not match a {}-base unit index",
                self.tree.depth, self.layout.unit_index_len
            )));
        }
        if self.block_count == 0 {
            return Err(Error::Config("partition holds no blocks".into()));
        }
        if self.block_count > self.tree.leaf_count() {
            return Err(Error::Config(format!(
                "{} blocks exceed the tree's {} leaves",
                self.block_count,
                self.tree.leaf_count()
            )));
        }
        if self.file_len.div_ceil(BLOCK_BYTES) != self.block_count {
            return Err(Error::Config(format!(
                "file_len {} is inconsistent with {} blocks",
                self.file_len, self.block_count
            )));
        }
        for u in &self.updated {
            if u.block >= self.block_count || u.versions as usize > self.layout.version_slots || u.versions < 1 {
                return Err(Error::Config(format!("bad update entry for block {}", u.block)));
            }
        }
        Ok(())
    }

    pub fn tree(&self) -> Result<IndexTree> {
        build_tree(self.tree)
    }

    /// Number of stored versions of a block, original included.
    pub fn version_count(&self, block: usize) -> u8 {
        self.updated.iter().find(|u| u.block == block).map_or(1, |u| u.versions)
    }

    pub fn set_version_count(&mut self, block: usize, versions: u8) {
        match self.updated.iter_mut().find(|u| u.block == block) {
            Some(u) => u.versions = versions,
            None => {
                self.updated.push(UpdatedBlock { block, versions });
                self.updated.sort_by_key(|u| u.block);
            }
        }
        self.updated.retain(|u| u.versions > 1);
    }

    /// Logical length of the original block.
    pub fn block_len(&self, block: usize) -> usize {
        if block + 1 == self.block_count {
            self.file_len - BLOCK_BYTES * (self.block_count - 1)
        } else {
            BLOCK_BYTES
        }
    }

    pub fn total_strands(&self) -> usize {
        let versions: usize = (0..self.block_count).map(|b| self.version_count(b) as usize).sum();
        versions * crate::ecc::N
    }

    pub fn to_toml_string(&self) -> String {
        let file = ManifestFile {
            format: MANIFEST_FORMAT.into(),
            block_count: self.block_count,
            file_len: self.file_len,
            layout: self.layout,
            primers: PrimerPairText {
                forward: self.primers.forward.to_string(),
                reverse: self.primers.reverse.to_string(),
            },
            tree: TreeSection { depth: self.tree.depth, seed: self.tree.seed },
            randomizer: RandomizerSection { seed: self.randomizer_seed.0 },
            updated: self.updated.clone(),
        };
        toml::to_string(&file).expect("manifest serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ManifestFile = toml::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))?;
        if file.format != MANIFEST_FORMAT {
            return Err(Error::Parse(format!("manifest: unsupported format {:?}", file.format)));
        }
        let m = PartitionManifest {
            layout: file.layout,
            primers: PrimerPair::parse(&file.primers.forward, &file.primers.reverse)
                .map_err(|e| Error::Parse(format!("manifest field primers: {e}")))?,
            tree: TreeConfig { depth: file.tree.depth, seed: file.tree.seed },
            randomizer_seed: RandomizerSeed(file.randomizer.seed),
            block_count: file.block_count,
            file_len: file.file_len,
            updated: file.updated,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }
}
