//! Partition layout, strand framing and block addressing.
//!
//! A 150-base strand is laid out as
//!
//! | field       | bases     |
//! |-------------|-----------|
//! | forward     | 0..20     |
//! | sync `A`    | 20..21    |
//! | unit index  | 21..31    |
//! | version     | 31..32    |
//! | intra index | 32..34    |
//! | payload     | 34..130   |
//! | reverse     | 130..150  |
//!
//! Versions 0..4 are written A, C, G, T. The intra index is the column number
//! 0..15 in two base-4 digits (AA..TG).

mod manifest;
mod primer;

pub use manifest::{PartitionManifest, UpdatedBlock, MANIFEST_FORMAT};
pub use primer::{melting_temperature, validate_primer_pair, PrimerLibrary, PrimerPair, PrimerReport};

use crate::codec::{self, Base, DnaString, RandomizerSeed};
use crate::ecc::{self, COLUMN_BYTES, N as UNIT_COLUMNS};
use crate::error::{Error, Result};
use crate::index_tree::{IndexTree, SYNC_BASE};

/// Bytes of user data in one block.
pub const BLOCK_BYTES: usize = 256;
/// Random padding bytes appended before RS encoding.
pub const PAD_BYTES: usize = ecc::UNIT_BYTES - BLOCK_BYTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PartitionLayout {
    pub strand_len: usize,
    pub primer_len: usize,
    pub sync_len: usize,
    pub unit_index_len: usize,
    pub version_len: usize,
    pub intra_index_len: usize,
    pub payload_len: usize,
    pub version_slots: usize,
}

impl Default for PartitionLayout {
    fn default() -> Self {
        PartitionLayout {
            strand_len: 150,
            primer_len: 20,
            sync_len: 1,
            unit_index_len: 10,
            version_len: 1,
            intra_index_len: 2,
            payload_len: 96,
            version_slots: 4,
        }
    }
}

impl PartitionLayout {
    pub fn validate(&self) -> Result<()> {
        let sum = 2 * self.primer_len
            + self.sync_len
            + self.unit_index_len
            + self.version_len
            + self.intra_index_len
            + self.payload_len;
        if sum != self.strand_len {
            return Err(Error::Config(format!("layout fields sum to {sum}, strand is {}", self.strand_len)));
        }
        if self.payload_len != 4 * COLUMN_BYTES {
            return Err(Error::Config(format!(
                "payload of {} bases does not hold a {COLUMN_BYTES}-byte column",
                self.payload_len
            )));
        }
        if self.sync_len != 1 || self.version_len != 1 || self.intra_index_len != 2 {
            return Err(Error::Config("sync, version and intra-index fields are fixed at 1, 1 and 2 bases".into()));
        }
        if self.version_slots == 0 || self.version_slots > 4 {
            return Err(Error::Config(format!("{} version slots; one base holds at most 4", self.version_slots)));
        }
        if self.unit_index_len % 2 != 0 {
            return Err(Error::Config("unit index length must be even".into()));
        }
        Ok(())
    }

    pub fn tree_depth(&self) -> usize {
        self.unit_index_len / 2
    }

    pub fn sync_offset(&self) -> usize {
        self.primer_len
    }

    pub fn unit_index_offset(&self) -> usize {
        self.primer_len + self.sync_len
    }

    pub fn version_offset(&self) -> usize {
        self.unit_index_offset() + self.unit_index_len
    }

    pub fn intra_offset(&self) -> usize {
        self.version_offset() + self.version_len
    }

    pub fn payload_offset(&self) -> usize {
        self.intra_offset() + self.intra_index_len
    }

    pub fn reverse_offset(&self) -> usize {
        self.payload_offset() + self.payload_len
    }

    /// Bases between the full elongated primer and the reverse site:
    /// version + intra index + payload.
    pub fn tail_len(&self) -> usize {
        self.version_len + self.intra_index_len + self.payload_len
    }

    /// Bases between the main forward primer and the reverse site.
    pub fn body_len(&self) -> usize {
        self.sync_len + self.unit_index_len + self.tail_len()
    }
}

pub fn version_base(version: u8) -> Base {
    Base::from_bits(version)
}

pub fn intra_index(column: u8) -> [Base; 2] {
    [Base::from_bits(column >> 2), Base::from_bits(column)]
}

/// Column number for an intra index, or `None` for the unused TT.
pub fn column_of(intra: [Base; 2]) -> Option<u8> {
    let c = (intra[0].bits() << 2) | intra[1].bits();
    (c < UNIT_COLUMNS as u8).then_some(c)
}

/// One framed strand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrandRecord {
    pub block_no: usize,
    pub version: u8,
    pub column: u8,
    pub forward: DnaString,
    pub unit_index: DnaString,
    pub payload: DnaString,
    pub reverse: DnaString,
}

impl StrandRecord {
    pub fn to_dna(&self) -> DnaString {
        let mut s = DnaString::new();
        s.extend_from_slice(&self.forward);
        s.push(SYNC_BASE);
        s.extend_from_slice(&self.unit_index);
        s.push(version_base(self.version));
        s.extend_from_slice(&intra_index(self.column));
        s.extend_from_slice(&self.payload);
        s.extend_from_slice(&self.reverse);
        s
    }
}

/// Why a strand failed strict parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reject {
    BadLength(usize),
    WrongForwardPrimer,
    WrongReversePrimer,
    BadSync,
    UnknownUnitIndex,
    BadIntraIndex,
    VersionOutOfRange(u8),
}

impl std::fmt::Display for Reject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reject::BadLength(n) => write!(f, "bad length {n}"),
            Reject::WrongForwardPrimer => f.write_str("wrong forward primer"),
            Reject::WrongReversePrimer => f.write_str("wrong reverse primer"),
            Reject::BadSync => f.write_str("bad sync base"),
            Reject::UnknownUnitIndex => f.write_str("unit index is not a tree leaf"),
            Reject::BadIntraIndex => f.write_str("intra index out of range"),
            Reject::VersionOutOfRange(v) => write!(f, "version {v} beyond configured slots"),
        }
    }
}

/// Fields recovered from a strand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedStrand {
    pub block_no: usize,
    pub version: u8,
    pub column: u8,
    pub payload: DnaString,
}

/// Per-unit keystream seed: every (block, version) gets its own stream.
pub fn unit_seed(randomizer: RandomizerSeed, block_no: usize, version: u8) -> RandomizerSeed {
    RandomizerSeed(codec::derive_seed(randomizer.0, &[block_no as u64, version as u64]))
}

/// Randomize and pad 256 data bytes into the 264-byte RS input.
pub fn scramble_block(data: &[u8], randomizer: RandomizerSeed, block_no: usize, version: u8) -> Vec<u8> {
    let mut padded = data.to_vec();
    padded.resize(ecc::UNIT_BYTES, 0);
    codec::randomize(&padded, unit_seed(randomizer, block_no, version))
}

/// Inverse of `scramble_block`. Returns the 256 data bytes and whether the
/// padding came back as the expected keystream.
pub fn unscramble_block(unit: &[u8], randomizer: RandomizerSeed, block_no: usize, version: u8) -> (Vec<u8>, bool) {
    let plain = codec::randomize(unit, unit_seed(randomizer, block_no, version));
    let padding_ok = plain[BLOCK_BYTES..].iter().all(|&b| b == 0);
    (plain[..BLOCK_BYTES].to_vec(), padding_ok)
}

/// The 15 strands of one encoding unit.
pub fn build_strands(
    block_no: usize,
    version: u8,
    data: &[u8],
    manifest: &PartitionManifest,
    tree: &IndexTree,
) -> Result<Vec<StrandRecord>> {
    if data.len() != BLOCK_BYTES {
        return Err(Error::Size { expected: BLOCK_BYTES, actual: data.len() });
    }
    if version as usize >= manifest.layout.version_slots {
        return Err(Error::Address(format!(
            "version {version} exceeds {} slots",
            manifest.layout.version_slots
        )));
    }
    let unit_index = tree.leaf_index(block_no)?;
    let scrambled = scramble_block(data, manifest.randomizer_seed, block_no, version);
    let matrix = ecc::rs_encode_unit(&scrambled)?;
    Ok(matrix
        .columns
        .iter()
        .enumerate()
        .map(|(col, bytes)| StrandRecord {
            block_no,
            version,
            column: col as u8,
            forward: manifest.primers.forward.clone(),
            unit_index: unit_index.clone(),
            payload: codec::map_bits_to_bases(bytes),
            reverse: manifest.primers.reverse.clone(),
        })
        .collect())
}

/// Strict positional parse of a full-length strand.
pub fn parse_strand(
    s: &[Base],
    manifest: &PartitionManifest,
    tree: &IndexTree,
) -> std::result::Result<ParsedStrand, Reject> {
    let l = &manifest.layout;
    if s.len() != l.strand_len {
        return Err(Reject::BadLength(s.len()));
    }
    if s[..l.primer_len] != manifest.primers.forward[..] {
        return Err(Reject::WrongForwardPrimer);
    }
    if s[l.reverse_offset()..] != manifest.primers.reverse[..] {
        return Err(Reject::WrongReversePrimer);
    }
    if s[l.sync_offset()] != SYNC_BASE {
        return Err(Reject::BadSync);
    }
    let block_no = tree
        .locate(&s[l.unit_index_offset()..l.version_offset()])
        .ok_or(Reject::UnknownUnitIndex)?;
    let version = s[l.version_offset()].bits();
    if version as usize >= l.version_slots {
        return Err(Reject::VersionOutOfRange(version));
    }
    let column =
        column_of([s[l.intra_offset()], s[l.intra_offset() + 1]]).ok_or(Reject::BadIntraIndex)?;
    Ok(ParsedStrand {
        block_no,
        version,
        column,
        payload: DnaString::from(&s[l.payload_offset()..l.reverse_offset()]),
    })
}

/// Sync base + unit index + version base: the retrievable address of a
/// block version. All versions share the first 11 bases.
pub fn block_address(manifest: &PartitionManifest, tree: &IndexTree, block_no: usize, version: u8) -> Result<DnaString> {
    if version as usize >= manifest.layout.version_slots {
        return Err(Error::Address(format!("version {version} out of range")));
    }
    let mut out = DnaString::new();
    out.push(SYNC_BASE);
    out.extend_from_slice(&tree.leaf_index(block_no)?);
    out.push(version_base(version));
    Ok(out)
}

/// Payload column bytes of a parsed strand.
pub fn payload_column(payload: &[Base]) -> Result<[u8; COLUMN_BYTES]> {
    let bytes = codec::map_bases_to_bits(payload)?;
    bytes
        .try_into()
        .map_err(|v: Vec<u8>| Error::MalformedPayload(format!("payload holds {} bytes, expected {COLUMN_BYTES}", v.len())))
}

/// Split a file into blocks and build every version-0 strand.
pub fn encode_data(data: &[u8], manifest: &PartitionManifest, tree: &IndexTree) -> Result<Vec<StrandRecord>> {
    let blocks = data.len().div_ceil(BLOCK_BYTES);
    if blocks != manifest.block_count {
        return Err(Error::Config(format!(
            "{} bytes make {blocks} blocks but the manifest declares {}",
            data.len(),
            manifest.block_count
        )));
    }
    let mut out = Vec::with_capacity(blocks * UNIT_COLUMNS);
    for (b, chunk) in data.chunks(BLOCK_BYTES).enumerate() {
        let mut block = chunk.to_vec();
        block.resize(BLOCK_BYTES, 0);
        out.extend(build_strands(b, 0, &block, manifest, tree)?);
    }
    Ok(out)
}
