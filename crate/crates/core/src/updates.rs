//! Delete/insert update patches and version chains.
//!
//! A patch is stored as an ordinary 256-byte block in a version slot:
//!
//! | byte      | meaning                                   |
//! |-----------|-------------------------------------------|
//! | 0         | first byte to delete                      |
//! | 1         | number of bytes to delete                 |
//! | 2         | insert position, after the deletion       |
//! | 3         | number of bytes to insert                 |
//! | 4..4+len  | inserted bytes                            |
//! | rest      | zero                                      |

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::partition::BLOCK_BYTES;

pub const MAX_INSERT: usize = BLOCK_BYTES - 4;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UpdatePatch {
    pub del_start: u8,
    pub del_len: u8,
    pub ins_pos: u8,
    pub ins_bytes: Vec<u8>,
}

impl UpdatePatch {
    pub fn new(del_start: u8, del_len: u8, ins_pos: u8, ins_bytes: impl Into<Vec<u8>>) -> Self {
        UpdatePatch { del_start, del_len, ins_pos, ins_bytes: ins_bytes.into() }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn ins_len(&self) -> usize {
        self.ins_bytes.len()
    }
}

pub fn serialize_patch(p: &UpdatePatch) -> Result<[u8; BLOCK_BYTES]> {
    if p.ins_len() > MAX_INSERT {
        return Err(Error::PatchTooLarge(p.ins_len()));
    }
    let mut out = [0u8; BLOCK_BYTES];
    out[0] = p.del_start;
    out[1] = p.del_len;
    out[2] = p.ins_pos;
    out[3] = p.ins_len() as u8;
    out[4..4 + p.ins_len()].copy_from_slice(&p.ins_bytes);
    Ok(out)
}

pub fn deserialize_patch(record: &[u8]) -> Result<UpdatePatch> {
    if record.len() != BLOCK_BYTES {
        return Err(Error::Size { expected: BLOCK_BYTES, actual: record.len() });
    }
    let ins_len = record[3] as usize;
    if ins_len > MAX_INSERT {
        return Err(Error::PatchTooLarge(ins_len));
    }
    Ok(UpdatePatch {
        del_start: record[0],
        del_len: record[1],
        ins_pos: record[2],
        ins_bytes: record[4..4 + ins_len].to_vec(),
    })
}

/// Delete `del_len` bytes at `del_start`, then insert at `ins_pos`.
pub fn apply_patch(block: &[u8], p: &UpdatePatch) -> Result<Vec<u8>> {
    let (start, len, pos) = (p.del_start as usize, p.del_len as usize, p.ins_pos as usize);
    if start + len > block.len() {
        return Err(Error::PatchApply(format!(
            "deletion {start}..{} beyond block length {}",
            start + len,
            block.len()
        )));
    }
    let mut out = Vec::with_capacity(block.len() - len + p.ins_len());
    out.extend_from_slice(&block[..start]);
    out.extend_from_slice(&block[start + len..]);
    if pos > out.len() {
        return Err(Error::PatchApply(format!("insert position {pos} beyond length {} after deletion", out.len())));
    }
    if out.len() + p.ins_len() > BLOCK_BYTES {
        return Err(Error::PatchApply(format!(
            "result of {} bytes exceeds block capacity {BLOCK_BYTES}",
            out.len() + p.ins_len()
        )));
    }
    out.splice(pos..pos, p.ins_bytes.iter().copied());
    Ok(out)
}

/// An original block and its patches for versions 1, 2, 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionChain {
    pub original: Vec<u8>,
    pub patches: Vec<UpdatePatch>,
}

pub fn resolve_chain(chain: &VersionChain) -> Result<Vec<u8>> {
    chain.patches.iter().enumerate().try_fold(chain.original.clone(), |block, (i, p)| {
        apply_patch(&block, p).map_err(|e| Error::Chain { version: i + 1, source: Box::new(e) })
    })
}

/// One entry of a patch description file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PatchSpec {
    pub block: usize,
    pub del_start: u8,
    pub del_len: u8,
    pub ins_pos: u8,
    #[serde(default)]
    pub ins_text: String,
}

impl PatchSpec {
    pub fn to_patch(&self) -> Result<UpdatePatch> {
        let p = UpdatePatch::new(self.del_start, self.del_len, self.ins_pos, self.ins_text.as_bytes());
        if p.ins_len() > MAX_INSERT {
            return Err(Error::PatchTooLarge(p.ins_len()));
        }
        Ok(p)
    }
}

#[derive(Debug, Deserialize)]
struct PatchFile {
    #[serde(default)]
    patch: Vec<PatchSpec>,
}

/// Parse a patch description file:
///
/// ```toml
/// [[patch]]
/// block = 531
/// del_start = 0
/// del_len = 5
/// ins_pos = 0
/// ins_text = "HOWDY"
/// ```
pub fn parse_patch_file(text: &str) -> Result<Vec<PatchSpec>> {
    let file: PatchFile = toml::from_str(text).map_err(|e| Error::Parse(format!("patch file: {e}")))?;
    Ok(file.patch)
}

pub fn load_patch_file(path: &Path) -> Result<Vec<PatchSpec>> {
    parse_patch_file(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_patch_serializes_to_zeros() {
        assert_eq!(serialize_patch(&UpdatePatch::identity()).unwrap(), [0u8; 256]);
    }

    #[test]
    fn howdy_layout() {
        let rec = serialize_patch(&UpdatePatch::new(0, 5, 0, *b"HOWDY")).unwrap();
        assert_eq!(&rec[..9], &[0, 5, 0, 5, b'H', b'O', b'W', b'D', b'Y']);
        assert!(rec[9..].iter().all(|&b| b == 0));
    }

    #[test]
    fn too_large_insert() {
        let p = UpdatePatch::new(0, 0, 0, vec![1u8; 253]);
        assert!(matches!(serialize_patch(&p), Err(Error::PatchTooLarge(253))));
        assert!(serialize_patch(&UpdatePatch::new(0, 0, 0, vec![1u8; 252])).is_ok());
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply_patch(b"HELLOWORLD", &UpdatePatch::identity()).unwrap(), b"HELLOWORLD");
        assert_eq!(apply_patch(b"HELLOWORLD", &UpdatePatch::new(0, 5, 0, *b"HOWDY")).unwrap(), b"HOWDYWORLD");
        assert!(matches!(apply_patch(b"HELLO", &UpdatePatch::new(3, 5, 0, vec![])), Err(Error::PatchApply(_))));
        assert!(matches!(apply_patch(b"HELLO", &UpdatePatch::new(0, 1, 5, vec![])), Err(Error::PatchApply(_))));
        let full = vec![0u8; 256];
        assert!(apply_patch(&full, &UpdatePatch::new(0, 0, 0, *b"X")).is_err());
    }

    #[test]
    fn patches_do_not_commute() {
        // p2 inserts what p1 deletes
        let p1 = UpdatePatch::new(0, 1, 0, vec![]);
        let p2 = UpdatePatch::new(0, 0, 0, *b"Z");
        let block = b"ABC";
        let a = apply_patch(&apply_patch(block, &p1).unwrap(), &p2).unwrap();
        let b = apply_patch(&apply_patch(block, &p2).unwrap(), &p1).unwrap();
        assert_eq!(a, b"ZBC");
        assert_eq!(b, b"ABC");
        assert_ne!(a, b);
    }

    #[test]
    fn chains() {
        let original = b"Alice was beginning to get very tired of sitting by her sister".to_vec();
        assert_eq!(resolve_chain(&VersionChain { original: original.clone(), patches: vec![] }).unwrap(), original);
        let p1 = UpdatePatch::new(0, 5, 0, *b"Alicia");
        let p2 = UpdatePatch::new(7, 3, 7, *b"had been");
        let p3 = UpdatePatch::new(0, 0, 0, *b"> ");
        let chain = VersionChain { original: original.clone(), patches: vec![p1.clone()] };
        assert_eq!(resolve_chain(&chain).unwrap(), b"Alicia was beginning to get very tired of sitting by her sister");
        let chain = VersionChain { original: original.clone(), patches: vec![p1.clone(), p2.clone(), p3.clone()] };
        let manual = apply_patch(&apply_patch(&apply_patch(&original, &p1).unwrap(), &p2).unwrap(), &p3).unwrap();
        assert_eq!(resolve_chain(&chain).unwrap(), manual);
        assert_eq!(manual, b"> Alicia had been beginning to get very tired of sitting by her sister");
        let bad = VersionChain { original, patches: vec![p1, UpdatePatch::new(250, 10, 0, vec![])] };
        assert!(matches!(resolve_chain(&bad), Err(Error::Chain { version: 2, .. })));
    }

    #[test]
    fn patch_file() {
        let specs = parse_patch_file(
            "[[patch]]\nblock = 531\ndel_start = 0\ndel_len = 5\nins_pos = 0\nins_text = \"HOWDY\"\n",
        )
        .unwrap();
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].to_patch().unwrap(), UpdatePatch::new(0, 5, 0, *b"HOWDY"));
        assert!(parse_patch_file("[[patch]]\nblock = \"x\"").is_err());
    }

    fn valid_patch(len: usize) -> impl Strategy<Value = UpdatePatch> {
        (0..=len).prop_flat_map(move |start| {
            (Just(start), 0..=(len - start).min(255)).prop_flat_map(move |(start, del)| {
                let after = len - del;
                let room = (BLOCK_BYTES - after).min(MAX_INSERT);
                (Just(start), Just(del), 0..=after.min(255), proptest::collection::vec(any::<u8>(), 0..=room))
                    .prop_map(|(s, d, pos, ins)| UpdatePatch::new(s as u8, d as u8, pos as u8, ins))
            })
        })
    }

    fn chain_strategy() -> impl Strategy<Value = (Vec<u8>, Vec<UpdatePatch>)> {
        // patches drawn against the evolving length by applying as we go
        (proptest::collection::vec(any::<u8>(), 0..=255), proptest::collection::vec(any::<u64>(), 0..=3)).prop_map(
            |(original, seeds)| {
                let mut block = original.clone();
                let mut patches = Vec::new();
                for s in seeds {
                    let len = block.len();
                    let start = (s % (len as u64 + 1)) as usize;
                    let del = ((s >> 16) % ((len - start).min(255) as u64 + 1)) as usize;
                    let after = len - del;
                    let pos = ((s >> 32) % (after.min(255) as u64 + 1)) as usize;
                    let ins_len = ((s >> 48) % ((BLOCK_BYTES - after).min(MAX_INSERT) as u64 + 1)) as usize;
                    let p = UpdatePatch::new(start as u8, del as u8, pos as u8, vec![(s & 0xFF) as u8; ins_len]);
                    block = apply_patch(&block, &p).unwrap();
                    patches.push(p);
                }
                (original, patches)
            },
        )
    }

    proptest! {
        #[test]
        fn serialize_roundtrip(p in valid_patch(256)) {
            let rec = serialize_patch(&p).unwrap();
            prop_assert_eq!(deserialize_patch(&rec).unwrap(), p);
        }

        #[test]
        fn apply_changes_length_as_documented(p in valid_patch(200)) {
            let block = vec![9u8; 200];
            let out = apply_patch(&block, &p).unwrap();
            prop_assert_eq!(out.len(), 200 - p.del_len as usize + p.ins_len());
        }

        #[test]
        fn incremental_resolution((original, patches) in chain_strategy()) {
            for k in 0..patches.len() {
                let first_k = resolve_chain(&VersionChain { original: original.clone(), patches: patches[..k].to_vec() }).unwrap();
                let k_plus_1 = resolve_chain(&VersionChain { original: original.clone(), patches: patches[..=k].to_vec() }).unwrap();
                prop_assert_eq!(apply_patch(&first_k, &patches[k]).unwrap(), k_plus_1);
            }
        }
    }
}
