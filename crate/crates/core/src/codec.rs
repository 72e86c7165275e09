//! Nucleotide alphabet, the two-bits-per-base mapping and seeded data
//! randomization.
//!
//! The randomization keystream is SplitMix64 run in counter mode: word `i`
//! of the stream for seed `s` is `mix(s + (i + 1) * 0x9E37_79B9_7F4A_7C15)`
//! where `mix` is the SplitMix64 finalizer, and each word is emitted as eight
//! little-endian bytes. The same function seeds every other piece of
//! persistent randomness in the crate (tree shuffles, per-unit seeds), so a
//! stored pool can be decoded by any implementation that reproduces it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One nucleotide. The discriminant is the two-bit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Base {
    A = 0,
    C = 1,
    G = 2,
    T = 3,
}

impl Base {
    /// Canonical order A < C < G < T.
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    #[inline]
    pub fn from_bits(bits: u8) -> Base {
        Base::ALL[(bits & 3) as usize]
    }

    #[inline]
    pub fn bits(self) -> u8 {
        self as u8
    }

    /// G and C form three hydrogen bonds.
    #[inline]
    pub fn is_strong(self) -> bool {
        matches!(self, Base::C | Base::G)
    }

    #[inline]
    pub fn complement(self) -> Base {
        match self {
            Base::A => Base::T,
            Base::C => Base::G,
            Base::G => Base::C,
            Base::T => Base::A,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
        }
    }

    pub fn from_char(c: char) -> Option<Base> {
        match c {
            'A' | 'a' => Some(Base::A),
            'C' | 'c' => Some(Base::C),
            'G' | 'g' => Some(Base::G),
            'T' | 't' => Some(Base::T),
            _ => None,
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// An owned sequence of bases.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DnaString(Vec<Base>);

impl DnaString {
    pub fn new() -> Self {
        DnaString(Vec::new())
    }

    pub fn from_bases(bases: Vec<Base>) -> Self {
        DnaString(bases)
    }

    pub fn as_slice(&self) -> &[Base] {
        &self.0
    }

    pub fn into_bases(self) -> Vec<Base> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, b: Base) {
        self.0.push(b);
    }

    pub fn extend_from_slice(&mut self, bases: &[Base]) {
        self.0.extend_from_slice(bases);
    }

    pub fn reverse_complement(&self) -> DnaString {
        DnaString(self.0.iter().rev().map(|b| b.complement()).collect())
    }

    /// Fraction of G/C bases; 0 for the empty string.
    pub fn gc_fraction(&self) -> f64 {
        gc_fraction(&self.0)
    }

    pub fn longest_homopolymer(&self) -> usize {
        longest_homopolymer(&self.0)
    }
}

impl std::ops::Deref for DnaString {
    type Target = [Base];
    fn deref(&self) -> &[Base] {
        &self.0
    }
}

impl AsRef<[Base]> for DnaString {
    fn as_ref(&self) -> &[Base] {
        &self.0
    }
}

impl From<Vec<Base>> for DnaString {
    fn from(v: Vec<Base>) -> Self {
        DnaString(v)
    }
}

impl From<&[Base]> for DnaString {
    fn from(v: &[Base]) -> Self {
        DnaString(v.to_vec())
    }
}

impl FromIterator<Base> for DnaString {
    fn from_iter<I: IntoIterator<Item = Base>>(iter: I) -> Self {
        DnaString(iter.into_iter().collect())
    }
}

impl fmt::Display for DnaString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|b| b.to_char()).collect();
        f.write_str(&s)
    }
}

impl FromStr for DnaString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| {
                Base::from_char(c).ok_or_else(|| {
                    Error::Parse(format!("invalid base {c:?} at position {i}"))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(DnaString)
    }
}

pub fn gc_fraction(bases: &[Base]) -> f64 {
    if bases.is_empty() {
        return 0.0;
    }
    bases.iter().filter(|b| b.is_strong()).count() as f64 / bases.len() as f64
}

pub fn longest_homopolymer(bases: &[Base]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev = None;
    for &b in bases {
        if Some(b) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(b);
        }
        best = best.max(run);
    }
    best
}

pub fn hamming(a: &[Base], b: &[Base]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// 00→A, 01→C, 10→G, 11→T, most significant pair first.
pub fn map_bits_to_bases(data: &[u8]) -> DnaString {
    let mut out = Vec::with_capacity(data.len() * 4);
    for &byte in data {
        for shift in [6, 4, 2, 0] {
            out.push(Base::from_bits(byte >> shift));
        }
    }
    DnaString(out)
}

pub fn map_bases_to_bits(s: &[Base]) -> Result<Vec<u8>> {
    if s.len() % 4 != 0 {
        return Err(Error::MalformedPayload(format!(
            "{} bases is not a whole number of bytes",
            s.len()
        )));
    }
    Ok(s.chunks_exact(4)
        .map(|c| c.iter().fold(0u8, |acc, b| (acc << 2) | b.bits()))
        .collect())
}

/// Seed for the data randomization keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct RandomizerSeed(pub u64);

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer.
#[inline]
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sequential SplitMix64. `next_u64` yields exactly the keystream words.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        splitmix64_mix(self.state)
    }

    /// Uniform in `0..n` by rejection; `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Fisher-Yates from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// Keystream word `i` for `seed`, random access.
#[inline]
pub fn keystream_word(seed: u64, i: u64) -> u64 {
    splitmix64_mix(seed.wrapping_add((i.wrapping_add(1)).wrapping_mul(GOLDEN_GAMMA)))
}

/// Derive an independent stream seed from a base seed and a list of labels.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64_mix(base), |acc, &l| splitmix64_mix(acc ^ splitmix64_mix(l.wrapping_add(GOLDEN_GAMMA))))
}

/// XOR `data` with the keystream of `seed`. Applying it twice is the identity.
pub fn randomize(data: &[u8], seed: RandomizerSeed) -> Vec<u8> {
    let mut out = data.to_vec();
    for (i, chunk) in out.chunks_mut(8).enumerate() {
        let word = keystream_word(seed.0, i as u64).to_le_bytes();
        for (b, k) in chunk.iter_mut().zip(word) {
            *b ^= k;
        }
    }
    out
}
