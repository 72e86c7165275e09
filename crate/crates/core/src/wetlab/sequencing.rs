use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Pool;
use crate::codec::{Base, DnaString};
use crate::error::{Error, Result};

/// Per-base read errors, applied independently to every sampled molecule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelModel {
    pub p_sub: f64,
    pub p_ins: f64,
    pub p_del: f64,
    /// Share of reads reported as the reverse complement.
    pub p_reverse: f64,
    pub seed: u64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel { p_sub: 0.002, p_ins: 0.0005, p_del: 0.0005, p_reverse: 0.0, seed: 0 }
    }
}

impl ChannelModel {
    pub fn noiseless(seed: u64) -> Self {
        ChannelModel { p_sub: 0.0, p_ins: 0.0, p_del: 0.0, p_reverse: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let ps = [self.p_sub, self.p_ins, self.p_del];
        if ps.iter().any(|p| !(0.0..1.0).contains(p)) || ps.iter().sum::<f64>() >= 1.0 {
            return Err(Error::Config("channel probabilities must lie in [0, 1) and sum below 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_reverse) {
            return Err(Error::Config("p_reverse must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn corrupt(&self, strand: &[Base], rng: &mut ChaCha8Rng) -> DnaString {
        let mut out = Vec::with_capacity(strand.len() + 4);
        let (del, ins, sub) = (self.p_del, self.p_del + self.p_ins, self.p_del + self.p_ins + self.p_sub);
        for &b in strand {
            let u: f64 = rng.gen();
            if u < del {
                continue;
            }
            if u < ins {
                out.push(Base::from_bits(rng.gen_range(0..4)));
                out.push(b);
            } else if u < sub {
                let shift = rng.gen_range(1..4u8);
                out.push(Base::from_bits((b.bits() + shift) % 4));
            } else {
                out.push(b);
            }
        }
        DnaString::from(out)
    }
}

/// A sequenced read and the pool entry it was sampled from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Read {
    pub seq: DnaString,
    pub origin: usize,
}

/// Sample `n_reads` molecules proportionally to abundance and pass each
/// through the channel.
pub fn sequence(pool: &Pool, n_reads: usize, channel: &ChannelModel) -> Result<Vec<Read>> {
    channel.validate()?;
    if n_reads == 0 {
        return Ok(Vec::new());
    }
    let weights: Vec<f64> = pool.iter().map(|(_, e)| e.abundance).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::Simulation(format!("cannot sample from pool: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(channel.seed);
    Ok((0..n_reads)
        .map(|_| {
            let origin = dist.sample(&mut rng);
            let mut seq = channel.corrupt(pool.entry_at(origin).unwrap().0, &mut rng);
            if channel.p_reverse > 0.0 && rng.gen_bool(channel.p_reverse) {
                seq = seq.reverse_complement();
            }
            Read { seq, origin }
        })
        .collect())
}

pub fn read_sequences(reads: &[Read]) -> Vec<DnaString> {
    reads.iter().map(|r| r.seq.clone()).collect()
}

/// Plain reads (one per line) or 4-line FASTQ records, detected from the
/// first non-empty line. Bases outside ACGT make the read unparseable.
pub fn parse_reads(text: &str) -> Result<Vec<DnaString>> {
    let mut lines = text.lines().map(str::trim).enumerate().filter(|(_, l)| !l.is_empty());
    let fastq = text.lines().map(str::trim).find(|l| !l.is_empty()).is_some_and(|l| l.starts_with('@'));
    let mut out = Vec::new();
    if fastq {
        while let Some((no, header)) = lines.next() {
            if !header.starts_with('@') {
                return Err(Error::Parse(format!("FASTQ line {}: expected '@' header", no + 1)));
            }
            let (sno, seq) = lines.next().ok_or_else(|| Error::Parse("FASTQ record truncated".into()))?;
            let (_, plus) = lines.next().ok_or_else(|| Error::Parse("FASTQ record truncated".into()))?;
            if !plus.starts_with('+') {
                return Err(Error::Parse(format!("FASTQ record at line {}: expected '+' separator", no + 1)));
            }
            lines.next().ok_or_else(|| Error::Parse("FASTQ record truncated".into()))?;
            out.push(seq.parse().map_err(|e| Error::Parse(format!("FASTQ line {}: {e}", sno + 1)))?);
        }
    } else {
        for (no, line) in lines {
            if line.starts_with('#') {
                continue;
            }
            out.push(line.parse().map_err(|e| Error::Parse(format!("reads line {}: {e}", no + 1)))?);
        }
    }
    Ok(out)
}

/// FASTQ records named `read_<n>` with a flat quality string.
pub fn reads_to_fastq(reads: &[DnaString]) -> String {
    let mut text = String::with_capacity(reads.len() * 320);
    for (i, r) in reads.iter().enumerate() {
        let seq = r.to_string();
        text.push_str(&format!("@read_{i}\n{seq}\n+\n{}\n", "I".repeat(seq.len())));
    }
    text
}

pub fn write_reads(path: &Path, reads: &[DnaString]) -> Result<()> {
    let mut text = String::with_capacity(reads.len() * 151);
    for r in reads {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}
