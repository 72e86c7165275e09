//! Simulated test tube.
//!
//! Abundances are real-valued expected copy counts. Randomness enters only
//! through explicit seeds: sequencing, measurement noise and synthesis bias.
//!
//! Pool file format, one entry per line:
//!
//! ```text
//! # comment
//! <abundance>\t<sequence>[\t<provenance>]
//! ```
//!
//! The optional third column is one of `original`, `amplified`, `misprimed`
//! and defaults to `original` when absent.

mod mixing;
mod pcr;
mod sequencing;

pub use mixing::{measure, mix_amplify_then_measure, mix_measure_then_amplify, MeasurementModel, MixReport};
pub use pcr::{multiplex_pcr, pcr, primer_distance, two_stage_pcr, PcrParams, TWO_STAGE_CYCLES};
pub use sequencing::{parse_reads, read_sequences, reads_to_fastq, sequence, write_reads, ChannelModel, Read};

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{Base, DnaString};
use crate::error::{Error, Result};

/// Spread of per-strand synthesis yield.
pub const DEFAULT_SYNTHESIS_BIAS: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Original,
    Amplified,
    Misprimed,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::Amplified => "amplified",
            Provenance::Misprimed => "misprimed",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Provenance::Original),
            "amplified" => Ok(Provenance::Amplified),
            "misprimed" => Ok(Provenance::Misprimed),
            other => Err(Error::Parse(format!("unknown provenance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolEntry {
    pub abundance: f64,
    pub provenance: Provenance,
}

/// Sequence to abundance map in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pool {
    entries: IndexMap<DnaString, PoolEntry>,
}

impl Pool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every strand at the same abundance.
    pub fn uniform<I: IntoIterator<Item = DnaString>>(strands: I, abundance: f64) -> Self {
        let mut pool = Pool::new();
        for s in strands {
            pool.add(s, abundance, Provenance::Original);
        }
        pool
    }

    /// Synthesis with multiplicative bias: each strand's abundance is scaled
    /// by a factor drawn uniformly from `[1 - bias, 1 + bias]`.
    pub fn synthesize<I: IntoIterator<Item = DnaString>>(strands: I, abundance: f64, bias: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool = Pool::new();
        for s in strands {
            let factor = if bias > 0.0 { rng.gen_range(1.0 - bias..=1.0 + bias) } else { 1.0 };
            pool.add(s, abundance * factor, Provenance::Original);
        }
        pool
    }

    /// Add abundance; an existing entry keeps its provenance.
    pub fn add(&mut self, seq: DnaString, abundance: f64, provenance: Provenance) -> usize {
        let entry = self.entries.entry(seq);
        let idx = entry.index();
        entry.or_insert(PoolEntry { abundance: 0.0, provenance }).abundance += abundance;
        idx
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().map(|e| e.abundance).sum()
    }

    pub fn get(&self, seq: &[Base]) -> Option<&PoolEntry> {
        self.entries.get(&DnaString::from(seq))
    }

    pub fn entry_at(&self, idx: usize) -> Option<(&DnaString, &PoolEntry)> {
        self.entries.get_index(idx)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DnaString, &PoolEntry)> {
        self.entries.iter()
    }

    pub(crate) fn entry_mut(&mut self, idx: usize) -> &mut PoolEntry {
        &mut self.entries[idx]
    }

    /// Every abundance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Pool {
        let mut out = self.clone();
        for e in out.entries.values_mut() {
            e.abundance *= factor;
        }
        out
    }

    /// Union of two pools; abundances of shared sequences add.
    pub fn combined(&self, other: &Pool) -> Pool {
        let mut out = self.clone();
        for (s, e) in other.iter() {
            out.add(s.clone(), e.abundance, e.provenance);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# abundance\tsequence\tprovenance\n");
        for (s, e) in self.iter() {
            out.push_str(&format!("{}\t{}\t{}\n", e.abundance, s, e.provenance.as_str()));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Pool> {
        let mut pool = Pool::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("pool line {}: {what}", no + 1));
            let mut fields = line.split('\t');
            let abundance: f64 = fields
                .next()
                .and_then(|a| a.trim().parse().ok())
                .ok_or_else(|| bad("abundance is not a number"))?;
            if !abundance.is_finite() || abundance < 0.0 {
                return Err(bad("abundance must be finite and non-negative"));
            }
            let seq: DnaString =
                fields.next().ok_or_else(|| bad("missing sequence"))?.trim().parse().map_err(|_| bad("bad sequence"))?;
            let provenance = match fields.next() {
                Some(p) => p.trim().parse().map_err(|_| bad("bad provenance"))?,
                None => Provenance::Original,
            };
            pool.add(seq, abundance, provenance);
        }
        Ok(pool)
    }

    pub fn load(path: &Path) -> Result<Pool> {
        Pool::parse(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

impl fmt::Display for Pool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pool of {} sequences, total abundance {}", self.len(), self.total())
    }
}
