use crate::codec::{hamming, DnaString, SplitMix64};
use crate::codec::Base;
use crate::error::{Error, Result};
use crate::index_tree::ValidationReport;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrimerPair {
    pub forward: DnaString,
    /// As written at the strand's 3' end.
    pub reverse: DnaString,
}

impl PrimerPair {
    pub fn parse(forward: &str, reverse: &str) -> Result<Self> {
        Ok(PrimerPair { forward: forward.parse()?, reverse: reverse.parse()? })
    }
}

/// Admitted primers plus the admission thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimerLibrary {
    pub pairs: Vec<PrimerPair>,
    pub min_pairwise_hamming: usize,
    pub gc_low: f64,
    pub gc_high: f64,
    pub max_homopolymer: usize,
}

impl Default for PrimerLibrary {
    fn default() -> Self {
        PrimerLibrary { pairs: Vec::new(), min_pairwise_hamming: 10, gc_low: 0.48, gc_high: 0.52, max_homopolymer: 3 }
    }
}

/// Additive 2/4 rule; informational only.
pub fn melting_temperature(primer: &[Base]) -> f64 {
    primer.iter().map(|b| if b.is_strong() { 4.0 } else { 2.0 }).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimerReport {
    pub checks: ValidationReport,
    pub forward_tm: f64,
    pub reverse_tm: f64,
}

impl PrimerReport {
    pub fn passed(&self) -> bool {
        self.checks.passed()
    }
}

pub fn validate_primer_pair(forward: &[Base], reverse: &[Base], library: &PrimerLibrary) -> PrimerReport {
    let mut checks = ValidationReport::default();
    let len_ok = forward.len() == 20 && reverse.len() == 20;
    checks.push("length", len_ok, format!("{} and {} bases", forward.len(), reverse.len()));

    let gc = |p: &[Base]| crate::codec::gc_fraction(p);
    let (gf, gr) = (gc(forward), gc(reverse));
    let gc_ok = [gf, gr].iter().all(|&g| g >= library.gc_low - 1e-9 && g <= library.gc_high + 1e-9);
    checks.push("gc", gc_ok, format!("forward {gf:.2}, reverse {gr:.2}"));

    let run = crate::codec::longest_homopolymer(forward).max(crate::codec::longest_homopolymer(reverse));
    checks.push("homopolymer", run <= library.max_homopolymer, format!("longest run {run}"));

    let mut closest = usize::MAX;
    if len_ok {
        closest = hamming(forward, reverse);
        for pair in &library.pairs {
            for admitted in [&pair.forward, &pair.reverse] {
                if admitted.len() == 20 {
                    closest = closest.min(hamming(forward, admitted)).min(hamming(reverse, admitted));
                }
            }
        }
    }
    checks.push(
        "distance",
        len_ok && closest >= library.min_pairwise_hamming,
        format!("closest primer at Hamming distance {closest}"),
    );
    PrimerReport { checks, forward_tm: melting_temperature(forward), reverse_tm: melting_temperature(reverse) }
}

impl PrimerLibrary {
    pub fn admit(&mut self, pair: PrimerPair) -> Result<()> {
        let report = validate_primer_pair(&pair.forward, &pair.reverse, self);
        if !report.passed() {
            let failed: Vec<String> =
                report.checks.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
            return Err(Error::Config(format!("primer pair rejected ({})", failed.join("; "))));
        }
        self.pairs.push(pair);
        Ok(())
    }

    /// Draw random GC-balanced 20-mers until `count` pairs are admitted.
    pub fn design(count: usize, seed: u64) -> Result<Self> {
        let mut lib = PrimerLibrary::default();
        let mut rng = SplitMix64::new(seed);
        let mut attempts = 0;
        let draw = |rng: &mut SplitMix64| -> DnaString {
            loop {
                let p: DnaString = (0..20).map(|_| Base::from_bits(rng.below(4) as u8)).collect();
                let strong = p.iter().filter(|b| b.is_strong()).count();
                if strong == 10 && p.longest_homopolymer() <= 3 {
                    return p;
                }
            }
        };
        while lib.pairs.len() < count {
            attempts += 1;
            if attempts > 100_000 {
                return Err(Error::Config(format!("could not design {count} primer pairs")));
            }
            let pair = PrimerPair { forward: draw(&mut rng), reverse: draw(&mut rng) };
            let _ = lib.admit(pair);
        }
        Ok(lib)
    }
}
