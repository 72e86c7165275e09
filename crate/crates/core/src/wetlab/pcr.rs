use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Pool, Provenance};
use crate::align::bounded_levenshtein;
use crate::codec::{Base, DnaString};
use crate::error::{Error, Result};
use crate::partition::PrimerPair;

/// Expected-value PCR.
///
/// Each cycle a strand at forward-primer distance `d <= max_edit_distance`
/// whose reverse site matches exactly yields `efficiency * misprime_decay^d`
/// new copies. Copies made at `d > 0` carry the primer in place of the
/// strand's original prefix, so from the next cycle on they amplify like
/// exact matches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcrParams {
    pub cycles: u32,
    pub efficiency: f64,
    pub misprime_decay: f64,
    pub max_edit_distance: usize,
}

impl Default for PcrParams {
    fn default() -> Self {
        PcrParams { cycles: 15, efficiency: 0.95, misprime_decay: 0.42, max_edit_distance: 3 }
    }
}

impl PcrParams {
    pub fn with_cycles(self, cycles: u32) -> Self {
        PcrParams { cycles, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::Config(format!("PCR efficiency {} outside (0, 1]", self.efficiency)));
        }
        if !(0.0..1.0).contains(&self.misprime_decay) {
            return Err(Error::Config(format!("misprime decay {} outside [0, 1)", self.misprime_decay)));
        }
        Ok(())
    }
}

/// Edit distance between `forward` and the strand's equally long prefix, if
/// the strand ends in `reverse` and the distance is at most `max`.
pub fn primer_distance(forward: &[Base], reverse: &[Base], strand: &[Base], max: usize) -> Option<usize> {
    if strand.len() < forward.len() + reverse.len() || strand[strand.len() - reverse.len()..] != *reverse {
        return None;
    }
    bounded_levenshtein(forward, &strand[..forward.len()], max)
}

struct Step {
    source: usize,
    target: usize,
    rate: f64,
}

fn amplify(pool: &Pool, pairs: &[(&[Base], &[Base])], params: &PcrParams) -> Result<Pool> {
    params.validate()?;
    if pairs.is_empty() {
        return Err(Error::Config("at least one primer pair is required".into()));
    }
    if let Some((f, _)) = pairs.iter().find(|(f, _)| f.len() < 20) {
        return Err(Error::Config(format!("forward primer of {} bases is shorter than 20", f.len())));
    }
    let mut out = pool.clone();
    if params.cycles == 0 {
        return Ok(out);
    }
    let per_pair = params.efficiency / pairs.len() as f64;

    let best_pair = |seq: &[Base]| -> Option<(usize, usize)> {
        pairs
            .iter()
            .enumerate()
            .filter_map(|(k, (f, r))| primer_distance(f, r, seq, params.max_edit_distance).map(|d| (d, k)))
            .min()
            .map(|(d, k)| (k, d))
    };

    let mut steps = Vec::new();
    let mut planned: HashMap<usize, ()> = HashMap::new();
    let mut queue: Vec<usize> = (0..out.len()).collect();
    while let Some(idx) = queue.pop() {
        if planned.insert(idx, ()).is_some() {
            continue;
        }
        let seq = out.entry_at(idx).unwrap().0.clone();
        let Some((k, d)) = best_pair(&seq) else { continue };
        let rate = per_pair * params.misprime_decay.powi(d as i32);
        if rate == 0.0 {
            continue;
        }
        let target = if d == 0 {
            idx
        } else {
            let fwd = pairs[k].0;
            let mut variant = DnaString::from(fwd);
            variant.extend_from_slice(&seq[fwd.len()..]);
            let t = out.add(variant, 0.0, Provenance::Misprimed);
            queue.push(t);
            t
        };
        steps.push(Step { source: idx, target, rate });
    }
    steps.sort_by_key(|s| (s.source, s.target));

    let mut abundance: Vec<f64> = (0..out.len()).map(|i| out.entry_at(i).unwrap().1.abundance).collect();
    let mut delta = vec![0.0; abundance.len()];
    for _ in 0..params.cycles {
        for s in &steps {
            delta[s.target] += abundance[s.source] * s.rate;
        }
        for (a, d) in abundance.iter_mut().zip(delta.iter_mut()) {
            *a += *d;
            *d = 0.0;
        }
    }
    for s in &steps {
        let e = out.entry_mut(s.target);
        if e.provenance == Provenance::Original && s.source == s.target {
            e.provenance = Provenance::Amplified;
        }
    }
    for (i, a) in abundance.into_iter().enumerate() {
        out.entry_mut(i).abundance = a;
    }
    Ok(out)
}

pub fn pcr(pool: &Pool, forward: &[Base], reverse: &[Base], params: &PcrParams) -> Result<Pool> {
    amplify(pool, &[(forward, reverse)], params)
}

/// Several pairs in one reaction sharing the primer budget equally; each
/// strand follows its best-matching pair.
pub fn multiplex_pcr(pool: &Pool, pairs: &[(DnaString, DnaString)], params: &PcrParams) -> Result<Pool> {
    let refs: Vec<(&[Base], &[Base])> = pairs.iter().map(|(f, r)| (f.as_slice(), r.as_slice())).collect();
    amplify(pool, &refs, params)
}

/// Cycles with the main primers, then with the elongated primer.
pub const TWO_STAGE_CYCLES: (u32, u32) = (10, 18);

/// Main primers first to isolate the partition, then the elongated primer.
pub fn two_stage_pcr(
    pool: &Pool,
    main: &PrimerPair,
    elongated_forward: &[Base],
    stage1: &PcrParams,
    stage2: &PcrParams,
) -> Result<Pool> {
    if !elongated_forward.starts_with(&main.forward) {
        return Err(Error::Config("elongated primer does not extend the main forward primer".into()));
    }
    let first = pcr(pool, &main.forward, &main.reverse, stage1)?;
    pcr(&first, elongated_forward, &main.reverse, stage2)
}
