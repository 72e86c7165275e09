use std::collections::HashMap;

use crate::align::bounded_levenshtein;
use crate::codec::DnaString;

pub const DEFAULT_THRESHOLD: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// The founding member.
    pub representative: DnaString,
    pub members: Vec<DnaString>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Greedy single pass: each payload joins the first cluster whose
/// representative lies within `threshold * len` edits, else founds one.
pub fn cluster_payloads(payloads: &[DnaString], threshold: f64) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut exact: HashMap<DnaString, usize> = HashMap::new();
    for p in payloads {
        if let Some(&c) = exact.get(p) {
            clusters[c].members.push(p.clone());
            continue;
        }
        let k = (threshold * p.len() as f64).floor() as usize;
        let home = clusters.iter().position(|c| bounded_levenshtein(&c.representative, p, k).is_some());
        let c = match home {
            Some(c) => {
                clusters[c].members.push(p.clone());
                c
            }
            None => {
                clusters.push(Cluster { representative: p.clone(), members: vec![p.clone()] });
                clusters.len() - 1
            }
        };
        exact.insert(p.clone(), c);
    }
    clusters
}

/// Descending size, ties by lexicographic representative.
pub fn sort_clusters(clusters: &mut [Cluster]) {
    clusters.sort_by(|a, b| b.size().cmp(&a.size()).then_with(|| a.representative.cmp(&b.representative)));
}
