use crate::codec::Base;

pub const DEFAULT_WINDOW: usize = 3;

fn plurality<I: IntoIterator<Item = Base>>(bases: I) -> Option<Base> {
    let mut counts = [0usize; 4];
    let mut any = false;
    for b in bases {
        counts[b.bits() as usize] += 1;
        any = true;
    }
    // first maximum in A, C, G, T order
    any.then(|| Base::from_bits((0..4).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap() as u8))
}

/// One left-to-right majority alignment pass producing exactly `len` bases.
fn pass(members: &[Vec<Base>], len: usize, window: usize) -> Vec<Base> {
    let mut ptr = vec![0usize; members.len()];
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let current = members.iter().zip(&ptr).filter_map(|(m, &p)| m.get(p).copied());
        let Some(c) = plurality(current) else {
            out.push(Base::A);
            continue;
        };
        out.push(c);
        let agreeing: Vec<usize> = (0..members.len()).filter(|&k| members[k].get(ptr[k]) == Some(&c)).collect();
        let look: Vec<Option<Base>> = (1..=window)
            .map(|o| plurality(agreeing.iter().filter_map(|&k| members[k].get(ptr[k] + o).copied())))
            .collect();
        for (k, m) in members.iter().enumerate() {
            let p = ptr[k];
            match m.get(p) {
                None => {}
                Some(&b) if b == c => ptr[k] += 1,
                Some(_) => {
                    let score = |offset: usize| {
                        look.iter().enumerate().filter(|(o, w)| w.is_some() && m.get(p + offset + o).copied() == **w).count()
                    };
                    let sub = score(1);
                    let del = score(0);
                    let ins = if m.get(p + 1) == Some(&c) { Some(score(2)) } else { None };
                    // ties favour substitution, then deletion
                    let mut step = 1;
                    let mut best = sub;
                    if del > best {
                        best = del;
                        step = 0;
                    }
                    if let Some(s) = ins {
                        if s > best {
                            step = 2;
                        }
                    }
                    ptr[k] += step;
                }
            }
        }
    }
    out
}

/// Double-sided majority alignment: the forward pass supplies the first half,
/// a pass over the reversed members the second half.
pub fn reconstruct(members: &[impl AsRef<[Base]>], expected_len: usize, window: usize) -> Vec<Base> {
    if members.is_empty() {
        return vec![Base::A; expected_len];
    }
    let fwd_members: Vec<Vec<Base>> = members.iter().map(|m| m.as_ref().to_vec()).collect();
    let forward = pass(&fwd_members, expected_len, window);
    let rev_members: Vec<Vec<Base>> = fwd_members.iter().map(|m| m.iter().rev().copied().collect()).collect();
    let mut backward = pass(&rev_members, expected_len, window);
    backward.reverse();
    let half = expected_len / 2;
    forward[..half].iter().chain(&backward[half..]).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_strand(rng: &mut ChaCha8Rng, len: usize) -> Vec<Base> {
        (0..len).map(|_| Base::from_bits(rng.gen_range(0..4))).collect()
    }

    #[test]
    fn identical_members() {
        let s: Vec<Base> = "ACGTTGCAAC".parse::<crate::codec::DnaString>().unwrap().into_bases();
        assert_eq!(reconstruct(&[s.clone(), s.clone(), s.clone()], 10, DEFAULT_WINDOW), s);
        assert_eq!(reconstruct(&[s.clone()], 10, DEFAULT_WINDOW), s);
    }

    #[test]
    fn single_substitution_outvoted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_strand(&mut rng, 99);
        let mut members = vec![s.clone(); 9];
        let mut bad = s.clone();
        bad[40] = Base::from_bits((bad[40].bits() + 1) % 4);
        members.push(bad);
        assert_eq!(reconstruct(&members, 99, DEFAULT_WINDOW), s);
    }

    #[test]
    fn independent_deletions_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ok = 0;
        for _ in 0..100 {
            let s = random_strand(&mut rng, 99);
            let members: Vec<Vec<Base>> = (0..10)
                .map(|_| {
                    let mut m = s.clone();
                    m.remove(rng.gen_range(0..m.len()));
                    m
                })
                .collect();
            ok += usize::from(reconstruct(&members, 99, DEFAULT_WINDOW) == s);
        }
        assert!(ok >= 99, "{ok}/100");
    }

    #[test]
    fn mixed_indels_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ok = 0;
        for _ in 0..100 {
            let s = random_strand(&mut rng, 99);
            let members: Vec<Vec<Base>> = (0..8)
                .map(|_| {
                    let mut m = s.clone();
                    let pos = rng.gen_range(0..m.len());
                    match rng.gen_range(0..3) {
                        0 => {
                            m.remove(pos);
                        }
                        1 => m.insert(pos, Base::from_bits(rng.gen_range(0..4))),
                        _ => m[pos] = Base::from_bits((m[pos].bits() + 1) % 4),
                    }
                    m
                })
                .collect();
            ok += usize::from(reconstruct(&members, 99, DEFAULT_WINDOW) == s);
        }
        assert!(ok >= 95, "{ok}/100");
    }

    #[test]
    fn output_length_is_fixed() {
        let short = vec![Base::C; 5];
        assert_eq!(reconstruct(&[short], 8, 3).len(), 8);
        assert_eq!(reconstruct(&[] as &[Vec<Base>], 4, 3), vec![Base::A; 4]);
    }
}
