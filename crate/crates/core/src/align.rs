//! Edit-distance primitives shared by the simulator and the decoder.

use crate::codec::Base;

/// Unbounded Levenshtein distance.
pub fn levenshtein(a: &[Base], b: &[Base]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance if it is at most `k`, computed in a diagonal band.
pub fn bounded_levenshtein(a: &[Base], b: &[Base], k: usize) -> Option<usize> {
    let (n, m) = (a.len(), b.len());
    if n.abs_diff(m) > k {
        return None;
    }
    if a == b {
        return Some(0);
    }
    const INF: usize = usize::MAX / 2;
    let width = 2 * k + 1;
    // row i stores columns j = i - k + t for t in 0..width
    let mut prev = vec![INF; width];
    let mut cur = vec![INF; width];
    for t in 0..width {
        let j = t as isize - k as isize;
        if (0..=m as isize).contains(&j) {
            prev[t] = j as usize;
        }
    }
    for i in 1..=n {
        let mut row_min = INF;
        for t in 0..width {
            let j = i as isize - k as isize + t as isize;
            cur[t] = INF;
            if j < 0 || j > m as isize {
                continue;
            }
            let j = j as usize;
            let mut best = INF;
            if j == 0 {
                best = i;
            } else {
                // diagonal: prev row, same t
                if prev[t] < INF {
                    best = best.min(prev[t] + usize::from(a[i - 1] != b[j - 1]));
                }
                if t > 0 && cur[t - 1] < INF {
                    best = best.min(cur[t - 1] + 1);
                }
            }
            if t + 1 < width && prev[t + 1] < INF {
                best = best.min(prev[t + 1] + 1);
            }
            cur[t] = best;
            row_min = row_min.min(best);
        }
        if row_min > k {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let t = m + k - n;
    (prev[t] <= k).then_some(prev[t])
}

/// Align all of `pattern` against a prefix of `text` anchored at position 0.
///
/// Returns `(end, edits)` where `text[..end]` is the aligned prefix. Among
/// equal edit counts the end closest to `pattern.len()` wins.
pub fn locate_prefix(pattern: &[Base], text: &[Base], max_edits: usize) -> Option<(usize, usize)> {
    let m = pattern.len();
    if text.len() >= m && text[..m] == *pattern {
        return Some((m, 0));
    }
    let cols = (m + max_edits).min(text.len());
    const INF: usize = usize::MAX / 2;
    let mut prev: Vec<usize> = (0..=cols).collect();
    let mut cur = vec![INF; cols + 1];
    for i in 1..=m {
        cur[0] = i;
        for j in 1..=cols {
            if j + max_edits < i || j > i + max_edits {
                cur[j] = INF;
                continue;
            }
            let sub = prev[j - 1] + usize::from(pattern[i - 1] != text[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let mut best: Option<(usize, usize)> = None;
    for (j, &d) in prev.iter().enumerate() {
        if d > max_edits {
            continue;
        }
        let better = match best {
            None => true,
            Some((bj, bd)) => d < bd || (d == bd && j.abs_diff(m) < bj.abs_diff(m)),
        };
        if better {
            best = Some((j, d));
        }
    }
    best
}

/// Mirror of [`locate_prefix`] anchored at the end of `text`; returns the start.
pub fn locate_suffix(pattern: &[Base], text: &[Base], max_edits: usize) -> Option<(usize, usize)> {
    let m = pattern.len();
    if text.len() >= m && text[text.len() - m..] == *pattern {
        return Some((text.len() - m, 0));
    }
    let p: Vec<Base> = pattern.iter().rev().copied().collect();
    let t: Vec<Base> = text.iter().rev().copied().collect();
    locate_prefix(&p, &t, max_edits).map(|(end, d)| (text.len() - end, d))
}
