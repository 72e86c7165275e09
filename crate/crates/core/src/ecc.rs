//! GF(16) arithmetic and the RS(15,11) outer code laid out as a 15-column
//! encoding-unit matrix.
//!
//! Field: GF(2^4) modulo x^4 + x + 1, generator element 0x2. The code is
//! systematic with generator polynomial (x - 1)(x - a)(x - a^2)(x - a^3).
//! Column `j` of a row holds the coefficient of x^(14 - j), so columns 0..11
//! carry data and 11..15 carry the remainder.
//!
//! A unit has 48 rows. Column `j` of the matrix is one strand payload of 24
//! bytes; row `r` reads nibble `r` of every column (high nibble first).

use std::collections::BTreeSet;

use crate::error::{Error, Result};

pub const FIELD_POLY: u8 = 0b1_0011;
pub const GENERATOR: u8 = 0x2;

/// RS parameters; only (15, 11, 48) is exercised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EccConfig {
    pub n: usize,
    pub k: usize,
    pub symbols_per_strand: usize,
}

impl EccConfig {
    pub const STANDARD: EccConfig = EccConfig { n: 15, k: 11, symbols_per_strand: 48 };

    pub fn parity(&self) -> usize {
        self.n - self.k
    }

    pub fn column_bytes(&self) -> usize {
        self.symbols_per_strand / 2
    }

    pub fn unit_bytes(&self) -> usize {
        self.k * self.column_bytes()
    }
}

impl Default for EccConfig {
    fn default() -> Self {
        Self::STANDARD
    }
}

pub const N: usize = 15;
pub const K: usize = 11;
pub const PARITY: usize = N - K;
pub const ROWS: usize = 48;
pub const COLUMN_BYTES: usize = ROWS / 2;
pub const UNIT_BYTES: usize = K * COLUMN_BYTES;

/// A 4-bit field element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Gf16(u8);

const fn build_tables() -> ([u8; 30], [u8; 16]) {
    let mut exp = [0u8; 30];
    let mut log = [0u8; 16];
    let mut x: u8 = 1;
    let mut i = 0;
    while i < 15 {
        exp[i] = x;
        exp[i + 15] = x;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x10 != 0 {
            x ^= FIELD_POLY;
        }
        i += 1;
    }
    (exp, log)
}

const TABLES: ([u8; 30], [u8; 16]) = build_tables();
const EXP: [u8; 30] = TABLES.0;
const LOG: [u8; 16] = TABLES.1;

impl Gf16 {
    pub const ZERO: Gf16 = Gf16(0);
    pub const ONE: Gf16 = Gf16(1);

    pub fn new(v: u8) -> Self {
        assert!(v < 16, "GF(16) symbol out of range: {v}");
        Gf16(v)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// a^i
    pub fn alpha_pow(i: usize) -> Gf16 {
        Gf16(EXP[i % 15])
    }

    pub fn inverse(self) -> Gf16 {
        assert!(self.0 != 0, "zero has no inverse in GF(16)");
        Gf16(EXP[(15 - LOG[self.0 as usize] as usize) % 15])
    }

    pub fn pow(self, e: usize) -> Gf16 {
        if self.0 == 0 {
            return if e == 0 { Gf16::ONE } else { Gf16::ZERO };
        }
        Gf16(EXP[(LOG[self.0 as usize] as usize * e) % 15])
    }
}

impl std::ops::Add for Gf16 {
    type Output = Gf16;
    fn add(self, rhs: Gf16) -> Gf16 {
        Gf16(self.0 ^ rhs.0)
    }
}

impl std::ops::Mul for Gf16 {
    type Output = Gf16;
    fn mul(self, rhs: Gf16) -> Gf16 {
        gf16_mul(self, rhs)
    }
}

impl std::ops::Div for Gf16 {
    type Output = Gf16;
    fn div(self, rhs: Gf16) -> Gf16 {
        self * rhs.inverse()
    }
}

pub fn gf16_mul(a: Gf16, b: Gf16) -> Gf16 {
    if a.0 == 0 || b.0 == 0 {
        return Gf16::ZERO;
    }
    Gf16(EXP[LOG[a.0 as usize] as usize + LOG[b.0 as usize] as usize])
}

// Polynomials are coefficient vectors, lowest degree first.
fn poly_eval(p: &[Gf16], x: Gf16) -> Gf16 {
    p.iter().rev().fold(Gf16::ZERO, |acc, &c| acc * x + c)
}

fn generator_poly() -> [Gf16; PARITY + 1] {
    let mut g = [Gf16::ZERO; PARITY + 1];
    g[0] = Gf16::ONE;
    for i in 0..PARITY {
        let root = Gf16::alpha_pow(i);
        // g *= (x + root)
        for d in (0..=i + 1).rev() {
            let shifted = if d > 0 { g[d - 1] } else { Gf16::ZERO };
            g[d] = shifted + g[d] * root;
        }
    }
    g
}

/// Systematic encoding of one row: 11 data symbols in, 15 out.
pub fn encode_row(data: &[Gf16; K]) -> [Gf16; N] {
    let g = generator_poly();
    // Long division of data(x) * x^4 by g(x), data[0] is the top coefficient.
    let mut rem = [Gf16::ZERO; PARITY];
    for &d in data {
        let feedback = d + rem[PARITY - 1];
        for j in (1..PARITY).rev() {
            rem[j] = rem[j - 1] + feedback * g[j];
        }
        rem[0] = feedback * g[0];
    }
    let mut out = [Gf16::ZERO; N];
    out[..K].copy_from_slice(data);
    for j in 0..PARITY {
        // column K + j holds coefficient of x^(3 - j)
        out[K + j] = rem[PARITY - 1 - j];
    }
    out
}

fn syndromes(row: &[Gf16; N]) -> [Gf16; PARITY] {
    let mut s = [Gf16::ZERO; PARITY];
    for (i, si) in s.iter_mut().enumerate() {
        let x = Gf16::alpha_pow(i);
        // row[0] is the x^14 coefficient
        *si = row.iter().fold(Gf16::ZERO, |acc, &c| acc * x + c);
    }
    s
}

/// Result of decoding one row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDecode {
    pub codeword: [Gf16; N],
    /// Non-erased columns whose symbol was changed.
    pub corrected: Vec<usize>,
}

/// Errors-and-erasures decoding of one row. Erased symbols may hold any value.
/// Succeeds whenever 2e + f <= 4.
pub fn decode_row(received: &[Gf16; N], erasures: &[usize]) -> Option<RowDecode> {
    let f = erasures.len();
    if f > PARITY {
        return None;
    }
    let mut row = *received;
    let s = syndromes(&row);
    if s.iter().all(|&x| x == Gf16::ZERO) {
        return Some(RowDecode { codeword: row, corrected: Vec::new() });
    }
    let locator = |col: usize| Gf16::alpha_pow(N - 1 - col);

    // Erasure locator prod (1 + X x)
    let mut gamma = vec![Gf16::ONE];
    for &col in erasures {
        let x = locator(col);
        let mut next = vec![Gf16::ZERO; gamma.len() + 1];
        for (i, &c) in gamma.iter().enumerate() {
            next[i] = next[i] + c;
            next[i + 1] = next[i + 1] + c * x;
        }
        gamma = next;
    }

    // Berlekamp-Massey seeded with the erasure locator.
    let mut lambda = gamma.clone();
    let mut b = gamma;
    let mut l = f;
    for r in (f + 1)..=PARITY {
        let mut delta = Gf16::ZERO;
        for j in 0..=l.min(lambda.len() - 1) {
            if r > j {
                delta = delta + lambda[j] * s[r - 1 - j];
            }
        }
        let mut xb = vec![Gf16::ZERO];
        xb.extend_from_slice(&b);
        if delta == Gf16::ZERO {
            b = xb;
            continue;
        }
        let len = lambda.len().max(xb.len());
        let mut t = vec![Gf16::ZERO; len];
        for (i, &c) in lambda.iter().enumerate() {
            t[i] = t[i] + c;
        }
        for (i, &c) in xb.iter().enumerate() {
            t[i] = t[i] + delta * c;
        }
        if 2 * l < r + f {
            l = r + f - l;
            let inv = delta.inverse();
            b = lambda.iter().map(|&c| c * inv).collect();
        } else {
            b = xb;
        }
        lambda = t;
    }
    while lambda.len() > 1 && *lambda.last().unwrap() == Gf16::ZERO {
        lambda.pop();
    }
    let degree = lambda.len() - 1;
    if degree != l || 2 * l - f > PARITY {
        return None;
    }

    // Chien search over every column.
    let positions: Vec<usize> = (0..N)
        .filter(|&col| poly_eval(&lambda, locator(col).inverse()) == Gf16::ZERO)
        .collect();
    if positions.len() != degree {
        return None;
    }

    // Omega = S(x) Lambda(x) mod x^4
    let mut omega = [Gf16::ZERO; PARITY];
    for (i, o) in omega.iter_mut().enumerate() {
        for j in 0..=i {
            if j < lambda.len() {
                *o = *o + lambda[j] * s[i - j];
            }
        }
    }
    // Formal derivative: odd-degree terms survive in characteristic 2.
    let deriv: Vec<Gf16> = (1..lambda.len())
        .map(|i| if i % 2 == 1 { lambda[i] } else { Gf16::ZERO })
        .collect();

    let mut corrected = Vec::new();
    for &col in &positions {
        let x = locator(col);
        let xinv = x.inverse();
        let denom = poly_eval(&deriv, xinv);
        if denom == Gf16::ZERO {
            return None;
        }
        let magnitude = x * poly_eval(&omega, xinv) / denom;
        if magnitude != Gf16::ZERO {
            row[col] = row[col] + magnitude;
            if !erasures.contains(&col) {
                corrected.push(col);
            }
        }
    }
    if syndromes(&row).iter().any(|&x| x != Gf16::ZERO) {
        return None;
    }
    Some(RowDecode { codeword: row, corrected })
}

/// The 15 × 24-byte matrix of one encoding unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitMatrix {
    pub columns: Vec<[u8; COLUMN_BYTES]>,
}

impl UnitMatrix {
    pub fn is_parity(col: usize) -> bool {
        col >= K
    }

    fn symbol(&self, col: usize, row: usize) -> Gf16 {
        nibble(&self.columns[col], row)
    }
}

fn nibble(bytes: &[u8; COLUMN_BYTES], row: usize) -> Gf16 {
    let b = bytes[row / 2];
    Gf16(if row % 2 == 0 { b >> 4 } else { b & 0x0F })
}

fn set_nibble(bytes: &mut [u8; COLUMN_BYTES], row: usize, v: Gf16) {
    let b = &mut bytes[row / 2];
    if row % 2 == 0 {
        *b = (*b & 0x0F) | (v.0 << 4);
    } else {
        *b = (*b & 0xF0) | v.0;
    }
}

/// Data bytes fill the 11 data columns in order, 24 bytes each.
pub fn rs_encode_unit(data: &[u8]) -> Result<UnitMatrix> {
    if data.len() != UNIT_BYTES {
        return Err(Error::Size { expected: UNIT_BYTES, actual: data.len() });
    }
    let mut columns = vec![[0u8; COLUMN_BYTES]; N];
    for (col, chunk) in data.chunks_exact(COLUMN_BYTES).enumerate() {
        columns[col].copy_from_slice(chunk);
    }
    let mut unit = UnitMatrix { columns };
    for row in 0..ROWS {
        let mut d = [Gf16::ZERO; K];
        for (col, s) in d.iter_mut().enumerate() {
            *s = unit.symbol(col, row);
        }
        let cw = encode_row(&d);
        for col in K..N {
            set_nibble(&mut unit.columns[col], row, cw[col]);
        }
    }
    Ok(unit)
}

/// Decoded unit plus what the decoder had to change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitDecode {
    pub data: Vec<u8>,
    pub corrected_symbols: usize,
    pub corrected_columns: BTreeSet<usize>,
    pub erased_columns: BTreeSet<usize>,
}

/// Decode from whichever columns are present. Columns absent from `columns`
/// or listed in `erasures` are erasures.
pub fn rs_decode_unit(columns: &[(usize, [u8; COLUMN_BYTES])], erasures: &BTreeSet<usize>) -> Result<Vec<u8>> {
    rs_decode_unit_detailed(columns, erasures).map(|d| d.data)
}

pub fn rs_decode_unit_detailed(
    columns: &[(usize, [u8; COLUMN_BYTES])],
    erasures: &BTreeSet<usize>,
) -> Result<UnitDecode> {
    let mut present: [Option<[u8; COLUMN_BYTES]>; N] = [None; N];
    for &(idx, bytes) in columns {
        if idx >= N {
            return Err(Error::Address(format!("column index {idx} out of range")));
        }
        if !erasures.contains(&idx) {
            present[idx] = Some(bytes);
        }
    }
    let erased: BTreeSet<usize> = (0..N).filter(|&c| present[c].is_none()).collect();
    if erased.len() > PARITY {
        return Err(Error::DecodeRows { rows: (0..ROWS).collect() });
    }
    let erased_list: Vec<usize> = erased.iter().copied().collect();
    let mut out = vec![[0u8; COLUMN_BYTES]; K];
    let mut failed = Vec::new();
    let mut corrected_symbols = 0;
    let mut corrected_columns = BTreeSet::new();
    for row in 0..ROWS {
        let mut r = [Gf16::ZERO; N];
        for col in 0..N {
            if let Some(bytes) = &present[col] {
                r[col] = nibble(bytes, row);
            }
        }
        match decode_row(&r, &erased_list) {
            Some(dec) => {
                corrected_symbols += dec.corrected.len();
                corrected_columns.extend(dec.corrected.iter().copied());
                for (col, bytes) in out.iter_mut().enumerate() {
                    set_nibble(bytes, row, dec.codeword[col]);
                }
            }
            None => failed.push(row),
        }
    }
    if !failed.is_empty() {
        return Err(Error::DecodeRows { rows: failed });
    }
    Ok(UnitDecode {
        data: out.concat(),
        corrected_symbols,
        corrected_columns,
        erased_columns: erased,
    })
}

/// Cheap screen for candidate assignments: true when each of the first
/// `rows` rows is a codeword on the present columns without any correction.
pub fn rows_consistent(columns: &[Option<[u8; COLUMN_BYTES]>], rows: usize) -> bool {
    let erased: Vec<usize> = (0..N).filter(|&c| columns.get(c).is_none_or(|x| x.is_none())).collect();
    if erased.len() > PARITY {
        return false;
    }
    (0..rows.min(ROWS)).all(|row| {
        let mut r = [Gf16::ZERO; N];
        for (col, c) in columns.iter().enumerate().take(N) {
            if let Some(bytes) = c {
                r[col] = nibble(bytes, row);
            }
        }
        decode_row(&r, &erased).is_some_and(|d| d.corrected.is_empty())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..UNIT_BYTES).map(|_| rng.gen()).collect()
    }

    fn present(unit: &UnitMatrix) -> Vec<(usize, [u8; COLUMN_BYTES])> {
        unit.columns.iter().copied().enumerate().collect()
    }

    /// Carry-less multiply then reduce: an implementation of field
    /// multiplication independent of the log tables.
    fn slow_mul(a: u8, b: u8) -> u8 {
        let mut acc: u16 = 0;
        for i in 0..4 {
            if b & (1 << i) != 0 {
                acc ^= (a as u16) << i;
            }
        }
        for bit in (4..8).rev() {
            if acc & (1 << bit) != 0 {
                acc ^= (FIELD_POLY as u16) << (bit - 4);
            }
        }
        acc as u8
    }

    #[test]
    fn multiplication_examples() {
        for x in 0..16 {
            assert_eq!(gf16_mul(Gf16(x), Gf16::ONE), Gf16(x));
            assert_eq!(gf16_mul(Gf16::ZERO, Gf16(x)), Gf16::ZERO);
        }
        assert_eq!(gf16_mul(Gf16(0x2), Gf16(0x9)), Gf16(0x1));
    }

    #[test]
    fn multiplication_matches_carryless_oracle() {
        for a in 0..16 {
            for b in 0..16 {
                assert_eq!(gf16_mul(Gf16(a), Gf16(b)).value(), slow_mul(a, b));
            }
            if a != 0 {
                assert_eq!(Gf16(a) * Gf16(a).inverse(), Gf16::ONE);
            }
        }
        // generator has order 15
        let orders: Vec<usize> = (1..=15).filter(|&i| Gf16(GENERATOR).pow(i) == Gf16::ONE).collect();
        assert_eq!(orders, vec![15]);
    }

    #[test]
    fn zero_unit_encodes_to_zero() {
        let unit = rs_encode_unit(&[0u8; UNIT_BYTES]).unwrap();
        assert!(unit.columns.iter().all(|c| c.iter().all(|&b| b == 0)));
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(matches!(rs_encode_unit(&[0u8; 263]), Err(Error::Size { expected: 264, actual: 263 })));
    }

    #[test]
    fn clean_syndromes_are_zero_and_systematic() {
        let data = random_unit(1);
        let unit = rs_encode_unit(&data).unwrap();
        assert_eq!(unit.columns[..K].concat(), data);
        for row in 0..ROWS {
            let mut r = [Gf16::ZERO; N];
            for (col, s) in r.iter_mut().enumerate() {
                *s = unit.symbol(col, row);
            }
            assert!(syndromes(&r).iter().all(|&s| s == Gf16::ZERO));
        }
        assert_eq!(rs_decode_unit(&present(&unit), &BTreeSet::new()).unwrap(), data);
    }

    /// Gaussian-elimination erasure decoder over the systematic generator
    /// matrix; independent of the Berlekamp-Massey path.
    fn erasure_oracle(row: &[Gf16; N], known: &[usize]) -> [Gf16; K] {
        // generator matrix rows: encodings of unit vectors
        let gen: Vec<[Gf16; N]> = (0..K)
            .map(|i| {
                let mut e = [Gf16::ZERO; K];
                e[i] = Gf16::ONE;
                encode_row(&e)
            })
            .collect();
        // Solve sum_i d_i gen[i][c] = row[c] for c in known (first K of them).
        let cols = &known[..K];
        let mut m: Vec<Vec<Gf16>> = cols
            .iter()
            .map(|&c| {
                let mut eq: Vec<Gf16> = (0..K).map(|i| gen[i][c]).collect();
                eq.push(row[c]);
                eq
            })
            .collect();
        for pivot in 0..K {
            let p = (pivot..K).find(|&r| m[r][pivot] != Gf16::ZERO).expect("singular");
            m.swap(pivot, p);
            let inv = m[pivot][pivot].inverse();
            for v in m[pivot].iter_mut() {
                *v = *v * inv;
            }
            for r in 0..K {
                if r != pivot && m[r][pivot] != Gf16::ZERO {
                    let factor = m[r][pivot];
                    for c in 0..=K {
                        let sub = factor * m[pivot][c];
                        m[r][c] = m[r][c] + sub;
                    }
                }
            }
        }
        let mut d = [Gf16::ZERO; K];
        for i in 0..K {
            d[i] = m[i][K];
        }
        d
    }

    #[test]
    fn bm_decoder_agrees_with_linear_algebra_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let data: [Gf16; K] = std::array::from_fn(|_| Gf16(rng.gen_range(0..16)));
            let cw = encode_row(&data);
            let f = rng.gen_range(0..=4);
            let mut cols: Vec<usize> = (0..N).collect();
            for i in (1..N).rev() {
                cols.swap(i, rng.gen_range(0..=i));
            }
            let erased: Vec<usize> = cols[..f].to_vec();
            let known: Vec<usize> = cols[f..].to_vec();
            let mut r = cw;
            for &c in &erased {
                r[c] = Gf16(rng.gen_range(0..16));
            }
            assert_eq!(erasure_oracle(&r, &known), data);
            let dec = decode_row(&r, &erased).unwrap();
            assert_eq!(dec.codeword, cw);
        }
    }

    fn corrupt(col: &mut [u8; COLUMN_BYTES], rng: &mut ChaCha8Rng) {
        // every nibble changes
        for b in col.iter_mut() {
            *b ^= (rng.gen_range(1..16u8) << 4) | rng.gen_range(1..16u8);
        }
    }

    #[test]
    fn all_error_erasure_patterns_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..2 {
            let data = random_unit(100 + seed);
            let unit = rs_encode_unit(&data).unwrap();
            let mut patterns = 0;
            for mask in 0u32..(1 << N) {
                let f = mask.count_ones() as usize;
                if f > 4 {
                    continue;
                }
                let erased: BTreeSet<usize> = (0..N).filter(|&c| mask & (1 << c) != 0).collect();
                let rest: Vec<usize> = (0..N).filter(|c| !erased.contains(c)).collect();
                let max_e = (4 - f) / 2;
                let mut error_sets: Vec<Vec<usize>> = vec![vec![]];
                if max_e >= 1 {
                    error_sets.extend(rest.iter().map(|&c| vec![c]));
                }
                if max_e >= 2 {
                    for (i, &a) in rest.iter().enumerate() {
                        for &b in &rest[i + 1..] {
                            error_sets.push(vec![a, b]);
                        }
                    }
                }
                for errs in error_sets {
                    let mut cols = present(&unit);
                    for &c in &errs {
                        corrupt(&mut cols[c].1, &mut rng);
                    }
                    let dec = rs_decode_unit_detailed(&cols, &erased).unwrap();
                    assert_eq!(dec.data, data);
                    assert_eq!(dec.corrected_columns, errs.iter().copied().collect());
                    patterns += 1;
                }
            }
            assert_eq!(patterns, 1941 + 1590 + 105);
        }
    }

    #[test]
    fn three_corrupted_columns_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_unit(77);
        let unit = rs_encode_unit(&data).unwrap();
        for a in 0..N {
            for b in a + 1..N {
                for c in b + 1..N {
                    let mut cols = present(&unit);
                    for &x in &[a, b, c] {
                        corrupt(&mut cols[x].1, &mut rng);
                    }
                    let err = rs_decode_unit(&cols, &BTreeSet::new()).unwrap_err();
                    assert!(matches!(err, Error::DecodeRows { ref rows } if !rows.is_empty()));
                }
            }
        }
    }

    #[test]
    fn five_erasures_fail() {
        let unit = rs_encode_unit(&random_unit(8)).unwrap();
        let cols: Vec<_> = present(&unit).into_iter().skip(5).collect();
        assert!(matches!(rs_decode_unit(&cols, &BTreeSet::new()), Err(Error::DecodeRows { .. })));
    }

    #[test]
    fn row_screen() {
        let data: Vec<u8> = (0..UNIT_BYTES).map(|i| (i * 31 % 256) as u8).collect();
        let unit = rs_encode_unit(&data).unwrap();
        let mut cols: Vec<Option<[u8; COLUMN_BYTES]>> = unit.columns.iter().copied().map(Some).collect();
        assert!(rows_consistent(&cols, ROWS));
        cols[2] = None;
        cols[9] = None;
        assert!(rows_consistent(&cols, 4));
        cols[4].as_mut().unwrap()[0] ^= 0x10;
        assert!(!rows_consistent(&cols, 1));
        assert!(rows_consistent(&cols[..], 0));
        cols[0] = None;
        cols[1] = None;
        cols[3] = None;
        assert!(!rows_consistent(&cols, 4));
    }
}
