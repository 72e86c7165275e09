//! Capacity and density of a single partition as the index grows.

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapacityPoint {
    pub index_len: usize,
    #[serde(serialize_with = "as_decimal")]
    pub capacity_bits: BigUint,
    /// Payload bits carried by one strand.
    pub bits_per_strand: usize,
    pub strand_len: usize,
}

fn as_decimal<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

impl CapacityPoint {
    /// Exact byte count when the bit count is a multiple of 8.
    pub fn capacity_bytes_exact(&self) -> Option<BigUint> {
        let eight = BigUint::from(8u8);
        (&self.capacity_bits % &eight == BigUint::ZERO).then(|| &self.capacity_bits / eight)
    }

    /// log2 of the capacity in bytes.
    pub fn log2_bytes(&self) -> f64 {
        let bits = self.capacity_bits.bits();
        let shift = bits.saturating_sub(53);
        let top = (&self.capacity_bits >> shift).to_u64_digits().first().copied().unwrap_or(0) as f64;
        top.log2() + shift as f64 - 3.0
    }

    pub fn capacity_bytes_f64(&self) -> f64 {
        self.log2_bytes().exp2()
    }

    /// Payload bits per synthesized base.
    pub fn density(&self) -> f64 {
        self.bits_per_strand as f64 / self.strand_len as f64
    }
}

/// Capacity with an address of `index_len` bases between the primers.
///
/// Below the full body length every address holds `2 * (body - L)` payload
/// bits. When the index fills the body, presence of a molecule is the bit.
pub fn capacity_density(index_len: usize, strand_len: usize, primer_len: usize) -> Result<CapacityPoint> {
    let body = strand_len
        .checked_sub(2 * primer_len)
        .ok_or_else(|| Error::Config(format!("primers of {primer_len} bases do not fit a {strand_len}-base strand")))?;
    if index_len > body {
        return Err(Error::Config(format!("index length {index_len} outside [0, {body}]")));
    }
    let addresses = BigUint::from(4u8).pow(index_len as u32);
    let bits_per_strand = if index_len < body { 2 * (body - index_len) } else { 1 };
    Ok(CapacityPoint { index_len, capacity_bits: addresses * bits_per_strand, bits_per_strand, strand_len })
}

/// Every point from `L = 0` to the full body length.
pub fn capacity_table(strand_len: usize, primer_len: usize) -> Result<Vec<CapacityPoint>> {
    let body = strand_len.saturating_sub(2 * primer_len);
    (0..=body).map(|l| capacity_density(l, strand_len, primer_len)).collect()
}

/// CSV: index_len,capacity_bits,log2_capacity_bytes,density.
pub fn capacity_csv(points: &[CapacityPoint]) -> String {
    let mut out = String::from("index_len,capacity_bits,log2_capacity_bytes,bits_per_base\n");
    for p in points {
        out.push_str(&format!("{},{},{:.6},{:.9}\n", p.index_len, p.capacity_bits, p.log2_bytes(), p.density()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let full = capacity_density(110, 150, 20).unwrap();
        assert_eq!(full.capacity_bytes_exact().unwrap(), BigUint::from(1u8) << 217usize);
        assert_eq!(full.density(), 1.0 / 150.0);
        let zero = capacity_density(0, 150, 20).unwrap();
        assert_eq!(zero.capacity_bits, BigUint::from(220u32));
        assert_eq!(zero.capacity_bytes_exact(), None);
        assert!((zero.capacity_bytes_f64() - 27.5).abs() < 1e-9);
        assert!((zero.density() - 220.0 / 150.0).abs() < 1e-12);
        let ten = capacity_density(10, 150, 20).unwrap();
        assert_eq!(ten.capacity_bytes_exact().unwrap(), BigUint::from(26_214_400u32));
        assert!(capacity_density(111, 150, 20).is_err());
        assert!(capacity_density(0, 30, 20).is_err());
    }

    #[test]
    fn monotone_table() {
        let t = capacity_table(150, 20).unwrap();
        assert_eq!(t.len(), 111);
        for w in t.windows(2) {
            assert!(w[1].capacity_bits > w[0].capacity_bits);
            assert!(w[1].density() < w[0].density());
        }
        assert!((t[110].log2_bytes() - 217.0).abs() < 1e-9);
        let csv = capacity_csv(&t[..2]);
        assert!(csv.starts_with("index_len,"));
        assert!(csv.contains("\n0,220,"));
    }
}
