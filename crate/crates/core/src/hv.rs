//! Packed binary hypervectors and the HDC algebra over them.
//!
//! A hypervector of dimension `D` is stored in `ceil(D / 64)` little-endian
//! `u64` words: bit `i` lives in word `i / 64` at position `i % 64`, and bit
//! positions `>= D` in the last word are always zero.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lfsr::Lfsr32;

pub const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(dim: usize) -> usize {
    dim.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(dim: usize) -> u64 {
    match dim % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[inline]
fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PackedHv {
    dim: usize,
    words: Vec<u64>,
}

impl PackedHv {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("hypervector dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            words: vec![0; words_for(dim)],
        })
    }

    /// Builds a hypervector from raw words; padding bits must already be zero.
    pub fn from_words(dim: usize, words: Vec<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("hypervector dimension must be positive".into()));
        }
        if words.len() != words_for(dim) {
            return Err(Error::LengthMismatch {
                what: "hypervector words",
                left: words.len(),
                right: words_for(dim),
            });
        }
        if words[words.len() - 1] & !tail_mask(dim) != 0 {
            return Err(Error::Config(format!(
                "padding bits above dimension {dim} are not zero"
            )));
        }
        Ok(Self { dim, words })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut hv = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            hv.set(i, b);
        }
        Ok(hv)
    }

    /// Draws every bit from the generator's word stream, two LFSR outputs
    /// per 64-bit word.
    pub fn random(rng: &mut Lfsr32, dim: usize) -> Result<Self> {
        let mut hv = Self::zeros(dim)?;
        for w in hv.words.iter_mut() {
            *w = rng.next_u64();
        }
        hv.canonicalize();
        Ok(hv)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.dim, "bit {i} out of range for dimension {}", self.dim);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.dim, "bit {i} out of range for dimension {}", self.dim);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.dim, "bit {i} out of range for dimension {}", self.dim);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut out = Self {
            dim: self.dim,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.canonicalize();
        out
    }

    /// Element-wise XOR.
    pub fn bind(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// Number of differing bits.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        check_dims(self.dim, other.dim)?;
        Ok(self.hamming_unchecked(other))
    }

    #[inline]
    pub(crate) fn hamming_unchecked(&self, other: &Self) -> usize {
        debug_assert_eq!(self.dim, other.dim);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn normalized_hamming(&self, other: &Self) -> Result<f64> {
        Ok(self.hamming(other)? as f64 / self.dim as f64)
    }

    /// `1 - hamming / D`.
    pub fn similarity(&self, other: &Self) -> Result<f64> {
        Ok(1.0 - self.normalized_hamming(other)?)
    }

    /// Cyclic shift: bit `i` moves to `(i + rho) mod D`. Negative shifts rotate
    /// the other way.
    pub fn permute(&self, rho: i64) -> Self {
        let d = self.dim as i64;
        let shift = rho.rem_euclid(d) as usize;
        if shift == 0 {
            return self.clone();
        }
        let mut out = Self {
            dim: self.dim,
            words: vec![0; self.words.len()],
        };
        for (wi, &word) in self.words.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                let src = wi * WORD_BITS + b;
                let dst = (src + shift) % self.dim;
                out.words[dst / WORD_BITS] |= 1u64 << (dst % WORD_BITS);
            }
        }
        out
    }

    /// Renders the debugging dump: decimal `D`, newline, then the words as
    /// space-separated 16-digit lowercase hex, newline.
    pub fn to_dump(&self) -> String {
        let mut s = format!("{}\n", self.dim);
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{w:016x}");
        }
        s.push('\n');
        s
    }

    /// Parses every hypervector in a dump produced by [`PackedHv::to_dump`].
    pub fn parse_dump(text: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        while let Some((ln, dim_line)) = lines.next() {
            let dim: usize = dim_line.trim().parse().map_err(|_| Error::Parse {
                line: ln + 1,
                message: format!("expected dimension, found {dim_line:?}"),
            })?;
            let (wl, words_line) = lines.next().ok_or(Error::Parse {
                line: ln + 2,
                message: "missing word line".into(),
            })?;
            let words = words_line
                .split_whitespace()
                .map(|t| {
                    if t.len() != 16 {
                        return Err(Error::Parse {
                            line: wl + 1,
                            message: format!("word {t:?} is not 16 hex digits"),
                        });
                    }
                    u64::from_str_radix(t, 16).map_err(|_| Error::Parse {
                        line: wl + 1,
                        message: format!("invalid hex word {t:?}"),
                    })
                })
                .collect::<Result<Vec<u64>>>()?;
            out.push(Self::from_words(dim, words)?);
        }
        Ok(out)
    }

    #[inline]
    fn canonicalize(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.dim);
        }
    }
}

/// Per-bit majority over a nonempty collection. Bit `i` is set iff
/// `2 * ones(i) >= n`, i.e. ties resolve to 1.
pub fn bundle<'a, I>(hvs: I) -> Result<PackedHv>
where
    I: IntoIterator<Item = &'a PackedHv>,
{
    let mut iter = hvs.into_iter();
    let first = iter.next().ok_or(Error::EmptyBundle)?;
    let mut acc = VoteAccumulator::new(first.dim())?;
    acc.accumulate(first)?;
    for hv in iter {
        acc.accumulate(hv)?;
    }
    acc.threshold()
}

/// Per-bit ones counts over a multiset of hypervectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteAccumulator {
    dim: usize,
    counts: Vec<u32>,
    total: u32,
}

impl VoteAccumulator {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("hypervector dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            counts: vec![0; dim],
            total: 0,
        })
    }

    pub fn from_hv(hv: &PackedHv) -> Self {
        let mut acc = Self {
            dim: hv.dim(),
            counts: vec![0; hv.dim()],
            total: 0,
        };
        acc.add_unchecked(hv);
        acc
    }

    /// Restores an accumulator from raw counts, validating `counts[i] <= total`.
    pub fn from_counts(counts: Vec<u32>, total: u32) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Config("hypervector dimension must be positive".into()));
        }
        if let Some(i) = counts.iter().position(|&c| c > total) {
            return Err(Error::Config(format!(
                "vote count {} at bit {i} exceeds total {total}",
                counts[i]
            )));
        }
        Ok(Self {
            dim: counts.len(),
            counts,
            total,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    #[inline]
    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn accumulate(&mut self, hv: &PackedHv) -> Result<()> {
        check_dims(self.dim, hv.dim())?;
        self.add_unchecked(hv);
        Ok(())
    }

    fn add_unchecked(&mut self, hv: &PackedHv) {
        for (chunk, &word) in self.counts.chunks_mut(WORD_BITS).zip(hv.words()) {
            for (b, c) in chunk.iter_mut().enumerate() {
                *c += ((word >> b) & 1) as u32;
            }
        }
        self.total += 1;
    }

    /// Element-wise sum of counts and totals.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        check_dims(self.dim, other.dim)?;
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.total += other.total;
        Ok(())
    }

    /// Strict-majority thresholding with ties resolving to 1.
    pub fn threshold(&self) -> Result<PackedHv> {
        if self.total == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let mut words = vec![0u64; words_for(self.dim)];
        for (w, chunk) in words.iter_mut().zip(self.counts.chunks(WORD_BITS)) {
            for (b, &c) in chunk.iter().enumerate() {
                if 2 * c as u64 >= self.total as u64 {
                    *w |= 1u64 << b;
                }
            }
        }
        Ok(PackedHv {
            dim: self.dim,
            words,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hv8(bits: u8) -> PackedHv {
        PackedHv::from_words(8, vec![bits as u64]).unwrap()
    }

    fn rng(seed: u32) -> Lfsr32 {
        Lfsr32::new(seed).unwrap()
    }

    #[test]
    fn random_is_deterministic() {
        let a = PackedHv::random(&mut rng(11), 1000).unwrap();
        let b = PackedHv::random(&mut rng(11), 1000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn padding_is_canonical() {
        let hv = PackedHv::random(&mut rng(3), 65).unwrap();
        assert_eq!(hv.words().len(), 2);
        assert_eq!(hv.words()[1] & !1, 0);
        assert_eq!(hv.complement().words()[1], 1 - (hv.words()[1] & 1));
        assert!(PackedHv::from_words(65, vec![0, 2]).is_err());
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(PackedHv::zeros(0).is_err());
        assert!(VoteAccumulator::new(0).is_err());
    }

    #[test]
    fn bind_self_inverse() {
        let mut r = rng(5);
        let a = PackedHv::random(&mut r, 300).unwrap();
        let b = PackedHv::random(&mut r, 300).unwrap();
        assert_eq!(a.bind(&a).unwrap().count_ones(), 0);
        assert_eq!(a.bind(&b).unwrap().bind(&b).unwrap(), a);
    }

    #[test]
    fn bind_dimension_mismatch() {
        let a = PackedHv::zeros(10).unwrap();
        let b = PackedHv::zeros(11).unwrap();
        assert!(matches!(
            a.bind(&b),
            Err(Error::DimensionMismatch { left: 10, right: 11 })
        ));
        assert!(a.hamming(&b).is_err());
    }

    #[test]
    fn bundle_examples() {
        let mut r = rng(9);
        let a = PackedHv::random(&mut r, 200).unwrap();
        let b = PackedHv::random(&mut r, 200).unwrap();
        assert_eq!(bundle([&a]).unwrap(), a);
        assert_eq!(bundle([&a, &a, &b]).unwrap(), a);
        assert_eq!(bundle([&b, &a, &a]).unwrap(), a);
        let out = bundle([&hv8(0b0000_1111), &hv8(0b0011_0011), &hv8(0b0101_0101)]).unwrap();
        assert_eq!(out.words()[0], 0b0001_0111);
        assert!(matches!(bundle(std::iter::empty()), Err(Error::EmptyBundle)));
    }

    #[test]
    fn bundle_tie_resolves_to_one() {
        let out = bundle([&hv8(0b1100), &hv8(0b1010)]).unwrap();
        assert_eq!(out.words()[0], 0b1110);
    }

    #[test]
    fn threshold_examples() {
        let acc = VoteAccumulator::from_counts(vec![1, 2], 3).unwrap();
        let hv = acc.threshold().unwrap();
        assert!(!hv.get(0));
        assert!(hv.get(1));
        assert!(matches!(
            VoteAccumulator::new(4).unwrap().threshold(),
            Err(Error::EmptyAccumulator)
        ));
        assert!(VoteAccumulator::from_counts(vec![4], 3).is_err());
    }

    #[test]
    fn unanimous_accumulation() {
        let h = PackedHv::random(&mut rng(21), 130).unwrap();
        let mut acc = VoteAccumulator::new(130).unwrap();
        for _ in 0..5 {
            acc.accumulate(&h).unwrap();
        }
        assert_eq!(acc.total(), 5);
        assert_eq!(acc.threshold().unwrap(), h);
    }

    #[test]
    fn merge_sums_counts() {
        let h = hv8(0b1010_0001);
        let mut a = VoteAccumulator::from_hv(&h);
        let b = VoteAccumulator::from_hv(&hv8(0b0000_0001));
        a.merge(&b).unwrap();
        assert_eq!(a.total(), 2);
        assert_eq!(&a.counts()[..8], &[2, 0, 0, 0, 0, 1, 0, 1]);
    }

    #[test]
    fn permute_examples() {
        let mut r = rng(77);
        let h = PackedHv::random(&mut r, 100).unwrap();
        assert_eq!(h.permute(0), h);
        assert_eq!(h.permute(100), h);
        assert_eq!(h.permute(37).permute(63), h);
        assert_eq!(h.permute(-5), h.permute(95));
        let one = hv8(0b0000_0001);
        assert_eq!(one.permute(3).words()[0], 0b0000_1000);
        assert_eq!(hv8(0b1000_0000).permute(1).words()[0], 1);
    }

    #[test]
    fn hamming_extremes() {
        let h = PackedHv::random(&mut rng(8), 100).unwrap();
        assert_eq!(h.hamming(&h).unwrap(), 0);
        assert_eq!(h.hamming(&h.complement()).unwrap(), 100);
        assert_eq!(h.similarity(&h).unwrap(), 1.0);
    }

    #[test]
    fn dump_round_trip() {
        let mut r = rng(4);
        let hvs: Vec<_> = [1usize, 64, 65, 200]
            .iter()
            .map(|&d| PackedHv::random(&mut r, d).unwrap())
            .collect();
        let text: String = hvs.iter().map(|h| h.to_dump()).collect();
        assert!(text.starts_with("1\n"));
        assert_eq!(PackedHv::parse_dump(&text).unwrap(), hvs);
        assert!(PackedHv::parse_dump("8\nzz\n").is_err());
        assert!(PackedHv::parse_dump("8\n").is_err());
    }

    #[test]
    fn dump_format_is_fixed_width_hex() {
        let hv = PackedHv::from_words(70, vec![0xff, 0x3]).unwrap();
        assert_eq!(hv.to_dump(), "70\n00000000000000ff 0000000000000003\n");
    }
}
