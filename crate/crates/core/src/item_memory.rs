//! Level and position tables, feature quantization, and ID-level encoding.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hv::{words_for, PackedHv, VoteAccumulator};
use crate::lfsr::Lfsr32;

pub type FeatureVector = Vec<f64>;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"IHIM";
pub const SNAPSHOT_VERSION: u16 = 1;

/// Number of bits flipped between adjacent level hypervectors.
pub fn flips_per_step(dim: usize, levels: usize) -> usize {
    if levels < 2 {
        return 0;
    }
    dim / (2 * (levels - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemMemory {
    dim: usize,
    level_table: Vec<PackedHv>,
    position_table: Vec<PackedHv>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    calibrated: bool,
}

impl ItemMemory {
    /// Builds uncalibrated tables. Level `l` is level `l - 1` with a fresh,
    /// disjoint group of `flips_per_step` bits flipped, so
    /// `hamming(L[i], L[j]) = |i - j| * flips_per_step` exactly.
    pub fn build(rng: &mut Lfsr32, dim: usize, levels: usize, features: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Config(format!("need at least 2 levels, got {levels}")));
        }
        if features == 0 {
            return Err(Error::Config("need at least one feature".into()));
        }
        if dim < 2 * (levels - 1) {
            return Err(Error::Config(format!(
                "dimension {dim} too small for {levels} levels (need >= {})",
                2 * (levels - 1)
            )));
        }
        let step = flips_per_step(dim, levels);
        let needed = step * (levels - 1);

        let base = PackedHv::random(rng, dim)?;
        // partial Fisher-Yates over bit positions
        let mut positions: Vec<u32> = (0..dim as u32).collect();
        for i in 0..needed {
            let j = i + rng.uniform((dim - i) as u32)? as usize;
            positions.swap(i, j);
        }
        let mut level_table = Vec::with_capacity(levels);
        level_table.push(base);
        for group in positions[..needed].chunks(step) {
            let mut next = level_table.last().unwrap().clone();
            for &p in group {
                next.flip(p as usize);
            }
            level_table.push(next);
        }

        let position_table = (0..features)
            .map(|_| PackedHv::random(rng, dim))
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            dim,
            level_table,
            position_table,
            lo: vec![0.0; features],
            hi: vec![0.0; features],
            calibrated: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_levels(&self) -> usize {
        self.level_table.len()
    }

    pub fn num_features(&self) -> usize {
        self.position_table.len()
    }

    pub fn level_table(&self) -> &[PackedHv] {
        &self.level_table
    }

    pub fn position_table(&self) -> &[PackedHv] {
        &self.position_table
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibrated
    }

    /// Sets per-feature min/max from a warm-up prefix. A constant feature
    /// gets `hi = lo + 1`.
    pub fn calibrate(&mut self, warmup: &[FeatureVector]) -> Result<()> {
        if warmup.is_empty() {
            return Err(Error::EmptyWarmup);
        }
        let f = self.num_features();
        let mut lo = vec![f64::INFINITY; f];
        let mut hi = vec![f64::NEG_INFINITY; f];
        for (row, z) in warmup.iter().enumerate() {
            self.check_vector(z).map_err(|e| match e {
                Error::NonFinite { feature, .. } => Error::NonFinite { row, feature },
                other => other,
            })?;
            for (i, &v) in z.iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        for (l, h) in lo.iter().zip(hi.iter_mut()) {
            if *l == *h {
                *h = *l + 1.0;
            }
        }
        self.lo = lo;
        self.hi = hi;
        self.calibrated = true;
        Ok(())
    }

    fn check_vector(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.num_features() {
            return Err(Error::FeatureLength {
                expected: self.num_features(),
                got: z.len(),
            });
        }
        if let Some(feature) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, feature });
        }
        Ok(())
    }

    /// Uniform min-max binning into `L` levels; out-of-range values clamp.
    pub fn quantize(&self, z: &[f64]) -> Result<Vec<usize>> {
        if !self.calibrated {
            return Err(Error::Uncalibrated);
        }
        self.check_vector(z)?;
        let levels = self.num_levels();
        let top = (levels - 1) as f64;
        Ok(z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&lo, &hi))| {
                let x = ((v - lo) / (hi - lo) * levels as f64).floor();
                x.clamp(0.0, top) as usize
            })
            .collect())
    }

    /// `bundle_i(P[i] xor L[level_i])`.
    pub fn encode(&self, z: &[f64]) -> Result<PackedHv> {
        let levels = self.quantize(z)?;
        let mut acc = VoteAccumulator::new(self.dim)?;
        for (pos, &l) in self.position_table.iter().zip(&levels) {
            acc.accumulate(&pos.bind(&self.level_table[l])?)?;
        }
        acc.threshold()
    }

    pub fn write_snapshot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.num_levels() as u32).to_le_bytes())?;
        w.write_all(&(self.num_features() as u32).to_le_bytes())?;
        for hv in self.level_table.iter().chain(&self.position_table) {
            for word in hv.words() {
                w.write_all(&word.to_le_bytes())?;
            }
        }
        for v in self.lo.iter().chain(&self.hi) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(r: R) -> Result<Self> {
        let mut r = ByteReader::new(r);
        let mut magic = [0u8; 4];
        r.fill(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::format(0, "bad item-memory magic"));
        }
        let version = r.u16()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::format(4, format!("unsupported version {version}")));
        }
        let dim = r.u32()? as usize;
        let levels = r.u32()? as usize;
        let features = r.u32()? as usize;
        if dim == 0 || levels < 2 || features == 0 {
            return Err(Error::format(6, "invalid item-memory header"));
        }
        let nw = words_for(dim);
        let read_table = |n: usize, r: &mut ByteReader<R>| -> Result<Vec<PackedHv>> {
            (0..n)
                .map(|_| {
                    let offset = r.offset;
                    let words = (0..nw).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
                    PackedHv::from_words(dim, words)
                        .map_err(|e| Error::format(offset, e.to_string()))
                })
                .collect()
        };
        let level_table = read_table(levels, &mut r)?;
        let position_table = read_table(features, &mut r)?;
        let lo = (0..features).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let hi = (0..features).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let calibrated = lo.iter().zip(&hi).all(|(l, h)| l < h);
        Ok(Self {
            dim,
            level_table,
            position_table,
            lo,
            hi,
            calibrated,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_snapshot(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_snapshot(std::io::BufReader::new(f))
    }
}

/// Little-endian reader that tracks its byte offset for error messages.
pub(crate) struct ByteReader<R> {
    inner: R,
    pub(crate) offset: u64,
}

impl<R: Read> ByteReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    pub(crate) fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::format(self.offset, format!("unexpected end of data reading {} bytes", buf.len()))
            } else {
                Error::format(self.offset, e.to_string())
            }
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        let mut b = [0u8; 2];
        self.fill(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
}
