//! Feature-stream files and the seeded synthetic stream generator.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! 0   magic   b"IHDF"
//! 4   version u16 = 1
//! 6   flags   u16   bit 0: labels present
//! 8   n       u32   sample count
//! 12  f       u32   feature dimension
//! 16  values  n * f * f32, row-major
//! ..  labels  n * u32 (when flagged)
//! ```

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::item_memory::FeatureVector;
use crate::lfsr::Lfsr32;

pub const MAGIC: &[u8; 4] = b"IHDF";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
const FLAG_LABELS: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub vectors: Vec<FeatureVector>,
    pub labels: Option<Vec<u32>>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }
}

/// Reads an `.ihdf` file, or CSV when the extension is `.csv`.
pub fn read_features(path: &Path) -> Result<FeatureSet> {
    if is_csv(path) {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return parse_csv(&text);
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write_features(path: &Path, vectors: &[FeatureVector], labels: Option<&[u32]>) -> Result<()> {
    let bytes = if is_csv(path) {
        encode_csv(vectors, labels)?.into_bytes()
    } else {
        encode(vectors, labels)?
    };
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn check_shape(vectors: &[FeatureVector], labels: Option<&[u32]>) -> Result<usize> {
    let first = vectors.first().ok_or(Error::EmptyInput("no feature vectors"))?;
    let f = first.len();
    if f == 0 {
        return Err(Error::EmptyInput("feature vectors have zero length"));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != f) {
        return Err(Error::LengthMismatch {
            what: "feature dimension",
            left: v.len(),
            right: f,
        });
    }
    if let Some(l) = labels {
        if l.len() != vectors.len() {
            return Err(Error::LengthMismatch {
                what: "labels vs vectors",
                left: l.len(),
                right: vectors.len(),
            });
        }
    }
    Ok(f)
}

pub fn encode(vectors: &[FeatureVector], labels: Option<&[u32]>) -> Result<Vec<u8>> {
    let f = check_shape(vectors, labels)?;
    let n = vectors.len();
    let mut out = Vec::with_capacity(HEADER_LEN + n * f * 4 + labels.map_or(0, |_| n * 4));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let flags = if labels.is_some() { FLAG_LABELS } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(f as u32).to_le_bytes());
    for v in vectors {
        for &x in v {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    if let Some(l) = labels {
        for &x in l {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<FeatureSet> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            bytes.len() as u64,
            format!("file is {} bytes, shorter than the {HEADER_LEN}-byte header", bytes.len()),
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(0, "bad magic, expected \"IHDF\""));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let flags = u16_at(6);
    if flags & !FLAG_LABELS != 0 {
        return Err(Error::format(6, format!("unknown flag bits {flags:#06x}")));
    }
    let n = u32_at(8) as usize;
    let f = u32_at(12) as usize;
    if n == 0 {
        return Err(Error::format(8, "sample count must be at least 1"));
    }
    if f == 0 {
        return Err(Error::format(12, "feature dimension must be at least 1"));
    }
    let has_labels = flags & FLAG_LABELS != 0;
    let expected = HEADER_LEN as u64 + (n as u64 * f as u64 * 4) + if has_labels { n as u64 * 4 } else { 0 };
    if bytes.len() as u64 != expected {
        return Err(Error::format(
            bytes.len().min(expected as usize) as u64,
            format!("expected {expected} bytes for n={n}, f={f}, found {}", bytes.len()),
        ));
    }
    let mut vectors = Vec::with_capacity(n);
    let mut off = HEADER_LEN;
    for row in 0..n {
        let mut v = Vec::with_capacity(f);
        for feature in 0..f {
            let x = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            if !x.is_finite() {
                return Err(Error::NonFinite { row, feature });
            }
            v.push(x as f64);
            off += 4;
        }
        vectors.push(v);
    }
    let labels = has_labels.then(|| (0..n).map(|i| u32_at(off + 4 * i)).collect());
    Ok(FeatureSet { vectors, labels })
}

/// Comma-separated, optional header row. The last column holds labels only
/// when the header names it `label`.
pub fn parse_csv(text: &str) -> Result<FeatureSet> {
    let mut lines = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    let mut label_col = false;
    if let Some((_, first)) = lines.peek() {
        let fields: Vec<&str> = first.split(',').map(str::trim).collect();
        if fields.iter().any(|t| t.parse::<f64>().is_err()) {
            label_col = fields.last() == Some(&"label");
            lines.next();
        }
    }
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (row, (ln, line)) in lines.enumerate() {
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if label_col {
            let last = fields.pop().unwrap_or_default();
            labels.push(last.parse::<u32>().map_err(|_| Error::Parse {
                line: ln + 1,
                message: format!("invalid label {last:?}"),
            })?);
        }
        let v = fields
            .iter()
            .enumerate()
            .map(|(feature, t)| {
                let x = t.parse::<f64>().map_err(|_| Error::Parse {
                    line: ln + 1,
                    message: format!("invalid number {t:?}"),
                })?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(Error::NonFinite { row, feature })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        vectors.push(v);
    }
    let labels = label_col.then_some(labels);
    check_shape(&vectors, labels.as_deref())?;
    Ok(FeatureSet { vectors, labels })
}

pub fn encode_csv(vectors: &[FeatureVector], labels: Option<&[u32]>) -> Result<String> {
    let f = check_shape(vectors, labels)?;
    let mut header: Vec<String> = (0..f).map(|i| format!("f{i}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    let mut out = header.join(",");
    out.push('\n');
    for (i, v) in vectors.iter().enumerate() {
        let mut fields: Vec<String> = v.iter().map(|x| (*x as f32 as f64).to_string()).collect();
        if let Some(l) = labels {
            fields.push(l[i].to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamOrder {
    /// Classes shuffled together.
    Interleaved,
    /// Class-incremental: all of class 0, then class 1, and so on.
    Sequential,
}

impl std::str::FromStr for StreamOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interleaved" => Ok(Self::Interleaved),
            "sequential" => Ok(Self::Sequential),
            other => Err(Error::Config(format!(
                "unknown order {other:?} (expected interleaved or sequential)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Per-coordinate noise standard deviation; class centers are about unit
    /// distance apart.
    pub spread: f64,
    pub seed: u32,
    pub order: StreamOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub centers: Vec<Vec<f64>>,
    pub vectors: Vec<FeatureVector>,
    pub labels: Vec<u32>,
}

/// Gaussian mixture stream. Centers are random directions of norm `1/sqrt(2)`
/// so that near-orthogonal pairs sit about unit distance apart.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    if spec.n_classes == 0 || spec.per_class == 0 || spec.dim == 0 {
        return Err(Error::Config("classes, per-class and dim must be positive".into()));
    }
    if !(spec.spread.is_finite() && spec.spread > 0.0) {
        return Err(Error::Config(format!("spread must be positive, got {}", spec.spread)));
    }
    let mut rng = Lfsr32::new(spec.seed).map_err(|_| Error::Config("seed must be nonzero".into()))?;
    let radius = std::f64::consts::FRAC_1_SQRT_2;
    let centers: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|_| {
            let g: Vec<f64> = (0..spec.dim).map(|_| rng.next_gaussian()).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            g.into_iter().map(|x| x * radius / norm).collect()
        })
        .collect();

    let mut vectors = Vec::with_capacity(spec.n_classes * spec.per_class);
    let mut labels = Vec::with_capacity(vectors.capacity());
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..spec.per_class {
            vectors.push(c.iter().map(|&x| x + spec.spread * rng.next_gaussian()).collect());
            labels.push(k as u32);
        }
    }
    if spec.order == StreamOrder::Interleaved {
        for i in (1..vectors.len()).rev() {
            let j = rng.uniform(i as u32 + 1)? as usize;
            vectors.swap(i, j);
            labels.swap(i, j);
        }
    }
    Ok(Synthetic {
        centers,
        vectors,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(order: StreamOrder) -> SyntheticSpec {
        SyntheticSpec {
            n_classes: 3,
            per_class: 200,
            dim: 32,
            spread: 0.05,
            seed: 17,
            order,
        }
    }

    #[test]
    fn minimal_file() {
        let bytes = encode(&[vec![1.0, 2.0]], None).unwrap();
        assert_eq!(bytes.len(), 16 + 8);
        assert_eq!(&bytes[..4], b"IHDF");
        assert_eq!(&bytes[4..16], &[1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        let set = decode(&bytes).unwrap();
        assert_eq!(set.vectors, vec![vec![1.0, 2.0]]);
        assert_eq!(set.labels, None);
    }

    #[test]
    fn labels_flag() {
        let bytes = encode(&[vec![0.5], vec![-0.5]], Some(&[0, 1])).unwrap();
        assert_eq!(bytes[6], 1);
        assert_eq!(decode(&bytes).unwrap().labels, Some(vec![0, 1]));
    }

    #[test]
    fn truncated_file_names_expected_length() {
        let mut bytes = encode(&[vec![1.0, 2.0], vec![3.0, 4.0]], Some(&[0, 1])).unwrap();
        bytes.pop();
        let err = decode(&bytes).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Format { offset: 39, .. }), "{msg}");
        assert!(msg.contains("expected 40 bytes"), "{msg}");
    }

    #[test]
    fn header_errors() {
        let good = encode(&[vec![1.0]], None).unwrap();
        let mut bad = good.clone();
        bad[0] = b'J';
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 0, .. })));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 4, .. })));
        assert!(decode(&good[..10]).is_err());
    }

    #[test]
    fn non_finite_value_reports_row() {
        let mut bytes = encode(&[vec![1.0, 2.0], vec![3.0, 4.0]], None).unwrap();
        bytes[16 + 12..16 + 16].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(Error::NonFinite { row: 1, feature: 1 })));
    }

    #[test]
    fn write_errors() {
        assert!(encode(&[], None).is_err());
        assert!(encode(&[vec![1.0], vec![2.0]], Some(&[0])).is_err());
        assert!(encode(&[vec![1.0], vec![2.0, 3.0]], None).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = Lfsr32::new(3).unwrap();
        let vectors: Vec<FeatureVector> = (0..100)
            .map(|_| (0..7).map(|_| (rng.next_gaussian() * 10.0) as f32 as f64).collect())
            .collect();
        let labels: Vec<u32> = (0..100).map(|i| i % 4).collect();
        for name in ["x.ihdf", "x.csv"] {
            let path = dir.path().join(name);
            write_features(&path, &vectors, Some(&labels)).unwrap();
            let back = read_features(&path).unwrap();
            assert_eq!(back.vectors, vectors, "{name}");
            assert_eq!(back.labels.as_deref(), Some(&labels[..]));
        }
    }

    #[test]
    fn csv_dialect() {
        let set = parse_csv("1.5,2\r\n3,4.25\r\n").unwrap();
        assert_eq!(set.vectors, vec![vec![1.5, 2.0], vec![3.0, 4.25]]);
        assert!(set.labels.is_none());

        let set = parse_csv("a,b,label\n1,2,0\n3,4,1\n").unwrap();
        assert_eq!(set.vectors, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(set.labels, Some(vec![0, 1]));

        let set = parse_csv("a,b,c\n1,2,0\n").unwrap();
        assert_eq!(set.vectors, vec![vec![1.0, 2.0, 0.0]]);
        assert!(set.labels.is_none());

        assert!(matches!(parse_csv("1,2\n3,inf\n"), Err(Error::NonFinite { row: 1, feature: 1 })));
        assert!(parse_csv("1,2\n3\n").is_err());
        assert!(parse_csv("").is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        let a = gen_synthetic(&spec(StreamOrder::Interleaved)).unwrap();
        let b = gen_synthetic(&spec(StreamOrder::Interleaved)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.vectors.len(), 600);
    }

    #[test]
    fn sequential_order_is_class_incremental() {
        let s = gen_synthetic(&spec(StreamOrder::Sequential)).unwrap();
        assert!(s.labels.windows(2).all(|w| w[0] <= w[1]));
        let i = gen_synthetic(&spec(StreamOrder::Interleaved)).unwrap();
        assert!(i.labels.windows(2).any(|w| w[0] > w[1]));
        assert_eq!(i.labels.iter().filter(|&&l| l == 2).count(), 200);
    }

    #[test]
    fn tiny_spread_collapses_to_centers() {
        let s = gen_synthetic(&SyntheticSpec {
            spread: 1e-12,
            ..spec(StreamOrder::Sequential)
        })
        .unwrap();
        for (v, &l) in s.vectors.iter().zip(&s.labels) {
            for (x, c) in v.iter().zip(&s.centers[l as usize]) {
                assert_eq!(*x as f32, *c as f32);
            }
        }
    }

    #[test]
    fn class_means_converge_to_centers() {
        let sp = spec(StreamOrder::Interleaved);
        let s = gen_synthetic(&sp).unwrap();
        let bound = 3.0 * sp.spread / (sp.per_class as f64).sqrt();
        for (k, c) in s.centers.iter().enumerate() {
            let members: Vec<_> = s
                .vectors
                .iter()
                .zip(&s.labels)
                .filter(|(_, &l)| l == k as u32)
                .map(|(v, _)| v)
                .collect();
            for (i, &ci) in c.iter().enumerate() {
                let mean = members.iter().map(|v| v[i]).sum::<f64>() / members.len() as f64;
                assert!((mean - ci).abs() < bound, "class {k} coord {i}");
            }
        }
    }

    #[test]
    fn nearest_center_oracle_separates_fixture() {
        let s = gen_synthetic(&spec(StreamOrder::Interleaved)).unwrap();
        let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        let correct = s
            .vectors
            .iter()
            .zip(&s.labels)
            .filter(|(v, &l)| {
                let nearest = (0..s.centers.len())
                    .min_by(|&a, &b| dist2(v, &s.centers[a]).total_cmp(&dist2(v, &s.centers[b])))
                    .unwrap();
                nearest == l as usize
            })
            .count();
        assert!(correct as f64 / s.vectors.len() as f64 >= 0.99);
    }

    #[test]
    fn generator_rejects_bad_spec() {
        assert!(gen_synthetic(&SyntheticSpec { seed: 0, ..spec(StreamOrder::Sequential) }).is_err());
        assert!(gen_synthetic(&SyntheticSpec { spread: 0.0, ..spec(StreamOrder::Sequential) }).is_err());
        assert!("zigzag".parse::<StreamOrder>().is_err());
    }
}
