//! On-disk formats.
//!
//! All multi-byte values are little-endian. Every binary file starts with a
//! 16-byte header: four magic bytes, `u16` version (= 1), `u16` reserved (= 0)
//! and two `u32` dimensions.
//!
//! | magic | dims | payload |
//! |-------|------|---------|
//! | `SVEC` | rows, cols | rows·cols `f32`, row-major |
//! | `D3CB` | K, d | K·d `f64` means, K·d `f64` stds |
//! | `D3GM` | K, d | K `f64` weights, K·d `f64` means, K·d `f64` stds |
//!
//! A manifest is UTF-8 text with one `label<TAB>path` entry per line; blank
//! lines and lines starting with `#` are ignored, and relative paths are
//! resolved against the manifest's directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};

use crate::codebook::{Codebook, GmmModel, InstanceSet};
use crate::diagnostics::MiReport;
use crate::error::{Error, Result};

pub const SVEC_MAGIC: [u8; 4] = *b"SVEC";
pub const CODEBOOK_MAGIC: [u8; 4] = *b"D3CB";
pub const GMM_MAGIC: [u8; 4] = *b"D3GM";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 16;

fn format_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format { offset: offset as u64, reason: reason.into() }
}

fn header(magic: [u8; 4], a: usize, b: usize) -> Result<Vec<u8>> {
    let a = u32::try_from(a).map_err(|_| Error::invalid("dimension exceeds u32"))?;
    let b = u32::try_from(b).map_err(|_| Error::invalid("dimension exceeds u32"))?;
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&a.to_le_bytes());
    out.extend_from_slice(&b.to_le_bytes());
    Ok(out)
}

/// Sequential little-endian reader that reports byte offsets on failure.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            format_err(self.bytes.len(), format!("truncated: {what} needs {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn header(&mut self, magic: [u8; 4]) -> Result<(usize, usize)> {
        let found = self.take(4, "magic")?;
        if found != magic {
            return Err(format_err(
                0,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(found),
                    String::from_utf8_lossy(&magic)
                ),
            ));
        }
        let version = self.u16("version")?;
        if version != FORMAT_VERSION {
            return Err(format_err(4, format!("unsupported version {version}")));
        }
        let reserved = self.u16("reserved")?;
        if reserved != 0 {
            return Err(format_err(6, format!("reserved field is {reserved}, expected 0")));
        }
        Ok((self.u32("first dimension")? as usize, self.u32("second dimension")? as usize))
    }

    fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let bytes =
            self.take(count.checked_mul(8).ok_or_else(|| format_err(self.pos, "size overflow"))?, what)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(format_err(self.pos, format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

pub fn encode_svec(matrix: &Array2<f32>) -> Result<Vec<u8>> {
    if let Some(v) = matrix.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("SVEC values must be finite, got {v}")));
    }
    let mut out = header(SVEC_MAGIC, matrix.nrows(), matrix.ncols())?;
    out.reserve(matrix.len() * 4);
    for v in matrix.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_svec(bytes: &[u8]) -> Result<Array2<f32>> {
    let mut cur = Cursor::new(bytes);
    let (rows, cols) = cur.header(SVEC_MAGIC)?;
    let count = rows.checked_mul(cols).ok_or_else(|| format_err(8, "size overflow"))?;
    let payload = cur.take(count.checked_mul(4).ok_or_else(|| format_err(8, "size overflow"))?, "values")?;
    cur.finish()?;
    let values: Vec<f32> =
        payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked above"))
}

pub fn encode_codebook(cb: &Codebook) -> Result<Vec<u8>> {
    let mut out = header(CODEBOOK_MAGIC, cb.k(), cb.dim())?;
    for v in cb.means().iter().chain(cb.stds().iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_codebook(bytes: &[u8]) -> Result<Codebook> {
    let mut cur = Cursor::new(bytes);
    let (k, d) = cur.header(CODEBOOK_MAGIC)?;
    let kd = k.checked_mul(d).ok_or_else(|| format_err(8, "size overflow"))?;
    let means = cur.f64s(kd, "means")?;
    let stds = cur.f64s(kd, "stds")?;
    cur.finish()?;
    Codebook::new(
        Array2::from_shape_vec((k, d), means).expect("length checked"),
        Array2::from_shape_vec((k, d), stds).expect("length checked"),
    )
}

pub fn encode_gmm(model: &GmmModel) -> Result<Vec<u8>> {
    let mut out = header(GMM_MAGIC, model.k(), model.dim())?;
    for v in model.weights().iter().chain(model.means().iter()).chain(model.stds().iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_gmm(bytes: &[u8]) -> Result<GmmModel> {
    let mut cur = Cursor::new(bytes);
    let (k, d) = cur.header(GMM_MAGIC)?;
    let kd = k.checked_mul(d).ok_or_else(|| format_err(8, "size overflow"))?;
    let weights = cur.f64s(k, "weights")?;
    let means = cur.f64s(kd, "means")?;
    let stds = cur.f64s(kd, "stds")?;
    cur.finish()?;
    GmmModel::new(
        Array1::from_vec(weights),
        Array2::from_shape_vec((k, d), means).expect("length checked"),
        Array2::from_shape_vec((k, d), stds).expect("length checked"),
    )
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_svec(path: &Path) -> Result<Array2<f32>> {
    decode_svec(&read_bytes(path)?).map_err(|e| e.in_file(path))
}

pub fn write_svec(path: &Path, matrix: &Array2<f32>) -> Result<()> {
    write_atomic(path, &encode_svec(matrix)?)
}

pub fn read_codebook(path: &Path) -> Result<Codebook> {
    decode_codebook(&read_bytes(path)?).map_err(|e| e.in_file(path))
}

pub fn write_codebook(path: &Path, cb: &Codebook) -> Result<()> {
    write_atomic(path, &encode_codebook(cb)?)
}

pub fn read_gmm(path: &Path) -> Result<GmmModel> {
    decode_gmm(&read_bytes(path)?).map_err(|e| e.in_file(path))
}

pub fn write_gmm(path: &Path, model: &GmmModel) -> Result<()> {
    write_atomic(path, &encode_gmm(model)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub label: i64,
    pub path: PathBuf,
}

/// Ordered list of labelled vector-set files.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let start = offset;
            offset += line.len();
            let content = line.trim_end_matches(['\n', '\r']);
            if content.trim().is_empty() || content.trim_start().starts_with('#') {
                continue;
            }
            let (label, path) =
                content.split_once('\t').ok_or_else(|| format_err(start, "expected `label<TAB>path`"))?;
            let label: i64 = label
                .trim()
                .parse()
                .map_err(|_| format_err(start, format!("label `{label}` is not an integer")))?;
            if path.is_empty() {
                return Err(format_err(start, "empty path"));
            }
            let path = Path::new(path);
            let path = if path.is_absolute() { path.to_path_buf() } else { base.join(path) };
            entries.push(ManifestEntry { label, path });
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = read_bytes(path)?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| format_err(e.valid_up_to(), "manifest is not UTF-8").in_file(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(text, base).map_err(|e| e.in_file(path))
    }

    /// Renders entries with paths relative to `base` where possible.
    pub fn render(&self, base: &Path) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let p = e.path.strip_prefix(base).unwrap_or(&e.path);
            out.push_str(&format!("{}\t{}\n", e.label, p.display()));
        }
        out
    }

    pub fn labels(&self) -> Vec<i64> {
        self.entries.iter().map(|e| e.label).collect()
    }

    /// Loads every vector set; all must share one dimension.
    pub fn load_sets(&self) -> Result<Vec<InstanceSet>> {
        let mut sets = Vec::with_capacity(self.entries.len());
        let mut dim = None;
        for e in &self.entries {
            let m = read_svec(&e.path)?;
            match dim {
                None => dim = Some(m.ncols()),
                Some(d) if d != m.ncols() => {
                    return Err(Error::Validation(format!(
                        "{} has dimension {}, earlier entries have {d}",
                        e.path.display(),
                        m.ncols()
                    )))
                }
                _ => {}
            }
            sets.push(
                InstanceSet::new(m.mapv(f64::from), Some(e.label)).map_err(|err| err.in_file(&e.path))?,
            );
        }
        Ok(sets)
    }
}

/// Stacks all instance vectors of `sets` in order.
pub fn pool_vectors(sets: &[InstanceSet]) -> Result<Array2<f64>> {
    let views: Vec<_> = sets.iter().map(|s| s.vectors()).collect();
    if views.is_empty() {
        return Err(Error::InsufficientData("no vector sets to pool".into()));
    }
    ndarray::concatenate(ndarray::Axis(0), &views).map_err(|e| Error::Validation(e.to_string()))
}

pub fn mi_csv(report: &MiReport) -> String {
    let mut out = String::from("dim,mi_bits\n");
    for (i, v) in report.per_dimension_mi.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

pub fn quantile_csv(report: &MiReport) -> String {
    let mut out = String::from("q,mi_bits\n");
    for (q, v) in &report.quantile_curve {
        out.push_str(&format!("{q},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn empty_matrix_is_header_only() {
        let m = Array2::<f32>::zeros((0, 3));
        let bytes = encode_svec(&m).unwrap();
        assert_eq!(bytes.len(), 16);
        assert_eq!(decode_svec(&bytes).unwrap().dim(), (0, 3));
    }

    #[test]
    fn svec_errors_carry_offsets() {
        let mut bytes = encode_svec(&array![[1.0f32, 2.0]]).unwrap();
        let mut bad = bytes.clone();
        bad[3] = b'X';
        assert!(matches!(decode_svec(&bad), Err(Error::Format { offset: 0, .. })));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_svec(&bad), Err(Error::Format { offset: 4, .. })));
        bytes.pop();
        assert!(matches!(decode_svec(&bytes), Err(Error::Format { offset: 23, .. })));
        assert!(matches!(decode_svec(b"SV"), Err(Error::Format { .. })));
        assert!(encode_svec(&array![[f32::NAN]]).is_err());
        assert!(encode_svec(&array![[f32::INFINITY]]).is_err());
    }

    #[test]
    fn tampered_models_fail_validation() {
        let cb = Codebook::new(array![[0.0], [1.0]], array![[1.0], [1.0]]).unwrap();
        let mut bytes = encode_codebook(&cb).unwrap();
        bytes[32..40].copy_from_slice(&0f64.to_le_bytes());
        assert!(matches!(decode_codebook(&bytes), Err(Error::Validation(_))));

        let gmm = GmmModel::new(array![0.5, 0.5], array![[0.0], [1.0]], array![[1.0], [1.0]]).unwrap();
        let mut bytes = encode_gmm(&gmm).unwrap();
        bytes[16..24].copy_from_slice(&0.6f64.to_le_bytes());
        assert!(matches!(decode_gmm(&bytes), Err(Error::Validation(_))));
    }

    #[test]
    fn manifest_parsing() {
        let text = "# header\n0\ta.svec\n\n1\t/abs/b.svec\r\n";
        let m = Manifest::parse(text, Path::new("/data")).unwrap();
        assert_eq!(
            m.entries,
            vec![
                ManifestEntry { label: 0, path: "/data/a.svec".into() },
                ManifestEntry { label: 1, path: "/abs/b.svec".into() },
            ]
        );
        assert_eq!(m.render(Path::new("/data")), "0\ta.svec\n1\t/abs/b.svec\n");
        assert!(matches!(
            Manifest::parse("0\ta\nx\tb\n", Path::new(".")),
            Err(Error::Format { offset: 4, .. })
        ));
        assert!(Manifest::parse("3 a.svec\n", Path::new(".")).is_err());
    }

    proptest! {
        #[test]
        fn svec_round_trip_is_bitwise(rows in 0usize..8, cols in 1usize..6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = Array2::from_shape_fn((rows, cols), |_| f32::from_bits(rng.random::<u32>() & 0x7f7f_ffff));
            let back = decode_svec(&encode_svec(&m).unwrap()).unwrap();
            prop_assert_eq!(back.dim(), m.dim());
            prop_assert!(back.iter().zip(m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }

        #[test]
        fn model_round_trip_is_bitwise(k in 1usize..5, d in 1usize..4, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let means = Array2::from_shape_fn((k, d), |_| rng.random_range(-1e3..1e3));
            let stds = Array2::from_shape_fn((k, d), |_| rng.random_range(1e-4..1e2));
            let cb = Codebook::new(means.clone(), stds.clone()).unwrap();
            prop_assert_eq!(&decode_codebook(&encode_codebook(&cb).unwrap()).unwrap(), &cb);
            let w = Array1::from_elem(k, 1.0 / k as f64);
            let w = &w / w.sum();
            let gmm = GmmModel::new(w, means, stds).unwrap();
            prop_assert_eq!(&decode_gmm(&encode_gmm(&gmm).unwrap()).unwrap(), &gmm);
        }
    }
}
