//! Binary dataset container.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 8    | magic `KSPRDS\0\0`                     |
//! | 8      | 4    | format version, `1`                    |
//! | 12     | 4    | feature dtype, `1` = f64               |
//! | 16     | 8    | `n` samples                            |
//! | 24     | 8    | `p` features                           |
//! | 32     | 8    | `c` classes                            |
//! | 40     | 8    | `1` if true labels follow, else `0`    |
//! | 48     | 8np  | features, row-major                    |
//! |        | 8n   | observed labels, u64                   |
//! |        | 8n   | true labels, u64 (optional)            |

use std::fs;
use std::io::Write;
use std::path::Path;

use kspr_core::{DMatrix, LabeledDataset, OneHotLabels};

use crate::error::{KsprError, Result};

pub const MAGIC: [u8; 8] = *b"KSPRDS\0\0";
pub const VERSION: u32 = 1;
pub const DTYPE_F64: u32 = 1;
pub const HEADER_LEN: usize = 48;

/// Total file size for a dataset of the given shape.
pub fn encoded_len(n: usize, p: usize, has_truth: bool) -> usize {
    HEADER_LEN + 8 * (n * p + n + if has_truth { n } else { 0 })
}

pub fn encode(data: &LabeledDataset) -> Vec<u8> {
    let (n, p, c) = (data.len(), data.dim(), data.classes());
    let truth = data.true_labels.as_deref();
    let mut out = Vec::with_capacity(encoded_len(n, p, truth.is_some()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&DTYPE_F64.to_le_bytes());
    for v in [n, p, c, truth.is_some() as usize] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for i in 0..n {
        for j in 0..p {
            out.extend_from_slice(&data.features[(i, j)].to_le_bytes());
        }
    }
    for &l in data.labels.labels() {
        out.extend_from_slice(&(l as u64).to_le_bytes());
    }
    if let Some(t) = truth {
        for &l in t {
            out.extend_from_slice(&(l as u64).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, len: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            KsprError::Format(format!("truncated at byte {} (wanted {len} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn size(&mut self, what: &str) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| KsprError::Format(format!("{what} = {v} does not fit in memory")))
    }

    fn labels(&mut self, n: usize) -> Result<Vec<usize>> {
        (0..n)
            .map(|_| {
                let v = self.u64()?;
                usize::try_from(v).map_err(|_| KsprError::Format(format!("label {v} out of range")))
            })
            .collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<LabeledDataset> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(KsprError::Format("bad magic; not a dataset container".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(KsprError::Format(format!("unsupported version {version}")));
    }
    let dtype = r.u32()?;
    if dtype != DTYPE_F64 {
        return Err(KsprError::Format(format!("unsupported dtype {dtype}")));
    }
    let n = r.size("n")?;
    let p = r.size("p")?;
    let c = r.size("c")?;
    let has_truth = match r.u64()? {
        0 => false,
        1 => true,
        v => return Err(KsprError::Format(format!("truth flag must be 0 or 1, got {v}"))),
    };
    let expected = n
        .checked_mul(p)
        .and_then(|np| n.checked_mul(if has_truth { 2 } else { 1 }).and_then(|l| np.checked_add(l)))
        .and_then(|w| w.checked_mul(8))
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or_else(|| KsprError::Format("header sizes overflow".into()))?;
    if expected != bytes.len() {
        return Err(KsprError::Format(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let raw = r.take(8 * n * p)?;
    let values: Vec<f64> = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let features = DMatrix::from_row_slice(n, p, &values);
    let labels = r.labels(n)?;
    let truth = if has_truth { Some(r.labels(n)?) } else { None };
    Ok(LabeledDataset::new(features, OneHotLabels::new(labels, c)?, truth)?)
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let bytes = fs::read(path).map_err(|e| KsprError::io(path, e))?;
    decode(&bytes)
}

pub fn write_dataset(path: &Path, data: &LabeledDataset, force: bool) -> Result<()> {
    write_atomic(path, &encode(data), force)
}

/// Writes through a temporary file in the target directory and renames it
/// into place. Refuses to replace an existing file unless `force`.
pub fn write_atomic(path: &Path, bytes: &[u8], force: bool) -> Result<()> {
    if !force && path.exists() {
        return Err(KsprError::Exists(path.to_path_buf()));
    }
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| KsprError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| KsprError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| KsprError::io(path, e))?;
    tmp.persist(path).map_err(|e| KsprError::io(path, e.error))?;
    Ok(())
}
