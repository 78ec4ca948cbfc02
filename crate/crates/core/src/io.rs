//! The LLFW binary field format, CSV tables and JSON reports.
//!
//! LLFW layout, little-endian: magic `LLFW`, `u32` version (1), `u32` dim
//! (2), `u64` nx, `u64` ny, `f64` Lx, `f64` Ly, `f64` c, then `u1`, `u2`,
//! `u3` as `nx·ny` `f64` each with index `iy·nx + ix`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Grid, ScalarSamples};

pub const MAGIC: &[u8; 4] = b"LLFW";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 52;

/// Norm drift tolerated silently on read.
pub const NORM_EXACT: f64 = 1e-12;
/// Norm drift beyond which a file is rejected.
pub const NORM_HARD_LIMIT: f64 = 1e-3;

pub fn encode_field(f: &Field) -> Result<Vec<u8>> {
    let g = f.grid();
    if g.dim() != 2 {
        return Err(Error::InvalidGrid("LLFW stores 2D fields only".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 24 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(g.n(0) as u64).to_le_bytes());
    out.extend_from_slice(&(g.n(1) as u64).to_le_bytes());
    out.extend_from_slice(&g.length(0).to_le_bytes());
    out.extend_from_slice(&g.length(1).to_le_bytes());
    out.extend_from_slice(&f.c().to_le_bytes());
    for comp in f.components() {
        for v in comp.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// A decoded field and what the norm check did to it.
#[derive(Clone, Debug)]
pub struct DecodedField {
    pub field: Field,
    /// `max ||u| - 1|` as stored.
    pub norm_defect: f64,
    pub renormalized: bool,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos,
                msg: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_field(bytes: &[u8]) -> Result<DecodedField> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: format!("bad magic {magic:02x?}, expected \"LLFW\""),
        });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            msg: format!("unsupported version {version}"),
        });
    }
    let dim = r.u32("dimension")?;
    if dim != 2 {
        return Err(Error::Format {
            offset: 8,
            msg: format!("dimension {dim}, expected 2"),
        });
    }
    let nx = r.u64("nx")?;
    let ny = r.u64("ny")?;
    let lx = r.f64("Lx")?;
    let ly = r.f64("Ly")?;
    let c = r.f64("c")?;
    let bad_header = |offset: usize, msg: String| Error::Format { offset, msg };
    let count = usize::try_from(nx)
        .ok()
        .zip(usize::try_from(ny).ok())
        .and_then(|(a, b)| a.checked_mul(b))
        .filter(|n| n.checked_mul(24).is_some())
        .ok_or_else(|| bad_header(12, format!("grid {nx} x {ny} too large")))?;
    let grid = Grid::plane([nx as usize, ny as usize], [lx, ly]).map_err(|e| bad_header(12, e.to_string()))?;
    let expected = HEADER_LEN + 24 * count;
    if bytes.len() != expected {
        return Err(Error::Format {
            offset: bytes.len().min(expected),
            msg: format!("payload is {} bytes, expected {expected}", bytes.len()),
        });
    }
    let mut comps = Vec::with_capacity(3);
    for name in ["u1", "u2", "u3"] {
        let values = (0..count).map(|_| r.f64(name)).collect::<Result<Vec<_>>>()?;
        comps.push(ScalarSamples::new(grid.clone(), values)?);
    }
    let u3 = comps.pop().expect("three components");
    let u2 = comps.pop().expect("three components");
    let u1 = comps.pop().expect("three components");
    let mut field = Field::new(c, u1, u2, u3).map_err(|e| bad_header(44, e.to_string()))?;
    if !field.is_finite() {
        return Err(Error::Format {
            offset: HEADER_LEN,
            msg: "nonfinite field values".into(),
        });
    }
    let norm_defect = field.norm_defect();
    if norm_defect > NORM_HARD_LIMIT {
        return Err(Error::Format {
            offset: HEADER_LEN,
            msg: format!("|u| deviates from 1 by {norm_defect:.3e}, above {NORM_HARD_LIMIT:e}"),
        });
    }
    let renormalized = norm_defect > NORM_EXACT;
    if renormalized {
        log::warn!("field norm drift {norm_defect:.3e}; renormalizing");
        field.renormalize();
    }
    Ok(DecodedField {
        field,
        norm_defect,
        renormalized,
    })
}

pub fn read_field(path: &Path) -> Result<Field> {
    Ok(read_field_checked(path)?.field)
}

pub fn read_field_checked(path: &Path) -> Result<DecodedField> {
    decode_field(&fs::read(path)?)
}

pub fn write_field(f: &Field, path: &Path) -> Result<()> {
    write_atomic(path, &encode_field(f)?)
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_path(path);
    let result = (|| -> std::io::Result<()> {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// 17 significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table of preformatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| format_number(*v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<String> {
        let width = self.header.len();
        if let Some(i) = self.rows.iter().position(|r| r.len() != width) {
            return Err(Error::InvalidArgument(format!(
                "row {i} has {} cells, header has {width}",
                self.rows[i].len()
            )));
        }
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render()?.as_bytes())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n: Vec<usize>,
    pub length: Vec<f64>,
}

impl GridInfo {
    pub fn of(g: &Grid) -> Self {
        GridInfo {
            n: (0..g.dim()).map(|a| g.n(a)).collect(),
            length: (0..g.dim()).map(|a| g.length(a)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub c: f64,
    pub grid: GridInfo,
    pub tool_version: String,
    pub wall_time_seconds: f64,
}

/// A JSON report: metadata plus a payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile<T> {
    pub metadata: ReportMetadata,
    pub report: T,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}
