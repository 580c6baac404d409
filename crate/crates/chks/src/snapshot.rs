//! Binary field snapshots.
//!
//! A snapshot is a 32-byte header followed by `nx * ny` little-endian `f64`
//! values in row-major order (x fastest):
//!
//! ```text
//! offset  size  content
//!      0     8  magic "CHKSFLD1"
//!      8     4  nx (u32 LE)
//!     12     4  ny (u32 LE)
//!     16     8  lx (f64 LE)
//!     24     8  ly (f64 LE)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use chks_core::{Field, Grid};

use crate::error::{AppError, AppResult};

pub const MAGIC: &[u8; 8] = b"CHKSFLD1";
const HEADER: usize = 32;

pub fn encode(field: &Field) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    out.extend_from_slice(&g.lx().to_le_bytes());
    out.extend_from_slice(&g.ly().to_le_bytes());
    for v in field.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Field, String> {
    if bytes.len() < HEADER || &bytes[..8] != MAGIC {
        return Err("not a field snapshot (bad magic)".into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (nx, ny) = (u32_at(8), u32_at(12));
    let grid = Grid::new(nx, ny, f64_at(16), f64_at(24)).map_err(|e| e.to_string())?;
    let expected = HEADER + 8 * grid.len();
    if bytes.len() != expected {
        return Err(format!("expected {expected} bytes for a {nx}x{ny} field, found {}", bytes.len()));
    }
    let data = bytes[HEADER..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Field::from_vec(grid, data).map_err(|e| e.to_string())
}

pub fn write_field(path: &Path, field: &Field) -> AppResult<()> {
    fs::write(path, encode(field)).map_err(|e| AppError::io(path, e))
}

pub fn read_field(path: &Path) -> AppResult<Field> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    decode(&bytes).map_err(|detail| AppError::Snapshot { path: path.to_path_buf(), detail })
}

/// File name of level `step` of `name` inside a trajectory directory.
pub fn level_name(prefix: &str, name: &str, step: usize) -> String {
    format!("{prefix}{name}_{step:06}.fld")
}

/// Writes one file per level, `{prefix}{name}_{step:06}.fld`, into `dir`.
pub fn write_levels(dir: &Path, prefix: &str, name: &str, levels: &[Field]) -> AppResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    levels
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let path = dir.join(level_name(prefix, name, k));
            write_field(&path, f)?;
            Ok(path)
        })
        .collect()
}
