//! Built-in field generators.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use chks_core::control::Control;
use chks_core::{Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::snapshot;

/// How a field is produced. Written in the configuration as an inline table,
/// for example `{ kind = "cosine", base = 0.5, amplitude = 0.2 }`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldGen {
    Constant {
        value: f64,
    },
    /// `base + amplitude cos(kx pi x / lx) cos(ky pi y / ly)`.
    Cosine {
        base: f64,
        amplitude: f64,
        #[serde(default = "one")]
        kx: u32,
        #[serde(default = "one")]
        ky: u32,
    },
    /// Cosine series with seeded coefficients over modes `0..modes` in each
    /// direction, mapped affinely onto `[min, max]`.
    Random {
        min: f64,
        max: f64,
        #[serde(default = "three")]
        modes: u32,
    },
    /// A snapshot file, relative to the configuration file.
    File {
        path: PathBuf,
    },
}

fn one() -> u32 {
    1
}

fn three() -> u32 {
    3
}

/// Independent random stream for one named quantity.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seeded smooth field with values spanning exactly `[min, max]`.
pub fn random_field(grid: Grid, rng: &mut ChaCha8Rng, min: f64, max: f64, modes: u32) -> Field {
    let modes = modes.max(1);
    let mut coeffs = Vec::new();
    for l in 0..modes {
        for k in 0..modes {
            let c: f64 = rng.gen_range(-1.0..1.0);
            if k + l > 0 {
                coeffs.push((k as f64, l as f64, c / (1 + k + l) as f64));
            }
        }
    }
    let raw = Field::from_fn(grid, |x, y| {
        coeffs.iter().map(|(k, l, c)| c * (k * PI * x / grid.lx()).cos() * (l * PI * y / grid.ly()).cos()).sum()
    });
    let (lo, hi) = (raw.min(), raw.max());
    if hi - lo <= 1e-14 {
        return Field::constant(grid, 0.5 * (min + max));
    }
    raw.map(|v| (min + (max - min) * (v - lo) / (hi - lo)).clamp(min.min(max), max.max(min)))
}

impl FieldGen {
    pub fn build(&self, grid: Grid, seed: u64, stream: u64, base_dir: &Path) -> Result<Field, String> {
        match self {
            FieldGen::Constant { value } => Ok(Field::constant(grid, *value)),
            FieldGen::Cosine { base, amplitude, kx, ky } => {
                let (kx, ky) = (*kx as f64, *ky as f64);
                Ok(Field::from_fn(grid, |x, y| {
                    base + amplitude * (kx * PI * x / grid.lx()).cos() * (ky * PI * y / grid.ly()).cos()
                }))
            }
            FieldGen::Random { min, max, modes } => {
                if !(min <= max) {
                    return Err(format!("random field needs min <= max, got [{min}, {max}]"));
                }
                Ok(random_field(grid, &mut stream_rng(seed, stream), *min, *max, *modes))
            }
            FieldGen::File { path } => {
                let full = base_dir.join(path);
                let field = snapshot::read_field(&full).map_err(|e| e.to_string())?;
                if *field.grid() != grid {
                    return Err(format!("{} holds a field on a different grid", full.display()));
                }
                Ok(field)
            }
        }
    }

    /// Control over `nt` slices. Random controls blend linearly in time
    /// between two independent random fields; other kinds are constant in time.
    pub fn build_control(
        &self,
        grid: Grid,
        nt: usize,
        seed: u64,
        stream: u64,
        base_dir: &Path,
    ) -> Result<Control, String> {
        match self {
            FieldGen::Random { min, max, modes } => {
                if !(min <= max) {
                    return Err(format!("random field needs min <= max, got [{min}, {max}]"));
                }
                let mut rng = stream_rng(seed, stream);
                let a = random_field(grid, &mut rng, *min, *max, *modes);
                let b = random_field(grid, &mut rng, *min, *max, *modes);
                let slices = (0..nt)
                    .map(|k| {
                        let t = if nt > 1 { k as f64 / (nt - 1) as f64 } else { 0.0 };
                        a.zip_map(&b, |x, y| (1.0 - t) * x + t * y)
                    })
                    .collect();
                Control::from_slices(grid, slices).map_err(|e| e.to_string())
            }
            other => {
                let f = other.build(grid, seed, stream, base_dir)?;
                Control::from_slices(grid, vec![f; nt]).map_err(|e| e.to_string())
            }
        }
    }
}
