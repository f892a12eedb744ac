//! Binary field files, PPM images and the energy log.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::convex::ConstraintSet;
use crate::field::PhaseField;
use crate::solver::StepReport;
use crate::spectral::GridSpec;

pub const FIELD_MAGIC: &[u8; 4] = b"PFC1";
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum FieldFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"PFC1\"")]
    Magic([u8; 4]),
    #[error("size mismatch: header needs {expected} bytes, file has {got}")]
    Size { expected: usize, got: usize },
    #[error("unsupported header: nx = {nx}, ny = {ny}, m = {m}")]
    Header { nx: u32, ny: u32, m: u32 },
}

pub fn encode_field(u: &PhaseField) -> Vec<u8> {
    let g = u.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * u.data().len());
    out.extend_from_slice(FIELD_MAGIC);
    for v in [g.nx as u32, g.ny as u32, u.m() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for x in u.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Decodes a field file. The grid extent is not stored; `lx` sets the
/// physical width and `ly` follows from square cells.
pub fn decode_field(bytes: &[u8], lx: f64) -> Result<PhaseField, FieldFileError> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != FIELD_MAGIC {
            return Err(FieldFileError::Magic(bytes[..4].try_into().unwrap()));
        }
        return Err(FieldFileError::Size {
            expected: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if &magic != FIELD_MAGIC {
        return Err(FieldFileError::Magic(magic));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (nx, ny, m) = (word(0), word(1), word(2));
    let bad = || FieldFileError::Header { nx, ny, m };
    if !(m == 1 || m == 2) {
        return Err(bad());
    }
    let count = (nx as usize)
        .checked_mul(ny as usize)
        .and_then(|c| c.checked_mul(m as usize))
        .ok_or_else(bad)?;
    let expected = HEADER_LEN + 8 * count;
    if bytes.len() != expected {
        return Err(FieldFileError::Size {
            expected,
            got: bytes.len(),
        });
    }
    let ly = lx * ny as f64 / nx as f64;
    let grid = GridSpec::new(nx as usize, ny as usize, lx, ly).map_err(|_| bad())?;
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(PhaseField::from_planes(grid, m as usize, data).expect("length checked above"))
}

pub fn write_field(path: &Path, u: &PhaseField) -> io::Result<()> {
    std::fs::write(path, encode_field(u))
}

pub fn read_field(path: &Path, lx: f64) -> Result<PhaseField, FieldFileError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_field(&bytes, lx)
}

// Color maps, RGB in [0, 1].
const CYAN: [f64; 3] = [0.0, 1.0, 1.0];
const YELLOW: [f64; 3] = [1.0, 1.0, 0.0];
const MAGENTA: [f64; 3] = [1.0, 0.0, 1.0];
const LENS_RED: [f64; 3] = [0.85, 0.1, 0.1];
const LENS_BLUE: [f64; 3] = [0.1, 0.25, 0.9];
const LENS_TINT: f64 = 0.6;

fn hsv(hue: f64, value: f64) -> [f64; 3] {
    let h6 = hue.rem_euclid(1.0) * 6.0;
    let f = h6 - h6.floor();
    let (q, t) = (value * (1.0 - f), value * f);
    match h6 as usize % 6 {
        0 => [value, t, 0.0],
        1 => [q, value, 0.0],
        2 => [0.0, value, t],
        3 => [0.0, q, value],
        4 => [t, 0.0, value],
        _ => [value, 0.0, q],
    }
}

fn barycentric(v: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = *v;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l2 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l3 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    let l = [1.0 - l2 - l3, l2, l3].map(|x: f64| x.clamp(0.0, 1.0));
    let s: f64 = l.iter().sum();
    l.map(|x| x / s)
}

/// Color of one cell value under the map attached to `set`.
pub fn color(set: &ConstraintSet, u: [f64; 2]) -> [u8; 3] {
    let rgb = match set {
        ConstraintSet::Interval { lo, hi } => {
            let g = (u[0] - lo) / (hi - lo);
            [g, g, g]
        }
        ConstraintSet::Disk { radius } => {
            let hue = u[1].atan2(u[0]) / std::f64::consts::TAU;
            hsv(hue, (u[0].hypot(u[1]) / radius).min(1.0))
        }
        ConstraintSet::Triangle { vertices } => {
            let l = barycentric(vertices, u);
            let mut c = [0.0; 3];
            for (w, col) in l.iter().zip([CYAN, YELLOW, MAGENTA]) {
                for ch in 0..3 {
                    c[ch] += w * col[ch];
                }
            }
            c
        }
        ConstraintSet::Lens { .. } => {
            let s = ((u[0] + 1.0) / 2.0).clamp(0.0, 1.0);
            let base = YELLOW.map(|x| x * s);
            let tint = if u[1] > 0.0 {
                LENS_RED
            } else if u[1] < 0.0 {
                LENS_BLUE
            } else {
                base
            };
            let w = LENS_TINT * (1.0 - (2.0 * s - 1.0).abs());
            [0, 1, 2].map(|ch| (1.0 - w) * base[ch] + w * tint[ch])
        }
    };
    rgb.map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)
}

/// Binary PPM, one pixel per cell, top row = largest `y`.
pub fn encode_image(u: &PhaseField, set: &ConstraintSet) -> Vec<u8> {
    let g = u.grid();
    let mut out = format!("P6\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    out.reserve(3 * g.cells());
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            out.extend_from_slice(&color(set, u.get(i, j)));
        }
    }
    out
}

pub fn write_image(path: &Path, u: &PhaseField, set: &ConstraintSet) -> io::Result<()> {
    std::fs::write(path, encode_image(u, set))
}

pub const CSV_HEADER: &str = "step,time,energy,inner_iters,final_change";

/// Streams `energy.csv` rows; floats use Rust's shortest round-trip format.
pub struct EnergyLog<W: Write> {
    out: W,
}

impl EnergyLog<BufWriter<File>> {
    pub fn create(path: &Path) -> io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> EnergyLog<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(Self { out })
    }

    pub fn row(&mut self, step: usize, r: &StepReport) -> io::Result<()> {
        writeln!(
            self.out,
            "{},{:e},{:e},{},{:e}",
            step, r.time, r.energy, r.inner_iters, r.final_change
        )
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
