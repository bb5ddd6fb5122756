//! CSV and PGM serialization with atomic file replacement.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{BifurcationDiagram, CobwebTrace};
use crate::compression::GrayImage;
use crate::dynamics::{MapOrbit, Trajectory};
use crate::fractals::{BinaryImage, Bounds, EscapeGrid};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }

    fn parse(path: &Path, message: impl Into<String>) -> Self {
        IoError::Parse { path: path.to_path_buf(), message: message.into() }
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| IoError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|e| IoError::io(path, e))
}

/// Decimal with 17 significant digits, enough to round-trip any double.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text with a header row and LF line endings.
pub fn csv_text<I, R>(header: &[String], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn state_header(first: &str, dim: usize) -> Vec<String> {
    std::iter::once(first.to_string()).chain((0..dim).map(|k| format!("x{k}"))).collect()
}

/// Columns `t,x0,x1,...`, one row per accepted step plus the initial state.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let rows = traj
        .iter()
        .map(|(t, s)| std::iter::once(format_real(t)).chain(s.iter().map(|v| format_real(*v))).collect::<Vec<_>>());
    csv_text(&state_header("t", traj.dim()), rows)
}

/// Columns `n,x0,...`, where `n` is the iterate index in the raw orbit.
pub fn map_orbit_csv(orbit: &MapOrbit) -> String {
    let dim = orbit.points().first().map_or(0, |p| p.dim());
    let rows = orbit.points().iter().enumerate().map(|(k, s)| {
        std::iter::once(orbit.index_of(k).to_string()).chain(s.iter().map(|v| format_real(*v))).collect::<Vec<_>>()
    });
    csv_text(&state_header("n", dim), rows)
}

pub fn pairs_csv(points: &[(f64, f64)]) -> String {
    let rows = points.iter().map(|(x, y)| [format_real(*x), format_real(*y)]);
    csv_text(&["x".to_string(), "y".to_string()], rows)
}

pub fn cobweb_csv(trace: &CobwebTrace) -> String {
    pairs_csv(&trace.vertices)
}

pub fn bifurcation_csv(diagram: &BifurcationDiagram) -> String {
    pairs_csv(&diagram.points)
}

/// Parses CSV produced by this module: a header row, then numeric fields.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().ok_or("empty CSV")?.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|_| format!("line {}: bad number {f:?}", i + 2)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("line {}: {} fields, header has {}", i + 2, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Binary PGM (P5, maxval 255) from top-down rows.
pub fn pgm_bytes(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    debug_assert_eq!(pixels.len(), width * height);
    let mut header = String::new();
    write!(header, "P5\n{width} {height}\n255\n").expect("writing to a String");
    let mut out = header.into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn gray_pgm(image: &GrayImage) -> Vec<u8> {
    pgm_bytes(image.width(), image.height(), image.pixels())
}

/// Gray level for an escape count: `round(255 (count - 1) / (nmax - 1))`.
pub fn escape_shade(count: u32, nmax: u32) -> u8 {
    if nmax <= 1 {
        return 255;
    }
    (255.0 * (count.saturating_sub(1)) as f64 / (nmax - 1) as f64).round() as u8
}

/// Escape grid with the top row at the largest imaginary part.
pub fn escape_grid_pgm(grid: &EscapeGrid) -> Vec<u8> {
    let (w, h) = (grid.columns(), grid.rows());
    let mut pixels = Vec::with_capacity(w * h);
    for row in (0..h).rev() {
        pixels.extend((0..w).map(|col| escape_shade(grid.get(col, row), grid.nmax())));
    }
    pgm_bytes(w, h, &pixels)
}

/// Set pixels as 255, top row at the largest `y`.
pub fn binary_pgm(image: &BinaryImage) -> Vec<u8> {
    let (w, h) = (image.width(), image.height());
    let mut pixels = Vec::with_capacity(w * h);
    for y in (0..h).rev() {
        pixels.extend((0..w).map(|x| if image.get(x, y) { 255 } else { 0 }));
    }
    pgm_bytes(w, h, &pixels)
}

/// Parses a binary PGM with maxval 255. Comments in the header are skipped.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, String> {
    let mut pos = 0;
    let mut token = || -> Result<String, String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PGM header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err("not a binary PGM (P5)".into());
    }
    let mut number =
        |what: &str| -> Result<usize, String> { token()?.parse::<usize>().map_err(|_| format!("bad PGM {what}")) };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(format!("unsupported PGM maxval {maxval} (need 255)"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let data = &bytes[pos + 1.min(bytes.len() - pos)..];
    if data.len() != width * height {
        return Err(format!("PGM raster is {} bytes, expected {}", data.len(), width * height));
    }
    GrayImage::new(width, height, data.to_vec()).map_err(|e| e.to_string())
}

/// Thresholds a gray image at mid-level into a binary raster over the unit
/// square, undoing the top-down row order.
pub fn binary_from_gray(image: &GrayImage) -> BinaryImage {
    let (w, h) = (image.width(), image.height());
    let mut bits = Vec::with_capacity(w * h);
    for y in (0..h).rev() {
        bits.extend((0..w).map(|x| image.get(x, y) > 127));
    }
    BinaryImage::from_bits(w, h, bits, Bounds::UNIT).expect("dimensions come from a valid image")
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, IoError> {
    parse_pgm(&read_file(path)?).map_err(|m| IoError::parse(path, m))
}
