//! Partitioned-IFS fractal image codec.
//!
//! An image is split into square range blocks. Each range block is encoded
//! as a contractive affine copy of a twice-as-large domain block from the same
//! image: the domain is 2x2-averaged down to range size, put through one of
//! the eight square symmetries, then scaled in contrast (`s`) and shifted in
//! brightness (`o`). Decoding iterates the transform set from any start image
//! until it settles on the fixed point.
//!
//! `s` and `o` are stored quantized, and the encoder picks the transform that
//! is best *after* quantization, so the decoder sees exactly what was
//! optimized. Among equal-error choices the lowest
//! `(domain_y, domain_x, isometry, |s_q|, s_q, o_q)` wins.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompressionError {
    #[error("image {width}x{height} is not divisible into {range_size}x{range_size} range blocks")]
    DimensionError { width: usize, height: usize, range_size: usize },
    #[error("image {width}x{height} is too small for {size}x{size} domain blocks")]
    ImageTooSmall { width: usize, height: usize, size: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed PIFS code: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CompressionError>;

/// 8-bit grayscale raster, row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CompressionError::InvalidParameter("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(CompressionError::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let pixels = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(CompressionError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Encoding of one range block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeTransform {
    pub domain_x: u16,
    pub domain_y: u16,
    /// Element of the dihedral group of the square, see [`isometry_source`].
    pub isometry: u8,
    /// Contrast scale in units of 1/63.
    pub s_q: i8,
    /// Brightness offset in gray levels.
    pub o_q: i16,
}

pub const S_LEVELS: i32 = 63;

impl RangeTransform {
    pub fn s(&self) -> f64 {
        self.s_q as f64 / S_LEVELS as f64
    }

    pub fn o(&self) -> f64 {
        self.o_q as f64
    }
}

/// A compressed image: one transform per range block, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PifsCode {
    pub width: usize,
    pub height: usize,
    pub range_size: usize,
    pub transforms: Vec<RangeTransform>,
}

const MAGIC: &[u8; 4] = b"FIC1";
const HEADER_LEN: usize = 10;
const RECORD_LEN: usize = 8;

impl PifsCode {
    pub fn blocks_x(&self) -> usize {
        self.width / self.range_size
    }

    pub fn blocks_y(&self) -> usize {
        self.height / self.range_size
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.range_size;
        if b == 0 || self.width == 0 || self.height == 0 {
            return Err(CompressionError::Format("zero-sized image or block".into()));
        }
        if !self.width.is_multiple_of(b) || !self.height.is_multiple_of(b) {
            return Err(CompressionError::DimensionError { width: self.width, height: self.height, range_size: b });
        }
        let expected = self.blocks_x() * self.blocks_y();
        if self.transforms.len() != expected {
            return Err(CompressionError::Format(format!("{} transforms, expected {expected}", self.transforms.len())));
        }
        for (i, t) in self.transforms.iter().enumerate() {
            if t.isometry > 7 {
                return Err(CompressionError::Format(format!("transform {i}: isometry {}", t.isometry)));
            }
            if t.s_q.unsigned_abs() as i32 > S_LEVELS {
                return Err(CompressionError::Format(format!("transform {i}: s_q {}", t.s_q)));
            }
            if t.o_q.unsigned_abs() > 255 {
                return Err(CompressionError::Format(format!("transform {i}: o_q {}", t.o_q)));
            }
            if t.domain_x as usize + 2 * b > self.width || t.domain_y as usize + 2 * b > self.height {
                return Err(CompressionError::Format(format!(
                    "transform {i}: domain ({}, {}) leaves the image",
                    t.domain_x, t.domain_y
                )));
            }
        }
        Ok(())
    }

    /// Little-endian container: `FIC1`, u16 width, u16 height, u8 range size,
    /// u8 reserved, then per transform u16 dx, u16 dy, u8 isometry, i8 s, i16 o.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let dims = [self.width, self.height, self.range_size];
        if self.width > u16::MAX as usize || self.height > u16::MAX as usize || self.range_size > u8::MAX as usize {
            return Err(CompressionError::Format(format!("dimensions {dims:?} exceed the container limits")));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * self.transforms.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.width as u16).to_le_bytes());
        out.extend_from_slice(&(self.height as u16).to_le_bytes());
        out.push(self.range_size as u8);
        out.push(0);
        for t in &self.transforms {
            out.extend_from_slice(&t.domain_x.to_le_bytes());
            out.extend_from_slice(&t.domain_y.to_le_bytes());
            out.push(t.isometry);
            out.push(t.s_q as u8);
            out.extend_from_slice(&t.o_q.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(CompressionError::Format("missing FIC1 header".into()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let width = u16_at(4) as usize;
        let height = u16_at(6) as usize;
        let range_size = bytes[8] as usize;
        if bytes[9] != 0 {
            return Err(CompressionError::Format("reserved byte is not zero".into()));
        }
        let body = &bytes[HEADER_LEN..];
        if !body.len().is_multiple_of(RECORD_LEN) {
            return Err(CompressionError::Format("truncated transform record".into()));
        }
        let transforms = body
            .chunks_exact(RECORD_LEN)
            .map(|r| RangeTransform {
                domain_x: u16::from_le_bytes([r[0], r[1]]),
                domain_y: u16::from_le_bytes([r[2], r[3]]),
                isometry: r[4],
                s_q: r[5] as i8,
                o_q: i16::from_le_bytes([r[6], r[7]]),
            })
            .collect();
        let code = Self { width, height, range_size, transforms };
        code.validate()?;
        Ok(code)
    }
}

/// Source coordinate inside a `size`x`size` block for output pixel `(x, y)`
/// under isometry `iso`: 0 identity, 1-3 rotations by 90/180/270 degrees,
/// 4 horizontal flip, 5 vertical flip, 6 transpose, 7 anti-transpose.
pub fn isometry_source(iso: u8, x: usize, y: usize, size: usize) -> (usize, usize) {
    let m = size - 1;
    match iso {
        0 => (x, y),
        1 => (y, m - x),
        2 => (m - x, m - y),
        3 => (m - y, x),
        4 => (m - x, y),
        5 => (x, m - y),
        6 => (y, x),
        7 => (m - y, m - x),
        _ => panic!("isometry {iso} out of range"),
    }
}

/// 2x2-average of the `2 size` square at `(dx, dy)`, row-major.
fn downsample(image: &GrayImage, dx: usize, dy: usize, size: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (sx, sy) = (dx + 2 * x, dy + 2 * y);
            let sum = image.get(sx, sy) as f64
                + image.get(sx + 1, sy) as f64
                + image.get(sx, sy + 1) as f64
                + image.get(sx + 1, sy + 1) as f64;
            out.push(sum / 4.0);
        }
    }
    out
}

fn apply_isometry(block: &[f64], iso: u8, size: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(block.len());
    for y in 0..size {
        for x in 0..size {
            let (sx, sy) = isometry_source(iso, x, y, size);
            out.push(block[sy * size + sx]);
        }
    }
    out
}

/// `Σ (s d + o - r)^2` over a block, accumulated in row-major order.
pub fn block_error(domain: &[f64], range: &[f64], s: f64, o: f64) -> f64 {
    let mut err = 0.0;
    for (d, r) in domain.iter().zip(range) {
        let v = s * d + o - r;
        err += v * v;
    }
    err
}

/// Encoder settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    pub range_size: usize,
    pub domain_step: usize,
    /// Bound on `|s|`, at most 1.
    pub s_max: f64,
    pub parallel: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { range_size: 8, domain_step: 8, s_max: 1.0, parallel: true }
    }
}

impl EncoderConfig {
    /// Checks every encoding precondition that depends on the image shape.
    pub fn validate_for(&self, width: usize, height: usize) -> Result<()> {
        let b = self.range_size;
        if b == 0 || self.domain_step == 0 {
            return Err(CompressionError::InvalidParameter("range_size and domain_step must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.s_max) {
            return Err(CompressionError::InvalidParameter(format!("s_max must lie in [0, 1], got {}", self.s_max)));
        }
        if !width.is_multiple_of(b) || !height.is_multiple_of(b) {
            return Err(CompressionError::DimensionError { width, height, range_size: b });
        }
        if 2 * b > width || 2 * b > height {
            return Err(CompressionError::ImageTooSmall { width, height, size: 2 * b });
        }
        if width > u16::MAX as usize || height > u16::MAX as usize || b > u8::MAX as usize {
            return Err(CompressionError::InvalidParameter("image or block too large for the container".into()));
        }
        Ok(())
    }

    fn s_limit(&self) -> i32 {
        ((self.s_max * S_LEVELS as f64 + 1e-9).floor() as i32).clamp(0, S_LEVELS)
    }
}

/// Candidate domain with its eight symmetric variants precomputed.
struct DomainBlock {
    x: u16,
    y: u16,
    variants: [Vec<f64>; 8],
    sum: f64,
    sum_sq: f64,
}

fn domain_pool(image: &GrayImage, cfg: &EncoderConfig) -> Vec<DomainBlock> {
    let b = cfg.range_size;
    let mut pool = Vec::new();
    for dy in (0..=image.height - 2 * b).step_by(cfg.domain_step) {
        for dx in (0..=image.width - 2 * b).step_by(cfg.domain_step) {
            let base = downsample(image, dx, dy, b);
            let sum = base.iter().sum();
            let sum_sq = base.iter().map(|v| v * v).sum();
            let variants = std::array::from_fn(|iso| apply_isometry(&base, iso as u8, b));
            pool.push(DomainBlock { x: dx as u16, y: dy as u16, variants, sum, sum_sq });
        }
    }
    pool
}

/// Quantized `s` values in tie-break order: 0, -1, 1, -2, 2, ...
fn s_candidates(limit: i32) -> impl Iterator<Item = i32> {
    std::iter::once(0).chain((1..=limit).flat_map(|k| [-k, k]))
}

fn encode_block(range: &[f64], pool: &[DomainBlock], s_limit: i32) -> RangeTransform {
    let n = range.len() as f64;
    let r_sum: f64 = range.iter().sum();
    let r_mean = r_sum / n;
    let r_var: f64 = range.iter().map(|r| (r - r_mean) * (r - r_mean)).sum();

    let mut best_err = f64::INFINITY;
    let mut best = RangeTransform { domain_x: 0, domain_y: 0, isometry: 0, s_q: 0, o_q: 0 };

    for dom in pool {
        let d_mean = dom.sum / n;
        let d_var = (dom.sum_sq - dom.sum * d_mean).max(0.0);
        for (iso, d) in dom.variants.iter().enumerate() {
            let dr: f64 = d.iter().zip(range).map(|(a, b)| a * b).sum();
            let cov = dr - dom.sum * r_mean;
            for s_q in s_candidates(s_limit) {
                let s = s_q as f64 / S_LEVELS as f64;
                // Error with o free: a lower bound for any integer o.
                let bound = r_var - 2.0 * s * cov + s * s * d_var;
                if bound > best_err + 1e-7 * (1.0 + best_err) {
                    continue;
                }
                let o_star = r_mean - s * d_mean;
                let lo = (o_star.floor() as i32).clamp(-255, 255);
                let hi = (o_star.ceil() as i32).clamp(-255, 255);
                for o_q in lo..=hi {
                    let err = block_error(d, range, s, o_q as f64);
                    if err < best_err {
                        best_err = err;
                        best = RangeTransform {
                            domain_x: dom.x,
                            domain_y: dom.y,
                            isometry: iso as u8,
                            s_q: s_q as i8,
                            o_q: o_q as i16,
                        };
                    }
                }
            }
        }
    }
    best
}

fn range_block(image: &GrayImage, bx: usize, by: usize, size: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            out.push(image.get(bx * size + x, by * size + y) as f64);
        }
    }
    out
}

pub fn pifs_encode_with(image: &GrayImage, cfg: &EncoderConfig) -> Result<PifsCode> {
    cfg.validate_for(image.width, image.height)?;
    let b = cfg.range_size;
    let pool = domain_pool(image, cfg);
    let s_limit = cfg.s_limit();
    let (bw, bh) = (image.width / b, image.height / b);
    let encode = |i: usize| encode_block(&range_block(image, i % bw, i / bw, b), &pool, s_limit);
    let transforms: Vec<RangeTransform> = if cfg.parallel {
        (0..bw * bh).into_par_iter().map(encode).collect()
    } else {
        (0..bw * bh).map(encode).collect()
    };
    Ok(PifsCode { width: image.width, height: image.height, range_size: b, transforms })
}

/// Encodes with domains of `2 range_size` stepped by `domain_step` and
/// `|s| <= s_max`.
pub fn pifs_encode(image: &GrayImage, range_size: usize, domain_step: usize, s_max: f64) -> Result<PifsCode> {
    pifs_encode_with(image, &EncoderConfig { range_size, domain_step, s_max, parallel: true })
}

/// One Jacobi pass: every range block is rebuilt from `prev`.
pub fn decode_pass(code: &PifsCode, prev: &GrayImage) -> GrayImage {
    let b = code.range_size;
    let bw = code.blocks_x();
    let mut next = vec![0u8; prev.pixels.len()];
    for (i, t) in code.transforms.iter().enumerate() {
        let (bx, by) = (i % bw, i / bw);
        let dom = downsample(prev, t.domain_x as usize, t.domain_y as usize, b);
        let (s, o) = (t.s(), t.o());
        for y in 0..b {
            for x in 0..b {
                let (sx, sy) = isometry_source(t.isometry, x, y, b);
                let v = (s * dom[sy * b + sx] + o).clamp(0.0, 255.0).round();
                next[(by * b + y) * prev.width + bx * b + x] = v as u8;
            }
        }
    }
    GrayImage { width: prev.width, height: prev.height, pixels: next }
}

pub const DEFAULT_START_GRAY: u8 = 128;

/// Applies the transform set `iterations` times, starting from `start` or a
/// uniform mid-gray image.
pub fn pifs_decode(code: &PifsCode, iterations: usize, start: Option<&GrayImage>) -> Result<GrayImage> {
    let frames = pifs_decode_frames(code, iterations, start)?;
    Ok(frames.into_iter().last().expect("at least one iteration"))
}

/// Like [`pifs_decode`] but returns every iterate (index 0 is after pass 1).
pub fn pifs_decode_frames(code: &PifsCode, iterations: usize, start: Option<&GrayImage>) -> Result<Vec<GrayImage>> {
    code.validate()?;
    if iterations == 0 {
        return Err(CompressionError::InvalidParameter("iterations must be at least 1".into()));
    }
    let mut img = match start {
        Some(s) => {
            if s.width != code.width || s.height != code.height {
                return Err(CompressionError::DimensionMismatch(format!(
                    "start image {}x{} vs code {}x{}",
                    s.width, s.height, code.width, code.height
                )));
            }
            s.clone()
        }
        None => GrayImage::filled(code.width, code.height, DEFAULT_START_GRAY)?,
    };
    let mut frames = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        img = decode_pass(code, &img);
        frames.push(img.clone());
    }
    Ok(frames)
}

pub const PSNR_CAP: f64 = 99.0;

fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.same_shape(b)?;
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.pixels.len() as f64)
}

/// Peak signal-to-noise ratio in dB, capped at [`PSNR_CAP`] for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok(10.0 * (255.0 * 255.0 / m).log10())
}

/// Root-mean-square pixel difference in gray levels.
pub fn rms_distance(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    Ok(mse(a, b)?.sqrt())
}

/// Deterministic synthetic test images.
pub mod synthetic {
    use super::GrayImage;

    /// Horizontal ramp, `round(255 x / (size - 1))`.
    pub fn ramp(size: usize) -> GrayImage {
        let last = (size - 1) as f64;
        GrayImage::from_fn(size, size, |x, _| (255.0 * x as f64 / last).round() as u8).expect("non-empty")
    }

    /// Centred Gaussian bump with standard deviation `size / 6`.
    pub fn gaussian_blob(size: usize) -> GrayImage {
        let c = (size - 1) as f64 / 2.0;
        let sigma = size as f64 / 6.0;
        GrayImage::from_fn(size, size, |x, y| {
            let r2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2);
            (255.0 * (-r2 / (2.0 * sigma * sigma)).exp()).round() as u8
        })
        .expect("non-empty")
    }

    /// 0/255 checkerboard of `cell`-pixel squares smoothed by a separable
    /// Gaussian with standard deviation `cell / 2`, edges clamped.
    pub fn blurred_checkerboard(size: usize, cell: usize) -> GrayImage {
        let sigma = cell as f64 / 2.0;
        let radius = (3.0 * sigma).ceil() as i64;
        let weights: Vec<f64> = (-radius..=radius).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let total: f64 = weights.iter().sum();
        let clamp = |v: i64| v.clamp(0, size as i64 - 1) as usize;
        let sharp = |x: usize, y: usize| if (x / cell + y / cell).is_multiple_of(2) { 0.0 } else { 255.0 };
        // Horizontal pass, then vertical.
        let mut rows = vec![0.0f64; size * size];
        for y in 0..size {
            for x in 0..size {
                rows[y * size + x] =
                    (-radius..=radius).zip(&weights).map(|(d, w)| w * sharp(clamp(x as i64 + d), y)).sum::<f64>()
                        / total;
            }
        }
        GrayImage::from_fn(size, size, |x, y| {
            let v: f64 = (-radius..=radius).zip(&weights).map(|(d, w)| w * rows[clamp(y as i64 + d) * size + x]).sum();
            (v / total).round() as u8
        })
        .expect("non-empty")
    }

    pub fn corpus(size: usize) -> Vec<(&'static str, GrayImage)> {
        vec![("ramp", ramp(size)), ("blob", gaussian_blob(size)), ("checkerboard", blurred_checkerboard(size, 8))]
    }
}
