//! Escape-time Mandelbrot grids, deterministic IFS iteration on a raster and
//! fractal dimension (exact similarity formula and box counting).

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FractalError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("escape threshold must be at least 2, got {0}")]
    ThresholdTooSmall(f64),
    #[error("nmax must be positive")]
    ZeroIterations,
    #[error("grid of {pixels} pixels exceeds the cap of {cap}")]
    GridTooLarge { pixels: u64, cap: u64 },
    #[error("affine map is not contractive (operator norm {0})")]
    NotContractive(f64),
    #[error("an IFS needs at least one map")]
    EmptySystem,
    #[error("image has no set pixels")]
    EmptyImage,
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, FractalError>;

/// Rectangle of the complex plane sampled with a fixed pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexWindow {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub scale: f64,
}

impl ComplexWindow {
    /// Window and pitch of the classic full-set view.
    pub const CLASSIC: Self = Self { xmin: -2.4, xmax: 1.2, ymin: -1.5, ymax: 1.5, scale: 0.005 };

    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64, scale: f64) -> Result<Self> {
        let w = Self { xmin, xmax, ymin, ymax, scale };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.xmin, self.xmax, self.ymin, self.ymax, self.scale];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(FractalError::InvalidWindow("bounds must be finite".into()));
        }
        if !(self.scale > 0.0) {
            return Err(FractalError::InvalidWindow(format!("scale must be positive, got {}", self.scale)));
        }
        if !(self.xmin < self.xmax && self.ymin < self.ymax) {
            return Err(FractalError::InvalidWindow("need xmin < xmax and ymin < ymax".into()));
        }
        if (self.xmax - self.xmin) / self.scale < 2.0 || (self.ymax - self.ymin) / self.scale < 2.0 {
            return Err(FractalError::InvalidWindow("window must span at least two pitches per axis".into()));
        }
        Ok(())
    }

    pub fn columns(&self) -> usize {
        colon_len(self.xmin, self.xmax, self.scale)
    }

    pub fn rows(&self) -> usize {
        colon_len(self.ymin, self.ymax, self.scale)
    }

    /// Real coordinates of the grid columns, ascending.
    pub fn xs(&self) -> Vec<f64> {
        colon(self.xmin, self.xmax, self.scale)
    }

    /// Imaginary coordinates of the grid rows, ascending.
    pub fn ys(&self) -> Vec<f64> {
        colon(self.ymin, self.ymax, self.scale)
    }
}

/// Number of points in `lo, lo + step, ...` not exceeding `hi` (up to a
/// relative slack of 1e-10 of a step for decimal pitches).
fn colon_len(lo: f64, hi: f64, step: f64) -> usize {
    ((hi - lo) / step + 1e-10).floor() as usize + 1
}

/// Evenly spaced samples filled from both ends toward the middle, so that a
/// range symmetric about zero yields exactly negated pairs.
fn colon(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = colon_len(lo, hi, step);
    let span = (n - 1) as f64 * step;
    let mut end = lo + span;
    if (end - hi).abs() <= 1e-10 * step {
        end = hi;
    }
    (0..n).map(|k| if 2 * k < n { lo + k as f64 * step } else { end - (n - 1 - k) as f64 * step }).collect()
}

/// Escape-iteration counts over a [`ComplexWindow`].
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeGrid {
    counts: Vec<u32>,
    columns: usize,
    rows: usize,
    nmax: u32,
    threshold: f64,
    window: ComplexWindow,
}

impl EscapeGrid {
    /// Row-major counts; row 0 is the lowest imaginary part.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn nmax(&self) -> u32 {
        self.nmax
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn window(&self) -> &ComplexWindow {
        &self.window
    }

    pub fn get(&self, column: usize, row: usize) -> u32 {
        self.counts[row * self.columns + column]
    }

    /// Count at the grid point nearest to `re + i im`.
    pub fn count_near(&self, re: f64, im: f64) -> u32 {
        let w = &self.window;
        let col = ((re - w.xmin) / w.scale).round().clamp(0.0, (self.columns - 1) as f64) as usize;
        let row = ((im - w.ymin) / w.scale).round().clamp(0.0, (self.rows - 1) as f64) as usize;
        self.get(col, row)
    }
}

pub const DEFAULT_THRESHOLD: f64 = 4.0;
pub const DEFAULT_PIXEL_CAP: u64 = 100_000_000;

/// Escape time of `w <- w^2 + c` from `w = 0`: the first `N` in `1..=nmax`
/// with `|w_N| > threshold`, or `nmax` if none.
pub fn escape_count(re: f64, im: f64, nmax: u32, threshold: f64) -> u32 {
    let limit = threshold * threshold;
    let (mut wr, mut wi) = (0.0f64, 0.0f64);
    for n in 1..=nmax {
        let next_r = wr * wr - wi * wi + re;
        wi = 2.0 * wr * wi + im;
        wr = next_r;
        if wr * wr + wi * wi > limit {
            return n;
        }
    }
    nmax
}

pub fn mandelbrot_grid(window: ComplexWindow, nmax: u32, threshold: f64) -> Result<EscapeGrid> {
    mandelbrot_grid_capped(window, nmax, threshold, DEFAULT_PIXEL_CAP)
}

pub fn mandelbrot_grid_capped(window: ComplexWindow, nmax: u32, threshold: f64, pixel_cap: u64) -> Result<EscapeGrid> {
    window.validate()?;
    if nmax == 0 {
        return Err(FractalError::ZeroIterations);
    }
    if !(threshold >= 2.0) || !threshold.is_finite() {
        return Err(FractalError::ThresholdTooSmall(threshold));
    }
    let (columns, rows) = (window.columns(), window.rows());
    let pixels = columns as u64 * rows as u64;
    if pixels > pixel_cap {
        return Err(FractalError::GridTooLarge { pixels, cap: pixel_cap });
    }
    let xs = window.xs();
    let ys = window.ys();
    let mut counts = vec![0u32; columns * rows];
    counts.par_chunks_mut(columns).zip(ys.par_iter()).for_each(|(row, &im)| {
        for (cell, &re) in row.iter_mut().zip(&xs) {
            *cell = escape_count(re, im, nmax, threshold);
        }
    });
    Ok(EscapeGrid { counts, columns, rows, nmax, threshold, window })
}

/// `p -> linear * p + offset` on the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap2 {
    linear: [[f64; 2]; 2],
    offset: [f64; 2],
}

impl AffineMap2 {
    pub fn new(linear: [[f64; 2]; 2], offset: [f64; 2]) -> Result<Self> {
        let norm = operator_norm(linear);
        if !(norm < 1.0) {
            return Err(FractalError::NotContractive(norm));
        }
        Ok(Self { linear, offset })
    }

    /// Uniform scaling by `ratio` followed by a translation.
    pub fn similarity(ratio: f64, offset: [f64; 2]) -> Result<Self> {
        Self::new([[ratio, 0.0], [0.0, ratio]], offset)
    }

    pub fn linear(&self) -> [[f64; 2]; 2] {
        self.linear
    }

    pub fn offset(&self) -> [f64; 2] {
        self.offset
    }

    pub fn apply(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        let m = &self.linear;
        [m[0][0] * x + m[0][1] * y + self.offset[0], m[1][0] * x + m[1][1] * y + self.offset[1]]
    }
}

/// Largest singular value of a 2x2 matrix.
pub fn operator_norm(m: [[f64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = m;
    // Eigenvalues of M^T M: (s ± sqrt(s^2 - 4 det^2)) / 2, s = Frobenius^2.
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    ((s + disc) / 2.0).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfsSystem {
    maps: Vec<AffineMap2>,
}

impl IfsSystem {
    pub fn new(maps: Vec<AffineMap2>) -> Result<Self> {
        if maps.is_empty() {
            return Err(FractalError::EmptySystem);
        }
        Ok(Self { maps })
    }

    /// Three half-scale copies at (0,0), (1/2,0) and (1/4,1/2).
    pub fn sierpinski() -> Self {
        let maps = [[0.0, 0.0], [0.5, 0.0], [0.25, 0.5]]
            .into_iter()
            .map(|o| AffineMap2::similarity(0.5, o).expect("half scale is contractive"))
            .collect();
        Self { maps }
    }

    pub fn maps(&self) -> &[AffineMap2] {
        &self.maps
    }
}

/// World-coordinate bounds of a raster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    pub const UNIT: Self = Self { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 };
}

/// Boolean raster. Row 0 is the bottom row (lowest y), matching the escape
/// grid; PGM output flips it.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    world: Bounds,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, world: Bounds) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FractalError::Domain("image dimensions must be positive".into()));
        }
        if !(world.xmin < world.xmax && world.ymin < world.ymax) {
            return Err(FractalError::Domain("world bounds must be non-degenerate".into()));
        }
        Ok(Self { width, height, bits: vec![false; width * height], world })
    }

    pub fn filled(width: usize, height: usize, world: Bounds) -> Result<Self> {
        let mut img = Self::new(width, height, world)?;
        img.bits.fill(true);
        Ok(img)
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>, world: Bounds) -> Result<Self> {
        if bits.len() != width * height {
            return Err(FractalError::Domain(format!("{} bits do not match {width}x{height}", bits.len())));
        }
        let mut img = Self::new(width, height, world)?;
        img.bits = bits;
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn world(&self) -> Bounds {
        self.world
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    fn pixel_size(&self) -> (f64, f64) {
        let w = self.world();
        ((w.xmax - w.xmin) / self.width as f64, (w.ymax - w.ymin) / self.height as f64)
    }

    /// World coordinates of a pixel centre.
    pub fn center(&self, x: usize, y: usize) -> [f64; 2] {
        let w = self.world();
        let (dx, dy) = self.pixel_size();
        [w.xmin + (x as f64 + 0.5) * dx, w.ymin + (y as f64 + 0.5) * dy]
    }

    /// Pixel containing a world point, if inside the raster.
    pub fn pixel_of(&self, [px, py]: [f64; 2]) -> Option<(usize, usize)> {
        let w = self.world();
        let (dx, dy) = self.pixel_size();
        let fx = ((px - w.xmin) / dx).floor();
        let fy = ((py - w.ymin) / dy).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Set where any pixel within Chebyshev distance `radius` is set.
    pub fn dilate(&self, radius: usize) -> Self {
        let mut out = Self { bits: vec![false; self.bits.len()], ..self.clone() };
        for y in 0..self.height {
            for x in 0..self.width {
                if !self.get(x, y) {
                    continue;
                }
                for ny in y.saturating_sub(radius)..=(y + radius).min(self.height - 1) {
                    for nx in x.saturating_sub(radius)..=(x + radius).min(self.width - 1) {
                        out.set(nx, ny, true);
                    }
                }
            }
        }
        out
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

/// One application of the union operator: every set pixel centre is pushed
/// through every map and the pixel it lands in is set.
pub fn ifs_step(system: &IfsSystem, image: &BinaryImage) -> BinaryImage {
    let mut out = BinaryImage { bits: vec![false; image.bits.len()], ..image.clone() };
    for y in 0..image.height {
        for x in 0..image.width {
            if !image.get(x, y) {
                continue;
            }
            let c = image.center(x, y);
            for m in system.maps() {
                if let Some((tx, ty)) = out.pixel_of(m.apply(c)) {
                    out.set(tx, ty, true);
                }
            }
        }
    }
    out
}

/// `n` applications of [`ifs_step`].
pub fn ifs_iterate(system: &IfsSystem, start: &BinaryImage, n: usize) -> BinaryImage {
    let mut img = start.clone();
    for _ in 0..n {
        img = ifs_step(system, &img);
    }
    img
}

/// `D = -ln(N) / ln(r)`, the solution of `N r^D = 1`.
pub fn similarity_dimension(n_copies: u32, ratio: f64) -> Result<f64> {
    if n_copies == 0 {
        return Err(FractalError::Domain("need at least one copy".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(FractalError::Domain(format!("ratio must lie in (0, 1), got {ratio}")));
    }
    Ok(-(n_copies as f64).ln() / ratio.ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCountEstimate {
    pub dimension: f64,
    /// `(ln 2^k, ln count_k)` for each exponent `k`.
    pub fit_points: Vec<(f64, f64)>,
}

/// Box-counting dimension over boxes of side `ceil(min(w, h) / 2^k)` pixels,
/// `k` in `min_exponent..=max_exponent`, on a grid anchored at pixel (0, 0).
pub fn box_count_dimension(image: &BinaryImage, min_exponent: u32, max_exponent: u32) -> Result<BoxCountEstimate> {
    if !(1 <= min_exponent && min_exponent < max_exponent) {
        return Err(FractalError::Domain(format!(
            "need 1 <= min_exponent < max_exponent, got {min_exponent}..{max_exponent}"
        )));
    }
    let side = image.width.min(image.height);
    if max_exponent >= usize::BITS || (1usize << max_exponent) > side {
        return Err(FractalError::Domain(format!("2^{max_exponent} exceeds the smaller image side ({side})")));
    }
    if image.count() == 0 {
        return Err(FractalError::EmptyImage);
    }
    let fit_points: Vec<(f64, f64)> = (min_exponent..=max_exponent)
        .map(|k| {
            let boxes = 1usize << k;
            let box_side = side.div_ceil(boxes);
            let bw = image.width.div_ceil(box_side);
            let bh = image.height.div_ceil(box_side);
            let mut occupied = vec![false; bw * bh];
            for y in 0..image.height {
                let by = y / box_side;
                for x in 0..image.width {
                    if image.get(x, y) {
                        occupied[by * bw + x / box_side] = true;
                    }
                }
            }
            let count = occupied.iter().filter(|b| **b).count();
            ((boxes as f64).ln(), (count as f64).ln())
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = fit_points.iter().copied().unzip();
    let dimension = crate::analysis::least_squares_slope(&xs, &ys);
    Ok(BoxCountEstimate { dimension, fit_points })
}

/// The Sierpinski preset iterated `depth` times from a full square raster.
pub fn sierpinski_raster(size: usize, depth: usize) -> Result<BinaryImage> {
    let start = BinaryImage::filled(size, size, Bounds::UNIT)?;
    Ok(ifs_iterate(&IfsSystem::sierpinski(), &start, depth))
}
