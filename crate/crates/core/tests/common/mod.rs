//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use chaoscope::compression::{GrayImage, RangeTransform};
use num_bigint::BigUint;

/// Logistic orbit `x <- mu x (1 - x)` for `mu = mu_num / mu_den`, iterated in
/// `bits`-bit fixed point with floor rounding, returned as doubles.
/// The first entry is `x0 = x0_num / x0_den`.
pub fn logistic_fixed_point_orbit(mu_num: u64, mu_den: u64, x0_num: u64, x0_den: u64, bits: u64, n: usize) -> Vec<f64> {
    let one = BigUint::from(1u8) << bits;
    let mut x = (&one * x0_num) / x0_den;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            let complement = &one - &x;
            x = (&x * &complement * mu_num) / (&one * mu_den);
        }
        out.push(to_f64(&x, bits));
    }
    out
}

fn to_f64(x: &BigUint, bits: u64) -> f64 {
    let top = x >> (bits - 64);
    let digits = top.to_u64_digits();
    let v = digits.first().copied().unwrap_or(0);
    v as f64 / 2f64.powi(64)
}

/// Keystream by the plain rule: warm up, then one byte per iterate from the
/// low byte of `floor(x * 2^32)`.
pub fn straight_line_keystream(mu: f64, x0: f64, warmup: u32, n: usize) -> Vec<u8> {
    let mut x = x0;
    for _ in 0..warmup {
        x = mu * x * (1.0 - x);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        x = mu * x * (1.0 - x);
        let fixed = (x * 4294967296.0).floor();
        out.push((fixed % 256.0) as u8);
    }
    out
}

/// Pixel `(x, y)` of a `size`-square block under isometry `iso`.
fn sym(block: &[f64], size: usize, iso: u8, x: usize, y: usize) -> f64 {
    let m = size - 1;
    let (sx, sy) = match iso {
        0 => (x, y),
        1 => (y, m - x),
        2 => (m - x, m - y),
        3 => (m - y, x),
        4 => (m - x, y),
        5 => (x, m - y),
        6 => (y, x),
        _ => (m - y, m - x),
    };
    block[sy * size + sx]
}

/// Exhaustive search over every domain position, isometry, quantized
/// contrast `|s_q| <= s_limit` and offset `o_q` in `-255..=255`. Ties go to
/// the smallest `(error, dy, dx, iso, |s_q|, s_q, o_q)`.
pub fn brute_force_encode(image: &GrayImage, range: usize, step: usize, s_limit: i32) -> Vec<RangeTransform> {
    let (w, h) = (image.width(), image.height());
    let px = |x: usize, y: usize| image.pixels()[y * w + x] as f64;
    let mut domains = Vec::new();
    let mut dy = 0;
    while dy + 2 * range <= h {
        let mut dx = 0;
        while dx + 2 * range <= w {
            let mut block = vec![0.0; range * range];
            for y in 0..range {
                for x in 0..range {
                    let (a, b) = (dx + 2 * x, dy + 2 * y);
                    block[y * range + x] = (px(a, b) + px(a + 1, b) + px(a, b + 1) + px(a + 1, b + 1)) / 4.0;
                }
            }
            let variants: Vec<Vec<f64>> = (0..8u8)
                .map(|iso| {
                    let mut v = Vec::with_capacity(range * range);
                    for y in 0..range {
                        for x in 0..range {
                            v.push(sym(&block, range, iso, x, y));
                        }
                    }
                    v
                })
                .collect();
            domains.push((dx, dy, variants));
            dx += step;
        }
        dy += step;
    }

    let mut out = Vec::new();
    for by in 0..h / range {
        for bx in 0..w / range {
            let target: Vec<f64> =
                (0..range * range).map(|i| px(bx * range + i % range, by * range + i / range)).collect();
            type Key = (f64, usize, usize, u8, i32, i32, i32);
            let mut best: Option<Key> = None;
            for (dx, dy, variants) in &domains {
                for (iso, d) in variants.iter().enumerate() {
                    for s_q in -s_limit..=s_limit {
                        let s = s_q as f64 / 63.0;
                        for o_q in -255..=255 {
                            let o = o_q as f64;
                            let mut err = 0.0;
                            for (dv, rv) in d.iter().zip(&target) {
                                let v = s * dv + o - rv;
                                err += v * v;
                            }
                            let key = (err, *dy, *dx, iso as u8, s_q.abs(), s_q, o_q);
                            let better = match &best {
                                None => true,
                                Some(b) => key.partial_cmp(b) == Some(std::cmp::Ordering::Less),
                            };
                            if better {
                                best = Some(key);
                            }
                        }
                    }
                }
            }
            let (_, dy, dx, iso, _, s_q, o_q) = best.expect("at least one candidate");
            out.push(RangeTransform {
                domain_x: dx as u16,
                domain_y: dy as u16,
                isometry: iso,
                s_q: s_q as i8,
                o_q: o_q as i16,
            });
        }
    }
    out
}

/// Deterministic 16x16 test images: a ramp, a blob and seeded noise.
pub fn small_images() -> Vec<(&'static str, GrayImage)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(16);
    let noise: Vec<u8> = (0..256).map(|_| rng.random()).collect();
    vec![
        ("ramp", chaoscope::compression::synthetic::ramp(16)),
        ("blob", chaoscope::compression::synthetic::gaussian_blob(16)),
        ("noise", GrayImage::new(16, 16, noise).expect("16x16")),
    ]
}
