//! Seeded synthetic test images.
//!
//! Everything here is reproducible from the seed alone (ChaCha8), so tests,
//! benches and the self-test see identical pixels on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image_io::{ImagePlanes, CHANNELS};

pub fn flat(width: usize, height: usize, value: f64) -> ImagePlanes {
    ImagePlanes::from_fn(width, height, |_, _, _| value).expect("non-empty image")
}

pub fn uniform_noise(width: usize, height: usize, seed: u64) -> ImagePlanes {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImagePlanes::from_fn(width, height, |_, _, _| rng.gen()).expect("non-empty image")
}

/// Left half flat, right half uniform noise. `split` is the first noise column.
pub fn flat_noise_composite(width: usize, height: usize, split: usize, seed: u64) -> ImagePlanes {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImagePlanes::from_fn(width, height, |x, _, _| {
        let v: f64 = rng.gen();
        if x < split {
            0.45
        } else {
            v
        }
    })
    .expect("non-empty image")
}

/// A smooth sky gradient over a rough, rocky lower part.
pub fn sky_over_rocks(width: usize, height: usize, seed: u64) -> ImagePlanes {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon: Vec<f64> = (0..width)
        .map(|x| height as f64 * (0.55 + 0.08 * (x as f64 / 23.0).sin()))
        .collect();
    ImagePlanes::from_fn(width, height, |x, y, c| {
        let grain: f64 = rng.gen::<f64>() - 0.5;
        let t = y as f64 / height as f64;
        if (y as f64) < horizon[x] {
            [0.45, 0.65, 0.9][c] + 0.08 * t
        } else {
            let base = [0.45, 0.38, 0.3][c];
            base + 0.25 * ((x as f64 / 5.0).sin() * (y as f64 / 3.0).cos()) + 0.35 * grain
        }
    })
    .expect("non-empty image")
}

/// Sinusoidal texture with mild noise; a dense, busy test pattern.
pub fn texture(width: usize, height: usize, seed: u64) -> ImagePlanes {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fx: f64 = rng.gen_range(3.0..9.0);
    let fy: f64 = rng.gen_range(3.0..9.0);
    ImagePlanes::from_fn(width, height, |x, y, c| {
        let (x, y) = (x as f64, y as f64);
        let n: f64 = rng.gen::<f64>() - 0.5;
        0.5 + 0.3 * (x / fx + c as f64).sin() * (y / fy).cos() + 0.1 * ((x * y) / 300.0).sin() + 0.05 * n
    })
    .expect("non-empty image")
}

enum Region {
    Flat([f64; CHANNELS]),
    Noise { base: [f64; CHANNELS], amp: f64 },
    Stripes { base: [f64; CHANNELS], amp: f64, period: f64, angle: f64 },
    Blob { base: [f64; CHANNELS], amp: f64, cx: f64, cy: f64, radius: f64 },
}

struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
    region: Region,
}

/// A composite scene: a smooth gradient background with a handful of flat,
/// noisy, striped and soft-blob rectangles. Different seeds give different
/// mixes of easy and hard content.
pub fn composite(width: usize, height: usize, seed: u64) -> ImagePlanes {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg0: [f64; CHANNELS] = std::array::from_fn(|_| rng.gen_range(0.1..0.9));
    let bg1: [f64; CHANNELS] = std::array::from_fn(|_| rng.gen_range(0.1..0.9));
    let color = |rng: &mut ChaCha8Rng| -> [f64; CHANNELS] { std::array::from_fn(|_| rng.gen_range(0.15..0.85)) };
    let n_rects = rng.gen_range(2..6);
    let rects: Vec<Rect> = (0..n_rects)
        .map(|_| {
            let w = rng.gen_range(width / 6..=width / 2);
            let h = rng.gen_range(height / 6..=height / 2);
            let x0 = rng.gen_range(0..width - w);
            let y0 = rng.gen_range(0..height - h);
            let base = color(&mut rng);
            let region = match rng.gen_range(0..4) {
                0 => Region::Flat(base),
                1 => Region::Noise { base, amp: rng.gen_range(0.02..0.3) },
                2 => Region::Stripes {
                    base,
                    amp: rng.gen_range(0.05..0.15),
                    period: rng.gen_range(3.0..24.0),
                    angle: rng.gen_range(0.0..std::f64::consts::PI),
                },
                _ => Region::Blob {
                    base,
                    amp: rng.gen_range(0.1..0.15),
                    cx: (x0 + w / 2) as f64,
                    cy: (y0 + h / 2) as f64,
                    radius: (w.min(h) as f64) / 2.0,
                },
            };
            Rect { x0, y0, x1: x0 + w, y1: y0 + h, region }
        })
        .collect();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    ImagePlanes::from_fn(width, height, |x, y, c| {
        let n: f64 = noise_rng.gen::<f64>() - 0.5;
        let t = (x + y) as f64 / (width + height) as f64;
        let mut v = bg0[c] + (bg1[c] - bg0[c]) * t;
        for r in &rects {
            if x < r.x0 || x >= r.x1 || y < r.y0 || y >= r.y1 {
                continue;
            }
            let (fx, fy) = (x as f64, y as f64);
            v = match &r.region {
                Region::Flat(b) => b[c],
                Region::Noise { base, amp } => base[c] + 2.0 * amp * n,
                Region::Stripes { base, amp, period, angle } => {
                    let s = fx * angle.cos() + fy * angle.sin();
                    base[c] + amp * (2.0 * std::f64::consts::PI * s / period).sin()
                }
                Region::Blob { base, amp, cx, cy, radius } => {
                    let d2 = ((fx - cx).powi(2) + (fy - cy).powi(2)) / (radius * radius);
                    base[c] + amp * (-2.0 * d2).exp()
                }
            };
        }
        v
    })
    .expect("non-empty image")
}

/// `count` composites with seeds `seed, seed + 1, …`.
pub fn suite(count: usize, width: usize, height: usize, seed: u64) -> Vec<ImagePlanes> {
    (0..count as u64).map(|i| composite(width, height, seed + i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{generate_mask, VarianceThresholds};

    #[test]
    fn deterministic() {
        assert_eq!(composite(100, 90, 3), composite(100, 90, 3));
        assert_ne!(composite(100, 90, 3), composite(100, 90, 4));
    }

    #[test]
    fn suite_spans_levels() {
        let th = VarianceThresholds::default();
        let mut seen = [0usize; 3];
        for img in suite(20, 192, 192, 0) {
            let m = generate_mask(&img, &th);
            for l in 1..=3u8 {
                seen[l as usize - 1] += m.count_level(l);
            }
        }
        assert!(seen.iter().all(|&n| n > 0), "{seen:?}");
    }
}
