//! Box downsampling and bilinear upsampling of square unit rasters.

use crate::numeric::mean;

/// Averages `factor×factor` cells of the `size×size` square at `(x0, y0)` of a
/// row-major plane with the given stride. Returns a `(size/factor)²` raster.
pub fn box_downsample(
    plane: &[f64],
    stride: usize,
    x0: usize,
    y0: usize,
    size: usize,
    factor: usize,
) -> Vec<f64> {
    let n = size / factor;
    if factor == 1 {
        return (y0..y0 + size)
            .flat_map(|y| &plane[y * stride + x0..y * stride + x0 + size])
            .copied()
            .collect();
    }
    let mut out = Vec::with_capacity(n * n);
    let mut cell = Vec::with_capacity(factor * factor);
    for j in 0..n {
        for i in 0..n {
            cell.clear();
            for dy in 0..factor {
                let row = (y0 + j * factor + dy) * stride + x0 + i * factor;
                cell.extend_from_slice(&plane[row..row + factor]);
            }
            out.push(mean(&cell));
        }
    }
    out
}

/// Bilinear interpolation of an `n×n` raster to `(n·factor)²`, with sample
/// centers aligned and edges clamped.
pub fn bilinear_upsample(src: &[f64], n: usize, factor: usize) -> Vec<f64> {
    if factor == 1 {
        return src.to_vec();
    }
    let m = n * factor;
    let taps: Vec<(usize, usize, f64)> = (0..m)
        .map(|i| {
            let s = ((i as f64 + 0.5) / factor as f64 - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect();
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let mut rows = vec![0.0; n * m];
    for y in 0..n {
        for (x, &(i0, i1, t)) in taps.iter().enumerate() {
            rows[y * m + x] = lerp(src[y * n + i0], src[y * n + i1], t);
        }
    }
    let mut out = vec![0.0; m * m];
    for (y, &(j0, j1, t)) in taps.iter().enumerate() {
        for x in 0..m {
            out[y * m + x] = lerp(rows[j0 * m + x], rows[j1 * m + x], t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downsample_averages_cells() {
        let plane: Vec<f64> = (0..16).map(f64::from).collect();
        assert_eq!(box_downsample(&plane, 4, 0, 0, 4, 2), vec![2.5, 4.5, 10.5, 12.5]);
        assert_eq!(box_downsample(&plane, 4, 2, 2, 2, 1), vec![10.0, 11.0, 14.0, 15.0]);
    }

    #[test]
    fn upsample_constant_is_exact() {
        let src = vec![0.3; 16];
        assert!(bilinear_upsample(&src, 4, 4).iter().all(|&v| v == 0.3));
    }

    #[test]
    fn upsample_linear_ramp_interior() {
        let n = 4;
        let src: Vec<f64> = (0..n * n).map(|i| (i % n) as f64).collect();
        let up = bilinear_upsample(&src, n, 2);
        // output x=3 sits at source coordinate 1.25
        assert!((up[3] - 1.25).abs() < 1e-15);
        assert_eq!(up[0], 0.0);
        assert_eq!(up[7], 3.0);
    }
}
