//! Orthonormal 8×8 DCT-II and its inverse.

use std::sync::OnceLock;

pub const N: usize = 8;
pub const COEFFS: usize = N * N;

/// `basis[u][x] = α(u)·cos((2x + 1)uπ / 16)`.
fn basis() -> &'static [[f64; N]; N] {
    static BASIS: OnceLock<[[f64; N]; N]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = [[0.0; N]; N];
        for (u, row) in b.iter_mut().enumerate() {
            let alpha = if u == 0 { (1.0 / N as f64).sqrt() } else { (2.0 / N as f64).sqrt() };
            for (x, v) in row.iter_mut().enumerate() {
                *v = alpha
                    * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / (2 * N) as f64).cos();
            }
        }
        b
    })
}

/// Zigzag scan: `ZIGZAG[i]` is the row-major index of the i-th scanned coefficient.
pub const ZIGZAG: [usize; COEFFS] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Frequency band of a row-major coefficient index: its anti-diagonal `u + v`.
pub const fn band_of(index: usize) -> usize {
    index / N + index % N
}

pub const BANDS: usize = 2 * N - 1;

/// Forward transform of a row-major block.
pub fn forward(block: &[f64; COEFFS]) -> [f64; COEFFS] {
    let b = basis();
    let mut tmp = [0.0; COEFFS];
    // rows: tmp[y][u] = Σx b[u][x]·block[y][x]
    for y in 0..N {
        for u in 0..N {
            let mut acc = 0.0;
            for x in 0..N {
                acc += b[u][x] * block[y * N + x];
            }
            tmp[y * N + u] = acc;
        }
    }
    let mut out = [0.0; COEFFS];
    for v in 0..N {
        for u in 0..N {
            let mut acc = 0.0;
            for y in 0..N {
                acc += b[v][y] * tmp[y * N + u];
            }
            out[v * N + u] = acc;
        }
    }
    out
}

/// Inverse transform; `coeffs[v * 8 + u]` holds vertical frequency `v`, horizontal `u`.
pub fn inverse(coeffs: &[f64; COEFFS]) -> [f64; COEFFS] {
    let b = basis();
    if coeffs[1..].iter().all(|&c| c == 0.0) {
        // same arithmetic as the general path with the zero terms dropped
        let mut out = [0.0; COEFFS];
        for y in 0..N {
            for x in 0..N {
                out[y * N + x] = 0.0 + b[0][y] * (0.0 + b[0][x] * coeffs[0]);
            }
        }
        return out;
    }
    let mut tmp = [0.0; COEFFS];
    for v in 0..N {
        for x in 0..N {
            let mut acc = 0.0;
            for u in 0..N {
                acc += b[u][x] * coeffs[v * N + u];
            }
            tmp[v * N + x] = acc;
        }
    }
    let mut out = [0.0; COEFFS];
    for y in 0..N {
        for x in 0..N {
            let mut acc = 0.0;
            for v in 0..N {
                acc += b[v][y] * tmp[v * N + x];
            }
            out[y * N + x] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct quadruple-sum DCT-II, independent of the separable path.
    fn naive_forward(block: &[f64; COEFFS]) -> [f64; COEFFS] {
        let a = |k: usize| if k == 0 { (0.125f64).sqrt() } else { 0.5 };
        let mut out = [0.0; COEFFS];
        for v in 0..N {
            for u in 0..N {
                let mut acc = 0.0;
                for y in 0..N {
                    for x in 0..N {
                        acc += block[y * N + x]
                            * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos()
                            * ((2 * y + 1) as f64 * v as f64 * std::f64::consts::PI / 16.0).cos();
                    }
                }
                out[v * N + u] = a(u) * a(v) * acc;
            }
        }
        out
    }

    fn test_block() -> [f64; COEFFS] {
        std::array::from_fn(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.3)
    }

    #[test]
    fn matches_naive_definition() {
        let block = test_block();
        let fast = forward(&block);
        let slow = naive_forward(&block);
        for i in 0..COEFFS {
            assert!((fast[i] - slow[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let block = test_block();
        let back = inverse(&forward(&block));
        for i in 0..COEFFS {
            assert!((back[i] - block[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn energy_preserved() {
        let block = test_block();
        let e1: f64 = block.iter().map(|v| v * v).sum();
        let e2: f64 = forward(&block).iter().map(|v| v * v).sum();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn constant_block_is_dc_only() {
        let block = [0.25; COEFFS];
        let c = forward(&block);
        assert!((c[0] - 2.0).abs() < 1e-14);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn zigzag_is_permutation_with_nondecreasing_bands() {
        let mut seen = [false; COEFFS];
        for w in ZIGZAG.windows(2) {
            assert!(band_of(w[0]) <= band_of(w[1]));
        }
        for &i in &ZIGZAG {
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
