//! Summation helpers shared by the codec and the variance criterion.

/// Sum in a balanced binary tree; exact for `2^k` equal values.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        4 => (values[0] + values[1]) + (values[2] + values[3]),
        8 => sum8(values),
        16 => sum8(&values[..8]) + sum8(&values[8..]),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[inline(always)]
fn sum8(v: &[f64]) -> f64 {
    ((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7]))
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_power_of_two_constants() {
        for k in 0..13 {
            let v = vec![0.1; 1 << k];
            assert_eq!(mean(&v), 0.1);
        }
    }
}
