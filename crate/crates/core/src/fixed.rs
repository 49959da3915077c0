//! Order-independent summation on a shared fixed-point grid.
//!
//! Every term is rounded once onto the grid `2^-shift`, then summed as `i128`.
//! Integer addition is associative, so a sum depends only on the multiset of
//! terms. The grid is chosen from the largest magnitude and the number of terms
//! so that no partial sum can overflow; relative to the largest term the
//! quantisation error is below `2^-90` for any practical term count.

/// Fixed-point grid shared by a family of sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedGrid {
    up: f64,
    down: f64,
}

const HEADROOM_BITS: i32 = 125;
const MAX_SHIFT: i32 = 1000;

impl FixedGrid {
    /// Grid for up to `max_terms` terms, each bounded by `max_abs` in magnitude.
    pub fn new(max_abs: f64, max_terms: u64) -> Self {
        assert!(max_abs.is_finite(), "fixed-point grid needs finite terms");
        if max_abs == 0.0 {
            return FixedGrid { up: 1.0, down: 1.0 };
        }
        // max_abs < 2^exp
        let exp = max_abs.log2().floor() as i32 + 1;
        let count_bits = 64 - max_terms.max(1).leading_zeros() as i32;
        let shift = (HEADROOM_BITS - count_bits - exp).min(MAX_SHIFT);
        FixedGrid { up: pow2(shift), down: pow2(-shift) }
    }

    #[inline]
    pub fn quantize(&self, x: f64) -> i128 {
        (x * self.up).round() as i128
    }

    #[inline]
    pub fn to_f64(&self, q: i128) -> f64 {
        (q as f64) * self.down
    }

    /// Sum of `values` on this grid.
    pub fn sum(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        self.to_f64(values.into_iter().map(|v| self.quantize(v)).sum())
    }
}

fn pow2(e: i32) -> f64 {
    // two steps keep every intermediate inside the normal range
    let half = e / 2;
    2f64.powi(half) * 2f64.powi(e - half)
}

/// Order-independent sum of a slice.
pub fn exact_sum(values: &[f64]) -> f64 {
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    FixedGrid::new(max_abs, values.len() as u64).sum(values.iter().copied())
}
