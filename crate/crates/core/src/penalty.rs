//! Order penalties for the KT estimator.
//!
//! Both penalties are cumulative sums over `i = 1..k-1`, so `pen(1) = 0` and
//! the increments grow with `k`; this is what lets the penalized criterion
//! stop overestimating without a finite bound on the order.

use serde::{Deserialize, Serialize};

/// Default slack added to the constant in every increment.
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub epsilon: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// `Σ_{i=1}^{k-1} [(T i(i+1) + i - 1)/2 + 1 + ε] ln n`.
pub fn pen_ml(k: usize, n: usize, layers: usize, epsilon: f64) -> f64 {
    let (ln_n, tf) = ((n as f64).ln(), layers as f64);
    (1..k)
        .map(|i| {
            let i = i as f64;
            ((tf * i * (i + 1.0) + i - 1.0) / 2.0 + 1.0 + epsilon) * ln_n
        })
        .fold(0.0, |acc, x| acc + x)
}

/// `Σ_{i=1}^{k-1} [ i/2 ln(n²T) + i(i-1)/2 ln(nT) + (T i(i-1)/2 + 1 + ε) ln n ]`.
pub fn pen_dyn(k: usize, n: usize, layers: usize, epsilon: f64) -> f64 {
    let (nf, tf) = (n as f64, layers as f64);
    let (ln_n, ln_nt, ln_n2t) = (nf.ln(), (nf * tf).ln(), (nf * nf * tf).ln());
    (1..k)
        .map(|i| {
            let i = i as f64;
            i / 2.0 * ln_n2t
                + i * (i - 1.0) / 2.0 * ln_nt
                + (tf * i * (i - 1.0) / 2.0 + 1.0 + epsilon) * ln_n
        })
        .fold(0.0, |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_free() {
        assert!(pen_ml(1, 100, 5, 0.01).to_bits() == 0.0f64.to_bits());
        assert!(pen_dyn(1, 100, 5, 0.01).to_bits() == 0.0f64.to_bits());
    }

    #[test]
    fn order_two_closed_form() {
        // i = 1: (2T + 0)/2 + 1 + ε = T + 1 + ε.
        let v = pen_ml(2, 100, 5, 0.01);
        assert!((v - 6.01 * 100f64.ln()).abs() < 1e-9);
        // i = 1: ½ ln(n²T) + (1 + ε) ln n.
        let d = pen_dyn(2, 50, 3, 0.0);
        assert!((d - (0.5 * (2500.0f64 * 3.0).ln() + 50f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn increments_grow() {
        for (n, t) in [(10, 1), (100, 5), (1000, 2)] {
            let mut prev_ml = 0.0;
            let mut prev_dyn = 0.0;
            for k in 2..12 {
                let ml = pen_ml(k, n, t, DEFAULT_EPSILON) - pen_ml(k - 1, n, t, DEFAULT_EPSILON);
                let dy = pen_dyn(k, n, t, DEFAULT_EPSILON) - pen_dyn(k - 1, n, t, DEFAULT_EPSILON);
                assert!(ml > prev_ml && dy > prev_dyn);
                prev_ml = ml;
                prev_dyn = dy;
            }
        }
    }
}
