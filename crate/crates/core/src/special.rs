//! Log-space special functions for the conjugate Dirichlet and Beta
//! integrals, and a streaming log-sum-exp.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// `ln Γ(1/2) = ln √π`.
pub const LN_GAMMA_HALF: f64 = 0.572_364_942_924_700_1;

/// `ln B(1/2, 1/2) = ln π`.
pub const LN_BETA_HALF_HALF: f64 = 1.144_729_885_849_400_2;

/// Table of `ln Γ(m / 2)` for `m = 1..=max_twice`.
///
/// Every Gamma argument in the Krichevsky–Trofimov integrals is a positive
/// multiple of one half, so exact enumeration looks them up instead of
/// calling the series.
#[derive(Clone, Debug)]
pub struct HalfLnGamma {
    table: Vec<f64>,
}

impl HalfLnGamma {
    pub fn new(max_twice: usize) -> Self {
        let mut table = Vec::with_capacity(max_twice + 1);
        table.push(f64::INFINITY);
        for m in 1..=max_twice {
            table.push(ln_gamma(m as f64 / 2.0));
        }
        Self { table }
    }

    /// Table large enough for collections with `n` nodes, `layers` layers
    /// and up to `k` communities.
    pub fn for_problem(n: usize, layers: usize, k: usize) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        let max_arg = (pairs * layers + 1).max(n * layers + k) + 2;
        Self::new(2 * max_arg)
    }

    /// `ln Γ(twice / 2)`.
    #[inline]
    pub fn get(&self, twice: u64) -> f64 {
        self.table[twice as usize]
    }

    /// `ln [B(o + 1/2, m - o + 1/2) / B(1/2, 1/2)]`.
    #[inline]
    pub fn ln_beta_ratio(&self, ones: u64, trials: u64) -> f64 {
        if trials == 0 {
            return 0.0;
        }
        self.get(2 * ones + 1) + self.get(2 * (trials - ones) + 1)
            - self.get(2 * trials + 2)
            - LN_BETA_HALF_HALF
    }

    /// Log of the Dirichlet(1/2, ..., 1/2)–multinomial mass of one sequence
    /// with the given category counts.
    #[inline]
    pub fn ln_dirichlet_multinomial(&self, counts: impl IntoIterator<Item = u64>, k: usize) -> f64 {
        let mut total = 0u64;
        let mut acc = 0.0;
        for c in counts {
            total += c;
            acc += self.get(2 * c + 1) - LN_GAMMA_HALF;
        }
        acc + self.get(k as u64) - self.get(2 * total + k as u64)
    }
}

/// `ln [B(o + 1/2, m - o + 1/2) / B(1/2, 1/2)]` for real arguments.
pub fn ln_beta_ratio(ones: f64, trials: f64) -> f64 {
    ln_gamma(ones + 0.5) + ln_gamma(trials - ones + 0.5) - ln_gamma(trials + 1.0) - LN_BETA_HALF_HALF
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `x ln x` with the convention `0 ln 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `c ln(c / total)` with `0 ln 0 = 0`.
#[inline]
pub fn xlog_ratio(count: f64, total: f64) -> f64 {
    if count > 0.0 {
        count * (count / total).ln()
    } else {
        0.0
    }
}

/// Running `ln Σ exp(x_i)` with a moving maximum; never overflows.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        } else {
            self.scaled += other.scaled * (other.max - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogSumExp::new();
    for x in xs {
        acc.push(x);
    }
    acc.value()
}
