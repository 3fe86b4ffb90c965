//! Log-domain vector helpers and distances between normalized messages.
//!
//! All messages are stored as log-probabilities. `old` and `new` below are
//! two versions of the same message; the error `e(x) = new(x) / old(x)` is
//! handled as the difference of logs.

/// `log(sum(exp(v)))`, computed stably. Returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Shifts `values` so that `log_sum_exp(values) == 0`.
pub fn normalize_log(values: &mut [f64]) {
    let z = log_sum_exp(values);
    for v in values.iter_mut() {
        *v -= z;
    }
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    #[inline]
    pub fn add(&mut self, v: f64) {
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Largest absolute log-ratio, `max_x |log new(x) - log old(x)|`.
///
/// This is the sup-norm distance between log vectors and is a metric.
pub fn residual(old: &[f64], new: &[f64]) -> f64 {
    debug_assert_eq!(old.len(), new.len());
    old.iter().zip(new).map(|(o, n)| (n - o).abs()).fold(0.0, f64::max)
}

/// Spread of the log-ratio across states, `max_x l(x) - min_x l(x)` with
/// `l = log new - log old`.
pub fn dynamic_range(old: &[f64], new: &[f64]) -> f64 {
    debug_assert_eq!(old.len(), new.len());
    let (lo, hi) = old
        .iter()
        .zip(new)
        .map(|(o, n)| n - o)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    if lo > hi {
        0.0
    } else {
        hi - lo
    }
}

/// `KL(p || q)` for log-domain distributions.
pub fn message_kl(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let kl: f64 = p
        .iter()
        .zip(q)
        .map(|(&lp, &lq)| {
            let w = lp.exp();
            if w == 0.0 {
                0.0
            } else {
                w * (lp - lq)
            }
        })
        .sum();
    // rounding can leave a tiny negative value for identical inputs
    kl.max(0.0)
}

/// The three distances between two versions of one message.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorMetrics {
    pub residual: f64,
    pub dynamic_range: f64,
    pub kl: f64,
}

impl ErrorMetrics {
    /// Metrics of the change from `older` to `newer`; KL is `KL(older || newer)`.
    pub fn between(older: &[f64], newer: &[f64]) -> Self {
        ErrorMetrics {
            residual: residual(older, newer),
            dynamic_range: dynamic_range(older, newer),
            kl: message_kl(older, newer),
        }
    }
}

/// Log of a probability vector, normalized.
pub fn log_normalized(probabilities: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = probabilities.iter().map(|p| p.ln()).collect();
    normalize_log(&mut v);
    v
}
