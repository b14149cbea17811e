use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};

/// Two-sided Clopper–Pearson interval for `k` successes out of `m`.
pub fn clopper_pearson(k: usize, m: usize, confidence: f64) -> (f64, f64) {
    assert!(m > 0 && k <= m);
    let tail = 0.5 * (1.0 - confidence);
    let lo = if k == 0 {
        0.0
    } else {
        beta_quantile(k as f64, (m - k + 1) as f64, tail)
    };
    let hi = if k == m {
        1.0
    } else {
        beta_quantile((k + 1) as f64, (m - k) as f64, 1.0 - tail)
    };
    (lo, hi)
}

fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    Beta::new(a, b)
        .expect("positive shape parameters")
        .inverse_cdf(p)
}

/// Two-sided standard normal critical value.
pub fn normal_critical(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + 0.5 * confidence)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSummary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanSummary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut count = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for v in values {
            count += 1;
            let d = v - mean;
            mean += d / count as f64;
            m2 += d * (v - mean);
        }
        let var = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
        Self {
            mean,
            stderr: (var / count.max(1) as f64).sqrt(),
            count,
        }
    }

    pub fn half_width(&self, confidence: f64) -> f64 {
        normal_critical(confidence) * self.stderr
    }
}
