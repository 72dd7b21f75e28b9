//! Order-stable accumulation helpers for Monte-Carlo aggregation.

/// Kahan-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sample mean and 95% normal-approximation confidence halfwidth.
pub fn mean_ci95(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mut s = KahanSum::default();
    for &x in samples {
        s.add(x);
    }
    let mean = s.value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut q = KahanSum::default();
    for &x in samples {
        let d = x - mean;
        q.add(d * d);
    }
    let var = q.value() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}
