use serde::{Deserialize, Serialize};

/// Monte Carlo error count with a 95% binomial interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub errors: u64,
    pub trials: u64,
    pub p_hat: f64,
    /// Half-width of the 95% Wilson score interval.
    pub ci95: f64,
}

impl BerEstimate {
    pub fn new(errors: u64, trials: u64) -> Self {
        assert!(errors <= trials, "errors exceed trials");
        if trials == 0 {
            return Self {
                errors,
                trials,
                p_hat: 0.0,
                ci95: 0.5,
            };
        }
        let n = trials as f64;
        let p = errors as f64 / n;
        let z = 1.959_963_984_540_054_f64;
        let denom = 1.0 + z * z / n;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        Self {
            errors,
            trials,
            p_hat: p,
            ci95: half,
        }
    }

    /// Binomial standard deviation of the rate under a hypothesised `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Distance from `p` in units of [`sigma_at`](Self::sigma_at).
    pub fn z_score(&self, p: f64) -> f64 {
        let s = self.sigma_at(p);
        if s == 0.0 {
            if self.p_hat == p {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.p_hat - p) / s
        }
    }

    pub(crate) fn merge(a: (u64, u64), b: (u64, u64)) -> (u64, u64) {
        (a.0 + b.0, a.1 + b.1)
    }
}
