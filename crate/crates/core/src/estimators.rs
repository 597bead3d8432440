//! Per-arm sample store and the robust mean estimators computed from it.

use crate::error::{arg, state, Result};
use crate::order_tree::RankTree;

/// Which statistic a policy uses as its per-arm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// Mean after discarding `floor(alpha * n)` samples from each end.
    TrimmedMean {
        alpha: f64,
    },
    Median,
}

impl Estimator {
    pub fn validate(self) -> Result<Self> {
        match self {
            Self::TrimmedMean { alpha } if !(0.0..0.5).contains(&alpha) => {
                arg(format!("trim fraction must lie in [0, 0.5), got {alpha}"))
            }
            other => Ok(other),
        }
    }

    pub fn estimate(&self, stats: &ArmStatistics) -> Result<f64> {
        match *self {
            Self::TrimmedMean { alpha } => stats.trimmed_mean(alpha),
            Self::Median => stats.empirical_median(),
        }
    }
}

/// Rewards observed on one arm, kept in sorted order.
#[derive(Debug, Clone, Default)]
pub struct ArmStatistics {
    samples: RankTree,
}

/// Number of samples removed from each end for trim fraction `alpha`.
pub fn trim_count(alpha: f64, n: usize) -> usize {
    if n == 0 || alpha <= 0.0 {
        return 0;
    }
    let x = alpha * n as f64;
    // Absorb rounding in products such as 0.29 * 100 = 28.999999999999996.
    let k = (x + 1e-9 * x.max(1.0)).floor() as usize;
    k.min((n - 1) / 2)
}

impl ArmStatistics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            samples: RankTree::with_capacity(capacity),
        }
    }

    /// Number of pulls, `N_i(t)`.
    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn insert(&mut self, reward: f64) -> Result<()> {
        if !reward.is_finite() {
            return arg(format!("reward must be finite, got {reward}"));
        }
        self.samples.insert(reward);
        Ok(())
    }

    /// Order statistic of rank `k` (0-based).
    pub fn order_statistic(&self, k: usize) -> Option<f64> {
        self.samples.select(k)
    }

    /// Sum of the `k` smallest samples.
    pub fn prefix_sum(&self, k: usize) -> f64 {
        self.samples.prefix_sum(k)
    }

    pub fn sorted(&self) -> Vec<f64> {
        self.samples.to_sorted_vec()
    }

    pub fn mean(&self) -> Result<f64> {
        self.trimmed_mean(0.0)
    }

    /// Alpha-trimmed mean: drops `k = floor(alpha * n)` samples at each end
    /// and averages the `n - 2k` that remain.
    pub fn trimmed_mean(&self, alpha: f64) -> Result<f64> {
        if !(0.0..0.5).contains(&alpha) {
            return arg(format!("trim fraction must lie in [0, 0.5), got {alpha}"));
        }
        let n = self.count();
        if n == 0 {
            return state("trimmed mean of an arm with no samples");
        }
        let k = trim_count(alpha, n);
        let kept = n - 2 * k;
        Ok(self.samples.range_sum(k, n - k) / kept as f64)
    }

    /// Middle order statistic, or the midpoint of the two central ones.
    pub fn empirical_median(&self) -> Result<f64> {
        let n = self.count();
        if n == 0 {
            return state("median of an arm with no samples");
        }
        let hi = self.samples.select(n / 2).unwrap();
        if n % 2 == 1 {
            Ok(hi)
        } else {
            let lo = self.samples.select(n / 2 - 1).unwrap();
            Ok(lo + 0.5 * (hi - lo))
        }
    }
}
