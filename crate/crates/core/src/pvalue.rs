use serde::{Deserialize, Serialize};

/// A p-value together with the Monte Carlo resolution it was estimated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub value: f64,
    pub mc_samples: usize,
}

impl PValue {
    /// Panics if `value` is outside `[0, 1]` or `mc_samples` is zero.
    pub fn new(value: f64, mc_samples: usize) -> Self {
        assert!((0.0..=1.0).contains(&value), "p-value {value} outside [0, 1]");
        assert!(mc_samples > 0, "mc_samples must be positive");
        Self { value, mc_samples }
    }

    /// `count / total`, the usual Monte Carlo exceedance fraction.
    pub fn from_count(count: usize, total: usize) -> Self {
        assert!(count <= total);
        Self::new(count as f64 / total as f64, total)
    }

    pub fn two_sided(self) -> Self {
        two_sided(self)
    }
}

/// `2 min(p, 1 - p)`.
pub fn two_sided(p: PValue) -> PValue {
    let v = 2.0 * p.value.min(1.0 - p.value);
    PValue { value: v.clamp(0.0, 1.0), mc_samples: p.mc_samples }
}
