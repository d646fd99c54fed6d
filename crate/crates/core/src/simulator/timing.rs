use serde::{Deserialize, Serialize};

use crate::random::gaussian;

pub const TIMING_SCHEMA_VERSION: u32 = 1;

/// Workflow sub-process a timed event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subprocess {
    Traversal,
    UserWait,
    Adhesive,
    DataCollection,
    Scanning,
}

impl Subprocess {
    pub const ALL: [Subprocess; 5] = [
        Subprocess::Traversal,
        Subprocess::UserWait,
        Subprocess::Adhesive,
        Subprocess::DataCollection,
        Subprocess::Scanning,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subprocess::Traversal => "traversal",
            Subprocess::UserWait => "user_wait",
            Subprocess::Adhesive => "adhesive",
            Subprocess::DataCollection => "data_collection",
            Subprocess::Scanning => "scanning",
        }
    }
}

/// Mean per-brick durations (s) of each sub-process. The defaults split a
/// 123.1 s cycle as 42.6 / 20.3 / 15.9 / 14.2 / 7.0 %.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub schema_version: u32,
    pub traversal: f64,
    pub user_wait: f64,
    pub adhesive: f64,
    pub data_collection: f64,
    pub scanning: f64,
    /// Relative standard deviation of each sampled duration.
    pub jitter: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            schema_version: TIMING_SCHEMA_VERSION,
            traversal: 52.44,
            user_wait: 24.99,
            adhesive: 19.57,
            data_collection: 17.48,
            scanning: 8.62,
            jitter: 0.0,
        }
    }
}

impl TimingModel {
    pub fn mean(&self, p: Subprocess) -> f64 {
        match p {
            Subprocess::Traversal => self.traversal,
            Subprocess::UserWait => self.user_wait,
            Subprocess::Adhesive => self.adhesive,
            Subprocess::DataCollection => self.data_collection,
            Subprocess::Scanning => self.scanning,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != TIMING_SCHEMA_VERSION {
            return Err(format!(
                "unsupported timing schema_version {}",
                self.schema_version
            ));
        }
        if Subprocess::ALL.iter().any(|p| !(self.mean(*p) >= 0.0)) || !(self.jitter >= 0.0) {
            return Err("timing durations and jitter must be non-negative".into());
        }
        Ok(())
    }

    /// One duration draw. Human-driven steps (waiting, adhesive) are
    /// log-normal with the configured mean; machine steps are normal,
    /// clamped at zero. Zero jitter returns the mean exactly.
    pub fn sample<R: rand::Rng + ?Sized>(&self, p: Subprocess, rng: &mut R) -> f64 {
        let mean = self.mean(p);
        if self.jitter <= 0.0 || mean <= 0.0 {
            return mean;
        }
        match p {
            Subprocess::UserWait | Subprocess::Adhesive => {
                let s2 = (1.0 + self.jitter * self.jitter).ln();
                let mu = mean.ln() - 0.5 * s2;
                (mu + gaussian(rng, s2.sqrt())).exp()
            }
            _ => (mean + gaussian(rng, self.jitter * mean)).max(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_sum_to_cycle_time() {
        let t = TimingModel::default();
        let total: f64 = Subprocess::ALL.iter().map(|p| t.mean(*p)).sum();
        assert!((total - 123.1).abs() < 1e-9);
    }

    #[test]
    fn lognormal_mean_matches() {
        let t = TimingModel {
            jitter: 0.4,
            ..Default::default()
        };
        let mut rng = crate::random::stream(9, 0);
        let n = 200_000;
        let mean = (0..n)
            .map(|_| t.sample(Subprocess::UserWait, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 24.99).abs() < 0.2, "{mean}");
    }
}
