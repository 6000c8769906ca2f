//! Arm identifiers, per-arm reward statistics and the ground-truth CTR vector.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero-based index of an arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl ArmId {
    pub fn index(self) -> usize {
        self.0
    }

    /// Checked constructor against an arm count.
    pub fn checked(index: usize, arms: usize) -> Result<Self> {
        if index < arms {
            Ok(ArmId(index))
        } else {
            Err(Error::ArmOutOfRange { arm: index, arms })
        }
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Pull count and reward sum for one arm.
///
/// `pulls` counts selections of the arm, not clicks; the empirical mean
/// divides the click count by it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmStats {
    pulls: u64,
    reward_sum: u64,
}

impl ArmStats {
    pub fn new(pulls: u64, reward_sum: u64) -> Result<Self> {
        if reward_sum > pulls {
            return Err(Error::param(format!(
                "reward_sum {reward_sum} exceeds pulls {pulls}"
            )));
        }
        Ok(Self { pulls, reward_sum })
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn reward_sum(&self) -> u64 {
        self.reward_sum
    }

    /// Empirical mean, `None` while the arm is unexplored.
    pub fn mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.reward_sum as f64 / self.pulls as f64)
    }

    pub fn is_explored(&self) -> bool {
        self.pulls > 0
    }

    pub(crate) fn record(&mut self, reward: bool) {
        self.pulls += 1;
        self.reward_sum += u64::from(reward);
    }
}

/// True per-arm click-through rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    ctr: Vec<f64>,
    best_arm: ArmId,
}

impl GroundTruth {
    pub fn new(ctr: Vec<f64>) -> Result<Self> {
        if ctr.is_empty() {
            return Err(Error::Empty("ground-truth CTR vector"));
        }
        if let Some(bad) = ctr.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::param(format!("CTR {bad} outside [0, 1]")));
        }
        let mut best = 0;
        for (k, &c) in ctr.iter().enumerate() {
            if c > ctr[best] {
                best = k;
            }
        }
        Ok(Self {
            ctr,
            best_arm: ArmId(best),
        })
    }

    /// Per-arm click frequency over a log, the maximum-likelihood stand-in
    /// for unobservable true CTRs. Arms never shown get 0.
    pub fn empirical(
        arms: usize,
        events: impl IntoIterator<Item = (ArmId, bool)>,
    ) -> Result<Self> {
        let mut stats = vec![ArmStats::default(); arms];
        for (arm, reward) in events {
            let slot = stats
                .get_mut(arm.0)
                .ok_or(Error::ArmOutOfRange { arm: arm.0, arms })?;
            slot.record(reward);
        }
        Self::new(stats.iter().map(|s| s.mean().unwrap_or(0.0)).collect())
    }

    pub fn arms(&self) -> usize {
        self.ctr.len()
    }

    pub fn ctr(&self) -> &[f64] {
        &self.ctr
    }

    pub fn ctr_of(&self, arm: ArmId) -> f64 {
        self.ctr[arm.0]
    }

    pub fn best_ctr(&self) -> f64 {
        self.ctr[self.best_arm.0]
    }

    pub fn best_arm(&self) -> ArmId {
        self.best_arm
    }

    /// Mean CTR over arms, i.e. the value of uniform allocation.
    pub fn mean_ctr(&self) -> f64 {
        self.ctr.iter().sum::<f64>() / self.ctr.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_tracks_updates() {
        let mut s = ArmStats::new(5, 1).unwrap();
        s.record(false);
        assert_eq!((s.pulls(), s.reward_sum()), (6, 1));
        assert_eq!(s.mean(), Some(1.0 / 6.0));

        let mut all = ArmStats::default();
        assert_eq!(all.mean(), None);
        for _ in 0..17 {
            all.record(true);
        }
        assert_eq!(all.mean(), Some(1.0));
    }

    #[test]
    fn rejects_more_rewards_than_pulls() {
        assert!(ArmStats::new(2, 3).is_err());
    }

    #[test]
    fn best_arm_breaks_ties_low() {
        let gt = GroundTruth::new(vec![0.1, 0.3, 0.2]).unwrap();
        assert_eq!(gt.best_arm(), ArmId(1));
        assert_eq!(gt.best_ctr(), 0.3);

        let tied = GroundTruth::new(vec![0.2, 0.5, 0.5]).unwrap();
        assert_eq!(tied.best_arm(), ArmId(1));
    }

    #[test]
    fn ground_truth_validation() {
        assert!(GroundTruth::new(vec![]).is_err());
        assert!(GroundTruth::new(vec![0.1, 1.2]).is_err());
        assert!(GroundTruth::new(vec![f64::NAN, 0.1]).is_err());
    }

    #[test]
    fn empirical_ctr_from_events() {
        let events = [
            (ArmId(0), true),
            (ArmId(0), false),
            (ArmId(1), false),
            (ArmId(1), false),
        ];
        let gt = GroundTruth::empirical(3, events).unwrap();
        assert_eq!(gt.ctr(), &[0.5, 0.0, 0.0]);
        assert_eq!(gt.best_arm(), ArmId(0));
        assert!(GroundTruth::empirical(1, [(ArmId(2), true)]).is_err());
    }
}
