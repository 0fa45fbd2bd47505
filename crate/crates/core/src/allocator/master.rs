use serde::{Deserialize, Serialize};

use super::instance::AllocError;
use crate::model::DeviceId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasterRule {
    /// Highest SoC per unit of power draw: the device least affected by the
    /// extra master work.
    #[default]
    LeastAffected,
    /// Lowest SoC per unit of power draw.
    LowestRatio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterCandidate {
    pub device_id: DeviceId,
    pub soc_percent: f64,
    pub avg_power_mw: f64,
}

fn ratio(c: &MasterCandidate) -> f64 {
    if c.avg_power_mw > 0.0 {
        c.soc_percent / c.avg_power_mw
    } else if c.soc_percent > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Elects the master among tier-1 candidates. Ties go to the smallest id.
pub fn select_master(
    candidates: &[MasterCandidate],
    rule: MasterRule,
) -> Result<DeviceId, AllocError> {
    let better = |a: &MasterCandidate, b: &MasterCandidate| {
        let (ra, rb) = (ratio(a), ratio(b));
        match rule {
            MasterRule::LeastAffected => ra > rb,
            MasterRule::LowestRatio => ra < rb,
        }
    };
    let mut best: Option<&MasterCandidate> = None;
    for c in candidates {
        best = match best {
            None => Some(c),
            Some(b) if better(c, b) || (ratio(c) == ratio(b) && c.device_id < b.device_id) => {
                Some(c)
            }
            keep => keep,
        };
    }
    best.map(|c| c.device_id).ok_or(AllocError::EmptyCandidates)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: DeviceId = 1;
    const B: DeviceId = 2;

    fn cand(device_id: DeviceId, soc: f64, power: f64) -> MasterCandidate {
        MasterCandidate {
            device_id,
            soc_percent: soc,
            avg_power_mw: power,
        }
    }

    #[test]
    fn higher_charge_wins_at_equal_usage() {
        let got = select_master(
            &[cand(A, 80.0, 2.0), cand(B, 40.0, 2.0)],
            MasterRule::default(),
        );
        assert_eq!(got, Ok(A));
    }

    #[test]
    fn lower_usage_wins_at_equal_charge() {
        let got = select_master(
            &[cand(A, 50.0, 10.0), cand(B, 50.0, 1.0)],
            MasterRule::default(),
        );
        assert_eq!(got, Ok(B));
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let got = select_master(
            &[cand(B, 40.0, 2.0), cand(A, 60.0, 3.0)],
            MasterRule::default(),
        );
        assert_eq!(got, Ok(A));
    }

    #[test]
    fn literal_rule_picks_lowest_ratio() {
        let got = select_master(
            &[cand(A, 80.0, 2.0), cand(B, 40.0, 2.0)],
            MasterRule::LowestRatio,
        );
        assert_eq!(got, Ok(B));
    }

    #[test]
    fn empty_candidates() {
        assert_eq!(
            select_master(&[], MasterRule::default()),
            Err(AllocError::EmptyCandidates)
        );
    }
}
