use serde::{Deserialize, Serialize};

use crate::coordination::CoordinationFacts;

use super::solve::QREPoint;

/// Slack on the region boundaries.
const EDGE: f64 = 1e-12;

/// Where a 2x2 equilibrium sits relative to the mixed equilibrium, in the
/// labeling where `x_mix + y_mix > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Beyond the mixed equilibrium towards `(a1, a1)`.
    UpperRight,
    /// The band between one half and the mixed equilibrium, only possible
    /// when the players' interests are misaligned.
    Middle,
    /// Towards `(a2, a2)`.
    LowerLeft,
    /// No equilibrium can sit here.
    Excluded,
    /// Not a coordination game, or neither pure equilibrium risk-dominates.
    NoPrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCheck {
    pub region: Region,
    pub allowed: bool,
    /// Actions were renamed `a1 <-> a2` before classifying.
    pub relabeled: bool,
}

pub fn region_check(facts: &CoordinationFacts, point: &QREPoint) -> RegionCheck {
    let p = point.profile.first_action_probs();
    region_check_xy(facts, p[0], p[1])
}

/// Classifies `(x, y)` (probabilities of `a1`) into the admissible regions
/// for logit equilibria.
pub fn region_check_xy(facts: &CoordinationFacts, x: f64, y: f64) -> RegionCheck {
    let sum = facts.x_mix + facts.y_mix;
    if !facts.is_coordination || !sum.is_finite() || sum == 1.0 {
        return RegionCheck {
            region: Region::NoPrediction,
            allowed: true,
            relabeled: false,
        };
    }
    let relabeled = sum < 1.0;
    let (x, y, xm, ym) = if relabeled {
        (1.0 - x, 1.0 - y, 1.0 - facts.x_mix, 1.0 - facts.y_mix)
    } else {
        (x, y, facts.x_mix, facts.y_mix)
    };
    let upper_right = x > xm - EDGE && y > ym - EDGE;
    let region = if xm > 0.5 && ym > 0.5 {
        if upper_right {
            Region::UpperRight
        } else if x < 0.5 + EDGE && y < 0.5 + EDGE {
            Region::LowerLeft
        } else {
            Region::Excluded
        }
    } else if xm > 0.5 {
        banded(x, y, xm, ym, upper_right)
    } else {
        // mirror image of the case above
        banded(y, x, ym, xm, upper_right)
    };
    RegionCheck {
        region,
        allowed: region != Region::Excluded,
        relabeled,
    }
}

/// Regions when `a > 1/2 >= b` for the mixed probabilities `(a, b)` of the
/// coordinates `(p, q)`.
fn banded(p: f64, q: f64, a: f64, b: f64, upper_right: bool) -> Region {
    if upper_right {
        Region::UpperRight
    } else if p < 0.5 + EDGE && q < b + EDGE {
        Region::LowerLeft
    } else if p > 0.5 - EDGE && p < a + EDGE && q > b - EDGE && q < 0.5 + EDGE {
        Region::Middle
    } else {
        Region::Excluded
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::coordination::classify_coordination;

    #[test]
    fn stag_hunt_regions() {
        let f = classify_coordination(&builtins::stag_hunt()).unwrap();
        let c = region_check_xy(&f, 0.3, 0.3);
        assert_eq!((c.region, c.allowed), (Region::LowerLeft, true));
        let c = region_check_xy(&f, 0.55, 0.55);
        assert_eq!((c.region, c.allowed), (Region::Excluded, false));
        assert_eq!(region_check_xy(&f, 0.8, 0.9).region, Region::UpperRight);
    }

    #[test]
    fn battle_of_sexes_middle_band() {
        let f = classify_coordination(&builtins::battle_of_sexes()).unwrap();
        let c = region_check_xy(&f, 0.6, 0.45);
        assert_eq!((c.region, c.allowed), (Region::Middle, true));
        assert_eq!(region_check_xy(&f, 0.3, 0.35).region, Region::LowerLeft);
        assert!(!region_check_xy(&f, 0.3, 0.45).allowed);
        assert!(!region_check_xy(&f, 0.6, 0.7).allowed);
    }

    #[test]
    fn gain_game_is_relabeled() {
        let f = classify_coordination(&builtins::catastrophe_game(10.0, builtins::Catastrophe::Gain).unwrap())
            .unwrap();
        let c = region_check_xy(&f, 0.9, 0.9);
        assert!(c.relabeled);
        assert_eq!(c.region, Region::LowerLeft);
        assert!(!region_check_xy(&f, 0.4, 0.4).allowed);
    }

    #[test]
    fn non_coordination_makes_no_prediction() {
        let f = classify_coordination(&builtins::matching_pennies()).unwrap();
        assert_eq!(region_check_xy(&f, 0.5, 0.5).region, Region::NoPrediction);
    }
}
