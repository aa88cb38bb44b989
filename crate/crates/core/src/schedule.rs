//! Exploration schedules `delta(t)`.
//!
//! The adaptation rate `beta` is held fixed and the exploration rate moves
//! through `alpha = delta * beta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    #[default]
    Linear,
    Quadratic,
}

impl RampShape {
    fn apply(self, fraction: f64) -> f64 {
        match self {
            RampShape::Linear => fraction,
            RampShape::Quadratic => fraction * fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant {
        delta: f64,
    },
    /// Explore then exploit: decays from `delta_max` to zero at `t_end`.
    Ete {
        delta_max: f64,
        t_end: f64,
        #[serde(default)]
        shape: RampShape,
    },
    /// One exploration cycle: rises from `delta_low` to `delta_peak` at
    /// `t_peak`, then decays to zero at `t_end`.
    Clr1 {
        delta_low: f64,
        delta_peak: f64,
        t_peak: f64,
        t_end: f64,
        #[serde(default)]
        shape: RampShape,
    },
    /// Linear interpolation through `(t, delta)` knots; the last value is
    /// held afterwards.
    Piecewise {
        points: Vec<(f64, f64)>,
    },
}

fn default_beta() -> f64 {
    1.0
}

/// Rates of one agent at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSchedule {
    #[serde(flatten)]
    kind: ScheduleKind,
    #[serde(default = "default_beta")]
    beta: f64,
}

impl ExplorationSchedule {
    pub fn new(kind: ScheduleKind, beta: f64) -> Result<Self> {
        let s = Self { kind, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(delta: f64, beta: f64) -> Result<Self> {
        Self::new(ScheduleKind::Constant { delta }, beta)
    }

    pub fn ete(delta_max: f64, t_end: f64, shape: RampShape, beta: f64) -> Result<Self> {
        Self::new(ScheduleKind::Ete { delta_max, t_end, shape }, beta)
    }

    pub fn clr1(
        delta_low: f64,
        delta_peak: f64,
        t_peak: f64,
        t_end: f64,
        shape: RampShape,
        beta: f64,
    ) -> Result<Self> {
        Self::new(
            ScheduleKind::Clr1 {
                delta_low,
                delta_peak,
                t_peak,
                t_end,
                shape,
            },
            beta,
        )
    }

    pub fn piecewise(points: Vec<(f64, f64)>, beta: f64) -> Result<Self> {
        Self::new(ScheduleKind::Piecewise { points }, beta)
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Same `delta(t)` profile with all times multiplied by `factor`.
    pub fn stretched(&self, factor: f64) -> Result<Self> {
        let kind = match &self.kind {
            ScheduleKind::Constant { delta } => ScheduleKind::Constant { delta: *delta },
            ScheduleKind::Ete { delta_max, t_end, shape } => ScheduleKind::Ete {
                delta_max: *delta_max,
                t_end: t_end * factor,
                shape: *shape,
            },
            ScheduleKind::Clr1 {
                delta_low,
                delta_peak,
                t_peak,
                t_end,
                shape,
            } => ScheduleKind::Clr1 {
                delta_low: *delta_low,
                delta_peak: *delta_peak,
                t_peak: t_peak * factor,
                t_end: t_end * factor,
                shape: *shape,
            },
            ScheduleKind::Piecewise { points } => ScheduleKind::Piecewise {
                points: points.iter().map(|&(t, d)| (t * factor, d)).collect(),
            },
        };
        Self::new(kind, self.beta)
    }

    /// The same schedule run at adaptation rate `beta`, with times rescaled
    /// by `old_beta / beta` so that the dynamics trace the same path.
    pub fn at_beta(&self, beta: f64) -> Result<Self> {
        let mut s = self.stretched(self.beta / beta)?;
        s.beta = beta;
        s.validate()?;
        Ok(s)
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            ScheduleKind::Constant { .. } => true,
            ScheduleKind::Ete { delta_max, .. } => *delta_max == 0.0,
            ScheduleKind::Clr1 { delta_low, delta_peak, .. } => *delta_low == 0.0 && *delta_peak == 0.0,
            ScheduleKind::Piecewise { points } => points.windows(2).all(|w| w[0].1 == w[1].1),
        }
    }

    /// Largest `delta` the schedule ever takes.
    pub fn delta_max(&self) -> f64 {
        match &self.kind {
            ScheduleKind::Constant { delta } => *delta,
            ScheduleKind::Ete { delta_max, .. } => *delta_max,
            ScheduleKind::Clr1 { delta_low, delta_peak, .. } => delta_low.max(*delta_peak),
            ScheduleKind::Piecewise { points } => points.iter().map(|p| p.1).fold(0.0, f64::max),
        }
    }

    /// Time after which `delta` stays at its final value.
    pub fn settle_time(&self) -> f64 {
        match &self.kind {
            ScheduleKind::Constant { .. } => 0.0,
            ScheduleKind::Ete { t_end, .. } | ScheduleKind::Clr1 { t_end, .. } => *t_end,
            ScheduleKind::Piecewise { points } => points.last().map_or(0.0, |p| p.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")))
            }
        };
        match &self.kind {
            ScheduleKind::Constant { delta } => nonneg("delta", *delta)?,
            ScheduleKind::Ete { delta_max, t_end, .. } => {
                nonneg("delta_max", *delta_max)?;
                if !(*t_end > 0.0 && t_end.is_finite()) {
                    return bad(format!("t_end must be positive, got {t_end}"));
                }
            }
            ScheduleKind::Clr1 {
                delta_low,
                delta_peak,
                t_peak,
                t_end,
                ..
            } => {
                nonneg("delta_low", *delta_low)?;
                nonneg("delta_peak", *delta_peak)?;
                nonneg("t_peak", *t_peak)?;
                if !(t_peak < t_end && t_end.is_finite()) {
                    return bad(format!("need t_peak < t_end, got {t_peak} and {t_end}"));
                }
                if delta_low > delta_peak {
                    return bad(format!(
                        "delta_low ({delta_low}) exceeds delta_peak ({delta_peak})"
                    ));
                }
            }
            ScheduleKind::Piecewise { points } => {
                if points.is_empty() {
                    return bad("piecewise schedule needs at least one point".into());
                }
                for &(t, d) in points {
                    nonneg("knot time", t)?;
                    nonneg("knot delta", d)?;
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("piecewise knot times must be strictly increasing".into());
                }
            }
        }
        let alpha_max = self.delta_max() * self.beta;
        if alpha_max >= 1.0 {
            return bad(format!(
                "peak exploration {} at beta {} needs alpha = {alpha_max} >= 1; lower beta",
                self.delta_max(),
                self.beta
            ));
        }
        Ok(())
    }

    pub fn delta_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "schedule evaluated at negative time {t}"
            )));
        }
        Ok(match &self.kind {
            ScheduleKind::Constant { delta } => *delta,
            ScheduleKind::Ete { delta_max, t_end, shape } => {
                if t >= *t_end {
                    0.0
                } else {
                    delta_max * shape.apply(1.0 - t / t_end)
                }
            }
            ScheduleKind::Clr1 {
                delta_low,
                delta_peak,
                t_peak,
                t_end,
                shape,
            } => {
                if t >= *t_end {
                    0.0
                } else if t < *t_peak {
                    delta_low + (delta_peak - delta_low) * shape.apply(t / t_peak)
                } else {
                    delta_peak * shape.apply((t_end - t) / (t_end - t_peak))
                }
            }
            ScheduleKind::Piecewise { points } => {
                let i = points.partition_point(|p| p.0 <= t);
                if i == 0 {
                    points[0].1
                } else if i == points.len() {
                    points[i - 1].1
                } else {
                    let (t0, d0) = points[i - 1];
                    let (t1, d1) = points[i];
                    d0 + (d1 - d0) * (t - t0) / (t1 - t0)
                }
            }
        })
    }

    pub fn eval(&self, t: f64) -> Result<SchedulePoint> {
        let delta = self.delta_at(t)?;
        Ok(SchedulePoint {
            alpha: delta * self.beta,
            beta: self.beta,
            delta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ete_linear_examples() {
        let s = ExplorationSchedule::ete(1.0, 10.0, RampShape::Linear, 0.5).unwrap();
        assert_eq!(s.delta_at(0.0).unwrap(), 1.0);
        assert_eq!(s.delta_at(5.0).unwrap(), 0.5);
        assert_eq!(s.delta_at(10.0).unwrap(), 0.0);
        assert_eq!(s.delta_at(50.0).unwrap(), 0.0);
    }

    #[test]
    fn clr1_examples() {
        let s = ExplorationSchedule::clr1(0.0, 2.0, 5.0, 10.0, RampShape::Linear, 0.1).unwrap();
        assert_eq!(s.delta_at(5.0).unwrap(), 2.0);
        assert_eq!(s.delta_at(0.0).unwrap(), 0.0);
        let q = ExplorationSchedule::clr1(0.0, 2.0, 5.0, 10.0, RampShape::Quadratic, 0.1).unwrap();
        assert!((q.delta_at(2.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((q.delta_at(7.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cycle_is_constant_then_zero() {
        let s = ExplorationSchedule::clr1(0.7, 0.7, 3.0, 6.0, RampShape::Linear, 1.0).unwrap();
        assert_eq!(s.delta_at(0.0).unwrap(), 0.7);
        assert_eq!(s.delta_at(2.9).unwrap(), 0.7);
        assert_eq!(s.delta_at(6.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_ete_is_pure_exploitation() {
        let s = ExplorationSchedule::ete(0.0, 7.0, RampShape::Linear, 1.0).unwrap();
        assert!(s.is_constant());
        for t in [0.0, 1.0, 6.9, 100.0] {
            assert_eq!(s.delta_at(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_point_has_ratio() {
        let s = ExplorationSchedule::constant(0.3, 2.0).unwrap();
        let p = s.eval(123.0).unwrap();
        assert_eq!(p.delta, 0.3);
        assert!((p.alpha / p.beta - 0.3).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ExplorationSchedule::clr1(0.0, 1.0, 5.0, 5.0, RampShape::Linear, 0.1).is_err());
        assert!(ExplorationSchedule::ete(-1.0, 5.0, RampShape::Linear, 0.1).is_err());
        assert!(ExplorationSchedule::constant(2.0, 0.5).is_err());
        assert!(ExplorationSchedule::piecewise(vec![(0.0, 1.0), (0.0, 2.0)], 0.1).is_err());
        let s = ExplorationSchedule::constant(0.1, 1.0).unwrap();
        assert!(s.eval(-1.0).is_err());
    }

    #[test]
    fn piecewise_interpolates_and_holds() {
        let s = ExplorationSchedule::piecewise(vec![(1.0, 0.0), (3.0, 2.0), (4.0, 0.5)], 0.1).unwrap();
        assert_eq!(s.delta_at(0.0).unwrap(), 0.0);
        assert_eq!(s.delta_at(2.0).unwrap(), 1.0);
        assert_eq!(s.delta_at(3.5).unwrap(), 1.25);
        assert_eq!(s.delta_at(9.0).unwrap(), 0.5);
    }

    #[test]
    fn at_beta_preserves_shape_in_rescaled_time() {
        let s = ExplorationSchedule::clr1(0.0, 5.0, 25.0, 50.0, RampShape::Linear, 0.1).unwrap();
        let t = s.at_beta(0.05).unwrap();
        assert_eq!(t.delta_at(50.0).unwrap(), 5.0);
        assert_eq!(t.delta_at(100.0).unwrap(), 0.0);
        assert_eq!(t.beta(), 0.05);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"kind": "clr1", "delta_low": 0, "delta_peak": 2, "t_peak": 5, "t_end": 10, "shape": "quadratic", "beta": 0.1}"#;
        let s: ExplorationSchedule = serde_json::from_str(text).unwrap();
        assert!((s.delta_at(2.5).unwrap() - 0.5).abs() < 1e-15);
        let back: ExplorationSchedule = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
    }

    fn any_schedule() -> impl Strategy<Value = ExplorationSchedule> {
        let shape = prop_oneof![Just(RampShape::Linear), Just(RampShape::Quadratic)];
        prop_oneof![
            (0.0f64..5.0, 0.1f64..50.0, shape.clone())
                .prop_map(|(d, t, s)| ExplorationSchedule::ete(d, t, s, 0.1).unwrap()),
            (0.0f64..2.0, 0.0f64..3.0, 0.0f64..20.0, 0.1f64..20.0, shape).prop_map(
                |(low, extra, tp, dt, s)| {
                    ExplorationSchedule::clr1(low, low + extra, tp, tp + dt, s, 0.1).unwrap()
                }
            ),
        ]
    }

    proptest! {
        #[test]
        fn schedules_are_nonnegative_and_end_at_zero(s in any_schedule(), t in 0.0f64..100.0) {
            let d = s.delta_at(t).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!(d <= s.delta_max() + 1e-12);
            prop_assert_eq!(s.delta_at(s.settle_time() + t).unwrap(), 0.0);
        }

        #[test]
        fn monotone_segments(s in any_schedule(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            match *s.kind() {
                ScheduleKind::Ete { t_end, .. } => {
                    prop_assert!(s.delta_at(hi * t_end).unwrap() <= s.delta_at(lo * t_end).unwrap() + 1e-12);
                }
                ScheduleKind::Clr1 { t_peak, t_end, .. } => {
                    prop_assert!(s.delta_at(hi * t_peak).unwrap() + 1e-12 >= s.delta_at(lo * t_peak).unwrap());
                    let fall = |f: f64| t_peak + f * (t_end - t_peak);
                    prop_assert!(s.delta_at(fall(hi)).unwrap() <= s.delta_at(fall(lo)).unwrap() + 1e-12);
                }
                _ => {}
            }
        }
    }
}
