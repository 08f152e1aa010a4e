//! Subject profiles and action/emotion timelines.
//!
//! A [`Scenario`] is an ordered, non-overlapping sequence of events, each
//! carrying an activity level (MET or a named action) and an emotion
//! coordinate (valence/arousal on the 1-9 self-report scale). Sampling a
//! scenario at time `t` yields the instantaneous drive for every
//! physiological model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::MetTable;

/// Resting metabolic baseline; gaps between events fall back to this.
pub const REST_MET: f64 = 1.0;
/// Neutral point of the 1-9 valence/arousal scale.
pub const NEUTRAL_SCALE: f64 = 5.0;
/// Walking-speed proxy slope: m/s gained per MET above rest. A crude
/// linear map used when no skeleton is attached; tune to taste.
pub const MET_TO_VELOCITY: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

/// Static description of the simulated subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    /// Age in whole years, at least 1.
    pub age: u32,
    pub gender: Gender,
    /// Cardiovascular fitness in [0, 1]; 1 is excellent condition.
    pub lambda: f64,
    /// Resting heart rate, beats/min.
    pub hr_rest: f64,
    /// Overrides the fitness-derived minimum heart rate when set.
    #[serde(default)]
    pub hr_min_override: Option<f64>,
    /// Shifts the age/gender VO2max estimate, L/min in [-0.4, 0.4].
    #[serde(default)]
    pub vo2max_offset: f64,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("profile field {field} out of range: {value}")]
    Profile { field: &'static str, value: f64 },
    #[error("resolved heart-rate bounds are inconsistent: min {hr_min}, rest {hr_rest}, max {hr_max}")]
    HrBounds {
        hr_min: f64,
        hr_rest: f64,
        hr_max: f64,
    },
    #[error("scenario has no events")]
    EmptyScenario,
    #[error("events {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
    #[error("event {index}: {field} = {value} out of range")]
    Range {
        index: usize,
        field: &'static str,
        value: f64,
    },
    #[error("t = {t} is outside the scenario duration {total}")]
    OutOfRange { t: f64, total: f64 },
    #[error("event {index} uses unresolved action label {label:?}; resolve against a MET table first")]
    UnresolvedAction { index: usize, label: String },
    #[error("unknown action label {0:?}")]
    UnknownAction(String),
}

impl SubjectProfile {
    /// Check all profile invariants, including the resolved heart-rate
    /// bounds ordering.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.age < 1 {
            return Err(ScenarioError::Profile {
                field: "age",
                value: self.age as f64,
            });
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(ScenarioError::Profile {
                field: "lambda",
                value: self.lambda,
            });
        }
        if !(20.0..=120.0).contains(&self.hr_rest) {
            return Err(ScenarioError::Profile {
                field: "hr_rest",
                value: self.hr_rest,
            });
        }
        if self.vo2max_offset.abs() > 0.4 {
            return Err(ScenarioError::Profile {
                field: "vo2max_offset",
                value: self.vo2max_offset,
            });
        }
        let (hr_min, hr_max) = hr_bounds(self);
        if !(hr_min < self.hr_rest && self.hr_rest < hr_max) {
            return Err(ScenarioError::HrBounds {
                hr_min,
                hr_rest: self.hr_rest,
                hr_max,
            });
        }
        Ok(())
    }
}

/// Resolved minimum and maximum heart rate for a profile.
///
/// Maximum follows the age regression 208 - 0.7*age. Minimum defaults to
/// 38 + 14*(1 - lambda) bpm, kept at least 5 bpm below resting, and can be
/// overridden per profile for subjects with known bradycardia.
pub fn hr_bounds(profile: &SubjectProfile) -> (f64, f64) {
    let hr_max = 208.0 - 0.7 * profile.age as f64;
    let hr_min = profile
        .hr_min_override
        .unwrap_or_else(|| (38.0 + 14.0 * (1.0 - profile.lambda)).min(profile.hr_rest - 5.0));
    (hr_min, hr_max)
}

/// Event activity: either a direct MET value or a label resolved through a
/// MET table before synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionSpec {
    Met { met: f64 },
    Label { action: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    /// Event start, seconds from scenario origin.
    pub t_start: f64,
    /// Event length, seconds; events cover [t_start, t_start + duration).
    pub duration: f64,
    #[serde(flatten)]
    pub action: ActionSpec,
    /// Valence on the 1-9 scale.
    pub valence: f64,
    /// Arousal on the 1-9 scale.
    pub arousal: f64,
}

impl ScenarioEvent {
    pub fn end(&self) -> f64 {
        self.t_start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub events: Vec<ScenarioEvent>,
    pub total_duration: f64,
}

impl Scenario {
    /// Build a scenario from events, sorted by start time, with the total
    /// duration set to the end of the last event.
    pub fn from_events(mut events: Vec<ScenarioEvent>) -> Self {
        events.sort_by(|a, b| a.t_start.partial_cmp(&b.t_start).unwrap());
        let total = events.last().map_or(0.0, |e| e.end());
        Scenario {
            events,
            total_duration: total,
        }
    }

    /// Replace every action label with its MET value from the table.
    pub fn resolve(mut self, table: &MetTable) -> Result<Self, ScenarioError> {
        for event in &mut self.events {
            if let ActionSpec::Label { action } = &event.action {
                let met = table
                    .met_for_label(action)
                    .ok_or_else(|| ScenarioError::UnknownAction(action.clone()))?;
                event.action = ActionSpec::Met { met };
            }
        }
        Ok(self)
    }
}

/// Instantaneous drive resolved at a point in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSample {
    pub met: f64,
    pub valence: f64,
    pub arousal: f64,
    /// Movement speed in m/s derived from MET (or from skeletal motion when
    /// a clip is attached upstream).
    pub velocity: f64,
}

/// Walking-speed proxy for a MET level.
pub fn velocity_from_met(met: f64) -> f64 {
    ((met - REST_MET) * MET_TO_VELOCITY).max(0.0)
}

/// Validate all scenario invariants and hand the scenario back.
///
/// Idempotent: validating an already-valid scenario returns it unchanged.
pub fn validate_scenario(scenario: Scenario) -> Result<Scenario, ScenarioError> {
    if scenario.events.is_empty() {
        return Err(ScenarioError::EmptyScenario);
    }
    for (i, e) in scenario.events.iter().enumerate() {
        if e.t_start < 0.0 {
            return Err(ScenarioError::Range {
                index: i,
                field: "t_start",
                value: e.t_start,
            });
        }
        if e.duration <= 0.0 {
            return Err(ScenarioError::Range {
                index: i,
                field: "duration",
                value: e.duration,
            });
        }
        if !(1.0..=9.0).contains(&e.valence) {
            return Err(ScenarioError::Range {
                index: i,
                field: "valence",
                value: e.valence,
            });
        }
        if !(1.0..=9.0).contains(&e.arousal) {
            return Err(ScenarioError::Range {
                index: i,
                field: "arousal",
                value: e.arousal,
            });
        }
        if let ActionSpec::Met { met } = e.action {
            if met < 0.9 {
                return Err(ScenarioError::Range {
                    index: i,
                    field: "met",
                    value: met,
                });
            }
        }
    }
    for i in 1..scenario.events.len() {
        let prev = &scenario.events[i - 1];
        let cur = &scenario.events[i];
        if cur.t_start < prev.end() {
            return Err(ScenarioError::Overlap {
                first: i - 1,
                second: i,
            });
        }
    }
    let last_end = scenario.events.last().unwrap().end();
    if scenario.total_duration < last_end {
        return Err(ScenarioError::Range {
            index: scenario.events.len() - 1,
            field: "total_duration",
            value: scenario.total_duration,
        });
    }
    Ok(scenario)
}

/// Zero-order-hold sample of the scenario at time `t`.
///
/// Events are left-closed, right-open intervals; gaps return the rest
/// default (MET 1.0, neutral valence/arousal).
pub fn sample_scenario(scenario: &Scenario, t: f64) -> Result<DriveSample, ScenarioError> {
    if t < 0.0 || t > scenario.total_duration {
        return Err(ScenarioError::OutOfRange {
            t,
            total: scenario.total_duration,
        });
    }
    for (i, e) in scenario.events.iter().enumerate() {
        if t >= e.t_start && t < e.end() {
            let met = match &e.action {
                ActionSpec::Met { met } => *met,
                ActionSpec::Label { action } => {
                    return Err(ScenarioError::UnresolvedAction {
                        index: i,
                        label: action.clone(),
                    })
                }
            };
            return Ok(DriveSample {
                met,
                valence: e.valence,
                arousal: e.arousal,
                velocity: velocity_from_met(met),
            });
        }
    }
    Ok(DriveSample {
        met: REST_MET,
        valence: NEUTRAL_SCALE,
        arousal: NEUTRAL_SCALE,
        velocity: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn event(t0: f64, dur: f64, met: f64, v: f64, a: f64) -> ScenarioEvent {
        ScenarioEvent {
            t_start: t0,
            duration: dur,
            action: ActionSpec::Met { met },
            valence: v,
            arousal: a,
        }
    }

    fn profile() -> SubjectProfile {
        SubjectProfile {
            age: 30,
            gender: Gender::Male,
            lambda: 0.7,
            hr_rest: 62.0,
            hr_min_override: None,
            vo2max_offset: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn overlapping_events_rejected() {
        let s = Scenario::from_events(vec![event(0.0, 10.0, 3.0, 5.0, 5.0), event(5.0, 10.0, 4.0, 5.0, 5.0)]);
        assert!(matches!(validate_scenario(s), Err(ScenarioError::Overlap { first: 0, second: 1 })));
    }

    #[test]
    fn empty_scenario_rejected() {
        let s = Scenario::from_events(vec![]);
        assert_eq!(validate_scenario(s), Err(ScenarioError::EmptyScenario));
    }

    #[test]
    fn valid_scenario_passes_unchanged_and_idempotent() {
        let s = Scenario::from_events(vec![event(0.0, 10.0, 2.0, 4.0, 6.0), event(10.0, 10.0, 5.0, 7.0, 8.0)]);
        let once = validate_scenario(s.clone()).unwrap();
        assert_eq!(once, s);
        let twice = validate_scenario(once.clone()).unwrap();
        assert_eq!(twice, once);
    }

    #[test]
    fn out_of_range_fields_rejected() {
        let s = Scenario::from_events(vec![event(0.0, 10.0, 2.0, 0.5, 5.0)]);
        assert!(matches!(validate_scenario(s), Err(ScenarioError::Range { field: "valence", .. })));
        let s = Scenario::from_events(vec![event(0.0, 10.0, 0.5, 5.0, 5.0)]);
        assert!(matches!(validate_scenario(s), Err(ScenarioError::Range { field: "met", .. })));
    }

    #[test]
    fn sampling_inside_event() {
        let s = Scenario::from_events(vec![event(0.0, 10.0, 8.0, 7.0, 8.0)]);
        let d = sample_scenario(&s, 3.0).unwrap();
        assert_eq!((d.met, d.valence, d.arousal), (8.0, 7.0, 8.0));
    }

    #[test]
    fn sampling_gap_returns_rest_default() {
        let mut s = Scenario::from_events(vec![event(0.0, 10.0, 4.0, 2.0, 2.0), event(20.0, 10.0, 4.0, 2.0, 2.0)]);
        s.total_duration = 30.0;
        let d = sample_scenario(&s, 15.0).unwrap();
        assert_eq!((d.met, d.valence, d.arousal), (REST_MET, 5.0, 5.0));
        assert_eq!(d.velocity, 0.0);
    }

    #[test]
    fn boundary_belongs_to_starting_event() {
        let s = Scenario::from_events(vec![event(0.0, 10.0, 2.0, 3.0, 3.0), event(10.0, 10.0, 6.0, 8.0, 8.0)]);
        let d = sample_scenario(&s, 10.0).unwrap();
        assert_eq!(d.met, 6.0);
    }

    #[test]
    fn sampling_past_duration_errors() {
        let s = Scenario::from_events(vec![event(0.0, 10.0, 2.0, 5.0, 5.0)]);
        assert!(matches!(sample_scenario(&s, 10.5), Err(ScenarioError::OutOfRange { .. })));
    }

    #[test]
    fn hr_max_from_age() {
        let mut p = profile();
        p.age = 20;
        assert!((hr_bounds(&p).1 - 194.0).abs() < 1e-12);
        p.age = 40;
        assert!((hr_bounds(&p).1 - 180.0).abs() < 1e-12);
    }

    #[test]
    fn hr_min_override_passthrough() {
        let mut p = profile();
        p.hr_min_override = Some(50.0);
        assert_eq!(hr_bounds(&p).0, 50.0);
    }

    #[test]
    fn hr_min_stays_below_rest() {
        let mut p = profile();
        p.lambda = 0.0; // formula gives 52 bpm
        p.hr_rest = 50.0; // must clamp to 45
        assert_eq!(hr_bounds(&p).0, 45.0);
    }

    #[test]
    fn hr_max_monotone_decreasing_in_age() {
        let mut prev = f64::INFINITY;
        for age in (20..=80).step_by(5) {
            let mut p = profile();
            p.age = age;
            let (_, hr_max) = hr_bounds(&p);
            assert!(hr_max < prev);
            prev = hr_max;
        }
    }

    #[test]
    fn profile_validation_rejects_bad_lambda() {
        let mut p = profile();
        p.lambda = 1.5;
        assert!(matches!(p.validate(), Err(ScenarioError::Profile { field: "lambda", .. })));
    }

    #[test]
    fn velocity_map() {
        assert_eq!(velocity_from_met(1.0), 0.0);
        assert_eq!(velocity_from_met(0.9), 0.0);
        assert!((velocity_from_met(5.0) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn scenario_json_round_trip() {
        let json = r#"[
            {"t_start": 0.0, "duration": 30.0, "met": 1.3, "valence": 5.0, "arousal": 5.0},
            {"t_start": 30.0, "duration": 30.0, "action": "walking", "valence": 7.0, "arousal": 6.0}
        ]"#;
        let events: Vec<ScenarioEvent> = serde_json::from_str(json).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].action, ActionSpec::Met { met: 1.3 });
        assert_eq!(
            events[1].action,
            ActionSpec::Label {
                action: "walking".into()
            }
        );
        let back = serde_json::to_string(&events).unwrap();
        let again: Vec<ScenarioEvent> = serde_json::from_str(&back).unwrap();
        assert_eq!(events, again);
    }

    proptest! {
        // every t inside an event samples exactly that event's values
        #[test]
        fn sampling_matches_covering_event(
            starts in proptest::collection::vec(0.0f64..100.0, 1..6),
            frac in 0.0f64..0.999,
        ) {
            let mut t0 = 0.0;
            let mut events = Vec::new();
            for (i, gap) in starts.iter().enumerate() {
                t0 += gap + 1.0;
                events.push(event(t0, 5.0, 1.0 + i as f64, 1.0 + (i % 9) as f64, 9.0 - (i % 9) as f64));
                t0 += 5.0;
            }
            let s = validate_scenario(Scenario::from_events(events.clone())).unwrap();
            for e in &events {
                let t = e.t_start + frac * e.duration;
                let d = sample_scenario(&s, t).unwrap();
                if let ActionSpec::Met { met } = e.action {
                    prop_assert_eq!(d.met, met);
                }
                prop_assert_eq!(d.valence, e.valence);
                prop_assert_eq!(d.arousal, e.arousal);
            }
        }
    }
}
