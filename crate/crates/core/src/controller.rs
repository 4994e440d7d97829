//! The mode-change solve loop.
//!
//! A schedule names an initial behavior mode and timed changes. Iteration
//! `k` plans from `n1 = compute_n1(schedule, k)` under the mode in effect
//! there, keeping the previous iteration's actions before `n1` fixed. The
//! planner never sees later changes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aopl::{AuthorizationClass, Policy, PolicyEvaluator};
use crate::catalog::{CatalogError, PolicyLibrary};
use crate::domain::{ActionId, DomainError, Scenario};
use crate::planner::{self, BehaviorMode, MetricVector, PlanError, Trajectory};
use crate::term::{Atom, Literal};

/// Default cap on schedule changes, as in the original interface.
pub const DEFAULT_MAX_CHANGES: usize = 2;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeChange {
    #[serde(default)]
    pub step: Option<usize>,
    #[serde(default)]
    pub mode: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSchedule {
    pub initial_mode: String,
    #[serde(default)]
    pub changes: Vec<ModeChange>,
}

impl ModeSchedule {
    pub fn new(initial_mode: impl Into<String>) -> Self {
        ModeSchedule {
            initial_mode: initial_mode.into(),
            changes: Vec::new(),
        }
    }

    pub fn change(mut self, step: usize, mode: impl Into<String>) -> Self {
        self.changes.push(ModeChange {
            step: Some(step),
            mode: Some(mode.into()),
        });
        self
    }

    /// Mode in effect at `step`; assumes a validated schedule.
    pub fn mode_at(&self, step: usize) -> &str {
        self.changes
            .iter()
            .filter(|c| c.step.is_some_and(|s| s <= step))
            .filter_map(|c| c.mode.as_deref())
            .next_back()
            .unwrap_or(&self.initial_mode)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleIssue {
    pub code: String,
    pub message: String,
}

impl ScheduleIssue {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        ScheduleIssue {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

/// Every violated check, in order of the changes. `max_changes = None`
/// accepts any number of changes.
pub fn validate_schedule(
    schedule: &ModeSchedule,
    horizon: usize,
    known_modes: &[&str],
    max_changes: Option<usize>,
) -> Vec<ScheduleIssue> {
    let mut issues = Vec::new();
    let unknown = |name: &str| {
        ScheduleIssue::new(
            "unknown_mode",
            format!(
                "unknown behavior mode `{name}`; expected one of: {}",
                known_modes.join(", ")
            ),
        )
    };
    if !known_modes.contains(&schedule.initial_mode.as_str()) {
        issues.push(unknown(&schedule.initial_mode));
    }
    if let Some(max) = max_changes {
        if schedule.changes.len() > max {
            issues.push(ScheduleIssue::new(
                "too_many_changes",
                format!("at most {max} behavior mode changes are allowed"),
            ));
        }
    }
    let mut previous: Option<usize> = None;
    for (i, change) in schedule.changes.iter().enumerate() {
        let n = i + 1;
        match (&change.step, &change.mode) {
            (Some(_), Some(_)) => {}
            _ => issues.push(ScheduleIssue::new(
                "mode_and_step_required",
                format!("change {n}: behavior mode and time step both required"),
            )),
        }
        if let Some(mode) = &change.mode {
            if !known_modes.contains(&mode.as_str()) {
                issues.push(unknown(mode));
            }
        }
        if let Some(step) = change.step {
            if step == 0 || step >= horizon {
                issues.push(ScheduleIssue::new(
                    "step_out_of_range",
                    format!(
                        "change {n}: step {step} out of range; steps must lie in 1..={}",
                        horizon.saturating_sub(1)
                    ),
                ));
            }
            if previous.is_some_and(|p| step <= p) {
                issues.push(ScheduleIssue::new(
                    "steps_not_increasing",
                    format!("change {n}: steps must be strictly increasing"),
                ));
            }
            previous = Some(step);
        }
    }
    issues
}

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("invalid schedule: {}", .0.iter().map(|i| i.message.as_str()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<ScheduleIssue>),
    #[error("iteration {iteration} is out of range for {changes} changes")]
    IterationOutOfRange { iteration: usize, changes: usize },
    #[error("iteration {iteration} ({mode} mode from step {n1}): no plan satisfies the mode's constraints")]
    NoPlan {
        iteration: usize,
        mode: String,
        n1: usize,
    },
    #[error("iteration {iteration}: {source}")]
    Plan { iteration: usize, source: PlanError },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

pub fn compute_n1(schedule: &ModeSchedule, iteration: usize) -> Result<usize, ControllerError> {
    if iteration == 0 {
        return Ok(0);
    }
    let change =
        schedule
            .changes
            .get(iteration - 1)
            .ok_or(ControllerError::IterationOutOfRange {
                iteration,
                changes: schedule.changes.len(),
            })?;
    change.step.ok_or_else(|| {
        ControllerError::Validation(vec![ScheduleIssue::new(
            "mode_and_step_required",
            format!("change {iteration}: behavior mode and time step both required"),
        )])
    })
}

/// Facts fixed before a re-solve.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LearnedInfo {
    /// Fluent literals of states `0..=upto`.
    pub holds_facts: BTreeSet<(Literal, usize)>,
    /// Actions of steps `0..upto`.
    pub occurs_facts: BTreeSet<(Atom, usize)>,
    pub mode_at_step: BTreeMap<usize, String>,
}

impl LearnedInfo {
    /// The fixed actions in step order.
    pub fn prefix(&self, scenario: &Scenario) -> Result<Vec<ActionId>, DomainError> {
        let mut by_step: Vec<(usize, &Atom)> =
            self.occurs_facts.iter().map(|(a, i)| (*i, a)).collect();
        by_step.sort();
        by_step
            .into_iter()
            .map(|(_, a)| scenario.action_id(a))
            .collect()
    }
}

pub fn extract_learned_info(
    scenario: &Scenario,
    trajectory: &Trajectory,
    upto: usize,
    schedule: &ModeSchedule,
) -> LearnedInfo {
    let upto = upto.min(trajectory.len());
    let mut info = LearnedInfo::default();
    for (i, state) in trajectory.states[..=upto].iter().enumerate() {
        for lit in scenario.state_literals(state) {
            info.holds_facts.insert((lit, i));
        }
    }
    for (i, &a) in trajectory.actions[..upto].iter().enumerate() {
        info.occurs_facts
            .insert((scenario.action_atom(a).clone(), i));
        info.mode_at_step.insert(i, schedule.mode_at(i).to_string());
    }
    info
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanStep {
    pub index: usize,
    pub action: String,
    pub description: String,
    pub mode: String,
    pub authorization: AuthorizationClass,
    pub obligation_compliant: bool,
}

/// Steps `from_step..to_step` planned under one mode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub mode: String,
    pub from_step: usize,
    pub to_step: usize,
    /// Metric vector of the iteration that planned this segment.
    pub metrics: MetricVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnnotatedPlan {
    pub scenario_id: String,
    pub horizon: usize,
    pub steps: Vec<PlanStep>,
    pub segments: Vec<Segment>,
    /// One vector per segment.
    pub final_metrics: Vec<MetricVector>,
    pub subgoals_achieved: usize,
}

impl AnnotatedPlan {
    pub fn non_wait_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.action != crate::domain::WAIT)
            .count()
    }

    pub fn step_of(&self, action: &str) -> Option<usize> {
        self.steps
            .iter()
            .find(|s| s.action == action)
            .map(|s| s.index)
    }

    pub fn actions(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.action.as_str()).collect()
    }

    /// Listing with mode separators and numbered action descriptions. Runs
    /// of two or more waits inside a segment are collapsed into one line.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (k, seg) in self.segments.iter().enumerate() {
            let title = BehaviorMode {
                name: seg.mode.clone(),
                priority_order: Vec::new(),
                forbid_obligation_noncompliance: false,
                extra_policies: Vec::new(),
            }
            .title();
            let verb = if k == 0 { "Begin in" } else { "Change to" };
            let _ = writeln!(out, "*** {verb} {title} Mode ***");
            let steps = &self.steps[seg.from_step..seg.to_step];
            let mut i = 0;
            while i < steps.len() {
                let step = &steps[i];
                let mut j = i;
                if step.action == crate::domain::WAIT {
                    while j + 1 < steps.len() && steps[j + 1].action == crate::domain::WAIT {
                        j += 1;
                    }
                }
                if j > i {
                    let _ = writeln!(
                        out,
                        "{}-{}. {}",
                        step.index, steps[j].index, step.description
                    );
                } else {
                    let _ = writeln!(out, "{}. {}", step.index, step.description);
                }
                i = j + 1;
            }
        }
        out
    }
}

/// Runs the solve loop for `schedule` with the modes and policies of
/// `library`. The schedule is validated without a cap on its length.
pub fn generate_plan_with_mode_changes(
    scenario: &Scenario,
    library: &PolicyLibrary,
    schedule: &ModeSchedule,
) -> Result<AnnotatedPlan, ControllerError> {
    let known: Vec<&str> = library.modes().map(|m| m.name.as_str()).collect();
    let issues = validate_schedule(schedule, scenario.horizon, &known, None);
    if !issues.is_empty() {
        return Err(ControllerError::Validation(issues));
    }

    let mut policies: HashMap<&str, Policy> = HashMap::new();
    for name in std::iter::once(schedule.initial_mode.as_str())
        .chain(schedule.changes.iter().filter_map(|c| c.mode.as_deref()))
    {
        if !policies.contains_key(name) {
            policies.insert(name, library.policy(name, scenario)?);
        }
    }
    let evaluators: HashMap<&str, PolicyEvaluator<'_>> = policies
        .iter()
        .map(|(name, p)| (*name, PolicyEvaluator::new(p, scenario)))
        .collect();

    let iterations = schedule.changes.len() + 1;
    let mut trajectory: Option<Trajectory> = None;
    let mut segments = Vec::with_capacity(iterations);
    for k in 0..iterations {
        let n1 = compute_n1(schedule, k)?;
        let mode_name = schedule.mode_at(n1);
        let mode = library.mode(mode_name).expect("validated mode");
        let prefix = match &trajectory {
            None => Vec::new(),
            Some(t) => extract_learned_info(scenario, t, n1, schedule).prefix(scenario)?,
        };
        let evaluator = &evaluators[mode_name];
        let plan = planner::plan(evaluator, mode, &prefix, n1).map_err(|e| match e {
            PlanError::NoPlan { .. } => ControllerError::NoPlan {
                iteration: k,
                mode: mode_name.to_string(),
                n1,
            },
            source => ControllerError::Plan {
                iteration: k,
                source,
            },
        })?;
        debug_assert_eq!(&plan.trajectory.actions[..n1], prefix.as_slice());
        let to_step = match schedule.changes.get(k) {
            Some(c) => c.step.expect("validated step"),
            None => scenario.horizon,
        };
        segments.push(Segment {
            mode: mode_name.to_string(),
            from_step: n1,
            to_step,
            metrics: plan.metrics,
        });
        trajectory = Some(plan.trajectory);
    }
    let trajectory = trajectory.expect("at least one iteration");

    let mut steps = Vec::with_capacity(trajectory.len());
    for (i, &action) in trajectory.actions.iter().enumerate() {
        let mode = schedule.mode_at(i);
        let evaluator = &evaluators[mode];
        let state = &trajectory.states[i];
        let atom = scenario.action_atom(action);
        let plan_err = |source| ControllerError::Plan {
            iteration: iterations - 1,
            source: PlanError::from(source),
        };
        steps.push(PlanStep {
            index: i,
            action: atom.to_string(),
            description: scenario.describe_action(action),
            mode: mode.to_string(),
            authorization: evaluator
                .classify_authorization(state, atom)
                .map_err(plan_err)?,
            obligation_compliant: evaluator
                .obligation_compliant(state, atom)
                .map_err(plan_err)?,
        });
    }
    Ok(AnnotatedPlan {
        scenario_id: scenario.id.clone(),
        horizon: scenario.horizon,
        final_metrics: segments.iter().map(|s| s.metrics.clone()).collect(),
        segments,
        steps,
        subgoals_achieved: scenario.subgoal_count(trajectory.final_state()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODES: [&str; 3] = ["safe", "normal", "risky"];

    fn codes(issues: &[ScheduleIssue]) -> Vec<&str> {
        issues.iter().map(|i| i.code.as_str()).collect()
    }

    #[test]
    fn n1_per_iteration() {
        let s = ModeSchedule::new("safe")
            .change(3, "normal")
            .change(7, "risky");
        assert_eq!(compute_n1(&s, 0).unwrap(), 0);
        assert_eq!(compute_n1(&s, 1).unwrap(), 3);
        assert_eq!(compute_n1(&s, 2).unwrap(), 7);
        assert!(matches!(
            compute_n1(&s, 3),
            Err(ControllerError::IterationOutOfRange {
                iteration: 3,
                changes: 2
            })
        ));
    }

    #[test]
    fn mode_at_step() {
        let s = ModeSchedule::new("safe")
            .change(3, "normal")
            .change(7, "risky");
        let got: Vec<&str> = (0..9).map(|i| s.mode_at(i)).collect();
        assert_eq!(
            got,
            ["safe", "safe", "safe", "normal", "normal", "normal", "normal", "risky", "risky"]
        );
    }

    #[test]
    fn valid_schedules_pass() {
        let s = ModeSchedule::new("safe")
            .change(3, "normal")
            .change(7, "risky");
        assert!(validate_schedule(&s, 14, &MODES, Some(2)).is_empty());
        assert!(validate_schedule(&ModeSchedule::new("risky"), 14, &MODES, Some(2)).is_empty());
    }

    #[test]
    fn missing_mode_reported() {
        let mut s = ModeSchedule::new("safe");
        s.changes.push(ModeChange {
            step: Some(3),
            mode: None,
        });
        let issues = validate_schedule(&s, 14, &MODES, Some(2));
        assert_eq!(codes(&issues), ["mode_and_step_required"]);
        assert!(issues[0]
            .message
            .contains("behavior mode and time step both required"));
    }

    #[test]
    fn all_violations_reported() {
        let mut s = ModeSchedule::new("cautious")
            .change(3, "normal")
            .change(3, "risky")
            .change(14, "turbo");
        s.changes.push(ModeChange::default());
        let issues = validate_schedule(&s, 14, &MODES, Some(2));
        assert_eq!(
            codes(&issues),
            [
                "unknown_mode",
                "too_many_changes",
                "steps_not_increasing",
                "unknown_mode",
                "step_out_of_range",
                "mode_and_step_required"
            ]
        );
        assert!(issues[2]
            .message
            .contains("steps must be strictly increasing"));
        assert!(issues[4].message.contains("out of range"));
    }

    #[test]
    fn step_zero_is_out_of_range() {
        let s = ModeSchedule::new("safe").change(0, "risky");
        assert_eq!(
            codes(&validate_schedule(&s, 14, &MODES, None)),
            ["step_out_of_range"]
        );
    }

    #[test]
    fn library_accepts_more_changes_without_cap() {
        let s = ModeSchedule::new("safe")
            .change(2, "normal")
            .change(4, "risky")
            .change(6, "safe");
        assert!(validate_schedule(&s, 14, &MODES, None).is_empty());
        assert_eq!(
            codes(&validate_schedule(
                &s,
                14,
                &MODES,
                Some(DEFAULT_MAX_CHANGES)
            )),
            ["too_many_changes"]
        );
    }

    #[test]
    fn schedule_json_shape() {
        let s: ModeSchedule =
            serde_json::from_str(r#"{"initial_mode":"safe","changes":[{"step":3}]}"#).unwrap();
        assert_eq!(s.changes[0].mode, None);
        assert_eq!(s.changes[0].step, Some(3));
    }
}
