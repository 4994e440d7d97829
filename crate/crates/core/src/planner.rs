//! Behavior modes and the lexicographic multi-metric planner.
//!
//! A plan fixes one action per step from `n1` up to the horizon. Once the
//! agent waits at a step `>= n1` it waits until the horizon, so every
//! candidate plan is a run of non-wait actions followed by a wait tail.
//! Metrics are computed over steps `n1..horizon` only; the fixed prefix is
//! neither constrained nor scored.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aopl::{ActionVerdict, AuthorizationClass, PolicyError, PolicyEvaluator};
use crate::domain::{ActionId, DomainError, Scenario, State};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no trajectory satisfies the hard constraints of mode `{mode}`")]
    NoPlan { mode: String },
    #[error("policy is not categorical: {0}")]
    NotCategorical(PolicyError),
    #[error("metric vector lacks `{0}`")]
    MissingMetric(Metric),
    #[error("invalid fixed prefix: {0}")]
    InvalidPrefix(String),
    #[error("invalid behavior mode: {0}")]
    InvalidMode(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Policy(PolicyError),
}

impl From<PolicyError> for PlanError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::NotCategoricalAt { .. } | PolicyError::InconsistentPolicyAt(_) => {
                PlanError::NotCategorical(e)
            }
            other => PlanError::Policy(other),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SubgoalCount,
    PercentageStronglyCompliant,
    PercentageUnderspecified,
    WaitCount,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::SubgoalCount,
        Metric::PercentageStronglyCompliant,
        Metric::PercentageUnderspecified,
        Metric::WaitCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::SubgoalCount => "subgoal_count",
            Metric::PercentageStronglyCompliant => "percentage_strongly_compliant",
            Metric::PercentageUnderspecified => "percentage_underspecified",
            Metric::WaitCount => "wait_count",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// Metric values; percentages are integers in 0..=100.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricVector {
    values: BTreeMap<Metric, u32>,
}

impl MetricVector {
    pub fn new(values: impl IntoIterator<Item = (Metric, u32)>) -> Self {
        MetricVector {
            values: values.into_iter().collect(),
        }
    }

    /// Shorthand in the fixed order subgoal, strong%, underspecified%, wait.
    pub fn of(subgoals: u32, strong: u32, under: u32, waits: u32) -> Self {
        Self::new([
            (Metric::SubgoalCount, subgoals),
            (Metric::PercentageStronglyCompliant, strong),
            (Metric::PercentageUnderspecified, under),
            (Metric::WaitCount, waits),
        ])
    }

    pub fn get(&self, metric: Metric) -> Option<u32> {
        self.values.get(&metric).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Metric, u32)> + '_ {
        self.values.iter().map(|(m, v)| (*m, *v))
    }
}

impl fmt::Display for MetricVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (m, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{m}: {v}")?;
        }
        f.write_str("}")
    }
}

/// A named priority order over metrics plus hard constraints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorMode {
    pub name: String,
    /// Highest priority first.
    pub priority_order: Vec<Metric>,
    pub forbid_obligation_noncompliance: bool,
    /// Policy files added to the base policy while the mode is active.
    #[serde(default)]
    pub extra_policies: Vec<String>,
}

impl BehaviorMode {
    pub fn safe() -> Self {
        BehaviorMode {
            name: "safe".into(),
            priority_order: vec![
                Metric::SubgoalCount,
                Metric::PercentageStronglyCompliant,
                Metric::PercentageUnderspecified,
                Metric::WaitCount,
            ],
            forbid_obligation_noncompliance: true,
            extra_policies: vec!["safe.aopl".into()],
        }
    }

    pub fn normal() -> Self {
        BehaviorMode {
            name: "normal".into(),
            priority_order: vec![
                Metric::SubgoalCount,
                Metric::WaitCount,
                Metric::PercentageUnderspecified,
                Metric::PercentageStronglyCompliant,
            ],
            forbid_obligation_noncompliance: true,
            extra_policies: vec!["normal.aopl".into()],
        }
    }

    pub fn risky() -> Self {
        BehaviorMode {
            name: "risky".into(),
            priority_order: vec![Metric::SubgoalCount, Metric::WaitCount],
            forbid_obligation_noncompliance: false,
            extra_policies: Vec::new(),
        }
    }

    pub fn builtin() -> Vec<BehaviorMode> {
        vec![Self::safe(), Self::normal(), Self::risky()]
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.priority_order.is_empty() {
            return Err(PlanError::InvalidMode(format!(
                "mode `{}` has an empty priority order",
                self.name
            )));
        }
        for (i, m) in self.priority_order.iter().enumerate() {
            if self.priority_order[..i].contains(m) {
                return Err(PlanError::InvalidMode(format!(
                    "mode `{}` lists `{m}` twice",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Display name with a leading capital, as used in plan listings.
    pub fn title(&self) -> String {
        let mut c = self.name.chars();
        match c.next() {
            Some(first) => first.to_uppercase().chain(c).collect(),
            None => String::new(),
        }
    }
}

/// Lexicographic comparison along the mode's priority order.
pub fn compare_lex(
    a: &MetricVector,
    b: &MetricVector,
    mode: &BehaviorMode,
) -> Result<Ordering, PlanError> {
    for &m in &mode.priority_order {
        let x = a.get(m).ok_or(PlanError::MissingMetric(m))?;
        let y = b.get(m).ok_or(PlanError::MissingMetric(m))?;
        match x.cmp(&y) {
            Ordering::Equal => continue,
            other => return Ok(other),
        }
    }
    Ok(Ordering::Equal)
}

/// States `0..=horizon` and the actions between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub actions: Vec<ActionId>,
}

impl Trajectory {
    /// Replays `actions` from the scenario's initial state.
    pub fn replay(scenario: &Scenario, actions: &[ActionId]) -> Result<Self, DomainError> {
        let mut states = vec![scenario.initial().clone()];
        for &a in actions {
            let next = scenario.apply(states.last().expect("nonempty"), a)?;
            states.push(next);
        }
        Ok(Trajectory {
            states,
            actions: actions.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn truncated(&self, upto: usize) -> Trajectory {
        Trajectory {
            states: self.states[..=upto].to_vec(),
            actions: self.actions[..upto].to_vec(),
        }
    }
}

fn percentage(count: u32, denominator: u32) -> u32 {
    (100 * count).checked_div(denominator).unwrap_or(0)
}

/// Metrics of a complete trajectory over steps `n1..horizon`.
pub fn evaluate_metrics(
    trajectory: &Trajectory,
    n1: usize,
    evaluator: &PolicyEvaluator<'_>,
) -> Result<MetricVector, PlanError> {
    let scenario = evaluator.scenario();
    let horizon = trajectory.len();
    if n1 > horizon {
        return Err(PlanError::InvalidPrefix(format!(
            "n1 = {n1} exceeds the trajectory length {horizon}"
        )));
    }
    let mut strong = 0;
    let mut under = 0;
    let mut waits = 0;
    for i in n1..horizon {
        let action = trajectory.actions[i];
        let atom = scenario.action_atom(action);
        match evaluator.classify_authorization(&trajectory.states[i], atom)? {
            AuthorizationClass::StronglyCompliant => strong += 1,
            AuthorizationClass::Underspecified => under += 1,
            _ => {}
        }
        if action == scenario.wait() {
            waits += 1;
        }
    }
    let denominator = (horizon - n1) as u32;
    Ok(MetricVector::of(
        scenario.subgoal_count(trajectory.final_state()) as u32,
        percentage(strong, denominator),
        percentage(under, denominator),
        waits,
    ))
}

/// An optimal trajectory and its metric vector.
#[derive(Clone, Debug)]
pub struct Plan {
    pub trajectory: Trajectory,
    pub metrics: MetricVector,
}

struct Expansion {
    wait: Option<ActionVerdict>,
    moves: Vec<(ActionId, State, ActionVerdict)>,
}

struct Search<'e, 'a> {
    evaluator: &'e PolicyEvaluator<'a>,
    mode: &'e BehaviorMode,
    n1: usize,
    horizon: usize,
    subgoal_step_bound: usize,
    expansions: HashMap<State, Rc<Expansion>>,
    /// Pareto front of (strong, underspecified) counts per (step, state).
    visited: HashMap<(usize, State), Vec<(u32, u32)>>,
    path: Vec<ActionId>,
    best: Option<(Vec<u32>, Vec<ActionId>)>,
}

impl<'e, 'a> Search<'e, 'a> {
    fn expand(&mut self, state: &State) -> Result<Rc<Expansion>, PlanError> {
        if let Some(e) = self.expansions.get(state) {
            return Ok(e.clone());
        }
        let scenario = self.evaluator.scenario();
        let forbid = self.mode.forbid_obligation_noncompliance;
        let mut wait = None;
        let mut moves = Vec::new();
        for (id, verdict) in self.evaluator.action_verdicts(state)? {
            if !scenario.is_executable(state, id) || (forbid && !verdict.obligation_compliant) {
                continue;
            }
            if id == scenario.wait() {
                wait = Some(verdict);
            } else {
                moves.push((id, scenario.apply(state, id)?, verdict));
            }
        }
        let e = Rc::new(Expansion { wait, moves });
        self.expansions.insert(state.clone(), e.clone());
        Ok(e)
    }

    fn key(&self, values: [u32; 4]) -> Vec<u32> {
        self.mode
            .priority_order
            .iter()
            .map(|m| {
                values[Metric::ALL
                    .iter()
                    .position(|x| x == m)
                    .expect("known metric")]
            })
            .collect()
    }

    fn vector(&self, subgoals: u32, strong: u32, under: u32, waits: u32) -> [u32; 4] {
        let d = (self.horizon - self.n1) as u32;
        [subgoals, percentage(strong, d), percentage(under, d), waits]
    }

    fn improves(&self, key: &[u32]) -> bool {
        match &self.best {
            None => true,
            Some((best, _)) => key > best.as_slice(),
        }
    }

    fn dominated(&mut self, step: usize, state: &State, strong: u32, under: u32) -> bool {
        let front = self.visited.entry((step, state.clone())).or_default();
        if front.iter().any(|&(s, u)| s >= strong && u >= under) {
            return true;
        }
        front.retain(|&(s, u)| !(strong >= s && under >= u));
        front.push((strong, under));
        false
    }

    fn upper_bound(&self, step: usize, state: &State, strong: u32, under: u32) -> Vec<u32> {
        let scenario = self.evaluator.scenario();
        let total = scenario.subgoal_lits().len();
        let held = scenario.subgoal_count(state);
        let remaining = self.horizon - step;
        let subgoals = held + (total - held).min(remaining.saturating_mul(self.subgoal_step_bound));
        let r = remaining as u32;
        self.key(self.vector(subgoals as u32, strong + r, under + r, r))
    }

    fn visit(
        &mut self,
        step: usize,
        state: State,
        strong: u32,
        under: u32,
    ) -> Result<(), PlanError> {
        let scenario = self.evaluator.scenario();
        if step == self.horizon {
            let key =
                self.key(self.vector(scenario.subgoal_count(&state) as u32, strong, under, 0));
            if self.improves(&key) {
                self.best = Some((key, self.path.clone()));
            }
            return Ok(());
        }
        if !self.improves(&self.upper_bound(step, &state, strong, under)) {
            return Ok(());
        }
        if self.dominated(step, &state, strong, under) {
            return Ok(());
        }
        let expansion = self.expand(&state)?;
        let wait = scenario.wait();
        let mut waited = false;
        for (id, next, verdict) in &expansion.moves {
            if !waited && *id > wait {
                waited = true;
                self.try_wait_tail(step, &state, strong, under, expansion.wait)?;
            }
            let (s, u) = tally(strong, under, verdict.authorization, 1);
            self.path.push(*id);
            self.visit(step + 1, next.clone(), s, u)?;
            self.path.pop();
        }
        if !waited {
            self.try_wait_tail(step, &state, strong, under, expansion.wait)?;
        }
        Ok(())
    }

    /// Terminal candidate: wait from `step` until the horizon.
    fn try_wait_tail(
        &mut self,
        step: usize,
        state: &State,
        strong: u32,
        under: u32,
        verdict: Option<ActionVerdict>,
    ) -> Result<(), PlanError> {
        let Some(verdict) = verdict else {
            return Ok(());
        };
        let scenario = self.evaluator.scenario();
        let waits = (self.horizon - step) as u32;
        let (s, u) = tally(strong, under, verdict.authorization, waits);
        let key = self.key(self.vector(scenario.subgoal_count(state) as u32, s, u, waits));
        if self.improves(&key) {
            let mut path = self.path.clone();
            path.extend(std::iter::repeat_n(scenario.wait(), waits as usize));
            self.best = Some((key, path));
        }
        Ok(())
    }
}

fn tally(strong: u32, under: u32, class: AuthorizationClass, times: u32) -> (u32, u32) {
    match class {
        AuthorizationClass::StronglyCompliant => (strong + times, under),
        AuthorizationClass::Underspecified => (strong, under + times),
        _ => (strong, under),
    }
}

/// Finds a lexicographically optimal trajectory that extends `prefix`.
///
/// `prefix` holds the actions of steps `0..n1`; it is replayed but not
/// checked against the mode. Among co-optimal plans the one whose action
/// sequence is smallest in action order is returned.
pub fn plan(
    evaluator: &PolicyEvaluator<'_>,
    mode: &BehaviorMode,
    prefix: &[ActionId],
    n1: usize,
) -> Result<Plan, PlanError> {
    mode.validate()?;
    let scenario = evaluator.scenario();
    let horizon = scenario.horizon;
    if n1 > horizon {
        return Err(PlanError::InvalidPrefix(format!(
            "n1 = {n1} is beyond the horizon {horizon}"
        )));
    }
    if prefix.len() != n1 {
        return Err(PlanError::InvalidPrefix(format!(
            "prefix has {} actions but n1 = {n1}",
            prefix.len()
        )));
    }
    let fixed = Trajectory::replay(scenario, prefix)
        .map_err(|e| PlanError::InvalidPrefix(e.to_string()))?;
    let subgoal_step_bound = if scenario.has_static_laws() {
        usize::MAX
    } else {
        scenario.max_direct_effects()
    };
    let mut search = Search {
        evaluator,
        mode,
        n1,
        horizon,
        subgoal_step_bound,
        expansions: HashMap::new(),
        visited: HashMap::new(),
        path: Vec::new(),
        best: None,
    };
    search.visit(n1, fixed.final_state().clone(), 0, 0)?;
    let Some((_, tail)) = search.best else {
        return Err(PlanError::NoPlan {
            mode: mode.name.clone(),
        });
    };
    let mut actions = prefix.to_vec();
    actions.extend(tail);
    let trajectory = Trajectory::replay(scenario, &actions)?;
    let metrics = evaluate_metrics(&trajectory, n1, evaluator)?;
    Ok(Plan {
        trajectory,
        metrics,
    })
}
