//! Authorization and obligation policies.
//!
//! A policy is parsed into [`PolicyDocument`] (still with variables), then
//! grounded against a scenario into a [`Policy`]. For a state the policy is
//! translated into a ground logic program whose answer sets determine which
//! `permitted` and `obl` literals hold there.
//!
//! Translation of `lp(policy, state)`:
//!
//! * every literal of the state and every static fact becomes a fact;
//! * a strict statement `head if cond` becomes `head :- cond.`;
//! * a defeasible statement `d: normally head if cond` becomes
//!   `head :- cond, not ab(d, e), not head'.` where `head'` is the
//!   complement and `e` the statement's action;
//! * `prefer(d1, d2)` becomes `ab(d2, e) :- cond(d1).` for each pair of
//!   ground instances of d1 and d2 about the same action `e`.
//!
//! The `ab` atoms carry the subject action so that a preference between
//! rules with variables only defeats the instances it competes with.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::domain::{ActionId, Scenario, State, SymbolKind};
use crate::error::ParseError;
use crate::logic::{GroundProgram, GroundRule, LogicError, Solver};
use crate::syntax::{self, PLiteral, PTerm, PolicyHeadSyntax, PolicyLineSyntax};
use crate::term::{Atom, Literal, Term};

pub const PERMITTED: &str = "permitted";
pub const OBL: &str = "obl";
pub const PREFER: &str = "prefer";
pub const AB: &str = "ab";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("policy syntax error at {0}")]
    Parse(ParseError),
    #[error("line {line}: unknown label `{label}` in prefer")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: label `{label}` is used by more than one statement")]
    DuplicateLabel { line: usize, label: String },
    #[error("preferences form a cycle through `{0}`")]
    CyclicPreference(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("policy has no answer set in state {{{}}}", .0.join(", "))]
    InconsistentPolicyAt(Vec<String>),
    #[error("policy has {answer_sets} answer sets in state {{{}}}", .state.join(", "))]
    NotCategoricalAt {
        state: Vec<String>,
        answer_sets: usize,
    },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Authorization,
    Obligation,
}

/// An elementary action or, inside obligations, its negation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Happening {
    pub action: Atom,
    pub negated: bool,
}

impl Happening {
    fn to_term(&self) -> Term {
        let t = self.action.to_term();
        if self.negated {
            Term::Neg(Box::new(t))
        } else {
            t
        }
    }
}

impl fmt::Display for Happening {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// A ground policy statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyStatement {
    pub label: Option<String>,
    pub modality: Modality,
    pub positive: bool,
    pub subject: Happening,
    pub cond: Vec<Literal>,
    pub defeasible: bool,
}

impl PolicyStatement {
    pub fn head(&self) -> Literal {
        let pred = match self.modality {
            Modality::Authorization => PERMITTED,
            Modality::Obligation => OBL,
        };
        Literal::with_sign(Atom::new(pred, vec![self.subject.to_term()]), self.positive)
    }
}

impl fmt::Display for PolicyStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = &self.label {
            write!(f, "{d}: normally ")?;
        }
        write!(f, "{}", self.head())?;
        for (i, c) in self.cond.iter().enumerate() {
            f.write_str(if i == 0 { " if " } else { ", " })?;
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceStatement {
    pub stronger: String,
    pub weaker: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct RuleLine {
    line: usize,
    label: Option<String>,
    head: PolicyHeadSyntax,
    cond: Vec<PLiteral>,
}

/// A parsed, label-checked policy that may still contain variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PolicyDocument {
    rules: Vec<RuleLine>,
    preferences: Vec<(usize, PreferenceStatement)>,
}

impl PolicyDocument {
    pub fn parse(text: &str) -> Result<Self, PolicyError> {
        let mut doc = PolicyDocument::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if syntax::is_blank(raw) {
                continue;
            }
            let parsed =
                syntax::parse_policy_line(raw).map_err(|e| PolicyError::Parse(e.at_line(line)))?;
            match parsed {
                PolicyLineSyntax::Rule { label, head, cond } => {
                    if !head.obligation && matches!(head.subject, PTerm::Neg(_)) {
                        return Err(PolicyError::Invalid {
                            line,
                            message: "authorizations apply to actions, not negated actions".into(),
                        });
                    }
                    if let Some(c) = cond.iter().find(|c| c.atom.predicate == PREFER) {
                        return Err(PolicyError::Invalid {
                            line,
                            message: format!("`{c}`: prefer atoms cannot appear in conditions"),
                        });
                    }
                    doc.rules.push(RuleLine {
                        line,
                        label,
                        head,
                        cond,
                    });
                }
                PolicyLineSyntax::Prefer { stronger, weaker } => {
                    doc.preferences
                        .push((line, PreferenceStatement { stronger, weaker }));
                }
            }
        }
        doc.check_labels()?;
        Ok(doc)
    }

    /// Concatenates two documents (e.g. a base policy and a mode's extras).
    pub fn merge(&self, other: &PolicyDocument) -> Result<Self, PolicyError> {
        let mut out = self.clone();
        out.rules.extend(other.rules.iter().cloned());
        out.preferences.extend(other.preferences.iter().cloned());
        out.check_labels()?;
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.preferences.is_empty()
    }

    fn check_labels(&self) -> Result<(), PolicyError> {
        let mut labels = HashSet::new();
        for r in &self.rules {
            if let Some(d) = &r.label {
                if !labels.insert(d.as_str()) {
                    return Err(PolicyError::DuplicateLabel {
                        line: r.line,
                        label: d.clone(),
                    });
                }
            }
        }
        let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (line, p) in &self.preferences {
            for d in [&p.stronger, &p.weaker] {
                if !labels.contains(d.as_str()) {
                    return Err(PolicyError::UnknownLabel {
                        line: *line,
                        label: d.clone(),
                    });
                }
            }
            edges.entry(&p.stronger).or_default().push(&p.weaker);
        }
        // depth-first search for a back edge
        fn visit<'a>(
            n: &'a str,
            edges: &BTreeMap<&'a str, Vec<&'a str>>,
            color: &mut HashMap<&'a str, u8>,
        ) -> Option<&'a str> {
            color.insert(n, 1);
            for &m in edges.get(n).into_iter().flatten() {
                match color.get(m) {
                    Some(1) => return Some(m),
                    Some(_) => {}
                    None => {
                        if let Some(c) = visit(m, edges, color) {
                            return Some(c);
                        }
                    }
                }
            }
            color.insert(n, 2);
            None
        }
        let mut color = HashMap::new();
        for &n in edges.keys() {
            if !color.contains_key(n) {
                if let Some(c) = visit(n, &edges, &mut color) {
                    return Err(PolicyError::CyclicPreference(c.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Instantiates variables over the scenario's sorts.
    ///
    /// Static conditions are decided during grounding; instances whose
    /// subject is not a ground action of the scenario are dropped.
    pub fn ground(&self, scenario: &Scenario) -> Result<Policy, PolicyError> {
        let sig = &scenario.signature;
        let mut statements = Vec::new();
        for r in &self.rules {
            let invalid = |message: String| PolicyError::Invalid {
                line: r.line,
                message,
            };
            let subject_term = match &r.head.subject {
                PTerm::Neg(inner) => inner.as_ref(),
                other => other,
            };
            let action = subject_term
                .as_atom()
                .ok_or_else(|| invalid(format!("`{}` is not an action", r.head.subject)))?;
            if !matches!(sig.lookup(&action.predicate), Some((SymbolKind::Action, _))) {
                return Err(invalid(format!("unknown action `{}`", action.predicate)));
            }
            for c in &r.cond {
                let p = c.atom.predicate.as_str();
                if p != PERMITTED && p != OBL {
                    match sig.lookup(p) {
                        Some((SymbolKind::Static | SymbolKind::Fluent, _)) => {}
                        Some((SymbolKind::Action, _)) => {
                            return Err(invalid(format!("action `{p}` used as a condition")))
                        }
                        None => return Err(invalid(format!("unknown symbol `{p}`"))),
                    }
                }
            }
            let sorts = sig
                .infer_sorts(std::iter::once(&action).chain(r.cond.iter().map(|c| &c.atom)))
                .map_err(invalid)?;
            for binding in sig.bindings(&sorts) {
                let ground_action = action.ground(&binding).expect("variables bound");
                if !scenario.is_ground_action(&ground_action) {
                    continue;
                }
                let mut cond = Vec::new();
                let mut holds = true;
                for c in &r.cond {
                    let lit = c.ground(&binding).expect("variables bound");
                    if matches!(
                        sig.lookup(&lit.atom.predicate),
                        Some((SymbolKind::Static, _))
                    ) {
                        if scenario.statics_facts.contains(&lit.atom) == lit.negative {
                            holds = false;
                            break;
                        }
                    } else {
                        cond.push(lit);
                    }
                }
                if !holds {
                    continue;
                }
                statements.push(PolicyStatement {
                    label: r.label.clone(),
                    modality: if r.head.obligation {
                        Modality::Obligation
                    } else {
                        Modality::Authorization
                    },
                    positive: r.head.positive,
                    subject: Happening {
                        action: ground_action,
                        negated: matches!(r.head.subject, PTerm::Neg(_)),
                    },
                    defeasible: r.label.is_some(),
                    cond,
                });
            }
        }
        Ok(Policy {
            statements,
            preferences: self.preferences.iter().map(|(_, p)| p.clone()).collect(),
        })
    }
}

/// A ground policy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Policy {
    pub statements: Vec<PolicyStatement>,
    pub preferences: Vec<PreferenceStatement>,
}

/// Parses and grounds a policy in one step.
pub fn parse_policy(text: &str, scenario: &Scenario) -> Result<Policy, PolicyError> {
    PolicyDocument::parse(text)?.ground(scenario)
}

fn ab(label: &str, subject: &Happening) -> Literal {
    Literal::pos(Atom::new(
        AB,
        vec![Term::sym(label), subject.action.to_term()],
    ))
}

/// Builds the ground program for a policy in a state.
pub fn translate(policy: &Policy, scenario: &Scenario, state: &State) -> GroundProgram {
    let mut rules: Vec<GroundRule> = scenario
        .state_literals(state)
        .into_iter()
        .chain(scenario.statics_facts.iter().cloned().map(Literal::pos))
        .map(GroundRule::fact)
        .collect();
    for s in &policy.statements {
        let head = s.head();
        let neg = match &s.label {
            Some(d) if s.defeasible => vec![ab(d, &s.subject), head.complement()],
            _ => Vec::new(),
        };
        rules.push(GroundRule::new(Some(head), s.cond.iter().cloned(), neg));
    }
    fn instances<'p>(
        policy: &'p Policy,
        label: &'p str,
    ) -> impl Iterator<Item = &'p PolicyStatement> {
        policy
            .statements
            .iter()
            .filter(move |s| s.label.as_deref() == Some(label))
    }
    for p in &policy.preferences {
        for strong in instances(policy, &p.stronger) {
            for weak in
                instances(policy, &p.weaker).filter(|w| w.subject.action == strong.subject.action)
            {
                rules.push(GroundRule::new(
                    Some(ab(&p.weaker, &weak.subject)),
                    strong.cond.iter().cloned(),
                    [],
                ));
            }
        }
    }
    GroundProgram::new(rules)
}

/// The `permitted`/`obl` literals that hold in a state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolicyMap {
    pub literals: BTreeSet<Literal>,
    pub categorical_here: bool,
    pub answer_sets: usize,
}

impl PolicyMap {
    pub fn contains(&self, lit: &Literal) -> bool {
        self.literals.contains(lit)
    }

    fn obligations(&self) -> impl Iterator<Item = (&Term, bool)> {
        self.literals
            .iter()
            .filter(|l| l.is_positive() && l.predicate() == OBL)
            .filter_map(|l| l.atom.args.first())
            .map(|t| match t {
                Term::Neg(inner) => (inner.as_ref(), true),
                other => (other, false),
            })
    }
}

fn is_policy_literal(l: &Literal) -> bool {
    matches!(l.predicate(), PERMITTED | OBL)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorizationClass {
    StronglyCompliant,
    WeaklyCompliantOnly,
    NonCompliant,
    Underspecified,
}

impl fmt::Display for AuthorizationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuthorizationClass::StronglyCompliant => "strongly compliant",
            AuthorizationClass::WeaklyCompliantOnly => "weakly compliant",
            AuthorizationClass::NonCompliant => "non-compliant",
            AuthorizationClass::Underspecified => "underspecified",
        })
    }
}

fn permitted(action: &Atom) -> Literal {
    Literal::pos(Atom::new(PERMITTED, vec![action.to_term()]))
}

fn obl(action: &Atom, negated: bool) -> Literal {
    Literal::pos(Atom::new(
        OBL,
        vec![Happening {
            action: action.clone(),
            negated,
        }
        .to_term()],
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub state: Vec<String>,
    pub answer_sets: usize,
}

/// Consistency and categoricity over a set of states.
#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub consistent: bool,
    pub categorical: bool,
    pub states_checked: usize,
    /// `inconsistent` and `non_categorical` witness states.
    pub witnesses: BTreeMap<String, Vec<Witness>>,
}

#[derive(Debug)]
struct Verdict {
    answer_sets: Vec<BTreeSet<Literal>>,
}

impl Verdict {
    fn map(&self) -> PolicyMap {
        let mut sets = self.answer_sets.iter();
        let literals = match sets.next() {
            None => BTreeSet::new(),
            Some(first) => {
                let mut acc: BTreeSet<Literal> = first
                    .iter()
                    .filter(|l| is_policy_literal(l))
                    .cloned()
                    .collect();
                for s in sets {
                    acc.retain(|l| s.contains(l));
                }
                acc
            }
        };
        PolicyMap {
            literals,
            categorical_here: self.answer_sets.len() == 1,
            answer_sets: self.answer_sets.len(),
        }
    }
}

/// Evaluates one ground policy over the states of one scenario, caching
/// per-state results.
pub struct PolicyEvaluator<'a> {
    policy: &'a Policy,
    scenario: &'a Scenario,
    solver: Solver,
    cache: RwLock<HashMap<State, Arc<Result<PolicyMap, PolicyError>>>>,
}

impl<'a> PolicyEvaluator<'a> {
    pub fn new(policy: &'a Policy, scenario: &'a Scenario) -> Self {
        Self::with_solver(policy, scenario, Solver::default())
    }

    pub fn with_solver(policy: &'a Policy, scenario: &'a Scenario, solver: Solver) -> Self {
        PolicyEvaluator {
            policy,
            scenario,
            solver,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    fn evaluate(&self, state: &State) -> Arc<Result<PolicyMap, PolicyError>> {
        if let Some(hit) = self.cache.read().expect("cache lock").get(state) {
            return hit.clone();
        }
        let program = translate(self.policy, self.scenario, state);
        let result = self
            .solver
            .answer_sets(&program)
            .map(|answer_sets| Verdict { answer_sets }.map())
            .map_err(PolicyError::from);
        let result = Arc::new(result);
        self.cache
            .write()
            .expect("cache lock")
            .insert(state.clone(), result.clone());
        result
    }

    fn describe(&self, state: &State) -> Vec<String> {
        self.scenario.describe_state(state)
    }

    /// Cautious policy map; fails when the program has no answer set.
    pub fn policy_map(&self, state: &State) -> Result<PolicyMap, PolicyError> {
        self.with_map(state, false, PolicyMap::clone)
    }

    /// Runs `f` on the cached map of `state`, optionally requiring exactly
    /// one answer set.
    fn with_map<R>(
        &self,
        state: &State,
        categorical: bool,
        f: impl FnOnce(&PolicyMap) -> R,
    ) -> Result<R, PolicyError> {
        let verdict = self.evaluate(state);
        let map = verdict.as_ref().as_ref().map_err(Clone::clone)?;
        if map.answer_sets == 0 {
            return Err(PolicyError::InconsistentPolicyAt(self.describe(state)));
        }
        if categorical && !map.categorical_here {
            return Err(PolicyError::NotCategoricalAt {
                state: self.describe(state),
                answer_sets: map.answer_sets,
            });
        }
        Ok(f(map))
    }

    pub fn classify_authorization(
        &self,
        state: &State,
        action: &Atom,
    ) -> Result<AuthorizationClass, PolicyError> {
        self.with_map(state, true, |map| classify_in(map, action))
    }

    /// Authorization status when the policy may have several answer sets:
    /// strong and non-compliance are cautious, `WeaklyCompliantOnly` means
    /// some answer set permits the action but not all of them do.
    pub fn classify_authorization_cautious(
        &self,
        state: &State,
        action: &Atom,
    ) -> Result<AuthorizationClass, PolicyError> {
        let (class, categorical) = self.with_map(state, false, |map| {
            (classify_in(map, action), map.categorical_here)
        })?;
        if class != AuthorizationClass::Underspecified || categorical {
            return Ok(class);
        }
        let program = translate(self.policy, self.scenario, state);
        let sets = self.solver.answer_sets(&program)?;
        let p = permitted(action);
        let not_p = p.complement();
        if sets.iter().any(|s| s.contains(&p) || s.contains(&not_p)) {
            Ok(AuthorizationClass::WeaklyCompliantOnly)
        } else {
            Ok(AuthorizationClass::Underspecified)
        }
    }

    /// Weak compliance: `-permitted(e)` is not entailed.
    pub fn weakly_compliant(&self, state: &State, action: &Atom) -> Result<bool, PolicyError> {
        self.with_map(state, false, |map| {
            !map.contains(&permitted(action).complement())
        })
    }

    /// Obligation compliance of executing the single action `action`.
    pub fn obligation_compliant(&self, state: &State, action: &Atom) -> Result<bool, PolicyError> {
        self.with_map(state, true, |map| obligation_compliant_in(map, action))
    }

    pub fn modality_ambiguous(&self, state: &State, action: &Atom) -> Result<bool, PolicyError> {
        self.with_map(state, true, |map| {
            map.contains(&obl(action, false)) && map.contains(&permitted(action).complement())
        })
    }

    /// Per-action verdicts for a state, in the scenario's action order.
    pub fn action_verdicts(
        &self,
        state: &State,
    ) -> Result<Vec<(ActionId, ActionVerdict)>, PolicyError> {
        self.with_map(state, true, |map| {
            self.scenario
                .ground_actions()
                .map(|id| {
                    let atom = self.scenario.action_atom(id);
                    (
                        id,
                        ActionVerdict {
                            authorization: classify_in(map, atom),
                            obligation_compliant: obligation_compliant_in(map, atom),
                        },
                    )
                })
                .collect()
        })
    }

    pub fn analyze<'s>(
        &self,
        states: impl IntoIterator<Item = &'s State>,
    ) -> Result<AnalysisReport, PolicyError> {
        let mut inconsistent = Vec::new();
        let mut non_categorical = Vec::new();
        let mut checked = 0;
        for state in states {
            checked += 1;
            let map = (*self.evaluate(state)).clone()?;
            let witness = || Witness {
                state: self.describe(state),
                answer_sets: map.answer_sets,
            };
            match map.answer_sets {
                0 => inconsistent.push(witness()),
                1 => {}
                _ => non_categorical.push(witness()),
            }
        }
        let consistent = inconsistent.is_empty();
        let categorical = consistent && non_categorical.is_empty();
        let mut witnesses = BTreeMap::new();
        witnesses.insert("inconsistent".to_string(), inconsistent);
        witnesses.insert("non_categorical".to_string(), non_categorical);
        Ok(AnalysisReport {
            consistent,
            categorical,
            states_checked: checked,
            witnesses,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionVerdict {
    pub authorization: AuthorizationClass,
    pub obligation_compliant: bool,
}

fn classify_in(map: &PolicyMap, action: &Atom) -> AuthorizationClass {
    let p = permitted(action);
    if map.contains(&p) {
        AuthorizationClass::StronglyCompliant
    } else if map.contains(&p.complement()) {
        AuthorizationClass::NonCompliant
    } else {
        AuthorizationClass::Underspecified
    }
}

fn obligation_compliant_in(map: &PolicyMap, action: &Atom) -> bool {
    let term = action.to_term();
    map.obligations()
        .all(|(t, negated)| if negated { *t != term } else { *t == term })
}

pub fn policy_map(
    policy: &Policy,
    scenario: &Scenario,
    state: &State,
) -> Result<PolicyMap, PolicyError> {
    PolicyEvaluator::new(policy, scenario).policy_map(state)
}

pub fn analyze<'s>(
    policy: &Policy,
    scenario: &Scenario,
    states: impl IntoIterator<Item = &'s State>,
) -> Result<AnalysisReport, PolicyError> {
    PolicyEvaluator::new(policy, scenario).analyze(states)
}
