//! Ground normal logic programs with classical negation and constraints,
//! evaluated under the answer-set (stable model) semantics.
//!
//! Programs produced from a policy and a single state are small, so answer
//! sets are found by guess-and-check: a candidate is fixed by which
//! default-negated literals it contains, the Gelfond-Lifschitz reduct is
//! closed under forward chaining, and the result is kept when it reproduces
//! the guess.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::term::{Atom, Literal};

/// Default bound on the number of guessed literals.
pub const DEFAULT_MAX_BRANCHING: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("candidate set contains the complementary literals {0} and its complement")]
    InconsistentSet(Literal),
    #[error("program branches on {branching} literals, more than the limit of {limit}")]
    ProgramTooLarge { branching: usize, limit: usize },
    #[error("least model requires a program without default negation")]
    NotPositive,
}

/// `head :- pos_body, not neg_body.`; a missing head makes a constraint.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundRule {
    pub head: Option<Literal>,
    pub pos_body: BTreeSet<Literal>,
    pub neg_body: BTreeSet<Literal>,
}

impl GroundRule {
    pub fn fact(head: Literal) -> Self {
        GroundRule {
            head: Some(head),
            pos_body: BTreeSet::new(),
            neg_body: BTreeSet::new(),
        }
    }

    pub fn new(
        head: Option<Literal>,
        pos_body: impl IntoIterator<Item = Literal>,
        neg_body: impl IntoIterator<Item = Literal>,
    ) -> Self {
        GroundRule {
            head,
            pos_body: pos_body.into_iter().collect(),
            neg_body: neg_body.into_iter().collect(),
        }
    }

    pub fn is_fact(&self) -> bool {
        self.head.is_some() && self.pos_body.is_empty() && self.neg_body.is_empty()
    }

    fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.head
            .iter()
            .chain(self.pos_body.iter())
            .chain(self.neg_body.iter())
    }
}

impl fmt::Display for GroundRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(h) = &self.head {
            write!(f, "{h}")?;
            if self.pos_body.is_empty() && self.neg_body.is_empty() {
                return f.write_str(".");
            }
            f.write_str(" ")?;
        }
        f.write_str(":-")?;
        let body = self
            .pos_body
            .iter()
            .map(|l| l.to_string())
            .chain(self.neg_body.iter().map(|l| format!("not {l}")));
        for (i, b) in body.enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            f.write_str(&b)?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundProgram {
    rules: Vec<GroundRule>,
    herbrand: BTreeSet<Atom>,
}

impl GroundProgram {
    pub fn new(rules: impl IntoIterator<Item = GroundRule>) -> Self {
        let rules: Vec<GroundRule> = rules.into_iter().collect();
        let herbrand = rules
            .iter()
            .flat_map(|r| r.literals().map(|l| l.atom.clone()))
            .collect();
        GroundProgram { rules, herbrand }
    }

    pub fn rules(&self) -> &[GroundRule] {
        &self.rules
    }

    /// Every atom mentioned by some rule.
    pub fn herbrand(&self) -> &BTreeSet<Atom> {
        &self.herbrand
    }

    pub fn head_literals(&self) -> BTreeSet<Literal> {
        self.rules.iter().filter_map(|r| r.head.clone()).collect()
    }

    pub fn is_positive(&self) -> bool {
        self.rules.iter().all(|r| r.neg_body.is_empty())
    }

    /// One rule per line in `head :- b1, not c1.` form.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

impl FromIterator<GroundRule> for GroundProgram {
    fn from_iter<I: IntoIterator<Item = GroundRule>>(iter: I) -> Self {
        GroundProgram::new(iter)
    }
}

/// Result of forward chaining a positive program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Closure {
    Model(BTreeSet<Literal>),
    /// A complementary pair was derived or a constraint fired.
    Contradiction,
}

fn check_consistent<'a>(lits: impl IntoIterator<Item = &'a Literal>) -> Result<(), LogicError> {
    let set: BTreeSet<&Literal> = lits.into_iter().collect();
    for l in &set {
        if l.is_positive() && set.contains(&l.complement()) {
            return Err(LogicError::InconsistentSet((*l).clone()));
        }
    }
    Ok(())
}

/// Gelfond-Lifschitz reduct of `program` with respect to `candidate`.
pub fn reduct(
    program: &GroundProgram,
    candidate: &BTreeSet<Literal>,
) -> Result<GroundProgram, LogicError> {
    check_consistent(candidate)?;
    Ok(reduct_unchecked(program, |l| candidate.contains(l)))
}

fn reduct_unchecked(program: &GroundProgram, holds: impl Fn(&Literal) -> bool) -> GroundProgram {
    program
        .rules
        .iter()
        .filter(|r| !r.neg_body.iter().any(&holds))
        .map(|r| GroundRule {
            head: r.head.clone(),
            pos_body: r.pos_body.clone(),
            neg_body: BTreeSet::new(),
        })
        .collect()
}

/// Smallest set of literals closed under the rules of a positive program.
pub fn least_model(program: &GroundProgram) -> Result<Closure, LogicError> {
    if !program.is_positive() {
        return Err(LogicError::NotPositive);
    }
    Ok(close(program.rules.iter()))
}

/// Counter-based forward chaining; neg bodies of the input are ignored,
/// callers pass rules that are already reduced.
fn close<'a>(rules: impl Iterator<Item = &'a GroundRule>) -> Closure {
    match chain(rules, true) {
        Some(model) => Closure::Model(model),
        None => Closure::Contradiction,
    }
}

/// Forward chaining. A strict run fails on a fired constraint or a
/// complementary pair; a loose run skips constraints and treats `l` and
/// `-l` as unrelated atoms.
fn chain<'a>(
    rules: impl Iterator<Item = &'a GroundRule>,
    strict: bool,
) -> Option<BTreeSet<Literal>> {
    let rules: Vec<&GroundRule> = rules.filter(|r| strict || r.head.is_some()).collect();
    let mut waiting: HashMap<&Literal, Vec<usize>> = HashMap::new();
    let mut missing: Vec<usize> = Vec::with_capacity(rules.len());
    let mut queue: Vec<usize> = Vec::new();
    for (i, r) in rules.iter().enumerate() {
        missing.push(r.pos_body.len());
        for b in &r.pos_body {
            waiting.entry(b).or_default().push(i);
        }
        if r.pos_body.is_empty() {
            queue.push(i);
        }
    }
    let mut model: BTreeSet<Literal> = BTreeSet::new();
    while let Some(i) = queue.pop() {
        let head = rules[i].head.as_ref()?;
        if model.contains(head) {
            continue;
        }
        if strict && model.contains(&head.complement()) {
            return None;
        }
        model.insert(head.clone());
        if let Some(dependents) = waiting.get(head) {
            for &j in dependents {
                missing[j] -= 1;
                if missing[j] == 0 {
                    queue.push(j);
                }
            }
        }
    }
    Some(model)
}

/// Alternating fixpoint over the program with literals read as atoms:
/// every answer set contains the first set and lies within the second.
fn well_founded(program: &GroundProgram) -> (BTreeSet<Literal>, BTreeSet<Literal>) {
    let gamma = |assumed: &BTreeSet<Literal>| {
        let reduced = program
            .rules
            .iter()
            .filter(|r| !r.neg_body.iter().any(|l| assumed.contains(l)));
        chain(reduced, false).expect("loose chaining cannot fail")
    };
    let mut sure = BTreeSet::new();
    let mut possible = gamma(&sure);
    loop {
        let next_sure = gamma(&possible);
        let next_possible = gamma(&next_sure);
        if next_sure == sure && next_possible == possible {
            return (sure, possible);
        }
        sure = next_sure;
        possible = next_possible;
    }
}

/// Answer-set enumeration with a configurable branching bound.
#[derive(Clone, Copy, Debug)]
pub struct Solver {
    pub max_branching: usize,
}

impl Default for Solver {
    fn default() -> Self {
        Solver {
            max_branching: DEFAULT_MAX_BRANCHING,
        }
    }
}

impl Solver {
    pub fn new(max_branching: usize) -> Self {
        Solver { max_branching }
    }

    /// All answer sets, each sorted, in sorted order.
    ///
    /// Only literals that are both rule heads and default-negated somewhere
    /// can change the reduct. Of those, the ones the well-founded
    /// approximation decides are fixed and only the rest are guessed.
    pub fn answer_sets(
        &self,
        program: &GroundProgram,
    ) -> Result<Vec<BTreeSet<Literal>>, LogicError> {
        let heads = program.head_literals();
        let negated: BTreeSet<&Literal> = program
            .rules
            .iter()
            .flat_map(|r| r.neg_body.iter())
            .filter(|l| heads.contains(*l))
            .collect();
        let (sure, possible) = well_founded(program);
        let fixed: Vec<&Literal> = negated
            .iter()
            .copied()
            .filter(|l| sure.contains(*l))
            .collect();
        let branch: Vec<&Literal> = negated
            .iter()
            .copied()
            .filter(|l| possible.contains(*l) && !sure.contains(*l))
            .collect();
        if branch.len() > self.max_branching || branch.len() >= 64 {
            return Err(LogicError::ProgramTooLarge {
                branching: branch.len(),
                limit: self.max_branching,
            });
        }
        let mut found = BTreeSet::new();
        for mask in 0u64..(1u64 << branch.len()) {
            let guess: BTreeSet<&Literal> = branch
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, l)| *l)
                .chain(fixed.iter().copied())
                .collect();
            let reduced = program
                .rules
                .iter()
                .filter(|r| !r.neg_body.iter().any(|l| guess.contains(l)));
            let Closure::Model(model) = close(reduced) else {
                continue;
            };
            if negated
                .iter()
                .all(|l| model.contains(*l) == guess.contains(l))
            {
                found.insert(model);
            }
        }
        Ok(found.into_iter().collect())
    }

    pub fn cautious_entails(
        &self,
        program: &GroundProgram,
        lit: &Literal,
    ) -> Result<bool, LogicError> {
        let sets = self.answer_sets(program)?;
        Ok(!sets.is_empty() && sets.iter().all(|s| s.contains(lit)))
    }
}

pub fn answer_sets(program: &GroundProgram) -> Result<Vec<BTreeSet<Literal>>, LogicError> {
    Solver::default().answer_sets(program)
}

pub fn cautious_entails(program: &GroundProgram, lit: &Literal) -> Result<bool, LogicError> {
    Solver::default().cautious_entails(program, lit)
}

/// True when `candidate` is a consistent fixpoint of its own reduct.
pub fn is_stable(program: &GroundProgram, candidate: &BTreeSet<Literal>) -> bool {
    match reduct(program, candidate).and_then(|p| least_model(&p)) {
        Ok(Closure::Model(m)) => &m == candidate,
        _ => false,
    }
}
