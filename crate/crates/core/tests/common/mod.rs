//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use normplan_core::aopl::{parse_policy, Policy, PolicyDocument, PolicyEvaluator};
use normplan_core::catalog::{PolicyLibrary, ScenarioCatalog};
use normplan_core::domain::{ActionId, Scenario};
use normplan_core::logic::{answer_sets, GroundProgram, GroundRule};
use normplan_core::planner::{
    compare_lex, evaluate_metrics, plan, BehaviorMode, MetricVector, Trajectory,
};
use normplan_core::{Atom, Literal};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn catalog() -> ScenarioCatalog {
    ScenarioCatalog::load(repo_root().join("scenarios/mining")).expect("scenario directory")
}

pub fn library() -> PolicyLibrary {
    PolicyLibrary::load(repo_root().join("policies/mining")).expect("mining policies")
}

pub fn scenario(id: &str) -> Arc<Scenario> {
    catalog().get(id).unwrap_or_else(|| panic!("scenario {id}"))
}

pub fn mode(name: &str) -> BehaviorMode {
    BehaviorMode::builtin()
        .into_iter()
        .find(|m| m.name == name)
        .expect("built-in mode")
}

pub fn action_names(scenario: &Scenario, actions: &[ActionId]) -> Vec<String> {
    actions
        .iter()
        .map(|a| scenario.action_atom(*a).to_string())
        .collect()
}

// ---- answer sets ----

pub const ATOMS: usize = 6;

pub fn literal(index: usize, negative: bool) -> Literal {
    Literal::with_sign(Atom::nullary(format!("a{index}")), !negative)
}

fn all_literals() -> Vec<Literal> {
    (0..ATOMS)
        .flat_map(|i| [literal(i, false), literal(i, true)])
        .collect()
}

pub fn random_program(rng: &mut StdRng) -> GroundProgram {
    let lits = all_literals();
    let pick = |rng: &mut StdRng| lits[rng.random_range(0..lits.len())].clone();
    let n = rng.random_range(1..=10);
    let mut rules = Vec::new();
    for _ in 0..n {
        let head = if rng.random_bool(0.1) {
            None
        } else {
            Some(pick(rng))
        };
        let pos: Vec<Literal> = (0..rng.random_range(0..=2)).map(|_| pick(rng)).collect();
        let neg: Vec<Literal> = (0..rng.random_range(0..=2)).map(|_| pick(rng)).collect();
        rules.push(GroundRule::new(head, pos, neg));
    }
    GroundProgram::new(rules)
}

/// Whether `candidate` is the least model of its own reduct, computed by
/// naive iteration. Inconsistent models and violated constraints fail.
fn naive_check(program: &GroundProgram, candidate: &BTreeSet<Literal>) -> bool {
    let reduced: Vec<&GroundRule> = program
        .rules()
        .iter()
        .filter(|r| r.neg_body.iter().all(|l| !candidate.contains(l)))
        .collect();
    let mut model: BTreeSet<Literal> = BTreeSet::new();
    loop {
        let mut changed = false;
        for r in &reduced {
            if r.pos_body.iter().all(|l| model.contains(l)) {
                match &r.head {
                    None => return false,
                    Some(h) => changed |= model.insert(h.clone()),
                }
            }
        }
        if !changed {
            break;
        }
    }
    if model.iter().any(|l| model.contains(&l.complement())) {
        return false;
    }
    &model == candidate
}

/// Every consistent literal set over the fixed atoms that is stable.
pub fn brute_force_answer_sets(program: &GroundProgram) -> Vec<BTreeSet<Literal>> {
    let mut out = Vec::new();
    for code in 0..3usize.pow(ATOMS as u32) {
        // each atom is absent, positive or negative
        let mut c = code;
        let mut set = BTreeSet::new();
        for i in 0..ATOMS {
            match c % 3 {
                1 => {
                    set.insert(literal(i, false));
                }
                2 => {
                    set.insert(literal(i, true));
                }
                _ => {}
            }
            c /= 3;
        }
        if naive_check(program, &set) {
            out.push(set);
        }
    }
    out.sort();
    out
}

/// Runs `cases` seeded random programs; returns a description per mismatch.
pub fn logic_oracle(cases: usize, seed: u64) -> Vec<String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut mismatches = Vec::new();
    for case in 0..cases {
        let program = random_program(&mut rng);
        assert!(program.head_literals().len() <= 12);
        let got = answer_sets(&program).expect("within branching bound");
        if got != brute_force_answer_sets(&program) {
            mismatches.push(format!("case {case}:\n{}", program.dump()));
        }
    }
    mismatches
}

// ---- planning ----

/// Exhaustive search over every trajectory the mode allows; returns the
/// best vector and the first sequence (in action order) attaining it.
pub fn enumerate_best(
    evaluator: &PolicyEvaluator<'_>,
    mode: &BehaviorMode,
    prefix: &[ActionId],
    n1: usize,
) -> Option<(MetricVector, Vec<ActionId>)> {
    let scenario = evaluator.scenario();
    let start = Trajectory::replay(scenario, prefix).ok()?;
    let mut best: Option<(MetricVector, Vec<ActionId>)> = None;
    let mut actions = prefix.to_vec();
    extend(
        evaluator,
        mode,
        n1,
        start.final_state().clone(),
        &mut actions,
        &mut best,
    );
    best
}

fn extend(
    evaluator: &PolicyEvaluator<'_>,
    mode: &BehaviorMode,
    n1: usize,
    state: normplan_core::domain::State,
    actions: &mut Vec<ActionId>,
    best: &mut Option<(MetricVector, Vec<ActionId>)>,
) {
    let scenario = evaluator.scenario();
    if actions.len() == scenario.horizon {
        let t = Trajectory::replay(scenario, actions).expect("executable");
        let v = evaluate_metrics(&t, n1, evaluator).expect("metrics");
        let better = match best {
            None => true,
            Some((b, _)) => compare_lex(&v, b, mode).unwrap() == Ordering::Greater,
        };
        if better {
            *best = Some((v, actions.clone()));
        }
        return;
    }
    let waited = actions.len() > n1 && actions.last() == Some(&scenario.wait());
    for a in scenario.ground_actions() {
        if !scenario.is_executable(&state, a) || (waited && a != scenario.wait()) {
            continue;
        }
        if mode.forbid_obligation_noncompliance
            && !evaluator
                .obligation_compliant(&state, scenario.action_atom(a))
                .expect("categorical")
        {
            continue;
        }
        let next = scenario.apply(&state, a).expect("executable");
        actions.push(a);
        extend(evaluator, mode, n1, next, actions, best);
        actions.pop();
    }
}

/// Extra policy for the planner oracle that makes every authorization
/// class occur.
pub const RICH_POLICY: &str = "\
permitted(collect(O))
-permitted(move(L1, L2)) if has_risk_level(L2, high)
r1: normally permitted(move(L1, L2)) if has_risk_level(L1, low)
r2: normally -permitted(move(L1, L2)) if has_ore(iron)
prefer(r2, r1)
";

pub struct OracleReport {
    pub cases: usize,
    pub mismatches: Vec<String>,
}

/// Planner against exhaustive enumeration on the 2x2 scenario for
/// horizons 1..=6, every built-in mode, two policy sets and two prefixes.
pub fn planner_oracle() -> OracleReport {
    let base = scenario("s7");
    let library = library();
    let rich = PolicyDocument::parse(RICH_POLICY).expect("rich policy");
    let mut report = OracleReport {
        cases: 0,
        mismatches: Vec::new(),
    };
    for horizon in 1..=6 {
        let s = base.with_horizon(horizon).expect("horizon");
        let prefixes: Vec<Vec<ActionId>> = vec![
            Vec::new(),
            vec![
                s.parse_action("move(l0,l1)").unwrap(),
                s.parse_action("collect(iron)").unwrap(),
            ],
        ];
        for mode in BehaviorMode::builtin() {
            let mode_doc = library.document(&mode.name).unwrap();
            let policies: Vec<(&str, Policy)> = vec![
                ("mode", mode_doc.ground(&s).unwrap()),
                ("rich", mode_doc.merge(&rich).unwrap().ground(&s).unwrap()),
            ];
            for (label, policy) in &policies {
                let evaluator = PolicyEvaluator::new(policy, &s);
                for prefix in &prefixes {
                    if prefix.len() > horizon {
                        continue;
                    }
                    report.cases += 1;
                    let n1 = prefix.len();
                    let want = enumerate_best(&evaluator, &mode, prefix, n1);
                    let got = plan(&evaluator, &mode, prefix, n1).ok();
                    let same = match (&want, &got) {
                        (None, None) => true,
                        (Some((v, seq)), Some(p)) => {
                            *v == p.metrics && *seq == p.trajectory.actions
                        }
                        _ => false,
                    };
                    if !same {
                        report.mismatches.push(format!(
                            "horizon {horizon}, {} mode, {label} policy, n1 {n1}: enumeration {:?}, planner {:?}",
                            mode.name,
                            want.map(|(v, a)| (v.to_string(), action_names(&s, &a))),
                            got.map(|p| (p.metrics.to_string(), action_names(&s, &p.trajectory.actions))),
                        ));
                    }
                }
            }
        }
    }
    report
}

pub fn direct_policy(scenario: &Scenario, text: &str) -> Policy {
    parse_policy(text, scenario).expect("policy")
}
