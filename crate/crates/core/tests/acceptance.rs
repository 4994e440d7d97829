//! One PASS/FAIL line per acceptance criterion; exits non-zero when any
//! hard criterion fails. Soft checks only report.

mod common;

use std::time::{Duration, Instant};

use normplan_core::aopl::{AuthorizationClass, PolicyEvaluator};
use normplan_core::catalog::{load_policy_file, PolicyLibrary};
use normplan_core::controller::{generate_plan_with_mode_changes, AnnotatedPlan, ModeSchedule};
use normplan_core::domain::{reachable_states, Scenario};
use normplan_core::planner::MetricVector;

use common::{library, repo_root, scenario};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solve(
    s: &Scenario,
    lib: &PolicyLibrary,
    sched: &ModeSchedule,
) -> Result<(AnnotatedPlan, Duration), String> {
    let t = Instant::now();
    let p = generate_plan_with_mode_changes(s, lib, sched).map_err(|e| e.to_string())?;
    Ok((p, t.elapsed()))
}

fn collections(p: &AnnotatedPlan) -> Vec<&str> {
    p.steps
        .iter()
        .filter_map(|s| s.action.strip_prefix("collect(")?.strip_suffix(')'))
        .collect()
}

fn single_mode_plans() -> Check {
    let s = scenario("s1");
    let lib = library();
    let cases = [
        ("safe", 14, 0, ["gold", "silver", "iron"]),
        ("normal", 12, 2, ["gold", "silver", "iron"]),
        ("risky", 7, 7, ["silver", "iron", "gold"]),
    ];
    for (mode, non_wait, waits, order) in cases {
        let (p, took) = solve(&s, &lib, &ModeSchedule::new(mode))?;
        let want = MetricVector::of(3, 0, 100, waits);
        ensure(p.final_metrics == vec![want.clone()], || {
            format!("{mode}: metrics {:?}, want {want}", p.final_metrics)
        })?;
        ensure(p.non_wait_count() == non_wait, || {
            format!(
                "{mode}: {} non-wait actions, want {non_wait}",
                p.non_wait_count()
            )
        })?;
        ensure(collections(&p) == order, || {
            format!("{mode}: collection order {:?}", collections(&p))
        })?;
        ensure(took < Duration::from_secs(10), || {
            format!("{mode}: took {took:?}")
        })?;
    }
    Ok(())
}

fn mode_change_schedule() -> Check {
    let s = scenario("s1");
    let lib = library();
    let sched = ModeSchedule::new("safe")
        .change(3, "normal")
        .change(7, "risky");
    let (p, _) = solve(&s, &lib, &sched)?;
    ensure(p.non_wait_count() == 10, || {
        format!("{} non-wait actions", p.non_wait_count())
    })?;
    for (ore, step) in [("gold", 2), ("silver", 6), ("iron", 9)] {
        let at = p.step_of(&format!("collect({ore})"));
        ensure(at == Some(step), || {
            format!("{ore} collected at {at:?}, want {step}")
        })?;
    }
    // each iteration keeps the actions the previous one fixed
    let (first, _) = solve(&s, &lib, &ModeSchedule::new("safe"))?;
    let (second, _) = solve(&s, &lib, &ModeSchedule::new("safe").change(3, "normal"))?;
    ensure(first.actions()[..3] == second.actions()[..3], || {
        "prefix before step 3 changed".into()
    })?;
    ensure(second.actions()[..7] == p.actions()[..7], || {
        "prefix before step 7 changed".into()
    })
}

fn staged_escalation() -> Check {
    let s = scenario("s9");
    let lib = library();
    let (safe, _) = solve(&s, &lib, &ModeSchedule::new("safe"))?;
    ensure(safe.subgoals_achieved == 1, || {
        format!("safe: {} subgoals", safe.subgoals_achieved)
    })?;
    let last = safe
        .steps
        .iter()
        .rposition(|st| st.action != "wait")
        .unwrap_or(0);
    ensure(
        safe.steps[last + 1..].iter().all(|st| st.action == "wait"),
        || "safe: no wait tail".into(),
    )?;
    let (normal, _) = solve(&s, &lib, &ModeSchedule::new("normal"))?;
    ensure(normal.subgoals_achieved == 2, || {
        format!("normal: {} subgoals", normal.subgoals_achieved)
    })?;

    let (fast, _) = solve(
        &s,
        &lib,
        &ModeSchedule::new("safe")
            .change(2, "normal")
            .change(4, "risky"),
    )?;
    ensure(fast.subgoals_achieved == 3, || {
        format!("(2,4): {} subgoals", fast.subgoals_achieved)
    })?;
    let final_collection = fast
        .steps
        .iter()
        .rposition(|st| st.action.starts_with("collect("))
        .unwrap_or(0);
    ensure(
        fast.steps[..final_collection]
            .iter()
            .all(|st| st.action != "wait"),
        || "(2,4): waits before the final collection".into(),
    )?;

    let (slow, _) = solve(
        &s,
        &lib,
        &ModeSchedule::new("safe")
            .change(3, "normal")
            .change(6, "risky"),
    )?;
    ensure(slow.subgoals_achieved == 3, || {
        format!("(3,6): {} subgoals", slow.subgoals_achieved)
    })?;
    for mode in ["safe", "normal"] {
        let waits = slow
            .steps
            .iter()
            .filter(|st| st.mode == mode && st.action == "wait")
            .count();
        ensure(waits == 1, || {
            format!("(3,6): {waits} waits in the {mode} segment")
        })?;
    }
    Ok(())
}

fn consistency_analysis() -> Check {
    let s = scenario("s1");
    let states = reachable_states(&s).map_err(|e| e.to_string())?;
    let policy = library().policy("safe", &s).map_err(|e| e.to_string())?;
    let report = PolicyEvaluator::new(&policy, &s)
        .analyze(&states)
        .map_err(|e| e.to_string())?;
    ensure(report.consistent && report.categorical, || {
        format!(
            "base+safe: consistent {} categorical {}",
            report.consistent, report.categorical
        )
    })?;
    let demo = load_policy_file(repo_root().join("policies/demo/inconsistent.aopl"))
        .map_err(|e| e.to_string())?
        .ground(&s)
        .map_err(|e| e.to_string())?;
    let report = PolicyEvaluator::new(&demo, &s)
        .analyze(&states)
        .map_err(|e| e.to_string())?;
    ensure(!report.consistent, || {
        "demo policy reported consistent".into()
    })?;
    ensure(!report.witnesses["inconsistent"].is_empty(), || {
        "no witness state".into()
    })
}

fn strong_implies_weak() -> Check {
    let s = scenario("s1");
    let states = reachable_states(&s).map_err(|e| e.to_string())?;
    let lib = library();
    for mode in ["safe", "normal", "risky"] {
        let policy = lib.policy(mode, &s).map_err(|e| e.to_string())?;
        let ev = PolicyEvaluator::new(&policy, &s);
        for state in &states {
            for a in s.ground_actions() {
                let action = s.action_atom(a);
                let class = ev
                    .classify_authorization(state, action)
                    .map_err(|e| e.to_string())?;
                let weak = ev
                    .weakly_compliant(state, action)
                    .map_err(|e| e.to_string())?;
                ensure(
                    class != AuthorizationClass::StronglyCompliant || weak,
                    || format!("{mode}: {action} strong but not weak"),
                )?;
                let ambiguous = ev
                    .modality_ambiguous(state, action)
                    .map_err(|e| e.to_string())?;
                ensure(!ambiguous, || {
                    format!("{mode}: {action} is modality-ambiguous")
                })?;
            }
        }
    }
    Ok(())
}

fn answer_set_oracle() -> Check {
    let mismatches = common::logic_oracle(200, 0x5eed);
    ensure(mismatches.is_empty(), || {
        format!("{} mismatches", mismatches.len())
    })
}

fn planner_oracle() -> Check {
    let report = common::planner_oracle();
    ensure(report.mismatches.is_empty(), || {
        format!(
            "{} of {} cases differ: {}",
            report.mismatches.len(),
            report.cases,
            report.mismatches[0]
        )
    })
}

fn determinism() -> Check {
    let lib = library();
    let cases = [
        ("s1", ModeSchedule::new("safe")),
        ("s1", ModeSchedule::new("normal")),
        ("s1", ModeSchedule::new("risky")),
        (
            "s1",
            ModeSchedule::new("safe")
                .change(3, "normal")
                .change(7, "risky"),
        ),
        ("s9", ModeSchedule::new("safe")),
        ("s9", ModeSchedule::new("normal")),
        (
            "s9",
            ModeSchedule::new("safe")
                .change(2, "normal")
                .change(4, "risky"),
        ),
        (
            "s9",
            ModeSchedule::new("safe")
                .change(3, "normal")
                .change(6, "risky"),
        ),
    ];
    for (id, sched) in cases {
        let s = scenario(id);
        let mut outputs = Vec::new();
        for _ in 0..10 {
            let (p, _) = solve(&s, &lib, &sched)?;
            let mut bytes = serde_json::to_vec(&p).map_err(|e| e.to_string())?;
            bytes.extend(p.render_text().into_bytes());
            outputs.push(bytes);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
            format!("{id} {sched:?}: outputs differ between runs")
        })?;
    }
    Ok(())
}

/// Soft: solve times on s1 ordered safe >= normal >= risky.
fn solve_time_ordering() -> Check {
    let s = scenario("s1");
    let lib = library();
    let mut times = Vec::new();
    for mode in ["safe", "normal", "risky"] {
        let best = (0..3)
            .map(|_| solve(&s, &lib, &ModeSchedule::new(mode)).map(|(_, t)| t))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .min()
            .unwrap_or_default();
        times.push((mode, best));
    }
    let listing = times
        .iter()
        .map(|(m, t)| format!("{m} {:.1} ms", t.as_secs_f64() * 1000.0))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(times[0].1 >= times[1].1 && times[1].1 >= times[2].1, || {
        listing.clone()
    })
    .map(|_| println!("      {listing}"))
}

fn main() {
    let hard: [Criterion; 8] = [
        (
            "s1 single-mode plans (safe, normal, risky)",
            single_mode_plans,
        ),
        (
            "s1 schedule safe -> normal@3 -> risky@7",
            mode_change_schedule,
        ),
        ("s9 staged escalation", staged_escalation),
        (
            "policy consistency and categoricity analysis",
            consistency_analysis,
        ),
        (
            "strong compliance implies weak compliance, no ambiguity",
            strong_implies_weak,
        ),
        (
            "answer sets vs brute force, 200 random programs",
            answer_set_oracle,
        ),
        (
            "planner vs exhaustive enumeration, 2x2 grid",
            planner_oracle,
        ),
        ("determinism over 10 repeated solves", determinism),
    ];
    let mut failed = 0;
    for (name, check) in hard {
        match check() {
            Ok(()) => println!("PASS  {name}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    match solve_time_ordering() {
        Ok(()) => println!("PASS  (soft) s1 solve time safe >= normal >= risky"),
        Err(why) => {
            println!("SOFT-FAIL  (report only) s1 solve time safe >= normal >= risky: {why}")
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
