use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use normplan_core::aopl::{PolicyDocument, PolicyEvaluator};
use normplan_core::catalog::{load_policy_file, PolicyLibrary, ScenarioCatalog};
use normplan_core::controller::{
    generate_plan_with_mode_changes, validate_schedule, ModeChange, ModeSchedule,
};
use normplan_core::domain::{reachable_states, Scenario};

#[derive(Parser)]
#[command(
    name = "normplan",
    version,
    about = "Plan under authorization and obligation policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Dirs {
    /// Directory of scenario JSON files
    #[arg(long, default_value = "scenarios/mining")]
    scenario_dir: PathBuf,
    /// Directory holding base.aopl and the mode policy files
    #[arg(long, default_value = "policies/mining")]
    policy_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Plan with an initial mode and optional timed mode changes
    Solve {
        /// Scenario id from the scenario directory, or a path to a JSON file
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "safe")]
        mode: String,
        /// A mode change as STEP:MODE; repeatable
        #[arg(long = "change", value_name = "STEP:MODE")]
        changes: Vec<String>,
        #[arg(long)]
        horizon: Option<usize>,
        /// Emit the annotated plan as JSON
        #[arg(long, conflicts_with = "text")]
        json: bool,
        /// Emit the plan listing (default)
        #[arg(long)]
        text: bool,
        #[command(flatten)]
        dirs: Dirs,
    },
    /// Check consistency and categoricity over all reachable states
    Analyze {
        #[arg(long)]
        scenario: String,
        /// A mode name or a policy file; repeatable, merged in order.
        /// Without any, the base policy is analyzed.
        #[arg(long = "policy")]
        policies: Vec<String>,
        #[command(flatten)]
        dirs: Dirs,
    },
    /// Scenario catalog commands
    Scenarios {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// List scenario ids and names
    List {
        #[arg(long)]
        json: bool,
        #[arg(long, default_value = "scenarios/mining")]
        scenario_dir: PathBuf,
    },
}

/// Writes to stdout; a closed pipe ends output quietly.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn load_scenario(spec: &str, dir: &Path) -> Result<Scenario> {
    let path = Path::new(spec);
    if path.is_file() {
        return Scenario::load(path).with_context(|| format!("loading {spec}"));
    }
    let catalog = ScenarioCatalog::load(dir)?;
    catalog
        .get(spec)
        .map(|s| (*s).clone())
        .ok_or_else(|| anyhow!("no scenario `{spec}` in {}", dir.display()))
}

fn parse_change(text: &str) -> ModeChange {
    let (step, mode) = match text.split_once(':') {
        Some((s, m)) => (s.trim(), m.trim()),
        None => (text.trim(), ""),
    };
    ModeChange {
        step: step.parse().ok(),
        mode: (!mode.is_empty()).then(|| mode.to_string()),
    }
}

fn solve(
    scenario: &str,
    mode: String,
    changes: &[String],
    horizon: Option<usize>,
    json: bool,
    dirs: &Dirs,
) -> Result<()> {
    let mut scenario = load_scenario(scenario, &dirs.scenario_dir)?;
    if let Some(h) = horizon {
        scenario = scenario.with_horizon(h)?;
    }
    let library = PolicyLibrary::load(&dirs.policy_dir)?;
    let schedule = ModeSchedule {
        initial_mode: mode,
        changes: changes.iter().map(|c| parse_change(c)).collect(),
    };
    let known: Vec<&str> = library.modes().map(|m| m.name.as_str()).collect();
    let issues = validate_schedule(&schedule, scenario.horizon, &known, None);
    if !issues.is_empty() {
        for issue in &issues {
            eprintln!("error [{}]: {}", issue.code, issue.message);
        }
        bail!("invalid schedule");
    }
    let plan = generate_plan_with_mode_changes(&scenario, &library, &schedule)?;
    if json {
        emit(&(serde_json::to_string_pretty(&plan)? + "\n"))?;
    } else {
        emit(&format!(
            "{}Subgoals achieved: {} of {}\n",
            plan.render_text(),
            plan.subgoals_achieved,
            scenario.subgoal_lits().len()
        ))?;
    }
    Ok(())
}

fn analyze(scenario: &str, policies: &[String], dirs: &Dirs) -> Result<()> {
    let scenario = load_scenario(scenario, &dirs.scenario_dir)?;
    let library = PolicyLibrary::load(&dirs.policy_dir)?;
    let doc = if policies.is_empty() {
        library.base().clone()
    } else {
        let mut doc = PolicyDocument::default();
        for p in policies {
            let part = if library.mode(p).is_some() {
                library.document(p)?.clone()
            } else {
                load_policy_file(p)?
            };
            doc = doc.merge(&part)?;
        }
        doc
    };
    let policy = doc.ground(&scenario)?;
    let states = reachable_states(&scenario)?;
    let report = PolicyEvaluator::new(&policy, &scenario).analyze(&states)?;
    emit(&(serde_json::to_string_pretty(&report)? + "\n"))
}

fn list(dir: &Path, json: bool) -> Result<()> {
    let catalog = ScenarioCatalog::load(dir)?;
    if json {
        let items: Vec<serde_json::Value> = catalog
            .iter()
            .map(|s| serde_json::json!({"id": s.id, "name": s.name, "horizon": s.horizon}))
            .collect();
        emit(&(serde_json::to_string_pretty(&items)? + "\n"))
    } else {
        let mut out = String::new();
        for s in catalog.iter() {
            out += &format!("{:<6} {:<45} horizon {}\n", s.id, s.name, s.horizon);
        }
        emit(&out)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            scenario,
            mode,
            changes,
            horizon,
            json,
            text: _,
            dirs,
        } => solve(&scenario, mode, &changes, horizon, json, &dirs),
        Command::Analyze {
            scenario,
            policies,
            dirs,
        } => analyze(&scenario, &policies, &dirs),
        Command::Scenarios {
            command: ScenarioCommand::List { json, scenario_dir },
        } => list(&scenario_dir, json),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
