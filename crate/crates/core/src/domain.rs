//! Dynamic domains as explicit transition systems.
//!
//! A scenario file declares sorts, static and fluent schemas, action
//! schemas and causal laws with variables. Loading grounds everything
//! against the sorts once; afterwards states are bit vectors indexed by
//! ground fluent and transitions work on integer ids.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ParseError;
use crate::syntax::{self, Binding, LawSyntax, PAtom, PLiteral, PTerm};
use crate::term::{Atom, Literal, Term};

pub const DEFAULT_STATE_CAP: usize = 100_000;
pub const WAIT: &str = "wait";

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("parse error in {context}: {error}")]
    Parse { context: String, error: ParseError },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("action `{0}` is not executable in this state")]
    NotExecutable(String),
    #[error("action `{action}` has conflicting effects on `{fluent}`")]
    NondeterministicEffect { action: String, fluent: String },
    #[error("more than {cap} reachable states")]
    StateSpaceCapExceeded { cap: usize },
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario document: {0}")]
    Json(#[from] serde_json::Error),
}

fn invalid(msg: impl Into<String>) -> DomainError {
    DomainError::Validation(msg.into())
}

/// A predicate or action schema: a name plus one sort per argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub name: String,
    pub params: Vec<String>,
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            write!(f, "({})", self.params.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Static,
    Fluent,
    Action,
}

#[derive(Clone, Debug, Default)]
pub struct DomainSignature {
    pub sorts: BTreeMap<String, Vec<String>>,
    pub statics: Vec<Schema>,
    pub fluents: Vec<Schema>,
    pub actions: Vec<Schema>,
}

impl DomainSignature {
    pub fn lookup(&self, name: &str) -> Option<(SymbolKind, &Schema)> {
        let find = |v: &'_ [Schema]| v.iter().position(|s| s.name == name);
        if let Some(i) = find(&self.statics) {
            return Some((SymbolKind::Static, &self.statics[i]));
        }
        if let Some(i) = find(&self.fluents) {
            return Some((SymbolKind::Fluent, &self.fluents[i]));
        }
        find(&self.actions).map(|i| (SymbolKind::Action, &self.actions[i]))
    }

    fn validate(&self) -> Result<(), DomainError> {
        let mut seen = HashSet::new();
        for s in self
            .statics
            .iter()
            .chain(&self.fluents)
            .chain(&self.actions)
        {
            if !seen.insert(s.name.as_str()) {
                return Err(invalid(format!(
                    "`{}` is declared more than once among statics, fluents and actions",
                    s.name
                )));
            }
            for p in &s.params {
                if !self.sorts.contains_key(p) {
                    return Err(invalid(format!("schema `{s}` uses unknown sort `{p}`")));
                }
            }
        }
        match self.actions.iter().find(|a| a.name == WAIT) {
            Some(w) if w.params.is_empty() => Ok(()),
            Some(_) => Err(invalid("action `wait` must be nullary")),
            None => Err(invalid("the action `wait` must be declared")),
        }
    }

    fn check_object(&self, sort: &str, term: &Term, context: &str) -> Result<(), String> {
        let ok = match term {
            Term::Sym(s) => self.sorts.get(sort).is_some_and(|objs| objs.contains(s)),
            Term::Int(n) => self
                .sorts
                .get(sort)
                .is_some_and(|objs| objs.contains(&n.to_string())),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(format!(
                "`{term}` is not an object of sort `{sort}` in `{context}`"
            ))
        }
    }

    /// Checks a ground atom against its schema.
    pub fn check_atom(&self, atom: &Atom, want: SymbolKind) -> Result<(), String> {
        let Some((kind, schema)) = self.lookup(&atom.predicate) else {
            return Err(format!("unknown symbol `{}`", atom.predicate));
        };
        if kind != want {
            return Err(format!(
                "`{}` is a {kind:?}, expected a {want:?}",
                atom.predicate
            ));
        }
        if schema.params.len() != atom.args.len() {
            return Err(format!(
                "`{atom}` has {} arguments, schema `{schema}` expects {}",
                atom.args.len(),
                schema.params.len()
            ));
        }
        for (sort, arg) in schema.params.iter().zip(&atom.args) {
            self.check_object(sort, arg, &atom.to_string())?;
        }
        Ok(())
    }

    /// Assigns a sort to every variable by its argument positions.
    ///
    /// `permitted(..)` and `obl(..)` are looked through to the action they
    /// wrap. Constants are checked against the expected sort.
    pub fn infer_sorts<'a>(
        &self,
        atoms: impl IntoIterator<Item = &'a PAtom>,
    ) -> Result<BTreeMap<String, String>, String> {
        let mut sorts = BTreeMap::new();
        let mut vars = Vec::new();
        for atom in atoms {
            atom.collect_vars(&mut vars);
            self.infer_atom(atom, &mut sorts)?;
        }
        if let Some(v) = vars.iter().find(|v| !sorts.contains_key(*v)) {
            return Err(format!("cannot determine the sort of variable `{v}`"));
        }
        Ok(sorts)
    }

    fn infer_atom(&self, atom: &PAtom, sorts: &mut BTreeMap<String, String>) -> Result<(), String> {
        if matches!(atom.predicate.as_str(), "permitted" | "obl") {
            for arg in &atom.args {
                let inner = match arg {
                    PTerm::Neg(inner) => inner.as_ref(),
                    other => other,
                };
                let action = inner
                    .as_atom()
                    .ok_or_else(|| format!("`{arg}` is not an action in `{atom}`"))?;
                match self.lookup(&action.predicate) {
                    Some((SymbolKind::Action, _)) => self.infer_atom(&action, sorts)?,
                    _ => return Err(format!("unknown action `{}` in `{atom}`", action.predicate)),
                }
            }
            return Ok(());
        }
        let Some((_, schema)) = self.lookup(&atom.predicate) else {
            return Err(format!("unknown symbol `{}`", atom.predicate));
        };
        if schema.params.len() != atom.args.len() {
            return Err(format!(
                "`{atom}` has {} arguments, schema `{schema}` expects {}",
                atom.args.len(),
                schema.params.len()
            ));
        }
        for (sort, arg) in schema.params.iter().zip(&atom.args) {
            match arg {
                PTerm::Var(v) => match sorts.get(v) {
                    Some(prev) if prev != sort => {
                        return Err(format!(
                            "variable `{v}` used with sorts `{prev}` and `{sort}`"
                        ))
                    }
                    Some(_) => {}
                    None => {
                        sorts.insert(v.clone(), sort.clone());
                    }
                },
                other => {
                    let ground = other
                        .ground(&Binding::new())
                        .ok_or_else(|| format!("nested variables in `{atom}`"))?;
                    self.check_object(sort, &ground, &atom.to_string())?;
                }
            }
        }
        Ok(())
    }

    /// Every assignment of objects to the given variables, in sorted order.
    pub fn bindings(&self, sorts: &BTreeMap<String, String>) -> Vec<Binding> {
        let mut out = vec![Binding::new()];
        for (var, sort) in sorts {
            let objects = &self.sorts[sort];
            out = out
                .into_iter()
                .flat_map(|b| {
                    objects.iter().map(move |o| {
                        let mut b = b.clone();
                        b.insert(var.clone(), object_term(o));
                        b
                    })
                })
                .collect();
        }
        out
    }

    /// All instances of a schema over the sorts.
    fn instances(&self, schema: &Schema) -> Vec<Atom> {
        let mut out = vec![Vec::new()];
        for sort in &schema.params {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<Term>| {
                    self.sorts[sort].iter().map(move |o| {
                        let mut p = prefix.clone();
                        p.push(object_term(o));
                        p
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|args| Atom::new(schema.name.clone(), args))
            .collect()
    }
}

fn object_term(o: &str) -> Term {
    match o.parse::<i64>() {
        Ok(n) => Term::Int(n),
        Err(_) => Term::Sym(o.to_string()),
    }
}

/// A complete, consistent assignment of truth values to ground fluents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    values: Box<[bool]>,
}

impl State {
    pub fn holds(&self, fluent: FluentId) -> bool {
        self.values[fluent.0]
    }

    fn set(&mut self, fluent: FluentId, value: bool) {
        self.values[fluent.0] = value;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FluentId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ActionId(pub usize);

/// A fluent literal by id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FluentLit {
    pub fluent: FluentId,
    pub value: bool,
}

impl FluentLit {
    fn holds(&self, state: &State) -> bool {
        state.holds(self.fluent) == self.value
    }
}

fn all_hold(cond: &[FluentLit], state: &State) -> bool {
    cond.iter().all(|c| c.holds(state))
}

#[derive(Clone, Debug)]
struct Effect {
    cond: Vec<FluentLit>,
    effect: FluentLit,
}

#[derive(Clone, Debug)]
struct ActionModel {
    atom: Atom,
    effects: Vec<Effect>,
    impossible: Vec<Vec<FluentLit>>,
    /// An executability law with a purely static condition fires.
    statically_impossible: bool,
}

#[derive(Clone, Debug)]
struct StaticLaw {
    cond: Vec<FluentLit>,
    head: FluentLit,
}

/// One kind of causal law as declared (with variables).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CausalLaw {
    Dynamic {
        trigger: PAtom,
        head: PLiteral,
        conditions: Vec<PLiteral>,
    },
    Static {
        head: PLiteral,
        conditions: Vec<PLiteral>,
    },
    Executability {
        trigger: PAtom,
        conditions: Vec<PLiteral>,
    },
}

fn write_cond(f: &mut fmt::Formatter<'_>, cond: &[PLiteral]) -> fmt::Result {
    for (i, c) in cond.iter().enumerate() {
        f.write_str(if i == 0 { " if " } else { ", " })?;
        write!(f, "{c}")?;
    }
    Ok(())
}

impl fmt::Display for CausalLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CausalLaw::Dynamic {
                trigger,
                head,
                conditions,
            } => {
                write!(f, "{trigger} causes {head}")?;
                write_cond(f, conditions)
            }
            CausalLaw::Static { head, conditions } => {
                write!(f, "{head}")?;
                write_cond(f, conditions)
            }
            CausalLaw::Executability {
                trigger,
                conditions,
            } => {
                write!(f, "impossible {trigger}")?;
                write_cond(f, conditions)
            }
        }
    }
}

impl From<LawSyntax> for CausalLaw {
    fn from(law: LawSyntax) -> Self {
        match law {
            LawSyntax::Dynamic {
                action,
                effect,
                cond,
            } => CausalLaw::Dynamic {
                trigger: action,
                head: effect,
                conditions: cond,
            },
            LawSyntax::Static { head, cond } => CausalLaw::Static {
                head,
                conditions: cond,
            },
            LawSyntax::Impossible { action, cond } => CausalLaw::Executability {
                trigger: action,
                conditions: cond,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub id: String,
    pub row: usize,
    pub col: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridMarker {
    pub label: String,
    pub at: String,
}

/// Grid layout for visualization; not used by planning.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDisplay {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<GridCell>,
    #[serde(default)]
    pub markers: Vec<GridMarker>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum ActionDecl {
    Plain(String),
    Described {
        schema: String,
        #[serde(default)]
        describe: Option<String>,
    },
}

#[derive(Clone, Debug, Deserialize)]
struct StaticsDecl {
    #[serde(default)]
    schemas: Vec<String>,
    #[serde(default)]
    facts: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    id: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    description: Option<String>,
    sorts: BTreeMap<String, Vec<String>>,
    statics: StaticsDecl,
    fluents: Vec<String>,
    actions: Vec<ActionDecl>,
    #[serde(default)]
    laws: Vec<String>,
    initial: Vec<String>,
    #[serde(default)]
    subgoals: Vec<String>,
    horizon: i64,
    #[serde(default)]
    display: Option<GridDisplay>,
}

/// A fully grounded, validated planning scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub name: String,
    pub description: Option<String>,
    pub signature: DomainSignature,
    pub laws: Vec<CausalLaw>,
    pub statics_facts: BTreeSet<Atom>,
    pub subgoals: Vec<Literal>,
    pub horizon: usize,
    pub display: Option<GridDisplay>,
    fluents: Vec<Atom>,
    fluent_index: HashMap<Atom, FluentId>,
    actions: Vec<ActionModel>,
    action_index: HashMap<Atom, ActionId>,
    static_laws: Vec<StaticLaw>,
    descriptions: HashMap<String, String>,
    subgoal_lits: Vec<FluentLit>,
    initial: State,
    wait: ActionId,
}

fn parse_ctx<T>(context: &str, r: Result<T, ParseError>) -> Result<T, DomainError> {
    r.map_err(|error| DomainError::Parse {
        context: context.to_string(),
        error,
    })
}

fn parse_schema(text: &str) -> Result<Schema, DomainError> {
    let atom = parse_ctx(&format!("schema `{text}`"), syntax::parse_atom(text))?;
    let params = atom
        .args
        .iter()
        .map(|a| match a {
            PTerm::Sym(s) => Ok(s.clone()),
            other => Err(invalid(format!(
                "schema `{text}`: `{other}` is not a sort name"
            ))),
        })
        .collect::<Result<_, _>>()?;
    Ok(Schema {
        name: atom.predicate,
        params,
    })
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, DomainError> {
        let doc: ScenarioDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DomainError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn from_document(doc: ScenarioDocument) -> Result<Self, DomainError> {
        if doc.horizon < 1 {
            return Err(invalid(format!(
                "horizon must be at least 1, got {}",
                doc.horizon
            )));
        }
        let mut descriptions = HashMap::new();
        let mut action_schemas = Vec::new();
        for a in &doc.actions {
            let (schema, describe) = match a {
                ActionDecl::Plain(s) => (s, None),
                ActionDecl::Described { schema, describe } => (schema, describe.clone()),
            };
            let schema = parse_schema(schema)?;
            if let Some(d) = describe {
                descriptions.insert(schema.name.clone(), d);
            }
            action_schemas.push(schema);
        }
        let signature = DomainSignature {
            sorts: doc.sorts,
            statics: doc
                .statics
                .schemas
                .iter()
                .map(|s| parse_schema(s))
                .collect::<Result<_, _>>()?,
            fluents: doc
                .fluents
                .iter()
                .map(|s| parse_schema(s))
                .collect::<Result<_, _>>()?,
            actions: action_schemas,
        };
        signature.validate()?;

        let mut statics_facts = BTreeSet::new();
        for text in &doc.statics.facts {
            let lit = parse_ctx(
                &format!("static fact `{text}`"),
                syntax::parse_ground_literal(text),
            )?;
            if lit.negative {
                return Err(invalid(format!("static fact `{text}` must be positive")));
            }
            signature
                .check_atom(&lit.atom, SymbolKind::Static)
                .map_err(invalid)?;
            statics_facts.insert(lit.atom);
        }

        let fluents: Vec<Atom> = signature
            .fluents
            .iter()
            .flat_map(|s| signature.instances(s))
            .collect();
        let fluent_index = fluents
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), FluentId(i)))
            .collect();
        let mut action_atoms: Vec<Atom> = signature
            .actions
            .iter()
            .flat_map(|s| signature.instances(s))
            .collect();
        action_atoms.sort();
        let action_index: HashMap<Atom, ActionId> = action_atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), ActionId(i)))
            .collect();
        let wait = action_index[&Atom::nullary(WAIT)];

        let laws: Vec<CausalLaw> = doc
            .laws
            .iter()
            .map(|text| {
                parse_ctx(&format!("law `{text}`"), syntax::parse_law(text)).map(CausalLaw::from)
            })
            .collect::<Result<_, _>>()?;

        let mut scenario = Scenario {
            id: doc.id.clone(),
            name: doc.name.unwrap_or_else(|| doc.id.clone()),
            description: doc.description,
            signature,
            laws: Vec::new(),
            statics_facts,
            subgoals: Vec::new(),
            horizon: doc.horizon as usize,
            display: doc.display,
            fluents,
            fluent_index,
            actions: action_atoms
                .into_iter()
                .map(|atom| ActionModel {
                    atom,
                    effects: Vec::new(),
                    impossible: Vec::new(),
                    statically_impossible: false,
                })
                .collect(),
            action_index,
            static_laws: Vec::new(),
            descriptions,
            subgoal_lits: Vec::new(),
            initial: State {
                values: Box::new([]),
            },
            wait,
        };
        for law in &laws {
            scenario.ground_law(law)?;
        }
        scenario.laws = laws;

        let initial: Vec<Literal> = doc
            .initial
            .iter()
            .map(|t| {
                parse_ctx(
                    &format!("initial literal `{t}`"),
                    syntax::parse_ground_literal(t),
                )
            })
            .collect::<Result<_, _>>()?;
        scenario.initial = scenario.state_from_literals(&initial)?;

        for text in &doc.subgoals {
            let lit = parse_ctx(
                &format!("subgoal `{text}`"),
                syntax::parse_ground_literal(text),
            )?;
            let fl = scenario.fluent_lit(&lit).ok_or_else(|| {
                invalid(format!("subgoal `{text}` is not a ground fluent literal"))
            })?;
            scenario.subgoal_lits.push(fl);
            scenario.subgoals.push(lit);
        }
        Ok(scenario)
    }

    /// Copy of the scenario with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self, DomainError> {
        if horizon < 1 {
            return Err(invalid(format!(
                "horizon must be at least 1, got {horizon}"
            )));
        }
        let mut s = self.clone();
        s.horizon = horizon;
        Ok(s)
    }

    /// Grounds one law; static conditions are decided here and dropped.
    fn ground_law(&mut self, law: &CausalLaw) -> Result<(), DomainError> {
        let (trigger, head, conditions) = match law {
            CausalLaw::Dynamic {
                trigger,
                head,
                conditions,
            } => (Some(trigger), Some(head), conditions),
            CausalLaw::Static { head, conditions } => (None, Some(head), conditions),
            CausalLaw::Executability {
                trigger,
                conditions,
            } => (Some(trigger), None, conditions),
        };
        let text = law.to_string();
        let atoms: Vec<&PAtom> = trigger
            .into_iter()
            .chain(head.map(|h| &h.atom))
            .chain(conditions.iter().map(|c| &c.atom))
            .collect();
        let sorts = self
            .signature
            .infer_sorts(atoms.iter().copied())
            .map_err(|e| invalid(format!("law `{text}`: {e}")))?;
        if let Some(t) = trigger {
            if !matches!(
                self.signature.lookup(&t.predicate),
                Some((SymbolKind::Action, _))
            ) {
                return Err(invalid(format!("law trigger `{t}` is not an action")));
            }
        }
        if let Some(h) = head {
            if !matches!(
                self.signature.lookup(&h.atom.predicate),
                Some((SymbolKind::Fluent, _))
            ) {
                return Err(invalid(format!("law head `{h}` is not a fluent literal")));
            }
        }
        for c in conditions {
            if matches!(
                self.signature.lookup(&c.atom.predicate),
                Some((SymbolKind::Action, _))
            ) {
                return Err(invalid(format!(
                    "law condition `{c}` must not be an action"
                )));
            }
        }
        for binding in self.signature.bindings(&sorts) {
            let Some(cond) = self.ground_condition(conditions, &binding) else {
                continue;
            };
            let head = head.map(|h| {
                let lit = h.ground(&binding).expect("all variables bound");
                self.fluent_lit(&lit).expect("head sort-checked")
            });
            match trigger {
                Some(t) => {
                    let atom = t.ground(&binding).expect("all variables bound");
                    let id = self.action_index[&atom];
                    let model = &mut self.actions[id.0];
                    match head {
                        Some(effect) => model.effects.push(Effect { cond, effect }),
                        None if cond.is_empty() => model.statically_impossible = true,
                        None => model.impossible.push(cond),
                    }
                }
                None => self.static_laws.push(StaticLaw {
                    cond,
                    head: head.expect("static law has a head"),
                }),
            }
        }
        Ok(())
    }

    /// `None` when a static condition is false under this binding.
    fn ground_condition(
        &self,
        conditions: &[PLiteral],
        binding: &Binding,
    ) -> Option<Vec<FluentLit>> {
        let mut out = Vec::new();
        for c in conditions {
            let lit = c.ground(binding)?;
            match self.signature.lookup(&lit.atom.predicate) {
                Some((SymbolKind::Static, _)) => {
                    if self.statics_facts.contains(&lit.atom) == lit.negative {
                        return None;
                    }
                }
                _ => out.push(self.fluent_lit(&lit)?),
            }
        }
        Some(out)
    }

    pub fn fluent_id(&self, atom: &Atom) -> Option<FluentId> {
        self.fluent_index.get(atom).copied()
    }

    pub fn fluent_lit(&self, lit: &Literal) -> Option<FluentLit> {
        self.fluent_id(&lit.atom).map(|fluent| FluentLit {
            fluent,
            value: lit.is_positive(),
        })
    }

    pub fn fluent_atom(&self, id: FluentId) -> &Atom {
        &self.fluents[id.0]
    }

    pub fn fluent_atoms(&self) -> &[Atom] {
        &self.fluents
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    pub fn wait(&self) -> ActionId {
        self.wait
    }

    pub fn action_atom(&self, id: ActionId) -> &Atom {
        &self.actions[id.0].atom
    }

    /// Resolves a ground action; unknown names, arities or objects fail.
    pub fn action_id(&self, atom: &Atom) -> Result<ActionId, DomainError> {
        self.action_index
            .get(atom)
            .copied()
            .ok_or_else(|| DomainError::UnknownAction(atom.to_string()))
    }

    pub fn parse_action(&self, text: &str) -> Result<ActionId, DomainError> {
        let lit = parse_ctx(
            &format!("action `{text}`"),
            syntax::parse_ground_literal(text),
        )?;
        if lit.negative {
            return Err(DomainError::UnknownAction(text.to_string()));
        }
        self.action_id(&lit.atom)
    }

    /// Ground actions that no purely static executability law rules out,
    /// sorted by name and then arguments.
    pub fn ground_actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        self.actions
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.statically_impossible)
            .map(|(i, _)| ActionId(i))
    }

    pub fn is_ground_action(&self, atom: &Atom) -> bool {
        self.action_index
            .get(atom)
            .is_some_and(|id| !self.actions[id.0].statically_impossible)
    }

    /// Human-readable action text from the scenario's `describe` template.
    pub fn describe_action(&self, id: ActionId) -> String {
        let atom = self.action_atom(id);
        match self.descriptions.get(&atom.predicate) {
            Some(template) => {
                let mut out = template.clone();
                for (i, arg) in atom.args.iter().enumerate() {
                    out = out.replace(&format!("{{{i}}}"), &arg.to_string());
                }
                out
            }
            None => atom.to_string(),
        }
    }

    /// Builds a state from literals; the set must be complete and consistent.
    pub fn state_from_literals(&self, literals: &[Literal]) -> Result<State, DomainError> {
        let mut values: Vec<Option<bool>> = vec![None; self.fluents.len()];
        for lit in literals {
            let fl = self
                .fluent_lit(lit)
                .ok_or_else(|| invalid(format!("`{lit}` is not a ground fluent literal")))?;
            match values[fl.fluent.0] {
                Some(v) if v != fl.value => {
                    return Err(invalid(format!(
                        "initial state inconsistent on `{}`",
                        lit.atom
                    )))
                }
                _ => values[fl.fluent.0] = Some(fl.value),
            }
        }
        let missing: Vec<String> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| self.fluents[i].to_string())
            .collect();
        if !missing.is_empty() {
            return Err(invalid(format!(
                "initial state incomplete: no value for {}",
                missing.join(", ")
            )));
        }
        Ok(State {
            values: values.into_iter().map(|v| v.unwrap_or(false)).collect(),
        })
    }

    /// Every fluent literal true in the state, in fluent order.
    pub fn state_literals(&self, state: &State) -> Vec<Literal> {
        self.fluents
            .iter()
            .enumerate()
            .map(|(i, a)| Literal::with_sign(a.clone(), state.values[i]))
            .collect()
    }

    /// The positive fluents of a state; enough to identify it.
    pub fn describe_state(&self, state: &State) -> Vec<String> {
        self.fluents
            .iter()
            .enumerate()
            .filter(|(i, _)| state.values[*i])
            .map(|(_, a)| a.to_string())
            .collect()
    }

    pub fn holds(&self, state: &State, lit: &Literal) -> Option<bool> {
        self.fluent_lit(lit).map(|fl| fl.holds(state))
    }

    pub fn subgoal_count(&self, state: &State) -> usize {
        self.subgoal_lits.iter().filter(|l| l.holds(state)).count()
    }

    pub fn subgoal_lits(&self) -> &[FluentLit] {
        &self.subgoal_lits
    }

    /// Largest number of fluents one action can change directly.
    pub fn max_direct_effects(&self) -> usize {
        self.actions
            .iter()
            .map(|a| {
                a.effects
                    .iter()
                    .map(|e| e.effect.fluent)
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .max()
            .unwrap_or(0)
    }

    pub fn has_static_laws(&self) -> bool {
        !self.static_laws.is_empty()
    }

    pub fn is_executable(&self, state: &State, action: ActionId) -> bool {
        let model = &self.actions[action.0];
        !model.statically_impossible && !model.impossible.iter().any(|c| all_hold(c, state))
    }

    pub fn executable(&self, state: &State, action: &Atom) -> Result<bool, DomainError> {
        Ok(self.is_executable(state, self.action_id(action)?))
    }

    /// Next state: direct effects, inertia, then closure under static laws.
    pub fn apply(&self, state: &State, action: ActionId) -> Result<State, DomainError> {
        let model = &self.actions[action.0];
        if !self.is_executable(state, action) {
            return Err(DomainError::NotExecutable(model.atom.to_string()));
        }
        let conflict = |fluent: FluentId| DomainError::NondeterministicEffect {
            action: model.atom.to_string(),
            fluent: self.fluents[fluent.0].to_string(),
        };
        let mut direct: BTreeMap<FluentId, bool> = BTreeMap::new();
        for e in model.effects.iter().filter(|e| all_hold(&e.cond, state)) {
            match direct.insert(e.effect.fluent, e.effect.value) {
                Some(prev) if prev != e.effect.value => return Err(conflict(e.effect.fluent)),
                _ => {}
            }
        }
        let mut next = state.clone();
        for (&f, &v) in &direct {
            next.set(f, v);
        }
        if self.static_laws.is_empty() {
            return Ok(next);
        }
        // naive fixpoint; each round must change something, so the number
        // of rounds is bounded by the number of fluents unless laws cycle
        for _ in 0..=self.fluents.len() {
            let mut changed = false;
            for law in &self.static_laws {
                if all_hold(&law.cond, &next) && !law.head.holds(&next) {
                    if direct
                        .get(&law.head.fluent)
                        .is_some_and(|&v| v != law.head.value)
                    {
                        return Err(conflict(law.head.fluent));
                    }
                    next.set(law.head.fluent, law.head.value);
                    changed = true;
                }
            }
            if !changed {
                return Ok(next);
            }
        }
        Err(conflict(
            self.static_laws.first().expect("nonempty").head.fluent,
        ))
    }

    pub fn successor(&self, state: &State, action: &Atom) -> Result<State, DomainError> {
        self.apply(state, self.action_id(action)?)
    }

    /// Executable actions and their successors, in action order.
    pub fn transitions<'a>(
        &'a self,
        state: &'a State,
    ) -> impl Iterator<Item = (ActionId, State)> + 'a {
        self.ground_actions()
            .filter(move |a| self.is_executable(state, *a))
            .filter_map(move |a| self.apply(state, a).ok().map(|s| (a, s)))
    }

    /// Breadth-first closure from the initial state.
    pub fn reachable_states(&self, cap: usize) -> Result<Vec<State>, DomainError> {
        let mut seen: HashSet<State> = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(self.initial.clone());
        queue.push_back(self.initial.clone());
        while let Some(s) = queue.pop_front() {
            for a in self.ground_actions() {
                if !self.is_executable(&s, a) {
                    continue;
                }
                let next = self.apply(&s, a)?;
                if !seen.contains(&next) {
                    if seen.len() >= cap {
                        return Err(DomainError::StateSpaceCapExceeded { cap });
                    }
                    seen.insert(next.clone());
                    queue.push_back(next);
                }
            }
            order.push(s);
        }
        Ok(order)
    }
}

pub fn reachable_states(scenario: &Scenario) -> Result<Vec<State>, DomainError> {
    scenario.reachable_states(DEFAULT_STATE_CAP)
}
