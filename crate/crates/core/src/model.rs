//! Labeled transition systems, their uncertainty-based extension, and the
//! plan algebra (relation images and strong executability) both semantics
//! are built on.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::AgentId;

/// A set of states of one model, stored as a bit set over state indices.
/// Iteration is always in increasing index order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet(FixedBitSet);

impl StateSet {
    pub fn empty(universe: usize) -> Self {
        StateSet(FixedBitSet::with_capacity(universe))
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        StateSet(bits)
    }

    pub fn singleton(universe: usize, state: usize) -> Self {
        let mut s = StateSet::empty(universe);
        s.insert(state);
        s
    }

    pub fn from_states(universe: usize, states: impl IntoIterator<Item = usize>) -> Self {
        let mut s = StateSet::empty(universe);
        for x in states {
            s.insert(x);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.0.len()
    }

    pub fn insert(&mut self, state: usize) {
        self.0.insert(state);
    }

    pub fn remove(&mut self, state: usize) {
        self.0.set(state, false);
    }

    pub fn contains(&self, state: usize) -> bool {
        self.0.contains(state)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn is_full(&self) -> bool {
        self.0.is_full()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union_with(&mut self, other: &StateSet) {
        self.0.union_with(&other.0);
    }

    pub fn intersect_with(&mut self, other: &StateSet) {
        self.0.intersect_with(&other.0);
    }

    pub fn difference_with(&mut self, other: &StateSet) {
        self.0.difference_with(&other.0);
    }

    pub fn complement(&self) -> StateSet {
        let mut bits = self.0.clone();
        bits.toggle_range(..);
        StateSet(bits)
    }

    pub fn intersects(&self, other: &StateSet) -> bool {
        !self.0.is_disjoint(&other.0)
    }

    pub fn first(&self) -> Option<usize> {
        self.0.ones().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// A finite sequence of actions, given by their indices in the model's
/// action list. The empty plan is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Plan(Vec<usize>);

impl Plan {
    pub fn empty() -> Self {
        Plan(Vec::new())
    }

    pub fn new(actions: Vec<usize>) -> Self {
        Plan(actions)
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Initial segment of length `k`.
    pub fn prefix(&self, k: usize) -> Plan {
        Plan(self.0[..k].to_vec())
    }

    /// The action at 1-based position `k`.
    pub fn at(&self, k: usize) -> usize {
        self.0[k - 1]
    }

    pub fn then(&self, other: &Plan) -> Plan {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Plan(v)
    }

    pub fn push(&mut self, action: usize) {
        self.0.push(action);
    }
}

/// One indistinguishability cell: the plans an agent cannot tell apart.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlanSet {
    pub plans: Vec<Plan>,
}

impl PlanSet {
    pub fn new(plans: Vec<Plan>) -> Self {
        PlanSet { plans }
    }

    pub fn singleton(plan: Plan) -> Self {
        PlanSet { plans: vec![plan] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    NoStates,
    BadName(String),
    DuplicateState(String),
    DuplicateAction(String),
    UnknownState(String),
    UnknownAction(String),
    EmptyStrategies,
    EmptyCell,
    DuplicatePlan(String),
    CellsOverlap { other: usize, plan: String },
    MissingAgent,
    UndeclaredAgent,
    MissingStrategies,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::NoStates => write!(f, "state set is empty"),
            ViolationKind::BadName(n) => write!(f, "`{n}` is not a valid name"),
            ViolationKind::DuplicateState(n) => write!(f, "state `{n}` declared twice"),
            ViolationKind::DuplicateAction(n) => write!(f, "action `{n}` declared twice"),
            ViolationKind::UnknownState(n) => write!(f, "unknown state `{n}`"),
            ViolationKind::UnknownAction(n) => write!(f, "unknown action `{n}`"),
            ViolationKind::EmptyStrategies => write!(f, "S_i empty"),
            ViolationKind::EmptyCell => write!(f, "empty cell"),
            ViolationKind::DuplicatePlan(p) => write!(f, "plan {p} repeated inside the cell"),
            ViolationKind::CellsOverlap { other, plan } => {
                write!(f, "cells overlap (plan {plan} also in cell {other})")
            }
            ViolationKind::MissingAgent => write!(f, "declared agent has no strategies"),
            ViolationKind::UndeclaredAgent => write!(f, "strategies given for an undeclared agent"),
            ViolationKind::MissingStrategies => write!(f, "no `strategies` field"),
        }
    }
}

/// A structural problem with a model, with a path-like location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub kind: ViolationKind,
}

impl Violation {
    fn new(location: impl Into<String>, kind: ViolationKind) -> Self {
        Violation {
            location: location.into(),
            kind,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.kind)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid model:\n{}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

/// A labeled transition system: states, one relation per action, and a
/// valuation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    states: Vec<String>,
    actions: Vec<String>,
    valuation: Vec<BTreeSet<String>>,
    // succ[action][state] is sorted and duplicate free
    succ: Vec<Vec<Vec<usize>>>,
}

impl Lts {
    pub fn new(states: Vec<String>, actions: Vec<String>) -> Result<Self, ModelError> {
        let mut violations = Vec::new();
        if states.is_empty() {
            violations.push(Violation::new("states", ViolationKind::NoStates));
        }
        let mut seen = HashSet::new();
        for s in &states {
            if !valid_name(s) {
                violations.push(Violation::new("states", ViolationKind::BadName(s.clone())));
            } else if !seen.insert(s.as_str()) {
                violations.push(Violation::new("states", ViolationKind::DuplicateState(s.clone())));
            }
        }
        let mut seen = HashSet::new();
        for a in &actions {
            if !valid_name(a) {
                violations.push(Violation::new("actions", ViolationKind::BadName(a.clone())));
            } else if !seen.insert(a.as_str()) {
                violations.push(Violation::new("actions", ViolationKind::DuplicateAction(a.clone())));
            }
        }
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let n = states.len();
        Ok(Lts {
            valuation: vec![BTreeSet::new(); n],
            succ: vec![vec![Vec::new(); n]; actions.len()],
            states,
            actions,
        })
    }

    pub fn add_edge(&mut self, action: usize, from: usize, to: usize) {
        assert!(to < self.states.len(), "state index out of range");
        let list = &mut self.succ[action][from];
        if let Err(pos) = list.binary_search(&to) {
            list.insert(pos, to);
        }
    }

    pub fn remove_edge(&mut self, action: usize, from: usize, to: usize) {
        let list = &mut self.succ[action][from];
        if let Ok(pos) = list.binary_search(&to) {
            list.remove(pos);
        }
    }

    pub fn add_label(&mut self, state: usize, atom: impl Into<String>) {
        self.valuation[state].insert(atom.into());
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn labels(&self, state: usize) -> &BTreeSet<String> {
        &self.valuation[state]
    }

    /// States whose valuation contains `atom`.
    pub fn atom_states(&self, atom: &str) -> StateSet {
        StateSet::from_states(
            self.num_states(),
            (0..self.num_states()).filter(|&s| self.valuation[s].contains(atom)),
        )
    }

    pub fn successors(&self, action: usize, state: usize) -> &[usize] {
        &self.succ[action][state]
    }

    pub fn edges(&self, action: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ[action]
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn num_edges(&self) -> usize {
        self.succ.iter().flatten().map(Vec::len).sum()
    }

    pub fn empty_set(&self) -> StateSet {
        StateSet::empty(self.num_states())
    }

    pub fn all_states(&self) -> StateSet {
        StateSet::full(self.num_states())
    }

    /// `R_a(source)`.
    pub fn image_action(&self, action: usize, source: &StateSet) -> StateSet {
        let mut out = self.empty_set();
        for u in source.iter() {
            for &v in &self.succ[action][u] {
                out.insert(v);
            }
        }
        out
    }

    /// `R_plan(source)`, composing left to right; the empty plan is the identity.
    pub fn image_plan(&self, plan: &Plan, source: &StateSet) -> StateSet {
        plan.actions()
            .iter()
            .fold(source.clone(), |acc, &a| self.image_action(a, &acc))
    }

    /// Walks `plan` from `start`, keeping the frontier `R_{plan_k}(start)`.
    /// Returns the final frontier if every member of every intermediate
    /// frontier has a successor under the next action, `None` otherwise.
    pub fn run_strongly(&self, plan: &Plan, start: usize) -> Option<StateSet> {
        let mut frontier = StateSet::singleton(self.num_states(), start);
        for &a in plan.actions() {
            if frontier.iter().any(|v| self.succ[a][v].is_empty()) {
                return None;
            }
            frontier = self.image_action(a, &frontier);
        }
        Some(frontier)
    }

    pub fn is_strongly_executable_at(&self, plan: &Plan, state: usize) -> bool {
        self.run_strongly(plan, state).is_some()
    }

    /// States at which `plan` is strongly executable.
    pub fn se_states(&self, plan: &Plan) -> StateSet {
        StateSet::from_states(
            self.num_states(),
            (0..self.num_states()).filter(|&u| self.is_strongly_executable_at(plan, u)),
        )
    }

    /// States at which every plan of the cell is strongly executable.
    pub fn se_planset(&self, cell: &PlanSet) -> StateSet {
        let mut out = self.all_states();
        for plan in &cell.plans {
            out.intersect_with(&self.se_states(plan));
        }
        out
    }

    /// Union of the plan images over the cell.
    pub fn image_planset(&self, cell: &PlanSet, source: &StateSet) -> StateSet {
        let mut out = self.empty_set();
        for plan in &cell.plans {
            out.union_with(&self.image_plan(plan, source));
        }
        out
    }

    /// Human readable plan: action names joined by `.`, `eps` for the empty plan.
    pub fn plan_to_string(&self, plan: &Plan) -> String {
        if plan.is_empty() {
            return "eps".to_string();
        }
        plan.actions()
            .iter()
            .map(|&a| self.actions.get(a).map(String::as_str).unwrap_or("?"))
            .collect::<Vec<_>>()
            .join(".")
    }

    pub fn set_to_names(&self, set: &StateSet) -> Vec<String> {
        set.iter().map(|s| self.states[s].clone()).collect()
    }

    pub fn to_file(&self) -> ModelFile {
        let valuation = (0..self.num_states())
            .map(|s| (self.states[s].clone(), self.valuation[s].iter().cloned().collect()))
            .collect();
        let relations = (0..self.num_actions())
            .map(|a| {
                let pairs = self
                    .edges(a)
                    .map(|(u, v)| (self.states[u].clone(), self.states[v].clone()))
                    .collect();
                (self.actions[a].clone(), pairs)
            })
            .collect();
        ModelFile {
            states: self.states.clone(),
            actions: self.actions.clone(),
            valuation,
            relations,
            strategies: None,
            designated: None,
        }
    }

    fn plan_from_names(&self, names: &[String]) -> Result<Plan, String> {
        names
            .iter()
            .map(|n| self.action_index(n).ok_or_else(|| n.clone()))
            .collect::<Result<Vec<_>, _>>()
            .map(Plan)
    }

    fn plan_to_names(&self, plan: &Plan) -> Vec<String> {
        plan.actions().iter().map(|&a| self.actions[a].clone()).collect()
    }
}

/// An LTS together with, for each agent, a partition of its available
/// plans into indistinguishability cells. Cell order is significant: the
/// model checker reports the first witnessing cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ltsu {
    pub base: Lts,
    pub strategies: BTreeMap<AgentId, Vec<PlanSet>>,
}

impl Ltsu {
    pub fn new(base: Lts, strategies: BTreeMap<AgentId, Vec<PlanSet>>) -> Self {
        Ltsu { base, strategies }
    }

    pub fn agents(&self) -> Vec<AgentId> {
        self.strategies.keys().cloned().collect()
    }

    pub fn cells(&self, agent: &AgentId) -> Option<&[PlanSet]> {
        self.strategies.get(agent).map(Vec::as_slice)
    }

    /// Checks the partition conditions for every agent and that the agents
    /// with strategies are exactly `agents`. Reports every violation found.
    pub fn validate(&self, agents: &[AgentId]) -> Result<(), Vec<Violation>> {
        let mut violations = Vec::new();
        for a in agents {
            if !self.strategies.contains_key(a) {
                violations.push(Violation::new(format!("strategies.{a}"), ViolationKind::MissingAgent));
            }
        }
        for (agent, cells) in &self.strategies {
            let loc = format!("strategies.{agent}");
            if !agents.contains(agent) {
                violations.push(Violation::new(loc.clone(), ViolationKind::UndeclaredAgent));
            }
            if cells.is_empty() {
                violations.push(Violation::new(loc.clone(), ViolationKind::EmptyStrategies));
            }
            let mut owner: BTreeMap<&Plan, usize> = BTreeMap::new();
            for (k, cell) in cells.iter().enumerate() {
                let cloc = format!("{loc}[{k}]");
                if cell.plans.is_empty() {
                    violations.push(Violation::new(cloc.clone(), ViolationKind::EmptyCell));
                }
                let mut in_cell = HashSet::new();
                for plan in &cell.plans {
                    if let Some(&bad) = plan.actions().iter().find(|&&a| a >= self.base.num_actions()) {
                        violations.push(Violation::new(
                            cloc.clone(),
                            ViolationKind::UnknownAction(format!("#{bad}")),
                        ));
                        continue;
                    }
                    let shown = self.base.plan_to_string(plan);
                    if !in_cell.insert(plan) {
                        violations.push(Violation::new(cloc.clone(), ViolationKind::DuplicatePlan(shown)));
                        continue;
                    }
                    match owner.get(plan) {
                        Some(&other) => violations.push(Violation::new(
                            cloc.clone(),
                            ViolationKind::CellsOverlap { other, plan: shown },
                        )),
                        None => {
                            owner.insert(plan, k);
                        }
                    }
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    pub fn to_file(&self) -> ModelFile {
        let mut file = self.base.to_file();
        let strategies = self
            .strategies
            .iter()
            .map(|(agent, cells)| {
                let cells = cells
                    .iter()
                    .map(|cell| cell.plans.iter().map(|p| self.base.plan_to_names(p)).collect())
                    .collect();
                (agent.to_string(), cells)
            })
            .collect();
        file.strategies = Some(strategies);
        file
    }
}

/// On-disk JSON form of a model. `strategies` is absent for a plain LTS;
/// `designated` marks the witness state of a satisfiability certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    #[serde(default)]
    pub actions: Vec<String>,
    #[serde(default)]
    pub valuation: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategies: Option<BTreeMap<String, Vec<Vec<Vec<String>>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designated: Option<String>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model files always serialize");
        s.push('\n');
        s
    }

    pub fn to_lts(&self) -> Result<Lts, ModelError> {
        let mut lts = Lts::new(self.states.clone(), self.actions.clone())?;
        let mut violations = Vec::new();
        for (state, atoms) in &self.valuation {
            match lts.state_index(state) {
                Some(s) => {
                    for p in atoms {
                        if crate::formula::KEYWORDS.contains(&p.as_str())
                            || !p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                            || p.is_empty()
                        {
                            violations.push(Violation::new(
                                format!("valuation.{state}"),
                                ViolationKind::BadName(p.clone()),
                            ));
                        } else {
                            lts.add_label(s, p.clone());
                        }
                    }
                }
                None => violations.push(Violation::new(
                    "valuation",
                    ViolationKind::UnknownState(state.clone()),
                )),
            }
        }
        for (action, pairs) in &self.relations {
            let Some(a) = lts.action_index(action) else {
                violations.push(Violation::new(
                    "relations",
                    ViolationKind::UnknownAction(action.clone()),
                ));
                continue;
            };
            for (u, v) in pairs {
                match (lts.state_index(u), lts.state_index(v)) {
                    (Some(u), Some(v)) => lts.add_edge(a, u, v),
                    (su, _) => {
                        let missing = if su.is_none() { u } else { v };
                        violations.push(Violation::new(
                            format!("relations.{action}"),
                            ViolationKind::UnknownState(missing.clone()),
                        ));
                    }
                }
            }
        }
        if let Some(d) = &self.designated {
            if lts.state_index(d).is_none() {
                violations.push(Violation::new("designated", ViolationKind::UnknownState(d.clone())));
            }
        }
        if violations.is_empty() {
            Ok(lts)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    /// Builds the LTS^U. Partition conditions are not checked here; see
    /// [`Ltsu::validate`].
    pub fn to_ltsu(&self) -> Result<Ltsu, ModelError> {
        let base = self.to_lts()?;
        let Some(strategies) = &self.strategies else {
            return Err(ModelError::Invalid(vec![Violation::new(
                "strategies",
                ViolationKind::MissingStrategies,
            )]));
        };
        let mut violations = Vec::new();
        let mut out = BTreeMap::new();
        for (agent, cells) in strategies {
            let loc = format!("strategies.{agent}");
            let agent = match AgentId::new(agent.clone()) {
                Ok(a) => a,
                Err(_) => {
                    violations.push(Violation::new(loc, ViolationKind::BadName(agent.clone())));
                    continue;
                }
            };
            let mut parsed = Vec::new();
            for (k, cell) in cells.iter().enumerate() {
                let mut plans = Vec::new();
                for plan in cell {
                    match base.plan_from_names(plan) {
                        Ok(p) => plans.push(p),
                        Err(name) => violations.push(Violation::new(
                            format!("{loc}[{k}]"),
                            ViolationKind::UnknownAction(name),
                        )),
                    }
                }
                parsed.push(PlanSet::new(plans));
            }
            out.insert(agent, parsed);
        }
        if violations.is_empty() {
            Ok(Ltsu::new(base, out))
        } else {
            Err(ModelError::Invalid(violations))
        }
    }
}

impl Lts {
    pub fn from_json(text: &str) -> Result<Lts, ModelError> {
        ModelFile::from_json(text)?.to_lts()
    }
}

impl Ltsu {
    pub fn from_json(text: &str) -> Result<Ltsu, ModelError> {
        ModelFile::from_json(text)?.to_ltsu()
    }
}

/// The model used throughout the tests: EMP and COMPKh both fail in it.
///
/// States w, u, v, x with `p` at w, `q` at u, `r` at v; edges `w -a-> u`,
/// `u -b-> v`, `w -c-> x`; agent `i` has cells `{a}`, `{b}`, `{ab, c}`.
pub const COUNTERMODEL_JSON: &str = r#"{
  "states": ["w", "u", "v", "x"],
  "actions": ["a", "b", "c"],
  "valuation": {"w": ["p"], "u": ["q"], "v": ["r"], "x": []},
  "relations": {"a": [["w", "u"]], "b": [["u", "v"]], "c": [["w", "x"]]},
  "strategies": {"i": [[["a"]], [["b"]], [["a", "b"], ["c"]]]}
}
"#;

pub fn countermodel() -> Ltsu {
    Ltsu::from_json(COUNTERMODEL_JSON).expect("built-in countermodel is well formed")
}
