//! Knowing-how over plain LTSs, where any plan may be used, decided by a
//! breadth-first search over frontier sets.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::formula::{AgentId, Formula};
use crate::mcheck::Extension;
use crate::model::{Lts, Ltsu, Plan, PlanSet, StateSet};

pub const DEFAULT_MAX_STATES: usize = 15;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LtsError {
    #[error("formula mentions several agents ({0}); LTS semantics has a single agent")]
    MultiAgent(String),
    #[error("model has {states} states; plan search is limited to {limit}")]
    TooManyStates { states: usize, limit: usize },
    #[error("unknown state `{0}`")]
    UnknownState(String),
}

/// Shortest plan that is strongly executable on every state of `cond` and
/// leads only into `goal`; among the shortest, the least in declared action
/// order. `None` if no plan of any length works.
pub fn kh_lts(m: &Lts, cond: &StateSet, goal: &StateSet) -> Option<Plan> {
    let mut parent: HashMap<StateSet, Option<(StateSet, usize)>> = HashMap::new();
    let mut queue = VecDeque::new();
    parent.insert(cond.clone(), None);
    queue.push_back(cond.clone());
    while let Some(frontier) = queue.pop_front() {
        if frontier.is_subset(goal) {
            let mut actions = Vec::new();
            let mut at = &frontier;
            while let Some((prev, a)) = &parent[at] {
                actions.push(*a);
                at = prev;
            }
            actions.reverse();
            return Some(Plan::new(actions));
        }
        for a in 0..m.num_actions() {
            if frontier.iter().any(|v| m.successors(a, v).is_empty()) {
                continue;
            }
            let next = m.image_action(a, &frontier);
            if !parent.contains_key(&next) {
                parent.insert(next.clone(), Some((frontier.clone(), a)));
                queue.push_back(next);
            }
        }
    }
    None
}

/// Labeling of a formula under LTS semantics, with the plan found for each
/// true `Kh` subformula.
#[derive(Debug, Clone)]
pub struct LtsLabeling {
    pub table: HashMap<Formula, StateSet>,
    pub witnesses: HashMap<Formula, Plan>,
}

pub fn label_lts(m: &Lts, f: &Formula, max_states: usize) -> Result<LtsLabeling, LtsError> {
    let agents = f.agents();
    if agents.len() > 1 {
        let names: Vec<_> = agents.iter().map(AgentId::as_str).collect();
        return Err(LtsError::MultiAgent(names.join(", ")));
    }
    if !agents.is_empty() && m.num_states() > max_states {
        return Err(LtsError::TooManyStates {
            states: m.num_states(),
            limit: max_states,
        });
    }
    let mut table: HashMap<Formula, StateSet> = HashMap::new();
    let mut witnesses = HashMap::new();
    for g in f.subformulas() {
        let ext = match g {
            Formula::Atom(p) => m.atom_states(p),
            Formula::Top => m.all_states(),
            Formula::Bot => m.empty_set(),
            Formula::Not(a) => table[&**a].complement(),
            Formula::Or(a, b) => {
                let mut s = table[&**a].clone();
                s.union_with(&table[&**b]);
                s
            }
            Formula::Kh(_, c, goal) => match kh_lts(m, &table[&**c], &table[&**goal]) {
                Some(plan) => {
                    witnesses.insert(g.clone(), plan);
                    m.all_states()
                }
                None => m.empty_set(),
            },
        };
        table.insert(g.clone(), ext);
    }
    Ok(LtsLabeling { table, witnesses })
}

pub fn extension_lts(m: &Lts, f: &Formula) -> Result<Extension, LtsError> {
    extension_lts_with(m, f, DEFAULT_MAX_STATES)
}

pub fn extension_lts_with(m: &Lts, f: &Formula, max_states: usize) -> Result<Extension, LtsError> {
    let mut labeling = label_lts(m, f, max_states)?;
    Ok(Extension {
        formula: f.clone(),
        states: labeling.table.remove(f).expect("root is labeled"),
    })
}

pub fn check_lts(m: &Lts, state: &str, f: &Formula, max_states: usize) -> Result<bool, LtsError> {
    let s = m
        .state_index(state)
        .ok_or_else(|| LtsError::UnknownState(state.to_string()))?;
    Ok(extension_lts_with(m, f, max_states)?.states.contains(s))
}

/// All plans of length at most `max_len`, shortest first, then in declared
/// action order.
pub fn plans_up_to(num_actions: usize, max_len: usize) -> Vec<Plan> {
    let mut out = vec![Plan::empty()];
    let mut layer = vec![Plan::empty()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &layer {
            for a in 0..num_actions {
                let mut q = p.clone();
                q.push(a);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The LTS^U over the same base in which every agent has one singleton
/// cell per plan of length at most `max_len`.
pub fn lift_to_ultsclass(m: &Lts, agents: &[AgentId], max_len: usize) -> Ltsu {
    let cells: Vec<PlanSet> = plans_up_to(m.num_actions(), max_len)
        .into_iter()
        .map(PlanSet::singleton)
        .collect();
    let agents: HashSet<&AgentId> = agents.iter().collect();
    let strategies: BTreeMap<AgentId, Vec<PlanSet>> = agents
        .into_iter()
        .map(|a| (a.clone(), cells.clone()))
        .collect();
    Ltsu::new(m.clone(), strategies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::mcheck::extension;
    use crate::model::countermodel;

    fn i() -> Vec<AgentId> {
        vec![AgentId::new("i").unwrap()]
    }

    fn set(m: &Lts, names: &[&str]) -> StateSet {
        StateSet::from_states(m.num_states(), names.iter().map(|n| m.state_index(n).unwrap()))
    }

    #[test]
    fn search_examples() {
        let m = countermodel().base;
        let plan = kh_lts(&m, &set(&m, &["w"]), &set(&m, &["v"])).unwrap();
        assert_eq!(m.plan_to_string(&plan), "a.b");
        assert_eq!(kh_lts(&m, &m.empty_set(), &m.empty_set()), Some(Plan::empty()));
        assert_eq!(kh_lts(&m, &set(&m, &["w"]), &set(&m, &["w"])), Some(Plan::empty()));
        assert_eq!(kh_lts(&m, &set(&m, &["w"]), &m.empty_set()), None);
        // Among the shortest plans from w to {u, x}, a comes before c.
        let plan = kh_lts(&m, &set(&m, &["w"]), &set(&m, &["u", "x"])).unwrap();
        assert_eq!(m.plan_to_string(&plan), "a");
    }

    #[test]
    fn extension_examples() {
        let m = countermodel().base;
        let f = |t: &str| parse(t, &i()).unwrap();
        assert!(extension_lts(&m, &f("Kh[i](p,r)")).unwrap().states.is_full());
        assert!(extension_lts(&m, &f("Kh[i](p,p)")).unwrap().states.is_full());
        assert!(extension_lts(&m, &f("A p")).unwrap().states.is_empty());
        assert!(extension_lts(&m, &f("A (p | ~p)")).unwrap().states.is_full());
    }

    #[test]
    fn guards() {
        let m = countermodel().base;
        let two = vec![AgentId::new("i").unwrap(), AgentId::new("j").unwrap()];
        let f = parse("Kh[i](p,q) & Kh[j](p,q)", &two).unwrap();
        assert!(matches!(extension_lts(&m, &f), Err(LtsError::MultiAgent(_))));
        let g = parse("Kh[i](p,q)", &i()).unwrap();
        assert_eq!(
            extension_lts_with(&m, &g, 3),
            Err(LtsError::TooManyStates { states: 4, limit: 3 })
        );
        assert!(extension_lts_with(&m, &parse("p", &i()).unwrap(), 3).is_ok());
    }

    #[test]
    fn lifting() {
        let m = countermodel().base;
        let l0 = lift_to_ultsclass(&m, &i(), 0);
        assert_eq!(l0.cells(&i()[0]).unwrap(), &[PlanSet::singleton(Plan::empty())]);
        let l1 = lift_to_ultsclass(&m, &i(), 1);
        let shown: Vec<_> = l1.cells(&i()[0]).unwrap().iter().map(|c| m.plan_to_string(&c.plans[0])).collect();
        assert_eq!(shown, ["eps", "a", "b", "c"]);
        assert_eq!(l1.validate(&i()), Ok(()));
        let l2 = lift_to_ultsclass(&m, &i(), 2);
        let f = parse("Kh[i](p,r)", &i()).unwrap();
        assert_eq!(extension(&l2, &f).unwrap().states, extension_lts(&m, &f).unwrap().states);
    }
}
