//! Bottom-up labeling model checker over LTS^U.

use std::collections::HashMap;

use thiserror::Error;

use crate::formula::{AgentId, Formula};
use crate::model::{Lts, Ltsu, PlanSet, StateSet, Violation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    pub formula: Formula,
    pub states: StateSet,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("agent `{0}` has no strategies in the model")]
    UndeclaredAgent(AgentId),
    #[error("model does not validate: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Violation>),
    #[error("unknown state `{0}`")]
    UnknownState(String),
}

/// Extensions of every subformula of one formula, plus the first
/// witnessing cell for each true `Kh` subformula.
#[derive(Debug, Clone)]
pub struct Labeling {
    table: HashMap<Formula, StateSet>,
    witnesses: HashMap<Formula, usize>,
}

impl Labeling {
    pub fn get(&self, f: &Formula) -> Option<&StateSet> {
        self.table.get(f)
    }

    /// Index into `S_i` of the first cell witnessing a true `Kh` formula.
    pub fn witness(&self, f: &Formula) -> Option<usize> {
        self.witnesses.get(f).copied()
    }
}

/// First cell of `cells` that is strongly executable on `cond` and maps it
/// into `goal`. An empty `cond` is witnessed by the first cell.
pub fn kh_witness(lts: &Lts, cells: &[PlanSet], cond: &StateSet, goal: &StateSet) -> Option<usize> {
    if cond.is_empty() {
        return if cells.is_empty() { None } else { Some(0) };
    }
    cells.iter().position(|cell| {
        cell.plans.iter().all(|plan| {
            cond.iter().all(|u| match lts.run_strongly(plan, u) {
                Some(end) => end.is_subset(goal),
                None => false,
            })
        })
    })
}

fn ensure_checkable(m: &Ltsu, f: &Formula) -> Result<(), CheckError> {
    m.validate(&m.agents()).map_err(CheckError::InvalidModel)?;
    if let Some(a) = f.agents().into_iter().find(|a| !m.strategies.contains_key(a)) {
        return Err(CheckError::UndeclaredAgent(a));
    }
    Ok(())
}

/// Labels every subformula of `f`, children first.
pub fn label(m: &Ltsu, f: &Formula) -> Result<Labeling, CheckError> {
    ensure_checkable(m, f)?;
    let lts = &m.base;
    let mut table: HashMap<Formula, StateSet> = HashMap::new();
    let mut witnesses = HashMap::new();
    for g in f.subformulas() {
        let ext = match g {
            Formula::Atom(p) => lts.atom_states(p),
            Formula::Top => lts.all_states(),
            Formula::Bot => lts.empty_set(),
            Formula::Not(a) => table[&**a].complement(),
            Formula::Or(a, b) => {
                let mut s = table[&**a].clone();
                s.union_with(&table[&**b]);
                s
            }
            Formula::Kh(i, c, goal) => {
                let cells = &m.strategies[i];
                match kh_witness(lts, cells, &table[&**c], &table[&**goal]) {
                    Some(k) => {
                        witnesses.insert(g.clone(), k);
                        lts.all_states()
                    }
                    None => lts.empty_set(),
                }
            }
        };
        table.insert(g.clone(), ext);
    }
    Ok(Labeling { table, witnesses })
}

/// The set of states of `m` satisfying `f`.
pub fn extension(m: &Ltsu, f: &Formula) -> Result<Extension, CheckError> {
    let mut labeling = label(m, f)?;
    let states = labeling.table.remove(f).expect("root is labeled");
    Ok(Extension {
        formula: f.clone(),
        states,
    })
}

/// Truth of `f` at the named state.
pub fn check(m: &Ltsu, state: &str, f: &Formula) -> Result<bool, CheckError> {
    check_with_witness(m, state, f).map(|(b, _)| b)
}

/// Like [`check`], also returning the first witnessing cell when `f` is a
/// true `Kh` formula.
pub fn check_with_witness(m: &Ltsu, state: &str, f: &Formula) -> Result<(bool, Option<usize>), CheckError> {
    let s = m
        .base
        .state_index(state)
        .ok_or_else(|| CheckError::UnknownState(state.to_string()))?;
    let labeling = label(m, f)?;
    Ok((labeling.table[f].contains(s), labeling.witness(f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::model::countermodel;

    fn i() -> Vec<AgentId> {
        vec![AgentId::new("i").unwrap()]
    }

    fn ext(text: &str) -> Vec<String> {
        let m = countermodel();
        let f = parse(text, &i()).unwrap();
        m.base.set_to_names(&extension(&m, &f).unwrap().states)
    }

    const ALL: [&str; 4] = ["w", "u", "v", "x"];

    #[test]
    fn countermodel_extensions() {
        assert_eq!(ext("Kh[i](p,q)"), ALL);
        assert_eq!(ext("Kh[i](q,r)"), ALL);
        assert!(ext("Kh[i](p,r)").is_empty());
        assert!(ext("Kh[i](p,p)").is_empty());
        assert_eq!(ext("A(p -> p)"), ALL);
        assert_eq!(ext("p | r"), ["w", "v"]);
        assert_eq!(ext("~p"), ["u", "v", "x"]);
    }

    #[test]
    fn check_examples() {
        let m = countermodel();
        let f = |t: &str| parse(t, &i()).unwrap();
        assert!(check(&m, "w", &f("Kh[i](q,r)")).unwrap());
        assert!(!check(&m, "w", &f("bot")).unwrap());
        assert!(check(&m, "x", &f("Kh[i](p,q)")).unwrap());
        assert_eq!(
            check(&m, "zz", &f("p")),
            Err(CheckError::UnknownState("zz".into()))
        );
    }

    #[test]
    fn witnesses_are_first_cells() {
        let m = countermodel();
        let f = |t: &str| parse(t, &i()).unwrap();
        assert_eq!(check_with_witness(&m, "w", &f("Kh[i](p,q)")).unwrap(), (true, Some(0)));
        assert_eq!(check_with_witness(&m, "w", &f("Kh[i](q,r)")).unwrap(), (true, Some(1)));
        assert_eq!(check_with_witness(&m, "w", &f("Kh[i](bot,r)")).unwrap(), (true, Some(0)));
        assert_eq!(check_with_witness(&m, "w", &f("Kh[i](p,p)")).unwrap(), (false, None));
    }

    #[test]
    fn errors() {
        let m = countermodel();
        let j = AgentId::new("j").unwrap();
        let f = Formula::kh(j.clone(), Formula::Top, Formula::Top);
        assert_eq!(extension(&m, &f), Err(CheckError::UndeclaredAgent(j)));
        let mut bad = countermodel();
        bad.strategies.insert(AgentId::new("i").unwrap(), vec![]);
        assert!(matches!(extension(&bad, &Formula::Top), Err(CheckError::InvalidModel(_))));
    }

    #[test]
    fn universal_modality() {
        let m = countermodel();
        let f = |t: &str| parse(t, &i()).unwrap();
        assert!(extension(&m, &f("A p")).unwrap().states.is_empty());
        assert!(extension(&m, &f("A top")).unwrap().states.is_full());
        assert!(extension(&m, &f("E r")).unwrap().states.is_full());
        assert!(extension(&m, &f("E (p & q)")).unwrap().states.is_empty());
    }
}
