//! Satisfiability and validity over LTS^U by guessing the global truth
//! values of the `Kh` subformulas and building a small model that realizes
//! the guess.
//!
//! For a guess `T`, candidate states are the valuations over the atoms of
//! the input. Each true `Kh[i](c, g)` becomes one action of agent `i`
//! relating every `c`-state to every `g`-state, in a singleton cell; every
//! agent also gets a cell holding one action with an empty relation. States
//! whose presence would contradict the guess are removed until nothing
//! changes; the guess succeeds if the remaining states still satisfy the
//! input somewhere and the candidate, model checked, realizes `T` exactly.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{AgentId, Formula};
use crate::mcheck;
use crate::model::{Lts, Ltsu, ModelError, ModelFile, Plan, PlanSet, StateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatLimits {
    pub max_guesses: u64,
    pub max_candidate_states: usize,
}

impl Default for SatLimits {
    fn default() -> Self {
        SatLimits {
            max_guesses: 1 << 20,
            max_candidate_states: 1 << 12,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("no agents declared")]
    NoAgents,
    #[error("agent `{0}` is not declared")]
    UndeclaredAgent(AgentId),
    #[error("resource cap: {atoms} atoms need {needed} candidate states, limit is {limit}")]
    TooManyStates { atoms: usize, needed: u128, limit: usize },
    #[error("resource cap: {kh_atoms} Kh subformulas need {needed} guesses, limit is {limit}")]
    TooManyGuesses { kh_atoms: usize, needed: u128, limit: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
}

/// A model together with a state at which the input formula holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub model: Ltsu,
    pub state: String,
}

impl Certificate {
    pub fn to_file(&self) -> ModelFile {
        let mut file = self.model.to_file();
        file.designated = Some(self.state.clone());
        file
    }

    pub fn to_json(&self) -> String {
        self.to_file().to_json()
    }

    pub fn from_json(text: &str) -> Result<Certificate, ModelError> {
        let file = ModelFile::from_json(text)?;
        let model = file.to_ltsu()?;
        let state = match file.designated {
            Some(s) => s,
            None => model.base.state_names()[0].clone(),
        };
        Ok(Certificate { model, state })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatResult {
    pub verdict: Verdict,
    pub witness: Option<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Countermodel(Certificate),
}

/// Upper bound on the number of states of a certificate for `f`.
///
/// Atoms and constants count one state, negation nothing, disjunction the
/// sum. A `Kh` node counts the larger of its success case (a condition and a
/// goal witness on top of the children) and its failure case (a condition
/// witness plus two states for each other `Kh` subformula of the input).
pub fn size_bound(f: &Formula) -> u64 {
    fn go(f: &Formula, n: u64) -> u64 {
        match f {
            Formula::Atom(_) | Formula::Top | Formula::Bot => 1,
            Formula::Not(a) => go(a, n),
            Formula::Or(a, b) => go(a, n).saturating_add(go(b, n)),
            Formula::Kh(_, c, g) => {
                let (bc, bg) = (go(c, n), go(g, n));
                let success = bc.saturating_add(bg).saturating_add(2);
                let failure = (n.saturating_sub(1))
                    .saturating_mul(success)
                    .saturating_add(bc)
                    .saturating_add(1);
                success.max(failure)
            }
        }
    }
    go(f, f.kh_atoms().len() as u64)
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Atom(usize),
    Top,
    Bot,
    Not(usize),
    Or(usize, usize),
    Kh(usize),
}

struct KhInfo {
    agent: AgentId,
    formula: Formula,
    cond: usize,
    goal: usize,
}

/// The input flattened to a node array, children before parents.
struct Compiled {
    nodes: Vec<Node>,
    kh: Vec<KhInfo>,
    atoms: Vec<String>,
    atom_sets: Vec<StateSet>,
    universe: usize,
}

impl Compiled {
    fn new(f: &Formula) -> Compiled {
        let subs = f.subformulas();
        let index: std::collections::HashMap<&Formula, usize> =
            subs.iter().enumerate().map(|(k, g)| (*g, k)).collect();
        let atoms = f.atoms();
        let mut kh = Vec::new();
        let nodes = subs
            .iter()
            .map(|g| match g {
                Formula::Atom(p) => Node::Atom(atoms.iter().position(|a| a == p).unwrap()),
                Formula::Top => Node::Top,
                Formula::Bot => Node::Bot,
                Formula::Not(a) => Node::Not(index[&**a]),
                Formula::Or(a, b) => Node::Or(index[&**a], index[&**b]),
                Formula::Kh(i, c, goal) => {
                    kh.push(KhInfo {
                        agent: i.clone(),
                        formula: (*g).clone(),
                        cond: index[&**c],
                        goal: index[&**goal],
                    });
                    Node::Kh(kh.len() - 1)
                }
            })
            .collect();
        let universe = 1usize << atoms.len();
        let atom_sets = (0..atoms.len())
            .map(|k| StateSet::from_states(universe, (0..universe).filter(|v| v >> k & 1 == 1)))
            .collect();
        Compiled {
            nodes,
            kh,
            atoms,
            atom_sets,
            universe,
        }
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Extensions over all valuations with each `Kh` node fixed by `guess`.
    fn evaluate(&self, guess: u64) -> Vec<StateSet> {
        let mut out: Vec<StateSet> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let s = match *node {
                Node::Atom(k) => self.atom_sets[k].clone(),
                Node::Top => StateSet::full(self.universe),
                Node::Bot => StateSet::empty(self.universe),
                Node::Not(a) => out[a].complement(),
                Node::Or(a, b) => {
                    let mut s = out[a].clone();
                    s.union_with(&out[b]);
                    s
                }
                Node::Kh(k) => {
                    if guess >> k & 1 == 1 {
                        StateSet::full(self.universe)
                    } else {
                        StateSet::empty(self.universe)
                    }
                }
            };
            out.push(s);
        }
        out
    }
}

fn meet(a: &StateSet, b: &StateSet) -> StateSet {
    let mut s = a.clone();
    s.intersect_with(b);
    s
}

fn minus(a: &StateSet, b: &StateSet) -> StateSet {
    let mut s = a.clone();
    s.difference_with(b);
    s
}

/// Guesses in search order: fewer true atoms first, then lexicographic on
/// the sorted list of true atom indices.
fn guess_order(n: usize) -> Vec<u64> {
    let reverse = |r: u64| (0..n).fold(0u64, |acc, k| acc | ((r >> (n - 1 - k) & 1) << k));
    let mut rs: Vec<u64> = (0..1u64 << n).collect();
    rs.sort_by_key(|&r| (r.count_ones(), std::cmp::Reverse(r)));
    rs.into_iter().map(reverse).collect()
}

struct Search<'a> {
    c: &'a Compiled,
    agents: &'a [AgentId],
}

impl Search<'_> {
    fn is_true(guess: u64, k: usize) -> bool {
        guess >> k & 1 == 1
    }

    /// Largest set of valuations that does not contradict `guess` by
    /// itself, or `None` if the guess cannot be realized.
    fn surviving_states(&self, guess: u64, ext: &[StateSet]) -> Option<StateSet> {
        let c = self.c;
        let mut w = StateSet::full(c.universe);
        loop {
            let mut changed = false;
            for (k, a) in c.kh.iter().enumerate() {
                if Self::is_true(guess, k) {
                    let cond = meet(&ext[a.cond], &w);
                    if !cond.is_empty() && !ext[a.goal].intersects(&w) {
                        w.difference_with(&cond);
                        changed = true;
                    }
                    continue;
                }
                for (k2, b) in c.kh.iter().enumerate() {
                    if !Self::is_true(guess, k2) || b.agent != a.agent {
                        continue;
                    }
                    let escapes = meet(&minus(&ext[a.cond], &ext[b.cond]), &w);
                    let strays = meet(&minus(&ext[b.goal], &ext[a.goal]), &w);
                    let reach = meet(&ext[b.goal], &w);
                    if escapes.is_empty() && strays.is_empty() && !reach.is_empty() {
                        w.difference_with(&reach);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let false_ok = c
            .kh
            .iter()
            .enumerate()
            .all(|(k, a)| Self::is_true(guess, k) || ext[a.cond].intersects(&w));
        (false_ok && ext[c.root()].intersects(&w)).then_some(w)
    }

    /// A subset of `w` keeping one witness per existence requirement.
    fn prune(&self, guess: u64, ext: &[StateSet], w: &StateSet) -> StateSet {
        let c = self.c;
        let mut picked = StateSet::empty(c.universe);
        let require = |options: StateSet, picked: &mut StateSet| {
            let options = meet(&options, w);
            if !options.intersects(picked) {
                if let Some(s) = options.first() {
                    picked.insert(s);
                }
            }
        };
        require(ext[c.root()].clone(), &mut picked);
        for (k, a) in c.kh.iter().enumerate() {
            if Self::is_true(guess, k) {
                continue;
            }
            for (k2, b) in c.kh.iter().enumerate() {
                if Self::is_true(guess, k2) && b.agent == a.agent && ext[b.goal].intersects(w) {
                    let mut options = minus(&ext[a.cond], &ext[b.cond]);
                    options.union_with(&minus(&ext[b.goal], &ext[a.goal]));
                    require(options, &mut picked);
                }
            }
        }
        for (k, a) in c.kh.iter().enumerate() {
            if Self::is_true(guess, k) {
                if ext[a.cond].intersects(w) {
                    require(ext[a.goal].clone(), &mut picked);
                }
            } else {
                require(ext[a.cond].clone(), &mut picked);
            }
        }
        picked
    }

    fn build(&self, guess: u64, ext: &[StateSet], states: &StateSet) -> Ltsu {
        let c = self.c;
        let ids = states.to_vec();
        let names: Vec<String> = (0..ids.len()).map(|k| format!("s{k}")).collect();
        let true_atoms: Vec<usize> = (0..c.kh.len()).filter(|&k| Self::is_true(guess, k)).collect();
        let mut actions: Vec<String> = true_atoms.iter().map(|k| format!("kh{k}")).collect();
        actions.push("idle".to_string());
        let mut lts = Lts::new(names, actions).expect("generated names are valid");
        for (s, &v) in ids.iter().enumerate() {
            for (k, p) in c.atoms.iter().enumerate() {
                if v >> k & 1 == 1 {
                    lts.add_label(s, p.clone());
                }
            }
        }
        for (act, &k) in true_atoms.iter().enumerate() {
            let a = &c.kh[k];
            for (s, &u) in ids.iter().enumerate() {
                if !ext[a.cond].contains(u) {
                    continue;
                }
                for (t, &v) in ids.iter().enumerate() {
                    if ext[a.goal].contains(v) {
                        lts.add_edge(act, s, t);
                    }
                }
            }
        }
        let idle = true_atoms.len();
        let mut strategies = BTreeMap::new();
        for agent in self.agents {
            let mut cells: Vec<PlanSet> = true_atoms
                .iter()
                .enumerate()
                .filter(|(_, &k)| &c.kh[k].agent == agent)
                .map(|(act, _)| PlanSet::singleton(Plan::new(vec![act])))
                .collect();
            cells.push(PlanSet::singleton(Plan::new(vec![idle])));
            strategies.insert(agent.clone(), cells);
        }
        Ltsu::new(lts, strategies)
    }

    /// Model checks the candidate; returns the first state satisfying the
    /// input if the guess is realized exactly.
    fn realizes(&self, guess: u64, m: &Ltsu, root: &Formula) -> Option<usize> {
        let labeling = mcheck::label(m, root).ok()?;
        for (k, a) in self.c.kh.iter().enumerate() {
            let holds = labeling.get(&a.formula)?.is_full();
            if holds != Self::is_true(guess, k) {
                return None;
            }
        }
        labeling.get(root)?.first()
    }

    fn try_guess(&self, guess: u64, root: &Formula) -> Option<Certificate> {
        let ext = self.c.evaluate(guess);
        let w = self.surviving_states(guess, &ext)?;
        let small = self.prune(guess, &ext, &w);
        for states in [small, w] {
            let m = self.build(guess, &ext, &states);
            if let Some(s) = self.realizes(guess, &m, root) {
                let state = m.base.state_names()[s].clone();
                return Some(Certificate { model: m, state });
            }
        }
        None
    }
}

fn check_agents(f: &Formula, agents: &[AgentId]) -> Result<(), SatError> {
    if agents.is_empty() {
        return Err(SatError::NoAgents);
    }
    match f.agents().into_iter().find(|a| !agents.contains(a)) {
        Some(a) => Err(SatError::UndeclaredAgent(a)),
        None => Ok(()),
    }
}

pub fn satisfiable(f: &Formula, agents: &[AgentId]) -> Result<SatResult, SatError> {
    satisfiable_with(f, agents, &SatLimits::default())
}

pub fn satisfiable_with(f: &Formula, agents: &[AgentId], limits: &SatLimits) -> Result<SatResult, SatError> {
    check_agents(f, agents)?;
    let mut declared: Vec<AgentId> = Vec::new();
    for a in agents {
        if !declared.contains(a) {
            declared.push(a.clone());
        }
    }
    let atoms = f.atoms().len();
    let needed = 1u128 << atoms.min(127);
    if atoms >= 64 || needed > limits.max_candidate_states as u128 {
        return Err(SatError::TooManyStates {
            atoms,
            needed,
            limit: limits.max_candidate_states,
        });
    }
    let kh_atoms = f.kh_atoms().len();
    let needed = 1u128 << kh_atoms.min(127);
    if kh_atoms >= 64 || needed > limits.max_guesses as u128 {
        return Err(SatError::TooManyGuesses {
            kh_atoms,
            needed,
            limit: limits.max_guesses,
        });
    }
    let compiled = Compiled::new(f);
    let search = Search {
        c: &compiled,
        agents: &declared,
    };
    let witness = guess_order(kh_atoms)
        .par_iter()
        .find_map_first(|&g| search.try_guess(g, f));
    Ok(SatResult {
        verdict: if witness.is_some() { Verdict::Sat } else { Verdict::Unsat },
        witness,
    })
}

pub fn valid(f: &Formula, agents: &[AgentId]) -> Result<Validity, SatError> {
    valid_with(f, agents, &SatLimits::default())
}

pub fn valid_with(f: &Formula, agents: &[AgentId], limits: &SatLimits) -> Result<Validity, SatError> {
    let r = satisfiable_with(&Formula::not(f.clone()), agents, limits)?;
    Ok(match r.witness {
        Some(c) => Validity::Countermodel(c),
        None => Validity::Valid,
    })
}

/// Re-validates a certificate's model and re-checks `f` at its state.
pub fn certify_certificate(c: &Certificate, f: &Formula) -> bool {
    c.model.validate(&c.model.agents()).is_ok()
        && matches!(mcheck::check(&c.model, &c.state, f), Ok(true))
}

/// True iff `r` is a sat verdict whose certificate checks out for `f`.
pub fn certify(r: &SatResult, f: &Formula) -> bool {
    r.verdict == Verdict::Sat && r.witness.as_ref().is_some_and(|c| certify_certificate(c, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn i() -> Vec<AgentId> {
        vec![AgentId::new("i").unwrap()]
    }

    fn f(text: &str) -> Formula {
        parse(text, &i()).unwrap()
    }

    fn sat(text: &str) -> SatResult {
        satisfiable(&f(text), &i()).unwrap()
    }

    #[test]
    fn bounds() {
        assert_eq!(size_bound(&f("p")), 1);
        assert_eq!(size_bound(&f("p | q")), 2);
        assert_eq!(size_bound(&f("Kh[i](p,q)")), 4);
        assert_eq!(size_bound(&f("~Kh[i](p,q)")), 4);
        // two Kh subformulas: failure case 1 + 1 + 1 * 4
        assert_eq!(size_bound(&f("Kh[i](p,q) | Kh[i](q,r)")), 12);
    }

    #[test]
    fn guess_order_is_fewest_true_then_lexicographic() {
        assert_eq!(guess_order(0), [0]);
        assert_eq!(guess_order(3), [0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111]);
    }

    #[test]
    fn examples() {
        assert_eq!(sat("p & ~p").verdict, Verdict::Unsat);
        assert_eq!(sat("~Kh[i](bot, p)").verdict, Verdict::Unsat);
        let r = sat("A(p->p) & ~Kh[i](p,p)");
        assert_eq!(r.verdict, Verdict::Sat);
        assert!(certify(&r, &f("A(p->p) & ~Kh[i](p,p)")));
    }

    #[test]
    fn universal_needs_state_pruning() {
        assert_eq!(sat("A p").verdict, Verdict::Sat);
        assert_eq!(sat("A p & E ~p").verdict, Verdict::Unsat);
        assert_eq!(sat("A (p | q) & E ~p & E ~q").verdict, Verdict::Sat);
        let r = sat("A p & q");
        assert!(certify(&r, &f("A p & q")));
    }

    #[test]
    fn validity_examples() {
        let two = vec![AgentId::new("i").unwrap(), AgentId::new("j").unwrap()];
        let khe = parse("(E p & Kh[i](p,q)) -> E q", &two).unwrap();
        assert_eq!(valid(&khe, &two).unwrap(), Validity::Valid);
        for text in ["A(p->p) -> Kh[i](p,p)", "(Kh[i](p,q) & Kh[i](q,r)) -> Kh[i](p,r)"] {
            match valid(&f(text), &i()).unwrap() {
                Validity::Countermodel(c) => assert!(certify_certificate(&c, &Formula::not(f(text)))),
                Validity::Valid => panic!("{text} reported valid"),
            }
        }
    }

    #[test]
    fn certify_examples() {
        let g = f("Kh[i](p,q)");
        let r = satisfiable(&g, &i()).unwrap();
        assert!(certify(&r, &g));
        assert!(certify(&sat("top"), &Formula::Top));
        assert!(!certify(&sat("p & ~p"), &f("p & ~p")));

        let g = f("Kh[i](p,q) & E p");
        let mut r = satisfiable(&g, &i()).unwrap();
        assert!(certify(&r, &g));
        let m = &mut r.witness.as_mut().unwrap().model;
        let (u, v) = m.base.edges(0).next().unwrap();
        m.base.remove_edge(0, u, v);
        assert!(!certify(&r, &g));
    }

    #[test]
    fn certificate_round_trip() {
        let g = f("Kh[i](p,q) & ~Kh[i](q,p) & E p");
        let r = satisfiable(&g, &i()).unwrap();
        let c = r.witness.unwrap();
        let again = Certificate::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
        assert!(certify_certificate(&again, &g));
    }

    #[test]
    fn caps_are_reported() {
        let tight = SatLimits {
            max_guesses: 2,
            max_candidate_states: 4,
        };
        let r = satisfiable_with(&f("p & q & r"), &i(), &tight);
        assert!(matches!(r, Err(SatError::TooManyStates { atoms: 3, .. })));
        let r = satisfiable_with(&f("Kh[i](p,q) | Kh[i](q,p)"), &i(), &tight);
        assert!(matches!(r, Err(SatError::TooManyGuesses { kh_atoms: 2, .. })));
        assert_eq!(satisfiable(&Formula::Top, &[]), Err(SatError::NoAgents));
        let j = parse("Kh[j](p,q)", &[AgentId::new("j").unwrap()]).unwrap();
        assert!(matches!(satisfiable(&j, &i()), Err(SatError::UndeclaredAgent(_))));
    }

    #[test]
    fn certificates_respect_size_bound() {
        for text in [
            "Kh[i](p,q) & ~Kh[i](q,r) & E (p & ~q)",
            "~Kh[i](p, q) & ~Kh[i](q, p) & Kh[i](r, p)",
            "A(p->p) & ~Kh[i](p,p)",
        ] {
            let r = sat(text);
            let c = r.witness.unwrap();
            assert!(c.model.base.num_states() as u64 <= size_bound(&f(text)), "{text}");
        }
    }
}
