//! Seeded generators, first-principles reference evaluators and the
//! differential driver that compares the library against them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formula::{AgentId, Formula};
use crate::ltsplan::{self, plans_up_to};
use crate::mcheck;
use crate::model::{Lts, Ltsu, Plan, PlanSet, StateSet};
use crate::sat::{self, SatResult, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub max_states: usize,
    pub max_actions: usize,
    pub max_plan_len: usize,
    pub max_cells: usize,
    pub max_formula_depth: usize,
    pub num_agents: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_states: 5,
            max_actions: 3,
            max_plan_len: 2,
            max_cells: 3,
            max_formula_depth: 4,
            num_agents: 2,
        }
    }
}

impl GenConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        GenConfig { seed, ..self }
    }

    /// Agents `i`, `j`, `k`, ... up to `num_agents`.
    pub fn agents(&self) -> Vec<AgentId> {
        (0..self.num_agents.max(1))
            .map(|k| {
                let name = match k {
                    0..=17 => char::from(b'i' + k as u8).to_string(),
                    _ => format!("ag{k}"),
                };
                AgentId::new(name).expect("generated agent names are valid")
            })
            .collect()
    }
}

pub const GEN_ATOMS: [&str; 3] = ["p", "q", "r"];

const STREAM_MODEL: u64 = 1;
const STREAM_FORMULA: u64 = 2;
const STREAM_SAT_FORMULA: u64 = 3;
const STREAM_SETS: u64 = 4;
const STREAM_CASE: u64 = 5;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the sub-stream `stream` of `seed`.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, stream))
}

fn gen_base(c: &GenConfig, rng: &mut ChaCha8Rng) -> Lts {
    let n = rng.random_range(1..=c.max_states.max(1));
    let k = rng.random_range(1..=c.max_actions.max(1));
    let states = (0..n).map(|s| format!("s{s}")).collect();
    let actions = (0..k)
        .map(|a| match a {
            0..=25 => char::from(b'a' + a as u8).to_string(),
            _ => format!("act{a}"),
        })
        .collect();
    let mut m = Lts::new(states, actions).expect("generated names are valid");
    for s in 0..n {
        for p in GEN_ATOMS {
            if rng.random_bool(0.5) {
                m.add_label(s, p);
            }
        }
    }
    for a in 0..k {
        for s in 0..n {
            for _ in 0..rng.random_range(0..=2) {
                let t = rng.random_range(0..n);
                m.add_edge(a, s, t);
            }
        }
    }
    m
}

fn gen_cells(c: &GenConfig, num_actions: usize, rng: &mut ChaCha8Rng) -> Vec<PlanSet> {
    let mut pool = plans_up_to(num_actions, c.max_plan_len);
    pool.shuffle(rng);
    let max_cells = c.max_cells.max(1);
    let sample = rng.random_range(1..=pool.len().min(2 * max_cells));
    pool.truncate(sample);
    let cells = rng.random_range(1..=sample.min(max_cells));
    let mut out = vec![PlanSet::new(Vec::new()); cells];
    for (k, plan) in pool.into_iter().enumerate() {
        let target = if k < cells { k } else { rng.random_range(0..cells) };
        out[target].plans.push(plan);
    }
    out
}

pub fn gen_lts(c: &GenConfig) -> Lts {
    gen_base(c, &mut rng_for(c.seed, STREAM_MODEL))
}

pub fn gen_ltsu(c: &GenConfig) -> Ltsu {
    let mut rng = rng_for(c.seed, STREAM_MODEL);
    let base = gen_base(c, &mut rng);
    let strategies: BTreeMap<AgentId, Vec<PlanSet>> = c
        .agents()
        .into_iter()
        .map(|a| (a, gen_cells(c, base.num_actions(), &mut rng)))
        .collect();
    Ltsu::new(base, strategies)
}

fn gen_tree(rng: &mut ChaCha8Rng, depth: usize, atoms: &[&str], agents: &[AgentId]) -> Formula {
    let leaf = |rng: &mut ChaCha8Rng| match rng.random_range(0..10) {
        0 => Formula::Top,
        1 => Formula::Bot,
        _ => Formula::atom(atoms[rng.random_range(0..atoms.len())]),
    };
    if depth <= 1 {
        return leaf(rng);
    }
    match rng.random_range(0..20) {
        0..=3 => leaf(rng),
        4..=8 => Formula::not(gen_tree(rng, depth - 1, atoms, agents)),
        9..=13 => Formula::or(
            gen_tree(rng, depth - 1, atoms, agents),
            gen_tree(rng, depth - 1, atoms, agents),
        ),
        _ => Formula::kh(
            agents[rng.random_range(0..agents.len())].clone(),
            gen_tree(rng, depth - 1, atoms, agents),
            gen_tree(rng, depth - 1, atoms, agents),
        ),
    }
}

/// Random formula over `p, q, r` of depth at most `max_formula_depth`.
pub fn gen_formula(c: &GenConfig, agents: &[AgentId]) -> Formula {
    let mut rng = rng_for(c.seed, STREAM_FORMULA);
    gen_tree(&mut rng, c.max_formula_depth.max(1), &GEN_ATOMS, agents)
}

/// Random formula over `p, q` with at most two distinct `Kh` subformulas.
pub fn gen_sat_formula(c: &GenConfig, agents: &[AgentId]) -> Formula {
    let mut rng = rng_for(c.seed, STREAM_SAT_FORMULA);
    loop {
        let f = gen_tree(&mut rng, c.max_formula_depth.max(1), &GEN_ATOMS[..2], agents);
        if f.kh_atoms().len() <= 2 {
            return f;
        }
    }
}

fn gen_set(rng: &mut ChaCha8Rng, n: usize) -> StateSet {
    StateSet::from_states(n, (0..n).filter(|_| rng.random_bool(0.5)))
}

/// Two random state sets over `m`, used as condition and goal.
pub fn gen_cond_goal(c: &GenConfig, m: &Lts) -> (StateSet, StateSet) {
    let mut rng = rng_for(c.seed, STREAM_SETS);
    let cond = gen_set(&mut rng, m.num_states());
    let goal = gen_set(&mut rng, m.num_states());
    (cond, goal)
}

/// Reference evaluators that follow the semantic definitions literally,
/// with relations as explicit sets of pairs.
pub mod naive {
    use super::*;

    type Relation = BTreeSet<(usize, usize)>;

    fn action_relation(m: &Lts, a: usize) -> Relation {
        m.edges(a).collect()
    }

    fn compose(r: &Relation, s: &Relation) -> Relation {
        let mut out = Relation::new();
        for &(u, v) in r {
            for &(v2, w) in s {
                if v == v2 {
                    out.insert((u, w));
                }
            }
        }
        out
    }

    /// `R_plan` as a set of pairs; the empty plan is the identity.
    pub fn plan_relation(m: &Lts, plan: &Plan) -> Relation {
        let identity: Relation = (0..m.num_states()).map(|s| (s, s)).collect();
        plan.actions()
            .iter()
            .fold(identity, |acc, &a| compose(&acc, &action_relation(m, a)))
    }

    fn post(r: &Relation, u: usize) -> Vec<usize> {
        r.iter().filter(|&&(x, _)| x == u).map(|&(_, y)| y).collect()
    }

    /// Every state reached by a proper prefix has a successor under the
    /// next action.
    pub fn strongly_executable(m: &Lts, plan: &Plan, u: usize) -> bool {
        (0..plan.len()).all(|k| {
            let reached = post(&plan_relation(m, &plan.prefix(k)), u);
            let next = action_relation(m, plan.at(k + 1));
            reached.iter().all(|&v| !post(&next, v).is_empty())
        })
    }

    pub fn se_states(m: &Lts, plan: &Plan) -> StateSet {
        StateSet::from_states(
            m.num_states(),
            (0..m.num_states()).filter(|&u| strongly_executable(m, plan, u)),
        )
    }

    /// Plan `plan` works from every state of `cond` into `goal`.
    pub fn plan_works(m: &Lts, plan: &Plan, cond: &[usize], goal: &dyn Fn(usize) -> bool) -> bool {
        let r = plan_relation(m, plan);
        cond.iter()
            .all(|&u| strongly_executable(m, plan, u) && post(&r, u).into_iter().all(goal))
    }

    pub fn holds(m: &Ltsu, w: usize, f: &Formula) -> bool {
        match f {
            Formula::Atom(p) => m.base.labels(w).contains(p),
            Formula::Top => true,
            Formula::Bot => false,
            Formula::Not(a) => !holds(m, w, a),
            Formula::Or(a, b) => holds(m, w, a) || holds(m, w, b),
            Formula::Kh(i, c, g) => {
                let cond: Vec<usize> = (0..m.base.num_states()).filter(|&u| holds(m, u, c)).collect();
                let goal = |v: usize| holds(m, v, g);
                m.strategies[i]
                    .iter()
                    .any(|cell| cell.plans.iter().all(|plan| plan_works(&m.base, plan, &cond, &goal)))
            }
        }
    }

    pub fn extension(m: &Ltsu, f: &Formula) -> StateSet {
        StateSet::from_states(
            m.base.num_states(),
            (0..m.base.num_states()).filter(|&w| holds(m, w, f)),
        )
    }

    /// First plan of length at most `max_len`, shortest first and then in
    /// action order, that works from `cond` into `goal`.
    pub fn kh_lts(m: &Lts, cond: &StateSet, goal: &StateSet, max_len: usize) -> Option<Plan> {
        let cond = cond.to_vec();
        plans_up_to(m.num_actions(), max_len)
            .into_iter()
            .find(|plan| plan_works(m, plan, &cond, &|v| goal.contains(v)))
    }
}

/// Exhaustive satisfiability over small models of the canonical shape:
/// at most `max_states` states labeled by the atoms of `f`, one action per
/// `Kh` subformula owned by that subformula's agent with an arbitrary
/// relation, and one singleton cell per action.
pub mod brute {
    use super::*;

    struct Small {
        atoms: Vec<String>,
        subs: Vec<Formula>,
        kh: Vec<(AgentId, usize, usize)>,
        kh_node: Vec<Option<usize>>,
    }

    fn compile(f: &Formula) -> Small {
        let subs: Vec<Formula> = f.subformulas().into_iter().cloned().collect();
        let mut kh = Vec::new();
        let mut kh_node = Vec::new();
        for g in &subs {
            if let Formula::Kh(i, c, goal) = g {
                let ci = subs.iter().position(|x| x == &**c).unwrap();
                let gi = subs.iter().position(|x| x == &**goal).unwrap();
                kh_node.push(Some(kh.len()));
                kh.push((i.clone(), ci, gi));
            } else {
                kh_node.push(None);
            }
        }
        Small {
            atoms: f.atoms(),
            subs,
            kh,
            kh_node,
        }
    }

    /// Bit masks over states of every subformula, with `Kh` nodes fixed by `guess`.
    fn evaluate(s: &Small, vals: &[usize], guess: u32) -> Vec<u32> {
        let full = (1u32 << vals.len()) - 1;
        let mut out: Vec<u32> = Vec::with_capacity(s.subs.len());
        for (k, g) in s.subs.iter().enumerate() {
            let mask = match g {
                Formula::Atom(p) => {
                    let bit = s.atoms.iter().position(|a| a == p).unwrap();
                    vals.iter()
                        .enumerate()
                        .filter(|(_, &v)| v >> bit & 1 == 1)
                        .fold(0, |m, (x, _)| m | 1 << x)
                }
                Formula::Top => full,
                Formula::Bot => 0,
                Formula::Not(a) => {
                    let a = s.subs.iter().position(|x| x == &**a).unwrap();
                    !out[a] & full
                }
                Formula::Or(a, b) => {
                    let a = s.subs.iter().position(|x| x == &**a).unwrap();
                    let b = s.subs.iter().position(|x| x == &**b).unwrap();
                    out[a] | out[b]
                }
                Formula::Kh(..) => {
                    if guess >> s.kh_node[k].unwrap() & 1 == 1 {
                        full
                    } else {
                        0
                    }
                }
            };
            out.push(mask);
        }
        out
    }

    /// Whether the single-action cell with relation `rel` (row `u` is the
    /// successor mask of state `u`) witnesses `cond -> goal`.
    fn works(rel: &[u32], cond: u32, goal: u32) -> bool {
        (0..rel.len()).all(|u| cond >> u & 1 == 0 || (rel[u] != 0 && rel[u] & !goal == 0))
    }

    fn multisets(n: usize, kinds: usize) -> Vec<Vec<usize>> {
        fn go(n: usize, from: usize, kinds: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            for v in from..kinds {
                cur.push(v);
                go(n, v, kinds, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(n, 0, kinds, &mut Vec::new(), &mut out);
        out
    }

    fn relation_rows(code: u32, n: usize) -> Vec<u32> {
        (0..n).map(|u| (code >> (u * n)) & ((1 << n) - 1)).collect()
    }

    /// Truth guesses are checked by grouping relations by which `Kh`
    /// subformulas they witness, so only combinations of distinct witness
    /// profiles are tried.
    pub fn satisfiable(f: &Formula, max_states: usize) -> bool {
        let s = compile(f);
        let root = s.subs.len() - 1;
        let kinds = 1usize << s.atoms.len();
        let nk = s.kh.len();
        for n in 1..=max_states {
            let relations = 1u32 << (n * n);
            for vals in multisets(n, kinds) {
                for guess in 0..1u32 << nk {
                    let ext = evaluate(&s, &vals, guess);
                    if ext[root] == 0 {
                        continue;
                    }
                    // profiles[a]: achievable sets of same-agent atoms witnessed by action a
                    let profiles: Vec<BTreeSet<u32>> = (0..nk)
                        .map(|a| {
                            (0..relations)
                                .map(|code| {
                                    let rel = relation_rows(code, n);
                                    (0..nk)
                                        .filter(|&k| {
                                            s.kh[k].0 == s.kh[a].0 && works(&rel, ext[s.kh[k].1], ext[s.kh[k].2])
                                        })
                                        .fold(0, |m, k| m | 1 << k)
                                })
                                .collect()
                        })
                        .collect();
                    let vacuous = (0..nk).filter(|&k| ext[s.kh[k].1] == 0).fold(0, |m, k| m | 1 << k);
                    let mut reachable: BTreeSet<u32> = BTreeSet::from([vacuous]);
                    for p in &profiles {
                        reachable = reachable.iter().flat_map(|&r| p.iter().map(move |&q| r | q)).collect();
                    }
                    if reachable.contains(&guess) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// The same search without grouping: every model is built and checked
    /// with the naive evaluator. Only usable for tiny bounds.
    pub fn satisfiable_by_models(f: &Formula, agents: &[AgentId], max_states: usize) -> bool {
        let s = compile(f);
        let kinds = 1usize << s.atoms.len();
        let nk = s.kh.len();
        for n in 1..=max_states {
            let per = 1u64 << (n * n);
            for vals in multisets(n, kinds) {
                for code in 0..per.pow(nk as u32) {
                    let states = (0..n).map(|x| format!("s{x}")).collect();
                    let mut actions: Vec<String> = (0..nk).map(|k| format!("k{k}")).collect();
                    actions.push("idle".into());
                    let mut lts = Lts::new(states, actions).unwrap();
                    for (x, &v) in vals.iter().enumerate() {
                        for (b, p) in s.atoms.iter().enumerate() {
                            if v >> b & 1 == 1 {
                                lts.add_label(x, p.clone());
                            }
                        }
                    }
                    let mut rest = code;
                    for a in 0..nk {
                        let rel = relation_rows((rest % per) as u32, n);
                        rest /= per;
                        for (u, row) in rel.iter().enumerate() {
                            for v in 0..n {
                                if row >> v & 1 == 1 {
                                    lts.add_edge(a, u, v);
                                }
                            }
                        }
                    }
                    let strategies = agents
                        .iter()
                        .map(|ag| {
                            let mut cells: Vec<PlanSet> = (0..nk)
                                .filter(|&a| &s.kh[a].0 == ag)
                                .map(|a| PlanSet::singleton(Plan::new(vec![a])))
                                .collect();
                            cells.push(PlanSet::singleton(Plan::new(vec![nk])));
                            (ag.clone(), cells)
                        })
                        .collect();
                    let m = Ltsu::new(lts, strategies);
                    if !naive::extension(&m, f).is_empty() {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// The implementation under test. Defaults delegate to the library; tests
/// override single methods to inject faults.
pub trait Subject: Sync {
    fn se_states(&self, m: &Lts, plan: &Plan) -> StateSet {
        m.se_states(plan)
    }

    fn extension(&self, m: &Ltsu, f: &Formula) -> Result<StateSet, String> {
        mcheck::extension(m, f).map(|e| e.states).map_err(|e| e.to_string())
    }

    fn kh_lts(&self, m: &Lts, cond: &StateSet, goal: &StateSet) -> Option<Plan> {
        ltsplan::kh_lts(m, cond, goal)
    }

    fn satisfiable(&self, f: &Formula, agents: &[AgentId]) -> Result<SatResult, String> {
        sat::satisfiable(f, agents).map_err(|e| e.to_string())
    }
}

/// The library as shipped.
pub struct Library;

impl Subject for Library {}

fn show(m: &Lts, s: &StateSet) -> String {
    format!("{{{}}}", m.set_to_names(s).join(", "))
}

pub fn compare_se(subject: &dyn Subject, m: &Lts, max_len: usize) -> Vec<String> {
    plans_up_to(m.num_actions(), max_len)
        .into_iter()
        .filter_map(|plan| {
            let got = subject.se_states(m, &plan);
            let want = naive::se_states(m, &plan);
            (got != want).then(|| {
                format!(
                    "SE({}) = {} but the definition gives {}",
                    m.plan_to_string(&plan),
                    show(m, &got),
                    show(m, &want)
                )
            })
        })
        .collect()
}

/// Extension of every subformula against the naive evaluator.
pub fn compare_extension(subject: &dyn Subject, m: &Ltsu, f: &Formula) -> Vec<String> {
    let mut out = Vec::new();
    for g in f.subformulas() {
        let want = naive::extension(m, g);
        match subject.extension(m, g) {
            Ok(got) if got == want => {}
            Ok(got) => out.push(format!(
                "[[{g}]] = {} but the definition gives {}",
                show(&m.base, &got),
                show(&m.base, &want)
            )),
            Err(e) => out.push(format!("[[{g}]] failed: {e}")),
        }
    }
    out
}

/// `Kh` subformulas whose extension is neither empty nor everything.
pub fn check_globality(subject: &dyn Subject, m: &Ltsu, f: &Formula) -> Vec<String> {
    f.subformulas()
        .into_iter()
        .filter(|g| g.is_kh())
        .filter_map(|g| match subject.extension(m, g) {
            Ok(s) if s.is_empty() || s.is_full() => None,
            Ok(s) => Some(format!("[[{g}]] = {} is not global", show(&m.base, &s))),
            Err(e) => Some(format!("[[{g}]] failed: {e}")),
        })
        .collect()
}

/// Plan search against enumeration of all plans up to `max_len`.
pub fn compare_kh_lts(
    subject: &dyn Subject,
    m: &Lts,
    cond: &StateSet,
    goal: &StateSet,
    max_len: usize,
) -> Option<String> {
    let found = subject.kh_lts(m, cond, goal);
    let listed = naive::kh_lts(m, cond, goal, max_len);
    let what = format!("{} to {}", show(m, cond), show(m, goal));
    match (&found, &listed) {
        (Some(p), _) => {
            let cond_v = cond.to_vec();
            if !naive::plan_works(m, p, &cond_v, &|v| goal.contains(v)) {
                return Some(format!("{what}: returned plan {} does not work", m.plan_to_string(p)));
            }
            let missed = if p.len() <= max_len {
                listed.as_ref() != Some(p)
            } else {
                listed.is_some()
            };
            if missed {
                return Some(format!(
                    "{what}: search gave {} but enumeration gave {}",
                    m.plan_to_string(p),
                    listed.as_ref().map_or("nothing".to_string(), |q| m.plan_to_string(q))
                ));
            }
            None
        }
        (None, Some(q)) => Some(format!("{what}: search found nothing, enumeration found {}", m.plan_to_string(q))),
        (None, None) => None,
    }
}

/// Satisfiability against the brute-force enumerator over three states,
/// plus certification of every sat verdict.
pub fn compare_sat(subject: &dyn Subject, f: &Formula, agents: &[AgentId]) -> Option<String> {
    let r = match subject.satisfiable(f, agents) {
        Ok(r) => r,
        Err(e) => return Some(format!("{f}: {e}")),
    };
    let expected = brute::satisfiable(f, 3);
    let got = r.verdict == Verdict::Sat;
    if got != expected {
        return Some(format!("{f}: sat says {got}, enumeration says {expected}"));
    }
    if got && !sat::certify(&r, f) {
        return Some(format!("{f}: certificate does not check"));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub case: usize,
    pub seed: u64,
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub cases: usize,
    pub config: GenConfig,
    pub mismatches: Vec<Mismatch>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for m in &self.mismatches {
            let _ = writeln!(s, "case {} seed {} {}: {}", m.case, m.seed, m.check, m.detail);
        }
        let _ = writeln!(
            s,
            "{} cases, {} mismatches (seed {})",
            self.cases,
            self.mismatches.len(),
            self.config.seed
        );
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// Generator configuration of case `k` of a run.
pub fn case_config(c: &GenConfig, k: usize) -> GenConfig {
    c.with_seed(child_seed(c.seed, STREAM_CASE.wrapping_add((k as u64) << 8)))
}

fn run_case(subject: &dyn Subject, c: &GenConfig, k: usize) -> Vec<Mismatch> {
    let cc = case_config(c, k);
    let agents = cc.agents();
    let model = gen_ltsu(&cc);
    let formula = gen_formula(&cc, &agents);
    let mut found = Vec::new();
    let mut add = |check: &str, details: Vec<String>| {
        found.extend(details.into_iter().map(|detail| Mismatch {
            case: k,
            seed: cc.seed,
            check: check.to_string(),
            detail,
        }));
    };
    add("se", compare_se(subject, &model.base, cc.max_plan_len + 1));
    add("mcheck", compare_extension(subject, &model, &formula));
    add("globality", check_globality(subject, &model, &formula));
    let (cond, goal) = gen_cond_goal(&cc, &model.base);
    add("kh_lts", compare_kh_lts(subject, &model.base, &cond, &goal, 4).into_iter().collect());
    let sat_formula = gen_sat_formula(&cc, &agents);
    add("sat", compare_sat(subject, &sat_formula, &agents).into_iter().collect());
    found
}

pub fn differential_run(n_cases: usize, c: &GenConfig) -> Report {
    differential_run_with(&Library, n_cases, c)
}

/// Runs `n_cases` generated cases against `subject`; mismatches are listed
/// in case order.
pub fn differential_run_with(subject: &dyn Subject, n_cases: usize, c: &GenConfig) -> Report {
    let mismatches = (0..n_cases)
        .into_par_iter()
        .map(|k| run_case(subject, c, k))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Report {
        cases: n_cases,
        config: *c,
        mismatches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::model::countermodel;

    #[test]
    fn generation_is_deterministic() {
        let c = GenConfig::default().with_seed(7);
        assert_eq!(gen_ltsu(&c), gen_ltsu(&c));
        assert_eq!(gen_formula(&c, &c.agents()), gen_formula(&c, &c.agents()));
    }

    #[test]
    fn generated_models_validate() {
        for seed in 0..200 {
            let c = GenConfig::default().with_seed(seed);
            let m = gen_ltsu(&c);
            assert_eq!(m.validate(&c.agents()), Ok(()), "seed {seed}");
            assert!(m.base.num_states() <= c.max_states);
            assert!(m.base.num_actions() <= c.max_actions);
        }
        let tiny = GenConfig {
            max_states: 1,
            ..GenConfig::default()
        };
        let m = gen_ltsu(&tiny);
        assert_eq!(m.base.num_states(), 1);
        assert_eq!(m.validate(&tiny.agents()), Ok(()));
    }

    #[test]
    fn formula_bounds() {
        let c = GenConfig {
            max_formula_depth: 1,
            ..GenConfig::default()
        };
        for seed in 0..50 {
            let f = gen_formula(&c.with_seed(seed), &c.agents());
            assert!(matches!(f, Formula::Atom(_) | Formula::Top | Formula::Bot));
        }
        let c = GenConfig::default();
        let mut seen = BTreeSet::new();
        for seed in 0..100 {
            let f = gen_formula(&c.with_seed(seed), &c.agents());
            assert!(f.depth() <= c.max_formula_depth);
            seen.extend(f.agents());
            let g = gen_sat_formula(&c.with_seed(seed), &c.agents());
            assert!(g.kh_atoms().len() <= 2 && g.atoms().len() <= 2);
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn naive_matches_countermodel() {
        let m = countermodel();
        let i = m.agents();
        for (text, full) in [("Kh[i](p,q)", true), ("Kh[i](p,r)", false), ("Kh[i](p,p)", false)] {
            let f = parse(text, &i).unwrap();
            assert_eq!(naive::extension(&m, &f).is_full(), full, "{text}");
        }
        let ab = Plan::new(vec![0, 1]);
        assert_eq!(naive::se_states(&m.base, &ab).to_vec(), [0]);
    }

    #[test]
    fn brute_force_variants_agree() {
        let c = GenConfig {
            max_formula_depth: 3,
            num_agents: 1,
            ..GenConfig::default()
        };
        let agents = c.agents();
        for seed in 0..40 {
            let f = gen_sat_formula(&c.with_seed(seed), &agents);
            if f.kh_atoms().len() > 1 {
                continue;
            }
            assert_eq!(
                brute::satisfiable(&f, 2),
                brute::satisfiable_by_models(&f, &agents, 2),
                "{f}"
            );
        }
        let f = parse("A p & E ~q", &agents).unwrap();
        assert_eq!(brute::satisfiable(&f, 2), brute::satisfiable_by_models(&f, &agents, 2));
    }

    #[test]
    fn brute_force_examples() {
        let i = vec![AgentId::new("i").unwrap()];
        let f = |t: &str| parse(t, &i).unwrap();
        assert!(!brute::satisfiable(&f("p & ~p"), 3));
        assert!(!brute::satisfiable(&f("~Kh[i](bot, p)"), 3));
        assert!(brute::satisfiable(&f("A(p->p) & ~Kh[i](p,p)"), 3));
        assert!(brute::satisfiable(&f("A p"), 1));
    }

    #[test]
    fn empty_run() {
        let r = differential_run(0, &GenConfig::default());
        assert!(r.is_clean());
        assert_eq!(r.cases, 0);
    }

    #[test]
    fn small_run_is_clean() {
        let r = differential_run(20, &GenConfig::default());
        assert!(r.is_clean(), "{}", r.to_text());
    }
}
