mod common;

use proptest::prelude::*;

use common::*;
use khlogic::formula::{AgentId, Formula};
use khlogic::harness::{
    case_config, check_globality, compare_extension, compare_kh_lts, compare_se, differential_run,
    differential_run_with, gen_cond_goal, gen_formula, gen_lts, gen_ltsu, gen_sat_formula, GenConfig, Library,
    Subject,
};
use khlogic::ltsplan::{extension_lts, label_lts, lift_to_ultsclass, DEFAULT_MAX_STATES};
use khlogic::mcheck::extension;
use khlogic::model::{Lts, Ltsu, Plan, StateSet};
use khlogic::proofcheck::{axiom_instance, parse_script, Schema};
use khlogic::sat::{certify, certify_certificate, satisfiable, size_bound, valid, Validity, Verdict};

fn config(seed: u64, num_agents: usize) -> GenConfig {
    GenConfig {
        num_agents,
        ..GenConfig::default().with_seed(seed)
    }
}

fn rename(f: &Formula, map: &dyn Fn(&str) -> String) -> Formula {
    match f {
        Formula::Atom(p) => Formula::atom(map(p)),
        Formula::Top => Formula::Top,
        Formula::Bot => Formula::Bot,
        Formula::Not(a) => Formula::not(rename(a, map)),
        Formula::Or(a, b) => Formula::or(rename(a, map), rename(b, map)),
        Formula::Kh(i, c, g) => Formula::kh(i.clone(), rename(c, map), rename(g, map)),
    }
}

fn swap_atoms(p: &str) -> String {
    match p {
        "p" => "q".into(),
        "q" => "p".into(),
        other => format!("{other}2"),
    }
}

const VALID_SCHEMAS: [Schema; 6] = [
    Schema::KhE,
    Schema::KhA,
    Schema::TA,
    Schema::DistA,
    Schema::FourKhA,
    Schema::FiveKhA,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_round_trips(seed in any::<u64>(), n in 1usize..=2, depth in 1usize..=7) {
        let c = GenConfig { max_formula_depth: depth, ..config(seed, n) };
        let ag = c.agents();
        let f = gen_formula(&c, &ag);
        prop_assert_eq!(khlogic::parse(&f.render(), &ag).unwrap(), f.clone());
        prop_assert_eq!(khlogic::parse(&f.to_string(), &ag).unwrap(), f);
    }

    #[test]
    fn se_states_match_definition(seed in any::<u64>()) {
        let c = GenConfig { max_states: 6, ..GenConfig::default().with_seed(seed) };
        let m = gen_lts(&c);
        prop_assert_eq!(compare_se(&Library, &m, 3), Vec::<String>::new());
    }

    #[test]
    fn checker_matches_definition(seed in any::<u64>(), n in 1usize..=2) {
        let c = config(seed, n);
        let m = gen_ltsu(&c);
        let f = gen_formula(&c, &c.agents());
        prop_assert_eq!(compare_extension(&Library, &m, &f), Vec::<String>::new());
        prop_assert_eq!(check_globality(&Library, &m, &f), Vec::<String>::new());
    }

    #[test]
    fn universal_is_all_or_nothing(seed in any::<u64>(), n in 1usize..=2) {
        let c = config(seed, n);
        let ag = c.agents();
        let m = gen_ltsu(&c);
        let f = gen_formula(&c, &ag);
        let inner = extension(&m, &f).unwrap().states;
        let all = extension(&m, &Formula::universal(&ag, f.clone())).unwrap().states;
        let some = extension(&m, &Formula::existential(&ag, f)).unwrap().states;
        prop_assert_eq!(all.is_full(), inner.is_full());
        prop_assert!(all.is_full() || all.is_empty());
        prop_assert_eq!(some.is_full(), !inner.is_empty());
        prop_assert!(some.is_full() || some.is_empty());
    }

    #[test]
    fn valid_schemas_hold_everywhere(seed in any::<u64>(), n in 1usize..=2, pick in 0usize..6) {
        let c = config(seed, n);
        let ag = c.agents();
        let m = gen_ltsu(&c);
        let metas = [0, 1, 2, 3].map(|k| small_formula(seed.wrapping_add(k), &ag));
        let f = instance(VALID_SCHEMAS[pick], &ag, &ag[seed as usize % n], metas);
        prop_assert!(extension(&m, &f).unwrap().states.is_full(), "{}", f);
    }

    #[test]
    fn plan_search_is_sound_and_shortest(seed in any::<u64>()) {
        let c = GenConfig::default().with_seed(seed);
        let m = gen_lts(&c);
        let (cond, goal) = gen_cond_goal(&c, &m);
        prop_assert_eq!(compare_kh_lts(&Library, &m, &cond, &goal, 4), None);
    }

    #[test]
    fn lifting_preserves_truth(seed in any::<u64>()) {
        let c = config(seed, 1);
        let ag = c.agents();
        let m = gen_lts(&c);
        let f = gen_formula(&c, &ag);
        let labeling = label_lts(&m, &f, DEFAULT_MAX_STATES).unwrap();
        let len = labeling.witnesses.values().map(Plan::len).max().unwrap_or(0);
        prop_assume!(len <= 3);
        let lifted = lift_to_ultsclass(&m, &ag, len);
        prop_assert_eq!(
            extension(&lifted, &f).unwrap().states,
            extension_lts(&m, &f).unwrap().states
        );
    }

    #[test]
    fn lts_validates_emp_and_composition(seed in any::<u64>()) {
        let c = config(seed, 1);
        let ag = c.agents();
        let m = gen_lts(&c);
        let [phi, psi, chi] = [0, 1, 2].map(|k| small_formula(seed.wrapping_add(k), &ag));
        let none = || Formula::Top;
        let emp = instance(Schema::Emp, &ag, &ag[0], [phi.clone(), psi.clone(), none(), none()]);
        let comp = instance(Schema::CompKh, &ag, &ag[0], [phi, psi, chi, none()]);
        prop_assert!(extension_lts(&m, &emp).unwrap().states.is_full());
        prop_assert!(extension_lts(&m, &comp).unwrap().states.is_full());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sat_certificates_check(seed in any::<u64>(), n in 1usize..=2) {
        let c = config(seed, n);
        let ag = c.agents();
        let f = gen_formula(&c, &ag);
        prop_assume!(f.kh_atoms().len() <= 6);
        let r = satisfiable(&f, &ag).unwrap();
        if r.verdict == Verdict::Sat {
            prop_assert!(certify(&r, &f));
            let states = r.witness.as_ref().unwrap().model.base.num_states() as u64;
            prop_assert!(states <= size_bound(&f), "{} states for {}", states, f);
        }
        match valid(&f, &ag).unwrap() {
            Validity::Valid => prop_assert_eq!(
                satisfiable(&Formula::not(f.clone()), &ag).unwrap().verdict,
                Verdict::Unsat
            ),
            Validity::Countermodel(cm) => prop_assert!(certify_certificate(&cm, &Formula::not(f))),
        }
    }

    #[test]
    fn sat_agrees_with_model_enumeration(seed in any::<u64>()) {
        let c = config(seed, 2);
        let ag = c.agents();
        let f = gen_sat_formula(&c, &ag);
        let got = satisfiable(&f, &ag).unwrap().verdict == Verdict::Sat;
        prop_assert_eq!(got, khlogic::harness::brute::satisfiable(&f, 3), "{}", f);
    }

    #[test]
    fn sat_ignores_atom_names(seed in any::<u64>(), n in 1usize..=2) {
        let c = config(seed, n);
        let ag = c.agents();
        let f = gen_sat_formula(&c, &ag);
        let g = rename(&f, &swap_atoms);
        prop_assert_eq!(satisfiable(&f, &ag).unwrap().verdict, satisfiable(&g, &ag).unwrap().verdict);
    }

    #[test]
    fn sat_is_deterministic(seed in any::<u64>()) {
        let c = config(seed, 2);
        let ag = c.agents();
        let f = gen_sat_formula(&c, &ag);
        let a = satisfiable(&f, &ag).unwrap();
        let b = satisfiable(&f, &ag).unwrap();
        prop_assert_eq!(a.witness.map(|w| w.to_json()), b.witness.map(|w| w.to_json()));
    }

    #[test]
    fn schema_matching_survives_renaming(seed in any::<u64>(), n in 1usize..=2, pick in 0usize..Schema::ALL.len()) {
        let ag = config(seed, n).agents();
        let schema = Schema::ALL[pick];
        let metas = [0, 1, 2, 3].map(|k| small_formula(seed.wrapping_add(k), &ag));
        let f = instance(schema, &ag, &ag[0], metas);
        prop_assert!(axiom_instance(schema, &f, &ag).unwrap(), "{} {}", schema.name(), f);
        let g = rename(&f, &swap_atoms);
        prop_assert!(axiom_instance(schema, &g, &ag).unwrap(), "{} {}", schema.name(), g);
    }
}

#[test]
fn fixture_lines_are_valid() {
    for name in ["scond.proof", "cond.proof"] {
        let script = parse_script(&read_fixture(name), None, None).unwrap();
        for line in &script.lines {
            assert_eq!(
                valid(&line.formula, &script.agents).unwrap(),
                Validity::Valid,
                "{name} line {}",
                line.index
            );
        }
    }
}

struct OffByOne;

impl Subject for OffByOne {
    fn se_states(&self, m: &Lts, plan: &Plan) -> StateSet {
        let mut s = m.se_states(plan);
        let last = m.num_states() - 1;
        if s.contains(last) {
            s.remove(last);
        } else {
            s.insert(last);
        }
        s
    }
}

#[test]
fn injected_fault_is_reported() {
    let report = differential_run_with(&OffByOne, 5, &GenConfig::default());
    assert!(!report.is_clean());
    assert!(report.mismatches.iter().all(|m| m.check == "se"));
}

#[test]
fn differential_runs_are_reproducible() {
    let c = GenConfig::default().with_seed(17);
    let a = differential_run(40, &c);
    assert!(a.is_clean(), "{}", a.to_text());
    assert_eq!(a, differential_run(40, &c));
    assert_eq!(a.to_text().lines().last().unwrap(), "40 cases, 0 mismatches (seed 17)");
    assert_ne!(case_config(&c, 0).seed, case_config(&c, 1).seed);
}

#[test]
fn golden_seed_zero_model() {
    let m: Ltsu = gen_ltsu(&GenConfig::default());
    assert_eq!(m.to_file().to_json(), read_fixture("golden_seed0.json"));
}

#[test]
fn agent_names_do_not_matter() {
    let ij = agents(&["i", "j"]);
    let ab = agents(&["alice", "bob"]);
    let swap = |f: &Formula| -> Formula {
        fn go(f: &Formula, to: &[AgentId], from: &[AgentId]) -> Formula {
            match f {
                Formula::Not(a) => Formula::not(go(a, to, from)),
                Formula::Or(a, b) => Formula::or(go(a, to, from), go(b, to, from)),
                Formula::Kh(i, c, g) => {
                    let k = from.iter().position(|x| x == i).unwrap();
                    Formula::kh(to[k].clone(), go(c, to, from), go(g, to, from))
                }
                other => other.clone(),
            }
        }
        go(f, &ab, &ij)
    };
    for seed in 0..30 {
        let f = gen_sat_formula(&config(seed, 2), &ij);
        assert_eq!(
            satisfiable(&f, &ij).unwrap().verdict,
            satisfiable(&swap(&f), &ab).unwrap().verdict,
            "{f}"
        );
    }
}
