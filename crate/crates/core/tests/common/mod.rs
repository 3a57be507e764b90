#![allow(dead_code)]

use std::path::{Path, PathBuf};

use khlogic::formula::{AgentId, Formula};
use khlogic::harness::{gen_formula, GenConfig};
use khlogic::proofcheck::Schema;

pub fn agents(names: &[&str]) -> Vec<AgentId> {
    names.iter().map(|n| AgentId::new(*n).unwrap()).collect()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Small random formula over `p, q, r` for instantiating schemas.
pub fn small_formula(seed: u64, agents: &[AgentId]) -> Formula {
    let c = GenConfig {
        max_formula_depth: 2,
        num_agents: agents.len(),
        ..GenConfig::default()
    };
    gen_formula(&c.with_seed(seed), agents)
}

/// Instance of a schema with metavariables `phi, psi, chi, theta` and the
/// agent slot filled by `agent`.
pub fn instance(
    schema: Schema,
    ag: &[AgentId],
    agent: &AgentId,
    [phi, psi, chi, theta]: [Formula; 4],
) -> Formula {
    let a = |f: Formula| Formula::universal(ag, f);
    let e = |f: Formula| Formula::existential(ag, f);
    let kh = |c: Formula, g: Formula| Formula::kh(agent.clone(), c, g);
    let imp = Formula::implies;
    let and = Formula::and;
    match schema {
        Schema::Taut => imp(phi.clone(), phi),
        Schema::DistA => imp(a(imp(phi.clone(), psi.clone())), imp(a(phi), a(psi))),
        Schema::TA => imp(a(phi.clone()), phi),
        Schema::FourKhA => imp(kh(psi.clone(), phi.clone()), a(kh(psi, phi))),
        Schema::FiveKhA => imp(
            Formula::not(kh(psi.clone(), phi.clone())),
            a(Formula::not(kh(psi, phi))),
        ),
        Schema::KhE => imp(and(e(psi.clone()), kh(psi, phi.clone())), e(phi)),
        Schema::KhA => imp(
            and(
                a(imp(chi.clone(), psi.clone())),
                and(kh(psi, phi.clone()), a(imp(phi, theta.clone()))),
            ),
            kh(chi, theta),
        ),
        Schema::Emp => imp(a(imp(psi.clone(), phi.clone())), kh(psi, phi)),
        Schema::CompKh => imp(
            and(kh(psi.clone(), phi.clone()), kh(phi, chi.clone())),
            kh(psi, chi),
        ),
    }
}

/// `A ~psi -> Kh[agent](psi, phi)`.
pub fn scond(ag: &[AgentId], agent: &AgentId, psi: Formula, phi: Formula) -> Formula {
    Formula::implies(
        Formula::universal(ag, Formula::not(psi.clone())),
        Formula::kh(agent.clone(), psi, phi),
    )
}

/// `Kh[agent](bot, phi)`.
pub fn cond(agent: &AgentId, phi: Formula) -> Formula {
    Formula::kh(agent.clone(), Formula::Bot, phi)
}

/// Literals over `p, q, r`.
pub fn literals() -> Vec<Formula> {
    ["p", "q", "r"]
        .into_iter()
        .flat_map(|p| [Formula::atom(p), Formula::not(Formula::atom(p))])
        .collect()
}

fn base_atom(l: &Formula) -> &Formula {
    match l {
        Formula::Not(a) => a,
        other => other,
    }
}

/// Pairs of literals that are not complementary, in a fixed order.
pub fn consistent_literal_pairs() -> Vec<(Formula, Formula)> {
    let lits = literals();
    let mut out = Vec::new();
    for a in &lits {
        for b in &lits {
            if base_atom(a) != base_atom(b) || a == b {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Triples of literals over three distinct atoms, in a fixed order.
pub fn distinct_literal_triples() -> Vec<(Formula, Formula, Formula)> {
    let lits = literals();
    let mut out = Vec::new();
    for a in &lits {
        for b in &lits {
            for c in &lits {
                let (x, y, z) = (base_atom(a), base_atom(b), base_atom(c));
                if x != y && y != z && x != z {
                    out.push((a.clone(), b.clone(), c.clone()));
                }
            }
        }
    }
    out
}
