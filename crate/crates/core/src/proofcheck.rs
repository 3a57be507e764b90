//! Hilbert-style proof checking for the knowing-how systems KHi (over
//! LTS^U) and KH (over LTS).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::formula::{parse, parse_agent_list, AgentId, Formula, FormulaError};

/// Largest number of distinct propositional components a TAUT line may have.
pub const MAX_TAUT_VARIABLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    Kh,
    Khi,
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "KH" => Ok(System::Kh),
            "KHi" => Ok(System::Khi),
            _ => Err(format!("unknown system `{s}` (expected KH or KHi)")),
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::Kh => "KH",
            System::Khi => "KHi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Schema {
    Taut,
    DistA,
    TA,
    FourKhA,
    FiveKhA,
    KhE,
    KhA,
    Emp,
    CompKh,
}

impl Schema {
    pub const ALL: [Schema; 9] = [
        Schema::Taut,
        Schema::DistA,
        Schema::TA,
        Schema::FourKhA,
        Schema::FiveKhA,
        Schema::KhE,
        Schema::KhA,
        Schema::Emp,
        Schema::CompKh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Schema::Taut => "TAUT",
            Schema::DistA => "DISTA",
            Schema::TA => "TA",
            Schema::FourKhA => "4KhA",
            Schema::FiveKhA => "5KhA",
            Schema::KhE => "KhE",
            Schema::KhA => "KhA",
            Schema::Emp => "EMP",
            Schema::CompKh => "COMPKh",
        }
    }

    pub fn from_name(name: &str) -> Option<Schema> {
        Schema::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn in_system(self, system: System) -> bool {
        match self {
            Schema::Emp | Schema::CompKh => system == System::Kh,
            _ => true,
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProofError {
    #[error("unknown schema `{0}`")]
    UnknownSchema(String),
    #[error("too many propositional components for TAUT ({0} > {MAX_TAUT_VARIABLES})")]
    TautTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Axiom(String),
    Mp(usize, usize),
    Neca(usize),
    Premise,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofLine {
    pub index: usize,
    pub formula: Formula,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofScript {
    pub system: System,
    pub agents: Vec<AgentId>,
    pub lines: Vec<ProofLine>,
}

/// The first bad line of a script.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {index}: {reason}")]
pub struct ProofFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScriptError {
    #[error("input line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("input line {line}: {source}")]
    Formula { line: usize, source: FormulaError },
    #[error("no agents declared (add an `agents:` header or pass them explicitly)")]
    NoAgents,
    #[error("no proof system given (add a `system:` header or pass one explicitly)")]
    NoSystem,
}

fn syntax(line: usize, message: impl Into<String>) -> ScriptError {
    ScriptError::Syntax {
        line,
        message: message.into(),
    }
}

/// Parses a proof file. Lines look like `3. A p -> p ; axiom TA`; blank
/// lines and lines starting with `#` are skipped. Optional `agents: i, j`
/// and `system: KHi` headers are overridden by the explicit arguments.
pub fn parse_script(
    text: &str,
    agents: Option<&[AgentId]>,
    system: Option<System>,
) -> Result<ProofScript, ScriptError> {
    let mut header_agents = None;
    let mut header_system = None;
    let mut body = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("agents:") {
            let list = parse_agent_list(rest).map_err(|source| ScriptError::Formula { line: line_no, source })?;
            header_agents = Some(list);
        } else if let Some(rest) = line.strip_prefix("system:") {
            header_system = Some(rest.trim().parse::<System>().map_err(|m| syntax(line_no, m))?);
        } else {
            body.push((line_no, line));
        }
    }
    let agents = match agents {
        Some(a) if !a.is_empty() => a.to_vec(),
        _ => header_agents.ok_or(ScriptError::NoAgents)?,
    };
    let system = system.or(header_system).ok_or(ScriptError::NoSystem)?;
    let mut lines = Vec::new();
    for (line_no, line) in body {
        let (head, rest) = line
            .split_once('.')
            .ok_or_else(|| syntax(line_no, "expected `<index>. <formula> ; <justification>`"))?;
        let index: usize = head
            .trim()
            .parse()
            .map_err(|_| syntax(line_no, format!("bad line index `{}`", head.trim())))?;
        let (formula_text, just_text) = rest
            .rsplit_once(';')
            .ok_or_else(|| syntax(line_no, "missing `; <justification>`"))?;
        let formula =
            parse(formula_text, &agents).map_err(|source| ScriptError::Formula { line: line_no, source })?;
        let justification = parse_justification(just_text).map_err(|m| syntax(line_no, m))?;
        lines.push(ProofLine {
            index,
            formula,
            justification,
        });
    }
    Ok(ProofScript {
        system,
        agents,
        lines,
    })
}

fn parse_justification(text: &str) -> Result<Justification, String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad line reference `{s}`"));
    match words.as_slice() {
        ["axiom", name] => Ok(Justification::Axiom(name.to_string())),
        ["mp", i, j] => Ok(Justification::Mp(num(i)?, num(j)?)),
        ["neca", i] => Ok(Justification::Neca(num(i)?)),
        ["premise"] => Ok(Justification::Premise),
        _ => Err(format!("unrecognised justification `{}`", text.trim())),
    }
}

#[derive(Debug, Clone)]
enum AgentPat {
    Var,
    Fixed(AgentId),
}

#[derive(Debug, Clone)]
enum Pat {
    Meta(usize),
    Not(Box<Pat>),
    Or(Box<Pat>, Box<Pat>),
    Kh(AgentPat, Box<Pat>, Box<Pat>),
    Bot,
}

const PHI: usize = 0;
const PSI: usize = 1;
const CHI: usize = 2;
const THETA: usize = 3;

fn meta(k: usize) -> Pat {
    Pat::Meta(k)
}

fn not(p: Pat) -> Pat {
    Pat::Not(Box::new(p))
}

fn or(a: Pat, b: Pat) -> Pat {
    Pat::Or(Box::new(a), Box::new(b))
}

fn and(a: Pat, b: Pat) -> Pat {
    not(or(not(a), not(b)))
}

fn imp(a: Pat, b: Pat) -> Pat {
    or(not(a), b)
}

fn kh(c: Pat, g: Pat) -> Pat {
    Pat::Kh(AgentPat::Var, Box::new(c), Box::new(g))
}

fn all(agents: &[AgentId], p: Pat) -> Pat {
    let disjunct = |a: &AgentId| Pat::Kh(AgentPat::Fixed(a.clone()), Box::new(not(p.clone())), Box::new(Pat::Bot));
    let mut it = agents.iter();
    let first = disjunct(it.next().expect("agents are nonempty"));
    it.fold(first, |acc, a| or(acc, disjunct(a)))
}

fn some(agents: &[AgentId], p: Pat) -> Pat {
    not(all(agents, not(p)))
}

fn patterns(schema: Schema, ag: &[AgentId]) -> Vec<Pat> {
    let (phi, psi, chi, theta) = (meta(PHI), meta(PSI), meta(CHI), meta(THETA));
    match schema {
        Schema::Taut => vec![],
        Schema::DistA => vec![imp(
            all(ag, imp(phi.clone(), psi.clone())),
            imp(all(ag, phi), all(ag, psi)),
        )],
        Schema::TA => vec![imp(all(ag, phi.clone()), phi)],
        Schema::FourKhA => vec![imp(kh(psi.clone(), phi.clone()), all(ag, kh(psi, phi)))],
        Schema::FiveKhA => vec![imp(
            not(kh(psi.clone(), phi.clone())),
            all(ag, not(kh(psi, phi))),
        )],
        Schema::KhE => vec![imp(
            and(some(ag, psi.clone()), kh(psi, phi.clone())),
            some(ag, phi),
        )],
        Schema::KhA => {
            let x = all(ag, imp(chi.clone(), psi.clone()));
            let y = kh(psi, phi.clone());
            let z = all(ag, imp(phi, theta.clone()));
            let goal = kh(chi, theta);
            vec![
                imp(and(and(x.clone(), y.clone()), z.clone()), goal.clone()),
                imp(and(x, and(y, z)), goal),
            ]
        }
        Schema::Emp => vec![imp(all(ag, imp(psi.clone(), phi.clone())), kh(psi, phi))],
        Schema::CompKh => vec![imp(
            and(kh(psi.clone(), phi.clone()), kh(phi, chi.clone())),
            kh(psi, chi),
        )],
    }
}

#[derive(Default)]
struct Bindings<'f> {
    metas: [Option<&'f Formula>; 4],
    agent: Option<&'f AgentId>,
}

fn matches<'f>(p: &Pat, f: &'f Formula, b: &mut Bindings<'f>) -> bool {
    match (p, f) {
        (Pat::Meta(k), _) => match b.metas[*k] {
            Some(bound) => bound == f,
            None => {
                b.metas[*k] = Some(f);
                true
            }
        },
        (Pat::Bot, Formula::Bot) => true,
        (Pat::Not(p), Formula::Not(g)) => matches(p, g, b),
        (Pat::Or(p, q), Formula::Or(g, h)) => matches(p, g, b) && matches(q, h, b),
        (Pat::Kh(ap, pc, pg), Formula::Kh(agent, c, g)) => {
            let agent_ok = match ap {
                AgentPat::Fixed(a) => a == agent,
                AgentPat::Var => match b.agent {
                    Some(bound) => bound == agent,
                    None => {
                        b.agent = Some(agent);
                        true
                    }
                },
            };
            agent_ok && matches(pc, c, b) && matches(pg, g, b)
        }
        _ => false,
    }
}

/// Truth-table check with every `Kh` subformula (and so every universal
/// or existential modality) treated as an opaque propositional variable.
pub fn is_tautology(f: &Formula) -> Result<bool, ProofError> {
    fn collect<'f>(f: &'f Formula, vars: &mut BTreeSet<&'f Formula>) {
        match f {
            Formula::Top | Formula::Bot => {}
            Formula::Atom(_) | Formula::Kh(..) => {
                vars.insert(f);
            }
            Formula::Not(a) => collect(a, vars),
            Formula::Or(a, b) => {
                collect(a, vars);
                collect(b, vars);
            }
        }
    }
    fn eval(f: &Formula, vars: &BTreeMap<&Formula, usize>, row: u64) -> bool {
        match f {
            Formula::Top => true,
            Formula::Bot => false,
            Formula::Atom(_) | Formula::Kh(..) => row >> vars[f] & 1 == 1,
            Formula::Not(a) => !eval(a, vars, row),
            Formula::Or(a, b) => eval(a, vars, row) || eval(b, vars, row),
        }
    }
    let mut vars = BTreeSet::new();
    collect(f, &mut vars);
    if vars.len() > MAX_TAUT_VARIABLES {
        return Err(ProofError::TautTooLarge(vars.len()));
    }
    let index: BTreeMap<&Formula, usize> = vars.into_iter().enumerate().map(|(k, v)| (v, k)).collect();
    Ok((0..1u64 << index.len()).all(|row| eval(f, &index, row)))
}

/// Whether `f` is an instance of `schema`, with the universal modality
/// read over `agents`.
pub fn axiom_instance(schema: Schema, f: &Formula, agents: &[AgentId]) -> Result<bool, ProofError> {
    if schema == Schema::Taut {
        return is_tautology(f);
    }
    Ok(patterns(schema, agents)
        .iter()
        .any(|p| matches(p, f, &mut Bindings::default())))
}

/// [`axiom_instance`] with the schema given by name.
pub fn axiom_instance_named(name: &str, f: &Formula, agents: &[AgentId]) -> Result<bool, ProofError> {
    let schema = Schema::from_name(name).ok_or_else(|| ProofError::UnknownSchema(name.to_string()))?;
    axiom_instance(schema, f, agents)
}

/// Checks every line in order and reports the first one that is not a
/// premise, an axiom of the script's system, or a correct rule application.
pub fn check_proof(s: &ProofScript) -> Result<(), ProofFailure> {
    // index -> (formula, depends on a premise)
    let mut proven: BTreeMap<usize, (&Formula, bool)> = BTreeMap::new();
    let mut last = 0;
    for line in &s.lines {
        let fail = |reason: String| ProofFailure {
            index: line.index,
            reason,
        };
        if line.index <= last {
            return Err(fail(format!("line index must exceed {last}")));
        }
        last = line.index;
        let cite = |k: usize| -> Result<(&Formula, bool), ProofFailure> {
            if k >= line.index {
                return Err(fail(format!("cites line {k}, which does not come earlier")));
            }
            proven
                .get(&k)
                .copied()
                .ok_or_else(|| fail(format!("cites missing line {k}")))
        };
        let tainted = match &line.justification {
            Justification::Premise => true,
            Justification::Axiom(name) => {
                let schema = Schema::from_name(name).ok_or_else(|| fail(format!("unknown schema `{name}`")))?;
                if !schema.in_system(s.system) {
                    return Err(fail(format!("schema {schema} not in system {}", s.system)));
                }
                match axiom_instance(schema, &line.formula, &s.agents) {
                    Ok(true) => false,
                    Ok(false) => return Err(fail(format!("not an instance of {schema}"))),
                    Err(e) => return Err(fail(e.to_string())),
                }
            }
            Justification::Mp(i, j) => {
                let (a, ta) = cite(*i)?;
                let (b, tb) = cite(*j)?;
                if *b != Formula::implies(a.clone(), line.formula.clone()) {
                    return Err(fail(format!(
                        "modus ponens needs line {j} to be line {i} -> this line"
                    )));
                }
                ta || tb
            }
            Justification::Neca(i) => {
                let (a, ta) = cite(*i)?;
                if ta {
                    return Err(fail(format!("necessitation of line {i}, which depends on a premise")));
                }
                if line.formula != Formula::universal(&s.agents, a.clone()) {
                    return Err(fail(format!("not the universal modality applied to line {i}")));
                }
                false
            }
        };
        proven.insert(line.index, (&line.formula, tainted));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i() -> Vec<AgentId> {
        vec![AgentId::new("i").unwrap()]
    }

    fn ij() -> Vec<AgentId> {
        vec![AgentId::new("i").unwrap(), AgentId::new("j").unwrap()]
    }

    fn inst(name: &str, text: &str, agents: &[AgentId]) -> bool {
        axiom_instance_named(name, &parse(text, agents).unwrap(), agents).unwrap()
    }

    #[test]
    fn schema_examples() {
        assert!(inst("TA", "A p -> p", &i()));
        assert!(inst("KhE", "(E p & Kh[i](p,q)) -> E q", &i()));
        assert!(!inst("TA", "p -> A p", &i()));
        assert_eq!(
            axiom_instance_named("K", &Formula::Top, &i()),
            Err(ProofError::UnknownSchema("K".into()))
        );
    }

    #[test]
    fn every_schema_matches_an_instance() {
        let cases = [
            ("TAUT", "Kh[i](p,q) | ~Kh[i](p,q)"),
            ("DISTA", "A(p -> Kh[j](q,r)) -> (A p -> A Kh[j](q,r))"),
            ("TA", "A (p & q) -> p & q"),
            ("4KhA", "Kh[j](p, q | r) -> A Kh[j](p, q | r)"),
            ("5KhA", "~Kh[i](p,q) -> A ~Kh[i](p,q)"),
            ("KhE", "(E (p | q) & Kh[j](p | q, r)) -> E r"),
            ("KhA", "(A(r -> p) & Kh[i](p,q) & A(q -> top)) -> Kh[i](r, top)"),
            ("KhA", "((A(r -> p) & Kh[i](p,q)) & A(q -> top)) -> Kh[i](r, top)"),
            ("EMP", "A(p -> q) -> Kh[j](p,q)"),
            ("COMPKh", "(Kh[i](p,q) & Kh[i](q,r)) -> Kh[i](p,r)"),
        ];
        for (name, text) in cases {
            assert!(inst(name, text, &ij()), "{name}: {text}");
        }
    }

    #[test]
    fn near_misses_are_rejected() {
        let cases = [
            ("TAUT", "p | Kh[i](p,q)"),
            ("DISTA", "A(p -> q) -> (A q -> A p)"),
            ("4KhA", "Kh[j](p,q) -> A Kh[i](p,q)"),
            ("KhE", "(E p & Kh[i](q,r)) -> E r"),
            ("KhA", "(A(r -> p) & Kh[i](p,q) & A(q -> top)) -> Kh[j](r, top)"),
            ("COMPKh", "(Kh[i](p,q) & Kh[j](q,r)) -> Kh[i](p,r)"),
            // A over one agent is not A over two
            ("TA", "Kh[i](~p, bot) -> p"),
        ];
        for (name, text) in cases {
            assert!(!inst(name, text, &ij()), "{name}: {text}");
        }
        assert!(inst("TA", "Kh[i](~p, bot) -> p", &i()));
    }

    #[test]
    fn taut_limit() {
        let big = (0..21).fold(Formula::Top, |acc, k| Formula::or(Formula::atom(format!("p{k}")), acc));
        assert_eq!(is_tautology(&big), Err(ProofError::TautTooLarge(21)));
    }

    const SMALL: &str = "agents: i\nsystem: KHi\n# comment\n1. p ; premise\n2. p -> p | q ; axiom TAUT\n3. p | q ; mp 1 2\n";

    #[test]
    fn scripts() {
        let s = parse_script(SMALL, None, None).unwrap();
        assert_eq!(s.lines.len(), 3);
        assert_eq!(check_proof(&s), Ok(()));

        let neca = format!("{SMALL}4. A (p | q) ; neca 3\n");
        let s = parse_script(&neca, None, None).unwrap();
        assert_eq!(check_proof(&s).unwrap_err().index, 4);

        let emp = "1. A(p -> q) -> Kh[i](p,q) ; axiom EMP\n";
        let s = parse_script(emp, Some(&i()), Some(System::Khi)).unwrap();
        let err = check_proof(&s).unwrap_err();
        assert_eq!(err.index, 1);
        assert!(err.reason.contains("not in system"));
        let s = parse_script(emp, Some(&i()), Some(System::Kh)).unwrap();
        assert_eq!(check_proof(&s), Ok(()));
    }

    #[test]
    fn bad_references() {
        let check = |text: &str| check_proof(&parse_script(text, Some(&i()), Some(System::Khi)).unwrap());
        assert_eq!(check("1. p ; mp 1 1\n").unwrap_err().index, 1);
        assert_eq!(check("1. p ; premise\n3. p ; neca 2\n").unwrap_err().index, 3);
        assert_eq!(check("2. p ; premise\n2. p ; premise\n").unwrap_err().index, 2);
        assert_eq!(check("1. p ; axiom NOPE\n").unwrap_err().reason, "unknown schema `NOPE`");
    }

    #[test]
    fn script_syntax_errors() {
        assert_eq!(parse_script("1. p ; premise", None, Some(System::Kh)), Err(ScriptError::NoAgents));
        assert_eq!(parse_script("agents: i\n", None, None), Err(ScriptError::NoSystem));
        let err = parse_script("agents: i\nsystem: KH\n\n1. p premise\n", None, None).unwrap_err();
        assert!(matches!(err, ScriptError::Syntax { line: 4, .. }));
        let err = parse_script("1. p & ; premise\n", Some(&i()), Some(System::Kh)).unwrap_err();
        assert!(matches!(err, ScriptError::Formula { line: 1, .. }));
        let err = parse_script("1. p ; mp x 2\n", Some(&i()), Some(System::Kh)).unwrap_err();
        assert!(matches!(err, ScriptError::Syntax { line: 1, .. }));
    }
}
