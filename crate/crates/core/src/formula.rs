//! Formulas of the multi-agent knowing-how language.
//!
//! The core syntax has atoms, the constants `top`/`bot`, negation,
//! disjunction and the binary modality `Kh[i](cond, goal)`. Everything else
//! accepted by [`parse`] (`&`, `->`, `<->`, `A`, `E`) is expanded into the
//! core syntax while parsing, so downstream code only ever matches on six
//! constructors.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Words that the lexer reserves; none of them can name an atom or an agent.
pub const KEYWORDS: [&str; 5] = ["top", "bot", "A", "E", "Kh"];

fn is_token(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Name of an agent. Nonempty, made of ASCII letters, digits and `_`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Result<Self, FormulaError> {
        let name = name.into();
        if is_token(&name) && !KEYWORDS.contains(&name.as_str()) {
            Ok(AgentId(name))
        } else {
            Err(FormulaError::BadAgentName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for AgentId {
    type Err = FormulaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentId::new(s)
    }
}

impl TryFrom<String> for AgentId {
    type Error = FormulaError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        AgentId::new(s)
    }
}

impl From<AgentId> for String {
    fn from(a: AgentId) -> String {
        a.0
    }
}

/// Parses a comma separated agent list such as `"i,j"`.
pub fn parse_agent_list(csv: &str) -> Result<Vec<AgentId>, FormulaError> {
    let agents = csv
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(AgentId::new)
        .collect::<Result<Vec<_>, _>>()?;
    if agents.is_empty() {
        return Err(FormulaError::NoAgents);
    }
    Ok(agents)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown agent `{agent}` at line {line}, column {column}")]
    UnknownAgent {
        agent: String,
        line: usize,
        column: usize,
    },
    #[error("the agent list is empty")]
    NoAgents,
    #[error("invalid agent name `{0}`")]
    BadAgentName(String),
}

/// A formula in core syntax.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(String),
    Top,
    Bot,
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Kh(AgentId, Box<Formula>, Box<Formula>),
}

/// A `Kh` subformula, identified up to structural equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KhAtom {
    pub agent: AgentId,
    pub cond: Formula,
    pub goal: Formula,
}

impl KhAtom {
    pub fn to_formula(&self) -> Formula {
        Formula::kh(self.agent.clone(), self.cond.clone(), self.goal.clone())
    }
}

impl fmt::Display for KhAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.agent, self.cond, self.goal)
    }
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn kh(agent: AgentId, cond: Formula, goal: Formula) -> Formula {
        Formula::Kh(agent, Box::new(cond), Box::new(goal))
    }

    /// `a & b` as `~(~a | ~b)`.
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::or(Formula::not(a), Formula::not(b)))
    }

    /// `a -> b` as `~a | b`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(Formula::not(a), b)
    }

    /// `a <-> b` as `(a -> b) & (b -> a)`.
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
    }

    /// Universal modality: the disjunction over `agents`, in order, of
    /// `Kh[i](~f, bot)`, folded to the left.
    ///
    /// Panics if `agents` is empty.
    pub fn universal(agents: &[AgentId], f: Formula) -> Formula {
        let mut it = agents.iter();
        let first = it.next().expect("universal modality needs at least one agent");
        let disjunct = |a: &AgentId| Formula::kh(a.clone(), Formula::not(f.clone()), Formula::Bot);
        it.fold(disjunct(first), |acc, a| Formula::or(acc, disjunct(a)))
    }

    /// Existential modality `~A~f`.
    pub fn existential(agents: &[AgentId], f: Formula) -> Formula {
        Formula::not(Formula::universal(agents, Formula::not(f)))
    }

    pub fn is_kh(&self) -> bool {
        matches!(self, Formula::Kh(..))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => 1,
            Formula::Not(a) => 1 + a.size(),
            Formula::Or(a, b) | Formula::Kh(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => 1,
            Formula::Not(a) => 1 + a.depth(),
            Formula::Or(a, b) | Formula::Kh(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Distinct subformulas in post-order (children before parents, first
    /// occurrence wins). The last element is `self`.
    pub fn subformulas(&self) -> Vec<&Formula> {
        fn walk<'a>(f: &'a Formula, seen: &mut HashSet<&'a Formula>, out: &mut Vec<&'a Formula>) {
            if seen.contains(f) {
                return;
            }
            match f {
                Formula::Atom(_) | Formula::Top | Formula::Bot => {}
                Formula::Not(a) => walk(a, seen, out),
                Formula::Or(a, b) | Formula::Kh(_, a, b) => {
                    walk(a, seen, out);
                    walk(b, seen, out);
                }
            }
            seen.insert(f);
            out.push(f);
        }
        let mut out = Vec::new();
        walk(self, &mut HashSet::new(), &mut out);
        out
    }

    /// All `Kh` subformulas, each once, in post-order.
    pub fn kh_atoms(&self) -> Vec<KhAtom> {
        self.subformulas()
            .into_iter()
            .filter_map(|f| match f {
                Formula::Kh(agent, cond, goal) => Some(KhAtom {
                    agent: agent.clone(),
                    cond: (**cond).clone(),
                    goal: (**goal).clone(),
                }),
                _ => None,
            })
            .collect()
    }

    /// Atom names in order of first occurrence.
    pub fn atoms(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in self.subformulas() {
            if let Formula::Atom(p) = f {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    /// Agents indexing some `Kh` node, in order of first occurrence.
    pub fn agents(&self) -> Vec<AgentId> {
        let mut out: Vec<AgentId> = Vec::new();
        for f in self.subformulas() {
            if let Formula::Kh(a, _, _) = f {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
        }
        out
    }

    /// Fully parenthesized prefix form of the core AST, e.g.
    /// `(kh i (atom p) (not bot))`.
    pub fn to_sexpr(&self) -> String {
        match self {
            Formula::Atom(p) => format!("(atom {p})"),
            Formula::Top => "top".to_string(),
            Formula::Bot => "bot".to_string(),
            Formula::Not(a) => format!("(not {})", a.to_sexpr()),
            Formula::Or(a, b) => format!("(or {} {})", a.to_sexpr(), b.to_sexpr()),
            Formula::Kh(i, c, g) => format!("(kh {i} {} {})", c.to_sexpr(), g.to_sexpr()),
        }
    }

    /// Renders with the fewest parentheses that still parse back to `self`.
    pub fn render(&self) -> String {
        self.to_string()
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Or(..) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p) => f.write_str(p),
            Formula::Top => f.write_str("top"),
            Formula::Bot => f.write_str("bot"),
            Formula::Not(a) => {
                f.write_str("~")?;
                a.fmt_operand(f)
            }
            // `|` is right-associative, so only a disjunction on the left needs parentheses.
            Formula::Or(a, b) => {
                a.fmt_operand(f)?;
                write!(f, " | {b}")
            }
            Formula::Kh(i, c, g) => write!(f, "Kh[{i}]({c}, {g})"),
        }
    }
}

/// Parses `text` into core syntax, expanding `A`/`E` over `agents`.
pub fn parse(text: &str, agents: &[AgentId]) -> Result<Formula, FormulaError> {
    if agents.is_empty() {
        return Err(FormulaError::NoAgents);
    }
    let mut declared: Vec<AgentId> = Vec::with_capacity(agents.len());
    for a in agents {
        if !declared.contains(a) {
            declared.push(a.clone());
        }
    }
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        agents: &declared,
    };
    let f = parser.formula()?;
    let tok = parser.peek();
    if tok.kind != Tok::Eof {
        return Err(parser.error_at(tok, "unexpected trailing input"));
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Top,
    Bot,
    Kh,
    All,
    Some,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Top => "`top`",
            Tok::Bot => "`bot`",
            Tok::Kh => "`Kh`",
            Tok::All => "`A`",
            Tok::Some => "`E`",
            Tok::Tilde => "`~`",
            Tok::Amp => "`&`",
            Tok::Pipe => "`|`",
            Tok::Arrow => "`->`",
            Tok::DArrow => "`<->`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let start = (line, column);
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        let (kind, len) = if c.is_ascii_alphanumeric() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let kind = match word.as_str() {
                "top" => Tok::Top,
                "bot" => Tok::Bot,
                "Kh" => Tok::Kh,
                "A" => Tok::All,
                "E" => Tok::Some,
                _ => Tok::Ident(word),
            };
            (kind, j - i)
        } else {
            let next = chars.get(i + 1).copied();
            match c {
                '~' => (Tok::Tilde, 1),
                '&' => (Tok::Amp, 1),
                '|' => (Tok::Pipe, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '[' => (Tok::LBracket, 1),
                ']' => (Tok::RBracket, 1),
                ',' => (Tok::Comma, 1),
                '-' if next == Some('>') => (Tok::Arrow, 2),
                '<' if next == Some('-') && chars.get(i + 2) == Some(&'>') => (Tok::DArrow, 3),
                _ => {
                    return Err(FormulaError::Syntax {
                        line,
                        column,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        tokens.push(Token {
            kind,
            line: start.0,
            column: start.1,
        });
        i += len;
        column += len;
    }
    tokens.push(Token {
        kind: Tok::Eof,
        line,
        column,
    });
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    agents: &'a [AgentId],
}

impl Parser<'_> {
    fn peek(&self) -> Token {
        self.tokens[self.pos].clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.peek();
        if t.kind != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, tok: Token, message: &str) -> FormulaError {
        FormulaError::Syntax {
            line: tok.line,
            column: tok.column,
            message: format!("{message} (found {})", tok.kind),
        }
    }

    fn expect(&mut self, kind: Tok) -> Result<Token, FormulaError> {
        let tok = self.peek();
        if tok.kind == kind {
            Ok(self.bump())
        } else {
            Err(self.error_at(tok, &format!("expected {kind}")))
        }
    }

    // formula := disj (("->" | "<->") formula)?
    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disjunction()?;
        match self.peek().kind {
            Tok::Arrow => {
                self.bump();
                Ok(Formula::implies(lhs, self.formula()?))
            }
            Tok::DArrow => {
                self.bump();
                Ok(Formula::iff(lhs, self.formula()?))
            }
            _ => Ok(lhs),
        }
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.conjunction()?;
        if self.peek().kind == Tok::Pipe {
            self.bump();
            return Ok(Formula::or(lhs, self.disjunction()?));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.unary()?;
        if self.peek().kind == Tok::Amp {
            self.bump();
            return Ok(Formula::and(lhs, self.conjunction()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().kind {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::All => {
                self.bump();
                Ok(Formula::universal(self.agents, self.unary()?))
            }
            Tok::Some => {
                self.bump();
                Ok(Formula::existential(self.agents, self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, FormulaError> {
        let tok = self.bump();
        match tok.kind {
            Tok::Ident(name) => Ok(Formula::Atom(name)),
            Tok::Top => Ok(Formula::Top),
            Tok::Bot => Ok(Formula::Bot),
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Kh => {
                self.expect(Tok::LBracket)?;
                let agent_tok = self.bump();
                let agent = match agent_tok.kind {
                    Tok::Ident(ref name) => match self.agents.iter().find(|a| a.as_str() == name) {
                        Some(a) => a.clone(),
                        None => {
                            return Err(FormulaError::UnknownAgent {
                                agent: name.clone(),
                                line: agent_tok.line,
                                column: agent_tok.column,
                            })
                        }
                    },
                    _ => return Err(self.error_at(agent_tok, "expected an agent name")),
                };
                self.expect(Tok::RBracket)?;
                self.expect(Tok::LParen)?;
                let cond = self.formula()?;
                self.expect(Tok::Comma)?;
                let goal = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(Formula::kh(agent, cond, goal))
            }
            _ => Err(self.error_at(tok, "expected a formula")),
        }
    }
}
