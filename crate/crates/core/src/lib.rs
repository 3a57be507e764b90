//! Knowing-how logic over uncertainty-based labeled transition systems:
//! parsing, model checking under both semantics, satisfiability with
//! certificates, Hilbert proof checking and randomized differential testing.

pub mod formula;
pub mod harness;
pub mod ltsplan;
pub mod mcheck;
pub mod model;
pub mod proofcheck;
pub mod sat;

pub use formula::{parse, AgentId, Formula, FormulaError};
pub use mcheck::{check, extension, CheckError, Extension};
pub use model::{Lts, Ltsu, Plan, PlanSet, StateSet};
