//! Soft-constraint analysis of security protocols.
//!
//! Principals are variables, messages are values, and constraints grade
//! each principal's knowledge with a security level. Comparing the SCSP of
//! the intended protocol run with the SCSP of an observed trace exposes
//! confidentiality and authentication attacks as drops in those levels.

pub mod bundled;
pub mod dsl;
pub mod entailment;
pub mod generic;
pub mod goals;
mod lex;
pub mod message;
pub mod report;
pub mod risk;
pub mod scenario;
pub mod scsp;
pub mod semiring;

pub use dsl::{parse_scenario, print_scenario, DslError};
pub use entailment::{entail_closure, entails, RuleProfile};
pub use goals::{AttackReport, Goal, SpeaksAboutConfig};
pub use message::{AtomTable, Message, MessageUniverse, TermId};
pub use risk::{Predecessor, RiskFunction};
pub use scenario::{build_imputable_scsp, build_initial_scsp, build_policy_scsp, Event, Scenario};
pub use scsp::{Constraint, LevelMap, ProtocolScsp, Scsp};
pub use semiring::{
    BooleanSemiring, FuzzyF32, FuzzyF64, FuzzyRational, FuzzySemiring, Level, SecuritySemiring, Semiring,
};
