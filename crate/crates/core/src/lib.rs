//! Norm-aware planning: an answer-set kernel, an authorization and
//! obligation policy engine, explicit transition systems, a lexicographic
//! multi-metric planner and a controller that re-plans when the agent's
//! behavior mode changes mid-plan.

pub mod aopl;
pub mod catalog;
pub mod controller;
pub mod domain;
pub mod error;
pub mod logic;
pub mod planner;
pub mod syntax;
pub mod term;

pub use error::ParseError;
pub use term::{Atom, Literal, Term};
