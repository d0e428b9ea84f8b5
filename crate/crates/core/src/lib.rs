//! Knowledge-grounded multi-agent architecture design engine.
//!
//! Four agent roles (analyst, modeler, designer, evaluator) are driven over a
//! software requirements specification by a journaled state machine. Each
//! role is grounded in retrieved knowledge chunks; deterministic checks and a
//! judged evaluation decide whether to confirm the design or route a
//! refinement back to the earliest responsible stage.

pub mod agent;
pub mod artifact;
pub mod dsl;
pub mod evaluator;
pub mod kb;
pub mod orchestrator;
mod role;

pub use role::Role;
