//! Quantum discrete event systems.
//!
//! Quantum finite automata (measure-once, measure-many, with classical
//! states), their compilation into real-valued bilinear machines, equivalence
//! checking, and supervisory control: supervisor synthesis, closed-loop
//! evaluation and an exact controllability decision.

pub mod alphabet;
pub mod automata;
pub mod blm;
pub mod composition;
pub mod equivalence;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod language;
pub mod linalg;
pub mod random;
pub mod supervisory;

pub use alphabet::{Alphabet, Word, END_MARKER};
pub use automata::{Automaton, Dfa, MmQfa, MoQfa, Qfac, Violation, ViolationKind};
pub use blm::{LinearMachine, MachineExpr, Rblm};
pub use error::{QdesError, Result};
pub use language::QuantumLanguage;
pub use linalg::{CMatrix, CVector, Projector, C64};
