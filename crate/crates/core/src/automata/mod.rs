//! Automaton models: DFA, measure-once QFA, measure-many QFA and QFA with
//! classical states, with exact acceptance-probability evaluators.

mod dfa;
mod mm;
mod mo;
mod qfac;

use std::fmt;

pub use dfa::{dfa_accepts, Dfa};
pub use mm::{mm_accept_prob, MmQfa, MmTrace};
pub use mo::{mo_accept_prob, MoQfa};
pub use qfac::{qfac_accept_prob, Qfac};

use crate::blm::Rblm;
use crate::linalg::{CMatrix, Projector, VALIDATION_TOL};

/// Tolerance used when checking that evaluated probabilities lie in `[0, 1]`.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NonUnitary,
    NotNormalized,
    Partition,
    Dimension,
    NonFinite,
    Transition,
    EndMarker,
    Alphabet,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::NonUnitary => "non-unitary",
            ViolationKind::NotNormalized => "not-normalized",
            ViolationKind::Partition => "partition",
            ViolationKind::Dimension => "dimension",
            ViolationKind::NonFinite => "non-finite",
            ViolationKind::Transition => "transition",
            ViolationKind::EndMarker => "end-marker",
            ViolationKind::Alphabet => "alphabet",
        };
        f.write_str(s)
    }
}

/// A failed invariant, naming the offending component.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub component: String,
    pub detail: String,
}

impl Violation {
    pub fn new(kind: ViolationKind, component: impl Into<String>, detail: impl Into<String>) -> Self {
        Violation {
            kind,
            component: component.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind, self.component, self.detail)
    }
}

pub(crate) fn check_unitary(m: &CMatrix, dim: usize, component: &str, out: &mut Vec<Violation>) {
    if m.rows() != dim || m.cols() != dim {
        out.push(Violation::new(
            ViolationKind::Dimension,
            component,
            format!("expected {dim}x{dim}, found {}x{}", m.rows(), m.cols()),
        ));
        return;
    }
    if !m.is_finite() {
        out.push(Violation::new(ViolationKind::NonFinite, component, "NaN or infinite entry"));
        return;
    }
    if !m.is_unitary(VALIDATION_TOL).unwrap_or(false) {
        out.push(Violation::new(
            ViolationKind::NonUnitary,
            component,
            "U U† deviates from I beyond tolerance",
        ));
    }
}

pub(crate) fn check_state(v: &[crate::linalg::C64], dim: usize, component: &str, out: &mut Vec<Violation>) {
    if v.len() != dim {
        out.push(Violation::new(
            ViolationKind::Dimension,
            component,
            format!("expected dimension {dim}, found {}", v.len()),
        ));
        return;
    }
    if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        out.push(Violation::new(ViolationKind::NonFinite, component, "NaN or infinite entry"));
        return;
    }
    let n = crate::linalg::norm(v);
    if (n - 1.0).abs() > VALIDATION_TOL {
        out.push(Violation::new(
            ViolationKind::NotNormalized,
            component,
            format!("norm {n}"),
        ));
    }
}

pub(crate) fn check_partition(dim: usize, parts: &[(&str, &Projector)], component: &str, out: &mut Vec<Violation>) {
    for (name, p) in parts {
        if p.dim() != dim {
            out.push(Violation::new(
                ViolationKind::Dimension,
                format!("{component} {name}"),
                format!("projector dimension {} != {dim}", p.dim()),
            ));
            return;
        }
    }
    let ps: Vec<&Projector> = parts.iter().map(|(_, p)| *p).collect();
    if let Some(i) = crate::linalg::partition_defect(dim, &ps) {
        let names: Vec<&str> = parts.iter().map(|(n, _)| *n).collect();
        out.push(Violation::new(
            ViolationKind::Partition,
            component,
            format!(
                "basis state {i} is not covered exactly once by {}",
                names.join("/")
            ),
        ));
    }
}

/// Any automaton the library can load, save and validate.
#[derive(Clone, Debug)]
pub enum Automaton {
    Dfa(Dfa),
    Mo(MoQfa),
    Mm(MmQfa),
    Qfac(Qfac),
    Rblm(Rblm),
}

impl Automaton {
    pub fn kind(&self) -> &'static str {
        match self {
            Automaton::Dfa(_) => "dfa",
            Automaton::Mo(_) => "mo-qfa",
            Automaton::Mm(_) => "mm-qfa",
            Automaton::Qfac(_) => "qfac",
            Automaton::Rblm(_) => "rblm",
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        match self {
            Automaton::Dfa(a) => a.validate(),
            Automaton::Mo(a) => a.validate(),
            Automaton::Mm(a) => a.validate(),
            Automaton::Qfac(a) => a.validate(),
            Automaton::Rblm(a) => a.validate(),
        }
    }

    pub fn alphabet(&self) -> &crate::alphabet::Alphabet {
        match self {
            Automaton::Dfa(a) => a.alphabet(),
            Automaton::Mo(a) => a.alphabet(),
            Automaton::Mm(a) => a.alphabet(),
            Automaton::Qfac(a) => a.alphabet(),
            Automaton::Rblm(a) => a.alphabet(),
        }
    }
}

/// Validation as a free function over any model.
pub fn validate(a: &Automaton) -> Vec<Violation> {
    a.validate()
}
