use crate::alphabet::{Alphabet, Word};
use crate::error::{QdesError, Result};
use crate::language::{clamp_prob, Levels, QuantumLanguage};
use crate::linalg::{CMatrix, CVector, Projector, C64};

use super::{check_partition, check_state, check_unitary, MoQfa, Violation, ViolationKind, PROB_TOL};

/// One-way quantum finite automaton with classical states.
///
/// A classical DFA `δ` selects, at every step, which unitary `U_{s,σ}` acts on
/// the quantum register and, at the end, which measurement `{P_{s,a}, P_{s,r}}`
/// is applied.
#[derive(Clone, Debug)]
pub struct Qfac {
    alphabet: Alphabet,
    classical: usize,
    dim: usize,
    start: usize,
    initial: CVector,
    /// `delta[s][σ]`.
    delta: Vec<Vec<usize>>,
    /// `unitaries[s][σ]`.
    unitaries: Vec<Vec<CMatrix>>,
    accept: Vec<Projector>,
    reject: Vec<Projector>,
}

impl Qfac {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alphabet: Alphabet,
        start: usize,
        initial: CVector,
        delta: Vec<Vec<usize>>,
        unitaries: Vec<Vec<CMatrix>>,
        accept: Vec<Projector>,
        reject: Vec<Projector>,
    ) -> Result<Self> {
        let q = Self::from_parts(alphabet, start, initial, delta, unitaries, accept, reject)?;
        let v = q.validate();
        if v.is_empty() {
            Ok(q)
        } else {
            Err(QdesError::Invalid(v))
        }
    }

    /// Rejecting projectors are taken as the complements of the accepting ones.
    pub fn with_accepting(
        alphabet: Alphabet,
        start: usize,
        initial: CVector,
        delta: Vec<Vec<usize>>,
        unitaries: Vec<Vec<CMatrix>>,
        accept: Vec<Projector>,
    ) -> Result<Self> {
        let reject = accept.iter().map(|p| p.complement()).collect();
        Self::new(alphabet, start, initial, delta, unitaries, accept, reject)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        alphabet: Alphabet,
        start: usize,
        initial: CVector,
        delta: Vec<Vec<usize>>,
        unitaries: Vec<Vec<CMatrix>>,
        accept: Vec<Projector>,
        reject: Vec<Projector>,
    ) -> Result<Self> {
        let k = delta.len();
        for (what, len) in [
            ("unitaries", unitaries.len()),
            ("accepting projectors", accept.len()),
            ("rejecting projectors", reject.len()),
        ] {
            if len != k {
                return Err(QdesError::Document(format!(
                    "{what}: expected one entry per classical state ({k}), found {len}"
                )));
            }
        }
        Ok(Qfac {
            dim: initial.dim(),
            classical: k,
            alphabet,
            start,
            initial,
            delta,
            unitaries,
            accept,
            reject,
        })
    }

    /// A single classical state carrying an MO-QFA.
    pub fn from_mo(m: &MoQfa) -> Qfac {
        Qfac {
            alphabet: m.alphabet().clone(),
            classical: 1,
            dim: m.dim(),
            start: 0,
            initial: m.initial().clone(),
            delta: vec![vec![0; m.alphabet().len()]],
            unitaries: vec![m.unitaries().to_vec()],
            accept: vec![m.accept().clone()],
            reject: vec![m.reject().clone()],
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn classical_states(&self) -> usize {
        self.classical
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn initial(&self) -> &CVector {
        &self.initial
    }

    pub fn delta(&self, s: usize, sym: usize) -> usize {
        self.delta[s][sym]
    }

    pub fn transitions(&self) -> &[Vec<usize>] {
        &self.delta
    }

    pub fn unitary(&self, s: usize, sym: usize) -> &CMatrix {
        &self.unitaries[s][sym]
    }

    pub fn accept(&self, s: usize) -> &Projector {
        &self.accept[s]
    }

    pub fn reject(&self, s: usize) -> &Projector {
        &self.reject[s]
    }

    /// Same automaton with every transition on `sym` redirected to `target`.
    pub fn retarget_symbol(&self, sym: usize, target: usize) -> Result<Qfac> {
        if target >= self.classical {
            return Err(QdesError::InvalidParameter(format!(
                "classical state {target} out of range"
            )));
        }
        let mut q = self.clone();
        for row in q.delta.iter_mut() {
            row[sym] = target;
        }
        Ok(q)
    }

    /// Same automaton with the single transition `δ(s, sym)` redirected.
    pub fn retarget_transition(&self, s: usize, sym: usize, target: usize) -> Result<Qfac> {
        if target >= self.classical || s >= self.classical || sym >= self.alphabet.len() {
            return Err(QdesError::InvalidParameter(format!(
                "transition ({s}, {sym}) -> {target} out of range"
            )));
        }
        let mut q = self.clone();
        q.delta[s][sym] = target;
        Ok(q)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.dim == 0 {
            out.push(Violation::new(ViolationKind::Dimension, "initial", "dimension must be positive"));
            return out;
        }
        if self.classical == 0 || self.start >= self.classical {
            out.push(Violation::new(
                ViolationKind::Transition,
                "start",
                format!("initial classical state {} not among {} states", self.start, self.classical),
            ));
        }
        for (s, row) in self.delta.iter().enumerate() {
            if row.len() != self.alphabet.len() {
                out.push(Violation::new(
                    ViolationKind::Transition,
                    format!("delta[{s}]"),
                    "transition function is not total",
                ));
                continue;
            }
            for (sym, &t) in row.iter().enumerate() {
                if t >= self.classical {
                    out.push(Violation::new(
                        ViolationKind::Transition,
                        format!("delta[{s}][{}]", self.alphabet.symbol(sym)),
                        format!("target {t} out of range"),
                    ));
                }
            }
        }
        for (s, us) in self.unitaries.iter().enumerate() {
            if us.len() != self.alphabet.len() {
                out.push(Violation::new(
                    ViolationKind::Dimension,
                    format!("U[{s}]"),
                    "one unitary per symbol required",
                ));
                continue;
            }
            for (sym, u) in us.iter().enumerate() {
                check_unitary(u, self.dim, &format!("U[{s}][{}]", self.alphabet.symbol(sym)), &mut out);
            }
        }
        check_state(&self.initial.0, self.dim, "initial", &mut out);
        for s in 0..self.classical {
            check_partition(
                self.dim,
                &[("P_a", &self.accept[s]), ("P_r", &self.reject[s])],
                &format!("measurement[{s}]"),
                &mut out,
            );
        }
        out
    }

    /// Classical state `μ(x)` and quantum state `v(x) ψ₀`.
    pub fn run(&self, w: &[usize]) -> (usize, Vec<C64>) {
        let mut s = self.start;
        let mut psi = self.initial.0.clone();
        for &sym in w {
            psi = self.unitaries[s][sym].apply_unchecked(&psi);
            s = self.delta[s][sym];
        }
        (s, psi)
    }

    pub fn accept_prob_raw(&self, w: &[usize]) -> f64 {
        let (s, psi) = self.run(w);
        self.accept[s].indices().iter().map(|&i| psi[i].norm_sqr()).sum()
    }

    pub fn accept_prob(&self, w: &Word) -> Result<f64> {
        let idx = self.alphabet.encode(w)?;
        Ok(self.prob(&idx))
    }
}

impl QuantumLanguage for Qfac {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn prob(&self, w: &[usize]) -> f64 {
        clamp_prob(self.accept_prob_raw(w), PROB_TOL)
    }

    fn levels(&self, max_len: usize) -> Levels {
        Levels::from_states(
            self.alphabet.len(),
            max_len,
            (self.start, self.initial.0.clone()),
            |(s, psi), sym| (self.delta[*s][sym], self.unitaries[*s][sym].apply_unchecked(psi)),
            |(s, psi)| {
                let v: f64 = self.accept[*s].indices().iter().map(|&i| psi[i].norm_sqr()).sum();
                clamp_prob(v, PROB_TOL)
            },
        )
    }
}

pub fn qfac_accept_prob(m: &Qfac, w: &Word) -> Result<f64> {
    m.accept_prob(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_word_with_full_accept() {
        let q = Qfac::with_accepting(
            Alphabet::new(["a"]).unwrap(),
            0,
            CVector::basis(2, 1),
            vec![vec![0]],
            vec![vec![CMatrix::identity(2)]],
            vec![Projector::full(2)],
        )
        .unwrap();
        assert_eq!(q.accept_prob(&Word::empty()).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_transition_is_reported() {
        let q = Qfac::from_parts(
            Alphabet::new(["a"]).unwrap(),
            0,
            CVector::basis(1, 0),
            vec![vec![3]],
            vec![vec![CMatrix::identity(1)]],
            vec![Projector::full(1)],
            vec![Projector::empty(1)],
        )
        .unwrap();
        let v = q.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Transition);
    }
}
