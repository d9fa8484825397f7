use crate::alphabet::{Alphabet, Word};
use crate::error::{QdesError, Result};
use crate::language::{clamp_prob, Levels, QuantumLanguage};
use crate::linalg::{CMatrix, CVector, Projector};

use super::{check_partition, check_state, check_unitary, Violation, ViolationKind, PROB_TOL};

/// Measure-once quantum finite automaton.
///
/// Acceptance probability of `x_1..x_m` is `‖P(a) U(x_m)···U(x_1) ψ₀‖²`.
#[derive(Clone, Debug)]
pub struct MoQfa {
    alphabet: Alphabet,
    dim: usize,
    unitaries: Vec<CMatrix>,
    initial: CVector,
    accept: Projector,
    reject: Projector,
}

impl MoQfa {
    /// Builds and validates.
    pub fn new(
        alphabet: Alphabet,
        unitaries: Vec<CMatrix>,
        initial: CVector,
        accept: Projector,
        reject: Projector,
    ) -> Result<Self> {
        let m = Self::from_parts(alphabet, unitaries, initial, accept, reject)?;
        let v = m.validate();
        if v.is_empty() {
            Ok(m)
        } else {
            Err(QdesError::Invalid(v))
        }
    }

    /// Builds without checking unitarity or the projector partition. Only the
    /// unitary count must match the alphabet.
    pub fn from_parts(
        alphabet: Alphabet,
        unitaries: Vec<CMatrix>,
        initial: CVector,
        accept: Projector,
        reject: Projector,
    ) -> Result<Self> {
        if unitaries.len() != alphabet.len() {
            return Err(QdesError::DimensionMismatch {
                expected: alphabet.len(),
                found: unitaries.len(),
            });
        }
        Ok(MoQfa {
            dim: initial.dim(),
            alphabet,
            unitaries,
            initial,
            accept,
            reject,
        })
    }

    /// Accepting set given; the rejecting set is its complement.
    pub fn with_accepting(
        alphabet: Alphabet,
        unitaries: Vec<CMatrix>,
        initial: CVector,
        accept: Projector,
    ) -> Result<Self> {
        let reject = accept.complement();
        Self::new(alphabet, unitaries, initial, accept, reject)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unitary(&self, sym: usize) -> &CMatrix {
        &self.unitaries[sym]
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn initial(&self) -> &CVector {
        &self.initial
    }

    pub fn accept(&self) -> &Projector {
        &self.accept
    }

    pub fn reject(&self) -> &Projector {
        &self.reject
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.dim == 0 {
            out.push(Violation::new(ViolationKind::Dimension, "initial", "dimension must be positive"));
            return out;
        }
        for (i, u) in self.unitaries.iter().enumerate() {
            check_unitary(u, self.dim, &format!("U({})", self.alphabet.symbol(i)), &mut out);
        }
        check_state(&self.initial.0, self.dim, "initial", &mut out);
        check_partition(
            self.dim,
            &[("P(a)", &self.accept), ("P(r)", &self.reject)],
            "measurement",
            &mut out,
        );
        out
    }

    /// Final state `U(x_m)···U(x_1) ψ₀`.
    pub fn final_state(&self, w: &[usize]) -> Vec<crate::linalg::C64> {
        let mut psi = self.initial.0.clone();
        for &s in w {
            psi = self.unitaries[s].apply_unchecked(&psi);
        }
        psi
    }

    pub fn accept_prob_raw(&self, w: &[usize]) -> f64 {
        let psi = self.final_state(w);
        self.accept.indices().iter().map(|&i| psi[i].norm_sqr()).sum()
    }

    pub fn accept_prob(&self, w: &Word) -> Result<f64> {
        let idx = self.alphabet.encode(w)?;
        Ok(self.prob(&idx))
    }
}

impl QuantumLanguage for MoQfa {
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
            self.initial.0.clone(),
            |psi, sym| self.unitaries[sym].apply_unchecked(psi),
            |psi| clamp_prob(self.accept.indices().iter().map(|&i| psi[i].norm_sqr()).sum(), PROB_TOL),
        )
    }
}

/// `‖P(a) U_w ψ₀‖²`.
pub fn mo_accept_prob(m: &MoQfa, w: &Word) -> Result<f64> {
    m.accept_prob(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{r, CMatrix};
    use std::f64::consts::PI;

    fn rotation_automaton(theta: f64) -> MoQfa {
        let u = CMatrix::from_real_rows(&[&[theta.cos(), -theta.sin()], &[theta.sin(), theta.cos()]]).unwrap();
        MoQfa::with_accepting(
            Alphabet::new(["0"]).unwrap(),
            vec![u],
            CVector::basis(2, 0),
            Projector::new(2, [0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn empty_word_inside_accepting_subspace() {
        let m = rotation_automaton(0.4);
        assert_eq!(m.accept_prob(&Word::empty()).unwrap(), 1.0);
    }

    #[test]
    fn quarter_turn_rotation() {
        let m = rotation_automaton(PI / 4.0);
        // cos²(π/4) and cos²(π/2) by the 2x2 product oracle.
        assert!((m.accept_prob(&Word::parse("0")).unwrap() - 0.5).abs() < 1e-15);
        assert!(m.accept_prob(&Word::parse("00")).unwrap().abs() < 1e-15);
    }

    #[test]
    fn unknown_symbol() {
        let m = rotation_automaton(0.1);
        assert!(matches!(m.accept_prob(&Word::parse("01")), Err(QdesError::UnknownSymbol(_))));
    }

    #[test]
    fn non_unitary_is_one_violation() {
        let m = MoQfa::from_parts(
            Alphabet::new(["0"]).unwrap(),
            vec![CMatrix::diag(&[r(1.0), r(2.0)])],
            CVector::basis(2, 0),
            Projector::new(2, [0]).unwrap(),
            Projector::new(2, [1]).unwrap(),
        )
        .unwrap();
        let v = m.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::NonUnitary);
        assert!(v[0].component.contains('0'));
    }
}
