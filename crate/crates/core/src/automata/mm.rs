use crate::alphabet::{Alphabet, Word, END_MARKER};
use crate::error::{QdesError, Result};
use crate::language::{clamp_prob, Levels, QuantumLanguage};
use crate::linalg::{CMatrix, CVector, Projector, C64};

use super::{check_partition, check_state, check_unitary, Violation, ViolationKind, PROB_TOL};

/// Measure-many quantum finite automaton over `Σ ∪ {$}`.
///
/// After every symbol (and after the end marker, which is appended
/// internally) the state is measured with `{P(a), P(r), P(g)}`; computation
/// continues only on the going outcome.
#[derive(Clone, Debug)]
pub struct MmQfa {
    alphabet: Alphabet,
    dim: usize,
    unitaries: Vec<CMatrix>,
    end_unitary: CMatrix,
    initial: CVector,
    accept: Projector,
    reject: Projector,
    going: Projector,
}

/// Per-step halting masses of one run on `w$`.
#[derive(Clone, Debug, Default)]
pub struct MmTrace {
    pub accept: Vec<f64>,
    pub reject: Vec<f64>,
}

impl MmTrace {
    pub fn total_accept(&self) -> f64 {
        self.accept.iter().sum()
    }

    pub fn total_halting(&self) -> f64 {
        self.accept.iter().sum::<f64>() + self.reject.iter().sum::<f64>()
    }
}

impl MmQfa {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alphabet: Alphabet,
        unitaries: Vec<CMatrix>,
        end_unitary: CMatrix,
        initial: CVector,
        accept: Projector,
        reject: Projector,
        going: Projector,
    ) -> Result<Self> {
        let m = Self::from_parts(alphabet, unitaries, end_unitary, initial, accept, reject, going)?;
        let v = m.validate();
        if v.is_empty() {
            Ok(m)
        } else {
            Err(QdesError::Invalid(v))
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        alphabet: Alphabet,
        unitaries: Vec<CMatrix>,
        end_unitary: CMatrix,
        initial: CVector,
        accept: Projector,
        reject: Projector,
        going: Projector,
    ) -> Result<Self> {
        if unitaries.len() != alphabet.len() {
            return Err(QdesError::DimensionMismatch {
                expected: alphabet.len(),
                found: unitaries.len(),
            });
        }
        Ok(MmQfa {
            dim: initial.dim(),
            alphabet,
            unitaries,
            end_unitary,
            initial,
            accept,
            reject,
            going,
        })
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

    pub fn end_unitary(&self) -> &CMatrix {
        &self.end_unitary
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

    pub fn going(&self) -> &Projector {
        &self.going
    }

    /// Same automaton with `U(sym)` replaced.
    pub fn with_unitary(&self, sym: usize, u: CMatrix) -> Result<MmQfa> {
        let mut unitaries = self.unitaries.clone();
        unitaries[sym] = u;
        MmQfa::new(
            self.alphabet.clone(),
            unitaries,
            self.end_unitary.clone(),
            self.initial.clone(),
            self.accept.clone(),
            self.reject.clone(),
            self.going.clone(),
        )
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.dim == 0 {
            out.push(Violation::new(ViolationKind::Dimension, "initial", "dimension must be positive"));
            return out;
        }
        if self.alphabet.contains(END_MARKER) {
            out.push(Violation::new(
                ViolationKind::EndMarker,
                "alphabet",
                "input alphabet must not contain `$`",
            ));
        }
        for (i, u) in self.unitaries.iter().enumerate() {
            check_unitary(u, self.dim, &format!("U({})", self.alphabet.symbol(i)), &mut out);
        }
        check_unitary(&self.end_unitary, self.dim, "U($)", &mut out);
        check_state(&self.initial.0, self.dim, "initial", &mut out);
        check_partition(
            self.dim,
            &[("P(a)", &self.accept), ("P(r)", &self.reject), ("P(g)", &self.going)],
            "measurement",
            &mut out,
        );
        out
    }

    fn step_unitary(&self, k: usize, w: &[usize]) -> &CMatrix {
        if k < w.len() {
            &self.unitaries[w[k]]
        } else {
            &self.end_unitary
        }
    }

    /// Runs `w$`, recording the accept and reject mass removed at each step.
    pub fn trace(&self, w: &[usize]) -> MmTrace {
        let mut psi = self.initial.0.clone();
        let mut trace = MmTrace::default();
        for k in 0..=w.len() {
            let phi = self.step_unitary(k, w).apply_unchecked(&psi);
            let mass = |p: &Projector| -> f64 { p.indices().iter().map(|&i| phi[i].norm_sqr()).sum() };
            trace.accept.push(mass(&self.accept));
            trace.reject.push(mass(&self.reject));
            psi = phi;
            self.going.apply_in_place(&mut psi);
        }
        trace
    }

    /// Running-state form: `Σ_{k=1}^{n+1} ‖P(a)U(x_k) Π_{i<k} P(g)U(x_i) ψ₀‖²`.
    pub fn accept_prob_running(&self, w: &[usize]) -> f64 {
        let mut psi = self.initial.0.clone();
        let mut total = 0.0;
        for k in 0..=w.len() {
            let phi = self.step_unitary(k, w).apply_unchecked(&psi);
            total += self.accept.indices().iter().map(|&i| phi[i].norm_sqr()).sum::<f64>();
            psi = phi;
            self.going.apply_in_place(&mut psi);
        }
        total
    }

    /// Shifted-index form: `Σ_{k=0}^{n} ‖P(a)U(x_{k+1}) Π_{i=1}^{k} P(g)U(x_i) ψ₀‖²`,
    /// recomputing each going prefix from scratch.
    pub fn accept_prob_prefixwise(&self, w: &[usize]) -> f64 {
        let mut total = 0.0;
        for k in 0..=w.len() {
            let mut v: Vec<C64> = self.initial.0.clone();
            for &a in &w[..k] {
                v = self.unitaries[a].apply_unchecked(&v);
                self.going.apply_in_place(&mut v);
            }
            let phi = self.step_unitary(k, w).apply_unchecked(&v);
            total += self.accept.indices().iter().map(|&i| phi[i].norm_sqr()).sum::<f64>();
        }
        total
    }

    pub fn accept_prob_raw(&self, w: &[usize]) -> f64 {
        self.accept_prob_running(w)
    }

    /// Rejects words that spell out `$` explicitly.
    pub fn encode_input(&self, w: &Word) -> Result<Vec<usize>> {
        if w.iter().any(|s| s == END_MARKER) {
            return Err(QdesError::EndMarkerInWord);
        }
        self.alphabet.encode(w)
    }

    pub fn accept_prob(&self, w: &Word) -> Result<f64> {
        let idx = self.encode_input(w)?;
        Ok(self.prob(&idx))
    }
}

impl QuantumLanguage for MmQfa {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn prob(&self, w: &[usize]) -> f64 {
        clamp_prob(self.accept_prob_raw(w), PROB_TOL)
    }

    fn eval(&self, w: &Word) -> Result<f64> {
        self.accept_prob(w)
    }

    /// The walk carries the surviving (going) vector and the acceptance mass
    /// collected so far; each word adds the end-marker step on top.
    fn levels(&self, max_len: usize) -> Levels {
        let mass = |phi: &[C64]| -> f64 { self.accept.indices().iter().map(|&i| phi[i].norm_sqr()).sum() };
        Levels::from_states(
            self.alphabet.len(),
            max_len,
            (self.initial.0.clone(), 0.0),
            |(psi, acc), sym| {
                let mut phi = self.unitaries[sym].apply_unchecked(psi);
                let acc = acc + mass(&phi);
                self.going.apply_in_place(&mut phi);
                (phi, acc)
            },
            |(psi, acc)| clamp_prob(acc + mass(&self.end_unitary.apply_unchecked(psi)), PROB_TOL),
        )
    }
}

pub fn mm_accept_prob(m: &MmQfa, w: &Word) -> Result<f64> {
    m.accept_prob(w)
}
