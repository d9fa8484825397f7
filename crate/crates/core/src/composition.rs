//! Parallel composition.
//!
//! Quantum automata over a shared alphabet compose by tensoring, which
//! multiplies acceptance probabilities. Measure-many automata are left out:
//! their intermediate measurements do not factor into a product law.
//! Classical automata compose in 0/1-matrix form over possibly different
//! alphabets.

use std::collections::BTreeSet;

use crate::alphabet::{Alphabet, Word};
use crate::automata::{Dfa, MoQfa, Qfac};
use crate::error::{QdesError, Result};

fn require_same(a: &Alphabet, b: &Alphabet) -> Result<()> {
    if a != b {
        return Err(QdesError::AlphabetMismatch(format!("{:?} vs {:?}", a.symbols(), b.symbols())));
    }
    Ok(())
}

/// Square 0/1 matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolMatrix {
    n: usize,
    data: Vec<u8>,
}

impl BoolMatrix {
    pub fn zeros(n: usize) -> Self {
        BoolMatrix { n, data: vec![0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j] == 1
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.data[i * self.n + j] = 1;
    }

    pub fn kron(&self, other: &BoolMatrix) -> BoolMatrix {
        let n = self.n * other.n;
        let mut out = BoolMatrix::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                if !self.get(i, j) {
                    continue;
                }
                for k in 0..other.n {
                    for l in 0..other.n {
                        if other.get(k, l) {
                            out.set(i * other.n + k, j * other.n + l);
                        }
                    }
                }
            }
        }
        out
    }

    /// Row vector times matrix over the Boolean semiring.
    pub fn step(&self, x: &[bool]) -> Vec<bool> {
        let mut y = vec![false; self.n];
        for (i, &xi) in x.iter().enumerate() {
            if xi {
                for (j, yj) in y.iter_mut().enumerate() {
                    *yj |= self.get(i, j);
                }
            }
        }
        y
    }
}

fn kron_indicator(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x && y)).collect()
}

/// Automaton with states as basis vectors and one 0/1 matrix per event:
/// `a_ij = 1` iff `q_j ∈ δ(q_i, σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalMatrixAutomaton {
    alphabet: Alphabet,
    events: Vec<BoolMatrix>,
    initial: Vec<bool>,
    marked: Vec<bool>,
}

impl ClassicalMatrixAutomaton {
    pub fn new(alphabet: Alphabet, events: Vec<BoolMatrix>, initial: Vec<bool>, marked: Vec<bool>) -> Result<Self> {
        let n = initial.len();
        if events.len() != alphabet.len() {
            return Err(QdesError::DimensionMismatch {
                expected: alphabet.len(),
                found: events.len(),
            });
        }
        if let Some(m) = events.iter().find(|m| m.dim() != n) {
            return Err(QdesError::DimensionMismatch { expected: n, found: m.dim() });
        }
        if marked.len() != n {
            return Err(QdesError::DimensionMismatch { expected: n, found: marked.len() });
        }
        Ok(ClassicalMatrixAutomaton {
            alphabet,
            events,
            initial,
            marked,
        })
    }

    pub fn from_dfa(d: &Dfa) -> Self {
        let n = d.states();
        let events = (0..d.alphabet().len())
            .map(|sym| {
                let mut m = BoolMatrix::zeros(n);
                for q in 0..n {
                    m.set(q, d.next(q, sym));
                }
                m
            })
            .collect();
        let mut initial = vec![false; n];
        initial[d.initial()] = true;
        let marked = (0..n).map(|q| d.accepting().contains(&q)).collect();
        ClassicalMatrixAutomaton {
            alphabet: d.alphabet().clone(),
            events,
            initial,
            marked,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> usize {
        self.initial.len()
    }

    pub fn event(&self, sym: usize) -> &BoolMatrix {
        &self.events[sym]
    }

    pub fn initial(&self) -> &[bool] {
        &self.initial
    }

    pub fn marked(&self) -> &[bool] {
        &self.marked
    }

    /// Indicator of the states reachable by `w`.
    pub fn run(&self, w: &Word) -> Result<Vec<bool>> {
        let idx = self.alphabet.encode(w)?;
        Ok(idx.iter().fold(self.initial.clone(), |x, &s| self.events[s].step(&x)))
    }

    pub fn accepts(&self, w: &Word) -> Result<bool> {
        Ok(self.run(w)?.iter().zip(&self.marked).any(|(&x, &m)| x && m))
    }

    /// The DFA with the same transitions, if every event matrix has exactly
    /// one 1 per row and there is a single initial state.
    pub fn to_dfa(&self) -> Option<Dfa> {
        let n = self.states();
        let mut starts = (0..n).filter(|&q| self.initial[q]);
        let q0 = starts.next()?;
        if starts.next().is_some() {
            return None;
        }
        let mut delta = vec![Vec::with_capacity(self.events.len()); n];
        for m in &self.events {
            for (q, row) in delta.iter_mut().enumerate() {
                let mut targets = (0..n).filter(|&j| m.get(q, j));
                let t = targets.next()?;
                if targets.next().is_some() {
                    return None;
                }
                row.push(t);
            }
        }
        let accepting: Vec<usize> = (0..n).filter(|&q| self.marked[q]).collect();
        Dfa::new(self.alphabet.clone(), delta, q0, accepting).ok()
    }
}

/// `G₁ ‖′ G₂` over `Σ₁ ∪ Σ₂` (symbols of `Σ₁` first): shared events act by
/// `σ₁ ⊗ σ₂`, private ones by `σ₁ ⊗ I` or `I ⊗ σ₂`.
pub fn parallel_classical(g1: &ClassicalMatrixAutomaton, g2: &ClassicalMatrixAutomaton) -> ClassicalMatrixAutomaton {
    let own: BTreeSet<&str> = g1.alphabet.symbols().iter().map(String::as_str).collect();
    let mut symbols: Vec<String> = g1.alphabet.symbols().to_vec();
    symbols.extend(g2.alphabet.symbols().iter().filter(|s| !own.contains(s.as_str())).cloned());
    let alphabet = Alphabet::new(&symbols).expect("union of valid alphabets");
    let (i1, i2) = (BoolMatrix::identity(g1.states()), BoolMatrix::identity(g2.states()));
    let events = symbols
        .iter()
        .map(|s| match (g1.alphabet.index_of(s), g2.alphabet.index_of(s)) {
            (Some(a), Some(b)) => g1.events[a].kron(&g2.events[b]),
            (Some(a), None) => g1.events[a].kron(&i2),
            (None, Some(b)) => i1.kron(&g2.events[b]),
            (None, None) => unreachable!("symbol drawn from one of the alphabets"),
        })
        .collect();
    ClassicalMatrixAutomaton {
        alphabet,
        events,
        initial: kron_indicator(&g1.initial, &g2.initial),
        marked: kron_indicator(&g1.marked, &g2.marked),
    }
}

/// Tensor composition of two QFA with classical states: classical state
/// `(s₁, s₂)` is numbered `s₁·k₂ + s₂`, and a composite word is accepted iff
/// both components accept.
pub fn parallel_qfac(m1: &Qfac, m2: &Qfac) -> Result<Qfac> {
    require_same(m1.alphabet(), m2.alphabet())?;
    let (k1, k2) = (m1.classical_states(), m2.classical_states());
    let nsym = m1.alphabet().len();
    let mut delta = Vec::with_capacity(k1 * k2);
    let mut us = Vec::with_capacity(k1 * k2);
    let mut accept = Vec::with_capacity(k1 * k2);
    for s1 in 0..k1 {
        for s2 in 0..k2 {
            delta.push((0..nsym).map(|a| m1.delta(s1, a) * k2 + m2.delta(s2, a)).collect());
            us.push((0..nsym).map(|a| m1.unitary(s1, a).tensor(m2.unitary(s2, a))).collect());
            accept.push(m1.accept(s1).tensor(m2.accept(s2)));
        }
    }
    Qfac::with_accepting(
        m1.alphabet().clone(),
        m1.start() * k2 + m2.start(),
        m1.initial().tensor(m2.initial()),
        delta,
        us,
        accept,
    )
}

/// Tensor composition of two measure-once QFA.
pub fn parallel_mo(m1: &MoQfa, m2: &MoQfa) -> Result<MoQfa> {
    require_same(m1.alphabet(), m2.alphabet())?;
    let us = m1
        .unitaries()
        .iter()
        .zip(m2.unitaries())
        .map(|(a, b)| a.tensor(b))
        .collect();
    MoQfa::with_accepting(
        m1.alphabet().clone(),
        us,
        m1.initial().tensor(m2.initial()),
        m1.accept().tensor(m2.accept()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CMatrix, CVector, Projector, C64};

    fn one_event(name: &str) -> ClassicalMatrixAutomaton {
        // Two-state toggle on a single event; state 1 marked.
        let mut m = BoolMatrix::zeros(2);
        m.set(0, 1);
        m.set(1, 0);
        ClassicalMatrixAutomaton::new(Alphabet::new([name]).unwrap(), vec![m], vec![true, false], vec![false, true])
            .unwrap()
    }

    #[test]
    fn shared_event_is_kronecker_of_both() {
        let g = one_event("a");
        let p = parallel_classical(&g, &g);
        assert_eq!(p.alphabet().symbols(), &["a".to_string()]);
        assert_eq!(p.event(0), &g.event(0).kron(g.event(0)));
        assert!(p.accepts(&Word::parse("a")).unwrap());
    }

    #[test]
    fn private_events_carry_identity_factor() {
        let (g1, g2) = (one_event("a"), one_event("b"));
        let p = parallel_classical(&g1, &g2);
        assert_eq!(p.event(0), &g1.event(0).kron(&BoolMatrix::identity(2)));
        assert_eq!(p.event(1), &BoolMatrix::identity(2).kron(g2.event(0)));
        assert!(!p.accepts(&Word::parse("a")).unwrap());
        assert!(p.accepts(&Word::parse("ab")).unwrap());
    }

    fn rotation(theta: f64) -> MoQfa {
        let (s, c) = theta.sin_cos();
        let u = CMatrix::from_real_rows(&[&[c, -s], &[s, c]]).unwrap();
        MoQfa::with_accepting(
            Alphabet::new(["0"]).unwrap(),
            vec![u],
            CVector::basis(2, 0),
            Projector::new(2, [0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rotations_multiply() {
        let m = parallel_mo(&rotation(std::f64::consts::FRAC_PI_4), &rotation(std::f64::consts::FRAC_PI_4)).unwrap();
        assert!((m.accept_prob(&Word::parse("0")).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn always_accept_is_neutral() {
        let one = MoQfa::with_accepting(
            Alphabet::new(["0"]).unwrap(),
            vec![CMatrix::diag(&[C64::new(1.0, 0.0)])],
            CVector::basis(1, 0),
            Projector::full(1),
        )
        .unwrap();
        let r = rotation(0.3);
        let m = parallel_mo(&r, &one).unwrap();
        for len in 0..=5 {
            let w: Word = std::iter::repeat_n("0", len).collect();
            assert!((m.accept_prob(&w).unwrap() - r.accept_prob(&w).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_alphabets_are_rejected() {
        let other = MoQfa::with_accepting(
            Alphabet::new(["1"]).unwrap(),
            vec![CMatrix::identity(1)],
            CVector::basis(1, 0),
            Projector::full(1),
        )
        .unwrap();
        assert!(matches!(parallel_mo(&rotation(0.1), &other), Err(QdesError::AlphabetMismatch(_))));
    }
}
