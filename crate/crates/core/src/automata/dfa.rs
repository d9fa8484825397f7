use std::collections::{BTreeSet, VecDeque};

use crate::alphabet::{Alphabet, Word};
use crate::error::{QdesError, Result};
use crate::language::{Levels, QuantumLanguage};
use crate::linalg::{CMatrix, CVector, Projector};

use super::{Qfac, Violation, ViolationKind};

/// Complete deterministic finite automaton.
#[derive(Clone, Debug, PartialEq)]
pub struct Dfa {
    alphabet: Alphabet,
    /// `delta[q][σ]`.
    delta: Vec<Vec<usize>>,
    initial: usize,
    accepting: BTreeSet<usize>,
}

impl Dfa {
    pub fn new(
        alphabet: Alphabet,
        delta: Vec<Vec<usize>>,
        initial: usize,
        accepting: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let d = Self::from_parts(alphabet, delta, initial, accepting);
        let v = d.validate();
        if v.is_empty() {
            Ok(d)
        } else {
            Err(QdesError::Invalid(v))
        }
    }

    pub fn from_parts(
        alphabet: Alphabet,
        delta: Vec<Vec<usize>>,
        initial: usize,
        accepting: impl IntoIterator<Item = usize>,
    ) -> Self {
        Dfa {
            alphabet,
            delta,
            initial,
            accepting: accepting.into_iter().collect(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn accepting(&self) -> &BTreeSet<usize> {
        &self.accepting
    }

    pub fn transitions(&self) -> &[Vec<usize>] {
        &self.delta
    }

    pub fn next(&self, q: usize, sym: usize) -> usize {
        self.delta[q][sym]
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.delta.len();
        if self.initial >= n {
            out.push(Violation::new(
                ViolationKind::Transition,
                "initial",
                format!("initial state {} not among {n} states", self.initial),
            ));
        }
        for (q, row) in self.delta.iter().enumerate() {
            if row.len() != self.alphabet.len() {
                out.push(Violation::new(
                    ViolationKind::Transition,
                    format!("delta[{q}]"),
                    "transition function is not total",
                ));
                continue;
            }
            for (s, &t) in row.iter().enumerate() {
                if t >= n {
                    out.push(Violation::new(
                        ViolationKind::Transition,
                        format!("delta[{q}][{}]", self.alphabet.symbol(s)),
                        format!("target {t} out of range"),
                    ));
                }
            }
        }
        if let Some(&q) = self.accepting.iter().find(|&&q| q >= n) {
            out.push(Violation::new(
                ViolationKind::Transition,
                "accepting",
                format!("accepting state {q} out of range"),
            ));
        }
        out
    }

    pub fn run(&self, w: &[usize]) -> usize {
        w.iter().fold(self.initial, |q, &s| self.delta[q][s])
    }

    pub fn accepts(&self, w: &Word) -> Result<bool> {
        let idx = self.alphabet.encode(w)?;
        Ok(self.accepting.contains(&self.run(&idx)))
    }

    /// Restriction to states reachable from the initial state, renumbered in
    /// breadth-first order.
    pub fn trim_unreachable(&self) -> Dfa {
        let n = self.states();
        let mut id = vec![usize::MAX; n];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.initial]);
        id[self.initial] = 0;
        order.push(self.initial);
        while let Some(q) = queue.pop_front() {
            for &t in &self.delta[q] {
                if id[t] == usize::MAX {
                    id[t] = order.len();
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        let delta = order
            .iter()
            .map(|&q| self.delta[q].iter().map(|&t| id[t]).collect())
            .collect();
        let accepting = order
            .iter()
            .enumerate()
            .filter(|(_, q)| self.accepting.contains(q))
            .map(|(i, _)| i);
        Dfa::from_parts(self.alphabet.clone(), delta, 0, accepting)
    }

    /// Minimal equivalent complete DFA: unreachable states removed, then
    /// Hopcroft partition refinement.
    pub fn minimize(&self) -> Dfa {
        let d = self.trim_unreachable();
        let n = d.states();
        let k = d.alphabet.len();

        // inverse[σ][t] = states q with δ(q, σ) = t
        let mut inverse = vec![vec![Vec::new(); n]; k];
        for q in 0..n {
            for s in 0..k {
                inverse[s][d.delta[q][s]].push(q);
            }
        }

        let acc: Vec<usize> = (0..n).filter(|q| d.accepting.contains(q)).collect();
        let rej: Vec<usize> = (0..n).filter(|q| !d.accepting.contains(q)).collect();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = vec![0usize; n];
        for part in [acc, rej] {
            if !part.is_empty() {
                for &q in &part {
                    block_of[q] = blocks.len();
                }
                blocks.push(part);
            }
        }

        let mut work: VecDeque<(usize, usize)> = VecDeque::new();
        let mut in_work: BTreeSet<(usize, usize)> = BTreeSet::new();
        if blocks.len() == 2 {
            let smaller = if blocks[0].len() <= blocks[1].len() { 0 } else { 1 };
            for s in 0..k {
                work.push_back((smaller, s));
                in_work.insert((smaller, s));
            }
        }

        while let Some((splitter, s)) = work.pop_front() {
            in_work.remove(&(splitter, s));
            let mut mark = vec![false; n];
            let mut touched: BTreeSet<usize> = BTreeSet::new();
            for &t in &blocks[splitter].clone() {
                for &q in &inverse[s][t] {
                    if !mark[q] {
                        mark[q] = true;
                        touched.insert(block_of[q]);
                    }
                }
            }
            for b in touched {
                let (inside, outside): (Vec<usize>, Vec<usize>) =
                    blocks[b].iter().partition(|&&q| mark[q]);
                if inside.is_empty() || outside.is_empty() {
                    continue;
                }
                let new_id = blocks.len();
                let (keep, moved) = if inside.len() <= outside.len() {
                    (outside, inside)
                } else {
                    (inside, outside)
                };
                for &q in &moved {
                    block_of[q] = new_id;
                }
                blocks[b] = keep;
                blocks.push(moved);
                for sym in 0..k {
                    if in_work.contains(&(b, sym)) {
                        work.push_back((new_id, sym));
                        in_work.insert((new_id, sym));
                    } else {
                        // Hopcroft: the smaller half suffices.
                        let pick = if blocks[b].len() <= blocks[new_id].len() { b } else { new_id };
                        work.push_back((pick, sym));
                        in_work.insert((pick, sym));
                    }
                }
            }
        }

        // Renumber blocks in BFS order from the initial block.
        let m = blocks.len();
        let mut id = vec![usize::MAX; m];
        let mut order = Vec::new();
        let start = block_of[d.initial];
        id[start] = 0;
        order.push(start);
        let mut queue = VecDeque::from([start]);
        while let Some(b) = queue.pop_front() {
            let rep = blocks[b][0];
            for s in 0..k {
                let t = block_of[d.delta[rep][s]];
                if id[t] == usize::MAX {
                    id[t] = order.len();
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        let delta = order
            .iter()
            .map(|&b| {
                let rep = blocks[b][0];
                (0..k).map(|s| id[block_of[d.delta[rep][s]]]).collect()
            })
            .collect();
        let accepting = order
            .iter()
            .enumerate()
            .filter(|(_, &b)| d.accepting.contains(&blocks[b][0]))
            .map(|(i, _)| i);
        Dfa::from_parts(d.alphabet.clone(), delta, 0, accepting)
    }

    pub fn minimal_size(&self) -> usize {
        self.minimize().states()
    }

    /// The DFA as a QFA with classical states: one-dimensional quantum part,
    /// trivial unitaries, accept iff the classical state is accepting.
    pub fn to_qfac(&self) -> Qfac {
        let n = self.states();
        let k = self.alphabet.len();
        let accept = (0..n)
            .map(|q| {
                if self.accepting.contains(&q) {
                    Projector::full(1)
                } else {
                    Projector::empty(1)
                }
            })
            .collect::<Vec<_>>();
        let reject = accept.iter().map(|p| p.complement()).collect();
        Qfac::from_parts(
            self.alphabet.clone(),
            self.initial,
            CVector::basis(1, 0),
            self.delta.clone(),
            vec![vec![CMatrix::identity(1); k]; n],
            accept,
            reject,
        )
        .expect("shapes are consistent by construction")
    }
}

/// Indicator function of the accepted language.
impl QuantumLanguage for Dfa {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn prob(&self, w: &[usize]) -> f64 {
        if self.accepting.contains(&self.run(w)) {
            1.0
        } else {
            0.0
        }
    }

    fn levels(&self, max_len: usize) -> Levels {
        Levels::from_states(
            self.alphabet.len(),
            max_len,
            self.initial,
            |&q, sym| self.delta[q][sym],
            |q| if self.accepting.contains(q) { 1.0 } else { 0.0 },
        )
    }
}

pub fn dfa_accepts(d: &Dfa, w: &Word) -> Result<bool> {
    d.accepts(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counter DFA for `{ s : |s|_0 <= n }` over {0, 1}: states 0..=n count
    /// zeros, state n+1 is the sink.
    fn zero_counter(n: usize) -> Dfa {
        let delta = (0..=n + 1)
            .map(|q| vec![(q + 1).min(n + 1), q])
            .collect();
        Dfa::new(Alphabet::new(["0", "1"]).unwrap(), delta, 0, 0..=n).unwrap()
    }

    #[test]
    fn empty_word_on_accepting_start() {
        assert!(zero_counter(2).accepts(&Word::empty()).unwrap());
    }

    #[test]
    fn counter_trace() {
        let d = zero_counter(2);
        assert!(d.accepts(&Word::parse("010")).unwrap());
        assert!(!d.accepts(&Word::parse("000")).unwrap());
        assert!(d.accepts(&Word::parse("2")).is_err());
    }

    #[test]
    fn minimization_merges_duplicate_states() {
        // Two copies of the "even number of a" automaton glued together.
        let a = Alphabet::new(["a"]).unwrap();
        let d = Dfa::new(a, vec![vec![1], vec![2], vec![3], vec![0]], 0, [0, 2]).unwrap();
        assert_eq!(d.minimal_size(), 2);
    }

    #[test]
    fn minimization_drops_unreachable() {
        let a = Alphabet::new(["a"]).unwrap();
        let d = Dfa::new(a, vec![vec![0], vec![1]], 0, [0]).unwrap();
        assert_eq!(d.minimal_size(), 1);
    }

    #[test]
    fn counter_is_already_minimal() {
        for n in 0..6 {
            assert_eq!(zero_counter(n).minimal_size(), n + 2);
        }
    }

    #[test]
    fn embedding_matches_acceptance() {
        let d = zero_counter(2);
        let q = d.to_qfac();
        assert!(q.validate().is_empty());
        for w in d.alphabet().words_up_to(5) {
            let p = q.accept_prob_raw(&w);
            let expect = if d.accepting().contains(&d.run(&w)) { 1.0 } else { 0.0 };
            assert_eq!(p, expect);
        }
    }
}
