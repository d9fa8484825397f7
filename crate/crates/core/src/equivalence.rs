//! Equivalence of bilinear machines by breadth-first span exploration, and of
//! measure-many QFA and QFA with classical states through compilation.

use std::collections::VecDeque;

use serde::Serialize;

use crate::alphabet::Word;
use crate::automata::{MmQfa, Qfac};
use crate::blm::{compile_mm_to_rblm, compile_qfac_to_rblm, LinearMachine, Rblm};
use crate::error::{QdesError, Result};
use crate::linalg::{OrthoBasis, C64};

/// Default tolerance for equivalence decisions.
pub const DEFAULT_EQUIV_TOL: f64 = 1e-7;

/// Default cap on the number of words enumerated by brute force.
pub const DEFAULT_ENUM_CAP: u128 = 5_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub counterexample: Option<Word>,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    /// Dimension of the explored span (or number of words compared, for
    /// brute force).
    pub visited_dim: usize,
    /// Word length up to which agreement implies equivalence, from the
    /// actual state counts: `n1 + n2 - 1`.
    pub word_bound: usize,
}

impl EquivalenceVerdict {
    fn equivalent(visited_dim: usize, word_bound: usize) -> Self {
        EquivalenceVerdict {
            equivalent: true,
            counterexample: None,
            f1: None,
            f2: None,
            visited_dim,
            word_bound,
        }
    }
}

fn check_alphabets(a: &crate::alphabet::Alphabet, b: &crate::alphabet::Alphabet) -> Result<()> {
    if a != b {
        return Err(QdesError::AlphabetMismatch(format!("{:?} vs {:?}", a.symbols(), b.symbols())));
    }
    Ok(())
}

/// Distinguishing word with the value of each machine on it.
pub type Difference = (Vec<usize>, C64, C64);

/// Counterexample search over the direct sum of two linear machines.
///
/// Words are expanded in FIFO length-lexicographic order; a word is expanded
/// only if its state `P(x) = (M_1(x) ⊕ M_2(x))(π_1 ⊕ π_2)` enlarges the span
/// of the states seen so far. The difference functional is checked on every
/// generated word, so the first distinguishing word found is the shortest and
/// lexicographically least. Returns the word together with the complex values
/// of both machines on it.
pub fn find_difference<A, B>(a: &A, b: &B, tol: f64) -> Result<(Option<Difference>, usize)>
where
    A: LinearMachine,
    B: LinearMachine,
{
    check_alphabets(a.alphabet(), b.alphabet())?;
    let k = a.alphabet().len();
    let (da, db) = (a.dim(), b.dim());
    let mut basis = OrthoBasis::new(da + db);
    let mut queue: VecDeque<(Vec<usize>, Vec<C64>, Vec<C64>)> = VecDeque::new();

    let differs = |x: &[C64], y: &[C64]| -> Option<(C64, C64)> {
        let (fa, fb) = (a.output(x), b.output(y));
        if (fa - fb).norm() > tol {
            Some((fa, fb))
        } else {
            None
        }
    };

    let (x0, y0) = (a.initial(), b.initial());
    if let Some((fa, fb)) = differs(&x0, &y0) {
        return Ok((Some((Vec::new(), fa, fb)), 0));
    }
    if basis.try_insert(&[x0.as_slice(), &y0].concat(), tol) {
        queue.push_back((Vec::new(), x0, y0));
    }
    while let Some((w, x, y)) = queue.pop_front() {
        for s in 0..k {
            let (xs, ys) = (a.step(s, &x), b.step(s, &y));
            let mut ws = w.clone();
            ws.push(s);
            if let Some((fa, fb)) = differs(&xs, &ys) {
                return Ok((Some((ws, fa, fb)), basis.len()));
            }
            if basis.try_insert(&[xs.as_slice(), &ys].concat(), tol) {
                queue.push_back((ws, xs, ys));
            }
        }
    }
    Ok((None, basis.len()))
}

/// Generic equivalence over any two linear machines.
pub fn equiv_machines<A: LinearMachine, B: LinearMachine>(a: &A, b: &B, tol: f64) -> Result<EquivalenceVerdict> {
    let bound = (a.dim() + b.dim()).saturating_sub(1);
    let (found, visited) = find_difference(a, b, tol)?;
    Ok(match found {
        None => EquivalenceVerdict::equivalent(visited, bound),
        Some((w, fa, fb)) => EquivalenceVerdict {
            equivalent: false,
            counterexample: Some(a.alphabet().decode(&w)),
            f1: Some(fa.re),
            f2: Some(fb.re),
            visited_dim: visited,
            word_bound: bound,
        },
    })
}

/// Decides `f_{B1} = f_{B2}` on all of `Σ*`. Alphabets must contain the same
/// symbols; order is aligned to `b1`.
pub fn equiv_rblm(b1: &Rblm, b2: &Rblm, tol: f64) -> Result<EquivalenceVerdict> {
    if !b1.alphabet().same_set(b2.alphabet()) {
        return Err(QdesError::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            b1.alphabet().symbols(),
            b2.alphabet().symbols()
        )));
    }
    let b2 = b2.aligned_to(b1.alphabet())?;
    let mut v = equiv_machines(b1, &b2, tol)?;
    if let Some(w) = &v.counterexample {
        // Report values through the machines' own evaluators.
        v.f1 = Some(b1.eval(w)?);
        v.f2 = Some(b2.eval(w)?);
    }
    Ok(v)
}

/// Compares the two word functions on every word of length at most `k`.
pub fn k_equiv_bruteforce(b1: &Rblm, b2: &Rblm, k: usize, tol: f64) -> Result<EquivalenceVerdict> {
    k_equiv_bruteforce_capped(b1, b2, k, tol, DEFAULT_ENUM_CAP)
}

pub fn k_equiv_bruteforce_capped(b1: &Rblm, b2: &Rblm, k: usize, tol: f64, cap: u128) -> Result<EquivalenceVerdict> {
    if !b1.alphabet().same_set(b2.alphabet()) {
        return Err(QdesError::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            b1.alphabet().symbols(),
            b2.alphabet().symbols()
        )));
    }
    let b2 = b2.aligned_to(b1.alphabet())?;
    let total = b1.alphabet().count_words_up_to(k);
    if total > cap {
        return Err(QdesError::EnumerationCap { words: total, cap });
    }
    let bound = (b1.dim() + b2.dim()).saturating_sub(1);
    let mut count = 0;
    for w in b1.alphabet().words_up_to(k) {
        count += 1;
        let (f1, f2) = (b1.value_complex(&w), b2.value_complex(&w));
        if (f1 - f2).norm() > tol {
            return Ok(EquivalenceVerdict {
                equivalent: false,
                counterexample: Some(b1.alphabet().decode(&w)),
                f1: Some(f1.re),
                f2: Some(f2.re),
                visited_dim: count,
                word_bound: bound,
            });
        }
    }
    Ok(EquivalenceVerdict::equivalent(count, bound))
}

/// Equivalence of two measure-many QFA through their compiled machines.
pub fn equiv_mm_qfa(m1: &MmQfa, m2: &MmQfa, tol: f64) -> Result<EquivalenceVerdict> {
    if !m1.alphabet().same_set(m2.alphabet()) {
        return Err(QdesError::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            m1.alphabet().symbols(),
            m2.alphabet().symbols()
        )));
    }
    equiv_rblm(&compile_mm_to_rblm(m1)?, &compile_mm_to_rblm(m2)?, tol)
}

/// Equivalence of two QFA with classical states through their compiled
/// machines.
pub fn equiv_qfac(m1: &Qfac, m2: &Qfac, tol: f64) -> Result<EquivalenceVerdict> {
    if !m1.alphabet().same_set(m2.alphabet()) {
        return Err(QdesError::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            m1.alphabet().symbols(),
            m2.alphabet().symbols()
        )));
    }
    equiv_rblm(&compile_qfac_to_rblm(m1)?, &compile_qfac_to_rblm(m2)?, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::linalg::{r, CMatrix, CVector};

    fn shift_register(tap: f64) -> Rblm {
        // e0 -> e1 -> e2 -> 0 under "a"; η reads e0 + e1 + tap·e2.
        let m = CMatrix::from_real_rows(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]).unwrap();
        Rblm::new(
            Alphabet::new(["a"]).unwrap(),
            CVector::from_real(&[1.0, 0.0, 0.0]),
            vec![m],
            CVector::from_real(&[1.0, 1.0, tap]),
            true,
        )
        .unwrap()
    }

    #[test]
    fn machine_equals_itself() {
        let b = shift_register(0.3);
        let v = equiv_rblm(&b, &b, DEFAULT_EQUIV_TOL).unwrap();
        assert!(v.equivalent);
        assert!(v.counterexample.is_none());
    }

    #[test]
    fn difference_only_at_length_two() {
        let (b1, b2) = (shift_register(0.3), shift_register(0.5));
        assert!(k_equiv_bruteforce(&b1, &b2, 1, 1e-9).unwrap().equivalent);
        let v = k_equiv_bruteforce(&b1, &b2, 2, 1e-9).unwrap();
        assert!(!v.equivalent);
        let e = equiv_rblm(&b1, &b2, DEFAULT_EQUIV_TOL).unwrap();
        assert_eq!(e.counterexample.unwrap().to_string(), "aa");
        assert_eq!(e.f1, Some(0.3));
        assert_eq!(e.f2, Some(0.5));
    }

    #[test]
    fn k_zero_compares_empty_word_only() {
        let b1 = Rblm::scalar(Alphabet::new(["a"]).unwrap(), &[r(0.5)]).unwrap();
        let b2 = Rblm::scalar(Alphabet::new(["a"]).unwrap(), &[r(0.25)]).unwrap();
        assert!(k_equiv_bruteforce(&b1, &b2, 0, 1e-9).unwrap().equivalent);
        assert!(!k_equiv_bruteforce(&b1, &b2, 1, 1e-9).unwrap().equivalent);
    }

    #[test]
    fn enumeration_cap() {
        let b = Rblm::one(Alphabet::new(["a", "b"]).unwrap());
        assert!(matches!(
            k_equiv_bruteforce_capped(&b, &b, 20, 1e-9, 1000),
            Err(QdesError::EnumerationCap { .. })
        ));
    }
}
