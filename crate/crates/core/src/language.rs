//! Quantum languages: total maps from words to `[0, 1]`.

use std::collections::HashMap;
use std::sync::Arc;

use crate::alphabet::{Alphabet, Word};
use crate::error::{QdesError, Result};

/// A function from words to probabilities over an explicit alphabet.
///
/// Words are passed as symbol indices into [`QuantumLanguage::alphabet`].
pub trait QuantumLanguage {
    fn alphabet(&self) -> &Alphabet;

    fn prob(&self, w: &[usize]) -> f64;

    fn eval(&self, w: &Word) -> Result<f64> {
        let idx = self.alphabet().encode(w)?;
        Ok(self.prob(&idx))
    }

    /// Values on every word up to `max_len`. Automata override this with a
    /// walk that reuses the state of each prefix.
    fn levels(&self, max_len: usize) -> Levels {
        Levels::from_fn(self.alphabet().len(), max_len, |w| self.prob(w))
    }
}

impl<T: QuantumLanguage + ?Sized> QuantumLanguage for &T {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }

    fn prob(&self, w: &[usize]) -> f64 {
        (**self).prob(w)
    }

    fn levels(&self, max_len: usize) -> Levels {
        (**self).levels(max_len)
    }
}

impl<T: QuantumLanguage + ?Sized> QuantumLanguage for Box<T> {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }

    fn prob(&self, w: &[usize]) -> f64 {
        (**self).prob(w)
    }

    fn levels(&self, max_len: usize) -> Levels {
        (**self).levels(max_len)
    }
}

impl<T: QuantumLanguage + ?Sized> QuantumLanguage for Arc<T> {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }

    fn prob(&self, w: &[usize]) -> f64 {
        (**self).prob(w)
    }

    fn levels(&self, max_len: usize) -> Levels {
        (**self).levels(max_len)
    }
}

/// A language tabulated on all words up to a fixed length.
///
/// Level `l` holds `k^l` values indexed by the base-`k` code of the word,
/// first symbol most significant, so the children of code `c` at level `l`
/// are `c·k + σ` at level `l + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Levels {
    k: usize,
    levels: Vec<Vec<f64>>,
}

impl Levels {
    fn empty(k: usize, max_len: usize) -> Self {
        let levels = (0..=max_len).map(|l| vec![0.0; k.pow(l as u32)]).collect();
        Levels { k, levels }
    }

    pub fn from_fn(k: usize, max_len: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut out = Self::empty(k, max_len);
        for (l, level) in out.levels.iter_mut().enumerate() {
            let mut w = vec![0; l];
            for (code, v) in level.iter_mut().enumerate() {
                decode_into(k, code, &mut w);
                *v = f(&w);
            }
        }
        out
    }

    /// Depth-first walk carrying a state per prefix.
    pub fn from_states<S>(
        k: usize,
        max_len: usize,
        root: S,
        step: impl Fn(&S, usize) -> S,
        value: impl Fn(&S) -> f64,
    ) -> Self {
        fn walk<S>(
            out: &mut Levels,
            depth: usize,
            code: usize,
            state: &S,
            step: &impl Fn(&S, usize) -> S,
            value: &impl Fn(&S) -> f64,
        ) {
            out.levels[depth][code] = value(state);
            if depth + 1 < out.levels.len() {
                for sym in 0..out.k {
                    let next = step(state, sym);
                    walk(out, depth + 1, code * out.k + sym, &next, step, value);
                }
            }
        }
        let mut out = Self::empty(k, max_len);
        walk(&mut out, 0, 0, &root, &step, &value);
        out
    }

    /// Builds level by level from the values of the parent word and of the
    /// word itself in other tables.
    pub fn from_parent(
        k: usize,
        max_len: usize,
        root: f64,
        mut f: impl FnMut(f64, usize, usize) -> f64,
    ) -> Self {
        let mut out = Self::empty(k, max_len);
        out.levels[0][0] = root;
        for l in 1..=max_len {
            let (done, rest) = out.levels.split_at_mut(l);
            let parent = &done[l - 1];
            for (code, v) in rest[0].iter_mut().enumerate() {
                *v = f(parent[code / k], l, code);
            }
        }
        out
    }

    pub fn alphabet_len(&self) -> usize {
        self.k
    }

    pub fn max_len(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, l: usize) -> &[f64] {
        &self.levels[l]
    }

    pub fn at(&self, l: usize, code: usize) -> f64 {
        self.levels[l][code]
    }

    /// Value on `w`; panics if `w` is longer than the table.
    pub fn get(&self, w: &[usize]) -> f64 {
        self.levels[w.len()][encode(self.k, w)]
    }

    /// Pointwise combination of two tables of the same shape.
    pub fn zip(&self, other: &Levels, f: impl Fn(f64, f64) -> f64) -> Levels {
        assert_eq!(self.k, other.k, "alphabet sizes differ");
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Levels { k: self.k, levels }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Levels {
        let levels = self.levels.iter().map(|l| l.iter().map(|&x| f(x)).collect()).collect();
        Levels { k: self.k, levels }
    }

    /// `max_{|t| ≤ depth} T(st)` for every `s` with `|s| ≤ max_len − depth`.
    pub fn extension_max(&self, depth: usize) -> Levels {
        assert!(depth <= self.max_len(), "extension depth exceeds the table");
        let keep = self.max_len() - depth;
        let mut best: Vec<Vec<f64>> = self.levels.clone();
        for _ in 0..depth {
            let mut next = best.clone();
            for l in 0..self.max_len() {
                for (code, v) in next[l].iter_mut().enumerate() {
                    for sym in 0..self.k {
                        *v = v.max(best[l + 1][code * self.k + sym]);
                    }
                }
            }
            best = next;
        }
        best.truncate(keep + 1);
        Levels { k: self.k, levels: best }
    }

    /// Every `(word, value)` in length-lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.levels.iter().enumerate().flat_map(move |(l, level)| {
            level.iter().enumerate().map(move |(code, &v)| {
                let mut w = vec![0; l];
                decode_into(self.k, code, &mut w);
                (w, v)
            })
        })
    }
}

/// Base-`k` code of a word, first symbol most significant.
pub fn encode(k: usize, w: &[usize]) -> usize {
    w.iter().fold(0, |c, &s| c * k + s)
}

pub fn decode_into(k: usize, mut code: usize, w: &mut [usize]) {
    for slot in w.iter_mut().rev() {
        *slot = code % k;
        code /= k;
    }
}

pub fn decode(k: usize, len: usize, code: usize) -> Vec<usize> {
    let mut w = vec![0; len];
    decode_into(k, code, &mut w);
    w
}

/// Clamp a computed probability into `[0, 1]` when it is within `tol` of
/// the interval; out-of-band values are returned unchanged so that broken
/// automata remain visible.
pub fn clamp_prob(raw: f64, tol: f64) -> f64 {
    if raw >= -tol && raw <= 1.0 + tol {
        // `+ 0.0` turns a clamped `-0.0` into `0.0`.
        raw.clamp(0.0, 1.0) + 0.0
    } else {
        raw
    }
}

/// Explicitly tabulated language; words outside the table evaluate to the
/// default value.
#[derive(Clone, Debug)]
pub struct TableLanguage {
    alphabet: Alphabet,
    table: HashMap<Vec<usize>, f64>,
    default: f64,
}

impl TableLanguage {
    pub fn new(alphabet: Alphabet, default: f64) -> Self {
        TableLanguage {
            alphabet,
            table: HashMap::new(),
            default,
        }
    }

    /// Tabulates `lang` on every word up to `horizon`.
    pub fn tabulate(lang: &dyn QuantumLanguage, horizon: usize, default: f64) -> Self {
        let mut t = TableLanguage::new(lang.alphabet().clone(), default);
        for w in lang.alphabet().words_up_to(horizon) {
            let v = lang.prob(&w);
            t.table.insert(w, v);
        }
        t
    }

    pub fn set(&mut self, w: &Word, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(QdesError::InvalidParameter(format!(
                "language value {value} outside [0, 1]"
            )));
        }
        let idx = self.alphabet.encode(w)?;
        self.table.insert(idx, value);
        Ok(())
    }
}

impl QuantumLanguage for TableLanguage {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn prob(&self, w: &[usize]) -> f64 {
        self.table.get(w).copied().unwrap_or(self.default)
    }
}

/// Language given by a closure over index words.
pub struct FnLanguage<F> {
    alphabet: Alphabet,
    f: F,
}

impl<F: Fn(&[usize]) -> f64> FnLanguage<F> {
    pub fn new(alphabet: Alphabet, f: F) -> Self {
        FnLanguage { alphabet, f }
    }
}

impl<F: Fn(&[usize]) -> f64> QuantumLanguage for FnLanguage<F> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn prob(&self, w: &[usize]) -> f64 {
        (self.f)(w)
    }
}

/// Re-indexes a language onto a different ordering of the same symbol set.
pub struct Reindexed<L> {
    inner: L,
    alphabet: Alphabet,
    perm: Vec<usize>,
}

impl<L: QuantumLanguage> Reindexed<L> {
    pub fn new(inner: L, alphabet: Alphabet) -> Result<Self> {
        let perm = inner.alphabet().permutation_from(&alphabet)?;
        Ok(Reindexed {
            inner,
            alphabet,
            perm,
        })
    }
}

impl<L: QuantumLanguage> QuantumLanguage for Reindexed<L> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn prob(&self, w: &[usize]) -> f64 {
        let mapped: Vec<usize> = w.iter().map(|&i| self.perm[i]).collect();
        self.inner.prob(&mapped)
    }

    fn levels(&self, max_len: usize) -> Levels {
        let inner = self.inner.levels(max_len);
        if self.perm.iter().enumerate().all(|(i, &j)| i == j) {
            return inner;
        }
        let k = self.perm.len();
        // Code of each word of the current level in the inner alphabet.
        let mut mapped = vec![0usize];
        let mut levels = vec![vec![inner.at(0, 0)]];
        for l in 1..=max_len {
            let next: Vec<usize> = (0..mapped.len() * k)
                .map(|c| mapped[c / k] * k + self.perm[c % k])
                .collect();
            levels.push(next.iter().map(|&c| inner.at(l, c)).collect());
            mapped = next;
        }
        Levels { k, levels }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reindexed_levels_follow_the_permutation() {
        // Value depends on the exact sequence, so any mix-up shows.
        let inner = FnLanguage::new(Alphabet::new(["a", "b", "c"]).unwrap(), |w: &[usize]| {
            w.iter().fold(0.0, |acc, &s| acc * 0.25 + (s as f64 + 1.0) / 8.0)
        });
        let r = Reindexed::new(&inner, Alphabet::new(["c", "a", "b"]).unwrap()).unwrap();
        let lv = r.levels(4);
        for (w, v) in lv.iter() {
            assert_eq!(v, r.prob(&w), "{w:?}");
        }
    }
}
