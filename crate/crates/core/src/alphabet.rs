//! Alphabets and words.
//!
//! Symbols are strings. A [`Word`] is a sequence of symbols; evaluators
//! resolve it against an explicit [`Alphabet`] to symbol indices.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QdesError, Result};

pub const END_MARKER: &str = "$";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for Alphabet {}

impl From<Vec<String>> for Alphabet {
    fn from(symbols: Vec<String>) -> Self {
        let index = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Alphabet { symbols, index }
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.symbols
    }
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(|s| s.as_ref().to_string()).collect();
        let a = Alphabet::from(symbols);
        if a.index.len() != a.symbols.len() {
            return Err(QdesError::InvalidParameter(
                "alphabet contains a repeated symbol".into(),
            ));
        }
        if a.symbols.iter().any(|s| s.is_empty()) {
            return Err(QdesError::InvalidParameter(
                "alphabet contains an empty symbol".into(),
            ));
        }
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn index_of(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &str) -> bool {
        self.index.contains_key(s)
    }

    pub fn encode(&self, w: &Word) -> Result<Vec<usize>> {
        w.iter()
            .map(|s| {
                self.index_of(s)
                    .ok_or_else(|| QdesError::UnknownSymbol(s.to_string()))
            })
            .collect()
    }

    pub fn decode(&self, idx: &[usize]) -> Word {
        Word(idx.iter().map(|&i| self.symbols[i].clone()).collect())
    }

    pub fn same_set(&self, other: &Alphabet) -> bool {
        self.len() == other.len() && self.symbols.iter().all(|s| other.contains(s))
    }

    /// `perm[i]` is the index in `self` of `other`'s i-th symbol.
    pub fn permutation_from(&self, other: &Alphabet) -> Result<Vec<usize>> {
        if !self.same_set(other) {
            return Err(QdesError::AlphabetMismatch(format!(
                "{{{}}} vs {{{}}}",
                self.symbols.join(","),
                other.symbols.join(",")
            )));
        }
        Ok(other
            .symbols
            .iter()
            .map(|s| self.index_of(s).unwrap())
            .collect())
    }

    pub fn with_symbol(&self, s: &str) -> Result<Alphabet> {
        let mut syms = self.symbols.clone();
        syms.push(s.to_string());
        Alphabet::new(syms)
    }

    pub fn without_symbol(&self, s: &str) -> Alphabet {
        Alphabet::from(
            self.symbols
                .iter()
                .filter(|x| x.as_str() != s)
                .cloned()
                .collect::<Vec<_>>(),
        )
    }

    /// Parses a word: comma-separated when it contains a comma, otherwise one
    /// symbol per character. The empty string is the empty word.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let w = Word::parse(text);
        self.encode(&w)?;
        Ok(w)
    }

    /// Every word of length `<= max_len` in length-then-lexicographic order
    /// (lexicographic with respect to alphabet order).
    pub fn words_up_to(&self, max_len: usize) -> WordsUpTo {
        WordsUpTo::new(self.len(), max_len)
    }

    pub fn count_words_up_to(&self, max_len: usize) -> u128 {
        let k = self.len() as u128;
        (0..=max_len as u32).map(|l| k.pow(l)).sum()
    }
}

/// Serialized in its display form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub struct Word(pub Vec<String>);

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

impl From<String> for Word {
    fn from(s: String) -> Word {
        Word::parse(&s)
    }
}

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn parse(text: &str) -> Self {
        let text = text.trim();
        if text.is_empty() {
            return Word::empty();
        }
        if text.contains(',') {
            Word(
                text.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
            )
        } else {
            Word(text.chars().map(|ch| ch.to_string()).collect())
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|s| s.as_str())
    }

    pub fn push(&mut self, s: impl Into<String>) {
        self.0.push(s.into());
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Word(v)
    }

    pub fn appended(&self, s: &str) -> Word {
        let mut v = self.0.clone();
        v.push(s.to_string());
        Word(v)
    }
}

impl<S: AsRef<str>> FromIterator<S> for Word {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Word(iter.into_iter().map(|s| s.as_ref().to_string()).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|s| s.chars().count() == 1) {
            write!(f, "{}", self.0.concat())
        } else if self.0.len() == 1 {
            // Trailing comma keeps a lone multi-character symbol from being
            // read back as several one-character symbols.
            write!(f, "{},", self.0[0])
        } else {
            write!(f, "{}", self.0.join(","))
        }
    }
}

/// Enumerates index words in length-lexicographic order.
pub struct WordsUpTo {
    k: usize,
    max_len: usize,
    current: Option<Vec<usize>>,
}

impl WordsUpTo {
    pub fn new(k: usize, max_len: usize) -> Self {
        WordsUpTo {
            k,
            max_len,
            current: Some(Vec::new()),
        }
    }
}

impl Iterator for WordsUpTo {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        // Increment as a base-k counter; overflow grows the length.
        let mut pos = next.len();
        loop {
            if pos == 0 {
                if next.len() < self.max_len && self.k > 0 {
                    next = vec![0; next.len() + 1];
                    self.current = Some(next);
                }
                break;
            }
            pos -= 1;
            if next[pos] + 1 < self.k {
                next[pos] += 1;
                for x in next.iter_mut().skip(pos + 1) {
                    *x = 0;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_parsing() {
        assert_eq!(Word::parse(""), Word::empty());
        assert_eq!(Word::parse("0110").len(), 4);
        assert_eq!(Word::parse("go,stop").0, vec!["go", "stop"]);
        assert_eq!(Word::parse("go,stop").to_string(), "go,stop");
        assert_eq!(Word::parse("012").to_string(), "012");
    }

    #[test]
    fn enumeration_order_and_count() {
        let a = Alphabet::new(["a", "b"]).unwrap();
        let words: Vec<String> = a
            .words_up_to(2)
            .map(|w| a.decode(&w).to_string())
            .collect();
        assert_eq!(words, ["", "a", "b", "aa", "ab", "ba", "bb"]);
        assert_eq!(a.count_words_up_to(8), 511);
        assert_eq!(a.words_up_to(8).count(), 511);
    }

    #[test]
    fn empty_alphabet_has_only_epsilon() {
        let a = Alphabet::new(Vec::<String>::new()).unwrap();
        assert_eq!(a.words_up_to(5).count(), 1);
    }

    #[test]
    fn unknown_symbol_rejected() {
        let a = Alphabet::new(["0", "1"]).unwrap();
        assert!(matches!(a.parse_word("012"), Err(QdesError::UnknownSymbol(s)) if s == "2"));
    }

    #[test]
    fn duplicate_symbols_rejected() {
        assert!(Alphabet::new(["0", "0"]).is_err());
    }
}
