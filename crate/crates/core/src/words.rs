//! Freely reduced words over a finite symmetric alphabet.
//!
//! Letters are stored as signed indices: `+(i + 1)` is the `i`-th generator and
//! `-(i + 1)` its inverse. Names only appear when parsing or printing.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, RngExt};
use thiserror::Error;

/// Errors raised while building or parsing words.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("letter {letter} is outside an alphabet of size {size}")]
    LetterOutOfRange { letter: i32, size: usize },
    #[error("0 is not a letter")]
    ZeroLetter,
    #[error("column {column}: {message}")]
    Parse { column: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlphabetError {
    #[error("an alphabet needs at least one letter")]
    Empty,
    #[error("letter name {0:?} must match [a-z][a-z0-9_]*")]
    BadName(String),
    #[error("letter name {0:?} appears twice")]
    Duplicate(String),
}

/// A signed generator: a positive letter or the inverse of one.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Letter(i32);

impl Letter {
    pub fn pos(index: usize) -> Self {
        Letter(index as i32 + 1)
    }

    pub fn neg(index: usize) -> Self {
        Letter(-(index as i32) - 1)
    }

    pub fn from_signed(signed: i32) -> Option<Self> {
        (signed != 0).then_some(Letter(signed))
    }

    /// Index of the underlying positive letter.
    pub fn index(self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn inverse(self) -> Self {
        Letter(-self.0)
    }

    pub fn signed(self) -> i32 {
        self.0
    }

    /// Dense position in the order `a, a^-1, b, b^-1, ...`. All tie-breaking
    /// in the crate follows this order.
    pub fn slot(self) -> usize {
        2 * self.index() + usize::from(!self.is_positive())
    }

    pub fn from_slot(slot: usize) -> Self {
        if slot.is_multiple_of(2) {
            Letter::pos(slot / 2)
        } else {
            Letter::neg(slot / 2)
        }
    }

    /// All signed letters of an alphabet of the given size, in slot order.
    pub fn all(size: usize) -> impl Iterator<Item = Letter> {
        (0..2 * size).map(Letter::from_slot)
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.slot().cmp(&other.slot())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A freely reduced word; the empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    pub fn letter(letter: Letter) -> Self {
        Word { letters: vec![letter] }
    }

    /// Free reduction in a single stack pass.
    pub fn reduce<I: IntoIterator<Item = Letter>>(raw: I) -> Self {
        let mut letters: Vec<Letter> = Vec::new();
        for x in raw {
            if letters.last() == Some(&x.inverse()) {
                letters.pop();
            } else {
                letters.push(x);
            }
        }
        Word { letters }
    }

    /// Reduces a raw signed-index sequence; `0` is rejected.
    pub fn from_signed(raw: &[i32]) -> Result<Self, WordError> {
        let letters = raw
            .iter()
            .map(|&s| Letter::from_signed(s).ok_or(WordError::ZeroLetter))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word::reduce(letters))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Largest letter index used, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.letters.iter().map(|x| x.index()).max()
    }

    pub fn mul(&self, other: &Word) -> Word {
        let common = self
            .letters
            .iter()
            .rev()
            .zip(other.letters.iter())
            .take_while(|(x, y)| x.inverse() == **y)
            .count();
        let mut letters = Vec::with_capacity(self.len() + other.len() - 2 * common);
        letters.extend_from_slice(&self.letters[..self.len() - common]);
        letters.extend_from_slice(&other.letters[common..]);
        Word { letters }
    }

    pub fn inv(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|x| x.inverse()).collect(),
        }
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inv() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..n.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// `conj^-1 · self · conj`
    pub fn conjugate_by(&self, conj: &Word) -> Word {
        conj.inv().mul(self).mul(conj)
    }
}

/// Uniformly random reduced word of exactly `len` letters.
pub fn random_word<R: Rng + ?Sized>(rng: &mut R, alphabet_size: usize, len: usize) -> Word {
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let x = Letter::from_slot(rng.random_range(0..2 * alphabet_size));
        if letters.last() != Some(&x.inverse()) {
            letters.push(x);
        }
    }
    Word { letters }
}

/// All reduced words of length exactly `len`, in shortlex order.
pub fn reduced_words(alphabet_size: usize, len: usize) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * (2 * alphabet_size).saturating_sub(1).max(1));
        for w in &out {
            for x in Letter::all(alphabet_size) {
                if w.letters.last() != Some(&x.inverse()) {
                    let mut letters = w.letters.clone();
                    letters.push(x);
                    next.push(Word { letters });
                }
            }
        }
        out = next;
    }
    out
}

/// Number of reduced words of length at most `max_len`; `None` on overflow.
pub fn count_reduced_words(alphabet_size: usize, max_len: usize) -> Option<u64> {
    let mut total: u64 = 1;
    let mut layer: u64 = 1;
    for i in 0..max_len {
        let branching = if i == 0 { 2 * alphabet_size } else { 2 * alphabet_size - 1 } as u64;
        layer = layer.checked_mul(branching)?;
        total = total.checked_add(layer)?;
    }
    Some(total)
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|x| {
                let name = letter_default_name(x.index());
                if x.is_positive() {
                    name
                } else {
                    format!("{name}^-1")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

fn letter_default_name(index: usize) -> String {
    if index < 26 {
        ((b'a' + index as u8) as char).to_string()
    } else {
        format!("x{index}")
    }
}

/// A finite alphabet of named positive letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, AlphabetError> {
        if names.is_empty() {
            return Err(AlphabetError::Empty);
        }
        let mut out: Vec<String> = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let mut chars = name.chars();
            let head_ok = chars.next().is_some_and(|c| c.is_ascii_lowercase());
            let tail_ok = chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
            if !head_ok || !tail_ok {
                return Err(AlphabetError::BadName(name.to_string()));
            }
            if out.iter().any(|n| n == name) {
                return Err(AlphabetError::Duplicate(name.to_string()));
            }
            out.push(name.to_string());
        }
        Ok(Alphabet { names: out })
    }

    /// `a, b, c, ...`; sizes beyond 26 continue with `x26, x27, ...`.
    pub fn standard(size: usize) -> Self {
        assert!(size >= 1, "alphabet size must be positive");
        Alphabet {
            names: (0..size).map(letter_default_name).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains(&self, word: &Word) -> bool {
        word.max_index().is_none_or(|i| i < self.size())
    }

    pub fn check(&self, word: &Word) -> Result<(), WordError> {
        match word.letters().iter().find(|x| x.index() >= self.size()) {
            Some(x) => Err(WordError::LetterOutOfRange {
                letter: x.signed(),
                size: self.size(),
            }),
            None => Ok(()),
        }
    }

    /// Reduces a signed-index sequence, rejecting letters outside the alphabet.
    pub fn reduce_signed(&self, raw: &[i32]) -> Result<Word, WordError> {
        for &s in raw {
            if s == 0 {
                return Err(WordError::ZeroLetter);
            }
            if s.unsigned_abs() as usize > self.size() {
                return Err(WordError::LetterOutOfRange {
                    letter: s,
                    size: self.size(),
                });
            }
        }
        Word::from_signed(raw)
    }

    pub fn format(&self, word: &Word) -> String {
        if word.is_identity() {
            return "1".to_string();
        }
        let parts: Vec<String> = word
            .letters()
            .iter()
            .map(|x| {
                let name = self.names.get(x.index()).map(String::as_str).unwrap_or("?");
                if x.is_positive() {
                    name.to_string()
                } else {
                    format!("{name}^-1")
                }
            })
            .collect();
        parts.join(" ")
    }

    /// Parses the textual word syntax: names separated by optional
    /// whitespace, `^n` exponents (so `^-1` is the inverse), parenthesised
    /// groups, an uppercase initial as shorthand for the inverse, and `1` or
    /// the empty string for the identity.
    pub fn parse(&self, text: &str) -> Result<Word, WordError> {
        let mut parser = Parser {
            alphabet: self,
            chars: text.chars().collect(),
            pos: 0,
        };
        let letters = parser.sequence(0)?;
        parser.skip_ws();
        if parser.pos < parser.chars.len() {
            return Err(parser.error("unexpected ')'"));
        }
        Ok(Word::reduce(letters))
    }
}

struct Parser<'a> {
    alphabet: &'a Alphabet,
    chars: Vec<char>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> WordError {
        WordError::Parse {
            column: self.pos + 1,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn sequence(&mut self, depth: usize) -> Result<Vec<Letter>, WordError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            match self.chars.get(self.pos) {
                None => return Ok(out),
                Some(')') if depth > 0 => return Ok(out),
                Some(')') => return Err(self.error("unbalanced ')'")),
                Some(_) => {
                    let atom = self.atom(depth)?;
                    let exp = self.exponent()?;
                    out.extend(Word::reduce(atom).pow(exp).letters().iter().copied());
                }
            }
        }
    }

    fn atom(&mut self, depth: usize) -> Result<Vec<Letter>, WordError> {
        let c = self.chars[self.pos];
        if c == '(' {
            self.pos += 1;
            let inner = self.sequence(depth + 1)?;
            self.skip_ws();
            if self.chars.get(self.pos) != Some(&')') {
                return Err(self.error("expected ')'"));
            }
            self.pos += 1;
            return Ok(inner);
        }
        if c == '1' {
            self.pos += 1;
            return Ok(Vec::new());
        }
        let inverted = c.is_ascii_uppercase();
        let rest: String = self.chars[self.pos..].iter().collect();
        let probe = if inverted {
            let mut s = c.to_ascii_lowercase().to_string();
            s.push_str(&rest[c.len_utf8()..]);
            s
        } else {
            rest
        };
        let best = self
            .alphabet
            .names
            .iter()
            .enumerate()
            .filter(|(_, n)| probe.starts_with(n.as_str()))
            .max_by_key(|(_, n)| n.len());
        match best {
            Some((index, name)) => {
                self.pos += name.chars().count();
                Ok(vec![if inverted {
                    Letter::neg(index)
                } else {
                    Letter::pos(index)
                }])
            }
            None => Err(self.error(&format!("unknown letter at {c:?}"))),
        }
    }

    fn exponent(&mut self) -> Result<i64, WordError> {
        self.skip_ws();
        if self.chars.get(self.pos) != Some(&'^') {
            return Ok(1);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        if matches!(self.chars.get(self.pos), Some('-') | Some('+')) {
            self.pos += 1;
        }
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse::<i64>().map_err(|_| WordError::Parse {
            column: start + 1,
            message: "expected an integer exponent".to_string(),
        })
    }
}
