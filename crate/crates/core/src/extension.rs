//! Finite extensions `G = F b_0 ∪ F b_1 ∪ ... ∪ F b_{m-1}` of a free group F
//! by a finite group Q, with `b_0 = 1` and F normal.
//!
//! An element `w·b_q` is stored as `(w, q)`. Multiplication needs, for each
//! `q`, the automorphism `α_q(w) = b_q w b_q^-1` (given on letters) and the
//! normalised 2-cocycle `f(q1, q2) = b_q1 b_q2 b_{q1q2}^-1`:
//!
//! `(w1, q1)·(w2, q2) = (w1 · α_q1(w2) · f(q1, q2), q1 q2)`.

use std::fmt;

use thiserror::Error;

use crate::stallings::StallingsAutomaton;
use crate::words::{Alphabet, AlphabetError, Letter, Word, WordError};

/// A finite group by its multiplication table; element 0 is the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroupTable {
    order: usize,
    mul: Vec<usize>,
    inv: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("the table must be a nonempty square, row {row} has {len} entries for order {order}")]
    NotSquare { row: usize, len: usize, order: usize },
    #[error("entry {value} is not an element of a group of order {order}")]
    OutOfRange { value: usize, order: usize },
    #[error("element 0 is not an identity (fails at {0})")]
    Identity(usize),
    #[error("element {0} has no inverse")]
    NoInverse(usize),
    #[error("({0}·{1})·{2} != {0}·({1}·{2})")]
    NotAssociative(usize, usize, usize),
}

impl FiniteGroupTable {
    /// Validates the group axioms over the whole table.
    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self, TableError> {
        let order = rows.len();
        if order == 0 {
            return Err(TableError::NotSquare { row: 0, len: 0, order: 0 });
        }
        let mut mul = Vec::with_capacity(order * order);
        for (row, entries) in rows.iter().enumerate() {
            if entries.len() != order {
                return Err(TableError::NotSquare {
                    row,
                    len: entries.len(),
                    order,
                });
            }
            for &value in entries {
                if value >= order {
                    return Err(TableError::OutOfRange { value, order });
                }
                mul.push(value);
            }
        }
        let at = |a: usize, b: usize| mul[a * order + b];
        for x in 0..order {
            if at(0, x) != x || at(x, 0) != x {
                return Err(TableError::Identity(x));
            }
        }
        let mut inv = Vec::with_capacity(order);
        for x in 0..order {
            match (0..order).find(|&y| at(x, y) == 0 && at(y, x) == 0) {
                Some(y) => inv.push(y),
                None => return Err(TableError::NoInverse(x)),
            }
        }
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if at(at(a, b), c) != at(a, at(b, c)) {
                        return Err(TableError::NotAssociative(a, b, c));
                    }
                }
            }
        }
        Ok(FiniteGroupTable { order, mul, inv })
    }

    /// Cyclic group of order `n`, written additively.
    pub fn cyclic(n: usize) -> Self {
        let rows: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        FiniteGroupTable::from_rows(&rows).expect("cyclic table is a group")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut n = 1;
        while x != 0 {
            x = self.mul(x, a);
            n += 1;
        }
        n
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.mul.chunks(self.order).map(<[usize]>::to_vec).collect()
    }
}

/// The first identity that fails in a candidate extension.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("action {q} needs exactly one image per letter")]
    ActionShape { q: usize },
    #[error("image of letter {letter} under action {q} leaves the alphabet")]
    ImageOutOfAlphabet { q: usize, letter: usize },
    #[error("action of the identity moves letter {letter}")]
    IdentityActionMoves { letter: usize },
    #[error("action {q} is not an automorphism: its images do not generate F")]
    NotAutomorphism { q: usize },
    #[error("cocycle is not normalised at ({q1}, {q2})")]
    CocycleNotNormalized { q1: usize, q2: usize },
    #[error("cocycle condition fails at ({q1}, {q2}, {q3})")]
    CocycleCondition { q1: usize, q2: usize, q3: usize },
    #[error("action {q1} after action {q2} is not action {q1}·{q2} twisted by the cocycle (letter {letter})")]
    ActionComposition { q1: usize, q2: usize, letter: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtensionError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("invalid extension: {0}")]
    Violation(#[from] Violation),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("element index {q} is not in a quotient of order {order}")]
    QuotientIndex { q: usize, order: usize },
    #[error(transparent)]
    Word(#[from] WordError),
}

/// An element `w·b_q` of G.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtensionElement {
    pub word: Word,
    pub q: usize,
}

impl ExtensionElement {
    pub fn new(word: Word, q: usize) -> Self {
        ExtensionElement { word, q }
    }

    pub fn identity() -> Self {
        ExtensionElement::new(Word::identity(), 0)
    }

    pub fn is_identity(&self) -> bool {
        self.q == 0 && self.word.is_identity()
    }
}

impl fmt::Display for ExtensionElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.word, self.q)
    }
}

/// Validated multiplication data for a free-by-finite group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionData {
    alphabet: Alphabet,
    quotient: FiniteGroupTable,
    action: Vec<Vec<Word>>,
    cocycle: Vec<Word>,
}

fn apply_images(images: &[Word], word: &Word) -> Word {
    let mut out = Word::identity();
    for &x in word.letters() {
        let image = &images[x.index()];
        out = if x.is_positive() {
            out.mul(image)
        } else {
            out.mul(&image.inv())
        };
    }
    out
}

impl ExtensionData {
    /// Builds and validates; `cocycle` is indexed `q1 * m + q2`.
    pub fn new(
        alphabet: Alphabet,
        quotient: FiniteGroupTable,
        action: Vec<Vec<Word>>,
        cocycle: Vec<Word>,
    ) -> Result<Self, ExtensionError> {
        let m = quotient.order();
        if action.len() != m {
            return Err(Violation::ActionShape { q: action.len().min(m) }.into());
        }
        if cocycle.len() != m * m {
            return Err(Violation::CocycleNotNormalized { q1: 0, q2: 0 }.into());
        }
        let data = ExtensionData {
            alphabet,
            quotient,
            action,
            cocycle,
        };
        data.check()?;
        Ok(data)
    }

    /// `F × Q`: trivial action and cocycle.
    pub fn direct_product(alphabet: Alphabet, quotient: FiniteGroupTable) -> Self {
        let m = quotient.order();
        let identity: Vec<Word> = (0..alphabet.size()).map(|i| Word::letter(Letter::pos(i))).collect();
        ExtensionData {
            action: vec![identity; m],
            cocycle: vec![Word::identity(); m * m],
            alphabet,
            quotient,
        }
    }

    /// `F ⋊ Q` with the given action (one image list per element of Q) and
    /// trivial cocycle; the action must then be a homomorphism `Q -> Aut(F)`.
    pub fn semidirect(
        alphabet: Alphabet,
        quotient: FiniteGroupTable,
        action: Vec<Vec<Word>>,
    ) -> Result<Self, ExtensionError> {
        let m = quotient.order();
        ExtensionData::new(alphabet, quotient, action, vec![Word::identity(); m * m])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn quotient(&self) -> &FiniteGroupTable {
        &self.quotient
    }

    /// `m = [G : F]`.
    pub fn index(&self) -> usize {
        self.quotient.order()
    }

    pub fn cocycle(&self, q1: usize, q2: usize) -> &Word {
        &self.cocycle[q1 * self.index() + q2]
    }

    pub fn action_images(&self, q: usize) -> &[Word] {
        &self.action[q]
    }

    /// `α_q(word) = b_q · word · b_q^-1`.
    pub fn act(&self, q: usize, word: &Word) -> Word {
        apply_images(&self.action[q], word)
    }

    /// Exhaustive check of every identity the multiplication relies on.
    pub fn check(&self) -> Result<(), Violation> {
        let m = self.index();
        let k = self.alphabet.size();
        for (q, images) in self.action.iter().enumerate() {
            if images.len() != k {
                return Err(Violation::ActionShape { q });
            }
            if let Some(letter) = images.iter().position(|w| !self.alphabet.contains(w)) {
                return Err(Violation::ImageOutOfAlphabet { q, letter });
            }
        }
        for letter in 0..k {
            if self.action[0][letter] != Word::letter(Letter::pos(letter)) {
                return Err(Violation::IdentityActionMoves { letter });
            }
        }
        // Free groups of finite rank are Hopfian, so a surjective
        // endomorphism is an automorphism.
        let whole = StallingsAutomaton::whole(&self.alphabet);
        for q in 1..m {
            let image = StallingsAutomaton::from_generators(&self.alphabet, &self.action[q])
                .map_err(|_| Violation::NotAutomorphism { q })?;
            if image != whole {
                return Err(Violation::NotAutomorphism { q });
            }
        }
        for q in 0..m {
            if !self.cocycle(0, q).is_identity() {
                return Err(Violation::CocycleNotNormalized { q1: 0, q2: q });
            }
            if !self.cocycle(q, 0).is_identity() {
                return Err(Violation::CocycleNotNormalized { q1: q, q2: 0 });
            }
        }
        let g = &self.quotient;
        for q1 in 0..m {
            for q2 in 0..m {
                for q3 in 0..m {
                    let left = self.cocycle(q1, q2).mul(self.cocycle(g.mul(q1, q2), q3));
                    let right = self.act(q1, self.cocycle(q2, q3)).mul(self.cocycle(q1, g.mul(q2, q3)));
                    if left != right {
                        return Err(Violation::CocycleCondition { q1, q2, q3 });
                    }
                }
            }
        }
        for q1 in 0..m {
            for q2 in 0..m {
                let f = self.cocycle(q1, q2);
                let q12 = g.mul(q1, q2);
                for letter in 0..k {
                    let composed = self.act(q1, &self.action[q2][letter]);
                    let twisted = f.mul(&self.action[q12][letter]).mul(&f.inv());
                    if composed != twisted {
                        return Err(Violation::ActionComposition { q1, q2, letter });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn element(&self, word: Word, q: usize) -> Result<ExtensionElement, ExtensionError> {
        self.alphabet.check(&word)?;
        if q >= self.index() {
            return Err(ExtensionError::QuotientIndex { q, order: self.index() });
        }
        Ok(ExtensionElement::new(word, q))
    }

    pub fn gmul(&self, x: &ExtensionElement, y: &ExtensionElement) -> ExtensionElement {
        let word = x
            .word
            .mul(&self.act(x.q, &y.word))
            .mul(self.cocycle(x.q, y.q));
        ExtensionElement::new(word, self.quotient.mul(x.q, y.q))
    }

    /// Inverse via the left-inverse identity
    /// `(w, q)^-1 = ((α_{q^-1}(w) · f(q^-1, q))^-1, q^-1)`.
    pub fn ginv(&self, x: &ExtensionElement) -> ExtensionElement {
        let qi = self.quotient.inv(x.q);
        let word = self.act(qi, &x.word).mul(self.cocycle(qi, x.q)).inv();
        ExtensionElement::new(word, qi)
    }

    pub fn gpow(&self, x: &ExtensionElement, n: i64) -> ExtensionElement {
        let base = if n < 0 { self.ginv(x) } else { x.clone() };
        let mut out = ExtensionElement::identity();
        for _ in 0..n.unsigned_abs() {
            out = self.gmul(&out, &base);
        }
        out
    }

    /// The coset map `G -> Q`.
    pub fn project(&self, x: &ExtensionElement) -> usize {
        x.q
    }

    /// Parses `(word, q)`.
    pub fn parse_element(&self, text: &str) -> Result<ExtensionElement, ExtensionError> {
        let parse_err = |message: &str| ExtensionError::Parse {
            line: 1,
            message: message.to_string(),
        };
        let inner = text
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| parse_err("expected (word, q)"))?;
        let (word, q) = inner.rsplit_once(',').ok_or_else(|| parse_err("expected (word, q)"))?;
        let q: usize = q.trim().parse().map_err(|_| parse_err("bad quotient index"))?;
        self.element(self.alphabet.parse(word)?, q)
    }

    pub fn format_element(&self, x: &ExtensionElement) -> String {
        format!("({}, {})", self.alphabet.format(&x.word), x.q)
    }

    /// Reads the text format:
    ///
    /// ```text
    /// alphabet a b c
    /// cyclic 2                # or: table, followed by one row per element
    /// action 1: a -> b, b -> a
    /// cocycle 1 1: a
    /// ```
    ///
    /// Letters missing from an action line are fixed; missing cocycle
    /// entries are the identity. The result is validated.
    pub fn parse(text: &str) -> Result<Self, ExtensionError> {
        let mut alphabet: Option<Alphabet> = None;
        let mut rows: Vec<Vec<usize>> = Vec::new();
        let mut in_table = false;
        let mut actions: Vec<(usize, usize, String)> = Vec::new();
        let mut cocycles: Vec<(usize, usize, usize, String)> = Vec::new();
        let err = |line: usize, message: String| ExtensionError::Parse { line, message };

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if in_table && line.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                let row = line
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err(line_no, "table rows hold element indices".into()))?;
                rows.push(row);
                continue;
            }
            in_table = false;
            let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match keyword {
                "alphabet" => {
                    let names: Vec<&str> = rest.split_whitespace().collect();
                    alphabet = Some(Alphabet::new(&names)?);
                }
                "cyclic" => {
                    let n: usize = rest
                        .trim()
                        .parse()
                        .ok()
                        .filter(|&n| n >= 1)
                        .ok_or_else(|| err(line_no, "cyclic needs a positive order".into()))?;
                    rows = FiniteGroupTable::cyclic(n).rows();
                }
                "table" => {
                    rows.clear();
                    in_table = true;
                }
                "action" => {
                    let (q, maps) = rest
                        .split_once(':')
                        .ok_or_else(|| err(line_no, "expected `action q: a -> word, ...`".into()))?;
                    let q: usize = q
                        .trim()
                        .parse()
                        .map_err(|_| err(line_no, "bad quotient index".into()))?;
                    for map in maps.split(',').filter(|s| !s.trim().is_empty()) {
                        let (from, to) = map
                            .split_once("->")
                            .ok_or_else(|| err(line_no, format!("expected `letter -> word` in {map:?}")))?;
                        actions.push((line_no, q, format!("{}\u{0}{}", from.trim(), to.trim())));
                    }
                }
                "cocycle" => {
                    let (pair, word) = rest
                        .split_once(':')
                        .ok_or_else(|| err(line_no, "expected `cocycle q1 q2: word`".into()))?;
                    let idx: Vec<usize> = pair
                        .split_whitespace()
                        .map(|t| t.parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| err(line_no, "bad quotient index".into()))?;
                    if idx.len() != 2 {
                        return Err(err(line_no, "cocycle takes two quotient indices".into()));
                    }
                    cocycles.push((line_no, idx[0], idx[1], word.trim().to_string()));
                }
                other => return Err(err(line_no, format!("unknown keyword {other:?}"))),
            }
        }

        let alphabet = alphabet.ok_or_else(|| err(1, "missing `alphabet` line".into()))?;
        if rows.is_empty() {
            return Err(err(1, "missing quotient (`cyclic n` or `table`)".into()));
        }
        let quotient = FiniteGroupTable::from_rows(&rows)?;
        let m = quotient.order();
        let identity: Vec<Word> = (0..alphabet.size()).map(|i| Word::letter(Letter::pos(i))).collect();
        let mut action = vec![identity; m];
        for (line_no, q, map) in actions {
            if q >= m {
                return Err(err(line_no, format!("quotient index {q} out of range")));
            }
            let (from, to) = map.split_once('\u{0}').expect("joined above");
            let letter = alphabet
                .index_of(from)
                .ok_or_else(|| err(line_no, format!("unknown letter {from:?}")))?;
            action[q][letter] = alphabet
                .parse(to)
                .map_err(|e| err(line_no, e.to_string()))?;
        }
        let mut cocycle = vec![Word::identity(); m * m];
        for (line_no, q1, q2, word) in cocycles {
            if q1 >= m || q2 >= m {
                return Err(err(line_no, "quotient index out of range".into()));
            }
            cocycle[q1 * m + q2] = alphabet.parse(&word).map_err(|e| err(line_no, e.to_string()))?;
        }
        ExtensionData::new(alphabet, quotient, action, cocycle)
    }

    /// Inverse of [`ExtensionData::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("alphabet {}\ntable\n", self.alphabet.names().join(" "));
        for row in self.quotient.rows() {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        for q in 1..self.index() {
            let maps: Vec<String> = (0..self.alphabet.size())
                .filter(|&a| self.action[q][a] != Word::letter(Letter::pos(a)))
                .map(|a| format!("{} -> {}", self.alphabet.name(a), self.alphabet.format(&self.action[q][a])))
                .collect();
            if !maps.is_empty() {
                out.push_str(&format!("action {q}: {}\n", maps.join(", ")));
            }
        }
        for q1 in 0..self.index() {
            for q2 in 0..self.index() {
                let f = self.cocycle(q1, q2);
                if !f.is_identity() {
                    out.push_str(&format!("cocycle {q1} {q2}: {}\n", self.alphabet.format(f)));
                }
            }
        }
        out
    }
}
