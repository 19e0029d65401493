//! Endomorphisms of free groups and bounded searches for fixed and periodic
//! elements.
//!
//! `Fix(φ^n)` and `Per(φ)` are approximated from below: every reduced word up
//! to a length budget is classified by iterating φ, and the words that come
//! back are folded into a subgroup. Nothing here claims the approximation is
//! the whole subgroup.

use std::collections::HashSet;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::extension::{ExtensionData, ExtensionElement};
use crate::stallings::{StallingsAutomaton, StallingsError};
use crate::words::{count_reduced_words, reduced_words, Alphabet, Letter, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("expected one image per letter ({expected}), got {got}")]
    ImageCount { expected: usize, got: usize },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Stallings(#[from] StallingsError),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("budget exceeded: {words} words of length <= {max_len}, cap is {cap}")]
    Budget { words: u64, max_len: usize, cap: u64 },
    #[error("{m} does not divide {m_prime}")]
    NotDivisor { m: u64, m_prime: u64 },
    #[error("exponents and budgets must be positive")]
    ZeroBudget,
    #[error("block map is not an endomorphism: {0}")]
    Block(String),
}

/// An endomorphism of F given by the images of the positive letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endomorphism {
    alphabet: Alphabet,
    images: Vec<Word>,
}

impl Endomorphism {
    pub fn new(alphabet: &Alphabet, images: Vec<Word>) -> Result<Self, DynamicsError> {
        if images.len() != alphabet.size() {
            return Err(DynamicsError::ImageCount {
                expected: alphabet.size(),
                got: images.len(),
            });
        }
        for w in &images {
            alphabet.check(w)?;
        }
        Ok(Endomorphism {
            alphabet: alphabet.clone(),
            images,
        })
    }

    pub fn identity(alphabet: &Alphabet) -> Self {
        let images = (0..alphabet.size()).map(|i| Word::letter(Letter::pos(i))).collect();
        Endomorphism {
            alphabet: alphabet.clone(),
            images,
        }
    }

    /// Reads lines `a -> word`; `#` starts a comment and unlisted letters
    /// are fixed.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self, DynamicsError> {
        let mut images: Vec<Word> = Self::identity(alphabet).images;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(arrow) = content.find("->") else {
                return Err(DynamicsError::Parse {
                    line,
                    column: content.len() - content.trim_start().len() + 1,
                    message: "expected `letter -> word`".into(),
                });
            };
            let name = content[..arrow].trim();
            let letter = alphabet.index_of(name).ok_or_else(|| DynamicsError::Parse {
                line,
                column: content.find(name).unwrap_or(0) + 1,
                message: format!("unknown letter {name:?}"),
            })?;
            let rhs = &content[arrow + 2..];
            images[letter] = alphabet.parse(rhs).map_err(|e| match e {
                WordError::Parse { column, message } => DynamicsError::Parse {
                    line,
                    column: arrow + 2 + column,
                    message,
                },
                other => DynamicsError::Parse {
                    line,
                    column: arrow + 3,
                    message: other.to_string(),
                },
            })?;
        }
        Ok(Endomorphism {
            alphabet: alphabet.clone(),
            images,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn apply_once(&self, u: &Word) -> Word {
        Word::reduce(u.letters().iter().flat_map(|&x| {
            let image = &self.images[x.index()];
            let letters: Vec<Letter> = if x.is_positive() {
                image.letters().to_vec()
            } else {
                image.letters().iter().rev().map(|l| l.inverse()).collect()
            };
            letters
        }))
    }

    /// `u φ^n`.
    pub fn apply(&self, u: &Word, n: u64) -> Word {
        let mut w = u.clone();
        for _ in 0..n {
            w = self.apply_once(&w);
        }
        w
    }

    pub fn to_text(&self) -> String {
        (0..self.alphabet.size())
            .map(|i| format!("{} -> {}\n", self.alphabet.name(i), self.alphabet.format(&self.images[i])))
            .collect()
    }
}

/// What iterating φ from a word revealed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orbit {
    /// Returns to itself; the least such power.
    Periodic(u64),
    /// Ran into a cycle that avoids the start word, so it never returns.
    NotPeriodic,
    /// Did not return within this many steps (all computed exactly).
    NoReturn(u64),
    /// An iterate outgrew the length cap after this many steps.
    Unresolved(u64),
}

impl Orbit {
    /// Whether `φ^n` fixes the word, when the orbit decides it.
    pub fn fixed_by(self, n: u64) -> Option<bool> {
        match self {
            Orbit::Periodic(p) => Some(n.is_multiple_of(p)),
            Orbit::NotPeriodic => Some(false),
            Orbit::NoReturn(steps) => (n <= steps).then_some(false),
            Orbit::Unresolved(steps) => (n <= steps).then_some(false),
        }
    }
}

pub fn orbit(phi: &Endomorphism, x: &Word, max_steps: u64, len_cap: usize) -> Orbit {
    let mut seen: HashSet<Word> = HashSet::from([x.clone()]);
    let mut w = x.clone();
    for step in 1..=max_steps {
        w = phi.apply_once(&w);
        if w == *x {
            return Orbit::Periodic(step);
        }
        if w.len() > len_cap {
            return Orbit::Unresolved(step - 1);
        }
        if !seen.insert(w.clone()) {
            return Orbit::NotPeriodic;
        }
    }
    Orbit::NoReturn(max_steps)
}

/// Enumeration budget for the searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    /// Longest reduced word enumerated.
    pub max_len: usize,
    /// Longest iterate tracked before a word is declared unresolved.
    pub len_cap: usize,
    /// Most words the enumeration may visit.
    pub max_words: u64,
}

impl SearchBudget {
    pub fn new(max_len: usize) -> Self {
        SearchBudget {
            max_len,
            len_cap: (8 * max_len).max(32),
            max_words: 10_000_000,
        }
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget::new(8)
    }
}

/// Orbits of every nontrivial reduced word up to the length budget, in
/// shortlex order.
pub fn classify(phi: &Endomorphism, budget: &SearchBudget, max_steps: u64) -> Result<Vec<(Word, Orbit)>, DynamicsError> {
    if budget.max_len == 0 || max_steps == 0 {
        return Err(DynamicsError::ZeroBudget);
    }
    let k = phi.alphabet.size();
    let words = count_reduced_words(k, budget.max_len).unwrap_or(u64::MAX);
    if words > budget.max_words {
        return Err(DynamicsError::Budget {
            words,
            max_len: budget.max_len,
            cap: budget.max_words,
        });
    }
    let mut out = Vec::new();
    for len in 1..=budget.max_len {
        let layer: Vec<(Word, Orbit)> = reduced_words(k, len)
            .into_par_iter()
            .map(|w| {
                let o = orbit(phi, &w, max_steps, budget.len_cap);
                (w, o)
            })
            .collect();
        out.extend(layer);
    }
    Ok(out)
}

/// Under-approximation of a subgroup from the words known to lie in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Approximation {
    pub words: Vec<Word>,
    pub automaton: StallingsAutomaton,
    /// Words the search could not decide.
    pub unresolved: usize,
}

fn approximate(alphabet: &Alphabet, words: Vec<Word>, unresolved: usize) -> Result<Approximation, DynamicsError> {
    let automaton = StallingsAutomaton::from_generators(alphabet, &words)?;
    Ok(Approximation {
        words,
        automaton,
        unresolved,
    })
}

fn approximate_fix(
    phi: &Endomorphism,
    classified: &[(Word, Orbit)],
    n: u64,
) -> Result<Approximation, DynamicsError> {
    let mut fixed = Vec::new();
    let mut unresolved = 0;
    for (w, o) in classified {
        match o.fixed_by(n) {
            Some(true) => fixed.push(w.clone()),
            Some(false) => {}
            None => unresolved += 1,
        }
    }
    approximate(&phi.alphabet, fixed, unresolved)
}

/// Subgroup generated by the words of length `<= max_len` fixed by `φ^n`.
pub fn fixed_search(phi: &Endomorphism, n: u64, budget: &SearchBudget) -> Result<Approximation, DynamicsError> {
    let classified = classify(phi, budget, n)?;
    approximate_fix(phi, &classified, n)
}

/// Stages `Fix(φ^{m!})` for `m = 1..=k_max` from one shared enumeration.
pub fn factorial_fix_stages(
    phi: &Endomorphism,
    k_max: u64,
    budget: &SearchBudget,
) -> Result<Vec<Approximation>, DynamicsError> {
    if k_max == 0 {
        return Err(DynamicsError::ZeroBudget);
    }
    let classified = classify(phi, budget, factorial(k_max))?;
    (1..=k_max)
        .map(|m| approximate_fix(phi, &classified, factorial(m)))
        .collect()
}

pub fn factorial(m: u64) -> u64 {
    (1..=m).product()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicReport {
    pub max_len: usize,
    pub k_max: u64,
    pub found: Vec<(Word, u64)>,
    pub approximation: Approximation,
    pub rank: usize,
    /// Least common multiple of the periods found; 1 if none.
    pub r_phi_estimate: u64,
    /// `(M, rank <= M)` when a bound was supplied.
    pub m_check: Option<(u64, bool)>,
}

/// Words of length `<= max_len` with a period `<= k_max`, their subgroup,
/// and the lcm of the periods.
pub fn periodic_search(
    phi: &Endomorphism,
    k_max: u64,
    budget: &SearchBudget,
    m_bound: Option<u64>,
) -> Result<PeriodicReport, DynamicsError> {
    let classified = classify(phi, budget, k_max)?;
    let mut found = Vec::new();
    let mut unresolved = 0;
    for (w, o) in classified {
        match o {
            Orbit::Periodic(p) => found.push((w, p)),
            Orbit::Unresolved(steps) if steps < k_max => unresolved += 1,
            _ => {}
        }
    }
    let r_phi_estimate = found.iter().fold(1u64, |acc, &(_, p)| acc.lcm(&p));
    let words = found.iter().map(|(w, _)| w.clone()).collect();
    let approximation = approximate(&phi.alphabet, words, unresolved)?;
    let rank = approximation.automaton.rank();
    Ok(PeriodicReport {
        max_len: budget.max_len,
        k_max,
        found,
        rank,
        r_phi_estimate,
        m_check: m_bound.map(|m| (m, rank as u64 <= m)),
        approximation,
    })
}

/// The least `p >= 1` with `x φ^p = x`, by direct iteration up to `limit`.
pub fn direct_period(phi: &Endomorphism, x: &Word, limit: u64) -> Option<u64> {
    let mut w = x.clone();
    for p in 1..=limit {
        w = phi.apply_once(&w);
        if w == *x {
            return Some(p);
        }
    }
    None
}

/// Every word found fixed by `φ^m` (and every basis word of their subgroup)
/// is also fixed by `φ^{m'}`, checked by direct iteration.
pub fn verify_psv1(phi: &Endomorphism, m: u64, m_prime: u64, budget: &SearchBudget) -> Result<bool, DynamicsError> {
    if m == 0 || m_prime == 0 {
        return Err(DynamicsError::ZeroBudget);
    }
    if !m_prime.is_multiple_of(m) {
        return Err(DynamicsError::NotDivisor { m, m_prime });
    }
    let fix = fixed_search(phi, m, budget)?;
    let basis = fix.automaton.basis();
    Ok(fix.words.iter().chain(&basis).all(|w| phi.apply(w, m_prime) == *w))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeriodicWord {
    pub word: String,
    pub period: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeriodicSummary {
    pub max_len: usize,
    pub k_max: u64,
    pub found: Vec<PeriodicWord>,
    pub basis: Vec<String>,
    pub rank: usize,
    pub r_phi_estimate: u64,
    pub unresolved: usize,
    pub m_bound: Option<u64>,
    pub m_check_pass: Option<bool>,
}

impl PeriodicReport {
    pub fn summary(&self, alphabet: &Alphabet) -> PeriodicSummary {
        PeriodicSummary {
            max_len: self.max_len,
            k_max: self.k_max,
            found: self
                .found
                .iter()
                .map(|(w, p)| PeriodicWord {
                    word: alphabet.format(w),
                    period: *p,
                })
                .collect(),
            basis: self.approximation.automaton.basis().iter().map(|w| alphabet.format(w)).collect(),
            rank: self.rank,
            r_phi_estimate: self.r_phi_estimate,
            unresolved: self.approximation.unresolved,
            m_bound: self.m_check.map(|(m, _)| m),
            m_check_pass: self.m_check.map(|(_, ok)| ok),
        }
    }
}

/// `(w, q) ↦ (ψ(w), θ(q))` on a direct product `F × Q`; it preserves F and
/// restricts to ψ there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEndomorphism {
    data: ExtensionData,
    free: Endomorphism,
    quotient_map: Vec<usize>,
}

impl BlockEndomorphism {
    pub fn new(data: &ExtensionData, free: Endomorphism, quotient_map: Vec<usize>) -> Result<Self, DynamicsError> {
        let q = data.quotient();
        let m = q.order();
        let direct = ExtensionData::direct_product(data.alphabet().clone(), q.clone());
        if *data != direct {
            return Err(DynamicsError::Block("the extension is not a direct product".into()));
        }
        if free.alphabet() != data.alphabet() {
            return Err(DynamicsError::Block("alphabet mismatch".into()));
        }
        if quotient_map.len() != m || quotient_map.iter().any(|&x| x >= m) {
            return Err(DynamicsError::Block("the quotient map needs one image per element".into()));
        }
        for a in 0..m {
            for b in 0..m {
                if quotient_map[q.mul(a, b)] != q.mul(quotient_map[a], quotient_map[b]) {
                    return Err(DynamicsError::Block(format!("quotient map fails on ({a}, {b})")));
                }
            }
        }
        Ok(BlockEndomorphism {
            data: data.clone(),
            free,
            quotient_map,
        })
    }

    pub fn apply(&self, x: &ExtensionElement) -> ExtensionElement {
        ExtensionElement::new(self.free.apply_once(&x.word), self.quotient_map[x.q])
    }

    pub fn restrict_to_f(&self) -> &Endomorphism {
        &self.free
    }

    pub fn data(&self) -> &ExtensionData {
        &self.data
    }
}
