//! Ascending chains of subgroups of a free group and where they stop growing.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{factorial, factorial_fix_stages, DynamicsError, Endomorphism, SearchBudget};
use crate::stallings::{StallingsAutomaton, StallingsError};
use crate::words::{Alphabet, Letter, Word};

/// Largest `n` accepted by [`cefr_chain`]; the last generator of `H_1` has
/// length `2^{n-1} + 2`.
pub const CEFR_DEFAULT_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("stage {stage} is not contained in the next: generator {generator} is missing")]
    NotAscending { stage: usize, generator: usize },
    #[error("a chain needs at least {min} stages, got {got}")]
    TooShort { got: usize, min: usize },
    #[error("n = {n} exceeds the cap {cap}")]
    TooLong { n: usize, cap: usize },
    #[error("equality tests disagree: canonical forms say {canonical:?}, mutual membership says {membership:?}")]
    Disagreement {
        canonical: Stabilization,
        membership: Stabilization,
    },
    #[error(transparent)]
    Stallings(#[from] StallingsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub generators: Vec<Word>,
    pub automaton: StallingsAutomaton,
    /// Words the construction could not decide (bounded searches only).
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    alphabet: Alphabet,
    stages: Vec<Stage>,
}

impl Chain {
    /// Folds each stage and checks every generator of a stage lies in the next.
    pub fn new(alphabet: &Alphabet, stages: Vec<Vec<Word>>) -> Result<Self, ChainError> {
        let stages = stages
            .into_iter()
            .map(|generators| {
                let automaton = StallingsAutomaton::from_generators(alphabet, &generators)?;
                Ok(Stage {
                    generators,
                    automaton,
                    unresolved: 0,
                })
            })
            .collect::<Result<Vec<_>, ChainError>>()?;
        Self::from_stages(alphabet, stages)
    }

    fn from_stages(alphabet: &Alphabet, stages: Vec<Stage>) -> Result<Self, ChainError> {
        for (i, pair) in stages.windows(2).enumerate() {
            for (j, g) in pair[0].generators.iter().enumerate() {
                if !pair[1].automaton.member(g)? {
                    return Err(ChainError::NotAscending {
                        stage: i + 1,
                        generator: j,
                    });
                }
            }
        }
        Ok(Chain {
            alphabet: alphabet.clone(),
            stages,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.automaton.rank()).collect()
    }

    /// Reads stages separated by lines holding `---`; each stage is a list of
    /// generators, one per line or comma separated. `#` starts a comment.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self, ChainParseError> {
        let mut stages: Vec<Vec<Word>> = vec![Vec::new()];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line == "---" {
                stages.push(Vec::new());
                continue;
            }
            for item in line.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let w = alphabet.parse(item).map_err(|e| ChainParseError::Word {
                    line: i + 1,
                    message: e.to_string(),
                })?;
                stages.last_mut().expect("nonempty").push(w);
            }
        }
        Ok(Chain::new(alphabet, stages)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainParseError {
    #[error("line {line}: {message}")]
    Word { line: usize, message: String },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// The strictly ascending chain of rank-4 subgroups of `F{a,b,c,d,e}`:
/// `H_1 = ⟨acb^-1, ac^-1b^-1, adb^-1, ad^-1b^-1⟩` and
/// `H_i = ⟨H_1, ab^-1, a e^{2^{n-i}} b^-1⟩` for `i = 2..n`.
pub fn cefr_chain(n: usize) -> Result<Chain, ChainError> {
    cefr_chain_capped(n, CEFR_DEFAULT_CAP)
}

pub fn cefr_chain_capped(n: usize, cap: usize) -> Result<Chain, ChainError> {
    if n < 2 {
        return Err(ChainError::TooShort { got: n, min: 2 });
    }
    if n > cap {
        return Err(ChainError::TooLong { n, cap });
    }
    let alphabet = Alphabet::standard(5);
    let (a, b, c, d, e) = (0, 1, 2, 3, 4);
    let w = |letters: &[Letter]| Word::reduce(letters.iter().copied());
    let (p, m) = (Letter::pos, Letter::neg);
    let h1 = vec![
        w(&[p(a), p(c), m(b)]),
        w(&[p(a), m(c), m(b)]),
        w(&[p(a), p(d), m(b)]),
        w(&[p(a), m(d), m(b)]),
    ];
    let mut stages = vec![h1.clone()];
    for i in 2..=n {
        let mut gens = h1.clone();
        gens.push(w(&[p(a), m(b)]));
        let mut long = vec![p(a)];
        long.extend(std::iter::repeat_n(p(e), 1 << (n - i)));
        long.push(m(b));
        gens.push(w(&long));
        stages.push(gens);
    }
    Chain::new(&alphabet, stages)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Equality {
    Canonical,
    MutualMembership,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stabilization {
    /// 1-based index of the first stage from which all stages agree.
    At(usize),
    /// No two consecutive final stages agree within this many stages.
    NotWithin(usize),
}

fn equal(x: &StallingsAutomaton, y: &StallingsAutomaton, eq: Equality) -> Result<bool, ChainError> {
    Ok(match eq {
        Equality::Canonical => x.canonical_form() == y.canonical_form(),
        Equality::MutualMembership => x.contains(y)? && y.contains(x)?,
    })
}

/// Least `t < len` such that stages `t, t+1, ..., len` are all equal.
pub fn stabilizes(chain: &Chain, eq: Equality) -> Result<Stabilization, ChainError> {
    let stages = &chain.stages;
    let len = stages.len();
    let mut t = len;
    while t >= 2 && equal(&stages[t - 2].automaton, &stages[t - 1].automaton, eq)? {
        t -= 1;
    }
    Ok(if t < len {
        Stabilization::At(t)
    } else {
        Stabilization::NotWithin(len)
    })
}

/// Runs both equality tests and insists they agree.
pub fn stabilization(chain: &Chain) -> Result<Stabilization, ChainError> {
    let canonical = stabilizes(chain, Equality::Canonical)?;
    let membership = stabilizes(chain, Equality::MutualMembership)?;
    if canonical != membership {
        return Err(ChainError::Disagreement { canonical, membership });
    }
    Ok(canonical)
}

/// `Fix(φ) ≤ Fix(φ^{2!}) ≤ ... ≤ Fix(φ^{k_max!})`, each stage the bounded
/// under-approximation of the dynamics module.
pub fn fix_chain(phi: &Endomorphism, k_max: u64, budget: &SearchBudget) -> Result<Chain, ChainError> {
    let approximations = factorial_fix_stages(phi, k_max, budget)?;
    let stages = approximations
        .into_iter()
        .map(|a| Stage {
            generators: a.words,
            automaton: a.automaton,
            unresolved: a.unresolved,
        })
        .collect();
    Chain::from_stages(phi.alphabet(), stages)
}

/// Exponent used for stage `m` (1-based) of [`fix_chain`].
pub fn fix_stage_exponent(m: u64) -> u64 {
    factorial(m)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageReport {
    pub stage: usize,
    pub vertices: usize,
    pub edges: usize,
    pub rank: usize,
    pub basis: Vec<String>,
    pub canonical_form: String,
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    pub stages: Vec<StageReport>,
    pub stabilization: Stabilization,
}

impl ChainReport {
    pub fn new(chain: &Chain) -> Result<Self, ChainError> {
        let stages = chain
            .stages
            .iter()
            .enumerate()
            .map(|(i, s)| StageReport {
                stage: i + 1,
                vertices: s.automaton.vertex_count(),
                edges: s.automaton.edge_count(),
                rank: s.automaton.rank(),
                basis: s.automaton.basis().iter().map(|w| chain.alphabet.format(w)).collect(),
                canonical_form: s.automaton.canonical_form().to_hex(),
                unresolved: s.unresolved,
            })
            .collect();
        Ok(ChainReport {
            stages,
            stabilization: stabilization(chain)?,
        })
    }
}
