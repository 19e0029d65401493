//! Seeded random experiments checking the rank bounds statistically.
//!
//! Random subgroup model: `k` generators with `k` uniform in a range (default
//! `[2, 4]`), each a uniformly random reduced word of length uniform in
//! `[1, L]`. Trial `i` draws from its own ChaCha stream, so a report depends
//! only on the configuration and the seed, never on scheduling.

use num_bigint::BigUint;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{hnc_bound, newrankfi_bound};
use crate::extension::{ExtensionData, ExtensionElement};
use crate::stallings::{flower, fold, fold_with_rng, Index, StallingsAutomaton, StallingsError};
use crate::vfsub::{close_subgroup, subintersect, verify_boho, VfError};
use crate::words::{random_word, Alphabet, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Stallings(#[from] StallingsError),
    #[error(transparent)]
    Vf(#[from] VfError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub alphabet_size: usize,
    pub min_generators: usize,
    pub max_generators: usize,
    pub max_len: usize,
}

impl ExperimentConfig {
    pub fn new(seed: u64, trials: usize, alphabet_size: usize, max_len: usize) -> Self {
        ExperimentConfig {
            seed,
            trials,
            alphabet_size,
            min_generators: 2,
            max_generators: 4,
            max_len,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.alphabet_size == 0 || self.max_len == 0 || self.min_generators == 0 {
            return Err(ExperimentError::Config(
                "alphabet size, word length and generator counts must be positive".into(),
            ));
        }
        if self.min_generators > self.max_generators {
            return Err(ExperimentError::Config("empty generator count range".into()));
        }
        Ok(())
    }

    fn rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }

    fn random_words(&self, rng: &mut ChaCha8Rng) -> Vec<Word> {
        let k = rng.random_range(self.min_generators..=self.max_generators);
        (0..k)
            .map(|_| {
                let len = rng.random_range(1..=self.max_len);
                random_word(rng, self.alphabet_size, len)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport<R> {
    pub suite: String,
    pub config: ExperimentConfig,
    pub violations: usize,
    pub records: Vec<R>,
}

impl<R> SuiteReport<R> {
    fn new(suite: &str, config: &ExperimentConfig, records: Vec<R>, pass: impl Fn(&R) -> bool) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            config: config.clone(),
            violations: records.iter().filter(|r| !pass(r)).count(),
            records,
        }
    }
}

fn run_trials<R, F>(config: &ExperimentConfig, trial: F) -> Result<Vec<R>, ExperimentError>
where
    R: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<R, ExperimentError> + Sync,
{
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|i| trial(i, &mut config.rng(i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HncRecord {
    pub trial: usize,
    pub generators: [usize; 2],
    pub ranks: [usize; 2],
    pub intersection_rank: usize,
    pub bound: String,
    /// `rk(H_j) <= n_j`, the free case of the finite-index rank bound.
    pub newrankfi_ok: bool,
    pub pass: bool,
}

/// `rk(H1 ∩ H2) <= (rk H1 − 1)(rk H2 − 1) + 1` on random pairs in F.
pub fn hnc_suite(config: &ExperimentConfig) -> Result<SuiteReport<HncRecord>, ExperimentError> {
    config.validate()?;
    let alphabet = Alphabet::standard(config.alphabet_size);
    let records = run_trials(config, |trial, rng| {
        let g1 = config.random_words(rng);
        let g2 = config.random_words(rng);
        let h1 = StallingsAutomaton::from_generators(&alphabet, &g1)?;
        let h2 = StallingsAutomaton::from_generators(&alphabet, &g2)?;
        let rank = h1.intersect(&h2)?.rank();
        let (r1, r2) = (h1.rank(), h2.rank());
        let bound = hnc_bound(r1.max(1) as u64, r2.max(1) as u64).expect("positive ranks");
        let newrankfi_ok = [(&h1, &g1), (&h2, &g2)]
            .iter()
            .all(|(h, g)| BigUint::from(h.rank()) <= newrankfi_bound(1, g.len() as u64).expect("positive"));
        Ok(HncRecord {
            trial,
            generators: [g1.len(), g2.len()],
            ranks: [r1, r2],
            intersection_rank: rank,
            pass: BigUint::from(rank) <= bound && newrankfi_ok,
            bound: bound.to_string(),
            newrankfi_ok,
        })
    })?;
    Ok(SuiteReport::new("hnc", config, records, |r| r.pass))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShowvfRecord {
    pub trial: usize,
    pub generators: [usize; 2],
    pub k_ranks: [usize; 2],
    pub k_rank_bounds: [String; 2],
    pub intersection_k_rank: usize,
    pub nonempty_layers: usize,
    pub rank_upper_bound: usize,
    pub showvf: Option<String>,
    pub pass: bool,
}

fn random_elements(config: &ExperimentConfig, data: &ExtensionData, rng: &mut ChaCha8Rng) -> Vec<ExtensionElement> {
    config
        .random_words(rng)
        .into_iter()
        .map(|w| ExtensionElement::new(w, rng.random_range(0..data.index())))
        .collect()
}

/// Certified rank bound of `H1 ∩ H2` against `m²(n1 − 1)(n2 − 1) + m` in a
/// free-by-finite group, plus `rk(K_j) <= m(n_j − 1) + 1`.
pub fn showvf_suite(config: &ExperimentConfig, data: &ExtensionData) -> Result<SuiteReport<ShowvfRecord>, ExperimentError> {
    if data.alphabet().size() != config.alphabet_size {
        return Err(ExperimentError::Config("alphabet size differs from the extension".into()));
    }
    let m = data.index() as u64;
    let records = run_trials(config, |trial, rng| {
        let h1 = close_subgroup(data, &random_elements(config, data, rng))?;
        let h2 = close_subgroup(data, &random_elements(config, data, rng))?;
        let (_, cert) = subintersect(&h1, &h2)?;
        let boho = verify_boho(&h1, &h2, &cert);
        let mut k_ok = true;
        let k_rank_bounds = [&h1, &h2].map(|h| {
            let bound = newrankfi_bound(m, h.generators().len() as u64).expect("positive");
            k_ok &= BigUint::from(h.k_aut().rank()) <= bound;
            bound.to_string()
        });
        Ok(ShowvfRecord {
            trial,
            generators: [h1.generators().len(), h2.generators().len()],
            k_ranks: [h1.k_aut().rank(), h2.k_aut().rank()],
            k_rank_bounds,
            intersection_k_rank: cert.k_rank,
            nonempty_layers: cert.layers.iter().filter(|l| l.witness.is_some()).count(),
            rank_upper_bound: cert.rank_upper_bound,
            showvf: boho.bound.clone(),
            pass: boho.pass && k_ok,
        })
    })?;
    Ok(SuiteReport::new("showvf", config, records, |r| r.pass))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RsaRecord {
    pub trial: usize,
    pub added_generators: usize,
    pub index: usize,
    pub rank: usize,
    pub expected_rank: usize,
    pub pass: bool,
}

/// Random finite-index subgroup: fold random words, then repeatedly pick a
/// vertex `v` missing an outgoing `x`-edge and a vertex `u` missing an
/// incoming one, and add the generator `prefix(v)·x·prefix(u)^-1`. Each such
/// generator adds exactly the edge `v -x-> u`, so the process ends with a
/// complete automaton on the original vertices.
pub fn random_finite_index(
    alphabet: &Alphabet,
    seeds: &[Word],
    rng: &mut ChaCha8Rng,
) -> Result<(StallingsAutomaton, usize), StallingsError> {
    let mut generators = seeds.to_vec();
    let mut s = StallingsAutomaton::from_generators(alphabet, &generators)?;
    let mut added = 0;
    loop {
        let n = s.vertex_count() as u32;
        let missing = (0..alphabet.size()).find_map(|x| {
            let x = Letter::pos(x);
            let sources: Vec<u32> = (0..n).filter(|&v| s.target(v, x).is_none()).collect();
            let targets: Vec<u32> = (0..n).filter(|&v| s.target(v, x.inverse()).is_none()).collect();
            (!sources.is_empty()).then_some((x, sources, targets))
        });
        let Some((x, sources, targets)) = missing else {
            return Ok((s, added));
        };
        let v = sources[rng.random_range(0..sources.len())];
        let u = targets[rng.random_range(0..targets.len())];
        let prefixes = s.vertex_prefixes();
        let g = prefixes[v as usize]
            .mul(&Word::letter(x))
            .mul(&prefixes[u as usize].inv());
        generators.push(g);
        added += 1;
        s = StallingsAutomaton::from_generators(alphabet, &generators)?;
    }
}

/// `rk(H) = [F:H](|A| − 1) + 1` on random finite-index subgroups.
pub fn rsa_suite(config: &ExperimentConfig) -> Result<SuiteReport<RsaRecord>, ExperimentError> {
    config.validate()?;
    let alphabet = Alphabet::standard(config.alphabet_size);
    let records = run_trials(config, |trial, rng| {
        let seeds = config.random_words(rng);
        let (s, added) = random_finite_index(&alphabet, &seeds, rng)?;
        let index = match s.index() {
            Index::Finite(i) => i,
            Index::Infinite => 0,
        };
        let expected_rank = index * (config.alphabet_size - 1) + 1;
        Ok(RsaRecord {
            trial,
            added_generators: added,
            index,
            rank: s.rank(),
            expected_rank,
            pass: index > 0 && s.rank() == expected_rank,
        })
    })?;
    Ok(SuiteReport::new("rsa", config, records, |r| r.pass))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfluenceRecord {
    pub trial: usize,
    pub canonical_form: String,
    pub orders: usize,
    pub mismatches: usize,
    pub pass: bool,
}

/// Folding the same flower in `orders` random orders gives one canonical form.
pub fn confluence_suite(config: &ExperimentConfig, orders: usize) -> Result<SuiteReport<ConfluenceRecord>, ExperimentError> {
    config.validate()?;
    let alphabet = Alphabet::standard(config.alphabet_size);
    let records = run_trials(config, |trial, rng| {
        let raw = flower(&alphabet, &config.random_words(rng))?;
        let reference = fold(&raw).canonical_form();
        let mismatches = (0..orders)
            .filter(|_| fold_with_rng(&raw, rng).canonical_form() != reference)
            .count();
        Ok(ConfluenceRecord {
            trial,
            canonical_form: reference.to_hex(),
            orders,
            mismatches,
            pass: mismatches == 0,
        })
    })?;
    Ok(SuiteReport::new("confluence", config, records, |r| r.pass))
}
