//! Finitely generated subgroups of a free-by-finite group G.
//!
//! A subgroup H is handled through its standard decomposition
//! `H = K ∪ K·h_q ∪ ...`, where `K = H ∩ F` is a free group (kept as a
//! Stallings automaton) and `h_q` is one element of H over each `q` in the
//! image `Q_H` of H in Q. Everything else reduces to automata over F.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::bounds::{showvf_bound, zak_bounds, BoundError};
use crate::extension::{ExtensionData, ExtensionElement, ExtensionError};
use crate::stallings::{benois_member, CosetAutomaton, Factor, StallingsAutomaton, StallingsError};
use crate::words::{count_reduced_words, reduced_words, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VfError {
    #[error("subgroups live in different extensions")]
    DataMismatch,
    #[error("generator {index} is not an element of the extension: {source}")]
    BadGenerator {
        index: usize,
        #[source]
        source: ExtensionError,
    },
    #[error(transparent)]
    Stallings(#[from] StallingsError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("undecided: the torsion search needs {needed} candidates, budget is {budget}")]
    Undecided { needed: u64, budget: u64 },
}

/// Coset representative `h_q` together with the generator indices whose
/// product (left to right) gives it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representative {
    pub q: usize,
    pub element: ExtensionElement,
    pub witness: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SubgroupHandle {
    data: ExtensionData,
    generators: Vec<ExtensionElement>,
    reps: Vec<Representative>,
    rep_index: Vec<Option<usize>>,
    schreier: Vec<Word>,
    k_aut: StallingsAutomaton,
}

/// Closes a generating set: computes `Q_H` and representatives by BFS over
/// the image (generators tried in order), then `K = H ∩ F` from the Schreier
/// generators `h_q · g · h_{q·π(g)}^-1`.
pub fn close_subgroup(data: &ExtensionData, generators: &[ExtensionElement]) -> Result<SubgroupHandle, VfError> {
    for (index, g) in generators.iter().enumerate() {
        data.element(g.word.clone(), g.q)
            .map_err(|source| VfError::BadGenerator { index, source })?;
    }
    let quotient = data.quotient();
    let mut rep_index = vec![None; quotient.order()];
    let mut reps = vec![Representative {
        q: 0,
        element: ExtensionElement::identity(),
        witness: Vec::new(),
    }];
    rep_index[0] = Some(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (j, g) in generators.iter().enumerate() {
            let q = quotient.mul(reps[i].q, g.q);
            if rep_index[q].is_none() {
                let mut witness = reps[i].witness.clone();
                witness.push(j);
                rep_index[q] = Some(reps.len());
                reps.push(Representative {
                    q,
                    element: data.gmul(&reps[i].element, g),
                    witness,
                });
                queue.push_back(reps.len() - 1);
            }
        }
    }

    let mut schreier = Vec::new();
    for rep in &reps {
        for g in generators {
            let target = &reps[rep_index[quotient.mul(rep.q, g.q)].expect("image is closed")];
            let s = data.gmul(&data.gmul(&rep.element, g), &data.ginv(&target.element));
            debug_assert_eq!(s.q, 0);
            if !s.word.is_identity() {
                schreier.push(s.word);
            }
        }
    }
    let k_aut = StallingsAutomaton::from_generators(data.alphabet(), &schreier)?;
    Ok(SubgroupHandle {
        data: data.clone(),
        generators: generators.to_vec(),
        reps,
        rep_index,
        schreier,
        k_aut,
    })
}

impl SubgroupHandle {
    pub fn data(&self) -> &ExtensionData {
        &self.data
    }

    pub fn generators(&self) -> &[ExtensionElement] {
        &self.generators
    }

    /// `Q_H` in increasing order.
    pub fn qh(&self) -> Vec<usize> {
        (0..self.rep_index.len()).filter(|&q| self.rep_index[q].is_some()).collect()
    }

    /// Representatives in discovery order; the first is the identity.
    pub fn reps(&self) -> &[Representative] {
        &self.reps
    }

    pub fn rep(&self, q: usize) -> Option<&Representative> {
        self.rep_index.get(q).copied().flatten().map(|i| &self.reps[i])
    }

    pub fn schreier_generators(&self) -> &[Word] {
        &self.schreier
    }

    /// Automaton of `K = H ∩ F`.
    pub fn k_aut(&self) -> &StallingsAutomaton {
        &self.k_aut
    }

    /// `[H : K] = |Q_H|`.
    pub fn layer_count(&self) -> usize {
        self.reps.len()
    }

    pub fn submember(&self, x: &ExtensionElement) -> bool {
        let Some(rep) = self.rep(x.q) else {
            return false;
        };
        if !self.data.alphabet().contains(&x.word) {
            return false;
        }
        let y = self.data.gmul(x, &self.data.ginv(&rep.element));
        y.q == 0 && self.k_aut.member(&y.word).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub q: usize,
    /// An element of `H1 ∩ H2` over `q`, if the layer is nonempty.
    pub witness: Option<ExtensionElement>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionCertificate {
    pub k_rank: usize,
    pub k_basis: Vec<Word>,
    /// One entry per nonidentity `q` in `Q_H1 ∩ Q_H2`.
    pub layers: Vec<Layer>,
    /// `rk(K)` plus the number of nonempty layers.
    pub rank_upper_bound: usize,
    /// Known exactly when the intersection lies inside F.
    pub exact_rank: Option<usize>,
}

/// `H1 ∩ H2`, generated by a basis of `K = K1 ∩ K2` and one element per
/// nonempty coset layer.
///
/// Over `q`, `k1·h¹_q = k2·h²_q` iff `k1·d = k2` with `d` the F-part of
/// `h¹_q·(h²_q)^-1`, so the layer is decided by `K1 ∩ K2·d^-1`.
pub fn subintersect(
    h1: &SubgroupHandle,
    h2: &SubgroupHandle,
) -> Result<(SubgroupHandle, IntersectionCertificate), VfError> {
    if h1.data != h2.data {
        return Err(VfError::DataMismatch);
    }
    let data = &h1.data;
    let k = h1.k_aut.intersect(&h2.k_aut)?;
    let k_basis = k.basis();
    let k1 = CosetAutomaton::from(&h1.k_aut);
    let mut layers = Vec::new();
    let mut generators: Vec<ExtensionElement> =
        k_basis.iter().map(|w| ExtensionElement::new(w.clone(), 0)).collect();
    for q in h1.qh().into_iter().filter(|&q| q != 0) {
        let Some(r2) = h2.rep(q) else { continue };
        let r1 = h1.rep(q).expect("q is in the image");
        let d = data.gmul(&r1.element, &data.ginv(&r2.element));
        debug_assert_eq!(d.q, 0);
        let witness = k1
            .intersect(&h2.k_aut.coset(&d.word.inv())?)?
            .map(|u| data.gmul(&ExtensionElement::new(u, 0), &r1.element));
        if let Some(x) = &witness {
            generators.push(x.clone());
        }
        layers.push(Layer { q, witness });
    }
    let nonempty = layers.iter().filter(|l| l.witness.is_some()).count();
    let result = close_subgroup(data, &generators)?;
    let certificate = IntersectionCertificate {
        k_rank: k.rank(),
        k_basis,
        rank_upper_bound: k.rank() + nonempty,
        exact_rank: (nonempty == 0).then(|| k.rank()),
        layers,
    };
    Ok((result, certificate))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BohoCheck {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    /// Set when a side has fewer than two generators (the cyclic case).
    pub skipped: bool,
    pub bound: Option<String>,
    pub observed: usize,
    pub pass: bool,
}

/// Compares the certified rank upper bound with `m²(n1 − 1)(n2 − 1) + m`,
/// where `n_j` counts the generators of `H_j`.
pub fn verify_boho(h1: &SubgroupHandle, h2: &SubgroupHandle, cert: &IntersectionCertificate) -> BohoCheck {
    let (n1, n2, m) = (h1.generators.len(), h2.generators.len(), h1.data.index());
    let observed = cert.rank_upper_bound;
    if n1 < 2 || n2 < 2 {
        return BohoCheck {
            n1,
            n2,
            m,
            skipped: true,
            bound: None,
            observed,
            pass: true,
        };
    }
    let bound = showvf_bound(n1 as u64, n2 as u64, m as u64).expect("n1, n2, m >= 1");
    BohoCheck {
        n1,
        n2,
        m,
        skipped: false,
        pass: num_bigint::BigUint::from(observed) <= bound,
        bound: Some(bound.to_string()),
        observed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZakharovConfig {
    /// Longest F-part tried when searching for torsion.
    pub max_len: usize,
    /// Maximum number of candidate elements examined.
    pub budget: u64,
}

impl Default for ZakharovConfig {
    fn default() -> Self {
        ZakharovConfig {
            max_len: 3,
            budget: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSubgroup {
    pub elements: Vec<ExtensionElement>,
    pub in_product: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZakharovResult {
    pub n: usize,
    pub subgroups: Vec<FiniteSubgroup>,
}

/// `x ∈ H1·H2`. Over `q1 ∈ Q_H1`, `q2 ∈ Q_H2` with `q1 q2 = q(x)`:
/// `K1 h¹ K2 h² = K1 · (r α_q1(K2) r^-1) · h¹h²`, where `r` is the F-part of
/// `h¹`, which is a product of two subgroups of F.
pub fn product_member(h1: &SubgroupHandle, h2: &SubgroupHandle, x: &ExtensionElement) -> Result<bool, VfError> {
    if h1.data != h2.data {
        return Err(VfError::DataMismatch);
    }
    let data = &h1.data;
    let quotient = data.quotient();
    let k2_basis = h2.k_aut.basis();
    for r1 in &h1.reps {
        let q2 = quotient.mul(quotient.inv(r1.q), x.q);
        let Some(r2) = h2.rep(q2) else { continue };
        let conj: Vec<Word> = k2_basis
            .iter()
            .map(|b| r1.element.word.mul(&data.act(r1.q, b)).mul(&r1.element.word.inv()))
            .collect();
        let k2c = StallingsAutomaton::from_generators(data.alphabet(), &conj)?;
        let s = data.gmul(&r1.element, &r2.element);
        debug_assert_eq!(s.q, x.q);
        let target = x.word.mul(&s.word.inv());
        if benois_member(&[Factor::Subgroup(&h1.k_aut), Factor::Subgroup(&k2c)], &target)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn close_finite(data: &ExtensionData, seed: &BTreeSet<ExtensionElement>) -> Option<BTreeSet<ExtensionElement>> {
    // A finite subgroup meets F trivially, so it embeds in Q.
    let cap = data.index();
    let mut set = seed.clone();
    set.insert(ExtensionElement::identity());
    loop {
        let items: Vec<_> = set.iter().cloned().collect();
        let mut grew = false;
        for x in &items {
            for y in &items {
                if set.insert(data.gmul(x, y)) {
                    grew = true;
                    if set.len() > cap {
                        return None;
                    }
                }
            }
        }
        if !grew {
            return Some(set);
        }
    }
}

/// Torsion elements `(w, q)` with `|w| <= max_len`, identity included.
pub fn torsion_elements(data: &ExtensionData, config: &ZakharovConfig) -> Result<Vec<ExtensionElement>, VfError> {
    let k = data.alphabet().size();
    let words = count_reduced_words(k, config.max_len).unwrap_or(u64::MAX);
    let needed = words.saturating_mul(data.index().saturating_sub(1) as u64);
    if needed > config.budget {
        return Err(VfError::Undecided {
            needed,
            budget: config.budget,
        });
    }
    let quotient = data.quotient();
    let mut found = vec![ExtensionElement::identity()];
    for len in 0..=config.max_len {
        for w in reduced_words(k, len) {
            for q in 1..data.index() {
                let x = ExtensionElement::new(w.clone(), q);
                if data.gpow(&x, quotient.element_order(q) as i64).is_identity() {
                    found.push(x);
                }
            }
        }
    }
    Ok(found)
}

/// Bounded version of Zakharov's `n = max |P ∩ H1H2|` over finite P ≤ G:
/// finite subgroups are those generated by torsion elements found by
/// [`torsion_elements`], so the answer is a lower estimate of the true n.
pub fn zakharov_n(h1: &SubgroupHandle, h2: &SubgroupHandle, config: &ZakharovConfig) -> Result<ZakharovResult, VfError> {
    if h1.data != h2.data {
        return Err(VfError::DataMismatch);
    }
    let data = &h1.data;
    let torsion = torsion_elements(data, config)?;
    let mut seen: BTreeSet<BTreeSet<ExtensionElement>> = BTreeSet::new();
    let trivial = close_finite(data, &BTreeSet::new()).expect("trivial group is finite");
    let mut queue = VecDeque::from([trivial.clone()]);
    seen.insert(trivial);
    while let Some(p) = queue.pop_front() {
        for t in &torsion {
            if p.contains(t) {
                continue;
            }
            let mut seed = p.clone();
            seed.insert(t.clone());
            if let Some(bigger) = close_finite(data, &seed) {
                if seen.insert(bigger.clone()) {
                    queue.push_back(bigger);
                }
            }
        }
    }
    let mut membership: BTreeMap<ExtensionElement, bool> = BTreeMap::new();
    let mut subgroups = Vec::new();
    for p in &seen {
        let mut in_product = 0;
        for x in p {
            let hit = match membership.get(x) {
                Some(&hit) => hit,
                None => {
                    let hit = product_member(h1, h2, x)?;
                    membership.insert(x.clone(), hit);
                    hit
                }
            };
            in_product += usize::from(hit);
        }
        subgroups.push(FiniteSubgroup {
            elements: p.iter().cloned().collect(),
            in_product,
        });
    }
    // Maximal subgroups first, larger before smaller.
    subgroups.sort_by(|a, b| b.elements.len().cmp(&a.elements.len()).then(a.elements.cmp(&b.elements)));
    let n = subgroups.iter().map(|p| p.in_product).max().unwrap_or(1);
    Ok(ZakharovResult { n, subgroups })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepReport {
    pub q: usize,
    pub element: String,
    pub witness: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgroupReport {
    pub generators: Vec<String>,
    pub qh: Vec<usize>,
    pub reps: Vec<RepReport>,
    pub k_basis: Vec<String>,
    pub k_rank: usize,
}

impl SubgroupReport {
    pub fn new(h: &SubgroupHandle) -> Self {
        let data = &h.data;
        SubgroupReport {
            generators: h.generators.iter().map(|g| data.format_element(g)).collect(),
            qh: h.qh(),
            reps: h
                .reps
                .iter()
                .map(|r| RepReport {
                    q: r.q,
                    element: data.format_element(&r.element),
                    witness: r.witness.clone(),
                })
                .collect(),
            k_basis: h.k_aut.basis().iter().map(|w| data.alphabet().format(w)).collect(),
            k_rank: h.k_aut.rank(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerReport {
    pub q: usize,
    pub nonempty: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsTable {
    pub showvf: Option<String>,
    pub zakharov_first: Option<String>,
    pub zakharov_second: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntersectionReport {
    pub left: SubgroupReport,
    pub right: SubgroupReport,
    pub intersection: SubgroupReport,
    pub k_basis: Vec<String>,
    pub k_rank: usize,
    pub layers: Vec<LayerReport>,
    pub rank_upper_bound: usize,
    pub exact_rank: Option<usize>,
    pub boho: BohoCheck,
    pub zakharov_n: Option<usize>,
    pub zakharov_note: Option<String>,
    pub bounds: BoundsTable,
}

/// Runs the whole pipeline: intersection, certificate, bound checks and the
/// bounded Zakharov comparison.
pub fn intersection_report(
    h1: &SubgroupHandle,
    h2: &SubgroupHandle,
    config: &ZakharovConfig,
) -> Result<IntersectionReport, VfError> {
    let (result, cert) = subintersect(h1, h2)?;
    let boho = verify_boho(h1, h2, &cert);
    let data = &h1.data;
    let (zakharov_n, zakharov_note) = match zakharov_n(h1, h2, config) {
        Ok(z) => (Some(z.n), None),
        Err(e @ VfError::Undecided { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let (n1, n2, m) = (h1.generators.len() as u64, h2.generators.len() as u64, data.index() as u64);
    let nontrivial = n1 >= 2 && n2 >= 2;
    let (zak1, zak2) = match (nontrivial, zakharov_n) {
        (true, Some(n)) => {
            let (a, b) = zak_bounds(n1, n2, n as u64, m)?;
            (Some(a.to_string()), Some(b.to_string()))
        }
        (true, None) => (None, Some(zak_bounds(n1, n2, 1, m)?.1.to_string())),
        _ => (None, None),
    };
    Ok(IntersectionReport {
        left: SubgroupReport::new(h1),
        right: SubgroupReport::new(h2),
        intersection: SubgroupReport::new(&result),
        k_basis: cert.k_basis.iter().map(|w| data.alphabet().format(w)).collect(),
        k_rank: cert.k_rank,
        layers: cert
            .layers
            .iter()
            .map(|l| LayerReport {
                q: l.q,
                nonempty: l.witness.is_some(),
                witness: l.witness.as_ref().map(|x| data.format_element(x)),
            })
            .collect(),
        rank_upper_bound: cert.rank_upper_bound,
        exact_rank: cert.exact_rank,
        bounds: BoundsTable {
            showvf: boho.bound.clone(),
            zakharov_first: zak1,
            zakharov_second: zak2,
        },
        boho,
        zakharov_n,
        zakharov_note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::FiniteGroupTable;
    use crate::words::{random_word, Alphabet};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g() -> ExtensionData {
        ExtensionData::direct_product(Alphabet::standard(3), FiniteGroupTable::cyclic(2))
    }

    fn el(data: &ExtensionData, s: &str) -> ExtensionElement {
        data.parse_element(s).unwrap()
    }

    fn h1(data: &ExtensionData) -> SubgroupHandle {
        close_subgroup(data, &[el(data, "(a, 1)"), el(data, "(bc, 1)")]).unwrap()
    }

    fn h2(data: &ExtensionData) -> SubgroupHandle {
        close_subgroup(data, &[el(data, "(ab, 1)"), el(data, "(c, 0)")]).unwrap()
    }

    /// All products of at most `len` generators and inverses.
    fn products(data: &ExtensionData, gens: &[ExtensionElement], len: usize) -> BTreeSet<ExtensionElement> {
        let mut letters: Vec<ExtensionElement> = gens.to_vec();
        letters.extend(gens.iter().map(|x| data.ginv(x)));
        let mut all = BTreeSet::from([ExtensionElement::identity()]);
        let mut frontier = vec![ExtensionElement::identity()];
        for _ in 0..len {
            let mut next = Vec::new();
            for x in &frontier {
                for y in &letters {
                    let z = data.gmul(x, y);
                    if all.insert(z.clone()) {
                        next.push(z);
                    }
                }
            }
            frontier = next;
        }
        all
    }

    #[test]
    fn close_examples() {
        let data = g();
        let h = h1(&data);
        assert_eq!(h.qh(), vec![0, 1]);
        assert_eq!(h.rep(1).unwrap().witness, vec![0]);
        assert!(h.k_aut().rank() <= 3);
        let al = data.alphabet();
        let expected =
            StallingsAutomaton::from_generators(al, &[al.parse("bca^-1").unwrap(), al.parse("a^2").unwrap(), al.parse("abc").unwrap()])
                .unwrap();
        assert_eq!(h.k_aut(), &expected);
        assert_eq!(h.k_aut().rank(), 3);

        let w = al.parse("ab^-1c").unwrap();
        let inside = close_subgroup(&data, &[ExtensionElement::new(w.clone(), 0)]).unwrap();
        assert_eq!(inside.qh(), vec![0]);
        assert_eq!(inside.k_aut(), &StallingsAutomaton::from_generators(al, &[w]).unwrap());

        let torsion = close_subgroup(&data, &[el(&data, "(1, 1)")]).unwrap();
        assert_eq!(torsion.qh(), vec![0, 1]);
        assert!(torsion.k_aut().is_trivial());
    }

    #[test]
    fn second_paper_subgroup() {
        let data = g();
        let h = h2(&data);
        let al = data.alphabet();
        let expected = StallingsAutomaton::from_generators(
            al,
            &[al.parse("c").unwrap(), al.parse("abab").unwrap(), al.parse("abcb^-1a^-1").unwrap()],
        )
        .unwrap();
        assert_eq!(h.k_aut(), &expected);
    }

    #[test]
    fn submember_examples() {
        let data = g();
        let h = h1(&data);
        assert!(h.submember(&el(&data, "(a, 1)")));
        assert!(h.submember(&el(&data, "((abc)^2, 0)")));
        assert!(!h.submember(&el(&data, "(b, 0)")));
        for x in products(&data, h.generators(), 6) {
            assert!(h.submember(&x), "{x}");
        }
        assert!(!products(&data, h.generators(), 6).contains(&el(&data, "(b, 0)")));
    }

    #[test]
    fn paper_intersection() {
        let data = g();
        let (a, b) = (h1(&data), h2(&data));
        let (result, cert) = subintersect(&a, &b).unwrap();
        let abc2 = data.alphabet().parse("(abc)^2").unwrap();
        assert_eq!(cert.k_basis, vec![abc2.clone()]);
        assert_eq!(cert.layers, vec![Layer { q: 1, witness: None }]);
        assert_eq!(cert.rank_upper_bound, 1);
        assert_eq!(cert.exact_rank, Some(1));
        assert_eq!(result.generators(), &[ExtensionElement::new(abc2, 0)]);

        let boho = verify_boho(&a, &b, &cert);
        assert_eq!(boho.bound.as_deref(), Some("6"));
        assert!(boho.pass && !boho.skipped);

        let z = zakharov_n(&a, &b, &ZakharovConfig::default()).unwrap();
        assert_eq!(z.n, 2);
        assert_eq!(z.subgroups[0].elements, vec![ExtensionElement::identity(), el(&data, "(1, 1)")]);
        let report = intersection_report(&a, &b, &ZakharovConfig::default()).unwrap();
        assert_eq!(report.bounds.zakharov_first.as_deref(), Some("13"));
        assert_eq!(report.bounds.showvf.as_deref(), Some("6"));
    }

    #[test]
    fn paper_product_identity() {
        let data = g();
        let x = [el(&data, "(a, 1)"), el(&data, "(bc, 1)"), data.ginv(&el(&data, "(c, 0)")), data.ginv(&el(&data, "(ab, 1)"))]
            .iter()
            .fold(ExtensionElement::identity(), |acc, y| data.gmul(&acc, y));
        assert_eq!(x, el(&data, "(1, 1)"));
        assert!(product_member(&h1(&data), &h2(&data), &x).unwrap());
    }

    #[test]
    fn product_member_matches_enumeration() {
        let data = g();
        let (a, b) = (h1(&data), h2(&data));
        let pa = products(&data, a.generators(), 3);
        let pb = products(&data, b.generators(), 3);
        let mut prods = BTreeSet::new();
        for x in &pa {
            for y in &pb {
                prods.insert(data.gmul(x, y));
            }
        }
        for x in prods.iter().take(400) {
            assert!(product_member(&a, &b, x).unwrap(), "{x}");
        }
        // (b, 0) = (a, 1)^-1 (ab, 1)
        assert!(product_member(&a, &b, &el(&data, "(b, 0)")).unwrap());
        let ha = close_subgroup(&data, &[el(&data, "(a, 0)")]).unwrap();
        let hb = close_subgroup(&data, &[el(&data, "(b, 0)")]).unwrap();
        assert!(product_member(&ha, &hb, &el(&data, "(a^2 b^-3, 0)")).unwrap());
        assert!(!product_member(&ha, &hb, &el(&data, "(ba, 0)")).unwrap());
        assert!(!product_member(&ha, &hb, &el(&data, "(1, 1)")).unwrap());
    }

    #[test]
    fn self_intersection_is_the_same_subgroup() {
        let data = g();
        let h = h1(&data);
        let (result, _) = subintersect(&h, &h).unwrap();
        for x in result.generators() {
            assert!(h.submember(x));
        }
        for x in h.generators() {
            assert!(result.submember(x));
        }
    }

    #[test]
    fn trivial_zakharov_case() {
        let data = g();
        let whole_f: Vec<ExtensionElement> =
            (0..3).map(|i| ExtensionElement::new(Word::letter(crate::words::Letter::pos(i)), 0)).collect();
        let h = close_subgroup(&data, &whole_f).unwrap();
        assert_eq!(zakharov_n(&h, &h, &ZakharovConfig::default()).unwrap().n, 1);
        let tight = ZakharovConfig { max_len: 6, budget: 10 };
        assert!(matches!(zakharov_n(&h, &h, &tight), Err(VfError::Undecided { .. })));
    }

    #[test]
    fn cyclic_inputs_skip_the_bound_check() {
        let data = g();
        let a = close_subgroup(&data, &[el(&data, "(a, 1)")]).unwrap();
        let (_, cert) = subintersect(&a, &h1(&data)).unwrap();
        assert!(verify_boho(&a, &h1(&data), &cert).skipped);
    }

    #[test]
    fn mismatched_data_is_rejected() {
        let data = g();
        let other = ExtensionData::direct_product(Alphabet::standard(3), FiniteGroupTable::cyclic(3));
        let h = close_subgroup(&other, &[el(&other, "(a, 1)")]).unwrap();
        assert!(matches!(subintersect(&h1(&data), &h), Err(VfError::DataMismatch)));
        assert!(matches!(
            close_subgroup(&data, &[ExtensionElement::new(Word::identity(), 5)]),
            Err(VfError::BadGenerator { index: 0, .. })
        ));
    }

    fn random_subgroup(rng: &mut ChaCha8Rng, data: &ExtensionData) -> SubgroupHandle {
        let count = rng.random_range(2..=3);
        let gens: Vec<ExtensionElement> = (0..count)
            .map(|_| {
                let len = rng.random_range(1..=3);
                ExtensionElement::new(random_word(rng, data.alphabet().size(), len), rng.random_range(0..data.index()))
            })
            .collect();
        close_subgroup(data, &gens).unwrap()
    }

    fn swap_f2() -> ExtensionData {
        ExtensionData::parse("alphabet a b\ncyclic 2\naction 1: a -> b, b -> a\n").unwrap()
    }

    #[test]
    fn random_intersections_against_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f2c2 = ExtensionData::direct_product(Alphabet::standard(2), FiniteGroupTable::cyclic(2));
        for data in [f2c2, swap_f2()] {
            for _ in 0..40 {
                let (a, b) = (random_subgroup(&mut rng, &data), random_subgroup(&mut rng, &data));
                let (result, cert) = subintersect(&a, &b).unwrap();
                assert_eq!(result.k_aut().rank(), cert.k_rank);
                for x in result.generators() {
                    assert!(a.submember(x) && b.submember(x));
                }
                // [H:K] = |Q_H| and the rank bound for K.
                for h in [&a, &b] {
                    let n = h.generators().len();
                    assert!(h.k_aut().rank() <= h.layer_count() * (n - 1) + 1);
                    for s in h.schreier_generators() {
                        assert!(h.k_aut().member(s).unwrap());
                    }
                }
                let short = products(&data, a.generators(), 4);
                let mut layer_hit = BTreeSet::new();
                for x in &short {
                    assert!(a.submember(x));
                    if b.submember(x) {
                        assert!(result.submember(x), "{x}");
                        layer_hit.insert(x.q);
                    }
                }
                for l in &cert.layers {
                    if layer_hit.contains(&l.q) {
                        assert!(l.witness.is_some());
                    }
                }
                assert!(verify_boho(&a, &b, &cert).pass);
            }
        }
    }
}
