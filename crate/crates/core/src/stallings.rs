//! Stallings automata of finitely generated subgroups of a free group.
//!
//! An automaton stores only positive edges, as two dense tables
//! (`fwd[v][a]`, `bwd[v][a]`); reading `a^-1` follows `bwd`. After [`fold`]
//! every automaton is trimmed and renumbered by a breadth-first search from
//! the base (vertex 0) that explores letters in the order `a, a^-1, b, ...`,
//! so two automata of the same subgroup are structurally equal.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, RngExt};
use thiserror::Error;

use crate::words::{Alphabet, Letter, Word, WordError};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StallingsError {
    #[error("alphabets differ ({left} vs {right} letters)")]
    AlphabetMismatch { left: usize, right: usize },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("dot line {line}: {message}")]
    Dot { line: usize, message: String },
}

fn same_alphabet(left: &Alphabet, right: &Alphabet) -> Result<(), StallingsError> {
    if left == right {
        Ok(())
    } else {
        Err(StallingsError::AlphabetMismatch {
            left: left.size(),
            right: right.size(),
        })
    }
}

/// A positive edge `source --letter--> target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub source: u32,
    pub letter: usize,
    pub target: u32,
}

/// Deterministic, co-deterministic transition tables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Tables {
    letters: usize,
    fwd: Vec<u32>,
    bwd: Vec<u32>,
}

impl Tables {
    fn new(letters: usize, vertices: usize) -> Self {
        Tables {
            letters,
            fwd: vec![NONE; letters * vertices],
            bwd: vec![NONE; letters * vertices],
        }
    }

    fn vertex_count(&self) -> usize {
        self.fwd.len() / self.letters
    }

    fn add_vertex(&mut self) -> u32 {
        let id = self.vertex_count() as u32;
        self.fwd.extend(std::iter::repeat_n(NONE, self.letters));
        self.bwd.extend(std::iter::repeat_n(NONE, self.letters));
        id
    }

    fn target(&self, v: u32, x: Letter) -> Option<u32> {
        let slot = v as usize * self.letters + x.index();
        let t = if x.is_positive() {
            self.fwd[slot]
        } else {
            self.bwd[slot]
        };
        (t != NONE).then_some(t)
    }

    fn set_edge(&mut self, source: u32, letter: usize, target: u32) {
        self.fwd[source as usize * self.letters + letter] = target;
        self.bwd[target as usize * self.letters + letter] = source;
    }

    fn read(&self, from: u32, word: &Word) -> Option<u32> {
        word.letters()
            .iter()
            .try_fold(from, |v, &x| self.target(v, x))
    }

    fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for v in 0..self.vertex_count() {
            for a in 0..self.letters {
                let t = self.fwd[v * self.letters + a];
                if t != NONE {
                    out.push(Edge {
                        source: v as u32,
                        letter: a,
                        target: t,
                    });
                }
            }
        }
        out
    }
}

/// A labelled graph that need not be folded: the input to [`fold`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAutomaton {
    alphabet: Alphabet,
    vertex_count: usize,
    base: u32,
    edges: Vec<Edge>,
}

impl RawAutomaton {
    pub fn new(alphabet: Alphabet) -> Self {
        RawAutomaton {
            alphabet,
            vertex_count: 1,
            base: 0,
            edges: Vec::new(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn add_vertex(&mut self) -> u32 {
        self.vertex_count += 1;
        self.vertex_count as u32 - 1
    }

    pub fn add_edge(&mut self, source: u32, letter: usize, target: u32) {
        assert!(letter < self.alphabet.size());
        assert!((source.max(target) as usize) < self.vertex_count);
        self.edges.push(Edge {
            source,
            letter,
            target,
        });
    }

    /// Adds a closed path at the base reading `word`.
    pub fn add_petal(&mut self, word: &Word) {
        let letters = word.letters();
        if letters.is_empty() {
            return;
        }
        let mut at = self.base;
        for (i, &x) in letters.iter().enumerate() {
            let next = if i + 1 == letters.len() {
                self.base
            } else {
                self.add_vertex()
            };
            if x.is_positive() {
                self.add_edge(at, x.index(), next);
            } else {
                self.add_edge(next, x.index(), at);
            }
            at = next;
        }
    }
}

/// The flower automaton: one petal per nontrivial generator, glued at the base.
pub fn flower(alphabet: &Alphabet, generators: &[Word]) -> Result<RawAutomaton, StallingsError> {
    let mut raw = RawAutomaton::new(alphabet.clone());
    for g in generators {
        alphabet.check(g)?;
        raw.add_petal(&Word::reduce(g.letters().iter().copied()));
    }
    Ok(raw)
}

struct Folder {
    letters: usize,
    parent: Vec<u32>,
    size: Vec<u32>,
    fwd: Vec<u32>,
    bwd: Vec<u32>,
    pending: Vec<(u32, u32)>,
}

impl Folder {
    fn new(letters: usize, vertices: usize) -> Self {
        Folder {
            letters,
            parent: (0..vertices as u32).collect(),
            size: vec![1; vertices],
            fwd: vec![NONE; letters * vertices],
            bwd: vec![NONE; letters * vertices],
            pending: Vec::new(),
        }
    }

    fn find(&mut self, v: u32) -> u32 {
        let mut root = v;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut v = v;
        while self.parent[v as usize] != root {
            let next = self.parent[v as usize];
            self.parent[v as usize] = root;
            v = next;
        }
        root
    }

    fn insert(&mut self, edge: Edge) {
        let p = self.find(edge.source);
        let q = self.find(edge.target);
        let k = self.letters;
        let out = &mut self.fwd[p as usize * k + edge.letter];
        if *out == NONE {
            *out = q;
        } else {
            self.pending.push((*out, q));
        }
        let inn = &mut self.bwd[q as usize * k + edge.letter];
        if *inn == NONE {
            *inn = p;
        } else {
            self.pending.push((*inn, p));
        }
    }

    fn merge(&mut self, x: u32, y: u32) {
        let (x, y) = (self.find(x), self.find(y));
        if x == y {
            return;
        }
        let (root, child) = if self.size[x as usize] >= self.size[y as usize] {
            (x, y)
        } else {
            (y, x)
        };
        self.parent[child as usize] = root;
        self.size[root as usize] += self.size[child as usize];
        let k = self.letters;
        for a in 0..k {
            for table in [&mut self.fwd, &mut self.bwd] {
                let moved = table[child as usize * k + a];
                if moved == NONE {
                    continue;
                }
                let kept = &mut table[root as usize * k + a];
                if *kept == NONE {
                    *kept = moved;
                } else {
                    self.pending.push((*kept, moved));
                }
            }
        }
    }

    /// Folded edges of the surviving representatives, as (root ids).
    fn into_edges(mut self) -> (Vec<u32>, Vec<Edge>) {
        let n = self.parent.len();
        let mut roots = Vec::new();
        let mut edges = Vec::new();
        for v in 0..n as u32 {
            if self.find(v) != v {
                continue;
            }
            roots.push(v);
            for a in 0..self.letters {
                let t = self.fwd[v as usize * self.letters + a];
                if t != NONE {
                    let target = self.find(t);
                    edges.push(Edge {
                        source: v,
                        letter: a,
                        target,
                    });
                }
            }
        }
        (roots, edges)
    }
}

/// Folds to a fixed point, then trims and canonically renumbers.
pub fn fold(raw: &RawAutomaton) -> StallingsAutomaton {
    let mut folder = Folder::new(raw.alphabet.size(), raw.vertex_count);
    for &edge in &raw.edges {
        folder.insert(edge);
        while let Some((x, y)) = folder.pending.pop() {
            folder.merge(x, y);
        }
    }
    finish_fold(raw, folder)
}

/// Folding with the edge order and the choice of clashing pair randomised.
/// The result is independent of these choices.
pub fn fold_with_rng<R: Rng + ?Sized>(raw: &RawAutomaton, rng: &mut R) -> StallingsAutomaton {
    let mut folder = Folder::new(raw.alphabet.size(), raw.vertex_count);
    let mut edges = raw.edges.clone();
    edges.shuffle(rng);
    for edge in edges {
        folder.insert(edge);
        if rng.random_bool(0.5) {
            continue;
        }
        while !folder.pending.is_empty() {
            let pick = rng.random_range(0..folder.pending.len());
            let (x, y) = folder.pending.swap_remove(pick);
            folder.merge(x, y);
        }
    }
    while !folder.pending.is_empty() {
        let pick = rng.random_range(0..folder.pending.len());
        let (x, y) = folder.pending.swap_remove(pick);
        folder.merge(x, y);
    }
    finish_fold(raw, folder)
}

fn finish_fold(raw: &RawAutomaton, mut folder: Folder) -> StallingsAutomaton {
    let base = folder.find(raw.base);
    let (roots, edges) = folder.into_edges();
    let mut ids = HashMap::with_capacity(roots.len());
    for (i, r) in roots.iter().enumerate() {
        ids.insert(*r, i as u32);
    }
    let edges = edges.into_iter().map(|e| Edge {
        source: ids[&e.source],
        letter: e.letter,
        target: ids[&e.target],
    });
    StallingsAutomaton::from_folded(raw.alphabet.clone(), roots.len(), ids[&base], edges)
}

/// The folded, trimmed automaton S(H) of a finitely generated subgroup H.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StallingsAutomaton {
    alphabet: Alphabet,
    tables: Tables,
}

/// Index of a subgroup in the ambient free group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Index {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Finite(n) => write!(f, "{n}"),
            Index::Infinite => write!(f, "infinite"),
        }
    }
}

/// Bit-stable encoding of a Stallings automaton: equal for two automata iff
/// they describe the same subgroup over the same alphabet size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(Vec<u8>);

impl CanonicalForm {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl StallingsAutomaton {
    /// Builds an automaton from an already folded edge set: trims hanging
    /// trees away from `base` and renumbers canonically.
    fn from_folded<I>(alphabet: Alphabet, vertices: usize, base: u32, edges: I) -> Self
    where
        I: IntoIterator<Item = Edge>,
    {
        let k = alphabet.size();
        let mut tables = Tables::new(k, vertices);
        for e in edges {
            debug_assert_eq!(tables.fwd[e.source as usize * k + e.letter], NONE);
            tables.set_edge(e.source, e.letter, e.target);
        }

        let mut degree = vec![0usize; vertices];
        for e in tables.edges() {
            degree[e.source as usize] += 1;
            degree[e.target as usize] += 1;
        }
        let mut alive = vec![true; vertices];
        let mut queue: Vec<u32> = (0..vertices as u32)
            .filter(|&v| v != base && degree[v as usize] <= 1)
            .collect();
        while let Some(v) = queue.pop() {
            if !alive[v as usize] {
                continue;
            }
            alive[v as usize] = false;
            for x in Letter::all(k) {
                if let Some(t) = tables.target(v, x) {
                    if t != v && alive[t as usize] {
                        degree[t as usize] -= 1;
                        if t != base && degree[t as usize] <= 1 {
                            queue.push(t);
                        }
                    }
                }
            }
        }

        let mut order = vec![NONE; vertices];
        let mut visit = vec![base];
        order[base as usize] = 0;
        let mut head = 0;
        while head < visit.len() {
            let v = visit[head];
            head += 1;
            for x in Letter::all(k) {
                if let Some(t) = tables.target(v, x) {
                    if alive[t as usize] && order[t as usize] == NONE {
                        order[t as usize] = visit.len() as u32;
                        visit.push(t);
                    }
                }
            }
        }

        let mut out = Tables::new(k, visit.len());
        for e in tables.edges() {
            let (s, t) = (order[e.source as usize], order[e.target as usize]);
            if alive[e.source as usize] && alive[e.target as usize] && s != NONE && t != NONE {
                out.set_edge(s, e.letter, t);
            }
        }
        StallingsAutomaton {
            alphabet,
            tables: out,
        }
    }

    pub fn from_generators(alphabet: &Alphabet, generators: &[Word]) -> Result<Self, StallingsError> {
        Ok(fold(&flower(alphabet, generators)?))
    }

    pub fn trivial(alphabet: &Alphabet) -> Self {
        StallingsAutomaton {
            alphabet: alphabet.clone(),
            tables: Tables::new(alphabet.size(), 1),
        }
    }

    /// The whole free group: one vertex with a loop per letter.
    pub fn whole(alphabet: &Alphabet) -> Self {
        let mut tables = Tables::new(alphabet.size(), 1);
        for a in 0..alphabet.size() {
            tables.set_edge(0, a, 0);
        }
        StallingsAutomaton {
            alphabet: alphabet.clone(),
            tables,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn base(&self) -> u32 {
        0
    }

    pub fn vertex_count(&self) -> usize {
        self.tables.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.tables.fwd.iter().filter(|&&t| t != NONE).count()
    }

    /// Positive edges sorted by (source, letter).
    pub fn edges(&self) -> Vec<Edge> {
        self.tables.edges()
    }

    pub fn target(&self, v: u32, x: Letter) -> Option<u32> {
        self.tables.target(v, x)
    }

    /// End vertex of the path reading `word` from `from`, if the path exists.
    pub fn read(&self, from: u32, word: &Word) -> Option<u32> {
        self.tables.read(from, word)
    }

    pub fn member(&self, word: &Word) -> Result<bool, StallingsError> {
        self.alphabet.check(word)?;
        Ok(self.read(0, word) == Some(0))
    }

    pub fn rank(&self) -> usize {
        self.edge_count() + 1 - self.vertex_count()
    }

    pub fn is_trivial(&self) -> bool {
        self.edge_count() == 0
    }

    /// Labels of the breadth-first spanning tree paths from the base, and
    /// the set of tree edges keyed by (source, letter).
    fn spanning_tree(&self) -> (Vec<Word>, Vec<bool>) {
        let n = self.vertex_count();
        let k = self.alphabet.size();
        let mut prefix: Vec<Option<Word>> = vec![None; n];
        let mut tree = vec![false; n * k];
        prefix[0] = Some(Word::identity());
        let mut queue = VecDeque::from([0u32]);
        while let Some(v) = queue.pop_front() {
            let here = prefix[v as usize].clone().expect("visited");
            for x in Letter::all(k) {
                if let Some(t) = self.target(v, x) {
                    if prefix[t as usize].is_none() {
                        prefix[t as usize] = Some(here.mul(&Word::letter(x)));
                        let source = if x.is_positive() { v } else { t };
                        tree[source as usize * k + x.index()] = true;
                        queue.push_back(t);
                    }
                }
            }
        }
        (prefix.into_iter().map(|p| p.expect("connected")).collect(), tree)
    }

    /// Tree-path labels from the base to each vertex.
    pub fn vertex_prefixes(&self) -> Vec<Word> {
        self.spanning_tree().0
    }

    /// Free basis: one word per positive edge outside the spanning tree,
    /// ordered by (source, letter).
    pub fn basis(&self) -> Vec<Word> {
        let (prefix, tree) = self.spanning_tree();
        let k = self.alphabet.size();
        self.edges()
            .into_iter()
            .filter(|e| !tree[e.source as usize * k + e.letter])
            .map(|e| {
                prefix[e.source as usize]
                    .mul(&Word::letter(Letter::pos(e.letter)))
                    .mul(&prefix[e.target as usize].inv())
            })
            .collect()
    }

    /// Finite exactly when every vertex has an outgoing edge for every
    /// letter; the index is then the vertex count.
    pub fn index(&self) -> Index {
        if self.tables.fwd.iter().all(|&t| t != NONE) {
            Index::Finite(self.vertex_count())
        } else {
            Index::Infinite
        }
    }

    /// Product automaton from (base, base), restricted to reachable pairs.
    pub fn intersect(&self, other: &StallingsAutomaton) -> Result<StallingsAutomaton, StallingsError> {
        same_alphabet(&self.alphabet, &other.alphabet)?;
        let k = self.alphabet.size();
        let mut ids: HashMap<(u32, u32), u32> = HashMap::from([((0, 0), 0)]);
        let mut pairs = vec![(0u32, 0u32)];
        let mut edges = Vec::new();
        let mut head = 0;
        while head < pairs.len() {
            let (p, q) = pairs[head];
            let here = head as u32;
            head += 1;
            for x in Letter::all(k) {
                let (Some(tp), Some(tq)) = (self.target(p, x), other.target(q, x)) else {
                    continue;
                };
                let next = *ids.entry((tp, tq)).or_insert_with(|| {
                    pairs.push((tp, tq));
                    pairs.len() as u32 - 1
                });
                if x.is_positive() {
                    edges.push(Edge {
                        source: here,
                        letter: x.index(),
                        target: next,
                    });
                }
            }
        }
        Ok(StallingsAutomaton::from_folded(
            self.alphabet.clone(),
            pairs.len(),
            0,
            edges,
        ))
    }

    /// `other <= self`, decided on a basis of `other`.
    pub fn contains(&self, other: &StallingsAutomaton) -> Result<bool, StallingsError> {
        same_alphabet(&self.alphabet, &other.alphabet)?;
        Ok(other.basis().iter().all(|w| self.read(0, w) == Some(0)))
    }

    /// Automaton of the right coset `H·x`.
    pub fn coset(&self, x: &Word) -> Result<CosetAutomaton, StallingsError> {
        self.alphabet.check(x)?;
        let mut tables = self.tables.clone();
        let mut at = 0u32;
        for &letter in x.letters() {
            at = match tables.target(at, letter) {
                Some(t) => t,
                None => {
                    let fresh = tables.add_vertex();
                    if letter.is_positive() {
                        tables.set_edge(at, letter.index(), fresh);
                    } else {
                        tables.set_edge(fresh, letter.index(), at);
                    }
                    fresh
                }
            };
        }
        Ok(CosetAutomaton {
            alphabet: self.alphabet.clone(),
            tables,
            accept: at,
        })
    }

    pub fn canonical_form(&self) -> CanonicalForm {
        let edges = self.edges();
        let mut bytes = Vec::with_capacity(12 + 12 * edges.len());
        bytes.extend_from_slice(&(self.alphabet.size() as u32).to_le_bytes());
        bytes.extend_from_slice(&(self.vertex_count() as u32).to_le_bytes());
        bytes.extend_from_slice(&(edges.len() as u32).to_le_bytes());
        for e in edges {
            bytes.extend_from_slice(&e.source.to_le_bytes());
            bytes.extend_from_slice(&(e.letter as u32).to_le_bytes());
            bytes.extend_from_slice(&e.target.to_le_bytes());
        }
        CanonicalForm(bytes)
    }

    pub fn to_raw(&self) -> RawAutomaton {
        RawAutomaton {
            alphabet: self.alphabet.clone(),
            vertex_count: self.vertex_count(),
            base: 0,
            edges: self.edges(),
        }
    }

    /// Graphviz rendering; the base is drawn as a double circle.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph stallings {\n");
        out.push_str(&format!("  // alphabet {}\n", self.alphabet.names().join(" ")));
        out.push_str("  rankdir=LR;\n  node [shape=circle];\n");
        out.push_str("  0 [shape=doublecircle];\n");
        for v in 1..self.vertex_count() {
            out.push_str(&format!("  {v};\n"));
        }
        for e in self.edges() {
            out.push_str(&format!(
                "  {} -> {} [label=\"{}\"];\n",
                e.source,
                e.target,
                self.alphabet.name(e.letter)
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Alphabet named by the `// alphabet ...` comment that [`StallingsAutomaton::to_dot`] writes.
pub fn dot_alphabet(text: &str) -> Option<Alphabet> {
    text.lines().find_map(|line| {
        let rest = line.trim().strip_prefix("// alphabet")?;
        let names: Vec<&str> = rest.split_whitespace().collect();
        Alphabet::new(&names).ok()
    })
}

/// Reads the edge statements of a DOT graph (`p -> q [label="a"]`); the
/// base is the node declared with `shape=doublecircle`, else the first node.
pub fn parse_dot(alphabet: &Alphabet, text: &str) -> Result<RawAutomaton, StallingsError> {
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut base: Option<String> = None;
    let mut edges = Vec::new();
    let mut intern = |name: &str, names: &mut Vec<String>| -> u32 {
        *ids.entry(name.to_string()).or_insert_with(|| {
            names.push(name.to_string());
            names.len() as u32 - 1
        })
    };
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim().trim_end_matches(';');
        if line.is_empty()
            || line.starts_with("//")
            || line.starts_with("digraph")
            || line == "}"
            || line.starts_with("rankdir")
            || line.starts_with("node ")
            || line.starts_with("node[")
        {
            continue;
        }
        let (head, attrs) = match line.find('[') {
            Some(at) => (line[..at].trim(), &line[at..]),
            None => (line, ""),
        };
        if let Some((src, dst)) = head.split_once("->") {
            let label = attrs
                .split("label=\"")
                .nth(1)
                .and_then(|s| s.split('"').next())
                .ok_or_else(|| StallingsError::Dot {
                    line: line_no,
                    message: "edge without a label".to_string(),
                })?;
            let letter = alphabet.index_of(label).ok_or_else(|| StallingsError::Dot {
                line: line_no,
                message: format!("unknown letter {label:?}"),
            })?;
            let s = intern(src.trim(), &mut names);
            let t = intern(dst.trim(), &mut names);
            edges.push(Edge {
                source: s,
                letter,
                target: t,
            });
        } else {
            let node = head.trim();
            if node.is_empty() {
                continue;
            }
            intern(node, &mut names);
            if attrs.contains("doublecircle") {
                base = Some(node.to_string());
            }
        }
    }
    if names.is_empty() {
        names.push("0".to_string());
    }
    let base = match base {
        Some(b) => names.iter().position(|n| *n == b).unwrap_or(0) as u32,
        None => 0,
    };
    Ok(RawAutomaton {
        alphabet: alphabet.clone(),
        vertex_count: names.len(),
        base,
        edges,
    })
}

/// A folded automaton whose reduced base-to-`accept` path labels are exactly
/// the reduced words of one right coset `H·x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetAutomaton {
    alphabet: Alphabet,
    tables: Tables,
    accept: u32,
}

/// Predecessor pair and letter in a product search.
type Back = Option<((u32, u32), Letter)>;

impl CosetAutomaton {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn base(&self) -> u32 {
        0
    }

    pub fn accept(&self) -> u32 {
        self.accept
    }

    pub fn vertex_count(&self) -> usize {
        self.tables.vertex_count()
    }

    pub fn accepts(&self, word: &Word) -> bool {
        self.tables.read(0, word) == Some(self.accept)
    }

    /// Shortest word in both cosets (breadth-first, letter-order ties), or
    /// `None` when the cosets are disjoint.
    pub fn intersect(&self, other: &CosetAutomaton) -> Result<Option<Word>, StallingsError> {
        same_alphabet(&self.alphabet, &other.alphabet)?;
        let goal = (self.accept, other.accept);
        let mut seen: HashMap<(u32, u32), Back> =
            HashMap::from([((0, 0), None)]);
        let mut queue = VecDeque::from([(0u32, 0u32)]);
        while let Some(pair) = queue.pop_front() {
            if pair == goal {
                let mut letters = Vec::new();
                let mut at = pair;
                while let Some((prev, x)) = seen[&at] {
                    letters.push(x);
                    at = prev;
                }
                letters.reverse();
                return Ok(Some(Word::reduce(letters)));
            }
            for x in Letter::all(self.alphabet.size()) {
                if let (Some(p), Some(q)) = (self.tables.target(pair.0, x), other.tables.target(pair.1, x)) {
                    seen.entry((p, q)).or_insert_with(|| {
                        queue.push_back((p, q));
                        Some((pair, x))
                    });
                }
            }
        }
        Ok(None)
    }
}

impl From<&StallingsAutomaton> for CosetAutomaton {
    fn from(aut: &StallingsAutomaton) -> Self {
        CosetAutomaton {
            alphabet: aut.alphabet.clone(),
            tables: aut.tables.clone(),
            accept: 0,
        }
    }
}

/// One factor of a product set `L1 L2 ... Lk`.
#[derive(Debug, Clone, Copy)]
pub enum Factor<'a> {
    Subgroup(&'a StallingsAutomaton),
    Coset(&'a CosetAutomaton),
}

impl Factor<'_> {
    fn parts(&self) -> (&Alphabet, &Tables, u32) {
        match self {
            Factor::Subgroup(a) => (&a.alphabet, &a.tables, 0),
            Factor::Coset(c) => (&c.alphabet, &c.tables, c.accept),
        }
    }
}

struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }
    fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let fresh = self.0[w] & b == 0;
        self.0[w] |= b;
        fresh
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1u64 << (i % 64)) != 0
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits & (1u64 << b) != 0).map(move |b| w * 64 + b)
        })
    }
    fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }
}

/// Decides `word ∈ L1 L2 ... Lk` for subgroups and cosets `Li`.
///
/// The factor automata are chained by silent transitions from each accept
/// vertex to the next base, and silent transitions `p -> q` are added while
/// some path `p --x--> r ==silent==> s --x^-1--> q` exists. The reduced word
/// is then read with silent closure between letters.
pub fn benois_member(factors: &[Factor<'_>], word: &Word) -> Result<bool, StallingsError> {
    let Some(first) = factors.first() else {
        return Ok(word.is_identity());
    };
    let alphabet = first.parts().0;
    for f in factors {
        same_alphabet(alphabet, f.parts().0)?;
    }
    alphabet.check(word)?;
    let k = alphabet.size();

    let mut offsets = Vec::with_capacity(factors.len());
    let mut total = 0usize;
    for f in factors {
        offsets.push(total);
        total += f.parts().1.vertex_count();
    }
    let owner: Vec<usize> = factors
        .iter()
        .enumerate()
        .flat_map(|(i, f)| std::iter::repeat_n(i, f.parts().1.vertex_count()))
        .collect();
    let step = |state: usize, x: Letter| -> Option<usize> {
        let f = owner[state];
        factors[f]
            .parts()
            .1
            .target((state - offsets[f]) as u32, x)
            .map(|t| t as usize + offsets[f])
    };

    let mut silent: Vec<Vec<usize>> = vec![Vec::new(); total];
    for i in 0..factors.len() - 1 {
        let end = offsets[i] + factors[i].parts().2 as usize;
        silent[end].push(offsets[i + 1]);
    }
    let initial = 0usize;
    let last = factors.len() - 1;
    let finish = offsets[last] + factors[last].parts().2 as usize;

    let closure_of = |silent: &Vec<Vec<usize>>| -> Vec<BitSet> {
        (0..total)
            .map(|p| {
                let mut set = BitSet::new(total);
                set.insert(p);
                let mut stack = vec![p];
                while let Some(s) = stack.pop() {
                    for &t in &silent[s] {
                        if set.insert(t) {
                            stack.push(t);
                        }
                    }
                }
                set
            })
            .collect()
    };

    let closure = loop {
        let closure = closure_of(&silent);
        let mut added = false;
        for p in 0..total {
            for x in Letter::all(k) {
                let Some(r) = step(p, x) else { continue };
                for s in closure[r].iter() {
                    if let Some(q) = step(s, x.inverse()) {
                        if !closure[p].contains(q) && !silent[p].contains(&q) {
                            silent[p].push(q);
                            added = true;
                        }
                    }
                }
            }
        }
        if !added {
            break closure;
        }
    };

    let mut current = BitSet::new(total);
    current.union_with(&closure[initial]);
    for &x in word.letters() {
        let mut next = BitSet::new(total);
        for s in current.iter() {
            if let Some(t) = step(s, x) {
                next.union_with(&closure[t]);
            }
        }
        current = next;
    }
    Ok(current.contains(finish))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alpha(n: usize) -> Alphabet {
        Alphabet::standard(n)
    }

    fn words(al: &Alphabet, gens: &[&str]) -> Vec<Word> {
        gens.iter().map(|g| al.parse(g).unwrap()).collect()
    }

    fn sub(al: &Alphabet, gens: &[&str]) -> StallingsAutomaton {
        StallingsAutomaton::from_generators(al, &words(al, gens)).unwrap()
    }

    fn cefr_h1() -> (Alphabet, Vec<Word>) {
        let al = alpha(5);
        let gens = words(&al, &["acb^-1", "ac^-1b^-1", "adb^-1", "ad^-1b^-1"]);
        (al, gens)
    }

    #[test]
    fn flower_examples() {
        let al = alpha(3);
        let one = flower(&al, &words(&al, &["a"])).unwrap();
        assert_eq!(one.vertex_count(), 1);
        assert_eq!(one.edges().len(), 1);
        let empty = flower(&al, &[]).unwrap();
        assert_eq!((empty.vertex_count(), empty.edges().len()), (1, 0));
        let (al5, h1) = cefr_h1();
        let f = flower(&al5, &h1).unwrap();
        assert_eq!(f.edges().len(), 12);
    }

    #[test]
    fn flower_skips_trivial_generators() {
        let al = alpha(2);
        let f = flower(&al, &[Word::identity(), al.parse("ab").unwrap()]).unwrap();
        assert_eq!(f.vertex_count(), 2);
    }

    #[test]
    fn fold_examples() {
        let al = alpha(3);
        let aa = sub(&al, &["a", "a"]);
        assert_eq!((aa.vertex_count(), aa.edge_count()), (1, 1));
        let (al5, h1) = cefr_h1();
        let s = StallingsAutomaton::from_generators(&al5, &h1).unwrap();
        assert_eq!((s.vertex_count(), s.edge_count()), (3, 6));
        // 0 -a-> 1, then b and c both return to 0
        let ab_ac = sub(&al, &["ab", "ac"]);
        assert_eq!((ab_ac.vertex_count(), ab_ac.edge_count(), ab_ac.rank()), (2, 3, 2));
    }

    #[test]
    fn fold_trims_hanging_trees() {
        let al = alpha(2);
        let mut raw = RawAutomaton::new(al.clone());
        let v = raw.add_vertex();
        let w = raw.add_vertex();
        raw.add_edge(0, 0, 0);
        raw.add_edge(0, 1, v);
        raw.add_edge(v, 0, w);
        let aut = fold(&raw);
        assert_eq!(aut, sub(&al, &["a"]));
    }

    #[test]
    fn member_examples() {
        let al = alpha(3);
        let a_bc = sub(&al, &["a", "bc"]);
        assert!(a_bc.member(&al.parse("abc").unwrap()).unwrap());
        assert!(!a_bc.member(&al.parse("acb").unwrap()).unwrap());
        assert!(!a_bc.member(&al.parse("b").unwrap()).unwrap());
        assert!(a_bc.member(&Word::identity()).unwrap());
        let ab_c = sub(&al, &["ab", "c"]);
        assert!(ab_c.member(&al.parse("abc").unwrap()).unwrap());
        assert!(matches!(
            a_bc.member(&alpha(4).parse("d").unwrap()),
            Err(StallingsError::Word(WordError::LetterOutOfRange { .. }))
        ));
    }

    #[test]
    fn rank_examples() {
        let (al5, h1) = cefr_h1();
        assert_eq!(StallingsAutomaton::from_generators(&al5, &h1).unwrap().rank(), 4);
        assert_eq!(StallingsAutomaton::trivial(&al5).rank(), 0);
    }

    #[test]
    fn basis_examples() {
        let al = alpha(3);
        assert_eq!(sub(&al, &["a"]).basis(), words(&al, &["a"]));
        assert!(StallingsAutomaton::trivial(&al).basis().is_empty());
        let h = sub(&al, &["a", "bc"]);
        let basis = h.basis();
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(h.member(b).unwrap());
        }
        let again = StallingsAutomaton::from_generators(&al, &basis).unwrap();
        assert_eq!(again.canonical_form(), h.canonical_form());
        for g in words(&al, &["a", "bc"]) {
            assert!(again.member(&g).unwrap());
        }
    }

    /// Cosets of the kernel of F(a,b) -> C2 counting a-exponents, computed
    /// by the action a = (0 1), b = identity.
    fn parity_coset(word: &Word) -> u8 {
        word.letters()
            .iter()
            .filter(|x| x.index() == 0)
            .fold(0u8, |acc, _| acc ^ 1)
    }

    #[test]
    fn index_examples() {
        let al2 = alpha(2);
        assert_eq!(sub(&al2, &["a", "b"]).index(), Index::Finite(1));
        let h = sub(&al2, &["a^2", "b", "aba"]);
        assert_eq!(h.index(), Index::Finite(2));
        assert_eq!(h.rank(), 3);
        for len in 0..=6 {
            for w in all_words(2, len) {
                assert_eq!(h.member(&w).unwrap(), parity_coset(&w) == 0, "{w}");
            }
        }
        let al3 = alpha(3);
        assert_eq!(sub(&al3, &["a", "bc"]).index(), Index::Infinite);
    }

    #[test]
    fn intersect_examples() {
        let al = alpha(3);
        let meet = sub(&al, &["a", "bc"]).intersect(&sub(&al, &["ab", "c"])).unwrap();
        assert_eq!(meet.rank(), 1);
        assert_eq!(meet.canonical_form(), sub(&al, &["abc"]).canonical_form());
        let h = sub(&al, &["ab", "ba^-1c", "c^2"]);
        assert_eq!(h.intersect(&h).unwrap(), h);
        assert!(sub(&al, &["a"]).intersect(&sub(&al, &["b"])).unwrap().is_trivial());
        assert!(matches!(
            h.intersect(&StallingsAutomaton::trivial(&alpha(2))),
            Err(StallingsError::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn coset_examples() {
        let al = alpha(3);
        let a = sub(&al, &["a"]);
        assert_eq!(a.coset(&Word::identity()).unwrap().accept(), 0);
        assert_eq!(a.coset(&al.parse("a^3").unwrap()).unwrap().accept(), 0);
        let h = sub(&al, &["a", "bc"]);
        let c = h.coset(&al.parse("c").unwrap()).unwrap();
        assert_eq!(c.vertex_count(), h.vertex_count() + 1);
        assert!(c.accepts(&al.parse("c").unwrap()));
        assert!(c.accepts(&al.parse("ac").unwrap()));
        assert!(!c.accepts(&al.parse("b").unwrap()));
    }

    #[test]
    fn coset_membership_matches_definition() {
        let al = alpha(3);
        let h = sub(&al, &["a", "bc"]);
        let x = al.parse("c").unwrap();
        let c = h.coset(&x).unwrap();
        for len in 0..=4 {
            for w in all_words(3, len) {
                let expected = h.member(&w.mul(&x.inv())).unwrap();
                assert_eq!(c.accepts(&w), expected, "{w}");
            }
        }
    }

    #[test]
    fn coset_intersect_examples() {
        let al = alpha(3);
        let a = sub(&al, &["a"]);
        let k = CosetAutomaton::from(&a);
        assert_eq!(k.intersect(&k).unwrap(), Some(Word::identity()));
        let b = sub(&al, &["b"]);
        let x = al.parse("b").unwrap();
        let found = a.coset(&x).unwrap().intersect(&b.coset(&x).unwrap()).unwrap();
        assert_eq!(found, Some(x));
        let none = a
            .coset(&al.parse("b").unwrap())
            .unwrap()
            .intersect(&CosetAutomaton::from(&a))
            .unwrap();
        assert_eq!(none, None);
    }

    #[test]
    fn benois_examples() {
        let al = alpha(3);
        let a = sub(&al, &["a"]);
        let b = sub(&al, &["b"]);
        for len in 0..=4 {
            for w in all_words(3, len) {
                assert_eq!(
                    benois_member(&[Factor::Subgroup(&a)], &w).unwrap(),
                    a.member(&w).unwrap()
                );
            }
        }
        assert!(!benois_member(&[Factor::Subgroup(&a), Factor::Subgroup(&b)], &al.parse("aba").unwrap()).unwrap());
        assert!(benois_member(&[Factor::Subgroup(&a), Factor::Subgroup(&b)], &al.parse("a^2b^-3").unwrap()).unwrap());
        assert!(benois_member(&[], &Word::identity()).unwrap());
    }

    /// Brute-force oracle for ⟨a⟩⟨b⟩: reduced words a^i b^j.
    #[test]
    fn benois_product_of_cyclic_subgroups_matches_enumeration() {
        let al = alpha(2);
        let a = sub(&al, &["a"]);
        let b = sub(&al, &["b"]);
        let mut products = std::collections::HashSet::new();
        for i in -5i64..=5 {
            for j in -5i64..=5 {
                products.insert(al.parse("a").unwrap().pow(i).mul(&al.parse("b").unwrap().pow(j)));
            }
        }
        for len in 0..=5 {
            for w in all_words(2, len) {
                let got = benois_member(&[Factor::Subgroup(&a), Factor::Subgroup(&b)], &w).unwrap();
                assert_eq!(got, products.contains(&w), "{w}");
            }
        }
    }

    #[test]
    fn benois_with_cancellation_across_factors() {
        // ⟨ab⟩·⟨b^-1 c⟩ contains a·c = (ab)(b^-1 c), which only appears after
        // the middle b b^-1 cancels.
        let al = alpha(3);
        let left = sub(&al, &["ab"]);
        let right = sub(&al, &["b^-1c"]);
        let factors = [Factor::Subgroup(&left), Factor::Subgroup(&right)];
        assert!(benois_member(&factors, &al.parse("ac").unwrap()).unwrap());
        assert!(!benois_member(&factors, &al.parse("ca").unwrap()).unwrap());
        let kk = [Factor::Subgroup(&left), Factor::Subgroup(&left)];
        for len in 0..=4 {
            for w in all_words(3, len) {
                assert_eq!(benois_member(&kk, &w).unwrap(), left.member(&w).unwrap());
            }
        }
    }

    #[test]
    fn canonical_form_examples() {
        let al = alpha(2);
        assert_eq!(
            sub(&al, &["a", "b"]).canonical_form(),
            sub(&al, &["b", "a", "ab"]).canonical_form()
        );
        assert_ne!(sub(&al, &["a"]).canonical_form(), sub(&al, &["a^2"]).canonical_form());
    }

    #[test]
    fn dot_round_trip() {
        let al = alpha(3);
        let h = sub(&al, &["ab", "ba^-1c", "c^2"]);
        let dot = h.to_dot();
        assert_eq!(dot_alphabet(&dot), Some(al.clone()));
        let back = fold(&parse_dot(&al, &dot).unwrap());
        assert_eq!(back.canonical_form(), h.canonical_form());
        assert!(matches!(
            parse_dot(&al, "digraph g {\n 0 -> 1 [label=\"z\"];\n}"),
            Err(StallingsError::Dot { line: 2, .. })
        ));
    }

    #[test]
    fn randomized_folding_is_confluent() {
        let al = alpha(3);
        let gens = words(&al, &["abA", "bcb", "aCa^-1", "ccab"]);
        let raw = flower(&al, &gens).unwrap();
        let expected = fold(&raw).canonical_form();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            assert_eq!(fold_with_rng(&raw, &mut rng).canonical_form(), expected);
        }
    }

    fn all_words(k: usize, len: usize) -> Vec<Word> {
        crate::words::reduced_words(k, len)
    }
}
