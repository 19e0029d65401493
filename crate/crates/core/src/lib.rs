//! Exact subgroup calculus for free groups and free-by-finite groups.
//!
//! The [`stallings`] module represents finitely generated subgroups of a free
//! group by folded automata and answers membership, rank, basis, index and
//! intersection queries. [`extension`] and [`vfsub`] lift this to finite
//! extensions `G = F·Q` by working one coset layer of `F` at a time.
//! [`bounds`] evaluates the closed-form rank bounds those computations are
//! checked against, [`chains`] and [`dynamics`] run the ascending-chain and
//! fixed-subgroup experiments, and [`experiment`] is the seeded harness.

pub mod bounds;
pub mod chains;
pub mod dynamics;
pub mod experiment;
pub mod extension;
pub mod stallings;
pub mod vfsub;
pub mod words;

pub use stallings::{CanonicalForm, CosetAutomaton, Factor, Index, RawAutomaton, StallingsAutomaton};
pub use words::{Alphabet, Letter, Word};
