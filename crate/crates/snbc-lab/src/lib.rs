//! Non-backtracking walk counting on random covering graphs.
//!
//! This library provides the machinery needed to study strictly
//! non-backtracking closed (SNBC) walks in random degree-`n` covers of a
//! fixed base graph `B`, and to fit the resulting counting statistics as
//! asymptotic expansions in `1/n`:
//!
//! * graphs with multi-edges, half-loops and whole-loops, orderings, and
//!   `B`-graph structures ([`graph`]);
//! * Hashimoto (non-backtracking) matrices and their spectra ([`spectral`]);
//! * coordinatized covers built from permutation assignments, with samplers
//!   and exhaustive enumerators for the basic random models ([`cover`]);
//! * SNBC walk enumeration, homotopy reduction by bead suppression,
//!   variable-length graphs, wordings, and legal-walk counts ([`walks`]);
//! * polyexponential functions, additive and certified dot convolutions,
//!   and growth-rate estimation ([`polyexp`]);
//! * weighted finite automata over directed-edge alphabets and the
//!   occurrence/wording summation formulas ([`reglang`]);
//! * walk-subgraph pairs and their homotopy types ([`pairs`]);
//! * exact and Monte Carlo expectations over cover models and `1/n`
//!   expansion fitting ([`expansion`]).
//!
//! The `snbclab` binary exposes every pipeline on the command line; see the
//! book under `book/` for a guided tour.

pub mod budget;
pub mod cover;
pub mod error;
pub mod expansion;
pub mod graph;
pub mod pairs;
pub mod polyexp;
pub mod reglang;
pub mod scalar;
pub mod spectral;
pub mod walks;

pub use budget::Budget;
pub use error::{Error, Result};

// Keep the book's code listings honest: every fenced Rust block in the
// guide is compiled and run by `cargo test --doc`.
#[cfg(any())] // book not yet written
mod book {
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/covers.md")]
    mod covers {}
    #[doc = include_str!("../../../book/src/walks.md")]
    mod walks {}
    #[doc = include_str!("../../../book/src/polyexp.md")]
    mod polyexp {}
    #[doc = include_str!("../../../book/src/automata.md")]
    mod automata {}
    #[doc = include_str!("../../../book/src/pairs.md")]
    mod pairs {}
    #[doc = include_str!("../../../book/src/expansions.md")]
    mod expansions {}
}
