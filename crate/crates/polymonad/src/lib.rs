//! A compiler front-end and interpreter for a polymonadic ML.

pub mod graph;
pub mod infer;
pub mod laws;
pub mod pipeline;
pub mod runtime;
pub mod signature;
pub mod simplify;
pub mod solve;
pub mod syntax;

#[cfg(test)]
mod testutil;

/// Chapters of the user guide in `book/`, compiled here so their
/// examples run as doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/programs.md")]
    pub mod programs {}
    #[doc = include_str!("../../../book/src/signatures.md")]
    pub mod signatures {}
    #[doc = include_str!("../../../book/src/solving.md")]
    pub mod solving {}
    #[doc = include_str!("../../../book/src/running.md")]
    pub mod running {}
    #[doc = include_str!("../../../book/src/laws.md")]
    pub mod laws {}
}
