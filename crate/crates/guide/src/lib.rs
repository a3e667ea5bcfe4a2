//! The book chapters compiled as doctests, one module per chapter so a
//! failure points at its file.

#[cfg(doctest)]
mod chapters {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/decoherence.md")]
    mod decoherence {}
    #[doc = include_str!("../../../book/src/correlated.md")]
    mod correlated {}
    #[doc = include_str!("../../../book/src/decoupling.md")]
    mod decoupling {}
    #[doc = include_str!("../../../book/src/tomography.md")]
    mod tomography {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
