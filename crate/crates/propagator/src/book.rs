//! Doctest shims for the guide in `book/`. Every fenced Rust block in a chapter
//! compiles and runs under `cargo test --doc`, so the book cannot drift from the
//! library it documents.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/kernel.md")]
mod kernel {}

#[doc = include_str!("../../../book/src/action.md")]
mod action {}

#[doc = include_str!("../../../book/src/gaussian.md")]
mod gaussian {}

#[doc = include_str!("../../../book/src/momentum.md")]
mod momentum {}

#[doc = include_str!("../../../book/src/lattice.md")]
mod lattice {}

#[doc = include_str!("../../../book/src/evolution.md")]
mod evolution {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
