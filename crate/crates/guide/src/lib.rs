//! The guide in `book/` as doc-tests. mdbook cannot link against workspace
//! crates when testing, so each chapter is pulled in here instead and
//! `cargo test` runs its snippets.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}
#[doc = include_str!("../../../book/src/environments.md")]
pub mod environments {}
#[doc = include_str!("../../../book/src/attacks.md")]
pub mod attacks {}
#[doc = include_str!("../../../book/src/losses.md")]
pub mod losses {}
#[doc = include_str!("../../../book/src/curriculum.md")]
pub mod curriculum {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
