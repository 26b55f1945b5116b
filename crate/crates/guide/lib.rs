//! Chapters of the guide in `book/`, compiled here so `cargo test` runs
//! every snippet.

#[doc = include_str!("../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../book/src/mittag_leffler.md")]
pub mod mittag_leffler {}
#[doc = include_str!("../../book/src/fracops.md")]
pub mod fracops {}
#[doc = include_str!("../../book/src/linear.md")]
pub mod linear {}
#[doc = include_str!("../../book/src/nonlinear.md")]
pub mod nonlinear {}
#[doc = include_str!("../../book/src/certificates.md")]
pub mod certificates {}
#[doc = include_str!("../../book/src/cli.md")]
pub mod cli {}
