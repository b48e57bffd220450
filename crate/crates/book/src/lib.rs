//! Guide chapters compiled as doc-tests, so the book's snippets stay in
//! step with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/kernel.md")]
pub mod kernel {}
#[doc = include_str!("../../../book/src/resources.md")]
pub mod resources {}
#[doc = include_str!("../../../book/src/workload.md")]
pub mod workload {}
#[doc = include_str!("../../../book/src/broker.md")]
pub mod broker {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
#[doc = include_str!("../../../book/src/configuration.md")]
pub mod configuration {}
#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}
#[doc = include_str!("../../../book/src/plans.md")]
pub mod plans {}
