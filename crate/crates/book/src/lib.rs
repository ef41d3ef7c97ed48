//! Compiles the guide in `book/` so its code listings run as doc tests.
//! mdbook cannot resolve crate dependencies on its own, so each chapter is
//! pulled in as a module doc comment instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/q-networks.md")]
pub mod q_networks {}

#[doc = include_str!("../../../book/src/dqn-variants.md")]
pub mod dqn_variants {}

#[doc = include_str!("../../../book/src/thermal-surrogate.md")]
pub mod thermal_surrogate {}

#[doc = include_str!("../../../book/src/remote-environments.md")]
pub mod remote_environments {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
