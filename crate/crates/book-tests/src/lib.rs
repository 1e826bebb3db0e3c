//! Code listings of the guide in `book/`, compiled and run as doctests.

#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/newton-flow.md")]
pub mod newton_flow {}

#[doc = include_str!("../../../book/src/minimum-norm-steps.md")]
pub mod minimum_norm_steps {}

#[doc = include_str!("../../../book/src/time-stepping.md")]
pub mod time_stepping {}

#[doc = include_str!("../../../book/src/jacobian-reuse.md")]
pub mod jacobian_reuse {}

#[doc = include_str!("../../../book/src/test-problems.md")]
pub mod test_problems {}

#[doc = include_str!("../../../book/src/lm-baseline.md")]
pub mod lm_baseline {}

#[doc = include_str!("../../../book/src/benchmarks.md")]
pub mod benchmarks {}

#[doc = include_str!("../../../book/src/known-behaviour.md")]
pub mod known_behaviour {}
