//! Compiles every Rust code block in the guide (`book/`) as a doctest, so
//! the prose examples can never drift from the library. Only built during
//! doctest collection; `cargo doc` and normal builds skip it.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/simulator.md")]
mod simulator {}

#[doc = include_str!("../../../book/src/gradients.md")]
mod gradients {}

#[doc = include_str!("../../../book/src/datasets.md")]
mod datasets {}

#[doc = include_str!("../../../book/src/model.md")]
mod model {}

#[doc = include_str!("../../../book/src/search.md")]
mod search {}

#[doc = include_str!("../../../book/src/attacks.md")]
mod attacks {}

#[doc = include_str!("../../../book/src/noise.md")]
mod noise {}

#[doc = include_str!("../../../book/src/baseline.md")]
mod baseline {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}

#[doc = include_str!("../../../book/src/formats.md")]
mod formats {}
