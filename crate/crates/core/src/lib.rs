//! Toolchain for LightRocks-style robot programs: a three-layer
//! Task/Skill/Action language built on one hierarchical component type.
//!
//! The pipeline is [`dsl::parse`] → [`model::load`] (name resolution,
//! `extends` merging, validation) → either [`engine`] (hierarchical
//! statechart execution against [`devices::SimRig`]) or [`compiler`]
//! (flattening and DOT output).

pub mod compiler;
pub mod devices;
pub mod diag;
pub mod dsl;
pub mod engine;
pub mod model;
pub mod scenarios;
pub mod world;
pub mod cli;

/// The guide in `book/`, compiled so its examples run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/language.md")]
    mod language {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/world.md")]
    mod world {}
    #[doc = include_str!("../../../book/src/execution.md")]
    mod execution {}
    #[doc = include_str!("../../../book/src/compiling.md")]
    mod compiling {}
    #[doc = include_str!("../../../book/src/case-studies.md")]
    mod case_studies {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
