//! Allocation-only core of PromptGuard: a few-shot Bengali hate speech
//! classifier built from chi-square keyword selection, templated prompts,
//! and adaptive majority voting over a pluggable language-model backend.
//!
//! Nothing here touches the filesystem, network, or clock. Backends are
//! supplied by the caller through [`backend::Backend`]; the `promptguard`
//! crate provides the HTTP and mock implementations, file formats, and CLI.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod ablation;
pub mod backend;
pub mod baselines;
mod category;
pub mod corpus;
mod default_keywords;
pub mod eval;
pub mod keywords;
pub mod prompt;
pub mod seed;
pub mod voting;

pub use category::{Category, UnknownLabel};
