//! File formats, inference backends, batch execution, and the command line
//! for the PromptGuard classifier. The algorithms live in `promptguard-core`.

pub mod batch;
pub mod cli;
pub mod config;
pub mod io;
pub mod keyword_file;
pub mod mock;
pub mod remote;
pub mod retry;
