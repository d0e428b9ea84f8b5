//! HTTP service and command-line front end for the maad design engine.

pub mod api;
pub mod cli;
pub mod setup;
