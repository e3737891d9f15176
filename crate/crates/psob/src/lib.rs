//! Command-line tools and the local annotation service.

pub mod cli;
pub mod service;
pub mod session;
