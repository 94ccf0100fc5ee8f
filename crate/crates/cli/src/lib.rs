//! `nccut` command line tool and HTTP service.

pub mod boundaries;
pub mod cli;
pub mod server;

pub use cli::run;
