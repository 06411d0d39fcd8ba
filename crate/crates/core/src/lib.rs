pub mod cells;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod numkit;
pub mod rouge;
pub mod seq2seq;
pub mod toy;

pub use error::{Error, Result};
