//! File formats, parallel runners and the `dscrowd` command line on top of
//! [`dscrowd_core`].

pub mod cli;
pub mod io;
pub mod parallel;

pub use dscrowd_core as core;
