//! Library surface of the command-line tool, kept separate from the
//! binary so the test suites drive the exact command code paths
//! in-process.

pub mod bench;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;
pub mod stiffness;
