//! Driver for the Albert toolchain: command-line front end, random program
//! generation and differential testing of the compiler.

pub mod cli;
pub mod diff;
pub mod gen;
