//! Command-line front end and verification harness for addition machines.

pub mod acceptance;
pub mod spec_files;
