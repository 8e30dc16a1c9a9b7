//! Scenario layer: seeded state families shared by tests and examples,
//! config parsing, and the named experiment runners behind the `probgeo`
//! binary.

pub mod config;
pub mod runner;
pub mod states;
