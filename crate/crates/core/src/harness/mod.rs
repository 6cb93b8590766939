//! Configuration, presets and subcommands behind the `moller` binary.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;
pub mod random;
pub mod verify;
