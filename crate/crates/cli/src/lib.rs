//! Scenario-driven experiment runner on top of `ccss-core`.

pub mod commands;
pub mod output;
pub mod scenario;
pub mod validate;
