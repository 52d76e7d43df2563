//! Domain files shipped with the crate.

pub const BLOCKS_DOMAIN: &str = include_str!("../fixtures/blocks.pddl");
pub const HOUSEHOLD_DOMAIN: &str = include_str!("../fixtures/household.pddl");
