//! Classical heuristic planning over typed STRIPS tasks, with learned
//! object-importance scoring and projective abstraction.

pub mod pddl;
pub mod fixtures;
pub mod planner;
pub mod regress;
pub mod nnet;
pub mod guidance;
pub mod datagen;
pub mod bench;
