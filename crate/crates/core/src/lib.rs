pub mod abstraction;
pub mod agents;
pub mod engine;
pub mod evaluation;
pub mod gametree;
pub mod protocol;
pub mod rlcore;
pub mod solver;
