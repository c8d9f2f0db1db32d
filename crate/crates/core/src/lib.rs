//! Lower bounds for AC optimal power flow from lifted linear relaxations.

pub mod cli;
pub mod cuts;
pub mod engine;
pub mod glover;
pub mod lp;
pub mod model;
pub mod netcase;
pub mod physics;
