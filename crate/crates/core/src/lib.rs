//! Hybrid Benders decomposition for binary MILPs with QUBO master problems.

pub mod lp;
pub mod model;
pub mod subproblem;
pub mod cuts;
pub mod qubo;
pub mod samplers;
pub mod emulator;
pub mod benders;
pub mod bench;
