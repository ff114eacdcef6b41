pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod graph;
pub mod lssa;
pub mod market;
pub mod qubo;
pub mod solvers;
pub mod vqe;
