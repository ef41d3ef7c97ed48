pub mod nn;
pub mod rl;
pub mod thermal;
pub mod bridge;
pub mod harness;
