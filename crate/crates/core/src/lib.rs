pub mod data;
pub mod nn;
pub mod rng;
pub mod tcn;
pub mod train;
