pub mod cli;
pub mod error;
pub mod field;
pub mod imgcore;
pub mod mesh;
pub mod nodematch;
pub mod registration;
pub mod segment;
pub mod stitch;
pub mod synth;

pub use error::{Error, Result};
