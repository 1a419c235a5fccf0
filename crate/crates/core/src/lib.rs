pub mod data;
pub mod effective;
pub mod error;
pub mod lindblad;
pub mod network;
pub mod operators;
pub mod par;
pub mod training;

pub use error::{Error, Result};
