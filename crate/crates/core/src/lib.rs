pub mod dgla;
pub mod error;
pub mod foliation;
pub mod forms;
pub mod levi;
pub mod linalg;
pub mod mc;
pub mod sample;
pub mod scalar;
pub mod vvform;

pub use error::{Error, Result};
