pub mod bounds;
pub mod campaign;
pub mod cdd;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod norms;
pub mod superop;

pub use error::{Error, Result};
