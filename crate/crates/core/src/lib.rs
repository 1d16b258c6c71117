pub mod bounds;
pub mod cli;
pub mod ctmrg;
pub mod error;
pub mod models;
pub mod numerics;
pub mod oracle;
pub mod variants;

pub use error::{Error, Result};
