//! Compact networks built from stacked layers of small independent units,
//! with an exact parameter/FLOP cost model, from-scratch training, and
//! efficiency scoring against dense counterparts.

pub mod arch;
pub mod checkpoint;
pub mod cost;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod init;
pub mod nn;
pub mod optim;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
