pub mod basicons;
pub mod cli;
pub mod ergodic;
pub mod error;
pub mod freegrp;
pub mod numkernel;
pub mod relprod;
pub mod repgns;
pub mod report;
pub mod vnalg;

pub use error::{Error, Result};
