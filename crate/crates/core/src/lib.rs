pub mod arith;
pub mod error;
pub mod etf_search;
pub mod fingerprint;
mod fastwh;
pub mod heisenberg;
pub mod hpnum;
pub mod quadfield;
pub mod stark_construct;
pub mod symplectic;
pub mod verifier;

pub use error::{Error, Result};
