//! Counting Pell solutions with small fundamental unit, and the exponential-sum
//! machinery behind lower bounds for that count.

pub mod amplify;
pub mod arith;
pub mod error;
pub mod expsum;
pub mod factor;
pub mod fouvry;
pub mod output;
pub mod pell;

#[cfg(test)]
mod proptests;

pub use error::{Budget, Error, Result};
