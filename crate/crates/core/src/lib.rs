#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod closure;
mod error;
pub mod evmodel;
pub mod fd;
pub mod fom;
pub mod galerkin;
pub mod grid;
pub mod linalg;
pub mod pod;
pub mod report;
pub mod romsolve;
pub mod snapshots;

pub use error::{Error, Result};
