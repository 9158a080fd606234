//! Optimal lump-sum dividend policies for a one-dimensional diffusion with
//! fixed and proportional transaction costs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod curves;
pub mod error;
pub mod fixtures;
pub mod landmarks;
pub mod model;
pub mod par;
pub mod ode;
pub mod roots;
pub mod simulate;
pub mod solver;
pub mod stratify;
pub mod verify;

pub use error::{Assumption, Error, Result};
