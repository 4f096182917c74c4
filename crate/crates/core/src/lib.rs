//! Numerical laboratory for mixed-type equations whose type changes across two
//! transversal curves meeting at a corner, and for a Nash-Moser iteration on the
//! mixed-type Monge-Ampere equation.

pub mod cli;
pub mod compat;
pub mod composite;
pub mod elliptic;
pub mod error;
pub mod expr;
pub mod fields;
pub mod geometry;
pub mod hyperbolic;
pub mod linalg;
pub mod nashmoser;
pub mod poly;
pub mod verify;

pub use error::{Error, Result};
