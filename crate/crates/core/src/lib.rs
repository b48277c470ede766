//! Generalized iteratively regularized Landweber iterations for linear
//! ill-posed problems, with a discrete parallel-beam Radon transform as the
//! prototype forward operator.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, the experiment
//! runner and the command line live in the `girli` crate.
//!
//! Modules:
//!
//! + [`operators`]: the [`LinearOperator`] abstraction, the Radon transform
//!   with its exact adjoint, dense matrices and operator-norm estimation.
//! + [`schemes`]: the iteration schemes (Landweber, IRLI, IRLI-revised,
//!   GIRLI, GIRLI-adapt, GIRLI-GM, DDIRLI), damping sequences and the
//!   discrepancy-principle driver.
//! + [`theory`]: the convergence-analysis constants and assumption checks.
//! + [`priors`]: prior sets, their arithmetic and geometric means, pruning,
//!   and the handcrafted operator `A = Y U⁺`.
//! + [`data`]: IDX parsing, digit-like phantoms, noise and error metrics.
#![cfg_attr(not(test), no_std)]
// Negated comparisons are the NaN-rejecting form of range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod grid;
pub mod linalg;

pub mod data;
pub mod operators;
pub mod priors;
pub mod schemes;
pub mod theory;

pub use error::{Error, Result};
pub use grid::{GridImage, Sinogram};
pub use operators::LinearOperator;
