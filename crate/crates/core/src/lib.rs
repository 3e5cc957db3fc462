//! Input classification and output negotiation for input-affine systems.
//!
//! The crate is organised bottom-up: [`expr`] is a small symbolic engine,
//! [`system`] holds system definitions and prolongations, [`linearization`]
//! computes relative degrees and decoupling matrices, [`classification`]
//! labels inputs, [`negotiation`] builds compatibility graphs, and
//! [`controller`] with [`simulator`] run the switching feedback law.

// `!(x > tol)` is used on purpose so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod builtins;
pub mod classification;
pub mod controller;
pub mod expr;
pub mod linearization;
pub mod negotiation;
pub mod sampling;
pub mod simulator;
pub mod system;
