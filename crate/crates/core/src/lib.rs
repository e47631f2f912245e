//! Simulation and verification laboratory for the non-interacting
//! Dean-Kawasaki equation `d rho = (alpha/2) Laplacian rho dt + div(sqrt(rho) eta)`
//! on tempered measures.
//!
//! Solutions are empirical measures `(1/alpha) sum_i delta_{B^i_{alpha t}}` of
//! independent Brownian motions. The crate simulates them exactly, evaluates
//! the heat semigroup and the Cole-Hopf solution of the associated
//! Hamilton-Jacobi equation deterministically, and checks the identities that
//! tie the two together.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod heat;
pub mod hjb;
pub mod measure;
pub mod output;
pub mod par;
pub mod quadrature;
pub mod rng;
pub mod runner;
pub mod selftest;
pub mod stats;
pub mod testfn;
pub mod verify;

pub use error::{Error, Result};
