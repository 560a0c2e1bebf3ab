//! Few-photon interferometry with a lossy phase shift.
//!
//! The crate models two-photon probe states travelling through a
//! Mach-Zehnder style network whose sensing arm carries both the unknown
//! phase and a loss, and provides everything needed to go from precision
//! bounds to simulated coincidence data and back to phase estimates:
//!
//! - [`fock`]: sparse Fock-space states, linear-optical mode transforms and
//!   the beam-splitter loss channel with photon-number conditioned branches.
//! - [`bounds`]: quantum Fisher information, optimal probe weights under loss
//!   and the optimal / N00N / standard-interferometric-limit precision curves.
//! - [`prep`]: the two-beam-splitter preparation network and its inversion.
//! - [`detection`]: coincidence-label probabilities for the two detection
//!   settings, classical Fisher information and detector tuning.
//! - [`imperfections`]: fibre admixture, distinguishability, visibility and
//!   multimode coupler thinning.
//! - [`montecarlo`]: seedable, record-addressable coincidence datasets.
//! - [`estimator`]: maximum-likelihood estimation and uncertainty reports.
//!
//! The crate is `no_std` and only needs `alloc`. Float math goes through
//! `num_traits::Float`; those imports carry `allow(unused_imports)` because
//! std's inherent methods take precedence whenever std is linked.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod detection;
pub mod estimator;
pub mod fock;
pub mod imperfections;
pub mod montecarlo;
pub mod prep;
pub mod search;

mod error;

pub use error::{Error, Result};
