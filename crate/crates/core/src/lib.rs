#![no_std]

//! Nested lattice codes for the Gaussian two-way relay channel.
//!
//! The crate covers the whole uplink/downlink pipeline of a lattice-based
//! physical-layer network coding scheme:
//!
//! - [`lattice`]: nearest-point quantization, mod-lattice reduction, volumes
//!   and second moments of full-rank lattices.
//! - [`chain`]: nested chains `Λ1 ⊆ Λ2 ⊆ ΛC` with their coset-leader sets.
//! - [`codec`]: dithered encoding, relay computation of the effective
//!   codeword, downlink codebook and side-information decoding.
//! - [`channel`]: the Gaussian uplink/downlink model with seed-path noise.
//! - [`rates`]: cut-set and achievable regions, MMSE quantities and the
//!   Poltyrev exponent.
//! - [`sim`]: seeded Monte Carlo trial kernels and binomial intervals.
//!
//! Everything is `no_std` + `alloc`; IO, file formats and parallel campaign
//! orchestration live in the companion `trc` crate.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chain;
pub mod channel;
pub mod codec;
mod error;
mod hnf;
pub mod lattice;
pub mod rates;
pub mod rng;
pub mod sim;
pub(crate) mod vecops;

pub use crate::chain::{ChainDescription, CosetLevel, LatticeChain};
pub use crate::channel::ChannelParams;
pub use crate::error::{Error, Result};
pub use crate::lattice::{Lattice, LatticeFamily, NamedBase, SecondMomentEstimate};
