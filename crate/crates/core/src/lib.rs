//! Benchmark suite for learned dexterous manipulation on simulated claw hardware.
//!
//! The crate is organised bottom-up:
//!
//! * [`numkit`]: dense linear algebra, a small tanh MLP with reverse-mode
//!   gradients, conjugate gradient, and spectral utilities.
//! * [`envsuite`]: the three claw tasks (valve, box flip, door) with
//!   swappable actuation schemes and physics randomization.
//! * [`policy`]: diagonal Gaussian policies, Fisher-vector products, the
//!   fitted value baseline, and advantage estimation.
//! * [`pg`]: REINFORCE and demo-augmented gradients, the truncated natural
//!   gradient update, behavior cloning, and the training loop.
//! * [`demos`]: scripted experts, demonstration collection, and the
//!   `DEXDEMO` on-disk format.
//! * [`bench`]: experiment configs, artifact output, and the analysis
//!   routines behind the command-line tool.
//!
//! Everything is deterministic given a seed: every stochastic component
//! draws from its own counter-derived stream (see [`rngs`]), so results do
//! not depend on scheduling or on how work is batched.

pub mod bench;
pub mod demos;
pub mod envsuite;
pub mod error;
pub mod numkit;
pub mod pg;
pub mod policy;
pub mod rngs;
pub mod trajectory;

pub use error::{Error, Result};
