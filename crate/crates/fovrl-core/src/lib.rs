//! Core building blocks for foveated actor-critic agents.
//!
//! Everything in this crate is pure computation over owned buffers: the
//! region-of-interest foveation layers, a deterministic Breakout-like toy
//! environment, a small reverse-mode autodiff tape, the dual-head
//! policy/value network, and the return/advantage/loss arithmetic. No IO,
//! no threads. The companion `fovrl` crate adds training orchestration,
//! file formats and the command-line interface on top.
//!
//! The crate is `no_std` + `alloc`; float transcendentals come from `libm`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod advantage;
pub mod env;
pub mod fovea;
pub mod net;
pub mod params;
pub mod tape;
pub mod tensor;
