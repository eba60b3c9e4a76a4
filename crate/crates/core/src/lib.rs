//! Multi-channel secure transmission over a simulated 2.4 GHz band.
//!
//! A message is hex-encoded, ROT13-scrambled, length-framed and split into
//! `n` share streams with a `k`-of-`n` threshold over GF(257). Each stream
//! rides its own channel, picked by an LFSR that sender and receiver seed
//! identically. An eavesdropper needs `k` whole streams to learn anything.
//!
//! Modules, bottom-up:
//!
//! - [`gfshare`]: field arithmetic and byte-wise threshold sharing
//! - [`codec`]: hex digest and ROT13
//! - [`hopping`]: the LFSR, channel draws and the frequency table
//! - [`packet`]: bit-exact data and SYNC frames
//! - [`medium`]: slotted broadcast channel and eavesdroppers
//! - [`node`]: sender/receiver pipelines and the clock-sync round
//! - [`analysis`]: capture probabilities, exact and Monte Carlo
//! - [`sim`]: end-to-end session driver
//! - [`cli`]: scenario configuration and report rendering
//!
//! See `examples/` for one runnable program per capability.

pub mod analysis;
pub mod cli;
pub mod codec;
pub mod gfshare;
pub mod hopping;
pub mod medium;
pub mod node;
pub mod packet;
pub mod sim;
pub mod trace;
