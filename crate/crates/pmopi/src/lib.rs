//! PMI-based MIMO-OFDM physical-layer key exchange.
//!
//! Two radios that share a reciprocal wireless channel can derive a common
//! secret without ever transmitting it: each side sounds the channel, picks
//! the precoding matrix index (PMI) that maximizes MIMO capacity on its own
//! estimate, and — because both estimates describe the same channel — ends up
//! with the same index. Repeating the selection on frequency subbands with
//! uncorrelated fading turns one OFDM band into a multi-bit key source.
//!
//! The crate is organized around that pipeline:
//!
//! - [`mimo`] — small dense complex matrices, the capacity objective, the
//!   16-entry Householder precoding codebook, PMI selection (plain and
//!   unitary-rotated), and Haar-random unitary generation.
//! - [`channel`] — a seeded tapped-delay-line 2x4 MIMO-OFDM channel with
//!   sum-of-sinusoids Doppler fading, Gaussian estimation noise, and
//!   frequency-correlation / coherence-bandwidth measurement.
//! - [`protocol`] — Alice/Bob/Eve exchange state machines: sounding, subband
//!   planning, key assembly, SHA-256 key-mismatch detection with rekeying,
//!   the rotated-sounding mode for slow-varying channels, and Eve's
//!   best-effort estimator.
//! - [`cipher`] — the hash-counter keystream cipher used for key checks and
//!   payload encryption.
//! - [`experiments`] — seeded Monte-Carlo drivers: PMI reciprocity probes and
//!   delay-spread calibration, shared by the CLI and the test suites.
//!
//! Everything is deterministic given the configured seeds; no call reads
//! entropy from the environment.

pub mod bits;
pub mod channel;
pub mod cipher;
mod error;
pub mod experiments;
pub mod mimo;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
