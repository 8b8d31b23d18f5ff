//! Threshold dining-cryptographers groups.
//!
//! A dining-cryptographers round normally broadcasts one message to the whole
//! group. Here the sender first splits its message with an (n,k) Shamir scheme
//! over GF(2^8) and the modified round delivers one share to each member, so
//! the message only becomes readable once at least k members cooperate. The
//! crate bundles:
//!
//! * [`gf256`] — field arithmetic and row reduction over GF(2^8),
//! * [`secret_sharing`] — per-byte Shamir split/join and the XOR
//!   homomorphism the protocol relies on,
//! * [`protocol`] — the classic and share-distributing round state machines,
//!   pad derivation, the ring combine step, and wire formats,
//! * [`sim`] — a deterministic virtual-clock simulation of a full group
//!   round with transcript capture,
//! * [`probe`] — the collusion analysis: attacker-view extraction, the
//!   coalition equation system, rank analysis, and constructive forgery of
//!   alternative senders.

pub mod config;
pub mod gf256;
pub mod metrics;
pub mod probe;
pub mod protocol;
pub mod secret_sharing;
pub mod sim;

pub use config::{GroupConfig, LatencyModel};
pub use gf256::{FieldElement, FieldMatrix};
pub use secret_sharing::{Share, SharingPolicy};
pub use sim::{Mode, RoundTranscript};
