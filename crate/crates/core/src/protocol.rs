//! The dining-cryptographers round state machines.
//!
//! Three pieces: the classic round, where every participant XORs its input
//! with all of its pairwise pads and everyone recovers the group XOR; the
//! share-distributing round, where the input is first Shamir-split and each
//! peer receives exactly one share hidden under the sender's round pad; and
//! the ring combine step, where each participant forwards its collected
//! share to its next k-1 ring neighbours so everyone can reconstruct from
//! k shares.
//!
//! Pads are derived per (pair, round) from a keyed stream: both endpoints of
//! a pair derive identical bytes, distinct rounds yield independent streams.
//! A sender uses one pad per round, the XOR of its pads with all peers, and
//! applies that same pad to every share it distributes.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::config::GroupConfig;
use crate::gf256::FieldElement;
use crate::metrics;
use crate::secret_sharing::{self, Share, ShareError, SharingPolicy};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("no pair secret configured for peer {peer}")]
    UnknownPeer { peer: u8 },
    #[error("a participant shares no pad with itself")]
    SelfPad,
    #[error("message length {got} does not match slot length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("missing message from participant {peer}")]
    MissingMessage { peer: u8 },
    #[error("more than one message from participant {peer}")]
    DuplicateMessage { peer: u8 },
    #[error("message from unknown participant {peer}")]
    UnexpectedPeer { peer: u8 },
    #[error("cannot frame an empty payload")]
    EmptyPayload,
    #[error("payload of {len} bytes exceeds the 32-bit framing prefix")]
    PayloadTooLarge { len: usize },
    #[error("framed data truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("wire message too short: {got} bytes")]
    ShortWire { got: usize },
    #[error(transparent)]
    Share(#[from] ShareError),
}

/// XOR `src` into `dst`, metering the bytes moved.
pub(crate) fn xor_into(dst: &mut [u8], src: &[u8]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
    metrics::count_xor_bytes(dst.len() as u64);
}

/// Pairwise pad derivation for one participant: holds the pair secret shared
/// with every peer and expands it into per-round pad streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadSource {
    own: u8,
    seeds: BTreeMap<u8, [u8; 32]>,
}

impl PadSource {
    pub fn new(own: u8, seeds: BTreeMap<u8, [u8; 32]>) -> Self {
        PadSource { own, seeds }
    }

    pub fn own_index(&self) -> u8 {
        self.own
    }

    /// The pad shared with `peer` for `round`. Symmetric by construction:
    /// both endpoints hold the same pair secret, and the round selects a
    /// stream of the keyed generator.
    pub fn derive_pad(&self, peer: u8, round: u32, len: usize) -> Result<Vec<u8>, ProtocolError> {
        if peer == self.own {
            return Err(ProtocolError::SelfPad);
        }
        let seed = self
            .seeds
            .get(&peer)
            .ok_or(ProtocolError::UnknownPeer { peer })?;
        let mut rng = ChaCha20Rng::from_seed(*seed);
        rng.set_stream(round as u64);
        let mut pad = vec![0u8; len];
        rng.fill_bytes(&mut pad);
        metrics::count_prg_bytes(len as u64);
        Ok(pad)
    }

    /// XOR of the pads shared with every peer: the single per-round pad a
    /// sender applies to everything it emits in that round.
    pub fn round_pad(&self, round: u32, len: usize) -> Result<Vec<u8>, ProtocolError> {
        let mut acc = vec![0u8; len];
        for &peer in self.seeds.keys() {
            let pad = self.derive_pad(peer, round, len)?;
            xor_into(&mut acc, &pad);
        }
        Ok(acc)
    }
}

/// One logical participant: index, group parameters, pad source, and the
/// pending input (all-zero when it has nothing to send).
#[derive(Debug, Clone)]
pub struct ParticipantState {
    index: u8,
    config: GroupConfig,
    pad_source: PadSource,
    message: Option<Vec<u8>>,
}

/// Everything a share-distributing emit produces: the n per-recipient
/// messages (recipient i at position i-1) and the sampled polynomial
/// coefficients, retained for transcripts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedEmit {
    pub messages: Vec<Vec<u8>>,
    pub coeffs: Vec<Vec<FieldElement>>,
}

impl ParticipantState {
    pub fn new(
        config: &GroupConfig,
        index: u8,
        message: Option<Vec<u8>>,
    ) -> Result<Self, ProtocolError> {
        let pad_source = config
            .pad_source(index)
            .map_err(|_| ProtocolError::UnknownPeer { peer: index })?;
        if let Some(m) = &message {
            if m.len() != config.ell() {
                return Err(ProtocolError::LengthMismatch {
                    expected: config.ell(),
                    got: m.len(),
                });
            }
        }
        Ok(ParticipantState {
            index,
            config: config.clone(),
            pad_source,
            message,
        })
    }

    pub fn index(&self) -> u8 {
        self.index
    }

    pub fn pad_source(&self) -> &PadSource {
        &self.pad_source
    }

    /// The round input: the pending message, or all zeros when silent.
    pub fn input(&self) -> Vec<u8> {
        self.message
            .clone()
            .unwrap_or_else(|| vec![0u8; self.config.ell()])
    }

    /// Classic round: broadcast the input XORed with all pairwise pads.
    pub fn classic_emit(&self, round: u32) -> Result<Vec<u8>, ProtocolError> {
        let mut out = self.input();
        let pad = self.pad_source.round_pad(round, self.config.ell())?;
        xor_into(&mut out, &pad);
        Ok(out)
    }

    /// Share-distributing round: split the input into n shares and hide
    /// every share under the same per-round pad. Message i goes to
    /// participant i; the self-addressed one never touches the wire.
    pub fn shared_emit(&self, round: u32, rng: &mut impl Rng) -> Result<SharedEmit, ProtocolError> {
        let coeffs = secret_sharing::sample_coeffs(&self.input(), &self.config.policy(), rng)?;
        self.shared_emit_from_coeffs(round, &coeffs)
    }

    /// As [`shared_emit`](Self::shared_emit) but with the polynomials fixed
    /// by the caller; this is the replay path.
    pub fn shared_emit_from_coeffs(
        &self,
        round: u32,
        coeffs: &[Vec<FieldElement>],
    ) -> Result<SharedEmit, ProtocolError> {
        if coeffs.len() != self.config.ell() {
            return Err(ProtocolError::LengthMismatch {
                expected: self.config.ell(),
                got: coeffs.len(),
            });
        }
        let pad = self.pad_source.round_pad(round, self.config.ell())?;
        let shares = secret_sharing::shares_from_coeffs(coeffs, self.config.n());
        Ok(SharedEmit {
            messages: shares_under_pad(&shares, &pad),
            coeffs: coeffs.to_vec(),
        })
    }

    /// XOR of all n messages addressed to this participant (its own
    /// self-addressed one included): its share of the summed polynomials.
    pub fn shared_collect(&self, messages: &[(u8, Vec<u8>)]) -> Result<Share, ProtocolError> {
        let data = collect_slot(self.config.n(), self.config.ell(), messages)?;
        Ok(Share::new(self.index, data).expect("participant indices are non-zero"))
    }
}

/// Apply one pad to every share's data, yielding the per-recipient messages.
pub fn shares_under_pad(shares: &[Share], pad: &[u8]) -> Vec<Vec<u8>> {
    shares
        .iter()
        .map(|s| {
            let mut m = s.data().to_vec();
            xor_into(&mut m, pad);
            m
        })
        .collect()
}

/// XOR exactly one message per group member into the slot value.
pub(crate) fn collect_slot(
    n: u8,
    ell: usize,
    messages: &[(u8, Vec<u8>)],
) -> Result<Vec<u8>, ProtocolError> {
    let mut seen = vec![false; n as usize + 1];
    let mut acc = vec![0u8; ell];
    for (from, payload) in messages {
        if *from == 0 || *from > n {
            return Err(ProtocolError::UnexpectedPeer { peer: *from });
        }
        if seen[*from as usize] {
            return Err(ProtocolError::DuplicateMessage { peer: *from });
        }
        seen[*from as usize] = true;
        if payload.len() != ell {
            return Err(ProtocolError::LengthMismatch {
                expected: ell,
                got: payload.len(),
            });
        }
        xor_into(&mut acc, payload);
    }
    if let Some(peer) = (1..=n).find(|&p| !seen[p as usize]) {
        return Err(ProtocolError::MissingMessage { peer });
    }
    Ok(acc)
}

/// The next k-1 participants on the ring 1..n; never contains `index`.
pub fn combine_targets(index: u8, n: u8, k: u8) -> Vec<u8> {
    (1..k)
        .map(|a| ((index as u16 - 1 + a as u16) % n as u16) as u8 + 1)
        .collect()
}

/// The k-1 ring predecessors whose shares arrive during the combine step.
pub fn combine_sources(index: u8, n: u8, k: u8) -> Vec<u8> {
    (1..k)
        .map(|a| {
            let pos = (index as i32 - 1 - a as i32).rem_euclid(n as i32);
            pos as u8 + 1
        })
        .collect()
}

/// Join the own share with the k-1 received ones. Fewer than k total shares
/// cannot decode anything.
pub fn reconstruct(
    own: &Share,
    received: &[Share],
    policy: &SharingPolicy,
) -> Result<Vec<u8>, ProtocolError> {
    let mut shares = Vec::with_capacity(received.len() + 1);
    shares.push(own.clone());
    shares.extend_from_slice(received);
    Ok(secret_sharing::join(&shares, policy)?)
}

/// Frame a payload for slot-sized rounds: 4-octet big-endian length prefix,
/// then the payload, zero-padded up to a multiple of `ell`.
pub fn frame(payload: &[u8], ell: usize) -> Result<Vec<Vec<u8>>, ProtocolError> {
    if payload.is_empty() {
        return Err(ProtocolError::EmptyPayload);
    }
    if u32::try_from(payload.len()).is_err() {
        return Err(ProtocolError::PayloadTooLarge {
            len: payload.len(),
        });
    }
    let mut buf = Vec::with_capacity(4 + payload.len());
    buf.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    buf.extend_from_slice(payload);
    let chunks = buf.len().div_ceil(ell);
    buf.resize(chunks * ell, 0);
    Ok(buf.chunks(ell).map(<[u8]>::to_vec).collect())
}

/// Invert [`frame`]; any truncation is an error.
pub fn unframe(chunks: &[Vec<u8>]) -> Result<Vec<u8>, ProtocolError> {
    let total: usize = chunks.iter().map(Vec::len).sum();
    if total < 4 {
        return Err(ProtocolError::Truncated {
            needed: 4,
            have: total,
        });
    }
    let buf: Vec<u8> = chunks.iter().flatten().copied().collect();
    let len = u32::from_be_bytes([buf[0], buf[1], buf[2], buf[3]]) as usize;
    if buf.len() < 4 + len {
        return Err(ProtocolError::Truncated {
            needed: 4 + len,
            have: buf.len(),
        });
    }
    Ok(buf[4..4 + len].to_vec())
}

/// Distribution message wire form: round counter (4 octets, big-endian),
/// sender, recipient, payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionWire {
    pub round: u32,
    pub from: u8,
    pub to: u8,
    pub payload: Vec<u8>,
}

impl DistributionWire {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + self.payload.len());
        out.extend_from_slice(&self.round.to_be_bytes());
        out.push(self.from);
        out.push(self.to);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        if bytes.len() < 6 {
            return Err(ProtocolError::ShortWire { got: bytes.len() });
        }
        Ok(DistributionWire {
            round: u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
            from: bytes[4],
            to: bytes[5],
            payload: bytes[6..].to_vec(),
        })
    }
}

/// Combine message wire form: round counter, sender, then the share wire
/// form (index octet plus data).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombineWire {
    pub round: u32,
    pub from: u8,
    pub share: Share,
}

impl CombineWire {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + 1 + self.share.len());
        out.extend_from_slice(&self.round.to_be_bytes());
        out.push(self.from);
        out.extend_from_slice(&self.share.to_wire());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        if bytes.len() < 7 {
            return Err(ProtocolError::ShortWire { got: bytes.len() });
        }
        Ok(CombineWire {
            round: u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
            from: bytes[4],
            share: Share::from_wire(&bytes[5..])?,
        })
    }
}
