//! Deterministic simulation of one protocol round across the whole group.
//!
//! Participants run in lockstep through per-phase barriers (emit, collect,
//! and for share-distributing rounds combine then reconstruct). The clock is
//! virtual: every participant step is charged per operation from the
//! thread-local counters in [`crate::metrics`], and every delivery adds the
//! configured latency. No wall clock is read anywhere, so a transcript —
//! timing included — is a pure function of the [`GroupConfig`], and two runs
//! with the same master seed are bit-identical.
//!
//! The transcript records the omniscient view of the round: every wire
//! message with send/receive times, every participant's polynomial
//! coefficients and pairwise pads, and every output. The collusion probe
//! carves the attacker-visible slice out of it.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::config::{ConfigError, GroupConfig};
use crate::gf256::FieldElement;
use crate::metrics;
use crate::protocol::{
    self, CombineWire, DistributionWire, ProtocolError,
};
use crate::secret_sharing::{self, Share};

/// Nominal per-operation costs charged to the virtual clock. Fixed rather
/// than measured so that transcripts and throughput figures reproduce
/// bit-for-bit; the relative weights approximate a table-multiply versus
/// bulk XOR versus keyed stream generation on a mid-range core.
pub mod cost {
    /// Dispatch overhead of one participant step within a phase.
    pub const STEP_NS: u64 = 10_000;
    /// Queueing overhead per transmitted message.
    pub const MESSAGE_NS: u64 = 2_000;
    /// One GF(2^8) multiply.
    pub const FIELD_MUL_NS: u64 = 4;
    /// One byte of bulk XOR.
    pub const XOR_BYTE_NS: u64 = 1;
    /// One byte of keyed pad stream.
    pub const PRG_BYTE_NS: u64 = 2;
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("sender index {sender} outside 1..={n}")]
    BadSender { sender: u8, n: u8 },
    #[error("input message of {got} bytes does not fill the {expected}-byte slot")]
    InputLength { expected: usize, got: usize },
    #[error("round tapes malformed: {0}")]
    TapeShape(String),
    #[error("transcript export line {line}: {reason}")]
    ParseExport { line: usize, reason: String },
}

/// Which protocol the round runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Classic,
    Shared,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Classic => f.write_str("classic"),
            Mode::Shared => f.write_str("shared"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Distribution,
    Combine,
}

/// One point-to-point delivery with its virtual send and receive times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub kind: MessageKind,
    pub round: u32,
    pub from: u8,
    pub to: u8,
    pub send_ns: u64,
    pub recv_ns: u64,
    pub payload: Vec<u8>,
}

/// The complete randomness of one round: every participant's input, sharing
/// polynomials (empty in classic mode), and the pad of every unordered pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTapes {
    pub round: u32,
    pub inputs: Vec<Vec<u8>>,
    pub coeffs: Vec<Vec<Vec<FieldElement>>>,
    pub pair_pads: BTreeMap<(u8, u8), Vec<u8>>,
}

/// What one participant walks away with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundOutput {
    Classic { m_out: Vec<u8> },
    Shared { share: Share, reconstructed: Vec<u8> },
}

impl RoundOutput {
    /// The reconstructed group message (classic XOR or joined shares).
    pub fn message(&self) -> &[u8] {
        match self {
            RoundOutput::Classic { m_out } => m_out,
            RoundOutput::Shared { reconstructed, .. } => reconstructed,
        }
    }

    pub fn share(&self) -> Option<&Share> {
        match self {
            RoundOutput::Classic { .. } => None,
            RoundOutput::Shared { share, .. } => Some(share),
        }
    }
}

/// Omniscient record of one round; replayable and bit-reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTranscript {
    pub config: GroupConfig,
    pub mode: Mode,
    pub round: u32,
    pub sender: Option<u8>,
    pub input: Vec<u8>,
    pub tapes: RoundTapes,
    pub messages: Vec<WireMessage>,
    pub outputs: Vec<RoundOutput>,
    /// Per phase, per participant: the charged compute of that step.
    pub compute_ns: Vec<Vec<u64>>,
    /// Virtual time at which each phase barrier released.
    pub barriers_ns: Vec<u64>,
    pub elapsed_ns: u64,
}

impl RoundTranscript {
    pub fn virtual_elapsed_ms(&self) -> f64 {
        self.elapsed_ns as f64 / 1e6
    }

    pub fn distribution_message_count(&self) -> usize {
        self.messages
            .iter()
            .filter(|m| m.kind == MessageKind::Distribution)
            .count()
    }

    pub fn combine_message_count(&self) -> usize {
        self.messages
            .iter()
            .filter(|m| m.kind == MessageKind::Combine)
            .count()
    }

    /// Line-delimited export, one message per line:
    /// `round,send_ms,recv_ms,from,to,payload_hex`.
    pub fn export_messages(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&format!(
                "{},{:.6},{:.6},{},{},{}\n",
                m.round,
                m.send_ns as f64 / 1e6,
                m.recv_ns as f64 / 1e6,
                m.from,
                m.to,
                hex::encode(&m.payload),
            ));
        }
        out
    }
}

/// One parsed line of [`RoundTranscript::export_messages`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedMessage {
    pub round: u32,
    pub send_ms: f64,
    pub recv_ms: f64,
    pub from: u8,
    pub to: u8,
    pub payload: Vec<u8>,
}

pub fn parse_export(text: &str) -> Result<Vec<ExportedMessage>, SimError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |reason: &str| SimError::ParseExport {
            line: idx + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err("expected 6 comma-separated fields"));
        }
        out.push(ExportedMessage {
            round: fields[0].parse().map_err(|_| err("bad round"))?,
            send_ms: fields[1].parse().map_err(|_| err("bad send_ms"))?,
            recv_ms: fields[2].parse().map_err(|_| err("bad recv_ms"))?,
            from: fields[3].parse().map_err(|_| err("bad from"))?,
            to: fields[4].parse().map_err(|_| err("bad to"))?,
            payload: hex::decode(fields[5]).map_err(|_| err("bad payload hex"))?,
        });
    }
    Ok(out)
}

/// Run one round with round counter 0.
pub fn run_round(
    config: &GroupConfig,
    sender: Option<u8>,
    message: &[u8],
    mode: Mode,
) -> Result<RoundTranscript, SimError> {
    run_round_at(config, sender, message, mode, 0)
}

/// Run one round at an explicit round counter (pads are round-keyed).
pub fn run_round_at(
    config: &GroupConfig,
    sender: Option<u8>,
    message: &[u8],
    mode: Mode,
    round: u32,
) -> Result<RoundTranscript, SimError> {
    let tapes = derive_tapes(config, sender, message, mode, round)?;
    run_round_from_tapes(config, sender, mode, tapes)
}

/// Draw all round randomness from the configured seed hierarchy.
pub fn derive_tapes(
    config: &GroupConfig,
    sender: Option<u8>,
    message: &[u8],
    mode: Mode,
    round: u32,
) -> Result<RoundTapes, SimError> {
    let n = config.n();
    let ell = config.ell();
    if let Some(s) = sender {
        if s == 0 || s > n {
            return Err(SimError::BadSender { sender: s, n });
        }
        if message.len() != ell {
            return Err(SimError::InputLength {
                expected: ell,
                got: message.len(),
            });
        }
    }

    let inputs: Vec<Vec<u8>> = (1..=n)
        .map(|i| {
            if sender == Some(i) {
                message.to_vec()
            } else {
                vec![0u8; ell]
            }
        })
        .collect();

    let mut pair_pads = BTreeMap::new();
    for i in 1..=n {
        let source = config.pad_source(i)?;
        for j in (i + 1)..=n {
            pair_pads.insert((i, j), source.derive_pad(j, round, ell)?);
        }
    }

    let coeffs = match mode {
        Mode::Classic => Vec::new(),
        Mode::Shared => {
            let policy = config.policy();
            let mut all = Vec::with_capacity(n as usize);
            for i in 1..=n {
                let mut rng = config.participant_rng(i, round)?;
                all.push(secret_sharing::sample_coeffs(
                    &inputs[i as usize - 1],
                    &policy,
                    &mut rng,
                )?);
            }
            all
        }
    };

    Ok(RoundTapes {
        round,
        inputs,
        coeffs,
        pair_pads,
    })
}

/// Meter one participant step: run the closure, convert the operation deltas
/// into charged nanoseconds.
fn step<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = metrics::snapshot();
    let out = f();
    let d = metrics::snapshot() - before;
    let ns = cost::STEP_NS
        + d.field_mul * cost::FIELD_MUL_NS
        + d.xor_bytes * cost::XOR_BYTE_NS
        + d.prg_bytes * cost::PRG_BYTE_NS;
    (out, ns)
}

fn check_tapes(config: &GroupConfig, mode: Mode, tapes: &RoundTapes) -> Result<(), SimError> {
    let n = config.n() as usize;
    let ell = config.ell();
    let k = config.k() as usize;
    if tapes.inputs.len() != n || tapes.inputs.iter().any(|m| m.len() != ell) {
        return Err(SimError::TapeShape("inputs".into()));
    }
    for i in 1..=config.n() {
        for j in (i + 1)..=config.n() {
            match tapes.pair_pads.get(&(i, j)) {
                Some(p) if p.len() == ell => {}
                _ => return Err(SimError::TapeShape(format!("pad for pair ({i},{j})"))),
            }
        }
    }
    if mode == Mode::Shared
        && (tapes.coeffs.len() != n
            || tapes
                .coeffs
                .iter()
                .any(|c| c.len() != ell || c.iter().any(|p| p.len() != k)))
    {
        return Err(SimError::TapeShape("coefficients".into()));
    }
    Ok(())
}

/// Execute a round whose randomness is fixed by `tapes`. This is the replay
/// entry point used by the collusion probe; [`run_round`] is the seeded
/// wrapper around it.
pub fn run_round_from_tapes(
    config: &GroupConfig,
    sender: Option<u8>,
    mode: Mode,
    tapes: RoundTapes,
) -> Result<RoundTranscript, SimError> {
    check_tapes(config, mode, &tapes)?;
    let n = config.n();
    let ell = config.ell();
    let round = tapes.round;
    let delay = config.latency().delay_ns();
    let input = sender
        .map(|s| tapes.inputs[s as usize - 1].clone())
        .unwrap_or_else(|| vec![0u8; ell]);

    // pad of participant i: XOR of its pads with every peer
    let pad_of = |i: u8| -> Vec<u8> {
        metrics::count_prg_bytes((n as u64 - 1) * ell as u64);
        let mut acc = vec![0u8; ell];
        for j in 1..=n {
            if j != i {
                let key = (i.min(j), i.max(j));
                protocol::xor_into(&mut acc, &tapes.pair_pads[&key]);
            }
        }
        acc
    };

    let mut messages = Vec::new();
    let mut compute_ns: Vec<Vec<u64>> = Vec::new();
    let mut barriers_ns = Vec::new();

    // emit phase: per participant, the full outgoing batch (indexed by
    // recipient in shared mode; one broadcast payload in classic mode)
    let mut emit_costs = vec![0u64; n as usize];
    let mut outboxes: Vec<Vec<Vec<u8>>> = Vec::with_capacity(n as usize);
    for i in 1..=n {
        let (outbox, ns) = step(|| match mode {
            Mode::Classic => {
                let mut m = tapes.inputs[i as usize - 1].clone();
                protocol::xor_into(&mut m, &pad_of(i));
                vec![m; n as usize]
            }
            Mode::Shared => {
                let shares =
                    secret_sharing::shares_from_coeffs(&tapes.coeffs[i as usize - 1], n);
                protocol::shares_under_pad(&shares, &pad_of(i))
            }
        });
        emit_costs[i as usize - 1] = ns + (n as u64 - 1) * cost::MESSAGE_NS;
        outboxes.push(outbox);
    }
    let emit_finish: Vec<u64> = emit_costs.clone();
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                let send_ns = emit_finish[i as usize - 1];
                messages.push(WireMessage {
                    kind: MessageKind::Distribution,
                    round,
                    from: i,
                    to: j,
                    send_ns,
                    recv_ns: send_ns + delay,
                    payload: outboxes[i as usize - 1][j as usize - 1].clone(),
                });
            }
        }
    }
    compute_ns.push(emit_costs);
    let barrier = messages
        .iter()
        .map(|m| m.recv_ns)
        .chain(emit_finish.iter().copied())
        .max()
        .unwrap_or(0);
    barriers_ns.push(barrier);

    // collect phase: XOR the full inbox (own message included)
    let mut collect_costs = vec![0u64; n as usize];
    let mut slots: Vec<Vec<u8>> = Vec::with_capacity(n as usize);
    for i in 1..=n {
        let inbox: Vec<(u8, Vec<u8>)> = (1..=n)
            .map(|h| (h, outboxes[h as usize - 1][i as usize - 1].clone()))
            .collect();
        let (slot, ns) = step(|| protocol::collect_slot(n, ell, &inbox));
        collect_costs[i as usize - 1] = ns;
        slots.push(slot?);
    }
    let collect_finish: Vec<u64> = collect_costs
        .iter()
        .map(|c| barrier + c)
        .collect();
    compute_ns.push(collect_costs);

    if mode == Mode::Classic {
        let elapsed = collect_finish.iter().copied().max().unwrap_or(0);
        barriers_ns.push(elapsed);
        let outputs = slots
            .into_iter()
            .map(|m_out| RoundOutput::Classic { m_out })
            .collect();
        return Ok(RoundTranscript {
            config: config.clone(),
            mode,
            round,
            sender,
            input,
            tapes,
            messages,
            outputs,
            compute_ns,
            barriers_ns,
            elapsed_ns: elapsed,
        });
    }

    let collect_barrier = collect_finish.iter().copied().max().unwrap_or(0);
    barriers_ns.push(collect_barrier);
    let shares: Vec<Share> = slots
        .into_iter()
        .enumerate()
        .map(|(idx, data)| Share::new(idx as u8 + 1, data).expect("indices are 1-based"))
        .collect();

    // combine phase: forward the collected share to the next k-1 ring
    // neighbours
    let k = config.k();
    let mut combine_costs = vec![0u64; n as usize];
    let mut combine_sends = vec![0u64; n as usize];
    for i in 1..=n {
        let targets = protocol::combine_targets(i, n, k);
        // payload is the share wire form; round and addressing live in the
        // message envelope
        let (wires, ns) = step(|| {
            targets
                .iter()
                .map(|&t| (t, shares[i as usize - 1].to_wire()))
                .collect::<Vec<_>>()
        });
        let ns = ns + targets.len() as u64 * cost::MESSAGE_NS;
        combine_costs[i as usize - 1] = ns;
        let send_ns = collect_barrier + ns;
        combine_sends[i as usize - 1] = send_ns;
        for (t, payload) in wires {
            messages.push(WireMessage {
                kind: MessageKind::Combine,
                round,
                from: i,
                to: t,
                send_ns,
                recv_ns: send_ns + delay,
                payload,
            });
        }
    }
    compute_ns.push(combine_costs);
    let combine_barrier = messages
        .iter()
        .filter(|m| m.kind == MessageKind::Combine)
        .map(|m| m.recv_ns)
        .chain(combine_sends.iter().copied())
        .max()
        .unwrap_or(collect_barrier);
    barriers_ns.push(combine_barrier);

    // reconstruct phase: join the own share with the k-1 received ones
    let policy = config.policy();
    let mut recon_costs = vec![0u64; n as usize];
    let mut outputs = Vec::with_capacity(n as usize);
    for i in 1..=n {
        let received: Vec<Share> = protocol::combine_sources(i, n, k)
            .into_iter()
            .map(|s| shares[s as usize - 1].clone())
            .collect();
        let own = shares[i as usize - 1].clone();
        let (reconstructed, ns) = step(|| protocol::reconstruct(&own, &received, &policy));
        recon_costs[i as usize - 1] = ns;
        outputs.push(RoundOutput::Shared {
            share: own,
            reconstructed: reconstructed?,
        });
    }
    let elapsed = recon_costs
        .iter()
        .map(|c| combine_barrier + c)
        .max()
        .unwrap_or(combine_barrier);
    compute_ns.push(recon_costs);
    barriers_ns.push(elapsed);

    Ok(RoundTranscript {
        config: config.clone(),
        mode,
        round,
        sender,
        input,
        tapes,
        messages,
        outputs,
        compute_ns,
        barriers_ns,
        elapsed_ns: elapsed,
    })
}
