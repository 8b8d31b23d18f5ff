//! Group configuration: system parameters and the seed hierarchy.
//!
//! Everything random in a run hangs off one master seed: the master seed
//! derives one secret per unordered participant pair (standing in for the
//! pairwise key agreement the deployment environment would provide) and one
//! seed per participant for its sharing polynomials. Adding rounds or runs
//! never perturbs earlier draws because per-round randomness selects a
//! separate stream of the same keyed generator.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::protocol::PadSource;
use crate::secret_sharing::SharingPolicy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("group size {n} and threshold {k} violate 1 <= k <= n <= 255")]
    InvalidGroup { n: usize, k: usize },
    #[error("slot length must be at least 1 byte")]
    ZeroSlotLength,
    #[error("participant index {index} outside 1..={n}")]
    UnknownParticipant { index: u8, n: u8 },
}

/// Fixed point-to-point delivery delay; 0 models an ideal network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LatencyModel {
    delay_ms: u64,
}

impl LatencyModel {
    pub fn new(delay_ms: u64) -> Self {
        LatencyModel { delay_ms }
    }

    pub fn delay_ms(&self) -> u64 {
        self.delay_ms
    }

    pub fn delay_ns(&self) -> u64 {
        self.delay_ms * 1_000_000
    }
}

/// System parameters of one group: size n, threshold k, slot length in
/// bytes, the latency model, and the master seed with its derived pair and
/// participant seeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupConfig {
    n: u8,
    k: u8,
    ell: usize,
    latency: LatencyModel,
    master_seed: u64,
    pair_seeds: BTreeMap<(u8, u8), [u8; 32]>,
    participant_seeds: Vec<[u8; 32]>,
}

impl GroupConfig {
    pub fn new(
        n: usize,
        k: usize,
        ell: usize,
        latency: LatencyModel,
        master_seed: u64,
    ) -> Result<Self, ConfigError> {
        if n < 1 || n > 255 || k < 1 || k > n {
            return Err(ConfigError::InvalidGroup { n, k });
        }
        if ell == 0 {
            return Err(ConfigError::ZeroSlotLength);
        }
        let n = n as u8;
        let k = k as u8;

        let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
        let mut pair_seeds = BTreeMap::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                let mut seed = [0u8; 32];
                rng.fill_bytes(&mut seed);
                pair_seeds.insert((i, j), seed);
            }
        }
        let participant_seeds = (0..n)
            .map(|_| {
                let mut seed = [0u8; 32];
                rng.fill_bytes(&mut seed);
                seed
            })
            .collect();

        Ok(GroupConfig {
            n,
            k,
            ell,
            latency,
            master_seed,
            pair_seeds,
            participant_seeds,
        })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn latency(&self) -> LatencyModel {
        self.latency
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn policy(&self) -> SharingPolicy {
        SharingPolicy::new(self.n as usize, self.k as usize)
            .expect("group invariants imply a valid policy")
    }

    pub fn check_index(&self, index: u8) -> Result<(), ConfigError> {
        if index == 0 || index > self.n {
            return Err(ConfigError::UnknownParticipant {
                index,
                n: self.n,
            });
        }
        Ok(())
    }

    /// Secret shared by the unordered pair {i, j}.
    pub fn pair_seed(&self, i: u8, j: u8) -> Result<[u8; 32], ConfigError> {
        self.check_index(i)?;
        self.check_index(j)?;
        let key = (i.min(j), i.max(j));
        Ok(self.pair_seeds[&key])
    }

    /// The pad source participant `index` would hold: its own index plus the
    /// pair secrets it shares with every peer.
    pub fn pad_source(&self, index: u8) -> Result<PadSource, ConfigError> {
        self.check_index(index)?;
        let mut seeds = BTreeMap::new();
        for peer in 1..=self.n {
            if peer != index {
                seeds.insert(peer, self.pair_seed(index, peer)?);
            }
        }
        Ok(PadSource::new(index, seeds))
    }

    /// Per-participant, per-round generator for sharing polynomials. Rounds
    /// map to generator streams, so draws in round r never shift round r+1.
    pub fn participant_rng(&self, index: u8, round: u32) -> Result<ChaCha20Rng, ConfigError> {
        self.check_index(index)?;
        let mut rng = ChaCha20Rng::from_seed(self.participant_seeds[index as usize - 1]);
        rng.set_stream(round as u64);
        Ok(rng)
    }
}
