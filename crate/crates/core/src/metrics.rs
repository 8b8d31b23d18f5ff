//! Thread-local operation counters.
//!
//! The simulator charges virtual time per operation rather than reading the
//! wall clock, so that transcripts and throughput figures are reproducible
//! bit-for-bit. The counters also back the complexity checks in the
//! secret-sharing tests.

use std::cell::Cell;
use std::ops::Sub;

/// Counts of the bulk operations the protocol performs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// GF(2^8) multiplications (inversions count as one multiply).
    pub field_mul: u64,
    /// Bytes pushed through bulk XOR.
    pub xor_bytes: u64,
    /// Bytes drawn from keyed pad streams.
    pub prg_bytes: u64,
}

impl Sub for OpCounts {
    type Output = OpCounts;

    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            field_mul: self.field_mul - rhs.field_mul,
            xor_bytes: self.xor_bytes - rhs.xor_bytes,
            prg_bytes: self.prg_bytes - rhs.prg_bytes,
        }
    }
}

thread_local! {
    static COUNTS: Cell<OpCounts> = const { Cell::new(OpCounts { field_mul: 0, xor_bytes: 0, prg_bytes: 0 }) };
}

/// Current cumulative counts for this thread. Diff two snapshots to meter a
/// region of work.
pub fn snapshot() -> OpCounts {
    COUNTS.with(|c| c.get())
}

pub(crate) fn count_field_mul(n: u64) {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.field_mul += n;
        c.set(v);
    });
}

pub(crate) fn count_xor_bytes(n: u64) {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.xor_bytes += n;
        c.set(v);
    });
}

pub(crate) fn count_prg_bytes(n: u64) {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.prg_bytes += n;
        c.set(v);
    });
}
