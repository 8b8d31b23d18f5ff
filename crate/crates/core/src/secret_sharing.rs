//! (n,k) Shamir secret sharing over GF(2^8), applied independently to every
//! byte of a message.
//!
//! Splitting byte `b` of a message samples a polynomial of degree exactly
//! k-1 with constant term `m[b]` and a non-zero leading coefficient; share i
//! carries the evaluations at x = i. Joining interpolates at x = 0. Because
//! field addition is XOR, XOR-ing shares at equal x yields a share of the
//! XOR of the underlying messages — the homomorphism the whole protocol
//! rests on.

use rand::Rng;
use thiserror::Error;

use crate::gf256::{FieldElement, ONE, ZERO};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShareError {
    #[error("group of {n} exceeds the 255 distinct share indices of GF(2^8)")]
    CapacityExceeded { n: usize },
    #[error("threshold {k} and group size {n} violate 1 <= k <= n")]
    InvalidPolicy { n: usize, k: usize },
    #[error("cannot split an empty message")]
    EmptyMessage,
    #[error("share index 0 is reserved for the secret")]
    ZeroShareIndex,
    #[error("need at least {needed} shares, got {got}")]
    Threshold { needed: usize, got: usize },
    #[error("duplicate share index {x}")]
    DuplicateIndex { x: u8 },
    #[error("shares have unequal data lengths ({a} vs {b})")]
    UnequalLengths { a: usize, b: usize },
    #[error("shares carry different indices ({a} vs {b})")]
    MismatchedIndex { a: u8, b: u8 },
    #[error("share wire form needs at least 2 octets, got {got}")]
    TruncatedWire { got: usize },
}

/// System parameters of the threshold scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharingPolicy {
    n: u8,
    k: u8,
}

impl SharingPolicy {
    pub fn new(n: usize, k: usize) -> Result<Self, ShareError> {
        if n > 255 {
            return Err(ShareError::CapacityExceeded { n });
        }
        if k < 1 || k > n {
            return Err(ShareError::InvalidPolicy { n, k });
        }
        Ok(SharingPolicy {
            n: n as u8,
            k: k as u8,
        })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn k(&self) -> u8 {
        self.k
    }
}

/// One point of the sharing polynomials: index x and the evaluation of every
/// byte position's polynomial at that x.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Share {
    x: FieldElement,
    data: Vec<u8>,
}

impl Share {
    pub fn new(x: u8, data: Vec<u8>) -> Result<Self, ShareError> {
        if x == 0 {
            return Err(ShareError::ZeroShareIndex);
        }
        Ok(Share {
            x: FieldElement::new(x),
            data,
        })
    }

    pub fn x(&self) -> FieldElement {
        self.x
    }

    pub fn index(&self) -> u8 {
        self.x.value()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Wire form: one octet x followed by the data bytes.
    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + self.data.len());
        out.push(self.x.value());
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_wire(bytes: &[u8]) -> Result<Self, ShareError> {
        if bytes.len() < 2 {
            return Err(ShareError::TruncatedWire { got: bytes.len() });
        }
        Share::new(bytes[0], bytes[1..].to_vec())
    }
}

/// Evaluate a polynomial given by its coefficients (constant term first).
pub fn poly_eval(coeffs: &[FieldElement], x: FieldElement) -> FieldElement {
    let mut acc = ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Sample the per-byte sharing polynomials for `message`: constant term is
/// the message byte, inner coefficients are uniform, and for k >= 2 the
/// leading coefficient is resampled until non-zero so the degree is exactly
/// k-1. Returns `coeffs[byte][0..k]`.
pub fn sample_coeffs(
    message: &[u8],
    policy: &SharingPolicy,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<FieldElement>>, ShareError> {
    if message.is_empty() {
        return Err(ShareError::EmptyMessage);
    }
    let k = policy.k as usize;
    let coeffs = message
        .iter()
        .map(|&m| {
            let mut poly = Vec::with_capacity(k);
            poly.push(FieldElement::new(m));
            for i in 1..k {
                let v = if i == k - 1 {
                    loop {
                        let v: u8 = rng.gen();
                        if v != 0 {
                            break v;
                        }
                    }
                } else {
                    rng.gen()
                };
                poly.push(FieldElement::new(v));
            }
            poly
        })
        .collect();
    Ok(coeffs)
}

/// Evaluate sampled polynomials at x = 1..n, producing the n shares.
pub fn shares_from_coeffs(coeffs: &[Vec<FieldElement>], n: u8) -> Vec<Share> {
    (1..=n)
        .map(|i| {
            let x = FieldElement::new(i);
            let data = coeffs.iter().map(|poly| poly_eval(poly, x).value()).collect();
            Share {
                x,
                data,
            }
        })
        .collect()
}

/// Split `message` into n shares of which any k reconstruct it.
pub fn split(
    message: &[u8],
    policy: &SharingPolicy,
    rng: &mut impl Rng,
) -> Result<Vec<Share>, ShareError> {
    split_with_coeffs(message, policy, rng).map(|(shares, _)| shares)
}

/// As [`split`], but also hand back the sampled polynomial coefficients so a
/// transcript can retain the full randomness of the round.
pub fn split_with_coeffs(
    message: &[u8],
    policy: &SharingPolicy,
    rng: &mut impl Rng,
) -> Result<(Vec<Share>, Vec<Vec<FieldElement>>), ShareError> {
    let coeffs = sample_coeffs(message, policy, rng)?;
    let shares = shares_from_coeffs(&coeffs, policy.n);
    Ok((shares, coeffs))
}

fn check_distinct_equal(shares: &[Share]) -> Result<(), ShareError> {
    for (i, s) in shares.iter().enumerate() {
        if s.len() != shares[0].len() {
            return Err(ShareError::UnequalLengths {
                a: shares[0].len(),
                b: s.len(),
            });
        }
        if shares[..i].iter().any(|t| t.x == s.x) {
            return Err(ShareError::DuplicateIndex { x: s.index() });
        }
    }
    Ok(())
}

/// Reconstruct the message from at least k shares with pairwise-distinct
/// indices. When more than k are supplied the k with the smallest x are
/// used; interpolation uniqueness makes the choice unobservable.
pub fn join(shares: &[Share], policy: &SharingPolicy) -> Result<Vec<u8>, ShareError> {
    let k = policy.k as usize;
    if shares.len() < k {
        return Err(ShareError::Threshold {
            needed: k,
            got: shares.len(),
        });
    }
    check_distinct_equal(shares)?;

    let mut picked: Vec<&Share> = shares.iter().collect();
    picked.sort_by_key(|s| s.x);
    picked.truncate(k);

    // Lagrange weights at x = 0 depend only on the chosen indices, so they
    // are computed once and reused across all byte positions.
    let weights: Vec<FieldElement> = picked
        .iter()
        .map(|si| {
            let mut w = ONE;
            for sj in &picked {
                if sj.x != si.x {
                    // (0 - x_j) / (x_i - x_j) == x_j / (x_i + x_j) in char 2
                    w = w * sj.x * (si.x + sj.x).inv().expect("indices are distinct");
                }
            }
            w
        })
        .collect();

    let len = picked[0].len();
    let mut out = vec![0u8; len];
    for (b, byte) in out.iter_mut().enumerate() {
        let mut acc = ZERO;
        for (share, &w) in picked.iter().zip(&weights) {
            acc += FieldElement::new(share.data[b]) * w;
        }
        *byte = acc.value();
    }
    Ok(out)
}

/// XOR two shares taken at the same index: the result is a share of the XOR
/// of the two underlying messages.
pub fn combine_pointwise(a: &Share, b: &Share) -> Result<Share, ShareError> {
    if a.x != b.x {
        return Err(ShareError::MismatchedIndex {
            a: a.index(),
            b: b.index(),
        });
    }
    if a.len() != b.len() {
        return Err(ShareError::UnequalLengths {
            a: a.len(),
            b: b.len(),
        });
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x ^ y).collect();
    Ok(Share { x: a.x, data })
}

/// Full polynomial recovery from points (x, y): returns the coefficient
/// vector (constant term first) of the unique polynomial of degree less
/// than `points.len()` through them.
pub fn interpolate_coeffs(
    points: &[(FieldElement, FieldElement)],
) -> Result<Vec<FieldElement>, ShareError> {
    let m = points.len();
    for (i, (xi, _)) in points.iter().enumerate() {
        if points[..i].iter().any(|(xj, _)| xj == xi) {
            return Err(ShareError::DuplicateIndex { x: xi.value() });
        }
    }

    // master(x) = prod_j (x + x_j), degree m
    let mut master = vec![ZERO; m + 1];
    master[0] = ONE;
    let mut deg = 0;
    for (xj, _) in points {
        // multiply by (x + x_j) in place
        for idx in (0..=deg).rev() {
            let c = master[idx];
            master[idx + 1] += c;
            master[idx] = c * *xj;
        }
        deg += 1;
    }

    let mut out = vec![ZERO; m];
    for (xi, yi) in points {
        // basis_i = master / (x + x_i), by synthetic division
        let mut basis = vec![ZERO; m];
        let mut carry = master[m];
        for idx in (0..m).rev() {
            basis[idx] = carry;
            carry = master[idx] + carry * *xi;
        }
        debug_assert_eq!(carry, ZERO, "x_i must be a root of the master polynomial");
        let scale = *yi * poly_eval(&basis, *xi).inv().expect("points are distinct");
        for (o, b) in out.iter_mut().zip(&basis) {
            *o += *b * scale;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn fe(v: u8) -> FieldElement {
        FieldElement::new(v)
    }

    #[test]
    fn policy_bounds() {
        assert!(SharingPolicy::new(255, 1).is_ok());
        assert_eq!(
            SharingPolicy::new(256, 3),
            Err(ShareError::CapacityExceeded { n: 256 })
        );
        assert_eq!(
            SharingPolicy::new(5, 0),
            Err(ShareError::InvalidPolicy { n: 5, k: 0 })
        );
        assert_eq!(
            SharingPolicy::new(5, 6),
            Err(ShareError::InvalidPolicy { n: 5, k: 6 })
        );
    }

    #[test]
    fn k1_shares_are_the_message() {
        let policy = SharingPolicy::new(4, 1).unwrap();
        let m = b"constant polynomial".to_vec();
        let shares = split(&m, &policy, &mut rng(1)).unwrap();
        assert_eq!(shares.len(), 4);
        for s in &shares {
            assert_eq!(s.data(), &m[..]);
        }
    }

    /// Fixed polynomial f(x) = 0x2a + 0x05*x, evaluated by hand with the
    /// field oracle: f(1) = 0x2f, f(2) = 0x2a ^ mul(0x05,0x02) = 0x20.
    #[test]
    fn known_polynomial_evaluations() {
        let coeffs = vec![vec![fe(0x2a), fe(0x05)]];
        let shares = shares_from_coeffs(&coeffs, 2);
        assert_eq!(shares[0].data(), &[0x2f]);
        assert_eq!(shares[1].data(), &[0x20]);

        let policy = SharingPolicy::new(2, 2).unwrap();
        let joined = join(&shares, &policy).unwrap();
        assert_eq!(joined, vec![0x2a]);
    }

    #[test]
    fn join_of_known_points() {
        let policy = SharingPolicy::new(2, 2).unwrap();
        let shares = vec![
            Share::new(1, vec![0x2f]).unwrap(),
            Share::new(2, vec![0x20]).unwrap(),
        ];
        assert_eq!(join(&shares, &policy).unwrap(), vec![0x2a]);
    }

    #[test]
    fn split_join_roundtrip_many() {
        let mut r = rng(7);
        for trial in 0..1000u32 {
            let n = 2 + (trial % 9) as usize;
            let k = 1 + (trial as usize % n);
            let policy = SharingPolicy::new(n, k).unwrap();
            let len = 1 + (trial % 13) as usize;
            let msg: Vec<u8> = (0..len).map(|_| r.gen()).collect();
            let shares = split(&msg, &policy, &mut r).unwrap();
            assert_eq!(join(&shares, &policy).unwrap(), msg);
        }
    }

    #[test]
    fn join_is_subset_independent() {
        let policy = SharingPolicy::new(6, 3).unwrap();
        let msg = b"subset".to_vec();
        let shares = split(&msg, &policy, &mut rng(3)).unwrap();
        let all = join(&shares, &policy).unwrap();
        assert_eq!(all, msg);
        // every 3-subset agrees
        for a in 0..6 {
            for b in a + 1..6 {
                for c in b + 1..6 {
                    let subset = vec![shares[a].clone(), shares[b].clone(), shares[c].clone()];
                    assert_eq!(join(&subset, &policy).unwrap(), msg);
                }
            }
        }
    }

    #[test]
    fn join_input_errors() {
        let policy = SharingPolicy::new(4, 3).unwrap();
        let msg = b"errs".to_vec();
        let shares = split(&msg, &policy, &mut rng(4)).unwrap();

        assert_eq!(
            join(&shares[..2], &policy),
            Err(ShareError::Threshold { needed: 3, got: 2 })
        );

        let mut dup = shares[..3].to_vec();
        dup[2] = shares[0].clone();
        assert_eq!(join(&dup, &policy), Err(ShareError::DuplicateIndex { x: 1 }));

        let mut ragged = shares[..3].to_vec();
        ragged[1] = Share::new(2, vec![0x00]).unwrap();
        assert!(matches!(
            join(&ragged, &policy),
            Err(ShareError::UnequalLengths { .. })
        ));
    }

    #[test]
    fn split_rejects_empty_message() {
        let policy = SharingPolicy::new(3, 2).unwrap();
        assert_eq!(
            split(&[], &policy, &mut rng(0)),
            Err(ShareError::EmptyMessage)
        );
    }

    #[test]
    fn leading_coefficient_is_never_zero() {
        let policy = SharingPolicy::new(5, 3).unwrap();
        let mut r = rng(9);
        for _ in 0..500 {
            let coeffs = sample_coeffs(&[0xab, 0x00], &policy, &mut r).unwrap();
            for poly in &coeffs {
                assert_eq!(poly.len(), 3);
                assert_ne!(poly[2], fe(0));
            }
        }
    }

    #[test]
    fn combine_pointwise_examples() {
        let policy = SharingPolicy::new(4, 2).unwrap();
        let mut r = rng(11);
        let m1 = b"left".to_vec();
        let m2 = b"rite".to_vec();
        let s1 = split(&m1, &policy, &mut r).unwrap();
        let s2 = split(&m2, &policy, &mut r).unwrap();

        let zero_share = Share::new(s1[0].index(), vec![0; 4]).unwrap();
        assert_eq!(combine_pointwise(&s1[0], &zero_share).unwrap(), s1[0]);
        let self_xor = combine_pointwise(&s1[0], &s1[0]).unwrap();
        assert!(self_xor.data().iter().all(|&b| b == 0));

        let combined: Vec<Share> = s1
            .iter()
            .zip(&s2)
            .map(|(a, b)| combine_pointwise(a, b).unwrap())
            .collect();
        let joined = join(&combined, &policy).unwrap();
        let expect: Vec<u8> = m1.iter().zip(&m2).map(|(a, b)| a ^ b).collect();
        assert_eq!(joined, expect);

        assert_eq!(
            combine_pointwise(&s1[0], &s1[1]),
            Err(ShareError::MismatchedIndex { a: 1, b: 2 })
        );
    }

    /// XOR-combining the splits of several messages joins to the XOR of the
    /// messages; polynomial addition cannot increase the degree.
    #[test]
    fn homomorphism_up_to_five_messages() {
        let policy = SharingPolicy::new(7, 4).unwrap();
        let mut r = rng(13);
        for count in 1..=5usize {
            let msgs: Vec<Vec<u8>> = (0..count)
                .map(|_| (0..9).map(|_| r.gen()).collect())
                .collect();
            let mut acc: Option<Vec<Share>> = None;
            for m in &msgs {
                let s = split(m, &policy, &mut r).unwrap();
                acc = Some(match acc {
                    None => s,
                    Some(prev) => prev
                        .iter()
                        .zip(&s)
                        .map(|(a, b)| combine_pointwise(a, b).unwrap())
                        .collect(),
                });
            }
            let mut expect = vec![0u8; 9];
            for m in &msgs {
                for (e, b) in expect.iter_mut().zip(m) {
                    *e ^= b;
                }
            }
            assert_eq!(join(&acc.unwrap(), &policy).unwrap(), expect);
        }
    }

    /// Multiplication counts for split+join grow linearly in the message
    /// length; measured as operation counts, not wall time.
    #[test]
    fn split_join_cost_linear_in_length() {
        let policy = SharingPolicy::new(8, 4).unwrap();
        let mut r = rng(17);
        let cost = |len: usize, r: &mut ChaCha20Rng| {
            let msg: Vec<u8> = (0..len).map(|_| r.gen()).collect();
            let before = metrics::snapshot();
            let shares = split(&msg, &policy, r).unwrap();
            let joined = join(&shares, &policy).unwrap();
            assert_eq!(joined, msg);
            (metrics::snapshot() - before).field_mul
        };
        let c1 = cost(256, &mut r);
        let c2 = cost(512, &mut r);
        let c4 = cost(1024, &mut r);
        // doubling the length at most doubles the multiplies, modulo the
        // fixed per-call basis setup
        let fixed = 2 * c2 as i64 - c4 as i64;
        assert!(fixed.abs() < 200, "not linear: {c1} {c2} {c4}");
        assert!((2 * c1 as i64 - c2 as i64).abs() < 200, "not linear: {c1} {c2}");
    }

    #[test]
    fn interpolate_recovers_coefficients() {
        let coeffs = vec![fe(0x2a), fe(0x05), fe(0x99)];
        let points: Vec<(FieldElement, FieldElement)> = [1u8, 2, 7]
            .iter()
            .map(|&x| (fe(x), poly_eval(&coeffs, fe(x))))
            .collect();
        assert_eq!(interpolate_coeffs(&points).unwrap(), coeffs);

        let dup = vec![points[0], points[0], points[2]];
        assert_eq!(
            interpolate_coeffs(&dup),
            Err(ShareError::DuplicateIndex { x: 1 })
        );
    }

    #[test]
    fn share_wire_roundtrip() {
        let s = Share::new(7, vec![1, 2, 3]).unwrap();
        let wire = s.to_wire();
        assert_eq!(wire, vec![7, 1, 2, 3]);
        assert_eq!(Share::from_wire(&wire).unwrap(), s);
        assert_eq!(
            Share::from_wire(&[9]),
            Err(ShareError::TruncatedWire { got: 1 })
        );
        assert_eq!(Share::new(0, vec![1]), Err(ShareError::ZeroShareIndex));
    }

    proptest! {
        #[test]
        fn roundtrip_any_policy(
            n in 1usize..=12,
            k_off in 0usize..12,
            msg in prop::collection::vec(any::<u8>(), 1..40),
            seed in any::<u64>(),
        ) {
            let k = 1 + k_off % n;
            let policy = SharingPolicy::new(n, k).unwrap();
            let shares = split(&msg, &policy, &mut rng(seed)).unwrap();
            prop_assert_eq!(join(&shares, &policy).unwrap(), msg);
        }
    }
}
