//! Concrete stand-ins for the uninterpreted symbols.
//!
//! `keccak256` is SHA-256 under a domain tag, and signature recovery hashes
//! its four words under another tag. Neither is the real primitive; both are
//! deterministic and collision-free for every practical purpose.

use alloc::vec::Vec;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

const KECCAK_TAG: &[u8] = b"kspec/keccak256\0";
const ECREC_TAG: &[u8] = b"kspec/ecrecover\0";

fn digest(tag: &[u8], data: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(tag);
    h.update(data);
    h.finalize().into()
}

/// Stand-in for `keccak256` over a byte string, as a word.
pub fn keccak(data: &[u8]) -> BigInt {
    BigInt::from_bytes_be(Sign::Plus, &digest(KECCAK_TAG, data))
}

/// First four bytes of the stand-in hash of a function signature.
pub fn selector(signature: &str) -> [u8; 4] {
    let d = digest(KECCAK_TAG, signature.as_bytes());
    [d[0], d[1], d[2], d[3]]
}

/// Big-endian encoding of `v mod 256^len` in exactly `len` bytes.
pub fn to_be_bytes(v: &BigInt, len: usize) -> Vec<u8> {
    let modulus = BigInt::one() << (8 * len);
    let (_, bytes) = v.mod_floor(&modulus).to_bytes_be();
    let mut out = alloc::vec![0u8; len];
    if !v.mod_floor(&modulus).is_zero() {
        out[len - bytes.len()..].copy_from_slice(&bytes);
    }
    out
}

/// Stand-in for signature recovery: the zero address when `v` is not 27 or
/// 28, otherwise a 160-bit value derived from all four words. Arguments are
/// reduced modulo 2^256 first.
pub fn ecrecover(hash: &BigInt, v: &BigInt, r: &BigInt, s: &BigInt) -> BigInt {
    let w = super::word_modulus();
    let v = v.mod_floor(&w);
    if v != BigInt::from(27) && v != BigInt::from(28) {
        return BigInt::zero();
    }
    let mut data = Vec::with_capacity(128);
    for x in [hash, &v, r, s] {
        data.extend_from_slice(&to_be_bytes(&x.mod_floor(&w), 32));
    }
    BigInt::from_bytes_be(Sign::Plus, &digest(ECREC_TAG, &data)) % (BigInt::one() << 160)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        assert_eq!(keccak(b"abc"), keccak(b"abc"));
        assert_ne!(keccak(b"abc"), keccak(b"abd"));
        assert_ne!(keccak(b""), keccak(&[0]));
        assert_eq!(selector("execute()"), selector("execute()"));
        assert_ne!(selector("execute()"), selector("execute(uint256)"));
    }

    #[test]
    fn recovery_rejects_bad_v() {
        let one = BigInt::one();
        assert!(ecrecover(&one, &BigInt::from(26), &one, &one).is_zero());
        let a = ecrecover(&one, &BigInt::from(27), &one, &one);
        assert!(!a.is_zero());
        assert!(a < (BigInt::one() << 160));
        assert_ne!(a, ecrecover(&one, &BigInt::from(28), &one, &one));
    }

    #[test]
    fn fixed_width_encoding() {
        assert_eq!(to_be_bytes(&BigInt::from(258), 2), [1, 2]);
        assert_eq!(to_be_bytes(&BigInt::from(258), 1), [2]);
        assert_eq!(to_be_bytes(&BigInt::from(-1), 2), [255, 255]);
        assert_eq!(to_be_bytes(&BigInt::zero(), 3), [0, 0, 0]);
    }
}
