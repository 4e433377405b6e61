use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use super::PrimeGroup;

/// Order-`Q` subgroup of `Z_P^*` generated by `G`. Test-sized only.
///
/// Requires `P` prime, `Q` prime, `Q | P - 1` and `G` of order `Q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ToyGroup<const P: u64, const Q: u64, const G: u64>;

/// `q = 11` inside `Z_23^*`, generator 2.
pub type Toy23 = ToyGroup<23, 11, 2>;

/// `q = 1009` inside `Z_10091^*`, generator 1024.
pub type Toy1009 = ToyGroup<10091, 1009, 1024>;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

impl<const P: u64, const Q: u64, const G: u64> PrimeGroup for ToyGroup<P, Q, G> {
    type S = u64;
    type E = u64;

    const LABEL: &'static str = "toy-modp";
    const SCALAR_LEN: usize = 8;
    const ELEMENT_LEN: usize = 8;
    const ORDER_BITS: u32 = 64 - Q.leading_zeros();
    const IS_TOY: bool = true;

    fn s_zero() -> u64 {
        0
    }

    fn s_from_u64(v: u64) -> u64 {
        v % Q
    }

    fn s_add(a: &u64, b: &u64) -> u64 {
        ((*a as u128 + *b as u128) % Q as u128) as u64
    }

    fn s_sub(a: &u64, b: &u64) -> u64 {
        ((*a as u128 + Q as u128 - *b as u128) % Q as u128) as u64
    }

    fn s_mul(a: &u64, b: &u64) -> u64 {
        mul_mod(*a, *b, Q)
    }

    fn s_neg(a: &u64) -> u64 {
        (Q - a % Q) % Q
    }

    fn s_invert(a: &u64) -> Option<u64> {
        if (*a).is_multiple_of(Q) {
            None
        } else {
            Some(pow_mod(*a, Q - 2, Q))
        }
    }

    fn s_random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> u64 {
        // rejection sampling keeps the distribution exactly uniform
        let zone = u64::MAX - (u64::MAX % Q);
        loop {
            let v = rng.next_u64();
            if v < zone {
                return v % Q;
            }
        }
    }

    fn s_from_digest(digest: &[u8; 32]) -> u64 {
        let mut wide = [0u8; 16];
        wide.copy_from_slice(&digest[..16]);
        (u128::from_le_bytes(wide) % Q as u128) as u64
    }

    fn s_to_bytes(a: &u64) -> Vec<u8> {
        a.to_le_bytes().to_vec()
    }

    fn s_from_bytes(bytes: &[u8]) -> Option<u64> {
        let arr: [u8; 8] = bytes.try_into().ok()?;
        let v = u64::from_le_bytes(arr);
        (v < Q).then_some(v)
    }

    fn e_identity() -> u64 {
        1
    }

    fn e_generator() -> u64 {
        G
    }

    fn e_op(a: &u64, b: &u64) -> u64 {
        mul_mod(*a, *b, P)
    }

    fn e_inv(a: &u64) -> u64 {
        pow_mod(*a, P - 2, P)
    }

    fn e_pow(a: &u64, s: &u64) -> u64 {
        pow_mod(*a, *s, P)
    }

    fn e_to_bytes(a: &u64) -> Vec<u8> {
        a.to_le_bytes().to_vec()
    }

    fn e_from_bytes(bytes: &[u8]) -> Option<u64> {
        let arr: [u8; 8] = bytes.try_into().ok()?;
        let v = u64::from_le_bytes(arr);
        (v != 0 && v < P && pow_mod(v, Q, P) == 1).then_some(v)
    }

    fn e_hash(msg: &[u8]) -> u64 {
        let cofactor = (P - 1) / Q;
        for counter in 0u32.. {
            let mut h = Sha256::new();
            h.update(msg);
            h.update(counter.to_le_bytes());
            let d = h.finalize();
            let mut wide = [0u8; 16];
            wide.copy_from_slice(&d[..16]);
            let x = (u128::from_le_bytes(wide) % P as u128) as u64;
            if x == 0 {
                continue;
            }
            let e = pow_mod(x, cofactor, P);
            if e != 1 {
                return e;
            }
        }
        unreachable!("counter space exhausted")
    }
}
