use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar as DalekScalar;
use curve25519_dalek::traits::{Identity, VartimeMultiscalarMul};
use rand_core::{CryptoRng, RngCore};
use sha2::Sha512;

use super::PrimeGroup;

/// The prime-order Ristretto group over Curve25519.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ristretto;

impl PrimeGroup for Ristretto {
    type S = DalekScalar;
    type E = RistrettoPoint;

    const LABEL: &'static str = "ristretto255";
    const SCALAR_LEN: usize = 32;
    const ELEMENT_LEN: usize = 32;
    const ORDER_BITS: u32 = 253;
    const IS_TOY: bool = false;

    fn s_zero() -> Self::S {
        DalekScalar::ZERO
    }

    fn s_from_u64(v: u64) -> Self::S {
        DalekScalar::from(v)
    }

    fn s_add(a: &Self::S, b: &Self::S) -> Self::S {
        a + b
    }

    fn s_sub(a: &Self::S, b: &Self::S) -> Self::S {
        a - b
    }

    fn s_mul(a: &Self::S, b: &Self::S) -> Self::S {
        a * b
    }

    fn s_neg(a: &Self::S) -> Self::S {
        -a
    }

    fn s_invert(a: &Self::S) -> Option<Self::S> {
        if *a == DalekScalar::ZERO {
            None
        } else {
            Some(a.invert())
        }
    }

    fn s_random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self::S {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        DalekScalar::from_bytes_mod_order_wide(&wide)
    }

    fn s_from_digest(digest: &[u8; 32]) -> Self::S {
        DalekScalar::from_bytes_mod_order(*digest)
    }

    fn s_to_bytes(a: &Self::S) -> Vec<u8> {
        a.to_bytes().to_vec()
    }

    fn s_from_bytes(bytes: &[u8]) -> Option<Self::S> {
        let arr: [u8; 32] = bytes.try_into().ok()?;
        DalekScalar::from_canonical_bytes(arr).into()
    }

    fn e_identity() -> Self::E {
        RistrettoPoint::identity()
    }

    fn e_generator() -> Self::E {
        curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT
    }

    fn e_op(a: &Self::E, b: &Self::E) -> Self::E {
        a + b
    }

    fn e_inv(a: &Self::E) -> Self::E {
        -a
    }

    fn e_pow(a: &Self::E, s: &Self::S) -> Self::E {
        a * s
    }

    fn e_base_pow(s: &Self::S) -> Self::E {
        s * RISTRETTO_BASEPOINT_TABLE
    }

    fn e_multi_pow(scalars: &[Self::S], elements: &[Self::E]) -> Self::E {
        RistrettoPoint::vartime_multiscalar_mul(scalars, elements)
    }

    fn e_to_bytes(a: &Self::E) -> Vec<u8> {
        a.compress().to_bytes().to_vec()
    }

    fn e_from_bytes(bytes: &[u8]) -> Option<Self::E> {
        CompressedRistretto::from_slice(bytes).ok()?.decompress()
    }

    fn e_hash(msg: &[u8]) -> Self::E {
        RistrettoPoint::hash_from_bytes::<Sha512>(msg)
    }
}
