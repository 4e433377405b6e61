//! Prime-order group abstraction.
//!
//! Protocol code is written once against [`PrimeGroup`] and instantiated with
//! [`Ristretto`] for real elections. The small [`ToyGroup`] profiles exist for
//! brute-force oracles and statistical tests and are refused by election setup
//! unless explicitly allowed.
//!
//! Elements use multiplicative notation throughout (`a * b`, `x.pow(&s)`), even
//! where the backing curve is written additively.

mod ristretto;
mod toy;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rand_core::{CryptoRng, RngCore};

pub use ristretto::Ristretto;
pub use toy::{Toy1009, Toy23, ToyGroup};

/// Backend operations for a cyclic group of prime order `q` with a fixed generator.
///
/// Scalars and elements have fixed-length canonical little-endian encodings.
pub trait PrimeGroup:
    Copy + Clone + fmt::Debug + Default + PartialEq + Eq + Send + Sync + 'static
{
    type S: Copy + Clone + fmt::Debug + PartialEq + Eq + Send + Sync;
    type E: Copy + Clone + fmt::Debug + PartialEq + Eq + Send + Sync;

    /// Profile label, mixed into every hash and written into board parameters.
    const LABEL: &'static str;
    const SCALAR_LEN: usize;
    const ELEMENT_LEN: usize;
    /// Bit length of the group order.
    const ORDER_BITS: u32;
    const IS_TOY: bool;

    fn s_zero() -> Self::S;
    fn s_from_u64(v: u64) -> Self::S;
    fn s_add(a: &Self::S, b: &Self::S) -> Self::S;
    fn s_sub(a: &Self::S, b: &Self::S) -> Self::S;
    fn s_mul(a: &Self::S, b: &Self::S) -> Self::S;
    fn s_neg(a: &Self::S) -> Self::S;
    fn s_invert(a: &Self::S) -> Option<Self::S>;
    fn s_random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self::S;
    /// Reduce a 256-bit digest modulo `q`.
    fn s_from_digest(digest: &[u8; 32]) -> Self::S;
    fn s_to_bytes(a: &Self::S) -> Vec<u8>;
    /// Rejects encodings of the wrong length or of values `>= q`.
    fn s_from_bytes(bytes: &[u8]) -> Option<Self::S>;

    fn e_identity() -> Self::E;
    fn e_generator() -> Self::E;
    fn e_op(a: &Self::E, b: &Self::E) -> Self::E;
    fn e_inv(a: &Self::E) -> Self::E;
    fn e_pow(a: &Self::E, s: &Self::S) -> Self::E;
    fn e_base_pow(s: &Self::S) -> Self::E {
        Self::e_pow(&Self::e_generator(), s)
    }
    fn e_multi_pow(scalars: &[Self::S], elements: &[Self::E]) -> Self::E {
        scalars
            .iter()
            .zip(elements)
            .fold(Self::e_identity(), |acc, (s, e)| {
                Self::e_op(&acc, &Self::e_pow(e, s))
            })
    }
    fn e_to_bytes(a: &Self::E) -> Vec<u8>;
    /// Rejects non-canonical encodings and points outside the prime-order group.
    fn e_from_bytes(bytes: &[u8]) -> Option<Self::E>;
    /// Hash arbitrary bytes to a group element with unknown discrete log.
    fn e_hash(msg: &[u8]) -> Self::E;
}

/// An integer modulo the group order.
pub struct Scalar<G: PrimeGroup>(pub(crate) G::S);

/// A group element.
pub struct Element<G: PrimeGroup>(pub(crate) G::E);

impl<G: PrimeGroup> Scalar<G> {
    pub fn zero() -> Self {
        Scalar(G::s_zero())
    }

    pub fn one() -> Self {
        Scalar(G::s_from_u64(1))
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar(G::s_from_u64(v))
    }

    /// Uniform over `[0, q-1]`.
    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        Scalar(G::s_random(rng))
    }

    /// Uniform over `[1, q-1]`.
    pub fn random_nonzero<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = Self::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    pub fn from_digest(digest: &[u8; 32]) -> Self {
        Scalar(G::s_from_digest(digest))
    }

    pub fn is_zero(&self) -> bool {
        self.0 == G::s_zero()
    }

    pub fn invert(&self) -> Option<Self> {
        G::s_invert(&self.0).map(Scalar)
    }

    pub fn pow_u64(&self, mut exp: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        G::s_to_bytes(&self.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        G::s_from_bytes(bytes).map(Scalar)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }
}

impl<G: PrimeGroup> Element<G> {
    pub fn identity() -> Self {
        Element(G::e_identity())
    }

    pub fn generator() -> Self {
        Element(G::e_generator())
    }

    /// `g^s` for the fixed generator.
    pub fn base_pow(s: &Scalar<G>) -> Self {
        Element(G::e_base_pow(&s.0))
    }

    /// `g^v` for a small non-negative integer.
    pub fn base_pow_u64(v: u64) -> Self {
        Self::base_pow(&Scalar::from_u64(v))
    }

    pub fn pow(&self, s: &Scalar<G>) -> Self {
        Element(G::e_pow(&self.0, &s.0))
    }

    pub fn inverse(&self) -> Self {
        Element(G::e_inv(&self.0))
    }

    pub fn is_identity(&self) -> bool {
        self.0 == G::e_identity()
    }

    /// `prod elements[i]^scalars[i]`.
    pub fn multi_pow(scalars: &[Scalar<G>], elements: &[Element<G>]) -> Self {
        assert_eq!(scalars.len(), elements.len(), "multi_pow length mismatch");
        let s: Vec<G::S> = scalars.iter().map(|s| s.0).collect();
        let e: Vec<G::E> = elements.iter().map(|e| e.0).collect();
        Element(G::e_multi_pow(&s, &e))
    }

    pub fn hash_to_group(domain: &str, msg: &[u8]) -> Self {
        let mut buf = Vec::with_capacity(G::LABEL.len() + domain.len() + msg.len() + 2);
        buf.extend_from_slice(G::LABEL.as_bytes());
        buf.push(0);
        buf.extend_from_slice(domain.as_bytes());
        buf.push(0);
        buf.extend_from_slice(msg);
        Element(G::e_hash(&buf))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        G::e_to_bytes(&self.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        G::e_from_bytes(bytes).map(Element)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }
}

impl<G: PrimeGroup> Clone for Scalar<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for Scalar<G> {}
impl<G: PrimeGroup> PartialEq for Scalar<G> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl<G: PrimeGroup> Eq for Scalar<G> {}
impl<G: PrimeGroup> Hash for Scalar<G> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.to_bytes().hash(state)
    }
}
impl<G: PrimeGroup> fmt::Debug for Scalar<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.to_hex())
    }
}
impl<G: PrimeGroup> Default for Scalar<G> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<G: PrimeGroup> Clone for Element<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for Element<G> {}
impl<G: PrimeGroup> PartialEq for Element<G> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl<G: PrimeGroup> Eq for Element<G> {}
impl<G: PrimeGroup> Hash for Element<G> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.to_bytes().hash(state)
    }
}
impl<G: PrimeGroup> fmt::Debug for Element<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Element({})", self.to_hex())
    }
}
impl<G: PrimeGroup> Default for Element<G> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<G: PrimeGroup> Add for Scalar<G> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Scalar(G::s_add(&self.0, &rhs.0))
    }
}
impl<G: PrimeGroup> Sub for Scalar<G> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Scalar(G::s_sub(&self.0, &rhs.0))
    }
}
impl<G: PrimeGroup> Mul for Scalar<G> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Scalar(G::s_mul(&self.0, &rhs.0))
    }
}
impl<G: PrimeGroup> Neg for Scalar<G> {
    type Output = Self;
    fn neg(self) -> Self {
        Scalar(G::s_neg(&self.0))
    }
}
impl<G: PrimeGroup> AddAssign for Scalar<G> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}
impl<G: PrimeGroup> SubAssign for Scalar<G> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}
impl<G: PrimeGroup> MulAssign for Scalar<G> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}
impl<G: PrimeGroup> Sum for Scalar<G> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}
impl<G: PrimeGroup> Product for Scalar<G> {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::one(), |a, b| a * b)
    }
}

impl<G: PrimeGroup> Mul for Element<G> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Element(G::e_op(&self.0, &rhs.0))
    }
}
impl<G: PrimeGroup> Div for Element<G> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Element(G::e_op(&self.0, &G::e_inv(&rhs.0)))
    }
}
impl<G: PrimeGroup> MulAssign for Element<G> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}
impl<G: PrimeGroup> Product for Element<G> {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::identity(), |a, b| a * b)
    }
}
