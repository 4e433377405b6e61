//! Exponential-friendly ElGamal over a [`PrimeGroup`].

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::group::{Element, PrimeGroup, Scalar};

/// `(c1, c2) = (g^r, m * pk^r)`.
pub struct Ciphertext<G: PrimeGroup> {
    pub c1: Element<G>,
    pub c2: Element<G>,
}

impl<G: PrimeGroup> Clone for Ciphertext<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for Ciphertext<G> {}
impl<G: PrimeGroup> PartialEq for Ciphertext<G> {
    fn eq(&self, other: &Self) -> bool {
        self.c1 == other.c1 && self.c2 == other.c2
    }
}
impl<G: PrimeGroup> Eq for Ciphertext<G> {}
impl<G: PrimeGroup> std::fmt::Debug for Ciphertext<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ciphertext")
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish()
    }
}

impl<G: PrimeGroup> Ciphertext<G> {
    pub fn new(c1: Element<G>, c2: Element<G>) -> Self {
        Ciphertext { c1, c2 }
    }

    /// Encryption of the identity with zero randomness.
    pub fn neutral() -> Self {
        Ciphertext::new(Element::identity(), Element::identity())
    }

    /// Componentwise quotient `self / other`.
    pub fn quotient(&self, other: &Self) -> Self {
        Ciphertext::new(self.c1 / other.c1, self.c2 / other.c2)
    }
}

impl<G: PrimeGroup> Encode for Ciphertext<G> {
    fn encode(&self, w: &mut Writer) {
        w.element(&self.c1).element(&self.c2);
    }
}

impl<G: PrimeGroup> Decode for Ciphertext<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Ciphertext::new(r.element()?, r.element()?))
    }
}

pub fn encrypt<G: PrimeGroup>(pk: &Element<G>, m: &Element<G>, r: &Scalar<G>) -> Ciphertext<G> {
    Ciphertext::new(Element::base_pow(r), *m * pk.pow(r))
}

/// Encrypts `g^v`.
pub fn encrypt_exponent<G: PrimeGroup>(
    pk: &Element<G>,
    v: &Scalar<G>,
    r: &Scalar<G>,
) -> Ciphertext<G> {
    encrypt(pk, &Element::base_pow(v), r)
}

pub fn decrypt<G: PrimeGroup>(sk: &Scalar<G>, c: &Ciphertext<G>) -> Element<G> {
    c.c2 / c.c1.pow(sk)
}

/// `(c1 * g^r, c2 * pk^r)`.
pub fn rerandomize<G: PrimeGroup>(
    pk: &Element<G>,
    c: &Ciphertext<G>,
    r: &Scalar<G>,
) -> Ciphertext<G> {
    ct_mul(c, &encrypt(pk, &Element::identity(), r))
}

/// Homomorphic combination: plaintexts multiply, exponents add.
pub fn ct_mul<G: PrimeGroup>(a: &Ciphertext<G>, b: &Ciphertext<G>) -> Ciphertext<G> {
    Ciphertext::new(a.c1 * b.c1, a.c2 * b.c2)
}

/// Componentwise exponentiation: the plaintext exponent is scaled by `a`.
pub fn ct_exp<G: PrimeGroup>(c: &Ciphertext<G>, a: &Scalar<G>) -> Ciphertext<G> {
    Ciphertext::new(c.c1.pow(a), c.c2.pow(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Ristretto, Toy23};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    // Plain modular arithmetic over Z_23, independent of the group backend.
    fn modpow(b: u64, e: u64, m: u64) -> u64 {
        (0..e).fold(1, |acc, _| acc * b % m)
    }

    type T = Toy23;

    fn el(v: u64) -> Element<T> {
        Element::from_bytes(&v.to_le_bytes()).expect("subgroup element")
    }

    #[test]
    fn zero_randomness_cases() {
        let pk = Element::<Ristretto>::base_pow_u64(99);
        let c = encrypt(&pk, &Element::identity(), &Scalar::zero());
        assert_eq!(c, Ciphertext::neutral());
        let g = Element::<Ristretto>::generator();
        let c = encrypt(&pk, &g, &Scalar::zero());
        assert_eq!(c, Ciphertext::new(Element::identity(), g));
    }

    #[test]
    fn toy_encrypt_matches_modular_oracle() {
        // pk = 2^3 = 8, m = 2^5, r = 4 in Z_23
        let pk = Element::<T>::base_pow_u64(3);
        assert_eq!(pk, el(8));
        let m = Element::<T>::base_pow_u64(5);
        let c = encrypt(&pk, &m, &Scalar::from_u64(4));
        let want_c1 = modpow(2, 4, 23);
        let want_c2 = modpow(2, 5, 23) * modpow(8, 4, 23) % 23;
        assert_eq!((want_c1, want_c2), (16, 18));
        assert_eq!(c, Ciphertext::new(el(want_c1), el(want_c2)));
        assert_eq!(decrypt(&Scalar::from_u64(3), &c), el(modpow(2, 5, 23)));
    }

    #[test]
    fn toy_homomorphism_matches_oracle() {
        // E(g^2; 1) * E(g^3; 2) = (g^3, g^5 * 8^3)
        let pk = el(8);
        let a = encrypt_exponent(&pk, &Scalar::<T>::from_u64(2), &Scalar::from_u64(1));
        let b = encrypt_exponent(&pk, &Scalar::<T>::from_u64(3), &Scalar::from_u64(2));
        let c = ct_mul(&a, &b);
        let want = (modpow(2, 3, 23), modpow(2, 5, 23) * modpow(8, 3, 23) % 23);
        assert_eq!(c, Ciphertext::new(el(want.0), el(want.1)));
    }

    #[test]
    fn roundtrip_and_rerandomization_laws() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let sk = Scalar::<Ristretto>::random_nonzero(&mut rng);
        let pk = Element::base_pow(&sk);
        for _ in 0..100 {
            let m = Element::base_pow(&Scalar::random(&mut rng));
            let r = Scalar::random(&mut rng);
            let c = encrypt(&pk, &m, &r);
            assert_eq!(decrypt(&sk, &c), m);
            assert_eq!(decrypt(&sk, &Ciphertext::new(Element::identity(), m)), m);

            let r1 = Scalar::random_nonzero(&mut rng);
            let r2 = Scalar::random_nonzero(&mut rng);
            let c1 = rerandomize(&pk, &c, &r1);
            assert_ne!(c1.to_bytes(), c.to_bytes());
            assert_eq!(decrypt(&sk, &c1), m);
            assert_eq!(rerandomize(&pk, &c1, &r2), rerandomize(&pk, &c, &(r1 + r2)));
        }
        let c = encrypt(&pk, &Element::generator(), &Scalar::from_u64(5));
        assert_eq!(rerandomize(&pk, &c, &Scalar::zero()), c);
    }

    #[test]
    fn exponent_laws() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let sk = Scalar::<Ristretto>::random_nonzero(&mut rng);
        let pk = Element::base_pow(&sk);
        let e2 = encrypt_exponent(&pk, &Scalar::from_u64(2), &Scalar::random(&mut rng));
        let e3 = encrypt_exponent(&pk, &Scalar::from_u64(3), &Scalar::random(&mut rng));
        assert_eq!(decrypt(&sk, &ct_mul(&e2, &e3)), Element::base_pow_u64(5));
        assert_eq!(ct_mul(&e2, &Ciphertext::neutral()), e2);

        let v = Scalar::random(&mut rng);
        let a = Scalar::random(&mut rng);
        let ev = encrypt_exponent(&pk, &v, &Scalar::random(&mut rng));
        assert_eq!(decrypt(&sk, &ct_exp(&ev, &a)), Element::base_pow(&(a * v)));
        assert_eq!(ct_exp(&ev, &Scalar::one()), ev);
        assert_eq!(decrypt(&sk, &ct_exp(&ev, &Scalar::zero())), Element::identity());
    }
}
