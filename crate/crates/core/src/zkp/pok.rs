use rand_core::{CryptoRng, RngCore};

use super::chaum_pedersen::{cp_prove, cp_verify, ChaumPedersenProof};
use super::transcript::FsTranscript;
use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::elgamal::Ciphertext;
use crate::group::{Element, PrimeGroup, Scalar};

const POK_DOMAIN: &str = "pok-ciphertext";
const ENC_DOMAIN: &str = "proof-of-encryption";

/// Knowledge of `(m, r)` with `c = (g^r, g^m * pk^r)`.
pub struct PokCiphertext<G: PrimeGroup> {
    pub announce_r: Element<G>,
    pub announce_m: Element<G>,
    pub response_m: Scalar<G>,
    pub response_r: Scalar<G>,
}

impl<G: PrimeGroup> Clone for PokCiphertext<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for PokCiphertext<G> {}
impl<G: PrimeGroup> PartialEq for PokCiphertext<G> {
    fn eq(&self, o: &Self) -> bool {
        self.announce_r == o.announce_r
            && self.announce_m == o.announce_m
            && self.response_m == o.response_m
            && self.response_r == o.response_r
    }
}
impl<G: PrimeGroup> std::fmt::Debug for PokCiphertext<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PokCiphertext({})", self.to_hex())
    }
}

fn pok_challenge<G: PrimeGroup>(
    pk: &Element<G>,
    c: &Ciphertext<G>,
    announce_r: &Element<G>,
    announce_m: &Element<G>,
    context: &[u8],
) -> Scalar<G> {
    let mut t = FsTranscript::new::<G>(POK_DOMAIN);
    t.absorb("context", context)
        .absorb_element("pk", pk)
        .absorb_ciphertext("c", c)
        .absorb_element("announce-r", announce_r)
        .absorb_element("announce-m", announce_m);
    t.challenge()
}

pub fn pok_prove<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    pk: &Element<G>,
    c: &Ciphertext<G>,
    m_exp: &Scalar<G>,
    r: &Scalar<G>,
    context: &[u8],
    rng: &mut R,
) -> PokCiphertext<G> {
    let w_m = Scalar::random(rng);
    let w_r = Scalar::random(rng);
    let announce_r = Element::base_pow(&w_r);
    let announce_m = Element::base_pow(&w_m) * pk.pow(&w_r);
    let e = pok_challenge(pk, c, &announce_r, &announce_m, context);
    PokCiphertext {
        announce_r,
        announce_m,
        response_m: w_m + e * *m_exp,
        response_r: w_r + e * *r,
    }
}

pub fn pok_verify<G: PrimeGroup>(
    pk: &Element<G>,
    c: &Ciphertext<G>,
    proof: &PokCiphertext<G>,
    context: &[u8],
) -> bool {
    let e = pok_challenge(pk, c, &proof.announce_r, &proof.announce_m, context);
    let ne = -e;
    Element::multi_pow(&[proof.response_r, ne], &[Element::generator(), c.c1]) == proof.announce_r
        && Element::multi_pow(
            &[proof.response_m, proof.response_r, ne],
            &[Element::generator(), *pk, c.c2],
        ) == proof.announce_m
}

/// Proof that `c` encrypts the public message `g^m`: equality of
/// `log_g(c1)` and `log_pk(c2 / g^m)`.
pub fn enc_prove<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    pk: &Element<G>,
    c: &Ciphertext<G>,
    m_exp: &Scalar<G>,
    r: &Scalar<G>,
    context: &[u8],
    rng: &mut R,
) -> ChaumPedersenProof<G> {
    let y2 = c.c2 / Element::base_pow(m_exp);
    let ctx = enc_context(context, m_exp);
    cp_prove(&Element::generator(), &c.c1, pk, &y2, r, &ctx, rng)
}

pub fn enc_verify<G: PrimeGroup>(
    pk: &Element<G>,
    c: &Ciphertext<G>,
    m_exp: &Scalar<G>,
    proof: &ChaumPedersenProof<G>,
    context: &[u8],
) -> bool {
    let y2 = c.c2 / Element::base_pow(m_exp);
    let ctx = enc_context(context, m_exp);
    cp_verify(&Element::generator(), &c.c1, pk, &y2, proof, &ctx)
}

fn enc_context<G: PrimeGroup>(context: &[u8], m_exp: &Scalar<G>) -> Vec<u8> {
    let mut ctx = ENC_DOMAIN.as_bytes().to_vec();
    ctx.extend_from_slice(&m_exp.to_bytes());
    ctx.extend_from_slice(context);
    ctx
}

impl<G: PrimeGroup> Encode for PokCiphertext<G> {
    fn encode(&self, w: &mut Writer) {
        w.element(&self.announce_r)
            .element(&self.announce_m)
            .scalar(&self.response_m)
            .scalar(&self.response_r);
    }
}

impl<G: PrimeGroup> Decode for PokCiphertext<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(PokCiphertext {
            announce_r: r.element()?,
            announce_m: r.element()?,
            response_m: r.scalar()?,
            response_r: r.scalar()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elgamal::{encrypt_exponent, rerandomize};
    use crate::group::Ristretto;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    type G = Ristretto;

    #[test]
    fn completeness_and_binding() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let pk = Element::<G>::base_pow(&Scalar::random(&mut rng));
        for i in 0..100u32 {
            let m = Scalar::random(&mut rng);
            let r = Scalar::random(&mut rng);
            let c = encrypt_exponent(&pk, &m, &r);
            let ctx = i.to_be_bytes();
            let p = pok_prove(&pk, &c, &m, &r, &ctx, &mut rng);
            assert!(pok_verify(&pk, &c, &p, &ctx));
            assert!(!pok_verify(&pk, &c, &p, b"other-context"));
            let moved = rerandomize(&pk, &c, &Scalar::one());
            assert!(!pok_verify(&pk, &moved, &p, &ctx));
        }
    }

    #[test]
    fn single_byte_mutation_rejects() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let pk = Element::<G>::base_pow(&Scalar::random(&mut rng));
        let m = Scalar::from_u64(5);
        let r = Scalar::random(&mut rng);
        let c = encrypt_exponent(&pk, &m, &r);
        let p = pok_prove(&pk, &c, &m, &r, b"ctx", &mut rng);
        let bytes = p.to_bytes();
        for _ in 0..200 {
            let mut b = bytes.clone();
            let i = rng.gen_range(0..b.len());
            b[i] ^= 1 << rng.gen_range(0..8);
            if let Ok(q) = PokCiphertext::<G>::from_bytes(&b) {
                assert!(!pok_verify(&pk, &c, &q, b"ctx"));
            }
        }
    }

    #[test]
    fn proof_of_encryption() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let pk = Element::<G>::base_pow(&Scalar::random(&mut rng));
        let m = Scalar::from_u64(3);
        let r = Scalar::random(&mut rng);
        let c = encrypt_exponent(&pk, &m, &r);
        let p = enc_prove(&pk, &c, &m, &r, b"ctx", &mut rng);
        assert!(enc_verify(&pk, &c, &m, &p, b"ctx"));
        assert!(!enc_verify(&pk, &c, &Scalar::from_u64(4), &p, b"ctx"));
    }
}
