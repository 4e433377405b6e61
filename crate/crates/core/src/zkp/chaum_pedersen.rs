use rand_core::{CryptoRng, RngCore};

use super::transcript::FsTranscript;
use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::group::{Element, PrimeGroup, Scalar};

const CP_DOMAIN: &str = "chaum-pedersen";

/// `log_{g1}(y1) = log_{g2}(y2)`.
pub struct ChaumPedersenProof<G: PrimeGroup> {
    pub announce1: Element<G>,
    pub announce2: Element<G>,
    pub response: Scalar<G>,
}

impl<G: PrimeGroup> Clone for ChaumPedersenProof<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for ChaumPedersenProof<G> {}
impl<G: PrimeGroup> PartialEq for ChaumPedersenProof<G> {
    fn eq(&self, o: &Self) -> bool {
        self.announce1 == o.announce1 && self.announce2 == o.announce2 && self.response == o.response
    }
}
impl<G: PrimeGroup> std::fmt::Debug for ChaumPedersenProof<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ChaumPedersenProof({})", self.to_hex())
    }
}

#[allow(clippy::too_many_arguments)]
fn challenge<G: PrimeGroup>(
    g1: &Element<G>,
    y1: &Element<G>,
    g2: &Element<G>,
    y2: &Element<G>,
    a1: &Element<G>,
    a2: &Element<G>,
    context: &[u8],
) -> Scalar<G> {
    let mut t = FsTranscript::new::<G>(CP_DOMAIN);
    t.absorb("context", context)
        .absorb_element("g1", g1)
        .absorb_element("y1", y1)
        .absorb_element("g2", g2)
        .absorb_element("y2", y2)
        .absorb_element("a1", a1)
        .absorb_element("a2", a2);
    t.challenge()
}

pub fn cp_prove<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    g1: &Element<G>,
    y1: &Element<G>,
    g2: &Element<G>,
    y2: &Element<G>,
    x: &Scalar<G>,
    context: &[u8],
    rng: &mut R,
) -> ChaumPedersenProof<G> {
    let w = Scalar::random(rng);
    let announce1 = g1.pow(&w);
    let announce2 = g2.pow(&w);
    let e = challenge(g1, y1, g2, y2, &announce1, &announce2, context);
    ChaumPedersenProof {
        announce1,
        announce2,
        response: w + e * *x,
    }
}

pub fn cp_verify<G: PrimeGroup>(
    g1: &Element<G>,
    y1: &Element<G>,
    g2: &Element<G>,
    y2: &Element<G>,
    proof: &ChaumPedersenProof<G>,
    context: &[u8],
) -> bool {
    let e = challenge(g1, y1, g2, y2, &proof.announce1, &proof.announce2, context);
    let ne = -e;
    Element::multi_pow(&[proof.response, ne], &[*g1, *y1]) == proof.announce1
        && Element::multi_pow(&[proof.response, ne], &[*g2, *y2]) == proof.announce2
}

impl<G: PrimeGroup> Encode for ChaumPedersenProof<G> {
    fn encode(&self, w: &mut Writer) {
        w.element(&self.announce1)
            .element(&self.announce2)
            .scalar(&self.response);
    }
}

impl<G: PrimeGroup> Decode for ChaumPedersenProof<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ChaumPedersenProof {
            announce1: r.element()?,
            announce2: r.element()?,
            response: r.scalar()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Ristretto;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = Ristretto;

    #[test]
    fn zero_exponent() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let g1 = Element::<G>::generator();
        let g2 = Element::hash_to_group("t", b"g2");
        let id = Element::identity();
        let p = cp_prove(&g1, &id, &g2, &id, &Scalar::zero(), b"", &mut rng);
        assert!(cp_verify(&g1, &id, &g2, &id, &p, b""));
    }

    #[test]
    fn completeness_and_wrong_statement() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let g1 = Element::<G>::generator();
        let g2 = Element::hash_to_group("t", b"g2");
        for _ in 0..100 {
            let x = Scalar::random(&mut rng);
            let (y1, y2) = (g1.pow(&x), g2.pow(&x));
            let p = cp_prove(&g1, &y1, &g2, &y2, &x, b"c", &mut rng);
            assert!(cp_verify(&g1, &y1, &g2, &y2, &p, b"c"));
            assert!(!cp_verify(&g1, &y1, &g2, &(y2 * g2), &p, b"c"));
            assert!(!cp_verify(&g1, &y1, &g2, &y2, &p, b"d"));
        }
    }
}
