//! Pedersen commitments `h1^a * h2^r` with generators derived from a public seed.

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::group::{Element, PrimeGroup, Scalar};

const H1_DOMAIN: &str = "postmark/pedersen/h1";
const H2_DOMAIN: &str = "postmark/pedersen/h2";

pub struct PedersenParams<G: PrimeGroup> {
    pub h1: Element<G>,
    pub h2: Element<G>,
    pub seed: Vec<u8>,
}

impl<G: PrimeGroup> Clone for PedersenParams<G> {
    fn clone(&self) -> Self {
        PedersenParams {
            h1: self.h1,
            h2: self.h2,
            seed: self.seed.clone(),
        }
    }
}

impl<G: PrimeGroup> std::fmt::Debug for PedersenParams<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PedersenParams")
            .field("h1", &self.h1)
            .field("h2", &self.h2)
            .field("seed", &hex::encode(&self.seed))
            .finish()
    }
}

impl<G: PrimeGroup> PartialEq for PedersenParams<G> {
    fn eq(&self, other: &Self) -> bool {
        self.h1 == other.h1 && self.h2 == other.h2 && self.seed == other.seed
    }
}

impl<G: PrimeGroup> PedersenParams<G> {
    /// Both generators come from independent hash-to-group calls, so nobody
    /// knows `log_h1(h2)`.
    pub fn derive(seed: &[u8]) -> Self {
        PedersenParams {
            h1: Element::hash_to_group(H1_DOMAIN, seed),
            h2: Element::hash_to_group(H2_DOMAIN, seed),
            seed: seed.to_vec(),
        }
    }

    /// True iff the generators are exactly the ones the seed derives.
    pub fn is_well_formed(&self) -> bool {
        *self == Self::derive(&self.seed)
    }

    pub fn commit(&self, a: &Scalar<G>, r: &Scalar<G>) -> Commitment<G> {
        Commitment(Element::multi_pow(&[*a, *r], &[self.h1, self.h2]))
    }

    pub fn verify_opening(&self, c: &Commitment<G>, a: &Scalar<G>, r: &Scalar<G>) -> bool {
        self.commit(a, r) == *c
    }
}

impl<G: PrimeGroup> Encode for PedersenParams<G> {
    fn encode(&self, w: &mut Writer) {
        w.bytes(&self.seed).element(&self.h1).element(&self.h2);
    }
}

impl<G: PrimeGroup> Decode for PedersenParams<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let p = PedersenParams {
            seed: r.bytes()?,
            h1: r.element()?,
            h2: r.element()?,
        };
        if !p.is_well_formed() {
            return Err(CodecError::Invalid("pedersen generators do not match seed".into()));
        }
        Ok(p)
    }
}

pub struct Commitment<G: PrimeGroup>(pub Element<G>);

impl<G: PrimeGroup> Clone for Commitment<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for Commitment<G> {}
impl<G: PrimeGroup> PartialEq for Commitment<G> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl<G: PrimeGroup> Eq for Commitment<G> {}
impl<G: PrimeGroup> std::fmt::Debug for Commitment<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Commitment({})", self.0.to_hex())
    }
}

impl<G: PrimeGroup> Encode for Commitment<G> {
    fn encode(&self, w: &mut Writer) {
        w.element(&self.0);
    }
}

impl<G: PrimeGroup> Decode for Commitment<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Commitment(r.element()?))
    }
}
