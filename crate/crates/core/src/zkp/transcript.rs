use sha2::{Digest, Sha256};

use crate::elgamal::Ciphertext;
use crate::group::{Element, PrimeGroup, Scalar};

/// Strong Fiat-Shamir transcript: every statement component and announcement
/// is absorbed, length-prefixed and labelled, before a challenge is squeezed.
#[derive(Clone)]
pub struct FsTranscript {
    hasher: Sha256,
}

impl FsTranscript {
    pub fn new<G: PrimeGroup>(domain: &str) -> Self {
        let mut t = FsTranscript {
            hasher: Sha256::new(),
        };
        t.absorb("protocol", b"postmark-fs-v1");
        t.absorb("group", G::LABEL.as_bytes());
        t.absorb("domain", domain.as_bytes());
        t
    }

    pub fn absorb(&mut self, label: &str, data: &[u8]) -> &mut Self {
        self.hasher.update((label.len() as u32).to_be_bytes());
        self.hasher.update(label.as_bytes());
        self.hasher.update((data.len() as u64).to_be_bytes());
        self.hasher.update(data);
        self
    }

    pub fn absorb_element<G: PrimeGroup>(&mut self, label: &str, e: &Element<G>) -> &mut Self {
        self.absorb(label, &e.to_bytes())
    }

    pub fn absorb_scalar<G: PrimeGroup>(&mut self, label: &str, s: &Scalar<G>) -> &mut Self {
        self.absorb(label, &s.to_bytes())
    }

    pub fn absorb_ciphertext<G: PrimeGroup>(
        &mut self,
        label: &str,
        c: &Ciphertext<G>,
    ) -> &mut Self {
        self.absorb_element(label, &c.c1);
        self.absorb_element(label, &c.c2)
    }

    pub fn digest(&self) -> [u8; 32] {
        self.hasher.clone().finalize().into()
    }

    /// Challenge scalar: the 256-bit digest reduced modulo `q`.
    pub fn challenge<G: PrimeGroup>(&self) -> Scalar<G> {
        Scalar::from_digest(&self.digest())
    }

    /// A family of challenges `u_0..u_{n-1}` from the current state.
    pub fn challenges<G: PrimeGroup>(&self, label: &str, n: usize) -> Vec<Scalar<G>> {
        let seed = self.digest();
        (0..n)
            .map(|i| {
                let mut h = Sha256::new();
                h.update(seed);
                h.update(label.as_bytes());
                h.update((i as u64).to_be_bytes());
                Scalar::from_digest(&h.finalize().into())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Ristretto;

    #[test]
    fn deterministic_and_statement_bound() {
        let mut a = FsTranscript::new::<Ristretto>("t");
        a.absorb("x", b"1");
        let mut b = FsTranscript::new::<Ristretto>("t");
        b.absorb("x", b"1");
        assert_eq!(a.challenge::<Ristretto>(), b.challenge::<Ristretto>());

        let mut c = FsTranscript::new::<Ristretto>("t");
        c.absorb("x", b"2");
        assert_ne!(a.challenge::<Ristretto>(), c.challenge::<Ristretto>());
        // label/data boundaries are unambiguous
        let mut d = FsTranscript::new::<Ristretto>("t");
        d.absorb("x1", b"");
        assert_ne!(a.digest(), d.digest());
        let mut e = FsTranscript::new::<Ristretto>("u");
        e.absorb("x", b"1");
        assert_ne!(a.digest(), e.digest());
    }

    #[test]
    fn distinct_statements_never_collide_in_fuzz() {
        let mut seen = std::collections::HashSet::new();
        for i in 0u32..1000 {
            let mut t = FsTranscript::new::<Ristretto>("fuzz");
            t.absorb("stmt", &i.to_be_bytes());
            assert!(seen.insert(t.challenge::<Ristretto>().to_bytes()));
        }
    }
}
