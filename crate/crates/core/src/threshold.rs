//! k-of-n Pedersen distributed key generation (Feldman-verified dealing) and
//! threshold decryption with Chaum-Pedersen decryption proofs.

use std::collections::BTreeSet;

use rand_core::{CryptoRng, RngCore};
use thiserror::Error;

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::elgamal::Ciphertext;
use crate::group::{Element, PrimeGroup, Scalar};
use crate::zkp::{cp_prove, cp_verify, ChaumPedersenProof, FsTranscript};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ThresholdError {
    #[error("invalid threshold parameters: k={k}, n={n} (need 1 <= k <= n)")]
    BadParameters { k: u32, n: u32 },
    #[error("dealer {dealer} sent trustee {recipient} a share that fails its commitment check")]
    BadDealing { dealer: u32, recipient: u32 },
    #[error("need {needed} distinct partial decryptions, got {got}")]
    InsufficientPartials { needed: u32, got: u32 },
    #[error("partial decryption from trustee {0} does not verify")]
    InvalidPartial(u32),
    #[error("trustee index {0} out of range")]
    UnknownTrustee(u32),
    #[error("duplicate partial decryption from trustee {0}")]
    DuplicatePartial(u32),
    #[error("combined plaintext does not match the claimed plaintext")]
    WrongPlaintext,
}

/// Public output of the DKG: joint key plus the summed Feldman commitment
/// polynomial, from which every trustee's verification key is derived.
pub struct PublicKeySet<G: PrimeGroup> {
    pub n: u32,
    pub k: u32,
    pub coefficients: Vec<Element<G>>,
}

impl<G: PrimeGroup> Clone for PublicKeySet<G> {
    fn clone(&self) -> Self {
        PublicKeySet {
            n: self.n,
            k: self.k,
            coefficients: self.coefficients.clone(),
        }
    }
}

impl<G: PrimeGroup> std::fmt::Debug for PublicKeySet<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PublicKeySet")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("pk", &self.public_key())
            .finish()
    }
}

impl<G: PrimeGroup> PartialEq for PublicKeySet<G> {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.k == o.k && self.coefficients == o.coefficients
    }
}

impl<G: PrimeGroup> PublicKeySet<G> {
    pub fn public_key(&self) -> Element<G> {
        self.coefficients[0]
    }

    /// `g^{share_i}` = evaluation of the commitment polynomial at `i`.
    pub fn verification_key(&self, index: u32) -> Result<Element<G>, ThresholdError> {
        if index == 0 || index > self.n {
            return Err(ThresholdError::UnknownTrustee(index));
        }
        Ok(eval_commitments(&self.coefficients, index))
    }
}

impl<G: PrimeGroup> Encode for PublicKeySet<G> {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.n).u32(self.k).seq(&self.coefficients);
    }
}

impl<G: PrimeGroup> Decode for PublicKeySet<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let n = r.u32()?;
        let k = r.u32()?;
        let coefficients: Vec<Element<G>> = r.seq()?;
        if k == 0 || k > n || coefficients.len() != k as usize {
            return Err(CodecError::Invalid("public key set shape".into()));
        }
        Ok(PublicKeySet { n, k, coefficients })
    }
}

pub struct TrusteeShare<G: PrimeGroup> {
    pub trustee_index: u32,
    pub secret_share: Scalar<G>,
    pub public: PublicKeySet<G>,
}

impl<G: PrimeGroup> Clone for TrusteeShare<G> {
    fn clone(&self) -> Self {
        TrusteeShare {
            trustee_index: self.trustee_index,
            secret_share: self.secret_share,
            public: self.public.clone(),
        }
    }
}

impl<G: PrimeGroup> std::fmt::Debug for TrusteeShare<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrusteeShare")
            .field("trustee_index", &self.trustee_index)
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl<G: PrimeGroup> TrusteeShare<G> {
    pub fn is_consistent(&self) -> bool {
        self.public
            .verification_key(self.trustee_index)
            .map(|vk| vk == Element::base_pow(&self.secret_share))
            .unwrap_or(false)
    }
}

impl<G: PrimeGroup> Encode for TrusteeShare<G> {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.trustee_index)
            .scalar(&self.secret_share)
            .put(&self.public);
    }
}

impl<G: PrimeGroup> Decode for TrusteeShare<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let share = TrusteeShare {
            trustee_index: r.u32()?,
            secret_share: r.scalar()?,
            public: r.get()?,
        };
        if !share.is_consistent() {
            return Err(CodecError::Invalid("trustee share does not match public key set".into()));
        }
        Ok(share)
    }
}

fn eval_commitments<G: PrimeGroup>(coefficients: &[Element<G>], index: u32) -> Element<G> {
    let x = Scalar::<G>::from_u64(index as u64);
    let powers: Vec<Scalar<G>> = (0..coefficients.len() as u64).map(|j| x.pow_u64(j)).collect();
    Element::multi_pow(&powers, coefficients)
}

fn eval_poly<G: PrimeGroup>(coefficients: &[Scalar<G>], index: u32) -> Scalar<G> {
    let x = Scalar::<G>::from_u64(index as u64);
    coefficients
        .iter()
        .rev()
        .fold(Scalar::zero(), |acc, c| acc * x + *c)
}

/// One dealer's contribution: a random polynomial of degree `k - 1`.
pub struct Dealing<G: PrimeGroup> {
    pub dealer: u32,
    pub commitments: Vec<Element<G>>,
    pub shares: Vec<Scalar<G>>,
}

impl<G: PrimeGroup> Dealing<G> {
    pub fn new<R: RngCore + CryptoRng + ?Sized>(dealer: u32, n: u32, k: u32, rng: &mut R) -> Self {
        let poly: Vec<Scalar<G>> = (0..k).map(|_| Scalar::random(rng)).collect();
        Dealing {
            dealer,
            commitments: poly.iter().map(Element::base_pow).collect(),
            shares: (1..=n).map(|i| eval_poly(&poly, i)).collect(),
        }
    }

    /// Recipient-side Feldman check of the share for trustee `recipient`.
    pub fn verify_share(&self, recipient: u32) -> bool {
        let share = &self.shares[(recipient - 1) as usize];
        Element::base_pow(share) == eval_commitments(&self.commitments, recipient)
    }
}

pub fn dkg_run<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    n: u32,
    k: u32,
    rng: &mut R,
) -> Result<(PublicKeySet<G>, Vec<TrusteeShare<G>>), ThresholdError> {
    dkg_run_with(n, k, rng, |_| {})
}

/// DKG with a hook that may tamper with dealings before they are exchanged.
/// Any share failing its commitment check aborts the run.
pub fn dkg_run_with<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    n: u32,
    k: u32,
    rng: &mut R,
    mut tamper: impl FnMut(&mut Dealing<G>),
) -> Result<(PublicKeySet<G>, Vec<TrusteeShare<G>>), ThresholdError> {
    if k == 0 || k > n {
        return Err(ThresholdError::BadParameters { k, n });
    }
    let mut dealings: Vec<Dealing<G>> = (1..=n).map(|d| Dealing::new(d, n, k, rng)).collect();
    for d in dealings.iter_mut() {
        tamper(d);
    }
    for d in &dealings {
        for recipient in 1..=n {
            if !d.verify_share(recipient) {
                return Err(ThresholdError::BadDealing {
                    dealer: d.dealer,
                    recipient,
                });
            }
        }
    }
    let coefficients: Vec<Element<G>> = (0..k as usize)
        .map(|j| dealings.iter().map(|d| d.commitments[j]).product())
        .collect();
    let public = PublicKeySet { n, k, coefficients };
    let shares = (1..=n)
        .map(|i| TrusteeShare {
            trustee_index: i,
            secret_share: dealings.iter().map(|d| d.shares[(i - 1) as usize]).sum(),
            public: public.clone(),
        })
        .collect();
    Ok((public, shares))
}

/// Lagrange coefficient at zero for `index` within `indices`.
pub fn lagrange_at_zero<G: PrimeGroup>(index: u32, indices: &[u32]) -> Scalar<G> {
    let xi = Scalar::<G>::from_u64(index as u64);
    let mut num = Scalar::one();
    let mut den = Scalar::one();
    for &j in indices.iter().filter(|&&j| j != index) {
        let xj = Scalar::from_u64(j as u64);
        num *= xj;
        den *= xj - xi;
    }
    num * den.invert().expect("distinct indices")
}

pub struct PartialDecryption<G: PrimeGroup> {
    pub trustee_index: u32,
    pub share_element: Element<G>,
    pub proof: ChaumPedersenProof<G>,
}

impl<G: PrimeGroup> Clone for PartialDecryption<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for PartialDecryption<G> {}
impl<G: PrimeGroup> PartialEq for PartialDecryption<G> {
    fn eq(&self, o: &Self) -> bool {
        self.trustee_index == o.trustee_index
            && self.share_element == o.share_element
            && self.proof == o.proof
    }
}
impl<G: PrimeGroup> std::fmt::Debug for PartialDecryption<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PartialDecryption")
            .field("trustee_index", &self.trustee_index)
            .field("share_element", &self.share_element)
            .finish_non_exhaustive()
    }
}

fn partial_context<G: PrimeGroup>(c: &Ciphertext<G>, trustee: u32) -> Vec<u8> {
    let mut t = FsTranscript::new::<G>("partial-decryption");
    t.absorb_ciphertext("c", c).absorb("trustee", &trustee.to_be_bytes());
    t.digest().to_vec()
}

pub fn partial_decrypt<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    share: &TrusteeShare<G>,
    c: &Ciphertext<G>,
    rng: &mut R,
) -> PartialDecryption<G> {
    let vk = Element::base_pow(&share.secret_share);
    let share_element = c.c1.pow(&share.secret_share);
    let ctx = partial_context(c, share.trustee_index);
    let proof = cp_prove(
        &Element::generator(),
        &vk,
        &c.c1,
        &share_element,
        &share.secret_share,
        &ctx,
        rng,
    );
    PartialDecryption {
        trustee_index: share.trustee_index,
        share_element,
        proof,
    }
}

pub fn verify_partial<G: PrimeGroup>(
    public: &PublicKeySet<G>,
    c: &Ciphertext<G>,
    partial: &PartialDecryption<G>,
) -> Result<(), ThresholdError> {
    let vk = public.verification_key(partial.trustee_index)?;
    let ctx = partial_context(c, partial.trustee_index);
    if cp_verify(
        &Element::generator(),
        &vk,
        &c.c1,
        &partial.share_element,
        &partial.proof,
        &ctx,
    ) {
        Ok(())
    } else {
        Err(ThresholdError::InvalidPartial(partial.trustee_index))
    }
}

/// Plaintext together with the partial decryptions that justify it.
pub struct DecryptionBundle<G: PrimeGroup> {
    pub ciphertext: Ciphertext<G>,
    pub plaintext: Element<G>,
    pub partials: Vec<PartialDecryption<G>>,
}

impl<G: PrimeGroup> Clone for DecryptionBundle<G> {
    fn clone(&self) -> Self {
        DecryptionBundle {
            ciphertext: self.ciphertext,
            plaintext: self.plaintext,
            partials: self.partials.clone(),
        }
    }
}

impl<G: PrimeGroup> std::fmt::Debug for DecryptionBundle<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecryptionBundle")
            .field("ciphertext", &self.ciphertext)
            .field("plaintext", &self.plaintext)
            .field("partials", &self.partials.len())
            .finish()
    }
}

impl<G: PrimeGroup> PartialEq for DecryptionBundle<G> {
    fn eq(&self, o: &Self) -> bool {
        self.ciphertext == o.ciphertext && self.plaintext == o.plaintext && self.partials == o.partials
    }
}

fn lagrange_combine<G: PrimeGroup>(
    public: &PublicKeySet<G>,
    c: &Ciphertext<G>,
    partials: &[PartialDecryption<G>],
) -> Result<Element<G>, ThresholdError> {
    let mut seen = BTreeSet::new();
    for p in partials {
        if !seen.insert(p.trustee_index) {
            return Err(ThresholdError::DuplicatePartial(p.trustee_index));
        }
        verify_partial(public, c, p)?;
    }
    if (seen.len() as u32) < public.k {
        return Err(ThresholdError::InsufficientPartials {
            needed: public.k,
            got: seen.len() as u32,
        });
    }
    let indices: Vec<u32> = partials.iter().map(|p| p.trustee_index).collect();
    let coeffs: Vec<Scalar<G>> = indices.iter().map(|&i| lagrange_at_zero(i, &indices)).collect();
    let elems: Vec<Element<G>> = partials.iter().map(|p| p.share_element).collect();
    let blinding = Element::multi_pow(&coeffs, &elems);
    Ok(c.c2 / blinding)
}

pub fn combine<G: PrimeGroup>(
    public: &PublicKeySet<G>,
    c: &Ciphertext<G>,
    partials: &[PartialDecryption<G>],
) -> Result<(Element<G>, DecryptionBundle<G>), ThresholdError> {
    let plaintext = lagrange_combine(public, c, partials)?;
    Ok((
        plaintext,
        DecryptionBundle {
            ciphertext: *c,
            plaintext,
            partials: partials.to_vec(),
        },
    ))
}

impl<G: PrimeGroup> DecryptionBundle<G> {
    /// Standalone re-verification: every partial proof and the Lagrange combination.
    pub fn verify(&self, public: &PublicKeySet<G>) -> Result<(), ThresholdError> {
        let plaintext = lagrange_combine(public, &self.ciphertext, &self.partials)?;
        if plaintext != self.plaintext {
            return Err(ThresholdError::WrongPlaintext);
        }
        Ok(())
    }
}

impl<G: PrimeGroup> Encode for PartialDecryption<G> {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.trustee_index)
            .element(&self.share_element)
            .put(&self.proof);
    }
}

impl<G: PrimeGroup> Decode for PartialDecryption<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(PartialDecryption {
            trustee_index: r.u32()?,
            share_element: r.element()?,
            proof: r.get()?,
        })
    }
}

impl<G: PrimeGroup> Encode for DecryptionBundle<G> {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.ciphertext)
            .element(&self.plaintext)
            .seq(&self.partials);
    }
}

impl<G: PrimeGroup> Decode for DecryptionBundle<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(DecryptionBundle {
            ciphertext: r.get()?,
            plaintext: r.element()?,
            partials: r.seq()?,
        })
    }
}

/// Decrypt with the first `k` trustees in `shares`.
pub fn threshold_decrypt<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    public: &PublicKeySet<G>,
    shares: &[TrusteeShare<G>],
    c: &Ciphertext<G>,
    rng: &mut R,
) -> Result<(Element<G>, DecryptionBundle<G>), ThresholdError> {
    let partials: Vec<_> = shares
        .iter()
        .take(public.k as usize)
        .map(|s| partial_decrypt(s, c, rng))
        .collect();
    combine(public, c, &partials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elgamal::{decrypt, encrypt};
    use crate::group::{Ristretto, Toy1009};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = Ristretto;

    #[test]
    fn single_trustee_is_plain_elgamal() {
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let (public, shares) = dkg_run::<G, _>(1, 1, &mut rng).unwrap();
        assert_eq!(public.public_key(), Element::base_pow(&shares[0].secret_share));
        let m = Element::base_pow_u64(42);
        let c = encrypt(&public.public_key(), &m, &Scalar::random(&mut rng));
        let (pt, bundle) = threshold_decrypt(&public, &shares, &c, &mut rng).unwrap();
        assert_eq!(pt, m);
        assert_eq!(pt, decrypt(&shares[0].secret_share, &c));
        bundle.verify(&public).unwrap();
    }

    #[test]
    fn two_of_three_all_pairs_agree() {
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        let (public, shares) = dkg_run::<G, _>(3, 2, &mut rng).unwrap();
        assert!(shares.iter().all(TrusteeShare::is_consistent));
        let m = Element::base_pow_u64(7);
        let c = encrypt(&public.public_key(), &m, &Scalar::random(&mut rng));
        let partials: Vec<_> = shares.iter().map(|s| partial_decrypt(s, &c, &mut rng)).collect();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let (pt, bundle) = combine(&public, &c, &[partials[i], partials[j]]).unwrap();
            assert_eq!(pt, m);
            bundle.verify(&public).unwrap();
        }
        let (pt, _) = combine(&public, &c, &partials).unwrap();
        assert_eq!(pt, m);
    }

    #[test]
    fn threshold_floor() {
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let (public, shares) = dkg_run::<G, _>(3, 2, &mut rng).unwrap();
        let m = Element::base_pow_u64(7);
        let c = encrypt(&public.public_key(), &m, &Scalar::random(&mut rng));
        let p = partial_decrypt(&shares[0], &c, &mut rng);
        assert_eq!(
            combine(&public, &c, &[p]).unwrap_err(),
            ThresholdError::InsufficientPartials { needed: 2, got: 1 }
        );
        // a lone share used as if it were the key does not decrypt
        assert_ne!(c.c2 / p.share_element, m);
        assert_eq!(combine(&public, &c, &[p, p]).unwrap_err(), ThresholdError::DuplicatePartial(1));
    }

    #[test]
    fn bad_parameters_and_bad_dealing() {
        let mut rng = ChaCha20Rng::seed_from_u64(34);
        assert!(matches!(
            dkg_run::<G, _>(2, 3, &mut rng),
            Err(ThresholdError::BadParameters { k: 3, n: 2 })
        ));
        assert!(dkg_run::<G, _>(2, 0, &mut rng).is_err());
        let res = dkg_run_with::<G, _>(3, 2, &mut rng, |d| {
            if d.dealer == 2 {
                d.shares[0] += Scalar::one();
            }
        });
        assert_eq!(res.unwrap_err(), ThresholdError::BadDealing { dealer: 2, recipient: 1 });
    }

    #[test]
    fn partial_proofs() {
        let mut rng = ChaCha20Rng::seed_from_u64(35);
        let (public, shares) = dkg_run::<G, _>(3, 2, &mut rng).unwrap();
        let pk = public.public_key();
        for _ in 0..100 {
            let c = encrypt(&pk, &Element::base_pow_u64(1), &Scalar::random(&mut rng));
            let p = partial_decrypt(&shares[1], &c, &mut rng);
            verify_partial(&public, &c, &p).unwrap();
            let mut bad = p;
            bad.share_element *= Element::generator();
            assert_eq!(verify_partial(&public, &c, &bad), Err(ThresholdError::InvalidPartial(2)));
            let other = encrypt(&pk, &Element::base_pow_u64(1), &Scalar::random(&mut rng));
            assert!(verify_partial(&public, &other, &p).is_err());
        }
    }

    #[test]
    fn toy_lagrange_matches_integer_oracle() {
        // Rational Lagrange basis at 0 for points {1,2,3}: 3, -3, 1.
        // Over any field these are the images of those integers.
        let idx = [1u32, 2, 3];
        let want: [i64; 3] = [3, -3, 1];
        for (i, w) in idx.iter().zip(want) {
            let got = lagrange_at_zero::<Toy1009>(*i, &idx);
            let w = if w < 0 {
                -Scalar::from_u64((-w) as u64)
            } else {
                Scalar::from_u64(w as u64)
            };
            assert_eq!(got, w);
        }
        // {1,3}: l1 = 3/2, l3 = -1/2
        let two_inv = Scalar::<Toy1009>::from_u64(2).invert().unwrap();
        assert_eq!(lagrange_at_zero::<Toy1009>(1, &[1, 3]), Scalar::from_u64(3) * two_inv);
        assert_eq!(lagrange_at_zero::<Toy1009>(3, &[1, 3]), -two_inv);
    }

    #[test]
    fn every_subset_reconstructs_in_toy_profile() {
        let mut rng = ChaCha20Rng::seed_from_u64(36);
        let (public, shares) = dkg_run::<Toy1009, _>(4, 3, &mut rng).unwrap();
        let indices: Vec<u32> = (1..=4).collect();
        // reconstruct sk from all shares (test-only) and compare with subsets
        let sk: Scalar<Toy1009> = shares
            .iter()
            .map(|s| lagrange_at_zero::<Toy1009>(s.trustee_index, &indices) * s.secret_share)
            .sum();
        assert_eq!(Element::base_pow(&sk), public.public_key());
        let c = encrypt(&public.public_key(), &Element::base_pow_u64(99), &Scalar::from_u64(5));
        let expected = decrypt(&sk, &c);
        let partials: Vec<_> = shares.iter().map(|s| partial_decrypt(s, &c, &mut rng)).collect();
        for mask in 0u32..16 {
            let subset: Vec<_> = (0..4).filter(|i| mask >> i & 1 == 1).map(|i| partials[i]).collect();
            match combine(&public, &c, &subset) {
                Ok((pt, _)) => {
                    assert!(subset.len() >= 3);
                    assert_eq!(pt, expected);
                }
                Err(e) => {
                    assert!(subset.len() < 3);
                    assert!(matches!(e, ThresholdError::InsufficientPartials { .. }));
                }
            }
        }
    }

    #[test]
    fn bundle_detects_wrong_plaintext() {
        let mut rng = ChaCha20Rng::seed_from_u64(37);
        let (public, shares) = dkg_run::<G, _>(3, 2, &mut rng).unwrap();
        let c = encrypt(&public.public_key(), &Element::base_pow_u64(3), &Scalar::random(&mut rng));
        let (_, mut bundle) = threshold_decrypt(&public, &shares, &c, &mut rng).unwrap();
        bundle.plaintext = Element::base_pow_u64(4);
        assert_eq!(bundle.verify(&public), Err(ThresholdError::WrongPlaintext));
    }
}
