//! Distributed plaintext-equivalence: every trustee raises the quotient of the
//! two ciphertexts to a secret exponent and proves it, then the product is
//! threshold-decrypted. The plaintexts agree iff the result is the identity.

use std::collections::BTreeSet;

use rand_core::{CryptoRng, RngCore};
use thiserror::Error;

use super::chaum_pedersen::{cp_prove, cp_verify, ChaumPedersenProof};
use super::transcript::FsTranscript;
use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::elgamal::{ct_exp, ct_mul, Ciphertext};
use crate::group::{PrimeGroup, Scalar};
use crate::threshold::{
    partial_decrypt, combine, DecryptionBundle, PublicKeySet, ThresholdError, TrusteeShare,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PepError {
    #[error("blinding contribution from trustee {0} is corrupt")]
    CorruptContribution(u32),
    #[error("duplicate blinding contribution from trustee {0}")]
    DuplicateContribution(u32),
    #[error("need {needed} blinding contributions, got {got}")]
    InsufficientContributions { needed: u32, got: u32 },
    #[error("blinding contributions cancel out")]
    DegenerateBlinding,
    #[error("decryption bundle is for a different ciphertext")]
    BundleMismatch,
    #[error("decryption of blinded quotient failed: {0}")]
    Decryption(#[from] ThresholdError),
    #[error("recorded verdict disagrees with the decryption")]
    VerdictMismatch,
}

/// One trustee's blinded quotient with its proof.
pub struct PepContribution<G: PrimeGroup> {
    pub trustee_index: u32,
    pub blinded: Ciphertext<G>,
    pub proof: ChaumPedersenProof<G>,
}

impl<G: PrimeGroup> Clone for PepContribution<G> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<G: PrimeGroup> Copy for PepContribution<G> {}
impl<G: PrimeGroup> PartialEq for PepContribution<G> {
    fn eq(&self, o: &Self) -> bool {
        self.trustee_index == o.trustee_index && self.blinded == o.blinded && self.proof == o.proof
    }
}
impl<G: PrimeGroup> std::fmt::Debug for PepContribution<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PepContribution")
            .field("trustee_index", &self.trustee_index)
            .field("blinded", &self.blinded)
            .finish_non_exhaustive()
    }
}

fn contribution_context<G: PrimeGroup>(c_diff: &Ciphertext<G>, trustee: u32, context: &[u8]) -> Vec<u8> {
    let mut t = FsTranscript::new::<G>("pep-blind");
    t.absorb("context", context)
        .absorb_ciphertext("quotient", c_diff)
        .absorb("trustee", &trustee.to_be_bytes());
    t.digest().to_vec()
}

/// `c_diff^z` plus a proof that one exponent blinds both components.
pub fn pep_blind<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    trustee_index: u32,
    c_diff: &Ciphertext<G>,
    z: &Scalar<G>,
    context: &[u8],
    rng: &mut R,
) -> PepContribution<G> {
    let blinded = ct_exp(c_diff, z);
    let ctx = contribution_context(c_diff, trustee_index, context);
    let proof = cp_prove(&c_diff.c1, &blinded.c1, &c_diff.c2, &blinded.c2, z, &ctx, rng);
    PepContribution {
        trustee_index,
        blinded,
        proof,
    }
}

pub fn verify_contribution<G: PrimeGroup>(
    c_diff: &Ciphertext<G>,
    contribution: &PepContribution<G>,
    context: &[u8],
) -> bool {
    // z = 0 would force an "equal" verdict
    if contribution.blinded.c1.is_identity() && !c_diff.c1.is_identity() {
        return false;
    }
    if contribution.blinded.c2.is_identity() && !c_diff.c2.is_identity() {
        return false;
    }
    let ctx = contribution_context(c_diff, contribution.trustee_index, context);
    cp_verify(
        &c_diff.c1,
        &contribution.blinded.c1,
        &c_diff.c2,
        &contribution.blinded.c2,
        &contribution.proof,
        &ctx,
    )
}

/// Publicly re-verifiable equality verdict for a pair of ciphertexts.
pub struct PepJudgement<G: PrimeGroup> {
    pub left: Ciphertext<G>,
    pub right: Ciphertext<G>,
    pub contributions: Vec<PepContribution<G>>,
    pub combined: Ciphertext<G>,
    pub decryption: DecryptionBundle<G>,
    pub equal: bool,
}

impl<G: PrimeGroup> Clone for PepJudgement<G> {
    fn clone(&self) -> Self {
        PepJudgement {
            left: self.left,
            right: self.right,
            contributions: self.contributions.clone(),
            combined: self.combined,
            decryption: self.decryption.clone(),
            equal: self.equal,
        }
    }
}

impl<G: PrimeGroup> std::fmt::Debug for PepJudgement<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PepJudgement")
            .field("contributions", &self.contributions.len())
            .field("equal", &self.equal)
            .finish_non_exhaustive()
    }
}

impl<G: PrimeGroup> PartialEq for PepJudgement<G> {
    fn eq(&self, o: &Self) -> bool {
        self.to_bytes() == o.to_bytes()
    }
}

fn check_contributions<G: PrimeGroup>(
    public: &PublicKeySet<G>,
    c_diff: &Ciphertext<G>,
    contributions: &[PepContribution<G>],
    context: &[u8],
) -> Result<Ciphertext<G>, PepError> {
    let mut seen = BTreeSet::new();
    for c in contributions {
        if c.trustee_index == 0 || c.trustee_index > public.n {
            return Err(PepError::CorruptContribution(c.trustee_index));
        }
        if !seen.insert(c.trustee_index) {
            return Err(PepError::DuplicateContribution(c.trustee_index));
        }
        if !verify_contribution(c_diff, c, context) {
            return Err(PepError::CorruptContribution(c.trustee_index));
        }
    }
    if (seen.len() as u32) < public.k {
        return Err(PepError::InsufficientContributions {
            needed: public.k,
            got: seen.len() as u32,
        });
    }
    let combined = contributions
        .iter()
        .fold(Ciphertext::neutral(), |acc, c| ct_mul(&acc, &c.blinded));
    if combined.c1.is_identity() && !c_diff.c1.is_identity() {
        return Err(PepError::DegenerateBlinding);
    }
    Ok(combined)
}

/// Judge whether `left` and `right` encrypt the same plaintext.
pub fn pep_judge<G: PrimeGroup>(
    public: &PublicKeySet<G>,
    left: &Ciphertext<G>,
    right: &Ciphertext<G>,
    contributions: Vec<PepContribution<G>>,
    decryption: DecryptionBundle<G>,
    context: &[u8],
) -> Result<PepJudgement<G>, PepError> {
    let c_diff = left.quotient(right);
    let combined = check_contributions(public, &c_diff, &contributions, context)?;
    if decryption.ciphertext != combined {
        return Err(PepError::BundleMismatch);
    }
    decryption.verify(public)?;
    let equal = decryption.plaintext.is_identity();
    Ok(PepJudgement {
        left: *left,
        right: *right,
        contributions,
        combined,
        decryption,
        equal,
    })
}

impl<G: PrimeGroup> PepJudgement<G> {
    pub fn verify(&self, public: &PublicKeySet<G>, context: &[u8]) -> Result<(), PepError> {
        let c_diff = self.left.quotient(&self.right);
        let combined = check_contributions(public, &c_diff, &self.contributions, context)?;
        if combined != self.combined || self.decryption.ciphertext != combined {
            return Err(PepError::BundleMismatch);
        }
        self.decryption.verify(public)?;
        if self.decryption.plaintext.is_identity() != self.equal {
            return Err(PepError::VerdictMismatch);
        }
        Ok(())
    }
}

/// All trustees in `shares` blind, then the first `k` of them decrypt.
pub fn pep_run<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    public: &PublicKeySet<G>,
    shares: &[TrusteeShare<G>],
    left: &Ciphertext<G>,
    right: &Ciphertext<G>,
    context: &[u8],
    rng: &mut R,
) -> Result<PepJudgement<G>, PepError> {
    let c_diff = left.quotient(right);
    let contributions: Vec<_> = shares
        .iter()
        .map(|s| {
            let z = Scalar::random_nonzero(rng);
            pep_blind(s.trustee_index, &c_diff, &z, context, rng)
        })
        .collect();
    let combined = check_contributions(public, &c_diff, &contributions, context)?;
    let partials: Vec<_> = shares
        .iter()
        .take(public.k as usize)
        .map(|s| partial_decrypt(s, &combined, rng))
        .collect();
    let (_, bundle) = combine(public, &combined, &partials)?;
    pep_judge(public, left, right, contributions, bundle, context)
}

impl<G: PrimeGroup> Encode for PepContribution<G> {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.trustee_index).put(&self.blinded).put(&self.proof);
    }
}

impl<G: PrimeGroup> Decode for PepContribution<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(PepContribution {
            trustee_index: r.u32()?,
            blinded: r.get()?,
            proof: r.get()?,
        })
    }
}

impl<G: PrimeGroup> Encode for PepJudgement<G> {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.left)
            .put(&self.right)
            .seq(&self.contributions)
            .put(&self.combined)
            .put(&self.decryption)
            .bool(self.equal);
    }
}

impl<G: PrimeGroup> Decode for PepJudgement<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(PepJudgement {
            left: r.get()?,
            right: r.get()?,
            contributions: r.seq()?,
            combined: r.get()?,
            decryption: r.get()?,
            equal: r.bool()?,
        })
    }
}
