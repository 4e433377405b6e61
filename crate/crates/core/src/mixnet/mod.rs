//! Verifiable re-encryption mixing of ciphertext rows, chained across trustees.

mod shuffle;

use rand::seq::SliceRandom;
use rand_core::{CryptoRng, RngCore};
use thiserror::Error;

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::elgamal::{encrypt, Ciphertext};
use crate::encoding::{encode_vote, VoteIndex};
use crate::group::{Element, PrimeGroup, Scalar};

pub use shuffle::{mix_prove, mix_verify, shuffle_generators, MixProof};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MixError {
    #[error("row {row} has {got} cells, batch width is {expected}")]
    WidthMismatch { row: usize, expected: usize, got: usize },
    #[error("permutation covers {got} rows, batch has {expected}")]
    PermutationSize { expected: usize, got: usize },
    #[error("not a permutation")]
    NotAPermutation,
    #[error("re-encryption randomness does not match the batch shape")]
    RandomnessShape,
    #[error("re-encryption randomness must be non-zero")]
    ZeroRandomness,
    #[error("mix chain needs at least one stage")]
    NoStages,
    #[error("mix stage {0} does not verify")]
    StageFailed(usize),
    #[error("cannot encode plaintext cell: {0}")]
    Unencodable(String),
}

/// One row of a mix batch.
pub struct MixRow<G: PrimeGroup> {
    pub cells: Vec<Ciphertext<G>>,
}

impl<G: PrimeGroup> MixRow<G> {
    pub fn new(cells: Vec<Ciphertext<G>>) -> Self {
        MixRow { cells }
    }

    pub fn width(&self) -> usize {
        self.cells.len()
    }
}

impl<G: PrimeGroup> Clone for MixRow<G> {
    fn clone(&self) -> Self {
        MixRow {
            cells: self.cells.clone(),
        }
    }
}

impl<G: PrimeGroup> PartialEq for MixRow<G> {
    fn eq(&self, o: &Self) -> bool {
        self.cells == o.cells
    }
}

impl<G: PrimeGroup> std::fmt::Debug for MixRow<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(&self.cells).finish()
    }
}

impl<G: PrimeGroup> Encode for MixRow<G> {
    fn encode(&self, w: &mut Writer) {
        w.seq(&self.cells);
    }
}

impl<G: PrimeGroup> Decode for MixRow<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(MixRow { cells: r.seq()? })
    }
}

/// Bijection on `0..n`; `image(j)` is where element `j` goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self, MixError> {
        let mut seen = vec![false; map.len()];
        for &m in &map {
            if m >= map.len() || std::mem::replace(&mut seen[m], true) {
                return Err(MixError::NotAPermutation);
            }
        }
        Ok(Permutation(map))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn random<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(rng);
        Permutation(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self, j: usize) -> usize {
        self.0[j]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (j, &i) in self.0.iter().enumerate() {
            inv[i] = j;
        }
        Permutation(inv)
    }

    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        let inv = self.inverse();
        (0..items.len()).map(|i| items[inv.image(i)].clone()).collect()
    }
}

/// Fresh non-zero re-encryption randomness for `n` rows of width `w`.
pub fn random_rerand<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    n: usize,
    w: usize,
    rng: &mut R,
) -> Vec<Vec<Scalar<G>>> {
    (0..n)
        .map(|_| (0..w).map(|_| Scalar::random_nonzero(rng)).collect())
        .collect()
}

/// Shuffle with a random permutation and fresh randomness.
pub fn mix<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    pk: &Element<G>,
    rows: &[MixRow<G>],
    context: &[u8],
    rng: &mut R,
) -> Result<(Vec<MixRow<G>>, MixProof<G>), MixError> {
    let n = rows.len();
    let w = rows.first().map(MixRow::width).unwrap_or(0);
    let perm = Permutation::random(n, rng);
    let rerand = random_rerand(n, w, rng);
    mix_prove(pk, rows, &perm, &rerand, context, rng)
}

/// One trustee's stage of a chained mix.
pub struct MixStage<G: PrimeGroup> {
    pub rows: Vec<MixRow<G>>,
    pub proof: MixProof<G>,
}

impl<G: PrimeGroup> Clone for MixStage<G> {
    fn clone(&self) -> Self {
        MixStage {
            rows: self.rows.clone(),
            proof: self.proof.clone(),
        }
    }
}

impl<G: PrimeGroup> std::fmt::Debug for MixStage<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixStage")
            .field("rows", &self.rows.len())
            .finish_non_exhaustive()
    }
}

impl<G: PrimeGroup> PartialEq for MixStage<G> {
    fn eq(&self, o: &Self) -> bool {
        self.rows == o.rows && self.proof == o.proof
    }
}

impl<G: PrimeGroup> Encode for MixStage<G> {
    fn encode(&self, w: &mut Writer) {
        w.seq(&self.rows).put(&self.proof);
    }
}

impl<G: PrimeGroup> Decode for MixStage<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(MixStage {
            rows: r.seq()?,
            proof: r.get()?,
        })
    }
}

pub fn stage_context(context: &[u8], stage: usize) -> Vec<u8> {
    let mut c = context.to_vec();
    c.extend_from_slice(b"/stage/");
    c.extend_from_slice(&(stage as u64).to_be_bytes());
    c
}

/// `stages` successive mixes, each verified before the next one runs.
pub fn mix_chain<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    pk: &Element<G>,
    rows: &[MixRow<G>],
    stages: usize,
    context: &[u8],
    rng: &mut R,
) -> Result<(Vec<MixRow<G>>, Vec<MixStage<G>>), MixError> {
    if stages == 0 {
        return Err(MixError::NoStages);
    }
    let mut out: Vec<MixStage<G>> = Vec::with_capacity(stages);
    for s in 0..stages {
        let input = out.last().map(|st| st.rows.as_slice()).unwrap_or(rows);
        let ctx = stage_context(context, s);
        let (next, proof) = mix(pk, input, &ctx, rng)?;
        if !mix_verify(pk, input, &next, &proof, &ctx) {
            return Err(MixError::StageFailed(s));
        }
        out.push(MixStage { rows: next, proof });
    }
    let last = out.last().expect("at least one stage").rows.clone();
    Ok((last, out))
}

/// Verify a chain, naming the first failing stage.
pub fn verify_chain<G: PrimeGroup>(
    pk: &Element<G>,
    rows: &[MixRow<G>],
    stages: &[MixStage<G>],
    context: &[u8],
) -> Result<(), MixError> {
    if stages.is_empty() {
        return Err(MixError::NoStages);
    }
    let mut input = rows;
    for (s, st) in stages.iter().enumerate() {
        if !mix_verify(pk, input, &st.rows, &st.proof, &stage_context(context, s)) {
            return Err(MixError::StageFailed(s));
        }
        input = &st.rows;
    }
    Ok(())
}

/// Cell of a row before mixing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlainCell<G: PrimeGroup> {
    Vote(VoteIndex),
    VoterId(String),
    Encrypted(Ciphertext<G>),
}

/// Maps plaintext cells to group elements.
#[derive(Debug, Clone)]
pub struct PlainEncoder {
    pub vote_bound: u64,
    pub roll: Vec<String>,
}

impl PlainEncoder {
    pub fn encode<G: PrimeGroup>(&self, cell: &PlainCell<G>) -> Result<Ciphertext<G>, MixError> {
        let m = match cell {
            PlainCell::Encrypted(c) => return Ok(*c),
            PlainCell::Vote(v) => {
                encode_vote(*v, self.vote_bound).map_err(|e| MixError::Unencodable(e.to_string()))?
            }
            PlainCell::VoterId(id) => {
                let idx = self
                    .roll
                    .iter()
                    .position(|r| r == id)
                    .ok_or_else(|| MixError::Unencodable(format!("voter id {id:?} not on roll")))?;
                Element::base_pow_u64(idx as u64)
            }
        };
        Ok(Ciphertext::new(Element::identity(), m))
    }
}

/// Replace plaintext cells by the publicly recomputable encryption `(1, m)`;
/// the first mix stage re-encrypts them.
pub fn encrypt_plaintext_rows<G: PrimeGroup>(
    rows: &[Vec<PlainCell<G>>],
    encoder: &PlainEncoder,
) -> Result<Vec<MixRow<G>>, MixError> {
    rows.iter()
        .map(|r| {
            Ok(MixRow::new(
                r.iter().map(|c| encoder.encode(c)).collect::<Result<_, _>>()?,
            ))
        })
        .collect()
}

/// Same as `encrypt_plaintext_rows` but with fresh randomness per cell.
pub fn encrypt_plaintext_rows_fresh<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    pk: &Element<G>,
    rows: &[Vec<PlainCell<G>>],
    encoder: &PlainEncoder,
    rng: &mut R,
) -> Result<Vec<MixRow<G>>, MixError> {
    rows.iter()
        .map(|r| {
            let cells = r
                .iter()
                .map(|c| match c {
                    PlainCell::Encrypted(ct) => Ok(*ct),
                    other => {
                        let m = encoder.encode(other)?.c2;
                        Ok(encrypt(pk, &m, &Scalar::random_nonzero(rng)))
                    }
                })
                .collect::<Result<_, MixError>>()?;
            Ok(MixRow::new(cells))
        })
        .collect()
}

#[cfg(test)]
mod tests;
