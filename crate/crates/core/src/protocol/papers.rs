//! Paper artifacts and their byte-exact payloads.
//!
//! ```text
//! POSTMARK1|<election-hash>|<vote-index>|<vote-string>|<hex(e_Params)>|<hex(PoKs)>
//! POSTMARK2|<election-hash>|<voter-id>
//! ```
//!
//! Hashes and ciphertext blobs are lowercase hex; ciphertext and proof blobs
//! use the board codec (`u32` count, then fixed-size items).

use super::{Election, ProtocolError};
use crate::codec::{Decode, Encode, Reader, Writer};
use crate::elgamal::Ciphertext;
use crate::encoding::VoteIndex;
use crate::group::{PrimeGroup, Scalar};
use crate::zkp::{pok_verify, PokCiphertext};

pub const PAPER1_TAG: &str = "POSTMARK1";
pub const PAPER2_TAG: &str = "POSTMARK2";

fn bad(msg: impl Into<String>) -> ProtocolError {
    ProtocolError::Paper(msg.into())
}

fn parse_hash(s: &str) -> Result<[u8; 32], ProtocolError> {
    let v = hex::decode(s).map_err(|_| bad("election hash is not hex"))?;
    v.try_into().map_err(|_| bad("election hash is not 32 bytes"))
}

fn canonical_hex(s: &str) -> bool {
    s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

/// Context for the proof on parameter cell `cell`.
pub fn param_context<G: PrimeGroup>(election: &Election<G>, cell: usize) -> Vec<u8> {
    election.context("paper1/param", &[&(cell as u32).to_be_bytes()])
}

/// The anonymous paper: the plaintext vote and the encrypted MAC key and
/// commitment randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct Paper1<G: PrimeGroup> {
    pub election_hash: [u8; 32],
    pub vote: VoteIndex,
    pub vote_string: String,
    pub e_params: Vec<Ciphertext<G>>,
    pub proofs: Vec<PokCiphertext<G>>,
}

impl<G: PrimeGroup> Paper1<G> {
    pub fn payload(&self) -> String {
        let mut ct = Writer::new();
        ct.seq(&self.e_params);
        let mut pf = Writer::new();
        pf.seq(&self.proofs);
        format!(
            "{PAPER1_TAG}|{}|{}|{}|{}|{}",
            hex::encode(self.election_hash),
            self.vote.0,
            self.vote_string,
            hex::encode(ct.finish()),
            hex::encode(pf.finish())
        )
    }

    /// Grammar-level parse; [`Paper1::check`] validates against an election.
    pub fn parse(payload: &str) -> Result<Self, ProtocolError> {
        let fields: Vec<&str> = payload.trim_end_matches('\n').split('|').collect();
        let [tag, hash, vote, vote_string, cts, pfs] = fields.as_slice() else {
            return Err(bad(format!("paper 1 has {} fields, expected 6", fields.len())));
        };
        if *tag != PAPER1_TAG {
            return Err(bad(format!("unexpected tag {tag:?}")));
        }
        if vote.is_empty() || !vote.bytes().all(|b| b.is_ascii_digit()) || (vote.len() > 1 && vote.starts_with('0')) {
            return Err(bad("vote index is not a canonical decimal"));
        }
        let vote = VoteIndex(vote.parse().map_err(|_| bad("vote index overflows"))?);
        if !canonical_hex(hash) || !canonical_hex(cts) || !canonical_hex(pfs) {
            return Err(bad("hex fields must be lowercase"));
        }
        let blob = |s: &str| hex::decode(s).map_err(|_| bad("bad hex blob"));
        let e_params = Vec::<Ciphertext<G>>::from_bytes(&blob(cts)?)
            .map_err(|e| bad(format!("ciphertexts: {e}")))?;
        let proofs = Vec::<PokCiphertext<G>>::from_bytes(&blob(pfs)?)
            .map_err(|e| bad(format!("proofs: {e}")))?;
        Ok(Paper1 {
            election_hash: parse_hash(hash)?,
            vote,
            vote_string: vote_string.to_string(),
            e_params,
            proofs,
        })
    }

    /// Everything a receiver can check without secrets: election, vote
    /// grammar, cell count, and every proof of knowledge.
    pub fn check(&self, election: &Election<G>) -> Result<(), ProtocolError> {
        if self.election_hash != election.hash {
            return Err(bad("paper belongs to another election"));
        }
        election.check_vote(self.vote)?;
        if election.selections.vote_string(self.vote).as_deref() != Some(self.vote_string.as_str()) {
            return Err(bad("printed selection does not match vote index"));
        }
        if self.e_params.len() != election.param_cells() || self.proofs.len() != self.e_params.len() {
            return Err(bad(format!(
                "expected {} parameter ciphertexts with proofs",
                election.param_cells()
            )));
        }
        let pk = election.pk();
        for (i, (c, p)) in self.e_params.iter().zip(&self.proofs).enumerate() {
            if !pok_verify(&pk, c, p, &param_context(election, i)) {
                return Err(bad(format!("proof on parameter cell {i} fails")));
            }
        }
        Ok(())
    }

    /// What a person reads off the paper.
    pub fn render(&self) -> String {
        format!(
            "BALLOT\nselection: {}\nindex: {}\n\n{}\n",
            self.vote_string,
            self.vote.0,
            self.payload()
        )
    }
}

/// The identity paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paper2 {
    pub election_hash: [u8; 32],
    pub voter_id: String,
}

impl Paper2 {
    pub fn payload(&self) -> String {
        format!("{PAPER2_TAG}|{}|{}", hex::encode(self.election_hash), self.voter_id)
    }

    pub fn parse(payload: &str) -> Result<Self, ProtocolError> {
        let fields: Vec<&str> = payload.trim_end_matches('\n').split('|').collect();
        let [tag, hash, id] = fields.as_slice() else {
            return Err(bad(format!("paper 2 has {} fields, expected 3", fields.len())));
        };
        if *tag != PAPER2_TAG {
            return Err(bad(format!("unexpected tag {tag:?}")));
        }
        if !canonical_hex(hash) {
            return Err(bad("hex fields must be lowercase"));
        }
        if id.is_empty() {
            return Err(bad("empty voter id"));
        }
        Ok(Paper2 {
            election_hash: parse_hash(hash)?,
            voter_id: id.to_string(),
        })
    }

    pub fn render(&self) -> String {
        format!("VOTER\nid: {}\n\n{}\n", self.voter_id, self.payload())
    }
}

/// Pulls the payload line back out of a rendered paper (or accepts a bare payload).
pub fn payload_line<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    text.lines().map(str::trim).find(|l| l.starts_with(tag) && l[tag.len()..].starts_with('|'))
}

/// The secrets a voter's device samples; never posted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoterSecrets<G: PrimeGroup> {
    pub a: Scalar<G>,
    pub b: Scalar<G>,
    pub r_a: Scalar<G>,
    pub r_b: Scalar<G>,
}

impl<G: PrimeGroup> VoterSecrets<G> {
    pub fn as_array(&self) -> [Scalar<G>; 4] {
        [self.a, self.b, self.r_a, self.r_b]
    }
}

impl<G: PrimeGroup> Encode for VoterSecrets<G> {
    fn encode(&self, w: &mut Writer) {
        w.scalar(&self.a).scalar(&self.b).scalar(&self.r_a).scalar(&self.r_b);
    }
}

impl<G: PrimeGroup> Decode for VoterSecrets<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, crate::codec::CodecError> {
        Ok(VoterSecrets {
            a: r.scalar()?,
            b: r.scalar()?,
            r_a: r.scalar()?,
            r_b: r.scalar()?,
        })
    }
}
