//! The election itself: setup, casting, receiving, tallying, verification,
//! the result rule, the coercion simulator and the attack harness.
//!
//! Everything is generic over [`PrimeGroup`]; elections on a toy group are
//! refused unless the configuration explicitly allows them.

pub mod attacks;
pub mod cast;
pub mod config;
pub mod fake_view;
pub mod mail;
pub mod outcome;
pub mod papers;
pub mod receive;
pub mod records;
pub mod setup;
pub mod tally;
pub mod verify;

#[cfg(test)]
mod tests;

use std::sync::{Arc, OnceLock};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{CodecError, Decode};
use crate::encoding::{EncodingError, LimbCodec, VoteCodec, VoteIndex};
use crate::group::{Element, PrimeGroup};
use crate::mixnet::MixError;
use crate::threshold::ThresholdError;
use crate::wbb::{Board, ListId, WbbError};

pub use config::{ElectionConfig, SelectionList, SelectionRule, TrusteeConfig};
pub use records::ElectionParams;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("config: {0}")]
    Config(String),
    #[error("group {0} is a test group; set allow_toy_group to use it")]
    ToyGroupRefused(&'static str),
    #[error("board was set up for group {found}, not {expected}")]
    GroupMismatch { expected: &'static str, found: String },
    #[error("unrecognised selection {0:?}")]
    BadSelection(String),
    #[error("voter {0:?} is not on the roll")]
    UnknownVoter(String),
    #[error("vote index {0} is not an allowed selection")]
    VoteOutOfRange(u64),
    #[error("voter {0:?} already registered")]
    DuplicateRegistration(String),
    #[error("commission did not post a commitment for {voter:?} within {steps} steps")]
    CommitTimeout { voter: String, steps: usize },
    #[error("board holds no election parameters")]
    MissingParams,
    #[error("malformed {list} entry: {detail}")]
    Malformed { list: ListId, detail: String },
    #[error("tally already ran on this board")]
    AlreadyTallied,
    #[error("need at least {needed} trustee shares, got {got}")]
    NotEnoughTrustees { needed: u32, got: usize },
    #[error("trustee share does not match the board key")]
    ForeignShare,
    #[error("paper: {0}")]
    Paper(String),
    #[error(transparent)]
    Board(#[from] WbbError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

pub(crate) fn decode_record<T: Decode>(list: ListId, payload: &[u8]) -> Result<T, ProtocolError> {
    T::from_bytes(payload).map_err(|e| ProtocolError::Malformed {
        list,
        detail: e.to_string(),
    })
}

/// Election parameters as read back from the board, with derived data.
pub struct Election<G: PrimeGroup> {
    pub params: ElectionParams<G>,
    /// SHA-256 of the parameters record; binds papers and proofs to this board.
    pub hash: [u8; 32],
    pub selections: SelectionList,
    vote_codec: OnceLock<Arc<VoteCodec<G>>>,
    limb_codec: OnceLock<Arc<LimbCodec<G>>>,
}

/// Group label of the parameters record on `board`.
pub fn board_group(board: &Board) -> Result<String, ProtocolError> {
    let rec = board
        .read_list(ListId::Params)
        .into_iter()
        .next()
        .ok_or(ProtocolError::MissingParams)?;
    records::peek_group_label(&rec.payload)
}

impl<G: PrimeGroup> Clone for Election<G> {
    fn clone(&self) -> Self {
        Election::new(self.params.clone())
    }
}

impl<G: PrimeGroup> std::fmt::Debug for Election<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Election")
            .field("name", &self.params.name)
            .field("hash", &self.hash_hex())
            .finish_non_exhaustive()
    }
}

pub(crate) fn params_hash(payload: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"postmark/election/v1");
    h.update(payload);
    h.finalize().into()
}

impl<G: PrimeGroup> Election<G> {
    pub fn new(params: ElectionParams<G>) -> Self {
        let hash = params_hash(&crate::codec::Encode::to_bytes(&params));
        let selections = SelectionList::new(&params.candidates, params.rule);
        Election {
            params,
            hash,
            selections,
            vote_codec: OnceLock::new(),
            limb_codec: OnceLock::new(),
        }
    }

    /// Reads the single parameters record from the board.
    pub fn from_board(board: &Board) -> Result<Self, ProtocolError> {
        let recs = board.read_list(ListId::Params);
        let rec = match recs.as_slice() {
            [] => return Err(ProtocolError::MissingParams),
            [r] => r,
            _ => {
                return Err(ProtocolError::Malformed {
                    list: ListId::Params,
                    detail: "more than one parameters record".into(),
                })
            }
        };
        let label = records::peek_group_label(&rec.payload)?;
        if label != G::LABEL {
            return Err(ProtocolError::GroupMismatch {
                expected: G::LABEL,
                found: label,
            });
        }
        let params: ElectionParams<G> = decode_record(ListId::Params, &rec.payload)?;
        Ok(Election::new(params))
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(self.hash)
    }

    pub fn pk(&self) -> Element<G> {
        self.params.public.public_key()
    }

    pub fn roll(&self) -> &[String] {
        &self.params.roll
    }

    pub fn roll_index(&self, voter: &str) -> Option<u32> {
        self.params.roll.iter().position(|v| v == voter).map(|i| i as u32)
    }

    pub fn vote_codec(&self) -> &VoteCodec<G> {
        self.vote_codec
            .get_or_init(|| VoteCodec::shared(self.params.vote_bound))
    }

    pub fn limb_codec(&self) -> &LimbCodec<G> {
        self.limb_codec
            .get_or_init(|| LimbCodec::shared(self.params.limb_bits))
    }

    /// Limb ciphertexts per scalar.
    pub fn limbs_per_scalar(&self) -> usize {
        crate::encoding::limb_count::<G>(self.params.limb_bits)
    }

    /// Ciphertexts in `e_Params`: limbs of `a`, `b`, `r_a`, `r_b` in that order.
    pub fn param_cells(&self) -> usize {
        4 * self.limbs_per_scalar()
    }

    pub fn check_vote(&self, v: VoteIndex) -> Result<(), ProtocolError> {
        if (v.0 as usize) < self.selections.len() && v.0 < self.params.vote_bound {
            Ok(())
        } else {
            Err(ProtocolError::VoteOutOfRange(v.0))
        }
    }

    /// Domain-separated proof context: election hash, a label, then
    /// length-prefixed parts.
    pub fn context(&self, label: &str, parts: &[&[u8]]) -> Vec<u8> {
        let mut c = Vec::with_capacity(64 + label.len());
        c.extend_from_slice(&self.hash);
        c.extend_from_slice(&(label.len() as u32).to_be_bytes());
        c.extend_from_slice(label.as_bytes());
        for p in parts {
            c.extend_from_slice(&(p.len() as u32).to_be_bytes());
            c.extend_from_slice(p);
        }
        c
    }
}
