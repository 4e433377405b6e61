//! Board payload formats, one type per list.

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::elgamal::Ciphertext;
use crate::encoding::VoteIndex;
use crate::group::{Element, PrimeGroup};
use crate::mixnet::MixStage;
use crate::pedersen::{Commitment, PedersenParams};
use crate::threshold::{DecryptionBundle, PublicKeySet};
use crate::zkp::pep::PepJudgement;

use super::config::SelectionRule;

pub const PARAMS_VERSION: u32 = 1;

/// Everything a verifier needs, posted once at setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectionParams<G: PrimeGroup> {
    pub name: String,
    pub candidates: Vec<String>,
    pub rule: SelectionRule,
    pub roll: Vec<String>,
    pub vote_bound: u64,
    pub limb_bits: u32,
    pub pedersen: PedersenParams<G>,
    pub public: PublicKeySet<G>,
}

impl<G: PrimeGroup> Encode for ElectionParams<G> {
    fn encode(&self, w: &mut Writer) {
        w.u32(PARAMS_VERSION)
            .str(G::LABEL)
            .str(&self.name)
            .seq(&self.candidates)
            .str(self.rule.as_str())
            .seq(&self.roll)
            .u64(self.vote_bound)
            .u32(self.limb_bits)
            .put(&self.pedersen)
            .put(&self.public);
    }
}

impl<G: PrimeGroup> Decode for ElectionParams<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let version = r.u32()?;
        if version != PARAMS_VERSION {
            return Err(CodecError::Invalid(format!("params version {version}")));
        }
        let label = r.str()?;
        if label != G::LABEL {
            return Err(CodecError::Invalid(format!("group {label}")));
        }
        let name = r.str()?;
        let candidates = r.seq()?;
        let rule = r.str()?;
        let rule = SelectionRule::parse(&rule)
            .ok_or_else(|| CodecError::Invalid(format!("selection rule {rule}")))?;
        Ok(ElectionParams {
            name,
            candidates,
            rule,
            roll: r.seq()?,
            vote_bound: r.u64()?,
            limb_bits: r.u32()?,
            pedersen: r.get()?,
            public: r.get()?,
        })
    }
}

pub(crate) fn peek_group_label(payload: &[u8]) -> Result<String, super::ProtocolError> {
    let mut r = Reader::new(payload);
    r.u32()
        .and_then(|_| r.str())
        .map_err(|e| super::ProtocolError::Malformed {
            list: crate::wbb::ListId::Params,
            detail: e.to_string(),
        })
}

/// A dealer's public Feldman commitments from the key generation.
#[derive(Debug, Clone, PartialEq)]
pub struct DealerRecord<G: PrimeGroup> {
    pub dealer: u32,
    pub commitments: Vec<Element<G>>,
}

impl<G: PrimeGroup> Encode for DealerRecord<G> {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.dealer).seq(&self.commitments);
    }
}

impl<G: PrimeGroup> Decode for DealerRecord<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(DealerRecord {
            dealer: r.u32()?,
            commitments: r.seq()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegisteredEntry<G: PrimeGroup> {
    pub c_a: Commitment<G>,
    pub c_b: Commitment<G>,
}

impl<G: PrimeGroup> Encode for RegisteredEntry<G> {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.c_a).put(&self.c_b);
    }
}

impl<G: PrimeGroup> Decode for RegisteredEntry<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(RegisteredEntry {
            c_a: r.get()?,
            c_b: r.get()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommitEntry<G: PrimeGroup> {
    pub e_mac: Ciphertext<G>,
    pub e_vote: Ciphertext<G>,
}

impl<G: PrimeGroup> Encode for CommitEntry<G> {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.e_mac).put(&self.e_vote);
    }
}

impl<G: PrimeGroup> Decode for CommitEntry<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(CommitEntry {
            e_mac: r.get()?,
            e_vote: r.get()?,
        })
    }
}

/// A received paper ballot: plaintext vote, encrypted voter id, and the
/// rerandomized parameter ciphertexts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedEntry<G: PrimeGroup> {
    pub vote: VoteIndex,
    pub e_voter_id: Ciphertext<G>,
    pub e_params: Vec<Ciphertext<G>>,
}

impl<G: PrimeGroup> Encode for ReceivedEntry<G> {
    fn encode(&self, w: &mut Writer) {
        w.u64(self.vote.0).put(&self.e_voter_id).seq(&self.e_params);
    }
}

impl<G: PrimeGroup> Decode for ReceivedEntry<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ReceivedEntry {
            vote: VoteIndex(r.u64()?),
            e_voter_id: r.get()?,
            e_params: r.seq()?,
        })
    }
}

/// Rejected ballots carry whichever identifier was at hand when they failed.
#[derive(Debug, Clone, PartialEq)]
pub enum RejectedEntry<G: PrimeGroup> {
    Plain(String),
    Encrypted(Ciphertext<G>),
}

impl<G: PrimeGroup> Encode for RejectedEntry<G> {
    fn encode(&self, w: &mut Writer) {
        match self {
            RejectedEntry::Plain(id) => w.u8(0).str(id),
            RejectedEntry::Encrypted(c) => w.u8(1).put(c),
        };
    }
}

impl<G: PrimeGroup> Decode for RejectedEntry<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        match r.u8()? {
            0 => Ok(RejectedEntry::Plain(r.str()?)),
            1 => Ok(RejectedEntry::Encrypted(r.get()?)),
            t => Err(CodecError::Invalid(format!("rejected tag {t}"))),
        }
    }
}

/// One row of the first mix, opened.
///
/// `voter` and `limbs` are the trustees' claims about the decrypted plaintexts;
/// `None` claims the plaintext lies outside the roll or the limb range.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedEntry<G: PrimeGroup> {
    pub position: u32,
    pub e_vote: Ciphertext<G>,
    pub voter: Option<u32>,
    pub id_bundle: DecryptionBundle<G>,
    pub limbs: Vec<Option<u64>>,
    pub param_bundles: Vec<DecryptionBundle<G>>,
}

impl<G: PrimeGroup> Encode for MixedEntry<G> {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.position)
            .put(&self.e_vote)
            .opt(&self.voter)
            .put(&self.id_bundle)
            .u32(self.limbs.len() as u32);
        for l in &self.limbs {
            w.opt(l);
        }
        w.seq(&self.param_bundles);
    }
}

impl<G: PrimeGroup> Decode for MixedEntry<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let position = r.u32()?;
        let e_vote = r.get()?;
        let voter = r.opt()?;
        let id_bundle = r.get()?;
        let n = r.u32()? as usize;
        let limbs = (0..n).map(|_| r.opt()).collect::<Result<Vec<_>, _>>()?;
        Ok(MixedEntry {
            position,
            e_vote,
            voter,
            id_bundle,
            limbs,
            param_bundles: r.seq()?,
        })
    }
}

/// Encrypted ids from the rejected list, mixed and opened.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedOpening<G: PrimeGroup> {
    pub stages: Vec<MixStage<G>>,
    pub opened: Vec<OpenedId<G>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenedId<G: PrimeGroup> {
    pub voter: Option<u32>,
    pub bundle: DecryptionBundle<G>,
}

impl<G: PrimeGroup> Encode for OpenedId<G> {
    fn encode(&self, w: &mut Writer) {
        w.opt(&self.voter).put(&self.bundle);
    }
}

impl<G: PrimeGroup> Decode for OpenedId<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(OpenedId {
            voter: r.opt()?,
            bundle: r.get()?,
        })
    }
}

impl<G: PrimeGroup> Encode for RejectedOpening<G> {
    fn encode(&self, w: &mut Writer) {
        w.seq(&self.stages).seq(&self.opened);
    }
}

impl<G: PrimeGroup> Decode for RejectedOpening<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(RejectedOpening {
            stages: r.seq()?,
            opened: r.seq()?,
        })
    }
}

/// Both plaintext-equivalence judgements for one voter.
#[derive(Debug, Clone, PartialEq)]
pub struct PepRecord<G: PrimeGroup> {
    pub position: u32,
    pub vote: PepJudgement<G>,
    pub mac: PepJudgement<G>,
}

impl<G: PrimeGroup> PepRecord<G> {
    pub fn accepted(&self) -> bool {
        self.vote.equal && self.mac.equal
    }
}

impl<G: PrimeGroup> Encode for PepRecord<G> {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.position).put(&self.vote).put(&self.mac);
    }
}

impl<G: PrimeGroup> Decode for PepRecord<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(PepRecord {
            position: r.u32()?,
            vote: r.get()?,
            mac: r.get()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedEntry<G: PrimeGroup> {
    pub e_vote: Ciphertext<G>,
}

impl<G: PrimeGroup> Encode for AcceptedEntry<G> {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.e_vote);
    }
}

impl<G: PrimeGroup> Decode for AcceptedEntry<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(AcceptedEntry { e_vote: r.get()? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TallyEntry<G: PrimeGroup> {
    pub vote: Option<VoteIndex>,
    pub bundle: DecryptionBundle<G>,
}

impl<G: PrimeGroup> Encode for TallyEntry<G> {
    fn encode(&self, w: &mut Writer) {
        w.opt(&self.vote.map(|v| v.0)).put(&self.bundle);
    }
}

impl<G: PrimeGroup> Decode for TallyEntry<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(TallyEntry {
            vote: r.opt::<u64>()?.map(VoteIndex),
            bundle: r.get()?,
        })
    }
}
