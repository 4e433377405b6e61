//! Casting: the voter's device and the election commission's commit step.

use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_core::{CryptoRng, RngCore};

use super::fake_view::VoterView;
use super::papers::{param_context, Paper1, Paper2, VoterSecrets};
use super::records::{CommitEntry, RegisteredEntry};
use super::{decode_record, Election, ProtocolError};
use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::elgamal::{ct_mul, encrypt, encrypt_exponent, rerandomize, Ciphertext};
use crate::encoding::{mac_compute, scalar_to_limbs, VoteIndex};
use crate::group::{Element, PrimeGroup, Scalar};
use crate::wbb::{Board, ListId, Role, WbbError};
use crate::zkp::{pok_prove, pok_verify, PokCiphertext};

/// Scheduler steps the device waits for the commission's commit post.
pub const COMMIT_WAIT_STEPS: usize = 16;

/// What the device sends to the commission.
#[derive(Debug, Clone, PartialEq)]
pub struct Submission<G: PrimeGroup> {
    pub voter_id: String,
    pub e_mac: Ciphertext<G>,
    pub e_vote: Ciphertext<G>,
    pub pok_mac: PokCiphertext<G>,
    pub pok_vote: PokCiphertext<G>,
}

impl<G: PrimeGroup> Encode for Submission<G> {
    fn encode(&self, w: &mut Writer) {
        w.str(&self.voter_id)
            .put(&self.e_mac)
            .put(&self.e_vote)
            .put(&self.pok_mac)
            .put(&self.pok_vote);
    }
}

impl<G: PrimeGroup> Decode for Submission<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Submission {
            voter_id: r.str()?,
            e_mac: r.get()?,
            e_vote: r.get()?,
            pok_mac: r.get()?,
            pok_vote: r.get()?,
        })
    }
}

pub fn submission_context<G: PrimeGroup>(election: &Election<G>, voter: &str, what: &str) -> Vec<u8> {
    election.context("submit", &[voter.as_bytes(), what.as_bytes()])
}

/// Why the commission refused a submission.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EcReject {
    #[error("voter not on roll")]
    NotOnRoll,
    #[error("proof of knowledge fails")]
    BadProof,
    #[error("commit already posted")]
    Duplicate,
    #[error("board refused the post: {0}")]
    Board(String),
}

/// Validate a submission and post the rerandomized pair.
pub fn cast_ec<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    election: &Election<G>,
    board: &mut Board,
    sub: &Submission<G>,
    rng: &mut R,
) -> Result<CommitEntry<G>, EcReject> {
    let entry = check_submission(election, board, sub)?;
    let pk = election.pk();
    let entry = CommitEntry {
        e_mac: rerandomize(&pk, &entry.e_mac, &Scalar::random_nonzero(rng)),
        e_vote: rerandomize(&pk, &entry.e_vote, &Scalar::random_nonzero(rng)),
    };
    post_commit(board, &sub.voter_id, &entry)?;
    Ok(entry)
}

fn check_submission<G: PrimeGroup>(
    election: &Election<G>,
    board: &Board,
    sub: &Submission<G>,
) -> Result<CommitEntry<G>, EcReject> {
    if election.roll_index(&sub.voter_id).is_none() {
        return Err(EcReject::NotOnRoll);
    }
    let pk = election.pk();
    let ok_mac = pok_verify(&pk, &sub.e_mac, &sub.pok_mac, &submission_context(election, &sub.voter_id, "mac"));
    let ok_vote = pok_verify(&pk, &sub.e_vote, &sub.pok_vote, &submission_context(election, &sub.voter_id, "vote"));
    if !(ok_mac && ok_vote) {
        return Err(EcReject::BadProof);
    }
    if !board.read(ListId::Commit, &sub.voter_id).is_empty() {
        return Err(EcReject::Duplicate);
    }
    Ok(CommitEntry {
        e_mac: sub.e_mac,
        e_vote: sub.e_vote,
    })
}

fn post_commit<G: PrimeGroup>(board: &mut Board, voter: &str, entry: &CommitEntry<G>) -> Result<(), EcReject> {
    match board.post_as(Role::Commission, ListId::Commit, Some(voter), &entry.to_bytes()) {
        Ok(_) => Ok(()),
        Err(WbbError::DuplicateKey { .. }) => Err(EcReject::Duplicate),
        Err(e) => Err(EcReject::Board(e.to_string())),
    }
}

/// A corrupted commission's treatment of one voter.
#[derive(Debug, Clone, PartialEq)]
pub enum EcMisbehaviour<G: PrimeGroup> {
    /// Never posts the commit.
    Withhold,
    /// Posts `Enc(g^v_cheat)` and shifts the MAC by `slope_guess * (v_cheat - known_vote)`.
    /// The commission is granted knowledge of the true vote; it still lacks `a`.
    Substitute {
        v_cheat: VoteIndex,
        known_vote: VoteIndex,
        slope_guess: Scalar<G>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EcEvent {
    Posted(String),
    Dropped { voter: String, reason: EcReject },
    Withheld(String),
    Substituted(String),
}

/// The commission's casting-phase state: an inbox worked off one item per step.
pub struct Commission<G: PrimeGroup> {
    inbox: VecDeque<Submission<G>>,
    pub misbehaviour: BTreeMap<String, EcMisbehaviour<G>>,
    pub log: Vec<EcEvent>,
    rng: ChaCha20Rng,
}

impl<G: PrimeGroup> Commission<G> {
    pub fn new(seed: u64) -> Self {
        Commission {
            inbox: VecDeque::new(),
            misbehaviour: BTreeMap::new(),
            log: Vec::new(),
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn submit(&mut self, sub: Submission<G>) {
        self.inbox.push_back(sub);
    }

    pub fn pending(&self) -> usize {
        self.inbox.len()
    }

    /// Handle the oldest submission, if any.
    pub fn step(&mut self, election: &Election<G>, board: &mut Board) -> Option<EcEvent> {
        let sub = self.inbox.pop_front()?;
        let ev = match self.misbehaviour.get(&sub.voter_id).cloned() {
            None => match cast_ec(election, board, &sub, &mut self.rng) {
                Ok(_) => EcEvent::Posted(sub.voter_id.clone()),
                Err(reason) => EcEvent::Dropped {
                    voter: sub.voter_id.clone(),
                    reason,
                },
            },
            Some(EcMisbehaviour::Withhold) => EcEvent::Withheld(sub.voter_id.clone()),
            Some(EcMisbehaviour::Substitute {
                v_cheat,
                known_vote,
                slope_guess,
            }) => {
                let pk = election.pk();
                let delta = Scalar::from_u64(v_cheat.0) - Scalar::from_u64(known_vote.0);
                let shift = encrypt(&pk, &Element::base_pow(&(slope_guess * delta)), &Scalar::random_nonzero(&mut self.rng));
                let entry = CommitEntry {
                    e_mac: ct_mul(&sub.e_mac, &shift),
                    e_vote: encrypt_exponent(&pk, &Scalar::from_u64(v_cheat.0), &Scalar::random_nonzero(&mut self.rng)),
                };
                match post_commit(board, &sub.voter_id, &entry) {
                    Ok(()) => EcEvent::Substituted(sub.voter_id.clone()),
                    Err(reason) => EcEvent::Dropped {
                        voter: sub.voter_id.clone(),
                        reason,
                    },
                }
            }
        };
        self.log.push(ev.clone());
        Some(ev)
    }
}

/// A corrupted device's treatment of the paper parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeviceBehaviour {
    #[default]
    Honest,
    /// Prints encryptions of unrelated values instead of the committed secrets.
    BogusOpenings,
}

#[derive(Debug, Clone)]
pub struct CastOutcome<G: PrimeGroup> {
    pub secrets: VoterSecrets<G>,
    pub paper1: Paper1<G>,
    pub paper2: Paper2,
    pub receipt: String,
    pub view: VoterView<G>,
}

/// Encrypt the four secrets limb by limb, with proofs of knowledge.
pub fn encrypt_params<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    election: &Election<G>,
    secrets: &VoterSecrets<G>,
    rng: &mut R,
) -> Result<(Vec<Ciphertext<G>>, Vec<Scalar<G>>, Vec<PokCiphertext<G>>), ProtocolError> {
    let pk = election.pk();
    let mut cts = Vec::with_capacity(election.param_cells());
    let mut rs = Vec::with_capacity(election.param_cells());
    let mut proofs = Vec::with_capacity(election.param_cells());
    for s in secrets.as_array() {
        for limb in scalar_to_limbs(&s, election.params.limb_bits)?.limbs {
            let m = Scalar::from_u64(limb);
            let r = Scalar::random_nonzero(rng);
            let c = encrypt_exponent(&pk, &m, &r);
            proofs.push(pok_prove(&pk, &c, &m, &r, &param_context(election, cts.len()), rng));
            cts.push(c);
            rs.push(r);
        }
    }
    Ok((cts, rs, proofs))
}

pub fn random_secrets<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> VoterSecrets<G> {
    VoterSecrets {
        a: Scalar::random_nonzero(rng),
        b: Scalar::random_nonzero(rng),
        r_a: Scalar::random_nonzero(rng),
        r_b: Scalar::random_nonzero(rng),
    }
}

/// The device side of casting. Registers commitments, hands the encrypted
/// vote and MAC to the commission, waits for the commit post, then prints.
pub fn cast_device<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    election: &Election<G>,
    board: &mut Board,
    ec: &mut Commission<G>,
    voter_id: &str,
    vote: VoteIndex,
    behaviour: DeviceBehaviour,
    rng: &mut R,
) -> Result<CastOutcome<G>, ProtocolError> {
    if election.roll_index(voter_id).is_none() {
        return Err(ProtocolError::UnknownVoter(voter_id.to_string()));
    }
    election.check_vote(vote)?;
    let secrets = random_secrets::<G, _>(rng);
    let ped = &election.params.pedersen;
    let reg = RegisteredEntry {
        c_a: ped.commit(&secrets.a, &secrets.r_a),
        c_b: ped.commit(&secrets.b, &secrets.r_b),
    };
    match board.post_as(Role::Device, ListId::Registered, Some(voter_id), &reg.to_bytes()) {
        Ok(_) => {}
        Err(WbbError::DuplicateKey { .. }) => {
            return Err(ProtocolError::DuplicateRegistration(voter_id.to_string()))
        }
        Err(e) => return Err(e.into()),
    }

    let pk = election.pk();
    let mac = mac_compute(&secrets.a, &secrets.b, vote);
    let vote_s = Scalar::from_u64(vote.0);
    let r_mac = Scalar::random_nonzero(rng);
    let r_vote = Scalar::random_nonzero(rng);
    let e_mac = encrypt_exponent(&pk, &mac, &r_mac);
    let e_vote = encrypt_exponent(&pk, &vote_s, &r_vote);
    let sub = Submission {
        voter_id: voter_id.to_string(),
        e_mac,
        e_vote,
        pok_mac: pok_prove(&pk, &e_mac, &mac, &r_mac, &submission_context(election, voter_id, "mac"), rng),
        pok_vote: pok_prove(&pk, &e_vote, &vote_s, &r_vote, &submission_context(election, voter_id, "vote"), rng),
    };

    let printed = match behaviour {
        DeviceBehaviour::Honest => secrets,
        DeviceBehaviour::BogusOpenings => random_secrets::<G, _>(rng),
    };
    let (e_params, param_randomness, proofs) = encrypt_params(election, &printed, rng)?;

    ec.submit(sub);
    wait_for_commit(election, board, ec, voter_id)?;

    let vote_string = election
        .selections
        .vote_string(vote)
        .ok_or(ProtocolError::VoteOutOfRange(vote.0))?;
    let paper1 = Paper1 {
        election_hash: election.hash,
        vote,
        vote_string,
        e_params,
        proofs,
    };
    let paper2 = Paper2 {
        election_hash: election.hash,
        voter_id: voter_id.to_string(),
    };
    let view = VoterView {
        voter_id: voter_id.to_string(),
        secrets,
        vote,
        mac,
        e_vote,
        r_vote,
        e_mac,
        r_mac,
        registered: reg,
        e_params: paper1.e_params.clone(),
        param_randomness,
        param_proofs: paper1.proofs.clone(),
    };
    Ok(CastOutcome {
        secrets,
        paper1,
        paper2,
        receipt: voter_id.to_string(),
        view,
    })
}

/// Step the commission until the commit for `voter_id` appears.
pub fn wait_for_commit<G: PrimeGroup>(
    election: &Election<G>,
    board: &mut Board,
    ec: &mut Commission<G>,
    voter_id: &str,
) -> Result<CommitEntry<G>, ProtocolError> {
    for _ in 0..COMMIT_WAIT_STEPS {
        if let Some(rec) = board.read(ListId::Commit, voter_id).first() {
            return decode_record(ListId::Commit, &rec.payload);
        }
        ec.step(election, board);
    }
    if let Some(rec) = board.read(ListId::Commit, voter_id).first() {
        return decode_record(ListId::Commit, &rec.payload);
    }
    Err(ProtocolError::CommitTimeout {
        voter: voter_id.to_string(),
        steps: COMMIT_WAIT_STEPS,
    })
}
