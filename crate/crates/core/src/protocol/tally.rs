//! Trustees' tally: mix, open, match, compare, mix again, decrypt.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_core::{CryptoRng, RngCore};
use rayon::prelude::*;

use super::papers::VoterSecrets;
use super::records::{
    AcceptedEntry, CommitEntry, MixedEntry, OpenedId, PepRecord, ReceivedEntry, RegisteredEntry,
    RejectedEntry, RejectedOpening, TallyEntry,
};
use super::{decode_record, Election, ProtocolError};
use crate::codec::Encode;
use crate::elgamal::{ct_exp, ct_mul, Ciphertext};
use crate::encoding::{limbs_to_scalar, ScalarLimbs, VoteIndex};
use crate::group::{Element, PrimeGroup, Scalar};
use crate::mixnet::{encrypt_plaintext_rows, mix_chain, MixRow, PlainCell, PlainEncoder};
use crate::threshold::{threshold_decrypt, DecryptionBundle, TrusteeShare};
use crate::wbb::{Board, ListId, Role};
use crate::zkp::pep::pep_run;

pub fn mix_received_context<G: PrimeGroup>(e: &Election<G>) -> Vec<u8> {
    e.context("mix/received", &[])
}

pub fn mix_rejected_context<G: PrimeGroup>(e: &Election<G>) -> Vec<u8> {
    e.context("mix/rejected", &[])
}

pub fn mix_accepted_context<G: PrimeGroup>(e: &Election<G>) -> Vec<u8> {
    e.context("mix/accepted", &[])
}

pub fn pep_vote_context<G: PrimeGroup>(e: &Election<G>, voter: &str) -> Vec<u8> {
    e.context("pep/vote", &[voter.as_bytes()])
}

pub fn pep_mac_context<G: PrimeGroup>(e: &Election<G>, voter: &str) -> Vec<u8> {
    e.context("pep/mac", &[voter.as_bytes()])
}

/// Rows of the first mix: plaintext vote as `(1, g^v)`, encrypted id, parameters.
pub fn received_rows<G: PrimeGroup>(
    election: &Election<G>,
    entries: &[ReceivedEntry<G>],
) -> Result<Vec<MixRow<G>>, ProtocolError> {
    let encoder = PlainEncoder {
        vote_bound: election.params.vote_bound,
        roll: Vec::new(),
    };
    let plain: Vec<Vec<PlainCell<G>>> = entries
        .iter()
        .map(|e| {
            let mut row = Vec::with_capacity(2 + e.e_params.len());
            row.push(PlainCell::Vote(e.vote));
            row.push(PlainCell::Encrypted(e.e_voter_id));
            row.extend(e.e_params.iter().map(|c| PlainCell::Encrypted(*c)));
            row
        })
        .collect();
    Ok(encrypt_plaintext_rows(&plain, &encoder)?)
}

pub fn single_column_rows<G: PrimeGroup>(cts: &[Ciphertext<G>]) -> Vec<MixRow<G>> {
    cts.iter().map(|c| MixRow::new(vec![*c])).collect()
}

/// Reconstructed `e_MAC` from a committed vote: `e_vote^a * (1, g^b)`.
pub fn recomputed_mac<G: PrimeGroup>(e_vote: &Ciphertext<G>, a: &Scalar<G>, b: &Scalar<G>) -> Ciphertext<G> {
    ct_mul(&ct_exp(e_vote, a), &Ciphertext::new(Element::identity(), Element::base_pow(b)))
}

/// `g^i -> i` over the roll.
pub fn roll_table<G: PrimeGroup>(election: &Election<G>) -> HashMap<Element<G>, u32> {
    (0..election.roll().len() as u32)
        .map(|i| (Element::base_pow_u64(i as u64), i))
        .collect()
}

/// The four secrets from claimed limbs, if every limb is present.
pub fn opening_from_limbs<G: PrimeGroup>(
    election: &Election<G>,
    limbs: &[Option<u64>],
) -> Option<VoterSecrets<G>> {
    let per = election.limbs_per_scalar();
    if limbs.len() != 4 * per {
        return None;
    }
    let all: Vec<u64> = limbs.iter().copied().collect::<Option<_>>()?;
    let s: Vec<Scalar<G>> = all
        .chunks(per)
        .map(|c| {
            limbs_to_scalar(&ScalarLimbs {
                limbs: c.to_vec(),
                width: election.params.limb_bits,
            })
        })
        .collect::<Result<_, _>>()
        .ok()?;
    Some(VoterSecrets {
        a: s[0],
        b: s[1],
        r_a: s[2],
        r_b: s[3],
    })
}

pub fn is_correct_opening<G: PrimeGroup>(
    election: &Election<G>,
    reg: &RegisteredEntry<G>,
    s: &VoterSecrets<G>,
) -> bool {
    let ped = &election.params.pedersen;
    ped.verify_opening(&reg.c_a, &s.a, &s.r_a) && ped.verify_opening(&reg.c_b, &s.b, &s.r_b)
}

/// Why a row or voter did not reach the accepted list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    /// Decrypted id is not a roll entry.
    IdNotOnRoll,
    /// More than one mixed row decrypted to this id.
    IdNotUnique,
    IdRejected,
    NotRegistered,
    NoCommit,
    NoCorrectOpening,
    PepVoteFailed,
    PepMacFailed,
    PepError(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipSubject {
    Row(u32),
    Voter(String),
}

#[derive(Debug, Clone, Default)]
pub struct TallyReport {
    pub mixed: usize,
    pub accepted: Vec<String>,
    pub skipped: Vec<(SkipSubject, SkipReason)>,
    pub votes: Vec<Option<VoteIndex>>,
}

impl TallyReport {
    pub fn counts(&self) -> BTreeMap<VoteIndex, u64> {
        let mut m = BTreeMap::new();
        for v in self.votes.iter().flatten() {
            *m.entry(*v).or_insert(0) += 1;
        }
        m
    }
}

/// Public facts derived from the mixed and rejected lists, shared by the
/// tally and the verifier.
pub struct OpeningFacts {
    /// Mixed rows per decrypted roll index.
    pub rows_by_voter: BTreeMap<u32, Vec<u32>>,
    /// Roll indices appearing in the rejected list, in either form.
    pub rejected: BTreeSet<u32>,
}

impl OpeningFacts {
    pub fn new<G: PrimeGroup>(
        election: &Election<G>,
        mixed: &[MixedEntry<G>],
        rejected: &[RejectedEntry<G>],
        opened: &[OpenedId<G>],
    ) -> Self {
        let mut rows_by_voter: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for m in mixed {
            if let Some(v) = m.voter {
                rows_by_voter.entry(v).or_default().push(m.position);
            }
        }
        let mut rejected_set: BTreeSet<u32> = rejected
            .iter()
            .filter_map(|r| match r {
                RejectedEntry::Plain(id) => election.roll_index(id),
                RejectedEntry::Encrypted(_) => None,
            })
            .collect();
        rejected_set.extend(opened.iter().filter_map(|o| o.voter));
        OpeningFacts {
            rows_by_voter,
            rejected: rejected_set,
        }
    }

    /// The row eligible for matching against `voter`'s commitments, if any.
    pub fn eligible_row(&self, voter: u32) -> Result<u32, SkipReason> {
        match self.rows_by_voter.get(&voter).map(Vec::as_slice) {
            None | Some([]) => Err(SkipReason::NoCorrectOpening),
            Some([_, _, ..]) => Err(SkipReason::IdNotUnique),
            Some([_]) if self.rejected.contains(&voter) => Err(SkipReason::IdRejected),
            Some([row]) => Ok(*row),
        }
    }
}

fn decode_list<T: crate::codec::Decode>(
    board: &Board,
    list: ListId,
) -> Result<Vec<T>, ProtocolError> {
    board
        .read_list(list)
        .iter()
        .map(|r| decode_record(list, &r.payload))
        .collect()
}

fn keyed<T: crate::codec::Decode>(board: &Board, list: ListId) -> Result<BTreeMap<String, T>, ProtocolError> {
    let mut out = BTreeMap::new();
    for r in board.read_list(list) {
        if let Some(k) = &r.key {
            out.entry(k.clone()).or_insert(decode_record(list, &r.payload)?);
        }
    }
    Ok(out)
}

fn row_rngs<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Vec<ChaCha20Rng> {
    (0..n)
        .map(|_| {
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            ChaCha20Rng::from_seed(seed)
        })
        .collect()
}

fn check_shares<G: PrimeGroup>(
    election: &Election<G>,
    shares: &[TrusteeShare<G>],
) -> Result<(), ProtocolError> {
    let public = &election.params.public;
    let distinct: BTreeSet<u32> = shares.iter().map(|s| s.trustee_index).collect();
    if distinct.len() != shares.len() || (shares.len() as u32) < public.k {
        return Err(ProtocolError::NotEnoughTrustees {
            needed: public.k,
            got: distinct.len(),
        });
    }
    if shares.iter().any(|s| s.public != *public || !s.is_consistent()) {
        return Err(ProtocolError::ForeignShare);
    }
    Ok(())
}

/// Run the whole tally and finalize the board. Each supplied trustee runs one
/// mix stage; decryptions use the first `k` shares. Per-ballot failures are
/// logged in the report and never abort the run.
pub fn tally<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    election: &Election<G>,
    board: &mut Board,
    shares: &[TrusteeShare<G>],
    rng: &mut R,
) -> Result<TallyReport, ProtocolError> {
    check_shares(election, shares)?;
    if board.is_finalized() || !board.read_list(ListId::MixReceived).is_empty() {
        return Err(ProtocolError::AlreadyTallied);
    }
    let public = election.params.public.clone();
    let pk = election.pk();
    let stages = shares.len();
    let mut report = TallyReport::default();

    // mix the received list
    let received: Vec<ReceivedEntry<G>> = decode_list(board, ListId::Received)?;
    let rows = received_rows(election, &received)?;
    let (mixed_rows, mix_stages) = mix_chain(&pk, &rows, stages, &mix_received_context(election), rng)?;
    for (i, st) in mix_stages.iter().enumerate() {
        board.post_as(Role::Trustee, ListId::MixReceived, Some(&i.to_string()), &st.to_bytes())?;
    }

    // open ids and parameters
    let roll = roll_table(election);
    let limb_codec = election.limb_codec();
    let rngs = row_rngs(mixed_rows.len(), rng);
    let mixed: Vec<MixedEntry<G>> = mixed_rows
        .par_iter()
        .zip(rngs)
        .enumerate()
        .map(|(pos, (row, mut r))| -> Result<MixedEntry<G>, ProtocolError> {
            let (id_plain, id_bundle) = threshold_decrypt(&public, shares, &row.cells[1], &mut r)?;
            let mut limbs = Vec::with_capacity(row.cells.len() - 2);
            let mut param_bundles = Vec::with_capacity(row.cells.len() - 2);
            for c in &row.cells[2..] {
                let (m, b) = threshold_decrypt(&public, shares, c, &mut r)?;
                limbs.push(limb_codec.decode(&m));
                param_bundles.push(b);
            }
            Ok(MixedEntry {
                position: pos as u32,
                e_vote: row.cells[0],
                voter: roll.get(&id_plain).copied(),
                id_bundle,
                limbs,
                param_bundles,
            })
        })
        .collect::<Result<_, _>>()?;
    for m in &mixed {
        board.post_as(Role::Trustee, ListId::Mixed, None, &m.to_bytes())?;
    }
    report.mixed = mixed.len();

    // open the encrypted ids of rejected ballots
    let rejected: Vec<RejectedEntry<G>> = decode_list(board, ListId::Rejected)?;
    let rej_cts: Vec<Ciphertext<G>> = rejected
        .iter()
        .filter_map(|r| match r {
            RejectedEntry::Encrypted(c) => Some(*c),
            RejectedEntry::Plain(_) => None,
        })
        .collect();
    let (rej_rows, rej_stages) = mix_chain(
        &pk,
        &single_column_rows(&rej_cts),
        stages,
        &mix_rejected_context(election),
        rng,
    )?;
    let opened: Vec<OpenedId<G>> = rej_rows
        .iter()
        .map(|row| -> Result<OpenedId<G>, ProtocolError> {
            let (m, bundle) = threshold_decrypt(&public, shares, &row.cells[0], rng)?;
            Ok(OpenedId {
                voter: roll.get(&m).copied(),
                bundle,
            })
        })
        .collect::<Result<_, _>>()?;
    let rejected_opening = RejectedOpening {
        stages: rej_stages,
        opened,
    };
    board.post_as(Role::Trustee, ListId::RejectedOpened, None, &rejected_opening.to_bytes())?;

    // match openings against commitments
    let facts = OpeningFacts::new(election, &mixed, &rejected, &rejected_opening.opened);
    for m in &mixed {
        if m.voter.is_none() {
            report
                .skipped
                .push((SkipSubject::Row(m.position), SkipReason::IdNotOnRoll));
        }
    }
    let registered: BTreeMap<String, RegisteredEntry<G>> = keyed(board, ListId::Registered)?;
    let commits: BTreeMap<String, CommitEntry<G>> = keyed(board, ListId::Commit)?;

    for (idx, voter) in election.roll().iter().enumerate() {
        let idx = idx as u32;
        let (Some(reg), Some(commit)) = (registered.get(voter), commits.get(voter)) else {
            let has_row = facts.rows_by_voter.contains_key(&idx);
            if registered.contains_key(voter) || commits.contains_key(voter) || has_row {
                let reason = if registered.contains_key(voter) {
                    SkipReason::NoCommit
                } else {
                    SkipReason::NotRegistered
                };
                report.skipped.push((SkipSubject::Voter(voter.clone()), reason));
            }
            continue;
        };
        let row = match facts.eligible_row(idx) {
            Ok(r) => r,
            Err(reason) => {
                report.skipped.push((SkipSubject::Voter(voter.clone()), reason));
                continue;
            }
        };
        let m = &mixed[row as usize];
        let Some(secrets) = opening_from_limbs(election, &m.limbs).filter(|s| is_correct_opening(election, reg, s))
        else {
            report
                .skipped
                .push((SkipSubject::Voter(voter.clone()), SkipReason::NoCorrectOpening));
            continue;
        };
        let vote_pep = pep_run(&public, shares, &m.e_vote, &commit.e_vote, &pep_vote_context(election, voter), rng);
        let mac_left = recomputed_mac(&commit.e_vote, &secrets.a, &secrets.b);
        let mac_pep = pep_run(&public, shares, &mac_left, &commit.e_mac, &pep_mac_context(election, voter), rng);
        let (vote_j, mac_j) = match (vote_pep, mac_pep) {
            (Ok(v), Ok(m)) => (v, m),
            (Err(e), _) | (_, Err(e)) => {
                report
                    .skipped
                    .push((SkipSubject::Voter(voter.clone()), SkipReason::PepError(e.to_string())));
                continue;
            }
        };
        let rec = PepRecord {
            position: row,
            vote: vote_j,
            mac: mac_j,
        };
        board.post_as(Role::Trustee, ListId::Pep, Some(voter), &rec.to_bytes())?;
        if !rec.vote.equal {
            report
                .skipped
                .push((SkipSubject::Voter(voter.clone()), SkipReason::PepVoteFailed));
            continue;
        }
        if !rec.mac.equal {
            report
                .skipped
                .push((SkipSubject::Voter(voter.clone()), SkipReason::PepMacFailed));
            continue;
        }
        let acc = AcceptedEntry {
            e_vote: commit.e_vote,
        };
        board.post_as(Role::Trustee, ListId::Accepted, Some(voter), &acc.to_bytes())?;
        report.accepted.push(voter.clone());
    }

    // final mix and decryption
    let accepted: Vec<AcceptedEntry<G>> = decode_list(board, ListId::Accepted)?;
    let acc_cts: Vec<Ciphertext<G>> = accepted.iter().map(|a| a.e_vote).collect();
    let (final_rows, final_stages) = mix_chain(
        &pk,
        &single_column_rows(&acc_cts),
        stages,
        &mix_accepted_context(election),
        rng,
    )?;
    for (i, st) in final_stages.iter().enumerate() {
        board.post_as(Role::Trustee, ListId::MixAccepted, Some(&i.to_string()), &st.to_bytes())?;
    }
    let codec = election.vote_codec();
    let rngs = row_rngs(final_rows.len(), rng);
    let tally_entries: Vec<TallyEntry<G>> = final_rows
        .par_iter()
        .zip(rngs)
        .map(|(row, mut r)| -> Result<TallyEntry<G>, ProtocolError> {
            let (m, bundle): (Element<G>, DecryptionBundle<G>) =
                threshold_decrypt(&public, shares, &row.cells[0], &mut r)?;
            Ok(TallyEntry {
                vote: codec.decode(&m).ok(),
                bundle,
            })
        })
        .collect::<Result<_, _>>()?;
    for t in &tally_entries {
        board.post_as(Role::Trustee, ListId::Tally, None, &t.to_bytes())?;
        report.votes.push(t.vote);
    }
    board.finalize()?;
    Ok(report)
}
