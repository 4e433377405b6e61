//! Receiving paper ballots at the commission.

use std::collections::{BTreeMap, BTreeSet};

use rand_core::{CryptoRng, RngCore};

use super::mail::MailPiece;
use super::papers::{Paper1, Paper2};
use super::records::{ReceivedEntry, RejectedEntry};
use super::setup::DoubleEnvelope;
use super::{Election, ProtocolError};
use crate::codec::Encode;
use crate::elgamal::{rerandomize, Ciphertext};
use crate::group::{PrimeGroup, Scalar};
use crate::mixnet::Permutation;
use crate::wbb::{Board, ListId, Role};

/// What happened to each ballot. Entries after the join carry no identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReceiveEvent {
    /// Identity check failed; the plaintext id went to the rejected list.
    IdentityRejected { voter: String, reason: String },
    Joined,
    Paper2Destroyed,
    BatchShuffled(usize),
    /// Paper 1 failed its checks; the encrypted id went to the rejected list.
    Paper1Rejected { reason: String },
    Posted,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReceiveReport {
    pub received: usize,
    pub rejected_plain: Vec<String>,
    pub rejected_encrypted: usize,
    pub events: Vec<ReceiveEvent>,
}

/// Run the receiving protocol on a batch of arrived mail.
pub fn process_vote<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    election: &Election<G>,
    pieces: &[MailPiece],
    envelopes: &[DoubleEnvelope<G>],
    board: &mut Board,
    rng: &mut R,
) -> Result<ReceiveReport, ProtocolError> {
    let envelopes: BTreeMap<&str, &DoubleEnvelope<G>> =
        envelopes.iter().map(|d| (d.voter_id.as_str(), d)).collect();
    let pk = election.pk();
    let mut report = ReceiveReport::default();
    let mut used: BTreeSet<String> = BTreeSet::new();

    // outer envelope opened, only paper 2 removed
    let mut joined: Vec<(String, Ciphertext<G>)> = Vec::new();
    for piece in pieces {
        let voter = match Paper2::parse(&piece.paper2) {
            Err(e) => Err((piece.outer_identity.clone(), e.to_string())),
            Ok(p2) if p2.election_hash != election.hash => {
                Err((p2.voter_id, "paper 2 belongs to another election".to_string()))
            }
            Ok(p2) if p2.voter_id != piece.outer_identity => {
                Err((p2.voter_id, "id does not match the outer envelope".to_string()))
            }
            Ok(p2) => match envelopes.get(p2.voter_id.as_str()) {
                Some(_) if election.roll_index(&p2.voter_id).is_some() => Ok(p2.voter_id),
                _ => Err((p2.voter_id, "not on the roll".to_string())),
            },
        };
        match voter {
            Err((voter, reason)) => {
                post_rejected::<G>(board, &RejectedEntry::Plain(voter.clone()))?;
                report.rejected_plain.push(voter.clone());
                report.events.push(ReceiveEvent::IdentityRejected { voter, reason });
            }
            Ok(voter) => {
                let env = envelopes[voter.as_str()];
                // a second envelope for the same id is generated on demand
                let e_id = if !used.insert(voter) {
                    rerandomize(&pk, &env.e_voter_id, &Scalar::random_nonzero(rng))
                } else {
                    env.e_voter_id
                };
                joined.push((piece.paper1.clone(), e_id));
                report.events.push(ReceiveEvent::Joined);
                report.events.push(ReceiveEvent::Paper2Destroyed);
            }
        }
    }

    let perm = Permutation::random(joined.len(), rng);
    let joined = perm.apply(&joined);
    report.events.push(ReceiveEvent::BatchShuffled(joined.len()));

    for (paper1, e_id) in joined {
        let checked = Paper1::<G>::parse(&paper1).and_then(|p| p.check(election).map(|_| p));
        match checked {
            Err(e) => {
                post_rejected(board, &RejectedEntry::Encrypted(e_id))?;
                report.rejected_encrypted += 1;
                report.events.push(ReceiveEvent::Paper1Rejected { reason: e.to_string() });
            }
            Ok(p) => {
                let entry = ReceivedEntry {
                    vote: p.vote,
                    e_voter_id: e_id,
                    e_params: p
                        .e_params
                        .iter()
                        .map(|c| rerandomize(&pk, c, &Scalar::random_nonzero(rng)))
                        .collect(),
                };
                board.post_as(Role::Commission, ListId::Received, None, &entry.to_bytes())?;
                report.received += 1;
                report.events.push(ReceiveEvent::Posted);
            }
        }
    }
    Ok(report)
}

fn post_rejected<G: PrimeGroup>(board: &mut Board, entry: &RejectedEntry<G>) -> Result<(), ProtocolError> {
    board.post_as(Role::Commission, ListId::Rejected, None, &entry.to_bytes())?;
    Ok(())
}
