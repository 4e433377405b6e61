//! Voter verification and the public transcript verifier.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::records::{
    AcceptedEntry, CommitEntry, DealerRecord, MixedEntry, OpenedId, PepRecord, ReceivedEntry,
    RegisteredEntry, RejectedEntry, RejectedOpening, TallyEntry,
};
use super::tally::{
    is_correct_opening, mix_accepted_context, mix_received_context, mix_rejected_context,
    opening_from_limbs, pep_mac_context, pep_vote_context, received_rows, recomputed_mac, roll_table,
    single_column_rows, OpeningFacts,
};
use super::{Election, ProtocolError};
use crate::codec::Decode;
use crate::elgamal::Ciphertext;
use crate::encoding::VoteIndex;
use crate::group::{Element, PrimeGroup};
use crate::mixnet::{verify_chain, MixRow, MixStage};
use crate::threshold::DecryptionBundle;
use crate::wbb::{ListId, Record, Transcript};

/// What the voter checked at cast time: the printed vote and id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CastCheck {
    pub voter_id: String,
    pub intended: VoteIndex,
    pub printed_vote: VoteIndex,
    pub printed_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VoterVerdict {
    Pass,
    PaperMismatch(String),
    NotAccepted,
    NotFinalized,
}

impl VoterVerdict {
    pub fn passed(&self) -> bool {
        *self == VoterVerdict::Pass
    }
}

impl fmt::Display for VoterVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VoterVerdict::Pass => f.write_str("pass"),
            VoterVerdict::PaperMismatch(why) => write!(f, "fail: paper mismatch ({why})"),
            VoterVerdict::NotAccepted => f.write_str("fail: not accepted"),
            VoterVerdict::NotFinalized => f.write_str("fail: board not finalized"),
        }
    }
}

pub fn voter_verify(check: &CastCheck, transcript: &Transcript) -> VoterVerdict {
    if check.printed_vote != check.intended {
        return VoterVerdict::PaperMismatch(format!(
            "paper 1 shows {} but {} was intended",
            check.printed_vote.0, check.intended.0
        ));
    }
    if check.printed_id != check.voter_id {
        return VoterVerdict::PaperMismatch("paper 2 shows another voter id".into());
    }
    if !transcript.is_finalized() {
        return VoterVerdict::NotFinalized;
    }
    if transcript.board().read(ListId::Accepted, &check.voter_id).is_empty() {
        VoterVerdict::NotAccepted
    } else {
        VoterVerdict::Pass
    }
}

/// Checks in the order the verifier runs them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GvStep {
    Structure,
    Setup,
    FirstMix,
    FirstDecrypt,
    RejectedDecrypt,
    Peps,
    FinalMix,
    FinalDecrypt,
    RegisteredUnique,
    CommitUnique,
    AcceptedFacts,
}

impl GvStep {
    pub fn name(&self) -> &'static str {
        match self {
            GvStep::Structure => "structure",
            GvStep::Setup => "setup",
            GvStep::FirstMix => "first-mix",
            GvStep::FirstDecrypt => "first-decrypt",
            GvStep::RejectedDecrypt => "rejected-decrypt",
            GvStep::Peps => "plaintext-equivalence",
            GvStep::FinalMix => "final-mix",
            GvStep::FinalDecrypt => "final-decrypt",
            GvStep::RegisteredUnique => "registered-unique",
            GvStep::CommitUnique => "commit-unique",
            GvStep::AcceptedFacts => "accepted-facts",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GvFailure {
    pub step: GvStep,
    pub detail: String,
}

impl fmt::Display for GvFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.step.name(), self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GvReport {
    pub received: usize,
    pub mixed: usize,
    pub accepted: Vec<String>,
    pub votes: Vec<Option<VoteIndex>>,
}

fn fail<T>(step: GvStep, detail: impl Into<String>) -> Result<T, GvFailure> {
    Err(GvFailure {
        step,
        detail: detail.into(),
    })
}

fn decode_all<T: Decode>(recs: &[Record], list: ListId) -> Result<Vec<T>, GvFailure> {
    recs.iter()
        .enumerate()
        .map(|(i, r)| {
            T::from_bytes(&r.payload).or_else(|e| fail(GvStep::Structure, format!("{list} entry {i}: {e}")))
        })
        .collect()
}

fn stages_in_order<G: PrimeGroup>(recs: &[Record], list: ListId) -> Result<Vec<MixStage<G>>, GvFailure> {
    for (i, r) in recs.iter().enumerate() {
        if r.key.as_deref() != Some(i.to_string().as_str()) {
            return fail(GvStep::Structure, format!("{list} stage {i} is out of order"));
        }
    }
    decode_all(recs, list)
}

/// Check one bundle against the ciphertext it claims to open.
fn check_bundle<G: PrimeGroup>(
    election: &Election<G>,
    step: GvStep,
    what: &str,
    bundle: &DecryptionBundle<G>,
    expected: &Ciphertext<G>,
) -> Result<(), GvFailure> {
    if bundle.ciphertext != *expected {
        return fail(step, format!("{what}: bundle is for a different ciphertext"));
    }
    bundle
        .verify(&election.params.public)
        .or_else(|e| fail(step, format!("{what}: {e}")))
}

fn check_id_claim<G: PrimeGroup>(
    election: &Election<G>,
    roll: &std::collections::HashMap<Element<G>, u32>,
    step: GvStep,
    what: &str,
    claim: Option<u32>,
    plaintext: &Element<G>,
) -> Result<(), GvFailure> {
    match claim {
        Some(i) if (i as usize) < election.roll().len() && Element::base_pow_u64(i as u64) == *plaintext => Ok(()),
        None if !roll.contains_key(plaintext) => Ok(()),
        _ => fail(step, format!("{what}: claimed voter does not match the decryption")),
    }
}

fn first_by_key<'a, T>(recs: &'a [Record], items: &'a [T]) -> BTreeMap<&'a str, &'a T> {
    let mut m = BTreeMap::new();
    for (r, e) in recs.iter().zip(items) {
        if let Some(k) = r.key.as_deref() {
            m.entry(k).or_insert(e);
        }
    }
    m
}

fn final_rows<G: PrimeGroup>(input: Vec<MixRow<G>>, stages: &[MixStage<G>]) -> Vec<MixRow<G>> {
    stages.last().map(|s| s.rows.clone()).unwrap_or(input)
}

/// Re-check everything the board asserts, using only the board.
pub fn global_verify<G: PrimeGroup>(transcript: &Transcript) -> Result<GvReport, GvFailure> {
    use GvStep::*;
    let board = transcript.board();
    if !board.is_finalized() {
        return fail(Structure, "board is not finalized");
    }
    let recs = board.records();
    let before_final = match recs.len() {
        1 => crate::wbb::genesis_head(),
        n => recs[n - 2].chain,
    };
    if recs[recs.len() - 1].payload != before_final {
        return fail(Structure, "final record does not seal the preceding head");
    }
    let election = Election::<G>::from_board(board).or_else(|e| fail(Structure, e.to_string()))?;
    let list = |l: ListId| board.read_list(l);

    let dealers: Vec<DealerRecord<G>> = decode_all(&list(ListId::Trustees), ListId::Trustees)?;
    let roll_recs = list(ListId::Roll);
    let registered_recs = list(ListId::Registered);
    let commit_recs = list(ListId::Commit);
    let registered: Vec<RegisteredEntry<G>> = decode_all(&registered_recs, ListId::Registered)?;
    let commits: Vec<CommitEntry<G>> = decode_all(&commit_recs, ListId::Commit)?;
    let received: Vec<ReceivedEntry<G>> = decode_all(&list(ListId::Received), ListId::Received)?;
    let rejected: Vec<RejectedEntry<G>> = decode_all(&list(ListId::Rejected), ListId::Rejected)?;
    let mix1 = stages_in_order::<G>(&list(ListId::MixReceived), ListId::MixReceived)?;
    let mixed: Vec<MixedEntry<G>> = decode_all(&list(ListId::Mixed), ListId::Mixed)?;
    let rej_open: Vec<RejectedOpening<G>> = decode_all(&list(ListId::RejectedOpened), ListId::RejectedOpened)?;
    let pep_recs = list(ListId::Pep);
    let peps: Vec<PepRecord<G>> = decode_all(&pep_recs, ListId::Pep)?;
    let accepted_recs = list(ListId::Accepted);
    let accepted: Vec<AcceptedEntry<G>> = decode_all(&accepted_recs, ListId::Accepted)?;
    let mix2 = stages_in_order::<G>(&list(ListId::MixAccepted), ListId::MixAccepted)?;
    let tally: Vec<TallyEntry<G>> = decode_all(&list(ListId::Tally), ListId::Tally)?;
    let [rej_open] = rej_open.as_slice() else {
        return fail(Structure, "expected exactly one rejected-opened record");
    };
    for (recs, l) in [
        (&registered_recs, ListId::Registered),
        (&commit_recs, ListId::Commit),
        (&pep_recs, ListId::Pep),
        (&accepted_recs, ListId::Accepted),
    ] {
        for r in recs.iter() {
            if r.key.as_deref().and_then(|k| election.roll_index(k)).is_none() {
                return fail(Structure, format!("{l} entry keyed by an id not on the roll"));
            }
        }
    }

    // setup
    let public = &election.params.public;
    if dealers.len() != public.n as usize {
        return fail(Setup, format!("{} dealer records for {} trustees", dealers.len(), public.n));
    }
    for (i, d) in dealers.iter().enumerate() {
        if d.dealer != i as u32 + 1 || d.commitments.len() != public.k as usize {
            return fail(Setup, format!("dealer record {i} is malformed"));
        }
    }
    for j in 0..public.k as usize {
        let prod: Element<G> = dealers.iter().map(|d| d.commitments[j]).product();
        if prod != public.coefficients[j] {
            return fail(Setup, format!("joint key coefficient {j} is not the product of the dealings"));
        }
    }
    if roll_recs.len() != election.roll().len() {
        return fail(Setup, "roll list differs from the parameters");
    }
    for (i, (r, id)) in roll_recs.iter().zip(election.roll()).enumerate() {
        let idx = u32::from_bytes(&r.payload).ok();
        if r.key.as_deref() != Some(id.as_str()) || idx != Some(i as u32) {
            return fail(Setup, format!("roll entry {i} differs from the parameters"));
        }
    }

    // first mix
    let pk = election.pk();
    for (i, r) in received.iter().enumerate() {
        if election.check_vote(r.vote).is_err() || r.e_params.len() != election.param_cells() {
            return fail(FirstMix, format!("received entry {i} is not a valid ballot"));
        }
    }
    let rows = received_rows(&election, &received).or_else(|e| fail(FirstMix, e.to_string()))?;
    verify_chain(&pk, &rows, &mix1, &mix_received_context(&election)).or_else(|e| fail(FirstMix, e.to_string()))?;
    let rows = final_rows(rows, &mix1);

    // first decryption
    if mixed.len() != rows.len() {
        return fail(FirstDecrypt, format!("{} mixed entries for {} mixed rows", mixed.len(), rows.len()));
    }
    let roll = roll_table(&election);
    let bits = election.params.limb_bits;
    let mut limb_codec = None;
    for (i, (m, row)) in mixed.iter().zip(&rows).enumerate() {
        let what = format!("mixed entry {i}");
        if m.position != i as u32 || m.e_vote != row.cells[0] {
            return fail(FirstDecrypt, format!("{what}: does not match its mixed row"));
        }
        check_bundle(&election, FirstDecrypt, &what, &m.id_bundle, &row.cells[1])?;
        check_id_claim(&election, &roll, FirstDecrypt, &what, m.voter, &m.id_bundle.plaintext)?;
        if m.param_bundles.len() != row.cells.len() - 2 || m.limbs.len() != m.param_bundles.len() {
            return fail(FirstDecrypt, format!("{what}: wrong number of parameter openings"));
        }
        for (j, ((b, limb), c)) in m.param_bundles.iter().zip(&m.limbs).zip(&row.cells[2..]).enumerate() {
            let what = format!("{what} cell {j}");
            check_bundle(&election, FirstDecrypt, &what, b, c)?;
            let ok = match limb {
                Some(l) => *l >> bits == 0 && Element::base_pow_u64(*l) == b.plaintext,
                None => limb_codec
                    .get_or_insert_with(|| election.limb_codec())
                    .decode(&b.plaintext)
                    .is_none(),
            };
            if !ok {
                return fail(FirstDecrypt, format!("{what}: claimed limb does not match the decryption"));
            }
        }
    }

    // rejected ids
    let rej_cts: Vec<Ciphertext<G>> = rejected
        .iter()
        .filter_map(|r| match r {
            RejectedEntry::Encrypted(c) => Some(*c),
            RejectedEntry::Plain(_) => None,
        })
        .collect();
    let rej_rows = single_column_rows(&rej_cts);
    verify_chain(&pk, &rej_rows, &rej_open.stages, &mix_rejected_context(&election))
        .or_else(|e| fail(RejectedDecrypt, e.to_string()))?;
    let rej_rows = final_rows(rej_rows, &rej_open.stages);
    if rej_open.opened.len() != rej_rows.len() {
        return fail(RejectedDecrypt, "opened ids do not cover the mixed rejected rows");
    }
    for (i, (OpenedId { voter, bundle }, row)) in rej_open.opened.iter().zip(&rej_rows).enumerate() {
        let what = format!("rejected id {i}");
        check_bundle(&election, RejectedDecrypt, &what, bundle, &row.cells[0])?;
        check_id_claim(&election, &roll, RejectedDecrypt, &what, *voter, &bundle.plaintext)?;
    }

    // plaintext equivalence
    // duplicates are reported by the uniqueness steps; here the first entry wins
    let reg_by_id = first_by_key(&registered_recs, &registered);
    let commit_by_id = first_by_key(&commit_recs, &commits);
    let mut pep_by_id: BTreeMap<&str, &PepRecord<G>> = BTreeMap::new();
    for (r, p) in pep_recs.iter().zip(&peps) {
        let voter = r.key.as_deref().unwrap_or_default();
        if pep_by_id.insert(voter, p).is_some() {
            return fail(Peps, format!("two judgement records for {voter}"));
        }
        let what = format!("judgement for {voter}");
        let idx = election.roll_index(voter);
        let Some(m) = mixed.get(p.position as usize).filter(|m| m.voter.is_some() && m.voter == idx) else {
            return fail(Peps, format!("{what}: refers to a row that did not open to this voter"));
        };
        let Some(commit) = commit_by_id.get(voter) else {
            return fail(Peps, format!("{what}: voter has no commit entry"));
        };
        let Some(s) = opening_from_limbs(&election, &m.limbs) else {
            return fail(Peps, format!("{what}: row has no usable opening"));
        };
        if p.vote.left != m.e_vote || p.vote.right != commit.e_vote {
            return fail(Peps, format!("{what}: vote comparison uses the wrong ciphertexts"));
        }
        if p.mac.left != recomputed_mac(&commit.e_vote, &s.a, &s.b) || p.mac.right != commit.e_mac {
            return fail(Peps, format!("{what}: MAC comparison uses the wrong ciphertexts"));
        }
        p.vote
            .verify(public, &pep_vote_context(&election, voter))
            .or_else(|e| fail(Peps, format!("{what}: vote: {e}")))?;
        p.mac
            .verify(public, &pep_mac_context(&election, voter))
            .or_else(|e| fail(Peps, format!("{what}: MAC: {e}")))?;
    }

    // final mix and decryption
    let acc_cts: Vec<Ciphertext<G>> = accepted.iter().map(|a| a.e_vote).collect();
    let acc_rows = single_column_rows(&acc_cts);
    verify_chain(&pk, &acc_rows, &mix2, &mix_accepted_context(&election)).or_else(|e| fail(FinalMix, e.to_string()))?;
    let acc_rows = final_rows(acc_rows, &mix2);
    if tally.len() != acc_rows.len() {
        return fail(FinalDecrypt, format!("{} tally entries for {} mixed rows", tally.len(), acc_rows.len()));
    }
    let mut votes = Vec::with_capacity(tally.len());
    for (i, (t, row)) in tally.iter().zip(&acc_rows).enumerate() {
        let what = format!("tally entry {i}");
        check_bundle(&election, FinalDecrypt, &what, &t.bundle, &row.cells[0])?;
        let ok = match t.vote {
            Some(v) => v.0 < election.params.vote_bound && Element::base_pow_u64(v.0) == t.bundle.plaintext,
            None => election.vote_codec().decode(&t.bundle.plaintext).is_err(),
        };
        if !ok {
            return fail(FinalDecrypt, format!("{what}: claimed vote does not match the decryption"));
        }
        votes.push(t.vote);
    }

    // uniqueness
    let unique = |recs: &[Record]| -> Option<String> {
        let mut seen = BTreeSet::new();
        recs.iter()
            .filter_map(|r| r.key.clone())
            .find(|k| !seen.insert(k.clone()))
    };
    if let Some(k) = unique(&registered_recs) {
        return fail(RegisteredUnique, format!("{k} registered twice"));
    }
    if let Some(k) = unique(&commit_recs) {
        return fail(CommitUnique, format!("{k} has two commit entries"));
    }

    // facts behind every accepted row
    if let Some(k) = unique(&accepted_recs) {
        return fail(AcceptedFacts, format!("{k} accepted twice"));
    }
    let facts = OpeningFacts::new(&election, &mixed, &rejected, &rej_open.opened);
    let mut accepted_ids = Vec::with_capacity(accepted.len());
    for (r, a) in accepted_recs.iter().zip(&accepted) {
        let voter = r.key.as_deref().unwrap_or_default();
        let idx = election.roll_index(voter).expect("checked above");
        let row = facts
            .eligible_row(idx)
            .or_else(|why| fail(AcceptedFacts, format!("{voter}: {why:?}")))?;
        let Some(reg) = reg_by_id.get(voter) else {
            return fail(AcceptedFacts, format!("{voter}: not registered"));
        };
        let opening = opening_from_limbs(&election, &mixed[row as usize].limbs);
        if !opening.is_some_and(|s| is_correct_opening(&election, reg, &s)) {
            return fail(AcceptedFacts, format!("{voter}: no correct commitment opening"));
        }
        match pep_by_id.get(voter) {
            Some(p) if p.position == row && p.accepted() => {}
            _ => return fail(AcceptedFacts, format!("{voter}: comparisons did not both pass")),
        }
        if commit_by_id.get(voter).map(|c| c.e_vote) != Some(a.e_vote) {
            return fail(AcceptedFacts, format!("{voter}: accepted ciphertext is not the committed vote"));
        }
        accepted_ids.push(voter.to_string());
    }
    for (voter, p) in &pep_by_id {
        if p.accepted() && !accepted_ids.iter().any(|a| a == voter) {
            return fail(AcceptedFacts, format!("{voter}: passed both comparisons but was not accepted"));
        }
    }

    Ok(GvReport {
        received: received.len(),
        mixed: mixed.len(),
        accepted: accepted_ids,
        votes,
    })
}

/// Parse a board and run [`global_verify`], mapping load failures to the
/// structure step.
pub fn audit_text<G: PrimeGroup>(text: &str) -> Result<GvReport, GvFailure> {
    let board = crate::wbb::Board::parse(text).or_else(|e| fail(GvStep::Structure, e.to_string()))?;
    global_verify::<G>(&board.snapshot())
}

impl From<ProtocolError> for GvFailure {
    fn from(e: ProtocolError) -> Self {
        GvFailure {
            step: GvStep::Structure,
            detail: e.to_string(),
        }
    }
}
