//! Detected error and the election result.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::records::{MixedEntry, RejectedEntry, RejectedOpening};
use super::verify::{global_verify, GvFailure, GvReport};
use super::{decode_record, Election, ProtocolError};
use crate::group::PrimeGroup;
use crate::wbb::{ListId, Transcript};

/// The outcome according to the paper record: counts per outcome label
/// (candidate, or whatever the paper count reports).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct PaperOutcome {
    pub counts: BTreeMap<String, u64>,
}

impl PaperOutcome {
    pub fn from_toml(text: &str) -> Result<Self, ProtocolError> {
        toml::from_str(text).map_err(|e| ProtocolError::Config(format!("paper outcome: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("paper outcome serializes")
    }

    /// Half the difference between the two largest counts.
    pub fn margin(&self) -> f64 {
        let mut c: Vec<u64> = self.counts.values().copied().collect();
        c.sort_unstable_by(|a, b| b.cmp(a));
        let top = c.first().copied().unwrap_or(0);
        let second = c.get(1).copied().unwrap_or(0);
        (top - second) as f64 / 2.0
    }

    pub fn winner(&self) -> Option<&str> {
        let max = self.counts.values().max()?;
        let mut tops = self.counts.iter().filter(|(_, v)| *v == max);
        let first = tops.next()?;
        tops.next().is_none().then_some(first.0.as_str())
    }
}

/// The four id sets read off a finished board.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdSets {
    pub registered: BTreeSet<String>,
    pub received: BTreeSet<String>,
    pub rejected: BTreeSet<String>,
    pub tally: BTreeSet<String>,
}

impl IdSets {
    /// `|registered ∪ received| - |tally|`, floored at zero.
    pub fn epsilon(&self) -> u64 {
        let union = self.registered.union(&self.received).count();
        union.saturating_sub(self.tally.len()) as u64
    }
}

pub fn id_sets<G: PrimeGroup>(transcript: &Transcript) -> Result<IdSets, ProtocolError> {
    let board = transcript.board();
    let election = Election::<G>::from_board(board)?;
    let name = |i: u32| election.roll().get(i as usize).cloned();
    let keys = |l: ListId| -> BTreeSet<String> { board.read_list(l).into_iter().filter_map(|r| r.key).collect() };
    let mut sets = IdSets {
        registered: keys(ListId::Registered),
        tally: keys(ListId::Accepted),
        ..Default::default()
    };
    for r in board.read_list(ListId::Mixed) {
        let m: MixedEntry<G> = decode_record(ListId::Mixed, &r.payload)?;
        sets.received.extend(m.voter.and_then(name));
    }
    for r in board.read_list(ListId::Rejected) {
        if let RejectedEntry::<G>::Plain(id) = decode_record(ListId::Rejected, &r.payload)? {
            sets.rejected.insert(id);
        }
    }
    for r in board.read_list(ListId::RejectedOpened) {
        let o: RejectedOpening<G> = decode_record(ListId::RejectedOpened, &r.payload)?;
        sets.rejected.extend(o.opened.iter().filter_map(|x| x.voter.and_then(name)));
    }
    Ok(sets)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Outcome(PaperOutcome),
    /// No outcome can be declared.
    Bottom,
}

impl Verdict {
    pub fn is_outcome(&self) -> bool {
        matches!(self, Verdict::Outcome(_))
    }
}

#[derive(Debug, Clone)]
pub struct ElectionOutcome {
    /// Electronic tally per selection string.
    pub tally: BTreeMap<String, u64>,
    pub margin: f64,
    pub epsilon: u64,
    pub d: u64,
    /// Verifying voters needed: `|roll| - (margin - d)`.
    pub theta: f64,
    pub sets: IdSets,
    pub verification: Result<GvReport, GvFailure>,
    pub verdict: Verdict,
}

/// Declare the paper outcome iff the detected error is below `d` and the
/// transcript verifies.
pub fn result<G: PrimeGroup>(transcript: &Transcript, paper: &PaperOutcome, d: u64) -> ElectionOutcome {
    let verification = global_verify::<G>(transcript);
    let sets = id_sets::<G>(transcript).unwrap_or_default();
    let epsilon = sets.epsilon();
    let mut tally = BTreeMap::new();
    let mut roll_len = 0usize;
    if let Ok(election) = Election::<G>::from_board(transcript.board()) {
        roll_len = election.roll().len();
        if let Ok(rep) = &verification {
            for v in rep.votes.iter() {
                let label = v
                    .and_then(|v| election.selections.vote_string(v))
                    .unwrap_or_else(|| "invalid".to_string());
                *tally.entry(label).or_insert(0) += 1;
            }
        }
    }
    let margin = paper.margin();
    let verdict = if epsilon < d && verification.is_ok() {
        Verdict::Outcome(paper.clone())
    } else {
        Verdict::Bottom
    };
    ElectionOutcome {
        tally,
        margin,
        epsilon,
        d,
        theta: roll_len as f64 - (margin - d as f64),
        sets,
        verification,
        verdict,
    }
}

impl ElectionOutcome {
    pub fn report(&self) -> String {
        let mut s = String::new();
        let v = match &self.verdict {
            Verdict::Outcome(_) => "outcome",
            Verdict::Bottom => "bottom",
        };
        let _ = writeln!(s, "verdict = \"{v}\"");
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "margin = {}", self.margin);
        let _ = writeln!(s, "theta = {}", self.theta);
        let gv = match &self.verification {
            Ok(_) => "pass".to_string(),
            Err(f) => format!("fail at {f}"),
        };
        let _ = writeln!(s, "global_verify = {gv:?}");
        let list = |set: &BTreeSet<String>| set.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "registered = [{}]", list(&self.sets.registered));
        let _ = writeln!(s, "received = [{}]", list(&self.sets.received));
        let _ = writeln!(s, "rejected = [{}]", list(&self.sets.rejected));
        let _ = writeln!(s, "tallied = [{}]", list(&self.sets.tally));
        let _ = writeln!(s, "\n[tally]");
        for (k, n) in &self.tally {
            let _ = writeln!(s, "{k:?} = {n}");
        }
        if let Verdict::Outcome(p) = &self.verdict {
            let _ = writeln!(s, "\n[outcome]");
            for (k, n) in &p.counts {
                let _ = writeln!(s, "{k:?} = {n}");
            }
        }
        s
    }
}
