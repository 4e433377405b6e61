//! Simulated postal channel. Every action on a piece is logged.

use serde::{Deserialize, Serialize};

use super::papers::Paper1;
use super::{Election, ProtocolError};
use crate::encoding::VoteIndex;
use crate::group::PrimeGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MailState {
    InTransit,
    Delivered,
    Lost,
    /// Arrived, but paper 1 was swapped on the way.
    Substituted,
}

impl MailState {
    pub fn arrived(&self) -> bool {
        matches!(self, MailState::Delivered | MailState::Substituted)
    }
}

/// Outer envelope addressed from `outer_identity`, holding paper 1 in an
/// inner envelope and paper 2 loose.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MailPiece {
    pub id: u64,
    pub outer_identity: String,
    pub paper1: String,
    pub paper2: String,
    pub state: MailState,
}

impl MailPiece {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("mail piece serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ProtocolError> {
        toml::from_str(text).map_err(|e| ProtocolError::Paper(format!("mail piece: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MailAction {
    Sent,
    Delivered,
    Lost,
    Substituted { vote: VoteIndex },
    /// A piece the adversary put into the post.
    Injected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MailEvent {
    pub piece: u64,
    pub action: MailAction,
}

#[derive(Debug, Clone, Default)]
pub struct PostalChannel {
    pieces: Vec<MailPiece>,
    pub log: Vec<MailEvent>,
}

impl PostalChannel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuild a channel from stored pieces, with an empty log.
    pub fn from_pieces(mut pieces: Vec<MailPiece>) -> Self {
        pieces.sort_by_key(|p| p.id);
        PostalChannel { pieces, log: Vec::new() }
    }

    fn record(&mut self, piece: u64, action: MailAction) {
        self.log.push(MailEvent { piece, action });
    }

    fn piece_mut(&mut self, id: u64) -> Result<&mut MailPiece, ProtocolError> {
        self.pieces
            .iter_mut()
            .find(|p| p.id == id)
            .ok_or_else(|| ProtocolError::Paper(format!("no mail piece {id}")))
    }

    pub fn send(&mut self, identity: &str, paper1: String, paper2: String) -> u64 {
        let id = self.next_id();
        self.pieces.push(MailPiece {
            id,
            outer_identity: identity.to_string(),
            paper1,
            paper2,
            state: MailState::InTransit,
        });
        self.record(id, MailAction::Sent);
        id
    }

    pub fn deliver(&mut self, id: u64) -> Result<(), ProtocolError> {
        let p = self.piece_mut(id)?;
        if p.state == MailState::InTransit {
            p.state = MailState::Delivered;
            self.record(id, MailAction::Delivered);
        }
        Ok(())
    }

    pub fn lose(&mut self, id: u64) -> Result<(), ProtocolError> {
        let p = self.piece_mut(id)?;
        p.state = MailState::Lost;
        self.record(id, MailAction::Lost);
        Ok(())
    }

    /// Rewrite the plaintext vote on paper 1 and deliver. The parameter
    /// ciphertexts are left alone: without the secrets nothing consistent can
    /// replace them.
    pub fn substitute_paper1<G: PrimeGroup>(
        &mut self,
        id: u64,
        election: &Election<G>,
        vote: VoteIndex,
    ) -> Result<(), ProtocolError> {
        let p = self.piece_mut(id)?;
        p.paper1 = substitute_vote(&p.paper1, election, vote)?;
        p.state = MailState::Substituted;
        self.record(id, MailAction::Substituted { vote });
        Ok(())
    }

    /// Add an already-arrived piece the adversary produced.
    pub fn inject(&mut self, identity: &str, paper1: String, paper2: String) -> u64 {
        let id = self.next_id();
        self.pieces.push(MailPiece {
            id,
            outer_identity: identity.to_string(),
            paper1,
            paper2,
            state: MailState::Delivered,
        });
        self.record(id, MailAction::Injected);
        id
    }

    fn next_id(&self) -> u64 {
        self.pieces.iter().map(|p| p.id + 1).max().unwrap_or(0)
    }

    pub fn pieces(&self) -> &[MailPiece] {
        &self.pieces
    }

    pub fn arrived(&self) -> Vec<MailPiece> {
        self.pieces.iter().filter(|p| p.state.arrived()).cloned().collect()
    }
}

/// Paper 1 payload with vote index and selection string replaced.
pub fn substitute_vote<G: PrimeGroup>(
    payload: &str,
    election: &Election<G>,
    vote: VoteIndex,
) -> Result<String, ProtocolError> {
    let mut paper = Paper1::<G>::parse(payload)?;
    paper.vote = vote;
    paper.vote_string = election
        .selections
        .vote_string(vote)
        .ok_or(ProtocolError::VoteOutOfRange(vote.0))?;
    Ok(paper.payload())
}
