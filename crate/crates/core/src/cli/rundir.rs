//! Run directory layout. One election per directory:
//!
//! ```text
//! config.toml          election config as accepted by setup
//! board.wbb            the bulletin board (board.lock serializes writers)
//! trustees/T<i>.key    trustee key shares, hex
//! envelopes            double envelopes, one hex record per line
//! papers/<id>.paper1   printed papers, one pair per voter
//! voters/<id>.toml     what the voter checked at the booth
//! mailbox/piece-N.toml mail in flight or delivered
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::codec::{Decode, Encode};
use crate::group::PrimeGroup;
use crate::protocol::mail::MailPiece;
use crate::protocol::setup::DoubleEnvelope;
use crate::protocol::ElectionConfig;
use crate::threshold::TrusteeShare;
use crate::wbb::{Board, BoardLock};

/// The voter's own memory of the booth: what they meant and what was printed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterNote {
    pub voter_id: String,
    pub intended: String,
    pub intended_index: u64,
    pub printed_vote: u64,
    pub printed_id: String,
}

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn board_path(&self) -> PathBuf {
        self.root.join("board.wbb")
    }

    pub fn trustee_dir(&self) -> PathBuf {
        self.root.join("trustees")
    }

    pub fn envelopes_path(&self) -> PathBuf {
        self.root.join("envelopes")
    }

    pub fn papers_dir(&self) -> PathBuf {
        self.root.join("papers")
    }

    pub fn voters_dir(&self) -> PathBuf {
        self.root.join("voters")
    }

    pub fn mailbox_dir(&self) -> PathBuf {
        self.root.join("mailbox")
    }

    pub fn receive_log(&self) -> PathBuf {
        self.root.join("receive.log")
    }

    pub fn paper_outcome_path(&self) -> PathBuf {
        self.root.join("paper-outcome.toml")
    }

    pub fn outcome_path(&self) -> PathBuf {
        self.root.join("outcome.toml")
    }

    pub fn paper_path(&self, voter: &str, which: u8) -> PathBuf {
        self.papers_dir().join(format!("{voter}.paper{which}"))
    }

    pub fn voter_path(&self, voter: &str) -> PathBuf {
        self.voters_dir().join(format!("{voter}.toml"))
    }

    pub fn is_initialized(&self) -> bool {
        self.config_path().exists() && self.board_path().exists()
    }

    pub fn require(&self) -> Result<(), CliError> {
        if self.is_initialized() {
            Ok(())
        } else {
            Err(CliError::Usage(format!("{} is not a run directory", self.root.display())))
        }
    }

    pub fn config(&self) -> Result<ElectionConfig, CliError> {
        Ok(ElectionConfig::from_toml(&fs::read_to_string(self.config_path())?)?)
    }

    pub fn lock(&self) -> Result<BoardLock, CliError> {
        Ok(BoardLock::acquire(&self.board_path())?)
    }

    pub fn board(&self) -> Result<Board, CliError> {
        Ok(Board::load(&self.board_path())?)
    }

    pub fn save_board(&self, board: &Board) -> Result<(), CliError> {
        Ok(board.save(&self.board_path())?)
    }

    pub fn write_shares<G: PrimeGroup>(&self, shares: &[TrusteeShare<G>]) -> Result<(), CliError> {
        fs::create_dir_all(self.trustee_dir())?;
        for s in shares {
            let p = self.trustee_dir().join(format!("T{}.key", s.trustee_index));
            fs::write(p, hex::encode(s.to_bytes()) + "\n")?;
        }
        Ok(())
    }

    /// All key shares present, in trustee order.
    pub fn shares<G: PrimeGroup>(&self) -> Result<Vec<TrusteeShare<G>>, CliError> {
        let mut shares = Vec::new();
        for entry in fs::read_dir(self.trustee_dir())? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "key") {
                let text = fs::read_to_string(&path)?;
                let bytes = hex::decode(text.trim()).map_err(|_| bad_file(&path))?;
                shares.push(TrusteeShare::<G>::from_bytes(&bytes).map_err(|_| bad_file(&path))?);
            }
        }
        shares.sort_by_key(|s| s.trustee_index);
        Ok(shares)
    }

    pub fn write_envelopes<G: PrimeGroup>(&self, envs: &[DoubleEnvelope<G>]) -> Result<(), CliError> {
        let text: String = envs.iter().map(|e| hex::encode(e.to_bytes()) + "\n").collect();
        Ok(fs::write(self.envelopes_path(), text)?)
    }

    pub fn envelopes<G: PrimeGroup>(&self) -> Result<Vec<DoubleEnvelope<G>>, CliError> {
        let path = self.envelopes_path();
        fs::read_to_string(&path)?
            .lines()
            .map(|l| {
                hex::decode(l)
                    .ok()
                    .and_then(|b| DoubleEnvelope::from_bytes(&b).ok())
                    .ok_or_else(|| bad_file(&path))
            })
            .collect()
    }

    pub fn mail(&self) -> Result<Vec<MailPiece>, CliError> {
        let dir = self.mailbox_dir();
        let mut pieces = Vec::new();
        if !dir.exists() {
            return Ok(pieces);
        }
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "toml") {
                let text = fs::read_to_string(&path)?;
                pieces.push(MailPiece::from_toml(&text).map_err(|_| bad_file(&path))?);
            }
        }
        pieces.sort_by_key(|p| p.id);
        Ok(pieces)
    }

    pub fn piece_path(&self, id: u64) -> PathBuf {
        self.mailbox_dir().join(format!("piece-{id:04}.toml"))
    }

    pub fn write_piece(&self, p: &MailPiece) -> Result<(), CliError> {
        fs::create_dir_all(self.mailbox_dir())?;
        Ok(fs::write(self.piece_path(p.id), p.to_toml())?)
    }

    pub fn voter_note(&self, voter: &str) -> Result<VoterNote, CliError> {
        let path = self.voter_path(voter);
        if !path.exists() {
            return Err(CliError::Usage(format!("no booth record for voter {voter}")));
        }
        toml::from_str(&fs::read_to_string(&path)?).map_err(|_| bad_file(&path))
    }

    pub fn write_voter_note(&self, note: &VoterNote) -> Result<(), CliError> {
        fs::create_dir_all(self.voters_dir())?;
        let text = toml::to_string(note).expect("note serializes");
        Ok(fs::write(self.voter_path(&note.voter_id), text)?)
    }

    /// Randomness for one step. An explicit seed wins; otherwise the config
    /// seed is stretched per step so reruns reproduce the same bytes; with
    /// neither, the OS supplies entropy.
    pub fn rng(&self, config: &ElectionConfig, step: &str, explicit: Option<u64>) -> ChaCha20Rng {
        let base = match (explicit, config.seed) {
            (Some(s), _) => s,
            (None, Some(s)) => s,
            (None, None) => return ChaCha20Rng::from_entropy(),
        };
        let mut h = Sha256::new();
        h.update(b"postmark/cli/rng");
        h.update(base.to_le_bytes());
        h.update(step.as_bytes());
        ChaCha20Rng::from_seed(h.finalize().into())
    }
}

fn bad_file(path: &Path) -> CliError {
    CliError::Usage(format!("unreadable file {}", path.display()))
}
