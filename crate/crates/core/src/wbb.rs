//! Append-only, hash-chained bulletin board.
//!
//! File format, one record per line:
//!
//! ```text
//! <list-id>|<key or empty>|<hex payload>|<hex chain hash>
//! ```
//!
//! The chain hash of a record is `SHA-256(prev || "<list-id>|<key>|<hex payload>")`
//! where `prev` is the previous record's chain hash, or `SHA-256("postmark/wbb/v1")`
//! for the first record.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const GENESIS_TAG: &[u8] = b"postmark/wbb/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ListId {
    Params,
    Roll,
    Trustees,
    Registered,
    Commit,
    Received,
    Rejected,
    MixReceived,
    Mixed,
    RejectedOpened,
    Pep,
    Accepted,
    MixAccepted,
    Tally,
    Final,
}

impl ListId {
    pub const ALL: [ListId; 15] = [
        ListId::Params,
        ListId::Roll,
        ListId::Trustees,
        ListId::Registered,
        ListId::Commit,
        ListId::Received,
        ListId::Rejected,
        ListId::MixReceived,
        ListId::Mixed,
        ListId::RejectedOpened,
        ListId::Pep,
        ListId::Accepted,
        ListId::MixAccepted,
        ListId::Tally,
        ListId::Final,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ListId::Params => "params",
            ListId::Roll => "roll",
            ListId::Trustees => "trustees",
            ListId::Registered => "registered",
            ListId::Commit => "commit",
            ListId::Received => "received",
            ListId::Rejected => "rejected",
            ListId::MixReceived => "mix-received",
            ListId::Mixed => "mixed",
            ListId::RejectedOpened => "rejected-opened",
            ListId::Pep => "pep",
            ListId::Accepted => "accepted",
            ListId::MixAccepted => "mix-accepted",
            ListId::Tally => "tally",
            ListId::Final => "final",
        }
    }

    /// Lists holding at most one entry per key.
    pub fn is_keyed_unique(&self) -> bool {
        matches!(self, ListId::Registered | ListId::Commit)
    }
}

impl fmt::Display for ListId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ListId {
    type Err = WbbError;
    fn from_str(s: &str) -> Result<Self, WbbError> {
        ListId::ALL
            .iter()
            .find(|l| l.as_str() == s)
            .copied()
            .ok_or_else(|| WbbError::UnknownList(s.to_string()))
    }
}

/// Who is writing. Only consulted by the writer hook.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Authority,
    Device,
    Commission,
    Trustee,
    Adversary,
}

pub type WriterHook = Arc<dyn Fn(Role, ListId, Option<&str>) -> bool + Send + Sync>;

#[derive(Debug, Error)]
pub enum WbbError {
    #[error("list {list} already has an entry for key {key:?}")]
    DuplicateKey { list: ListId, key: String },
    #[error("board is finalized")]
    Finalized,
    #[error("list {0} requires a key")]
    KeyRequired(ListId),
    #[error("invalid key {0:?}")]
    BadKey(String),
    #[error("writer {role:?} not allowed on list {list}")]
    Unauthorized { role: Role, list: ListId },
    #[error("unknown list {0:?}")]
    UnknownList(String),
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: hash chain broken")]
    ChainBreak { line: usize },
    #[error("board file lock: {0}")]
    Lock(std::io::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WbbError {
    /// Integrity failure of stored data (as opposed to a refused write).
    pub fn is_integrity(&self) -> bool {
        matches!(self, WbbError::ChainBreak { .. } | WbbError::Malformed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub list: ListId,
    pub key: Option<String>,
    pub payload: Vec<u8>,
    pub chain: [u8; 32],
}

impl Record {
    fn body(list: ListId, key: Option<&str>, payload: &[u8]) -> String {
        format!("{}|{}|{}", list, key.unwrap_or(""), hex::encode(payload))
    }

    pub fn line(&self) -> String {
        format!(
            "{}|{}",
            Record::body(self.list, self.key.as_deref(), &self.payload),
            hex::encode(self.chain)
        )
    }
}

pub fn genesis_head() -> [u8; 32] {
    Sha256::digest(GENESIS_TAG).into()
}

fn chain_step(prev: &[u8; 32], body: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(prev);
    h.update(body.as_bytes());
    h.finalize().into()
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.len() <= 256 && k.chars().all(|c| c.is_ascii_graphic() && c != '|')
}

#[derive(Clone)]
pub struct Board {
    records: Vec<Record>,
    head: [u8; 32],
    writer_hook: Option<WriterHook>,
}

impl Default for Board {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Board")
            .field("records", &self.records.len())
            .field("head", &hex::encode(self.head))
            .finish()
    }
}

impl PartialEq for Board {
    fn eq(&self, o: &Self) -> bool {
        self.records == o.records && self.head == o.head
    }
}

impl Board {
    pub fn new() -> Self {
        Board {
            records: Vec::new(),
            head: genesis_head(),
            writer_hook: None,
        }
    }

    pub fn set_writer_hook(&mut self, hook: WriterHook) {
        self.writer_hook = Some(hook);
    }

    pub fn head(&self) -> [u8; 32] {
        self.head
    }

    pub fn head_hex(&self) -> String {
        hex::encode(self.head)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_finalized(&self) -> bool {
        self.records.last().map(|r| r.list == ListId::Final).unwrap_or(false)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn post(&mut self, list: ListId, key: Option<&str>, payload: &[u8]) -> Result<usize, WbbError> {
        self.post_as(Role::Authority, list, key, payload)
    }

    pub fn post_as(
        &mut self,
        role: Role,
        list: ListId,
        key: Option<&str>,
        payload: &[u8],
    ) -> Result<usize, WbbError> {
        if self.is_finalized() {
            return Err(WbbError::Finalized);
        }
        if let Some(hook) = &self.writer_hook {
            if !hook(role, list, key) {
                return Err(WbbError::Unauthorized { role, list });
            }
        }
        if let Some(k) = key {
            if !valid_key(k) {
                return Err(WbbError::BadKey(k.to_string()));
            }
        }
        if list.is_keyed_unique() {
            let k = key.ok_or(WbbError::KeyRequired(list))?;
            if self.records.iter().any(|r| r.list == list && r.key.as_deref() == Some(k)) {
                return Err(WbbError::DuplicateKey {
                    list,
                    key: k.to_string(),
                });
            }
        }
        Ok(self.append(list, key, payload))
    }

    /// Append without the uniqueness check, as a misbehaving board would.
    /// Used to build tampered transcripts for audit tests.
    pub fn force_append(&mut self, list: ListId, key: Option<&str>, payload: &[u8]) -> usize {
        self.append(list, key, payload)
    }

    fn append(&mut self, list: ListId, key: Option<&str>, payload: &[u8]) -> usize {
        let chain = chain_step(&self.head, &Record::body(list, key, payload));
        self.records.push(Record {
            list,
            key: key.map(str::to_string),
            payload: payload.to_vec(),
            chain,
        });
        self.head = chain;
        self.records.len() - 1
    }

    /// Rebuild a board from record bodies with a freshly computed chain, as an
    /// operator rewriting history would. `Final` payloads are recomputed.
    pub fn rechain<I>(bodies: I) -> Board
    where
        I: IntoIterator<Item = (ListId, Option<String>, Vec<u8>)>,
    {
        let mut b = Board::new();
        for (list, key, payload) in bodies {
            if list == ListId::Final {
                let head = b.head;
                b.append(list, None, &head);
            } else {
                b.append(list, key.as_deref(), &payload);
            }
        }
        b
    }

    pub fn finalize(&mut self) -> Result<usize, WbbError> {
        if self.is_finalized() {
            return Err(WbbError::Finalized);
        }
        let head = self.head;
        Ok(self.append(ListId::Final, None, &head))
    }

    /// Entries of `list` under `key`; empty when absent.
    pub fn read(&self, list: ListId, key: &str) -> Vec<Record> {
        self.records
            .iter()
            .filter(|r| r.list == list && r.key.as_deref() == Some(key))
            .cloned()
            .collect()
    }

    pub fn read_list(&self, list: ListId) -> Vec<Record> {
        self.records.iter().filter(|r| r.list == list).cloned().collect()
    }

    /// `range` indexes the entries of `list` in append order.
    pub fn read_range(&self, list: ListId, range: std::ops::Range<usize>) -> Vec<Record> {
        self.records
            .iter()
            .filter(|r| r.list == list)
            .skip(range.start)
            .take(range.end.saturating_sub(range.start))
            .cloned()
            .collect()
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&r.line());
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Board, WbbError> {
        let mut board = Board::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let bad = |reason: &str| WbbError::Malformed {
                line: n,
                reason: reason.to_string(),
            };
            let parts: Vec<&str> = line.split('|').collect();
            if parts.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let list: ListId = parts[0].parse().map_err(|_| bad("unknown list"))?;
            let key = match parts[1] {
                "" => None,
                k if valid_key(k) => Some(k),
                _ => return Err(bad("invalid key")),
            };
            let payload = hex::decode(parts[2]).map_err(|_| bad("payload is not hex"))?;
            let chain: [u8; 32] = hex::decode(parts[3])
                .ok()
                .and_then(|v| v.try_into().ok())
                .ok_or_else(|| bad("chain hash is not 32 hex bytes"))?;
            if board.is_finalized() {
                return Err(bad("record after final"));
            }
            if chain_step(&board.head, &Record::body(list, key, &payload)) != chain {
                return Err(WbbError::ChainBreak { line: n });
            }
            board.append(list, key, &payload);
        }
        Ok(board)
    }

    pub fn save(&self, path: &Path) -> Result<(), WbbError> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = File::create(&tmp)?;
            f.write_all(self.serialize().as_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Board, WbbError> {
        Board::parse(&std::fs::read_to_string(path)?)
    }

    /// Frozen copy for verification.
    pub fn snapshot(&self) -> Transcript {
        Transcript {
            board: Board {
                records: self.records.clone(),
                head: self.head,
                writer_hook: None,
            },
        }
    }
}

/// A frozen board. Everything a public verifier needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    board: Board,
}

impl Transcript {
    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn head(&self) -> [u8; 32] {
        self.board.head
    }

    pub fn is_finalized(&self) -> bool {
        self.board.is_finalized()
    }
}

/// Advisory exclusive lock serializing writers of one board file.
pub struct BoardLock {
    _file: File,
    path: PathBuf,
}

impl BoardLock {
    pub fn acquire(board_path: &Path) -> Result<BoardLock, WbbError> {
        let path = board_path.with_extension("lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)?;
        file.lock().map_err(WbbError::Lock)?;
        Ok(BoardLock { _file: file, path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_head_is_hash_of_tag() {
        let b = Board::new();
        assert_eq!(b.head(), <[u8; 32]>::from(Sha256::digest(b"postmark/wbb/v1")));
        assert_eq!(b.serialize(), "");
        assert_eq!(Board::parse("").unwrap(), b);
    }

    #[test]
    fn keyed_uniqueness() {
        let mut b = Board::new();
        assert_eq!(b.post(ListId::Registered, Some("V01"), b"x").unwrap(), 0);
        assert!(matches!(
            b.post(ListId::Registered, Some("V01"), b"y"),
            Err(WbbError::DuplicateKey { .. })
        ));
        assert!(matches!(b.post(ListId::Commit, None, b"y"), Err(WbbError::KeyRequired(_))));
        b.post(ListId::Commit, Some("V01"), b"z").unwrap();
        b.post(ListId::Received, None, b"a").unwrap();
        b.post(ListId::Received, None, b"a").unwrap();
        assert!(matches!(b.post(ListId::Received, Some("a|b"), b""), Err(WbbError::BadKey(_))));
    }

    #[test]
    fn finalize_blocks_posts() {
        let mut b = Board::new();
        b.post(ListId::Received, None, b"a").unwrap();
        b.finalize().unwrap();
        assert!(b.is_finalized());
        assert!(matches!(b.post(ListId::Received, None, b"a"), Err(WbbError::Finalized)));
        assert!(b.finalize().is_err());
    }

    #[test]
    fn read_semantics() {
        let mut b = Board::new();
        assert!(b.read(ListId::Registered, "nobody").is_empty());
        b.post(ListId::Registered, Some("V01"), b"hello").unwrap();
        assert_eq!(b.read(ListId::Registered, "V01")[0].payload, b"hello");
        for i in 0..5u8 {
            b.post(ListId::Received, None, &[i]).unwrap();
        }
        let r: Vec<u8> = b.read_range(ListId::Received, 1..4).iter().map(|r| r.payload[0]).collect();
        assert_eq!(r, vec![1, 2, 3]);
        assert_eq!(b.read_list(ListId::Received).len(), 5);
    }

    #[test]
    fn save_load_roundtrip_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("board.wbb");
        let mut b = Board::new();
        b.post(ListId::Registered, Some("V01"), b"hello").unwrap();
        b.post(ListId::Received, None, b"world").unwrap();
        b.post(ListId::Received, None, b"!").unwrap();
        b.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back = Board::load(&path).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.serialize(), text);

        // flip one payload hex digit on line 2
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut bytes = lines[1].clone().into_bytes();
        let pos = "received||".len();
        bytes[pos] = if bytes[pos] == b'0' { b'1' } else { b'0' };
        lines[1] = String::from_utf8(bytes).unwrap();
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        assert!(matches!(Board::load(&path), Err(WbbError::ChainBreak { line: 2 })));
    }

    #[test]
    fn replay_reproduces_head() {
        let mut b = Board::new();
        for i in 0..10u8 {
            b.post(ListId::Tally, None, &[i; 3]).unwrap();
        }
        let mut head = genesis_head();
        for r in b.records() {
            head = chain_step(&head, &Record::body(r.list, r.key.as_deref(), &r.payload));
        }
        assert_eq!(head, b.head());
    }

    #[test]
    fn writer_hook_refuses() {
        let mut b = Board::new();
        b.set_writer_hook(Arc::new(|role, list, _| !(role == Role::Adversary && list == ListId::Commit)));
        assert!(b.post_as(Role::Adversary, ListId::Registered, Some("V1"), b"").is_ok());
        assert!(matches!(
            b.post_as(Role::Adversary, ListId::Commit, Some("V1"), b""),
            Err(WbbError::Unauthorized { .. })
        ));
    }

    #[test]
    fn lock_is_exclusive_per_handle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("board.wbb");
        let l = BoardLock::acquire(&path).unwrap();
        let f = OpenOptions::new().write(true).open(l.path()).unwrap();
        assert!(f.try_lock().is_err());
        drop(l);
        assert!(f.try_lock().is_ok());
    }
}
