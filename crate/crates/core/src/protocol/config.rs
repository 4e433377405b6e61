//! Election configuration and the published selection list.

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::encoding::{VoteIndex, DEFAULT_LIMB_BITS, DEFAULT_VOTE_BOUND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SelectionRule {
    /// Full rankings of every candidate.
    #[default]
    Ranked,
    /// A single candidate.
    Plurality,
}

impl SelectionRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionRule::Ranked => "ranked",
            SelectionRule::Plurality => "plurality",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ranked" => Some(SelectionRule::Ranked),
            "plurality" => Some(SelectionRule::Plurality),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrusteeConfig {
    pub n: u32,
    pub k: u32,
}

fn default_name() -> String {
    "election".into()
}
fn default_bound() -> u64 {
    DEFAULT_VOTE_BOUND
}
fn default_limb_bits() -> u32 {
    DEFAULT_LIMB_BITS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectionConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub candidates: Vec<String>,
    #[serde(default)]
    pub selection: SelectionRule,
    pub voters: Vec<String>,
    pub trustees: TrusteeConfig,
    /// Tolerated count of detected errors.
    #[serde(default)]
    pub d: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_bound")]
    pub vote_bound: u64,
    #[serde(default = "default_limb_bits")]
    pub limb_bits: u32,
    #[serde(default)]
    pub allow_toy_group: bool,
}

pub const MAX_RANKED_CANDIDATES: usize = 9;

fn plain_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_graphic() && !matches!(c, '|' | ',' | ':' | '>'))
}

impl ElectionConfig {
    pub fn new(candidates: &[&str], voters: &[String], n: u32, k: u32) -> Self {
        ElectionConfig {
            name: default_name(),
            candidates: candidates.iter().map(|s| s.to_string()).collect(),
            selection: SelectionRule::Ranked,
            voters: voters.to_vec(),
            trustees: TrusteeConfig { n, k },
            d: 0,
            seed: None,
            vote_bound: DEFAULT_VOTE_BOUND,
            limb_bits: DEFAULT_LIMB_BITS,
            allow_toy_group: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ProtocolError> {
        let cfg: ElectionConfig =
            toml::from_str(text).map_err(|e| ProtocolError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::Config(m));
        if !plain_token(&self.name) {
            return bad(format!("election name {:?} must be printable without spaces or separators", self.name));
        }
        if self.candidates.is_empty() {
            return bad("no candidates".into());
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if !plain_token(c) {
                return bad(format!("candidate name {c:?} contains a separator or whitespace"));
            }
            if self.candidates[..i].contains(c) {
                return bad(format!("duplicate candidate {c:?}"));
            }
        }
        if self.selection == SelectionRule::Ranked && self.candidates.len() > MAX_RANKED_CANDIDATES {
            return bad(format!("ranked elections support at most {MAX_RANKED_CANDIDATES} candidates"));
        }
        if self.voters.is_empty() {
            return bad("empty voter roll".into());
        }
        for (i, v) in self.voters.iter().enumerate() {
            if !plain_token(v) {
                return bad(format!("voter id {v:?} contains a separator or whitespace"));
            }
            if self.voters[..i].contains(v) {
                return bad(format!("duplicate voter id {v:?}"));
            }
        }
        let TrusteeConfig { n, k } = self.trustees;
        if k == 0 || k > n {
            return bad(format!("trustees: need 1 <= k <= n, got n={n}, k={k}"));
        }
        if !(1..=20).contains(&self.limb_bits) {
            return bad(format!("limb_bits {} outside 1..=20", self.limb_bits));
        }
        let count = self.selection_count();
        if count > self.vote_bound {
            return bad(format!("{count} selections exceed vote_bound {}", self.vote_bound));
        }
        Ok(())
    }

    pub fn selection_count(&self) -> u64 {
        match self.selection {
            SelectionRule::Plurality => self.candidates.len() as u64,
            SelectionRule::Ranked => (1..=self.candidates.len() as u64).product(),
        }
    }
}

/// Ordered list of allowed selections; a vote is an index into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionList {
    pub candidates: Vec<String>,
    pub rule: SelectionRule,
    entries: Vec<Vec<usize>>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    // lexicographic order
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

impl SelectionList {
    pub fn new(candidates: &[String], rule: SelectionRule) -> Self {
        let entries = match rule {
            SelectionRule::Plurality => (0..candidates.len()).map(|c| vec![c]).collect(),
            SelectionRule::Ranked => permutations(candidates.len()),
        };
        SelectionList {
            candidates: candidates.to_vec(),
            rule,
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `rank:candidate` pairs, e.g. `1:Eve,2:Alice,3:Bob`.
    pub fn vote_string(&self, v: VoteIndex) -> Option<String> {
        let e = self.entries.get(v.0 as usize)?;
        Some(
            e.iter()
                .enumerate()
                .map(|(rank, &c)| format!("{}:{}", rank + 1, self.candidates[c]))
                .collect::<Vec<_>>()
                .join(","),
        )
    }

    /// First-ranked (or only) candidate of a selection.
    pub fn first_choice(&self, v: VoteIndex) -> Option<&str> {
        self.entries
            .get(v.0 as usize)
            .map(|e| self.candidates[e[0]].as_str())
    }

    /// Accepts `1:Eve,2:Alice,3:Bob`, `Eve,Alice,Bob` or `Eve>Alice>Bob`.
    pub fn parse(&self, s: &str) -> Result<VoteIndex, ProtocolError> {
        let err = || ProtocolError::BadSelection(s.to_string());
        let items: Vec<&str> = s
            .split([',', '>'])
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .collect();
        let mut ranked: Vec<(usize, usize)> = Vec::with_capacity(items.len());
        for (pos, item) in items.iter().enumerate() {
            let (rank, name) = match item.split_once(':') {
                Some((r, n)) => (r.trim().parse::<usize>().map_err(|_| err())?, n.trim()),
                None => (pos + 1, *item),
            };
            let c = self.candidates.iter().position(|x| x == name).ok_or_else(err)?;
            ranked.push((rank, c));
        }
        ranked.sort();
        if ranked.iter().enumerate().any(|(i, (r, _))| *r != i + 1) {
            return Err(err());
        }
        let order: Vec<usize> = ranked.into_iter().map(|(_, c)| c).collect();
        self.entries
            .iter()
            .position(|e| *e == order)
            .map(|i| VoteIndex(i as u64))
            .ok_or_else(err)
    }
}
