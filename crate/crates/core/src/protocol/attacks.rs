//! Scenario runner and adversary harness.
//!
//! A [`Scenario`] describes an election end to end: who votes for what, which
//! mail is lost, and which roles misbehave. [`run_scenario`] plays it through
//! setup, casting, mail, receiving and tallying on one board.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_core::{CryptoRng, RngCore};

use super::cast::{cast_device, CastOutcome, Commission, DeviceBehaviour, EcEvent, EcMisbehaviour};
use super::config::ElectionConfig;
use super::mail::{substitute_vote, PostalChannel};
use super::outcome::{id_sets, result, ElectionOutcome, IdSets, PaperOutcome};
use super::receive::{process_vote, ReceiveReport};
use super::records::{CommitEntry, RegisteredEntry};
use super::setup::{setup, SetupOutput};
use super::tally::{recomputed_mac, tally, TallyReport};
use super::verify::{global_verify, voter_verify, CastCheck, GvFailure, GvReport, VoterVerdict};
use super::{Election, ProtocolError};
use crate::codec::Encode;
use crate::elgamal::{ct_mul, encrypt, encrypt_exponent};
use crate::encoding::{mac_compute, VoteIndex};
use crate::group::{Element, PrimeGroup, Scalar};
use crate::threshold::{PublicKeySet, TrusteeShare};
use crate::wbb::{Board, ListId, Role};
use crate::zkp::pep::pep_run;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attack {
    /// The commission posts `v_cheat` as the committed vote, shifts the MAC
    /// with a guessed slope, and rewrites the paper vote on receipt to match.
    EcSubstitute { voter: String, v_cheat: VoteIndex },
    /// Paper 1 is rewritten in the post.
    MailSubstitute { voter: String, vote: VoteIndex },
    /// The device prints parameters that do not open the commitments.
    ClientBogusOpenings { voter: String },
    /// The device prints a second paper 1 with another vote and the same
    /// parameters, and puts it in the post under the voter's id.
    DuplicateOpening { voter: String, vote: VoteIndex },
    /// Someone posts registration and commit entries for a voter who abstains.
    FakeBoardPost { voter: String },
}

impl Attack {
    pub fn target(&self) -> &str {
        match self {
            Attack::EcSubstitute { voter, .. }
            | Attack::MailSubstitute { voter, .. }
            | Attack::ClientBogusOpenings { voter }
            | Attack::DuplicateOpening { voter, .. }
            | Attack::FakeBoardPost { voter } => voter,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ElectionConfig,
    /// `(voter, vote)` in casting order. Voters not listed abstain.
    pub ballots: Vec<(String, VoteIndex)>,
    pub lost: Vec<String>,
    pub attacks: Vec<Attack>,
    pub seed: u64,
}

pub fn voter_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("V{i:03}")).collect()
}

impl Scenario {
    /// `voters` voters on a three-candidate ranked ballot; everybody votes,
    /// with votes drawn from `seed`.
    pub fn ranked(voters: usize, n: u32, k: u32, seed: u64) -> Self {
        let names = voter_names(voters);
        let mut config = ElectionConfig::new(&["Alice", "Bob", "Eve"], &names, n, k);
        config.seed = Some(seed);
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x766f746573);
        let count = config.selection_count();
        let ballots = names
            .iter()
            .map(|v| (v.clone(), VoteIndex(rng.gen_range(0..count))))
            .collect();
        Scenario {
            config,
            ballots,
            lost: Vec::new(),
            attacks: Vec::new(),
            seed,
        }
    }

    pub fn with_attack(mut self, a: Attack) -> Self {
        if let Attack::FakeBoardPost { voter } = &a {
            self.ballots.retain(|(v, _)| v != voter);
        }
        self.attacks.push(a);
        self
    }

    pub fn lose(mut self, voter: &str) -> Self {
        self.lost.push(voter.to_string());
        self
    }

    pub fn vote_of(&self, voter: &str) -> Option<VoteIndex> {
        self.ballots.iter().find(|(v, _)| v == voter).map(|(_, x)| *x)
    }
}

pub struct ScenarioRun<G: PrimeGroup> {
    pub election: Election<G>,
    pub board: Board,
    pub shares: Vec<TrusteeShare<G>>,
    pub casts: BTreeMap<String, CastOutcome<G>>,
    pub checks: BTreeMap<String, CastCheck>,
    pub channel: PostalChannel,
    pub ec_log: Vec<EcEvent>,
    pub receive: ReceiveReport,
    pub tally: TallyReport,
}

impl<G: PrimeGroup> ScenarioRun<G> {
    pub fn voter_verify(&self, voter: &str) -> Option<VoterVerdict> {
        Some(voter_verify(self.checks.get(voter)?, &self.board.snapshot()))
    }

    pub fn global_verify(&self) -> Result<GvReport, GvFailure> {
        global_verify::<G>(&self.board.snapshot())
    }

    pub fn id_sets(&self) -> IdSets {
        id_sets::<G>(&self.board.snapshot()).unwrap_or_default()
    }

    pub fn accepted(&self) -> Vec<String> {
        self.board
            .read_list(ListId::Accepted)
            .into_iter()
            .filter_map(|r| r.key)
            .collect()
    }

    /// Tally as a sorted multiset of vote indices.
    pub fn tally_multiset(&self) -> Vec<VoteIndex> {
        let mut v: Vec<VoteIndex> = self.tally.votes.iter().flatten().copied().collect();
        v.sort();
        v
    }

    /// The paper record: first choices on every arrived paper 1.
    pub fn paper_outcome(&self) -> PaperOutcome {
        let mut counts: BTreeMap<String, u64> = self
            .election
            .selections
            .candidates
            .iter()
            .map(|c| (c.clone(), 0))
            .collect();
        for p in self.channel.arrived() {
            if let Ok(p1) = super::papers::Paper1::<G>::parse(&p.paper1) {
                if let Some(c) = self.election.selections.first_choice(p1.vote) {
                    *counts.entry(c.to_string()).or_insert(0) += 1;
                }
            }
        }
        PaperOutcome { counts }
    }

    pub fn result(&self, d: u64) -> ElectionOutcome {
        result::<G>(&self.board.snapshot(), &self.paper_outcome(), d)
    }
}

/// Play a scenario through to a finalized board.
pub fn run_scenario<G: PrimeGroup>(scenario: &Scenario) -> Result<ScenarioRun<G>, ProtocolError> {
    let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
    let SetupOutput {
        mut board,
        election,
        shares,
        envelopes,
    } = setup::<G, _>(&scenario.config, &mut rng)?;
    let mut ec = Commission::<G>::new(rng.next_u64());

    for a in &scenario.attacks {
        if let Attack::EcSubstitute { voter, v_cheat } = a {
            let known = scenario
                .vote_of(voter)
                .ok_or_else(|| ProtocolError::UnknownVoter(voter.clone()))?;
            ec.misbehaviour.insert(
                voter.clone(),
                EcMisbehaviour::Substitute {
                    v_cheat: *v_cheat,
                    known_vote: known,
                    slope_guess: Scalar::random_nonzero(&mut rng),
                },
            );
        }
    }

    let mut casts = BTreeMap::new();
    let mut checks = BTreeMap::new();
    let mut channel = PostalChannel::new();
    for (voter, vote) in &scenario.ballots {
        let bogus = scenario
            .attacks
            .iter()
            .any(|a| matches!(a, Attack::ClientBogusOpenings { voter: v } if v == voter));
        let behaviour = if bogus {
            DeviceBehaviour::BogusOpenings
        } else {
            DeviceBehaviour::Honest
        };
        let out = cast_device(&election, &mut board, &mut ec, voter, *vote, behaviour, &mut rng)?;
        checks.insert(
            voter.clone(),
            CastCheck {
                voter_id: voter.clone(),
                intended: *vote,
                printed_vote: out.paper1.vote,
                printed_id: out.paper2.voter_id.clone(),
            },
        );
        let piece = channel.send(voter, out.paper1.payload(), out.paper2.payload());
        let mut handled = false;
        for a in &scenario.attacks {
            match a {
                Attack::MailSubstitute { voter: v, vote } if v == voter => {
                    channel.substitute_paper1(piece, &election, *vote)?;
                    handled = true;
                }
                Attack::EcSubstitute { voter: v, v_cheat } if v == voter => {
                    channel.substitute_paper1(piece, &election, *v_cheat)?;
                    handled = true;
                }
                Attack::DuplicateOpening { voter: v, vote } if v == voter => {
                    let dup = substitute_vote(&out.paper1.payload(), &election, *vote)?;
                    channel.inject(voter, dup, out.paper2.payload());
                }
                _ => {}
            }
        }
        if scenario.lost.contains(voter) {
            channel.lose(piece)?;
        } else if !handled {
            channel.deliver(piece)?;
        }
        casts.insert(voter.clone(), out);
    }

    for a in &scenario.attacks {
        if let Attack::FakeBoardPost { voter } = a {
            fake_board_post(&election, &mut board, voter, &mut rng)?;
        }
    }

    let receive = process_vote(&election, &channel.arrived(), &envelopes, &mut board, &mut rng)?;
    let tally = tally(&election, &mut board, &shares, &mut rng)?;
    Ok(ScenarioRun {
        election,
        board,
        shares,
        casts,
        checks,
        channel,
        ec_log: ec.log,
        receive,
        tally,
    })
}

/// Post well-formed registration and commit entries under someone else's id.
pub fn fake_board_post<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    election: &Election<G>,
    board: &mut Board,
    voter: &str,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let ped = &election.params.pedersen;
    let pk = election.pk();
    let reg = RegisteredEntry {
        c_a: ped.commit(&Scalar::random(rng), &Scalar::random(rng)),
        c_b: ped.commit(&Scalar::random(rng), &Scalar::random(rng)),
    };
    let commit = CommitEntry {
        e_mac: encrypt_exponent(&pk, &Scalar::random(rng), &Scalar::random_nonzero(rng)),
        e_vote: encrypt_exponent(&pk, &Scalar::from_u64(0), &Scalar::random_nonzero(rng)),
    };
    board.post_as(Role::Adversary, ListId::Registered, Some(voter), &reg.to_bytes())?;
    board.post_as(Role::Adversary, ListId::Commit, Some(voter), &commit.to_bytes())?;
    Ok(())
}

pub fn ec_substitute<G: PrimeGroup>(
    base: &Scenario,
    voter: &str,
    v_cheat: VoteIndex,
) -> Result<ScenarioRun<G>, ProtocolError> {
    run_scenario(&base.clone().with_attack(Attack::EcSubstitute {
        voter: voter.into(),
        v_cheat,
    }))
}

pub fn mail_substitute<G: PrimeGroup>(
    base: &Scenario,
    voter: &str,
    vote: VoteIndex,
) -> Result<ScenarioRun<G>, ProtocolError> {
    run_scenario(&base.clone().with_attack(Attack::MailSubstitute {
        voter: voter.into(),
        vote,
    }))
}

pub fn client_bogus_openings<G: PrimeGroup>(base: &Scenario, voter: &str) -> Result<ScenarioRun<G>, ProtocolError> {
    run_scenario(&base.clone().with_attack(Attack::ClientBogusOpenings { voter: voter.into() }))
}

pub fn duplicate_opening<G: PrimeGroup>(
    base: &Scenario,
    voter: &str,
    vote: VoteIndex,
) -> Result<ScenarioRun<G>, ProtocolError> {
    run_scenario(&base.clone().with_attack(Attack::DuplicateOpening {
        voter: voter.into(),
        vote,
    }))
}

pub fn fake_board_post_attack<G: PrimeGroup>(base: &Scenario, voter: &str) -> Result<ScenarioRun<G>, ProtocolError> {
    run_scenario(&base.clone().with_attack(Attack::FakeBoardPost { voter: voter.into() }))
}

/// One MAC forgery attempt through the encrypted pipeline. The voter's
/// `(a, b)` are fresh and hidden; the commission replaces the committed vote
/// by `v_cheat` and shifts the encrypted MAC by `slope * (v_cheat - vote)`.
/// Returns true iff the trustees' MAC comparison accepts the forgery.
pub fn mac_forgery_trial<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    public: &PublicKeySet<G>,
    shares: &[TrusteeShare<G>],
    vote: VoteIndex,
    v_cheat: VoteIndex,
    slope: &Scalar<G>,
    rng: &mut R,
) -> bool {
    let pk = public.public_key();
    let a = Scalar::<G>::random_nonzero(rng);
    let b = Scalar::<G>::random_nonzero(rng);
    let mac = mac_compute(&a, &b, vote);
    let e_mac = encrypt_exponent(&pk, &mac, &Scalar::random_nonzero(rng));
    let delta = Scalar::from_u64(v_cheat.0) - Scalar::from_u64(vote.0);
    let shift = encrypt(&pk, &Element::base_pow(&(*slope * delta)), &Scalar::random_nonzero(rng));
    let forged_mac = ct_mul(&e_mac, &shift);
    let forged_vote = encrypt_exponent(&pk, &Scalar::from_u64(v_cheat.0), &Scalar::random_nonzero(rng));
    let recomputed = recomputed_mac(&forged_vote, &a, &b);
    pep_run(public, shares, &recomputed, &forged_mac, b"forgery-trial", rng)
        .map(|j| j.equal)
        .unwrap_or(false)
}
