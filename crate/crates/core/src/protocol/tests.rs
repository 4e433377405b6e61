use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::attacks::{run_scenario, Attack, Scenario};
use super::cast::{cast_device, cast_ec, Commission, DeviceBehaviour, EcMisbehaviour, EcReject, Submission};
use super::fake_view::{fake_view, FRESH_FIELDS, VOTE_DEPENDENT_FIELDS};
use super::mail::{MailAction, MailState, PostalChannel};
use super::papers::{Paper1, Paper2};
use super::receive::{process_vote, ReceiveEvent};
use super::records::{CommitEntry, MixedEntry};
use super::setup::setup;
use super::tally::{SkipReason, SkipSubject};
use super::verify::{global_verify, GvStep, VoterVerdict};
use super::*;
use crate::codec::{Decode, Encode};
use crate::elgamal::decrypt;
use crate::encoding::{mac_compute, VoteIndex};
use crate::group::{Element, Ristretto, Scalar, Toy1009};
use crate::threshold::{threshold_decrypt, TrusteeShare};
use crate::wbb::{Board, ListId};

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn toy_config(voters: usize, n: u32, k: u32) -> ElectionConfig {
    let mut c = ElectionConfig::new(&["Alice", "Bob", "Eve"], &attacks::voter_names(voters), n, k);
    c.allow_toy_group = true;
    c
}

fn toy_scenario(voters: usize, n: u32, k: u32, seed: u64) -> Scenario {
    let mut s = Scenario::ranked(voters, n, k, seed);
    s.config.allow_toy_group = true;
    s
}

fn open<G: crate::group::PrimeGroup>(shares: &[TrusteeShare<G>], c: &crate::elgamal::Ciphertext<G>) -> Element<G> {
    let public = shares[0].public.clone();
    threshold_decrypt(&public, shares, c, &mut rng(99)).unwrap().0
}

#[test]
fn setup_posts_roll_and_key() {
    let out = setup::<Toy1009, _>(&toy_config(3, 1, 1), &mut rng(1)).unwrap();
    assert_eq!(out.board.read_list(ListId::Roll).len(), 3);
    assert_eq!(out.board.read_list(ListId::Params).len(), 1);
    assert_eq!(out.envelopes.len(), 3);
    let e = Election::<Toy1009>::from_board(&out.board).unwrap();
    assert_eq!(e.hash, out.election.hash);
    assert_eq!(e.pk(), out.election.pk());
    for (i, env) in out.envelopes.iter().enumerate() {
        assert_eq!(env.voter_id, e.roll()[i]);
        assert_eq!(open(&out.shares, &env.e_voter_id), Element::base_pow_u64(i as u64));
    }
}

#[test]
fn setup_refuses_bad_configs() {
    let mut c = toy_config(3, 1, 1);
    c.voters[2] = c.voters[0].clone();
    assert!(matches!(setup::<Toy1009, _>(&c, &mut rng(1)), Err(ProtocolError::Config(_))));
    let mut c = toy_config(3, 1, 1);
    c.allow_toy_group = false;
    assert!(matches!(
        setup::<Toy1009, _>(&c, &mut rng(1)),
        Err(ProtocolError::ToyGroupRefused(_))
    ));
    let c = toy_config(3, 2, 3);
    assert!(setup::<Toy1009, _>(&c, &mut rng(1)).is_err());
    // a toy board is not readable as a ristretto election
    let out = setup::<Toy1009, _>(&toy_config(2, 1, 1), &mut rng(1)).unwrap();
    assert!(matches!(
        Election::<Ristretto>::from_board(&out.board),
        Err(ProtocolError::GroupMismatch { .. })
    ));
}

#[test]
fn honest_cast_prints_intended_vote() {
    let mut r = rng(2);
    let mut out = setup::<Ristretto, _>(&toy_config(2, 1, 1), &mut r).unwrap();
    let mut ec = Commission::new(5);
    let v = VoteIndex(4);
    let cast = cast_device(&out.election, &mut out.board, &mut ec, "V001", v, DeviceBehaviour::Honest, &mut r).unwrap();
    assert_eq!(cast.paper1.vote, v);
    assert_eq!(cast.paper1.vote_string, "1:Eve,2:Alice,3:Bob");
    assert_eq!(cast.paper2.voter_id, "V001");
    assert_eq!(cast.receipt, "V001");
    cast.paper1.check(&out.election).unwrap();

    // decrypt-all oracle: params open the commitments, commit entries hold vote and MAC
    let sk = out.shares[0].secret_share;
    let limbs = out.election.limb_codec();
    let decoded: Vec<Option<u64>> = cast.paper1.e_params.iter().map(|c| limbs.decode(&decrypt(&sk, c))).collect();
    let s = tally::opening_from_limbs(&out.election, &decoded).unwrap();
    assert_eq!(s, cast.secrets);
    let commit: CommitEntry<Ristretto> =
        CommitEntry::from_bytes(&out.board.read(ListId::Commit, "V001")[0].payload).unwrap();
    assert_eq!(decrypt(&sk, &commit.e_vote), Element::base_pow_u64(4));
    let mac = mac_compute(&s.a, &s.b, v);
    assert_eq!(decrypt(&sk, &commit.e_mac), Element::base_pow(&mac));
    assert_ne!(commit.e_vote, cast.view.e_vote, "commission rerandomizes");

    let again = cast_device(&out.election, &mut out.board, &mut ec, "V001", v, DeviceBehaviour::Honest, &mut r);
    assert!(matches!(again, Err(ProtocolError::DuplicateRegistration(_))));
    let off = cast_device(&out.election, &mut out.board, &mut ec, "nobody", v, DeviceBehaviour::Honest, &mut r);
    assert!(matches!(off, Err(ProtocolError::UnknownVoter(_))));
    let bad_vote = cast_device(&out.election, &mut out.board, &mut ec, "V002", VoteIndex(6), DeviceBehaviour::Honest, &mut r);
    assert!(matches!(bad_vote, Err(ProtocolError::VoteOutOfRange(6))));
}

fn submission(out: &setup::SetupOutput<Toy1009>, voter: &str, r: &mut ChaCha20Rng) -> Submission<Toy1009> {
    let e = &out.election;
    let pk = e.pk();
    let m = Scalar::from_u64(3);
    let x = Scalar::random_nonzero(r);
    let c = crate::elgamal::encrypt_exponent(&pk, &m, &x);
    Submission {
        voter_id: voter.into(),
        e_mac: c,
        e_vote: c,
        pok_mac: crate::zkp::pok_prove(&pk, &c, &m, &x, &cast::submission_context(e, voter, "mac"), r),
        pok_vote: crate::zkp::pok_prove(&pk, &c, &m, &x, &cast::submission_context(e, voter, "vote"), r),
    }
}

#[test]
fn commission_checks_submissions() {
    let mut r = rng(3);
    let mut out = setup::<Toy1009, _>(&toy_config(2, 1, 1), &mut r).unwrap();
    let sub = submission(&out, "V001", &mut r);
    let posted = cast_ec(&out.election, &mut out.board, &sub, &mut r).unwrap();
    let sk = out.shares[0].secret_share;
    assert_eq!(decrypt(&sk, &posted.e_vote), decrypt(&sk, &sub.e_vote));
    assert_eq!(
        cast_ec(&out.election, &mut out.board, &sub, &mut r),
        Err(EcReject::Duplicate)
    );
    let mut bad = submission(&out, "V002", &mut r);
    bad.pok_vote.response_m += Scalar::one();
    assert_eq!(cast_ec(&out.election, &mut out.board, &bad, &mut r), Err(EcReject::BadProof));
    assert!(out.board.read(ListId::Commit, "V002").is_empty());
    // a proof made for one voter does not transfer to another
    let mut moved = submission(&out, "V001", &mut r);
    moved.voter_id = "V002".into();
    assert_eq!(cast_ec(&out.election, &mut out.board, &moved, &mut r), Err(EcReject::BadProof));
    let stranger = submission(&out, "V999", &mut r);
    assert_eq!(cast_ec(&out.election, &mut out.board, &stranger, &mut r), Err(EcReject::NotOnRoll));
}

#[test]
fn withheld_commit_times_out() {
    let mut r = rng(4);
    let mut out = setup::<Toy1009, _>(&toy_config(2, 1, 1), &mut r).unwrap();
    let mut ec = Commission::new(1);
    ec.misbehaviour.insert("V001".into(), EcMisbehaviour::Withhold);
    let res = cast_device(&out.election, &mut out.board, &mut ec, "V001", VoteIndex(0), DeviceBehaviour::Honest, &mut r);
    assert!(matches!(res, Err(ProtocolError::CommitTimeout { .. })));
}

#[test]
fn paper_payloads_are_byte_exact() {
    let mut r = rng(5);
    let mut out = setup::<Toy1009, _>(&toy_config(1, 1, 1), &mut r).unwrap();
    let mut ec = Commission::new(1);
    let cast = cast_device(&out.election, &mut out.board, &mut ec, "V001", VoteIndex(2), DeviceBehaviour::Honest, &mut r).unwrap();
    let p1 = cast.paper1.payload();
    assert!(p1.starts_with(&format!("POSTMARK1|{}|2|1:Bob,2:Alice,3:Eve|", out.election.hash_hex())));
    assert_eq!(Paper1::<Toy1009>::parse(&p1).unwrap(), cast.paper1);
    assert_eq!(Paper1::<Toy1009>::parse(&p1).unwrap().payload(), p1);
    let p2 = cast.paper2.payload();
    assert_eq!(p2, format!("POSTMARK2|{}|V001", out.election.hash_hex()));
    assert_eq!(Paper2::parse(&p2).unwrap(), cast.paper2);
    assert_eq!(papers::payload_line(&cast.paper1.render(), "POSTMARK1"), Some(p1.as_str()));

    assert!(Paper1::<Toy1009>::parse(&p1.to_uppercase()).is_err());
    assert!(Paper1::<Toy1009>::parse(&format!("{p1}|extra")).is_err());
    assert!(Paper1::<Toy1009>::parse(&p1.replacen("|2|", "|02|", 1)).is_err());
    assert!(Paper2::parse("POSTMARK2|00|V001").is_err());
    // printed selection must match the index
    let mut wrong = cast.paper1.clone();
    wrong.vote_string = "1:Alice,2:Bob,3:Eve".into();
    assert!(wrong.check(&out.election).is_err());
    let mut other = cast.paper1.clone();
    other.election_hash[0] ^= 1;
    assert!(other.check(&out.election).is_err());
}

#[test]
fn postal_channel_logs_everything() {
    let mut r = rng(6);
    let mut out = setup::<Toy1009, _>(&toy_config(2, 1, 1), &mut r).unwrap();
    let mut ec = Commission::new(1);
    let cast = cast_device(&out.election, &mut out.board, &mut ec, "V001", VoteIndex(0), DeviceBehaviour::Honest, &mut r).unwrap();
    let mut ch = PostalChannel::new();
    let a = ch.send("V001", cast.paper1.payload(), cast.paper2.payload());
    let b = ch.send("V001", cast.paper1.payload(), cast.paper2.payload());
    let c = ch.send("V001", cast.paper1.payload(), cast.paper2.payload());
    ch.deliver(a).unwrap();
    ch.lose(b).unwrap();
    ch.substitute_paper1(c, &out.election, VoteIndex(5)).unwrap();
    let states: Vec<MailState> = ch.pieces().iter().map(|p| p.state).collect();
    assert_eq!(states, [MailState::Delivered, MailState::Lost, MailState::Substituted]);
    assert_eq!(ch.arrived().len(), 2);
    assert_eq!(ch.log.len(), 6);
    assert_eq!(ch.log[5].action, MailAction::Substituted { vote: VoteIndex(5) });
    let swapped = Paper1::<Toy1009>::parse(&ch.pieces()[2].paper1).unwrap();
    assert_eq!(swapped.vote, VoteIndex(5));
    assert_eq!(swapped.e_params, cast.paper1.e_params);
    let piece = &ch.pieces()[0];
    assert_eq!(&mail::MailPiece::from_toml(&piece.to_toml()).unwrap(), piece);
}

#[test]
fn receiving_sorts_ballots() {
    let mut r = rng(7);
    let mut out = setup::<Toy1009, _>(&toy_config(4, 1, 1), &mut r).unwrap();
    let mut ec = Commission::new(1);
    let mut ch = PostalChannel::new();
    for (i, v) in ["V001", "V002", "V003", "V004"].iter().enumerate() {
        let c = cast_device(&out.election, &mut out.board, &mut ec, v, VoteIndex(i as u64), DeviceBehaviour::Honest, &mut r).unwrap();
        let mut p1 = c.paper1.clone();
        if *v == "V002" {
            p1.proofs[0].response_r += Scalar::one();
        }
        let outer = if *v == "V003" { "V004" } else { v };
        ch.send(outer, p1.payload(), c.paper2.payload());
    }
    ch.send("Mallory", "junk".into(), "POSTMARK2|00|Mallory".into());
    for id in 0..5 {
        ch.deliver(id).unwrap();
    }
    let rep = process_vote(&out.election, &ch.arrived(), &out.envelopes, &mut out.board, &mut r).unwrap();
    assert_eq!(rep.received, 2);
    assert_eq!(rep.rejected_encrypted, 1);
    assert_eq!(rep.rejected_plain, ["V003", "Mallory"]);
    let received: Vec<records::ReceivedEntry<Toy1009>> = out
        .board
        .read_list(ListId::Received)
        .iter()
        .map(|r| Decode::from_bytes(&r.payload).unwrap())
        .collect();
    let mut votes: Vec<u64> = received.iter().map(|e| e.vote.0).collect();
    votes.sort();
    assert_eq!(votes, [0, 3]);
    // after the join nothing in the log names a voter
    let joined_log = format!("{:?}", &rep.events[rep.events.iter().position(|e| matches!(e, ReceiveEvent::BatchShuffled(_))).unwrap()..]);
    for v in ["V001", "V002", "V004"] {
        assert!(!joined_log.contains(v));
    }
}

#[test]
fn honest_toy_election_end_to_end() {
    for (n, k) in [(1, 1), (3, 2)] {
        let s = toy_scenario(5, n, k, 11 + n as u64);
        let run = run_scenario::<Toy1009>(&s).unwrap();
        assert_eq!(run.accepted().len(), 5, "{:?}", run.tally.skipped);
        let mut cast: Vec<VoteIndex> = s.ballots.iter().map(|b| b.1).collect();
        cast.sort();
        assert_eq!(run.tally_multiset(), cast);
        let gv = run.global_verify().unwrap();
        assert_eq!(gv.accepted.len(), 5);
        assert_eq!(run.id_sets().epsilon(), 0);
        for (v, _) in &s.ballots {
            assert_eq!(run.voter_verify(v), Some(VoterVerdict::Pass));
        }
        assert!(run.result(1).verdict.is_outcome());
        assert!(!run.result(0).verdict.is_outcome());
    }
}

fn rewrite(board: &Board, mut f: impl FnMut(usize, &crate::wbb::Record) -> Option<Vec<u8>>) -> Board {
    let mut idx = 0;
    Board::rechain(board.records().iter().map(|r| {
        let p = f(idx, r).unwrap_or_else(|| r.payload.clone());
        idx += 1;
        (r.list, r.key.clone(), p)
    }))
}

#[test]
fn audit_pinpoints_tampering() {
    let run = run_scenario::<Toy1009>(&toy_scenario(3, 1, 1, 21)).unwrap();
    run.global_verify().unwrap();

    let forged = rewrite(&run.board, |_, r| {
        (r.list == ListId::Mixed).then(|| {
            let mut m = MixedEntry::<Toy1009>::from_bytes(&r.payload).unwrap();
            m.id_bundle.partials[0].share_element *= Element::generator();
            m.to_bytes()
        })
    });
    assert_eq!(global_verify::<Toy1009>(&forged.snapshot()).unwrap_err().step, GvStep::FirstDecrypt);

    let mut mixed_seen = false;
    let flipped = rewrite(&run.board, |_, r| {
        (r.list == ListId::Tally && !mixed_seen).then(|| {
            mixed_seen = true;
            let mut t = records::TallyEntry::<Toy1009>::from_bytes(&r.payload).unwrap();
            t.vote = Some(VoteIndex(t.vote.unwrap().0 ^ 1));
            t.to_bytes()
        })
    });
    assert_eq!(global_verify::<Toy1009>(&flipped.snapshot()).unwrap_err().step, GvStep::FinalDecrypt);

    let unsealed = Board::rechain(
        run.board
            .records()
            .iter()
            .filter(|r| r.list != ListId::Final)
            .map(|r| (r.list, r.key.clone(), r.payload.clone())),
    );
    assert_eq!(global_verify::<Toy1009>(&unsealed.snapshot()).unwrap_err().step, GvStep::Structure);
}

#[test]
fn duplicate_commit_fails_uniqueness() {
    let s = toy_scenario(3, 1, 1, 22);
    let mut r = rng(22);
    let mut out = setup::<Toy1009, _>(&s.config, &mut r).unwrap();
    let mut ec = Commission::new(1);
    let mut ch = PostalChannel::new();
    for (v, vote) in &s.ballots {
        let c = cast_device(&out.election, &mut out.board, &mut ec, v, *vote, DeviceBehaviour::Honest, &mut r).unwrap();
        let id = ch.send(v, c.paper1.payload(), c.paper2.payload());
        ch.deliver(id).unwrap();
    }
    let first = out.board.read(ListId::Commit, "V002")[0].payload.clone();
    out.board.force_append(ListId::Commit, Some("V002"), &first);
    process_vote(&out.election, &ch.arrived(), &out.envelopes, &mut out.board, &mut r).unwrap();
    tally::tally(&out.election, &mut out.board, &out.shares, &mut r).unwrap();
    let err = global_verify::<Toy1009>(&out.board.snapshot()).unwrap_err();
    assert_eq!(err.step, GvStep::CommitUnique, "{err}");
}

#[test]
fn lost_ballots_and_result_threshold() {
    let s = toy_scenario(7, 1, 1, 23).lose("V002").lose("V006");
    let run = run_scenario::<Toy1009>(&s).unwrap();
    assert_eq!(run.accepted().len(), 5);
    assert_eq!(run.voter_verify("V002"), Some(VoterVerdict::NotAccepted));
    assert_eq!(run.voter_verify("V006"), Some(VoterVerdict::NotAccepted));
    assert_eq!(run.voter_verify("V001"), Some(VoterVerdict::Pass));
    assert_eq!(run.id_sets().epsilon(), 2);
    let verdicts: Vec<bool> = (0..6).map(|d| run.result(d).verdict.is_outcome()).collect();
    assert_eq!(verdicts, [false, false, false, true, true, true]);
    let res = run.result(3);
    assert_eq!(res.theta, 7.0 - (res.margin - 3.0));
    assert!(run
        .tally
        .skipped
        .iter()
        .any(|(s, r)| *s == SkipSubject::Voter("V002".into()) && *r == SkipReason::NoCorrectOpening));
}

#[test]
fn attacks_are_excluded_on_toy_group() {
    let base = toy_scenario(3, 1, 1, 31);
    let v = base.vote_of("V002").unwrap();
    let other = VoteIndex((v.0 + 1) % 6);
    let cases = [
        Attack::MailSubstitute { voter: "V002".into(), vote: other },
        Attack::ClientBogusOpenings { voter: "V002".into() },
        Attack::DuplicateOpening { voter: "V002".into(), vote: other },
    ];
    for a in cases {
        let run = run_scenario::<Toy1009>(&base.clone().with_attack(a.clone())).unwrap();
        assert!(!run.accepted().contains(&"V002".to_string()), "{a:?}");
        assert_eq!(run.accepted().len(), 2, "{a:?}");
        assert_eq!(run.voter_verify("V002"), Some(VoterVerdict::NotAccepted), "{a:?}");
        run.global_verify().unwrap();
    }
    let run = run_scenario::<Toy1009>(&base.clone().with_attack(Attack::FakeBoardPost { voter: "V003".into() })).unwrap();
    assert_eq!(run.accepted(), ["V001", "V002"]);
    assert_eq!(run.id_sets().epsilon(), 1);
}

#[test]
fn fake_view_passes_local_checks() {
    let mut r = rng(8);
    let mut out = setup::<Toy1009, _>(&toy_config(1, 1, 1), &mut r).unwrap();
    let mut ec = Commission::new(1);
    let cast = cast_device(&out.election, &mut out.board, &mut ec, "V001", VoteIndex(1), DeviceBehaviour::Honest, &mut r).unwrap();
    cast.view.local_checks(&out.election, &out.board).unwrap();
    let fake = fake_view(&out.election, &cast.view, VoteIndex(4), &mut r);
    fake.local_checks(&out.election, &out.board).unwrap();
    assert_eq!(fake.mac, mac_compute(&fake.secrets.a, &fake.secrets.b, VoteIndex(4)));
    let (tf, ff) = (cast.view.fields(), fake.fields());
    assert_eq!(tf.len(), ff.len());
    for ((n1, v1), (n2, v2)) in tf.iter().zip(&ff) {
        assert_eq!(n1, n2);
        assert_eq!(v1.len(), v2.len(), "{n1}");
        if v1 != v2 {
            assert!(VOTE_DEPENDENT_FIELDS.contains(n1) || FRESH_FIELDS.contains(n1), "{n1}");
        }
    }
    assert_eq!(cast.view.to_bytes().len(), fake.to_bytes().len());
    assert_eq!(VoterView::from_bytes(&fake.to_bytes()).unwrap(), fake);

    let mut broken = fake.clone();
    broken.mac += Scalar::one();
    assert!(broken.local_checks(&out.election, &out.board).is_err());
}

use super::fake_view::VoterView;
