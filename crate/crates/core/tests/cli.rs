use std::fs;
use std::path::{Path, PathBuf};

use postmark::cli::{run_with, EXIT_INTEGRITY, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use postmark::codec::{Decode, Encode};
use postmark::encoding::VoteIndex;
use postmark::group::Toy1009;
use postmark::protocol::records::TallyEntry;
use postmark::wbb::{Board, ListId};

fn pm(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run_with(std::iter::once("postmark").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn config(voters: &[&str], n: u32, k: u32) -> String {
    let list: Vec<String> = voters.iter().map(|v| format!("{v:?}")).collect();
    format!(
        "name = \"cli\"\ncandidates = [\"Alice\", \"Bob\", \"Eve\"]\nvoters = [{}]\nseed = 42\nallow_toy_group = true\n\n[trustees]\nn = {n}\nk = {k}\n",
        list.join(", ")
    )
}

struct Run {
    _tmp: tempfile::TempDir,
    dir: PathBuf,
}

impl Run {
    fn s(&self) -> &str {
        self.dir.to_str().unwrap()
    }
}

fn setup(voters: &[&str], n: u32, k: u32) -> Run {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("e.toml");
    fs::write(&cfg, config(voters, n, k)).unwrap();
    let dir = tmp.path().join("run");
    let (code, out) = pm(&["setup", cfg.to_str().unwrap(), dir.to_str().unwrap(), "--group", "toy"]);
    assert_eq!(code, EXIT_OK, "{out}");
    Run { _tmp: tmp, dir }
}

const SELECTIONS: [&str; 4] = ["Alice>Bob>Eve", "Bob>Eve>Alice", "Eve>Alice>Bob", "Alice>Eve>Bob"];

fn vote_all(r: &Run, voters: &[&str]) {
    for (i, v) in voters.iter().enumerate() {
        let (code, out) = pm(&["vote", r.s(), "--voter", v, "--selection", SELECTIONS[i % 4]]);
        assert_eq!(code, EXIT_OK, "{out}");
    }
}

fn board(dir: &Path) -> Board {
    Board::load(&dir.join("board.wbb")).unwrap()
}

#[test]
fn setup_writes_roll_and_refuses_reruns() {
    let r = setup(&["A", "B", "C"], 3, 2);
    assert_eq!(board(&r.dir).read_list(ListId::Roll).len(), 3);
    assert_eq!(fs::read_dir(r.dir.join("trustees")).unwrap().count(), 3);
    assert_eq!(fs::read_to_string(r.dir.join("envelopes")).unwrap().lines().count(), 3);
    let before = fs::read(r.dir.join("board.wbb")).unwrap();
    let cfg = r.dir.join("config.toml");
    let (code, out) = pm(&["setup", cfg.to_str().unwrap(), r.s(), "--group", "toy"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(out.contains("not empty"));
    assert_eq!(fs::read(r.dir.join("board.wbb")).unwrap(), before);
}

#[test]
fn setup_rejects_bad_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("e.toml");
    fs::write(&cfg, config(&["A"], 2, 3)).unwrap();
    let dir = tmp.path().join("run");
    let (code, out) = pm(&["setup", cfg.to_str().unwrap(), dir.to_str().unwrap(), "--group", "toy"]);
    assert_eq!(code, EXIT_USAGE, "{out}");
    assert!(!dir.join("board.wbb").exists());

    fs::write(&cfg, config(&["A"], 1, 1).replace("allow_toy_group = true\n", "")).unwrap();
    let (code, _) = pm(&["setup", cfg.to_str().unwrap(), dir.to_str().unwrap(), "--group", "toy"]);
    assert_eq!(code, EXIT_USAGE);

    fs::write(&cfg, "candidates = [\"A\"]\ncolour = 3\n").unwrap();
    let (code, _) = pm(&["setup", cfg.to_str().unwrap(), dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _) = pm(&["setup", "/nonexistent/e.toml", dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn vote_prints_papers_and_is_reproducible() {
    let a = setup(&["A", "B"], 1, 1);
    let b = setup(&["A", "B"], 1, 1);
    for r in [&a, &b] {
        let (code, out) = pm(&["vote", r.s(), "--voter", "A", "--selection", "Bob>Alice>Eve", "--seed", "9"]);
        assert_eq!(code, EXIT_OK, "{out}");
    }
    let p1 = fs::read_to_string(a.dir.join("papers/A.paper1")).unwrap();
    assert!(p1.contains("1:Bob,2:Alice,3:Eve"));
    assert!(p1.lines().any(|l| l.starts_with("POSTMARK1|")));
    assert!(fs::read_to_string(a.dir.join("papers/A.paper2")).unwrap().contains("|A"));
    for f in ["board.wbb", "papers/A.paper1", "papers/A.paper2", "voters/A.toml"] {
        assert_eq!(fs::read(a.dir.join(f)).unwrap(), fs::read(b.dir.join(f)).unwrap(), "{f}");
    }

    let (code, _) = pm(&["vote", a.s(), "--voter", "Z", "--selection", "Bob>Alice>Eve"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _) = pm(&["vote", a.s(), "--voter", "A", "--selection", "Bob>Alice>Eve"]);
    assert_eq!(code, EXIT_USAGE, "second cast refused");
    let (code, _) = pm(&["vote", a.s(), "--voter", "B", "--selection", "Bob>Bob>Eve"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _) = pm(&["vote", "/nonexistent", "--voter", "B", "--selection", "Bob"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn honest_pipeline_passes_audit_and_result() {
    let voters = ["A", "B", "C", "D"];
    let r = setup(&voters, 3, 2);
    vote_all(&r, &voters);
    for v in voters {
        let (code, out) = pm(&["mail", r.s(), "--voter", v]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("delivered"));
    }
    let (code, out) = pm(&["mail", r.s(), "--voter", "A"]);
    assert_eq!(code, EXIT_USAGE, "{out}");
    let (code, out) = pm(&["receive", r.s()]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("received 4"));

    // paper 2 destroyed: nothing left linking ids to ballots
    assert_eq!(fs::read_dir(r.dir.join("mailbox")).unwrap().count(), 0);
    let log = fs::read_to_string(r.dir.join("receive.log")).unwrap();
    for v in voters {
        assert!(!log.contains(&format!("\"{v}\"")), "{log}");
    }
    let (code, _) = pm(&["receive", r.s()]);
    assert_eq!(code, EXIT_USAGE);

    let (code, out) = pm(&["tally", r.s()]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("accepted 4"));
    let sealed = fs::read(r.dir.join("board.wbb")).unwrap();
    let (code, _) = pm(&["tally", r.s()]);
    assert_eq!(code, EXIT_USAGE);
    assert_eq!(fs::read(r.dir.join("board.wbb")).unwrap(), sealed);

    let (code, out) = pm(&["audit", r.s()]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("audit PASS"));
    for v in voters {
        let (code, out) = pm(&["verify", r.s(), "--voter", v]);
        assert_eq!(code, EXIT_OK, "{out}");
    }
    let paper = r.dir.join("paper-outcome.toml");
    let (code, out) = pm(&["result", r.s(), "--paper-outcome", paper.to_str().unwrap(), "--d", "1"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("verdict = \"outcome\""));
    assert!(out.contains("epsilon = 0"));
    assert!(fs::read_to_string(r.dir.join("outcome.toml")).unwrap().contains("outcome"));
}

#[test]
fn lost_and_substituted_mail_are_caught() {
    let voters = ["A", "B", "C"];
    let r = setup(&voters, 1, 1);
    vote_all(&r, &voters);
    assert_eq!(pm(&["mail", r.s(), "--voter", "A"]).0, EXIT_OK);
    assert_eq!(pm(&["mail", r.s(), "--voter", "B", "--lose"]).0, EXIT_OK);
    let (code, out) = pm(&["mail", r.s(), "--voter", "C", "--substitute", "Bob>Alice>Eve"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("rewritten"));
    let (code, _) = pm(&["mail", r.s(), "--voter", "A", "--lose", "--substitute", "Bob"]);
    assert_eq!(code, EXIT_USAGE);
    assert_eq!(pm(&["receive", r.s()]).0, EXIT_OK);
    let (code, out) = pm(&["tally", r.s()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("accepted 1"), "{out}");
    assert!(out.contains("PepVoteFailed"), "{out}");

    assert_eq!(pm(&["verify", r.s(), "--voter", "A"]).0, EXIT_OK);
    let (code, out) = pm(&["verify", r.s(), "--voter", "B"]);
    assert_eq!(code, EXIT_VERIFY);
    assert!(out.contains("not accepted"));
    assert_eq!(pm(&["verify", r.s(), "--voter", "C"]).0, EXIT_VERIFY);
    assert_eq!(pm(&["audit", r.s()]).0, EXIT_OK);

    let paper = r.dir.join("paper-outcome.toml");
    let paper = paper.to_str().unwrap();
    // B lost: epsilon counts it; C was received and not tallied: counted too
    let (code, out) = pm(&["result", r.s(), "--paper-outcome", paper, "--d", "0"]);
    assert_eq!(code, EXIT_VERIFY);
    assert!(out.contains("verdict = \"bottom\""));
    assert!(out.contains("epsilon = 2"), "{out}");
    assert_eq!(pm(&["result", r.s(), "--paper-outcome", paper, "--d", "3"]).0, EXIT_OK);
}

#[test]
fn one_lost_ballot_with_zero_tolerance_is_bottom() {
    let voters = ["A", "B"];
    let r = setup(&voters, 1, 1);
    vote_all(&r, &voters);
    assert_eq!(pm(&["mail", r.s(), "--voter", "A"]).0, EXIT_OK);
    assert_eq!(pm(&["mail", r.s(), "--voter", "B", "--lose"]).0, EXIT_OK);
    assert_eq!(pm(&["receive", r.s()]).0, EXIT_OK);
    assert_eq!(pm(&["tally", r.s()]).0, EXIT_OK);
    let paper = r.dir.join("paper-outcome.toml");
    let (code, out) = pm(&["result", r.s(), "--paper-outcome", paper.to_str().unwrap(), "--d", "0"]);
    assert_eq!(code, EXIT_VERIFY);
    assert!(out.contains("epsilon = 1"));
}

#[test]
fn audit_pinpoints_tampering() {
    let voters = ["A", "B"];
    let r = setup(&voters, 1, 1);
    vote_all(&r, &voters);
    for v in voters {
        assert_eq!(pm(&["mail", r.s(), "--voter", v]).0, EXIT_OK);
    }
    assert_eq!(pm(&["receive", r.s()]).0, EXIT_OK);
    assert_eq!(pm(&["tally", r.s()]).0, EXIT_OK);
    let good = board(&r.dir);

    // rewrite a decrypted vote and rechain: the chain holds, the proofs do not
    let mut touched = false;
    let forged = Board::rechain(good.records().iter().map(|rec| {
        let mut p = rec.payload.clone();
        if rec.list == ListId::Tally && !touched {
            touched = true;
            let mut t = TallyEntry::<Toy1009>::from_bytes(&p).unwrap();
            t.vote = Some(VoteIndex(t.vote.unwrap().0 ^ 1));
            p = t.to_bytes();
        }
        (rec.list, rec.key.clone(), p)
    }));
    let forged_path = r.dir.join("forged.wbb");
    forged.save(&forged_path).unwrap();
    let (code, out) = pm(&["audit", forged_path.to_str().unwrap()]);
    assert_eq!(code, EXIT_VERIFY, "{out}");
    assert!(out.contains("FAIL at final-decrypt"), "{out}");

    // an edited line without rechaining is a chain break
    let text = fs::read_to_string(r.dir.join("board.wbb")).unwrap();
    let broken = text.replacen("|A|", "|B|", 1);
    assert_ne!(broken, text);
    let broken_path = r.dir.join("broken.wbb");
    fs::write(&broken_path, broken).unwrap();
    let (code, out) = pm(&["audit", broken_path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INTEGRITY, "{out}");

    // roles refuse to touch a broken board
    fs::copy(&broken_path, r.dir.join("board.wbb")).unwrap();
    assert_eq!(pm(&["verify", r.s(), "--voter", "A"]).0, EXIT_INTEGRITY);
}

#[test]
fn bench_reports_timings() {
    let (code, out) = pm(&["bench", "shuffle", "--rows", "0"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("nothing"));
    let (code, out) = pm(&["bench", "shuffle", "--rows", "1000", "--width", "6", "--threads", "1"]);
    assert_eq!(code, EXIT_OK, "{out}");
    let secs = |what: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(what)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!(secs("verify") < secs("prove"), "{out}");
    assert!(out.contains("valid true"));
    assert!(out.contains("38.34"));
    assert_eq!(pm(&["bench", "shuffle", "--rows", "3", "--width", "0"]).0, EXIT_USAGE);
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(pm(&[]).0, EXIT_USAGE);
    assert_eq!(pm(&["vote"]).0, EXIT_USAGE);
    assert_eq!(pm(&["result", "x", "--d", "notanumber", "--paper-outcome", "p"]).0, EXIT_USAGE);
    assert_eq!(pm(&["--help"]).0, EXIT_OK);
}
