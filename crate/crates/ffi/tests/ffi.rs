use std::ffi::{c_char, CStr, CString};
use std::fs;
use std::path::Path;
use std::ptr;

use postmark_ffi::*;

const CONFIG: &str = r#"
name = "ffi"
candidates = ["Alice", "Bob", "Eve"]
voters = ["V1", "V2", "V3"]
seed = 5
allow_toy_group = true

[trustees]
n = 3
k = 2
"#;

fn cli(args: &[&str]) -> i32 {
    let owned: Vec<CString> = std::iter::once("postmark")
        .chain(args.iter().copied())
        .map(|a| CString::new(a).unwrap())
        .collect();
    let ptrs: Vec<*const c_char> = owned.iter().map(|c| c.as_ptr()).collect();
    unsafe { pm_cli_run(ptrs.len() as i32, ptrs.as_ptr()) }
}

/// Three voters, V2's mail lost, tallied on the toy group.
fn election(dir: &Path) -> String {
    let cfg = dir.join("e.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let run = dir.join("run");
    let run_s = run.to_str().unwrap();
    assert_eq!(cli(&["setup", cfg.to_str().unwrap(), run_s, "--group", "toy"]), 0);
    for (v, s) in [("V1", "Alice>Bob>Eve"), ("V2", "Bob>Eve>Alice"), ("V3", "Eve>Alice>Bob")] {
        assert_eq!(cli(&["vote", run_s, "--voter", v, "--selection", s]), 0);
    }
    assert_eq!(cli(&["mail", run_s, "--voter", "V1"]), 0);
    assert_eq!(cli(&["mail", run_s, "--voter", "V2", "--lose"]), 0);
    assert_eq!(cli(&["mail", run_s, "--voter", "V3"]), 0);
    assert_eq!(cli(&["receive", run_s]), 0);
    assert_eq!(cli(&["tally", run_s]), 0);
    run.join("board.wbb").to_str().unwrap().to_string()
}

fn load(path: &str) -> *mut PmBoard {
    let c = CString::new(path).unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { pm_board_load(c.as_ptr(), &mut b) }, PmStatus::Ok);
    assert!(!b.is_null());
    b
}

fn last_error() -> String {
    let p = pm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn audit_epsilon_and_result_through_the_c_abi() {
    let tmp = tempfile::tempdir().unwrap();
    let path = election(tmp.path());
    let b = load(&path);
    unsafe {
        assert!(pm_board_len(b) > 10);
        assert_eq!(pm_board_is_finalized(b), 1);
        let head = pm_board_head_hex(b);
        assert_eq!(CStr::from_ptr(head).to_bytes().len(), 64);
        pm_string_free(head);

        let mut step = PmAuditStep::Structure;
        assert_eq!(pm_audit(b, &mut step), PmStatus::Ok);
        assert_eq!(step, PmAuditStep::None);

        let mut eps = 99;
        assert_eq!(pm_epsilon(b, &mut eps), PmStatus::Ok);
        assert_eq!(eps, 1);

        let paper = CString::new("[counts]\nAlice = 1\nBob = 0\nEve = 1\n").unwrap();
        let mut accepted = -1;
        let mut report = ptr::null_mut();
        assert_eq!(pm_result(b, paper.as_ptr(), 2, &mut accepted, &mut report), PmStatus::Ok);
        assert_eq!(accepted, 1);
        assert!(CStr::from_ptr(report).to_str().unwrap().contains("epsilon = 1"));
        pm_string_free(report);
        assert_eq!(pm_result(b, paper.as_ptr(), 1, &mut accepted, ptr::null_mut()), PmStatus::Ok);
        assert_eq!(accepted, 0);
        pm_board_free(b);
    }
}

#[test]
fn voter_checks_through_the_c_abi() {
    let tmp = tempfile::tempdir().unwrap();
    let path = election(tmp.path());
    let b = load(&path);
    unsafe {
        let sel = CString::new("Alice>Bob>Eve").unwrap();
        let mut idx = 0;
        assert_eq!(pm_selection_index(b, sel.as_ptr(), &mut idx), PmStatus::Ok);
        let v1 = CString::new("V1").unwrap();
        let mut verdict = PmVoterVerdict::NotFinalized;
        assert_eq!(pm_voter_verify(b, v1.as_ptr(), idx, idx, v1.as_ptr(), &mut verdict), PmStatus::Ok);
        assert_eq!(verdict, PmVoterVerdict::Pass);
        assert_eq!(
            pm_voter_verify(b, v1.as_ptr(), idx, idx + 1, v1.as_ptr(), &mut verdict),
            PmStatus::VerifyFailed
        );
        assert_eq!(verdict, PmVoterVerdict::PaperMismatch);

        let sel2 = CString::new("Bob>Eve>Alice").unwrap();
        assert_eq!(pm_selection_index(b, sel2.as_ptr(), &mut idx), PmStatus::Ok);
        let v2 = CString::new("V2").unwrap();
        assert_eq!(
            pm_voter_verify(b, v2.as_ptr(), idx, idx, v2.as_ptr(), &mut verdict),
            PmStatus::VerifyFailed
        );
        assert_eq!(verdict, PmVoterVerdict::NotAccepted);
        assert!(last_error().contains("not accepted"));

        let bad = CString::new("Alice>Alice").unwrap();
        assert_eq!(pm_selection_index(b, bad.as_ptr(), &mut idx), PmStatus::InvalidArgument);
        pm_board_free(b);
    }
}

#[test]
fn errors_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let path = election(tmp.path());
    let mut text = fs::read_to_string(&path).unwrap();
    // flip the last chain nibble on the third line
    let pos = text.match_indices('\n').nth(2).unwrap().0 - 1;
    let flipped = if &text[pos..pos + 1] == "0" { "1" } else { "0" };
    text.replace_range(pos..pos + 1, flipped);

    let mut b = ptr::null_mut();
    unsafe {
        assert_eq!(pm_board_parse(text.as_ptr(), text.len(), &mut b), PmStatus::Integrity);
        assert!(b.is_null());
        assert!(last_error().contains("chain"), "{}", last_error());

        let missing = CString::new(tmp.path().join("nope").to_str().unwrap()).unwrap();
        assert_eq!(pm_board_load(missing.as_ptr(), &mut b), PmStatus::Io);
        assert_eq!(pm_board_load(ptr::null(), &mut b), PmStatus::NullArgument);
        assert_eq!(pm_audit(ptr::null(), ptr::null_mut()), PmStatus::NullArgument);
        let bad_utf8 = [0xffu8, 0xfe];
        assert_eq!(pm_board_parse(bad_utf8.as_ptr(), 2, &mut b), PmStatus::InvalidUtf8);

        // an empty board has no parameters record
        assert_eq!(pm_board_parse(b"".as_ptr(), 0, &mut b), PmStatus::Integrity);

        assert_eq!(pm_board_len(ptr::null()), 0);
        pm_board_free(ptr::null_mut());
        pm_string_free(ptr::null_mut());
        assert!(!CStr::from_ptr(pm_version()).to_bytes().is_empty());
    }
    assert_eq!(cli(&["frobnicate"]), 3);
}

#[test]
fn header_declares_every_export() {
    let header = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/postmark.h")).unwrap();
    let src = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 12);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    for t in ["typedef struct PmBoard PmBoard;", "PM_STATUS_INTEGRITY = 4", "PM_AUDIT_STEP_COMMIT_UNIQUE"] {
        assert!(header.contains(t), "{t}");
    }
}
