//! C ABI over the public-verifier side of postmark: load a board, audit it,
//! run a voter's check, compute the detected-error count and the outcome
//! decision. Also exposes the command line as a function.
//!
//! Conventions: every fallible call returns a [`PmStatus`]; on failure a
//! message is kept per thread and read with [`pm_last_error`]. Handles are
//! opaque and freed by their `_free` function. Strings returned to the caller
//! are freed with [`pm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use postmark::encoding::VoteIndex;
use postmark::group::{PrimeGroup, Ristretto, Toy1009};
use postmark::protocol::outcome::{id_sets, result, PaperOutcome};
use postmark::protocol::verify::{global_verify, voter_verify, CastCheck, GvStep, VoterVerdict};
use postmark::protocol::{board_group, Election};
use postmark::wbb::{Board, WbbError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    /// The board file is malformed or its hash chain is broken.
    Integrity = 4,
    /// The board parsed but a check failed; see the out parameter.
    VerifyFailed = 5,
    UnsupportedGroup = 6,
    InvalidArgument = 7,
    Panic = 8,
}

/// Failing audit step, `PM_AUDIT_STEP_NONE` when the audit passes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmAuditStep {
    None = 0,
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

impl From<GvStep> for PmAuditStep {
    fn from(s: GvStep) -> Self {
        match s {
            GvStep::Structure => PmAuditStep::Structure,
            GvStep::Setup => PmAuditStep::Setup,
            GvStep::FirstMix => PmAuditStep::FirstMix,
            GvStep::FirstDecrypt => PmAuditStep::FirstDecrypt,
            GvStep::RejectedDecrypt => PmAuditStep::RejectedDecrypt,
            GvStep::Peps => PmAuditStep::Peps,
            GvStep::FinalMix => PmAuditStep::FinalMix,
            GvStep::FinalDecrypt => PmAuditStep::FinalDecrypt,
            GvStep::RegisteredUnique => PmAuditStep::RegisteredUnique,
            GvStep::CommitUnique => PmAuditStep::CommitUnique,
            GvStep::AcceptedFacts => PmAuditStep::AcceptedFacts,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmVoterVerdict {
    Pass = 0,
    PaperMismatch = 1,
    NotAccepted = 2,
    NotFinalized = 3,
}

/// A loaded bulletin board.
pub struct PmBoard {
    board: Board,
    group: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: PmStatus, msg: impl Into<String>) -> PmStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PmStatus) -> PmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PmStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, PmStatus> {
    if p.is_null() {
        return Err(fail(PmStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PmStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn wbb_status(e: &WbbError) -> PmStatus {
    if e.is_integrity() {
        PmStatus::Integrity
    } else {
        PmStatus::Io
    }
}

macro_rules! by_group {
    ($label:expr, $f:ident($($arg:expr),*)) => {
        match $label {
            l if l == Ristretto::LABEL => $f::<Ristretto>($($arg),*),
            l if l == Toy1009::LABEL => $f::<Toy1009>($($arg),*),
            other => Err(fail(PmStatus::UnsupportedGroup, format!("unsupported group {other:?}"))),
        }
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

fn wrap(board: Board, out: *mut *mut PmBoard) -> PmStatus {
    let group = match board_group(&board) {
        Ok(g) => g,
        Err(e) => return fail(PmStatus::Integrity, e.to_string()),
    };
    let handle = Box::new(PmBoard { board, group });
    // SAFETY: checked non-null by the callers.
    unsafe { *out = Box::into_raw(handle) };
    PmStatus::Ok
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` is NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn pm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load and chain-check a board file.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pm_board_load(path: *const c_char, out: *mut *mut PmBoard) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return fail(PmStatus::NullArgument, "out is null");
        }
        let path = tri!(str_arg(path));
        match Board::load(std::path::Path::new(path)) {
            Ok(b) => wrap(b, out),
            Err(e) => fail(wbb_status(&e), e.to_string()),
        }
    })
}

/// Parse a board from `len` bytes of text.
///
/// # Safety
/// `text` points to `len` readable bytes; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pm_board_parse(text: *const u8, len: usize, out: *mut *mut PmBoard) -> PmStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(PmStatus::NullArgument, "null argument");
        }
        let bytes = std::slice::from_raw_parts(text, len);
        let Ok(text) = std::str::from_utf8(bytes) else {
            return fail(PmStatus::InvalidUtf8, "board text is not UTF-8");
        };
        match Board::parse(text) {
            Ok(b) => wrap(b, out),
            Err(e) => fail(wbb_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `board` is NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pm_board_free(board: *mut PmBoard) {
    if !board.is_null() {
        drop(Box::from_raw(board));
    }
}

/// Number of records, 0 for NULL.
///
/// # Safety
/// `board` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_board_len(board: *const PmBoard) -> usize {
    board.as_ref().map_or(0, |b| b.board.len())
}

/// 1 if the board carries its final seal.
///
/// # Safety
/// `board` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_board_is_finalized(board: *const PmBoard) -> c_int {
    board.as_ref().map_or(0, |b| b.board.is_finalized() as c_int)
}

/// Chain head as 64 hex characters; free with [`pm_string_free`].
///
/// # Safety
/// `board` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_board_head_hex(board: *const PmBoard) -> *mut c_char {
    match board.as_ref() {
        Some(b) => CString::new(b.board.head_hex()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

fn audit_generic<G: PrimeGroup>(b: &Board) -> Result<(), (PmAuditStep, String)> {
    global_verify::<G>(&b.snapshot())
        .map(|_| ())
        .map_err(|f| (f.step.into(), f.to_string()))
}

/// Re-run every public check. Returns `PM_STATUS_OK` with step NONE on pass,
/// `PM_STATUS_VERIFY_FAILED` with the first failing step otherwise.
///
/// # Safety
/// `board` is a live handle; `step` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn pm_audit(board: *const PmBoard, step: *mut PmAuditStep) -> PmStatus {
    guard(|| {
        let Some(b) = board.as_ref() else {
            return fail(PmStatus::NullArgument, "board is null");
        };
        let res = match b.group.as_str() {
            l if l == Ristretto::LABEL => audit_generic::<Ristretto>(&b.board),
            l if l == Toy1009::LABEL => audit_generic::<Toy1009>(&b.board),
            other => return fail(PmStatus::UnsupportedGroup, format!("unsupported group {other:?}")),
        };
        let (s, status) = match res {
            Ok(()) => (PmAuditStep::None, PmStatus::Ok),
            Err((s, msg)) => (s, fail(PmStatus::VerifyFailed, msg)),
        };
        if let Some(out) = step.as_mut() {
            *out = s;
        }
        status
    })
}

fn epsilon_generic<G: PrimeGroup>(b: &Board) -> Result<u64, PmStatus> {
    id_sets::<G>(&b.snapshot())
        .map(|s| s.epsilon())
        .map_err(|e| fail(PmStatus::Integrity, e.to_string()))
}

/// Detected discrepancies between registered/received and tallied ids.
///
/// # Safety
/// `board` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pm_epsilon(board: *const PmBoard, out: *mut u64) -> PmStatus {
    guard(|| {
        let (Some(b), Some(out)) = (board.as_ref(), out.as_mut()) else {
            return fail(PmStatus::NullArgument, "null argument");
        };
        *out = tri!(by_group!(b.group.as_str(), epsilon_generic(&b.board)));
        PmStatus::Ok
    })
}

fn selection_generic<G: PrimeGroup>(b: &Board, text: &str) -> Result<u64, PmStatus> {
    let e = Election::<G>::from_board(b).map_err(|e| fail(PmStatus::Integrity, e.to_string()))?;
    e.selections
        .parse(text)
        .map(|v| v.0)
        .map_err(|e| fail(PmStatus::InvalidArgument, e.to_string()))
}

/// Index of a selection such as `"Alice>Bob>Eve"` in the board's list.
///
/// # Safety
/// `board` is a live handle; `text` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pm_selection_index(board: *const PmBoard, text: *const c_char, out: *mut u64) -> PmStatus {
    guard(|| {
        let (Some(b), Some(out)) = (board.as_ref(), out.as_mut()) else {
            return fail(PmStatus::NullArgument, "null argument");
        };
        let text = tri!(str_arg(text));
        *out = tri!(by_group!(b.group.as_str(), selection_generic(&b.board, text)));
        PmStatus::Ok
    })
}

/// The voter's check: printed papers against intent, then acceptance on the
/// sealed board.
///
/// # Safety
/// `board` is a live handle; strings are NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pm_voter_verify(
    board: *const PmBoard,
    voter_id: *const c_char,
    intended: u64,
    printed_vote: u64,
    printed_id: *const c_char,
    out: *mut PmVoterVerdict,
) -> PmStatus {
    guard(|| {
        let (Some(b), Some(out)) = (board.as_ref(), out.as_mut()) else {
            return fail(PmStatus::NullArgument, "null argument");
        };
        let check = CastCheck {
            voter_id: tri!(str_arg(voter_id)).to_string(),
            intended: VoteIndex(intended),
            printed_vote: VoteIndex(printed_vote),
            printed_id: tri!(str_arg(printed_id)).to_string(),
        };
        let verdict = voter_verify(&check, &b.board.snapshot());
        *out = match &verdict {
            VoterVerdict::Pass => PmVoterVerdict::Pass,
            VoterVerdict::PaperMismatch(_) => PmVoterVerdict::PaperMismatch,
            VoterVerdict::NotAccepted => PmVoterVerdict::NotAccepted,
            VoterVerdict::NotFinalized => PmVoterVerdict::NotFinalized,
        };
        if verdict.passed() {
            PmStatus::Ok
        } else {
            fail(PmStatus::VerifyFailed, verdict.to_string())
        }
    })
}

fn result_generic<G: PrimeGroup>(b: &Board, paper: &PaperOutcome, d: u64) -> Result<(bool, String), PmStatus> {
    let o = result::<G>(&b.snapshot(), paper, d);
    Ok((o.verdict.is_outcome(), o.report()))
}

/// Decide whether the paper outcome (TOML `[counts]` table) stands under
/// policy `d`. `accepted` gets 1 for the outcome, 0 for bottom. `report`, if
/// not NULL, receives the full report; free it with [`pm_string_free`].
///
/// # Safety
/// `board` is a live handle; `paper_toml` is NUL-terminated; `accepted` is
/// writable; `report` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn pm_result(
    board: *const PmBoard,
    paper_toml: *const c_char,
    d: u64,
    accepted: *mut c_int,
    report: *mut *mut c_char,
) -> PmStatus {
    guard(|| {
        let (Some(b), Some(accepted)) = (board.as_ref(), accepted.as_mut()) else {
            return fail(PmStatus::NullArgument, "null argument");
        };
        let paper = match PaperOutcome::from_toml(tri!(str_arg(paper_toml))) {
            Ok(p) => p,
            Err(e) => return fail(PmStatus::InvalidArgument, e.to_string()),
        };
        let (ok, text) = tri!(by_group!(b.group.as_str(), result_generic(&b.board, &paper, d)));
        *accepted = ok as c_int;
        if let Some(r) = report.as_mut() {
            *r = CString::new(text).map_or(ptr::null_mut(), CString::into_raw);
        }
        PmStatus::Ok
    })
}

/// Run the command line with `argc` arguments (program name first). Output
/// goes to stdout; the return value is the command's exit code.
///
/// # Safety
/// `argv` holds `argc` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn pm_cli_run(argc: c_int, argv: *const *const c_char) -> c_int {
    if argv.is_null() || argc < 1 {
        set_error("argv is empty");
        return postmark::cli::EXIT_USAGE;
    }
    let mut args = Vec::with_capacity(argc as usize);
    for i in 0..argc as usize {
        match str_arg(*argv.add(i)) {
            Ok(s) => args.push(s.to_string()),
            Err(_) => return postmark::cli::EXIT_USAGE,
        }
    }
    match catch_unwind(|| postmark::cli::run_with(args, &mut std::io::stdout())) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            postmark::cli::EXIT_ERROR
        }
    }
}
