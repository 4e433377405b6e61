//! The `postmark` command line. Every role acts on a run directory; see
//! [`rundir`] for the layout. Exit codes: 0 pass, 1 runtime error,
//! 2 verification failed, 3 usage, 4 board integrity.

pub mod bench;
pub mod rundir;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::group::{PrimeGroup, Ristretto, Toy1009};
use crate::protocol::cast::{cast_device, Commission, DeviceBehaviour};
use crate::protocol::mail::{MailPiece, MailState, PostalChannel};
use crate::protocol::outcome::{result, PaperOutcome};
use crate::protocol::papers::Paper1;
use crate::protocol::receive::process_vote;
use crate::protocol::setup::setup;
use crate::protocol::tally::tally;
use crate::protocol::verify::{global_verify, voter_verify, CastCheck};
use crate::protocol::{board_group, Election, ElectionConfig, ProtocolError};
use crate::encoding::VoteIndex;
use crate::wbb::{Board, WbbError};
use rundir::{RunDir, VoterNote};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_INTEGRITY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("board integrity: {0}")]
    Integrity(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Board(#[from] WbbError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ProtocolError as P;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Integrity(_) => EXIT_INTEGRITY,
            CliError::Board(e) | CliError::Protocol(P::Board(e)) if e.is_integrity() => EXIT_INTEGRITY,
            CliError::Protocol(
                P::Config(_)
                | P::ToyGroupRefused(_)
                | P::BadSelection(_)
                | P::UnknownVoter(_)
                | P::VoteOutOfRange(_)
                | P::DuplicateRegistration(_)
                | P::AlreadyTallied
                | P::NotEnoughTrustees { .. },
            ) => EXIT_USAGE,
            CliError::Protocol(P::GroupMismatch { .. } | P::MissingParams | P::Malformed { .. } | P::Codec(_)) => {
                EXIT_INTEGRITY
            }
            _ => EXIT_ERROR,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "postmark", version, about = "Verifiable postal voting: election roles, audit and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupChoice {
    Ristretto,
    /// 10-bit modular group; tests only, needs `allow_toy_group` in the config.
    Toy,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a run directory: keys, board parameters, roll and envelopes.
    Setup {
        config: PathBuf,
        rundir: PathBuf,
        #[arg(long, value_enum, default_value_t = GroupChoice::Ristretto)]
        group: GroupChoice,
    },
    /// Cast at the booth: device and commission, then print both papers.
    Vote {
        rundir: PathBuf,
        #[arg(long)]
        voter: String,
        /// e.g. `1:Alice,2:Bob,3:Eve` or `Alice>Bob>Eve`
        #[arg(long)]
        selection: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Put a voter's papers in the post.
    Mail {
        rundir: PathBuf,
        #[arg(long)]
        voter: String,
        /// The envelope never arrives.
        #[arg(long, conflicts_with = "substitute")]
        lose: bool,
        /// Someone rewrites the vote on paper 1 in transit.
        #[arg(long, value_name = "SELECTION")]
        substitute: Option<String>,
    },
    /// Open the mailbox and post received ballots.
    Receive {
        rundir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Mix, decrypt, match and count, then seal the board.
    Tally {
        rundir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// A voter's check against the board.
    Verify {
        rundir: PathBuf,
        #[arg(long)]
        voter: String,
    },
    /// Re-check every proof on the board. Takes a run directory or a board file.
    Audit { path: PathBuf },
    /// Decide whether the paper outcome stands.
    Result {
        rundir: PathBuf,
        #[arg(long)]
        paper_outcome: PathBuf,
        #[arg(long)]
        d: u64,
    },
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Prove and verify one shuffle of random rows.
    Shuffle(bench::ShuffleArgs),
}

/// Parse `args` (including the program name) and run, writing human output
/// to `out`. Returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            e.exit_code()
        }
    }
}

macro_rules! by_group {
    ($label:expr, $f:ident($($arg:expr),*)) => {
        match $label.as_str() {
            l if l == Ristretto::LABEL => $f::<Ristretto>($($arg),*),
            l if l == Toy1009::LABEL => $f::<Toy1009>($($arg),*),
            other => Err(CliError::Integrity(format!("unsupported group {other:?}"))),
        }
    };
}

pub fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Setup { config, rundir, group } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config.display())))?;
            let cfg = ElectionConfig::from_toml(&text)?;
            let dir = RunDir::new(rundir);
            match group {
                GroupChoice::Ristretto => cmd_setup::<Ristretto>(&dir, &cfg, out),
                GroupChoice::Toy => cmd_setup::<Toy1009>(&dir, &cfg, out),
            }
        }
        Command::Vote {
            rundir,
            voter,
            selection,
            seed,
        } => {
            let dir = RunDir::new(rundir);
            let label = group_of(&dir)?;
            by_group!(label, cmd_vote(&dir, &voter, &selection, seed, out))
        }
        Command::Mail {
            rundir,
            voter,
            lose,
            substitute,
        } => {
            let dir = RunDir::new(rundir);
            let label = group_of(&dir)?;
            by_group!(label, cmd_mail(&dir, &voter, lose, substitute.as_deref(), out))
        }
        Command::Receive { rundir, seed } => {
            let dir = RunDir::new(rundir);
            let label = group_of(&dir)?;
            by_group!(label, cmd_receive(&dir, seed, out))
        }
        Command::Tally { rundir, seed } => {
            let dir = RunDir::new(rundir);
            let label = group_of(&dir)?;
            by_group!(label, cmd_tally(&dir, seed, out))
        }
        Command::Verify { rundir, voter } => {
            let dir = RunDir::new(rundir);
            dir.require()?;
            cmd_verify(&dir, &voter, out)
        }
        Command::Audit { path } => {
            let board_path = if path.is_dir() { RunDir::new(&path).board_path() } else { path };
            let text = fs::read_to_string(&board_path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", board_path.display())))?;
            cmd_audit(&text, out)
        }
        Command::Result {
            rundir,
            paper_outcome,
            d,
        } => {
            let dir = RunDir::new(rundir);
            let label = group_of(&dir)?;
            let text = fs::read_to_string(&paper_outcome)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", paper_outcome.display())))?;
            let paper = PaperOutcome::from_toml(&text)?;
            by_group!(label, cmd_result(&dir, &paper, d, out))
        }
        Command::Bench(BenchCommand::Shuffle(args)) => bench::shuffle(&args, out),
    }
}

fn group_of(dir: &RunDir) -> Result<String, CliError> {
    dir.require()?;
    Ok(board_group(&dir.board()?)?)
}

fn cmd_setup<G: PrimeGroup>(dir: &RunDir, cfg: &ElectionConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let root = dir.root();
    if root.exists() && fs::read_dir(root)?.next().is_some() {
        return Err(CliError::Usage(format!("{} exists and is not empty", root.display())));
    }
    let mut rng = dir.rng(cfg, "setup", None);
    let res = setup::<G, _>(cfg, &mut rng)?;
    fs::create_dir_all(root)?;
    let _lock = dir.lock()?;
    fs::write(dir.config_path(), cfg.to_toml())?;
    dir.write_shares(&res.shares)?;
    dir.write_envelopes(&res.envelopes)?;
    for d in [dir.papers_dir(), dir.voters_dir(), dir.mailbox_dir()] {
        fs::create_dir_all(d)?;
    }
    dir.save_board(&res.board)?;
    writeln!(out, "election {}", res.election.hash_hex())?;
    writeln!(out, "group {}", G::LABEL)?;
    writeln!(out, "roll {} voters", res.election.roll().len())?;
    writeln!(out, "trustees {} of {}", cfg.trustees.k, cfg.trustees.n)?;
    writeln!(out, "selections {}", res.election.selections.len())?;
    Ok(EXIT_OK)
}

fn cmd_vote<G: PrimeGroup>(
    dir: &RunDir,
    voter: &str,
    selection: &str,
    seed: Option<u64>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let cfg = dir.config()?;
    let _lock = dir.lock()?;
    let mut board = dir.board()?;
    let election = Election::<G>::from_board(&board)?;
    let vote = election.selections.parse(selection)?;
    if election.roll_index(voter).is_none() {
        return Err(ProtocolError::UnknownVoter(voter.into()).into());
    }
    let mut rng = dir.rng(&cfg, &format!("vote/{voter}"), seed);
    let mut ec = Commission::<G>::new(rand::RngCore::next_u64(&mut rng));
    let cast = cast_device(&election, &mut board, &mut ec, voter, vote, DeviceBehaviour::Honest, &mut rng)?;
    dir.save_board(&board)?;
    let note = VoterNote {
        voter_id: voter.into(),
        intended: election.selections.vote_string(vote).unwrap_or_default(),
        intended_index: vote.0,
        printed_vote: cast.paper1.vote.0,
        printed_id: cast.paper2.voter_id.clone(),
    };
    fs::write(dir.paper_path(voter, 1), cast.paper1.render())?;
    fs::write(dir.paper_path(voter, 2), cast.paper2.render())?;
    dir.write_voter_note(&note)?;
    writeln!(out, "receipt {}", cast.receipt)?;
    writeln!(out, "paper 1: {}", dir.paper_path(voter, 1).display())?;
    writeln!(out, "  vote {}", cast.paper1.vote_string)?;
    writeln!(out, "paper 2: {}", dir.paper_path(voter, 2).display())?;
    writeln!(out, "  {}", cast.paper2.payload())?;
    Ok(EXIT_OK)
}

fn read_paper(dir: &RunDir, voter: &str, which: u8) -> Result<String, CliError> {
    let path = dir.paper_path(voter, which);
    let text = fs::read_to_string(&path).map_err(|_| CliError::Usage(format!("voter {voter} has no printed papers")))?;
    let tag = format!("POSTMARK{which}");
    crate::protocol::papers::payload_line(&text, &tag)
        .map(str::to_string)
        .ok_or_else(|| CliError::Usage(format!("{} holds no payload", path.display())))
}

fn cmd_mail<G: PrimeGroup>(
    dir: &RunDir,
    voter: &str,
    lose: bool,
    substitute: Option<&str>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let _lock = dir.lock()?;
    if dir.receive_log().exists() {
        return Err(CliError::Usage("the mailbox was already opened".into()));
    }
    let election = Election::<G>::from_board(&dir.board()?)?;
    let mut channel = PostalChannel::from_pieces(dir.mail()?);
    if channel.pieces().iter().any(|p| p.outer_identity == voter) {
        return Err(CliError::Usage(format!("voter {voter} already mailed")));
    }
    let p1 = read_paper(dir, voter, 1)?;
    let p2 = read_paper(dir, voter, 2)?;
    let id = channel.send(voter, p1, p2);
    if lose {
        channel.lose(id)?;
    } else if let Some(s) = substitute {
        let vote = election.selections.parse(s)?;
        channel.substitute_paper1(id, &election, vote)?;
    } else {
        channel.deliver(id)?;
    }
    let piece = channel.pieces().iter().find(|p| p.id == id).expect("just sent");
    dir.write_piece(piece)?;
    let state = match piece.state {
        MailState::InTransit => "in transit",
        MailState::Delivered => "delivered",
        MailState::Lost => "lost",
        MailState::Substituted => "delivered (paper 1 rewritten)",
    };
    writeln!(out, "piece {id} from {voter}: {state}")?;
    Ok(EXIT_OK)
}

fn cmd_receive<G: PrimeGroup>(dir: &RunDir, seed: Option<u64>, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = dir.config()?;
    let _lock = dir.lock()?;
    if dir.receive_log().exists() {
        return Err(CliError::Usage("ballots were already received".into()));
    }
    let mut board = dir.board()?;
    let election = Election::<G>::from_board(&board)?;
    let envelopes = dir.envelopes::<G>()?;
    let pieces: Vec<MailPiece> = dir.mail()?;
    let arrived: Vec<MailPiece> = pieces.iter().filter(|p| p.state.arrived()).cloned().collect();

    // scanned paper record, counted on first choices
    let mut paper = PaperOutcome {
        counts: election.selections.candidates.iter().map(|c| (c.clone(), 0)).collect(),
    };
    for p in &arrived {
        if let Some(c) = Paper1::<G>::parse(&p.paper1)
            .ok()
            .and_then(|p1| election.selections.first_choice(p1.vote))
        {
            *paper.counts.entry(c.to_string()).or_insert(0) += 1;
        }
    }

    let mut rng = dir.rng(&cfg, "receive", seed);
    let report = process_vote(&election, &arrived, &envelopes, &mut board, &mut rng)?;
    dir.save_board(&board)?;

    // paper 2 is gone: drop everything linking an identity to a ballot
    for p in &pieces {
        fs::remove_file(dir.piece_path(p.id))?;
    }
    let mut log = String::new();
    for e in &report.events {
        log.push_str(&format!("{e:?}\n"));
    }
    fs::write(dir.receive_log(), log)?;
    fs::write(dir.paper_outcome_path(), paper.to_toml())?;

    writeln!(out, "arrived {}", arrived.len())?;
    writeln!(out, "received {}", report.received)?;
    writeln!(out, "rejected before join {}", report.rejected_plain.len())?;
    writeln!(out, "rejected after join {}", report.rejected_encrypted)?;
    writeln!(out, "paper record: {}", dir.paper_outcome_path().display())?;
    Ok(EXIT_OK)
}

fn cmd_tally<G: PrimeGroup>(dir: &RunDir, seed: Option<u64>, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = dir.config()?;
    let _lock = dir.lock()?;
    let mut board = dir.board()?;
    let election = Election::<G>::from_board(&board)?;
    let shares = dir.shares::<G>()?;
    let mut rng = dir.rng(&cfg, "tally", seed);
    let report = tally(&election, &mut board, &shares, &mut rng)?;
    dir.save_board(&board)?;
    writeln!(out, "mixed {}", report.mixed)?;
    writeln!(out, "accepted {}", report.accepted.len())?;
    for (who, why) in &report.skipped {
        writeln!(out, "skipped {who:?}: {why:?}")?;
    }
    for (v, n) in report.counts() {
        let label = election.selections.vote_string(v).unwrap_or_else(|| format!("#{}", v.0));
        writeln!(out, "{label} = {n}")?;
    }
    writeln!(out, "board sealed at {}", board.head_hex())?;
    Ok(EXIT_OK)
}

fn cmd_verify(dir: &RunDir, voter: &str, out: &mut dyn Write) -> Result<i32, CliError> {
    let note = dir.voter_note(voter)?;
    let board = dir.board()?;
    let check = CastCheck {
        voter_id: note.voter_id,
        intended: VoteIndex(note.intended_index),
        printed_vote: VoteIndex(note.printed_vote),
        printed_id: note.printed_id,
    };
    let verdict = voter_verify(&check, &board.snapshot());
    writeln!(out, "{voter}: {verdict}")?;
    Ok(if verdict.passed() { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_audit(text: &str, out: &mut dyn Write) -> Result<i32, CliError> {
    let board = match Board::parse(text) {
        Ok(b) => b,
        Err(e) if e.is_integrity() => {
            writeln!(out, "audit FAIL at structure: {e}")?;
            return Ok(EXIT_INTEGRITY);
        }
        Err(e) => return Err(e.into()),
    };
    let label = board_group(&board)?;
    by_group!(label, audit_board(&board, out))
}

fn audit_board<G: PrimeGroup>(board: &Board, out: &mut dyn Write) -> Result<i32, CliError> {
    match global_verify::<G>(&board.snapshot()) {
        Ok(rep) => {
            writeln!(out, "audit PASS")?;
            writeln!(out, "received {}", rep.received)?;
            writeln!(out, "accepted {}", rep.accepted.len())?;
            writeln!(out, "tallied {}", rep.votes.len())?;
            Ok(EXIT_OK)
        }
        Err(f) => {
            writeln!(out, "audit FAIL at {f}")?;
            Ok(EXIT_VERIFY)
        }
    }
}

fn cmd_result<G: PrimeGroup>(dir: &RunDir, paper: &PaperOutcome, d: u64, out: &mut dyn Write) -> Result<i32, CliError> {
    let board = dir.board()?;
    let outcome = result::<G>(&board.snapshot(), paper, d);
    let report = outcome.report();
    fs::write(dir.outcome_path(), &report)?;
    write!(out, "{report}")?;
    Ok(if outcome.verdict.is_outcome() { EXIT_OK } else { EXIT_VERIFY })
}

impl std::fmt::Debug for RunDir {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RunDir({})", self.root().display())
    }
}

pub use bench::ShuffleArgs;
