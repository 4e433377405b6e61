//! Non-interactive zero-knowledge proofs over a [`PrimeGroup`](crate::group::PrimeGroup).

mod chaum_pedersen;
pub mod pep;
mod pok;
mod transcript;

pub use chaum_pedersen::{cp_prove, cp_verify, ChaumPedersenProof};
pub use pok::{enc_prove, enc_verify, pok_prove, pok_verify, PokCiphertext};
pub use transcript::FsTranscript;
