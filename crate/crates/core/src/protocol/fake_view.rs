//! A voter's local view and the coercion-resistance simulator.
//!
//! An honest voter who remembers everything knows the secrets, the vote, the
//! MAC and all encryption randomness. [`fake_view`] produces a view for a
//! different vote that passes every check the true one does.

use rand_core::{CryptoRng, RngCore};

use super::papers::{Paper1, VoterSecrets};
use super::records::RegisteredEntry;
use super::{decode_record, Election};
use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::elgamal::{encrypt_exponent, Ciphertext};
use crate::encoding::{mac_compute, scalar_to_limbs, VoteIndex};
use crate::group::{PrimeGroup, Scalar};
use crate::wbb::{Board, ListId};
use crate::zkp::PokCiphertext;

#[derive(Debug, Clone, PartialEq)]
pub struct VoterView<G: PrimeGroup> {
    pub voter_id: String,
    pub secrets: VoterSecrets<G>,
    pub vote: VoteIndex,
    pub mac: Scalar<G>,
    pub e_vote: Ciphertext<G>,
    pub r_vote: Scalar<G>,
    pub e_mac: Ciphertext<G>,
    pub r_mac: Scalar<G>,
    pub registered: RegisteredEntry<G>,
    pub e_params: Vec<Ciphertext<G>>,
    pub param_randomness: Vec<Scalar<G>>,
    pub param_proofs: Vec<PokCiphertext<G>>,
}

/// Fields whose values legitimately depend on the vote.
pub const VOTE_DEPENDENT_FIELDS: [&str; 5] = ["vote", "mac", "e_vote", "r_vote", "e_mac"];
/// Fresh randomness, independent of everything else.
pub const FRESH_FIELDS: [&str; 1] = ["r_mac"];

impl<G: PrimeGroup> VoterView<G> {
    /// Named, serialized fields in a fixed order.
    pub fn fields(&self) -> Vec<(&'static str, Vec<u8>)> {
        let enc = |f: &dyn Fn(&mut Writer)| {
            let mut w = Writer::new();
            f(&mut w);
            w.finish()
        };
        vec![
            ("voter_id", enc(&|w| { w.str(&self.voter_id); })),
            ("a", self.secrets.a.to_bytes()),
            ("b", self.secrets.b.to_bytes()),
            ("r_a", self.secrets.r_a.to_bytes()),
            ("r_b", self.secrets.r_b.to_bytes()),
            // fixed width so the field length does not leak the vote
            ("vote", self.vote.0.to_be_bytes().to_vec()),
            ("mac", self.mac.to_bytes()),
            ("e_vote", self.e_vote.to_bytes()),
            ("r_vote", self.r_vote.to_bytes()),
            ("e_mac", self.e_mac.to_bytes()),
            ("r_mac", self.r_mac.to_bytes()),
            ("registered", self.registered.to_bytes()),
            ("e_params", enc(&|w| { w.seq(&self.e_params); })),
            ("param_randomness", enc(&|w| { w.seq(&self.param_randomness); })),
            ("param_proofs", enc(&|w| { w.seq(&self.param_proofs); })),
        ]
    }

    /// The paper 1 this view corresponds to.
    pub fn paper1(&self, election: &Election<G>) -> Option<Paper1<G>> {
        Some(Paper1 {
            election_hash: election.hash,
            vote: self.vote,
            vote_string: election.selections.vote_string(self.vote)?,
            e_params: self.e_params.clone(),
            proofs: self.param_proofs.clone(),
        })
    }

    /// Every check the voter (or a coercer holding the view) can run locally
    /// and against the board. Returns the first failing check.
    pub fn local_checks(&self, election: &Election<G>, board: &Board) -> Result<(), String> {
        let ped = &election.params.pedersen;
        let s = &self.secrets;
        let rec = board
            .read(ListId::Registered, &self.voter_id)
            .into_iter()
            .next()
            .ok_or("no registered commitments on the board")?;
        let posted: RegisteredEntry<G> =
            decode_record(ListId::Registered, &rec.payload).map_err(|e| e.to_string())?;
        if posted != self.registered {
            return Err("remembered commitments differ from the board".into());
        }
        if !ped.verify_opening(&posted.c_a, &s.a, &s.r_a) {
            return Err("c_a does not open to (a, r_a)".into());
        }
        if !ped.verify_opening(&posted.c_b, &s.b, &s.r_b) {
            return Err("c_b does not open to (b, r_b)".into());
        }
        if mac_compute(&s.a, &s.b, self.vote) != self.mac {
            return Err("MAC relation fails".into());
        }
        let pk = election.pk();
        if encrypt_exponent(&pk, &Scalar::from_u64(self.vote.0), &self.r_vote) != self.e_vote {
            return Err("e_vote does not open to the vote".into());
        }
        if encrypt_exponent(&pk, &self.mac, &self.r_mac) != self.e_mac {
            return Err("e_mac does not open to the MAC".into());
        }
        if self.e_params.len() != election.param_cells() || self.param_randomness.len() != self.e_params.len() {
            return Err("wrong number of parameter ciphertexts".into());
        }
        let mut cell = 0;
        for secret in s.as_array() {
            let limbs = scalar_to_limbs(&secret, election.params.limb_bits).map_err(|e| e.to_string())?;
            for limb in limbs.limbs {
                let expect = encrypt_exponent(&pk, &Scalar::from_u64(limb), &self.param_randomness[cell]);
                if expect != self.e_params[cell] {
                    return Err(format!("parameter cell {cell} does not open to its limb"));
                }
                cell += 1;
            }
        }
        let paper = self.paper1(election).ok_or("vote is not an allowed selection")?;
        let reparsed = Paper1::<G>::parse(&paper.payload()).map_err(|e| e.to_string())?;
        reparsed.check(election).map_err(|e| e.to_string())?;
        Ok(())
    }
}

impl<G: PrimeGroup> Encode for VoterView<G> {
    fn encode(&self, w: &mut Writer) {
        w.str(&self.voter_id)
            .put(&self.secrets)
            .u64(self.vote.0)
            .scalar(&self.mac)
            .put(&self.e_vote)
            .scalar(&self.r_vote)
            .put(&self.e_mac)
            .scalar(&self.r_mac)
            .put(&self.registered)
            .seq(&self.e_params)
            .seq(&self.param_randomness)
            .seq(&self.param_proofs);
    }
}

impl<G: PrimeGroup> Decode for VoterView<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(VoterView {
            voter_id: r.str()?,
            secrets: r.get()?,
            vote: VoteIndex(r.u64()?),
            mac: r.scalar()?,
            e_vote: r.get()?,
            r_vote: r.scalar()?,
            e_mac: r.get()?,
            r_mac: r.scalar()?,
            registered: r.get()?,
            e_params: r.seq()?,
            param_randomness: r.seq()?,
            param_proofs: r.seq()?,
        })
    }
}

/// Same secrets and paper parameters, coerced vote `v'`, `MAC' = a*v' + b`,
/// fresh encryptions of both.
pub fn fake_view<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    election: &Election<G>,
    view: &VoterView<G>,
    coerced: VoteIndex,
    rng: &mut R,
) -> VoterView<G> {
    let pk = election.pk();
    let mac = mac_compute(&view.secrets.a, &view.secrets.b, coerced);
    let r_vote = Scalar::random_nonzero(rng);
    let r_mac = Scalar::random_nonzero(rng);
    VoterView {
        vote: coerced,
        mac,
        e_vote: encrypt_exponent(&pk, &Scalar::from_u64(coerced.0), &r_vote),
        r_vote,
        e_mac: encrypt_exponent(&pk, &mac, &r_mac),
        r_mac,
        ..view.clone()
    }
}
