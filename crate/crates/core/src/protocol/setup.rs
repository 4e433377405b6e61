//! Election setup: key generation, parameters, roll, double envelopes.

use rand_core::{CryptoRng, RngCore};

use super::config::ElectionConfig;
use super::records::{DealerRecord, ElectionParams};
use super::{Election, ProtocolError};
use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::elgamal::{encrypt, Ciphertext};
use crate::group::{Element, PrimeGroup, Scalar};
use crate::pedersen::PedersenParams;
use crate::threshold::{dkg_run_with, TrusteeShare};
use crate::wbb::{Board, ListId, Role};

/// Outer label in the clear, inner envelope holding `Enc(g^index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleEnvelope<G: PrimeGroup> {
    pub voter_id: String,
    pub e_voter_id: Ciphertext<G>,
}

impl<G: PrimeGroup> Encode for DoubleEnvelope<G> {
    fn encode(&self, w: &mut Writer) {
        w.str(&self.voter_id).put(&self.e_voter_id);
    }
}

impl<G: PrimeGroup> Decode for DoubleEnvelope<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(DoubleEnvelope {
            voter_id: r.str()?,
            e_voter_id: r.get()?,
        })
    }
}

pub struct SetupOutput<G: PrimeGroup> {
    pub board: Board,
    pub election: Election<G>,
    pub shares: Vec<TrusteeShare<G>>,
    pub envelopes: Vec<DoubleEnvelope<G>>,
}

pub fn setup<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    config: &ElectionConfig,
    rng: &mut R,
) -> Result<SetupOutput<G>, ProtocolError> {
    config.validate()?;
    if G::IS_TOY && !config.allow_toy_group {
        return Err(ProtocolError::ToyGroupRefused(G::LABEL));
    }
    let n = config.trustees.n;
    let k = config.trustees.k;
    let mut dealers = Vec::with_capacity(n as usize);
    let (public, shares) = dkg_run_with::<G, _>(n, k, rng, |d| {
        dealers.push(DealerRecord {
            dealer: d.dealer,
            commitments: d.commitments.clone(),
        })
    })?;

    let mut nonce = [0u8; 16];
    rng.fill_bytes(&mut nonce);
    let seed = format!("{}/{}", config.name, hex::encode(nonce)).into_bytes();
    let params = ElectionParams {
        name: config.name.clone(),
        candidates: config.candidates.clone(),
        rule: config.selection,
        roll: config.voters.clone(),
        vote_bound: config.vote_bound,
        limb_bits: config.limb_bits,
        pedersen: PedersenParams::derive(&seed),
        public,
    };
    let election = Election::new(params);

    let mut board = Board::new();
    board.post_as(Role::Authority, ListId::Params, None, &election.params.to_bytes())?;
    for d in &dealers {
        board.post_as(
            Role::Trustee,
            ListId::Trustees,
            Some(&format!("T{}", d.dealer)),
            &d.to_bytes(),
        )?;
    }
    for (i, id) in election.roll().iter().enumerate() {
        board.post_as(Role::Authority, ListId::Roll, Some(id), &(i as u32).to_bytes())?;
    }

    let pk = election.pk();
    let envelopes = election
        .roll()
        .iter()
        .enumerate()
        .map(|(i, id)| DoubleEnvelope {
            voter_id: id.clone(),
            e_voter_id: encrypt(
                &pk,
                &Element::base_pow_u64(i as u64),
                &Scalar::random_nonzero(rng),
            ),
        })
        .collect();

    Ok(SetupOutput {
        board,
        election,
        shares,
        envelopes,
    })
}
