use super::*;
use crate::elgamal::{decrypt, encrypt_exponent};
use crate::group::{Ristretto, Toy1009};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type G = Ristretto;
const CTX: &[u8] = b"mix-test";

fn keypair<G: PrimeGroup>(rng: &mut ChaCha20Rng) -> (Scalar<G>, Element<G>) {
    let sk = Scalar::random_nonzero(rng);
    (sk, Element::base_pow(&sk))
}

fn batch<G: PrimeGroup>(pk: &Element<G>, n: usize, w: usize, rng: &mut ChaCha20Rng) -> Vec<MixRow<G>> {
    (0..n)
        .map(|i| {
            MixRow::new(
                (0..w)
                    .map(|k| encrypt_exponent(pk, &Scalar::from_u64((i * 10 + k) as u64), &Scalar::random(rng)))
                    .collect(),
            )
        })
        .collect()
}

fn decrypt_rows<G: PrimeGroup>(sk: &Scalar<G>, rows: &[MixRow<G>]) -> Vec<Vec<Vec<u8>>> {
    let mut v: Vec<Vec<Vec<u8>>> = rows
        .iter()
        .map(|r| r.cells.iter().map(|c| decrypt(sk, c).to_bytes()).collect())
        .collect();
    v.sort();
    v
}

#[test]
fn permutation_validation() {
    assert!(Permutation::new(vec![1, 0, 2]).is_ok());
    assert_eq!(Permutation::new(vec![1, 1, 2]), Err(MixError::NotAPermutation));
    assert_eq!(Permutation::new(vec![0, 3]), Err(MixError::NotAPermutation));
    let p = Permutation::new(vec![2, 0, 1]).unwrap();
    assert_eq!(p.apply(&['a', 'b', 'c']), vec!['b', 'c', 'a']);
    assert_eq!(p.inverse().inverse(), p);
}

#[test]
fn single_row() {
    let mut rng = ChaCha20Rng::seed_from_u64(50);
    let (sk, pk) = keypair::<G>(&mut rng);
    let rows = batch(&pk, 1, 3, &mut rng);
    let (out, proof) = mix(&pk, &rows, CTX, &mut rng).unwrap();
    assert_ne!(out, rows);
    assert_eq!(decrypt_rows(&sk, &out), decrypt_rows(&sk, &rows));
    assert!(mix_verify(&pk, &rows, &out, &proof, CTX));
}

#[test]
fn empty_batch() {
    let mut rng = ChaCha20Rng::seed_from_u64(51);
    let (_, pk) = keypair::<G>(&mut rng);
    let (out, proof) = mix::<G, _>(&pk, &[], CTX, &mut rng).unwrap();
    assert!(out.is_empty());
    assert!(mix_verify(&pk, &[], &[], &proof, CTX));
}

#[test]
fn toy_multiset_preserved() {
    let mut rng = ChaCha20Rng::seed_from_u64(52);
    let (sk, pk) = keypair::<Toy1009>(&mut rng);
    let rows = batch(&pk, 3, 2, &mut rng);
    let (out, proof) = mix(&pk, &rows, CTX, &mut rng).unwrap();
    assert!(mix_verify(&pk, &rows, &out, &proof, CTX));
    // oracle: plaintext exponents are i*10+k
    let mut got: Vec<Vec<u64>> = out
        .iter()
        .map(|r| {
            r.cells
                .iter()
                .map(|c| {
                    let m = decrypt(&sk, c);
                    (0..1009).find(|x| Element::base_pow_u64(*x) == m).unwrap()
                })
                .collect()
        })
        .collect();
    got.sort();
    assert_eq!(got, vec![vec![0, 1], vec![10, 11], vec![20, 21]]);
}

#[test]
fn prover_preconditions() {
    let mut rng = ChaCha20Rng::seed_from_u64(53);
    let (_, pk) = keypair::<G>(&mut rng);
    let rows = batch(&pk, 3, 2, &mut rng);
    let zero = vec![vec![Scalar::zero(); 2]; 3];
    assert_eq!(
        mix_prove(&pk, &rows, &Permutation::identity(3), &zero, CTX, &mut rng).unwrap_err(),
        MixError::ZeroRandomness
    );
    let mut ragged = rows.clone();
    ragged[1].cells.pop();
    let r = random_rerand(3, 2, &mut rng);
    assert!(matches!(
        mix_prove(&pk, &ragged, &Permutation::identity(3), &r, CTX, &mut rng),
        Err(MixError::WidthMismatch { row: 1, .. })
    ));
    assert!(matches!(
        mix_prove(&pk, &rows, &Permutation::identity(2), &r, CTX, &mut rng),
        Err(MixError::PermutationSize { .. })
    ));
}

#[test]
fn explicit_permutation_semantics() {
    let mut rng = ChaCha20Rng::seed_from_u64(54);
    let (sk, pk) = keypair::<G>(&mut rng);
    let rows = batch(&pk, 4, 2, &mut rng);
    let perm = Permutation::new(vec![3, 0, 1, 2]).unwrap();
    let r = random_rerand(4, 2, &mut rng);
    let (out, proof) = mix_prove(&pk, &rows, &perm, &r, CTX, &mut rng).unwrap();
    for j in 0..4 {
        for k in 0..2 {
            assert_eq!(decrypt(&sk, &out[perm.image(j)].cells[k]), decrypt(&sk, &rows[j].cells[k]));
        }
    }
    assert!(mix_verify(&pk, &rows, &out, &proof, CTX));
    assert!(!mix_verify(&pk, &rows, &out, &proof, b"other"));
}

#[test]
fn honest_proofs_verify() {
    let mut rng = ChaCha20Rng::seed_from_u64(55);
    let (_, pk) = keypair::<G>(&mut rng);
    for t in 0..100 {
        let rows = batch(&pk, 1 + t % 5, 1 + t % 3, &mut rng);
        let (out, proof) = mix(&pk, &rows, CTX, &mut rng).unwrap();
        assert!(mix_verify(&pk, &rows, &out, &proof, CTX));
        let back = MixProof::<G>::from_bytes(&proof.to_bytes()).unwrap();
        assert!(mix_verify(&pk, &rows, &out, &back, CTX));
    }
}

#[test]
fn swapped_cells_between_rows_rejected() {
    let mut rng = ChaCha20Rng::seed_from_u64(56);
    let (_, pk) = keypair::<G>(&mut rng);
    let rows = batch(&pk, 4, 3, &mut rng);
    let (mut out, proof) = mix(&pk, &rows, CTX, &mut rng).unwrap();
    let tmp = out[0].cells[1];
    out[0].cells[1] = out[2].cells[1];
    out[2].cells[1] = tmp;
    assert!(!mix_verify(&pk, &rows, &out, &proof, CTX));
}

#[test]
fn width_header_checked() {
    let mut rng = ChaCha20Rng::seed_from_u64(57);
    let (_, pk) = keypair::<G>(&mut rng);
    let rows = batch(&pk, 3, 2, &mut rng);
    let (out, mut proof) = mix(&pk, &rows, CTX, &mut rng).unwrap();
    proof.width = 3;
    assert!(!mix_verify(&pk, &rows, &out, &proof, CTX));
}

#[test]
fn substituted_cell_fuzz() {
    let mut rng = ChaCha20Rng::seed_from_u64(58);
    let (_, pk) = keypair::<G>(&mut rng);
    let rows = batch(&pk, 5, 2, &mut rng);
    let (out, proof) = mix(&pk, &rows, CTX, &mut rng).unwrap();
    for _ in 0..1000 {
        let mut bad = out.clone();
        let i = rng.gen_range(0..5);
        let k = rng.gen_range(0..2);
        bad[i].cells[k] = encrypt_exponent(&pk, &Scalar::from_u64(999_999), &Scalar::random(&mut rng));
        assert!(!mix_verify(&pk, &rows, &bad, &proof, CTX));
    }
}

#[test]
fn chain_preserves_plaintexts() {
    let mut rng = ChaCha20Rng::seed_from_u64(59);
    let (sk, pk) = keypair::<G>(&mut rng);
    let rows = batch(&pk, 6, 3, &mut rng);
    let (one, stages1) = mix_chain(&pk, &rows, 1, CTX, &mut rng).unwrap();
    assert_eq!(stages1.len(), 1);
    assert!(mix_verify(&pk, &rows, &one, &stages1[0].proof, &stage_context(CTX, 0)));
    let (fin, stages) = mix_chain(&pk, &rows, 3, CTX, &mut rng).unwrap();
    assert_eq!(decrypt_rows(&sk, &fin), decrypt_rows(&sk, &rows));
    verify_chain(&pk, &rows, &stages, CTX).unwrap();

    let mut tampered = stages.clone();
    tampered[1].rows[0].cells[0] = encrypt_exponent(&pk, &Scalar::from_u64(1), &Scalar::random(&mut rng));
    assert_eq!(verify_chain(&pk, &rows, &tampered, CTX), Err(MixError::StageFailed(1)));
    assert_eq!(verify_chain(&pk, &rows, &[], CTX), Err(MixError::NoStages));
}

#[test]
fn plaintext_cells() {
    let mut rng = ChaCha20Rng::seed_from_u64(60);
    let (sk, pk) = keypair::<G>(&mut rng);
    let enc = PlainEncoder {
        vote_bound: 6,
        roll: vec!["V01".into(), "V02".into()],
    };
    let ct = encrypt_exponent(&pk, &Scalar::from_u64(3), &Scalar::random(&mut rng));
    let rows = vec![vec![
        PlainCell::Vote(VoteIndex(4)),
        PlainCell::VoterId("V02".into()),
        PlainCell::Encrypted(ct),
    ]];
    let out = encrypt_plaintext_rows(&rows, &enc).unwrap();
    assert_eq!(decrypt(&sk, &out[0].cells[0]), Element::base_pow_u64(4));
    assert_eq!(decrypt(&sk, &out[0].cells[1]), Element::base_pow_u64(1));
    assert_eq!(out[0].cells[2], ct);
    let fresh = encrypt_plaintext_rows_fresh(&pk, &rows, &enc, &mut rng).unwrap();
    assert_eq!(decrypt(&sk, &fresh[0].cells[0]), Element::base_pow_u64(4));
    assert!(!fresh[0].cells[0].c1.is_identity());

    let all_ct = vec![vec![PlainCell::<G>::Encrypted(ct)]];
    assert_eq!(encrypt_plaintext_rows(&all_ct, &enc).unwrap()[0].cells, vec![ct]);
    let off_roll = vec![vec![PlainCell::<G>::VoterId("X".into())]];
    assert!(matches!(encrypt_plaintext_rows(&off_roll, &enc), Err(MixError::Unencodable(_))));
    let bad_vote = vec![vec![PlainCell::<G>::Vote(VoteIndex(6))]];
    assert!(matches!(encrypt_plaintext_rows(&bad_vote, &enc), Err(MixError::Unencodable(_))));
}
