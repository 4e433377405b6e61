//! Commitment-consistent proof of shuffle for rows of ElGamal ciphertexts.
//!
//! Every row is permuted as a unit and each cell is re-encrypted with its own
//! randomness. The permutation is committed once, so the argument binds all
//! columns to the same permutation.

use rand_core::{CryptoRng, RngCore};
use rayon::prelude::*;

use super::{MixError, MixRow, Permutation};
use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::elgamal::{rerandomize, Ciphertext};
use crate::group::{Element, PrimeGroup, Scalar};
use crate::zkp::FsTranscript;

const GEN_DOMAIN: &str = "postmark/shuffle/generator";

pub struct MixProof<G: PrimeGroup> {
    pub width: u32,
    pub rows: u32,
    pub perm_commitments: Vec<Element<G>>,
    pub chain_commitments: Vec<Element<G>>,
    pub t1: Element<G>,
    pub t2: Element<G>,
    pub t3: Element<G>,
    pub t4: Vec<Ciphertext<G>>,
    pub t_hat: Vec<Element<G>>,
    pub s1: Scalar<G>,
    pub s2: Scalar<G>,
    pub s3: Scalar<G>,
    pub s4: Vec<Scalar<G>>,
    pub s_hat: Vec<Scalar<G>>,
    pub s_prime: Vec<Scalar<G>>,
}

impl<G: PrimeGroup> Clone for MixProof<G> {
    fn clone(&self) -> Self {
        MixProof {
            width: self.width,
            rows: self.rows,
            perm_commitments: self.perm_commitments.clone(),
            chain_commitments: self.chain_commitments.clone(),
            t1: self.t1,
            t2: self.t2,
            t3: self.t3,
            t4: self.t4.clone(),
            t_hat: self.t_hat.clone(),
            s1: self.s1,
            s2: self.s2,
            s3: self.s3,
            s4: self.s4.clone(),
            s_hat: self.s_hat.clone(),
            s_prime: self.s_prime.clone(),
        }
    }
}

impl<G: PrimeGroup> PartialEq for MixProof<G> {
    fn eq(&self, o: &Self) -> bool {
        self.to_bytes() == o.to_bytes()
    }
}

impl<G: PrimeGroup> std::fmt::Debug for MixProof<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixProof")
            .field("width", &self.width)
            .field("rows", &self.rows)
            .finish_non_exhaustive()
    }
}

impl<G: PrimeGroup> MixProof<G> {
    fn vacuous(width: u32) -> Self {
        let id = Element::identity();
        MixProof {
            width,
            rows: 0,
            perm_commitments: vec![],
            chain_commitments: vec![],
            t1: id,
            t2: id,
            t3: id,
            t4: vec![],
            t_hat: vec![],
            s1: Scalar::zero(),
            s2: Scalar::zero(),
            s3: Scalar::zero(),
            s4: vec![],
            s_hat: vec![],
            s_prime: vec![],
        }
    }
}

/// `h` and `h_1..h_n`, nothing-up-my-sleeve.
pub fn shuffle_generators<G: PrimeGroup>(n: usize) -> (Element<G>, Vec<Element<G>>) {
    let h = Element::hash_to_group(GEN_DOMAIN, b"h");
    let hs = (0..n as u64)
        .into_par_iter()
        .map(|i| Element::hash_to_group(GEN_DOMAIN, &i.to_be_bytes()))
        .collect();
    (h, hs)
}

fn rows_bytes<G: PrimeGroup>(rows: &[MixRow<G>]) -> Vec<Vec<u8>> {
    rows.par_iter()
        .map(|r| {
            let mut b = Vec::new();
            for c in &r.cells {
                b.extend_from_slice(&c.c1.to_bytes());
                b.extend_from_slice(&c.c2.to_bytes());
            }
            b
        })
        .collect()
}

fn elems_bytes<G: PrimeGroup>(es: &[Element<G>]) -> Vec<Vec<u8>> {
    es.par_iter().map(|e| e.to_bytes()).collect()
}

fn statement<G: PrimeGroup>(
    pk: &Element<G>,
    width: u32,
    rows_in: &[MixRow<G>],
    rows_out: &[MixRow<G>],
    perm_commitments: &[Element<G>],
    context: &[u8],
) -> FsTranscript {
    let mut t = FsTranscript::new::<G>("shuffle");
    t.absorb("context", context)
        .absorb_element("pk", pk)
        .absorb("width", &width.to_be_bytes())
        .absorb("rows", &(rows_in.len() as u64).to_be_bytes());
    for b in rows_bytes(rows_in) {
        t.absorb("in", &b);
    }
    for b in rows_bytes(rows_out) {
        t.absorb("out", &b);
    }
    for b in elems_bytes(perm_commitments) {
        t.absorb("perm", &b);
    }
    t
}

fn check_shape<G: PrimeGroup>(rows: &[MixRow<G>], width: usize) -> Result<(), MixError> {
    for (i, r) in rows.iter().enumerate() {
        if r.cells.len() != width {
            return Err(MixError::WidthMismatch {
                row: i,
                expected: width,
                got: r.cells.len(),
            });
        }
    }
    Ok(())
}

fn batch_width<G: PrimeGroup>(rows: &[MixRow<G>]) -> usize {
    rows.first().map(|r| r.cells.len()).unwrap_or(0)
}

/// Column-wise product `prod_i rows[i][j]^{exps[i]}`.
fn column_multi_pow<G: PrimeGroup>(rows: &[MixRow<G>], exps: &[Scalar<G>], col: usize) -> Ciphertext<G> {
    let c1: Vec<Element<G>> = rows.iter().map(|r| r.cells[col].c1).collect();
    let c2: Vec<Element<G>> = rows.iter().map(|r| r.cells[col].c2).collect();
    Ciphertext::new(Element::multi_pow(exps, &c1), Element::multi_pow(exps, &c2))
}

/// Shuffle `rows_in` by `perm` (input row `j` lands at output `perm.image(j)`)
/// re-encrypting cell `(j, k)` of the input with `rerand[j][k]`.
pub fn mix_prove<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    pk: &Element<G>,
    rows_in: &[MixRow<G>],
    perm: &Permutation,
    rerand: &[Vec<Scalar<G>>],
    context: &[u8],
    rng: &mut R,
) -> Result<(Vec<MixRow<G>>, MixProof<G>), MixError> {
    let n = rows_in.len();
    let w = batch_width(rows_in);
    check_shape(rows_in, w)?;
    if perm.len() != n {
        return Err(MixError::PermutationSize { expected: n, got: perm.len() });
    }
    if rerand.len() != n || rerand.iter().any(|r| r.len() != w) {
        return Err(MixError::RandomnessShape);
    }
    if rerand.iter().flatten().any(Scalar::is_zero) {
        return Err(MixError::ZeroRandomness);
    }
    if n == 0 {
        return Ok((vec![], MixProof::vacuous(w as u32)));
    }

    // output i takes input psi(i)
    let psi = perm.inverse();
    let rows_out: Vec<MixRow<G>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let j = psi.image(i);
            MixRow::new(
                rows_in[j]
                    .cells
                    .iter()
                    .zip(&rerand[j])
                    .map(|(c, r)| rerandomize(pk, c, r))
                    .collect(),
            )
        })
        .collect();
    // randomness as indexed by output row
    let r_out: Vec<&Vec<Scalar<G>>> = (0..n).map(|i| &rerand[psi.image(i)]).collect();

    let (h, hs) = shuffle_generators::<G>(n);
    let r_perm: Vec<Scalar<G>> = (0..n).map(|_| Scalar::random(rng)).collect();
    // c_j = g^{r_j} h_{perm(j)}
    let perm_commitments: Vec<Element<G>> = (0..n)
        .into_par_iter()
        .map(|j| Element::base_pow(&r_perm[j]) * hs[perm.image(j)])
        .collect();

    let st = statement(pk, w as u32, rows_in, &rows_out, &perm_commitments, context);
    let u = st.challenges::<G>("u", n);
    let u_out: Vec<Scalar<G>> = (0..n).map(|i| u[psi.image(i)]).collect();

    let r_hat: Vec<Scalar<G>> = (0..n).map(|_| Scalar::random(rng)).collect();
    let mut chain_commitments = Vec::with_capacity(n);
    let mut prev = h;
    for i in 0..n {
        let c = Element::multi_pow(&[r_hat[i], u_out[i]], &[Element::generator(), prev]);
        chain_commitments.push(c);
        prev = c;
    }

    // v_i = prod_{k>i} u'_k
    let mut v = vec![Scalar::<G>::one(); n];
    for i in (0..n - 1).rev() {
        v[i] = u_out[i + 1] * v[i + 1];
    }
    let r_bar: Scalar<G> = r_perm.iter().copied().sum();
    let r_hat_sum: Scalar<G> = r_hat.iter().zip(&v).map(|(a, b)| *a * *b).sum();
    let r_tilde: Scalar<G> = r_perm.iter().zip(&u).map(|(a, b)| *a * *b).sum();
    let r_prime: Vec<Scalar<G>> = (0..w)
        .map(|k| (0..n).map(|i| r_out[i][k] * u_out[i]).sum())
        .collect();

    let w1 = Scalar::random(rng);
    let w2 = Scalar::random(rng);
    let w3 = Scalar::random(rng);
    let w4: Vec<Scalar<G>> = (0..w).map(|_| Scalar::random(rng)).collect();
    let w_hat: Vec<Scalar<G>> = (0..n).map(|_| Scalar::random(rng)).collect();
    let w_prime: Vec<Scalar<G>> = (0..n).map(|_| Scalar::random(rng)).collect();

    let t1 = Element::base_pow(&w1);
    let t2 = Element::base_pow(&w2);
    let t3 = Element::base_pow(&w3) * Element::multi_pow(&w_prime, &hs);
    let t4: Vec<Ciphertext<G>> = (0..w)
        .into_par_iter()
        .map(|k| {
            let p = column_multi_pow(&rows_out, &w_prime, k);
            Ciphertext::new(
                p.c1 / Element::base_pow(&w4[k]),
                p.c2 / pk.pow(&w4[k]),
            )
        })
        .collect();
    let t_hat: Vec<Element<G>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let prev = if i == 0 { h } else { chain_commitments[i - 1] };
            Element::multi_pow(&[w_hat[i], w_prime[i]], &[Element::generator(), prev])
        })
        .collect();

    let c = proof_challenge(&st, &chain_commitments, &t1, &t2, &t3, &t4, &t_hat);
    let proof = MixProof {
        width: w as u32,
        rows: n as u32,
        perm_commitments,
        chain_commitments,
        t1,
        t2,
        t3,
        s1: w1 - c * r_bar,
        s2: w2 - c * r_hat_sum,
        s3: w3 - c * r_tilde,
        s4: w4.iter().zip(&r_prime).map(|(a, r)| *a - c * *r).collect(),
        s_hat: w_hat.iter().zip(&r_hat).map(|(a, r)| *a - c * *r).collect(),
        s_prime: w_prime.iter().zip(&u_out).map(|(a, u)| *a - c * *u).collect(),
        t4,
        t_hat,
    };
    Ok((rows_out, proof))
}

fn proof_challenge<G: PrimeGroup>(
    st: &FsTranscript,
    chain: &[Element<G>],
    t1: &Element<G>,
    t2: &Element<G>,
    t3: &Element<G>,
    t4: &[Ciphertext<G>],
    t_hat: &[Element<G>],
) -> Scalar<G> {
    let mut t = st.clone();
    for b in elems_bytes(chain) {
        t.absorb("chain", &b);
    }
    t.absorb_element("t1", t1)
        .absorb_element("t2", t2)
        .absorb_element("t3", t3);
    for c in t4 {
        t.absorb_ciphertext("t4", c);
    }
    for b in elems_bytes(t_hat) {
        t.absorb("t-hat", &b);
    }
    t.challenge()
}

pub fn mix_verify<G: PrimeGroup>(
    pk: &Element<G>,
    rows_in: &[MixRow<G>],
    rows_out: &[MixRow<G>],
    proof: &MixProof<G>,
    context: &[u8],
) -> bool {
    let n = rows_in.len();
    let w = proof.width as usize;
    if rows_out.len() != n
        || proof.rows as usize != n
        || check_shape(rows_in, w).is_err()
        || check_shape(rows_out, w).is_err()
    {
        return false;
    }
    if n == 0 {
        return true;
    }
    if proof.perm_commitments.len() != n
        || proof.chain_commitments.len() != n
        || proof.t_hat.len() != n
        || proof.s_hat.len() != n
        || proof.s_prime.len() != n
        || proof.t4.len() != w
        || proof.s4.len() != w
    {
        return false;
    }

    let (h, hs) = shuffle_generators::<G>(n);
    let st = statement(pk, w as u32, rows_in, rows_out, &proof.perm_commitments, context);
    let u = st.challenges::<G>("u", n);
    let c = proof_challenge(
        &st,
        &proof.chain_commitments,
        &proof.t1,
        &proof.t2,
        &proof.t3,
        &proof.t4,
        &proof.t_hat,
    );
    let g = Element::<G>::generator();

    let c_bar = proof.perm_commitments.iter().copied().product::<Element<G>>()
        / hs.iter().copied().product::<Element<G>>();
    let u_prod: Scalar<G> = u.iter().copied().product();
    let c_hat = proof.chain_commitments[n - 1] / h.pow(&u_prod);
    let c_tilde = Element::multi_pow(&u, &proof.perm_commitments);

    if c_bar.pow(&c) * Element::base_pow(&proof.s1) != proof.t1 {
        return false;
    }
    if c_hat.pow(&c) * Element::base_pow(&proof.s2) != proof.t2 {
        return false;
    }
    let t3 = c_tilde.pow(&c) * Element::base_pow(&proof.s3) * Element::multi_pow(&proof.s_prime, &hs);
    if t3 != proof.t3 {
        return false;
    }
    let cols_ok = (0..w).into_par_iter().all(|k| {
        let e_tilde = column_multi_pow(rows_in, &u, k);
        let out = column_multi_pow(rows_out, &proof.s_prime, k);
        let t1 = e_tilde.c1.pow(&c) * out.c1 / Element::base_pow(&proof.s4[k]);
        let t2 = e_tilde.c2.pow(&c) * out.c2 / pk.pow(&proof.s4[k]);
        Ciphertext::new(t1, t2) == proof.t4[k]
    });
    if !cols_ok {
        return false;
    }
    (0..n).into_par_iter().all(|i| {
        let prev = if i == 0 { h } else { proof.chain_commitments[i - 1] };
        Element::multi_pow(
            &[c, proof.s_hat[i], proof.s_prime[i]],
            &[proof.chain_commitments[i], g, prev],
        ) == proof.t_hat[i]
    })
}

impl<G: PrimeGroup> Encode for MixProof<G> {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.width)
            .u32(self.rows)
            .seq(&self.perm_commitments)
            .seq(&self.chain_commitments)
            .element(&self.t1)
            .element(&self.t2)
            .element(&self.t3)
            .seq(&self.t4)
            .seq(&self.t_hat)
            .scalar(&self.s1)
            .scalar(&self.s2)
            .scalar(&self.s3)
            .seq(&self.s4)
            .seq(&self.s_hat)
            .seq(&self.s_prime);
    }
}

impl<G: PrimeGroup> Decode for MixProof<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(MixProof {
            width: r.u32()?,
            rows: r.u32()?,
            perm_commitments: r.seq()?,
            chain_commitments: r.seq()?,
            t1: r.element()?,
            t2: r.element()?,
            t3: r.element()?,
            t4: r.seq()?,
            t_hat: r.seq()?,
            s1: r.scalar()?,
            s2: r.scalar()?,
            s3: r.scalar()?,
            s4: r.seq()?,
            s_hat: r.seq()?,
            s_prime: r.seq()?,
        })
    }
}
