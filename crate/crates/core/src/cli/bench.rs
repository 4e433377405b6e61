//! Shuffle benchmark on random rows.

use std::io::Write;
use std::time::{Duration, Instant};

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_core::{CryptoRng, RngCore};

use super::{CliError, EXIT_ERROR, EXIT_OK};
use crate::elgamal::Ciphertext;
use crate::group::{Element, PrimeGroup, Ristretto, Scalar};
use crate::mixnet::{mix, mix_verify, MixRow};

/// Published reference at 100 000 rows of 6 ciphertexts: prove, verify seconds.
pub const REFERENCE_100K: (f64, f64) = (38.34, 26.43);

#[derive(Debug, Clone, Args)]
pub struct ShuffleArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long, default_value_t = 6)]
    pub width: usize,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct ShuffleTiming {
    pub rows: usize,
    pub width: usize,
    pub prove: Duration,
    pub verify: Duration,
    pub valid: bool,
}

impl ShuffleTiming {
    /// Linear extrapolation of (prove, verify) seconds to `rows`.
    pub fn scaled_to(&self, rows: usize) -> (f64, f64) {
        let f = rows as f64 / self.rows.max(1) as f64;
        (self.prove.as_secs_f64() * f, self.verify.as_secs_f64() * f)
    }
}

/// Rows of random ciphertexts. Any pair of elements is a valid ciphertext.
pub fn random_rows<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    rows: usize,
    width: usize,
    rng: &mut R,
) -> Vec<MixRow<G>> {
    (0..rows)
        .map(|_| {
            MixRow::new(
                (0..width)
                    .map(|_| Ciphertext {
                        c1: Element::base_pow(&Scalar::random(rng)),
                        c2: Element::base_pow(&Scalar::random(rng)),
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Prove and verify one shuffle of `rows x width` random ciphertexts.
pub fn time_shuffle<G: PrimeGroup>(rows: usize, width: usize, seed: u64) -> Result<ShuffleTiming, CliError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let pk = Element::<G>::base_pow(&Scalar::random_nonzero(&mut rng));
    let input = random_rows::<G, _>(rows, width, &mut rng);
    let ctx = b"postmark/bench/shuffle";
    let t = Instant::now();
    let (output, proof) = mix(&pk, &input, ctx, &mut rng).map_err(crate::protocol::ProtocolError::from)?;
    let prove = t.elapsed();
    let t = Instant::now();
    let valid = mix_verify(&pk, &input, &output, &proof, ctx);
    let verify = t.elapsed();
    Ok(ShuffleTiming {
        rows,
        width,
        prove,
        verify,
        valid,
    })
}

pub fn shuffle(args: &ShuffleArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if args.rows == 0 {
        writeln!(out, "rows 0: nothing to shuffle")?;
        return Ok(EXIT_OK);
    }
    if args.width == 0 {
        return Err(CliError::Usage("width must be at least 1".into()));
    }
    let run = || time_shuffle::<Ristretto>(args.rows, args.width, args.seed);
    let timing = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let (p100k, v100k) = timing.scaled_to(100_000);
    writeln!(out, "rows {} width {}", timing.rows, timing.width)?;
    writeln!(out, "prove {:.3} s", timing.prove.as_secs_f64())?;
    writeln!(out, "verify {:.3} s", timing.verify.as_secs_f64())?;
    writeln!(out, "valid {}", timing.valid)?;
    writeln!(out, "per row: prove {:.1} us, verify {:.1} us", per_row(timing.prove, timing.rows), per_row(timing.verify, timing.rows))?;
    writeln!(out, "linear estimate at 100000 rows: prove {p100k:.2} s, verify {v100k:.2} s")?;
    writeln!(
        out,
        "published at 100000 x 6: prove {:.2} s, verify {:.2} s",
        REFERENCE_100K.0, REFERENCE_100K.1
    )?;
    Ok(if timing.valid { EXIT_OK } else { EXIT_ERROR })
}

fn per_row(d: Duration, rows: usize) -> f64 {
    d.as_secs_f64() * 1e6 / rows as f64
}
