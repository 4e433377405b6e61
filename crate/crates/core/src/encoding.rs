//! Plaintext encodings carried as group exponents: vote indices, voter roll
//! indices and recoverable scalar limbs. Plus the one-time MAC.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::group::{Element, PrimeGroup, Scalar};

pub const DEFAULT_VOTE_BOUND: u64 = 1 << 20;
pub const DEFAULT_LIMB_BITS: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("vote index {index} outside domain [0, {bound})")]
    VoteOutOfRange { index: u64, bound: u64 },
    #[error("element is not in vote domain")]
    NotInVoteDomain,
    #[error("limb {position} has value {value}, which does not fit {width} bits")]
    LimbOutOfRange { position: usize, value: u64, width: u32 },
    #[error("limb width {0} unsupported (1..=32)")]
    BadLimbWidth(u32),
    #[error("expected {expected} limbs, got {got}")]
    LimbCount { expected: usize, got: usize },
    #[error("element does not decode to a limb")]
    NotALimb,
}

/// Position of a selection in the published, ordered selection list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoteIndex(pub u64);

/// Discrete logs of `g^x` for `x` in `[0, bound)` by baby-step giant-step.
pub struct DlogTable<G: PrimeGroup> {
    baby: HashMap<Vec<u8>, u64>,
    baby_len: u64,
    giant: Element<G>,
    bound: u64,
}

impl<G: PrimeGroup> DlogTable<G> {
    /// `baby_len` entries are stored; a lookup costs at most `bound / baby_len`
    /// group operations.
    pub fn new(bound: u64, baby_len: u64) -> Self {
        let bound = bound.min(order_saturating::<G>());
        let baby_len = baby_len.clamp(1, bound.max(1));
        let g = Element::<G>::generator();
        let mut baby = HashMap::with_capacity(baby_len as usize);
        let mut acc = Element::<G>::identity();
        for j in 0..baby_len {
            baby.entry(acc.to_bytes()).or_insert(j);
            acc *= g;
        }
        DlogTable {
            baby,
            baby_len,
            giant: acc.inverse(),
            bound,
        }
    }

    /// Square-root sized table for the given bound.
    pub fn balanced(bound: u64) -> Self {
        let m = (bound as f64).sqrt().ceil() as u64;
        Self::new(bound, m)
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn solve(&self, target: &Element<G>) -> Option<u64> {
        let steps = self.bound.div_ceil(self.baby_len);
        let mut gamma = *target;
        for i in 0..steps {
            if let Some(j) = self.baby.get(&gamma.to_bytes()) {
                let x = i * self.baby_len + j;
                return (x < self.bound).then_some(x);
            }
            gamma *= self.giant;
        }
        None
    }
}

/// `q` when it fits in a `u64`, otherwise `u64::MAX`.
fn order_saturating<G: PrimeGroup>() -> u64 {
    if G::ORDER_BITS >= 64 {
        u64::MAX
    } else {
        // q - 1 = -1 mod q
        let minus_one = (Scalar::<G>::zero() - Scalar::one()).to_bytes();
        let mut arr = [0u8; 8];
        arr[..minus_one.len().min(8)].copy_from_slice(&minus_one[..minus_one.len().min(8)]);
        u64::from_le_bytes(arr) + 1
    }
}

/// Vote indices `[0, bound)` encoded as `g^index`.
pub struct VoteCodec<G: PrimeGroup> {
    table: DlogTable<G>,
}

impl<G: PrimeGroup> VoteCodec<G> {
    pub fn new(bound: u64) -> Self {
        VoteCodec {
            table: DlogTable::balanced(bound),
        }
    }

    pub fn bound(&self) -> u64 {
        self.table.bound()
    }

    pub fn encode(&self, v: VoteIndex) -> Result<Element<G>, EncodingError> {
        encode_vote(v, self.bound())
    }

    pub fn decode(&self, el: &Element<G>) -> Result<VoteIndex, EncodingError> {
        self.table
            .solve(el)
            .map(VoteIndex)
            .ok_or(EncodingError::NotInVoteDomain)
    }
}

pub fn encode_vote<G: PrimeGroup>(v: VoteIndex, bound: u64) -> Result<Element<G>, EncodingError> {
    if v.0 >= bound {
        return Err(EncodingError::VoteOutOfRange { index: v.0, bound });
    }
    Ok(Element::base_pow_u64(v.0))
}

/// A scalar split into little-endian `width`-bit limbs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarLimbs {
    pub limbs: Vec<u64>,
    pub width: u32,
}

pub fn limb_count<G: PrimeGroup>(width: u32) -> usize {
    G::ORDER_BITS.div_ceil(width) as usize
}

pub fn scalar_to_limbs<G: PrimeGroup>(s: &Scalar<G>, width: u32) -> Result<ScalarLimbs, EncodingError> {
    if !(1..=32).contains(&width) {
        return Err(EncodingError::BadLimbWidth(width));
    }
    let bytes = s.to_bytes();
    let bit = |i: usize| -> u64 {
        bytes
            .get(i / 8)
            .map(|b| ((b >> (i % 8)) & 1) as u64)
            .unwrap_or(0)
    };
    let w = width as usize;
    let limbs = (0..limb_count::<G>(width))
        .map(|k| (0..w).fold(0u64, |acc, j| acc | (bit(k * w + j) << j)))
        .collect();
    Ok(ScalarLimbs { limbs, width })
}

pub fn limbs_to_scalar<G: PrimeGroup>(l: &ScalarLimbs) -> Result<Scalar<G>, EncodingError> {
    if !(1..=32).contains(&l.width) {
        return Err(EncodingError::BadLimbWidth(l.width));
    }
    let expected = limb_count::<G>(l.width);
    if l.limbs.len() != expected {
        return Err(EncodingError::LimbCount {
            expected,
            got: l.limbs.len(),
        });
    }
    let radix = Scalar::<G>::from_u64(1u64 << l.width);
    let mut acc = Scalar::zero();
    for (position, &value) in l.limbs.iter().enumerate().rev() {
        if value >> l.width != 0 {
            return Err(EncodingError::LimbOutOfRange {
                position,
                value,
                width: l.width,
            });
        }
        acc = acc * radix + Scalar::from_u64(value);
    }
    Ok(acc)
}

/// Lookup table for limb plaintexts `g^x`, `x < 2^width`.
pub struct LimbCodec<G: PrimeGroup> {
    width: u32,
    table: DlogTable<G>,
}

impl<G: PrimeGroup> LimbCodec<G> {
    pub fn new(width: u32) -> Self {
        let bound = 1u64 << width;
        LimbCodec {
            width,
            table: DlogTable::new(bound, bound),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn decode(&self, el: &Element<G>) -> Option<u64> {
        self.table.solve(el)
    }

    pub fn count(&self) -> usize {
        limb_count::<G>(self.width)
    }
}

/// Carter-Wegman one-time MAC `a * vote + b mod q`.
pub fn mac_compute<G: PrimeGroup>(a: &Scalar<G>, b: &Scalar<G>, v: VoteIndex) -> Scalar<G> {
    *a * Scalar::from_u64(v.0) + *b
}

type TableKey = (TypeId, &'static str, u64);

/// Tables are costly to build (the limb table holds `2^width` entries), so
/// codecs are shared process-wide per group and size.
fn shared<T: Any + Send + Sync>(kind: &'static str, size: u64, build: impl FnOnce() -> T) -> Arc<T> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<dyn Any + Send + Sync>>>> = OnceLock::new();
    let key = (TypeId::of::<T>(), kind, size);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return hit.clone().downcast().expect("keyed by type");
    }
    // built outside the lock; a racing builder just loses
    let fresh: Arc<T> = Arc::new(build());
    cache.lock().unwrap().entry(key).or_insert_with(|| fresh.clone()).clone().downcast().expect("keyed by type")
}

impl<G: PrimeGroup> VoteCodec<G> {
    pub fn shared(bound: u64) -> Arc<Self> {
        shared("vote", bound, || Self::new(bound))
    }
}

impl<G: PrimeGroup> LimbCodec<G> {
    pub fn shared(width: u32) -> Arc<Self> {
        shared("limb", width as u64, || Self::new(width))
    }
}
