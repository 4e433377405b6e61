//! Canonical fixed-field byte records.
//!
//! Scalars and elements are written at their fixed profile length, counts and
//! small integers as big-endian `u32`/`u64`, byte strings and text with a `u32`
//! length prefix. Decoding is strict: trailing bytes, non-canonical group data
//! and short reads are all errors.

use thiserror::Error;

use crate::group::{Element, PrimeGroup, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected end of record at offset {0}")]
    Truncated(usize),
    #[error("invalid group element at offset {0}")]
    BadElement(usize),
    #[error("invalid scalar at offset {0}")]
    BadScalar(usize),
    #[error("invalid utf-8 text at offset {0}")]
    BadText(usize),
    #[error("{0} trailing bytes after record")]
    Trailing(usize),
    #[error("invalid field value: {0}")]
    Invalid(String),
    #[error("invalid hex: {0}")]
    Hex(String),
}

#[derive(Default, Debug, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(v as u8)
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.u32(v.len() as u32);
        self.buf.extend_from_slice(v);
        self
    }

    pub fn str(&mut self, v: &str) -> &mut Self {
        self.bytes(v.as_bytes())
    }

    pub fn scalar<G: PrimeGroup>(&mut self, s: &Scalar<G>) -> &mut Self {
        self.buf.extend_from_slice(&s.to_bytes());
        self
    }

    pub fn element<G: PrimeGroup>(&mut self, e: &Element<G>) -> &mut Self {
        self.buf.extend_from_slice(&e.to_bytes());
        self
    }

    pub fn put<T: Encode>(&mut self, v: &T) -> &mut Self {
        v.encode(self);
        self
    }

    pub fn seq<T: Encode>(&mut self, items: &[T]) -> &mut Self {
        self.u32(items.len() as u32);
        for item in items {
            item.encode(self);
        }
        self
    }

    pub fn opt<T: Encode>(&mut self, v: &Option<T>) -> &mut Self {
        match v {
            None => self.u8(0),
            Some(v) => {
                self.u8(1);
                v.encode(self);
                self
            }
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() - self.pos < n {
            return Err(CodecError::Truncated(self.pos));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        let b = self.take(8)?;
        Ok(u64::from_be_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn bool(&mut self) -> Result<bool, CodecError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(CodecError::Invalid(format!("bool byte {v}"))),
        }
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, CodecError> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }

    pub fn str(&mut self) -> Result<String, CodecError> {
        let at = self.pos;
        String::from_utf8(self.bytes()?).map_err(|_| CodecError::BadText(at))
    }

    pub fn scalar<G: PrimeGroup>(&mut self) -> Result<Scalar<G>, CodecError> {
        let at = self.pos;
        Scalar::from_bytes(self.take(G::SCALAR_LEN)?).ok_or(CodecError::BadScalar(at))
    }

    pub fn element<G: PrimeGroup>(&mut self) -> Result<Element<G>, CodecError> {
        let at = self.pos;
        Element::from_bytes(self.take(G::ELEMENT_LEN)?).ok_or(CodecError::BadElement(at))
    }

    pub fn get<T: Decode>(&mut self) -> Result<T, CodecError> {
        T::decode(self)
    }

    pub fn seq<T: Decode>(&mut self) -> Result<Vec<T>, CodecError> {
        let n = self.u32()? as usize;
        // every item takes at least one byte; bounds allocation on hostile counts
        if n > self.buf.len() - self.pos {
            return Err(CodecError::Truncated(self.pos));
        }
        (0..n).map(|_| T::decode(self)).collect()
    }

    pub fn opt<T: Decode>(&mut self) -> Result<Option<T>, CodecError> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(T::decode(self)?)),
            v => Err(CodecError::Invalid(format!("option tag {v}"))),
        }
    }

    pub fn finish(self) -> Result<(), CodecError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(CodecError::Trailing(n)),
        }
    }
}

pub trait Encode {
    fn encode(&self, w: &mut Writer);

    fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.finish()
    }

    fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }
}

pub trait Decode: Sized {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError>;

    fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let v = Self::decode(&mut r)?;
        r.finish()?;
        Ok(v)
    }

    fn from_hex(s: &str) -> Result<Self, CodecError> {
        let bytes = hex::decode(s).map_err(|e| CodecError::Hex(e.to_string()))?;
        Self::from_bytes(&bytes)
    }
}

impl<G: PrimeGroup> Encode for Scalar<G> {
    fn encode(&self, w: &mut Writer) {
        w.scalar(self);
    }
}

impl<G: PrimeGroup> Decode for Scalar<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        r.scalar()
    }
}

impl<G: PrimeGroup> Encode for Element<G> {
    fn encode(&self, w: &mut Writer) {
        w.element(self);
    }
}

impl<G: PrimeGroup> Decode for Element<G> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        r.element()
    }
}

impl Encode for u32 {
    fn encode(&self, w: &mut Writer) {
        w.u32(*self);
    }
}

impl Decode for u32 {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        r.u32()
    }
}

impl Encode for u64 {
    fn encode(&self, w: &mut Writer) {
        w.u64(*self);
    }
}

impl Decode for u64 {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        r.u64()
    }
}

impl Encode for String {
    fn encode(&self, w: &mut Writer) {
        w.str(self);
    }
}

impl Decode for String {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        r.str()
    }
}

impl<T: Encode> Encode for Vec<T> {
    fn encode(&self, w: &mut Writer) {
        w.seq(self);
    }
}

impl<T: Decode> Decode for Vec<T> {
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        r.seq()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Ristretto, Toy23};

    #[test]
    fn strict_decoding() {
        let v: Vec<u64> = vec![1, 2, 3];
        let bytes = v.to_bytes();
        assert_eq!(Vec::<u64>::from_bytes(&bytes).unwrap(), v);
        let mut extra = bytes.clone();
        extra.push(0);
        assert_eq!(Vec::<u64>::from_bytes(&extra), Err(CodecError::Trailing(1)));
        assert!(matches!(
            Vec::<u64>::from_bytes(&bytes[..bytes.len() - 1]),
            Err(CodecError::Truncated(_))
        ));
        let hostile = u32::MAX.to_be_bytes();
        assert!(Vec::<u64>::from_bytes(&hostile).is_err());
    }

    #[test]
    fn group_fields_validate() {
        let e = Element::<Ristretto>::generator();
        assert_eq!(Element::<Ristretto>::from_bytes(&Encode::to_bytes(&e)).unwrap(), e);
        assert!(matches!(
            <Element<Toy23> as Decode>::from_bytes(&5u64.to_le_bytes()),
            Err(CodecError::BadElement(0))
        ));
        assert!(matches!(
            <Scalar<Toy23> as Decode>::from_bytes(&12u64.to_le_bytes()),
            Err(CodecError::BadScalar(0))
        ));
    }
}
