//! Canonical binary encoding.
//!
//! Fields are written in declaration order. Integers are big-endian and fixed
//! width, byte strings and UTF-8 strings carry a `u32` length prefix, lists a
//! `u32` element count, options a `0`/`1` tag byte. Decoding is strict: any
//! input that does not re-encode to itself is rejected.

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::primitives::{Address, Digest, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("invalid {what} tag {tag}")]
    BadTag { what: &'static str, tag: u8 },
    #[error("invalid utf-8 in string")]
    BadUtf8,
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("non-canonical encoding")]
    NonCanonical,
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
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

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(v as u8)
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.u32(u32::try_from(bytes.len()).expect("field larger than 4 GiB"));
        self.raw(bytes)
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn len(&mut self, n: usize) -> &mut Self {
        self.u32(u32::try_from(n).expect("list longer than u32::MAX"))
    }

    pub fn digest(&mut self, d: &Digest) -> &mut Self {
        self.raw(&d.0)
    }

    pub fn address(&mut self, a: &Address) -> &mut Self {
        self.raw(&a.0)
    }

    pub fn date(&mut self, d: NaiveDate) -> &mut Self {
        self.u16(d.year() as u16).u8(d.month() as u8).u8(d.day() as u8)
    }

    pub fn rational(&mut self, r: &Rational) -> &mut Self {
        self.bytes(&r.numer_bytes());
        self.bytes(&r.denom_bytes())
    }

    pub fn item<T: Encode + ?Sized>(&mut self, v: &T) -> &mut Self {
        v.encode_to(self);
        self
    }

    pub fn list<T: Encode>(&mut self, items: &[T]) -> &mut Self {
        self.len(items.len());
        for it in items {
            it.encode_to(self);
        }
        self
    }

    pub fn option<T: Encode>(&mut self, v: &Option<T>) -> &mut Self {
        match v {
            None => self.u8(0),
            Some(x) => {
                self.u8(1);
                x.encode_to(self);
                self
            }
        }
    }
}

pub struct Decoder<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        Decoder { input, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.input.len() - self.pos
    }

    pub fn finish(&self) -> Result<(), CodecError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(CodecError::TrailingBytes(n)),
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.remaining() < n {
            return Err(CodecError::UnexpectedEof);
        }
        let s = &self.input[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn u128(&mut self) -> Result<u128, CodecError> {
        Ok(u128::from_be_bytes(self.array()?))
    }

    pub fn bool(&mut self) -> Result<bool, CodecError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            tag => Err(CodecError::BadTag { what: "bool", tag }),
        }
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CodecError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn string(&mut self) -> Result<String, CodecError> {
        let b = self.bytes()?;
        std::str::from_utf8(b).map(str::to_owned).map_err(|_| CodecError::BadUtf8)
    }

    /// Element count, bounded by the bytes left so hostile input cannot
    /// force a huge allocation.
    pub fn len(&mut self) -> Result<usize, CodecError> {
        let n = self.u32()? as usize;
        if n > self.remaining() {
            return Err(CodecError::UnexpectedEof);
        }
        Ok(n)
    }

    pub fn digest(&mut self) -> Result<Digest, CodecError> {
        Ok(Digest(self.array()?))
    }

    pub fn address(&mut self) -> Result<Address, CodecError> {
        Ok(Address(self.array()?))
    }

    pub fn date(&mut self) -> Result<NaiveDate, CodecError> {
        let y = self.u16()?;
        let m = self.u8()?;
        let d = self.u8()?;
        NaiveDate::from_ymd_opt(y as i32, m as u32, d as u32)
            .ok_or_else(|| CodecError::Invalid(format!("date {y}-{m}-{d}")))
    }

    pub fn rational(&mut self) -> Result<Rational, CodecError> {
        let n = self.bytes()?;
        let d = self.bytes()?;
        let r = Rational::from_parts_be(n, d).map_err(|e| CodecError::Invalid(e.to_string()))?;
        if r.numer_bytes() != n || r.denom_bytes() != d {
            return Err(CodecError::NonCanonical);
        }
        Ok(r)
    }

    pub fn item<T: Decode>(&mut self) -> Result<T, CodecError> {
        T::decode_from(self)
    }

    pub fn list<T: Decode>(&mut self) -> Result<Vec<T>, CodecError> {
        let n = self.len()?;
        let mut out = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            out.push(T::decode_from(self)?);
        }
        Ok(out)
    }

    pub fn option<T: Decode>(&mut self) -> Result<Option<T>, CodecError> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(T::decode_from(self)?)),
            tag => Err(CodecError::BadTag { what: "option", tag }),
        }
    }
}

pub trait Encode {
    fn encode_to(&self, enc: &mut Encoder);

    fn canonical_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        self.encode_to(&mut e);
        e.finish()
    }
}

pub trait Decode: Sized {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError>;
}

/// Decode a complete value and require that it re-encodes to exactly `bytes`.
pub fn decode_exact<T: Decode + Encode>(bytes: &[u8]) -> Result<T, CodecError> {
    let mut dec = Decoder::new(bytes);
    let v = T::decode_from(&mut dec)?;
    dec.finish()?;
    if v.canonical_bytes() != bytes {
        return Err(CodecError::NonCanonical);
    }
    Ok(v)
}

impl Encode for Digest {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.digest(self);
    }
}

impl Decode for Digest {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.digest()
    }
}

impl Encode for Address {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.address(self);
    }
}

impl Decode for Address {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.address()
    }
}

impl Encode for String {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.str(self);
    }
}

impl Decode for String {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.string()
    }
}

impl Encode for Rational {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.rational(self);
    }
}

impl Decode for Rational {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.rational()
    }
}

impl Encode for u64 {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.u64(*self);
    }
}

impl Decode for u64 {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.u64()
    }
}
