//! Fixed-size identifiers, hashing helpers and the exact rational type used
//! for prices and rates.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// SHA-256 of `data`.
pub fn sha256(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

/// SHA-256 over the concatenation of `parts`.
pub fn sha256_concat(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HexError {
    #[error("expected {expected} hex characters, got {got}")]
    Length { expected: usize, got: usize },
    #[error("invalid hex: {0}")]
    Invalid(String),
}

fn parse_hex32(s: &str) -> Result<[u8; 32], HexError> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    if s.len() != 64 {
        return Err(HexError::Length { expected: 64, got: s.len() });
    }
    let mut out = [0u8; 32];
    hex::decode_to_slice(s, &mut out).map_err(|e| HexError::Invalid(e.to_string()))?;
    Ok(out)
}

/// 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Number of leading zero bits, used by the work predicate.
    pub fn leading_zero_bits(&self) -> u32 {
        let mut n = 0;
        for b in self.0 {
            if b == 0 {
                n += 8;
            } else {
                n += b.leading_zeros();
                break;
            }
        }
        n
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..16])
    }
}

impl FromStr for Digest {
    type Err = HexError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_hex32(s).map(Digest)
    }
}

/// 32-byte account identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 32]);

impl Address {
    pub const ZERO: Address = Address([0u8; 32]);

    /// Deterministic address for a named actor or contract.
    pub fn derive(label: &str) -> Address {
        Address(sha256_concat(&[b"deedchain/address/", label.as_bytes()]).0)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short(&self) -> String {
        self.to_hex()[..8].to_string()
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address(0x{})", self.short())
    }
}

impl FromStr for Address {
    type Err = HexError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_hex32(s).map(Address)
    }
}

/// Escrow contract account. Holds buyer funds between funding and settlement.
pub fn escrow_address() -> Address {
    Address::derive("contract/escrow")
}

/// Lending pool account. Holds collateral and stablecoin liquidity.
pub fn lending_pool_address() -> Address {
    Address::derive("contract/lending-pool")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RationalError {
    #[error("malformed decimal '{0}'")]
    Malformed(String),
    #[error("negative value '{0}'")]
    Negative(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// Non-negative exact rational. Always stored reduced, so equal values have
/// equal encodings.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: u128, den: u128) -> Result<Self, RationalError> {
        if den == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }

    pub fn from_integer(n: u128) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn numer_bytes(&self) -> Vec<u8> {
        self.0.numer().magnitude().to_bytes_be()
    }

    pub fn denom_bytes(&self) -> Vec<u8> {
        self.0.denom().magnitude().to_bytes_be()
    }

    pub fn from_parts_be(numer: &[u8], denom: &[u8]) -> Result<Self, RationalError> {
        let n = BigUint::from_bytes_be(numer);
        let d = BigUint::from_bytes_be(denom);
        if d.is_zero() {
            return Err(RationalError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(
            BigInt::from_biguint(Sign::Plus, n),
            BigInt::from_biguint(Sign::Plus, d),
        )))
    }

    /// Nearest rational with denominator `10^9`, for float-sourced prices.
    pub fn from_f64_approx(x: f64) -> Result<Self, RationalError> {
        if !x.is_finite() {
            return Err(RationalError::Malformed(x.to_string()));
        }
        if x < 0.0 {
            return Err(RationalError::Negative(x.to_string()));
        }
        let scaled = (x * 1e9).round();
        Rational::new(scaled as u128, 1_000_000_000)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        Rational(&self.0 * &other.0)
    }

    pub fn mul_int(&self, n: u128) -> Rational {
        Rational(&self.0 * BigInt::from(n))
    }

    pub fn div_int(&self, n: u128) -> Option<Rational> {
        if n == 0 {
            None
        } else {
            Some(Rational(&self.0 / BigInt::from(n)))
        }
    }

    pub fn add(&self, other: &Rational) -> Rational {
        Rational(&self.0 + &other.0)
    }

    /// Largest integer not above the value, saturating at `u128::MAX`.
    pub fn floor_u128(&self) -> u128 {
        self.0.floor().to_integer().to_u128().unwrap_or(u128::MAX)
    }

    /// Round half up to an integer, saturating at `u128::MAX`.
    pub fn round_half_up_u128(&self) -> u128 {
        let two = BigInt::from(2);
        let (q, _) = (self.0.numer() * &two + self.0.denom()).div_rem(&(self.0.denom() * &two));
        q.to_u128().unwrap_or(u128::MAX)
    }

    /// Render as a decimal with `places` fractional digits (truncated).
    pub fn to_decimal_string(&self, places: usize) -> String {
        let scale = BigInt::from(10u32).pow(places as u32);
        let scaled = (self.0.numer() * &scale) / self.0.denom();
        let s = scaled.to_string();
        if places == 0 {
            return s;
        }
        let padded = format!("{:0>width$}", s, width = places + 1);
        let (int, frac) = padded.split_at(padded.len() - places);
        format!("{int}.{frac}")
    }
}

impl FromStr for Rational {
    type Err = RationalError;

    /// Accepts `123`, `0.8`, `1e-6`, `2.5E3`, `1/3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || RationalError::Malformed(s.to_string());
        if t.is_empty() {
            return Err(bad());
        }
        if t.starts_with('-') {
            return Err(RationalError::Negative(s.to_string()));
        }
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = parse_digits(n.trim()).ok_or_else(bad)?;
            let d: BigInt = parse_digits(d.trim()).ok_or_else(bad)?;
            if d.is_zero() {
                return Err(RationalError::ZeroDenominator);
            }
            return Ok(Rational(BigRational::new(n, d)));
        }
        let t = t.strip_prefix('+').unwrap_or(t);
        let (mantissa, exp) = match t.find(['e', 'E']) {
            Some(i) => {
                let e: i32 = t[i + 1..].parse().map_err(|_| bad())?;
                (&t[..i], e)
            }
            None => (t, 0),
        };
        if !(-64..=64).contains(&exp) {
            return Err(bad());
        }
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((a, b)) => (a, b),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let n = parse_digits(&digits).ok_or_else(bad)?;
        let ten = BigInt::from(10u32);
        let shift = exp - frac_part.len() as i32;
        let value = if shift >= 0 {
            BigRational::from_integer(n * ten.pow(shift as u32))
        } else {
            BigRational::new(n, ten.pow((-shift) as u32))
        };
        Ok(Rational(value))
    }
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || s.len() > 200 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rational({self})")
    }
}
