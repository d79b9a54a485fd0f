//! Binary table cache.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        4 bytes  "GFCT"
//! version      u16      currently 1
//! fp_len       u16      length of the fingerprint
//! fingerprint  fp_len bytes of ASCII hex
//! n_max        u64
//! classes      u64
//! entries      classes * (n_max + 1) records, class-major:
//!   sign       u8       0 zero, 1 positive, 2 negative
//!   num_len    u64      byte length of |numerator|
//!   num        num_len bytes, little-endian magnitude
//!   den_len    u64
//!   den        den_len bytes, little-endian magnitude (nonzero)
//! ```
//!
//! Entries are the unscaled counts `c_n` in lowest terms.

use crate::{Error, Result};
use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::Zero;

pub const CACHE_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"GFCT";
const MIN_RECORD: u64 = 1 + 8 + 8 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CacheContents {
    pub fingerprint: String,
    pub n_max: usize,
    pub rows: Vec<Vec<BigRational>>,
}

pub(crate) fn encode(fingerprint: &str, n_max: usize, rows: &[Vec<BigRational>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(fingerprint.len() as u16).to_le_bytes());
    out.extend_from_slice(fingerprint.as_bytes());
    out.extend_from_slice(&(n_max as u64).to_le_bytes());
    out.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    for row in rows {
        for v in row {
            let sign = match v.numer().sign() {
                Sign::NoSign => 0u8,
                Sign::Plus => 1,
                Sign::Minus => 2,
            };
            out.push(sign);
            let num = v.numer().magnitude().to_bytes_le();
            let num: &[u8] = if sign == 0 { &[] } else { &num };
            out.extend_from_slice(&(num.len() as u64).to_le_bytes());
            out.extend_from_slice(num);
            let den = v.denom().magnitude().to_bytes_le();
            out.extend_from_slice(&(den.len() as u64).to_le_bytes());
            out.extend_from_slice(&den);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: u64) -> Result<&'a [u8]> {
        let remaining = (self.bytes.len() - self.pos) as u64;
        if n > remaining {
            return Err(Error::Cache(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n as usize];
        self.pos += n as usize;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> u64 {
        (self.bytes.len() - self.pos) as u64
    }
}

/// Parse cache bytes. Never panics on malformed input.
pub fn decode_cache(bytes: &[u8]) -> Result<CacheContents> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = r.u16()?;
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    let fp_len = r.u16()?;
    let fingerprint = std::str::from_utf8(r.take(fp_len as u64)?)
        .map_err(|_| Error::Cache("fingerprint is not UTF-8".into()))?
        .to_string();
    let n_max = r.u64()?;
    let classes = r.u64()?;
    let per_row = n_max
        .checked_add(1)
        .ok_or_else(|| Error::Cache("n_max overflow".into()))?;
    let records = classes
        .checked_mul(per_row)
        .ok_or_else(|| Error::Cache("entry count overflow".into()))?;
    if records
        .checked_mul(MIN_RECORD)
        .is_none_or(|need| need > r.remaining())
    {
        return Err(Error::Cache("entry count exceeds file size".into()));
    }
    let mut rows = Vec::with_capacity(classes as usize);
    for _ in 0..classes {
        let mut row = Vec::with_capacity(per_row as usize);
        for _ in 0..per_row {
            let sign = match r.u8()? {
                0 => Sign::NoSign,
                1 => Sign::Plus,
                2 => Sign::Minus,
                s => return Err(Error::Cache(format!("bad sign byte {s}"))),
            };
            let len = r.u64()?;
            let num = BigUint::from_bytes_le(r.take(len)?);
            if (sign == Sign::NoSign) != num.is_zero() {
                return Err(Error::Cache("sign does not match numerator".into()));
            }
            let len = r.u64()?;
            let den = BigUint::from_bytes_le(r.take(len)?);
            if den.is_zero() {
                return Err(Error::Cache("zero denominator".into()));
            }
            row.push(BigRational::new(
                BigInt::from_biguint(sign, num),
                BigInt::from_biguint(Sign::Plus, den),
            ));
        }
        rows.push(row);
    }
    if r.remaining() != 0 {
        return Err(Error::Cache("trailing bytes".into()));
    }
    Ok(CacheContents {
        fingerprint,
        n_max: n_max as usize,
        rows,
    })
}
