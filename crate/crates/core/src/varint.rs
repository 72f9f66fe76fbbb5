//! Unsigned LEB128 varints.
//!
//! Each byte carries 7 value bits, least-significant group first. The high bit
//! is set on every byte except the last one of a value. Values are capped at
//! 2^35 - 1 (5 bytes) and decoding rejects non-minimal encodings, so each value
//! has exactly one byte representation.

use crate::error::{Error, MalformedVarint, Result};

/// Largest encodable value.
pub const MAX_VALUE: u64 = (1 << 35) - 1;
/// Longest encoding, in bytes.
pub const MAX_BYTES: usize = 5;

/// A concatenation of LEB128-encoded values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarintStream(Vec<u8>);

impl VarintStream {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u8>> for VarintStream {
    fn from(bytes: Vec<u8>) -> Self {
        VarintStream(bytes)
    }
}

impl AsRef<[u8]> for VarintStream {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

fn check_range(value: u64, index: Option<usize>) -> Result<()> {
    if value > MAX_VALUE {
        return Err(Error::ValueOutOfRange { value, index });
    }
    Ok(())
}

/// Number of bytes `value` occupies when encoded.
pub fn byte_length(value: u64) -> Result<usize> {
    check_range(value, None)?;
    Ok(byte_length_unchecked(value))
}

#[inline]
pub(crate) fn byte_length_unchecked(value: u64) -> usize {
    let bits = 64 - value.max(1).leading_zeros() as usize;
    bits.div_ceil(7)
}

#[inline]
pub(crate) fn push_unchecked(mut value: u64, out: &mut Vec<u8>) {
    while value >= 0x80 {
        out.push((value as u8 & 0x7F) | 0x80);
        value >>= 7;
    }
    out.push(value as u8);
}

/// Appends the encoding of `value` to `out`.
pub fn encode_into(value: u64, out: &mut Vec<u8>) -> Result<()> {
    check_range(value, None)?;
    push_unchecked(value, out);
    Ok(())
}

pub fn encode_one(value: u64) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(MAX_BYTES);
    encode_into(value, &mut out)?;
    Ok(out)
}

/// Decodes the value starting at `offset`, returning it with the offset just past it.
pub fn decode_one(bytes: &[u8], offset: usize) -> Result<(u64, usize)> {
    decode_at(bytes, offset).map_err(|kind| Error::MalformedVarint {
        kind,
        offset,
        index: None,
    })
}

#[inline]
fn decode_at(bytes: &[u8], offset: usize) -> std::result::Result<(u64, usize), MalformedVarint> {
    let mut value = 0u64;
    for i in 0..MAX_BYTES {
        let Some(&byte) = bytes.get(offset + i) else {
            return Err(MalformedVarint::Truncated);
        };
        value |= u64::from(byte & 0x7F) << (7 * i);
        if byte & 0x80 == 0 {
            if byte == 0 && i > 0 {
                return Err(MalformedVarint::NonMinimal);
            }
            return Ok((value, offset + i + 1));
        }
    }
    Err(MalformedVarint::TooLong)
}

pub fn encode_stream(values: &[u64]) -> Result<VarintStream> {
    let mut out = Vec::with_capacity(values.len());
    for (index, &value) in values.iter().enumerate() {
        check_range(value, Some(index))?;
        push_unchecked(value, &mut out);
    }
    Ok(VarintStream(out))
}

pub fn decode_stream(bytes: &[u8]) -> Result<Vec<u64>> {
    let mut values = Vec::new();
    let mut offset = 0;
    while offset < bytes.len() {
        let (value, next) = decode_at(bytes, offset).map_err(|kind| Error::MalformedVarint {
            kind,
            offset,
            index: Some(values.len()),
        })?;
        values.push(value);
        offset = next;
    }
    Ok(values)
}

/// Encodes a token-ID stream. Token IDs are `u32`, so this cannot fail.
pub fn encode_tokens(ids: &[u32]) -> VarintStream {
    let mut out = Vec::with_capacity(ids.len() * 2);
    for &id in ids {
        push_unchecked(u64::from(id), &mut out);
    }
    VarintStream(out)
}

/// Decodes a token-ID stream, rejecting values that do not fit in `u32`.
pub fn decode_tokens(bytes: &[u8]) -> Result<Vec<u32>> {
    let mut ids = Vec::with_capacity(bytes.len() / 2 + 1);
    let mut offset = 0;
    while offset < bytes.len() {
        // Single-byte fast path: the bulk of a frequency-ordered stream.
        let b = bytes[offset];
        if b < 0x80 {
            ids.push(u32::from(b));
            offset += 1;
            continue;
        }
        let (value, next) = decode_at(bytes, offset).map_err(|kind| Error::MalformedVarint {
            kind,
            offset,
            index: Some(ids.len()),
        })?;
        let id = u32::try_from(value).map_err(|_| Error::InvalidToken {
            id: value,
            vocab_size: u32::MAX as usize,
        })?;
        ids.push(id);
        offset = next;
    }
    Ok(ids)
}

/// Number of token IDs whose encoding takes 1, 2, 3, 4 and 5 bytes.
pub fn length_histogram(ids: &[u32]) -> [u64; MAX_BYTES] {
    let mut hist = [0u64; MAX_BYTES];
    for &id in ids {
        hist[byte_length_unchecked(u64::from(id)) - 1] += 1;
    }
    hist
}
