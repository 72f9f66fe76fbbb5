//! The `.fotc` file format.
//!
//! ```text
//! magic "FOTC" | version u8 | backend u8 | flags u8
//! original_size varint | token_count varint
//! vocab_blob_len varint | mapping_blob_len varint
//! vocab_id [16]          (only when the vocabulary is not embedded)
//! vocab_blob | mapping_blob | payload (rest of file)
//! ```
//!
//! Flag bit 0 marks an embedded vocabulary, bit 1 an embedded mapping. Without a
//! mapping the payload holds original token IDs. Both blobs are compressed with
//! the container's backend.

use crate::backend::{BackendId, EXTERNAL_WIRE_CODE};
use crate::bpe::VocabId;
use crate::error::{Error, FormatError, Result};
use crate::varint;

pub const MAGIC: [u8; 4] = *b"FOTC";
pub const VERSION: u8 = 1;

pub const FLAG_VOCAB_EMBEDDED: u8 = 0b01;
pub const FLAG_MAPPING_EMBEDDED: u8 = 0b10;

/// Where the decoder finds the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabRef {
    /// Backend-compressed vocabulary file.
    Embedded(Vec<u8>),
    /// Content hash of a vocabulary file supplied separately.
    Shared(VocabId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub backend_code: u8,
    pub original_size: u64,
    pub token_count: u64,
    pub vocab: VocabRef,
    /// Backend-compressed mapping blob; `None` means the identity mapping.
    pub mapping: Option<Vec<u8>>,
    pub payload: Vec<u8>,
}

impl Container {
    pub fn flags(&self) -> u8 {
        let mut flags = 0;
        if matches!(self.vocab, VocabRef::Embedded(_)) {
            flags |= FLAG_VOCAB_EMBEDDED;
        }
        if self.mapping.is_some() {
            flags |= FLAG_MAPPING_EMBEDDED;
        }
        flags
    }

    pub fn vocab_blob(&self) -> &[u8] {
        match &self.vocab {
            VocabRef::Embedded(blob) => blob,
            VocabRef::Shared(_) => &[],
        }
    }

    pub fn mapping_blob(&self) -> &[u8] {
        self.mapping.as_deref().unwrap_or(&[])
    }

    /// Bytes of embedded vocabulary and mapping.
    pub fn metadata_len(&self) -> usize {
        self.vocab_blob().len() + self.mapping_blob().len()
    }

    pub fn header_len(&self) -> usize {
        self.header().len()
    }

    fn header(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&[VERSION, self.backend_code, self.flags()]);
        for value in [
            self.original_size,
            self.token_count,
            self.vocab_blob().len() as u64,
            self.mapping_blob().len() as u64,
        ] {
            varint::push_unchecked(value, &mut out);
        }
        if let VocabRef::Shared(id) = &self.vocab {
            out.extend_from_slice(&id.0);
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header();
        out.reserve(self.metadata_len() + self.payload.len());
        out.extend_from_slice(self.vocab_blob());
        out.extend_from_slice(self.mapping_blob());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write_to(&self, out: &mut impl std::io::Write) -> Result<()> {
        out.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if !bytes.starts_with(&MAGIC) {
            return Err(FormatError::BadMagic {
                expected: MAGIC,
                found: bytes[..bytes.len().min(4)].to_vec(),
            }
            .into());
        }
        r.pos = 4;
        let [version, backend_code, flags] = r.take(3, "header")?.try_into().unwrap();
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion {
                what: "container",
                version,
            }
            .into());
        }
        if backend_code != EXTERNAL_WIRE_CODE {
            BackendId::from_wire_code(backend_code)?;
        }
        if flags & !(FLAG_VOCAB_EMBEDDED | FLAG_MAPPING_EMBEDDED) != 0 {
            return Err(FormatError::UnknownFlags(flags).into());
        }
        let original_size = r.varint()?;
        let token_count = r.varint()?;
        let vocab_len = r.varint()?;
        let mapping_len = r.varint()?;

        let vocab_embedded = flags & FLAG_VOCAB_EMBEDDED != 0;
        let mapping_embedded = flags & FLAG_MAPPING_EMBEDDED != 0;
        let absent_but_sized = |what, len: u64| {
            if len != 0 {
                return Err(Error::from(FormatError::LengthMismatch {
                    what,
                    declared: len,
                    actual: 0,
                }));
            }
            Ok(())
        };
        let shared_id = if vocab_embedded {
            None
        } else {
            absent_but_sized("vocabulary blob", vocab_len)?;
            let id: [u8; 16] = r.take(16, "vocabulary id")?.try_into().unwrap();
            Some(VocabId(id))
        };
        if !mapping_embedded {
            absent_but_sized("mapping blob", mapping_len)?;
        }

        let vocab = match shared_id {
            Some(id) => VocabRef::Shared(id),
            None => VocabRef::Embedded(r.section(vocab_len, "vocabulary blob")?.to_vec()),
        };
        let mapping = if mapping_embedded {
            Some(r.section(mapping_len, "mapping blob")?.to_vec())
        } else {
            None
        };
        Ok(Container {
            backend_code,
            original_size,
            token_count,
            vocab,
            mapping,
            payload: bytes[r.pos..].to_vec(),
        })
    }

    /// Embedded metadata as a fraction of the original size.
    pub fn overhead_fraction(&self) -> Result<f64> {
        if self.original_size == 0 {
            return Err(Error::InvalidInput(
                "overhead is undefined for an empty original".into(),
            ));
        }
        Ok(self.metadata_len() as f64 / self.original_size as f64)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let slice = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or(FormatError::Truncated(what))?;
        self.pos += n;
        Ok(slice)
    }

    fn varint(&mut self) -> Result<u64> {
        let (value, next) = varint::decode_one(self.bytes, self.pos)
            .map_err(|_| FormatError::Truncated("header"))?;
        self.pos = next;
        Ok(value)
    }

    fn section(&mut self, len: u64, what: &'static str) -> Result<&'a [u8]> {
        let left = (self.bytes.len() - self.pos) as u64;
        if len > left {
            return Err(FormatError::LengthMismatch {
                what,
                declared: len,
                actual: left,
            }
            .into());
        }
        self.take(len as usize, what)
    }
}

pub fn write_container(container: &Container) -> Vec<u8> {
    container.to_bytes()
}

pub fn read_container(bytes: &[u8]) -> Result<Container> {
    Container::from_bytes(bytes)
}

pub fn overhead_fraction(container: &Container) -> Result<f64> {
    container.overhead_fraction()
}
