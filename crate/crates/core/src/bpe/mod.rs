//! Byte-level BPE.
//!
//! A [`Vocabulary`] is fully determined by its ordered merge list: token IDs
//! `0..256` are the single bytes, and merge `i` creates token `256 + i` as the
//! concatenation of its two parts. Tokenization applies merges by priority
//! (lowest merge index first, leftmost occurrence first), which reproduces the
//! replacement order used during training.

mod train;

use std::collections::HashSet;
use std::fmt;

use rustc_hash::FxHashMap;
use sha2::{Digest, Sha256};

use crate::error::{Error, FormatError, Result};
use crate::varint;

pub use train::{train, train_with, TrainConfig};

pub type TokenId = u32;
pub type TokenSequence = Vec<TokenId>;

/// Number of single-byte base tokens.
pub const BASE_SIZE: usize = 256;

const VOCAB_MAGIC: [u8; 4] = *b"FOTV";
const VOCAB_VERSION: u8 = 1;
const NONE: u32 = u32::MAX;

/// 128-bit identity of a vocabulary: the first 16 bytes of SHA-256 over its
/// serialized form.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct VocabId(pub [u8; 16]);

impl fmt::Display for VocabId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VocabId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VocabId({self})")
    }
}

#[derive(Clone)]
pub struct Vocabulary {
    merges: Vec<(TokenId, TokenId)>,
    tokens: Vec<Box<[u8]>>,
    ranks: FxHashMap<(TokenId, TokenId), u32>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.merges == other.merges
    }
}

impl Eq for Vocabulary {}

impl fmt::Debug for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vocabulary")
            .field("len", &self.len())
            .field("merges", &self.merges.len())
            .finish()
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::base()
    }
}

impl Vocabulary {
    /// The 256 single-byte tokens and no merges.
    pub fn base() -> Self {
        Vocabulary {
            merges: Vec::new(),
            tokens: (0..=255u8).map(|b| vec![b].into_boxed_slice()).collect(),
            ranks: FxHashMap::default(),
        }
    }

    /// Builds a vocabulary from an ordered merge list, checking that every
    /// merge refers to earlier tokens and that all token strings are distinct.
    pub fn from_merges(merges: Vec<(TokenId, TokenId)>) -> Result<Self> {
        let mut vocab = Self::base();
        let mut seen: HashSet<Box<[u8]>> = vocab.tokens.iter().cloned().collect();
        vocab.tokens.reserve(merges.len());
        vocab.ranks.reserve(merges.len());
        for (i, &(left, right)) in merges.iter().enumerate() {
            let size = BASE_SIZE + i;
            if left as usize >= size || right as usize >= size {
                return Err(FormatError::Invalid {
                    what: "vocabulary",
                    detail: format!("merge {i} ({left}, {right}) refers to a later token"),
                }
                .into());
            }
            let token = vocab.concat(left, right);
            if !seen.insert(token.clone()) {
                return Err(FormatError::Invalid {
                    what: "vocabulary",
                    detail: format!("merge {i} duplicates an existing token"),
                }
                .into());
            }
            if vocab.ranks.insert((left, right), i as u32).is_some() {
                return Err(FormatError::Invalid {
                    what: "vocabulary",
                    detail: format!("merge {i} ({left}, {right}) repeated"),
                }
                .into());
            }
            vocab.tokens.push(token);
        }
        vocab.merges = merges;
        Ok(vocab)
    }

    fn concat(&self, left: TokenId, right: TokenId) -> Box<[u8]> {
        let mut token = Vec::with_capacity(
            self.tokens[left as usize].len() + self.tokens[right as usize].len(),
        );
        token.extend_from_slice(&self.tokens[left as usize]);
        token.extend_from_slice(&self.tokens[right as usize]);
        token.into_boxed_slice()
    }

    /// Number of tokens, `256 + merges`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn merges(&self) -> &[(TokenId, TokenId)] {
        &self.merges
    }

    pub fn token(&self, id: TokenId) -> Option<&[u8]> {
        self.tokens.get(id as usize).map(|t| &t[..])
    }

    pub fn tokens(&self) -> impl Iterator<Item = &[u8]> {
        self.tokens.iter().map(|t| &t[..])
    }

    /// Merge index of `(left, right)`, if it is a learned merge.
    pub fn merge_rank(&self, left: TokenId, right: TokenId) -> Option<u32> {
        self.ranks.get(&(left, right)).copied()
    }

    /// Splits `text` into tokens. Never fails: every byte is a base token.
    pub fn tokenize(&self, text: &[u8]) -> TokenSequence {
        let n = text.len();
        let mut sym: Vec<u32> = text.iter().map(|&b| u32::from(b)).collect();
        if n < 2 || self.merges.is_empty() {
            return sym;
        }
        assert!(n < NONE as usize, "input too large to tokenize in one piece");
        let mut next: Vec<u32> = (1..=n as u32).collect();
        next[n - 1] = NONE;
        let mut prev: Vec<u32> = (0..n as u32).map(|i| i.wrapping_sub(1)).collect();
        prev[0] = NONE;

        // One bucket of candidate positions per merge rank. Merging at rank r
        // only creates pairs of higher rank, so each bucket is complete by the
        // time it is processed; sorting it gives the leftmost-first order.
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); self.merges.len()];
        for i in 0..n - 1 {
            if let Some(rank) = self.merge_rank(sym[i], sym[i + 1]) {
                buckets[rank as usize].push(i as u32);
            }
        }

        for rank in 0..self.merges.len() {
            let mut sites = std::mem::take(&mut buckets[rank]);
            if sites.is_empty() {
                continue;
            }
            sites.sort_unstable();
            let (a, b) = self.merges[rank];
            let z = (BASE_SIZE + rank) as u32;
            for &pos in &sites {
                let p = pos as usize;
                if sym[p] != a {
                    continue;
                }
                let q = next[p];
                if q == NONE || sym[q as usize] != b {
                    continue;
                }
                let q = q as usize;
                sym[p] = z;
                sym[q] = NONE;
                let after = next[q];
                next[p] = after;
                if after != NONE {
                    prev[after as usize] = pos;
                }
                let before = prev[p];
                if before != NONE {
                    if let Some(r) = self.merge_rank(sym[before as usize], z) {
                        buckets[r as usize].push(before);
                    }
                }
                if after != NONE {
                    if let Some(r) = self.merge_rank(z, sym[after as usize]) {
                        buckets[r as usize].push(pos);
                    }
                }
            }
        }

        sym.retain(|&s| s != NONE);
        sym
    }

    /// Concatenates the byte strings of `ids`.
    pub fn detokenize(&self, ids: &[TokenId]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(ids.len() * 4);
        for &id in ids {
            let token = self.tokens.get(id as usize).ok_or(Error::InvalidToken {
                id: u64::from(id),
                vocab_size: self.len(),
            })?;
            out.extend_from_slice(token);
        }
        Ok(out)
    }

    /// Serializes as `"FOTV"`, version byte, varint merge count, then the
    /// merge pairs as varints.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + self.merges.len() * 4);
        out.extend_from_slice(&VOCAB_MAGIC);
        out.push(VOCAB_VERSION);
        varint::push_unchecked(self.merges.len() as u64, &mut out);
        for &(left, right) in &self.merges {
            varint::push_unchecked(u64::from(left), &mut out);
            varint::push_unchecked(u64::from(right), &mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != VOCAB_MAGIC {
            return Err(FormatError::BadMagic {
                expected: VOCAB_MAGIC,
                found: bytes[..bytes.len().min(4)].to_vec(),
            }
            .into());
        }
        let version = *bytes.get(4).ok_or(FormatError::Truncated("vocabulary header"))?;
        if version != VOCAB_VERSION {
            return Err(FormatError::UnsupportedVersion {
                what: "vocabulary",
                version,
            }
            .into());
        }
        let mut offset = 5;
        let read = |offset: &mut usize| -> Result<u64> {
            let (value, next) =
                varint::decode_one(bytes, *offset).map_err(|_| FormatError::Truncated("vocabulary"))?;
            *offset = next;
            Ok(value)
        };
        let count = read(&mut offset)?;
        // Each merge needs at least two bytes; reject absurd counts before allocating.
        if count > (bytes.len() as u64) / 2 {
            return Err(FormatError::LengthMismatch {
                what: "vocabulary merge count",
                declared: count,
                actual: (bytes.len() - offset) as u64 / 2,
            }
            .into());
        }
        let mut merges = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let left = read(&mut offset)?;
            let right = read(&mut offset)?;
            let to_id = |v: u64| {
                u32::try_from(v).map_err(|_| FormatError::Invalid {
                    what: "vocabulary",
                    detail: format!("token id {v} too large"),
                })
            };
            merges.push((to_id(left)?, to_id(right)?));
        }
        if offset != bytes.len() {
            return Err(FormatError::LengthMismatch {
                what: "vocabulary",
                declared: offset as u64,
                actual: bytes.len() as u64,
            }
            .into());
        }
        Self::from_merges(merges)
    }

    pub fn id(&self) -> VocabId {
        let digest = Sha256::digest(self.to_bytes());
        let mut id = [0u8; 16];
        id.copy_from_slice(&digest[..16]);
        VocabId(id)
    }
}

pub fn tokenize(text: &[u8], vocab: &Vocabulary) -> TokenSequence {
    vocab.tokenize(text)
}

pub fn detokenize(ids: &[TokenId], vocab: &Vocabulary) -> Result<Vec<u8>> {
    vocab.detokenize(ids)
}

pub fn save_vocab(vocab: &Vocabulary) -> Vec<u8> {
    vocab.to_bytes()
}

pub fn load_vocab(bytes: &[u8]) -> Result<Vocabulary> {
    Vocabulary::from_bytes(bytes)
}
