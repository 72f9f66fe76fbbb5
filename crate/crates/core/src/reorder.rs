//! Frequency-rank remapping of token IDs.
//!
//! Tokens are ranked by descending count with ties broken by ascending
//! original ID, so rank 0 is the most frequent token. Unused tokens keep their
//! place at the tail, which keeps the mapping a bijection over the whole
//! vocabulary.

use crate::bpe::TokenId;
use crate::error::{Error, FormatError, Result};
use crate::varint;

/// Occurrence count of every token ID in a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: Vec<u64>,
}

impl FrequencyTable {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        FrequencyTable { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn count_frequencies(ids: &[TokenId], vocab_size: usize) -> Result<FrequencyTable> {
    let mut counts = vec![0u64; vocab_size];
    for &id in ids {
        match counts.get_mut(id as usize) {
            Some(c) => *c += 1,
            None => {
                return Err(Error::InvalidToken {
                    id: u64::from(id),
                    vocab_size,
                })
            }
        }
    }
    Ok(FrequencyTable { counts })
}

/// Bijection between original token IDs and frequency ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankPermutation {
    rank_of: Vec<u32>,
    token_at: Vec<TokenId>,
}

impl RankPermutation {
    pub fn identity(size: usize) -> Self {
        let ids: Vec<u32> = (0..size as u32).collect();
        RankPermutation {
            rank_of: ids.clone(),
            token_at: ids,
        }
    }

    /// Builds the permutation from its rank-to-token table, checking bijectivity.
    pub fn from_token_at(token_at: Vec<TokenId>) -> Result<Self> {
        let n = token_at.len();
        let mut rank_of = vec![u32::MAX; n];
        for (rank, &token) in token_at.iter().enumerate() {
            let slot = rank_of.get_mut(token as usize).ok_or_else(|| FormatError::Invalid {
                what: "mapping",
                detail: format!("token {token} out of range for {n} entries"),
            })?;
            if *slot != u32::MAX {
                return Err(FormatError::Invalid {
                    what: "mapping",
                    detail: format!("token {token} appears twice"),
                }
                .into());
            }
            *slot = rank as u32;
        }
        Ok(RankPermutation { rank_of, token_at })
    }

    pub fn len(&self) -> usize {
        self.token_at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_at.is_empty()
    }

    /// Original ID → rank.
    pub fn rank_of(&self) -> &[u32] {
        &self.rank_of
    }

    /// Rank → original ID.
    pub fn token_at(&self) -> &[TokenId] {
        &self.token_at
    }

    pub fn is_identity(&self) -> bool {
        self.token_at.iter().enumerate().all(|(r, &t)| r as u32 == t)
    }
}

pub fn build_permutation(freq: &FrequencyTable) -> RankPermutation {
    let mut token_at: Vec<TokenId> = (0..freq.counts.len() as u32).collect();
    // Stable sort keeps ascending IDs within equal counts.
    token_at.sort_by_key(|&t| std::cmp::Reverse(freq.counts[t as usize]));
    let mut rank_of = vec![0u32; token_at.len()];
    for (rank, &t) in token_at.iter().enumerate() {
        rank_of[t as usize] = rank as u32;
    }
    RankPermutation { rank_of, token_at }
}

fn apply(ids: &[TokenId], table: &[u32]) -> Result<Vec<TokenId>> {
    ids.iter()
        .map(|&id| {
            table.get(id as usize).copied().ok_or(Error::InvalidToken {
                id: u64::from(id),
                vocab_size: table.len(),
            })
        })
        .collect()
}

/// Replaces each original ID by its rank.
pub fn remap(ids: &[TokenId], perm: &RankPermutation) -> Result<Vec<TokenId>> {
    apply(ids, &perm.rank_of)
}

/// Replaces each rank by its original ID.
pub fn unremap(ids: &[TokenId], perm: &RankPermutation) -> Result<Vec<TokenId>> {
    apply(ids, &perm.token_at)
}

/// Varint count followed by `token_at` as varints.
pub fn serialize_mapping(perm: &RankPermutation) -> Vec<u8> {
    let mut out = Vec::with_capacity(perm.len() * 2 + 3);
    varint::push_unchecked(perm.len() as u64, &mut out);
    for &t in &perm.token_at {
        varint::push_unchecked(u64::from(t), &mut out);
    }
    out
}

pub fn deserialize_mapping(bytes: &[u8]) -> Result<RankPermutation> {
    let truncated = |_| Error::from(FormatError::Truncated("mapping"));
    let (count, mut offset) = varint::decode_one(bytes, 0).map_err(truncated)?;
    if count > (bytes.len() - offset) as u64 {
        return Err(FormatError::LengthMismatch {
            what: "mapping entry count",
            declared: count,
            actual: (bytes.len() - offset) as u64,
        }
        .into());
    }
    let mut token_at = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let (value, next) = varint::decode_one(bytes, offset).map_err(truncated)?;
        offset = next;
        let t = u32::try_from(value).map_err(|_| FormatError::Invalid {
            what: "mapping",
            detail: format!("token {value} too large"),
        })?;
        token_at.push(t);
    }
    if offset != bytes.len() {
        return Err(FormatError::LengthMismatch {
            what: "mapping",
            declared: offset as u64,
            actual: bytes.len() as u64,
        }
        .into());
    }
    RankPermutation::from_token_at(token_at)
}

/// Mean varint bytes per token when the sequence is coded under `perm`.
pub fn expected_varint_cost(freq: &FrequencyTable, perm: &RankPermutation) -> Result<f64> {
    let total = freq.total();
    if total == 0 {
        return Err(Error::InvalidInput("frequency table is empty".into()));
    }
    if perm.len() != freq.vocab_size() {
        return Err(Error::InvalidInput(format!(
            "permutation covers {} tokens, frequency table {}",
            perm.len(),
            freq.vocab_size()
        )));
    }
    let bytes: u64 = perm
        .token_at
        .iter()
        .enumerate()
        .map(|(rank, &t)| freq.counts[t as usize] * varint::byte_length_unchecked(rank as u64) as u64)
        .sum();
    Ok(bytes as f64 / total as f64)
}
