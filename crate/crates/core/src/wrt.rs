//! Word replacing transform: a word-level baseline.
//!
//! Words are maximal runs of ASCII letters. Each word becomes the varint of its
//! frequency rank; the text between words becomes a literal frame
//! `0xFF, varint length, bytes`. Words and literals strictly alternate, so the
//! decoder always knows which one comes next. Only the very first segment is
//! ambiguous: a stream starting with `0xFF` begins with a literal frame, and a
//! text that starts with a word whose code begins with `0xFF` gets an empty
//! leading frame.

use std::time::Instant;

use rustc_hash::FxHashMap;

use crate::backend::Backend;
use crate::error::{Error, FormatError, Result, Stage, StageExt};
use crate::pipeline::{CompressionReport, StageTimings, Variant, VocabMode};
use crate::varint;

pub const ESCAPE: u8 = 0xFF;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordDictionary {
    words: Vec<Box<[u8]>>,
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphabetic()
}

/// Splits text into alternating word and non-word segments.
fn segments(text: &[u8]) -> impl Iterator<Item = (bool, &[u8])> {
    let mut pos = 0;
    std::iter::from_fn(move || {
        let start = pos;
        let kind = is_word_byte(*text.get(start)?);
        while pos < text.len() && is_word_byte(text[pos]) == kind {
            pos += 1;
        }
        Some((kind, &text[start..pos]))
    })
}

impl WordDictionary {
    /// Ranks the words of `text` by count, ties going to the earlier first occurrence.
    pub fn build(text: &[u8]) -> Self {
        // word -> (count, first occurrence order)
        let mut stats: FxHashMap<&[u8], (u64, usize)> = FxHashMap::default();
        for (is_word, seg) in segments(text) {
            if is_word {
                let next = stats.len();
                stats.entry(seg).or_insert((0, next)).0 += 1;
            }
        }
        let mut words: Vec<(&[u8], (u64, usize))> = stats.into_iter().collect();
        words.sort_unstable_by_key(|&(_, (count, first))| (std::cmp::Reverse(count), first));
        WordDictionary {
            words: words.into_iter().map(|(w, _)| w.into()).collect(),
        }
    }

    pub fn from_words(words: Vec<Vec<u8>>) -> Result<Self> {
        let mut seen = FxHashMap::default();
        for (rank, w) in words.iter().enumerate() {
            if w.is_empty() || !w.iter().all(|&b| is_word_byte(b)) {
                return Err(FormatError::Invalid {
                    what: "word dictionary",
                    detail: format!("entry {rank} is not a word"),
                }
                .into());
            }
            if seen.insert(w.as_slice(), rank).is_some() {
                return Err(FormatError::Invalid {
                    what: "word dictionary",
                    detail: format!("entry {rank} repeats an earlier word"),
                }
                .into());
            }
        }
        Ok(WordDictionary {
            words: words.into_iter().map(Vec::into_boxed_slice).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, rank: usize) -> Option<&[u8]> {
        self.words.get(rank).map(|w| &**w)
    }

    pub fn words(&self) -> impl Iterator<Item = &[u8]> {
        self.words.iter().map(|w| &**w)
    }

    /// Varint count, then each word as varint length and bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        varint::push_unchecked(self.words.len() as u64, &mut out);
        for w in &self.words {
            varint::push_unchecked(w.len() as u64, &mut out);
            out.extend_from_slice(w);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let truncated = |_| Error::from(FormatError::Truncated("word dictionary"));
        let (count, mut pos) = varint::decode_one(bytes, 0).map_err(truncated)?;
        let mut words = Vec::new();
        for _ in 0..count {
            let (len, next) = varint::decode_one(bytes, pos).map_err(truncated)?;
            let word = bytes
                .get(next..next.saturating_add(len as usize))
                .ok_or(FormatError::Truncated("word dictionary"))?;
            words.push(word.to_vec());
            pos = next + len as usize;
        }
        if pos != bytes.len() {
            return Err(FormatError::LengthMismatch {
                what: "word dictionary",
                declared: pos as u64,
                actual: bytes.len() as u64,
            }
            .into());
        }
        WordDictionary::from_words(words)
    }
}

/// Counts from one encoding pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WrtStats {
    pub words: u64,
    pub literals: u64,
    /// Word codes by varint length.
    pub histogram: [u64; varint::MAX_BYTES],
}

pub fn wrt_encode(text: &[u8]) -> (WordDictionary, Vec<u8>) {
    let (dict, stream, _) = encode_with_stats(text);
    (dict, stream)
}

pub fn encode_with_stats(text: &[u8]) -> (WordDictionary, Vec<u8>, WrtStats) {
    let dict = WordDictionary::build(text);
    let ranks: FxHashMap<&[u8], u64> = dict.words().zip(0..).collect();
    let mut out = Vec::with_capacity(text.len() / 2);
    let mut stats = WrtStats::default();
    for (i, (is_word, seg)) in segments(text).enumerate() {
        if is_word {
            let rank = ranks[seg];
            let at = out.len();
            varint::push_unchecked(rank, &mut out);
            if i == 0 && out[at] == ESCAPE {
                out.splice(at..at, [ESCAPE, 0x00]);
                stats.literals += 1;
            }
            stats.words += 1;
            stats.histogram[varint::byte_length_unchecked(rank) - 1] += 1;
        } else {
            out.push(ESCAPE);
            varint::push_unchecked(seg.len() as u64, &mut out);
            out.extend_from_slice(seg);
            stats.literals += 1;
        }
    }
    (dict, out, stats)
}

pub fn wrt_decode(dict: &WordDictionary, stream: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(stream.len() * 2);
    let mut pos = 0;
    let mut expect_literal = stream.first() == Some(&ESCAPE);
    let truncated = |_| Error::from(FormatError::Truncated("literal frame"));
    while pos < stream.len() {
        if expect_literal {
            if stream[pos] != ESCAPE {
                return Err(FormatError::Invalid {
                    what: "wrt stream",
                    detail: format!("expected a literal frame at byte {pos}"),
                }
                .into());
            }
            let (len, next) = varint::decode_one(stream, pos + 1).map_err(truncated)?;
            let body = stream
                .get(next..next.saturating_add(len as usize))
                .ok_or(FormatError::Truncated("literal frame"))?;
            out.extend_from_slice(body);
            pos = next + body.len();
        } else {
            let (rank, next) = varint::decode_one(stream, pos).map_err(|_| {
                Error::from(FormatError::Truncated("word code"))
            })?;
            let word = dict.word(rank as usize).ok_or_else(|| FormatError::Invalid {
                what: "wrt stream",
                detail: format!("word rank {rank} outside a dictionary of {}", dict.len()),
            })?;
            out.extend_from_slice(word);
            pos = next;
        }
        expect_literal = !expect_literal;
    }
    Ok(out)
}

/// Compresses the WRT stream and the serialized dictionary with `backend`.
pub fn wrt_ratio(text: &[u8], backend: &Backend) -> Result<CompressionReport> {
    let mut timings = StageTimings::default();
    let start = Instant::now();
    let (dict, stream, stats) = encode_with_stats(text);
    timings.tokenize = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let payload = backend.compress(&stream).stage(Stage::Backend)?;
    let dict_blob = backend.compress(&dict.to_bytes()).stage(Stage::Backend)?;
    timings.backend = start.elapsed().as_secs_f64();
    Ok(CompressionReport {
        variant: Variant::Wrt,
        backend: backend.name(),
        mode: VocabMode::Embedded,
        original_bytes: text.len() as u64,
        token_count: stats.words,
        varint_bytes: stream.len() as u64,
        compressed_bytes: payload.len() as u64,
        metadata_bytes: dict_blob.len() as u64,
        header_bytes: 0,
        timings,
        histogram: stats.histogram,
    })
}
