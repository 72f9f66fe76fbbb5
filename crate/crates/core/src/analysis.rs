//! Rank-frequency statistics and the varint cost model.

use std::ops::RangeInclusive;

use crate::backend::Backend;
use crate::bpe::Vocabulary;
use crate::error::{Error, Result};
use crate::pipeline::{self, VocabMode};
use crate::reorder::{FrequencyTable, RankPermutation};
use crate::varint;

/// Least-squares line through (ln rank, ln count).
#[derive(Debug, Clone, PartialEq)]
pub struct ZipfFit {
    /// Negated slope, so a falling curve gives a positive exponent.
    pub alpha: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rank_range: RangeInclusive<usize>,
    /// Number of ranks that entered the fit.
    pub points: usize,
}

pub const DEFAULT_RANK_RANGE: RangeInclusive<usize> = 1..=1000;
pub const MIN_FIT_POINTS: usize = 10;

/// Fits over 1-based ranks in `rank_range`, skipping zero counts.
pub fn fit_zipf(freq: &FrequencyTable, rank_range: RangeInclusive<usize>) -> Result<ZipfFit> {
    let mut counts: Vec<u64> = freq.counts().iter().copied().filter(|&c| c > 0).collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let points: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i + 1, c))
        .filter(|(r, _)| rank_range.contains(r))
        .map(|(r, c)| ((r as f64).ln(), (c as f64).ln()))
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidInput(format!(
            "zipf fit needs at least {MIN_FIT_POINTS} nonzero ranks in {rank_range:?}, found {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let flat = points.iter().all(|p| p.1 == points[0].1);
    let slope = if flat { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    // A flat line is fitted exactly.
    let r_squared = if flat { 1.0 } else { 1.0 - ss_res / syy };
    Ok(ZipfFit {
        alpha: -slope + 0.0,
        intercept,
        r_squared,
        rank_range,
        points: points.len(),
    })
}

/// How H_n is evaluated in the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicForm {
    /// Σ_{k=1..n} 1/k.
    Exact,
    /// ln n, the leading term of the asymptotic expansion.
    Logarithmic,
}

/// Varint cost under an ideal Zipf (α = 1) distribution over V ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryModel {
    pub vocab_size: usize,
    pub form: HarmonicForm,
    pub harmonic: f64,
    /// Probability mass on ranks whose varint takes 1..=5 bytes.
    pub bands: [f64; varint::MAX_BYTES],
    pub mean_bytes: f64,
}

impl TheoryModel {
    pub fn p_1b(&self) -> f64 {
        self.bands[0]
    }

    pub fn p_2b(&self) -> f64 {
        self.bands[1]
    }

    pub fn p_3b_plus(&self) -> f64 {
        self.bands[2..].iter().sum()
    }
}

pub fn harmonic(n: usize) -> f64 {
    // Summed from the small terms up for accuracy.
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

pub fn predict_costs(vocab_size: usize) -> TheoryModel {
    predict_costs_with(vocab_size, HarmonicForm::Exact)
}

pub fn predict_costs_with(vocab_size: usize, form: HarmonicForm) -> TheoryModel {
    let v = vocab_size.max(1);
    let h = |n: usize| match form {
        HarmonicForm::Exact => harmonic(n),
        HarmonicForm::Logarithmic => (n as f64).ln(),
    };
    let h_v = h(v);
    // Band k holds ranks 0-based below 128^k, i.e. 1-based ranks up to 128^k.
    let mut bands = [0.0; varint::MAX_BYTES];
    let mut below = 0.0;
    for (k, band) in bands.iter_mut().enumerate() {
        let edge = 1usize << (7 * (k + 1));
        if v <= edge {
            *band = 1.0 - below;
            break;
        }
        let upto = h(edge) / h_v;
        *band = upto - below;
        below = upto;
    }
    let mean_bytes = bands.iter().zip(1..).map(|(p, k)| p * k as f64).sum();
    TheoryModel {
        vocab_size: v,
        form,
        harmonic: h_v,
        bands,
        mean_bytes,
    }
}

/// Token counts by varint length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VarintHistogram {
    pub counts: [u64; varint::MAX_BYTES],
}

impl VarintHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn fractions(&self) -> [f64; varint::MAX_BYTES] {
        let total = self.total() as f64;
        self.counts.map(|c| c as f64 / total)
    }

    /// Mean bytes per token.
    pub fn mean(&self) -> f64 {
        let bytes: u64 = self.counts.iter().zip(1..).map(|(c, k)| c * k).sum();
        bytes as f64 / self.total() as f64
    }

    /// Fraction of tokens taking three or more bytes.
    pub fn three_plus_fraction(&self) -> f64 {
        self.fractions()[2..].iter().sum()
    }
}

/// Histogram of the stream the permutation would produce. The identity
/// permutation gives the histogram of the original IDs.
pub fn histogram_bytes(freq: &FrequencyTable, perm: &RankPermutation) -> Result<VarintHistogram> {
    if freq.total() == 0 {
        return Err(Error::InvalidInput("frequency table is empty".into()));
    }
    if perm.len() != freq.vocab_size() {
        return Err(Error::InvalidInput(format!(
            "permutation covers {} tokens, frequency table {}",
            perm.len(),
            freq.vocab_size()
        )));
    }
    let mut hist = VarintHistogram::default();
    for (rank, &token) in perm.token_at().iter().enumerate() {
        hist.counts[varint::byte_length_unchecked(rank as u64) - 1] += freq.counts()[token as usize];
    }
    Ok(hist)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub size: usize,
    pub backend: String,
    pub raw_ratio: f64,
    pub ours_ratio: f64,
}

impl ScalingRow {
    /// Raw minus preprocessed ratio, in percentage points.
    pub fn improvement_pp(&self) -> f64 {
        self.raw_ratio - self.ours_ratio
    }
}

/// Raw and full-pipeline ratios for each prefix size and backend, in input order.
pub fn scaling_study(
    text: &[u8],
    sizes: &[usize],
    vocab: &Vocabulary,
    backends: &[Backend],
    mode: VocabMode,
) -> Result<Vec<ScalingRow>> {
    if let Some(&size) = sizes.iter().find(|&&s| s > text.len() || s == 0) {
        return Err(Error::InvalidInput(format!(
            "prefix size {size} outside 1..={}",
            text.len()
        )));
    }
    let cells: Vec<(usize, &Backend)> = sizes
        .iter()
        .flat_map(|&s| backends.iter().map(move |b| (s, b)))
        .collect();
    // Cells are independent; run them side by side and keep the input order.
    std::thread::scope(|scope| {
        let handles: Vec<_> = cells
            .iter()
            .map(|&(size, backend)| {
                scope.spawn(move || -> Result<ScalingRow> {
                    let prefix = &text[..size];
                    let raw = pipeline::compress_raw(prefix, backend)?;
                    let (_, ours) = pipeline::compress_text(prefix, vocab, backend, mode)?;
                    Ok(ScalingRow {
                        size,
                        backend: backend.name(),
                        raw_ratio: raw.ratio_percent(),
                        ours_ratio: ours.ratio_percent(),
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scaling cell panicked"))
            .collect()
    })
}
