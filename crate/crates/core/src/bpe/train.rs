//! BPE training over one long symbol sequence.
//!
//! Pair counts follow the replacement semantics of a merge: occurrences are
//! counted left to right without overlap, so a run of `n` identical symbols
//! contributes `n / 2` occurrences of the doubled pair. The most frequent pair
//! wins; ties go to the lexicographically smallest `(left, right)`. Training
//! stops when no pair occurs at least twice or the target size is reached.
//!
//! The sequence is a doubly linked list over corpus positions. Each pair keeps
//! a (possibly stale) list of positions where it was created, and a lazy max
//! heap holds candidate counts. All count updates are local to the sites being
//! merged, apart from walking the runs of equal symbols that touch a site.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use rustc_hash::FxHashMap;

use super::{TokenId, Vocabulary, BASE_SIZE, NONE};
use crate::error::{Error, Result};

type Pair = (TokenId, TokenId);

/// Training parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainConfig {
    /// Target number of tokens, including the 256 base tokens.
    pub vocab_size: usize,
    /// When set, pairs never span a position right after this byte.
    pub split_byte: Option<u8>,
    /// Corpora larger than this are subsampled in evenly spaced blocks.
    pub max_corpus_bytes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            vocab_size: 32768,
            split_byte: None,
            max_corpus_bytes: 50 << 20,
        }
    }
}

const SAMPLE_BLOCK: usize = 1 << 20;

pub fn train(corpus: &[u8], vocab_size: usize) -> Result<Vocabulary> {
    train_with(
        corpus,
        &TrainConfig {
            vocab_size,
            ..TrainConfig::default()
        },
    )
}

pub fn train_with(corpus: &[u8], config: &TrainConfig) -> Result<Vocabulary> {
    Ok(run(corpus, config)?.0)
}

/// Trains and also returns the final training sequence (live symbols in order).
pub(crate) fn run(corpus: &[u8], config: &TrainConfig) -> Result<(Vocabulary, Vec<TokenId>)> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("training corpus is empty".into()));
    }
    if config.vocab_size < BASE_SIZE {
        return Err(Error::InvalidInput(format!(
            "target vocabulary size {} is below the {BASE_SIZE} base tokens",
            config.vocab_size
        )));
    }
    let segments = sample(corpus, config.max_corpus_bytes.max(1));
    let mut trainer = Trainer::new(&segments, config.split_byte);
    let merges = trainer.learn(config.vocab_size - BASE_SIZE);
    let vocab = Vocabulary::from_merges(merges)?;
    Ok((vocab, trainer.live_symbols()))
}

fn sample(corpus: &[u8], cap: usize) -> Vec<&[u8]> {
    if corpus.len() <= cap {
        return vec![corpus];
    }
    let block = SAMPLE_BLOCK.min(cap);
    let blocks = cap / block;
    let stride = corpus.len() / blocks;
    (0..blocks)
        .map(|k| &corpus[k * stride..k * stride + block])
        .collect()
}

struct Trainer {
    sym: Vec<u32>,
    prev: Vec<u32>,
    next: Vec<u32>,
    counts: FxHashMap<Pair, i64>,
    sites: FxHashMap<Pair, Vec<u32>>,
    heap: BinaryHeap<(i64, Reverse<Pair>)>,
    touched: Vec<Pair>,
    tokens: Vec<Vec<u8>>,
    known: HashSet<Vec<u8>>,
    banned: HashSet<Pair>,
    merges: Vec<Pair>,
}

impl Trainer {
    fn new(segments: &[&[u8]], split_byte: Option<u8>) -> Self {
        let n: usize = segments.iter().map(|s| s.len()).sum();
        assert!(n < NONE as usize, "training corpus too large");
        let mut sym = Vec::with_capacity(n);
        let mut prev = Vec::with_capacity(n);
        let mut next = Vec::with_capacity(n);
        for segment in segments {
            let start = sym.len();
            for (k, &b) in segment.iter().enumerate() {
                let pos = (start + k) as u32;
                let first = k == 0 || split_byte == Some(segment[k - 1]);
                sym.push(u32::from(b));
                prev.push(if first { NONE } else { pos - 1 });
                let last = k + 1 == segment.len() || split_byte == Some(b);
                next.push(if last { NONE } else { pos + 1 });
            }
        }
        let mut trainer = Trainer {
            sym,
            prev,
            next,
            counts: FxHashMap::default(),
            sites: FxHashMap::default(),
            heap: BinaryHeap::new(),
            touched: Vec::new(),
            tokens: (0..=255u8).map(|b| vec![b]).collect(),
            known: (0..=255u8).map(|b| vec![b]).collect(),
            banned: HashSet::new(),
            merges: Vec::new(),
        };
        trainer.count_initial();
        trainer
    }

    fn count_initial(&mut self) {
        let n = self.sym.len();
        let mut i = 0;
        while i < n {
            let j = self.next[i];
            if j == NONE {
                i += 1;
                continue;
            }
            let s = self.sym[i];
            if self.sym[j as usize] == s {
                let len = self.run_right(i as u32);
                self.add((s, s), (len / 2) as i64, i as u32);
                i += len - 1;
            } else {
                self.add((s, self.sym[j as usize]), 1, i as u32);
                i += 1;
            }
        }
        self.touched.clear();
        for (&pair, &count) in &self.counts {
            if count >= 2 {
                self.heap.push((count, Reverse(pair)));
            }
        }
    }

    fn add(&mut self, pair: Pair, delta: i64, site: u32) {
        if delta == 0 {
            return;
        }
        let count = self.counts.entry(pair).or_insert(0);
        *count += delta;
        debug_assert!(*count >= 0, "negative count for {pair:?}");
        if *count == 0 {
            self.counts.remove(&pair);
        }
        if delta > 0 {
            self.touched.push(pair);
            self.sites.entry(pair).or_default().push(site);
        }
    }

    /// Length of the run of equal symbols ending at `pos`.
    fn run_left(&self, pos: u32) -> usize {
        let s = self.sym[pos as usize];
        let mut len = 1;
        let mut p = self.prev[pos as usize];
        while p != NONE && self.sym[p as usize] == s {
            len += 1;
            p = self.prev[p as usize];
        }
        len
    }

    /// Length of the run of equal symbols starting at `pos`.
    fn run_right(&self, pos: u32) -> usize {
        let s = self.sym[pos as usize];
        let mut len = 1;
        let mut p = self.next[pos as usize];
        while p != NONE && self.sym[p as usize] == s {
            len += 1;
            p = self.next[p as usize];
        }
        len
    }

    fn best_pair(&mut self) -> Option<(Pair, i64)> {
        while let Some((stored, Reverse(pair))) = self.heap.pop() {
            let actual = self.counts.get(&pair).copied().unwrap_or(0);
            if actual != stored {
                if actual >= 2 {
                    self.heap.push((actual, Reverse(pair)));
                }
                continue;
            }
            if self.banned.contains(&pair) {
                continue;
            }
            return Some((pair, actual));
        }
        None
    }

    fn learn(&mut self, max_merges: usize) -> Vec<Pair> {
        while self.merges.len() < max_merges && self.step().is_some() {}
        std::mem::take(&mut self.merges)
    }

    /// Performs the next merge, if any pair still occurs at least twice.
    fn step(&mut self) -> Option<Pair> {
        let (pair, token) = loop {
            let (pair, count) = self.best_pair()?;
            if count < 2 {
                return None;
            }
            let mut token = self.tokens[pair.0 as usize].clone();
            token.extend_from_slice(&self.tokens[pair.1 as usize]);
            if self.known.contains(&token) {
                // Same bytes as an existing token through a different split.
                self.banned.insert(pair);
                continue;
            }
            break (pair, token);
        };
        let z = self.tokens.len() as u32;
        let mut sites = self.sites.remove(&pair).unwrap_or_default();
        sites.sort_unstable();
        sites.dedup();
        if pair.0 == pair.1 {
            self.merge_runs(pair.0, z, &sites);
        } else {
            self.merge_distinct(pair, z, &sites);
        }
        debug_assert!(!self.counts.contains_key(&pair), "{pair:?} left behind");
        self.counts.remove(&pair);

        let mut touched = std::mem::take(&mut self.touched);
        touched.sort_unstable();
        touched.dedup();
        for &p in &touched {
            if let Some(&c) = self.counts.get(&p) {
                if c >= 2 {
                    self.heap.push((c, Reverse(p)));
                }
            }
        }
        touched.clear();
        self.touched = touched;

        self.known.insert(token.clone());
        self.tokens.push(token);
        self.merges.push(pair);
        Some(pair)
    }

    fn merge_distinct(&mut self, (a, b): Pair, z: u32, sites: &[u32]) {
        let mut last_z = NONE;
        let mut z_run = 0usize;
        for &i in sites {
            let iu = i as usize;
            if self.sym[iu] != a {
                continue;
            }
            let j = self.next[iu];
            if j == NONE || self.sym[j as usize] != b {
                continue;
            }
            let x = self.prev[iu];
            let y = self.next[j as usize];

            // Unaccount the old neighbourhood.
            let a_run = self.run_left(i);
            if a_run >= 2 {
                if a_run.is_multiple_of(2) {
                    self.add((a, a), -1, i);
                }
                if a_run >= 3 {
                    // The shortened run must stay reachable for a later (a, a) merge.
                    self.sites.entry((a, a)).or_default().push(x);
                }
            } else if x != NONE {
                self.add((self.sym[x as usize], a), -1, x);
            }
            self.add((a, b), -1, i);
            let b_run = self.run_right(j);
            if b_run >= 2 {
                if b_run.is_multiple_of(2) {
                    self.add((b, b), -1, j);
                }
                if b_run >= 3 {
                    self.sites.entry((b, b)).or_default().push(y);
                }
            } else if y != NONE {
                self.add((b, self.sym[y as usize]), -1, j);
            }

            self.sym[iu] = z;
            self.sym[j as usize] = NONE;
            self.next[iu] = y;
            if y != NONE {
                self.prev[y as usize] = i;
            }

            // Account the new neighbourhood. A `z` on the left can only be the
            // site merged just before this one.
            if x != NONE && self.sym[x as usize] == z {
                debug_assert_eq!(x, last_z);
                z_run += 1;
                if z_run.is_multiple_of(2) {
                    self.add((z, z), 1, x);
                }
            } else {
                if x != NONE {
                    self.add((self.sym[x as usize], z), 1, x);
                }
                z_run = 1;
            }
            if y != NONE {
                self.add((z, self.sym[y as usize]), 1, i);
            }
            last_z = i;
        }
    }

    fn merge_runs(&mut self, a: u32, z: u32, sites: &[u32]) {
        let mut run = Vec::new();
        for &p in sites {
            let pu = p as usize;
            if self.sym[pu] != a {
                continue;
            }
            let q = self.next[pu];
            if q == NONE || self.sym[q as usize] != a {
                continue;
            }
            let mut start = p;
            while self.prev[start as usize] != NONE && self.sym[self.prev[start as usize] as usize] == a {
                start = self.prev[start as usize];
            }
            run.clear();
            let mut t = start;
            while t != NONE && self.sym[t as usize] == a {
                run.push(t);
                t = self.next[t as usize];
            }
            let len = run.len();
            let x = self.prev[start as usize];
            let y = t;

            self.add((a, a), -((len / 2) as i64), start);
            if x != NONE {
                self.add((self.sym[x as usize], a), -1, x);
            }
            if y != NONE {
                self.add((a, self.sym[y as usize]), -1, run[len - 1]);
            }

            let pairs = len / 2;
            let mut survivors: Vec<u32> = Vec::with_capacity(pairs + 1);
            for k in 0..pairs {
                self.sym[run[2 * k] as usize] = z;
                self.sym[run[2 * k + 1] as usize] = NONE;
                survivors.push(run[2 * k]);
            }
            if len % 2 == 1 {
                survivors.push(run[len - 1]);
            }
            let mut left = x;
            for &s in &survivors {
                self.prev[s as usize] = left;
                if left != NONE {
                    self.next[left as usize] = s;
                }
                left = s;
            }
            self.next[left as usize] = y;
            if y != NONE {
                self.prev[y as usize] = left;
            }

            if x != NONE {
                self.add((self.sym[x as usize], z), 1, x);
            }
            if pairs >= 2 {
                self.add((z, z), (pairs / 2) as i64, survivors[0]);
            }
            let last_z = survivors[pairs - 1];
            if len % 2 == 1 {
                self.add((z, a), 1, last_z);
                if y != NONE {
                    self.add((a, self.sym[y as usize]), 1, run[len - 1]);
                }
            } else if y != NONE {
                self.add((z, self.sym[y as usize]), 1, last_z);
            }
        }
    }

    fn live_symbols(&self) -> Vec<TokenId> {
        self.sym.iter().copied().filter(|&s| s != NONE).collect()
    }

    #[cfg(test)]
    fn recount(&self) -> FxHashMap<Pair, i64> {
        // Walks each chunk from its head and counts replacements as a left to
        // right non-overlapping scan would.
        let mut counts: FxHashMap<Pair, i64> = FxHashMap::default();
        for head in 0..self.sym.len() {
            if self.sym[head] == NONE || self.prev[head] != NONE {
                continue;
            }
            let mut chunk = Vec::new();
            let mut p = head as u32;
            while p != NONE {
                chunk.push(self.sym[p as usize]);
                p = self.next[p as usize];
            }
            let mut last_counted: FxHashMap<Pair, usize> = FxHashMap::default();
            for k in 0..chunk.len().saturating_sub(1) {
                let pair = (chunk[k], chunk[k + 1]);
                let overlaps = last_counted.get(&pair).is_some_and(|&at| at + 1 == k);
                if !overlaps {
                    *counts.entry(pair).or_insert(0) += 1;
                    last_counted.insert(pair, k);
                }
            }
        }
        counts
    }
}
