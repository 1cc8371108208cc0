//! PrefixSpan over sequences of atomic symbols.
//!
//! Patterns grow one symbol at a time. Each projected database is a list of
//! `(sequence index, suffix offset)` pairs into the original input, so no
//! sequence data is copied during the recursion.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SequencePattern<T> {
    pub symbols: Vec<T>,
    /// Number of input sequences containing `symbols` as a subsequence.
    pub support: usize,
}

type Projection = Vec<(usize, usize)>;

/// All patterns of length `1..=max_len` contained in at least
/// `min_support` sequences, sorted by length then symbols.
pub fn prefixspan<T, S>(sequences: &[S], min_support: usize, max_len: usize) -> Vec<SequencePattern<T>>
where
    T: Copy + Ord + Send + Sync,
    S: AsRef<[T]> + Sync,
{
    let min_support = min_support.max(1);
    if max_len == 0 {
        return Vec::new();
    }
    let seqs: Vec<&[T]> = sequences.iter().map(AsRef::as_ref).collect();
    let root: Projection = (0..seqs.len()).map(|i| (i, 0)).collect();
    let frequent = frequent_extensions(&seqs, &root, min_support);

    let mut out: Vec<SequencePattern<T>> = frequent
        .into_par_iter()
        .flat_map_iter(|(symbol, support)| {
            let mut found = Vec::new();
            let mut prefix = vec![symbol];
            found.push(SequencePattern {
                symbols: prefix.clone(),
                support,
            });
            let projected = project(&seqs, &root, symbol);
            grow(&seqs, &projected, &mut prefix, min_support, max_len, &mut found);
            found
        })
        .collect();
    sort_canonical(&mut out);
    out
}

pub(crate) fn sort_canonical<T: Ord>(patterns: &mut [SequencePattern<T>]) {
    patterns.sort_by(|a, b| {
        a.symbols
            .len()
            .cmp(&b.symbols.len())
            .then_with(|| a.symbols.cmp(&b.symbols))
    });
}

fn grow<T: Copy + Ord>(
    seqs: &[&[T]],
    projection: &Projection,
    prefix: &mut Vec<T>,
    min_support: usize,
    max_len: usize,
    out: &mut Vec<SequencePattern<T>>,
) {
    if prefix.len() >= max_len || projection.len() < min_support {
        return;
    }
    for (symbol, support) in frequent_extensions(seqs, projection, min_support) {
        prefix.push(symbol);
        out.push(SequencePattern {
            symbols: prefix.clone(),
            support,
        });
        let next = project(seqs, projection, symbol);
        grow(seqs, &next, prefix, min_support, max_len, out);
        prefix.pop();
    }
}

/// Symbols occurring in at least `min_support` projected suffixes, each
/// counted once per sequence.
fn frequent_extensions<T: Copy + Ord>(
    seqs: &[&[T]],
    projection: &Projection,
    min_support: usize,
) -> Vec<(T, usize)> {
    // symbol -> (support, last sequence counted)
    let mut counts: BTreeMap<T, (usize, usize)> = BTreeMap::new();
    for &(seq, offset) in projection {
        for &s in &seqs[seq][offset..] {
            let entry = counts.entry(s).or_insert((0, usize::MAX));
            if entry.1 != seq {
                entry.0 += 1;
                entry.1 = seq;
            }
        }
    }
    counts
        .into_iter()
        .filter(|(_, (n, _))| *n >= min_support)
        .map(|(s, (n, _))| (s, n))
        .collect()
}

/// Advances each suffix past the first occurrence of `symbol`, dropping
/// suffixes that do not contain it.
fn project<T: Copy + Ord>(seqs: &[&[T]], projection: &Projection, symbol: T) -> Projection {
    projection
        .iter()
        .filter_map(|&(seq, offset)| {
            seqs[seq][offset..]
                .iter()
                .position(|&s| s == symbol)
                .map(|p| (seq, offset + p + 1))
        })
        .collect()
}

/// Whether `pattern` occurs in `sequence` as an ordered, possibly gapped,
/// subsequence.
pub fn contains_subsequence<T: PartialEq>(sequence: &[T], pattern: &[T]) -> bool {
    let mut it = sequence.iter();
    pattern.iter().all(|p| it.any(|s| s == p))
}
