//! Merge-table training with incrementally maintained pair counts.
//!
//! Pair counts use replacement semantics: occurrences are taken left to
//! right without overlap, so a run of `n` identical tokens `a` holds
//! `n / 2` occurrences of `(a, a)` and the count of the merged pair equals
//! the number of tokens the merge removes. Counts never span two pieces.
//!
//! After each merge only the sequences that contained the pair are
//! revisited, and within them only windows around the replaced
//! occurrences. Windows are widened to whole runs of identical tokens on
//! both sides, so their edges are run boundaries whose adjacent pairs do
//! not change, and the count delta is exact.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use super::{BpeModel, MergeRule, Pair, TrainingMeta, Vocabulary};
use crate::tokens::{Alphabet, TokenSequence};
use crate::{Error, Exec, Result};

/// Ordering among pairs with equal counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum TieBreak {
    /// Smallest `(left, right)` id pair wins.
    #[default]
    LowestPair,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainOptions {
    pub num_merges: usize,
    pub tie_break: TieBreak,
    pub exec: Exec,
    pub corpus_name: String,
}

impl TrainOptions {
    pub fn new(num_merges: usize) -> Self {
        TrainOptions {
            num_merges,
            tie_break: TieBreak::default(),
            exec: Exec::default(),
            corpus_name: String::new(),
        }
    }
}

/// Learns up to `num_merges` merges over `corpus`.
pub fn train(
    corpus: &[TokenSequence],
    alphabet: &Alphabet,
    num_merges: usize,
    tie_break: TieBreak,
) -> Result<BpeModel> {
    let opts = TrainOptions {
        tie_break,
        ..TrainOptions::new(num_merges)
    };
    train_with(corpus, alphabet, &opts)
}

/// [`train`] with execution mode and provenance options.
///
/// Stops early once the best pair occurs fewer than twice.
pub fn train_with(corpus: &[TokenSequence], alphabet: &Alphabet, opts: &TrainOptions) -> Result<BpeModel> {
    if corpus.is_empty() {
        return Err(Error::invalid("cannot train on an empty corpus"));
    }
    let atoms = alphabet.len() as u32;
    for seq in corpus {
        if seq.vocab_id != alphabet.id() {
            return Err(Error::VocabularyMismatch {
                expected: alphabet.id().to_string(),
                found: seq.vocab_id.clone(),
            });
        }
        if let Some(&id) = seq.ids.iter().find(|&&id| id >= atoms) {
            return Err(Error::UnknownToken { id });
        }
    }
    let TieBreak::LowestPair = opts.tie_break;

    let exec = opts.exec;
    let mut seqs: Vec<Vec<u32>> = corpus.iter().map(|s| s.ids.clone()).collect();
    let initial_corpus_length = seqs.iter().map(Vec::len).sum();

    let per_seq = exec.map(&seqs, |s| count_pairs(s));
    let mut counts: HashMap<Pair, u64> = HashMap::new();
    let mut holders: HashMap<Pair, HashSet<usize>> = HashMap::new();
    for (i, pc) in per_seq.into_iter().enumerate() {
        for (pair, c) in pc {
            *counts.entry(pair).or_default() += c;
            holders.entry(pair).or_default().insert(i);
        }
    }
    let mut heap: BinaryHeap<(u64, Reverse<Pair>)> =
        counts.iter().map(|(&p, &c)| (c, Reverse(p))).collect();

    let mut vocab = Vocabulary::new(alphabet.clone());
    let mut merges = Vec::with_capacity(opts.num_merges);
    while merges.len() < opts.num_merges {
        let Some((count, pair)) = pop_best(&mut heap, &counts) else {
            break;
        };
        if count < 2 {
            break;
        }
        let new_id = vocab.push(pair)?;

        let mut affected: Vec<usize> = holders
            .remove(&pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        let mut work: Vec<(usize, Vec<u32>)> = affected
            .iter()
            .map(|&i| (i, std::mem::take(&mut seqs[i])))
            .collect();
        let deltas = exec.map(&work, |(_, s)| merge_sequence(s, pair, new_id));

        let mut total: HashMap<Pair, i64> = HashMap::new();
        for ((i, slot), result) in work.iter_mut().zip(deltas) {
            if let Some((merged, delta)) = result {
                for &(p, d) in &delta {
                    *total.entry(p).or_default() += d;
                    if d > 0 {
                        holders.entry(p).or_default().insert(*i);
                    }
                }
                *slot = merged;
            }
        }
        for (i, s) in work {
            seqs[i] = s;
        }

        let mut changed: Vec<(Pair, i64)> = total.into_iter().filter(|(_, d)| *d != 0).collect();
        changed.sort_unstable();
        for (p, d) in changed {
            let entry = counts.entry(p).or_default();
            let updated = (*entry as i64 + d) as u64;
            debug_assert!(*entry as i64 + d >= 0, "pair count went negative");
            if updated == 0 {
                counts.remove(&p);
            } else {
                *entry = updated;
                heap.push((updated, Reverse(p)));
            }
        }
        debug_assert!(!counts.contains_key(&pair), "merged pair must vanish");

        merges.push(MergeRule {
            pair,
            new_id,
            count_at_merge: count,
        });
    }

    let meta = TrainingMeta {
        corpus_name: opts.corpus_name.clone(),
        requested_merges: opts.num_merges,
        initial_corpus_length,
        tokenizer_config_hash: alphabet.config_hash(),
    };
    BpeModel::from_merges(alphabet.clone(), merges, meta)
}

fn pop_best(heap: &mut BinaryHeap<(u64, Reverse<Pair>)>, counts: &HashMap<Pair, u64>) -> Option<(u64, Pair)> {
    while let Some((c, Reverse(p))) = heap.pop() {
        if counts.get(&p) == Some(&c) {
            return Some((c, p));
        }
    }
    None
}

/// Non-overlapping pair counts of one sequence, sorted by pair.
pub fn count_pairs(seq: &[u32]) -> Vec<(Pair, u64)> {
    let mut map: HashMap<Pair, u64> = HashMap::new();
    accumulate_pairs(seq, 1, &mut |p, c| *map.entry(p).or_default() += c as u64);
    let mut out: Vec<_> = map.into_iter().collect();
    out.sort_unstable();
    out
}

/// Calls `add(pair, sign * count)` for every pair of `seq`: one per
/// adjacency of distinct ids, `run / 2` per maximal run of an id.
fn accumulate_pairs(seq: &[u32], sign: i64, add: &mut impl FnMut(Pair, i64)) {
    let mut i = 0;
    while i < seq.len() {
        let mut j = i + 1;
        while j < seq.len() && seq[j] == seq[i] {
            j += 1;
        }
        let run = (j - i) as i64;
        if run >= 2 {
            add((seq[i], seq[i]), sign * (run / 2));
        }
        if j < seq.len() {
            add((seq[j - 1], seq[j]), sign);
        }
        i = j;
    }
}

type Merged = (Vec<u32>, Vec<(Pair, i64)>);

/// Replaces every occurrence of `pair` in `seq` (left to right) with
/// `new_id`. Returns the new sequence and the pair-count delta, or `None`
/// when `pair` does not occur.
fn merge_sequence(seq: &[u32], pair: Pair, new_id: u32) -> Option<Merged> {
    let n = seq.len();
    let mut occurrences = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        if seq[i] == pair.0 && seq[i + 1] == pair.1 {
            occurrences.push(i);
            i += 2;
        } else {
            i += 1;
        }
    }
    if occurrences.is_empty() {
        return None;
    }

    let mut merged = Vec::with_capacity(n - occurrences.len());
    let mut new_index = vec![0usize; n];
    let mut next_occ = occurrences.iter().peekable();
    let mut i = 0;
    while i < n {
        new_index[i] = merged.len();
        if next_occ.peek() == Some(&&i) {
            next_occ.next();
            new_index[i + 1] = merged.len();
            merged.push(new_id);
            i += 2;
        } else {
            merged.push(seq[i]);
            i += 1;
        }
    }

    let run_start = |mut k: usize| {
        while k > 0 && seq[k - 1] == seq[k] {
            k -= 1;
        }
        k
    };
    let run_end = |mut k: usize| {
        while k + 1 < n && seq[k + 1] == seq[k] {
            k += 1;
        }
        k
    };
    let mut windows: Vec<(usize, usize)> = Vec::new();
    for &p in &occurrences {
        let lo = if p == 0 { 0 } else { run_start(p - 1) };
        let hi = if p + 2 < n { run_end(p + 2) } else { p + 1 };
        match windows.last_mut() {
            Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
            _ => windows.push((lo, hi)),
        }
    }

    let mut delta: HashMap<Pair, i64> = HashMap::new();
    let mut add = |p: Pair, d: i64| *delta.entry(p).or_default() += d;
    for (lo, hi) in windows {
        accumulate_pairs(&seq[lo..=hi], -1, &mut add);
        accumulate_pairs(&merged[new_index[lo]..=new_index[hi]], 1, &mut add);
    }
    let mut delta: Vec<(Pair, i64)> = delta.into_iter().filter(|(_, d)| *d != 0).collect();
    delta.sort_unstable();
    Some((merged, delta))
}
