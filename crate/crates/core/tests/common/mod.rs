//! Reference implementations used as test oracles. Deliberately naive.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supertok::phrase::{self, AnnotatedPiece};
use supertok::synth::SyntheticPiece;
use supertok::tokens::{Alphabet, AtomicToken, Tokenizer};

pub fn small_alphabet(size: u32) -> Alphabet {
    let tokens = (0..size as i32).map(AtomicToken::pitch).collect();
    Alphabet::new(format!("test:{size}"), tokens).unwrap()
}

/// Greedy left-to-right replacement of every `pair` occurrence.
pub fn replace_all(seq: &[u32], pair: (u32, u32), new_id: u32) -> (Vec<u32>, u64) {
    let mut out = Vec::with_capacity(seq.len());
    let mut n = 0;
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && seq[i] == pair.0 && seq[i + 1] == pair.1 {
            out.push(new_id);
            n += 1;
            i += 2;
        } else {
            out.push(seq[i]);
            i += 1;
        }
    }
    (out, n)
}

/// Counts every pair from scratch as the number of replacements a greedy
/// scan would make.
pub fn naive_counts(corpus: &[Vec<u32>]) -> BTreeMap<(u32, u32), u64> {
    let mut candidates = BTreeSet::new();
    for seq in corpus {
        for w in seq.windows(2) {
            candidates.insert((w[0], w[1]));
        }
    }
    candidates
        .into_iter()
        .map(|p| {
            let c = corpus.iter().map(|s| replace_all(s, p, u32::MAX).1).sum();
            (p, c)
        })
        .collect()
}

/// Recount-from-scratch BPE: `(pair, count)` per merge.
pub fn naive_train(corpus: &[Vec<u32>], atoms: u32, merges: usize) -> Vec<((u32, u32), u64)> {
    let mut corpus = corpus.to_vec();
    let mut out = Vec::new();
    for k in 0..merges {
        let counts = naive_counts(&corpus);
        let best = counts.iter().map(|(p, c)| (*c, std::cmp::Reverse(*p))).max();
        let Some((count, std::cmp::Reverse(pair))) = best else {
            break;
        };
        if count < 2 {
            break;
        }
        let new_id = atoms + k as u32;
        for s in corpus.iter_mut() {
            *s = replace_all(s, pair, new_id).0;
        }
        out.push((pair, count));
    }
    out
}

/// Applies merges one after another in training order.
pub fn naive_encode(seq: &[u32], merges: &[(u32, u32)], atoms: u32) -> Vec<u32> {
    let mut cur = seq.to_vec();
    for (k, &pair) in merges.iter().enumerate() {
        cur = replace_all(&cur, pair, atoms + k as u32).0;
    }
    cur
}

pub fn random_corpus(rng: &mut ChaCha8Rng, atoms: u32, max_seqs: usize, max_len: usize) -> Vec<Vec<u32>> {
    let n = rng.random_range(1..=max_seqs);
    (0..n)
        .map(|_| {
            let len = rng.random_range(0..=max_len);
            // Skewed draws so that frequent pairs and runs appear.
            (0..len)
                .map(|_| {
                    let a = rng.random_range(0..atoms);
                    let b = rng.random_range(0..atoms);
                    a.min(b)
                })
                .collect()
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Binomial coefficient, exact.
pub fn choose(n: i64, k: i64) -> u128 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Expected share of straddling chunks when `0..len` is cut at a uniform
/// (chunks-1)-subset of `1..len`: sums, over every candidate chunk
/// `[lo, hi)` containing a start strictly inside, the probability that it
/// occurs as a chunk.
pub fn exact_baseline(len: usize, chunks: usize, starts: &[usize]) -> f64 {
    let (n, k) = (len as i64, chunks as i64);
    let total = choose(n - 1, k - 1) as f64;
    let mut expected = 0.0;
    for lo in 0..n {
        for hi in lo + 1..=n {
            if !starts.iter().any(|&s| (s as i64) > lo && (s as i64) < hi) {
                continue;
            }
            let required = i64::from(lo > 0) + i64::from(hi < n);
            let free = (n - 1) - required - (hi - lo - 1);
            expected += choose(free, k - 1 - required) as f64 / total;
        }
    }
    expected / chunks as f64
}

/// Enumerates every segmentation of `0..len` into `chunks` chunks.
pub fn enumerated_baseline(len: usize, chunks: usize, starts: &[usize]) -> f64 {
    fn rec(
        from: usize,
        left: usize,
        len: usize,
        cuts: &mut Vec<usize>,
        acc: &mut (f64, u64),
        chunks: usize,
        starts: &[usize],
    ) {
        if left == 0 {
            let mut bounds = vec![0];
            bounds.extend(cuts.iter().copied());
            bounds.push(len);
            let straddling = bounds
                .windows(2)
                .filter(|w| starts.iter().any(|&s| s > w[0] && s < w[1]))
                .count();
            acc.0 += straddling as f64 / chunks as f64;
            acc.1 += 1;
            return;
        }
        for c in from..len {
            cuts.push(c);
            rec(c + 1, left - 1, len, cuts, acc, chunks, starts);
            cuts.pop();
        }
    }
    let mut acc = (0.0, 0);
    rec(1, chunks - 1, len, &mut Vec::new(), &mut acc, chunks, starts);
    acc.0 / acc.1 as f64
}

pub fn annotate(pieces: &[SyntheticPiece], tokenizer: &Tokenizer) -> Vec<AnnotatedPiece> {
    pieces
        .iter()
        .map(|p| {
            let t = tokenizer.tokenize(&p.score, &p.piece_id).unwrap();
            let ann = phrase::align_tokenized(&t, &p.phrase_note_indices).unwrap();
            AnnotatedPiece::new(t.sequence, ann).unwrap()
        })
        .collect()
}

pub fn fixtures() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn cli(args: &[&std::ffi::OsStr]) -> i32 {
    let mut argv: Vec<&std::ffi::OsStr> = vec!["supertok".as_ref(), "--quiet".as_ref()];
    argv.extend_from_slice(args);
    supertok::cli::run(argv)
}

macro_rules! os_args {
    ($($a:expr),* $(,)?) => {
        &[$(::std::convert::AsRef::<::std::ffi::OsStr>::as_ref(&$a)),*]
    };
}
#[allow(unused_imports)]
pub(crate) use os_args;

/// Files compared against the committed golden copies, relative to the
/// pipeline output directory.
pub const GOLDEN_FILES: &[&str] = &[
    "structured/stats/frequency.csv",
    "structured/stats/length.csv",
    "structured/stats/summary.csv",
    "structured/phrase/overlap.csv",
    "structured/phrase/top_start.csv",
    "structured/phrase/top_end.csv",
    "structured/dataset.jsonl",
    "remi/stats/frequency.csv",
    "remi/stats/length.csv",
    "remi/stats/pitch_histogram.csv",
    "remi/stats/summary.csv",
];

/// Runs the full pipeline over the fixture corpus into `out`.
pub fn run_pipeline(out: &std::path::Path, threads: usize) {
    let corpus = fixtures().join("corpus");
    let annotations = fixtures().join("annotations.jsonl");
    let threads = threads.to_string();
    for (scheme, dir) in [("structured-intervals", "structured"), ("remi", "remi")] {
        let d = out.join(dir);
        std::fs::create_dir_all(&d).unwrap();
        let tokens = d.join("tokens.jsonl");
        let model = d.join("model.json");
        let steps: Vec<Vec<std::ffi::OsString>> = vec![
            vec!["tokenize".into(), "--input".into(), corpus.clone().into(), "--scheme".into(), scheme.into(), "--out".into(), tokens.clone().into()],
            vec!["train-bpe".into(), "--input".into(), tokens.clone().into(), "--merges".into(), "256".into(), "--model".into(), model.clone().into()],
            vec!["stats".into(), "--model".into(), model.clone().into(), "--input".into(), tokens.clone().into(), "--out".into(), d.join("stats").into()],
        ];
        for mut step in steps {
            step.extend(["--threads".into(), threads.clone().into()]);
            let args: Vec<&std::ffi::OsStr> = step.iter().map(|s| s.as_os_str()).collect();
            assert_eq!(cli(&args), 0, "{step:?}");
        }
        if dir == "structured" {
            assert_eq!(
                cli(os_args![
                    "phrase-analysis", "--input", corpus, "--annotations", annotations, "--scheme", scheme,
                    "--model", model, "--trials", "200", "--seed", "7", "--out", d.join("phrase"), "--threads", threads
                ]),
                0
            );
            assert_eq!(
                cli(os_args![
                    "export-dataset", "--input", corpus, "--annotations", annotations, "--scheme", scheme,
                    "--model", model, "--seed", "7", "--out", d.join("dataset.jsonl"), "--threads", threads
                ]),
                0
            );
        }
    }
}

/// Writes the fixture corpus: 20 gesture pieces as note lists plus the
/// annotation sidecar.
pub fn write_fixture_corpus(dir: &std::path::Path) {
    use supertok::synth::{melody_corpus, MelodyCorpusConfig};
    let corpus = dir.join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    let pieces = melody_corpus(&MelodyCorpusConfig {
        pieces: 20,
        gestures: true,
        seed: 2024,
        ..MelodyCorpusConfig::default()
    });
    let mut sidecar = String::new();
    for p in &pieces {
        std::fs::write(corpus.join(format!("{}.jsonl", p.piece_id)), supertok::score::render_notes_text(&p.score)).unwrap();
        sidecar.push_str(&format!(
            "{{\"piece_id\":\"{}\",\"phrase_note_indices\":{:?}}}\n",
            p.piece_id, p.phrase_note_indices
        ));
    }
    std::fs::write(dir.join("annotations.jsonl"), sidecar.replace(", ", ",")).unwrap();
}
