//! The `supertok` command-line front end.
//!
//! Every subcommand writes its results to files; stdout carries progress
//! only. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error (unknown flag, missing argument) |
//! | 3 | unreadable input or other I/O failure |
//! | 4 | vocabulary mismatch |
//! | 5 | malformed input file (MIDI, notes, token dump, model) |
//! | 6 | any other failure |

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, Table};
use crate::bpe::{self, BpeModel, TrainOptions};
use crate::phrase::{self, AnnotatedPiece, Boundary};
use crate::score::{self, Score, DEFAULT_RESOLUTION};
use crate::tokens::{self, Scheme, TokenKind, TokenSequence, Tokenizer};
use crate::{exec, Error, Exec, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VOCAB: i32 = 4;
pub const EXIT_FORMAT: i32 = 5;
pub const EXIT_OTHER: i32 = 6;

const TOP_K: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "supertok", version, about = "Symbolic-music tokenization and BPE analysis")]
pub struct RunConfig {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Suppress progress output.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize MIDI or note-list files into a token dump.
    Tokenize {
        #[command(flatten)]
        music: MusicArgs,
        /// Output token dump (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn BPE merges from a token dump.
    TrainBpe {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        merges: usize,
        /// Output model file.
        #[arg(long)]
        model: PathBuf,
    },
    /// Encode an atomic token dump with a model.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expand an encoded token dump back to atomic tokens.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frequency, length and pitch-content tables for a model.
    Stats {
        #[arg(long)]
        model: PathBuf,
        /// Token dump whose length normalizes the frequency curve; defaults
        /// to the length recorded in the model.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Boundary overlap against a random baseline, and boundary supertokens.
    PhraseAnalysis {
        #[command(flatten)]
        phrases: PhraseArgs,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the labelled dataset for the segmentation trainer.
    ExportDataset {
        #[command(flatten)]
        phrases: PhraseArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct MusicArgs {
    /// A .mid/.midi/.jsonl file, or a directory searched recursively.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "remi")]
    pub scheme: Scheme,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION, value_parser = clap::value_parser!(u32).range(1..))]
    pub resolution: u32,
}

#[derive(Debug, Args)]
pub struct PhraseArgs {
    #[command(flatten)]
    pub music: MusicArgs,
    /// JSON lines of `{"piece_id", "phrase_note_indices"}`.
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let rendered = e.to_string();
            let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            eprintln!("supertok: {}", line.trim_start_matches("error: "));
            return EXIT_USAGE;
        }
    };
    let threads = config.threads;
    let quiet = config.quiet;
    match exec::with_threads(threads, move || execute(config.command, quiet)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("supertok: {msg}");
            exit_code(&e)
        }
    }
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::VocabularyMismatch { .. } => EXIT_VOCAB,
        Error::MidiParse { .. }
        | Error::UnsupportedMidi(_)
        | Error::NotesParse { .. }
        | Error::Structure { .. }
        | Error::ModelFormat(_) => EXIT_FORMAT,
        Error::Polyphonic { .. } | Error::UnknownToken { .. } | Error::InvalidInput(_) => EXIT_OTHER,
    }
}

fn execute(command: Command, quiet: bool) -> Result<()> {
    let progress = |line: String| {
        if !quiet {
            println!("{line}");
        }
    };
    match command {
        Command::Tokenize { music, out } => {
            let tokenizer = Tokenizer::new(music.scheme, music.resolution);
            let pieces = load_scores(&music.input, music.resolution, None)?;
            let mut seqs = Vec::with_capacity(pieces.len());
            let mut clamped = 0;
            for (id, score) in &pieces {
                let t = tokenizer.tokenize(score, id)?;
                clamped += t.clamped;
                seqs.push(t.sequence);
            }
            let alphabet = tokenizer.alphabet();
            write_dump(&out, &seqs, |ids| alphabet.render(ids))?;
            progress(format!("tokenized {} pieces ({clamped} clamped values) -> {}", seqs.len(), out.display()));
        }
        Command::TrainBpe { input, merges, model } => {
            let seqs = read_dump(&input)?;
            let first = seqs
                .first()
                .ok_or_else(|| Error::invalid(format!("{} holds no sequences", input.display())))?;
            let alphabet = tokens::alphabet_from_id(&first.vocab_id)?;
            let opts = TrainOptions {
                corpus_name: stem(&input),
                ..TrainOptions::new(merges)
            };
            let trained = bpe::train_with(&seqs, &alphabet, &opts)?;
            fs::write(&model, bpe::save_model(&trained))?;
            progress(format!(
                "learned {} of {merges} merges -> {}",
                trained.merges().len(),
                model.display()
            ));
        }
        Command::Encode { input, model, out } => {
            let model = read_model(&model)?;
            let seqs = read_dump(&input)?;
            let encoded = Exec::default()
                .map(&seqs, |s| bpe::encode(s, &model))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            write_dump(&out, &encoded, |ids| render_encoded(&model, ids))?;
            progress(format!("encoded {} sequences -> {}", encoded.len(), out.display()));
        }
        Command::Decode { input, model, out } => {
            let model = read_model(&model)?;
            let seqs = read_dump(&input)?;
            let decoded = Exec::default()
                .map(&seqs, |s| bpe::decode(s, &model))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            write_dump(&out, &decoded, |ids| model.alphabet().render(ids))?;
            progress(format!("decoded {} sequences -> {}", decoded.len(), out.display()));
        }
        Command::Stats { model, input, out } => {
            let model = read_model(&model)?;
            let corpus_len = match input {
                Some(path) => {
                    let seqs = read_dump(&path)?;
                    for s in &seqs {
                        model.check_vocab(&s.vocab_id, false)?;
                    }
                    seqs.iter().map(TokenSequence::len).sum()
                }
                None => model.meta().initial_corpus_length,
            };
            write_stats(&model, corpus_len, &out)?;
            progress(format!("wrote statistics for {} merges -> {}", model.merges().len(), out.display()));
        }
        Command::PhraseAnalysis {
            phrases,
            trials,
            seed,
            out,
        } => {
            let (model, corpus) = load_annotated(&phrases)?;
            write_phrase_analysis(&model, &corpus, trials, seed, &out)?;
            progress(format!("analysed {} annotated pieces -> {}", corpus.len(), out.display()));
        }
        Command::ExportDataset { phrases, seed, out } => {
            let (model, corpus) = load_annotated(&phrases)?;
            let records = phrase::build_training_set(&model, &corpus, seed, Exec::default())?;
            fs::write(&out, phrase::render_training_set(&records))?;
            progress(format!("exported {} records -> {}", records.len(), out.display()));
        }
    }
    Ok(())
}

/// One line of a token dump.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DumpRecord {
    piece_id: String,
    vocab_id: String,
    ids: Vec<u32>,
    tokens: Vec<String>,
}

fn write_dump(path: &Path, seqs: &[TokenSequence], render: impl Fn(&[u32]) -> Result<Vec<String>>) -> Result<()> {
    let mut text = String::new();
    for s in seqs {
        let rec = DumpRecord {
            piece_id: s.piece_id.clone(),
            vocab_id: s.vocab_id.clone(),
            ids: s.ids.clone(),
            tokens: render(&s.ids)?,
        };
        text.push_str(&serde_json::to_string(&rec).expect("dump records serialize"));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn read_dump(path: &Path) -> Result<Vec<TokenSequence>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let rec: DumpRecord = serde_json::from_str(l).map_err(|e| Error::NotesParse {
                line: i + 1,
                message: format!("token dump: {e}"),
            })?;
            Ok(TokenSequence::new(rec.ids, rec.vocab_id, rec.piece_id))
        })
        .collect()
}

fn render_encoded(model: &BpeModel, ids: &[u32]) -> Result<Vec<String>> {
    ids.iter().map(|&id| model.vocab().render(id)).collect()
}

fn read_model(path: &Path) -> Result<BpeModel> {
    bpe::load_model(&fs::read(path)?)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn is_music_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("mid" | "midi" | "jsonl")
    )
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else if is_music_file(&path) {
            out.push(path);
        }
    }
    Ok(())
}

/// Reads and quantizes every piece under `input`, sorted by piece id.
///
/// A piece id is the path relative to `input` without its extension, with
/// `/` separators; a single file gives its stem.
fn load_scores(input: &Path, resolution: u32, skip: Option<&Path>) -> Result<Vec<(String, Score)>> {
    let meta = fs::metadata(input)?;
    let mut files = Vec::new();
    if meta.is_dir() {
        collect_files(input, &mut files)?;
    } else {
        files.push(input.to_path_buf());
    }
    if let Some(skip) = skip.and_then(|p| fs::canonicalize(p).ok()) {
        files.retain(|f| fs::canonicalize(f).map_or(true, |c| c != skip));
    }
    let mut pieces = Vec::with_capacity(files.len());
    for file in files {
        let id = if meta.is_dir() {
            let rel = file.strip_prefix(input).unwrap_or(&file).with_extension("");
            rel.components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/")
        } else {
            stem(&file)
        };
        let is_text = file.extension().is_some_and(|e| e.eq_ignore_ascii_case("jsonl"));
        let raw = if is_text {
            score::parse_notes_text(&fs::read_to_string(&file)?)
        } else {
            score::parse_midi(&fs::read(&file)?)
        }
        .map_err(|e| annotate(e, &file))?;
        pieces.push((id, score::quantize(&raw, resolution)));
    }
    pieces.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = pieces.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid(format!("two input files share the piece id `{}`", w[0].0)));
    }
    Ok(pieces)
}

fn annotate(e: Error, file: &Path) -> Error {
    let at = file.display();
    match e {
        Error::MidiParse { offset, message } => Error::MidiParse {
            offset,
            message: format!("{message} ({at})"),
        },
        Error::NotesParse { line, message } => Error::NotesParse {
            line,
            message: format!("{message} ({at})"),
        },
        Error::UnsupportedMidi(m) => Error::UnsupportedMidi(format!("{m} ({at})")),
        other => other,
    }
}

fn load_annotated(args: &PhraseArgs) -> Result<(BpeModel, Vec<AnnotatedPiece>)> {
    let model = read_model(&args.model)?;
    let tokenizer = Tokenizer::new(args.music.scheme, args.music.resolution);
    let alphabet = tokenizer.alphabet();
    model.check_vocab(alphabet.id(), false)?;
    let annotations = phrase::parse_annotation_sidecar(&fs::read_to_string(&args.annotations)?)?;
    let pieces = load_scores(&args.music.input, args.music.resolution, Some(&args.annotations))?;
    let mut corpus = Vec::with_capacity(pieces.len());
    for (id, score) in &pieces {
        let Some(notes) = annotations.get(id) else {
            continue;
        };
        let tokenized = tokenizer.tokenize(score, id)?;
        let phrases = phrase::align_tokenized(&tokenized, notes)?;
        corpus.push(AnnotatedPiece::new(tokenized.sequence, phrases)?);
    }
    let missing: Vec<&String> = annotations
        .keys()
        .filter(|k| pieces.binary_search_by(|p| p.0.cmp(k)).is_err())
        .collect();
    if let Some(first) = missing.first() {
        return Err(Error::invalid(format!("annotated piece `{first}` has no input file")));
    }
    if corpus.is_empty() {
        return Err(Error::invalid("no input piece has phrase annotations"));
    }
    Ok((model, corpus))
}

fn write_stats(model: &BpeModel, corpus_len: usize, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let freq = analysis::frequency_curve(model, corpus_len)?;
    analysis::emit_table(Table::Curve(&freq), &out.join("frequency.csv"))?;
    let length = analysis::length_curve(model);
    analysis::emit_table(Table::Curve(&length), &out.join("length.csv"))?;
    let mut summary = BTreeMap::new();
    summary.insert("atomic_vocab_size", model.alphabet().len().to_string());
    summary.insert("merges", model.merges().len().to_string());
    summary.insert("requested_merges", model.meta().requested_merges.to_string());
    summary.insert("corpus_length", corpus_len.to_string());
    if let Ok(mean) = analysis::mean_supertoken_length(model) {
        summary.insert("mean_supertoken_length", format!("{mean:.9}"));
    }
    if model.alphabet().contains_kind(TokenKind::Pitch) {
        let hist = analysis::pitch_content_histogram(model, analysis::DEFAULT_BUCKET_MAX)?;
        analysis::emit_table(Table::Histogram(&hist), &out.join("pitch_histogram.csv"))?;
        summary.insert("pitch_histogram", "cumulative".to_string());
    }
    fs::write(out.join("summary.csv"), render_summary(&summary))?;
    Ok(())
}

fn render_summary(rows: &BTreeMap<&str, String>) -> String {
    let mut s = String::from("metric,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

fn write_phrase_analysis(model: &BpeModel, corpus: &[AnnotatedPiece], trials: usize, seed: u64, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let exec = Exec::default();
    let overlap = phrase::boundary_overlap(model, corpus, exec)?;
    let baseline = phrase::corpus_random_split_baseline(model, corpus, trials, seed, exec)?;
    let labels = exec
        .map(corpus, |p| phrase::project_labels(&p.phrases, model, &p.sequence))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let identity = BpeModel::identity(model.alphabet().clone());
    let atomic_labels = exec
        .map(corpus, |p| phrase::project_labels(&p.phrases, &identity, &p.sequence))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut rows = BTreeMap::new();
    rows.insert("pieces", corpus.len().to_string());
    rows.insert("merges", model.merges().len().to_string());
    rows.insert("encoded_tokens", overlap.encoded_tokens.to_string());
    rows.insert("supertokens", overlap.supertokens.to_string());
    rows.insert("straddling", overlap.straddling.to_string());
    rows.insert("overlap_ratio", format!("{:.9}", overlap.ratio()));
    rows.insert("overlap_ratio_over_supertokens", format!("{:.9}", overlap.ratio_over_supertokens()));
    rows.insert("overlap_denominator", "all_encoded_tokens".to_string());
    rows.insert("baseline_mean", format!("{:.9}", baseline.mean));
    rows.insert("baseline_std_error", format!("{:.9}", baseline.std_error));
    rows.insert("baseline_trials", baseline.trials.to_string());
    rows.insert("baseline_seed", seed.to_string());
    rows.insert("positive_rate_atomic", format!("{:.9}", phrase::class_balance(&atomic_labels)));
    rows.insert("positive_rate_encoded", format!("{:.9}", phrase::class_balance(&labels)));
    fs::write(out.join("overlap.csv"), render_summary(&rows))?;

    for (which, name) in [(Boundary::Start, "top_start.csv"), (Boundary::End, "top_end.csv")] {
        let top = phrase::top_boundary_supertokens(model, corpus, TOP_K, which, exec)?;
        let mut s = String::from("rank,token_id,count,tokens\n");
        for (rank, (id, count)) in top.iter().enumerate() {
            let rendered = model.vocab().render(*id)?;
            let _ = writeln!(s, "{},{id},{count},\"{}\"", rank + 1, rendered.replace('"', "\"\""));
        }
        fs::write(out.join(name), s)?;
    }
    Ok(())
}
