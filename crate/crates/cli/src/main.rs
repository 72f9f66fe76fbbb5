use std::error::Error as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use freqtok::analysis::{self, HarmonicForm};
use freqtok::backend::Backend;
use freqtok::bpe::{self, TrainConfig, Vocabulary};
use freqtok::pipeline::{
    self, CompressionReport, Variant, VocabDir, VocabMode, VocabResolver,
};
use freqtok::reorder::{self, RankPermutation};
use freqtok::report::{
    CsvTable, ABLATION_HEADER, ANALYSIS_HEADER, REPORT_HEADER, SCALING_HEADER,
};
use freqtok::{Error, Result};

#[derive(Parser)]
#[command(name = "freqtok", version, about = "Frequency-ordered BPE preprocessing for compressors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct VocabArgs {
    /// Vocabulary file (.fotv). Without it a vocabulary is trained on the input.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Size of the vocabulary trained on the input.
    #[arg(long, conflicts_with = "vocab")]
    vocab_size: Option<usize>,
}

const DEFAULT_VOCAB_SIZE: usize = 32768;

#[derive(Subcommand)]
enum Command {
    /// Train a vocabulary on a corpus.
    Train {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VOCAB_SIZE)]
        vocab_size: usize,
        /// Byte value that ends a training chunk (e.g. 32 for space).
        #[arg(long)]
        split_byte: Option<u8>,
        /// Corpora larger than this are subsampled for training.
        #[arg(long, default_value_t = 50 << 20)]
        max_corpus_bytes: usize,
    },
    /// Compress a file into a container.
    Compress {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        vocab: VocabArgs,
        #[arg(long, default_value = "zstd-22")]
        backend: String,
        #[arg(long, default_value = "embedded", value_parser = ["embedded", "shared"])]
        mode: String,
        /// Write the CSV report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Restore the original file from a container.
    Decompress {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Vocabulary file for shared-mode containers.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Directory searched for the vocabulary of a shared-mode container.
        #[arg(long)]
        vocab_dir: Option<PathBuf>,
    },
    /// One CSV row per (variant, backend).
    Bench {
        corpus: PathBuf,
        #[command(flatten)]
        vocab: VocabArgs,
        #[arg(long, value_delimiter = ',', default_value = "deflate-9,zstd-22,lzma")]
        backends: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "raw,tokenized-only,reordered,wrt")]
        variants: Vec<String>,
        #[arg(long, default_value = "shared", value_parser = ["embedded", "shared"])]
        mode: String,
        /// Repetitions per cell; the fastest run is reported.
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Raw vs tokenized-only vs reordered, one row per backend.
    Ablate {
        corpus: PathBuf,
        #[command(flatten)]
        vocab: VocabArgs,
        #[arg(long, value_delimiter = ',', default_value = "deflate-9,zstd-22,lzma")]
        backends: Vec<String>,
        #[arg(long, default_value = "shared", value_parser = ["embedded", "shared"])]
        mode: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Zipf fit, varint histograms and the cost model.
    Analyze {
        corpus: PathBuf,
        #[command(flatten)]
        vocab: VocabArgs,
        /// 1-based ranks used for the Zipf fit, as FIRST:LAST.
        #[arg(long, default_value = "1:1000", value_parser = parse_rank_range)]
        rank_range: (usize, usize),
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Raw vs preprocessed ratio over growing prefixes of a corpus.
    Scale {
        corpus: PathBuf,
        #[command(flatten)]
        vocab: VocabArgs,
        /// Prefix sizes in bytes.
        #[arg(long, value_delimiter = ',', default_value = "100000,1000000,10000000")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "deflate-9,zstd-22,lzma")]
        backends: Vec<String>,
        #[arg(long, default_value = "shared", value_parser = ["embedded", "shared"])]
        mode: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn parse_rank_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected FIRST:LAST")?;
    let first: usize = a.parse().map_err(|e| format!("{a}: {e}"))?;
    let last: usize = b.parse().map_err(|e| format!("{b}: {e}"))?;
    if first == 0 || first > last {
        return Err("ranks are 1-based and FIRST must not exceed LAST".into());
    }
    Ok((first, last))
}

fn usage_error(message: &str) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::ArgumentConflict, message)
        .exit()
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn dataset_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn vocabulary(args: &VocabArgs, corpus: &[u8]) -> Result<Vocabulary> {
    if let Some(path) = &args.vocab {
        return Vocabulary::from_bytes(&read(path)?);
    }
    let size = args.vocab_size.unwrap_or(DEFAULT_VOCAB_SIZE);
    eprintln!("training a {size}-token vocabulary on the input");
    bpe::train(corpus, size)
}

fn backends(names: &[String]) -> Result<Vec<Backend>> {
    names.iter().map(|n| Backend::parse(n)).collect()
}

/// CSV goes to the report file when one is given, otherwise to stdout.
fn csv_out(report: &Option<PathBuf>, header: &[&str]) -> Result<CsvTable<Box<dyn Write>>> {
    let out: Box<dyn Write> = match report {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    CsvTable::new(out, header)
}

fn finish(table: CsvTable<Box<dyn Write>>) -> Result<()> {
    table.finish()?.flush()?;
    Ok(())
}

fn summary(r: &CompressionReport) {
    let t = &r.timings;
    eprintln!(
        "{} {} ({}): {} -> {} bytes, {:.2}% (payload {}, metadata {}, header {})",
        r.variant, r.backend, r.mode, r.original_bytes, r.total_bytes(), r.ratio_percent(),
        r.compressed_bytes, r.metadata_bytes, r.header_bytes
    );
    if r.variant != Variant::Raw {
        eprintln!(
            "  {} tokens, {} varint bytes, histogram {:?}",
            r.token_count, r.varint_bytes, r.histogram
        );
    }
    eprintln!(
        "  time {:.3}s (tokenize {:.3}, reorder {:.3}, varint {:.3}, backend {:.3})",
        t.total(), t.tokenize, t.reorder, t.varint, t.backend
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { corpus, output, vocab_size, split_byte, max_corpus_bytes } => {
            let text = read(&corpus)?;
            let config = TrainConfig { vocab_size, split_byte, max_corpus_bytes };
            let vocab = bpe::train_with(&text, &config)?;
            write(&output, &vocab.to_bytes())?;
            eprintln!("{} tokens, id {}", vocab.len(), vocab.id());
        }
        Command::Compress { input, output, vocab, backend, mode, report } => {
            let mode: VocabMode = mode.parse()?;
            if mode == VocabMode::Shared && vocab.vocab.is_none() {
                usage_error("--mode shared needs --vocab: the decoder must be able to find the vocabulary");
            }
            let text = read(&input)?;
            let backend = Backend::parse(&backend)?;
            let vocab = vocabulary(&vocab, &text)?;
            let (container, r) = pipeline::compress_text(&text, &vocab, &backend, mode)?;
            write(&output, &container.to_bytes())?;
            summary(&r);
            if report.is_some() {
                let mut table = csv_out(&report, &REPORT_HEADER)?;
                table.report(&dataset_name(&input), &r)?;
                finish(table)?;
            }
        }
        Command::Decompress { input, output, vocab, vocab_dir } => {
            let bytes = read(&input)?;
            let text = match (vocab, vocab_dir) {
                (Some(path), _) => {
                    let vocab = Vocabulary::from_bytes(&read(&path)?)?;
                    pipeline::decompress_bytes(&bytes, &vocab)?
                }
                (None, Some(dir)) => pipeline::decompress_bytes(&bytes, &VocabDir::new(dir))?,
                (None, None) => pipeline::decompress_bytes(&bytes, &() as &dyn VocabResolver)?,
            };
            write(&output, &text)?;
        }
        Command::Bench { corpus, vocab, backends: names, variants, mode, runs, report } => {
            let mode: VocabMode = mode.parse()?;
            let variants: Vec<Variant> = variants.iter().map(|v| v.parse()).collect::<Result<_>>()?;
            let backends = backends(&names)?;
            let text = read(&corpus)?;
            let vocab = vocabulary(&vocab, &text)?;
            let dataset = dataset_name(&corpus);
            let mut table = csv_out(&report, &REPORT_HEADER)?;
            for variant in variants {
                for backend in &backends {
                    let mut best: Option<CompressionReport> = None;
                    for _ in 0..runs.max(1) {
                        let r = pipeline::compress_variant(&text, &vocab, backend, variant, mode)?;
                        if best.as_ref().is_none_or(|b| r.timings.total() < b.timings.total()) {
                            best = Some(r);
                        }
                    }
                    let r = best.expect("at least one run");
                    summary(&r);
                    table.report(&dataset, &r)?;
                }
            }
            finish(table)?;
        }
        Command::Ablate { corpus, vocab, backends: names, mode, report } => {
            let mode: VocabMode = mode.parse()?;
            let backends = backends(&names)?;
            let text = read(&corpus)?;
            let vocab = vocabulary(&vocab, &text)?;
            let dataset = dataset_name(&corpus);
            let mut table = csv_out(&report, &ABLATION_HEADER)?;
            for backend in &backends {
                let [raw, tok, ord] = Variant::ABLATION
                    .map(|v| pipeline::compress_variant(&text, &vocab, backend, v, mode));
                let (raw, tok, ord) = (raw?, tok?, ord?);
                eprintln!(
                    "{}: raw {:.2}%, tokenized-only {:.2}%, reordered {:.2}%",
                    backend.name(), raw.ratio_percent(), tok.ratio_percent(), ord.ratio_percent()
                );
                table.ablation(&dataset, &raw, &tok, &ord)?;
            }
            finish(table)?;
        }
        Command::Analyze { corpus, vocab, rank_range, report } => {
            let text = read(&corpus)?;
            let vocab = vocabulary(&vocab, &text)?;
            analyze(&dataset_name(&corpus), &text, &vocab, rank_range, &report)?;
        }
        Command::Scale { corpus, vocab, sizes, backends: names, mode, report } => {
            let mode: VocabMode = mode.parse()?;
            let backends = backends(&names)?;
            let text = read(&corpus)?;
            let vocab = vocabulary(&vocab, &text)?;
            let sizes: Vec<usize> = sizes.into_iter().map(|s| s.min(text.len())).collect();
            let rows = analysis::scaling_study(&text, &sizes, &vocab, &backends, mode)?;
            let dataset = dataset_name(&corpus);
            let mut table = csv_out(&report, &SCALING_HEADER)?;
            for row in &rows {
                eprintln!(
                    "{} bytes, {}: raw {:.2}%, ours {:.2}% ({:+.2} pp)",
                    row.size, row.backend, row.raw_ratio, row.ours_ratio, row.improvement_pp()
                );
                table.scaling(&dataset, row)?;
            }
            finish(table)?;
        }
    }
    Ok(())
}

fn analyze(
    dataset: &str,
    text: &[u8],
    vocab: &Vocabulary,
    (first, last): (usize, usize),
    report: &Option<PathBuf>,
) -> Result<()> {
    let ids = vocab.tokenize(text);
    let freq = reorder::count_frequencies(&ids, vocab.len())?;
    let perm = reorder::build_permutation(&freq);
    let fit = analysis::fit_zipf(&freq, first..=last)?;
    let before = analysis::histogram_bytes(&freq, &RankPermutation::identity(vocab.len()))?;
    let after = analysis::histogram_bytes(&freq, &perm)?;
    let exact = analysis::predict_costs(vocab.len());
    let log = analysis::predict_costs_with(vocab.len(), HarmonicForm::Logarithmic);

    let mut table = csv_out(report, &ANALYSIS_HEADER)?;
    let used = freq.counts().iter().filter(|&&c| c > 0).count();
    for (metric, value) in [
        ("original_bytes", text.len() as f64),
        ("vocab_size", vocab.len() as f64),
        ("token_count", ids.len() as f64),
        ("distinct_tokens", used as f64),
    ] {
        table.metric(dataset, "corpus", metric, value)?;
    }
    for (metric, value) in [
        ("alpha", fit.alpha),
        ("intercept", fit.intercept),
        ("r_squared", fit.r_squared),
        ("rank_first", first as f64),
        ("rank_last", last as f64),
        ("points", fit.points as f64),
    ] {
        table.metric(dataset, "zipf", metric, value)?;
    }
    for (section, hist) in [("histogram_before", before), ("histogram_after", after)] {
        for (k, f) in hist.fractions().iter().enumerate() {
            table.metric(dataset, section, &format!("fraction_{}b", k + 1), *f)?;
        }
        table.metric(dataset, section, "mean_bytes", hist.mean())?;
    }
    for (section, m) in [("theory_exact", &exact), ("theory_log", &log)] {
        table.metric(dataset, section, "harmonic", m.harmonic)?;
        table.metric(dataset, section, "p_1b", m.p_1b())?;
        table.metric(dataset, section, "p_2b", m.p_2b())?;
        table.metric(dataset, section, "p_3b_plus", m.p_3b_plus())?;
        table.metric(dataset, section, "mean_bytes", m.mean_bytes)?;
    }
    finish(table)?;
    eprintln!(
        "zipf alpha {:.3} (r2 {:.3}) over ranks {first}:{last}; 1-byte tokens {:.1}% -> {:.1}%; \
         mean {:.3} bytes/token vs {:.3} predicted",
        fit.alpha, fit.r_squared, 100.0 * before.fractions()[0], 100.0 * after.fractions()[0],
        after.mean(), exact.mean_bytes
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                // Stage labels already print their source.
                if !matches!(e, Error::Stage { .. }) {
                    eprint!(": {s}");
                }
                source = s.source();
            }
            eprintln!();
            ExitCode::from(1)
        }
    }
}
