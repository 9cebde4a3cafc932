//! The `slsynth` command line.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use slsynth_core::{
    baseline_parse, check_document, compute_heights, generate_grammar, validate_grammar, Grammar, Scorer,
};

use crate::corpus::write_corpus;
use crate::format::{
    grammar_to_string, manifest_to_string, parse_config, parse_grammar, parse_manifest, read_documents,
    read_predictions, sha256_hex, write_prediction, FormatError, Manifest,
};
use crate::report::{render_score, ScoreSummary};
use crate::stats::{render_stats, StatsBuilder};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "slsynth", version, about = "Synthetic signed-language treebanks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a grammar from a config file.
    GenGrammar {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate an annotated corpus and its manifest.
    GenCorpus {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        n: Option<u64>,
        /// Base seed; document i uses a seed mixed from it and i.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Temporal parameters; defaults to those stored in the grammar.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Regenerate the corpus a manifest describes and check its hash.
        #[arg(long, conflicts_with_all = ["n", "seed", "config", "manifest"])]
        from_manifest: Option<PathBuf>,
    },
    /// Check a grammar, a corpus or a config.
    Validate {
        #[arg(long)]
        grammar: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Summarise a corpus.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        /// Enables duration checks against unit scales.
        #[arg(long)]
        grammar: Option<PathBuf>,
        /// Write the JSON summary here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Score predictions against a gold corpus.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Run the temporal baseline parser over a corpus.
    Baseline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn at(path: &Path, e: FormatError) -> Failure {
    let p = path.display();
    usage(match &e {
        FormatError::Syntax { line, column, message } => format!("{p}:{line}:{column}: {message}"),
        FormatError::Invalid { line, message } => format!("{p}:{line}: {message}"),
        _ => format!("{p}: {e}"),
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn load_grammar(path: &Path) -> Result<(Grammar, String), Failure> {
    let text = read(path)?;
    let g = parse_grammar(&text).map_err(|e| at(path, e))?;
    Ok((g, sha256_hex(text.as_bytes())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::GenGrammar { config, seed, out } => {
            let mut params = parse_config(&read(&config)?).map_err(|e| at(&config, e))?;
            if let Some(s) = seed {
                params.seed = s;
            }
            let g = generate_grammar(&params).map_err(|e| usage(format!("{}: {e}", config.display())))?;
            write_all(&out, grammar_to_string(&g).as_bytes())?;
            let _ = writeln!(
                stdout,
                "wrote {} ({} categories, {} rules, {} units)",
                out.display(),
                g.categories.len(),
                g.rule_count(),
                g.units.len()
            );
            Ok(EXIT_OK)
        }
        Command::GenCorpus { grammar, n, seed, out, manifest, config, jobs, from_manifest } => {
            let (g, grammar_sha) = load_grammar(&grammar)?;
            if jobs == 0 {
                return Err(usage("--jobs must be at least 1"));
            }
            if let Some(mpath) = from_manifest {
                let m = parse_manifest(&read(&mpath)?).map_err(|e| at(&mpath, e))?;
                if m.grammar_sha256 != grammar_sha {
                    return Err(Failure {
                        code: EXIT_INVALID,
                        message: format!(
                            "{}: grammar hash {} does not match manifest {}",
                            grammar.display(),
                            grammar_sha,
                            m.grammar_sha256
                        ),
                    });
                }
                let (_, w) = corpus(&g, m.count, m.base_seed, &m.params, jobs, &out)?;
                if w.sha256 != m.corpus_sha256 {
                    let _ = writeln!(
                        stderr,
                        "{}: corpus hash {} differs from manifest {}",
                        out.display(),
                        w.sha256,
                        m.corpus_sha256
                    );
                    return Ok(EXIT_INVALID);
                }
                let _ = writeln!(stdout, "reproduced {} documents, sha256 {}", w.count, w.sha256);
                return Ok(EXIT_OK);
            }
            let (Some(n), Some(seed), Some(mpath)) = (n, seed, manifest) else {
                return Err(usage("gen-corpus needs --n, --seed and --manifest (or --from-manifest)"));
            };
            let params = match config {
                Some(c) => parse_config(&read(&c)?).map_err(|e| at(&c, e))?,
                None => g.params.clone(),
            };
            let (_, w) = corpus(&g, n, seed, &params, jobs, &out)?;
            let m = Manifest::new(grammar_sha, params, n, seed, w.sha256.clone());
            write_all(&mpath, manifest_to_string(&m).as_bytes())?;
            let _ = writeln!(stdout, "wrote {} documents to {}, sha256 {}", w.count, out.display(), w.sha256);
            Ok(EXIT_OK)
        }
        Command::Validate { grammar, corpus, config } => validate(grammar, corpus, config, stdout),
        Command::Stats { corpus, grammar, out, json } => {
            let g = grammar.as_deref().map(load_grammar).transpose()?.map(|(g, _)| g);
            let mut b = StatsBuilder::new(g.as_ref());
            for doc in read_documents(open(&corpus)?) {
                b.add(&doc.map_err(|e| at(&corpus, e))?);
            }
            let s = b.finish();
            let j = serde_json::to_string_pretty(&s).expect("stats serialise") + "\n";
            if let Some(o) = &out {
                write_all(o, j.as_bytes())?;
            }
            let _ = stdout.write_all(if json { j } else { render_stats(&s) }.as_bytes());
            Ok(EXIT_OK)
        }
        Command::Score { gold, pred, out, json } => {
            let preds: Vec<_> = read_predictions(open(&pred)?).collect::<Result<_, _>>().map_err(|e| at(&pred, e))?;
            let mut scorer = Scorer::new(preds).map_err(|e| usage(format!("{}: {e}", pred.display())))?;
            for doc in read_documents(open(&gold)?) {
                let doc = doc.map_err(|e| at(&gold, e))?;
                scorer.add(&doc).map_err(|e| usage(format!("{}: {e}", pred.display())))?;
            }
            let report = scorer.finish().map_err(|e| usage(format!("{}: {e}", pred.display())))?;
            let s = ScoreSummary::new(&report);
            let j = serde_json::to_string_pretty(&s).expect("report serialises") + "\n";
            if let Some(o) = &out {
                write_all(o, j.as_bytes())?;
            }
            let _ = stdout.write_all(if json { j } else { render_score(&s) }.as_bytes());
            Ok(EXIT_OK)
        }
        Command::Baseline { corpus, out } => {
            let mut w = create(&out)?;
            let mut n = 0u64;
            for doc in read_documents(open(&corpus)?) {
                let doc = doc.map_err(|e| at(&corpus, e))?;
                write_prediction(&mut w, &baseline_parse(&doc)).map_err(|e| io_err(&out, e))?;
                n += 1;
            }
            w.flush().map_err(|e| io_err(&out, e))?;
            let _ = writeln!(stdout, "wrote {n} predictions to {}", out.display());
            Ok(EXIT_OK)
        }
    }
}

fn corpus(
    g: &Grammar,
    n: u64,
    seed: u64,
    params: &slsynth_core::GenParams,
    jobs: usize,
    out: &Path,
) -> Result<(BufWriter<File>, crate::corpus::Written), Failure> {
    let w = create(out)?;
    write_corpus(g, n, seed, params, jobs, w).map_err(|e| match e {
        crate::corpus::CorpusError::Io(e) => io_err(out, e),
        e => usage(e.to_string()),
    })
}

fn validate(
    grammar: Option<PathBuf>,
    corpus: Option<PathBuf>,
    config: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    if grammar.is_none() && corpus.is_none() && config.is_none() {
        return Err(usage("validate needs at least one of --grammar, --corpus, --config"));
    }
    let mut problems = 0usize;
    if let Some(c) = &config {
        parse_config(&read(c)?).map_err(|e| at(c, e))?;
        let _ = writeln!(stdout, "{}: ok", c.display());
    }
    let mut g = None;
    if let Some(p) = &grammar {
        let (gr, _) = load_grammar(p)?;
        let mut found = 0;
        for v in validate_grammar(&gr) {
            let _ = writeln!(stdout, "{}: {v}", p.display());
            found += 1;
        }
        if found == 0 {
            match compute_heights(&gr) {
                Ok(h) if !h.all_finite() => {
                    let _ = writeln!(stdout, "{}: some category has infinite height", p.display());
                    found += 1;
                }
                Ok(h) => {
                    let max = h.max();
                    if max.finite().is_some_and(|m| m > gr.params.height_limit) {
                        let _ = writeln!(
                            stdout,
                            "{}: warning: maximum height {max} exceeds the limit {}",
                            p.display(),
                            gr.params.height_limit
                        );
                    }
                }
                Err(e) => {
                    let _ = writeln!(stdout, "{}: {e}", p.display());
                    found += 1;
                }
            }
        }
        if found == 0 {
            let _ = writeln!(stdout, "{}: ok", p.display());
        }
        problems += found;
        g = Some(gr);
    }
    if let Some(c) = &corpus {
        let mut found = 0;
        let mut docs = 0;
        let mut reader = read_documents(open(c)?);
        while let Some(doc) = reader.next() {
            let doc = doc.map_err(|e| at(c, e))?;
            docs += 1;
            for v in check_document(&doc, g.as_ref()) {
                let _ = writeln!(stdout, "{}:{}: {}: {v}", c.display(), reader.line(), doc.doc_id);
                found += 1;
            }
        }
        if found == 0 {
            let _ = writeln!(stdout, "{}: ok ({docs} documents)", c.display());
        }
        problems += found;
    }
    Ok(if problems == 0 { EXIT_OK } else { EXIT_INVALID })
}
