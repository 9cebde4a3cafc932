//! On-disk formats: grammar files, generation configs, line-delimited
//! corpora and predictions, and corpus manifests.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slsynth_core::{
    AnnotatedDocument, Category, CategoryId, GenParams, Grammar, MgRule, NmgRule, ParamError, Prediction, Unit,
};

pub const GRAMMAR_FORMAT: &str = "slsynth-grammar";
pub const GRAMMAR_VERSION: u32 = 1;
pub const MANIFEST_FORMAT: &str = "slsynth-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const SEED_MIXING: &str = "splitmix64";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("expected a {expected} file, found format {found:?}")]
    WrongFormat { expected: &'static str, found: String },
    #[error("unsupported {format} version {found}; this build reads version {supported}")]
    Version { format: &'static str, found: u32, supported: u32 },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("invalid parameter `{}`: {}", .0.field, .0.reason)]
    Param(ParamError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl FormatError {
    fn syntax(e: serde_json::Error, line_offset: usize) -> Self {
        if e.is_io() {
            return FormatError::Io(e.into());
        }
        let message = e.to_string();
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        FormatError::Syntax { line: e.line() + line_offset, column: e.column(), message }
    }

    /// The 1-based line the error points at, when it has one.
    pub fn line(&self) -> Option<usize> {
        match self {
            FormatError::Syntax { line, .. } | FormatError::Invalid { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A writer that hashes everything passing through it.
pub struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        HashingWriter { inner, hasher: Sha256::new(), bytes: 0 }
    }

    pub fn finish(self) -> (W, String, u64) {
        (self.inner, hex::encode(self.hasher.finalize()), self.bytes)
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn check_header(text: &str, expected: &'static str, supported: u32) -> Result<(), FormatError> {
    let h: Header = serde_json::from_str(text).map_err(|e| FormatError::syntax(e, 0))?;
    if h.format != expected {
        return Err(FormatError::WrongFormat { expected, found: h.format });
    }
    if h.version != supported {
        return Err(FormatError::Version { format: expected, found: h.version, supported });
    }
    Ok(())
}

#[derive(Serialize)]
struct GrammarOut<'a> {
    format: &'static str,
    version: u32,
    categories: &'a [Category],
    mg_rules: &'a [MgRule],
    nmg_rules: &'a [NmgRule],
    units: &'a [Unit],
    root: CategoryId,
    params: &'a GenParams,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct GrammarIn {
    format: String,
    version: u32,
    categories: Vec<Category>,
    mg_rules: Vec<MgRule>,
    nmg_rules: Vec<NmgRule>,
    units: Vec<Unit>,
    root: CategoryId,
    params: GenParams,
}

/// Pretty-printed, newline-terminated. Equal grammars give equal bytes.
pub fn grammar_to_string(g: &Grammar) -> String {
    let out = GrammarOut {
        format: GRAMMAR_FORMAT,
        version: GRAMMAR_VERSION,
        categories: &g.categories,
        mg_rules: &g.mg_rules,
        nmg_rules: &g.nmg_rules,
        units: &g.units,
        root: g.root,
        params: &g.params,
    };
    let mut s = serde_json::to_string_pretty(&out).expect("grammar serialises");
    s.push('\n');
    s
}

/// Parses a grammar file. Structural checks beyond the format belong to
/// [`slsynth_core::validate_grammar`].
pub fn parse_grammar(text: &str) -> Result<Grammar, FormatError> {
    check_header(text, GRAMMAR_FORMAT, GRAMMAR_VERSION)?;
    let g: GrammarIn = serde_json::from_str(text).map_err(|e| FormatError::syntax(e, 0))?;
    Ok(Grammar {
        categories: g.categories,
        mg_rules: g.mg_rules,
        nmg_rules: g.nmg_rules,
        units: g.units,
        root: g.root,
        params: g.params,
    })
}

/// Parses and validates a generation config.
pub fn parse_config(text: &str) -> Result<GenParams, FormatError> {
    let p: GenParams = serde_json::from_str(text).map_err(|e| FormatError::syntax(e, 0))?;
    p.validate().map_err(FormatError::Param)?;
    Ok(p)
}

pub fn config_to_string(p: &GenParams) -> String {
    let mut s = serde_json::to_string_pretty(p).expect("params serialise");
    s.push('\n');
    s
}

/// Writes floats with exactly six fractional digits, so times print as
/// whole microseconds.
struct Fixed6;

impl serde_json::ser::Formatter for Fixed6 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.6}")
    }
}

fn write_line<T: Serialize, W: Write>(w: &mut W, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *w, Fixed6);
    value.serialize(&mut ser).map_err(io::Error::from)?;
    w.write_all(b"\n")
}

pub fn write_document<W: Write>(w: &mut W, doc: &AnnotatedDocument) -> io::Result<()> {
    write_line(w, doc)
}

pub fn document_to_line(doc: &AnnotatedDocument) -> Vec<u8> {
    let mut v = Vec::with_capacity(64 * doc.units.len() + 64);
    write_document(&mut v, doc).expect("writing to memory");
    v
}

pub fn write_prediction<W: Write>(w: &mut W, p: &Prediction) -> io::Result<()> {
    write_line(w, p)
}

/// Parses one corpus line; `line` is only used in errors.
pub fn parse_document(text: &str, line: usize) -> Result<AnnotatedDocument, FormatError> {
    let doc: AnnotatedDocument = serde_json::from_str(text).map_err(|e| FormatError::syntax(e, line - 1))?;
    if let Some(u) = doc.units.iter().find(|u| u.end <= u.start) {
        return Err(FormatError::Invalid {
            line,
            message: format!("node {} has end {} <= start {}", u.node, u.end, u.start),
        });
    }
    Ok(doc)
}

pub fn parse_prediction(text: &str, line: usize) -> Result<Prediction, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::syntax(e, line - 1))
}

/// Streams records out of a line-delimited file, skipping blank lines.
pub struct Lines<R, T> {
    reader: R,
    line: usize,
    buf: String,
    parse: fn(&str, usize) -> Result<T, FormatError>,
}

impl<R: BufRead, T> Iterator for Lines<R, T> {
    type Item = Result<T, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let text = self.buf.trim_end_matches(['\n', '\r']);
            if !text.trim().is_empty() {
                return Some((self.parse)(text, self.line));
            }
        }
    }
}

pub fn read_documents<R: BufRead>(reader: R) -> Lines<R, AnnotatedDocument> {
    Lines { reader, line: 0, buf: String::new(), parse: parse_document }
}

pub fn read_predictions<R: BufRead>(reader: R) -> Lines<R, Prediction> {
    Lines { reader, line: 0, buf: String::new(), parse: parse_prediction }
}

pub fn parse_corpus(text: &str) -> Result<Vec<AnnotatedDocument>, FormatError> {
    read_documents(text.as_bytes()).collect()
}

/// Everything needed to regenerate a corpus byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    /// Of the grammar file's bytes.
    pub grammar_sha256: String,
    /// Parameters the corpus was generated under.
    pub params: GenParams,
    pub count: u64,
    pub base_seed: u64,
    pub seed_mixing: String,
    /// Of the corpus file's bytes.
    pub corpus_sha256: String,
}

impl Manifest {
    pub fn new(grammar_sha256: String, params: GenParams, count: u64, base_seed: u64, corpus_sha256: String) -> Self {
        Manifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            tool_version: TOOL_VERSION.into(),
            grammar_sha256,
            params,
            count,
            base_seed,
            seed_mixing: SEED_MIXING.into(),
            corpus_sha256,
        }
    }
}

pub fn manifest_to_string(m: &Manifest) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("manifest serialises");
    s.push('\n');
    s
}

pub fn parse_manifest(text: &str) -> Result<Manifest, FormatError> {
    check_header(text, MANIFEST_FORMAT, MANIFEST_VERSION)?;
    let m: Manifest = serde_json::from_str(text).map_err(|e| FormatError::syntax(e, 0))?;
    if m.seed_mixing != SEED_MIXING {
        return Err(FormatError::Invalid { line: 1, message: format!("unknown seed mixing {:?}", m.seed_mixing) });
    }
    m.params.validate().map_err(FormatError::Param)?;
    Ok(m)
}

impl<R, T> Lines<R, T> {
    /// Line number of the record last returned.
    pub fn line(&self) -> usize {
        self.line
    }
}
