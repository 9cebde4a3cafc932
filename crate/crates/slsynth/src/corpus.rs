//! Batch corpus generation.

use std::io::{self, Write};

use rayon::prelude::*;
use slsynth_core::{
    document_seed, generate_document, validate_grammar, AnnotatedDocument, DeriveError, Deriver, GenParams, Grammar,
    GrammarViolation,
};

use crate::format::{document_to_line, HashingWriter};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("grammar is invalid: {}", list(.0))]
    Grammar(Vec<GrammarViolation>),
    #[error("invalid parameter `{}`: {}", .0.field, .0.reason)]
    Param(slsynth_core::ParamError),
    #[error("document {index}: {source}")]
    Derive { index: u64, source: DeriveError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn list(v: &[GrammarViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub fn doc_id(index: u64) -> String {
    format!("d{index:06}")
}

/// Documents in index order, each one determined by its index and the base
/// seed alone. Holds one document at a time.
pub struct CorpusIter<'g> {
    deriver: Deriver<'g>,
    base_seed: u64,
    translation_std: f64,
    next: u64,
    count: u64,
}

impl Iterator for CorpusIter<'_> {
    type Item = Result<AnnotatedDocument, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.count {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(one(&self.deriver, self.base_seed, self.translation_std, i))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.count - self.next) as usize;
        (left, Some(left))
    }
}

fn one(deriver: &Deriver<'_>, base_seed: u64, translation_std: f64, i: u64) -> Result<AnnotatedDocument, CorpusError> {
    generate_document(deriver, doc_id(i), document_seed(base_seed, i), translation_std)
        .map(|g| g.document)
        .map_err(|source| CorpusError::Derive { index: i, source })
}

fn deriver<'g>(grammar: &'g Grammar, params: &GenParams) -> Result<Deriver<'g>, CorpusError> {
    params.validate().map_err(CorpusError::Param)?;
    let v = validate_grammar(grammar);
    if !v.is_empty() {
        return Err(CorpusError::Grammar(v));
    }
    Deriver::new(grammar).map_err(|source| CorpusError::Derive { index: 0, source })
}

/// `params` supplies the temporal settings; the grammar supplies everything
/// structural.
pub fn generate_corpus<'g>(
    grammar: &'g Grammar,
    n: u64,
    base_seed: u64,
    params: &GenParams,
) -> Result<CorpusIter<'g>, CorpusError> {
    Ok(CorpusIter {
        deriver: deriver(grammar, params)?,
        base_seed,
        translation_std: params.translation_std,
        next: 0,
        count: n,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Written {
    pub count: u64,
    pub bytes: u64,
    pub sha256: String,
}

const CHUNK: u64 = 512;

/// Writes `n` documents, one per line. Output bytes do not depend on `jobs`.
pub fn write_corpus<W: Write>(
    grammar: &Grammar,
    n: u64,
    base_seed: u64,
    params: &GenParams,
    jobs: usize,
    out: W,
) -> Result<(W, Written), CorpusError> {
    let mut w = HashingWriter::new(out);
    if jobs <= 1 {
        for doc in generate_corpus(grammar, n, base_seed, params)? {
            w.write_all(&document_to_line(&doc?))?;
        }
    } else {
        let d = deriver(grammar, params)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CorpusError::Io(io::Error::other(e)))?;
        let mut start = 0;
        while start < n {
            let end = n.min(start + CHUNK * jobs as u64);
            let lines: Vec<Result<Vec<u8>, CorpusError>> = pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map(|i| one(&d, base_seed, params.translation_std, i).map(|doc| document_to_line(&doc)))
                    .collect()
            });
            for l in lines {
                w.write_all(&l?)?;
            }
            start = end;
        }
    }
    w.flush()?;
    let (out, sha256, bytes) = w.finish();
    Ok((out, Written { count: n, bytes, sha256 }))
}
