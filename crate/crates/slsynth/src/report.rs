//! Rendering of evaluation results.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use slsynth_core::{EvalReport, SyncType, Tally};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TallyOut {
    pub correct: u64,
    pub total: u64,
    pub score: f64,
}

impl From<Tally> for TallyOut {
    fn from(t: Tally) -> Self {
        TallyOut { correct: t.correct, total: t.total, score: t.score() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocOut {
    pub doc_id: String,
    pub uas: f64,
    pub root_correct: bool,
    pub predicted: bool,
}

/// The machine-readable score report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub documents: usize,
    pub uas: f64,
    pub root_accuracy: f64,
    pub attachment: TallyOut,
    pub roots: TallyOut,
    pub by_sync: BTreeMap<&'static str, TallyOut>,
    pub unpredicted: usize,
    pub per_document: Vec<DocOut>,
}

impl ScoreSummary {
    pub fn new(r: &EvalReport) -> Self {
        ScoreSummary {
            documents: r.document_count(),
            uas: r.uas(),
            root_accuracy: r.root_accuracy(),
            attachment: r.attachment.into(),
            roots: r.roots.into(),
            by_sync: SyncType::ALL.iter().map(|&s| (s.as_str(), r.sync(s).into())).collect(),
            unpredicted: r.documents.iter().filter(|d| !d.predicted).count(),
            per_document: r
                .documents
                .iter()
                .map(|d| DocOut {
                    doc_id: d.doc_id.clone(),
                    uas: d.uas(),
                    root_correct: d.root_correct,
                    predicted: d.predicted,
                })
                .collect(),
        }
    }
}

pub fn render_score(s: &ScoreSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<14}{:>10}{:>10}{:>8}", "", "correct", "total", "score");
    let mut row = |name: &str, t: &TallyOut| {
        let _ = writeln!(out, "{name:<14}{:>10}{:>10}{:>8.3}", t.correct, t.total, t.score);
    };
    row("UAS", &s.attachment);
    row("root", &s.roots);
    for (k, t) in &s.by_sync {
        row(k, t);
    }
    let _ = writeln!(out, "documents {} ({} without prediction)", s.documents, s.unpredicted);
    out
}
