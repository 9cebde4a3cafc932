//! Attachment scoring against gold documents, and a trivial baseline parser.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::derive::NodeId;
use crate::document::{AnnotatedDocument, DocUnit, Head};
use crate::grammar::{RuleId, SyncType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attachment {
    pub head: Head,
    pub dependent: NodeId,
    /// Optional and not scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub doc_id: String,
    pub dependencies: Vec<Attachment>,
}

impl Prediction {
    /// The gold tree of a document, as a prediction.
    pub fn from_gold(doc: &AnnotatedDocument) -> Self {
        Prediction {
            doc_id: doc.doc_id.clone(),
            dependencies: doc
                .dependencies
                .iter()
                .map(|d| Attachment { head: d.head, dependent: d.dependent, rule: Some(d.rule) })
                .collect(),
        }
    }
}

/// Correct attachments out of a total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Tally {
    pub correct: u64,
    pub total: u64,
}

impl Tally {
    /// Fraction correct; an empty tally has nothing wrong and scores 1.
    pub fn score(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    fn add(&mut self, ok: bool) {
        self.total += 1;
        self.correct += u64::from(ok);
    }

    fn merge(&mut self, o: Tally) {
        self.correct += o.correct;
        self.total += o.total;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocScore {
    pub doc_id: String,
    /// Non-root units only.
    pub attachment: Tally,
    pub root_correct: bool,
    pub predicted: bool,
    /// By the gold unit's sync type, in [`SyncType::ALL`] order.
    pub by_sync: [Tally; 4],
}

impl DocScore {
    pub fn uas(&self) -> f64 {
        self.attachment.score()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub documents: Vec<DocScore>,
    pub attachment: Tally,
    pub roots: Tally,
    pub by_sync: [Tally; 4],
}

impl EvalReport {
    /// Micro-averaged unlabeled attachment score.
    pub fn uas(&self) -> f64 {
        self.attachment.score()
    }

    pub fn root_accuracy(&self) -> f64 {
        self.roots.score()
    }

    pub fn sync(&self, s: SyncType) -> Tally {
        self.by_sync[s.slot()]
    }

    pub fn document_count(&self) -> usize {
        self.documents.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("document {doc_id}: prediction references unknown node {node}")]
    UnknownNode { doc_id: String, node: NodeId },
    #[error("document {doc_id}: node {node} has more than one predicted head")]
    DuplicateHead { doc_id: String, node: NodeId },
    #[error("document {doc_id} has more than one prediction")]
    DuplicatePrediction { doc_id: String },
    #[error("prediction for unknown document {doc_id}")]
    UnknownDocument { doc_id: String },
    #[error("gold document {doc_id} appears more than once")]
    DuplicateGold { doc_id: String },
}

/// Incremental scorer; gold documents can be streamed through it.
#[derive(Debug)]
pub struct Scorer {
    predictions: BTreeMap<String, Prediction>,
    seen: BTreeMap<String, ()>,
    report: EvalReport,
}

impl Scorer {
    pub fn new(predictions: impl IntoIterator<Item = Prediction>) -> Result<Self, EvalError> {
        let mut map = BTreeMap::new();
        for p in predictions {
            let id = p.doc_id.clone();
            if map.insert(id.clone(), p).is_some() {
                return Err(EvalError::DuplicatePrediction { doc_id: id });
            }
        }
        Ok(Scorer {
            predictions: map,
            seen: BTreeMap::new(),
            report: EvalReport {
                documents: Vec::new(),
                attachment: Tally::default(),
                roots: Tally::default(),
                by_sync: [Tally::default(); 4],
            },
        })
    }

    pub fn add(&mut self, gold: &AnnotatedDocument) -> Result<&DocScore, EvalError> {
        if self.seen.insert(gold.doc_id.clone(), ()).is_some() {
            return Err(EvalError::DuplicateGold { doc_id: gold.doc_id.clone() });
        }
        let pred = self.predictions.remove(&gold.doc_id);
        let score = score_document(gold, pred.as_ref())?;
        let r = &mut self.report;
        r.attachment.merge(score.attachment);
        r.roots.add(score.root_correct);
        for (acc, t) in r.by_sync.iter_mut().zip(score.by_sync) {
            acc.merge(t);
        }
        r.documents.push(score);
        Ok(r.documents.last().expect("just pushed"))
    }

    /// Fails if a prediction names a document that never came through.
    pub fn finish(self) -> Result<EvalReport, EvalError> {
        if let Some(doc_id) = self.predictions.into_keys().next() {
            return Err(EvalError::UnknownDocument { doc_id });
        }
        Ok(self.report)
    }
}

/// Scores predictions against gold. A gold document without a prediction
/// counts every attachment (and its root) as wrong.
pub fn score<'a>(
    gold: impl IntoIterator<Item = &'a AnnotatedDocument>,
    predictions: impl IntoIterator<Item = Prediction>,
) -> Result<EvalReport, EvalError> {
    let mut s = Scorer::new(predictions)?;
    for g in gold {
        s.add(g)?;
    }
    s.finish()
}

fn score_document(gold: &AnnotatedDocument, pred: Option<&Prediction>) -> Result<DocScore, EvalError> {
    let n = gold.units.len();
    let mut predicted: Vec<Option<Head>> = vec![None; n];
    if let Some(p) = pred {
        let unknown = |node| EvalError::UnknownNode { doc_id: gold.doc_id.clone(), node };
        for a in &p.dependencies {
            let slot = predicted.get_mut(a.dependent as usize).ok_or_else(|| unknown(a.dependent))?;
            if let Head::Node(h) = a.head {
                if h as usize >= n {
                    return Err(unknown(h));
                }
            }
            if slot.replace(a.head).is_some() {
                return Err(EvalError::DuplicateHead { doc_id: gold.doc_id.clone(), node: a.dependent });
            }
        }
    }

    let mut score = DocScore {
        doc_id: gold.doc_id.clone(),
        attachment: Tally::default(),
        root_correct: false,
        predicted: pred.is_some(),
        by_sync: [Tally::default(); 4],
    };
    for d in &gold.dependencies {
        let ok = predicted.get(d.dependent as usize).copied().flatten() == Some(d.head);
        if d.head == Head::Root {
            score.root_correct = ok;
            continue;
        }
        score.attachment.add(ok);
        if let Some(u) = gold.units.get(d.dependent as usize) {
            score.by_sync[u.sync.slot()].add(ok);
        }
    }
    Ok(score)
}

/// Attaches each manual gesture to the previous one in time (the first to
/// ROOT) and each marker to the manual gesture it overlaps longest, ties
/// going to the earlier start. Only a smoke test for the harness.
pub fn baseline_parse(doc: &AnnotatedDocument) -> Prediction {
    let mut manual: Vec<&DocUnit> = doc.units.iter().filter(|u| u.sync == SyncType::Mg).collect();
    manual.sort_by_key(|u| (u.start, u.node));
    let mut deps = Vec::with_capacity(doc.units.len());
    let mut prev = Head::Root;
    for u in &manual {
        deps.push(Attachment { head: prev, dependent: u.node, rule: None });
        prev = Head::Node(u.node);
    }
    for u in doc.units.iter().filter(|u| u.sync != SyncType::Mg) {
        let mut best: Option<(i64, &DocUnit)> = None;
        for m in &manual {
            let overlap = (u.end.min(m.end).0 - u.start.max(m.start).0).max(0);
            if best.is_none_or(|(o, _)| overlap > o) {
                best = Some((overlap, m));
            }
        }
        let head = best.map_or(Head::Root, |(_, m)| Head::Node(m.node));
        deps.push(Attachment { head, dependent: u.node, rule: None });
    }
    deps.sort_by_key(|a| a.dependent);
    Prediction { doc_id: doc.doc_id.clone(), dependencies: deps }
}
