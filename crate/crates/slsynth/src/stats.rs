//! Corpus summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use slsynth_core::{AnnotatedDocument, Grammar, SyncType};

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    /// mean² / variance; a gamma draw of shape k gives k.
    pub shape: f64,
    #[serde(skip)]
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
        self.variance = self.m2 / self.count as f64;
        self.shape = if self.variance > 0.0 { self.mean * self.mean / self.variance } else { 0.0 };
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub documents: u64,
    pub units: u64,
    pub units_by_sync: BTreeMap<&'static str, u64>,
    /// Manual gestures as a fraction of all units.
    pub mg_share: f64,
    pub depth_histogram: BTreeMap<u32, u64>,
    /// Manual gesture durations in seconds.
    pub mg_durations: Moments,
    /// Durations over their unit's scale; expected mean 2 and shape 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_durations: Option<Moments>,
    pub rule_usage: BTreeMap<u32, u64>,
}

#[derive(Debug)]
pub struct StatsBuilder<'g> {
    grammar: Option<&'g Grammar>,
    stats: CorpusStats,
    mg: u64,
}

impl<'g> StatsBuilder<'g> {
    pub fn new(grammar: Option<&'g Grammar>) -> Self {
        let mut stats = CorpusStats::default();
        for s in SyncType::ALL {
            stats.units_by_sync.insert(s.as_str(), 0);
        }
        if grammar.is_some() {
            stats.normalized_durations = Some(Moments::default());
        }
        StatsBuilder { grammar, stats, mg: 0 }
    }

    pub fn add(&mut self, doc: &AnnotatedDocument) {
        let s = &mut self.stats;
        s.documents += 1;
        if !doc.units.is_empty() {
            *s.depth_histogram.entry(doc.depth()).or_default() += 1;
        }
        for u in &doc.units {
            s.units += 1;
            *s.units_by_sync.entry(u.sync.as_str()).or_default() += 1;
            if u.sync != SyncType::Mg {
                continue;
            }
            self.mg += 1;
            let d = (u.end.0 - u.start.0) as f64 * 1e-6;
            s.mg_durations.push(d);
            let scale = self.grammar.and_then(|g| g.unit(u.unit)).map(|x| x.duration_scale);
            if let (Some(m), Some(theta)) = (s.normalized_durations.as_mut(), scale) {
                m.push(d / theta);
            }
        }
        for d in &doc.dependencies {
            *s.rule_usage.entry(d.rule).or_default() += 1;
        }
    }

    pub fn finish(mut self) -> CorpusStats {
        if self.stats.units > 0 {
            self.stats.mg_share = self.mg as f64 / self.stats.units as f64;
        }
        self.stats
    }
}

pub fn corpus_stats<'a>(
    docs: impl IntoIterator<Item = &'a AnnotatedDocument>,
    grammar: Option<&Grammar>,
) -> CorpusStats {
    let mut b = StatsBuilder::new(grammar);
    for d in docs {
        b.add(d);
    }
    b.finish()
}

fn moments_row(out: &mut String, name: &str, m: &Moments) {
    let _ = writeln!(out, "{name:<22}n={:<9} mean={:.4} var={:.4} shape={:.3}", m.count, m.mean, m.variance, m.shape);
}

/// Human-readable rendering.
pub fn render_stats(s: &CorpusStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "documents             {}", s.documents);
    let _ = writeln!(out, "units                 {}", s.units);
    for (k, v) in &s.units_by_sync {
        let _ = writeln!(out, "  {k:<20}{v}");
    }
    let _ = writeln!(out, "mg share              {:.3}", s.mg_share);
    let _ = writeln!(out, "depth histogram");
    for (d, c) in &s.depth_histogram {
        let _ = writeln!(out, "  {d:<20}{c}");
    }
    moments_row(&mut out, "mg durations (s)", &s.mg_durations);
    if let Some(m) = &s.normalized_durations {
        moments_row(&mut out, "duration / scale", m);
    }
    let _ = writeln!(out, "rules used            {}", s.rule_usage.len());
    out
}
