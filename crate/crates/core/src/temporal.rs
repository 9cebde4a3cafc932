//! Temporal valuation.
//!
//! Relative values are drawn first: a Gamma(2, θ) duration for every manual
//! gesture, Gaussian translations for the synchronised ends of markers, and
//! a Gamma(2, θ) free duration for markers with one synchronised end. The
//! constraint network (durations, manual sequence, marker synchronisation)
//! is acyclic, so it is solved exactly by one in-order pass that lays manual
//! gestures end to end, followed by the marker equations.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::derive::{Children, NodeId, SyntaxTree};
use crate::grammar::SyncType;

/// Gamma shape of every duration.
pub const GAMMA_SHAPE: f64 = 2.0;
/// Smallest extent (seconds) a span may have; the serialisation resolution.
pub const MIN_EXTENT: f64 = 1e-6;
/// Extent given to a marker whose span stays degenerate after redraws.
pub const CLAMP_EXTENT: f64 = 1e-3;
/// Translation redraws tried before clamping.
pub const MAX_REDRAWS: usize = 16;
/// Absolute tolerance of the constraint checker, seconds.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

impl Span {
    pub fn new(start: f64, end: f64) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    fn hull(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }

    fn shifted(self, by: f64) -> Span {
        Span { start: self.start + by, end: self.end + by }
    }
}

/// Relative values drawn for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeTiming {
    Mg { duration: f64 },
    NmgFull { start_shift: f64, end_shift: f64 },
    NmgStart { start_shift: f64, free_duration: f64 },
    NmgEnd { end_shift: f64, free_duration: f64 },
}

impl NodeTiming {
    pub fn sync(&self) -> SyncType {
        match self {
            NodeTiming::Mg { .. } => SyncType::Mg,
            NodeTiming::NmgFull { .. } => SyncType::NmgFull,
            NodeTiming::NmgStart { .. } => SyncType::NmgStart,
            NodeTiming::NmgEnd { .. } => SyncType::NmgEnd,
        }
    }

    /// Span a marker takes given its dependent's projection.
    pub fn marker_span(&self, p: Span) -> Option<Span> {
        match *self {
            NodeTiming::Mg { .. } => None,
            NodeTiming::NmgFull { start_shift, end_shift } => Some(Span::new(p.start + start_shift, p.end + end_shift)),
            NodeTiming::NmgStart { start_shift, free_duration } => {
                let s = p.start + start_shift;
                Some(Span::new(s, s + free_duration))
            }
            NodeTiming::NmgEnd { end_shift, free_duration } => {
                let e = p.end + end_shift;
                Some(Span::new(e - free_duration, e))
            }
        }
    }
}

/// Per-node relative values, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeValuation {
    pub timings: Vec<NodeTiming>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSolution {
    /// Indexed by node id.
    pub spans: Vec<Span>,
    pub length: f64,
    /// Markers whose extent was clamped to [`CLAMP_EXTENT`].
    pub clamped: Vec<NodeId>,
}

struct Sampler {
    translation: Option<Normal<f64>>,
}

impl Sampler {
    fn new(translation_std: f64) -> Self {
        let translation = (translation_std > 0.0).then(|| Normal::new(0.0, translation_std).expect("finite std"));
        Sampler { translation }
    }

    fn shift<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.translation.as_ref().map_or(0.0, |n| n.sample(rng))
    }

    /// Gamma(2, scale) draw, resampled while below [`MIN_EXTENT`].
    fn duration<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> f64 {
        let g = Gamma::new(GAMMA_SHAPE, scale).expect("positive scale");
        for _ in 0..64 {
            let d = g.sample(rng);
            if d >= MIN_EXTENT {
                return d;
            }
        }
        MIN_EXTENT
    }
}

/// Draws the relative values of every node, in node order.
pub fn draw_valuation<R: Rng + ?Sized>(tree: &SyntaxTree, translation_std: f64, rng: &mut R) -> RelativeValuation {
    let s = Sampler::new(translation_std);
    let timings = tree
        .nodes
        .iter()
        .map(|n| {
            let scale = n.unit.duration_scale;
            match n.unit.sync {
                SyncType::Mg => NodeTiming::Mg { duration: s.duration(scale, rng) },
                SyncType::NmgFull => NodeTiming::NmgFull { start_shift: s.shift(rng), end_shift: s.shift(rng) },
                SyncType::NmgStart => {
                    NodeTiming::NmgStart { start_shift: s.shift(rng), free_duration: s.duration(scale, rng) }
                }
                SyncType::NmgEnd => {
                    NodeTiming::NmgEnd { end_shift: s.shift(rng), free_duration: s.duration(scale, rng) }
                }
            }
        })
        .collect();
    RelativeValuation { timings }
}

/// Solves the network into absolute spans.
///
/// Manual gestures are laid consecutively in in-order traversal (left
/// dependents, head, right dependents; markers are transparent). Each marker
/// then follows its dependent's projection. A marker left with less than
/// [`MIN_EXTENT`] has its translations redrawn up to [`MAX_REDRAWS`] times
/// (the new values are written back to `val`), then is clamped to
/// [`CLAMP_EXTENT`]. Finally everything is shifted so the earliest start is
/// zero.
///
/// # Panics
///
/// If `val` does not have one timing per node.
pub fn solve<R: Rng + ?Sized>(
    tree: &SyntaxTree,
    val: &mut RelativeValuation,
    translation_std: f64,
    rng: &mut R,
) -> TemporalSolution {
    assert_eq!(val.timings.len(), tree.len(), "valuation does not match tree");
    let mut spans = vec![Span::new(0.0, 0.0); tree.len()];
    let mut proj = vec![Span::new(0.0, 0.0); tree.len()];
    let mut cursor = 0.0;
    lay_out(tree, tree.root, val, &mut cursor, &mut spans, &mut proj);

    let sampler = Sampler::new(translation_std);
    let mut clamped = Vec::new();
    for node in &tree.nodes {
        let Children::Nmg { marked } = node.children else { continue };
        let p = proj[marked as usize];
        let i = node.id as usize;
        let mut span = val.timings[i].marker_span(p).expect("marker timing");
        let mut tries = 0;
        while span.len() < MIN_EXTENT && tries < MAX_REDRAWS {
            redraw_shifts(&mut val.timings[i], &sampler, rng);
            span = val.timings[i].marker_span(p).expect("marker timing");
            tries += 1;
        }
        if span.len() < MIN_EXTENT {
            span = match val.timings[i] {
                NodeTiming::NmgEnd { .. } => Span::new(span.end - CLAMP_EXTENT, span.end),
                _ => Span::new(span.start, span.start + CLAMP_EXTENT),
            };
            clamped.push(node.id);
        }
        spans[i] = span;
    }

    let min = spans.iter().map(|s| s.start).fold(f64::INFINITY, f64::min);
    let shift = if min.is_finite() { -min } else { 0.0 };
    for s in &mut spans {
        *s = s.shifted(shift);
    }
    let length = spans.iter().map(|s| s.end).fold(0.0, f64::max);
    TemporalSolution { spans, length, clamped }
}

fn redraw_shifts<R: Rng + ?Sized>(t: &mut NodeTiming, s: &Sampler, rng: &mut R) {
    match t {
        NodeTiming::Mg { .. } => {}
        NodeTiming::NmgFull { start_shift, end_shift } => {
            *start_shift = s.shift(rng);
            *end_shift = s.shift(rng);
        }
        NodeTiming::NmgStart { start_shift, .. } => *start_shift = s.shift(rng),
        NodeTiming::NmgEnd { end_shift, .. } => *end_shift = s.shift(rng),
    }
}

/// In-order placement of manual gestures; records each node's projection.
fn lay_out(
    tree: &SyntaxTree,
    id: NodeId,
    val: &RelativeValuation,
    cursor: &mut f64,
    spans: &mut [Span],
    proj: &mut [Span],
) {
    let start = *cursor;
    match &tree.node(id).children {
        Children::Mg { left, right } => {
            for &c in left {
                lay_out(tree, c, val, cursor, spans, proj);
            }
            let NodeTiming::Mg { duration } = val.timings[id as usize] else {
                panic!("node {id} is manual but its timing is not");
            };
            spans[id as usize] = Span::new(*cursor, *cursor + duration);
            *cursor += duration;
            for &c in right {
                lay_out(tree, c, val, cursor, spans, proj);
            }
        }
        Children::Nmg { marked } => lay_out(tree, *marked, val, cursor, spans, proj),
    }
    proj[id as usize] = Span::new(start, *cursor);
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintViolation {
    TimingCount { timings: usize, nodes: usize },
    TimingKind { node: NodeId },
    EmptySpan { node: NodeId },
    Duration { node: NodeId, expected: f64, actual: f64 },
    Overlap { first: NodeId, second: NodeId },
    Order { node: NodeId },
    Sync { node: NodeId },
    NotNormalized { min_start: f64 },
    Length { expected: f64, actual: f64 },
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ConstraintViolation::*;
        match self {
            TimingCount { timings, nodes } => write!(f, "{timings} timings for {nodes} nodes"),
            TimingKind { node } => write!(f, "node {node} timing kind differs from its unit's sync type"),
            EmptySpan { node } => write!(f, "node {node} span is empty or reversed"),
            Duration { node, expected, actual } => {
                write!(f, "node {node} lasts {actual} s instead of its drawn {expected} s")
            }
            Overlap { first, second } => write!(f, "manual gestures {first} and {second} overlap"),
            Order { node } => write!(f, "elements of node {node} are out of rule order"),
            Sync { node } => write!(f, "marker {node} is not synchronised to its dependent's projection"),
            NotNormalized { min_start } => write!(f, "earliest start is {min_start}, not 0"),
            Length { expected, actual } => write!(f, "document length {actual} differs from latest end {expected}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintReport {
    pub violations: Vec<ConstraintViolation>,
    /// Clamped markers whose span does not match their equations.
    pub warnings: Vec<NodeId>,
}

impl ConstraintReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies a solution against the full constraint set, without reusing the
/// solver: projections are rebuilt from the solution's own manual spans.
pub fn check_constraints(tree: &SyntaxTree, val: &RelativeValuation, sol: &TemporalSolution) -> ConstraintReport {
    use ConstraintViolation as V;
    let mut report = ConstraintReport::default();
    let out = &mut report.violations;
    let n = tree.len();
    if val.timings.len() != n || sol.spans.len() != n {
        out.push(V::TimingCount { timings: val.timings.len().min(sol.spans.len()), nodes: n });
        return report;
    }

    for node in &tree.nodes {
        let i = node.id as usize;
        if val.timings[i].sync() != node.unit.sync {
            out.push(V::TimingKind { node: node.id });
        }
        let s = sol.spans[i];
        if s.end.partial_cmp(&s.start) != Some(core::cmp::Ordering::Greater) {
            out.push(V::EmptySpan { node: node.id });
        }
        if let NodeTiming::Mg { duration } = val.timings[i] {
            if (s.len() - duration).abs() > TOLERANCE {
                out.push(V::Duration { node: node.id, expected: duration, actual: s.len() });
            }
        }
    }
    if !out.is_empty() {
        return report;
    }

    let mut manual: Vec<NodeId> = tree.nodes.iter().filter(|n| n.unit.sync == SyncType::Mg).map(|n| n.id).collect();
    manual.sort_by(|a, b| sol.spans[*a as usize].start.total_cmp(&sol.spans[*b as usize].start));
    for w in manual.windows(2) {
        if sol.spans[w[0] as usize].end > sol.spans[w[1] as usize].start + TOLERANCE {
            report.violations.push(V::Overlap { first: w[0], second: w[1] });
        }
    }

    let proj = projections(tree, &sol.spans);
    for node in &tree.nodes {
        let i = node.id as usize;
        match &node.children {
            Children::Mg { left, right } => {
                let seq: Vec<Option<Span>> = left
                    .iter()
                    .map(|c| proj[*c as usize])
                    .chain(core::iter::once(Some(sol.spans[i])))
                    .chain(right.iter().map(|c| proj[*c as usize]))
                    .collect();
                let ordered = seq.windows(2).all(|w| match (w[0], w[1]) {
                    (Some(a), Some(b)) => a.end <= b.start + TOLERANCE,
                    _ => false,
                });
                if !ordered {
                    report.violations.push(V::Order { node: node.id });
                }
            }
            Children::Nmg { marked } => {
                let expected = proj[*marked as usize].and_then(|p| val.timings[i].marker_span(p));
                let s = sol.spans[i];
                let matches = expected
                    .is_some_and(|e| (e.start - s.start).abs() <= TOLERANCE && (e.end - s.end).abs() <= TOLERANCE);
                if !matches {
                    if sol.clamped.contains(&node.id) {
                        report.warnings.push(node.id);
                    } else {
                        report.violations.push(V::Sync { node: node.id });
                    }
                }
            }
        }
    }

    let out = &mut report.violations;
    let min = sol.spans.iter().map(|s| s.start).fold(f64::INFINITY, f64::min);
    if min.abs() > TOLERANCE {
        out.push(V::NotNormalized { min_start: min });
    }
    let max = sol.spans.iter().map(|s| s.end).fold(f64::NEG_INFINITY, f64::max);
    if (max - sol.length).abs() > TOLERANCE {
        out.push(V::Length { expected: max, actual: sol.length });
    }
    report
}

/// Hull of the manual spans under each node, from the spans alone.
fn projections(tree: &SyntaxTree, spans: &[Span]) -> Vec<Option<Span>> {
    let mut proj: Vec<Option<Span>> = vec![None; tree.len()];
    // Post-order with an explicit stack: (node, children done).
    let mut stack = vec![(tree.root, false)];
    while let Some((id, done)) = stack.pop() {
        let node = tree.node(id);
        if !done {
            stack.push((id, true));
            stack.extend(node.children.iter().map(|c| (c, false)));
            continue;
        }
        let own = (node.unit.sync == SyncType::Mg).then_some(spans[id as usize]);
        proj[id as usize] = node.children.iter().filter_map(|c| proj[c as usize]).chain(own).reduce(Span::hull);
    }
    proj
}
