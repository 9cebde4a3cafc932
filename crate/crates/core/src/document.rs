//! Annotated documents: one derived tree with solved spans, in the flat
//! shape stored in corpus files.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::derive::{Children, DeriveError, Deriver, GrammarRef, NodeId, SyntaxTree, TreeNode, TreeViolation};
use crate::grammar::{CategoryKind, Grammar, RuleId, SyncType};
use crate::temporal::{draw_valuation, solve, RelativeValuation, TemporalSolution};
use crate::SeededRng;

/// A time in whole microseconds. Serialised as decimal seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Micros(pub i64);

impl Micros {
    pub fn from_secs(s: f64) -> Self {
        Micros(libm::round(s * 1e6) as i64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:06}", a / 1_000_000, a % 1_000_000)
    }
}

impl Serialize for Micros {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_secs())
    }
}

impl<'de> Deserialize<'de> for Micros {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let secs = f64::deserialize(d)?;
        if !secs.is_finite() {
            return Err(de::Error::custom("time must be finite"));
        }
        Ok(Micros::from_secs(secs))
    }
}

/// Governor of a dependency: another node or the virtual root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    Root,
    Node(NodeId),
}

impl Serialize for Head {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Head::Root => s.serialize_str("ROOT"),
            Head::Node(n) => s.serialize_u32(*n),
        }
    }
}

impl<'de> Deserialize<'de> for Head {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct HeadVisitor;
        impl Visitor<'_> for HeadVisitor {
            type Value = Head;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a node id or \"ROOT\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Head, E> {
                u32::try_from(v).map(Head::Node).map_err(|_| E::custom("node id out of range"))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Head, E> {
                u32::try_from(v).map(Head::Node).map_err(|_| E::custom("node id out of range"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Head, E> {
                if v == "ROOT" {
                    Ok(Head::Root)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(HeadVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocUnit {
    pub node: NodeId,
    pub unit: u32,
    pub category: String,
    pub sync: SyncType,
    pub start: Micros,
    pub end: Micros,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dependency {
    pub head: Head,
    pub dependent: NodeId,
    pub rule: RuleId,
}

/// One corpus entry. Units are listed by node id; dependencies list every
/// node exactly once as a dependent, the root under [`Head::Root`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub seed: u64,
    pub units: Vec<DocUnit>,
    pub dependencies: Vec<Dependency>,
}

/// Seed of document `index` in a corpus with base seed `base`: the
/// `index + 1`-th output of a SplitMix64 stream started at `base`.
pub fn document_seed(base: u64, index: u64) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Everything produced for one document, before flattening.
#[derive(Debug, Clone)]
pub struct GeneratedDocument {
    pub tree: SyntaxTree,
    pub valuation: RelativeValuation,
    pub solution: TemporalSolution,
    pub document: AnnotatedDocument,
}

/// Derives a tree from the grammar root, draws and solves its timings, and
/// flattens the result. Fully determined by `seed`.
pub fn generate_document(
    deriver: &Deriver<'_>,
    doc_id: String,
    seed: u64,
    translation_std: f64,
) -> Result<GeneratedDocument, DeriveError> {
    let mut rng = SeededRng::seed_from_u64(seed);
    let grammar = deriver.grammar();
    let tree = deriver.derive(grammar.root, &mut rng)?;
    let mut valuation = draw_valuation(&tree, translation_std, &mut rng);
    let solution = solve(&tree, &mut valuation, translation_std, &mut rng);
    let document = AnnotatedDocument::from_solution(doc_id, seed, &tree, &solution, grammar);
    Ok(GeneratedDocument { tree, valuation, solution, document })
}

impl AnnotatedDocument {
    pub fn from_solution(
        doc_id: String,
        seed: u64,
        tree: &SyntaxTree,
        sol: &TemporalSolution,
        grammar: &Grammar,
    ) -> Self {
        let units = tree
            .nodes
            .iter()
            .map(|n| {
                let span = sol.spans[n.id as usize];
                DocUnit {
                    node: n.id,
                    unit: n.unit.id,
                    category: grammar.label(n.category).map(String::from).unwrap_or_default(),
                    sync: n.unit.sync,
                    start: Micros::from_secs(span.start),
                    end: Micros::from_secs(span.end),
                }
            })
            .collect();
        let parents = tree.parents();
        let dependencies = tree
            .nodes
            .iter()
            .map(|n| Dependency {
                head: parents[n.id as usize].map_or(Head::Root, Head::Node),
                dependent: n.id,
                rule: n.rule,
            })
            .collect();
        AnnotatedDocument { doc_id, seed, units, dependencies }
    }

    /// Gold head of every node, indexed by node id. `None` where the
    /// dependency list has no (or more than one) entry for a node.
    pub fn heads(&self) -> Vec<Option<Head>> {
        let mut heads = vec![None; self.units.len()];
        let mut count = vec![0u32; self.units.len()];
        for d in &self.dependencies {
            if let Some(h) = heads.get_mut(d.dependent as usize) {
                *h = Some(d.head);
                count[d.dependent as usize] += 1;
            }
        }
        for (h, c) in heads.iter_mut().zip(count) {
            if c != 1 {
                *h = None;
            }
        }
        heads
    }

    /// Number of nodes on the longest root-to-leaf path; 0 if the
    /// dependencies do not form a tree.
    pub fn depth(&self) -> u32 {
        let heads = self.heads();
        let mut best = 0;
        for start in 0..heads.len() {
            let mut d = 1;
            let mut cur = start;
            loop {
                match heads[cur] {
                    Some(Head::Root) => break,
                    Some(Head::Node(p)) if (p as usize) < heads.len() && d <= heads.len() => {
                        cur = p as usize;
                        d += 1;
                    }
                    _ => return 0,
                }
            }
            best = best.max(d as u32);
        }
        best
    }

    /// Rebuilds the syntax tree against `grammar`. Children of a manual head
    /// are ordered by the start of their projection and split around the
    /// head's own span. Run [`check_document`] first; this only fails on
    /// what it needs.
    pub fn to_tree(&self, grammar: &Grammar) -> Result<SyntaxTree, DocViolation> {
        let n = self.units.len();
        let mut kids: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut rules = vec![None; n];
        let mut root = None;
        for d in &self.dependencies {
            if d.dependent as usize >= n {
                return Err(DocViolation::UnknownNode { node: d.dependent });
            }
            rules[d.dependent as usize] = Some(d.rule);
            match d.head {
                Head::Root => root = Some(d.dependent),
                Head::Node(h) if (h as usize) < n => kids[h as usize].push(d.dependent),
                Head::Node(h) => return Err(DocViolation::UnknownNode { node: h }),
            }
        }
        let root = root.ok_or(DocViolation::RootCount(0))?;
        let proj = self.projections(&kids, root);

        let mut nodes = Vec::with_capacity(n);
        for (i, u) in self.units.iter().enumerate() {
            let unit = *grammar.unit(u.unit).ok_or(DocViolation::UnknownUnit { node: u.node, unit: u.unit })?;
            let rule = rules[i].ok_or(DocViolation::DependentCount { node: u.node, count: 0 })?;
            let mut children = kids[i].clone();
            children.sort_by_key(|c| proj[*c as usize].map(|p| p.0));
            let children = match grammar.kind(unit.category) {
                Some(CategoryKind::Mg) => {
                    let split = children
                        .iter()
                        .position(|c| proj[*c as usize].is_none_or(|p| p.0 >= u.start))
                        .unwrap_or(children.len());
                    let right = children.split_off(split);
                    Children::Mg { left: children, right }
                }
                _ => match children[..] {
                    [marked] => Children::Nmg { marked },
                    _ => return Err(DocViolation::MarkerChildren { node: u.node, count: children.len() }),
                },
            };
            nodes.push(TreeNode { id: u.node, unit, category: unit.category, rule, children });
        }
        Ok(SyntaxTree { nodes, root, grammar: GrammarRef::of(grammar) })
    }

    /// Hull of manual spans under each node, given child lists.
    fn projections(&self, kids: &[Vec<NodeId>], root: NodeId) -> Vec<Option<(Micros, Micros)>> {
        let n = self.units.len();
        let mut proj = vec![None; n];
        let mut visited = vec![false; n];
        let mut stack = vec![(root, false)];
        while let Some((id, done)) = stack.pop() {
            let i = id as usize;
            if !done {
                if visited[i] {
                    continue;
                }
                visited[i] = true;
                stack.push((id, true));
                stack.extend(kids[i].iter().map(|c| (*c, false)));
                continue;
            }
            let u = &self.units[i];
            let own = (u.sync == SyncType::Mg).then_some((u.start, u.end));
            proj[i] = kids[i]
                .iter()
                .filter_map(|c| proj[*c as usize])
                .chain(own)
                .reduce(|a: (Micros, Micros), b| (a.0.min(b.0), a.1.max(b.1)));
        }
        proj
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DocViolation {
    NodeOrder { position: usize, node: NodeId },
    EmptySpan { node: NodeId },
    NotNormalized { min_start: Micros },
    UnknownNode { node: NodeId },
    DependentCount { node: NodeId, count: usize },
    RootCount(usize),
    Unreachable { node: NodeId },
    Overlap { first: NodeId, second: NodeId },
    UnknownUnit { node: NodeId, unit: u32 },
    CategoryLabel { node: NodeId },
    SyncMismatch { node: NodeId },
    MarkerChildren { node: NodeId, count: usize },
    Tree(TreeViolation),
}

impl fmt::Display for DocViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DocViolation::*;
        match self {
            NodeOrder { position, node } => write!(f, "unit at position {position} has node id {node}"),
            EmptySpan { node } => write!(f, "node {node} span has end <= start"),
            NotNormalized { min_start } => write!(f, "earliest start is {min_start}, not 0"),
            UnknownNode { node } => write!(f, "dependency mentions unknown node {node}"),
            DependentCount { node, count } => write!(f, "node {node} is a dependent {count} times, expected once"),
            RootCount(n) => write!(f, "{n} ROOT dependencies, expected exactly one"),
            Unreachable { node } => write!(f, "node {node} is not reachable from the root"),
            Overlap { first, second } => write!(f, "manual gestures {first} and {second} overlap"),
            UnknownUnit { node, unit } => write!(f, "node {node} uses unit {unit}, unknown to the grammar"),
            CategoryLabel { node } => write!(f, "node {node} category label differs from its unit's category"),
            SyncMismatch { node } => write!(f, "node {node} sync type differs from its unit's"),
            MarkerChildren { node, count } => write!(f, "marker {node} has {count} dependents, expected one"),
            Tree(v) => write!(f, "{v}"),
        }
    }
}

/// Checks the invariants a stored document can be held to: a single-rooted
/// dependency tree over its nodes, non-empty spans starting at 0, and
/// non-overlapping manual gestures. With a grammar, also checks units and
/// that the rebuilt tree is licensed rule by rule, in order.
pub fn check_document(doc: &AnnotatedDocument, grammar: Option<&Grammar>) -> Vec<DocViolation> {
    use DocViolation as V;
    let mut out = Vec::new();
    let n = doc.units.len();
    for (i, u) in doc.units.iter().enumerate() {
        if u.node as usize != i {
            out.push(V::NodeOrder { position: i, node: u.node });
        }
        if u.end <= u.start {
            out.push(V::EmptySpan { node: u.node });
        }
    }
    if let Some(min) = doc.units.iter().map(|u| u.start).min() {
        if min != Micros(0) {
            out.push(V::NotNormalized { min_start: min });
        }
    }

    let mut dep_count = vec![0usize; n];
    let mut kids: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for d in &doc.dependencies {
        match dep_count.get_mut(d.dependent as usize) {
            Some(c) => *c += 1,
            None => out.push(V::UnknownNode { node: d.dependent }),
        }
        match d.head {
            Head::Root => roots.push(d.dependent),
            Head::Node(h) if (h as usize) < n => kids[h as usize].push(d.dependent),
            Head::Node(h) => out.push(V::UnknownNode { node: h }),
        }
    }
    for (i, &c) in dep_count.iter().enumerate() {
        if c != 1 {
            out.push(V::DependentCount { node: i as NodeId, count: c });
        }
    }
    if roots.len() != 1 {
        out.push(V::RootCount(roots.len()));
    }
    if let Some(&root) = roots.first() {
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            if let Some(s) = seen.get_mut(x as usize) {
                if !*s {
                    *s = true;
                    stack.extend(&kids[x as usize]);
                }
            }
        }
        for (i, s) in seen.iter().enumerate() {
            if !s {
                out.push(V::Unreachable { node: i as NodeId });
            }
        }
    }

    let mut manual: Vec<&DocUnit> = doc.units.iter().filter(|u| u.sync == SyncType::Mg).collect();
    manual.sort_by_key(|u| u.start);
    for w in manual.windows(2) {
        if w[0].end > w[1].start {
            out.push(V::Overlap { first: w[0].node, second: w[1].node });
        }
    }

    let Some(g) = grammar else { return out };
    for u in &doc.units {
        match g.unit(u.unit) {
            None => out.push(V::UnknownUnit { node: u.node, unit: u.unit }),
            Some(gu) => {
                if g.label(gu.category) != Some(u.category.as_str()) {
                    out.push(V::CategoryLabel { node: u.node });
                }
                if gu.sync != u.sync {
                    out.push(V::SyncMismatch { node: u.node });
                }
            }
        }
    }
    if out.is_empty() {
        match doc.to_tree(g) {
            Ok(tree) => out.extend(crate::derive::tree_conforms(&tree, g).into_iter().map(V::Tree)),
            Err(v) => out.push(v),
        }
    }
    out
}
