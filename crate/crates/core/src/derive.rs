//! Random derivation of dependency trees.
//!
//! Derivation expands categories top-down. To guarantee termination a rule
//! is only eligible at depth `d` (the root is at depth 1) when every
//! dependent's height is at most `limit - d`; among eligible rules the
//! choice is uniform. Once the category tree is complete each node draws a
//! unit uniformly from its category's inventory, in node order.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::grammar::{CategoryId, CategoryKind, Grammar, GrammarError, RuleId, RuleRef, Unit};
use crate::height::{compute_heights, Height, HeightMap};

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Children {
    Mg { left: Vec<NodeId>, right: Vec<NodeId> },
    Nmg { marked: NodeId },
}

impl Children {
    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        let (mg, nmg) = match self {
            Children::Mg { left, right } => (Some(left.iter().chain(right.iter()).copied()), None),
            Children::Nmg { marked } => (None, Some(*marked)),
        };
        mg.into_iter().flatten().chain(nmg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: NodeId,
    pub unit: Unit,
    pub category: CategoryId,
    pub rule: RuleId,
    pub children: Children,
}

/// Identifies the grammar a tree was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrammarRef {
    pub seed: u64,
    pub fingerprint: u64,
}

impl GrammarRef {
    pub fn of(g: &Grammar) -> Self {
        GrammarRef { seed: g.params.seed, fingerprint: g.fingerprint() }
    }
}

/// Nodes are numbered in pre-order and stored at their id.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxTree {
    pub nodes: Vec<TreeNode>,
    pub root: NodeId,
    pub grammar: GrammarRef,
}

impl SyntaxTree {
    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> u32 {
        let mut depth = vec![0u32; self.nodes.len()];
        let mut stack = vec![(self.root, 1u32)];
        let mut max = 0;
        while let Some((n, d)) = stack.pop() {
            depth[n as usize] = d;
            max = max.max(d);
            stack.extend(self.node(n).children.iter().map(|c| (c, d + 1)));
        }
        max
    }

    /// Parent of each node; `None` for the root.
    pub fn parents(&self) -> Vec<Option<NodeId>> {
        let mut parents = vec![None; self.nodes.len()];
        for n in &self.nodes {
            for c in n.children.iter() {
                if let Some(p) = parents.get_mut(c as usize) {
                    *p = Some(n.id);
                }
            }
        }
        parents
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeriveError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("grammar is not finite; category {0} has no finite derivation")]
    NotFinite(CategoryId),
    #[error("root category {0} is not declared")]
    UnknownRoot(CategoryId),
    #[error("root category {0} is not a manual-gesture category")]
    RootNotMg(CategoryId),
    #[error("category {0} has no units")]
    NoUnits(CategoryId),
    #[error("no eligible rule for category {category} at depth {depth}")]
    NoEligibleRule { category: CategoryId, depth: u32 },
}

/// Precomputed tables for repeated derivation from one grammar.
#[derive(Debug, Clone)]
pub struct Deriver<'g> {
    grammar: &'g Grammar,
    heights: HeightMap,
    limit: u32,
    rules: Vec<Vec<RuleRef<'g>>>,
    units: Vec<Vec<&'g Unit>>,
}

struct Pending {
    category: CategoryId,
    rule: RuleId,
    children: Children,
}

impl<'g> Deriver<'g> {
    /// Fails if the grammar is not finite. The depth limit is the grammar's
    /// `height_limit`, raised to its largest height for hand-built grammars
    /// that exceed it.
    pub fn new(grammar: &'g Grammar) -> Result<Self, DeriveError> {
        let heights = compute_heights(grammar)?;
        if let Some((c, _)) = heights.iter().find(|(_, h)| !h.is_finite()) {
            return Err(DeriveError::NotFinite(c));
        }
        let max = heights.max().finite().unwrap_or(0);
        let limit = grammar.params.height_limit.max(max);
        let n = grammar.categories.len();
        let mut rules = vec![Vec::new(); n];
        for r in grammar.rules() {
            rules[r.head().index()].push(r);
        }
        let mut units = vec![Vec::new(); n];
        for u in &grammar.units {
            if let Some(slot) = units.get_mut(u.category.index()) {
                slot.push(u);
            }
        }
        Ok(Deriver { grammar, heights, limit, rules, units })
    }

    pub fn grammar(&self) -> &'g Grammar {
        self.grammar
    }

    pub fn depth_limit(&self) -> u32 {
        self.limit
    }

    pub fn heights(&self) -> &HeightMap {
        &self.heights
    }

    pub fn derive<R: Rng + ?Sized>(&self, root: CategoryId, rng: &mut R) -> Result<SyntaxTree, DeriveError> {
        match self.grammar.kind(root) {
            None => return Err(DeriveError::UnknownRoot(root)),
            Some(CategoryKind::Nmg) => return Err(DeriveError::RootNotMg(root)),
            Some(CategoryKind::Mg) => {}
        }
        let mut pending = Vec::new();
        self.expand(root, 1, rng, &mut pending)?;

        let mut nodes = Vec::with_capacity(pending.len());
        for (i, p) in pending.into_iter().enumerate() {
            let inventory = &self.units[p.category.index()];
            if inventory.is_empty() {
                return Err(DeriveError::NoUnits(p.category));
            }
            let unit = *inventory[rng.random_range(0..inventory.len())];
            nodes.push(TreeNode { id: i as NodeId, unit, category: p.category, rule: p.rule, children: p.children });
        }
        Ok(SyntaxTree { nodes, root: 0, grammar: GrammarRef::of(self.grammar) })
    }

    fn expand<R: Rng + ?Sized>(
        &self,
        category: CategoryId,
        depth: u32,
        rng: &mut R,
        out: &mut Vec<Pending>,
    ) -> Result<NodeId, DeriveError> {
        let budget = Height::Finite(self.limit.saturating_sub(depth));
        let eligible: Vec<RuleRef<'g>> = self.rules[category.index()]
            .iter()
            .copied()
            .filter(|r| r.dependents().all(|d| self.heights.get(d) <= budget))
            .collect();
        if eligible.is_empty() {
            return Err(DeriveError::NoEligibleRule { category, depth });
        }
        let rule = eligible[rng.random_range(0..eligible.len())];

        let id = out.len() as NodeId;
        out.push(Pending { category, rule: rule.id(), children: Children::Nmg { marked: 0 } });
        let children = match rule {
            RuleRef::Mg(r) => {
                let mut left = Vec::with_capacity(r.left.len());
                for &c in &r.left {
                    left.push(self.expand(c, depth + 1, rng, out)?);
                }
                let mut right = Vec::with_capacity(r.right.len());
                for &c in &r.right {
                    right.push(self.expand(c, depth + 1, rng, out)?);
                }
                Children::Mg { left, right }
            }
            RuleRef::Nmg(r) => Children::Nmg { marked: self.expand(r.dependent, depth + 1, rng, out)? },
        };
        out[id as usize].children = children;
        Ok(id)
    }
}

/// One-shot derivation. Prefer [`Deriver`] when deriving many trees.
pub fn derive_tree<R: Rng + ?Sized>(g: &Grammar, root: CategoryId, rng: &mut R) -> Result<SyntaxTree, DeriveError> {
    Deriver::new(g)?.derive(root, rng)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    NodeIdMismatch { position: usize, id: NodeId },
    ChildOutOfRange { node: NodeId, child: NodeId },
    MultipleParents { node: NodeId },
    RootHasParent,
    Unreachable { node: NodeId },
    UnknownRule { node: NodeId, rule: RuleId },
    HeadMismatch { node: NodeId, rule: RuleId },
    FormMismatch { node: NodeId, rule: RuleId },
    ChildrenMismatch { node: NodeId, rule: RuleId },
    UnknownUnit { node: NodeId, unit: u32 },
    UnitMismatch { node: NodeId, unit: u32 },
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TreeViolation::*;
        match self {
            NodeIdMismatch { position, id } => write!(f, "node at position {position} has id {id}"),
            ChildOutOfRange { node, child } => write!(f, "node {node} has out-of-range child {child}"),
            MultipleParents { node } => write!(f, "node {node} has more than one parent"),
            RootHasParent => f.write_str("root node has a parent"),
            Unreachable { node } => write!(f, "node {node} is not reachable from the root"),
            UnknownRule { node, rule } => write!(f, "node {node} cites unknown rule {rule}"),
            HeadMismatch { node, rule } => write!(f, "node {node} category differs from head of rule {rule}"),
            FormMismatch { node, rule } => write!(f, "node {node} children form does not fit rule {rule}"),
            ChildrenMismatch { node, rule } => {
                write!(f, "node {node} children categories or order differ from rule {rule}")
            }
            UnknownUnit { node, unit } => write!(f, "node {node} uses unknown unit {unit}"),
            UnitMismatch { node, unit } => write!(f, "node {node} unit {unit} differs from the grammar's unit"),
        }
    }
}

/// Checks that a tree is a well-formed tree and that every node is licensed
/// by its cited rule, children in rule order.
pub fn tree_conforms(tree: &SyntaxTree, g: &Grammar) -> Vec<TreeViolation> {
    use TreeViolation as V;
    let mut out = Vec::new();
    let n = tree.nodes.len();

    let mut parent_count = vec![0u32; n];
    for (i, node) in tree.nodes.iter().enumerate() {
        if node.id as usize != i {
            out.push(V::NodeIdMismatch { position: i, id: node.id });
        }
        for c in node.children.iter() {
            match parent_count.get_mut(c as usize) {
                Some(p) => *p += 1,
                None => out.push(V::ChildOutOfRange { node: node.id, child: c }),
            }
        }
    }
    for (i, &p) in parent_count.iter().enumerate() {
        if p > 1 {
            out.push(V::MultipleParents { node: i as NodeId });
        }
    }
    if (tree.root as usize) < n && parent_count[tree.root as usize] > 0 {
        out.push(V::RootHasParent);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![tree.root];
    while let Some(x) = stack.pop() {
        if let Some(s) = seen.get_mut(x as usize) {
            if !*s {
                *s = true;
                stack.extend(tree.nodes[x as usize].children.iter());
            }
        }
    }
    for (i, s) in seen.iter().enumerate() {
        if !s {
            out.push(V::Unreachable { node: i as NodeId });
        }
    }

    let cat_of = |c: NodeId| tree.nodes.get(c as usize).map(|n| n.category);
    for node in &tree.nodes {
        match g.unit(node.unit.id) {
            None => out.push(V::UnknownUnit { node: node.id, unit: node.unit.id }),
            Some(u) if *u != node.unit || u.category != node.category => {
                out.push(V::UnitMismatch { node: node.id, unit: node.unit.id })
            }
            Some(_) => {}
        }
        let Some(rule) = g.rule(node.rule) else {
            out.push(V::UnknownRule { node: node.id, rule: node.rule });
            continue;
        };
        if rule.head() != node.category {
            out.push(V::HeadMismatch { node: node.id, rule: node.rule });
        }
        let fits = match (rule, &node.children) {
            (RuleRef::Mg(r), Children::Mg { left, right }) => {
                let same = |cats: &[CategoryId], kids: &[NodeId]| {
                    cats.len() == kids.len() && cats.iter().zip(kids).all(|(c, k)| cat_of(*k) == Some(*c))
                };
                Some(same(&r.left, left) && same(&r.right, right))
            }
            (RuleRef::Nmg(r), Children::Nmg { marked }) => Some(cat_of(*marked) == Some(r.dependent)),
            _ => None,
        };
        match fits {
            None => out.push(V::FormMismatch { node: node.id, rule: node.rule }),
            Some(false) => out.push(V::ChildrenMismatch { node: node.id, rule: node.rule }),
            Some(true) => {}
        }
    }
    out
}
