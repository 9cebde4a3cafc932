//! Grammar data model: categories, Hays-style rules for manual gestures,
//! single-dependent marker rules for non-manual gestures, and unit
//! inventories.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::params::GenParams;

pub type RuleId = u32;

/// Index of a category. Categories of a grammar are numbered `0..n` in
/// declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryId(pub u32);

impl CategoryId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CategoryKind {
    #[serde(rename = "MG")]
    Mg,
    #[serde(rename = "NMG")]
    Nmg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Category {
    pub id: CategoryId,
    pub label: String,
    pub kind: CategoryKind,
}

/// How a unit relates in time to the material it governs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SyncType {
    /// Manual gesture: occupies its own slot in the manual sequence.
    #[serde(rename = "MG")]
    Mg,
    /// Marker held over the whole projection of its dependent.
    #[serde(rename = "NMG_FULL")]
    NmgFull,
    /// Marker emitted at the beginning of the projection.
    #[serde(rename = "NMG_START")]
    NmgStart,
    /// Marker emitted at the end of the projection.
    #[serde(rename = "NMG_END")]
    NmgEnd,
}

impl SyncType {
    pub const ALL: [SyncType; 4] = [SyncType::Mg, SyncType::NmgFull, SyncType::NmgStart, SyncType::NmgEnd];

    pub fn kind(self) -> CategoryKind {
        match self {
            SyncType::Mg => CategoryKind::Mg,
            _ => CategoryKind::Nmg,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SyncType::Mg => "MG",
            SyncType::NmgFull => "NMG_FULL",
            SyncType::NmgStart => "NMG_START",
            SyncType::NmgEnd => "NMG_END",
        }
    }

    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SyncType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One position of an MG rule's element sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Head,
    Dep(CategoryId),
}

/// `X(Y-n, ..., Y-1, *, Y1, ..., Ym)`: the head takes the place of the star
/// among its ordered dependents. No dependents is the leaf rule `X()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgRule {
    pub id: RuleId,
    pub head: CategoryId,
    pub left: Vec<CategoryId>,
    pub right: Vec<CategoryId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation_of: Option<RuleId>,
}

impl MgRule {
    pub fn leaf(id: RuleId, head: CategoryId) -> Self {
        MgRule { id, head, left: Vec::new(), right: Vec::new(), permutation_of: None }
    }

    pub fn is_leaf(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    pub fn dependents(&self) -> impl Iterator<Item = CategoryId> + '_ {
        self.left.iter().chain(self.right.iter()).copied()
    }

    pub fn arity(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn elements(&self) -> Vec<Element> {
        let mut out = Vec::with_capacity(self.arity() + 1);
        out.extend(self.left.iter().map(|&c| Element::Dep(c)));
        out.push(Element::Head);
        out.extend(self.right.iter().map(|&c| Element::Dep(c)));
        out
    }

    /// Rebuilds a rule from an element sequence containing exactly one head.
    pub fn from_elements(id: RuleId, head: CategoryId, elements: &[Element]) -> Self {
        let star = elements.iter().position(|e| *e == Element::Head).expect("element sequence has a head slot");
        let deps = |s: &[Element]| {
            s.iter()
                .filter_map(|e| match e {
                    Element::Dep(c) => Some(*c),
                    Element::Head => None,
                })
                .collect()
        };
        MgRule { id, head, left: deps(&elements[..star]), right: deps(&elements[star + 1..]), permutation_of: None }
    }

    fn sorted_dependents(&self) -> Vec<CategoryId> {
        let mut v: Vec<_> = self.dependents().collect();
        v.sort_unstable();
        v
    }
}

/// `X(Y)`: a marker category governing exactly one dependent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmgRule {
    pub id: RuleId,
    pub head: CategoryId,
    pub dependent: CategoryId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Unit {
    pub id: u32,
    pub category: CategoryId,
    pub sync: SyncType,
    /// Gamma scale (seconds) for this unit's durations.
    pub duration_scale: f64,
}

/// Borrowed view of either rule form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleRef<'a> {
    Mg(&'a MgRule),
    Nmg(&'a NmgRule),
}

impl<'a> RuleRef<'a> {
    pub fn id(self) -> RuleId {
        match self {
            RuleRef::Mg(r) => r.id,
            RuleRef::Nmg(r) => r.id,
        }
    }

    pub fn head(self) -> CategoryId {
        match self {
            RuleRef::Mg(r) => r.head,
            RuleRef::Nmg(r) => r.head,
        }
    }

    pub fn dependents(self) -> impl Iterator<Item = CategoryId> + 'a {
        let (mg, nmg) = match self {
            RuleRef::Mg(r) => (Some(r), None),
            RuleRef::Nmg(r) => (None, Some(r.dependent)),
        };
        mg.into_iter().flat_map(|r| r.dependents()).chain(nmg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grammar {
    pub categories: Vec<Category>,
    pub mg_rules: Vec<MgRule>,
    pub nmg_rules: Vec<NmgRule>,
    /// Sorted by category, then unit id.
    pub units: Vec<Unit>,
    pub root: CategoryId,
    pub params: GenParams,
}

impl Grammar {
    pub fn category(&self, id: CategoryId) -> Option<&Category> {
        self.categories.get(id.index()).filter(|c| c.id == id)
    }

    pub fn kind(&self, id: CategoryId) -> Option<CategoryKind> {
        self.category(id).map(|c| c.kind)
    }

    pub fn label(&self, id: CategoryId) -> Option<&str> {
        self.category(id).map(|c| c.label.as_str())
    }

    pub fn category_by_label(&self, label: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.label == label)
    }

    pub fn rules(&self) -> impl Iterator<Item = RuleRef<'_>> {
        self.mg_rules.iter().map(RuleRef::Mg).chain(self.nmg_rules.iter().map(RuleRef::Nmg))
    }

    pub fn rule(&self, id: RuleId) -> Option<RuleRef<'_>> {
        self.rules().find(|r| r.id() == id)
    }

    pub fn rules_of(&self, cat: CategoryId) -> impl Iterator<Item = RuleRef<'_>> {
        self.rules().filter(move |r| r.head() == cat)
    }

    pub fn units_of(&self, cat: CategoryId) -> impl Iterator<Item = &Unit> {
        self.units.iter().filter(move |u| u.category == cat)
    }

    pub fn unit(&self, id: u32) -> Option<&Unit> {
        self.units.iter().find(|u| u.id == id)
    }

    pub fn has_leaf_rule(&self, cat: CategoryId) -> bool {
        self.mg_rules.iter().any(|r| r.head == cat && r.is_leaf())
    }

    pub fn next_rule_id(&self) -> RuleId {
        self.rules().map(|r| r.id() + 1).max().unwrap_or(0)
    }

    /// Appends an empty rule for `cat` and returns its id.
    pub fn add_leaf_rule(&mut self, cat: CategoryId) -> RuleId {
        let id = self.next_rule_id();
        self.mg_rules.push(MgRule::leaf(id, cat));
        id
    }

    pub fn rule_count(&self) -> usize {
        self.mg_rules.len() + self.nmg_rules.len()
    }

    /// FNV-1a over the grammar's structure (not its parameters). Stable
    /// across platforms; used to tie trees back to the grammar they came
    /// from.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        for c in &self.categories {
            h.u32(c.id.0);
            h.bytes(c.label.as_bytes());
            h.u32(c.kind as u32);
        }
        for r in &self.mg_rules {
            h.u32(r.id);
            h.u32(r.head.0);
            h.u32(r.left.len() as u32);
            r.left.iter().for_each(|c| h.u32(c.0));
            h.u32(r.right.len() as u32);
            r.right.iter().for_each(|c| h.u32(c.0));
            h.u32(r.permutation_of.map_or(u32::MAX, |p| p));
        }
        for r in &self.nmg_rules {
            h.u32(r.id);
            h.u32(r.head.0);
            h.u32(r.dependent.0);
        }
        for u in &self.units {
            h.u32(u.id);
            h.u32(u.category.0);
            h.u32(u.sync as u32);
            h.u64(u.duration_scale.to_bits());
        }
        h.u32(self.root.0);
        h.0
    }

    /// Checks that every rule refers to declared categories. This is the
    /// minimum needed by the height analysis and derivation.
    pub fn check_references(&self) -> Result<(), GrammarError> {
        for r in self.rules() {
            if self.category(r.head()).is_none() {
                return Err(GrammarError::Dangling { rule: r.id(), category: r.head() });
            }
            if let Some(c) = r.dependents().find(|&c| self.category(c).is_none()) {
                return Err(GrammarError::Dangling { rule: r.id(), category: c });
            }
        }
        Ok(())
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn bytes(&mut self, b: &[u8]) {
        for &x in b {
            self.0 ^= u64::from(x);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.u32(b.len() as u32);
    }
    fn u32(&mut self, v: u32) {
        for x in v.to_le_bytes() {
            self.0 ^= u64::from(x);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    fn u64(&mut self, v: u64) {
        self.u32(v as u32);
        self.u32((v >> 32) as u32);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("rule {rule} references undeclared category {category}")]
    Dangling { rule: RuleId, category: CategoryId },
}

/// One broken grammar invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum GrammarViolation {
    CategoryIndex { position: usize, id: CategoryId },
    DuplicateLabel(String),
    DuplicateRuleId(RuleId),
    DuplicateUnitId(u32),
    DanglingReference { rule: RuleId, category: CategoryId },
    KindMismatch { rule: RuleId, head: CategoryId, expected: CategoryKind },
    BadPermutationLink { rule: RuleId },
    EmptyUnitInventory(CategoryId),
    UnitUnknownCategory { unit: u32, category: CategoryId },
    UnitSyncMismatch { unit: u32 },
    UnitBadScale { unit: u32 },
    UnitsUnsorted { unit: u32 },
    RootUnknown(CategoryId),
    RootNotMg(CategoryId),
}

impl fmt::Display for GrammarViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use GrammarViolation::*;
        match self {
            CategoryIndex { position, id } => write!(f, "category at position {position} has id {id}"),
            DuplicateLabel(l) => write!(f, "duplicate category label {l:?}"),
            DuplicateRuleId(r) => write!(f, "duplicate rule id {r}"),
            DuplicateUnitId(u) => write!(f, "duplicate unit id {u}"),
            DanglingReference { rule, category } => {
                write!(f, "dangling reference: rule {rule} mentions undeclared category {category}")
            }
            KindMismatch { rule, head, expected } => {
                write!(f, "kind mismatch: rule {rule} needs a {expected:?} head but {head} is not")
            }
            BadPermutationLink { rule } => {
                write!(f, "rule {rule} is marked as a permutation of a rule with a different head or dependents")
            }
            EmptyUnitInventory(c) => write!(f, "category {c} has no units"),
            UnitUnknownCategory { unit, category } => {
                write!(f, "unit {unit} belongs to undeclared category {category}")
            }
            UnitSyncMismatch { unit } => write!(f, "unit {unit} has a sync type that contradicts its category kind"),
            UnitBadScale { unit } => write!(f, "unit {unit} has a non-positive duration scale"),
            UnitsUnsorted { unit } => write!(f, "unit {unit} is out of (category, id) order"),
            RootUnknown(c) => write!(f, "root {c} is not a declared category"),
            RootNotMg(c) => write!(f, "root {c} is not a manual-gesture category"),
        }
    }
}

/// Lists every broken grammar invariant. An empty list means the grammar is
/// well formed. Finiteness is a separate question (see [`crate::height`]).
pub fn validate_grammar(g: &Grammar) -> Vec<GrammarViolation> {
    use GrammarViolation as V;
    let mut out = Vec::new();

    let mut labels = BTreeSet::new();
    for (i, c) in g.categories.iter().enumerate() {
        if c.id.index() != i {
            out.push(V::CategoryIndex { position: i, id: c.id });
        }
        if !labels.insert(c.label.as_str()) {
            out.push(V::DuplicateLabel(c.label.clone()));
        }
    }

    let mut rule_ids = BTreeSet::new();
    for r in g.rules() {
        if !rule_ids.insert(r.id()) {
            out.push(V::DuplicateRuleId(r.id()));
        }
        for c in core::iter::once(r.head()).chain(r.dependents()) {
            if g.category(c).is_none() {
                out.push(V::DanglingReference { rule: r.id(), category: c });
            }
        }
        let expected = match r {
            RuleRef::Mg(_) => CategoryKind::Mg,
            RuleRef::Nmg(_) => CategoryKind::Nmg,
        };
        if g.kind(r.head()).is_some_and(|k| k != expected) {
            out.push(V::KindMismatch { rule: r.id(), head: r.head(), expected });
        }
    }

    for r in &g.mg_rules {
        if let Some(orig) = r.permutation_of {
            let ok = g.mg_rules.iter().any(|o| {
                o.id == orig && o.id != r.id && o.head == r.head && o.sorted_dependents() == r.sorted_dependents()
            });
            if !ok {
                out.push(V::BadPermutationLink { rule: r.id });
            }
        }
    }

    let mut unit_ids = BTreeSet::new();
    let mut has_units = alloc::vec![false; g.categories.len()];
    let mut prev: Option<(CategoryId, u32)> = None;
    for u in &g.units {
        if !unit_ids.insert(u.id) {
            out.push(V::DuplicateUnitId(u.id));
        }
        if prev.is_some_and(|p| p >= (u.category, u.id)) {
            out.push(V::UnitsUnsorted { unit: u.id });
        }
        prev = Some((u.category, u.id));
        match g.kind(u.category) {
            None => out.push(V::UnitUnknownCategory { unit: u.id, category: u.category }),
            Some(k) => {
                has_units[u.category.index()] = true;
                if u.sync.kind() != k {
                    out.push(V::UnitSyncMismatch { unit: u.id });
                }
            }
        }
        if !(u.duration_scale > 0.0 && u.duration_scale.is_finite()) {
            out.push(V::UnitBadScale { unit: u.id });
        }
    }
    for (i, has) in has_units.iter().enumerate() {
        if !has {
            out.push(V::EmptyUnitInventory(g.categories[i].id));
        }
    }

    match g.kind(g.root) {
        None => out.push(V::RootUnknown(g.root)),
        Some(CategoryKind::Nmg) => out.push(V::RootNotMg(g.root)),
        Some(CategoryKind::Mg) => {}
    }
    out
}

/// Compact builders for hand-written grammars in tests and examples.
pub mod build {
    use super::*;
    use alloc::string::ToString;

    /// Starts a grammar whose categories are given as `(label, kind)`;
    /// category ids follow the order given. The first category is the root.
    pub fn grammar(cats: &[(&str, CategoryKind)]) -> Grammar {
        Grammar {
            categories: cats
                .iter()
                .enumerate()
                .map(|(i, (l, k))| Category { id: CategoryId(i as u32), label: l.to_string(), kind: *k })
                .collect(),
            mg_rules: Vec::new(),
            nmg_rules: Vec::new(),
            units: Vec::new(),
            root: CategoryId(0),
            params: GenParams::default(),
        }
    }

    impl Grammar {
        fn cat(&self, label: &str) -> CategoryId {
            self.category_by_label(label).unwrap_or_else(|| panic!("unknown label {label}")).id
        }

        /// Adds `head(left.., *, right..)`.
        pub fn with_mg(mut self, head: &str, left: &[&str], right: &[&str]) -> Self {
            let id = self.next_rule_id();
            let rule = MgRule {
                id,
                head: self.cat(head),
                left: left.iter().map(|l| self.cat(l)).collect(),
                right: right.iter().map(|l| self.cat(l)).collect(),
                permutation_of: None,
            };
            self.mg_rules.push(rule);
            self
        }

        /// Adds `head(dep)`.
        pub fn with_nmg(mut self, head: &str, dep: &str) -> Self {
            let id = self.next_rule_id();
            let rule = NmgRule { id, head: self.cat(head), dependent: self.cat(dep) };
            self.nmg_rules.push(rule);
            self
        }

        /// Gives every category one unit (MG units for MG categories,
        /// `nmg_sync` for markers) with the given duration scale.
        pub fn with_units(mut self, nmg_sync: SyncType, scale: f64) -> Self {
            self.units = self
                .categories
                .iter()
                .map(|c| Unit {
                    id: c.id.0,
                    category: c.id,
                    sync: match c.kind {
                        CategoryKind::Mg => SyncType::Mg,
                        CategoryKind::Nmg => nmg_sync,
                    },
                    duration_scale: scale,
                })
                .collect();
            self
        }
    }
}
