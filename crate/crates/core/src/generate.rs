//! Random grammar generation.
//!
//! The pipeline is fixed: draw categories and kinds, draw rules, inject
//! permutation rules, repair heights, then draw unit inventories. All
//! randomness comes from one generator seeded with `params.seed`.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::grammar::SyncType;
use crate::grammar::{Category, CategoryId, CategoryKind, Grammar, MgRule, NmgRule, RuleRef, Unit};
use crate::height::{compute_heights, Height, HeightMap};
use crate::params::{GenParams, ParamError};
use crate::SeededRng;

/// Lower bound for a unit's duration scale, in seconds.
pub const MIN_DURATION_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Grammar(#[from] crate::grammar::GrammarError),
    /// No rule addition can bring the grammar under the limit, typically
    /// because a cycle runs through marker categories only.
    #[error("cannot repair grammar to height limit {limit}: {detail}")]
    RepairFailure { limit: u32, detail: alloc::string::String },
    #[error("gave up after {attempts} rule draws that could not be repaired to height limit {limit}")]
    Exhausted { attempts: u32, limit: u32 },
}

pub fn generate_grammar(params: &GenParams) -> Result<Grammar, GenError> {
    params.validate()?;
    let mut rng = SeededRng::seed_from_u64(params.seed);

    let categories: Vec<Category> = (0..params.num_categories)
        .map(|i| {
            // The root (category 0) is always manual.
            let kind =
                if i > 0 && rng.random_bool(params.nmg_category_ratio) { CategoryKind::Nmg } else { CategoryKind::Mg };
            let prefix = match kind {
                CategoryKind::Mg => "M",
                CategoryKind::Nmg => "N",
            };
            Category { id: CategoryId(i), label: format!("{prefix}{i}"), kind }
        })
        .collect();

    let skeleton = Grammar {
        categories,
        mg_rules: Vec::new(),
        nmg_rules: Vec::new(),
        units: Vec::new(),
        root: CategoryId(0),
        params: params.clone(),
    };

    let attempts = params.max_redraws + 1;
    for _ in 0..attempts {
        let mut g = skeleton.clone();
        draw_rules(&mut g, params, &mut rng);
        let g = inject_permutations(g, params.permutation_prob, &mut rng);
        match enforce_height(g, params.height_limit) {
            Ok(mut g) => {
                g.units = generate_units(&g.categories, params, &mut rng);
                return Ok(g);
            }
            Err(GenError::RepairFailure { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GenError::Exhausted { attempts, limit: params.height_limit })
}

fn draw_rules<R: Rng + ?Sized>(g: &mut Grammar, params: &GenParams, rng: &mut R) {
    let n = g.categories.len() as u32;
    let mut next_id = 0;
    for cat in 0..n {
        let head = CategoryId(cat);
        let count = params.rules_per_category.sample(rng);
        match g.categories[cat as usize].kind {
            CategoryKind::Mg => {
                for _ in 0..count {
                    let arity =
                        if rng.random_bool(params.leaf_rule_prob) { 0 } else { params.deps_per_rule.sample(rng) };
                    let star = match &params.head_position {
                        None => rng.random_range(0..=arity),
                        Some(d) => d.sample(rng).min(arity),
                    };
                    let deps: Vec<CategoryId> = (0..arity).map(|_| CategoryId(rng.random_range(0..n))).collect();
                    let (left, right) = deps.split_at(star as usize);
                    g.mg_rules.push(MgRule {
                        id: next_id,
                        head,
                        left: left.to_vec(),
                        right: right.to_vec(),
                        permutation_of: None,
                    });
                    next_id += 1;
                }
            }
            CategoryKind::Nmg => {
                // A marker category without rules could never be derived from.
                for _ in 0..count.max(1) {
                    let dependent = CategoryId(rng.random_range(0..n));
                    g.nmg_rules.push(NmgRule { id: next_id, head, dependent });
                    next_id += 1;
                }
            }
        }
    }
}

/// Adds, with probability `p_perm` per original MG rule of at least two
/// elements, one rule whose element sequence (head slot included) is a
/// uniformly drawn reordering different from the original.
///
/// Rules that are themselves permutations are not permuted again.
pub fn inject_permutations<R: Rng + ?Sized>(mut g: Grammar, p_perm: f64, rng: &mut R) -> Grammar {
    let originals: Vec<usize> = (0..g.mg_rules.len())
        .filter(|&i| g.mg_rules[i].permutation_of.is_none() && g.mg_rules[i].arity() >= 1)
        .collect();
    let mut next_id = g.next_rule_id();
    for i in originals {
        if !rng.random_bool(p_perm) {
            continue;
        }
        let orig = &g.mg_rules[i];
        let elements = orig.elements();
        let mut perm = elements.clone();
        // The head slot is unique, so a different order always exists.
        // Shuffling then rejecting the identity order is uniform over the
        // distinct sequences, repeated dependents included.
        loop {
            perm.shuffle(rng);
            if perm != elements {
                break;
            }
        }
        let mut rule = MgRule::from_elements(next_id, orig.head, &perm);
        rule.permutation_of = Some(orig.id);
        next_id += 1;
        g.mg_rules.push(rule);
    }
    g
}

/// Adds empty rules until every category is finite with height at most
/// `limit`. Never removes anything.
///
/// Each round computes heights and picks repair targets:
/// 1. MG categories whose height equals the limit;
/// 2. for a marker category at the limit, the first MG category down its
///    shallowest dependent chain (markers cannot take empty rules);
/// 3. if neither yields a target, the lowest-index MG category that is
///    infinite or over the limit;
/// 4. failing that, every marker category still over the limit gets a
///    marker rule onto the shallowest MG category below the limit.
///
/// Targets that already own an empty rule are skipped. Steps 1 to 3 add an
/// empty rule to a category without one and step 4 brings every marker it
/// touches to at most the limit, so the loop ends. With `limit` 1 no marker
/// can fit and the grammar may be unrepairable.
pub fn enforce_height(mut g: Grammar, limit: u32) -> Result<Grammar, GenError> {
    if limit == 0 {
        return Err(ParamError { field: "height_limit", reason: "must be at least 1" }.into());
    }
    loop {
        let heights = compute_heights(&g)?;
        let over = |h: Height| h > Height::Finite(limit);
        if heights.iter().all(|(_, h)| !over(h)) {
            return Ok(g);
        }

        let mut targets: Vec<CategoryId> = Vec::new();
        let push = |g: &Grammar, c: CategoryId, targets: &mut Vec<CategoryId>| {
            if g.kind(c) == Some(CategoryKind::Mg) && !g.has_leaf_rule(c) && !targets.contains(&c) {
                targets.push(c);
            }
        };
        for (c, h) in heights.iter() {
            if h != Height::Finite(limit) {
                continue;
            }
            match g.kind(c) {
                Some(CategoryKind::Mg) => push(&g, c, &mut targets),
                Some(CategoryKind::Nmg) => {
                    if let Some(m) = first_mg_below(&g, &heights, c) {
                        push(&g, m, &mut targets);
                    }
                }
                None => unreachable!("references checked by compute_heights"),
            }
        }
        if targets.is_empty() {
            if let Some((c, _)) =
                heights.iter().find(|&(c, h)| over(h) && g.kind(c) == Some(CategoryKind::Mg) && !g.has_leaf_rule(c))
            {
                targets.push(c);
            }
        }
        if targets.is_empty() && limit >= 2 {
            let anchor = heights
                .iter()
                .filter(|&(c, h)| g.kind(c) == Some(CategoryKind::Mg) && h < Height::Finite(limit))
                .min_by_key(|&(c, h)| (h, c));
            if let Some((m, _)) = anchor {
                let stuck: Vec<CategoryId> = heights
                    .iter()
                    .filter(|&(c, h)| over(h) && g.kind(c) == Some(CategoryKind::Nmg))
                    .map(|(c, _)| c)
                    .collect();
                for c in &stuck {
                    let id = g.next_rule_id();
                    g.nmg_rules.push(NmgRule { id, head: *c, dependent: m });
                }
                if !stuck.is_empty() {
                    continue;
                }
            }
        }
        if targets.is_empty() {
            let stuck: Vec<_> = heights.iter().filter(|&(_, h)| over(h)).map(|(c, h)| format!("{c}={h}")).collect();
            return Err(GenError::RepairFailure {
                limit,
                detail: format!("no manual category can take an empty rule (over limit: {})", stuck.join(", ")),
            });
        }
        for c in targets {
            g.add_leaf_rule(c);
        }
    }
}

/// Follows the shallowest rule of a finite marker category down to the
/// first manual category.
fn first_mg_below(g: &Grammar, heights: &HeightMap, start: CategoryId) -> Option<CategoryId> {
    let mut cur = start;
    for _ in 0..=g.categories.len() {
        if g.kind(cur) == Some(CategoryKind::Mg) {
            return Some(cur);
        }
        let best = g.rules_of(cur).filter(|r| matches!(r, RuleRef::Nmg(_))).min_by_key(|r| heights.rule_height(*r))?;
        if !heights.rule_height(best).is_finite() {
            return None;
        }
        cur = best.dependents().next()?;
    }
    None
}

/// Draws unit inventories for the given categories. Unit ids are assigned
/// in category order starting at 0.
pub fn generate_units<R: Rng + ?Sized>(categories: &[Category], params: &GenParams, rng: &mut R) -> Vec<Unit> {
    let scale = Normal::new(params.duration_scale_mean, params.duration_scale_std).expect("validated params");
    let mut units = Vec::new();
    for cat in categories {
        let k = params.units_per_category.sample(rng).max(1);
        for _ in 0..k {
            let sync = match cat.kind {
                CategoryKind::Mg => SyncType::Mg,
                CategoryKind::Nmg => params.nmg_sync_ratios.sample(rng),
            };
            units.push(Unit {
                id: units.len() as u32,
                category: cat.id,
                sync,
                duration_scale: draw_scale(&scale, rng),
            });
        }
    }
    units
}

/// Normal draw truncated below at [`MIN_DURATION_SCALE`] by resampling.
fn draw_scale<R: Rng + ?Sized>(scale: &Normal<f64>, rng: &mut R) -> f64 {
    for _ in 0..64 {
        let s = scale.sample(rng);
        if s >= MIN_DURATION_SCALE {
            return s;
        }
    }
    MIN_DURATION_SCALE
}
