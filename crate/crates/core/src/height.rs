//! Height analysis.
//!
//! The height of a category is the depth of its shallowest finite
//! derivation:
//!
//! ```text
//! H(C) = 1 + min over rules r of C ( max over dependents d of r ( H(d) ) )
//! ```
//!
//! with the max over no dependents being 0, so a category owning the empty
//! rule has height 1. Categories with no finite derivation get
//! [`Height::Infinite`]. A grammar is finite exactly when every height is.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::grammar::{CategoryId, Grammar, GrammarError, RuleRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Height {
    Finite(u32),
    Infinite,
}

impl Height {
    pub fn is_finite(self) -> bool {
        matches!(self, Height::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Height::Finite(h) => Some(h),
            Height::Infinite => None,
        }
    }
}

impl fmt::Display for Height {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Height::Finite(h) => write!(f, "{h}"),
            Height::Infinite => f.write_str("inf"),
        }
    }
}

/// Heights indexed by category id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightMap(Vec<Height>);

impl HeightMap {
    pub fn get(&self, c: CategoryId) -> Height {
        self.0[c.index()]
    }

    pub fn as_slice(&self) -> &[Height] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (CategoryId, Height)> + '_ {
        self.0.iter().enumerate().map(|(i, h)| (CategoryId(i as u32), *h))
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|h| h.is_finite())
    }

    /// Largest height; `Infinite` if any category is.
    pub fn max(&self) -> Height {
        self.0.iter().copied().max().unwrap_or(Height::Finite(0))
    }

    /// Height a rule gives its head: one more than its highest dependent.
    pub fn rule_height(&self, rule: RuleRef<'_>) -> Height {
        let mut worst = 0;
        for d in rule.dependents() {
            match self.get(d) {
                Height::Finite(h) => worst = worst.max(h),
                Height::Infinite => return Height::Infinite,
            }
        }
        Height::Finite(worst + 1)
    }
}

/// Computes the least fixpoint of the height equations by relaxation.
/// Each round can only lower values, and a value that is still infinite
/// after `n` rounds has no finite derivation.
pub fn compute_heights(g: &Grammar) -> Result<HeightMap, GrammarError> {
    g.check_references()?;
    let mut map = HeightMap(vec![Height::Infinite; g.categories.len()]);
    loop {
        let mut changed = false;
        for rule in g.rules() {
            let h = map.rule_height(rule);
            let slot = &mut map.0[rule.head().index()];
            if h < *slot {
                *slot = h;
                changed = true;
            }
        }
        if !changed {
            return Ok(map);
        }
    }
}

pub fn is_finite(g: &Grammar) -> Result<bool, GrammarError> {
    Ok(compute_heights(g)?.all_finite())
}

#[cfg(test)]
mod tests {
    use super::Height::{Finite, Infinite};
    use super::*;
    use crate::grammar::build::grammar;
    use crate::grammar::CategoryKind::{Mg, Nmg};

    fn heights(g: &Grammar) -> Vec<Height> {
        compute_heights(g).unwrap().0
    }

    #[test]
    fn leaf_only() {
        let g = grammar(&[("N", Mg)]).with_mg("N", &[], &[]);
        assert_eq!(heights(&g), [Finite(1)]);
        assert!(is_finite(&g).unwrap());
    }

    #[test]
    fn one_step() {
        let g = grammar(&[("S", Mg), ("N", Mg)]).with_mg("S", &["N"], &["N"]).with_mg("N", &[], &[]);
        assert_eq!(heights(&g), [Finite(2), Finite(1)]);
        assert!(is_finite(&g).unwrap());
    }

    #[test]
    fn mutual_cycle_without_leaf_is_infinite() {
        let g = grammar(&[("A", Mg), ("B", Mg)]).with_mg("A", &[], &["B"]).with_mg("B", &["A"], &[]);
        assert_eq!(heights(&g), [Infinite, Infinite]);
        assert!(!is_finite(&g).unwrap());
    }

    #[test]
    fn cycle_broken_by_leaf() {
        let g =
            grammar(&[("A", Mg), ("B", Mg)]).with_mg("A", &[], &["B"]).with_mg("A", &[], &[]).with_mg("B", &["A"], &[]);
        assert_eq!(heights(&g), [Finite(1), Finite(2)]);
        assert!(is_finite(&g).unwrap());
    }

    #[test]
    fn nmg_rules_count_through_their_dependent() {
        let g = grammar(&[("S", Mg), ("Q", Nmg), ("R", Nmg)])
            .with_mg("S", &["Q"], &[])
            .with_mg("S", &[], &[])
            .with_nmg("Q", "R")
            .with_nmg("R", "S");
        assert_eq!(heights(&g), [Finite(1), Finite(3), Finite(2)]);
        let cyclic = grammar(&[("S", Mg), ("Q", Nmg)]).with_mg("S", &[], &[]).with_nmg("Q", "Q");
        assert_eq!(heights(&cyclic), [Finite(1), Infinite]);
    }

    #[test]
    fn dangling_reference_is_an_error() {
        let mut g = grammar(&[("S", Mg)]).with_mg("S", &[], &[]);
        g.mg_rules[0].left.push(CategoryId(4));
        assert!(compute_heights(&g).is_err());
    }

    #[test]
    fn height_ordering() {
        assert!(Finite(100) < Infinite);
        assert!(Finite(1) < Finite(2));
    }
}
