use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::DistSpec;
use crate::grammar::SyncType;

/// Mixing ratios of the three marker kinds. Must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncRatios {
    pub full: f64,
    pub start: f64,
    pub end: f64,
}

impl SyncRatios {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SyncType {
        let x: f64 = rng.random::<f64>() * (self.full + self.start + self.end);
        if x < self.full {
            SyncType::NmgFull
        } else if x < self.full + self.start {
            SyncType::NmgStart
        } else {
            SyncType::NmgEnd
        }
    }
}

/// Everything that parameterises grammar generation and, through the
/// snapshot stored in each grammar, temporal valuation.
///
/// Fields without a `serde(default)` are required in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    pub num_categories: u32,
    /// Probability that a non-root category is a marker (NMG) category.
    pub nmg_category_ratio: f64,
    pub rules_per_category: DistSpec,
    pub units_per_category: DistSpec,
    pub deps_per_rule: DistSpec,
    /// Slot of the head among `deps + 1` positions, counted from the left and
    /// clamped to `deps`. `None` is uniform over the slots.
    #[serde(default)]
    pub head_position: Option<DistSpec>,
    pub permutation_prob: f64,
    pub height_limit: u32,
    pub nmg_sync_ratios: SyncRatios,
    pub duration_scale_mean: f64,
    pub duration_scale_std: f64,
    pub translation_std: f64,
    /// Probability that a drawn MG rule is forced to be the empty rule.
    #[serde(default)]
    pub leaf_rule_prob: f64,
    /// Rule redraws allowed when height repair cannot succeed.
    #[serde(default = "default_max_redraws")]
    pub max_redraws: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_redraws() -> u32 {
    64
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            num_categories: 8,
            nmg_category_ratio: 0.25,
            rules_per_category: DistSpec::Uniform { min: 1, max: 3 },
            units_per_category: DistSpec::Uniform { min: 1, max: 3 },
            deps_per_rule: DistSpec::Uniform { min: 0, max: 3 },
            head_position: None,
            permutation_prob: 0.2,
            height_limit: 4,
            nmg_sync_ratios: SyncRatios { full: 0.5, start: 0.25, end: 0.25 },
            duration_scale_mean: 0.5,
            duration_scale_std: 0.1,
            translation_std: 0.1,
            leaf_rule_prob: 0.0,
            max_redraws: default_max_redraws(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid parameter `{field}`: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: &'static str,
}

fn prob(field: &'static str, p: f64) -> Result<(), ParamError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ParamError { field, reason: "must be a probability in [0, 1]" })
    }
}

fn dist(field: &'static str, d: &DistSpec) -> Result<(), ParamError> {
    d.validate().map_err(|reason| ParamError { field, reason })
}

impl GenParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.num_categories == 0 {
            return Err(ParamError { field: "num_categories", reason: "must be at least 1" });
        }
        if self.height_limit == 0 {
            return Err(ParamError { field: "height_limit", reason: "must be at least 1" });
        }
        prob("nmg_category_ratio", self.nmg_category_ratio)?;
        prob("permutation_prob", self.permutation_prob)?;
        prob("leaf_rule_prob", self.leaf_rule_prob)?;
        let r = self.nmg_sync_ratios;
        prob("nmg_sync_ratios.full", r.full)?;
        prob("nmg_sync_ratios.start", r.start)?;
        prob("nmg_sync_ratios.end", r.end)?;
        if ((r.full + r.start + r.end) - 1.0).abs() > 1e-9 {
            return Err(ParamError { field: "nmg_sync_ratios", reason: "must sum to 1" });
        }
        dist("rules_per_category", &self.rules_per_category)?;
        dist("units_per_category", &self.units_per_category)?;
        dist("deps_per_rule", &self.deps_per_rule)?;
        if let Some(h) = &self.head_position {
            dist("head_position", h)?;
        }
        if !(self.duration_scale_mean.is_finite() && self.duration_scale_mean > 0.0) {
            return Err(ParamError { field: "duration_scale_mean", reason: "must be positive" });
        }
        if !(self.duration_scale_std.is_finite() && self.duration_scale_std >= 0.0) {
            return Err(ParamError { field: "duration_scale_std", reason: "must be non-negative" });
        }
        if !(self.translation_std.is_finite() && self.translation_std >= 0.0) {
            return Err(ParamError { field: "translation_std", reason: "must be non-negative" });
        }
        Ok(())
    }
}
