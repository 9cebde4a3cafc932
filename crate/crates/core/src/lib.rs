//! Synthetic treebanks for signed-language syntax.
//!
//! The crate generates random dependency grammars over two kinds of units
//! (manual gestures, which form a strict sequence, and non-manual markers,
//! which synchronise to the projection of their dependent), derives random
//! trees from them, assigns absolute timings by propagating a temporal
//! constraint network, and scores parser output against the resulting
//! ground truth.
//!
//! Everything here is `no_std` + `alloc`. File formats, corpus batching and
//! the command line live in the `slsynth` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod derive;
pub mod dist;
pub mod document;
pub mod eval;
pub mod generate;
pub mod grammar;
pub mod height;
pub mod params;
pub mod temporal;

pub use derive::{
    derive_tree, tree_conforms, Children, DeriveError, Deriver, GrammarRef, NodeId, SyntaxTree, TreeNode, TreeViolation,
};
pub use dist::DistSpec;
pub use document::{
    check_document, document_seed, generate_document, AnnotatedDocument, Dependency, DocUnit, DocViolation,
    GeneratedDocument, Head, Micros,
};
pub use eval::{baseline_parse, score, Attachment, DocScore, EvalError, EvalReport, Prediction, Scorer, Tally};
pub use generate::{enforce_height, generate_grammar, generate_units, inject_permutations, GenError};
pub use grammar::{
    validate_grammar, Category, CategoryId, CategoryKind, Element, Grammar, GrammarError, GrammarViolation, MgRule,
    NmgRule, RuleId, RuleRef, SyncType, Unit,
};
pub use height::{compute_heights, is_finite, Height, HeightMap};
pub use params::{GenParams, ParamError, SyncRatios};
pub use temporal::{
    check_constraints, draw_valuation, solve, ConstraintReport, ConstraintViolation, NodeTiming, RelativeValuation,
    Span, TemporalSolution,
};

/// Seeded generator used throughout. Every operation that draws random
/// values takes it by `&mut`, never from a global.
pub type SeededRng = rand_chacha::ChaCha8Rng;
