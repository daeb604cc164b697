//! Estimation of the referential property (indefinite, definite or generic)
//! of Japanese noun phrases from clue-word rules.
//!
//! Two conflict resolvers are provided over the same rule set: the hand-scored
//! one ([`manual`]), which conjoins possibilities and sums values, and a
//! maximum-entropy model ([`maxent`]) trained on the rule conditions as binary
//! features, optionally with inverse-occurrence class rebalancing.
//! [`pipeline`] decodes documents left to right so that rules can consult the
//! labels already assigned earlier in the discourse, and [`evaluation`]
//! renders per-category accuracy tables.

pub mod applications;
pub mod category;
pub mod corpus;
pub mod evaluation;
pub mod manual;
pub mod maxent;
pub mod pipeline;
pub mod rules;
pub mod synthetic;

pub use category::{Category, GoldLabel, PerCategory};
pub use corpus::{parse_corpus, validate, write_corpus, Corpus, Document, NpContext};
pub use maxent::{MaxEntModel, TrainConfig};
pub use rules::{fire_rules, load_rules, DiscourseStore, Rule, RuleSet};
