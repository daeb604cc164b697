//! Clue-word rules: declarative conditions over a noun-phrase context with a
//! per-category (possibility, value) outcome.
//!
//! Rule file records are separated by blank lines:
//!
//! ```text
//! rule: r2_wa_past
//! when: particle=wa AND pred_tense=past
//! indef: 1 0
//! def: 1 3
//! gen: 1 1
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::category::{Category, PerCategory};
use crate::corpus::{AdverbClass, Flag, HeadClass, NpContext, PredPos, Tense};

/// The rule file shipped with the crate.
pub const DEFAULT_RULES: &str = include_str!("../data/default.rules");

pub const MAX_VALUE: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct RuleError {
    pub line: usize,
    pub rule: Option<String>,
    pub message: String,
}

impl fmt::Display for RuleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Some(id) => write!(f, "line {}: rule `{}`: {}", self.line, id, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParticleSet {
    Any,
    OneOf(Vec<String>),
}

impl ParticleSet {
    pub fn contains(&self, particle: &str) -> bool {
        match self {
            ParticleSet::Any => true,
            ParticleSet::OneOf(ps) => ps.iter().any(|p| p == particle),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddedTest {
    Past,
    Nonpast,
    Any,
}

/// One atomic test inside a rule condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrimitiveTest {
    ParticleIs(String),
    HeadClassIs(HeadClass),
    PredTenseIs(Option<Tense>),
    PredPosIs(Option<PredPos>),
    FlagIs(Flag),
    AdverbIs(AdverbClass),
    EmbeddedClauseIs(EmbeddedTest),
    /// Some noun inside the modifying clause carries one of the particles and
    /// was already assigned `category` earlier in the document.
    EmbeddedHasCategory {
        category: Category,
        particles: ParticleSet,
    },
    /// The same head surface was assigned `category` at most `window`
    /// sentences back.
    PriorSameHead { category: Category, window: usize },
    NoModifier,
}

impl PrimitiveTest {
    /// Whether the test consults the discourse store.
    pub fn is_dynamic(&self) -> bool {
        matches!(
            self,
            PrimitiveTest::EmbeddedHasCategory { .. } | PrimitiveTest::PriorSameHead { .. }
        )
    }

    pub fn holds(&self, ctx: &NpContext, store: &DiscourseStore) -> bool {
        match self {
            PrimitiveTest::ParticleIs(p) => ctx.particle.as_deref() == Some(p.as_str()),
            PrimitiveTest::HeadClassIs(h) => ctx.head_class == *h,
            PrimitiveTest::PredTenseIs(t) => ctx.predicate_tense == *t,
            PrimitiveTest::PredPosIs(p) => ctx.predicate_pos == *p,
            PrimitiveTest::FlagIs(f) => ctx.flag(*f),
            PrimitiveTest::AdverbIs(a) => ctx.adverb_class == Some(*a),
            PrimitiveTest::EmbeddedClauseIs(t) => matches!(
                (t, ctx.embedded_clause),
                (EmbeddedTest::Past, Some(Tense::Past))
                    | (EmbeddedTest::Nonpast, Some(Tense::Nonpast))
                    | (EmbeddedTest::Any, Some(_))
            ),
            PrimitiveTest::EmbeddedHasCategory {
                category,
                particles,
            } => ctx.embedded_nps.iter().any(|e| {
                particles.contains(&e.particle)
                    && store.get(&e.surface).map(|(c, _)| c) == Some(*category)
            }),
            PrimitiveTest::PriorSameHead { category, window } => {
                match store.get(&ctx.surface) {
                    Some((c, sent)) => {
                        c == *category
                            && sent <= ctx.sentence_index
                            && ctx.sentence_index - sent <= *window
                    }
                    None => false,
                }
            }
            PrimitiveTest::NoModifier => !ctx.is_modified(),
        }
    }

    fn parse(text: &str) -> Result<Self, String> {
        if text == "no_modifier" {
            return Ok(PrimitiveTest::NoModifier);
        }
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| format!("unknown primitive `{text}`"))?;
        let opt = |v: &str| v != "none";
        Ok(match key {
            "particle" if !value.is_empty() => PrimitiveTest::ParticleIs(value.to_string()),
            "head" => PrimitiveTest::HeadClassIs(value.parse()?),
            "pred_tense" => {
                PrimitiveTest::PredTenseIs(if opt(value) { Some(value.parse()?) } else { None })
            }
            "pred_pos" => {
                PrimitiveTest::PredPosIs(if opt(value) { Some(value.parse()?) } else { None })
            }
            "flag" => PrimitiveTest::FlagIs(value.parse()?),
            "adverb" => PrimitiveTest::AdverbIs(value.parse()?),
            "embedded" => PrimitiveTest::EmbeddedClauseIs(match value {
                "past" => EmbeddedTest::Past,
                "nonpast" => EmbeddedTest::Nonpast,
                "any" => EmbeddedTest::Any,
                other => return Err(format!("invalid embedded test `{other}`")),
            }),
            "embedded_has" => {
                let (cat, set) = value
                    .split_once(':')
                    .ok_or_else(|| format!("embedded_has `{value}` is not category:particles"))?;
                let category: Category = cat.parse().map_err(|e| format!("{e}"))?;
                let particles = if set == "*" {
                    ParticleSet::Any
                } else {
                    let ps: Vec<String> = set.split(',').map(str::to_string).collect();
                    if ps.iter().any(String::is_empty) {
                        return Err(format!("empty particle in `{value}`"));
                    }
                    ParticleSet::OneOf(ps)
                };
                PrimitiveTest::EmbeddedHasCategory {
                    category,
                    particles,
                }
            }
            "prior_same_head" => {
                let (cat, window) = value
                    .split_once(':')
                    .ok_or_else(|| format!("prior_same_head `{value}` is not category:window"))?;
                PrimitiveTest::PriorSameHead {
                    category: cat.parse().map_err(|e| format!("{e}"))?,
                    window: window
                        .parse()
                        .map_err(|_| format!("invalid window `{window}`"))?,
                }
            }
            _ => return Err(format!("unknown primitive `{text}`")),
        })
    }
}

impl fmt::Display for PrimitiveTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimitiveTest::ParticleIs(p) => write!(f, "particle={p}"),
            PrimitiveTest::HeadClassIs(h) => write!(f, "head={h}"),
            PrimitiveTest::PredTenseIs(t) => {
                write!(f, "pred_tense={}", t.map_or("none", |t| t.code()))
            }
            PrimitiveTest::PredPosIs(p) => write!(f, "pred_pos={}", p.map_or("none", |p| p.code())),
            PrimitiveTest::FlagIs(fl) => write!(f, "flag={fl}"),
            PrimitiveTest::AdverbIs(a) => write!(f, "adverb={a}"),
            PrimitiveTest::EmbeddedClauseIs(t) => write!(
                f,
                "embedded={}",
                match t {
                    EmbeddedTest::Past => "past",
                    EmbeddedTest::Nonpast => "nonpast",
                    EmbeddedTest::Any => "any",
                }
            ),
            PrimitiveTest::EmbeddedHasCategory {
                category,
                particles,
            } => match particles {
                ParticleSet::Any => write!(f, "embedded_has={}:*", category.code()),
                ParticleSet::OneOf(ps) => {
                    write!(f, "embedded_has={}:{}", category.code(), ps.join(","))
                }
            },
            PrimitiveTest::PriorSameHead { category, window } => {
                write!(f, "prior_same_head={}:{}", category.code(), window)
            }
            PrimitiveTest::NoModifier => f.write_str("no_modifier"),
        }
    }
}

/// Per-category outcome of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub possible: bool,
    pub value: u8,
}

impl Outcome {
    pub fn new(possible: bool, value: u8) -> Self {
        Outcome { possible, value }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub condition: Vec<PrimitiveTest>,
    pub dynamic: bool,
    pub outcomes: PerCategory<Outcome>,
}

impl Rule {
    /// Builds a rule, deriving the dynamic flag and checking the outcome ranges.
    pub fn new(
        id: impl Into<String>,
        condition: Vec<PrimitiveTest>,
        outcomes: PerCategory<Outcome>,
    ) -> Result<Self, String> {
        let id = id.into();
        if id.is_empty() || id.contains(|c: char| c.is_whitespace() || c == ',' || c.is_control())
        {
            return Err(format!("invalid rule id `{id}`"));
        }
        if condition.is_empty() {
            return Err("empty condition".into());
        }
        for (c, o) in outcomes.iter() {
            if o.value > MAX_VALUE {
                return Err(format!("{} value {} out of range 0..10", c.code(), o.value));
            }
            if !o.possible && o.value != 0 {
                return Err(format!("{} has value {} with possibility 0", c.code(), o.value));
            }
        }
        let dynamic = condition.iter().any(PrimitiveTest::is_dynamic);
        Ok(Rule {
            id,
            condition,
            dynamic,
            outcomes,
        })
    }

    pub fn matches(&self, ctx: &NpContext, store: &DiscourseStore) -> bool {
        self.condition.iter().all(|t| t.holds(ctx, store))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self, String> {
        let mut seen = HashSet::new();
        for r in &rules {
            if !seen.insert(r.id.as_str()) {
                return Err(format!("duplicate rule id `{}`", r.id));
            }
        }
        Ok(RuleSet { rules })
    }

    /// The shipped rule set.
    pub fn default_rules() -> Self {
        load_rules(DEFAULT_RULES).expect("shipped rule file is valid")
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.id.as_str())
    }
}

/// Already-decided noun phrases of the current document: surface form to the
/// most recent (category, sentence index) assigned to it.
#[derive(Debug, Clone, Default)]
pub struct DiscourseStore {
    entries: HashMap<String, (Category, usize)>,
}

impl DiscourseStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, surface: &str, category: Category, sentence_index: usize) {
        self.entries
            .insert(surface.to_string(), (category, sentence_index));
    }

    pub fn get(&self, surface: &str) -> Option<(Category, usize)> {
        self.entries.get(surface).copied()
    }

    pub fn remove(&mut self, surface: &str) -> Option<(Category, usize)> {
        self.entries.remove(surface)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Rules whose every primitive holds for `ctx`, in rule-set order.
pub fn fire_rules<'r>(
    ctx: &NpContext,
    store: &DiscourseStore,
    rules: &'r RuleSet,
) -> Vec<&'r Rule> {
    rules
        .rules
        .iter()
        .filter(|r| r.matches(ctx, store))
        .collect()
}

#[derive(Default)]
struct Pending {
    id: Option<(String, usize)>,
    when: Option<(String, usize)>,
    outcomes: [Option<Outcome>; 3],
    start: usize,
}

fn parse_outcome(text: &str) -> Result<Outcome, String> {
    let mut it = text.split_whitespace();
    let (Some(p), Some(v), None) = (it.next(), it.next(), it.next()) else {
        return Err(format!("outcome `{text}` is not `<possibility> <value>`"));
    };
    let possible = match p {
        "0" => false,
        "1" => true,
        other => return Err(format!("possibility must be 0 or 1, got `{other}`")),
    };
    let value: u8 = v
        .parse()
        .map_err(|_| format!("value `{v}` out of range 0..10"))?;
    if value > MAX_VALUE {
        return Err(format!("value {value} out of range 0..10"));
    }
    Ok(Outcome::new(possible, value))
}

fn finish(p: Pending, rules: &mut Vec<Rule>, seen: &mut HashSet<String>) -> Result<(), RuleError> {
    let err = |line, rule: Option<&str>, message: String| RuleError {
        line,
        rule: rule.map(str::to_string),
        message,
    };
    let (id, id_line) = p
        .id
        .ok_or_else(|| err(p.start, None, "record without `rule:` line".into()))?;
    let (when, when_line) = p
        .when
        .ok_or_else(|| err(id_line, Some(&id), "missing `when:` line".into()))?;
    let mut condition = Vec::new();
    for part in when.split(" AND ") {
        let part = part.trim();
        condition.push(PrimitiveTest::parse(part).map_err(|m| err(when_line, Some(&id), m))?);
    }
    let mut outcomes = [Outcome::new(false, 0); 3];
    for c in Category::ALL {
        outcomes[c.index()] = p.outcomes[c.index()].ok_or_else(|| {
            err(id_line, Some(&id), format!("missing `{}:` line", c.code()))
        })?;
    }
    if !seen.insert(id.clone()) {
        return Err(err(id_line, Some(&id), "duplicate rule id".into()));
    }
    let rule = Rule::new(id.clone(), condition, PerCategory(outcomes))
        .map_err(|m| err(id_line, Some(&id), m))?;
    rules.push(rule);
    Ok(())
}

/// Loads a rule file. Dynamic flags are derived from the conditions.
pub fn load_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut rules = Vec::new();
    let mut seen = HashSet::new();
    let mut pending: Option<Pending> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            if let Some(p) = pending.take() {
                finish(p, &mut rules, &mut seen)?;
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let p = pending.get_or_insert_with(|| Pending {
            start: line_no,
            ..Pending::default()
        });
        let current_id = p.id.as_ref().map(|(id, _)| id.clone());
        let err = |message: String| RuleError {
            line: line_no,
            rule: current_id.clone(),
            message,
        };
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| err(format!("expected `key: value`, got `{line}`")))?;
        let value = value.trim();
        match key.trim() {
            "rule" => {
                if p.id.is_some() {
                    return Err(err("second `rule:` line in one record".into()));
                }
                p.id = Some((value.to_string(), line_no));
            }
            "when" => {
                if p.when.is_some() {
                    return Err(err("duplicate `when:` line".into()));
                }
                p.when = Some((value.to_string(), line_no));
            }
            k => {
                let c: Category = k.parse().map_err(|_| err(format!("unknown line `{k}`")))?;
                if p.outcomes[c.index()].is_some() {
                    return Err(err(format!("duplicate `{k}:` line")));
                }
                p.outcomes[c.index()] = Some(parse_outcome(value).map_err(err)?);
            }
        }
    }
    if let Some(p) = pending.take() {
        finish(p, &mut rules, &mut seen)?;
    }
    Ok(RuleSet { rules })
}

/// Serializes a rule set in the rule-file format.
pub fn write_rules(rules: &RuleSet) -> String {
    let mut out = String::new();
    for (i, r) in rules.rules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("rule: {}\n", r.id));
        let when: Vec<String> = r.condition.iter().map(ToString::to_string).collect();
        out.push_str(&format!("when: {}\n", when.join(" AND ")));
        for (c, o) in r.outcomes.iter() {
            out.push_str(&format!("{}: {} {}\n", c.code(), u8::from(o.possible), o.value));
        }
    }
    out
}
