//! Maximum-entropy conflict resolution over binary rule-condition features.
//!
//! The model is log-linear with one weight per (feature, category):
//! `p(c | S) ∝ exp(Σ_{f∈S} λ[f][c])`. There is no bias term, so the
//! prediction for a feature set is exactly the normalized product of the
//! single-feature conditionals.
//!
//! Training uses generalized iterative scaling. Empirical counts are smoothed
//! by adding `ε·u` to every (feature, category) cell, where `u` is the mean
//! event weight; on the model side the same mass is carried by pseudo-events
//! whose only active feature is `f`, one per category. The smoothed problem is
//! an ordinary weighted likelihood, so GIS keeps its monotonicity guarantee,
//! the constraints are always satisfiable, and scaling every event weight by
//! a constant leaves the fitted model unchanged.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::category::{Category, PerCategory};
use crate::corpus::{Corpus, Diagnostic, DiagnosticKind};
use crate::rules::{fire_rules, DiscourseStore, RuleSet};

pub const MODEL_HEADER: &str = "refprop-maxent v1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaxEntError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("empty feature set")]
    EmptyFeatureSet,
    #[error("no training events")]
    NoEvents,
    #[error("event weight {0} is not positive and finite")]
    BadWeight(f64),
    #[error("non-finite value during training at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("{doc_id} np {np_index}: gold label required")]
    MissingGold { doc_id: String, np_index: usize },
    #[error("no {0} events; rebalance factors are undefined")]
    MissingCategory(Category),
    #[error("rebalance factor for {0} must be positive")]
    BadFactor(Category),
    #[error("unsupported model header `{0}`")]
    VersionMismatch(String),
    #[error("model line {line}: {message}")]
    ModelFormat { line: usize, message: String },
}

/// One training instance: the rules that fired for a noun phrase and its gold
/// category.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub features: Vec<String>,
    pub gold: Category,
    pub weight: f64,
}

impl Event {
    pub fn new<S: Into<String>>(features: impl IntoIterator<Item = S>, gold: Category) -> Self {
        Event {
            features: features.into_iter().map(Into::into).collect(),
            gold,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rebalance {
    None,
    /// Inverse-occurrence factors computed from the training events.
    Auto,
    Factors(PerCategory<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub max_iterations: usize,
    pub constraint_tolerance: f64,
    pub smoothing: f64,
    pub rebalance: Rebalance,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iterations: 500,
            constraint_tolerance: 1e-4,
            smoothing: 0.01,
            rebalance: Rebalance::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainMeta {
    pub iterations_run: usize,
    pub final_constraint_gap: f64,
    pub smoothing: f64,
    pub correction: f64,
    pub rebalance_factors: Option<PerCategory<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    feature_index: Vec<String>,
    lookup: HashMap<String, usize>,
    params: Vec<PerCategory<f64>>,
    smoothing: f64,
    train_meta: Option<TrainMeta>,
}

impl MaxEntModel {
    /// A model with explicit parameters, one triple per feature.
    pub fn from_params(
        features: Vec<String>,
        params: Vec<PerCategory<f64>>,
        smoothing: f64,
    ) -> Result<Self, MaxEntError> {
        assert_eq!(features.len(), params.len(), "one parameter triple per feature");
        let mut lookup = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if lookup.insert(f.clone(), i).is_some() {
                return Err(MaxEntError::ModelFormat {
                    line: 0,
                    message: format!("duplicate feature `{f}`"),
                });
            }
        }
        Ok(MaxEntModel {
            feature_index: features,
            lookup,
            params,
            smoothing,
            train_meta: None,
        })
    }

    /// The untrained model: every weight zero, every prediction uniform.
    pub fn uniform(features: Vec<String>, smoothing: f64) -> Self {
        let params = vec![PerCategory([0.0; 3]); features.len()];
        Self::from_params(features, params, smoothing).expect("feature ids are unique")
    }

    pub fn feature_index(&self) -> &[String] {
        &self.feature_index
    }

    pub fn params(&self) -> &[PerCategory<f64>] {
        &self.params
    }

    pub fn param(&self, feature: &str) -> Option<PerCategory<f64>> {
        self.lookup.get(feature).map(|&i| self.params[i])
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn train_meta(&self) -> Option<&TrainMeta> {
        self.train_meta.as_ref()
    }

    pub fn feature_position(&self, feature: &str) -> Option<usize> {
        self.lookup.get(feature).copied()
    }

    fn resolve<S: AsRef<str>>(&self, features: &[S]) -> Result<Vec<usize>, MaxEntError> {
        features
            .iter()
            .map(|f| {
                let f = f.as_ref();
                self.lookup
                    .get(f)
                    .copied()
                    .ok_or_else(|| MaxEntError::UnknownFeature(f.to_string()))
            })
            .collect()
    }

    fn distribution(&self, active: &[usize]) -> PerCategory<f64> {
        softmax(scores(&self.params, active))
    }
}

fn scores(params: &[PerCategory<f64>], active: &[usize]) -> PerCategory<f64> {
    let mut s = PerCategory([0.0; 3]);
    for &f in active {
        for k in 0..3 {
            s.0[k] += params[f].0[k];
        }
    }
    s
}

fn softmax(s: PerCategory<f64>) -> PerCategory<f64> {
    let m = s.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = s.map(|&x| (x - m).exp());
    let z: f64 = e.0.iter().sum();
    e.map(|&x| x / z)
}

fn log_softmax(s: PerCategory<f64>) -> PerCategory<f64> {
    let m = s.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lz = m + s.0.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
    s.map(|&x| x - lz)
}

/// Category distribution for a nonempty set of active features.
pub fn predict<S: AsRef<str>>(
    model: &MaxEntModel,
    features: &[S],
) -> Result<PerCategory<f64>, MaxEntError> {
    if features.is_empty() {
        return Err(MaxEntError::EmptyFeatureSet);
    }
    let active = model.resolve(features)?;
    Ok(model.distribution(&active))
}

/// The distribution predicted when `feature` is the only active feature.
pub fn per_feature_conditional(
    model: &MaxEntModel,
    feature: &str,
) -> Result<PerCategory<f64>, MaxEntError> {
    predict(model, &[feature])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlDecision {
    pub category: Category,
    pub probabilities: PerCategory<f64>,
    pub defaulted: bool,
}

/// Most probable category; an empty feature set yields the indefinite default.
pub fn decide_ml<S: AsRef<str>>(
    model: &MaxEntModel,
    features: &[S],
) -> Result<MlDecision, MaxEntError> {
    if features.is_empty() {
        return Ok(MlDecision {
            category: Category::Indefinite,
            probabilities: PerCategory([1.0 / 3.0; 3]),
            defaulted: true,
        });
    }
    let probabilities = predict(model, features)?;
    let category = Category::argmax_by(&probabilities, |_| true).expect("three categories");
    Ok(MlDecision {
        category,
        probabilities,
        defaulted: false,
    })
}

/// Builds one event per gold-labelled noun phrase. Dynamic conditions see the
/// gold labels of earlier noun phrases in the same document. NPs labelled
/// "other" and NPs that fire no rule are skipped with a diagnostic.
pub fn compile_events(
    corpus: &Corpus,
    rules: &RuleSet,
) -> Result<(Vec<Event>, Vec<Diagnostic>), MaxEntError> {
    let mut events = Vec::new();
    let mut diagnostics = Vec::new();
    for doc in &corpus.documents {
        let mut store = DiscourseStore::new();
        for np in &doc.nps {
            let gold = np.gold.ok_or_else(|| MaxEntError::MissingGold {
                doc_id: doc.id.clone(),
                np_index: np.np_index,
            })?;
            let Some(category) = gold.category() else {
                diagnostics.push(Diagnostic {
                    kind: DiagnosticKind::SkippedOtherGold,
                    doc_id: doc.id.clone(),
                    np_index: Some(np.np_index),
                    message: "gold label `other` skipped".into(),
                });
                continue;
            };
            let fired = fire_rules(np, &store, rules);
            store.record(&np.surface, category, np.sentence_index);
            if fired.is_empty() {
                diagnostics.push(Diagnostic {
                    kind: DiagnosticKind::NoRulesFired,
                    doc_id: doc.id.clone(),
                    np_index: Some(np.np_index),
                    message: "no rule fired; skipped".into(),
                });
                continue;
            }
            events.push(Event::new(fired.iter().map(|r| r.id.as_str()), category));
        }
    }
    Ok((events, diagnostics))
}

/// Integer factors `round(2·p_max / p_c)` from category frequencies.
pub fn factors_from_frequencies(
    frequencies: PerCategory<f64>,
) -> Result<PerCategory<u32>, MaxEntError> {
    for (c, &p) in frequencies.iter() {
        if !(p > 0.0) {
            return Err(MaxEntError::MissingCategory(c));
        }
    }
    let p_max = frequencies.0.iter().copied().fold(0.0, f64::max);
    Ok(frequencies.map(|&p| ((2.0 * p_max / p).round() as u32).max(1)))
}

pub fn compute_rebalance_factors(events: &[Event]) -> Result<PerCategory<u32>, MaxEntError> {
    let mut counts = PerCategory([0usize; 3]);
    for e in events {
        counts[e.gold] += 1;
    }
    let total = events.len().max(1) as f64;
    factors_from_frequencies(counts.map(|&n| n as f64 / total))
}

pub fn apply_rebalance(events: &[Event], factors: PerCategory<u32>) -> Vec<Event> {
    events
        .iter()
        .map(|e| Event {
            weight: e.weight * f64::from(factors[e.gold]),
            ..e.clone()
        })
        .collect()
}

struct Compiled {
    active: Vec<Vec<usize>>,
    gold: Vec<usize>,
    weight: Vec<f64>,
}

fn compile(events: &[Event], lookup: &HashMap<String, usize>) -> Result<Compiled, MaxEntError> {
    let mut out = Compiled {
        active: Vec::with_capacity(events.len()),
        gold: Vec::with_capacity(events.len()),
        weight: Vec::with_capacity(events.len()),
    };
    for e in events {
        if !(e.weight > 0.0 && e.weight.is_finite()) {
            return Err(MaxEntError::BadWeight(e.weight));
        }
        let mut idx = e
            .features
            .iter()
            .map(|f| {
                lookup
                    .get(f)
                    .copied()
                    .ok_or_else(|| MaxEntError::UnknownFeature(f.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        idx.sort_unstable();
        idx.dedup();
        out.active.push(idx);
        out.gold.push(e.gold.index());
        out.weight.push(e.weight);
    }
    Ok(out)
}

/// Generalized iterative scaling over a fixed event set.
struct Gis {
    data: Compiled,
    /// Smoothing mass per (feature, category) cell.
    pseudo: f64,
    target: Vec<[f64; 3]>,
    correction: f64,
}

impl Gis {
    fn new(data: Compiled, n_features: usize, smoothing: f64) -> Self {
        let total: f64 = data.weight.iter().sum();
        let pseudo = smoothing * total / data.weight.len() as f64;
        let mut target = vec![[pseudo; 3]; n_features];
        for ((active, &g), &w) in data.active.iter().zip(&data.gold).zip(&data.weight) {
            for &f in active {
                target[f][g] += w;
            }
        }
        let max_active = data.active.iter().map(Vec::len).max().unwrap_or(0);
        Gis {
            data,
            pseudo,
            target,
            correction: max_active.max(1) as f64,
        }
    }

    fn expected(&self, params: &[PerCategory<f64>]) -> Vec<[f64; 3]> {
        let mut exp = vec![[0.0; 3]; params.len()];
        for (active, &w) in self.data.active.iter().zip(&self.data.weight) {
            if active.is_empty() {
                continue;
            }
            let p = softmax(scores(params, active));
            for &f in active {
                for k in 0..3 {
                    exp[f][k] += w * p.0[k];
                }
            }
        }
        if self.pseudo > 0.0 {
            for (f, row) in exp.iter_mut().enumerate() {
                let p = softmax(params[f]);
                for k in 0..3 {
                    row[k] += 3.0 * self.pseudo * p.0[k];
                }
            }
        }
        exp
    }

    fn log_likelihood(&self, params: &[PerCategory<f64>]) -> f64 {
        let mut ll = 0.0;
        for ((active, &g), &w) in self.data.active.iter().zip(&self.data.gold).zip(&self.data.weight)
        {
            ll += w * log_softmax(scores(params, active)).0[g];
        }
        if self.pseudo > 0.0 {
            for p in params {
                ll += self.pseudo * log_softmax(*p).0.iter().sum::<f64>();
            }
        }
        ll
    }

    fn gap(&self, expected: &[[f64; 3]]) -> f64 {
        let mut gap = 0.0f64;
        for (e, t) in expected.iter().zip(&self.target) {
            for k in 0..3 {
                gap = gap.max((e[k] - t[k]).abs());
            }
        }
        gap
    }
}

/// Per-iteration record of a training run: the smoothed weighted
/// log-likelihood before the first update and after every update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub log_likelihood: Vec<f64>,
}

pub fn train(
    events: &[Event],
    feature_index: &[String],
    config: &TrainConfig,
) -> Result<MaxEntModel, MaxEntError> {
    train_with_history(events, feature_index, config).map(|(m, _)| m)
}

/// Trains with the rule set's ids as the feature index.
pub fn train_for_rules(
    events: &[Event],
    rules: &RuleSet,
    config: &TrainConfig,
) -> Result<MaxEntModel, MaxEntError> {
    let ids: Vec<String> = rules.ids().map(str::to_string).collect();
    train(events, &ids, config)
}

pub fn train_with_history(
    events: &[Event],
    feature_index: &[String],
    config: &TrainConfig,
) -> Result<(MaxEntModel, TrainHistory), MaxEntError> {
    if events.is_empty() {
        return Err(MaxEntError::NoEvents);
    }
    let (events, factors) = match config.rebalance {
        Rebalance::None => (events.to_vec(), None),
        Rebalance::Auto => {
            let f = compute_rebalance_factors(events)?;
            (apply_rebalance(events, f), Some(f))
        }
        Rebalance::Factors(f) => {
            if let Some((c, _)) = f.iter().find(|(_, &v)| v == 0) {
                return Err(MaxEntError::BadFactor(c));
            }
            (apply_rebalance(events, f), Some(f))
        }
    };

    let mut model = MaxEntModel::uniform(feature_index.to_vec(), config.smoothing);
    let gis = Gis::new(compile(&events, &model.lookup)?, feature_index.len(), config.smoothing);
    let mut history = TrainHistory::default();
    let mut params = model.params.clone();
    let mut iterations = 0;

    let final_gap = loop {
        let expected = gis.expected(&params);
        history.log_likelihood.push(gis.log_likelihood(&params));
        let gap = gis.gap(&expected);
        if !gap.is_finite() {
            return Err(MaxEntError::NonFinite {
                iteration: iterations,
            });
        }
        if gap <= config.constraint_tolerance || iterations >= config.max_iterations {
            break gap;
        }
        iterations += 1;
        for (f, (e, t)) in expected.iter().zip(&gis.target).enumerate() {
            for k in 0..3 {
                if t[k] == 0.0 && e[k] == 0.0 {
                    continue;
                }
                let step = (t[k] / e[k]).ln() / gis.correction;
                params[f].0[k] += step;
                if !params[f].0[k].is_finite() {
                    return Err(MaxEntError::NonFinite {
                        iteration: iterations,
                    });
                }
            }
        }
    };

    model.params = params;
    model.train_meta = Some(TrainMeta {
        iterations_run: iterations,
        final_constraint_gap: final_gap,
        smoothing: config.smoothing,
        correction: gis.correction,
        rebalance_factors: factors,
    });
    Ok((model, history))
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn save_model(model: &MaxEntModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_HEADER}");
    let _ = writeln!(out, "smoothing {}", fmt_f64(model.smoothing));
    let _ = writeln!(out, "features {}", model.feature_index.len());
    for (id, p) in model.feature_index.iter().zip(&model.params) {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            id,
            fmt_f64(p.0[0]),
            fmt_f64(p.0[1]),
            fmt_f64(p.0[2])
        );
    }
    out
}

fn parse_finite(s: &str, line: usize) -> Result<f64, MaxEntError> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(MaxEntError::ModelFormat {
            line,
            message: format!("invalid number `{s}`"),
        }),
    }
}

pub fn load_model(text: &str) -> Result<MaxEntModel, MaxEntError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let bad = |line, message: String| MaxEntError::ModelFormat { line, message };

    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    if header != MODEL_HEADER {
        return Err(MaxEntError::VersionMismatch(header.to_string()));
    }
    let (n, l) = lines
        .next()
        .ok_or_else(|| bad(2, "missing smoothing line".into()))?;
    let smoothing = match l.split_once(' ') {
        Some(("smoothing", v)) => parse_finite(v, n)?,
        _ => return Err(bad(n, format!("expected `smoothing <x>`, got `{l}`"))),
    };
    let (n, l) = lines
        .next()
        .ok_or_else(|| bad(3, "missing features line".into()))?;
    let count: usize = match l.split_once(' ') {
        Some(("features", v)) => v
            .parse()
            .map_err(|_| bad(n, format!("invalid feature count `{v}`")))?,
        _ => return Err(bad(n, format!("expected `features <n>`, got `{l}`"))),
    };

    let mut features = Vec::new();
    let mut params = Vec::new();
    for (n, l) in lines.by_ref() {
        if features.len() == count {
            if l.trim().is_empty() {
                continue;
            }
            return Err(bad(n, "more parameter lines than declared".into()));
        }
        let fields: Vec<&str> = l.split('\t').collect();
        let [id, a, b, c] = fields[..] else {
            return Err(bad(n, format!("expected 4 tab-separated fields, got {}", fields.len())));
        };
        if id.is_empty() || id.chars().any(|ch| ch.is_whitespace() || ch.is_control()) {
            return Err(bad(n, format!("invalid feature id `{id}`")));
        }
        features.push(id.to_string());
        params.push(PerCategory([
            parse_finite(a, n)?,
            parse_finite(b, n)?,
            parse_finite(c, n)?,
        ]));
    }
    if features.len() != count {
        return Err(bad(
            text.lines().count(),
            format!("declared {count} features, found {}", features.len()),
        ));
    }
    MaxEntModel::from_params(features, params, smoothing)
}
