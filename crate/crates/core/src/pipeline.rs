//! Left-to-right document annotation with discourse feedback, the annotated
//! output format, and the three-arm experiment (manual, ML without
//! rebalancing, ML with rebalancing).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::applications::suggest_article;
use crate::category::{Category, GoldLabel, PerCategory};
use crate::corpus::{self, Corpus, Diagnostic, Document, NpContext, ParseError};
use crate::evaluation::{EvalError, Report};
use crate::manual::{aggregate, decide_manual, ScoreTriple};
use crate::maxent::{
    self, compile_events, decide_ml, MaxEntError, MaxEntModel, Rebalance, TrainConfig,
};
use crate::rules::{fire_rules, DiscourseStore, RuleSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("model and rule set disagree on features: {0}")]
    FeatureMismatch(String),
    #[error("{doc_id} np {np_index}: gold label required")]
    MissingGold { doc_id: String, np_index: usize },
    #[error("{doc_id} np {np_index}: {message}")]
    Prediction {
        doc_id: String,
        np_index: usize,
        message: String,
    },
    #[error("gold and prediction files do not align: {0}")]
    Misaligned(String),
    #[error(transparent)]
    MaxEnt(#[from] MaxEntError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy)]
pub enum Decider<'m> {
    Manual,
    Model(&'m MaxEntModel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evidence {
    Scores(ScoreTriple),
    Probabilities(PerCategory<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedNp {
    pub np: NpContext,
    pub predicted: Category,
    pub evidence: Evidence,
    pub fired: Vec<String>,
    pub defaulted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub entries: Vec<AnnotatedNp>,
}

/// Fails unless the model's features are exactly the rule ids.
pub fn check_compatible(model: &MaxEntModel, rules: &RuleSet) -> Result<(), PipelineError> {
    let model_ids: BTreeSet<&str> = model.feature_index().iter().map(String::as_str).collect();
    let rule_ids: BTreeSet<&str> = rules.ids().collect();
    if model_ids == rule_ids {
        return Ok(());
    }
    let missing: Vec<&str> = rule_ids.difference(&model_ids).copied().collect();
    let extra: Vec<&str> = model_ids.difference(&rule_ids).copied().collect();
    Err(PipelineError::FeatureMismatch(format!(
        "rules not in model [{}], model features not in rules [{}]",
        missing.join(","),
        extra.join(",")
    )))
}

/// Decides every noun phrase of a document in `np_index` order. Each decision
/// is written to the discourse store before the next noun phrase is seen.
pub fn annotate_document(
    doc: &Document,
    rules: &RuleSet,
    decider: Decider<'_>,
) -> Result<AnnotatedDocument, PipelineError> {
    if let Decider::Model(model) = decider {
        check_compatible(model, rules)?;
    }
    let mut order: Vec<usize> = (0..doc.nps.len()).collect();
    order.sort_by_key(|&i| doc.nps[i].np_index);

    let mut store = DiscourseStore::new();
    let mut slots: Vec<Option<AnnotatedNp>> = vec![None; doc.nps.len()];
    for i in order {
        let np = &doc.nps[i];
        let fired = fire_rules(np, &store, rules);
        let ids: Vec<String> = fired.iter().map(|r| r.id.clone()).collect();
        let (predicted, evidence, defaulted) = match decider {
            Decider::Manual => {
                let score = aggregate(fired.iter().copied());
                let (c, d) = decide_manual(&score, !fired.is_empty());
                (c, Evidence::Scores(score), d)
            }
            Decider::Model(model) => {
                let d = decide_ml(model, &ids).map_err(|e| PipelineError::Prediction {
                    doc_id: doc.id.clone(),
                    np_index: np.np_index,
                    message: e.to_string(),
                })?;
                (d.category, Evidence::Probabilities(d.probabilities), d.defaulted)
            }
        };
        store.record(&np.surface, predicted, np.sentence_index);
        slots[i] = Some(AnnotatedNp {
            np: np.clone(),
            predicted,
            evidence,
            fired: ids,
            defaulted,
        });
    }
    Ok(AnnotatedDocument {
        doc_id: doc.id.clone(),
        entries: slots.into_iter().map(|s| s.expect("every slot filled")).collect(),
    })
}

pub fn annotate_corpus(
    corpus: &Corpus,
    rules: &RuleSet,
    decider: Decider<'_>,
) -> Result<Vec<AnnotatedDocument>, PipelineError> {
    corpus
        .documents
        .iter()
        .map(|d| annotate_document(d, rules, decider))
        .collect()
}

/// Keys appended to corpus records in annotated output.
pub const ANNOTATION_KEYS: &[&str] = &[
    "pred", "p_indef", "p_def", "p_gen", "v_indef", "v_def", "v_gen", "poss", "fired",
    "defaulted", "article",
];

/// Writes the corpus records with the prediction keys appended. Plurality is
/// not recorded on noun phrases, so article suggestions assume the singular.
pub fn write_annotated(docs: &[AnnotatedDocument], suggest_articles: bool) -> String {
    let mut out = String::new();
    for doc in docs {
        let _ = writeln!(out, "#doc {}", doc.doc_id);
        for e in &doc.entries {
            corpus::write_record(&mut out, &e.np);
            let _ = write!(out, "\tpred={}", e.predicted.code());
            match &e.evidence {
                Evidence::Probabilities(p) => {
                    let _ = write!(
                        out,
                        "\tp_indef={:.6}\tp_def={:.6}\tp_gen={:.6}",
                        p.0[0], p.0[1], p.0[2]
                    );
                }
                Evidence::Scores(s) => {
                    let poss: Vec<String> =
                        s.possibility.0.iter().map(|&b| u8::from(b).to_string()).collect();
                    let _ = write!(
                        out,
                        "\tv_indef={}\tv_def={}\tv_gen={}\tposs={}",
                        s.value.0[0],
                        s.value.0[1],
                        s.value.0[2],
                        poss.join(",")
                    );
                }
            }
            let _ = write!(
                out,
                "\tfired={}\tdefaulted={}",
                e.fired.join(","),
                u8::from(e.defaulted)
            );
            if suggest_articles {
                let _ = write!(out, "\tarticle={}", suggest_article(e.predicted, false));
            }
            out.push('\n');
        }
    }
    out
}

/// A corpus read back from an annotated file together with each record's
/// `pred=` value, when present.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub corpus: Corpus,
    pub predictions: Vec<Vec<Option<Category>>>,
}

pub fn parse_annotated(text: &str) -> Result<PredictionFile, PipelineError> {
    let (corpus, extras) = corpus::parse_with_extras(text, ANNOTATION_KEYS)?;
    let mut predictions = Vec::with_capacity(extras.len());
    for (doc, doc_extras) in corpus.documents.iter().zip(&extras) {
        let mut preds = Vec::with_capacity(doc_extras.len());
        for (np, fields) in doc.nps.iter().zip(doc_extras) {
            let pred = match fields.get("pred") {
                Some(v) => Some(v.parse::<Category>().map_err(|e| PipelineError::Prediction {
                    doc_id: doc.id.clone(),
                    np_index: np.np_index,
                    message: e.to_string(),
                })?),
                None => None,
            };
            preds.push(pred);
        }
        predictions.push(preds);
    }
    Ok(PredictionFile {
        corpus,
        predictions,
    })
}

/// Report section a document belongs to: its id up to the first `/`.
pub fn section_name(doc_id: &str) -> &str {
    doc_id.split('/').next().unwrap_or(doc_id)
}

/// Groups (gold, predicted) pairs by section, keeping first-seen order.
fn grouped<'a, I>(items: I) -> Vec<(String, Vec<(GoldLabel, Category)>)>
where
    I: IntoIterator<Item = (&'a str, (GoldLabel, Category))>,
{
    let mut groups: Vec<(String, Vec<(GoldLabel, Category)>)> = Vec::new();
    for (doc_id, pair) in items {
        let name = section_name(doc_id);
        match groups.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => v.push(pair),
            None => groups.push((name.to_string(), vec![pair])),
        }
    }
    groups
}

/// Scores annotated documents against the gold labels they carry.
pub fn report_for(title: &str, docs: &[AnnotatedDocument]) -> Result<Report, PipelineError> {
    let mut items = Vec::new();
    for doc in docs {
        for e in &doc.entries {
            let gold = e.np.gold.ok_or_else(|| PipelineError::MissingGold {
                doc_id: doc.doc_id.clone(),
                np_index: e.np.np_index,
            })?;
            items.push((doc.doc_id.as_str(), (gold, e.predicted)));
        }
    }
    Ok(Report::from_groups(title, grouped(items)))
}

/// Pairs gold labels from one annotated or plain corpus file with the
/// predictions of another. A gold-side record without `gold=` falls back to
/// its own `pred=` value.
pub fn compare_files(
    title: &str,
    gold_text: &str,
    pred_text: &str,
) -> Result<Report, PipelineError> {
    let gold = parse_annotated(gold_text)?;
    let pred = parse_annotated(pred_text)?;
    if gold.corpus.documents.len() != pred.corpus.documents.len() {
        return Err(PipelineError::Misaligned(format!(
            "{} gold documents, {} predicted",
            gold.corpus.documents.len(),
            pred.corpus.documents.len()
        )));
    }
    let mut items = Vec::new();
    for (gi, (gd, pd)) in gold
        .corpus
        .documents
        .iter()
        .zip(&pred.corpus.documents)
        .enumerate()
    {
        if gd.id != pd.id || gd.nps.len() != pd.nps.len() {
            return Err(PipelineError::Misaligned(format!(
                "document {} (`{}`) vs `{}`",
                gi + 1,
                gd.id,
                pd.id
            )));
        }
        for (ni, (gnp, pnp)) in gd.nps.iter().zip(&pd.nps).enumerate() {
            if gnp.surface != pnp.surface || gnp.sentence_index != pnp.sentence_index {
                return Err(PipelineError::Misaligned(format!(
                    "{} np {}: `{}` vs `{}`",
                    gd.id, ni, gnp.surface, pnp.surface
                )));
            }
            let gold_label = gnp
                .gold
                .or_else(|| gold.predictions[gi][ni].map(GoldLabel::Category))
                .ok_or_else(|| PipelineError::MissingGold {
                    doc_id: gd.id.clone(),
                    np_index: ni,
                })?;
            let predicted =
                pred.predictions[gi][ni].ok_or_else(|| PipelineError::Prediction {
                    doc_id: pd.id.clone(),
                    np_index: ni,
                    message: "missing pred= key".into(),
                })?;
            items.push((gd.id.as_str(), (gold_label, predicted)));
        }
    }
    Ok(Report::from_groups(title, grouped(items)))
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub manual: Report,
    pub ml1: Report,
    pub ml2: Report,
    pub ml1_model: MaxEntModel,
    pub ml2_model: MaxEntModel,
    pub rebalance_factors: PerCategory<u32>,
    pub diagnostics: Vec<Diagnostic>,
}

fn require_gold(corpus: &Corpus) -> Result<(), PipelineError> {
    match corpus.nps().find(|np| np.gold.is_none()) {
        Some(np) => Err(PipelineError::MissingGold {
            doc_id: np.doc_id.clone(),
            np_index: np.np_index,
        }),
        None => Ok(()),
    }
}

/// Runs the three arms on `test` after training the two learned models on
/// `train`. The second model always rebalances: with explicit factors when
/// the configuration supplies them, with inverse-occurrence factors otherwise.
pub fn run_experiment(
    train: &Corpus,
    test: &Corpus,
    rules: &RuleSet,
    config: &TrainConfig,
) -> Result<ExperimentResult, PipelineError> {
    require_gold(train)?;
    require_gold(test)?;
    let (events, diagnostics) = compile_events(train, rules)?;

    let ml1_config = TrainConfig {
        rebalance: Rebalance::None,
        ..*config
    };
    let ml2_config = TrainConfig {
        rebalance: match config.rebalance {
            Rebalance::Factors(f) => Rebalance::Factors(f),
            _ => Rebalance::Auto,
        },
        ..*config
    };
    let ml1_model = maxent::train_for_rules(&events, rules, &ml1_config)?;
    let ml2_model = maxent::train_for_rules(&events, rules, &ml2_config)?;
    let rebalance_factors = ml2_model
        .train_meta()
        .and_then(|m| m.rebalance_factors)
        .expect("rebalanced training records its factors");

    let manual = report_for(
        "Manual scoring (test set)",
        &annotate_corpus(test, rules, Decider::Manual)?,
    )?;
    let ml1 = report_for(
        "Maximum entropy, no rebalancing (test set)",
        &annotate_corpus(test, rules, Decider::Model(&ml1_model))?,
    )?;
    let ml2 = report_for(
        "Maximum entropy, rebalanced (test set)",
        &annotate_corpus(test, rules, Decider::Model(&ml2_model))?,
    )?;

    Ok(ExperimentResult {
        manual,
        ml1,
        ml2,
        ml1_model,
        ml2_model,
        rebalance_factors,
        diagnostics,
    })
}
