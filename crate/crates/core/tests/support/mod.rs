#![allow(dead_code)]

//! Shared helpers for the integration tests: an independent brute-force
//! likelihood maximizer and proptest strategies.

use proptest::prelude::*;

use refprop::corpus::{EmbeddedNp, HeadClass, NpContext, PredPos, Tense};
use refprop::maxent::Event;
use refprop::{Category, Corpus, Document, GoldLabel, PerCategory};

/// A small training problem over features `f0..f{n-1}`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n_features: usize,
    pub events: Vec<Event>,
    pub smoothing: f64,
}

impl Instance {
    pub fn feature_ids(&self) -> Vec<String> {
        (0..self.n_features).map(|i| format!("f{i}")).collect()
    }

    /// Every distinct feature set in the events plus each singleton.
    pub fn probe_sets(&self) -> Vec<Vec<String>> {
        let mut sets: Vec<Vec<String>> = self.feature_ids().into_iter().map(|f| vec![f]).collect();
        for e in &self.events {
            let mut s = e.features.clone();
            s.sort();
            s.dedup();
            if !sets.contains(&s) {
                sets.push(s);
            }
        }
        sets
    }
}

fn category() -> impl Strategy<Value = Category> {
    prop_oneof![
        Just(Category::Indefinite),
        Just(Category::Definite),
        Just(Category::Generic)
    ]
}

/// Instances with at most `max_features` features and `max_events` events.
pub fn instance(max_features: usize, max_events: usize) -> impl Strategy<Value = Instance> {
    (1..=max_features).prop_flat_map(move |n| {
        let event = (1u32..(1 << n), category(), prop_oneof![Just(1.0), 0.5f64..3.0]).prop_map(
            move |(mask, gold, weight)| {
                let features = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| format!("f{i}"))
                    .collect();
                Event {
                    features,
                    gold,
                    weight,
                }
            },
        );
        (
            proptest::collection::vec(event, 1..=max_events),
            0.1f64..1.0,
        )
            .prop_map(move |(events, smoothing)| Instance {
                n_features: n,
                events,
                smoothing,
            })
    })
}

/// Total variation distance between two category distributions.
pub fn total_variation(p: &PerCategory<f64>, q: &PerCategory<f64>) -> f64 {
    0.5 * (0..3).map(|k| (p.0[k] - q.0[k]).abs()).sum::<f64>()
}

/// Brute-force maximizer of the smoothed weighted conditional log-likelihood
///
///   Σ_x w_x log p(y_x | S_x) + s · Σ_f Σ_c log p(c | {f}),  s = ε · mean(w)
///
/// by cyclic coordinate ascent with golden-section line search. The weight of
/// the first category is pinned to zero for every feature, which removes the
/// flat direction without changing any conditional.
pub struct Oracle {
    n: usize,
    events: Vec<(Vec<usize>, usize, f64)>,
    pseudo: f64,
}

impl Oracle {
    pub fn new(inst: &Instance) -> Self {
        let events: Vec<(Vec<usize>, usize, f64)> = inst
            .events
            .iter()
            .map(|e| {
                let mut fs: Vec<usize> = e
                    .features
                    .iter()
                    .map(|f| f[1..].parse().unwrap())
                    .collect();
                fs.sort();
                fs.dedup();
                (fs, e.gold.index(), e.weight)
            })
            .collect();
        let mean = events.iter().map(|e| e.2).sum::<f64>() / events.len() as f64;
        Oracle {
            n: inst.n_features,
            events,
            pseudo: inst.smoothing * mean,
        }
    }

    fn log_prob(lambda: &[[f64; 3]], fs: &[usize], c: usize) -> f64 {
        let mut s = [0.0f64; 3];
        for &f in fs {
            for k in 0..3 {
                s[k] += lambda[f][k];
            }
        }
        let m = s[0].max(s[1]).max(s[2]);
        let z: f64 = s.iter().map(|x| (x - m).exp()).sum();
        s[c] - m - z.ln()
    }

    pub fn objective(&self, lambda: &[[f64; 3]]) -> f64 {
        let mut ll = 0.0;
        for (fs, y, w) in &self.events {
            ll += w * Self::log_prob(lambda, fs, *y);
        }
        for f in 0..self.n {
            for c in 0..3 {
                ll += self.pseudo * Self::log_prob(lambda, &[f], c);
            }
        }
        ll
    }

    fn line_search(&self, lambda: &mut [[f64; 3]], f: usize, c: usize) -> f64 {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let start = lambda[f][c];
        let (mut lo, mut hi) = (start - 25.0, start + 25.0);
        let eval = |x: f64, lambda: &mut [[f64; 3]]| {
            lambda[f][c] = x;
            self.objective(lambda)
        };
        let mut a = hi - golden * (hi - lo);
        let mut b = lo + golden * (hi - lo);
        let mut fa = eval(a, lambda);
        let mut fb = eval(b, lambda);
        while hi - lo > 1e-11 {
            if fa < fb {
                lo = a;
                a = b;
                fa = fb;
                b = lo + golden * (hi - lo);
                fb = eval(b, lambda);
            } else {
                hi = b;
                b = a;
                fb = fa;
                a = hi - golden * (hi - lo);
                fa = eval(a, lambda);
            }
        }
        let best = 0.5 * (lo + hi);
        // Keep the old value unless the search actually improved on it.
        let new_val = eval(best, lambda);
        let old_val = eval(start, lambda);
        if new_val >= old_val {
            lambda[f][c] = best;
            (best - start).abs()
        } else {
            lambda[f][c] = start;
            0.0
        }
    }

    pub fn solve(&self) -> Vec<[f64; 3]> {
        let mut lambda = vec![[0.0; 3]; self.n];
        for _ in 0..5000 {
            let mut change = 0.0f64;
            for f in 0..self.n {
                for c in 1..3 {
                    change = change.max(self.line_search(&mut lambda, f, c));
                }
            }
            if change < 1e-9 {
                break;
            }
        }
        lambda
    }

    pub fn predict(lambda: &[[f64; 3]], features: &[String]) -> PerCategory<f64> {
        let fs: Vec<usize> = features.iter().map(|f| f[1..].parse().unwrap()).collect();
        PerCategory::from_fn(|c| Self::log_prob(lambda, &fs, c.index()).exp())
    }
}

fn surface() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("inu".to_string()),
        Just("hon".to_string()),
        Just("kare".to_string()),
        Just("wareware".to_string()),
        "[a-z][a-z:=#_]{0,6}",
    ]
}

fn gold() -> impl Strategy<Value = Option<GoldLabel>> {
    prop_oneof![
        Just(None),
        Just(Some(GoldLabel::Other)),
        category().prop_map(|c| Some(GoldLabel::Category(c))),
    ]
}

/// Attribute payload of a record, without its position.
pub fn np_attributes() -> impl Strategy<Value = NpContext> {
    let head = prop_oneof![
        Just(HeadClass::Common),
        Just(HeadClass::Proper),
        Just(HeadClass::Pronoun)
    ];
    let tense = prop_oneof![Just(None), Just(Some(Tense::Past)), Just(Some(Tense::Nonpast))];
    let pos = prop_oneof![
        Just(None),
        Just(Some(PredPos::Verb)),
        Just(Some(PredPos::Adjective)),
        Just(Some(PredPos::Copula))
    ];
    let particle = prop_oneof![
        Just(None),
        Just(Some("wa".to_string())),
        Just(Some("ga".to_string())),
        Just(Some("wo".to_string())),
        "[a-z]{1,8}".prop_map(Some),
    ];
    let embedded = prop_oneof![Just(None), Just(Some(Tense::Past)), Just(Some(Tense::Nonpast))];
    let inner = proptest::collection::vec(
        (surface(), prop_oneof![Just("ga".to_string()), Just("wa".to_string()), Just("no".to_string())]),
        0..3,
    );
    (
        (surface(), head, particle, tense, pos),
        proptest::bits::u8::masked(0b11111),
        any::<bool>(),
        embedded,
        inner,
        gold(),
    )
        .prop_map(
            |((surface, head, particle, tense, pos), flags, adverb, embedded, inner, gold)| {
                let mut np = NpContext::new("", 0, 0, surface, head);
                np.particle = particle;
                np.predicate_tense = tense;
                np.predicate_pos = pos;
                np.demonstrative = flags & 1 != 0;
                np.aru_modifier = flags & 2 != 0;
                np.numeral_modifier = flags & 4 != 0;
                np.has_modifier = flags & 8 != 0;
                np.pronoun_in_modifier = flags & 16 != 0;
                np.adverb_class = adverb.then_some(refprop::corpus::AdverbClass::Generic);
                np.embedded_clause = embedded;
                if embedded.is_some() {
                    np.embedded_nps = inner
                        .into_iter()
                        .map(|(surface, particle)| EmbeddedNp { surface, particle })
                        .collect();
                }
                np.gold = gold;
                np
            },
        )
}

/// One well-formed document of up to `max_nps` records.
pub fn document(id: String, max_nps: usize) -> impl Strategy<Value = Document> {
    proptest::collection::vec((np_attributes(), any::<bool>()), 0..=max_nps).prop_map(
        move |records| {
            let mut sentence = 0;
            let nps = records
                .into_iter()
                .enumerate()
                .map(|(i, (mut np, next_sentence))| {
                    if i > 0 && next_sentence {
                        sentence += 1;
                    }
                    np.doc_id = id.clone();
                    np.sentence_index = sentence;
                    np.np_index = i;
                    np
                })
                .collect();
            Document { id: id.clone(), nps }
        },
    )
}

pub fn corpus(max_docs: usize, max_nps: usize) -> impl Strategy<Value = Corpus> {
    (0..=max_docs).prop_flat_map(move |n| {
        let docs: Vec<_> = (0..n).map(|i| document(format!("doc{i}"), max_nps)).collect();
        docs.prop_map(|documents| Corpus { documents })
    })
}
