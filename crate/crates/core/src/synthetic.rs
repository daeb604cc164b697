//! Deterministic synthetic corpora for exercising the trainer end to end.
//!
//! Noun-phrase attributes are sampled independently per record; the gold
//! label is then drawn from a fixed log-linear generator over the rules that
//! fire (with gold labels of earlier noun phrases feeding the dynamic rules).
//! Two hard constraints are planted: `aru`-modified nouns are always
//! indefinite and pronouns are always definite. The class biases give a skew
//! of roughly 29 / 58 / 13 percent indefinite / definite / generic.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::category::{Category, GoldLabel, PerCategory};
use crate::corpus::{
    AdverbClass, Corpus, Document, EmbeddedNp, HeadClass, NpContext, PredPos, Tense,
};
use crate::rules::{fire_rules, DiscourseStore, RuleSet};

/// Bundled training corpus (generated by [`bundled_train`]'s parameters).
pub const TRAIN_CORPUS: &str = include_str!("../data/synthetic_train.rp");
/// Bundled test corpus.
pub const TEST_CORPUS: &str = include_str!("../data/synthetic_test.rp");

pub const TRAIN_SEED: u64 = 0x7265_6670_726f_7031;
pub const TEST_SEED: u64 = 0x7265_6670_726f_7032;

const COMMON: &[&str] = &[
    "inu", "neko", "hon", "kudamono", "ki", "yama", "kawa", "ie", "michi", "hana", "kuruma",
    "tegami", "kome", "sakana", "tori", "mado", "isu", "kane", "shashou", "kippu", "jouyousha",
    "torakku", "ringo", "kotoba", "uta", "fune", "mura", "machi", "kodomo", "ojiisan",
];
const PROPER: &[&str] = &["taro", "hanako", "kyouto", "tokyo", "fuji"];
const PRONOUN: &[&str] = &["watashi", "wareware", "kare", "kanojo", "sore"];

/// Generator weights per default rule id: (indefinite, definite, generic).
const WEIGHTS: &[(&str, [f64; 3])] = &[
    ("r1_demonstrative", [-2.0, 2.5, -1.0]),
    ("r2_wa_past", [-0.5, 1.2, 0.0]),
    ("r3_wa_present_copula", [-0.5, 0.0, 1.2]),
    ("a_wa_nonpast", [-0.5, 0.3, 1.0]),
    ("b_embedded_past", [0.0, 0.6, -0.4]),
    ("c_embedded_def_wa_ga", [-0.3, 0.8, -0.3]),
    ("d_embedded_def_any", [-0.2, 0.5, -0.2]),
    ("e_pronoun_in_modifier", [0.0, 0.5, 0.0]),
    ("f_wa_adjective", [-0.3, 0.5, 0.9]),
    ("g_common_noun", [0.6, 0.0, -0.2]),
    ("ind_ga", [1.2, 0.2, -0.6]),
    ("ind_aru", [0.0, 0.0, 0.0]),
    ("def_pronoun", [0.0, 0.0, 0.0]),
    ("gen_wa_no_modifier", [-0.6, 0.2, 1.0]),
];
const BIAS: [f64; 3] = [-0.3, 0.8, -0.3];

struct Sampler(ChaCha8Rng);

impl Sampler {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[self.below(xs.len())]
    }

    fn weighted<T: Copy>(&mut self, choices: &[(T, f64)]) -> T {
        let total: f64 = choices.iter().map(|(_, w)| w).sum();
        let mut u = self.uniform() * total;
        for &(x, w) in choices {
            if u < w {
                return x;
            }
            u -= w;
        }
        choices[choices.len() - 1].0
    }
}

fn gold_for(np: &NpContext, fired: &[&str], rng: &mut Sampler) -> Category {
    if np.aru_modifier {
        return Category::Indefinite;
    }
    if np.head_class == HeadClass::Pronoun {
        return Category::Definite;
    }
    let mut score = BIAS;
    for id in fired {
        if let Some((_, w)) = WEIGHTS.iter().find(|(r, _)| r == id) {
            for k in 0..3 {
                score[k] += w[k];
            }
        }
    }
    let m = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p = PerCategory(score.map(|s| (s - m).exp()));
    rng.weighted(&[
        (Category::Indefinite, p.0[0]),
        (Category::Definite, p.0[1]),
        (Category::Generic, p.0[2]),
    ])
}

fn sample_np(
    rng: &mut Sampler,
    doc_id: &str,
    sentence: usize,
    index: usize,
    earlier: &[NpContext],
) -> NpContext {
    let head = rng.weighted(&[
        (HeadClass::Common, 0.82),
        (HeadClass::Pronoun, 0.11),
        (HeadClass::Proper, 0.07),
    ]);
    let surface = match head {
        HeadClass::Common => rng.pick(COMMON),
        HeadClass::Proper => rng.pick(PROPER),
        HeadClass::Pronoun => rng.pick(PRONOUN),
    };
    let mut np = NpContext::new(doc_id, sentence, index, surface, head);
    np.particle = rng
        .weighted(&[
            (Some("wa"), 0.32),
            (Some("ga"), 0.22),
            (Some("wo"), 0.22),
            (Some("ni"), 0.12),
            (None, 0.12),
        ])
        .map(str::to_string);
    np.predicate_tense = rng.weighted(&[
        (Some(Tense::Past), 0.45),
        (Some(Tense::Nonpast), 0.47),
        (None, 0.08),
    ]);
    np.predicate_pos = rng.weighted(&[
        (Some(PredPos::Verb), 0.5),
        (Some(PredPos::Adjective), 0.22),
        (Some(PredPos::Copula), 0.22),
        (None, 0.06),
    ]);
    if head == HeadClass::Common {
        np.demonstrative = rng.chance(0.08);
        np.aru_modifier = !np.demonstrative && rng.chance(0.06);
        np.numeral_modifier = rng.chance(0.06);
        np.has_modifier = rng.chance(0.15);
        if rng.chance(0.22) {
            np.embedded_clause = Some(if rng.chance(0.6) {
                Tense::Past
            } else {
                Tense::Nonpast
            });
            if !earlier.is_empty() && rng.chance(0.7) {
                let inner = &earlier[rng.below(earlier.len())];
                let particle = rng.pick(&["ga", "wa", "wo"]);
                np.pronoun_in_modifier = inner.head_class == HeadClass::Pronoun;
                np.embedded_nps.push(EmbeddedNp {
                    surface: inner.surface.clone(),
                    particle: particle.to_string(),
                });
            }
        }
    }
    if rng.chance(0.05) {
        np.adverb_class = Some(AdverbClass::Generic);
    }
    np
}

/// Generates `docs` documents whose ids are `<group>/<nn>`, cycling through
/// `groups`, each with `nps_per_doc` noun phrases.
pub fn generate(seed: u64, groups: &[&str], docs: usize, nps_per_doc: usize) -> Corpus {
    let rules = RuleSet::default_rules();
    let mut rng = Sampler(ChaCha8Rng::seed_from_u64(seed));
    let mut corpus = Corpus::default();
    for d in 0..docs {
        let id = format!("{}/{:02}", groups[d % groups.len()], d / groups.len());
        let mut store = DiscourseStore::new();
        let mut nps: Vec<NpContext> = Vec::with_capacity(nps_per_doc);
        let mut sentence = 0;
        for i in 0..nps_per_doc {
            if i > 0 && rng.chance(0.45) {
                sentence += 1;
            }
            let mut np = sample_np(&mut rng, &id, sentence, i, &nps);
            let fired: Vec<&str> = fire_rules(&np, &store, &rules)
                .iter()
                .map(|r| r.id.as_str())
                .collect();
            let gold = gold_for(&np, &fired, &mut rng);
            store.record(&np.surface, gold, np.sentence_index);
            np.gold = Some(GoldLabel::Category(gold));
            nps.push(np);
        }
        corpus.documents.push(Document { id, nps });
    }
    corpus
}

pub const GROUPS: &[&str] = &["folktale", "essay", "report"];

/// Parameters of the bundled training corpus (300 noun phrases).
pub fn bundled_train() -> Corpus {
    generate(TRAIN_SEED, GROUPS, 20, 15)
}

/// Parameters of the bundled test corpus (150 noun phrases).
pub fn bundled_test() -> Corpus {
    generate(TEST_SEED, GROUPS, 10, 15)
}
