mod support;

use proptest::prelude::*;

use refprop::evaluation::{
    macro_accuracy, micro_accuracy, render_summary, render_table, score, Report,
};
use refprop::manual::{aggregate, decide_manual};
use refprop::maxent::{self, predict, save_model, Event, Rebalance};
use refprop::pipeline::{annotate_corpus, annotate_document, Decider};
use refprop::rules::Outcome;
use refprop::{
    fire_rules, parse_corpus, validate, write_corpus, Category, DiscourseStore, GoldLabel,
    PerCategory, Rule, RuleSet, TrainConfig,
};

use support::{corpus, document, instance, np_attributes};

fn category() -> impl Strategy<Value = Category> {
    prop_oneof![
        Just(Category::Indefinite),
        Just(Category::Definite),
        Just(Category::Generic)
    ]
}

fn gold_label() -> impl Strategy<Value = GoldLabel> {
    prop_oneof![
        4 => category().prop_map(GoldLabel::Category),
        1 => Just(GoldLabel::Other),
    ]
}

fn pairs(max: usize) -> impl Strategy<Value = Vec<(GoldLabel, Category)>> {
    proptest::collection::vec((gold_label(), category()), 0..max)
}

fn scored_rule() -> impl Strategy<Value = Rule> {
    let outcome = (any::<bool>(), 0u8..=10).prop_map(|(p, v)| Outcome::new(p, if p { v } else { 0 }));
    proptest::array::uniform3(outcome).prop_map(|o| Rule {
        id: "r".into(),
        condition: Vec::new(),
        dynamic: false,
        outcomes: PerCategory(o),
    })
}

fn store_entries() -> impl Strategy<Value = Vec<(String, Category, usize)>> {
    let surface = prop_oneof![
        Just("inu".to_string()),
        Just("hon".to_string()),
        Just("kare".to_string()),
        Just("wareware".to_string()),
    ];
    proptest::collection::vec((surface, category(), 0usize..4), 0..5)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn corpus_round_trips_through_the_writer(c in corpus(3, 6)) {
        let text = write_corpus(&c);
        let back = parse_corpus(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(write_corpus(&back), text);
    }

    #[test]
    fn parsing_is_deterministic_and_yields_valid_corpora(c in corpus(3, 6)) {
        let text = write_corpus(&c);
        let a = parse_corpus(&text).unwrap();
        let b = parse_corpus(&text).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(validate(&a, false).is_empty());
    }

    #[test]
    fn any_text_that_parses_is_valid(lines in proptest::collection::vec(
        prop_oneof![
            Just("#doc a".to_string()),
            Just("#doc b".to_string()),
            Just("# note".to_string()),
            "sent=[0-3]\tsurface=[a-c]\thead=(common|pronoun)(\tembedded_np=x:ga)?(\tembedded=past)?",
        ],
        0..8,
    )) {
        if let Ok(c) = parse_corpus(&lines.join("\n")) {
            prop_assert!(validate(&c, false).is_empty());
        }
    }

    #[test]
    fn fire_rules_is_pure(np in np_attributes(), entries in store_entries()) {
        let rules = RuleSet::default_rules();
        let mut store = DiscourseStore::new();
        for (s, c, i) in &entries {
            store.record(s, *c, *i);
        }
        let a: Vec<&str> = fire_rules(&np, &store, &rules).iter().map(|r| r.id.as_str()).collect();
        let b: Vec<&str> = fire_rules(&np, &store, &rules).iter().map(|r| r.id.as_str()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn removing_store_entries_never_adds_firings(
        np in np_attributes(),
        entries in store_entries(),
        victim in 0usize..5,
    ) {
        let rules = RuleSet::default_rules();
        let mut store = DiscourseStore::new();
        for (s, c, i) in &entries {
            store.record(s, *c, *i);
        }
        let before: Vec<String> = fire_rules(&np, &store, &rules).iter().map(|r| r.id.clone()).collect();
        if let Some((s, _, _)) = entries.get(victim) {
            store.remove(s);
        }
        for r in fire_rules(&np, &store, &rules) {
            prop_assert!(before.contains(&r.id), "{} appeared", r.id);
        }
        for r in rules.rules().iter().filter(|r| !r.dynamic) {
            let fired_before = before.contains(&r.id);
            prop_assert_eq!(fired_before, r.matches(&np, &store));
        }
    }

    #[test]
    fn aggregate_ignores_rule_order(rules in proptest::collection::vec(scored_rule(), 0..8), seed in any::<u64>()) {
        let mut shuffled = rules.clone();
        let n = shuffled.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(aggregate(&rules), aggregate(&shuffled));
    }

    #[test]
    fn manual_decision_respects_possibility(rules in proptest::collection::vec(scored_rule(), 0..8)) {
        let score = aggregate(&rules);
        let (c, defaulted) = decide_manual(&score, !rules.is_empty());
        prop_assert!(defaulted || score.possibility[c]);
        if defaulted {
            prop_assert_eq!(c, Category::Indefinite);
        }
    }

    #[test]
    fn score_is_permutation_invariant(p in pairs(60)) {
        let mut rev = p.clone();
        rev.reverse();
        let mut sorted = p.clone();
        sorted.sort_by_key(|(g, c)| (g.code(), c.index()));
        prop_assert_eq!(score(p.clone(), "s").counts, score(rev, "s").counts);
        prop_assert_eq!(score(p, "s").counts, score(sorted, "s").counts);
    }

    #[test]
    fn merging_counts_matches_concatenated_scoring(a in pairs(40), b in pairs(40)) {
        let mut merged = score(a.clone(), "a").counts;
        merged.merge(&score(b.clone(), "b").counts);
        let joined: Vec<_> = a.into_iter().chain(b).collect();
        prop_assert_eq!(merged, score(joined, "ab").counts);
    }

    #[test]
    fn accuracies_are_percentages(p in pairs(60)) {
        let counts = score(p, "s").counts;
        if let Ok(m) = micro_accuracy(&counts) {
            prop_assert!((0.0..=100.0).contains(&m));
        }
        if let Ok(m) = macro_accuracy(&counts) {
            prop_assert!((0.0..=100.0).contains(&m));
        }
    }

    #[test]
    fn rendering_is_deterministic(p in pairs(60), q in pairs(20)) {
        let build = || Report::from_groups("t", vec![("one", p.clone()), ("two", q.clone())]);
        prop_assert_eq!(render_table(&build()), render_table(&build()));
        prop_assert_eq!(render_summary(&build()), render_summary(&build()));
    }

    #[test]
    fn both_deciders_fire_the_same_rules_on_equal_prefixes(doc in document("d".into(), 10)) {
        let rules = RuleSet::default_rules();
        let ids: Vec<String> = rules.ids().map(String::from).collect();
        // Fired sets must agree up to and including the first disagreement.
        let model = refprop::MaxEntModel::uniform(ids, 0.01);
        let manual = annotate_document(&doc, &rules, Decider::Manual).unwrap();
        let learned = annotate_document(&doc, &rules, Decider::Model(&model)).unwrap();
        for (m, l) in manual.entries.iter().zip(&learned.entries) {
            prop_assert_eq!(&m.fired, &l.fired);
            if m.predicted != l.predicted {
                break;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rebalance_neutrality(inst in instance(4, 20), k in 0.05f64..20.0) {
        let cfg = TrainConfig {
            max_iterations: 200,
            constraint_tolerance: 0.0,
            smoothing: inst.smoothing,
            rebalance: Rebalance::None,
        };
        let scaled: Vec<Event> = inst
            .events
            .iter()
            .map(|e| Event { weight: e.weight * k, ..e.clone() })
            .collect();
        let ids = inst.feature_ids();
        let a = maxent::train(&inst.events, &ids, &cfg).unwrap();
        let b = maxent::train(&scaled, &ids, &cfg).unwrap();
        for set in inst.probe_sets() {
            let p = predict(&a, &set).unwrap();
            let q = predict(&b, &set).unwrap();
            for c in Category::ALL {
                prop_assert!((p[c] - q[c]).abs() <= 1e-9, "{set:?}: {} vs {}", p[c], q[c]);
            }
        }
    }

    #[test]
    fn training_is_deterministic(inst in instance(4, 20)) {
        let cfg = TrainConfig {
            smoothing: inst.smoothing,
            rebalance: Rebalance::Auto,
            ..TrainConfig::default()
        };
        let ids = inst.feature_ids();
        let a = maxent::train(&inst.events, &ids, &cfg);
        let b = maxent::train(&inst.events, &ids, &cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(save_model(&a), save_model(&b)),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            _ => prop_assert!(false, "one run failed"),
        }
    }
}

fn bundled() -> (refprop::Corpus, refprop::Corpus) {
    (
        parse_corpus(refprop::synthetic::TRAIN_CORPUS).unwrap(),
        parse_corpus(refprop::synthetic::TEST_CORPUS).unwrap(),
    )
}

#[test]
fn planted_constraints_show_in_the_conditionals() {
    let (train, _) = bundled();
    let rules = RuleSet::default_rules();
    let (events, _) = maxent::compile_events(&train, &rules).unwrap();
    let model = maxent::train_for_rules(&events, &rules, &TrainConfig::default()).unwrap();
    let aru = maxent::per_feature_conditional(&model, "ind_aru").unwrap();
    let pronoun = maxent::per_feature_conditional(&model, "def_pronoun").unwrap();
    assert!(aru[Category::Indefinite] >= 0.95, "{aru:?}");
    assert!(pronoun[Category::Definite] >= 0.95, "{pronoun:?}");
    for p in [aru, pronoun] {
        assert!((p.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.0.iter().all(|&x| x > 0.0 && x < 1.0));
    }
}

#[test]
fn experiment_is_deterministic() {
    let (train, test) = bundled();
    let rules = RuleSet::default_rules();
    let cfg = TrainConfig::default();
    let a = refprop::pipeline::run_experiment(&train, &test, &rules, &cfg).unwrap();
    let b = refprop::pipeline::run_experiment(&train, &test, &rules, &cfg).unwrap();
    assert_eq!(render_table(&a.ml2), render_table(&b.ml2));
    assert_eq!(save_model(&a.ml1_model), save_model(&b.ml1_model));
    assert_eq!(save_model(&a.ml2_model), save_model(&b.ml2_model));
    assert_eq!(a.rebalance_factors, b.rebalance_factors);
}

/// Each noun phrase fires exactly one of three static rules, and each rule
/// always co-occurs with the same gold category.
#[test]
fn separable_corpus_is_learned_exactly() {
    let mut text = String::new();
    for d in 0..4 {
        text.push_str(&format!("#doc sep/{d}\n"));
        for i in 0..9 {
            let (extra, gold) = match i % 3 {
                0 => ("\tparticle=ga", "indef"),
                1 => ("\tdemonstrative=1", "def"),
                _ => ("\tparticle=wa\tpred_tense=nonpast\tpred_pos=adjective", "gen"),
            };
            text.push_str(&format!("sent={i}\tsurface=n{i}\thead=proper{extra}\tgold={gold}\n"));
        }
        text.push_str("sent=9\tsurface=solo\thead=proper\tgold=def\n");
    }
    let corpus = parse_corpus(&text).unwrap();
    let rules = refprop::load_rules(
        "rule: ga\nwhen: particle=ga\nindef: 1 1\ndef: 1 0\ngen: 1 0\n\n\
         rule: dem\nwhen: flag=demonstrative\nindef: 1 0\ndef: 1 1\ngen: 1 0\n\n\
         rule: adj\nwhen: particle=wa AND pred_pos=adjective\nindef: 1 0\ndef: 1 0\ngen: 1 1\n",
    )
    .unwrap();
    let result = refprop::pipeline::run_experiment(&corpus, &corpus, &rules, &TrainConfig::default())
        .unwrap();
    for model in [&result.ml1_model, &result.ml2_model] {
        let docs = annotate_corpus(&corpus, &rules, Decider::Model(model)).unwrap();
        for e in docs.iter().flat_map(|d| &d.entries).filter(|e| !e.defaulted) {
            assert_eq!(Some(GoldLabel::Category(e.predicted)), e.np.gold);
        }
    }
}

#[test]
fn empty_test_corpus_scores_nothing() {
    let (train, _) = bundled();
    let empty = parse_corpus("").unwrap();
    let result = refprop::pipeline::run_experiment(
        &train,
        &empty,
        &RuleSet::default_rules(),
        &TrainConfig::default(),
    )
    .unwrap();
    for report in [&result.manual, &result.ml1, &result.ml2] {
        assert_eq!(report.average().total(), 0);
        assert!(report.micro().is_err());
    }
}
