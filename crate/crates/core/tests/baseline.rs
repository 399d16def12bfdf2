use std::collections::BTreeMap;
use std::time::Instant;

use argmove_core::corpus::{split_corpus, Essay, SplitRatios, SplitStrategy};
use argmove_core::evaluation::{candidate_rows, evaluate_candidate_labels, prf, MatchCounts};
use argmove_core::labeler::{
    build_context, predict_labels, train_baseline, Classifier, FeatureConfig, LabelDistribution, TrainConfig,
    TrainingExample,
};
use argmove_core::pipeline::prepare_example;
use argmove_core::segmenter::{segment_candidates, AlignOptions};
use argmove_core::synthgen::{generate_corpus, GeneratorConfig};
use argmove_core::{AnnotatedEssay, CandidateLabel, SegmentationRules};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MARKERS: [&str; 9] = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india"];
const FILLER: [&str; 6] = ["the", "river", "was", "quiet", "stone", "light"];

/// Essays whose candidates each start with the marker word of their label.
fn separable_set(rng: &mut ChaCha8Rng, essays: usize) -> Vec<TrainingExample> {
    let rules = SegmentationRules { title_rule: false, ..SegmentationRules::default() };
    (0..essays)
        .map(|i| {
            let n = rng.random_range(3..9);
            let mut text = String::new();
            let mut labels = Vec::new();
            for k in 0..n {
                let l = rng.random_range(0..9);
                labels.push(CandidateLabel::ALL[l]);
                text.push_str(MARKERS[l]);
                for _ in 0..rng.random_range(1..5) {
                    text.push(' ');
                    text.push_str(FILLER[rng.random_range(0..FILLER.len())]);
                }
                text.push_str(if k + 1 == n { "." } else if rng.random_bool(0.5) { ", " } else { ". " });
            }
            let e = Essay::new(format!("s{i}"), "l", 1, text, None).unwrap();
            let context = build_context(&e, &segment_candidates(e.text(), &rules)).unwrap();
            assert_eq!(context.len(), labels.len());
            TrainingExample { context, labels }
        })
        .collect()
}

fn marker_features() -> FeatureConfig {
    FeatureConfig { lexicon: MARKERS.iter().map(|s| s.to_string()).collect(), ..FeatureConfig::default() }
}

/// A one-feature decision list: the first word of each candidate decides
/// its label. Returns the list if it is consistent with every example.
fn decision_list(examples: &[TrainingExample]) -> Option<BTreeMap<String, CandidateLabel>> {
    let mut rules = BTreeMap::new();
    for ex in examples {
        for (seg, label) in ex.context.segments.iter().zip(&ex.labels) {
            let word = seg.text.split_whitespace().next()?.trim_matches(|c: char| !c.is_alphanumeric()).to_string();
            if *rules.entry(word).or_insert(*label) != *label {
                return None;
            }
        }
    }
    Some(rules)
}

fn accuracy<C: Classifier>(model: &C, examples: &[TrainingExample]) -> f64 {
    let (mut right, mut total) = (0usize, 0usize);
    for ex in examples {
        let pred = predict_labels(&model.classify(&ex.context).unwrap());
        right += pred.iter().zip(&ex.labels).filter(|(a, b)| a == b).count();
        total += pred.len();
    }
    right as f64 / total as f64
}

#[test]
fn separable_markers_are_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let train = separable_set(&mut rng, 60);
    let list = decision_list(&train).expect("the marker set is separable by the first word");
    assert_eq!(list.len(), 9);

    let cfg = TrainConfig { epochs: 400, l2: 0.0, features: marker_features(), ..TrainConfig::default() };
    let model = train_baseline(&train, &cfg).unwrap();
    assert!(accuracy(&model, &train) >= 0.99);
    let held_out = separable_set(&mut rng, 30);
    assert!(accuracy(&model, &held_out) >= 0.99);
}

#[test]
fn loss_falls_every_five_epochs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let train = separable_set(&mut rng, 40);
    let cfg = TrainConfig { epochs: 600, l2: 0.0, features: marker_features(), ..TrainConfig::default() };
    let h = train_baseline(&train, &cfg).unwrap().metadata.loss_history;
    assert!(h.iter().all(|x| x.is_finite()));
    for k in 0..h.len() - 5 {
        if h[k] < 1e-3 {
            break;
        }
        assert!(h[k + 5] < h[k], "epoch {k}: {} then {}", h[k], h[k + 5]);
    }
    assert!(h[h.len() - 1] < h[0] / 10.0);
}

#[test]
fn training_and_inference_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let train = separable_set(&mut rng, 10);
    let cfg = TrainConfig { epochs: 50, features: marker_features(), ..TrainConfig::default() };
    let a = train_baseline(&train, &cfg).unwrap();
    let b = train_baseline(&train, &cfg).unwrap();
    assert_eq!(a, b);
    for ex in &train {
        let x = a.predict(&ex.context);
        let y = b.predict(&ex.context);
        for (p, q) in x.iter().zip(&y) {
            let bits = |d: &LabelDistribution| d.probabilities().map(f64::to_bits);
            assert_eq!(bits(p), bits(q));
        }
    }
}

proptest! {
    #[test]
    fn argmax_ignores_constant_logit_shift(
        logits in prop::array::uniform9(-20.0f64..20.0),
        shift in -50.0f64..50.0,
    ) {
        let shifted = logits.map(|l| l + shift);
        let a = LabelDistribution::from_logits(&logits);
        let b = LabelDistribution::from_logits(&shifted);
        prop_assert_eq!(predict_labels(&[a]), predict_labels(&[b]));
        let s: f64 = b.probabilities().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-6);
    }
}

fn prepared(essays: &[AnnotatedEssay]) -> Vec<TrainingExample> {
    let rules = SegmentationRules::default();
    essays.iter().map(|e| prepare_example(e, &rules, AlignOptions::default()).unwrap().example).collect()
}

#[test]
fn learns_the_synthetic_corpus_on_a_held_out_split() {
    let t = Instant::now();
    let corpus = generate_corpus(&GeneratorConfig { learners: 40, seed: 3, ..Default::default() }).unwrap();
    let split = split_corpus(corpus, SplitRatios::default(), 1, SplitStrategy::ByEssay).unwrap();
    let model = train_baseline(&prepared(&split.training), &TrainConfig::default()).unwrap();
    let mut counts = MatchCounts::default();
    for ex in prepared(&split.validation) {
        let pred = predict_labels(&model.predict(&ex.context));
        counts += evaluate_candidate_labels(&pred, &ex.labels).unwrap();
    }
    let report = prf(&counts, &candidate_rows());
    assert!(report.total.metrics.f1 >= 0.95, "micro-F1 {}", report.total.metrics.f1);
    assert!(t.elapsed().as_secs() < 60);
}
