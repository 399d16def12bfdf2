use argmove::format::{
    parse_corpus, parse_documents, parse_training, read_model, write_corpus, write_essays, write_model,
    write_training, Document,
};
use argmove_core::labeler::{train_baseline, TrainConfig};
use argmove_core::pipeline::prepare_example;
use argmove_core::segmenter::AlignOptions;
use argmove_core::synthgen::{generate_corpus, GeneratorConfig};
use argmove_core::{AnnotatedEssay, Essay, SegmentationRules};

fn corpus() -> Vec<AnnotatedEssay> {
    generate_corpus(&GeneratorConfig { learners: 8, seed: 21, ..GeneratorConfig::default() }).unwrap()
}

#[test]
fn corpus_round_trips_exactly() {
    let c = corpus();
    let mut bytes = Vec::new();
    write_corpus(&mut bytes, &c).unwrap();
    let back = parse_corpus(bytes.as_slice()).unwrap();
    assert_eq!(back, c);
    let mut again = Vec::new();
    write_corpus(&mut again, &back).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn unannotated_essays_round_trip() {
    let essays: Vec<Essay> = corpus().into_iter().map(AnnotatedEssay::into_essay).collect();
    let mut bytes = Vec::new();
    write_essays(&mut bytes, &essays).unwrap();
    let back: Vec<Essay> = parse_documents(bytes.as_slice()).unwrap().into_iter().map(Document::into_essay).collect();
    assert_eq!(back, essays);
    assert!(parse_corpus(bytes.as_slice()).is_err());
}

#[test]
fn non_ascii_offsets_are_characters() {
    let line = r#"{"essay_id":"u","learner_id":"l","wave":3,"quality_level":null,"text":"Ünïcödé — wörks. Ja.","moves":[{"start":0,"end":16,"label":"claim"},{"start":16,"end":20,"label":"data"}],"source":"model"}"#;
    let c = parse_corpus(line.as_bytes()).unwrap();
    assert_eq!(c[0].essay().len(), 20);
    let mut out = Vec::new();
    write_corpus(&mut out, &c).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().trim_end(), line);
}

#[test]
fn training_file_and_model_round_trip() {
    let rules = SegmentationRules::default();
    let examples: Vec<_> =
        corpus().iter().map(|e| prepare_example(e, &rules, AlignOptions::default()).unwrap().example).collect();
    let mut bytes = Vec::new();
    write_training(&mut bytes, &examples).unwrap();
    assert_eq!(parse_training(bytes.as_slice()).unwrap(), examples);

    let model = train_baseline(&examples, &TrainConfig { epochs: 5, ..TrainConfig::default() }).unwrap();
    let mut json = Vec::new();
    write_model(&mut json, &model).unwrap();
    let back = read_model(json.as_slice()).unwrap();
    for ex in &examples {
        assert_eq!(back.predict(&ex.context), model.predict(&ex.context));
    }
    let broken = String::from_utf8(json).unwrap().replacen('[', "[[", 1);
    assert!(read_model(broken.as_bytes()).is_err());
}
