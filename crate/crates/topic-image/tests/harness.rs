use topic_image::config::RunConfig;
use topic_image::harness::{fold_examples, run_cross_validation, score_pair, train_full, Method};
use topic_image::model_file::ModelFile;
use topic_image::report::ReportDocument;
use topic_image::synth::{generate, SynthConfig};
use topic_image::Error;
use topic_image_core::features::{FeatureConfig, FeatureDims};
use topic_image_core::neuralnet::MlpModel;

fn small_config(epochs: usize) -> RunConfig {
    let mut c = RunConfig::default();
    c.dims = FeatureDims { text: 16, visual: 32 };
    c.train.epochs = epochs;
    c
}

#[test]
fn toy_corpus_fold_sizes() {
    let corpus = generate(&SynthConfig::small(10, 1)).unwrap();
    let folds = fold_examples(&small_config(1), &corpus.dataset).unwrap();
    assert_eq!(folds.len(), 5);
    for (split, ex) in folds {
        assert_eq!((split.train_topics.len(), split.test_topics.len()), (8, 2));
        assert_eq!(ex.train.len(), 320);
        assert_eq!(ex.test.len(), 40);
        assert_eq!(ex.train.iter().filter(|e| e.negative).count(), 160);
    }
}

#[test]
fn every_topic_tested_once_and_report_is_consistent() {
    let corpus = generate(&SynthConfig::small(15, 2)).unwrap();
    let methods = [Method::Random, Method::LocalPpr, Method::GlobalPpr, Method::Linear, Method::Dnn(FeatureConfig::TOPIC_CAPTION)];
    let report = run_cross_validation(&small_config(2), &corpus.dataset, &corpus.table, &methods).unwrap();
    for m in methods {
        assert_eq!(report.per_topic_top1[&m].len(), 15, "{m}");
        let mean = report.folds.iter().map(|f| f.scores.iter().find(|s| s.0 == m).unwrap().1.top1).sum::<f64>() / 5.0;
        assert!((report.scores(m).unwrap().top1 - mean).abs() < 1e-12);
    }
    assert_eq!(report.significance.len(), methods.len() * (methods.len() - 1) / 2);
    assert!(report.significance.iter().all(|s| (0.0..=1.0).contains(&s.test.p)));

    let doc = ReportDocument::from_evaluation(&report);
    assert_eq!(doc.header_value("seed"), Some("42"));
    assert_eq!(doc.header_value("fingerprint").unwrap().len(), 16);
    assert!(doc.header_value("metric").unwrap().contains("linear"));
    assert!(doc.header_value("ties").is_some());
    assert_eq!(doc.section("summary").unwrap().rows.len(), methods.len());
    assert_eq!(doc.section("folds").unwrap().rows.len(), 5 * methods.len());
    assert_eq!(doc.section("reference").unwrap().rows.len(), 2);
}

#[test]
fn score_pair_behaviour() {
    let corpus = generate(&SynthConfig::small(12, 3)).unwrap();
    let config = small_config(2);
    let model = train_full(&config, &corpus.dataset, &corpus.table).unwrap();
    let topic = &corpus.dataset.topics()[0];
    let image = &corpus.dataset.candidates_at(0)[0];
    let caption = image.caption_tokens.join(" ");
    let a = score_pair(&model, &corpus.table, &topic.terms, &caption, Some(&image.visual)).unwrap();
    let b = score_pair(&model, &corpus.table, &topic.terms, &caption, Some(&image.visual)).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());

    // Unseen terms and captions still score.
    let unseen = score_pair(&model, &corpus.table, &["t0w1".to_string()], "never seen words", Some(&image.visual)).unwrap();
    assert!(unseen.is_finite());

    assert!(matches!(
        score_pair(&model, &corpus.table, &topic.terms, &caption, None),
        Err(Error::FeatureMismatch(_))
    ));
    assert!(matches!(
        score_pair(&model, &corpus.table, &topic.terms, &caption, Some(&[0.0; 3])),
        Err(Error::FeatureMismatch(_))
    ));

    let zero = ModelFile::new(
        MlpModel::zeros(FeatureConfig::FULL.input_dim(model.dims), &[256, 128, 64, 32]).unwrap(),
        FeatureConfig::FULL,
        model.dims,
        model.train,
    );
    assert_eq!(score_pair(&zero, &corpus.table, &topic.terms, &caption, Some(&image.visual)).unwrap(), 0.0);
}

#[test]
fn caption_only_model_rejects_visual_input() {
    let corpus = generate(&SynthConfig::small(10, 4)).unwrap();
    let mut config = small_config(1);
    config.features = FeatureConfig::TOPIC_CAPTION;
    let model = train_full(&config, &corpus.dataset, &corpus.table).unwrap();
    assert_eq!(model.model.input_dim(), 32);
    let topic = &corpus.dataset.topics()[0];
    let image = &corpus.dataset.candidates_at(0)[0];
    assert!(score_pair(&model, &corpus.table, &topic.terms, "t0w0", None).is_ok());
    assert!(score_pair(&model, &corpus.table, &topic.terms, "t0w0", Some(&image.visual)).is_err());
}

#[test]
fn unrated_candidates_are_left_out_of_evaluation() {
    use topic_image_core::dataset::{Dataset, DatasetOptions};
    let corpus = generate(&SynthConfig::small(10, 5)).unwrap();
    let topics = corpus.dataset.topics().to_vec();
    let candidates = (0..10)
        .map(|t| {
            let mut list = corpus.dataset.candidates_at(t).to_vec();
            list[0].rating = None;
            list
        })
        .collect();
    let dataset = Dataset::new(topics, candidates, DatasetOptions::lenient(32)).unwrap();
    let mut config = small_config(1);
    config.strict = false;
    let report = run_cross_validation(&config, &dataset, &corpus.table, &[Method::Random, Method::LocalPpr, Method::Linear]).unwrap();
    assert!(report.folds.iter().all(|f| f.test_examples == 38 && f.train_examples == 8 * 19 + 8 * 20));
}
