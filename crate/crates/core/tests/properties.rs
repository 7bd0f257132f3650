use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topic_image_core::dataset::{ImageCandidate, Topic};
use topic_image_core::embeddings::EmbeddingTable;
use topic_image_core::features::{featurize_pair, FeatureConfig, FeatureDims};
use topic_image_core::neuralnet::{train, MlpModel, TrainConfig};

const VOCAB: [&str; 6] = ["alpha", "beta", "gamma", "delta", "eps", "zeta"];

fn table(seed: u64, dim: usize) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = EmbeddingTable::new(dim).unwrap();
    for w in VOCAB {
        t.insert(w, (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    }
    t
}

fn tokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop_oneof![prop::sample::select(VOCAB.to_vec()).prop_map(String::from), "[a-z]{3}".prop_map(String::from)],
        1..12,
    )
}

proptest! {
    #[test]
    fn mean_pool_is_permutation_invariant(toks in tokens(), seed in any::<u64>()) {
        let t = table(seed, 5);
        let mut rev = toks.clone();
        rev.reverse();
        let a = t.mean_pool(&toks).unwrap();
        let b = t.mean_pool(&rev).unwrap();
        prop_assert_eq!(a.found, b.found);
        for (x, y) in a.vector.iter().zip(&b.vector) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_pool_of_copies_is_lookup(k in 1usize..10, idx in 0usize..VOCAB.len()) {
        let t = table(1, 4);
        let toks = vec![VOCAB[idx]; k];
        let p = t.mean_pool(&toks).unwrap();
        for (x, y) in p.vector.iter().zip(t.lookup(VOCAB[idx]).unwrap()) {
            prop_assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0));
        }
    }

    #[test]
    fn mean_pool_within_component_bounds(toks in tokens(), seed in any::<u64>()) {
        let t = table(seed, 5);
        let p = t.mean_pool(&toks).unwrap();
        let found: Vec<&[f64]> = toks.iter().filter_map(|w| t.lookup(w)).collect();
        if found.is_empty() {
            prop_assert!(p.vector.iter().all(|&v| v == 0.0));
        } else {
            for c in 0..5 {
                let lo = found.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
                let hi = found.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(p.vector[c] >= lo - 1e-12 && p.vector[c] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn featurize_length_order_and_determinism(terms in tokens(), caption in prop::collection::vec("[a-z]{2,6}", 0..8), cfg_idx in 0usize..3) {
        let cfg = [FeatureConfig::FULL, FeatureConfig::TOPIC_CAPTION, FeatureConfig::TOPIC_VISUAL][cfg_idx];
        let dims = FeatureDims { text: 5, visual: 7 };
        let t = table(3, 5);
        let topic = Topic::new("t", terms.clone());
        let image = ImageCandidate::new("i", caption.clone(), vec![0.25; 7], None);
        let a = featurize_pair(&topic, &image, &t, cfg, dims).unwrap();
        prop_assert_eq!(a.len(), cfg.input_dim(dims));
        let b = featurize_pair(&topic, &image, &t, cfg, dims).unwrap();
        prop_assert_eq!(&a, &b);
        let mut rterms = terms;
        rterms.reverse();
        let mut rcap = caption;
        rcap.reverse();
        let c = featurize_pair(&Topic::new("t", rterms), &ImageCandidate::new("i", rcap, vec![0.25; 7], None), &t, cfg, dims).unwrap();
        for (x, y) in a.values.iter().zip(&c.values) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn full_sized_inputs() {
    let mut t = EmbeddingTable::new(300).unwrap();
    t.insert("w", vec![0.5; 300]).unwrap();
    let topic = Topic::new("t", vec!["w".into(); 10]);
    let image = ImageCandidate::new("i", vec!["w".into(), "oov".into()], vec![0.001; 1000], Some(1.0));
    let dims = FeatureDims::default();
    for (cfg, len) in [
        (FeatureConfig::FULL, 1600),
        (FeatureConfig::TOPIC_VISUAL, 1300),
        (FeatureConfig::TOPIC_CAPTION, 600),
    ] {
        assert_eq!(featurize_pair(&topic, &image, &t, cfg, dims).unwrap().len(), len);
    }
}

#[test]
fn dropout_preserves_expected_activation() {
    let model = MlpModel::new(6, &[32, 16], true, 4).unwrap();
    let x = [0.3, -0.1, 0.8, 0.5, -0.6, 0.2];
    let (_, clean) = model.forward(&x).unwrap();
    let base = &clean.hidden_activations()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let trials = 20_000;
    let mut mean = vec![0.0; base.len()];
    for _ in 0..trials {
        let (_, cache) = model.forward_train(&x, 0.2, &mut rng).unwrap();
        for (m, v) in mean.iter_mut().zip(&cache.hidden_activations()[0]) {
            *m += v / trials as f64;
        }
    }
    let total_base: f64 = base.iter().sum();
    let total_mean: f64 = mean.iter().sum();
    assert!(total_base > 0.0);
    assert!((total_mean - total_base).abs() / total_base < 0.02, "{total_mean} vs {total_base}");
}

#[test]
fn backward_applies_dropout_masks() {
    // Replays a recorded mask in a hand-written forward pass and compares
    // against central differences.
    let mut model = MlpModel::new(5, &[6, 4], true, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for l in model.layers_mut() {
        l.biases.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
    }
    let x = [0.4, -0.2, 0.9, 0.1, -0.5];
    let (pred, cache) = model.forward_train(&x, 0.5, &mut rng).unwrap();
    let masks: Vec<Vec<f64>> = cache.masks().iter().map(|m| m.clone().unwrap()).collect();
    let target = pred + 2.0;
    let replay = |m: &MlpModel| -> f64 {
        let mut h = x.to_vec();
        let n = m.layers().len();
        for (i, layer) in m.layers().iter().enumerate() {
            let mut z = layer.biases.clone();
            for (k, hk) in h.iter().enumerate() {
                for (j, zj) in z.iter_mut().enumerate() {
                    *zj += hk * layer.weight(k, j);
                }
            }
            h = if i + 1 < n {
                z.iter().zip(&masks[i]).map(|(v, mk)| v.max(0.0) * mk).collect()
            } else {
                z
            };
        }
        (h[0] - target).abs()
    };
    assert!((replay(&model) - (pred - target).abs()).abs() < 1e-12);
    let grads = model.backward(&cache, target).unwrap();
    for l in 0..model.layers().len() {
        for p in 0..model.layers()[l].weights.len() {
            let mut plus = model.clone();
            plus.layers_mut()[l].weights[p] += 1e-5;
            let mut minus = model.clone();
            minus.layers_mut()[l].weights[p] -= 1e-5;
            let numeric = (replay(&plus) - replay(&minus)) / 2e-5;
            let analytic = grads.layers[l].weights[p];
            assert!((numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6) < 1e-4);
        }
    }
}

#[test]
fn training_on_random_data_stays_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let data: Vec<(Vec<f64>, f64)> = (0..200)
        .map(|_| ((0..20).map(|_| rng.random_range(-1.0..1.0)).collect(), rng.random_range(-1.0..1.0)))
        .collect();
    let mut model = MlpModel::new(20, &[32, 16, 8, 4], true, 2).unwrap();
    let cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
    let h = train(&mut model, &data, &cfg).unwrap();
    assert!(h.epoch_losses.iter().all(|l| l.is_finite()));
    assert!(model.is_finite());
}

#[test]
fn constant_target_loss_settles() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data: Vec<(Vec<f64>, f64)> = (0..64)
        .map(|_| ((0..10).map(|_| rng.random_range(0.0..1.0)).collect(), 1.5))
        .collect();
    let mut model = MlpModel::new(10, &[16, 8], true, 5).unwrap();
    let cfg = TrainConfig { epochs: 30, dropout_rate: 0.0, ..TrainConfig::default() };
    let h = train(&mut model, &data, &cfg).unwrap().epoch_losses;
    for w in h[5..].windows(2) {
        assert!(w[1] <= w[0] * 1.05 + 1e-12, "{h:?}");
    }
    assert!(h[29] < h[0]);
}
