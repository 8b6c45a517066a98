mod common;

use hdcdiff::classifier::{MODEL_MAGIC, MODEL_VERSION};
use hdcdiff::hdc::MIN_SIMILARITY;
use hdcdiff::{
    cosine_similarity, encode_image, EncoderConfig, HdcClassifier, HdcError, Hypervector, Image,
    ImageId,
};
use proptest::prelude::*;

fn classifier(dimension: usize, seed: u64) -> HdcClassifier {
    HdcClassifier::new(EncoderConfig::mnist(dimension, seed).unwrap()).unwrap()
}

#[test]
fn untrained_memory_is_zero() {
    let clf = classifier(64, 1);
    assert!(clf.am().is_untrained());
    assert_eq!(clf.am().num_classes(), 10);
}

#[test]
fn training_on_nothing_changes_nothing() {
    let mut clf = classifier(64, 1);
    clf.train(&[], &[]).unwrap();
    assert!(clf.am().is_untrained());
}

#[test]
fn single_image_lands_in_its_class() {
    let mut clf = classifier(256, 5);
    let x = common::random_image("one", 0, 9);
    clf.train(std::slice::from_ref(&x), &[3]).unwrap();
    let hv = encode_image(clf.item_memory(), &x).unwrap();
    for c in 0..10 {
        if c == 3 {
            assert_eq!(clf.am().class_hv(c), hv.components());
        } else {
            assert!(clf.am().class_hv(c).iter().all(|&v| v == 0));
        }
    }
    assert_eq!(clf.predict(&x).unwrap(), 3);
    let sims = clf.similarities(&x).unwrap();
    assert!((sims[3] - 1.0).abs() < 1e-12);
    assert!(sims.iter().enumerate().all(|(c, &s)| c == 3 || s == MIN_SIMILARITY));
}

#[test]
fn class_hvs_are_per_class_bundles() {
    let images = common::toy_set("bundle", 30, 4);
    let mut clf = classifier(128, 2);
    clf.train_labeled(&images).unwrap();
    for class in 0..10u8 {
        let mut expected = vec![0i32; 128];
        for x in images.iter().filter(|x| x.label == Some(class)) {
            let hv = encode_image(clf.item_memory(), x).unwrap();
            for (e, h) in expected.iter_mut().zip(hv.components()) {
                *e += h;
            }
        }
        assert_eq!(clf.am().class_hv(usize::from(class)), expected.as_slice());
    }
}

#[test]
fn out_of_range_label_is_a_domain_error() {
    let mut clf = classifier(32, 1);
    let x = common::random_image("bad", 0, 1);
    assert!(matches!(clf.train(&[x], &[10]).unwrap_err(), HdcError::Domain(_)));
}

#[test]
fn mismatched_lengths_rejected() {
    let mut clf = classifier(32, 1);
    let x = common::random_image("bad", 0, 1);
    assert!(clf.train(&[x], &[1, 2]).is_err());
}

#[test]
fn constant_images_are_separable() {
    let zeros = Image::filled(ImageId::new("c", 0), 28, 28, 0).with_label(Some(0));
    let full = Image::filled(ImageId::new("c", 1), 28, 28, 255).with_label(Some(1));
    let images = vec![zeros, full];
    let mut clf = classifier(1000, 11);
    clf.train_labeled(&images).unwrap();
    assert_eq!(clf.evaluate_labeled(&images).unwrap(), 1.0);
}

#[test]
fn evaluate_matches_an_independent_count() {
    let train = common::toy_set("train", 200, 1);
    let test = common::toy_set("test", 100, 2);
    let mut clf = classifier(512, 30);
    clf.train_labeled(&train).unwrap();
    let mut correct = 0;
    for x in &test {
        let hv = encode_image(clf.item_memory(), x).unwrap();
        let mut best = (0usize, f64::NEG_INFINITY);
        for c in 0..10 {
            let sim = cosine_similarity(&hv, &clf.am().class_hypervector(c)).unwrap();
            if sim > best.1 {
                best = (c, sim);
            }
        }
        if Some(best.0 as u8) == x.label {
            correct += 1;
        }
    }
    let acc = clf.evaluate_labeled(&test).unwrap();
    assert_eq!(acc, correct as f64 / test.len() as f64);
    assert!(acc > 0.5, "{acc}");
}

#[test]
fn perfect_and_all_wrong_labels() {
    let train = common::toy_set("train", 100, 1);
    let mut clf = classifier(512, 30);
    clf.train_labeled(&train).unwrap();
    let predictions = clf.predict_batch(&train).unwrap();
    assert_eq!(clf.evaluate(&train, &predictions).unwrap(), 1.0);
    let wrong: Vec<u8> = predictions.iter().map(|p| (p + 1) % 10).collect();
    assert_eq!(clf.evaluate(&train, &wrong).unwrap(), 0.0);
}

#[test]
fn empty_evaluation_is_a_domain_error() {
    let clf = classifier(32, 1);
    assert!(matches!(clf.evaluate(&[], &[]).unwrap_err(), HdcError::Domain(_)));
}

#[test]
fn batch_and_single_predictions_agree() {
    let train = common::toy_set("train", 100, 1);
    let test: Vec<Image> = (0..50).map(|i| common::random_image("r", i, u64::from(i))).collect();
    let mut clf = classifier(300, 3);
    clf.train_labeled(&train).unwrap();
    let single: Vec<u8> = test.iter().map(|x| clf.predict(x).unwrap()).collect();
    assert_eq!(clf.predict_batch(&test).unwrap(), single);
}

#[test]
fn same_seed_same_behaviour() {
    let train = common::toy_set("train", 60, 1);
    let test: Vec<Image> = (0..40).map(|i| common::random_image("r", i, 100 + u64::from(i))).collect();
    let mut a = classifier(200, 8);
    let mut b = classifier(200, 8);
    a.train_labeled(&train).unwrap();
    b.train_labeled(&train).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.predict_batch(&test).unwrap(), b.predict_batch(&test).unwrap());
}

#[test]
fn ties_go_to_the_lowest_class() {
    let mut clf = classifier(64, 1);
    let x = common::random_image("tie", 0, 3);
    clf.train(&[x.clone(), x.clone()], &[6, 2]).unwrap();
    assert_eq!(clf.predict(&x).unwrap(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn training_order_does_not_matter(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let images = common::toy_set("perm", 40, seed % 1000);
        let mut shuffled = images.clone();
        shuffled.shuffle(&mut hdcdiff::rng::seeded_rng(seed));
        let mut a = classifier(96, 4);
        let mut b = classifier(96, 4);
        a.train_labeled(&images).unwrap();
        b.train_labeled(&shuffled).unwrap();
        prop_assert_eq!(a.am(), b.am());
    }

    #[test]
    fn accumulated_components_are_bounded(seed in any::<u64>(), n in 1u32..12) {
        let images: Vec<Image> = (0..n).map(|i| common::random_image("b", i, seed.wrapping_add(u64::from(i)))).collect();
        let mut clf = classifier(64, seed);
        let labels = vec![0u8; images.len()];
        clf.train(&images, &labels).unwrap();
        let bound = 784 * i32::try_from(n).unwrap();
        prop_assert!(clf.am().class_hv(0).iter().all(|c| c.abs() <= bound));
    }
}

#[test]
fn model_file_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut clf = classifier(128, 40);
    clf.train_labeled(&common::toy_set("train", 50, 3)).unwrap();
    let path = dir.path().join("m.hdxm");
    clf.save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], MODEL_MAGIC);
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), MODEL_VERSION);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 128);
    assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 40);
    assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 10);
    assert_eq!(bytes.len(), 36 + 4 * 128 * (784 + 256 + 10));
    let loaded = HdcClassifier::load(&path).unwrap();
    assert_eq!(loaded, clf);
    assert_eq!(loaded.to_bytes(), bytes);
}

#[test]
fn corrupt_model_files_are_format_errors() {
    let clf = classifier(16, 1);
    let bytes = clf.to_bytes();
    let truncated = HdcClassifier::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err();
    assert!(matches!(truncated, HdcError::Format { .. }));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(HdcClassifier::from_bytes(&bad).unwrap_err(), HdcError::Format { field: "magic", .. }));
}

#[test]
fn scaled_class_keeps_predictions() {
    let train = common::toy_set("train", 100, 1);
    let test: Vec<Image> = (0..30).map(|i| common::random_image("r", i, 7 + u64::from(i))).collect();
    let mut clf = classifier(256, 9);
    clf.train_labeled(&train).unwrap();
    let before = clf.predict_batch(&test).unwrap();
    for c in 0..10 {
        clf.am_mut().scale_class(c, (c + 2) as i32).unwrap();
    }
    assert_eq!(clf.predict_batch(&test).unwrap(), before);
    let hv = Hypervector::new(clf.am().class_hv(0).to_vec());
    assert!(!hv.is_zero());
}
