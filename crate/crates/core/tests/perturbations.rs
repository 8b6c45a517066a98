mod common;

use hdcdiff::perturb::{add_noise, brightness, elastic_transform, shear, skew};
use hdcdiff::{Image, ImageId, PerturbationKind, PerturbationParams, PerturbationSpec};
use proptest::prelude::*;

fn spec(params: PerturbationParams, seed: u64) -> PerturbationSpec {
    PerturbationSpec::new(params, seed).unwrap()
}

fn vertical_bar(col: usize) -> Image {
    let mut pixels = vec![0u8; 784];
    for r in 0..28 {
        pixels[r * 28 + col] = 255;
    }
    Image::mnist(ImageId::new("bar", 0), pixels, Some(1)).unwrap()
}

fn row_centroid(image: &Image, row: usize) -> f64 {
    let (mut mass, mut moment) = (0.0, 0.0);
    for c in 0..28 {
        let p = f64::from(image.get(row, c));
        mass += p;
        moment += p * c as f64;
    }
    moment / mass
}

#[test]
fn identities() {
    let mut checked = 0;
    for i in 0..1000u32 {
        let x = common::random_image("id", i, u64::from(i));
        let b = spec(PerturbationParams::Brightness { factor: 1.0 }, u64::from(i)).apply(&x).unwrap();
        assert_eq!(b.pixels(), x.pixels());
        let e = spec(PerturbationParams::Elastic { alpha: 0.0, sigma: 4.0 }, u64::from(i)).apply(&x).unwrap();
        assert_eq!(e.pixels(), x.pixels());
        let s = spec(PerturbationParams::Skew { mean: 0.0, std_dev: 0.0 }, u64::from(i)).apply(&x).unwrap();
        assert_eq!(s.pixels(), x.pixels());
        assert_eq!(shear(&x, 0.0).pixels(), x.pixels());
        let n = spec(PerturbationParams::Noise { points: 0 }, u64::from(i)).apply(&x).unwrap();
        assert_eq!(n.pixels(), x.pixels());
        checked += 1;
    }
    assert_eq!(checked, 1000);
}

#[test]
fn geometry_label_and_id_preserved() {
    for i in 0..1000u32 {
        let x = common::random_image("geo", i, 5000 + u64::from(i));
        for s in PerturbationSpec::default_set(u64::from(i)) {
            let y = s.apply(&x).unwrap();
            assert_eq!((y.width(), y.height()), (28, 28));
            assert_eq!(y.pixels().len(), 784);
            assert_eq!(y.label, x.label);
            assert_eq!(y.id.parent(), x.id);
            assert_eq!(y.id.variant, Some(s.kind()));
        }
    }
}

#[test]
fn fixed_seed_is_bitwise_reproducible() {
    let x = common::random_image("det", 0, 1);
    for s in PerturbationSpec::default_set(77) {
        assert_eq!(s.apply(&x).unwrap(), s.apply(&x).unwrap());
    }
}

#[test]
fn shear_moves_a_bar_by_the_row_offset() {
    let x = vertical_bar(13);
    for factor in [0.1, 0.2, 0.35, -0.25] {
        let y = shear(&x, factor);
        let mut previous = f64::NAN;
        for r in 0..28 {
            let expected = 13.0 + factor * (r as f64 - 13.5);
            let centroid = row_centroid(&y, r);
            assert!((centroid - expected).abs() < 0.5, "row {r}: {centroid} vs {expected}");
            if r > 0 {
                if factor > 0.0 {
                    assert!(centroid >= previous);
                } else {
                    assert!(centroid <= previous);
                }
            }
            previous = centroid;
        }
    }
}

#[test]
fn skew_draws_a_shear_factor() {
    let x = vertical_bar(13);
    let y = skew(&x, &PerturbationSpec::default_for(PerturbationKind::Skew, 3)).unwrap();
    let top = row_centroid(&y, 0);
    let bottom = row_centroid(&y, 27);
    // slope of the bar is the drawn factor; Normal(0.2, 0.1) is almost surely in (-0.3, 0.7)
    let factor = (bottom - top) / 27.0;
    assert!((-0.3..0.7).contains(&factor), "{factor}");
    assert_ne!(y.pixels(), x.pixels());
}

#[test]
fn skew_factors_follow_the_configured_normal() {
    let x = vertical_bar(13);
    let factors: Vec<f64> = (0..400)
        .map(|seed| {
            let y = skew(&x, &PerturbationSpec::default_for(PerturbationKind::Skew, seed)).unwrap();
            let rows: Vec<usize> = (8..20).collect();
            // fit the slope on central rows where the bar never hits the border
            let n = rows.len() as f64;
            let mean_r = rows.iter().map(|&r| r as f64).sum::<f64>() / n;
            let cs: Vec<f64> = rows.iter().map(|&r| row_centroid(&y, r)).collect();
            let mean_c = cs.iter().sum::<f64>() / n;
            let num: f64 = rows.iter().zip(&cs).map(|(&r, c)| (r as f64 - mean_r) * (c - mean_c)).sum();
            let den: f64 = rows.iter().map(|&r| (r as f64 - mean_r).powi(2)).sum();
            num / den
        })
        .collect();
    let mean = factors.iter().sum::<f64>() / factors.len() as f64;
    // sd of the mean is 0.1 / 20 = 0.005
    assert!((mean - 0.2).abs() < 0.025, "{mean}");
}

#[test]
fn noise_zeroes_exactly_the_chosen_points() {
    let full = Image::filled(ImageId::new("n", 0), 28, 28, 255).with_label(Some(2));
    for seed in 0..50 {
        let y = add_noise(&full, &PerturbationSpec::default_for(PerturbationKind::Noise, seed)).unwrap();
        assert_eq!(y.pixels().iter().filter(|&&p| p == 0).count(), 100);
        assert!(y.pixels().iter().all(|&p| p == 0 || p == 255));
    }
    for i in 0..200u32 {
        let x = common::random_image("n", i, u64::from(i));
        let y = add_noise(&x, &PerturbationSpec::default_for(PerturbationKind::Noise, u64::from(i))).unwrap();
        let changed: Vec<usize> = (0..784).filter(|&k| x.pixels()[k] != y.pixels()[k]).collect();
        assert!(changed.len() <= 100);
        assert!(changed.iter().all(|&k| y.pixels()[k] == 0));
    }
}

#[test]
fn noise_on_black_is_black() {
    let black = Image::filled(ImageId::new("z", 0), 28, 28, 0);
    let y = add_noise(&black, &PerturbationSpec::default_for(PerturbationKind::Noise, 9)).unwrap();
    assert!(y.pixels().iter().all(|&p| p == 0));
}

#[test]
fn noise_positions_overlap_like_a_hypergeometric_draw() {
    let full = Image::filled(ImageId::new("h", 0), 28, 28, 255);
    let chosen = |seed: u64| -> Vec<bool> {
        let y = add_noise(&full, &PerturbationSpec::default_for(PerturbationKind::Noise, seed)).unwrap();
        y.pixels().iter().map(|&p| p == 0).collect()
    };
    let (n, k, big_n): (f64, f64, f64) = (100.0, 100.0, 784.0);
    let mean = n * k / big_n;
    let sd = (n * (k / big_n) * ((big_n - k) / big_n) * ((big_n - n) / (big_n - 1.0))).sqrt();
    let trials = 200;
    let mut total = 0.0;
    for t in 0..trials {
        let a = chosen(2 * t);
        let b = chosen(2 * t + 1);
        let overlap = a.iter().zip(&b).filter(|(x, y)| **x && **y).count() as f64;
        assert!((overlap - mean).abs() <= 5.0 * sd, "{overlap}");
        total += overlap;
    }
    let avg = total / trials as f64;
    assert!((avg - mean).abs() <= 5.0 * sd / (trials as f64).sqrt(), "{avg} vs {mean}");
    assert_eq!(chosen(7), chosen(7));
}

#[test]
fn brightness_floors_the_product() {
    for i in 0..100u32 {
        let x = common::random_image("br", i, u64::from(i));
        let y = brightness(&x, &PerturbationSpec::default_for(PerturbationKind::Brightness, 0)).unwrap();
        for (&p, &q) in x.pixels().iter().zip(y.pixels()) {
            assert_eq!(q, (f64::from(p) * 0.8).floor() as u8);
        }
        let mean_x = x.pixels().iter().map(|&p| f64::from(p)).sum::<f64>() / 784.0;
        let mean_y = y.pixels().iter().map(|&p| f64::from(p)).sum::<f64>() / 784.0;
        assert!(mean_y <= 0.8 * mean_x + 1e-9 && mean_y > 0.8 * mean_x - 1.0);
    }
}

#[test]
fn invalid_parameters_rejected() {
    assert!(PerturbationSpec::new(PerturbationParams::Brightness { factor: 0.0 }, 0).is_err());
    assert!(PerturbationSpec::new(PerturbationParams::Brightness { factor: 1.5 }, 0).is_err());
    assert!(PerturbationSpec::new(PerturbationParams::Elastic { alpha: -1.0, sigma: 4.0 }, 0).is_err());
    assert!(PerturbationSpec::new(PerturbationParams::Elastic { alpha: 1.0, sigma: 0.0 }, 0).is_err());
    assert!(PerturbationSpec::new(PerturbationParams::Skew { mean: 0.2, std_dev: -0.1 }, 0).is_err());
    let x = common::random_image("x", 0, 0);
    assert!(spec(PerturbationParams::Noise { points: 785 }, 0).apply(&x).is_err());
}

#[test]
fn entry_points_check_the_kind() {
    let x = common::random_image("k", 0, 0);
    let noise = PerturbationSpec::default_for(PerturbationKind::Noise, 0);
    assert!(skew(&x, &noise).is_err());
    assert!(brightness(&x, &noise).is_err());
    assert!(elastic_transform(&x, &noise).is_err());
    assert!(add_noise(&x, &noise).is_ok());
}

#[test]
fn elastic_moves_pixels_but_keeps_a_flat_image_flat() {
    let flat = Image::filled(ImageId::new("f", 0), 28, 28, 90);
    let spec = PerturbationSpec::default_for(PerturbationKind::Elastic, 4);
    assert_eq!(elastic_transform(&flat, &spec).unwrap().pixels(), flat.pixels());
    let x = vertical_bar(13);
    assert_ne!(elastic_transform(&x, &spec).unwrap().pixels(), x.pixels());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn same_seed_same_output(seed in any::<u64>()) {
        let x = common::random_image("p", 0, seed);
        let a = PerturbationSpec::default_for(PerturbationKind::Noise, seed).apply(&x).unwrap();
        let b = PerturbationSpec::default_for(PerturbationKind::Noise, seed).apply(&x).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn brightness_never_brightens(seed in any::<u64>(), factor in 0.01f64..=1.0) {
        let x = common::random_image("p", 0, seed);
        let y = spec(PerturbationParams::Brightness { factor }, seed).apply(&x).unwrap();
        prop_assert!(x.pixels().iter().zip(y.pixels()).all(|(p, q)| q <= p));
    }
}
