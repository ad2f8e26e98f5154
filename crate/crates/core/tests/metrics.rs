use proprio::babble::{generate_babble, BabbleConfig};
use proprio::codec::{build_codec, CodecSpec, EncodedMatrix, Family};
use proprio::decode::KdeConfig;
use proprio::experiment::median;
use proprio::metrics::{evaluate, neighbor_coherence, quantization_error, topographic_error};
use proprio::som::{init_consistent, init_naive, input_ranges, train, SomMap, TrainConfig};
use proptest::prelude::*;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(units: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    for (k, u) in units.iter().enumerate() {
        if sq(u, x) < sq(&units[best], x) {
            best = k;
        }
    }
    best
}

fn squared_distortion(units: &[Vec<f64>], data: &[Vec<f64>]) -> f64 {
    data.iter().map(|x| sq(&units[nearest(units, x)], x)).sum::<f64>() / data.len() as f64
}

fn mean_distance(units: &[Vec<f64>], data: &[Vec<f64>]) -> f64 {
    data.iter().map(|x| sq(&units[nearest(units, x)], x).sqrt()).sum::<f64>() / data.len() as f64
}

/// Moves every unit to the centroid of the inputs it wins.
fn lloyd_step(units: &[Vec<f64>], data: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let width = units[0].len();
    let mut sums = vec![vec![0.0; width]; units.len()];
    let mut counts = vec![0usize; units.len()];
    for x in data {
        let k = nearest(units, x);
        counts[k] += 1;
        for (s, v) in sums[k].iter_mut().zip(x) {
            *s += v;
        }
    }
    units
        .iter()
        .zip(sums.iter().zip(&counts))
        .map(|(u, (s, &c))| if c == 0 { u.clone() } else { s.iter().map(|v| v / c as f64).collect() })
        .collect()
}

fn points(width: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..=1.0, width), n)
}

proptest! {
    #[test]
    fn quantization_error_matches_brute_force(units in points(3, 4..5), data in points(3, 1..40)) {
        let map = SomMap::from_weights(2, 2, units.clone()).unwrap();
        let qe = quantization_error(&map, &EncodedMatrix::from_rows(&data).unwrap()).unwrap();
        prop_assert!((qe - mean_distance(&units, &data)).abs() < 1e-12);
    }

    #[test]
    fn lloyd_step_never_raises_squared_distortion(units in points(2, 4..5), data in points(2, 1..60)) {
        let before = squared_distortion(&units, &data);
        let after = squared_distortion(&lloyd_step(&units, &data), &data);
        prop_assert!(after <= before + 1e-12, "{} -> {}", before, after);
    }
}

// Centroids minimise squared error, not mean distance: one unit moving from
// the median to the mean of {0, 0, 1} raises the mean distance.
#[test]
fn lloyd_step_can_raise_mean_distance() {
    let units = vec![vec![0.0]];
    let data = vec![vec![0.0], vec![0.0], vec![1.0]];
    let moved = lloyd_step(&units, &data);
    let qe = |u: &[Vec<f64>]| {
        let map = SomMap::from_weights(1, 1, u.to_vec()).unwrap();
        quantization_error(&map, &EncodedMatrix::from_rows(&data).unwrap()).unwrap()
    };
    assert!((qe(&units) - 1.0 / 3.0).abs() < 1e-15);
    assert!((qe(&moved) - 4.0 / 9.0).abs() < 1e-15);
    assert!(squared_distortion(&moved, &data) < squared_distortion(&units, &data));
}

#[test]
fn topographic_error_example() {
    let map = SomMap::from_weights(1, 3, vec![vec![0.0], vec![1.0], vec![0.5]]).unwrap();
    let data = EncodedMatrix::from_rows(&[vec![0.1], vec![0.8], vec![0.4], vec![0.9]]).unwrap();
    assert_eq!(topographic_error(&map, &data).unwrap(), 0.5);
}

#[test]
fn normalized_angle_error_equals_code_error() {
    let ds = generate_babble(&BabbleConfig::with_seed(1, 30.0)).unwrap();
    let c = build_codec(CodecSpec::normalized(), ds.joints()).unwrap();
    let e = c.encode_dataset(&ds).unwrap();
    let cfg = TrainConfig {
        cycles: 2,
        seed: 5,
        ..TrainConfig::default()
    };
    let map = train(init_consistent(4, 4, &c, 5).unwrap(), &e, &cfg).unwrap();
    let r = evaluate(&map, &c, &ds, &e, &KdeConfig::default(), 5).unwrap();
    assert!((r.qe_angle - r.qe_encoded).abs() < 1e-12, "{} vs {}", r.qe_angle, r.qe_encoded);
    assert!(r.undecodable_units.is_empty());
    assert_eq!(r.excluded_samples, 0);
}

#[test]
fn random_maps_have_no_neighbour_coherence() {
    let ds = generate_babble(&BabbleConfig::with_seed(2, 20.0)).unwrap();
    let kde = KdeConfig::default();
    for family in [Family::Normalized, Family::Gaussian] {
        let c = build_codec(CodecSpec::fixed_count(family, 10), ds.joints()).unwrap();
        let ratios: Vec<f64> = (0..20)
            .map(|seed| neighbor_coherence(&init_consistent(5, 5, &c, seed).unwrap(), &c, &kde).unwrap())
            .collect();
        let m = median(&ratios).unwrap();
        assert!((0.8..=1.2).contains(&m), "{family}: median ratio {m}");
    }
    // naive weights decode to unrelated postures as well
    let c = build_codec(CodecSpec::normalized(), ds.joints()).unwrap();
    let ranges = input_ranges(&c.encode_dataset(&ds).unwrap());
    let naive: Vec<f64> = (0..20)
        .map(|seed| neighbor_coherence(&init_naive(5, 5, &ranges, seed).unwrap(), &c, &kde).unwrap())
        .collect();
    assert!((0.8..=1.2).contains(&median(&naive).unwrap()));
}

#[test]
fn trained_maps_are_coherent() {
    let ds = generate_babble(&BabbleConfig::with_seed(3, 60.0)).unwrap();
    let c = build_codec(CodecSpec::fixed_count(Family::Linear, 5), ds.joints()).unwrap();
    let e = c.encode_dataset(&ds).unwrap();
    let cfg = TrainConfig {
        cycles: 3,
        seed: 1,
        ..TrainConfig::default()
    };
    let init = init_consistent(5, 5, &c, 1).unwrap();
    let before = evaluate(&init, &c, &ds, &e, &KdeConfig::default(), 1).unwrap();
    let map = train(init, &e, &cfg).unwrap();
    let after = evaluate(&map, &c, &ds, &e, &KdeConfig::default(), 1).unwrap();
    assert!(after.neighbor_coherence_ratio.unwrap() < 1.0);
    assert!(after.topographic_error <= before.topographic_error);
    assert!(after.qe_angle < before.qe_angle);
}
