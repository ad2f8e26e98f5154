use proprio::codec::{build_codec, CodecSpec, Curve, Family, PopulationCodec, Setup};
use proprio::decode::{
    decode_population, decode_vector, invert_gaussian, invert_linear, invert_sigmoid, kde_argmax, kde_density,
    search_grid, Bandwidth, KdeConfig,
};
use proprio::error::Error;
use proprio::kinematics::{default_joints, JointSpec};
use proptest::prelude::*;

fn neck() -> Vec<JointSpec> {
    vec![JointSpec::new("neck_pitch", -40.0, 30.0).unwrap()]
}

fn codec(family: Family, n: usize) -> PopulationCodec {
    build_codec(CodecSpec::fixed_count(family, n), &neck()).unwrap()
}

fn naive_density(samples: &[f64], h: f64, x: f64) -> f64 {
    let c = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    c * samples.iter().map(|s| (-((x - s) / h).powi(2) / 2.0).exp()).sum::<f64>()
}

#[test]
fn worked_inverses() {
    let c = codec(Family::Linear, 10);
    // first rising ramp spans the whole range
    assert!((invert_linear(&c.curves[0][0], 0.5).unwrap() + 5.0).abs() < 1e-12);
    assert!(matches!(invert_linear(&c.curves[0][0], 1.0), Err(Error::Saturated(_))));
    let s = Curve::Sigmoid {
        offset: 3.0,
        sgn: 1.0,
        gain: 1.0,
    };
    assert!((invert_sigmoid(&s, 0.5, 1e-8).unwrap() - 3.0).abs() < 1e-12);
    let g = Curve::Gaussian { mu: 0.0, sigma: 2.0 };
    let (a, b) = invert_gaussian(&g, (-0.5f64).exp(), 1e-8).unwrap();
    assert!((a - 2.0).abs() < 1e-12 && (b + 2.0).abs() < 1e-12);
}

#[test]
fn sweep_decodes_consistent_codes_on_every_joint() {
    let joints = default_joints();
    let kde = KdeConfig::default();
    for family in Family::ALL {
        for n in [5, 10, 20] {
            let c = build_codec(CodecSpec::fixed_count(family, n), &joints).unwrap();
            for k in 0..1000 {
                let posture: Vec<f64> =
                    joints.iter().map(|j| j.min_deg + (k as f64 + 0.5) / 1000.0 * j.range()).collect();
                let code = c.encode_sample(&posture).unwrap().values;
                let back = decode_vector(&c, &code, &kde).unwrap();
                for (b, p) in back.iter().zip(&posture) {
                    assert!((b - p).abs() <= kde.grid_resolution, "{family} n={n}: {p} -> {b}");
                }
            }
        }
    }
}

#[test]
fn fixed_offset_banks_decode() {
    let kde = KdeConfig::default();
    for family in [Family::Linear, Family::Sigmoid, Family::Gaussian] {
        let c = build_codec(CodecSpec::new(family, Setup::FixedOffset(7.5)), &neck()).unwrap();
        for k in 0..100 {
            let x = -40.0 + (k as f64 + 0.5) * 0.7;
            let back = decode_population(&c, 0, &c.encode_dof(0, x), &kde).unwrap();
            assert!((back - x).abs() <= kde.grid_resolution, "{family}: {x} -> {back}");
        }
    }
}

#[test]
fn silent_segments_are_undecodable() {
    let kde = KdeConfig::default();
    let c = codec(Family::Gaussian, 10);
    assert!(matches!(
        decode_population(&c, 0, &[0.0; 10], &kde),
        Err(Error::Undecodable { .. })
    ));
    let wrong = decode_population(&c, 0, &[0.5; 3], &kde);
    assert!(matches!(wrong, Err(Error::WidthMismatch { .. })));
}

// Monotone banks give coincident candidates, so the rule of thumb collapses
// to the grid step. Gaussian mirror branches widen it and bias the mode.
#[test]
fn auto_bandwidth_decodes_monotone_banks() {
    let kde = KdeConfig {
        bandwidth: Bandwidth::Auto,
        ..KdeConfig::default()
    };
    for family in [Family::Linear, Family::Sigmoid] {
        let c = codec(family, 10);
        for x in [-39.0, -12.3, 0.0, 17.7, 29.5] {
            let back = decode_population(&c, 0, &c.encode_dof(0, x), &kde).unwrap();
            assert!((back - x).abs() <= 0.1, "{family}: {x} -> {back}");
        }
    }
}

#[test]
fn symmetric_pair_has_a_central_mode() {
    let grid = search_grid(-5.0, 5.0, 0.01);
    let mid = kde_argmax(&[-0.5, 0.5], 1.0, &grid).unwrap();
    assert!(mid.abs() < 1e-9);
    // far-apart samples keep two modes and the lower one wins the tie
    let low = kde_argmax(&[-3.0, 3.0], 0.5, &grid).unwrap();
    assert!((low + 3.0).abs() < 1e-9);
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..40)
}

proptest! {
    #[test]
    fn density_matches_reference(s in samples(), h in 0.05f64..10.0, x in -60.0f64..60.0) {
        let got = kde_density(&s, h, x).unwrap();
        let want = naive_density(&s, h, x);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-300) + 1e-300);
    }

    #[test]
    fn density_is_permutation_invariant(s in samples(), seed in any::<u64>(), h in 0.1f64..5.0, x in -60.0f64..60.0) {
        let mut p = s.clone();
        let n = p.len();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            p.swap(i, (state >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(kde_density(&s, h, x).unwrap().to_bits(), kde_density(&p, h, x).unwrap().to_bits());
    }

    #[test]
    fn density_scales_inversely(s in samples(), h in 0.1f64..5.0, x in -60.0f64..60.0, c in 0.2f64..5.0) {
        let scaled: Vec<f64> = s.iter().map(|v| v * c).collect();
        let a = kde_density(&s, h, x).unwrap();
        let b = kde_density(&scaled, h * c, x * c).unwrap();
        prop_assert!((b - a / c).abs() <= 1e-9 * a / c + 1e-300);
    }

    #[test]
    fn gaussian_branches_mirror(mu in -40.0f64..30.0, sigma in 0.5f64..20.0, y in 1e-6f64..1.0) {
        let g = Curve::Gaussian { mu, sigma };
        let (a, b) = invert_gaussian(&g, y, 1e-8).unwrap();
        prop_assert!(((a - mu) + (b - mu)).abs() < 1e-9);
        prop_assert!(a >= b);
        prop_assert!((g.eval(a) - y).abs() < 1e-9 && (g.eval(b) - y).abs() < 1e-9);
    }

    #[test]
    fn sigmoid_inverse_recovers_angle(offset in -40.0f64..30.0, up in any::<bool>(), x in -15.0f64..15.0) {
        let s = Curve::Sigmoid { offset, sgn: if up { 1.0 } else { -1.0 }, gain: 1.0 };
        let back = invert_sigmoid(&s, s.eval(offset + x), 1e-8).unwrap();
        prop_assert!((back - offset - x).abs() < 1e-6);
    }

    #[test]
    fn linear_inverse_recovers_angle(n in 2usize..20, x in -39.9f64..29.9) {
        let c = codec(Family::Linear, n);
        for curve in &c.curves[0] {
            let y = curve.eval(x);
            if y > 0.0 && y < 1.0 {
                prop_assert!((invert_linear(curve, y).unwrap() - x).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn consistent_codes_decode_near_the_angle(f in prop::sample::select(Family::ALL.to_vec()), n in 3usize..25, x in -39.9f64..29.9) {
        let c = codec(f, n);
        let kde = KdeConfig::default();
        let back = decode_population(&c, 0, &c.encode_dof(0, x), &kde).unwrap();
        prop_assert!((back - x).abs() <= kde.grid_resolution, "{} -> {}", x, back);
    }
}
