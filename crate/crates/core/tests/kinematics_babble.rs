use proprio::babble::{generate_babble, BabbleConfig};
use proprio::dataset::{load_dataset, load_dataset_with, save_dataset, save_joint_specs, sidecar_path, SAMPLE_RATE_HZ};
use proprio::error::Error;
use proprio::kinematics::{
    default_joints, joint_angle_from_length, muscle_length, ArmGeometry, ARM_DOF, HEAD_DOF,
};
use proptest::prelude::*;

fn law_of_cosines(a: f64, b: f64, theta_deg: f64) -> f64 {
    let t = theta_deg * std::f64::consts::PI / 180.0;
    (a * a + b * b - 2.0 * a * b * t.cos()).sqrt()
}

#[test]
fn worked_lengths() {
    let g = ArmGeometry::new(0.30, 0.25).unwrap();
    assert!((muscle_length(g, 120.0).unwrap() - 0.2275f64.sqrt()).abs() < 1e-12);
    let unit = ArmGeometry::new(1.0, 1.0).unwrap();
    assert!((muscle_length(unit, 90.0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert!((muscle_length(unit, 60.0).unwrap() - 1.0).abs() < 1e-12);
    assert!((joint_angle_from_length(unit, 1.0).unwrap() - 60.0).abs() < 1e-9);
}

#[test]
fn extremes_hit_the_length_band() {
    let g = ArmGeometry::new(0.30, 0.25).unwrap();
    let (lo, hi) = g.length_band();
    assert!((muscle_length(g, 0.0).unwrap() - lo).abs() < 1e-12);
    assert!((muscle_length(g, 180.0).unwrap() - hi).abs() < 1e-12);
    assert!(matches!(muscle_length(g, 180.5), Err(Error::Domain { .. })));
    assert!(matches!(joint_angle_from_length(g, hi + 1e-3), Err(Error::Domain { .. })));
}

proptest! {
    #[test]
    fn length_matches_independent_formula(a in 0.05f64..2.0, b in 0.05f64..2.0, theta in 0.0f64..=180.0) {
        let g = ArmGeometry::new(a, b).unwrap();
        let l = muscle_length(g, theta).unwrap();
        prop_assert!((l - law_of_cosines(a, b, theta)).abs() < 1e-12);
    }

    #[test]
    fn length_roundtrip(a in 0.05f64..2.0, b in 0.05f64..2.0, theta in 1.0f64..179.0) {
        let g = ArmGeometry::new(a, b).unwrap();
        let back = joint_angle_from_length(g, muscle_length(g, theta).unwrap()).unwrap();
        prop_assert!((back - theta).abs() < 1e-9, "{theta} -> {back}");
    }

    #[test]
    fn length_increases_with_angle(a in 0.05f64..2.0, b in 0.05f64..2.0, t in 0.0f64..179.0, dt in 0.01f64..1.0) {
        let g = ArmGeometry::new(a, b).unwrap();
        prop_assert!(muscle_length(g, t + dt).unwrap() > muscle_length(g, t).unwrap());
    }
}

fn short_babble(seed: u64) -> proprio::dataset::Dataset {
    generate_babble(&BabbleConfig::with_seed(seed, 60.0)).unwrap()
}

#[test]
fn babble_shape_and_bounds() {
    let ds = short_babble(7);
    assert_eq!(ds.len(), 3000);
    assert_eq!(ds.dim(), ARM_DOF + HEAD_DOF);
    assert_eq!(ds.rate_hz(), SAMPLE_RATE_HZ);
    for row in ds.rows() {
        for (v, j) in row.iter().zip(ds.joints()) {
            assert!(j.contains(*v), "{} = {v}", j.name);
        }
    }
}

#[test]
fn babble_is_deterministic_per_seed() {
    let a = short_babble(5);
    let b = short_babble(5);
    let c = short_babble(6);
    assert!(a.rows().zip(b.rows()).all(|(x, y)| x == y));
    assert!(a.rows().zip(c.rows()).any(|(x, y)| x != y));
}

#[test]
fn babble_respects_velocity_limit() {
    let cfg = BabbleConfig::with_seed(8, 60.0);
    let ds = generate_babble(&cfg).unwrap();
    let limit = cfg.max_joint_velocity / SAMPLE_RATE_HZ;
    let mut worst: f64 = 0.0;
    for t in 1..ds.len() {
        for (a, b) in ds.row(t).iter().zip(ds.row(t - 1)) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= limit + 1e-9, "max step {worst} deg per sample");
}

#[test]
fn babble_moves_every_arm_joint() {
    let ds = short_babble(1);
    for d in 0..ARM_DOF {
        let col = ds.column(d);
        let (lo, hi) = col.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi - lo > 1.0, "joint {d} spans {lo}..{hi}");
    }
}

#[test]
fn dataset_roundtrip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let ds = short_babble(2).head(200);
    let path = dir.path().join("run.csv");
    save_dataset(&ds, &path).unwrap();
    let joints = sidecar_path(&path);
    assert_eq!(joints.file_name().unwrap(), "run.joints.csv");
    save_joint_specs(ds.joints(), &joints).unwrap();
    let back = load_dataset(&path, &joints).unwrap();
    assert_eq!(back.len(), 200);
    assert!(back.rows().zip(ds.rows()).all(|(a, b)| a == b));
}

#[test]
fn ingestion_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let joints = default_joints();
    let header: Vec<&str> = joints.iter().map(|j| j.name.as_str()).collect();
    let good_row = joints
        .iter()
        .map(|j| (0.5 * (j.min_deg + j.max_deg)).to_string())
        .collect::<Vec<_>>()
        .join(",");

    let good = dir.path().join("good.csv");
    std::fs::write(&good, format!("{}\n{good_row}\n", header.join(","))).unwrap();
    assert_eq!(load_dataset_with(&good, joints.clone()).unwrap().len(), 1);

    let outside = dir.path().join("outside.csv");
    std::fs::write(&outside, format!("{}\n{}\n", header.join(","), good_row.replacen("-42.5", "-120", 1))).unwrap();
    assert!(matches!(load_dataset_with(&outside, joints.clone()), Err(Error::OutOfRange { .. })));

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, format!("{}\n{good_row}\n0,0\n", header.join(","))).unwrap();
    assert!(load_dataset_with(&ragged, joints.clone()).is_err());

    let text = dir.path().join("text.csv");
    std::fs::write(&text, format!("{}\n{}\n", header.join(","), good_row.replacen("-42.5", "abc", 1))).unwrap();
    assert!(load_dataset_with(&text, joints.clone()).is_err());

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, format!("{}\n", header.join(","))).unwrap();
    assert!(load_dataset_with(&empty, joints.clone()).is_err());

    assert!(load_dataset_with(dir.path().join("missing.csv"), joints).is_err());
}
