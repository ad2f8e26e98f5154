use proprio::babble::{generate_babble, BabbleConfig};
use proprio::codec::{build_codec, CodecSpec, Family};
use proprio::dataset::Dataset;
use proprio::decode::KdeConfig;
use proprio::experiment::{demo_inconsistency, run_cell, run_experiment, run_experiment_on, DataSource, ExperimentConfig};
use proprio::kinematics::{JointSpec, ARM_DOF};
use proprio::plot::{
    default_trace, plot_grouped_bars, plot_posture_grid, plot_tuning_curves, stick_figure, BarGroup,
};
use proprio::som::{init_consistent, SomMap};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Babble {
            seed: 7,
            duration_s: 20.0,
        },
        families: vec![Family::Normalized, Family::Gaussian],
        curve_counts: vec![5],
        rows: 3,
        cols: 3,
        cycles: 2,
        seeds: vec![1, 2],
        ..ExperimentConfig::default()
    }
}

fn small_data() -> Dataset {
    small_config().data.load().unwrap()
}

/// Parses the document and rejects anything pointing outside it.
fn check_svg(text: &str) -> roxmltree::Document<'_> {
    let doc = roxmltree::Document::parse(text).expect("well-formed SVG");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.tag_name().namespace(), Some("http://www.w3.org/2000/svg"));
    assert!(!text.contains("href"), "external reference");
    assert!(!text.contains("url("), "external reference");
    doc
}

fn count(doc: &roxmltree::Document, tag: &str) -> usize {
    doc.descendants().filter(|n| n.has_tag_name(tag)).count()
}

#[test]
fn aggregate_output_is_reproducible() {
    let cfg = small_config();
    let ds = small_data();
    let a = run_experiment_on(&cfg, &ds).unwrap();
    let b = run_experiment_on(&cfg, &ds).unwrap();
    assert_eq!(a.aggregate_csv().unwrap(), b.aggregate_csv().unwrap());
    assert_eq!(a.medians_csv().unwrap(), b.medians_csv().unwrap());
    let rows = a.aggregate_csv().unwrap().lines().count();
    assert_eq!(rows, 1 + cfg.cells().len() * cfg.seeds.len());
}

#[test]
fn cells_do_not_depend_on_each_other() {
    let cfg = small_config();
    let ds = small_data();
    let matrix = run_experiment_on(&cfg, &ds).unwrap();
    let alone = ExperimentConfig {
        families: vec![Family::Gaussian],
        ..cfg.clone()
    };
    let single = run_experiment_on(&alone, &ds).unwrap();
    for run in &single.runs {
        let same = matrix
            .runs
            .iter()
            .find(|r| r.cell == run.cell && r.seed == run.seed)
            .unwrap();
        assert_eq!(same, run);
        let direct = run_cell(&ds, &cfg, run.cell, run.seed).unwrap();
        assert_eq!(run.result.as_ref().unwrap(), &direct);
    }
}

#[test]
fn experiment_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        out_dir: Some(dir.path().to_path_buf()),
        ..small_config()
    };
    let out = run_experiment(&cfg).unwrap();
    for name in ["config.json", "aggregate.csv", "medians.csv", "qe_angle.svg"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let runs = std::fs::read_dir(dir.path().join("runs")).unwrap().count();
    assert_eq!(runs, out.runs.len());
    let svg = std::fs::read_to_string(dir.path().join("qe_angle.svg")).unwrap();
    check_svg(&svg);
    let back = ExperimentConfig::load(dir.path().join("config.json")).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn tuning_curve_plot() {
    let joint = vec![JointSpec::new("neck_pitch", -40.0, 30.0).unwrap()];
    for (family, polylines) in [(Family::Linear, 1 + 2 * 20 + 20), (Family::Gaussian, 1 + 2 * 10 + 10)] {
        let c = build_codec(CodecSpec::fixed_count(family, 10), &joint).unwrap();
        let svg = plot_tuning_curves(&c, 0, &default_trace(-40.0, 30.0), 50.0).unwrap();
        let doc = check_svg(&svg);
        assert_eq!(count(&doc, "polyline"), polylines, "{family}");
    }
}

#[test]
fn bar_chart_is_self_contained() {
    let groups = vec![BarGroup {
        label: "linear <5>".into(),
        bars: vec![("a & b".into(), 0.3), ("c".into(), 0.1)],
    }];
    let svg = plot_grouped_bars("title", "qe", &groups);
    let doc = check_svg(&svg);
    assert!(doc.descendants().any(|n| n.text() == Some("linear <5>")));
}

#[test]
fn inconsistency_figure() {
    let joint = JointSpec::new("neck_pitch", -40.0, 30.0).unwrap();
    let r = demo_inconsistency(CodecSpec::fixed_count(Family::Gaussian, 10), joint, -20.0, 10.0, 0.5).unwrap();
    check_svg(&r.to_svg());
    let dir = tempfile::tempdir().unwrap();
    r.write(dir.path()).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("inconsistency.json")).unwrap()).unwrap();
    assert_eq!(json["drift"].as_f64().unwrap(), r.drift);
}

#[test]
fn single_unit_grid_shows_the_forward_kinematics() {
    let babble = BabbleConfig::default();
    let ds = generate_babble(&BabbleConfig::with_seed(1, 5.0)).unwrap();
    let c = build_codec(CodecSpec::normalized(), ds.joints()).unwrap();
    let posture = ds.row(100).to_vec();
    let w = c.encode_sample(&posture).unwrap().values;
    let map = SomMap::from_weights(1, 1, vec![w]).unwrap();
    let svg = plot_posture_grid(&map, &c, &KdeConfig::default(), &babble).unwrap();
    let doc = check_svg(&svg);
    assert_eq!(count(&doc, "polyline"), 1);

    let fig = stick_figure(&babble.arm, &babble.head, &posture).unwrap();
    let pose = babble.arm.forward(&posture[..ARM_DOF]);
    assert_eq!(fig.arm.len(), 4);
    assert_eq!(fig.arm[3], (pose.end.x, pose.end.z));
    assert!(fig.gaze.is_some());

    // cell origin 35,45; 120 px span over a 0.75 m window
    let px = |x: f64| 35.0 + (x + 0.30) / 0.75 * 120.0;
    let pz = |z: f64| 45.0 + 120.0 - (z + 0.45) / 0.75 * 120.0;
    let line = doc.descendants().find(|n| n.has_tag_name("polyline")).unwrap();
    let pts: Vec<(f64, f64)> = line
        .attribute("points")
        .unwrap()
        .split(' ')
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    for ((x, y), (wx, wz)) in pts.iter().zip(&fig.arm) {
        assert!((x - px(*wx)).abs() <= 0.006 && (y - pz(*wz)).abs() <= 0.006);
    }
}

#[test]
fn undecodable_units_are_crossed_out() {
    let ds = small_data();
    let c = build_codec(CodecSpec::fixed_count(Family::Gaussian, 5), ds.joints()).unwrap();
    let good = init_consistent(1, 1, &c, 3).unwrap().unit(0).to_vec();
    let map = SomMap::from_weights(1, 2, vec![good, vec![0.0; c.width()]]).unwrap();
    let svg = plot_posture_grid(&map, &c, &KdeConfig::default(), &BabbleConfig::default()).unwrap();
    let doc = check_svg(&svg);
    let red = doc.descendants().filter(|n| n.attribute("stroke") == Some("#c00000")).count();
    assert_eq!(red, 2);
    assert_eq!(count(&doc, "polyline"), 1);
}

#[test]
fn trained_grid_has_no_crossed_cells() {
    let cfg = ExperimentConfig {
        families: vec![Family::Gaussian],
        rows: 5,
        cols: 5,
        seeds: vec![1],
        ..small_config()
    };
    let ds = small_data();
    let c = build_codec(CodecSpec::fixed_count(Family::Gaussian, 5), ds.joints()).unwrap();
    let e = c.encode_dataset(&ds).unwrap();
    let map = proprio::som::train(init_consistent(5, 5, &c, 1).unwrap(), &e, &cfg.train_config(1)).unwrap();
    let svg = plot_posture_grid(&map, &c, &KdeConfig::default(), &BabbleConfig::default()).unwrap();
    let doc = check_svg(&svg);
    assert!(doc.descendants().all(|n| n.attribute("stroke") != Some("#c00000")));
    assert_eq!(count(&doc, "polyline"), 25);
}
