//! SVG figures: tuning curves with an encoded trace, posture grids of
//! trained maps, grouped bar charts and the update inconsistency panels.

pub mod svg;

use nalgebra::Vector3;

use crate::babble::BabbleConfig;
use crate::codec::PopulationCodec;
use crate::decode::{decode_vector, KdeConfig};
use crate::error::{Error, Result};
use crate::kinematics::{HeadGeometry, SerialChain, ARM_DOF, HEAD_DOF};
use crate::som::SomMap;
use svg::{color, Anchor, Panel, Svg};

/// Sweep used when no recorded trace is supplied: 20 s at 50 Hz.
pub fn default_trace(min_deg: f64, max_deg: f64) -> Vec<f64> {
    let mid = 0.5 * (min_deg + max_deg);
    let amp = 0.5 * (max_deg - min_deg);
    (0..1000)
        .map(|t| {
            let s = t as f64 / 50.0;
            let v = 0.7 * (std::f64::consts::TAU * s / 10.0).sin() + 0.2 * (std::f64::consts::TAU * s / 3.0).sin();
            (mid + amp * v).clamp(min_deg, max_deg)
        })
        .collect()
}

/// Four panels for DoF `joint`: the input trace, every tuning curve over
/// the joint range, the encoded channels over time and a close-up of the
/// middle tenth of the trace.
pub fn plot_tuning_curves(codec: &PopulationCodec, joint: usize, trace: &[f64], rate_hz: f64) -> Result<String> {
    let Some(spec) = codec.joints.get(joint) else {
        return Err(Error::InvalidArgument(format!(
            "joint index {joint} out of range for {} DoFs",
            codec.dof()
        )));
    };
    if trace.is_empty() || !(rate_hz > 0.0) {
        return Err(Error::InvalidArgument("trace must be non-empty with a positive rate".into()));
    }
    let (lo, hi) = (spec.min_deg, spec.max_deg);
    let trace: Vec<f64> = trace.iter().map(|&x| spec.clamp(x)).collect();
    let channels = codec.segment(joint).len();
    let encoded: Vec<Vec<f64>> = trace.iter().map(|&x| codec.encode_dof(joint, x)).collect();
    let duration = trace.len() as f64 / rate_hz;
    let time = |t: usize| t as f64 / rate_hz;

    let mut doc = Svg::new(1000.0, 720.0);
    doc.text(
        500.0,
        22.0,
        15.0,
        Anchor::Middle,
        &format!("{}: {} encoding, {} channels", spec.name, codec.family(), channels),
    );
    let panel = |x: f64, y: f64, xmin: f64, xmax: f64, ymin: f64, ymax: f64| Panel {
        x,
        y,
        w: 400.0,
        h: 230.0,
        xmin,
        xmax,
        ymin,
        ymax,
    };

    let p = panel(80.0, 70.0, 0.0, duration, lo, hi);
    p.axes(&mut doc, "input", "time [s]", "angle [deg]");
    doc.polyline(&p.map(trace.iter().enumerate().map(|(t, &x)| (time(t), x))), "#000000", 1.2);

    let p = panel(570.0, 70.0, lo, hi, 0.0, 1.0);
    p.axes(&mut doc, "tuning curves", "angle [deg]", "activation");
    let steps = 400;
    let xs: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let curve_values: Vec<Vec<f64>> = xs.iter().map(|&x| codec.encode_dof(joint, x)).collect();
    for c in 0..channels {
        doc.polyline(&p.map(xs.iter().zip(&curve_values).map(|(&x, v)| (x, v[c]))), color(c), 1.2);
    }

    let p = panel(80.0, 420.0, 0.0, duration, 0.0, 1.0);
    p.axes(&mut doc, "encoded channels", "time [s]", "activation");
    for c in 0..channels {
        doc.polyline(&p.map(encoded.iter().enumerate().map(|(t, v)| (time(t), v[c]))), color(c), 1.0);
    }

    let n = trace.len();
    let (start, end) = (n * 9 / 20, (n * 11 / 20).max(n * 9 / 20 + 1).min(n));
    let p = panel(570.0, 420.0, time(start), time(end), 0.0, 1.0);
    p.axes(&mut doc, "close-up", "time [s]", "activation");
    for c in 0..channels {
        let pts = (start..end).map(|t| (time(t), encoded[t][c]));
        doc.polyline(&p.map(pts), color(c), 1.4);
    }
    Ok(doc.finish())
}

/// A posture drawn in the sagittal (x, z) plane, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct StickFigure {
    /// Shoulder, elbow, wrist and hand.
    pub arm: Vec<(f64, f64)>,
    pub eye: (f64, f64),
    /// Gaze direction projected into the plane, `None` without head joints.
    pub gaze: Option<(f64, f64)>,
}

fn project(v: &Vector3<f64>) -> (f64, f64) {
    (v.x, v.z)
}

/// Forward kinematics of the arm part of `posture`, plus the gaze direction
/// when the posture also carries the neck and eye joints.
pub fn stick_figure(chain: &SerialChain, head: &HeadGeometry, posture: &[f64]) -> Option<StickFigure> {
    if posture.len() < ARM_DOF || chain.dof() != ARM_DOF {
        return None;
    }
    let pose = chain.forward(&posture[..ARM_DOF]);
    let arm = vec![
        project(&pose.joint_positions[0]),
        project(&pose.joint_positions[3]),
        project(&pose.joint_positions[5]),
        project(&pose.end),
    ];
    let gaze = (posture.len() == ARM_DOF + HEAD_DOF).then(|| {
        let h = &posture[ARM_DOF..];
        let pitch = (h[0] + h[3]).to_radians();
        let yaw = (h[2] + h[4]).to_radians();
        (pitch.cos() * yaw.cos(), pitch.sin())
    });
    Some(StickFigure {
        arm,
        eye: project(&head.eye_center()),
        gaze,
    })
}

/// Decoded posture of every unit, `None` where decoding failed.
pub fn decode_units(map: &SomMap, codec: &PopulationCodec, kde: &KdeConfig) -> Result<Vec<Option<Vec<f64>>>> {
    if map.width() != codec.width() {
        return Err(Error::WidthMismatch {
            expected: map.width(),
            actual: codec.width(),
        });
    }
    kde.validate()?;
    Ok(map.unit_weights().map(|w| decode_vector(codec, w, kde).ok()).collect())
}

const CELL: f64 = 130.0;
// world window of one cell, meters
const VIEW_X: (f64, f64) = (-0.30, 0.45);
const VIEW_Z: (f64, f64) = (-0.45, 0.30);

/// Grid of stick figures, one per unit in lattice order; undecodable
/// units are crossed out.
pub fn plot_posture_grid(map: &SomMap, codec: &PopulationCodec, kde: &KdeConfig, babble: &BabbleConfig) -> Result<String> {
    let postures = decode_units(map, codec, kde)?;
    let margin = 30.0;
    let mut doc = Svg::new(map.cols as f64 * CELL + 2.0 * margin, map.rows as f64 * CELL + 2.0 * margin + 10.0);
    doc.text(
        margin,
        22.0,
        13.0,
        Anchor::Start,
        &format!("{}x{} map, {} encoding", map.rows, map.cols, codec.family()),
    );
    for (k, posture) in postures.iter().enumerate() {
        let (r, c) = map.coords(k);
        let x0 = margin + c as f64 * CELL;
        let y0 = margin + 10.0 + r as f64 * CELL;
        doc.rect(x0, y0, CELL, CELL, "#fafafa", Some("#999999"));
        let cell_panel = Panel {
            x: x0 + 5.0,
            y: y0 + 5.0,
            w: CELL - 10.0,
            h: CELL - 10.0,
            xmin: VIEW_X.0,
            xmax: VIEW_X.1,
            ymin: VIEW_Z.0,
            ymax: VIEW_Z.1,
        };
        match posture {
            None => {
                doc.line(x0 + 8.0, y0 + 8.0, x0 + CELL - 8.0, y0 + CELL - 8.0, "#c00000", 2.0);
                doc.line(x0 + CELL - 8.0, y0 + 8.0, x0 + 8.0, y0 + CELL - 8.0, "#c00000", 2.0);
            }
            Some(angles) => match stick_figure(&babble.arm, &babble.head, angles) {
                Some(fig) => draw_figure(&mut doc, &cell_panel, &babble.head, &fig),
                None => draw_profile(&mut doc, &cell_panel, codec, angles),
            },
        }
    }
    Ok(doc.finish())
}

fn draw_figure(doc: &mut Svg, p: &Panel, head: &HeadGeometry, fig: &StickFigure) {
    let shoulder = fig.arm[0];
    let neck = project(&Vector3::from(head.neck_pivot));
    doc.line(p.px(shoulder.0), p.py(-0.30), p.px(shoulder.0), p.py(neck.1), "#555555", 3.0);
    doc.line(p.px(neck.0), p.py(neck.1), p.px(fig.eye.0), p.py(fig.eye.1), "#555555", 1.5);
    doc.circle(p.px(fig.eye.0), p.py(fig.eye.1), 6.0, "#ffffff", "#555555");
    doc.polyline(&p.map(fig.arm.iter().copied()), "#1f77b4", 2.5);
    for &(x, z) in &fig.arm {
        doc.circle(p.px(x), p.py(z), 2.0, "#1f77b4", "#1f77b4");
    }
    if let Some((dx, dz)) = fig.gaze {
        let len = 0.15;
        let tip = (fig.eye.0 + len * dx, fig.eye.1 + len * dz);
        doc.line(p.px(fig.eye.0), p.py(fig.eye.1), p.px(tip.0), p.py(tip.1), "#d62728", 1.5);
        // arrow head
        let (ux, uz) = (dx, dz);
        let back = 0.03;
        for side in [-1.0, 1.0] {
            let hx = tip.0 - back * ux + side * 0.5 * back * -uz;
            let hz = tip.1 - back * uz + side * 0.5 * back * ux;
            doc.line(p.px(tip.0), p.py(tip.1), p.px(hx), p.py(hz), "#d62728", 1.5);
        }
    }
}

/// Fallback for joint sets other than the babble chain: normalized angle
/// of every joint as a bar.
fn draw_profile(doc: &mut Svg, p: &Panel, codec: &PopulationCodec, angles: &[f64]) {
    let n = angles.len().max(1) as f64;
    let bw = p.w / n;
    for (i, (&a, j)) in angles.iter().zip(&codec.joints).enumerate() {
        let v = j.normalize(a).clamp(0.0, 1.0);
        doc.rect(p.x + i as f64 * bw + 1.0, p.y + p.h * (1.0 - v), (bw - 2.0).max(1.0), p.h * v, color(i), None);
    }
}

/// One group of bars, e.g. one encoding family over several curve counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BarGroup {
    pub label: String,
    pub bars: Vec<(String, f64)>,
}

/// Grouped bar chart; bars with the same label share a color.
pub fn plot_grouped_bars(title: &str, ylabel: &str, groups: &[BarGroup]) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for g in groups {
        for (l, _) in &g.bars {
            if !labels.contains(&l.as_str()) {
                labels.push(l);
            }
        }
    }
    let ymax = groups
        .iter()
        .flat_map(|g| g.bars.iter().map(|b| b.1))
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.1 } else { 1.0 };
    let slots: usize = groups.iter().map(|g| g.bars.len() + 1).sum::<usize>().max(1);
    let width = (80.0 + 28.0 * slots as f64 + 140.0).max(400.0);
    let mut doc = Svg::new(width, 380.0);
    let p = Panel {
        x: 70.0,
        y: 40.0,
        w: width - 210.0,
        h: 280.0,
        xmin: 0.0,
        xmax: slots as f64,
        ymin: 0.0,
        ymax,
    };
    doc.rect(p.x, p.y, p.w, p.h, "none", Some("#333333"));
    for i in 0..=4 {
        let v = ymax * i as f64 / 4.0;
        doc.line(p.x - 4.0, p.py(v), p.x, p.py(v), "#333333", 1.0);
        doc.text(p.x - 6.0, p.py(v) + 3.5, 10.0, Anchor::End, &format!("{v:.3}"));
    }
    doc.text(p.x + p.w / 2.0, 24.0, 13.0, Anchor::Middle, title);
    doc.vertical_text(p.x - 50.0, p.y + p.h / 2.0, 11.0, ylabel);
    let mut slot = 0.5;
    for g in groups {
        let start = slot;
        for (l, v) in &g.bars {
            let ci = labels.iter().position(|x| x == l).unwrap_or(0);
            if v.is_finite() {
                let (x0, x1) = (p.px(slot), p.px(slot + 1.0));
                doc.rect(x0 + 2.0, p.py(*v), x1 - x0 - 4.0, p.py(0.0) - p.py(*v), color(ci), None);
            }
            slot += 1.0;
        }
        doc.text(
            p.px(0.5 * (start + slot)),
            p.py(0.0) + 16.0,
            11.0,
            Anchor::Middle,
            &g.label,
        );
        slot += 1.0;
    }
    for (i, l) in labels.iter().enumerate() {
        let y = p.y + 10.0 + 18.0 * i as f64;
        doc.rect(p.x + p.w + 15.0, y - 9.0, 12.0, 12.0, color(i), None);
        doc.text(p.x + p.w + 32.0, y + 1.0, 11.0, Anchor::Start, l);
    }
    doc.finish()
}

/// Three panels of one DoF segment: the input code, the BMU weights and
/// the weights after one update, with the nearest valid code dashed.
pub fn plot_inconsistency(
    title: &str,
    panels: [(&str, &[f64]); 3],
    nearest_valid: &[f64],
) -> String {
    let width = panels.iter().map(|p| p.1.len()).max().unwrap_or(1).max(1);
    let mut doc = Svg::new(1020.0, 330.0);
    doc.text(510.0, 22.0, 14.0, Anchor::Middle, title);
    for (i, (label, values)) in panels.iter().enumerate() {
        let p = Panel {
            x: 60.0 + 330.0 * i as f64,
            y: 60.0,
            w: 270.0,
            h: 210.0,
            xmin: -0.5,
            xmax: width as f64 - 0.5,
            ymin: 0.0,
            ymax: 1.0,
        };
        p.axes(&mut doc, label, "channel", "activation");
        let bw = p.w / width as f64;
        for (c, &v) in values.iter().enumerate() {
            let v = v.clamp(0.0, 1.0);
            doc.rect(p.px(c as f64) - 0.35 * bw, p.py(v), 0.7 * bw, p.py(0.0) - p.py(v), color(i), None);
        }
        if i == 2 {
            let pts: Vec<(f64, f64)> = nearest_valid.iter().enumerate().map(|(c, &v)| (c as f64, v)).collect();
            let mapped = p.map(pts);
            for w in mapped.windows(2) {
                doc.dashed_line(w[0].0, w[0].1, w[1].0, w[1].1, "#000000", 1.2);
            }
            for &(x, y) in &mapped {
                doc.circle(x, y, 2.5, "#000000", "#000000");
            }
        }
    }
    doc.finish()
}
