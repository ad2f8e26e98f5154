//! Population coding of joint angles with banks of tuning curves.
//!
//! Every degree of freedom is encoded independently into a segment of the
//! output vector. Linear and sigmoid banks carry both orientations (rising
//! curves first, then falling); a Gaussian bank has a single set of bumps.
//! The `normalized` family is the baseline: one channel per DoF holding the
//! position of the angle within its range.

use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kinematics::JointSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normalized,
    Linear,
    Sigmoid,
    Gaussian,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Normalized,
        Family::Linear,
        Family::Sigmoid,
        Family::Gaussian,
    ];
    pub const POPULATION: [Family; 3] = [Family::Linear, Family::Sigmoid, Family::Gaussian];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normalized => "normalized",
            Family::Linear => "linear",
            Family::Sigmoid => "sigmoid",
            Family::Gaussian => "gaussian",
        }
    }

    pub fn is_population(self) -> bool {
        self != Family::Normalized
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown encoding family {s:?}")))
    }
}

/// How a bank is laid over a joint range: a fixed number of curves per
/// orientation, or a fixed spacing in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    FixedCount(usize),
    FixedOffset(f64),
}

fn default_gain() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecSpec {
    pub family: Family,
    pub setup: Setup,
    /// Sigmoid steepness per degree.
    #[serde(default = "default_gain")]
    pub sigmoid_gain: f64,
    /// Clamp out-of-range angles instead of failing.
    #[serde(default)]
    pub lenient: bool,
}

impl CodecSpec {
    pub fn new(family: Family, setup: Setup) -> Self {
        CodecSpec {
            family,
            setup,
            sigmoid_gain: 1.0,
            lenient: false,
        }
    }

    pub fn fixed_count(family: Family, n: usize) -> Self {
        Self::new(family, Setup::FixedCount(n))
    }

    pub fn normalized() -> Self {
        Self::new(Family::Normalized, Setup::FixedCount(1))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }
}

/// One tuning curve; angles in degrees, activations in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Curve {
    /// `y = clamp(slope * x + intercept, 0, 1)`
    Linear { slope: f64, intercept: f64 },
    /// `y = 1 / (1 + exp(sgn * gain * (offset - x)))`
    Sigmoid { offset: f64, sgn: f64, gain: f64 },
    /// `y = exp(-(x - mu)^2 / (2 sigma^2))`
    Gaussian { mu: f64, sigma: f64 },
}

impl Curve {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Curve::Linear { slope, intercept } => (slope * x + intercept).clamp(0.0, 1.0),
            Curve::Sigmoid { offset, sgn, gain } => 1.0 / (1.0 + (sgn * gain * (offset - x)).exp()),
            Curve::Gaussian { mu, sigma } => {
                let z = x - mu;
                (-(z * z) / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    /// Angle at which the curve is centred: ramp foot, inflection or peak.
    pub fn anchor(&self) -> f64 {
        match *self {
            Curve::Linear { slope, intercept } => {
                if slope > 0.0 {
                    -intercept / slope
                } else {
                    (1.0 - intercept) / slope
                }
            }
            Curve::Sigmoid { offset, .. } => offset,
            Curve::Gaussian { mu, .. } => mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedVector {
    pub values: Vec<f64>,
    /// Segment boundaries: DoF `d` occupies `layout[d]..layout[d + 1]`.
    pub layout: Vec<usize>,
    /// DoFs whose input was clamped in lenient mode.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clamped: Vec<usize>,
}

impl EncodedVector {
    pub fn segment(&self, d: usize) -> &[f64] {
        &self.values[self.layout[d]..self.layout[d + 1]]
    }
}

/// Dense row-major matrix of encoded samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    width: usize,
    data: Vec<f64>,
}

impl EncodedMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let width = rows.first().map(|r| r.as_ref().len()).ok_or(Error::EmptyDataset)?;
        let mut data = Vec::with_capacity(width * rows.len());
        for (t, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != width {
                return Err(Error::WidthMismatch {
                    expected: width,
                    actual: r.len(),
                }
                .in_row(t));
            }
            data.extend_from_slice(r);
        }
        Ok(EncodedMatrix { width, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.width..(t + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.width.max(1))
    }
}

/// A built codec: its `CodecSpec` plus the concrete curve bank of every DoF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationCodec {
    pub spec: CodecSpec,
    pub joints: Vec<JointSpec>,
    /// Empty for every DoF under the normalized family.
    pub curves: Vec<Vec<Curve>>,
    layout: Vec<usize>,
}

pub fn build_codec(spec: CodecSpec, joints: &[JointSpec]) -> Result<PopulationCodec> {
    PopulationCodec::build(spec, joints)
}

impl PopulationCodec {
    pub fn build(spec: CodecSpec, joints: &[JointSpec]) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidArgument("codec needs at least one joint".into()));
        }
        for j in joints {
            j.validate()?;
        }
        if spec.family.is_population() {
            match spec.setup {
                Setup::FixedCount(n) if n < 2 => {
                    return Err(Error::InvalidArgument(format!(
                        "{} bank needs at least 2 curves per DoF, got {n}",
                        spec.family
                    )))
                }
                Setup::FixedOffset(delta) if !(delta > 0.0 && delta.is_finite()) => {
                    return Err(Error::InvalidArgument(format!(
                        "curve offset must be positive, got {delta}"
                    )))
                }
                _ => {}
            }
        }
        if spec.family == Family::Sigmoid && !(spec.sigmoid_gain > 0.0) {
            return Err(Error::InvalidArgument("sigmoid gain must be positive".into()));
        }
        let curves: Vec<Vec<Curve>> = joints.iter().map(|j| bank(&spec, j)).collect();
        let mut layout = vec![0];
        for c in &curves {
            let w = if spec.family.is_population() { c.len() } else { 1 };
            layout.push(layout.last().unwrap() + w);
        }
        Ok(PopulationCodec {
            spec,
            joints: joints.to_vec(),
            curves,
            layout,
        })
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn width(&self) -> usize {
        *self.layout.last().unwrap()
    }

    pub fn layout(&self) -> &[usize] {
        &self.layout
    }

    pub fn segment(&self, d: usize) -> Range<usize> {
        self.layout[d]..self.layout[d + 1]
    }

    /// Curves per orientation for linear and sigmoid banks, curves per DoF
    /// for Gaussian banks, 1 for normalized. Under a fixed offset this is
    /// the largest bank over all DoFs.
    pub fn curves_per_dof(&self) -> usize {
        let orientations = match self.family() {
            Family::Normalized => return 1,
            Family::Gaussian => 1,
            Family::Linear | Family::Sigmoid => 2,
        };
        match self.spec.setup {
            Setup::FixedCount(n) => n,
            Setup::FixedOffset(_) => {
                self.curves.iter().map(Vec::len).max().unwrap_or(0) / orientations
            }
        }
    }

    /// Encodes one DoF without range checks into `out`.
    pub fn encode_dof_into(&self, d: usize, x: f64, out: &mut [f64]) {
        if self.family().is_population() {
            for (o, c) in out.iter_mut().zip(&self.curves[d]) {
                *o = c.eval(x);
            }
        } else {
            out[0] = self.joints[d].normalize(x);
        }
    }

    pub fn encode_dof(&self, d: usize, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.segment(d).len()];
        self.encode_dof_into(d, x, &mut out);
        out
    }

    pub fn encode_sample(&self, posture: &[f64]) -> Result<EncodedVector> {
        let mut values = vec![0.0; self.width()];
        let clamped = self.encode_into(posture, &mut values)?;
        Ok(EncodedVector {
            values,
            layout: self.layout.clone(),
            clamped,
        })
    }

    fn encode_into(&self, posture: &[f64], out: &mut [f64]) -> Result<Vec<usize>> {
        if posture.len() != self.dof() {
            return Err(Error::WidthMismatch {
                expected: self.dof(),
                actual: posture.len(),
            });
        }
        let mut clamped = Vec::new();
        for (d, (&x, j)) in posture.iter().zip(&self.joints).enumerate() {
            let x = if j.contains(x) {
                x
            } else if self.spec.lenient && !x.is_nan() {
                clamped.push(d);
                j.clamp(x)
            } else {
                return Err(Error::Domain {
                    what: "angle",
                    value: x,
                    domain: format!("[{}, {}]", j.min_deg, j.max_deg),
                }
                .in_dof(d, &j.name));
            };
            self.encode_dof_into(d, x, &mut out[self.segment(d)]);
        }
        Ok(clamped)
    }

    pub fn encode_dataset(&self, ds: &Dataset) -> Result<EncodedMatrix> {
        let width = self.width();
        let mut data = vec![0.0; width * ds.len()];
        let mut clamped_rows = 0usize;
        for (t, (row, out)) in ds.rows().zip(data.chunks_exact_mut(width)).enumerate() {
            let clamped = self.encode_into(row, out).map_err(|e| e.in_row(t))?;
            clamped_rows += usize::from(!clamped.is_empty());
        }
        if clamped_rows > 0 {
            log::warn!("{clamped_rows} rows had out-of-range angles clamped");
        }
        Ok(EncodedMatrix { width, data })
    }

    /// Column labels `joint:kind index`, e.g. `neck_pitch:g3`, `l_elbow:s+0`.
    pub fn channel_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for (j, curves) in self.joints.iter().zip(&self.curves) {
            if !self.family().is_population() {
                names.push(format!("{}:norm", j.name));
                continue;
            }
            let half = curves.len() / 2;
            for (i, c) in curves.iter().enumerate() {
                names.push(match c {
                    Curve::Gaussian { .. } => format!("{}:g{i}", j.name),
                    Curve::Linear { slope, .. } => {
                        let s = if *slope > 0.0 { '+' } else { '-' };
                        format!("{}:l{s}{}", j.name, i % half)
                    }
                    Curve::Sigmoid { sgn, .. } => {
                        let s = if *sgn > 0.0 { '+' } else { '-' };
                        format!("{}:s{s}{}", j.name, i % half)
                    }
                });
            }
        }
        names
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let codec: PopulationCodec = read_json(path.as_ref())?;
        codec.check_layout().map_err(|m| Error::format(path.as_ref(), m))?;
        Ok(codec)
    }

    fn check_layout(&self) -> std::result::Result<(), String> {
        if self.curves.len() != self.joints.len() || self.layout.len() != self.joints.len() + 1 {
            return Err("codec layout does not match its joints".into());
        }
        for (d, c) in self.curves.iter().enumerate() {
            let expected = if self.family().is_population() { c.len() } else { 1 };
            if self.layout[d + 1] - self.layout[d] != expected {
                return Err(format!("segment {d} length does not match its curves"));
            }
        }
        Ok(())
    }
}

/// ceil(range / delta), tolerant of ranges that are exact multiples.
fn offset_steps(range: f64, delta: f64) -> usize {
    ((range / delta) - 1e-9).ceil().max(1.0) as usize
}

fn bank(spec: &CodecSpec, j: &JointSpec) -> Vec<Curve> {
    let (min, max, range) = (j.min_deg, j.max_deg, j.range());
    match spec.family {
        Family::Normalized => Vec::new(),
        Family::Linear => {
            let anchors: Vec<(f64, f64)> = match spec.setup {
                Setup::FixedCount(n) => (0..n)
                    .map(|i| {
                        let step = range / n as f64;
                        (min + i as f64 * step, min + (i + 1) as f64 * step)
                    })
                    .collect(),
                Setup::FixedOffset(delta) => (0..offset_steps(range, delta))
                    .map(|k| (min + k as f64 * delta, (min + (k + 1) as f64 * delta).min(max)))
                    .collect(),
            };
            let rising = anchors.iter().map(|&(foot, _)| {
                let slope = 1.0 / (max - foot);
                Curve::Linear {
                    slope,
                    intercept: -foot * slope,
                }
            });
            let falling = anchors.iter().map(|&(_, end)| {
                let slope = -1.0 / (end - min);
                Curve::Linear {
                    slope,
                    intercept: -end * slope,
                }
            });
            rising.chain(falling).collect()
        }
        Family::Sigmoid => {
            let offsets: Vec<f64> = match spec.setup {
                Setup::FixedCount(n) => {
                    let step = range / n as f64;
                    (0..n).map(|i| min + (i as f64 + 0.5) * step).collect()
                }
                Setup::FixedOffset(delta) => (0..=offset_steps(range, delta))
                    .map(|k| min + k as f64 * delta)
                    .collect(),
            };
            let gain = spec.sigmoid_gain;
            [1.0, -1.0]
                .into_iter()
                .flat_map(|sgn| {
                    offsets
                        .iter()
                        .map(move |&offset| Curve::Sigmoid { offset, sgn, gain })
                })
                .collect()
        }
        Family::Gaussian => {
            let (sigma, count) = match spec.setup {
                Setup::FixedCount(n) => (range / (n - 1) as f64, n),
                Setup::FixedOffset(delta) => (delta, offset_steps(range, delta) + 1),
            };
            (0..count)
                .map(|i| Curve::Gaussian {
                    mu: min + i as f64 * sigma,
                    sigma,
                })
                .collect()
        }
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
