//! Turning activations back into angles.
//!
//! Each curve with a usable activation proposes the angle(s) it would
//! have been evaluated at. For a consistent population code all proposals
//! coincide; for a SOM weight vector they scatter, and a kernel density
//! estimate over the proposals picks the most supported angle.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codec::{Curve, PopulationCodec};
use crate::error::{Error, Result};
use crate::kinematics::JointSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Silverman's rule over the candidate set, floored at the grid step.
    Auto,
    /// Kernel width in degrees.
    Fixed(f64),
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Auto => f.write_str("auto"),
            Bandwidth::Fixed(h) => write!(f, "{h}"),
        }
    }
}

impl FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Bandwidth::Auto);
        }
        s.parse::<f64>()
            .ok()
            .filter(|h| *h > 0.0 && h.is_finite())
            .map(Bandwidth::Fixed)
            .ok_or_else(|| Error::InvalidArgument(format!("bandwidth must be \"auto\" or a positive number, got {s:?}")))
    }
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Auto => s.serialize_str("auto"),
            Bandwidth::Fixed(h) => s.serialize_f64(*h),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(h) => Ok(Bandwidth::Fixed(h)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KdeConfig {
    pub bandwidth: Bandwidth,
    /// Step of the density argmax search, degrees.
    pub grid_resolution: f64,
    pub activation_floor: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig {
            bandwidth: Bandwidth::Fixed(DEFAULT_BANDWIDTH_DEG),
            grid_resolution: 0.1,
            activation_floor: DEFAULT_ACTIVATION_FLOOR,
        }
    }
}

pub const DEFAULT_BANDWIDTH_DEG: f64 = 0.3;
pub const DEFAULT_ACTIVATION_FLOOR: f64 = 1e-8;

impl KdeConfig {
    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
            }
        }
        if !(self.grid_resolution > 0.0 && self.grid_resolution.is_finite()) {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        if !(self.activation_floor > 0.0 && self.activation_floor < 0.5) {
            return Err(Error::InvalidArgument("activation floor must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

/// Inverse of a clamped linear ramp on its unsaturated region.
pub fn invert_linear(curve: &Curve, y: f64) -> Result<f64> {
    let Curve::Linear { slope, intercept } = *curve else {
        return Err(Error::InvalidArgument("invert_linear on a non-linear curve".into()));
    };
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Saturated(y));
    }
    Ok((y - intercept) / slope)
}

/// Inverse of a sigmoid; activations closer than `floor` to 0 or 1 are
/// refused.
pub fn invert_sigmoid(curve: &Curve, y: f64, floor: f64) -> Result<f64> {
    let Curve::Sigmoid { offset, sgn, gain } = *curve else {
        return Err(Error::InvalidArgument("invert_sigmoid on a non-sigmoid curve".into()));
    };
    if !(y >= floor && y <= 1.0 - floor) {
        return Err(Error::Unreliable {
            value: y,
            lo: floor,
            hi: 1.0 - floor,
        });
    }
    Ok(offset - ((1.0 - y).ln() - y.ln()) / (sgn * gain))
}

/// Both preimages `(mu + r, mu - r)` of a Gaussian activation.
pub fn invert_gaussian(curve: &Curve, y: f64, floor: f64) -> Result<(f64, f64)> {
    let Curve::Gaussian { mu, sigma } = *curve else {
        return Err(Error::InvalidArgument("invert_gaussian on a non-Gaussian curve".into()));
    };
    if y > 1.0 || y.is_nan() {
        return Err(Error::Domain {
            what: "activation",
            value: y,
            domain: "[0, 1]".into(),
        });
    }
    if y < floor {
        return Err(Error::Unreliable {
            value: y,
            lo: floor,
            hi: 1.0,
        });
    }
    let r = (-2.0 * sigma * sigma * y.ln()).sqrt();
    Ok((mu + r, mu - r))
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Sorting fixes the summation order, so sample order cannot change a
/// single bit of the result.
fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn kernel_sum(samples: &[f64], h: f64, x: f64) -> f64 {
    samples
        .iter()
        .map(|&xi| {
            let u = (x - xi) / h;
            (-0.5 * u * u).exp()
        })
        .sum::<f64>()
}

/// Gaussian-kernel density estimate at `x`.
pub fn kde_density(samples: &[f64], h: f64, x: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("kde over an empty sample set".into()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    Ok(INV_SQRT_2PI * kernel_sum(&sorted(samples), h, x) / (samples.len() as f64 * h))
}

/// Silverman's rule of thumb, `1.06 * std * m^(-1/5)`, floored at `floor`.
pub fn silverman_bandwidth(samples: &[f64], floor: f64) -> f64 {
    let m = samples.len() as f64;
    if samples.len() < 2 {
        return floor;
    }
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (1.06 * var.sqrt() * m.powf(-0.2)).max(floor)
}

/// Evenly spaced search grid over `[lo, hi]`, always including both ends.
pub fn search_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    if hi - grid[n] > 1e-9 * step {
        grid.push(hi);
    }
    grid
}

/// Grid argmax of the density; the lowest angle wins exact ties.
pub fn kde_argmax(samples: &[f64], h: f64, grid: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("kde over an empty sample set".into()));
    }
    let samples = sorted(samples);
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &x in grid {
        // the normalisation is common to every grid point
        let f = kernel_sum(&samples, h, x);
        if f > best.0 {
            best = (f, x);
        }
    }
    Ok(best.1)
}

/// Candidate angles proposed by one DoF segment.
pub fn population_candidates(curves: &[Curve], segment: &[f64], floor: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * curves.len());
    for (c, &y) in curves.iter().zip(segment) {
        match c {
            Curve::Linear { .. } => {
                if y >= floor {
                    if let Ok(x) = invert_linear(c, y) {
                        out.push(x);
                    }
                }
            }
            Curve::Sigmoid { .. } => {
                if let Ok(x) = invert_sigmoid(c, y, floor) {
                    out.push(x);
                }
            }
            Curve::Gaussian { .. } => {
                if let Ok((a, b)) = invert_gaussian(c, y.min(1.0), floor) {
                    out.push(a);
                    if b != a {
                        out.push(b);
                    }
                }
            }
        }
    }
    out
}

/// Decodes the activation segment of DoF `d` to one angle in its range.
pub fn decode_population(
    codec: &PopulationCodec,
    d: usize,
    segment: &[f64],
    cfg: &KdeConfig,
) -> Result<f64> {
    let curves = &codec.curves[d];
    let joint = &codec.joints[d];
    if !codec.family().is_population() {
        return decode_normalized(joint, segment);
    }
    if segment.len() != curves.len() {
        return Err(Error::WidthMismatch {
            expected: curves.len(),
            actual: segment.len(),
        });
    }
    let candidates = population_candidates(curves, segment, cfg.activation_floor);
    if candidates.is_empty() {
        return Err(Error::Undecodable {
            floor: cfg.activation_floor,
        });
    }
    let h = match cfg.bandwidth {
        Bandwidth::Fixed(h) => h,
        Bandwidth::Auto => silverman_bandwidth(&candidates, cfg.grid_resolution),
    };
    let grid = search_grid(joint.min_deg, joint.max_deg, cfg.grid_resolution);
    Ok(joint.clamp(kde_argmax(&candidates, h, &grid)?))
}

fn decode_normalized(joint: &JointSpec, segment: &[f64]) -> Result<f64> {
    match segment {
        [w] => Ok(joint.denormalize(*w)),
        _ => Err(Error::WidthMismatch {
            expected: 1,
            actual: segment.len(),
        }),
    }
}

/// Decodes a full encoded-width vector (e.g. a SOM weight vector) to one
/// angle per DoF.
pub fn decode_vector(codec: &PopulationCodec, w: &[f64], cfg: &KdeConfig) -> Result<Vec<f64>> {
    if w.len() != codec.width() {
        return Err(Error::WidthMismatch {
            expected: codec.width(),
            actual: w.len(),
        });
    }
    cfg.validate()?;
    (0..codec.dof())
        .map(|d| {
            decode_population(codec, d, &w[codec.segment(d)], cfg)
                .map_err(|e| e.in_dof(d, &codec.joints[d].name))
        })
        .collect()
}

/// Standard normal density, exposed for plots and tests.
pub fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}
