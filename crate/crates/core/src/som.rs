//! Rectangular Kohonen map trained sequentially in encoded-input space.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{read_json, write_json, EncodedMatrix, Family, PopulationCodec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Every unit is the encoding of a random posture.
    Consistent,
    /// Every weight is drawn uniformly from the data range of its input.
    Naive,
}

impl std::str::FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "consistent" => Ok(InitKind::Consistent),
            "naive" => Ok(InitKind::Naive),
            _ => Err(Error::InvalidArgument(format!("unknown init {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Full passes over the dataset.
    pub cycles: usize,
    pub shuffle: bool,
    pub seed: u64,
    pub alpha0: f64,
    pub alpha_end: f64,
    /// Defaults to half the longer lattice side.
    pub radius0: Option<f64>,
    pub radius_end: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            cycles: 6,
            shuffle: true,
            seed: 0,
            alpha0: 0.5,
            alpha_end: 0.01,
            radius0: None,
            radius_end: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cycles == 0 {
            return Err(Error::InvalidArgument("cycles must be at least 1".into()));
        }
        if !(0.0 <= self.alpha_end && self.alpha_end <= self.alpha0 && self.alpha0 <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rates must satisfy 0 <= alpha_end <= alpha0 <= 1, got {} and {}",
                self.alpha0, self.alpha_end
            )));
        }
        if !(self.radius_end >= 0.0) || self.radius0.is_some_and(|r| !(r >= 0.0)) {
            return Err(Error::InvalidArgument("neighborhood radii must be non-negative".into()));
        }
        Ok(())
    }

    pub fn initial_radius(&self, rows: usize, cols: usize) -> f64 {
        self.radius0.unwrap_or(rows.max(cols) as f64 / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomMap {
    pub rows: usize,
    pub cols: usize,
    width: usize,
    /// Unit-major, row-major lattice order.
    weights: Vec<f64>,
    pub init: InitKind,
    /// Codec the weights are expressed in.
    pub codec: Option<PopulationCodec>,
    pub trained_cycles: usize,
    pub train_config: Option<TrainConfig>,
    /// Quantization error before training and after every cycle.
    #[serde(default)]
    pub qe_trace: Vec<f64>,
}

fn check_lattice(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!("lattice must be at least 1x1, got {rows}x{cols}")));
    }
    Ok(())
}

/// Seeds every unit with the encoding of a uniformly random posture.
pub fn init_consistent(rows: usize, cols: usize, codec: &PopulationCodec, seed: u64) -> Result<SomMap> {
    check_lattice(rows, cols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(rows * cols * codec.width());
    for _ in 0..rows * cols {
        let posture: Vec<f64> = codec
            .joints
            .iter()
            .map(|j| rng.random_range(j.min_deg..=j.max_deg))
            .collect();
        weights.extend(codec.encode_sample(&posture)?.values);
    }
    Ok(SomMap {
        rows,
        cols,
        width: codec.width(),
        weights,
        init: InitKind::Consistent,
        codec: Some(codec.clone()),
        trained_cycles: 0,
        train_config: None,
        qe_trace: Vec::new(),
    })
}

/// Per-dimension uniform weights within `input_ranges`.
pub fn init_naive(rows: usize, cols: usize, input_ranges: &[(f64, f64)], seed: u64) -> Result<SomMap> {
    check_lattice(rows, cols)?;
    if input_ranges.is_empty() {
        return Err(Error::InvalidArgument("no input dimensions".into()));
    }
    if let Some(&(lo, hi)) = input_ranges.iter().find(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::InvalidArgument(format!("bad input range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(rows * cols * input_ranges.len());
    for _ in 0..rows * cols {
        for &(lo, hi) in input_ranges {
            weights.push(if lo == hi { lo } else { rng.random_range(lo..=hi) });
        }
    }
    Ok(SomMap {
        rows,
        cols,
        width: input_ranges.len(),
        weights,
        init: InitKind::Naive,
        codec: None,
        trained_cycles: 0,
        train_config: None,
        qe_trace: Vec::new(),
    })
}

/// Observed `[min, max]` of every input column.
pub fn input_ranges(data: &EncodedMatrix) -> Vec<(f64, f64)> {
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); data.width()];
    for row in data.rows() {
        for (r, &v) in ranges.iter_mut().zip(row) {
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    }
    ranges
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl SomMap {
    pub fn from_weights(rows: usize, cols: usize, unit_weights: Vec<Vec<f64>>) -> Result<SomMap> {
        check_lattice(rows, cols)?;
        if unit_weights.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} weight vectors for a {rows}x{cols} lattice",
                unit_weights.len()
            )));
        }
        let width = unit_weights[0].len();
        if let Some(w) = unit_weights.iter().find(|w| w.len() != width) {
            return Err(Error::WidthMismatch {
                expected: width,
                actual: w.len(),
            });
        }
        Ok(SomMap {
            rows,
            cols,
            width,
            weights: unit_weights.concat(),
            init: InitKind::Naive,
            codec: None,
            trained_cycles: 0,
            train_config: None,
            qe_trace: Vec::new(),
        })
    }

    pub fn with_codec(mut self, codec: PopulationCodec) -> Result<Self> {
        if codec.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                actual: codec.width(),
            });
        }
        self.codec = Some(codec);
        Ok(self)
    }

    pub fn units(&self) -> usize {
        self.rows * self.cols
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn unit(&self, k: usize) -> &[f64] {
        &self.weights[k * self.width..(k + 1) * self.width]
    }

    pub fn unit_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.weights[k * self.width..(k + 1) * self.width]
    }

    pub fn unit_weights(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.weights.chunks_exact(self.width)
    }

    /// Lattice `(row, col)` of unit `k`.
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k / self.cols, k % self.cols)
    }

    pub fn lattice_sq_dist(&self, a: usize, b: usize) -> f64 {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        let dr = ra as f64 - rb as f64;
        let dc = ca as f64 - cb as f64;
        dr * dr + dc * dc
    }

    /// Whether two units share a lattice edge (4-neighborhood).
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        ra.abs_diff(rb) + ca.abs_diff(cb) == 1
    }

    fn check_width(&self, actual: usize) -> Result<()> {
        if actual != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                actual,
            });
        }
        Ok(())
    }

    /// Best and second-best units with squared distances; ties go to the
    /// lower index.
    pub fn best_two(&self, x: &[f64]) -> ((usize, f64), Option<(usize, f64)>) {
        let mut best = (0, f64::INFINITY);
        let mut second: Option<(usize, f64)> = None;
        for (k, w) in self.unit_weights().enumerate() {
            let d = sq_dist(w, x);
            if d < best.1 {
                second = Some(best).filter(|b| b.1.is_finite());
                best = (k, d);
            } else if second.is_none_or(|s| d < s.1) {
                second = Some((k, d));
            }
        }
        (best, second)
    }

    fn bmu_sq(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (k, w) in self.unit_weights().enumerate() {
            let d = sq_dist(w, x);
            if d < best.1 {
                best = (k, d);
            }
        }
        best
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let map: SomMap = read_json(path.as_ref())?;
        if map.rows * map.cols * map.width != map.weights.len() || map.units() == 0 {
            return Err(Error::format(path.as_ref(), "weights do not match the lattice"));
        }
        if let Some(c) = &map.codec {
            if c.width() != map.width {
                return Err(Error::format(path.as_ref(), "codec width does not match the weights"));
            }
        }
        Ok(map)
    }
}

/// Unit index nearest to `x` in Euclidean distance, and that distance.
pub fn find_bmu(map: &SomMap, x: &[f64]) -> Result<(usize, f64)> {
    map.check_width(x.len())?;
    let (k, d2) = map.bmu_sq(x);
    Ok((k, d2.sqrt()))
}

/// Mean Euclidean distance from every row to its best matching unit.
pub(crate) fn mean_bmu_distance(map: &SomMap, data: &EncodedMatrix) -> f64 {
    // collect first: a parallel float sum would depend on the work split
    let dists: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|t| map.bmu_sq(data.row(t)).1.sqrt())
        .collect();
    dists.iter().sum::<f64>() / data.len() as f64
}

fn neighborhood(lattice_sq: f64, radius: f64) -> f64 {
    if radius > 0.0 {
        (-lattice_sq / (2.0 * radius * radius)).exp()
    } else if lattice_sq == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Sequential Kohonen training. Learning rate and radius decay linearly from
/// their start to their end values over all presentations.
pub fn train(mut map: SomMap, data: &EncodedMatrix, cfg: &TrainConfig) -> Result<SomMap> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    map.check_width(data.width())?;

    let units = map.units();
    let lattice: Vec<f64> = (0..units * units)
        .map(|i| map.lattice_sq_dist(i / units, i % units))
        .collect();
    let n = data.len();
    let total_steps = cfg.cycles * n;
    let denom = total_steps.saturating_sub(1).max(1) as f64;
    let r0 = cfg.initial_radius(map.rows, map.cols);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(cfg.cycles + 1);
    trace.push(mean_bmu_distance(&map, data));

    let width = map.width;
    let mut step = 0usize;
    for _ in 0..cfg.cycles {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        for &t in &order {
            let frac = step as f64 / denom;
            let alpha = cfg.alpha0 + (cfg.alpha_end - cfg.alpha0) * frac;
            let radius = r0 + (cfg.radius_end - r0) * frac;
            let x = data.row(t);
            let (bmu, _) = map.bmu_sq(x);
            let row = &lattice[bmu * units..(bmu + 1) * units];
            for (w, &d2) in map.weights.chunks_exact_mut(width).zip(row) {
                let c = alpha * neighborhood(d2, radius);
                let keep = 1.0 - c;
                for (wi, &xi) in w.iter_mut().zip(x) {
                    // convex combination; the clamp only absorbs rounding
                    *wi = (keep * *wi + c * xi).clamp(0.0, 1.0);
                }
            }
            step += 1;
        }
        trace.push(mean_bmu_distance(&map, data));
    }
    map.trained_cycles += cfg.cycles;
    map.train_config = Some(*cfg);
    map.qe_trace = trace;
    Ok(map)
}

/// Search settings for the distance to the manifold of valid codes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldConfig {
    /// Coarse grid step in degrees; the best grid point is then refined.
    pub grid_step: f64,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        ManifoldConfig { grid_step: 0.05 }
    }
}

fn segment_residual(codec: &PopulationCodec, d: usize, segment: &[f64], x: f64, scratch: &mut [f64]) -> f64 {
    codec.encode_dof_into(d, x, scratch);
    sq_dist(segment, scratch).sqrt()
}

/// `min over angles of ||segment - encode(angle)||` for one DoF. Returns the
/// minimizing angle and the distance.
pub fn segment_manifold_distance(
    codec: &PopulationCodec,
    d: usize,
    segment: &[f64],
    cfg: &ManifoldConfig,
) -> (f64, f64) {
    let joint = &codec.joints[d];
    if codec.family() == Family::Normalized {
        // every scalar in [0, 1] is the code of some angle
        let w = segment[0];
        let c = w.clamp(0.0, 1.0);
        return (joint.denormalize(c), (w - c).abs());
    }
    let mut scratch = vec![0.0; segment.len()];
    let grid = crate::decode::search_grid(joint.min_deg, joint.max_deg, cfg.grid_step);
    let mut best = (grid[0], f64::INFINITY);
    for &x in &grid {
        let r = segment_residual(codec, d, segment, x, &mut scratch);
        if r < best.1 {
            best = (x, r);
        }
    }
    // golden-section refinement in the neighbouring grid cells
    let mut lo = (best.0 - cfg.grid_step).max(joint.min_deg);
    let mut hi = (best.0 + cfg.grid_step).min(joint.max_deg);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = segment_residual(codec, d, segment, a, &mut scratch);
    let mut fb = segment_residual(codec, d, segment, b, &mut scratch);
    for _ in 0..80 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = segment_residual(codec, d, segment, a, &mut scratch);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = segment_residual(codec, d, segment, b, &mut scratch);
        }
    }
    for (x, f) in [(a, fa), (b, fb)] {
        if f < best.1 {
            best = (x, f);
        }
    }
    best
}

/// Sum over DoFs of the per-segment manifold distance of `w`.
pub fn vector_manifold_distance(codec: &PopulationCodec, w: &[f64], cfg: &ManifoldConfig) -> f64 {
    (0..codec.dof())
        .map(|d| segment_manifold_distance(codec, d, &w[codec.segment(d)], cfg).1)
        .sum()
}

/// Per-unit distance to the nearest valid population code; zero iff the
/// unit encodes an actual posture.
pub fn manifold_distance(map: &SomMap, codec: &PopulationCodec, cfg: &ManifoldConfig) -> Result<Vec<f64>> {
    map.check_width(codec.width())?;
    Ok((0..map.units())
        .into_par_iter()
        .map(|k| vector_manifold_distance(codec, map.unit(k), cfg))
        .collect())
}

pub fn mean_manifold_distance(map: &SomMap, codec: &PopulationCodec, cfg: &ManifoldConfig) -> Result<f64> {
    let d = manifold_distance(map, codec, cfg)?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_codec, CodecSpec};
    use crate::kinematics::JointSpec;

    fn joint() -> Vec<JointSpec> {
        vec![JointSpec::new("j", -40.0, 30.0).unwrap()]
    }

    fn matrix(rows: &[Vec<f64>]) -> EncodedMatrix {
        EncodedMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn bmu_exact_match_and_ties() {
        let map = SomMap::from_weights(1, 3, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(find_bmu(&map, &[0.5, 0.5]).unwrap(), (2, 0.0));
        // equidistant from units 0 and 1
        assert_eq!(find_bmu(&map, &[0.5, -0.2]).unwrap().0, 0);
        assert!(matches!(find_bmu(&map, &[0.5]), Err(Error::WidthMismatch { .. })));
        let single = SomMap::from_weights(1, 1, vec![vec![0.3]]).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(find_bmu(&single, &[x]).unwrap().0, 0);
        }
    }

    #[test]
    fn best_two_orders_units() {
        let map = SomMap::from_weights(2, 2, vec![vec![0.0], vec![0.4], vec![0.6], vec![1.0]]).unwrap();
        let ((b, _), s) = map.best_two(&[0.45]);
        assert_eq!((b, s.unwrap().0), (1, 2));
        let ((b, _), s) = map.best_two(&[0.0]);
        assert_eq!((b, s.unwrap().0), (0, 1));
        let ((b, _), s) = map.best_two(&[0.5]);
        assert_eq!((b, s.unwrap().0), (1, 2));
    }

    #[test]
    fn full_rate_single_unit() {
        let map = SomMap::from_weights(1, 1, vec![vec![0.9, 0.1, 0.3]]).unwrap();
        let x = vec![0.2, 0.7, 0.123456789];
        let cfg = TrainConfig {
            cycles: 1,
            alpha0: 1.0,
            alpha_end: 1.0,
            ..Default::default()
        };
        let trained = train(map, &matrix(&[x.clone()]), &cfg).unwrap();
        assert_eq!(trained.unit(0), &x[..]);
        assert_eq!(trained.qe_trace.len(), 2);
    }

    #[test]
    fn zero_rate_is_identity() {
        let joints = crate::kinematics::default_joints();
        let codec = build_codec(CodecSpec::fixed_count(crate::codec::Family::Gaussian, 5), &joints).unwrap();
        let map = init_consistent(3, 3, &codec, 9).unwrap();
        let data = init_consistent(10, 1, &codec, 10).unwrap();
        let rows: Vec<Vec<f64>> = data.unit_weights().map(<[f64]>::to_vec).collect();
        let cfg = TrainConfig {
            alpha0: 0.0,
            alpha_end: 0.0,
            cycles: 2,
            ..Default::default()
        };
        let trained = train(map.clone(), &matrix(&rows), &cfg).unwrap();
        assert_eq!(trained.weights, map.weights);
    }

    #[test]
    fn train_config_validation() {
        let bad = [
            TrainConfig { cycles: 0, ..Default::default() },
            TrainConfig { alpha0: 1.5, ..Default::default() },
            TrainConfig { alpha0: 0.1, alpha_end: 0.2, ..Default::default() },
            TrainConfig { radius_end: -1.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        let map = SomMap::from_weights(1, 1, vec![vec![0.1]]).unwrap();
        assert!(matches!(
            train(map.clone(), &matrix(&[vec![0.1, 0.2]]), &TrainConfig::default()),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn naive_init_draws_within_ranges() {
        let ranges = [(0.0, 0.5), (0.2, 0.2), (0.1, 0.9)];
        let a = init_naive(4, 4, &ranges, 1).unwrap();
        assert_eq!(a, init_naive(4, 4, &ranges, 1).unwrap());
        assert_ne!(a, init_naive(4, 4, &ranges, 2).unwrap());
        for w in a.unit_weights() {
            for (v, (lo, hi)) in w.iter().zip(&ranges) {
                assert!(v >= lo && v <= hi);
            }
        }
        assert!(init_naive(1, 1, &[(1.0, 0.0)], 0).is_err());
        assert!(init_naive(0, 1, &ranges, 0).is_err());
    }

    #[test]
    fn consistent_units_sit_on_the_manifold() {
        for fam in crate::codec::Family::ALL {
            let codec = build_codec(CodecSpec::fixed_count(fam, 10), &joint()).unwrap();
            let map = init_consistent(2, 3, &codec, 4).unwrap();
            let cfg = ManifoldConfig { grid_step: 0.01 };
            for d in manifold_distance(&map, &codec, &cfg).unwrap() {
                assert!(d < 1e-6, "{fam}: {d}");
            }
        }
    }

    #[test]
    fn blended_gaussian_code_is_off_manifold() {
        let codec = build_codec(CodecSpec::fixed_count(crate::codec::Family::Gaussian, 10), &joint()).unwrap();
        let a = codec.encode_dof(0, -20.0);
        let b = codec.encode_dof(0, 10.0);
        let blend: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
        let (_, dist) = segment_manifold_distance(&codec, 0, &blend, &ManifoldConfig::default());
        // brute force over a fine grid
        let mut brute = f64::INFINITY;
        for i in 0..=70_000 {
            let x = -40.0 + i as f64 * 1e-3;
            brute = brute.min(sq_dist(&blend, &codec.encode_dof(0, x)).sqrt());
        }
        assert!(dist > 0.1, "{dist}");
        assert!(dist <= brute + 1e-12 && brute - dist < 1e-6, "{dist} vs {brute}");
    }

    #[test]
    fn normalized_units_are_always_consistent() {
        let codec = build_codec(CodecSpec::normalized(), &joint()).unwrap();
        let map = init_naive(3, 3, &[(0.0, 1.0)], 5).unwrap().with_codec(codec.clone()).unwrap();
        assert!(manifold_distance(&map, &codec, &ManifoldConfig::default())
            .unwrap()
            .iter()
            .all(|&d| d == 0.0));
    }

    #[test]
    fn map_json_roundtrip() {
        let codec = build_codec(CodecSpec::fixed_count(crate::codec::Family::Sigmoid, 3), &joint()).unwrap();
        let map = init_consistent(2, 2, &codec, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("map.json");
        map.save(&p).unwrap();
        assert_eq!(SomMap::load(&p).unwrap(), map);
    }
}
