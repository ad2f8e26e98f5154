//! Quality measures for trained maps.
//!
//! `qe_encoded` is measured in the space the map was trained in, so its
//! scale depends on the encoding width. `qe_angle` decodes every unit,
//! normalizes angles by their joint ranges and measures in that common
//! space, which makes encodings comparable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{EncodedMatrix, Family, PopulationCodec};
use crate::dataset::Dataset;
use crate::decode::{decode_vector, KdeConfig};
use crate::error::{Error, Result};
use crate::som::{mean_bmu_distance, SomMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub family: Family,
    pub curves_per_dof: usize,
    pub width: usize,
    pub rows: usize,
    pub cols: usize,
    pub cycles: usize,
    pub seed: u64,
    pub qe_encoded: f64,
    /// `qe_encoded / sqrt(width)`.
    pub qe_encoded_scaled: f64,
    pub qe_angle: f64,
    pub topographic_error: f64,
    /// `None` when every decoded posture is identical.
    pub neighbor_coherence_ratio: Option<f64>,
    pub undecodable_units: Vec<usize>,
    pub excluded_samples: usize,
}

/// Mean Euclidean distance from each input to its BMU weights.
pub fn quantization_error(map: &SomMap, data: &EncodedMatrix) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.width() != map.width() {
        return Err(Error::WidthMismatch {
            expected: map.width(),
            actual: data.width(),
        });
    }
    Ok(mean_bmu_distance(map, data))
}

/// Angle-space quantization error with bookkeeping for units the decoder
/// could not resolve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleQe {
    pub qe_angle: f64,
    pub undecodable_units: Vec<usize>,
    /// Samples whose BMU was undecodable; left out of the mean.
    pub excluded_samples: usize,
}

/// Every unit's posture in range-normalized coordinates, or `None` if it
/// cannot be decoded. For the normalized family the weights already are
/// those coordinates.
pub fn normalized_unit_postures(
    map: &SomMap,
    codec: &PopulationCodec,
    kde: &KdeConfig,
) -> Result<Vec<Option<Vec<f64>>>> {
    if codec.width() != map.width() {
        return Err(Error::WidthMismatch {
            expected: map.width(),
            actual: codec.width(),
        });
    }
    kde.validate()?;
    if codec.family() == Family::Normalized {
        return Ok(map.unit_weights().map(|w| Some(w.to_vec())).collect());
    }
    Ok((0..map.units())
        .into_par_iter()
        .map(|k| match decode_vector(codec, map.unit(k), kde) {
            Ok(angles) => Some(
                angles
                    .iter()
                    .zip(&codec.joints)
                    .map(|(&a, j)| j.normalize(a))
                    .collect(),
            ),
            Err(e) => {
                log::debug!("unit {k} undecodable: {e}");
                None
            }
        })
        .collect())
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn quantization_error_angle(
    map: &SomMap,
    codec: &PopulationCodec,
    ds: &Dataset,
    kde: &KdeConfig,
) -> Result<AngleQe> {
    let encoded = codec.encode_dataset(ds)?;
    quantization_error_angle_encoded(map, codec, ds, &encoded, kde)
}

/// As [`quantization_error_angle`] with the dataset already encoded.
pub fn quantization_error_angle_encoded(
    map: &SomMap,
    codec: &PopulationCodec,
    ds: &Dataset,
    encoded: &EncodedMatrix,
    kde: &KdeConfig,
) -> Result<AngleQe> {
    let postures = normalized_unit_postures(map, codec, kde)?;
    angle_qe_from_postures(map, codec, ds, encoded, &postures)
}

fn angle_qe_from_postures(
    map: &SomMap,
    codec: &PopulationCodec,
    ds: &Dataset,
    encoded: &EncodedMatrix,
    postures: &[Option<Vec<f64>>],
) -> Result<AngleQe> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if encoded.len() != ds.len() || encoded.width() != map.width() {
        return Err(Error::WidthMismatch {
            expected: map.width(),
            actual: encoded.width(),
        });
    }
    let normalized = codec.family() == Family::Normalized;
    let per_sample: Vec<Option<f64>> = (0..ds.len())
        .into_par_iter()
        .map(|t| {
            let x = encoded.row(t);
            let (bmu, _) = map.best_two(x).0;
            match &postures[bmu] {
                Some(p) => {
                    let d = if normalized {
                        euclid(x, map.unit(bmu))
                    } else {
                        let truth: Vec<f64> = ds
                            .row(t)
                            .iter()
                            .zip(&codec.joints)
                            .map(|(&a, j)| j.normalize(a))
                            .collect();
                        euclid(p, &truth)
                    };
                    Some(d)
                }
                None => None,
            }
        })
        .collect();
    let (sum, used) = per_sample
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
    let undecodable_units: Vec<usize> = postures
        .iter()
        .enumerate()
        .filter_map(|(k, p)| p.is_none().then_some(k))
        .collect();
    let excluded = ds.len() - used;
    if excluded > 0 {
        log::warn!(
            "{excluded} samples mapped to {} undecodable units and were excluded",
            undecodable_units.len()
        );
    }
    if used == 0 {
        return Err(Error::Degenerate("every sample maps to an undecodable unit"));
    }
    Ok(AngleQe {
        qe_angle: sum / used as f64,
        undecodable_units,
        excluded_samples: excluded,
    })
}

/// Fraction of inputs whose two best units are not lattice neighbours.
pub fn topographic_error(map: &SomMap, data: &EncodedMatrix) -> Result<f64> {
    if map.units() < 2 {
        return Err(Error::Degenerate("topographic error needs at least two units"));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.width() != map.width() {
        return Err(Error::WidthMismatch {
            expected: map.width(),
            actual: data.width(),
        });
    }
    let errors: usize = (0..data.len())
        .into_par_iter()
        .map(|t| {
            let ((first, _), second) = map.best_two(data.row(t));
            let second = second.expect("at least two units").0;
            usize::from(!map.adjacent(first, second))
        })
        .sum();
    Ok(errors as f64 / data.len() as f64)
}

/// Mean decoded-posture distance of lattice-adjacent unit pairs divided by
/// the mean over all unit pairs. Values below 1 mean neighbouring units
/// represent similar postures.
pub fn neighbor_coherence(map: &SomMap, codec: &PopulationCodec, kde: &KdeConfig) -> Result<f64> {
    let postures = normalized_unit_postures(map, codec, kde)?;
    coherence_from_postures(map, &postures)
}

fn coherence_from_postures(map: &SomMap, postures: &[Option<Vec<f64>>]) -> Result<f64> {
    let mut adj = (0.0, 0usize);
    let mut all = (0.0, 0usize);
    for a in 0..postures.len() {
        let Some(pa) = &postures[a] else { continue };
        for b in a + 1..postures.len() {
            let Some(pb) = &postures[b] else { continue };
            let d = euclid(pa, pb);
            all.0 += d;
            all.1 += 1;
            if map.adjacent(a, b) {
                adj.0 += d;
                adj.1 += 1;
            }
        }
    }
    if adj.1 == 0 || all.1 == 0 {
        return Err(Error::Degenerate("no decodable adjacent unit pairs"));
    }
    let mean_all = all.0 / all.1 as f64;
    if mean_all == 0.0 {
        return Err(Error::Degenerate("all decoded postures coincide"));
    }
    Ok((adj.0 / adj.1 as f64) / mean_all)
}

/// All metrics for one trained map, decoding every unit once.
pub fn evaluate(
    map: &SomMap,
    codec: &PopulationCodec,
    ds: &Dataset,
    encoded: &EncodedMatrix,
    kde: &KdeConfig,
    seed: u64,
) -> Result<MetricsReport> {
    let qe_encoded = quantization_error(map, encoded)?;
    let postures = normalized_unit_postures(map, codec, kde)?;
    let angle = angle_qe_from_postures(map, codec, ds, encoded, &postures)?;
    let topographic_error = if map.units() >= 2 {
        topographic_error(map, encoded)?
    } else {
        0.0
    };
    let neighbor_coherence_ratio = match coherence_from_postures(map, &postures) {
        Ok(r) => Some(r),
        Err(Error::Degenerate(why)) => {
            log::warn!("neighbor coherence undefined: {why}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        family: codec.family(),
        curves_per_dof: codec.curves_per_dof(),
        width: codec.width(),
        rows: map.rows,
        cols: map.cols,
        cycles: map.trained_cycles,
        seed,
        qe_encoded,
        qe_encoded_scaled: qe_encoded / (codec.width() as f64).sqrt(),
        qe_angle: angle.qe_angle,
        topographic_error,
        neighbor_coherence_ratio,
        undecodable_units: angle.undecodable_units,
        excluded_samples: angle.excluded_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_codec, CodecSpec};
    use crate::kinematics::JointSpec;

    fn matrix(rows: &[Vec<f64>]) -> EncodedMatrix {
        EncodedMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn perfect_codebook_and_midpoint() {
        let rows = vec![vec![0.1, 0.2], vec![0.5, 0.9], vec![0.1, 0.2], vec![0.7, 0.3]];
        let map = SomMap::from_weights(1, 3, vec![rows[0].clone(), rows[1].clone(), rows[3].clone()]).unwrap();
        assert_eq!(quantization_error(&map, &matrix(&rows)).unwrap(), 0.0);

        let x = vec![0.2, 0.4, 0.0];
        let y = vec![0.6, 0.1, 1.0];
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let map = SomMap::from_weights(1, 1, vec![mid]).unwrap();
        let expected = euclid(&x, &y) / 2.0;
        let qe = quantization_error(&map, &matrix(&[x, y])).unwrap();
        assert!((qe - expected).abs() < 1e-15);
        assert!(quantization_error(&map, &matrix(&[vec![0.0]])).is_err());
    }

    #[test]
    fn topographic_error_extremes() {
        let map = SomMap::from_weights(1, 3, vec![vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let adjacent = matrix(&[vec![0.1], vec![0.3], vec![0.9]]);
        assert_eq!(topographic_error(&map, &adjacent).unwrap(), 0.0);
        // units 0 and 2 nearest, far apart on the lattice
        let map = SomMap::from_weights(1, 3, vec![vec![0.0], vec![1.0], vec![0.1]]).unwrap();
        let split = matrix(&[vec![0.05], vec![0.04], vec![0.06]]);
        assert_eq!(topographic_error(&map, &split).unwrap(), 1.0);
        let single = SomMap::from_weights(1, 1, vec![vec![0.0]]).unwrap();
        assert!(matches!(topographic_error(&single, &split), Err(Error::Degenerate(_))));
    }

    #[test]
    fn coherence_of_identical_units_is_degenerate() {
        let joints = vec![JointSpec::new("j", -40.0, 30.0).unwrap()];
        let codec = build_codec(CodecSpec::normalized(), &joints).unwrap();
        let map = SomMap::from_weights(2, 2, vec![vec![0.3]; 4]).unwrap();
        assert!(matches!(
            neighbor_coherence(&map, &codec, &KdeConfig::default()),
            Err(Error::Degenerate(_))
        ));
        // a monotone 1-D lattice is coherent
        let map = SomMap::from_weights(1, 4, vec![vec![0.0], vec![0.3], vec![0.6], vec![0.9]]).unwrap();
        assert!(neighbor_coherence(&map, &codec, &KdeConfig::default()).unwrap() < 1.0);
    }

    #[test]
    fn exact_posture_units_give_zero_angle_error() {
        let joints = vec![
            JointSpec::new("a", -40.0, 30.0).unwrap(),
            JointSpec::new("b", 0.0, 90.0).unwrap(),
        ];
        let codec = build_codec(CodecSpec::fixed_count(Family::Linear, 10), &joints).unwrap();
        // postures on the 0.1 degree decode grid
        let postures = vec![vec![-5.0, 45.0], vec![12.0, 3.5]];
        let ds = Dataset::new(joints, postures.clone(), 50.0).unwrap();
        let units: Vec<Vec<f64>> = postures.iter().map(|p| codec.encode_sample(p).unwrap().values).collect();
        let map = SomMap::from_weights(1, 2, units).unwrap();
        let qe = quantization_error_angle(&map, &codec, &ds, &KdeConfig::default()).unwrap();
        assert!(qe.qe_angle < 1e-9, "{qe:?}");
        assert_eq!(qe.excluded_samples, 0);
    }

    #[test]
    fn undecodable_units_are_excluded() {
        let joints = vec![JointSpec::new("a", -40.0, 30.0).unwrap()];
        let codec = build_codec(CodecSpec::fixed_count(Family::Gaussian, 5), &joints).unwrap();
        let ds = Dataset::new(joints, vec![vec![-39.0], vec![29.0]], 50.0).unwrap();
        let good = codec.encode_sample(&[29.0]).unwrap().values;
        let map = SomMap::from_weights(1, 2, vec![vec![0.0; 5], good]).unwrap();
        let enc = codec.encode_dataset(&ds).unwrap();
        let qe = quantization_error_angle_encoded(&map, &codec, &ds, &enc, &KdeConfig::default()).unwrap();
        assert_eq!(qe.undecodable_units, vec![0]);
        assert_eq!(qe.excluded_samples, 1);
    }
}
