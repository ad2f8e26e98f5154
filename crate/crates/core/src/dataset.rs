//! Time-ordered posture matrices and their CSV representation.
//!
//! A dataset file is a plain CSV: the header row holds the joint names and
//! every following row is one 20 ms sample in degrees. Joint ranges live in a
//! sidecar CSV with the columns `name,min_deg,max_deg`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::JointSpec;

pub const SAMPLE_RATE_HZ: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    joints: Vec<JointSpec>,
    /// Row-major, `len() == rows * joints.len()`.
    samples: Vec<f64>,
    rate_hz: f64,
}

impl Dataset {
    /// Builds a dataset, rejecting ragged rows, non-finite values and values
    /// outside the joint ranges.
    pub fn new(joints: Vec<JointSpec>, rows: Vec<Vec<f64>>, rate_hz: f64) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidArgument("dataset needs at least one joint".into()));
        }
        for j in &joints {
            j.validate()?;
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = joints.len();
        let mut samples = Vec::with_capacity(rows.len() * dim);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::WidthMismatch {
                    expected: dim,
                    actual: row.len(),
                }
                .in_row(t));
            }
            for (d, (&v, j)) in row.iter().zip(&joints).enumerate() {
                check_cell(t, d, j, v)?;
            }
            samples.extend_from_slice(row);
        }
        Ok(Dataset {
            joints,
            samples,
            rate_hz,
        })
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn dim(&self) -> usize {
        self.joints.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let d = self.dim();
        &self.samples[t * d..(t + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.samples.chunks_exact(self.dim())
    }

    pub fn column(&self, d: usize) -> Vec<f64> {
        self.rows().map(|r| r[d]).collect()
    }

    /// First `n` rows (all of them if `n >= len`).
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.clamp(1, self.len());
        Dataset {
            joints: self.joints.clone(),
            samples: self.samples[..n * self.dim()].to_vec(),
            rate_hz: self.rate_hz,
        }
    }
}

fn check_cell(row: usize, column: usize, joint: &JointSpec, value: f64) -> Result<()> {
    if !joint.contains(value) {
        // NaN fails `contains` as well
        return Err(Error::OutOfRange {
            row,
            column,
            name: joint.name.clone(),
            value,
            min: joint.min_deg,
            max: joint.max_deg,
        });
    }
    Ok(())
}

pub fn parse_joint_specs<R: Read>(reader: R, origin: &str) -> Result<Vec<JointSpec>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut specs = Vec::new();
    for rec in rdr.deserialize::<JointSpec>() {
        let spec = rec?;
        spec.validate()?;
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(Error::format(origin, "joint spec file lists no joints"));
    }
    Ok(specs)
}

pub fn load_joint_specs(path: impl AsRef<Path>) -> Result<Vec<JointSpec>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_joint_specs(file, &path.display().to_string())
}

pub fn save_joint_specs(joints: &[JointSpec], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(file);
    for j in joints {
        wtr.serialize(j)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Joint-spec file stored next to a dataset: `run.csv` pairs with `run.joints.csv`.
pub fn sidecar_path(dataset: impl AsRef<Path>) -> std::path::PathBuf {
    let p = dataset.as_ref();
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    p.with_file_name(format!("{stem}.joints.csv"))
}

/// Reads a dataset CSV and validates it against the sidecar joint specs.
pub fn load_dataset(path: impl AsRef<Path>, joint_spec_path: impl AsRef<Path>) -> Result<Dataset> {
    let joints = load_joint_specs(joint_spec_path)?;
    load_dataset_with(path, joints)
}

pub fn load_dataset_with(path: impl AsRef<Path>, joints: Vec<JointSpec>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, joints, path)
}

fn read_dataset<R: Read>(reader: R, joints: Vec<JointSpec>, path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.len() != joints.len() {
        return Err(Error::format(
            path,
            format!(
                "header has {} columns but the joint spec lists {} joints",
                header.len(),
                joints.len()
            ),
        ));
    }
    for (d, (h, j)) in header.iter().zip(&joints).enumerate() {
        if *h != j.name {
            return Err(Error::format(
                path,
                format!("column {d} is named {h:?} but the joint spec expects {:?}", j.name),
            ));
        }
    }
    let mut rows = Vec::new();
    for (t, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(joints.len());
        for (d, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(path, format!("row {t}, column {d}: cannot parse {field:?}"))
            })?;
            if v.is_nan() {
                return Err(Error::format(path, format!("row {t}, column {d}: NaN value")));
            }
            check_cell(t, d, &joints[d], v)?;
            row.push(v);
        }
        rows.push(row);
    }
    Dataset::new(joints, rows, SAMPLE_RATE_HZ)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix(
        file,
        ds.joints().iter().map(|j| j.name.as_str()),
        ds.rows(),
    )
    .map_err(|e| Error::io(path, e))
}

/// Writes a header plus numeric rows; `f64` display is the shortest string
/// that parses back to the same value.
pub fn write_matrix<'a, W: Write>(
    out: W,
    header: impl IntoIterator<Item = &'a str>,
    rows: impl IntoIterator<Item = &'a [f64]>,
) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    let header: Vec<&str> = header.into_iter().collect();
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b",")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Reads a header plus numeric rows without range checks.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (t, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(d, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| !v.is_nan())
                    .ok_or_else(|| Error::format(path, format!("row {t}, column {d}: bad value {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::format(path, format!("row {t} has {} fields", row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn joints() -> Vec<JointSpec> {
        vec![
            JointSpec::new("a", -40.0, 30.0).unwrap(),
            JointSpec::new("b", 0.0, 90.0).unwrap(),
        ]
    }

    #[test]
    fn rejects_ragged_and_out_of_range_rows() {
        assert!(matches!(
            Dataset::new(joints(), vec![vec![0.0]], 50.0),
            Err(Error::Row { row: 0, .. })
        ));
        match Dataset::new(joints(), vec![vec![0.0, 1.0], vec![31.0, 1.0]], 50.0) {
            Err(Error::OutOfRange { row, column, .. }) => assert_eq!((row, column), (1, 0)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Dataset::new(joints(), vec![vec![f64::NAN, 1.0]], 50.0).is_err());
        assert!(matches!(Dataset::new(joints(), vec![], 50.0), Err(Error::EmptyDataset)));
    }

    #[test]
    fn csv_errors_name_the_problem() {
        let p = Path::new("mem.csv");
        let err = read_dataset("a\n1\n".as_bytes(), joints(), p).unwrap_err();
        assert!(err.to_string().contains("1 columns but the joint spec lists 2"), "{err}");
        let err = read_dataset("a,c\n1,2\n".as_bytes(), joints(), p).unwrap_err();
        assert!(err.to_string().contains("\"c\""), "{err}");
        let err = read_dataset("a,b\n1,NaN\n".as_bytes(), joints(), p).unwrap_err();
        assert!(err.to_string().contains("NaN"), "{err}");
        let err = read_dataset("a,b\n1,x\n".as_bytes(), joints(), p).unwrap_err();
        assert!(err.to_string().contains("cannot parse"), "{err}");
        let err = read_dataset("a,b\n0,0\n31,0\n".as_bytes(), joints(), p).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { row: 1, column: 0, .. }), "{err}");
    }

    #[test]
    fn default_joint_file_is_valid() {
        let j = crate::kinematics::default_joints();
        assert_eq!(j.len(), 13);
        assert_eq!(j[7].name, "neck_pitch");
        assert_eq!((j[7].min_deg, j[7].max_deg), (-40.0, 30.0));
    }
}
