//! CSV and JSON readers and writers.
//!
//! Every file written here starts with the provenance of the run: CSV files
//! carry a `#` comment line, JSON files a `meta` object.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use sediment::dynamics::Trajectory;
use sediment::meanfield::BlobDensity;
use sediment::ot::{DiscreteMeasure, TransportPlan};
use sediment::Vec3;

use crate::config::{ExperimentConfig, CODE_VERSION};
use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReportMeta {
    pub config_hash: String,
    pub code_version: String,
}

impl ReportMeta {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        ReportMeta {
            config_hash: config.hash(),
            code_version: CODE_VERSION.to_string(),
        }
    }

    /// For commands run without a configuration file: hashes the arguments.
    pub fn for_value<T: Serialize>(value: &T) -> Self {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(value).expect("arguments serialize");
        ReportMeta {
            config_hash: Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
            code_version: CODE_VERSION.to_string(),
        }
    }

    fn comment(&self) -> String {
        format!("# config_hash={} code_version={}\n", self.config_hash, self.code_version)
    }
}

/// Rows of formatted cells under a fixed header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
    }
    File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

pub fn write_table(path: &Path, meta: &ReportMeta, table: &Table) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(meta.comment().as_bytes()).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header).map_err(|e| HarnessError::io(path, e))?;
    for r in &table.rows {
        w.write_record(r).map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, meta: &ReportMeta, body: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        meta: &'a ReportMeta,
        report: &'a T,
    }
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &Envelope { meta, report: body }).map_err(|e| HarnessError::io(path, e))?;
    out.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    out.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn trajectory_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(&["t", "i", "x", "y", "z", "vx", "vy", "vz"]);
    for s in &traj.snapshots {
        for (i, (x, v)) in s.cloud.positions().iter().zip(&s.kinematics.velocities).enumerate() {
            t.push(vec![num(s.time), i.to_string(), num(x.x), num(x.y), num(x.z), num(v.x), num(v.y), num(v.z)]);
        }
    }
    t
}

pub fn density_table(snapshots: &[BlobDensity]) -> Table {
    let mut t = Table::new(&["t", "k", "y1", "y2", "y3", "w"]);
    for d in snapshots {
        for (k, (y, w)) in d.centers().iter().zip(d.weights()).enumerate() {
            t.push(vec![num(d.time()), k.to_string(), num(y.x), num(y.y), num(y.z), num(*w)]);
        }
    }
    t
}

pub fn plan_table(plan: &TransportPlan) -> Table {
    let mut t = Table::new(&["i", "j", "mass"]);
    for &(i, j, m) in &plan.entries {
        t.push(vec![i.to_string(), j.to_string(), num(m)]);
    }
    t
}

pub fn cloud_table(points: &[Vec3]) -> Table {
    let mut t = Table::new(&["x", "y", "z"]);
    for p in points {
        t.push(vec![num(p.x), num(p.y), num(p.z)]);
    }
    t
}

fn read_rows(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let header = r.headers().map_err(|e| HarnessError::io(path, e))?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| HarnessError::Parse(format!("{}: missing column '{c}'", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::io(path, e))?;
        let row = idx
            .iter()
            .map(|&k| {
                let cell = rec.get(k).unwrap_or("");
                cell.parse::<f64>().map_err(|_| {
                    HarnessError::Parse(format!("{}: row {}: '{cell}' is not a number", path.display(), line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Positions from a CSV with columns `x,y,z`.
pub fn read_cloud_csv(path: &Path) -> Result<Vec<Vec3>> {
    Ok(read_rows(path, &["x", "y", "z"])?
        .into_iter()
        .map(|r| Vec3::new(r[0], r[1], r[2]))
        .collect())
}

/// Measure from a CSV with columns `x,y,z,w`; weights must already sum to one.
pub fn read_measure_csv(path: &Path) -> Result<DiscreteMeasure> {
    let rows = read_rows(path, &["x", "y", "z", "w"])?;
    let (atoms, weights) = rows.into_iter().map(|r| (Vec3::new(r[0], r[1], r[2]), r[3])).unzip();
    Ok(DiscreteMeasure::new(atoms, weights)?)
}

pub fn write_measure_csv(path: &Path, meta: &ReportMeta, mu: &DiscreteMeasure) -> Result<()> {
    let mut t = Table::new(&["x", "y", "z", "w"]);
    for (p, w) in mu.atoms().iter().zip(mu.weights()) {
        t.push(vec![num(p.x), num(p.y), num(p.z), num(*w)]);
    }
    write_table(path, meta, &t)
}

/// `dir/name`, creating `dir`.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    Ok(dir.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ReportMeta {
        ReportMeta {
            config_hash: "abc".into(),
            code_version: CODE_VERSION.into(),
        }
    }

    #[test]
    fn measure_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let mu = DiscreteMeasure::normalized(
            vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(-1.0 / 3.0, 1e-17, 2.5)],
            vec![1.0, 2.0],
        )
        .unwrap();
        write_measure_csv(&p, &meta(), &mu).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# config_hash=abc"));
        assert_eq!(read_measure_csv(&p).unwrap(), mu);
    }

    #[test]
    fn unnormalized_measure_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "x,y,z,w\n0,0,0,0.5\n1,0,0,0.6\n").unwrap();
        assert!(matches!(read_measure_csv(&p), Err(HarnessError::Core(sediment::Error::Domain(_)))));
    }

    #[test]
    fn bad_cells_and_missing_columns_are_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        std::fs::write(&p, "x,y\n0,0\n").unwrap();
        assert!(matches!(read_cloud_csv(&p), Err(HarnessError::Parse(_))));
        std::fs::write(&p, "x,y,z\n0,zero,0\n").unwrap();
        assert!(matches!(read_cloud_csv(&p), Err(HarnessError::Parse(_))));
    }

    #[test]
    fn json_report_embeds_meta() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/r.json");
        write_json(&p, &meta(), &serde_json::json!({"x": 1.5})).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v["meta"]["config_hash"], "abc");
        assert_eq!(v["meta"]["code_version"], CODE_VERSION);
        assert_eq!(v["report"]["x"], 1.5);
    }

    #[test]
    fn cloud_table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let pts = vec![Vec3::new(0.1, 0.7, 1e-300), Vec3::new(3.0, -2.0, 0.125)];
        write_table(&p, &meta(), &cloud_table(&pts)).unwrap();
        assert_eq!(read_cloud_csv(&p).unwrap(), pts);
    }
}
