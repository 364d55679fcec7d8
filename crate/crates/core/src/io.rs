//! File formats shared by the solvers and the command line: solutions, front
//! CSVs, JSON-lines records and hypervolume reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::costmodel::{evaluate, Assignment, CostBreakdown};
use crate::error::{Error, Result};
use crate::instance::{Instance, SCHEMA_VERSION};
use crate::pareto::{HvConfig, HvMode, ObjectivePoint};

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, row)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Appends one JSON line, creating the file if needed.
pub fn append_jsonl<T: Serialize>(path: &Path, row: &T) -> Result<()> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut line = serde_json::to_vec(row)?;
    line.push(b'\n');
    f.write_all(&line).map_err(|e| Error::io(path, e))
}

/// Persisted placement with an optional cost echo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub v: u32,
    pub instance_id: String,
    pub triples: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<CostBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl SolutionFile {
    pub fn new(inst: &Instance, x: &Assignment, with_costs: bool) -> Result<Self> {
        Ok(SolutionFile {
            v: SCHEMA_VERSION,
            instance_id: inst.id.clone(),
            triples: x.triples(inst),
            costs: if with_costs { Some(evaluate(inst, x)?) } else { None },
            tag: None,
        })
    }

    pub fn assignment(&self, inst: &Instance) -> Result<Assignment> {
        if self.v != SCHEMA_VERSION {
            return Err(Error::Schema {
                found: self.v,
                expected: SCHEMA_VERSION,
            });
        }
        if self.instance_id != inst.id {
            return Err(Error::Dimension(format!(
                "solution for {} applied to instance {}",
                self.instance_id, inst.id
            )));
        }
        Assignment::from_triples(inst, &self.triples)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    #[serde(rename = "T_ms")]
    pub t_ms: f64,
    #[serde(rename = "E_J")]
    pub e_j: f64,
    pub solution_ref: String,
}

impl FrontRow {
    pub fn point(&self) -> ObjectivePoint {
        ObjectivePoint::new(self.t_ms, self.e_j)
    }
}

pub fn write_front_csv(path: &Path, rows: &[FrontRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["T_ms", "E_J", "solution_ref"])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn read_front_csv(path: &Path) -> Result<Vec<FrontRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::Csv(e),
    })?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvEntry {
    pub hv: f64,
    pub mode: HvMode,
    #[serde(rename = "ref")]
    pub reference: [f64; 2],
}

impl HvEntry {
    pub fn new(hv: f64, cfg: &HvConfig) -> Self {
        HvEntry {
            hv,
            mode: cfg.mode,
            reference: [cfg.t_ref, cfg.e_ref],
        }
    }
}

/// Instance id to hypervolume entry.
pub type HvReport = BTreeMap<String, HvEntry>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_mec_instance;

    #[test]
    fn solution_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let inst = two_mec_instance(2);
        let x = Assignment::from_mecs(&[1, 1]);
        let sol = SolutionFile::new(&inst, &x, true).unwrap();
        let path = dir.path().join("s.json");
        write_json(&path, &sol).unwrap();
        let back: SolutionFile = read_json(&path).unwrap();
        assert_eq!(back, sol);
        assert_eq!(back.assignment(&inst).unwrap(), x);
    }

    #[test]
    fn front_and_jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            FrontRow {
                t_ms: 1.5,
                e_j: 2.25,
                solution_ref: "a.json".into(),
            },
            FrontRow {
                t_ms: 0.1,
                e_j: 9.0,
                solution_ref: "b.json".into(),
            },
        ];
        let path = dir.path().join("f.csv");
        write_front_csv(&path, &rows).unwrap();
        assert!(fs::read_to_string(&path).unwrap().starts_with("T_ms,E_J,solution_ref"));
        assert_eq!(read_front_csv(&path).unwrap(), rows);
        write_front_csv(&path, &[]).unwrap();
        assert!(read_front_csv(&path).unwrap().is_empty());

        let jl = dir.path().join("x.jsonl");
        write_jsonl(&jl, &[1, 2, 3]).unwrap();
        append_jsonl(&jl, &4).unwrap();
        assert_eq!(read_jsonl::<i32>(&jl).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn hv_report_shape() {
        let mut rep = HvReport::new();
        rep.insert("i0".into(), HvEntry::new(0.5, &HvConfig::default()));
        let s = serde_json::to_string(&rep).unwrap();
        assert_eq!(s, r#"{"i0":{"hv":0.5,"mode":"fixed","ref":[50.0,100.0]}}"#);
    }
}
