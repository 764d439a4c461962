//! JSON-lines readers and writers for streams, trajectories and oracle output.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{StepRecord, StepStatus};
use crate::geometry::matrix_to_rows;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Open { path: String, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Reads one JSON value per nonblank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|source| IoError::Open {
        path: shown.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| IoError::Parse {
            path: shown.clone(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), IoError> {
    let file = File::create(path).map_err(|source| IoError::Open {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|source| IoError::Open {
        path: shown.clone(),
        source,
    })?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| IoError::Parse {
        path: shown,
        line: 0,
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let file = File::create(path).map_err(|source| IoError::Open {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// One line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLine {
    pub k: usize,
    pub p: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    pub volume: Option<f64>,
    pub status: StepStatus,
}

impl From<&StepRecord> for TrajectoryLine {
    fn from(s: &StepRecord) -> Self {
        Self {
            k: s.k,
            p: s.afss.center().iter().copied().collect(),
            h: matrix_to_rows(s.afss.generators()),
            volume: s.volume,
            status: s.status,
        }
    }
}

impl TrajectoryLine {
    pub fn zonotope(&self) -> Result<crate::geometry::Zonotope, crate::error::GeometryError> {
        let n = self.p.len();
        let h = crate::geometry::matrix_from_rows(&self.h, n)?;
        crate::geometry::Zonotope::new(nalgebra::DVector::from_vec(self.p.clone()), h)
    }
}

/// Parameter vector behind record `k` of a synthesized stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthLine {
    pub k: usize,
    pub theta: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::MeasurementRecord;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn stream_round_trip_and_errors() {
        let dir = std::env::temp_dir().join(format!("zonoid-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.jsonl");
        let r = MeasurementRecord::new(
            0,
            dvector![1.0],
            dmatrix![1.0; 2.0],
            dmatrix![1.5; 2.5],
            dvector![-0.1],
            dvector![0.1],
            dvector![0.0, 0.0],
        )
        .unwrap();
        write_jsonl(&path, [&r, &r]).unwrap();
        let back: Vec<MeasurementRecord> = read_jsonl(&path).unwrap();
        assert_eq!(back, vec![r.clone(), r]);
        std::fs::write(&path, "{\"k\":0}\n").unwrap();
        assert!(matches!(read_jsonl::<MeasurementRecord>(&path), Err(IoError::Parse { line: 1, .. })));
        assert!(matches!(
            read_jsonl::<MeasurementRecord>(&dir.join("missing")),
            Err(IoError::Open { .. })
        ));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
