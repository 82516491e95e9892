//! File formats: trajectory CSV, network and initial-state JSON, and atomic
//! writes for everything the command line emits.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynsim::Trajectory;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::netgraph::{Graph, MatrixClass};

/// Ground truth written by `generate`. `matrix` is in class form (`L` for
/// the Laplacian classes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub class: MatrixClass,
    pub matrix: SymMatrix,
    pub graph: Graph,
}

impl NetworkFile {
    pub fn state_matrix(&self) -> SymMatrix {
        self.class.class_form(&self.matrix)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub x0: Vec<f64>,
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Header `t,x1,...,xn`; every value with 17 significant digits.
pub fn trajectory_to_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.n()).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (t, x) in traj.times().iter().zip(traj.states()) {
        let mut rec = vec![format!("{t:.16e}")];
        rec.extend(x.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn trajectory_from_csv(data: &[u8]) -> Result<Trajectory> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(data);
    let header = r.headers()?.clone();
    let n = header.len().saturating_sub(1);
    let expected = (1..=n).map(|i| format!("x{i}"));
    if n == 0 || &header[0] != "t" || header.iter().skip(1).zip(expected).any(|(h, e)| h != e) {
        return Err(Error::InvalidInput(format!(
            "trajectory header must be t,x1,...,xn; got {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::InvalidInput(format!("trajectory row {}: {e}", line + 1)))?;
        times.push(vals[0]);
        states.push(vals[1..].to_vec());
    }
    Trajectory::new(times, states)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    write_atomic(path, &trajectory_to_csv(traj)?)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    trajectory_from_csv(&std::fs::read(path)?)
}
