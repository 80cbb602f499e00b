//! File formats: pilot CSVs, JSON reports, run configuration.
//!
//! Pilot CSV: UTF-8, header `artifact_id,rep,score` required, one row per
//! evaluation call. Reports are JSON (or CSV for flat tables). Floats are
//! written in shortest round-trip form, so every emitted file re-ingests to
//! an equal value.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channel::{BenchmarkSpec, EmpiricalKernel};
use crate::error::{Error, Result};
use crate::guard::{EvaluationMode, ObservationPolicy};

pub const PILOT_HEADER: [&str; 3] = ["artifact_id", "rep", "score"];
pub const RUN_CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotRecord {
    pub artifact_id: String,
    pub rep: u64,
    pub score: f64,
}

/// Reads pilot records. Errors name the 1-based line of the offending row.
pub fn read_pilot_records(reader: impl Read) -> Result<Vec<PilotRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Ingest { row: 1, message: e.to_string() })?
        .clone();
    if headers.is_empty() {
        return Err(Error::Ingest { row: 1, message: "empty pilot file".into() });
    }
    if headers.iter().map(str::trim).ne(PILOT_HEADER) {
        return Err(Error::Ingest {
            row: 1,
            message: format!("expected header {}, got {}", PILOT_HEADER.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<PilotRecord>().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Ingest { row, message: e.to_string() })?;
        if !rec.score.is_finite() {
            return Err(Error::Ingest { row, message: format!("score {} is not finite", rec.score) });
        }
        if rec.artifact_id.trim().is_empty() {
            return Err(Error::Ingest { row, message: "empty artifact_id".into() });
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Ingest { row: 2, message: "pilot file has no rows".into() });
    }
    Ok(out)
}

pub fn write_pilot_records(records: &[PilotRecord], writer: impl Write) -> Result<()> {
    write_csv(records, writer)
}

/// Groups records by artifact (first-appearance order) into kernel estimates.
/// Support counts are left empty; pilot files carry no outcome-space type.
pub fn kernels_from_records(records: &[PilotRecord]) -> Result<Vec<EmpiricalKernel>> {
    let mut order: Vec<&str> = Vec::new();
    let mut scores: std::collections::HashMap<&str, Vec<f64>> = Default::default();
    for r in records {
        let entry = scores.entry(r.artifact_id.as_str()).or_insert_with(|| {
            order.push(r.artifact_id.as_str());
            Vec::new()
        });
        entry.push(r.score);
    }
    order
        .into_iter()
        .map(|id| EmpiricalKernel::from_scores(id, &scores[id], false))
        .collect()
}

pub fn read_pilot_csv(path: impl AsRef<Path>) -> Result<Vec<EmpiricalKernel>> {
    let records = read_pilot_records(BufReader::new(File::open(path)?))?;
    kernels_from_records(&records)
}

/// Pilot kernels from either a CSV (by extension) or a JSON array of kernels.
pub fn load_pilot(path: impl AsRef<Path>) -> Result<Vec<EmpiricalKernel>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let kernels: Vec<EmpiricalKernel> = read_json(path)?;
        if kernels.is_empty() {
            return Err(Error::Ingest { row: 0, message: "pilot JSON has no kernels".into() });
        }
        Ok(kernels)
    } else {
        read_pilot_csv(path)
    }
}

pub fn write_csv<T: Serialize>(rows: &[T], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(csv_to_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(reader: impl Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Ingest { row: i + 2, message: e.to_string() }))
        .collect()
}

fn csv_to_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(to_json_string(value).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<BenchmarkSpec> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    BenchmarkSpec::from_json(&s)
}

/// Serde adapter for floats that may be infinite: JSON has no literal for
/// them, so non-finite values travel as the strings `inf`, `-inf`, `NaN`.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Where a run's benchmark comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecSource {
    Path { path: String },
    Inline(BenchmarkSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub spec: SpecSource,
    #[serde(default = "EvaluationMode::fresh")]
    pub mode: EvaluationMode,
    #[serde(default = "default_policy")]
    pub policy: ObservationPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_policy() -> ObservationPolicy {
    ObservationPolicy::AggregateOnly
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(RUN_CONFIG_SCHEMA_VERSION) => {}
            other => {
                return Err(Error::Config(format!(
                    "run config schema_version {other:?} does not match {RUN_CONFIG_SCHEMA_VERSION}"
                )))
            }
        }
        let cfg: RunConfig = serde_json::from_value(value)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut s = String::new();
        File::open(path)?.read_to_string(&mut s)?;
        Self::from_json(&s)
    }

    pub fn resolve_spec(&self) -> Result<BenchmarkSpec> {
        match &self.spec {
            SpecSource::Path { path } => load_spec(path),
            SpecSource::Inline(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::xor_pair_benchmark;

    #[test]
    fn pilot_csv_groups_by_artifact() {
        let text = "artifact_id,rep,score\na,0,1.0\nb,0,0.5\na,1,2.0\nb,1,0.25\na,2,3.0\n";
        let kernels = kernels_from_records(&read_pilot_records(text.as_bytes()).unwrap()).unwrap();
        assert_eq!(kernels.len(), 2);
        assert_eq!(kernels[0].artifact_id, "a");
        assert_eq!(kernels[0].n_reps, 3);
        assert_eq!(kernels[0].mean, 2.0);
        assert_eq!(kernels[0].variance, 1.0);
        assert_eq!(kernels[1].mean, 0.375);
    }

    #[test]
    fn malformed_rows_are_named() {
        let e = read_pilot_records("artifact_id,rep,score\na,0,1.0\na,x,2.0\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Ingest { row: 3, .. }), "{e}");
        let e = read_pilot_records("".as_bytes()).unwrap_err();
        assert_eq!(e.category(), "ingest");
        let e = read_pilot_records("artifact_id,rep,score\n".as_bytes()).unwrap_err();
        assert_eq!(e.category(), "ingest");
        let e = read_pilot_records("id,rep,score\na,0,1\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Ingest { row: 1, .. }));
        let e = read_pilot_records("artifact_id,rep,score\na,0,NaN\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Ingest { row: 2, .. }));
    }

    #[test]
    fn single_rep_artifact_cannot_form_a_kernel() {
        let records = read_pilot_records("artifact_id,rep,score\na,0,1.0\n".as_bytes()).unwrap();
        assert_eq!(kernels_from_records(&records).unwrap_err().category(), "argument");
    }

    #[test]
    fn run_config_schema_and_sources() {
        let spec = xor_pair_benchmark([0.1, 0.4], false).unwrap();
        let cfg = RunConfig {
            schema_version: 1,
            spec: SpecSource::Inline(spec.clone()),
            mode: EvaluationMode::deterministic("v1"),
            policy: ObservationPolicy::LeakRawVotes,
            seed: 42,
            output: Some("out.json".into()),
        };
        let json = serde_json::to_string(&cfg).unwrap();
        let back = RunConfig::from_json(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.resolve_spec().unwrap(), spec);

        let bad = json.replace("\"schema_version\":1", "\"schema_version\":2");
        assert_eq!(RunConfig::from_json(&bad).unwrap_err().category(), "config");
        let by_path: RunConfig =
            RunConfig::from_json(r#"{"schema_version":1,"spec":{"path":"x.json"}}"#).unwrap();
        assert_eq!(by_path.spec, SpecSource::Path { path: "x.json".into() });
        assert_eq!(by_path.policy, ObservationPolicy::AggregateOnly);
    }
}
