//! Measurement file parsing.
//!
//! A record is a two-column CSV plus metadata. Metadata may appear as
//! `# key=value` comment lines in the CSV or in a sidecar JSON object next
//! to it (`run.csv` -> `run.json`); the sidecar wins when both set a key.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{CalibrationError, PenetrationRecord, ShearRecord};

const PENETRATION_COLUMNS: [&str; 2] = ["depth_m", "force_N"];
const SHEAR_COLUMNS: [&str; 2] = ["displacement_m", "force_N"];

type Metadata = BTreeMap<String, f64>;

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn read_penetration_file(path: &Path) -> Result<PenetrationRecord, CalibrationError> {
    let (text, sidecar) = read_with_sidecar(path)?;
    parse_penetration_csv(&text, sidecar.as_deref()).map_err(|e| e.in_file(path))
}

pub fn read_shear_file(path: &Path) -> Result<ShearRecord, CalibrationError> {
    let (text, sidecar) = read_with_sidecar(path)?;
    parse_shear_csv(&text, sidecar.as_deref()).map_err(|e| e.in_file(path))
}

fn read_with_sidecar(path: &Path) -> Result<(String, Option<String>), CalibrationError> {
    let io_err = |p: &Path, e: std::io::Error| CalibrationError::File {
        path: p.display().to_string(),
        message: e.to_string(),
    };
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let side = sidecar_path(path);
    let sidecar = if side.is_file() && side != path {
        Some(fs::read_to_string(&side).map_err(|e| io_err(&side, e))?)
    } else {
        None
    };
    Ok((text, sidecar))
}

pub fn parse_penetration_csv(
    text: &str,
    sidecar: Option<&str>,
) -> Result<PenetrationRecord, CalibrationError> {
    let meta = metadata(text, sidecar)?;
    let samples = read_samples(text, PENETRATION_COLUMNS)?;
    PenetrationRecord::new(
        required(&meta, "theta_deg")?,
        samples,
        required(&meta, "probe_area_m2")?,
        meta.get("tare_N").copied().unwrap_or(0.0),
    )
}

pub fn parse_shear_csv(text: &str, sidecar: Option<&str>) -> Result<ShearRecord, CalibrationError> {
    let meta = metadata(text, sidecar)?;
    let samples = read_samples(text, SHEAR_COLUMNS)?;
    let window = match (meta.get("plateau_start_m"), meta.get("plateau_end_m")) {
        (Some(&a), Some(&b)) => Some((a, b)),
        (None, None) => None,
        _ => {
            return Err(CalibrationError::InvalidRecord(
                "plateau_start_m and plateau_end_m must be given together".into(),
            ))
        }
    };
    ShearRecord::new(
        required(&meta, "theta_deg")?,
        samples,
        required(&meta, "plate_width_m")?,
        required(&meta, "plate_depth_m")?,
        window,
        meta.get("tare_N").copied().unwrap_or(0.0),
    )
}

fn required(meta: &Metadata, key: &str) -> Result<f64, CalibrationError> {
    meta.get(key)
        .copied()
        .ok_or_else(|| CalibrationError::InvalidRecord(format!("missing metadata key `{key}`")))
}

fn metadata(text: &str, sidecar: Option<&str>) -> Result<Metadata, CalibrationError> {
    let mut meta = Metadata::new();
    for line in text.lines() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        for item in comment.split([',', ' ', '\t']).filter(|s| s.contains('=')) {
            let (key, value) = item.split_once('=').expect("contains '='");
            let value: f64 = value.trim().parse().map_err(|_| {
                CalibrationError::InvalidRecord(format!(
                    "metadata `{}` has non-numeric value `{}`",
                    key.trim(),
                    value.trim()
                ))
            })?;
            meta.insert(key.trim().to_string(), value);
        }
    }
    if let Some(json) = sidecar {
        let parsed: BTreeMap<String, serde_json::Value> = serde_json::from_str(json)
            .map_err(|e| CalibrationError::InvalidRecord(format!("sidecar JSON: {e}")))?;
        for (key, value) in parsed {
            let v = value.as_f64().ok_or_else(|| {
                CalibrationError::InvalidRecord(format!("sidecar key `{key}` is not a number"))
            })?;
            meta.insert(key, v);
        }
    }
    Ok(meta)
}

fn read_samples(text: &str, columns: [&str; 2]) -> Result<Vec<(f64, f64)>, CalibrationError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CalibrationError::InvalidRecord(format!("CSV header: {e}")))?
        .clone();
    if headers.len() != columns.len() {
        return Err(CalibrationError::InvalidRecord(format!(
            "expected header `{}`, got {} columns",
            columns.join(","),
            headers.len()
        )));
    }
    for (got, want) in headers.iter().zip(columns) {
        if got != want {
            return Err(CalibrationError::InvalidRecord(format!(
                "unexpected column `{got}`, expected `{want}`"
            )));
        }
    }

    let mut samples = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row =
            row.map_err(|e| CalibrationError::InvalidRecord(format!("CSV row {}: {e}", i + 1)))?;
        let field = |j: usize| -> Result<f64, CalibrationError> {
            row[j].parse().map_err(|_| {
                CalibrationError::InvalidRecord(format!(
                    "row {}: column `{}` has non-numeric value `{}`",
                    i + 1,
                    columns[j],
                    &row[j]
                ))
            })
        };
        samples.push((field(0)?, field(1)?));
    }
    Ok(samples)
}
