//! Run configuration.
//!
//! Every section is optional; command-line flags override whatever the
//! file sets. Relative paths inside the file resolve against its directory.
//! `robot` and `terrain` are either inline objects or paths to JSON files.

use std::fs;
use std::path::{Path, PathBuf};

use granular_slope::model::{RobotConfig, TerrainStrength};
use granular_slope::phase::{Axis, Scale};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    robot: Option<Value>,
    terrain: Option<Value>,
    #[serde(default)]
    calibrate: CalibrateSection,
    #[serde(default)]
    stride: StrideSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    trace: TraceSection,
    #[serde(default)]
    plan: PlanSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    #[serde(default)]
    pub penetration: Vec<PathBuf>,
    #[serde(default)]
    pub shear: Vec<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrideSection {
    pub theta_deg: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub theta_deg: Option<f64>,
    pub k_n: Option<Axis>,
    pub k_s: Option<Axis>,
    pub scale: Option<Scale>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub theta_deg: Option<f64>,
    pub dt_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub heightmap: Option<PathBuf>,
    pub start: Option<[usize; 2]>,
    pub goal: Option<[usize; 2]>,
    pub lambda: Option<f64>,
    pub risk_map: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Source<T> {
    Inline(T),
    File(PathBuf),
}

#[derive(Debug, Default)]
pub struct RunConfig {
    pub robot: Option<Source<RobotConfig>>,
    pub terrain: Option<Source<TerrainStrength>>,
    pub calibrate: CalibrateSection,
    pub stride: StrideSection,
    pub sweep: SweepSection,
    pub trace: TraceSection,
    pub plan: PlanSection,
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: RunConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
    fn source<T: DeserializeOwned>(
        key: &str,
        v: Option<Value>,
        path: &Path,
        resolve: &impl Fn(PathBuf) -> PathBuf,
    ) -> Result<Option<Source<T>>, CliError> {
        match v {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(Source::File(resolve(PathBuf::from(s))))),
            Some(v) => serde_json::from_value(v)
                .map(|t| Some(Source::Inline(t)))
                .map_err(|e| CliError::input(format!("{}: `{key}`: {e}", path.display()))),
        }
    }

    let mut calibrate = file.calibrate;
    calibrate.penetration = calibrate.penetration.into_iter().map(resolve).collect();
    calibrate.shear = calibrate.shear.into_iter().map(resolve).collect();
    let mut plan = file.plan;
    plan.heightmap = plan.heightmap.map(resolve);
    plan.risk_map = plan.risk_map.map(resolve);

    Ok(RunConfig {
        robot: source("robot", file.robot, path, &resolve)?,
        terrain: source("terrain", file.terrain, path, &resolve)?,
        calibrate,
        stride: file.stride,
        sweep: file.sweep,
        trace: file.trace,
        plan,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Robot from the flag, the config, or the built-in default (flagged
    /// by the returned bool).
    pub fn robot(&self, flag: Option<&Path>) -> Result<(RobotConfig, bool), CliError> {
        if let Some(p) = flag {
            return Ok((read_json(p)?, false));
        }
        match &self.robot {
            Some(Source::Inline(r)) => Ok((r.clone(), false)),
            Some(Source::File(p)) => Ok((read_json(p)?, false)),
            None => Ok((RobotConfig::reference_robot(), true)),
        }
    }

    pub fn terrain(&self, flag: Option<&Path>) -> Result<TerrainStrength, CliError> {
        if let Some(p) = flag {
            return read_json(p);
        }
        match &self.terrain {
            Some(Source::Inline(t)) => Ok(t.clone()),
            Some(Source::File(p)) => read_json(p),
            None => Err(CliError::input(
                "no terrain given; pass --terrain or set `terrain` in the config",
            )),
        }
    }
}
